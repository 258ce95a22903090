//! Event CSV reading and writing.
//!
//! Header is exactly `e_s,e_n,p_e,p_m,d_r,c_t,r_c,d_c,driver_id`. `e_s` and
//! `driver_id` may be empty.

use std::io::{Read, Write};
use std::path::Path;

use crate::error::{Error, Result};
use crate::fsutil;
use crate::schema::{ensure_valid, EventCase, EventDataset, VariableSchema};

pub const EVENT_HEADER: [&str; 9] = [
    "e_s",
    "e_n",
    "p_e",
    "p_m",
    "d_r",
    "c_t",
    "r_c",
    "d_c",
    "driver_id",
];

pub(crate) fn csv_error(line: u64, e: csv::Error) -> Error {
    let line = e.position().map(|p| p.line()).unwrap_or(line);
    Error::Parse {
        line,
        message: e.to_string(),
    }
}

/// Compares a header record against the expected columns.
pub(crate) fn check_header(record: &csv::StringRecord, expected: &[&str]) -> Result<()> {
    let got: Vec<&str> = record.iter().collect();
    if got == expected {
        return Ok(());
    }
    let unexpected: Vec<String> = got
        .iter()
        .filter(|h| !expected.contains(h))
        .map(|h| h.to_string())
        .collect();
    if !unexpected.is_empty() {
        return Err(Error::SchemaMismatch { unexpected });
    }
    Err(Error::Parse {
        line: 1,
        message: format!(
            "header must be exactly `{}`, got `{}`",
            expected.join(","),
            got.join(",")
        ),
    })
}

pub(crate) fn parse_code(field: &str, name: &str, line: u64) -> Result<u8> {
    field.trim().parse::<u8>().map_err(|_| Error::Parse {
        line,
        message: format!("{name}: `{field}` is not a category code"),
    })
}

pub(crate) fn reader<R: Read>(r: R) -> csv::Reader<R> {
    csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(false)
        .from_reader(r)
}

pub(crate) fn writer<W: Write>(w: W) -> csv::Writer<W> {
    csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(w)
}

pub fn read_events<R: Read>(input: R, schema: &VariableSchema) -> Result<EventDataset> {
    let mut rdr = reader(input);
    let mut records = rdr.records();
    let header = match records.next() {
        Some(h) => h.map_err(|e| csv_error(1, e))?,
        None => {
            return Err(Error::Parse {
                line: 1,
                message: "missing header".into(),
            })
        }
    };
    check_header(&header, &EVENT_HEADER)?;
    let mut rows = Vec::new();
    for rec in records {
        let rec = rec.map_err(|e| csv_error(0, e))?;
        let line = rec.position().map(|p| p.line()).unwrap_or(0);
        let e_s = match rec[0].trim() {
            "" => None,
            s => Some(parse_code(s, "e_s", line)?),
        };
        let mut codes = [0u8; 7];
        for (i, c) in codes.iter_mut().enumerate() {
            *c = parse_code(&rec[i + 1], EVENT_HEADER[i + 1], line)?;
        }
        let mut case = EventCase::from_codes(codes);
        case.e_s = e_s;
        case.driver_id = match &rec[8] {
            "" => None,
            s => Some(s.to_string()),
        };
        ensure_valid(&case, schema).map_err(|e| Error::Parse {
            line,
            message: e.to_string(),
        })?;
        rows.push(case);
    }
    Ok(EventDataset {
        schema: schema.clone(),
        rows,
    })
}

pub fn write_events<W: Write>(out: W, dataset: &EventDataset) -> std::io::Result<()> {
    let mut w = writer(out);
    w.write_record(EVENT_HEADER)?;
    for r in &dataset.rows {
        let mut rec: Vec<String> = Vec::with_capacity(9);
        rec.push(r.e_s.map(|s| s.to_string()).unwrap_or_default());
        rec.extend(r.codes().iter().map(|c| c.to_string()));
        rec.push(r.driver_id.clone().unwrap_or_default());
        w.write_record(&rec)?;
    }
    w.flush()
}

pub fn events_to_bytes(dataset: &EventDataset) -> Vec<u8> {
    let mut buf = Vec::new();
    write_events(&mut buf, dataset).expect("writing to memory");
    buf
}

pub fn load_dataset(path: impl AsRef<Path>, schema: &VariableSchema) -> Result<EventDataset> {
    let path = path.as_ref();
    let file = fsutil::open(path)?;
    read_events(std::io::BufReader::new(file), schema)
}

pub fn save_dataset(dataset: &EventDataset, path: impl AsRef<Path>) -> Result<()> {
    fsutil::write_atomic(path.as_ref(), &events_to_bytes(dataset))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::schema::default_schema;

    const HEADER: &str = "e_s,e_n,p_e,p_m,d_r,c_t,r_c,d_c,driver_id\n";

    #[test]
    fn header_only_is_empty() {
        let ds = read_events(HEADER.as_bytes(), &default_schema()).unwrap();
        assert!(ds.is_empty());
    }

    #[test]
    fn crash_row_with_driver() {
        let text = format!("{HEADER}1,0,2,5,1,0,3,2,driverA\n");
        let ds = read_events(text.as_bytes(), &default_schema()).unwrap();
        let r = &ds.rows[0];
        assert_eq!(r.e_s, Some(1));
        assert_eq!(r.codes(), [0, 2, 5, 1, 0, 3, 2]);
        assert_eq!(r.driver_id.as_deref(), Some("driverA"));
    }

    #[test]
    fn unlabeled_anonymous_row() {
        let text = format!("{HEADER},7,9,10,6,3,5,6,\n");
        let ds = read_events(text.as_bytes(), &default_schema()).unwrap();
        assert_eq!(ds.rows[0].e_s, None);
        assert_eq!(ds.rows[0].driver_id, None);
    }

    #[test]
    fn canonical_reserialization() {
        let text =
            format!("{HEADER}1, 0,2,5,1,0,3,2,driverA\n0,1,1,1,1,1,1,1,\n,3,3,3,3,3,3,3,x\n");
        let ds = read_events(text.as_bytes(), &default_schema()).unwrap();
        let bytes = events_to_bytes(&ds);
        let again = read_events(bytes.as_slice(), &default_schema()).unwrap();
        assert_eq!(again, ds);
        assert_eq!(events_to_bytes(&again), bytes);
        assert!(String::from_utf8(bytes).unwrap().starts_with(HEADER));
    }

    #[test]
    fn unknown_column_is_schema_mismatch() {
        let text = "e_s,e_n,p_e,p_m,d_r,c_t,r_c,d_c,driver_id,speed\n";
        match read_events(text.as_bytes(), &default_schema()) {
            Err(Error::SchemaMismatch { unexpected }) => assert_eq!(unexpected, vec!["speed"]),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn parse_errors_carry_line_numbers() {
        let text = format!("{HEADER}0,0,0,0,0,0,0,0,a\n0,0,x,0,0,0,0,0,a\n");
        match read_events(text.as_bytes(), &default_schema()) {
            Err(Error::Parse { line, .. }) => assert_eq!(line, 3),
            other => panic!("{other:?}"),
        }
        let text = format!("{HEADER}0,0,0,0,0,0,0,0,a\n0,8,0,0,0,0,0,0,a\n");
        match read_events(text.as_bytes(), &default_schema()) {
            Err(Error::Parse { line, message }) => {
                assert_eq!(line, 3);
                assert!(message.contains("e_n=8"));
            }
            other => panic!("{other:?}"),
        }
        let text = format!("{HEADER}0,0,0\n");
        assert!(matches!(
            read_events(text.as_bytes(), &default_schema()),
            Err(Error::Parse { line: 2, .. })
        ));
    }

    #[test]
    fn file_roundtrip_preserves_order() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("e.csv");
        let rows: Vec<EventCase> = (0..20u8)
            .map(|i| {
                EventCase::from_codes([i % 8, i % 10, i % 11, i % 7, i % 4, i % 6, i % 7])
                    .with_label(i % 2)
            })
            .collect();
        let ds = EventDataset::new(default_schema(), rows).unwrap();
        save_dataset(&ds, &path).unwrap();
        assert_eq!(load_dataset(&path, &default_schema()).unwrap(), ds);
    }
}
