//! Ingestion of block-level event records.
//!
//! A raw record carries the event variables that are already protocol codes,
//! the video frame span of the precipitating event and evasive maneuver, and
//! the uncoded road and context blocks. Transcription bins the cushion time
//! and maps each block to its cluster code.
//!
//! Raw header: `e_s,e_n,p_e,p_m,d_r,f_start,f_end,road_0..road_6,ctx_0..ctx_4,driver_id`.

use std::io::{Read, Write};
use std::path::Path;

use crate::cushion::{bin_cushion_time, compute_cushion_time, VideoFrameSpan};
use crate::dataset::{self, check_header, csv_error, parse_code, EVENT_HEADER};
use crate::error::{Error, Result, Violation};
use crate::fsutil;
use crate::kmodes::{CategoricalPoint, ClusterModel, CONTEXT_CARDINALITIES, ROAD_CARDINALITIES};
use crate::schema::{EventCase, EventDataset, VariableSchema};

pub const ROAD_DIM: usize = 7;
pub const CONTEXT_DIM: usize = 5;

pub fn raw_header() -> Vec<String> {
    let mut h: Vec<String> = ["e_s", "e_n", "p_e", "p_m", "d_r", "f_start", "f_end"]
        .iter()
        .map(|s| s.to_string())
        .collect();
    h.extend((0..ROAD_DIM).map(|i| format!("road_{i}")));
    h.extend((0..CONTEXT_DIM).map(|i| format!("ctx_{i}")));
    h.push("driver_id".into());
    h
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RawEvent {
    pub e_s: Option<u8>,
    pub e_n: u8,
    pub p_e: u8,
    pub p_m: u8,
    pub d_r: u8,
    pub f_start: u64,
    pub f_end: u64,
    pub road: [u8; ROAD_DIM],
    pub context: [u8; CONTEXT_DIM],
    pub driver_id: Option<String>,
}

impl RawEvent {
    pub fn road_point(&self) -> CategoricalPoint {
        CategoricalPoint(self.road.to_vec())
    }

    pub fn context_point(&self) -> CategoricalPoint {
        CategoricalPoint(self.context.to_vec())
    }
}

fn check_block(codes: &[u8], cards: &[u8], prefix: &str) -> Vec<Violation> {
    codes
        .iter()
        .zip(cards)
        .enumerate()
        .filter(|(_, (c, card))| c >= card)
        .map(|(i, (&code, _))| Violation {
            field: format!("{prefix}_{i}"),
            code,
        })
        .collect()
}

/// Which input format a CSV header announces.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum InputFormat {
    Coded,
    Raw,
}

pub fn detect_format(bytes: &[u8]) -> Result<InputFormat> {
    let first = bytes.split(|&b| b == b'\n').next().unwrap_or_default();
    let first = std::str::from_utf8(first)
        .unwrap_or("")
        .trim_end_matches('\r');
    let cols: Vec<&str> = first.split(',').collect();
    if cols == EVENT_HEADER {
        return Ok(InputFormat::Coded);
    }
    let raw = raw_header();
    if cols.iter().copied().eq(raw.iter().map(String::as_str)) {
        return Ok(InputFormat::Raw);
    }
    let unexpected: Vec<String> = cols
        .iter()
        .filter(|c| !EVENT_HEADER.contains(c) && !raw.iter().any(|r| r == *c))
        .map(|c| c.to_string())
        .collect();
    if unexpected.is_empty() {
        Err(Error::Parse {
            line: 1,
            message: "header matches neither the coded nor the raw event layout".into(),
        })
    } else {
        Err(Error::SchemaMismatch { unexpected })
    }
}

pub fn read_raw_events<R: Read>(input: R) -> Result<Vec<RawEvent>> {
    let mut rdr = dataset::reader(input);
    let mut records = rdr.records();
    let header = records.next().ok_or_else(|| Error::Parse {
        line: 1,
        message: "missing header".into(),
    })?;
    let header = header.map_err(|e| csv_error(1, e))?;
    let expected = raw_header();
    let expected: Vec<&str> = expected.iter().map(String::as_str).collect();
    check_header(&header, &expected)?;
    let mut out = Vec::new();
    for (i, rec) in records.enumerate() {
        let line = i as u64 + 2;
        let rec = rec.map_err(|e| csv_error(line, e))?;
        let code = |k: usize| parse_code(&rec[k], expected[k], line);
        let frame = |k: usize| {
            rec[k].trim().parse::<u64>().map_err(|_| Error::Parse {
                line,
                message: format!("{}: `{}` is not a frame number", expected[k], &rec[k]),
            })
        };
        let e_s = if rec[0].trim().is_empty() {
            None
        } else {
            Some(code(0)?)
        };
        let mut road = [0u8; ROAD_DIM];
        for (j, r) in road.iter_mut().enumerate() {
            *r = code(7 + j)?;
        }
        let mut context = [0u8; CONTEXT_DIM];
        for (j, c) in context.iter_mut().enumerate() {
            *c = code(7 + ROAD_DIM + j)?;
        }
        let driver = rec[7 + ROAD_DIM + CONTEXT_DIM].trim();
        let mut v = check_block(&road, &ROAD_CARDINALITIES, "road");
        v.extend(check_block(&context, &CONTEXT_CARDINALITIES, "ctx"));
        if !v.is_empty() {
            return Err(Error::InvalidCase(v));
        }
        out.push(RawEvent {
            e_s,
            e_n: code(1)?,
            p_e: code(2)?,
            p_m: code(3)?,
            d_r: code(4)?,
            f_start: frame(5)?,
            f_end: frame(6)?,
            road,
            context,
            driver_id: (!driver.is_empty()).then(|| driver.to_string()),
        });
    }
    Ok(out)
}

pub fn write_raw_events<W: Write>(out: W, events: &[RawEvent]) -> std::io::Result<()> {
    let mut w = dataset::writer(out);
    w.write_record(raw_header())?;
    for e in events {
        let mut rec: Vec<String> = vec![
            e.e_s.map(|s| s.to_string()).unwrap_or_default(),
            e.e_n.to_string(),
            e.p_e.to_string(),
            e.p_m.to_string(),
            e.d_r.to_string(),
            e.f_start.to_string(),
            e.f_end.to_string(),
        ];
        rec.extend(e.road.iter().map(|c| c.to_string()));
        rec.extend(e.context.iter().map(|c| c.to_string()));
        rec.push(e.driver_id.clone().unwrap_or_default());
        w.write_record(&rec)?;
    }
    w.flush()
}

pub fn raw_to_bytes(events: &[RawEvent]) -> Vec<u8> {
    let mut buf = Vec::new();
    write_raw_events(&mut buf, events).expect("writing to memory");
    buf
}

pub fn load_raw(path: impl AsRef<Path>) -> Result<Vec<RawEvent>> {
    let f = fsutil::open(path.as_ref())?;
    read_raw_events(std::io::BufReader::new(f))
}

/// Codes every raw record: cushion bin from the frame span, `r_c` and `d_c`
/// from the nearest cluster mode. The schema's `r_c`/`d_c` cardinalities must
/// cover the clusterings' k.
pub fn transcribe(
    events: &[RawEvent],
    road: &ClusterModel,
    context: &ClusterModel,
    frame_rate: f64,
    schema: &VariableSchema,
) -> Result<EventDataset> {
    let mut rows = Vec::with_capacity(events.len());
    for e in events {
        let seconds = compute_cushion_time(VideoFrameSpan::new(e.f_start, e.f_end, frame_rate))?;
        let case = EventCase {
            e_n: e.e_n,
            p_e: e.p_e,
            p_m: e.p_m,
            d_r: e.d_r,
            c_t: bin_cushion_time(seconds)?,
            r_c: road.assign(&e.road_point())?,
            d_c: context.assign(&e.context_point())?,
            e_s: e.e_s,
            driver_id: e.driver_id.clone(),
        };
        rows.push(case);
    }
    EventDataset::new(schema.clone(), rows)
}
