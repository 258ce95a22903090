//! Case-base construction and storage.
//!
//! Every combination of the seven case variables is scored by the FFM; the
//! ones predicted near-crash are stored, grouped by premise. Each driver
//! also has a personal store of their own near-crash cases.

use std::collections::BTreeMap;
use std::collections::BTreeSet;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use sha2::{Digest, Sha256};

use crate::dataset::{self, check_header, csv_error, parse_code, read_events, write_events};
use crate::error::{Error, Result};
use crate::ffm::{sigmoid, FfmModel};
use crate::fsutil;
use crate::schema::{
    ensure_valid, EventCase, EventDataset, Premise, Solution, VariableSchema, NEAR_CRASH,
    NUM_CASE_VARS, NUM_PREMISE_VARS,
};

/// Crash probability below which a case counts as near-crash.
pub const NEAR_CRASH_THRESHOLD: f64 = 0.5;

pub const CASEBASE_HEADER: [&str; 7] = ["e_n", "p_e", "p_m", "r_c", "d_c", "d_r", "c_t"];

/// Odometer over every case tuple, lexicographic in canonical field order.
#[derive(Debug, Clone)]
pub struct CaseEnumerator {
    cards: [u8; NUM_CASE_VARS],
    next: Option<[u8; NUM_CASE_VARS]>,
}

impl CaseEnumerator {
    pub fn new(schema: &VariableSchema) -> Self {
        Self {
            cards: schema.case_cardinalities(),
            next: Some([0; NUM_CASE_VARS]),
        }
    }
}

impl Iterator for CaseEnumerator {
    type Item = [u8; NUM_CASE_VARS];

    fn next(&mut self) -> Option<Self::Item> {
        let current = self.next?;
        let mut succ = current;
        let mut pos = NUM_CASE_VARS;
        loop {
            if pos == 0 {
                self.next = None;
                break;
            }
            pos -= 1;
            succ[pos] += 1;
            if succ[pos] < self.cards[pos] {
                self.next = Some(succ);
                break;
            }
            succ[pos] = 0;
        }
        Some(current)
    }
}

/// Every case of the schema as an unlabeled [`EventCase`].
pub fn enumerate_cases(schema: &VariableSchema) -> impl Iterator<Item = EventCase> {
    CaseEnumerator::new(schema).map(EventCase::from_codes)
}

/// Mixed-radix rank of a case tuple in enumeration order.
pub fn case_rank(codes: &[u8; NUM_CASE_VARS], cards: &[u8; NUM_CASE_VARS]) -> u64 {
    codes
        .iter()
        .zip(cards)
        .fold(0u64, |acc, (&c, &k)| acc * k as u64 + c as u64)
}

fn premise_from_rank(mut rank: u64, cards: &[u8; NUM_PREMISE_VARS]) -> Premise {
    let mut p = [0u8; NUM_PREMISE_VARS];
    for i in (0..NUM_PREMISE_VARS).rev() {
        p[i] = (rank % cards[i] as u64) as u8;
        rank /= cards[i] as u64;
    }
    Premise(p)
}

/// Near-crash store: premise → set of solutions.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CaseBase {
    schema: VariableSchema,
    groups: BTreeMap<Premise, BTreeSet<Solution>>,
    case_count: usize,
}

impl CaseBase {
    pub fn new(schema: VariableSchema) -> Self {
        Self {
            schema,
            groups: BTreeMap::new(),
            case_count: 0,
        }
    }

    pub fn schema(&self) -> &VariableSchema {
        &self.schema
    }

    pub fn groups(&self) -> &BTreeMap<Premise, BTreeSet<Solution>> {
        &self.groups
    }

    pub fn case_count(&self) -> usize {
        self.case_count
    }

    pub fn is_empty(&self) -> bool {
        self.case_count == 0
    }

    pub fn contains(&self, premise: &Premise, solution: &Solution) -> bool {
        self.groups
            .get(premise)
            .is_some_and(|s| s.contains(solution))
    }

    /// Inserts a pair; returns false when it was already stored.
    pub fn insert(&mut self, premise: Premise, solution: Solution) -> Result<bool> {
        ensure_valid(&EventCase::from_parts(premise, solution), &self.schema)?;
        let added = self.groups.entry(premise).or_default().insert(solution);
        if added {
            self.case_count += 1;
        }
        Ok(added)
    }

    /// Stored cases in canonical order (premise, then solution).
    pub fn iter(&self) -> impl Iterator<Item = (Premise, Solution)> + '_ {
        self.groups
            .iter()
            .flat_map(|(p, sols)| sols.iter().map(move |s| (*p, *s)))
    }
}

/// Scores every enumerable case and keeps those with crash probability
/// below 0.5.
pub fn build_casebase(model: &FfmModel, schema: &VariableSchema) -> Result<CaseBase> {
    if model.schema().case_cardinalities() != schema.case_cardinalities() {
        return Err(Error::InvalidSchema(
            "model and case-base schemas have different cardinalities".into(),
        ));
    }
    let pcards = schema.premise_cardinalities();
    let cards = schema.case_cardinalities();
    let n_premises = schema.premise_space_size();
    let groups: Vec<(Premise, BTreeSet<Solution>)> = (0..n_premises)
        .into_par_iter()
        .filter_map(|rank| {
            let premise = premise_from_rank(rank, &pcards);
            let mut kept = BTreeSet::new();
            for d_r in 0..cards[3] {
                for c_t in 0..cards[4] {
                    let s = Solution::new(d_r, c_t);
                    let codes = EventCase::from_parts(premise, s).codes();
                    if sigmoid(model.score_codes(&codes)) < NEAR_CRASH_THRESHOLD {
                        kept.insert(s);
                    }
                }
            }
            (!kept.is_empty()).then_some((premise, kept))
        })
        .collect();
    let case_count = groups.iter().map(|(_, s)| s.len()).sum();
    Ok(CaseBase {
        schema: schema.clone(),
        groups: groups.into_iter().collect(),
        case_count,
    })
}

pub fn casebase_to_csv(cb: &CaseBase) -> Vec<u8> {
    let mut w = dataset::writer(Vec::new());
    w.write_record(CASEBASE_HEADER).expect("memory write");
    for (p, s) in cb.iter() {
        let [e_n, p_e, p_m, r_c, d_c] = p.0;
        let rec = [e_n, p_e, p_m, r_c, d_c, s.d_r, s.c_t].map(|c| c.to_string());
        w.write_record(&rec).expect("memory write");
    }
    w.into_inner().expect("memory write")
}

pub fn casebase_from_csv(bytes: &[u8], schema: &VariableSchema) -> Result<CaseBase> {
    let mut rdr = dataset::reader(bytes);
    let mut records = rdr.records();
    let header = records
        .next()
        .ok_or_else(|| Error::CorruptFile {
            line: 1,
            message: "missing header".into(),
        })?
        .map_err(|e| csv_error(1, e))?;
    check_header(&header, &CASEBASE_HEADER)?;
    let mut cb = CaseBase::new(schema.clone());
    for rec in records {
        let rec = rec.map_err(|e| csv_error(0, e))?;
        let line = rec.position().map(|p| p.line()).unwrap_or(0);
        let mut c = [0u8; 7];
        for (i, slot) in c.iter_mut().enumerate() {
            *slot = parse_code(&rec[i], CASEBASE_HEADER[i], line)?;
        }
        let premise = Premise([c[0], c[1], c[2], c[3], c[4]]);
        cb.insert(premise, Solution::new(c[5], c[6]))
            .map_err(|e| Error::CorruptFile {
                line,
                message: e.to_string(),
            })?;
    }
    Ok(cb)
}

pub fn save_casebase(cb: &CaseBase, path: impl AsRef<Path>) -> Result<()> {
    fsutil::write_atomic(path.as_ref(), &casebase_to_csv(cb))
}

pub fn load_casebase(path: impl AsRef<Path>, schema: &VariableSchema) -> Result<CaseBase> {
    casebase_from_csv(&fsutil::read(path.as_ref())?, schema)
}

// Packed binary cache: "RCB1", 32-byte SHA-256 of the source CSV, the 7
// case-base column cardinalities, u64 LE row count, then 7 bytes per row in
// CSV column order.
const CACHE_MAGIC: &[u8; 3] = b"RCB";
const CACHE_VERSION: u8 = b'1';

fn csv_digest(csv: &[u8]) -> [u8; 32] {
    Sha256::digest(csv).into()
}

fn column_cards(schema: &VariableSchema) -> [u8; 7] {
    let p = schema.premise_cardinalities();
    let c = schema.case_cardinalities();
    [p[0], p[1], p[2], p[3], p[4], c[3], c[4]]
}

pub fn encode_cache(cb: &CaseBase, csv_bytes: &[u8]) -> Vec<u8> {
    let mut out = Vec::with_capacity(4 + 32 + 7 + 8 + cb.case_count() * 7);
    out.extend_from_slice(CACHE_MAGIC);
    out.push(CACHE_VERSION);
    out.extend_from_slice(&csv_digest(csv_bytes));
    out.extend_from_slice(&column_cards(&cb.schema));
    out.extend_from_slice(&(cb.case_count() as u64).to_le_bytes());
    for (p, s) in cb.iter() {
        out.extend_from_slice(&p.0);
        out.push(s.d_r);
        out.push(s.c_t);
    }
    out
}

/// Decodes a cache, returning the case base and the digest it was built from.
pub fn decode_cache(bytes: &[u8], schema: &VariableSchema) -> Result<(CaseBase, [u8; 32])> {
    let corrupt = |m: &str| Error::CorruptFile {
        line: 0,
        message: m.to_string(),
    };
    if bytes.len() < 4 || &bytes[..3] != CACHE_MAGIC {
        return Err(corrupt("missing RCB magic"));
    }
    if bytes[3] != CACHE_VERSION {
        return Err(Error::VersionMismatch {
            found: format!("RCB{}", bytes[3] as char),
        });
    }
    let header = 4 + 32 + 7 + 8;
    if bytes.len() < header {
        return Err(corrupt("truncated header"));
    }
    let digest: [u8; 32] = bytes[4..36].try_into().expect("32 bytes");
    if bytes[36..43] != column_cards(schema) {
        return Err(corrupt("cardinalities differ from schema"));
    }
    let n = u64::from_le_bytes(bytes[43..51].try_into().expect("8 bytes")) as usize;
    let body = &bytes[header..];
    if body.len() != n * 7 {
        return Err(corrupt("row count does not match payload"));
    }
    let mut cb = CaseBase::new(schema.clone());
    for row in body.chunks_exact(7) {
        let premise = Premise([row[0], row[1], row[2], row[3], row[4]]);
        cb.insert(premise, Solution::new(row[5], row[6]))?;
    }
    Ok((cb, digest))
}

/// Loads the CSV through its binary cache, rebuilding the cache when it is
/// missing, unreadable or stale.
pub fn load_casebase_cached(
    csv_path: impl AsRef<Path>,
    cache_path: impl AsRef<Path>,
    schema: &VariableSchema,
) -> Result<CaseBase> {
    let csv_bytes = fsutil::read(csv_path.as_ref())?;
    let digest = csv_digest(&csv_bytes);
    if let Ok(bytes) = std::fs::read(cache_path.as_ref()) {
        if let Ok((cb, stored)) = decode_cache(&bytes, schema) {
            if stored == digest {
                return Ok(cb);
            }
        }
    }
    let cb = casebase_from_csv(&csv_bytes, schema)?;
    fsutil::write_atomic(cache_path.as_ref(), &encode_cache(&cb, &csv_bytes))?;
    Ok(cb)
}

/// One driver's near-crash history and its solution frequencies.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PersonalCaseBase {
    pub driver_id: String,
    pub solution_counts: BTreeMap<Solution, u32>,
    pub maneuver_counts: BTreeMap<u8, u32>,
    pub cases: Vec<EventCase>,
}

impl PersonalCaseBase {
    pub fn new(driver_id: impl Into<String>) -> Self {
        Self {
            driver_id: driver_id.into(),
            solution_counts: BTreeMap::new(),
            maneuver_counts: BTreeMap::new(),
            cases: Vec::new(),
        }
    }

    /// Appends a case of this driver and updates both frequency tables.
    pub fn add(&mut self, case: EventCase, schema: &VariableSchema) -> Result<()> {
        ensure_valid(&case, schema)?;
        if case.driver_id.as_deref() != Some(self.driver_id.as_str()) {
            return Err(Error::DriverMismatch {
                expected: self.driver_id.clone(),
                got: case.driver_id.clone(),
            });
        }
        *self.solution_counts.entry(case.solution()).or_default() += 1;
        *self.maneuver_counts.entry(case.d_r).or_default() += 1;
        self.cases.push(case);
        Ok(())
    }

    pub fn from_cases(
        driver_id: impl Into<String>,
        cases: Vec<EventCase>,
        schema: &VariableSchema,
    ) -> Result<Self> {
        let mut pcb = Self::new(driver_id);
        for c in cases {
            pcb.add(c, schema)?;
        }
        Ok(pcb)
    }
}

/// Value-returning form of [`PersonalCaseBase::add`].
pub fn personal_add(
    mut pcb: PersonalCaseBase,
    case: EventCase,
    schema: &VariableSchema,
) -> Result<PersonalCaseBase> {
    pcb.add(case, schema)?;
    Ok(pcb)
}

/// Personal stores of every driver, built from the dataset's near-crash rows
/// that carry a driver id.
pub fn personal_from_dataset(dataset: &EventDataset) -> Result<BTreeMap<String, PersonalCaseBase>> {
    let mut out: BTreeMap<String, PersonalCaseBase> = BTreeMap::new();
    for case in &dataset.rows {
        if case.e_s != Some(NEAR_CRASH) {
            continue;
        }
        let Some(id) = case.driver_id.clone() else {
            continue;
        };
        out.entry(id.clone())
            .or_insert_with(|| PersonalCaseBase::new(id))
            .add(case.clone(), &dataset.schema)?;
    }
    Ok(out)
}

/// Directory of per-driver event CSVs, `<driver_id>.csv`.
#[derive(Debug, Clone)]
pub struct PersonalStore {
    dir: PathBuf,
    schema: VariableSchema,
}

fn check_driver_id(id: &str) -> Result<()> {
    let ok = !id.is_empty()
        && !id.starts_with('.')
        && id
            .chars()
            .all(|c| c.is_ascii_alphanumeric() || matches!(c, '_' | '-' | '.'));
    if ok {
        Ok(())
    } else {
        Err(Error::InvalidConfig(format!(
            "driver id `{id}` is not usable as a file name"
        )))
    }
}

impl PersonalStore {
    pub fn new(dir: impl Into<PathBuf>, schema: VariableSchema) -> Self {
        Self {
            dir: dir.into(),
            schema,
        }
    }

    pub fn path_for(&self, driver_id: &str) -> Result<PathBuf> {
        check_driver_id(driver_id)?;
        Ok(self.dir.join(format!("{driver_id}.csv")))
    }

    /// A driver's store; empty when the driver has no file yet.
    pub fn load(&self, driver_id: &str) -> Result<PersonalCaseBase> {
        let path = self.path_for(driver_id)?;
        if !path.exists() {
            return Ok(PersonalCaseBase::new(driver_id));
        }
        let file = fsutil::open(&path)?;
        let ds = read_events(std::io::BufReader::new(file), &self.schema)?;
        PersonalCaseBase::from_cases(driver_id, ds.rows, &self.schema)
    }

    pub fn save(&self, pcb: &PersonalCaseBase) -> Result<()> {
        let path = self.path_for(&pcb.driver_id)?;
        let ds = EventDataset {
            schema: self.schema.clone(),
            rows: pcb.cases.clone(),
        };
        let mut buf = Vec::new();
        write_events(&mut buf, &ds).map_err(|e| Error::io(&path, e))?;
        fsutil::write_atomic(&path, &buf)
    }

    pub fn save_all<'a>(
        &self,
        stores: impl IntoIterator<Item = &'a PersonalCaseBase>,
    ) -> Result<()> {
        for s in stores {
            self.save(s)?;
        }
        Ok(())
    }
}
