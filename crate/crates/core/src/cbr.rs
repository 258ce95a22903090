//! Retrieve, reuse, revise and retain over the near-crash case base.
//!
//! Similarity of two premises is the mean, over the five premise variables,
//! of the cosine between the two values' embeddings. A value's embedding is
//! the concatenation of its seven field-specific FFM latent vectors.

use std::cmp::Ordering;
use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;

use rayon::prelude::*;

use crate::casebase::{CaseBase, PersonalCaseBase};
use crate::error::{Error, Result, Violation};
use crate::ffm::FfmModel;
use crate::schema::{
    ensure_valid, EventDataset, Premise, Solution, VariableSchema, CASE_VARIABLES, NEAR_CRASH,
    NUM_CASE_VARS, NUM_PREMISE_VARS, PREMISE_POSITIONS,
};

pub const DEFAULT_TAU: f64 = 0.95;
pub const DEFAULT_TOP_K: usize = 100;

#[derive(Debug, Clone, PartialEq)]
pub struct Query {
    pub premise: Premise,
    pub driver_id: Option<String>,
    pub excluded_maneuvers: BTreeSet<u8>,
    pub tau: f64,
    pub top_k: usize,
}

impl Query {
    pub fn new(premise: Premise) -> Self {
        Self {
            premise,
            driver_id: None,
            excluded_maneuvers: BTreeSet::new(),
            tau: DEFAULT_TAU,
            top_k: DEFAULT_TOP_K,
        }
    }

    pub fn validate(&self, schema: &VariableSchema) -> Result<()> {
        self.premise.validate(schema).map_err(Error::InvalidCase)?;
        let d_r_card = schema.case_cardinalities()[3];
        if let Some(&bad) = self.excluded_maneuvers.iter().find(|&&m| m >= d_r_card) {
            return Err(Error::InvalidCase(vec![Violation {
                field: "d_r".into(),
                code: bad,
            }]));
        }
        if !(self.tau > 0.0 && self.tau <= 1.0) {
            return Err(Error::InvalidConfig(format!(
                "tau must be in (0, 1], got {}",
                self.tau
            )));
        }
        if self.top_k == 0 {
            return Err(Error::InvalidConfig("top_k must be >= 1".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CandidateSolution {
    pub solution: Solution,
    pub confidence: f64,
    pub support: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Rationale {
    PersonalExact,
    PersonalManeuver,
    General,
}

impl Rationale {
    pub fn as_str(&self) -> &'static str {
        match self {
            Self::PersonalExact => "personal-exact",
            Self::PersonalManeuver => "personal-maneuver",
            Self::General => "general",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Recommendation {
    pub adopted: CandidateSolution,
    pub rationale: Rationale,
    /// Thresholded general candidate count.
    pub general_count: usize,
    pub personalized: Vec<CandidateSolution>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RetrievedGroup {
    pub premise: Premise,
    pub solutions: Vec<Solution>,
    pub similarity: f64,
}

/// Embedding of `(field, code)`: the feature's latent vectors for every
/// target field, concatenated in field order.
pub fn value_embedding(model: &FfmModel, field: usize, code: u8) -> Result<Vec<f64>> {
    if field >= NUM_CASE_VARS {
        return Err(Error::InvalidConfig(format!(
            "field index {field} out of range"
        )));
    }
    if code >= model.schema().case_cardinalities()[field] {
        return Err(Error::InvalidCase(vec![Violation {
            field: CASE_VARIABLES[field].into(),
            code,
        }]));
    }
    let f = model.feature(field, code);
    Ok((0..NUM_CASE_VARS)
        .flat_map(|g| model.latent(f, g).iter().copied())
        .collect())
}

/// Cosine, or `None` for a zero vector.
fn cosine(a: &[f64], b: &[f64]) -> Option<f64> {
    let dot: f64 = a.iter().zip(b).map(|(x, y)| x * y).sum();
    let na: f64 = a.iter().map(|x| x * x).sum::<f64>().sqrt();
    let nb: f64 = b.iter().map(|x| x * x).sum::<f64>().sqrt();
    if na == 0.0 || nb == 0.0 {
        return None;
    }
    Some((dot / (na * nb)).clamp(-1.0, 1.0))
}

/// Similarity with the premise variables whose embedding was a zero vector.
#[derive(Debug, Clone, PartialEq)]
pub struct SimilarityDetail {
    pub value: f64,
    pub degenerate: Vec<&'static str>,
}

/// Precomputed per-variable cosine tables for one model.
#[derive(Debug, Clone)]
pub struct SimilarityIndex {
    // for each premise variable: card × card table, row-major
    tables: Vec<Vec<f64>>,
    degenerate: Vec<Vec<bool>>,
    cards: [u8; NUM_PREMISE_VARS],
}

impl SimilarityIndex {
    pub fn new(model: &FfmModel) -> Self {
        let cards = model.schema().premise_cardinalities();
        let mut tables = Vec::with_capacity(NUM_PREMISE_VARS);
        let mut degenerate = Vec::with_capacity(NUM_PREMISE_VARS);
        for (k, &pos) in PREMISE_POSITIONS.iter().enumerate() {
            let n = cards[k] as usize;
            let emb: Vec<Vec<f64>> = (0..n)
                .map(|c| value_embedding(model, pos, c as u8).expect("code in range"))
                .collect();
            let mut t = vec![0.0; n * n];
            for a in 0..n {
                for b in 0..n {
                    t[a * n + b] = if a == b {
                        1.0
                    } else {
                        cosine(&emb[a], &emb[b]).unwrap_or(0.0)
                    };
                }
            }
            tables.push(t);
            degenerate.push(emb.iter().map(|e| e.iter().all(|&x| x == 0.0)).collect());
        }
        Self {
            tables,
            degenerate,
            cards,
        }
    }

    #[inline]
    pub fn similarity(&self, a: &Premise, b: &Premise) -> f64 {
        let mut s = 0.0;
        for k in 0..NUM_PREMISE_VARS {
            let n = self.cards[k] as usize;
            s += self.tables[k][a.0[k] as usize * n + b.0[k] as usize];
        }
        s / NUM_PREMISE_VARS as f64
    }

    pub fn detail(&self, a: &Premise, b: &Premise) -> SimilarityDetail {
        let degenerate = (0..NUM_PREMISE_VARS)
            .filter(|&k| {
                a.0[k] != b.0[k]
                    && (self.degenerate[k][a.0[k] as usize] || self.degenerate[k][b.0[k] as usize])
            })
            .map(|k| CASE_VARIABLES[PREMISE_POSITIONS[k]])
            .collect();
        SimilarityDetail {
            value: self.similarity(a, b),
            degenerate,
        }
    }
}

/// Mean per-variable cosine of two premises. Identical codes contribute
/// exactly 1; a zero embedding contributes 0.
pub fn case_similarity(model: &FfmModel, a: &Premise, b: &Premise) -> Result<f64> {
    case_similarity_detail(model, a, b).map(|d| d.value)
}

pub fn case_similarity_detail(
    model: &FfmModel,
    a: &Premise,
    b: &Premise,
) -> Result<SimilarityDetail> {
    a.validate(model.schema()).map_err(Error::InvalidCase)?;
    b.validate(model.schema()).map_err(Error::InvalidCase)?;
    let mut sum = 0.0;
    let mut degenerate = Vec::new();
    for (k, &pos) in PREMISE_POSITIONS.iter().enumerate() {
        if a.0[k] == b.0[k] {
            sum += 1.0;
            continue;
        }
        let ea = value_embedding(model, pos, a.0[k])?;
        let eb = value_embedding(model, pos, b.0[k])?;
        match cosine(&ea, &eb) {
            Some(c) => sum += c,
            None => degenerate.push(CASE_VARIABLES[pos]),
        }
    }
    Ok(SimilarityDetail {
        value: sum / NUM_PREMISE_VARS as f64,
        degenerate,
    })
}

fn ranking(a: &RetrievedGroup, b: &RetrievedGroup) -> Ordering {
    b.similarity
        .total_cmp(&a.similarity)
        .then_with(|| a.premise.cmp(&b.premise))
}

/// Premise groups with similarity ≥ τ, best first (ties by premise), at
/// most `top_k` of them.
pub fn retrieve(cb: &CaseBase, model: &FfmModel, query: &Query) -> Result<Vec<RetrievedGroup>> {
    retrieve_with(cb, &SimilarityIndex::new(model), query)
}

pub fn retrieve_with(
    cb: &CaseBase,
    index: &SimilarityIndex,
    query: &Query,
) -> Result<Vec<RetrievedGroup>> {
    if cb.is_empty() {
        return Err(Error::EmptyCaseBase);
    }
    query.validate(cb.schema())?;
    let groups: Vec<(&Premise, &BTreeSet<Solution>)> = cb.groups().iter().collect();
    let mut hits: Vec<RetrievedGroup> = groups
        .par_iter()
        .filter_map(|(p, sols)| {
            let similarity = index.similarity(&query.premise, p);
            (similarity >= query.tau).then(|| RetrievedGroup {
                premise: **p,
                solutions: sols.iter().copied().collect(),
                similarity,
            })
        })
        .collect();
    hits.sort_by(ranking);
    hits.truncate(query.top_k);
    Ok(hits)
}

/// Flattens retrieved groups into distinct candidate solutions.
pub fn reuse(retrieved: &[RetrievedGroup]) -> Vec<CandidateSolution> {
    let mut by_solution: BTreeMap<Solution, CandidateSolution> = BTreeMap::new();
    for g in retrieved {
        for &s in &g.solutions {
            let c = by_solution.entry(s).or_insert(CandidateSolution {
                solution: s,
                confidence: g.similarity,
                support: 0,
            });
            c.support += 1;
            if g.similarity > c.confidence {
                c.confidence = g.similarity;
            }
        }
    }
    let mut out: Vec<CandidateSolution> = by_solution.into_values().collect();
    out.sort_by(|a, b| {
        b.confidence
            .total_cmp(&a.confidence)
            .then(b.support.cmp(&a.support))
            .then(a.solution.cmp(&b.solution))
    });
    out
}

/// Picks the solution to adopt.
///
/// Excluded maneuvers are dropped first. Then the personalization cascade:
/// candidates whose exact solution is in the driver's history (most frequent
/// first), else candidates whose maneuver is (most frequent first), else the
/// highest-confidence survivor.
pub fn revise(
    candidates: &[CandidateSolution],
    pcb: Option<&PersonalCaseBase>,
    query: &Query,
) -> Result<Recommendation> {
    let survivors: Vec<CandidateSolution> = candidates
        .iter()
        .filter(|c| !query.excluded_maneuvers.contains(&c.solution.d_r))
        .copied()
        .collect();
    let first = *survivors.first().ok_or(Error::NoViableSolution)?;
    let general_count = candidates.len();

    let ranked = |count: &dyn Fn(&CandidateSolution) -> Option<u32>| -> Vec<CandidateSolution> {
        let mut m: Vec<(u32, CandidateSolution)> = survivors
            .iter()
            .filter_map(|c| count(c).map(|n| (n, *c)))
            .collect();
        // stable: equal (count, confidence) keeps reuse order
        m.sort_by(|a, b| {
            b.0.cmp(&a.0)
                .then(b.1.confidence.total_cmp(&a.1.confidence))
        });
        m.into_iter().map(|(_, c)| c).collect()
    };

    if let Some(p) = pcb {
        let exact = ranked(&|c| p.solution_counts.get(&c.solution).copied());
        if let Some(&adopted) = exact.first() {
            return Ok(Recommendation {
                adopted,
                rationale: Rationale::PersonalExact,
                general_count,
                personalized: exact,
            });
        }
        let maneuver = ranked(&|c| p.maneuver_counts.get(&c.solution.d_r).copied());
        if let Some(&adopted) = maneuver.first() {
            return Ok(Recommendation {
                adopted,
                rationale: Rationale::PersonalManeuver,
                general_count,
                personalized: maneuver,
            });
        }
    }
    Ok(Recommendation {
        adopted: first,
        rationale: Rationale::General,
        general_count,
        personalized: Vec::new(),
    })
}

/// Retrieve → reuse → revise.
pub fn recommend(
    cb: &CaseBase,
    index: &SimilarityIndex,
    pcb: Option<&PersonalCaseBase>,
    query: &Query,
) -> Result<(Vec<CandidateSolution>, Recommendation)> {
    let retrieved = retrieve_with(cb, index, query)?;
    let candidates = reuse(&retrieved);
    let rec = revise(&candidates, pcb, query)?;
    Ok((candidates, rec))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RetainOutcome {
    /// The pair was new to the case base.
    pub added_to_casebase: bool,
    pub added_to_personal: bool,
}

/// Stores a confirmed case: always into the event dataset, and into the case
/// base and the driver's personal store when it was a near-crash.
pub fn retain(
    events: &mut EventDataset,
    cb: &mut CaseBase,
    pcb: &mut PersonalCaseBase,
    confirmed: crate::schema::EventCase,
) -> Result<RetainOutcome> {
    ensure_valid(&confirmed, &events.schema)?;
    let label = confirmed.e_s.ok_or(Error::UnlabeledRow(events.len()))?;
    if confirmed.driver_id.as_deref() != Some(pcb.driver_id.as_str()) {
        return Err(Error::DriverMismatch {
            expected: pcb.driver_id.clone(),
            got: confirmed.driver_id.clone(),
        });
    }
    let mut outcome = RetainOutcome {
        added_to_casebase: false,
        added_to_personal: false,
    };
    if label == NEAR_CRASH {
        outcome.added_to_casebase = cb.insert(confirmed.premise(), confirmed.solution())?;
        pcb.add(confirmed.clone(), &events.schema)?;
        outcome.added_to_personal = true;
    }
    events.rows.push(confirmed);
    Ok(outcome)
}

fn premise_text(p: &Premise) -> String {
    PREMISE_POSITIONS
        .iter()
        .zip(p.0)
        .map(|(&pos, c)| format!("{}={c}", CASE_VARIABLES[pos]))
        .collect::<Vec<_>>()
        .join(" ")
}

fn candidate_row(c: &CandidateSolution) -> String {
    format!(
        "{:>4} {:>4} {:>10.6} {:>8}\n",
        c.solution.d_r, c.solution.c_t, c.confidence, c.support
    )
}

/// Human-readable query report.
pub fn report_text(
    query: &Query,
    candidates: &[CandidateSolution],
    rec: &Recommendation,
) -> String {
    let mut out = String::new();
    let excluded: Vec<String> = query
        .excluded_maneuvers
        .iter()
        .map(|m| m.to_string())
        .collect();
    let _ = writeln!(
        out,
        "query {} driver={} tau={} top_k={} exclude={}",
        premise_text(&query.premise),
        query.driver_id.as_deref().unwrap_or("-"),
        query.tau,
        query.top_k,
        if excluded.is_empty() {
            "-".to_string()
        } else {
            excluded.join(",")
        }
    );
    let _ = writeln!(out, "general candidates: {}", candidates.len());
    out.push_str(" d_r  c_t confidence  support\n");
    for c in candidates {
        out.push_str(&candidate_row(c));
    }
    let _ = writeln!(out, "personalized candidates: {}", rec.personalized.len());
    out.push_str(" d_r  c_t confidence  support\n");
    for c in &rec.personalized {
        out.push_str(&candidate_row(c));
    }
    let a = &rec.adopted;
    let _ = writeln!(
        out,
        "adopted d_r={} c_t={} confidence={:.6} support={}",
        a.solution.d_r, a.solution.c_t, a.confidence, a.support
    );
    let _ = writeln!(out, "rationale {}", rec.rationale.as_str());
    out
}

/// Machine-readable query report.
pub fn report_csv(candidates: &[CandidateSolution], rec: &Recommendation) -> String {
    let mut out = String::from("section,d_r,c_t,confidence,support,rationale\n");
    let row = |section: &str, c: &CandidateSolution, rationale: &str| {
        format!(
            "{section},{},{},{:.6},{},{rationale}\n",
            c.solution.d_r, c.solution.c_t, c.confidence, c.support
        )
    };
    for c in candidates {
        out.push_str(&row("general", c, ""));
    }
    for c in &rec.personalized {
        out.push_str(&row("personalized", c, ""));
    }
    out.push_str(&row("adopted", &rec.adopted, rec.rationale.as_str()));
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ffm::ffm_init;
    use crate::schema::{default_schema, EventCase};

    fn cand(d_r: u8, c_t: u8, confidence: f64, support: usize) -> CandidateSolution {
        CandidateSolution {
            solution: Solution::new(d_r, c_t),
            confidence,
            support,
        }
    }

    #[test]
    fn embedding_layout() {
        let m = ffm_init(&default_schema(), 4, 1).unwrap();
        let e = value_embedding(&m, 2, 3).unwrap();
        assert_eq!(e.len(), 28);
        assert_eq!(e, value_embedding(&m, 2, 3).unwrap());
        let f = m.feature(2, 3);
        assert_eq!(&e[8..12], m.latent(f, 2));
        assert!(value_embedding(&m, 2, 11).is_err());
        assert!(value_embedding(&m, 7, 0).is_err());
    }

    #[test]
    fn similarity_identity_and_symmetry() {
        let m = ffm_init(&default_schema(), 4, 2).unwrap();
        let a = Premise([1, 2, 3, 4, 5]);
        let b = Premise([0, 9, 3, 1, 6]);
        assert_eq!(case_similarity(&m, &a, &a).unwrap(), 1.0);
        assert_eq!(
            case_similarity(&m, &a, &b).unwrap(),
            case_similarity(&m, &b, &a).unwrap()
        );
        let idx = SimilarityIndex::new(&m);
        assert_eq!(idx.similarity(&a, &b), case_similarity(&m, &a, &b).unwrap());
        assert!(case_similarity(&m, &a, &Premise([8, 0, 0, 0, 0])).is_err());
    }

    #[test]
    fn zero_embedding_is_flagged() {
        let mut m = ffm_init(&default_schema(), 2, 3).unwrap();
        let f = m.feature(0, 4);
        for g in 0..7 {
            m.latent_mut(f, g).fill(0.0);
        }
        let a = Premise([4, 0, 0, 0, 0]);
        let b = Premise([5, 0, 0, 0, 0]);
        let d = case_similarity_detail(&m, &a, &b).unwrap();
        assert_eq!(d.value, 4.0 / 5.0);
        assert_eq!(d.degenerate, vec!["e_n"]);
        assert_eq!(SimilarityIndex::new(&m).detail(&a, &b), d);
    }

    #[test]
    fn reuse_dedups_by_max() {
        let groups = vec![
            RetrievedGroup {
                premise: Premise([0; 5]),
                solutions: vec![Solution::new(1, 1), Solution::new(0, 0)],
                similarity: 0.9,
            },
            RetrievedGroup {
                premise: Premise([1; 5]),
                solutions: vec![Solution::new(1, 1), Solution::new(2, 0)],
                similarity: 0.8,
            },
        ];
        let c = reuse(&groups);
        assert_eq!(c[0], cand(1, 1, 0.9, 2));
        assert_eq!(c[1], cand(0, 0, 0.9, 1));
        assert_eq!(c[2], cand(2, 0, 0.8, 1));
        assert!(reuse(&[]).is_empty());
    }

    #[test]
    fn revise_general_tier() {
        let c = vec![cand(1, 1, 0.99, 1), cand(2, 0, 0.97, 4)];
        let q = Query::new(Premise([0; 5]));
        let r = revise(&c, None, &q).unwrap();
        assert_eq!(r.adopted, c[0]);
        assert_eq!(r.rationale, Rationale::General);
        assert_eq!(r.general_count, 2);
        let empty = PersonalCaseBase::new("x");
        assert_eq!(revise(&c, Some(&empty), &q).unwrap(), r);
    }

    #[test]
    fn revise_maneuver_tier_prefers_frequency() {
        let s = default_schema();
        let mut p = PersonalCaseBase::new("d");
        for _ in 0..5 {
            p.add(
                EventCase::from_codes([0, 0, 0, 2, 3, 0, 0]).with_driver("d"),
                &s,
            )
            .unwrap();
        }
        p.add(
            EventCase::from_codes([0, 0, 0, 0, 3, 0, 0]).with_driver("d"),
            &s,
        )
        .unwrap();
        let c = vec![
            cand(0, 0, 0.99, 3),
            cand(2, 1, 0.96, 1),
            cand(4, 1, 0.95, 1),
        ];
        let r = revise(&c, Some(&p), &Query::new(Premise([0; 5]))).unwrap();
        assert_eq!(r.rationale, Rationale::PersonalManeuver);
        assert_eq!(r.adopted.solution, Solution::new(2, 1));
        assert_eq!(r.personalized.len(), 2);
    }

    #[test]
    fn revise_exact_tier_and_exclusions() {
        let s = default_schema();
        let mut p = PersonalCaseBase::new("d");
        p.add(
            EventCase::from_codes([0, 0, 0, 1, 1, 0, 0]).with_driver("d"),
            &s,
        )
        .unwrap();
        p.add(
            EventCase::from_codes([0, 0, 0, 2, 0, 0, 0]).with_driver("d"),
            &s,
        )
        .unwrap();
        let c = vec![
            cand(0, 0, 0.99, 3),
            cand(2, 0, 0.98, 1),
            cand(1, 1, 0.96, 1),
        ];
        let mut q = Query::new(Premise([0; 5]));
        let r = revise(&c, Some(&p), &q).unwrap();
        assert_eq!(r.rationale, Rationale::PersonalExact);
        // equal counts: higher confidence first
        assert_eq!(r.adopted.solution, Solution::new(2, 0));
        assert_eq!(r.personalized.len(), 2);
        q.excluded_maneuvers.insert(2);
        let r = revise(&c, Some(&p), &q).unwrap();
        assert_eq!(r.adopted.solution, Solution::new(1, 1));
        q.excluded_maneuvers.extend([0, 1]);
        assert!(matches!(
            revise(&c, Some(&p), &q),
            Err(Error::NoViableSolution)
        ));
    }

    #[test]
    fn retrieve_exact_premise_first() {
        let s = default_schema();
        let m = ffm_init(&s, 4, 5).unwrap();
        let mut cb = CaseBase::new(s.clone());
        let q = Premise([1, 2, 3, 4, 5]);
        cb.insert(Premise([1, 2, 3, 4, 4]), Solution::new(0, 0))
            .unwrap();
        cb.insert(q, Solution::new(2, 1)).unwrap();
        let mut query = Query::new(q);
        query.tau = 0.01;
        let r = retrieve(&cb, &m, &query).unwrap();
        assert_eq!(r[0].premise, q);
        assert_eq!(r[0].similarity, 1.0);
        query.top_k = 1;
        assert_eq!(retrieve(&cb, &m, &query).unwrap().len(), 1);
        query.tau = 1.0;
        query.premise = Premise([0, 0, 0, 0, 0]);
        assert!(retrieve(&cb, &m, &query).unwrap().is_empty());
        assert!(matches!(
            retrieve(&CaseBase::new(s), &m, &query),
            Err(Error::EmptyCaseBase)
        ));
        query.tau = 0.0;
        assert!(matches!(
            retrieve(&cb, &m, &query),
            Err(Error::InvalidConfig(_))
        ));
    }

    #[test]
    fn retain_rules() {
        let s = default_schema();
        let m = ffm_init(&s, 4, 5).unwrap();
        let mut events = EventDataset::empty(s.clone());
        let mut cb = CaseBase::new(s.clone());
        cb.insert(Premise([0; 5]), Solution::new(0, 0)).unwrap();
        let mut pcb = PersonalCaseBase::new("d");
        let near = EventCase::from_codes([1, 2, 3, 4, 1, 5, 6])
            .with_label(0)
            .with_driver("d");
        let o = retain(&mut events, &mut cb, &mut pcb, near.clone()).unwrap();
        assert!(o.added_to_casebase && o.added_to_personal);
        assert_eq!(cb.case_count(), 2);
        let o = retain(&mut events, &mut cb, &mut pcb, near.clone()).unwrap();
        assert!(!o.added_to_casebase);
        assert_eq!(cb.case_count(), 2);
        assert_eq!(pcb.solution_counts[&near.solution()], 2);
        let crash = EventCase::from_codes([1, 2, 3, 0, 0, 5, 6])
            .with_label(1)
            .with_driver("d");
        retain(&mut events, &mut cb, &mut pcb, crash).unwrap();
        assert_eq!(events.len(), 3);
        assert_eq!(cb.case_count(), 2);
        let unl = EventCase::from_codes([1, 2, 3, 0, 0, 5, 6]).with_driver("d");
        assert!(matches!(
            retain(&mut events, &mut cb, &mut pcb, unl),
            Err(Error::UnlabeledRow(_))
        ));

        let mut q = Query::new(near.premise());
        q.tau = 1.0;
        let (cands, _) = recommend(&cb, &SimilarityIndex::new(&m), Some(&pcb), &q).unwrap();
        let hit = cands
            .iter()
            .find(|c| c.solution == near.solution())
            .unwrap();
        assert_eq!(hit.confidence, 1.0);
    }

    #[test]
    fn reports_list_every_section() {
        let c = vec![cand(1, 1, 0.99, 1), cand(2, 0, 0.97, 4)];
        let q = Query::new(Premise([0; 5]));
        let r = revise(&c, None, &q).unwrap();
        let text = report_text(&q, &c, &r);
        assert!(text.contains("general candidates: 2"));
        assert!(text.contains("rationale general"));
        let csv = report_csv(&c, &r);
        assert_eq!(csv.lines().count(), 4);
        assert!(csv.ends_with("adopted,1,1,0.990000,1,general\n"));
    }
}
