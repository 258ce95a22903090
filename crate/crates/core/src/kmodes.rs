//! k-modes clustering of categorical vectors.
//!
//! The raw road-condition block (7 variables) and driving-context block
//! (5 variables) are clustered into the abstract `r_c` and `d_c` codes.
//! Distance is simple matching dissimilarity; modes are updated with
//! per-position most-frequent codes.

use std::collections::BTreeSet;
use std::fmt::Write as _;
use std::path::Path;

use rand::seq::index::sample;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::fsutil;

/// Surface, traffic flow, travel lanes, traffic control, junction,
/// alignment, locality.
pub const ROAD_CARDINALITIES: [u8; 7] = [5, 3, 8, 3, 2, 3, 6];
/// Visual obstructions, traffic density, lighting, weather, other vehicles.
pub const CONTEXT_CARDINALITIES: [u8; 5] = [2, 6, 5, 6, 5];

pub const DEFAULT_ROAD_K: usize = 6;
pub const DEFAULT_CONTEXT_K: usize = 7;
pub const DEFAULT_RESTARTS: usize = 10;
pub const MAX_ITERATIONS: usize = 100;

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct CategoricalPoint(pub Vec<u8>);

impl CategoricalPoint {
    pub fn dim(&self) -> usize {
        self.0.len()
    }
}

impl From<Vec<u8>> for CategoricalPoint {
    fn from(v: Vec<u8>) -> Self {
        Self(v)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct KModesResult {
    pub modes: Vec<CategoricalPoint>,
    pub assignments: Vec<usize>,
    pub cost: u64,
    pub iterations: usize,
    pub seed: u64,
    /// Total cost after initialization and after each alternation step of
    /// the winning run.
    pub cost_history: Vec<u64>,
}

pub fn matching_dissimilarity(a: &CategoricalPoint, b: &CategoricalPoint) -> Result<u64> {
    if a.dim() != b.dim() {
        return Err(Error::DimensionMismatch {
            expected: a.dim(),
            got: b.dim(),
        });
    }
    Ok(dissim(&a.0, &b.0))
}

#[inline]
fn dissim(a: &[u8], b: &[u8]) -> u64 {
    a.iter().zip(b).filter(|(x, y)| x != y).count() as u64
}

/// Nearest mode, ties to the lowest index.
pub fn kmodes_assign(modes: &[CategoricalPoint], point: &CategoricalPoint) -> Result<usize> {
    if modes.is_empty() {
        return Err(Error::EmptyInput);
    }
    for m in modes {
        if m.dim() != point.dim() {
            return Err(Error::DimensionMismatch {
                expected: m.dim(),
                got: point.dim(),
            });
        }
    }
    Ok(nearest(modes, &point.0).0)
}

fn nearest(modes: &[CategoricalPoint], p: &[u8]) -> (usize, u64) {
    let mut best = (0, u64::MAX);
    for (i, m) in modes.iter().enumerate() {
        let d = dissim(&m.0, p);
        if d < best.1 {
            best = (i, d);
        }
    }
    best
}

fn check_points(points: &[CategoricalPoint]) -> Result<usize> {
    let first = points.first().ok_or(Error::EmptyInput)?;
    for p in points {
        if p.dim() != first.dim() {
            return Err(Error::DimensionMismatch {
                expected: first.dim(),
                got: p.dim(),
            });
        }
    }
    Ok(points.iter().collect::<BTreeSet<_>>().len())
}

/// Distinct points in first-occurrence order.
fn distinct_points(points: &[CategoricalPoint]) -> Vec<&CategoricalPoint> {
    let mut seen = BTreeSet::new();
    points.iter().filter(|p| seen.insert(*p)).collect()
}

struct Run {
    modes: Vec<CategoricalPoint>,
    assignments: Vec<usize>,
    cost: u64,
    iterations: usize,
    history: Vec<u64>,
}

fn assign_all(modes: &[CategoricalPoint], points: &[CategoricalPoint]) -> (Vec<usize>, Vec<u64>) {
    points.iter().map(|p| nearest(modes, &p.0)).unzip()
}

/// Gives every empty cluster the point currently farthest from its mode.
fn repair_empty(
    modes: &mut [CategoricalPoint],
    points: &[CategoricalPoint],
    assign: &mut [usize],
    dist: &mut [u64],
) {
    let k = modes.len();
    loop {
        let mut counts = vec![0usize; k];
        for &a in assign.iter() {
            counts[a] += 1;
        }
        let Some(empty) = counts.iter().position(|&c| c == 0) else {
            return;
        };
        // farthest point, ties to the lowest index, never the sole member of its cluster
        let mut far: Option<usize> = None;
        for i in 0..points.len() {
            if counts[assign[i]] < 2 {
                continue;
            }
            if far.is_none_or(|f| dist[i] > dist[f]) {
                far = Some(i);
            }
        }
        let Some(i) = far else { return };
        modes[empty] = points[i].clone();
        assign[i] = empty;
        dist[i] = 0;
    }
}

fn update_modes(modes: &mut [CategoricalPoint], points: &[CategoricalPoint], assign: &[usize]) {
    let dim = points[0].dim();
    let width = points
        .iter()
        .flat_map(|p| p.0.iter())
        .copied()
        .max()
        .unwrap_or(0) as usize
        + 1;
    for (c, mode) in modes.iter_mut().enumerate() {
        let mut freq = vec![0usize; dim * width];
        let mut members = 0;
        for (p, _) in points.iter().zip(assign).filter(|(_, &a)| a == c) {
            members += 1;
            for (j, &code) in p.0.iter().enumerate() {
                freq[j * width + code as usize] += 1;
            }
        }
        if members == 0 {
            continue;
        }
        for j in 0..dim {
            let row = &freq[j * width..(j + 1) * width];
            // max_by_key returns the last max; scan manually for the lowest code
            let mut best = 0;
            for (code, &n) in row.iter().enumerate() {
                if n > row[best] {
                    best = code;
                }
            }
            mode.0[j] = best as u8;
        }
    }
}

fn run_from(mut modes: Vec<CategoricalPoint>, points: &[CategoricalPoint]) -> Run {
    let (mut assign, mut dist) = assign_all(&modes, points);
    repair_empty(&mut modes, points, &mut assign, &mut dist);
    let mut history = vec![dist.iter().sum::<u64>()];
    let mut iterations = 0;
    while iterations < MAX_ITERATIONS {
        iterations += 1;
        update_modes(&mut modes, points, &assign);
        let (mut next, mut nd) = assign_all(&modes, points);
        repair_empty(&mut modes, points, &mut next, &mut nd);
        history.push(nd.iter().sum());
        let stable = next == assign;
        assign = next;
        if stable {
            break;
        }
    }
    let cost = points
        .iter()
        .zip(&assign)
        .map(|(p, &a)| dissim(&p.0, &modes[a].0))
        .sum();
    Run {
        modes,
        assignments: assign,
        cost,
        iterations,
        history,
    }
}

/// Per-run seeds derived from the top-level seed, so run `r` is the same
/// whatever `restarts` or `k` is.
fn run_seeds(seed: u64, restarts: usize) -> Vec<u64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..restarts).map(|_| rng.gen()).collect()
}

fn seeded_init(points: &[CategoricalPoint], k: usize, seed: u64) -> Vec<CategoricalPoint> {
    let distinct = distinct_points(points);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    sample(&mut rng, distinct.len(), k)
        .into_iter()
        .map(|i| distinct[i].clone())
        .collect()
}

/// Renumbers clusters by descending member count (ties by old index).
fn canonicalize(run: Run, seed: u64) -> KModesResult {
    let k = run.modes.len();
    let mut counts = vec![0usize; k];
    for &a in &run.assignments {
        counts[a] += 1;
    }
    let mut order: Vec<usize> = (0..k).collect();
    order.sort_by(|&a, &b| counts[b].cmp(&counts[a]).then(a.cmp(&b)));
    let mut new_index = vec![0; k];
    for (new, &old) in order.iter().enumerate() {
        new_index[old] = new;
    }
    KModesResult {
        modes: order.iter().map(|&o| run.modes[o].clone()).collect(),
        assignments: run.assignments.iter().map(|&a| new_index[a]).collect(),
        cost: run.cost,
        iterations: run.iterations,
        seed,
        cost_history: run.history,
    }
}

fn best_run(runs: Vec<Run>) -> Run {
    // lowest (cost, run index)
    runs.into_iter()
        .enumerate()
        .min_by(|(i, a), (j, b)| a.cost.cmp(&b.cost).then(i.cmp(j)))
        .map(|(_, r)| r)
        .expect("at least one run")
}

fn seeded_runs(points: &[CategoricalPoint], k: usize, seed: u64, restarts: usize) -> Vec<Run> {
    run_seeds(seed, restarts.max(1))
        .into_par_iter()
        .map(|s| run_from(seeded_init(points, k, s), points))
        .collect()
}

/// Every restart of a fit, in run order, each with its own cost history.
pub fn kmodes_runs(
    points: &[CategoricalPoint],
    k: usize,
    seed: u64,
    restarts: usize,
) -> Result<Vec<KModesResult>> {
    let distinct = check_points(points)?;
    if k == 0 || k > distinct {
        return Err(Error::KTooLarge { k, limit: distinct });
    }
    Ok(seeded_runs(points, k, seed, restarts)
        .into_iter()
        .map(|r| canonicalize(r, seed))
        .collect())
}

pub fn kmodes_fit(
    points: &[CategoricalPoint],
    k: usize,
    seed: u64,
    restarts: usize,
) -> Result<KModesResult> {
    let distinct = check_points(points)?;
    if k == 0 || k > distinct {
        return Err(Error::KTooLarge { k, limit: distinct });
    }
    Ok(canonicalize(
        best_run(seeded_runs(points, k, seed, restarts)),
        seed,
    ))
}

#[derive(Debug, Clone, PartialEq)]
pub struct ElbowCurve {
    pub costs: Vec<(usize, u64)>,
    /// k with the largest discrete second difference of the cost curve.
    pub suggested: Option<usize>,
}

/// Best cost for every k in `[k_min, k_max]`.
///
/// Besides the seeded restarts, each k > k_min also runs once from the
/// previous k's modes plus the point farthest from them. That run can only
/// lower the cost, so the curve is non-increasing in k.
pub fn elbow_curve(
    points: &[CategoricalPoint],
    k_min: usize,
    k_max: usize,
    seed: u64,
    restarts: usize,
) -> Result<ElbowCurve> {
    let distinct = check_points(points)?;
    if k_min < 1 || k_min > k_max || k_max > distinct {
        return Err(Error::RangeInvalid { k_min, k_max });
    }
    let mut costs = Vec::new();
    let mut prev: Option<Run> = None;
    for k in k_min..=k_max {
        let mut runs = seeded_runs(points, k, seed, restarts);
        if let Some(p) = &prev {
            let mut modes = p.modes.clone();
            let far = points
                .iter()
                .zip(&p.assignments)
                .enumerate()
                .max_by(|(i, (a, &ca)), (j, (b, &cb))| {
                    dissim(&a.0, &p.modes[ca].0)
                        .cmp(&dissim(&b.0, &p.modes[cb].0))
                        .then(j.cmp(i))
                })
                .map(|(i, _)| i)
                .expect("non-empty");
            modes.push(points[far].clone());
            runs.push(run_from(modes, points));
        }
        let best = best_run(runs);
        costs.push((k, best.cost));
        prev = Some(best);
    }
    Ok(ElbowCurve {
        suggested: suggest_elbow(&costs),
        costs,
    })
}

pub fn suggest_elbow(costs: &[(usize, u64)]) -> Option<usize> {
    let mut best: Option<(usize, i128)> = None;
    for w in costs.windows(3) {
        let second = w[0].1 as i128 - 2 * w[1].1 as i128 + w[2].1 as i128;
        if best.is_none_or(|(_, b)| second > b) {
            best = Some((w[1].0, second));
        }
    }
    best.map(|(k, _)| k)
}

/// Serializes a fitted model: header lines then one mode per line.
pub fn cluster_model_to_string(result: &KModesResult) -> String {
    let dim = result.modes.first().map(|m| m.dim()).unwrap_or(0);
    let mut out = String::from("kmodes-model v1\n");
    let _ = writeln!(out, "k={}", result.modes.len());
    let _ = writeln!(out, "dim={dim}");
    let _ = writeln!(out, "seed={}", result.seed);
    let _ = writeln!(out, "cost={}", result.cost);
    for m in &result.modes {
        let codes: Vec<String> = m.0.iter().map(|c| c.to_string()).collect();
        let _ = writeln!(out, "{}", codes.join(" "));
    }
    out
}

/// Modes of a saved cluster model, with its recorded seed and cost.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ClusterModel {
    pub modes: Vec<CategoricalPoint>,
    pub seed: u64,
    pub cost: u64,
}

impl ClusterModel {
    pub fn assign(&self, point: &CategoricalPoint) -> Result<u8> {
        kmodes_assign(&self.modes, point).map(|i| i as u8)
    }
}

impl From<&KModesResult> for ClusterModel {
    fn from(r: &KModesResult) -> Self {
        Self {
            modes: r.modes.clone(),
            seed: r.seed,
            cost: r.cost,
        }
    }
}

pub fn parse_cluster_model(text: &str) -> Result<ClusterModel> {
    let mut lines = text.lines().enumerate().map(|(i, l)| (i as u64 + 1, l));
    let corrupt = |line: u64, message: &str| Error::CorruptFile {
        line,
        message: message.to_string(),
    };
    let (_, magic) = lines.next().ok_or_else(|| corrupt(1, "empty file"))?;
    match magic.strip_prefix("kmodes-model ") {
        Some("v1") => {}
        Some(v) => {
            return Err(Error::VersionMismatch {
                found: v.to_string(),
            })
        }
        None => return Err(corrupt(1, "missing kmodes-model header")),
    }
    let mut header = |key: &str| -> Result<u64> {
        let (n, l) = lines.next().ok_or_else(|| corrupt(0, "truncated header"))?;
        l.strip_prefix(key)
            .and_then(|v| v.strip_prefix('='))
            .and_then(|v| v.trim().parse().ok())
            .ok_or_else(|| corrupt(n, &format!("expected {key}=<int>")))
    };
    let k = header("k")? as usize;
    let dim = header("dim")? as usize;
    let seed = header("seed")?;
    let cost = header("cost")?;
    let mut modes = Vec::with_capacity(k);
    for expected_line in 0..k {
        let (n, l) = lines
            .next()
            .ok_or_else(|| corrupt(6 + expected_line as u64, "missing mode line"))?;
        let codes: std::result::Result<Vec<u8>, _> = l.split_whitespace().map(str::parse).collect();
        let codes = codes.map_err(|_| corrupt(n, "bad code"))?;
        if codes.len() != dim {
            return Err(corrupt(n, "mode has wrong dimension"));
        }
        modes.push(CategoricalPoint(codes));
    }
    Ok(ClusterModel { modes, seed, cost })
}

pub fn save_cluster_model(result: &KModesResult, path: impl AsRef<Path>) -> Result<()> {
    fsutil::write_atomic(path.as_ref(), cluster_model_to_string(result).as_bytes())
}

pub fn load_cluster_model(path: impl AsRef<Path>) -> Result<ClusterModel> {
    let bytes = fsutil::read(path.as_ref())?;
    let text = String::from_utf8(bytes).map_err(|_| Error::CorruptFile {
        line: 0,
        message: "not UTF-8".into(),
    })?;
    parse_cluster_model(&text)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn pts(v: &[&[u8]]) -> Vec<CategoricalPoint> {
        v.iter().map(|p| CategoricalPoint(p.to_vec())).collect()
    }

    #[test]
    fn dissimilarity_examples() {
        let d = |a: &[u8], b: &[u8]| {
            matching_dissimilarity(&CategoricalPoint(a.to_vec()), &CategoricalPoint(b.to_vec()))
        };
        assert_eq!(d(&[0, 1, 2], &[0, 1, 2]).unwrap(), 0);
        assert_eq!(d(&[0, 0, 0], &[1, 1, 1]).unwrap(), 3);
        assert_eq!(d(&[0, 1, 2, 3, 4], &[0, 1, 0, 3, 0]).unwrap(), 2);
        assert!(matches!(
            d(&[0], &[0, 1]),
            Err(Error::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn assign_examples() {
        let modes = pts(&[&[0, 0, 0], &[1, 1, 1], &[2, 2, 2]]);
        assert_eq!(
            kmodes_assign(&modes, &CategoricalPoint(vec![2, 2, 2])).unwrap(),
            2
        );
        // distance 2 to mode 0 and to mode 1
        assert_eq!(
            kmodes_assign(&modes, &CategoricalPoint(vec![0, 1, 3])).unwrap(),
            0
        );
        assert!(kmodes_assign(&[], &CategoricalPoint(vec![0])).is_err());
        assert!(kmodes_assign(&modes, &CategoricalPoint(vec![0])).is_err());
    }

    #[test]
    fn identical_points_single_cluster() {
        let p = pts(&[&[1u8, 2, 3] as &[u8]; 5]);
        let r = kmodes_fit(&p, 1, 7, 3).unwrap();
        assert_eq!(r.cost, 0);
        assert_eq!(r.modes, vec![CategoricalPoint(vec![1, 2, 3])]);
    }

    #[test]
    fn k_equal_distinct_is_zero_cost() {
        let p = pts(&[&[0, 0], &[0, 1], &[1, 0], &[0, 1], &[1, 1]]);
        let r = kmodes_fit(&p, 4, 1, 5).unwrap();
        assert_eq!(r.cost, 0);
        assert!(matches!(
            kmodes_fit(&p, 5, 1, 5),
            Err(Error::KTooLarge { k: 5, limit: 4 })
        ));
        assert!(matches!(kmodes_fit(&[], 1, 1, 5), Err(Error::EmptyInput)));
    }

    #[test]
    fn clusters_ordered_by_size() {
        let p = pts(&[&[0, 0, 0], &[5, 5, 5], &[5, 5, 4], &[5, 4, 5], &[0, 0, 1]]);
        let r = kmodes_fit(&p, 2, 3, 4).unwrap();
        assert_eq!(r.assignments, vec![1, 0, 0, 0, 1]);
        assert_eq!(r.cost, 3);
    }

    #[test]
    fn cluster_model_roundtrip_and_errors() {
        let p = pts(&[&[0, 0, 0], &[5, 5, 5], &[5, 5, 4], &[1, 0, 0]]);
        let r = kmodes_fit(&p, 2, 3, 4).unwrap();
        let text = cluster_model_to_string(&r);
        let m = parse_cluster_model(&text).unwrap();
        assert_eq!(m, ClusterModel::from(&r));
        assert!(matches!(
            parse_cluster_model(&text.replace("v1", "v9")),
            Err(Error::VersionMismatch { .. })
        ));
        let truncated: String = text.lines().take(6).map(|l| format!("{l}\n")).collect();
        assert!(matches!(
            parse_cluster_model(&truncated),
            Err(Error::CorruptFile { line: 7, .. })
        ));
    }

    #[test]
    fn elbow_errors_and_suggestion() {
        let p = pts(&[&[0], &[1], &[2]]);
        assert!(matches!(
            elbow_curve(&p, 0, 2, 1, 1),
            Err(Error::RangeInvalid { .. })
        ));
        assert!(matches!(
            elbow_curve(&p, 2, 4, 1, 1),
            Err(Error::RangeInvalid { .. })
        ));
        assert_eq!(
            suggest_elbow(&[(1, 100), (2, 60), (3, 20), (4, 18), (5, 17)]),
            Some(3)
        );
        assert_eq!(suggest_elbow(&[(1, 5), (2, 0)]), None);
    }
}
