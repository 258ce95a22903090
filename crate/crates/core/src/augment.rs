//! Class balancing by oversampling the minority severity class.
//!
//! `Smoten` synthesizes categorical rows from a minority seed row and its
//! nearest minority neighbors; `Random` duplicates minority rows.

use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::schema::{EventCase, EventDataset, CRASH, NEAR_CRASH, NUM_CASE_VARS};

pub const DEFAULT_K_NEIGHBORS: usize = 5;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AugmentMethod {
    Smoten,
    Random,
}

impl FromStr for AugmentMethod {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "smoten" => Ok(Self::Smoten),
            "random" => Ok(Self::Random),
            other => Err(Error::InvalidConfig(format!(
                "unknown augment method `{other}`"
            ))),
        }
    }
}

impl std::fmt::Display for AugmentMethod {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Self::Smoten => "smoten",
            Self::Random => "random",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct AugmentConfig {
    pub method: AugmentMethod,
    pub k_neighbors: usize,
    pub seed: u64,
}

impl Default for AugmentConfig {
    fn default() -> Self {
        Self {
            method: AugmentMethod::Smoten,
            k_neighbors: DEFAULT_K_NEIGHBORS,
            seed: 0,
        }
    }
}

fn distance(a: &EventCase, b: &EventCase) -> usize {
    a.codes()
        .iter()
        .zip(b.codes().iter())
        .filter(|(x, y)| x != y)
        .count()
}

/// The `k` rows sharing `row_index`'s label that are closest to it under
/// matching dissimilarity over the seven case variables, ordered by
/// `(distance, index)`. The row itself is excluded.
pub fn nearest_minority_neighbors(
    dataset: &EventDataset,
    row_index: usize,
    k: usize,
) -> Result<Vec<usize>> {
    let labels = dataset.labels()?;
    let seed = &dataset.rows[row_index];
    let class = labels[row_index];
    let mut others: Vec<(usize, usize)> = labels
        .iter()
        .enumerate()
        .filter(|&(i, &l)| l == class && i != row_index)
        .map(|(i, _)| (distance(seed, &dataset.rows[i]), i))
        .collect();
    if k == 0 || k > others.len() {
        return Err(Error::KTooLarge {
            k,
            limit: others.len(),
        });
    }
    others.sort_unstable();
    Ok(others.into_iter().take(k).map(|(_, i)| i).collect())
}

/// Per-position plurality over the seed and its neighbors. A tie that
/// includes the seed's code keeps it; other ties go to the lowest code.
fn plurality(seed: &EventCase, neighbors: &[&EventCase]) -> [u8; NUM_CASE_VARS] {
    let seed_codes = seed.codes();
    let mut out = seed_codes;
    for (pos, slot) in out.iter_mut().enumerate() {
        let mut counts = [0usize; 256];
        counts[seed_codes[pos] as usize] += 1;
        for n in neighbors {
            counts[n.codes()[pos] as usize] += 1;
        }
        let max = *counts.iter().max().expect("non-empty");
        *slot = if counts[seed_codes[pos] as usize] == max {
            seed_codes[pos]
        } else {
            counts.iter().position(|&c| c == max).expect("max exists") as u8
        };
    }
    out
}

/// Appends synthetic minority rows until both classes have equal counts.
/// Original rows are kept unchanged, in order, as a prefix of the output.
pub fn balance(dataset: &EventDataset, config: &AugmentConfig) -> Result<EventDataset> {
    let labels = dataset.labels()?;
    let crash: Vec<usize> = (0..labels.len()).filter(|&i| labels[i] == CRASH).collect();
    let near: Vec<usize> = (0..labels.len())
        .filter(|&i| labels[i] == NEAR_CRASH)
        .collect();
    if crash.is_empty() || near.is_empty() {
        return Err(Error::SingleClass);
    }
    let (minority, needed, label) = if crash.len() < near.len() {
        let diff = near.len() - crash.len();
        (crash, diff, CRASH)
    } else {
        let diff = crash.len() - near.len();
        (near, diff, NEAR_CRASH)
    };
    let mut out = dataset.clone();
    if needed == 0 {
        return Ok(out);
    }
    if config.method == AugmentMethod::Smoten
        && (config.k_neighbors == 0 || config.k_neighbors >= minority.len())
    {
        return Err(Error::KTooLarge {
            k: config.k_neighbors,
            limit: minority.len().saturating_sub(1),
        });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut neighbor_cache: Vec<Option<Vec<usize>>> = vec![None; dataset.len()];
    out.rows.reserve(needed);
    for _ in 0..needed {
        let seed_idx = minority[rng.gen_range(0..minority.len())];
        let seed = &dataset.rows[seed_idx];
        let row = match config.method {
            AugmentMethod::Random => seed.clone(),
            AugmentMethod::Smoten => {
                if neighbor_cache[seed_idx].is_none() {
                    neighbor_cache[seed_idx] = Some(nearest_minority_neighbors(
                        dataset,
                        seed_idx,
                        config.k_neighbors,
                    )?);
                }
                let neighbors: Vec<&EventCase> = neighbor_cache[seed_idx]
                    .as_ref()
                    .expect("filled above")
                    .iter()
                    .map(|&i| &dataset.rows[i])
                    .collect();
                EventCase::from_codes(plurality(seed, &neighbors)).with_label(label)
            }
        };
        out.rows.push(row);
    }
    Ok(out)
}
