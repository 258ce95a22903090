//! Synthetic event data with a planted crash rule.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::ingest::{RawEvent, CONTEXT_DIM, ROAD_DIM};
use crate::kmodes::{CONTEXT_CARDINALITIES, ROAD_CARDINALITIES};
use crate::schema::{default_schema, EventCase, EventDataset, CRASH, NEAR_CRASH, NUM_CASE_VARS};

pub const SYNTH_DRIVERS: usize = 20;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SynthSpec {
    pub n_rows: usize,
    /// Probability that a row's label is flipped.
    pub noise: f64,
    pub seed: u64,
}

impl Default for SynthSpec {
    fn default() -> Self {
        Self {
            n_rows: 2000,
            noise: 0.05,
            seed: 0,
        }
    }
}

/// Crash iff the reaction is code 5, or the cushion bin is 0 while the
/// engagement is code 4.
pub fn planted_label(case: &EventCase) -> u8 {
    if case.d_r == 5 || (case.c_t == 0 && case.p_e == 4) {
        CRASH
    } else {
        NEAR_CRASH
    }
}

pub fn driver_name(i: usize) -> String {
    format!("driver{:02}", i % SYNTH_DRIVERS)
}

fn check(spec: &SynthSpec) -> Result<()> {
    if !(0.0..0.5).contains(&spec.noise) {
        return Err(Error::InvalidConfig(format!(
            "noise must be in [0, 0.5), got {}",
            spec.noise
        )));
    }
    if spec.n_rows == 0 {
        return Err(Error::EmptyInput);
    }
    Ok(())
}

pub fn synth_generate(spec: &SynthSpec) -> Result<EventDataset> {
    check(spec)?;
    let schema = default_schema();
    let cards = schema.case_cardinalities();
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let mut rows = Vec::with_capacity(spec.n_rows);
    for i in 0..spec.n_rows {
        let mut codes = [0u8; NUM_CASE_VARS];
        for (c, &card) in codes.iter_mut().zip(&cards) {
            *c = rng.gen_range(0..card);
        }
        let case = EventCase::from_codes(codes);
        let mut label = planted_label(&case);
        if rng.gen_bool(spec.noise) {
            label = 1 - label;
        }
        rows.push(case.with_label(label).with_driver(driver_name(i)));
    }
    EventDataset::new(schema, rows)
}

// frame-count ranges that land in each cushion bin at 7.5 fps
const BIN_FRAMES: [(u64, u64); 4] = [(0, 52), (53, 104), (105, 149), (150, 300)];

/// Block-level records under the same planted rule; road and context blocks
/// are uniform and carry no signal.
pub fn synth_generate_raw(spec: &SynthSpec) -> Result<Vec<RawEvent>> {
    check(spec)?;
    let cards = default_schema().case_cardinalities();
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let mut out = Vec::with_capacity(spec.n_rows);
    for i in 0..spec.n_rows {
        let e_n = rng.gen_range(0..cards[0]);
        let p_e = rng.gen_range(0..cards[1]);
        let p_m = rng.gen_range(0..cards[2]);
        let d_r = rng.gen_range(0..cards[3]);
        let c_t = rng.gen_range(0..cards[4]);
        let (lo, hi) = BIN_FRAMES[c_t as usize];
        let f_start = rng.gen_range(0..10_000u64);
        let f_end = f_start + rng.gen_range(lo..=hi);
        let mut road = [0u8; ROAD_DIM];
        for (r, &card) in road.iter_mut().zip(&ROAD_CARDINALITIES) {
            *r = rng.gen_range(0..card);
        }
        let mut context = [0u8; CONTEXT_DIM];
        for (c, &card) in context.iter_mut().zip(&CONTEXT_CARDINALITIES) {
            *c = rng.gen_range(0..card);
        }
        let mut label = planted_label(&EventCase::from_codes([e_n, p_e, p_m, d_r, c_t, 0, 0]));
        if rng.gen_bool(spec.noise) {
            label = 1 - label;
        }
        out.push(RawEvent {
            e_s: Some(label),
            e_n,
            p_e,
            p_m,
            d_r,
            f_start,
            f_end,
            road,
            context,
            driver_id: Some(driver_name(i)),
        });
    }
    Ok(out)
}
