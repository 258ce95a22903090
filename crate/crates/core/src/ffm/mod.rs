//! Field-aware factorization machine over one-hot categorical events.
//!
//! Each of the seven case variables is a field; each `(field, code)` pair is
//! a feature. A case activates exactly one feature per field, so the score is
//!
//! ```text
//! f(x) = w0 + Σ_a w[f_a] + Σ_{a<b} <v[f_a, b], v[f_b, a]>
//! ```
//!
//! where `f_a` is the active feature of field `a` and `v[f, g]` is the latent
//! vector feature `f` uses when interacting with field `g`.

mod cv;
mod io;
mod metrics;
mod train;

pub use cv::{cross_validate_grid, stratified_folds, CellResult, Grid, GridResult};
pub use io::{load_model, model_from_str, model_to_string, save_model, MODEL_MAGIC};
pub use metrics::{evaluate, roc_auc, Metrics};
pub use train::{ffm_train, Optimizer, TrainConfig};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::schema::{ensure_valid, EventCase, EventDataset, VariableSchema, CRASH, NUM_CASE_VARS};

#[derive(Debug, Clone, PartialEq)]
pub struct FfmModel {
    schema: VariableSchema,
    embed_dim: usize,
    offsets: [usize; NUM_CASE_VARS],
    pub w0: f64,
    /// One weight per feature.
    pub w: Vec<f64>,
    /// Latent components, laid out `[feature][field][component]`.
    pub v: Vec<f64>,
}

impl FfmModel {
    /// All-zero model.
    pub fn zeros(schema: &VariableSchema, embed_dim: usize) -> Self {
        let n = schema.num_features();
        Self {
            schema: schema.clone(),
            embed_dim,
            offsets: schema.feature_offsets(),
            w0: 0.0,
            w: vec![0.0; n],
            v: vec![0.0; n * NUM_CASE_VARS * embed_dim],
        }
    }

    pub fn schema(&self) -> &VariableSchema {
        &self.schema
    }

    pub fn embed_dim(&self) -> usize {
        self.embed_dim
    }

    pub fn num_features(&self) -> usize {
        self.w.len()
    }

    pub fn num_fields(&self) -> usize {
        NUM_CASE_VARS
    }

    /// Feature index of `(field, code)`.
    pub fn feature(&self, field: usize, code: u8) -> usize {
        self.offsets[field] + code as usize
    }

    /// Field that owns a feature.
    pub fn field_of(&self, feature: usize) -> usize {
        self.offsets
            .iter()
            .rposition(|&o| o <= feature)
            .expect("offset 0 exists")
    }

    pub fn latent_index(&self, feature: usize, field: usize) -> usize {
        (feature * NUM_CASE_VARS + field) * self.embed_dim
    }

    pub fn latent(&self, feature: usize, field: usize) -> &[f64] {
        let i = self.latent_index(feature, field);
        &self.v[i..i + self.embed_dim]
    }

    pub fn latent_mut(&mut self, feature: usize, field: usize) -> &mut [f64] {
        let i = self.latent_index(feature, field);
        let d = self.embed_dim;
        &mut self.v[i..i + d]
    }

    pub(crate) fn active_features(&self, codes: &[u8; NUM_CASE_VARS]) -> [usize; NUM_CASE_VARS] {
        let mut f = [0; NUM_CASE_VARS];
        for (a, slot) in f.iter_mut().enumerate() {
            *slot = self.offsets[a] + codes[a] as usize;
        }
        f
    }

    /// Raw score of already-validated codes.
    pub fn score_codes(&self, codes: &[u8; NUM_CASE_VARS]) -> f64 {
        let f = self.active_features(codes);
        let mut s = self.w0;
        for &fa in &f {
            s += self.w[fa];
        }
        for a in 0..NUM_CASE_VARS {
            for b in (a + 1)..NUM_CASE_VARS {
                s += dot(self.latent(f[a], b), self.latent(f[b], a));
            }
        }
        s
    }

    pub fn is_finite(&self) -> bool {
        self.w0.is_finite() && self.w.iter().chain(&self.v).all(|x| x.is_finite())
    }
}

#[inline]
pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

/// `log(1 + exp(z))` without overflow.
pub(crate) fn softplus(z: f64) -> f64 {
    if z > 0.0 {
        z + (-z).exp().ln_1p()
    } else {
        z.exp().ln_1p()
    }
}

/// Zero biases and weights; latent components uniform in `[0, 1/sqrt(d))`.
pub fn ffm_init(schema: &VariableSchema, embed_dim: usize, seed: u64) -> Result<FfmModel> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    init_with(schema, embed_dim, &mut rng)
}

pub(crate) fn init_with(
    schema: &VariableSchema,
    embed_dim: usize,
    rng: &mut ChaCha8Rng,
) -> Result<FfmModel> {
    if embed_dim == 0 {
        return Err(Error::InvalidConfig("embed_dim must be at least 1".into()));
    }
    let mut m = FfmModel::zeros(schema, embed_dim);
    let scale = 1.0 / (embed_dim as f64).sqrt();
    for x in m.v.iter_mut() {
        *x = rng.gen::<f64>() * scale;
    }
    Ok(m)
}

pub fn ffm_raw_score(model: &FfmModel, case: &EventCase) -> Result<f64> {
    let mut unlabeled = case.clone();
    unlabeled.e_s = None;
    ensure_valid(&unlabeled, &model.schema)?;
    Ok(model.score_codes(&case.codes()))
}

/// Crash probability.
pub fn ffm_predict_proba(model: &FfmModel, case: &EventCase) -> Result<f64> {
    ffm_raw_score(model, case).map(sigmoid)
}

/// `+1` for crash, `-1` for near-crash.
pub(crate) fn signed_label(e_s: u8) -> f64 {
    if e_s == CRASH {
        1.0
    } else {
        -1.0
    }
}

/// `(λ/2)·Σ v² + Σ_i log(1 + exp(−y_i·f(x_i)))`.
pub fn ffm_loss(model: &FfmModel, dataset: &EventDataset, lambda: f64) -> Result<f64> {
    let labels = dataset.labels()?;
    let data: f64 = dataset
        .rows
        .iter()
        .zip(&labels)
        .map(|(r, &l)| softplus(-signed_label(l) * model.score_codes(&r.codes())))
        .sum();
    Ok(0.5 * lambda * model.v.iter().map(|x| x * x).sum::<f64>() + data)
}

/// Gradient of [`ffm_loss`] with respect to every parameter.
#[derive(Debug, Clone, PartialEq)]
pub struct FfmGradient {
    pub w0: f64,
    pub w: Vec<f64>,
    pub v: Vec<f64>,
}

pub fn ffm_loss_gradient(
    model: &FfmModel,
    dataset: &EventDataset,
    lambda: f64,
) -> Result<FfmGradient> {
    let labels = dataset.labels()?;
    let mut g = FfmGradient {
        w0: 0.0,
        w: vec![0.0; model.w.len()],
        v: model.v.iter().map(|x| lambda * x).collect(),
    };
    let d = model.embed_dim;
    for (r, &l) in dataset.rows.iter().zip(&labels) {
        let codes = r.codes();
        let y = signed_label(l);
        let s = model.score_codes(&codes);
        // d/ds log(1+exp(-y s)) = -y·σ(-y s)
        let ds = -y * sigmoid(-y * s);
        g.w0 += ds;
        let f = model.active_features(&codes);
        for &fa in &f {
            g.w[fa] += ds;
        }
        for a in 0..NUM_CASE_VARS {
            for b in (a + 1)..NUM_CASE_VARS {
                let ia = model.latent_index(f[a], b);
                let ib = model.latent_index(f[b], a);
                for c in 0..d {
                    g.v[ia + c] += ds * model.v[ib + c];
                    g.v[ib + c] += ds * model.v[ia + c];
                }
            }
        }
    }
    Ok(g)
}
