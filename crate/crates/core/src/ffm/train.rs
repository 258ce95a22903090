use std::str::FromStr;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::{ffm_loss, init_with, sigmoid, signed_label, FfmModel};
use crate::error::{Error, Result};
use crate::schema::{EventDataset, NUM_CASE_VARS};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Optimizer {
    Sgd,
    Adagrad,
}

impl FromStr for Optimizer {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "sgd" => Ok(Self::Sgd),
            "adagrad" => Ok(Self::Adagrad),
            other => Err(Error::InvalidConfig(format!("unknown optimizer `{other}`"))),
        }
    }
}

impl std::fmt::Display for Optimizer {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Self::Sgd => "sgd",
            Self::Adagrad => "adagrad",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrainConfig {
    pub learning_rate: f64,
    pub lambda: f64,
    pub epochs: usize,
    pub optimizer: Optimizer,
    pub embed_dim: usize,
    pub seed: u64,
}

impl Default for TrainConfig {
    /// lr 0.05, λ 0.002, 100 epochs, AdaGrad, d = 4.
    fn default() -> Self {
        Self {
            learning_rate: 0.05,
            lambda: 0.002,
            epochs: 100,
            optimizer: Optimizer::Adagrad,
            embed_dim: 4,
            seed: 0,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if self.learning_rate <= 0.0 || !self.learning_rate.is_finite() {
            return Err(Error::InvalidConfig("learning_rate must be > 0".into()));
        }
        if self.lambda < 0.0 || !self.lambda.is_finite() {
            return Err(Error::InvalidConfig("lambda must be >= 0".into()));
        }
        if self.epochs == 0 {
            return Err(Error::InvalidConfig("epochs must be >= 1".into()));
        }
        if self.embed_dim == 0 {
            return Err(Error::InvalidConfig("embed_dim must be >= 1".into()));
        }
        Ok(())
    }
}

struct Step {
    lr: f64,
    adagrad: bool,
}

impl Step {
    #[inline]
    fn apply(&self, param: &mut f64, acc: &mut f64, g: f64) {
        if self.adagrad {
            *acc += g * g;
            *param -= self.lr * g / acc.sqrt();
        } else {
            *param -= self.lr * g;
        }
    }
}

/// Per-example stochastic training. Returns the model and the full-dataset
/// loss after every epoch.
pub fn ffm_train(dataset: &EventDataset, config: &TrainConfig) -> Result<(FfmModel, Vec<f64>)> {
    config.validate()?;
    let (near, crash) = dataset.class_counts()?;
    if near == 0 || crash == 0 {
        return Err(Error::SingleClass);
    }
    let labels = dataset.labels()?;
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut model = init_with(&dataset.schema, config.embed_dim, &mut rng)?;
    let d = config.embed_dim;
    let lambda = config.lambda;
    let step = Step {
        lr: config.learning_rate,
        adagrad: config.optimizer == Optimizer::Adagrad,
    };
    // AdaGrad accumulators start at 1.0
    let mut acc_w0 = 1.0;
    let mut acc_w = vec![1.0; model.w.len()];
    let mut acc_v = vec![1.0; model.v.len()];
    let mut ga = vec![0.0; d];
    let mut gb = vec![0.0; d];

    let codes: Vec<[u8; NUM_CASE_VARS]> = dataset.rows.iter().map(|r| r.codes()).collect();
    let mut order: Vec<usize> = (0..dataset.len()).collect();
    let mut history = Vec::with_capacity(config.epochs);
    for epoch in 0..config.epochs {
        order.shuffle(&mut rng);
        for &i in &order {
            let y = signed_label(labels[i]);
            let s = model.score_codes(&codes[i]);
            let kappa = -y * sigmoid(-y * s);
            let f = model.active_features(&codes[i]);

            step.apply(&mut model.w0, &mut acc_w0, kappa);
            for &fa in &f {
                step.apply(&mut model.w[fa], &mut acc_w[fa], kappa);
            }
            for a in 0..NUM_CASE_VARS {
                for b in (a + 1)..NUM_CASE_VARS {
                    let ia = model.latent_index(f[a], b);
                    let ib = model.latent_index(f[b], a);
                    for c in 0..d {
                        ga[c] = kappa * model.v[ib + c] + lambda * model.v[ia + c];
                        gb[c] = kappa * model.v[ia + c] + lambda * model.v[ib + c];
                    }
                    for c in 0..d {
                        step.apply(&mut model.v[ia + c], &mut acc_v[ia + c], ga[c]);
                        step.apply(&mut model.v[ib + c], &mut acc_v[ib + c], gb[c]);
                    }
                }
            }
        }
        let loss = ffm_loss(&model, dataset, lambda)?;
        if !loss.is_finite() || !model.is_finite() {
            return Err(Error::NonFiniteLoss { epoch });
        }
        history.push(loss);
    }
    Ok((model, history))
}
