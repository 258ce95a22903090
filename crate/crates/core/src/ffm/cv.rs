use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use super::metrics::{metrics_from_scores, Metrics};
use super::{ffm_train, sigmoid, Optimizer, TrainConfig};
use crate::error::{Error, Result};
use crate::schema::{EventDataset, CRASH};

/// Hyperparameter axes; cells are the Cartesian product in field order.
#[derive(Debug, Clone, PartialEq)]
pub struct Grid {
    pub learning_rates: Vec<f64>,
    pub lambdas: Vec<f64>,
    pub epochs: Vec<usize>,
    pub optimizers: Vec<Optimizer>,
    pub embed_dims: Vec<usize>,
}

impl Grid {
    /// The full search space: 5 × 3 × 5 × 2 × 8 = 1,200 cells.
    pub fn paper() -> Self {
        Self {
            learning_rates: vec![0.001, 0.01, 0.05, 0.1, 0.2],
            lambdas: vec![0.002, 0.02, 0.2],
            epochs: vec![100, 200, 300, 400, 500],
            optimizers: vec![Optimizer::Sgd, Optimizer::Adagrad],
            embed_dims: (3..=10).collect(),
        }
    }

    pub fn single(config: &TrainConfig) -> Self {
        Self {
            learning_rates: vec![config.learning_rate],
            lambdas: vec![config.lambda],
            epochs: vec![config.epochs],
            optimizers: vec![config.optimizer],
            embed_dims: vec![config.embed_dim],
        }
    }

    pub fn cells(&self, seed: u64) -> Vec<TrainConfig> {
        let mut out = Vec::new();
        for &learning_rate in &self.learning_rates {
            for &lambda in &self.lambdas {
                for &epochs in &self.epochs {
                    for &optimizer in &self.optimizers {
                        for &embed_dim in &self.embed_dims {
                            out.push(TrainConfig {
                                learning_rate,
                                lambda,
                                epochs,
                                optimizer,
                                embed_dim,
                                seed,
                            });
                        }
                    }
                }
            }
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CellResult {
    pub config: TrainConfig,
    /// Fold-averaged metrics.
    pub mean: Metrics,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GridResult {
    pub best: TrainConfig,
    pub cells: Vec<CellResult>,
}

/// Fold index of every row: each class is shuffled with the seeded RNG and
/// dealt round-robin across `folds`.
pub fn stratified_folds(dataset: &EventDataset, folds: usize, seed: u64) -> Result<Vec<usize>> {
    if folds < 2 {
        return Err(Error::InvalidConfig("folds must be >= 2".into()));
    }
    let labels = dataset.labels()?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut assignment = vec![0; labels.len()];
    for class in [0u8, 1u8] {
        let mut idx: Vec<usize> = (0..labels.len()).filter(|&i| labels[i] == class).collect();
        idx.shuffle(&mut rng);
        for (n, i) in idx.into_iter().enumerate() {
            assignment[i] = n % folds;
        }
    }
    for fold in 0..folds {
        for class in [0u8, 1u8] {
            let in_test = (0..labels.len()).any(|i| assignment[i] == fold && labels[i] == class);
            let in_train = (0..labels.len()).any(|i| assignment[i] != fold && labels[i] == class);
            if !in_test || !in_train {
                return Err(Error::FoldTooSmall { fold });
            }
        }
    }
    Ok(assignment)
}

fn evaluate_cell(
    dataset: &EventDataset,
    assignment: &[usize],
    folds: usize,
    config: &TrainConfig,
) -> Result<Metrics> {
    let mut sum = Metrics {
        auc: 0.0,
        acc: 0.0,
        f1: 0.0,
        threshold: 0.5,
    };
    for fold in 0..folds {
        let train: Vec<usize> = (0..dataset.len())
            .filter(|&i| assignment[i] != fold)
            .collect();
        let test: Vec<usize> = (0..dataset.len())
            .filter(|&i| assignment[i] == fold)
            .collect();
        let (model, _) = ffm_train(&dataset.subset(&train), config)?;
        let probs: Vec<f64> = test
            .iter()
            .map(|&i| sigmoid(model.score_codes(&dataset.rows[i].codes())))
            .collect();
        let positive: Vec<bool> = test
            .iter()
            .map(|&i| dataset.rows[i].e_s == Some(CRASH))
            .collect();
        let m = metrics_from_scores(&probs, &positive, 0.5);
        sum.auc += m.auc;
        sum.acc += m.acc;
        sum.f1 += m.f1;
    }
    let k = folds as f64;
    Ok(Metrics {
        auc: sum.auc / k,
        acc: sum.acc / k,
        f1: sum.f1 / k,
        threshold: 0.5,
    })
}

/// Trains every grid cell on `folds − 1` folds and scores the held-out fold.
/// The best cell has the highest mean AUC; ties prefer lower λ, then lower
/// learning rate, fewer epochs and smaller d.
pub fn cross_validate_grid(
    dataset: &EventDataset,
    grid: &Grid,
    folds: usize,
    seed: u64,
) -> Result<GridResult> {
    let cells = grid.cells(seed);
    if cells.is_empty() {
        return Err(Error::InvalidConfig("grid is empty".into()));
    }
    let assignment = stratified_folds(dataset, folds, seed)?;
    let results: Vec<CellResult> = cells
        .into_par_iter()
        .map(|config| {
            evaluate_cell(dataset, &assignment, folds, &config)
                .map(|mean| CellResult { config, mean })
        })
        .collect::<Result<_>>()?;
    let best = select_best(&results);
    Ok(GridResult {
        best,
        cells: results,
    })
}

fn select_best(cells: &[CellResult]) -> TrainConfig {
    cells
        .iter()
        .min_by(|a, b| {
            b.mean
                .auc
                .total_cmp(&a.mean.auc)
                .then(a.config.lambda.total_cmp(&b.config.lambda))
                .then(a.config.learning_rate.total_cmp(&b.config.learning_rate))
                .then(a.config.epochs.cmp(&b.config.epochs))
                .then(a.config.embed_dim.cmp(&b.config.embed_dim))
        })
        .expect("non-empty")
        .config
}

impl GridResult {
    pub fn to_csv(&self) -> String {
        let mut out = String::from("learning_rate,lambda,epochs,optimizer,embed_dim,auc,acc,f1\n");
        for c in &self.cells {
            out.push_str(&format!(
                "{},{},{},{},{},{:.6},{:.6},{:.6}\n",
                c.config.learning_rate,
                c.config.lambda,
                c.config.epochs,
                c.config.optimizer,
                c.config.embed_dim,
                c.mean.auc,
                c.mean.acc,
                c.mean.f1
            ));
        }
        out
    }
}
