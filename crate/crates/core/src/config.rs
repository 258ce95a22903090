//! `key = value` configuration with dotted keys.
//!
//! ```text
//! seed = 7
//! paths.events = work/events.csv
//! train.epochs = 100
//! ```
//!
//! Blank lines and `#` comments are ignored. Relative paths resolve against
//! the directory of the config file.

use std::path::{Path, PathBuf};

use crate::augment::{AugmentConfig, AugmentMethod};
use crate::cbr::{DEFAULT_TAU, DEFAULT_TOP_K};
use crate::cushion::DEFAULT_FRAME_RATE;
use crate::error::{Error, Result};
use crate::ffm::{Optimizer, TrainConfig};
use crate::fsutil;
use crate::kmodes::{DEFAULT_CONTEXT_K, DEFAULT_RESTARTS, DEFAULT_ROAD_K};
use crate::synth::SynthSpec;

#[derive(Debug, Clone, PartialEq)]
pub struct Paths {
    /// Source records for ingestion; synthetic data when unset.
    pub input: Option<PathBuf>,
    pub events: PathBuf,
    pub balanced: PathBuf,
    pub model: PathBuf,
    pub casebase: PathBuf,
    pub casebase_cache: PathBuf,
    pub personal: PathBuf,
    pub road_clusters: PathBuf,
    pub context_clusters: PathBuf,
    pub metrics: PathBuf,
}

impl Paths {
    pub fn under(dir: &Path) -> Self {
        Self {
            input: None,
            events: dir.join("events.csv"),
            balanced: dir.join("balanced.csv"),
            model: dir.join("model.ffm"),
            casebase: dir.join("casebase.csv"),
            casebase_cache: dir.join("casebase.rcb"),
            personal: dir.join("personal"),
            road_clusters: dir.join("road.kmodes"),
            context_clusters: dir.join("context.kmodes"),
            metrics: dir.join("metrics.txt"),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ClusterSettings {
    pub road_k: usize,
    pub context_k: usize,
    pub restarts: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PipelineConfig {
    pub paths: Paths,
    pub train: TrainConfig,
    pub augment: AugmentConfig,
    pub tau: f64,
    pub top_k: usize,
    pub synth: SynthSpec,
    pub cluster: ClusterSettings,
    pub frame_rate: f64,
    pub seed: u64,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        let mut c = Self {
            paths: Paths::under(Path::new("work")),
            train: TrainConfig::default(),
            augment: AugmentConfig::default(),
            tau: DEFAULT_TAU,
            top_k: DEFAULT_TOP_K,
            synth: SynthSpec::default(),
            cluster: ClusterSettings {
                road_k: DEFAULT_ROAD_K,
                context_k: DEFAULT_CONTEXT_K,
                restarts: DEFAULT_RESTARTS,
            },
            frame_rate: DEFAULT_FRAME_RATE,
            seed: 0,
        };
        c.set_seed(0);
        c
    }
}

fn bad(line: usize, msg: impl std::fmt::Display) -> Error {
    Error::InvalidConfig(format!("line {line}: {msg}"))
}

fn num<T: std::str::FromStr>(v: &str, key: &str, line: usize) -> Result<T> {
    v.parse()
        .map_err(|_| bad(line, format!("{key}: cannot parse `{v}`")))
}

impl PipelineConfig {
    /// Sets the global seed and hands it to every stochastic stage.
    pub fn set_seed(&mut self, seed: u64) {
        self.seed = seed;
        self.train.seed = seed;
        self.augment.seed = seed;
        self.synth.seed = seed;
    }

    pub fn parse(text: &str, base: &Path) -> Result<Self> {
        let mut c = Self {
            paths: Paths::under(&base.join("work")),
            ..Self::default()
        };
        let mut seed = None;
        for (i, raw) in text.lines().enumerate() {
            let line = i + 1;
            let body = raw.split('#').next().unwrap_or("").trim();
            if body.is_empty() {
                continue;
            }
            let (key, value) = body
                .split_once('=')
                .ok_or_else(|| bad(line, format!("expected `key = value`, got `{body}`")))?;
            let (key, value) = (key.trim(), value.trim());
            let path = || base.join(value);
            match key {
                "seed" => seed = Some(num(value, key, line)?),
                "paths.dir" => {
                    let input = c.paths.input.take();
                    c.paths = Paths::under(&path());
                    c.paths.input = input;
                }
                "paths.input" => c.paths.input = (!value.is_empty()).then(path),
                "paths.events" => c.paths.events = path(),
                "paths.balanced" => c.paths.balanced = path(),
                "paths.model" => c.paths.model = path(),
                "paths.casebase" => c.paths.casebase = path(),
                "paths.casebase_cache" => c.paths.casebase_cache = path(),
                "paths.personal" => c.paths.personal = path(),
                "paths.road_clusters" => c.paths.road_clusters = path(),
                "paths.context_clusters" => c.paths.context_clusters = path(),
                "paths.metrics" => c.paths.metrics = path(),
                "train.learning_rate" => c.train.learning_rate = num(value, key, line)?,
                "train.lambda" => c.train.lambda = num(value, key, line)?,
                "train.epochs" => c.train.epochs = num(value, key, line)?,
                "train.optimizer" => {
                    c.train.optimizer = value.parse::<Optimizer>().map_err(|e| bad(line, e))?
                }
                "train.embed_dim" => c.train.embed_dim = num(value, key, line)?,
                "augment.method" => {
                    c.augment.method = value.parse::<AugmentMethod>().map_err(|e| bad(line, e))?
                }
                "augment.k_neighbors" => c.augment.k_neighbors = num(value, key, line)?,
                "query.tau" => c.tau = num(value, key, line)?,
                "query.top_k" => c.top_k = num(value, key, line)?,
                "synth.n_rows" => c.synth.n_rows = num(value, key, line)?,
                "synth.noise" => c.synth.noise = num(value, key, line)?,
                "cluster.road_k" => c.cluster.road_k = num(value, key, line)?,
                "cluster.context_k" => c.cluster.context_k = num(value, key, line)?,
                "cluster.restarts" => c.cluster.restarts = num(value, key, line)?,
                "ingest.frame_rate" => c.frame_rate = num(value, key, line)?,
                _ => return Err(bad(line, format!("unknown key `{key}`"))),
            }
        }
        c.set_seed(seed.unwrap_or(0));
        c.validate()?;
        Ok(c)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let bytes = fsutil::read(path)?;
        let text = String::from_utf8(bytes)
            .map_err(|_| Error::InvalidConfig("config is not UTF-8".into()))?;
        let base = path.parent().unwrap_or(Path::new(""));
        Self::parse(&text, base)
    }

    pub fn validate(&self) -> Result<()> {
        self.train.validate()?;
        if self.augment.k_neighbors == 0 {
            return Err(Error::InvalidConfig(
                "augment.k_neighbors must be >= 1".into(),
            ));
        }
        if !(self.tau > 0.0 && self.tau <= 1.0) {
            return Err(Error::InvalidConfig(format!(
                "query.tau must be in (0, 1], got {}",
                self.tau
            )));
        }
        if self.top_k == 0 {
            return Err(Error::InvalidConfig("query.top_k must be >= 1".into()));
        }
        if !(self.frame_rate > 0.0 && self.frame_rate.is_finite()) {
            return Err(Error::InvalidConfig(
                "ingest.frame_rate must be positive".into(),
            ));
        }
        if self.cluster.restarts == 0 {
            return Err(Error::InvalidConfig("cluster.restarts must be >= 1".into()));
        }
        Ok(())
    }
}
