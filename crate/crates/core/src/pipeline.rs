//! Stage orchestration over on-disk artifacts.

use std::fmt::Write as _;
use std::path::Path;

use crate::augment::balance;
use crate::casebase::{
    build_casebase, casebase_to_csv, encode_cache, load_casebase_cached, personal_from_dataset,
    CaseBase, PersonalStore,
};
use crate::cbr::{self, CandidateSolution, Query, Recommendation, RetainOutcome, SimilarityIndex};
use crate::config::PipelineConfig;
use crate::dataset::{events_to_bytes, load_dataset};
use crate::error::{Error, Result};
use crate::ffm::{evaluate, ffm_train, load_model, save_model, FfmModel, Metrics};
use crate::fsutil::{self, write_atomic};
use crate::ingest::{detect_format, read_raw_events, transcribe, InputFormat, RawEvent};
use crate::kmodes::{
    kmodes_fit, load_cluster_model, save_cluster_model, CategoricalPoint, ClusterModel,
};
use crate::schema::{default_schema, EventCase, EventDataset, VariableSchema};
use crate::synth::synth_generate;

/// Schema whose `r_c` and `d_c` cardinalities follow the configured cluster
/// counts.
pub fn schema_for(cfg: &PipelineConfig) -> Result<VariableSchema> {
    let mut cards = default_schema().case_cardinalities();
    let k = |v: usize, name: &str| {
        u8::try_from(v)
            .ok()
            .filter(|&k| k >= 1)
            .ok_or_else(|| Error::InvalidConfig(format!("{name} must be in 1..=255")))
    };
    cards[5] = k(cfg.cluster.road_k, "cluster.road_k")?;
    cards[6] = k(cfg.cluster.context_k, "cluster.context_k")?;
    VariableSchema::with_case_cardinalities(cards)
}

pub(crate) fn tagged<T>(stage: &'static str, r: Result<T>) -> Result<T> {
    r.map_err(|e| Error::Stage {
        stage,
        source: Box::new(e),
    })
}

pub fn road_points(raw: &[RawEvent]) -> Vec<CategoricalPoint> {
    raw.iter().map(RawEvent::road_point).collect()
}

pub fn context_points(raw: &[RawEvent]) -> Vec<CategoricalPoint> {
    raw.iter().map(RawEvent::context_point).collect()
}

/// Fits both block clusterings and writes their model files.
pub fn fit_clusters(
    raw: &[RawEvent],
    cfg: &PipelineConfig,
) -> Result<(ClusterModel, ClusterModel)> {
    let road = kmodes_fit(
        &road_points(raw),
        cfg.cluster.road_k,
        cfg.seed,
        cfg.cluster.restarts,
    )?;
    let context = kmodes_fit(
        &context_points(raw),
        cfg.cluster.context_k,
        cfg.seed,
        cfg.cluster.restarts,
    )?;
    save_cluster_model(&road, &cfg.paths.road_clusters)?;
    save_cluster_model(&context, &cfg.paths.context_clusters)?;
    Ok(((&road).into(), (&context).into()))
}

/// Saved cluster models, or freshly fitted ones when either file is absent.
pub fn cluster_models(
    raw: &[RawEvent],
    cfg: &PipelineConfig,
) -> Result<(ClusterModel, ClusterModel)> {
    if cfg.paths.road_clusters.exists() && cfg.paths.context_clusters.exists() {
        Ok((
            load_cluster_model(&cfg.paths.road_clusters)?,
            load_cluster_model(&cfg.paths.context_clusters)?,
        ))
    } else {
        fit_clusters(raw, cfg)
    }
}

/// Coded or raw records from `input`, or synthetic data when there is none.
pub fn ingest(cfg: &PipelineConfig, input: Option<&Path>) -> Result<EventDataset> {
    let schema = schema_for(cfg)?;
    let Some(path) = input else {
        let ds = synth_generate(&cfg.synth)?;
        return EventDataset::new(schema, ds.rows);
    };
    let bytes = fsutil::read(path)?;
    match detect_format(&bytes)? {
        InputFormat::Coded => crate::dataset::read_events(&bytes[..], &schema),
        InputFormat::Raw => {
            let raw = read_raw_events(&bytes[..])?;
            if raw.is_empty() {
                return Err(Error::EmptyDataset);
            }
            let (road, context) = cluster_models(&raw, cfg)?;
            transcribe(&raw, &road, &context, cfg.frame_rate, &schema)
        }
    }
}

pub fn write_casebase(cb: &CaseBase, cfg: &PipelineConfig) -> Result<()> {
    let csv = casebase_to_csv(cb);
    write_atomic(&cfg.paths.casebase, &csv)?;
    write_atomic(&cfg.paths.casebase_cache, &encode_cache(cb, &csv))
}

pub fn write_personal(events: &EventDataset, cfg: &PipelineConfig) -> Result<usize> {
    let stores = personal_from_dataset(events)?;
    let store = PersonalStore::new(&cfg.paths.personal, events.schema.clone());
    store.save_all(stores.values())?;
    Ok(stores.len())
}

#[derive(Debug, Clone, PartialEq)]
pub struct PipelineReport {
    pub events: usize,
    pub class_counts: (usize, usize),
    pub balanced_counts: (usize, usize),
    pub losses: Vec<f64>,
    pub metrics: Metrics,
    pub premise_groups: usize,
    pub cases: usize,
    pub drivers: usize,
}

impl PipelineReport {
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "events={}", self.events);
        let _ = writeln!(out, "near_crash={}", self.class_counts.0);
        let _ = writeln!(out, "crash={}", self.class_counts.1);
        let _ = writeln!(out, "balanced_near_crash={}", self.balanced_counts.0);
        let _ = writeln!(out, "balanced_crash={}", self.balanced_counts.1);
        if let (Some(first), Some(last)) = (self.losses.first(), self.losses.last()) {
            let _ = writeln!(out, "loss_first={first:.6}");
            let _ = writeln!(out, "loss_last={last:.6}");
        }
        out.push_str(&self.metrics.to_report());
        let _ = writeln!(out, "premise_groups={}", self.premise_groups);
        let _ = writeln!(out, "cases={}", self.cases);
        let _ = writeln!(out, "drivers={}", self.drivers);
        out
    }
}

/// Augment, train, evaluate on `events` and rebuild the case base and the
/// personal stores.
pub fn run_from_events(cfg: &PipelineConfig, events: &EventDataset) -> Result<PipelineReport> {
    cfg.validate()?;
    let class_counts = tagged("augment", events.class_counts())?;
    let balanced = tagged("augment", balance(events, &cfg.augment))?;
    tagged(
        "augment",
        write_atomic(&cfg.paths.balanced, &events_to_bytes(&balanced)),
    )?;
    let balanced_counts = tagged("augment", balanced.class_counts())?;

    let (model, losses) = tagged("train", ffm_train(&balanced, &cfg.train))?;
    tagged("train", save_model(&model, &cfg.paths.model))?;

    let metrics = tagged("evaluate", evaluate(&model, events, 0.5))?;

    let cb = tagged("build-casebase", build_casebase(&model, &events.schema))?;
    tagged("build-casebase", write_casebase(&cb, cfg))?;
    let drivers = tagged("build-casebase", write_personal(events, cfg))?;

    let report = PipelineReport {
        events: events.len(),
        class_counts,
        balanced_counts,
        losses,
        metrics,
        premise_groups: cb.groups().len(),
        cases: cb.case_count(),
        drivers,
    };
    tagged(
        "evaluate",
        write_atomic(&cfg.paths.metrics, report.to_text().as_bytes()),
    )?;
    Ok(report)
}

/// ingest → augment → train → evaluate → build-casebase.
pub fn run_pipeline(cfg: &PipelineConfig) -> Result<PipelineReport> {
    tagged("config", cfg.validate())?;
    let events = tagged("ingest", ingest(cfg, cfg.paths.input.as_deref()))?;
    tagged(
        "ingest",
        write_atomic(&cfg.paths.events, &events_to_bytes(&events)),
    )?;
    run_from_events(cfg, &events)
}

/// Re-runs augment and train on the grown event dataset and rebuilds the
/// case base.
pub fn retrain(cfg: &PipelineConfig) -> Result<PipelineReport> {
    let schema = schema_for(cfg)?;
    let events = tagged("ingest", load_dataset(&cfg.paths.events, &schema))?;
    run_from_events(cfg, &events)
}

pub fn load_casebase_for(cfg: &PipelineConfig) -> Result<CaseBase> {
    load_casebase_cached(
        &cfg.paths.casebase,
        &cfg.paths.casebase_cache,
        &schema_for(cfg)?,
    )
}

pub fn load_model_for(cfg: &PipelineConfig) -> Result<FfmModel> {
    let model = load_model(&cfg.paths.model)?;
    if model.schema().case_cardinalities() != schema_for(cfg)?.case_cardinalities() {
        return Err(Error::InvalidSchema(format!(
            "model {} does not match the configured schema",
            cfg.paths.model.display()
        )));
    }
    Ok(model)
}

pub fn query(cfg: &PipelineConfig, q: &Query) -> Result<(Vec<CandidateSolution>, Recommendation)> {
    let model = load_model_for(cfg)?;
    let cb = load_casebase_for(cfg)?;
    let pcb = match &q.driver_id {
        Some(id) => Some(PersonalStore::new(&cfg.paths.personal, cb.schema().clone()).load(id)?),
        None => None,
    };
    cbr::recommend(&cb, &SimilarityIndex::new(&model), pcb.as_ref(), q)
}

/// Retains one confirmed case and persists the dataset, the case base and
/// the driver's store.
pub fn retain_case(cfg: &PipelineConfig, case: EventCase) -> Result<RetainOutcome> {
    let schema = schema_for(cfg)?;
    let driver = case
        .driver_id
        .clone()
        .ok_or_else(|| Error::InvalidConfig("retain needs a driver id".into()))?;
    let mut events = load_dataset(&cfg.paths.events, &schema)?;
    let mut cb = load_casebase_for(cfg)?;
    let store = PersonalStore::new(&cfg.paths.personal, schema);
    let mut pcb = store.load(&driver)?;
    let outcome = cbr::retain(&mut events, &mut cb, &mut pcb, case)?;
    write_atomic(&cfg.paths.events, &events_to_bytes(&events))?;
    if outcome.added_to_casebase {
        write_casebase(&cb, cfg)?;
    }
    if outcome.added_to_personal {
        store.save(&pcb)?;
    }
    Ok(outcome)
}
