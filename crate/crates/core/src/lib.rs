//! Crash-avoidance recommendation over categorical traffic events: a
//! field-aware factorization machine scores cases, the near-crash cases of
//! the full event space form a case base, and a retrieve/reuse/revise/retain
//! loop recommends evasive maneuvers with per-driver personalization.

pub mod augment;
pub mod casebase;
pub mod cbr;
pub mod config;
pub mod correlation;
pub mod cushion;
pub mod dataset;
pub mod error;
pub mod ffm;
pub mod fsutil;
pub mod ingest;
pub mod kmodes;
pub mod pipeline;
pub mod schema;
pub mod synth;

pub use error::{Error, Result};
pub use schema::{default_schema, EventCase, EventDataset, Premise, Solution, VariableSchema};
