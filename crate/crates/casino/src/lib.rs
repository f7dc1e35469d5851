//! Event popularity prediction for event-based social networks.
//!
//! The pipeline ingests a city's users, groups, events and RSVPs, derives
//! contextual features (spatial, group, temporal, semantic), builds a
//! group-differentiated social influence model over per-event RSVP DAGs,
//! and predicts relative event popularity with a regression tree plus a
//! least-squares residual influence model.
//!
//! Entry points:
//! - [`data::Dataset`] for ingestion, validation and chronological splits
//! - [`pipeline::train`] / [`pipeline::ModelContext`] for end-to-end runs
//! - [`synth::generate`] for deterministic synthetic datasets with planted
//!   ground truth

pub mod bfgs;
pub mod data;
pub mod group;
pub mod influence;
pub mod pipeline;
pub mod predictor;
pub mod semantic;
pub mod spatial;
pub mod synth;
pub mod temporal;
pub mod tree;

use thiserror::Error;

/// Errors produced across the pipeline.
#[derive(Debug, Error)]
pub enum Error {
    #[error("parse error in {path} line {line}: {message}")]
    Parse {
        path: String,
        line: usize,
        message: String,
    },

    #[error("validation failed: {0}")]
    Validation(String),

    #[error("unknown category: {0}")]
    UnknownCategory(String),

    #[error("missing artifact: {0}")]
    MissingArtifact(String),

    #[error("empty input: {0}")]
    EmptyInput(String),

    #[error("configuration error: {0}")]
    Config(String),

    #[error("numeric failure: {0}")]
    Numeric(String),

    #[error("artifact schema version mismatch: expected {expected}, found {found}")]
    SchemaMismatch { expected: u32, found: u32 },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
