//! Post-model tooling for multi-view, long-tailed multi-label classification.
//!
//! The pipeline works on prediction tables rather than images:
//!
//! * [`ingest`] reads and writes the CSV tables and groups image rows by study.
//! * [`aggregate`] averages images within a view, combines the frontal and
//!   lateral means with configurable weights, and ensembles several models.
//! * [`metrics`] computes per-class average precision and macro mAP, skipping
//!   classes with no positives.
//! * [`asl`] is the asymmetric loss with exact gradients and a
//!   finite-difference check.
//! * [`synth`] generates seeded long-tailed data for end-to-end tests.

pub mod aggregate;
pub mod asl;
pub mod error;
pub mod ingest;
pub mod metrics;
pub mod model;
mod numeric;
pub mod ratio;
pub mod synth;

pub use aggregate::{
    aggregate_all, aggregate_all_pooled, aggregate_study, aggregate_study_pooled, combine_views, ensemble,
    view_mean, EnsembleConfig, StudyPrediction,
};
pub use asl::{asl_forward, asl_gradient, AslParams, AsymmetricLoss};
pub use error::{Error, Result};
pub use ingest::{
    group_by_study, read_labels, read_predictions, read_study_predictions, write_study_predictions,
};
pub use metrics::{average_precision, evaluate, macro_map};
pub use model::{
    validate_prediction_set, AggregationConfig, ClassAp, ClassResult, EvalReport, LabelTable,
    MissingViewPolicy, PredictionRecord, PredictionSet, StudyGroup, ViewKind,
};
pub use ratio::PpRatio;
pub use synth::{generate, generate_ensemble, SynthConfig};
