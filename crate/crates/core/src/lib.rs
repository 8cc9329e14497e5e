//! Decomposition of a feature set into strongly relevant, weakly relevant and
//! irrelevant features.
//!
//! The pipeline combines a from-scratch random forest ([`forest`]), Boruta
//! all-relevant selection ([`boruta`]), shadow-feature null distributions with
//! Student-t prediction intervals ([`stats`]) and a sequential
//! decomposition step ([`decompose`]). [`synth`] and [`bench`] provide labelled
//! benchmark data and the scoring harness used to evaluate selections.

pub mod bench;
pub mod boruta;
pub mod data;
pub mod decompose;
mod error;
pub mod forest;
pub mod rng;
pub mod stats;
pub mod synth;

pub use data::{Dataset, FeatureIndexSet, Task};

pub use error::{Error, Result};
pub use forest::{Forest, ForestParams, ImportanceVector, Scoring};
pub use stats::{prediction_interval, t_quantile, IntervalStatistic};

pub use decompose::{decompose, PipelineConfig, RelevanceReport};
pub use synth::GroundTruth;
