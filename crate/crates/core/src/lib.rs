//! Ponzi-scheme contract detection from transaction histories.
//!
//! The pipeline: [`ingest`] parses and refines labeled transaction histories,
//! [`accountfeat`] and [`tsbuild`]/[`tsmeasure`] turn each application into 29
//! account features and 516 time-series features, [`sampling`] rebalances training
//! data, [`models`] holds the classifiers and [`eval`] runs the experiments.
//! [`synthgen`] generates labeled synthetic traces for the four scheme mechanisms.
//!
//! Numeric code is generic over [`Scalar`] (`f32` or `f64`); the aliases below fix
//! it to `f64`, which is what the command-line tool uses.

pub mod accountfeat;
pub mod error;
pub mod eval;
pub mod ingest;
pub mod models;
pub mod registry;
pub mod sampling;
pub mod scalar;
pub mod stats;
pub mod synthgen;
pub mod tsbuild;
pub mod tsmeasure;

pub use error::{Error, Result};
pub use registry::{FeatureRegistry, FeatureVector};
pub use scalar::Scalar;

pub type Real = f64;
pub type Panel = tsbuild::TimeSeriesPanel<Real>;
pub type Measures = tsmeasure::MeasureSet<Real>;
pub type Matrix = sampling::LabeledMatrix<Real>;
pub type Model = models::Model<Real>;
pub type FeatureTable = eval::FeatureTable<Real>;
