//! Feature tables: every application of a dataset turned into one labeled row.

use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::accountfeat::compute_account_features;
use crate::error::{Error, Result};
use crate::ingest::{Dataset, PonziType};
use crate::registry::{FeatureRegistry, ACCOUNT_ARITY};
use crate::sampling::LabeledMatrix;
use crate::scalar::Scalar;
use crate::tsbuild::build_panel;
use crate::tsmeasure::compress_panel;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FeatureSet {
    Acc,
    Ts,
    AccTs,
    /// Named subset of the account and time-series features, e.g. a top-k refinement.
    Custom {
        name: String,
        features: Vec<String>,
    },
}

impl FeatureSet {
    pub fn name(&self) -> &str {
        match self {
            FeatureSet::Acc => "ACC",
            FeatureSet::Ts => "TS",
            FeatureSet::AccTs => "ACC_TS",
            FeatureSet::Custom { name, .. } => name,
        }
    }

    pub fn names(&self) -> Vec<String> {
        match self {
            FeatureSet::Acc => FeatureRegistry::account().names().to_vec(),
            FeatureSet::Ts => FeatureRegistry::time_series().names().to_vec(),
            FeatureSet::AccTs => FeatureRegistry::account_and_time_series().names().to_vec(),
            FeatureSet::Custom { features, .. } => features.clone(),
        }
    }
}

impl FromStr for FeatureSet {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().replace('_', "-").as_str() {
            "acc" => Ok(FeatureSet::Acc),
            "ts" => Ok(FeatureSet::Ts),
            "acc-ts" => Ok(FeatureSet::AccTs),
            _ => Err(Error::invalid(format!(
                "unknown feature set {s:?} (expected acc, ts or acc-ts)"
            ))),
        }
    }
}

impl fmt::Display for FeatureSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// All 545 features of every application at one interval length.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureTable<F> {
    pub interval_hours: u32,
    pub matrix: LabeledMatrix<F>,
    /// Scheme type of each ponzi row, aligned with the matrix rows.
    pub ponzi_types: Vec<Option<PonziType>>,
}

impl<F: Scalar> FeatureTable<F> {
    pub fn build(dataset: &Dataset, interval_hours: u32) -> Result<Self> {
        let rows = dataset
            .apps
            .par_iter()
            .map(|app| -> Result<Vec<F>> {
                let mut row = compute_account_features::<F>(app).values;
                let panel = build_panel::<F>(app, interval_hours)?;
                row.extend(compress_panel(&panel, panel.spec.seasonal_period()).values);
                Ok(row)
            })
            .collect::<Result<Vec<_>>>()?;
        debug_assert!(rows.iter().all(|r| r.len() > ACCOUNT_ARITY));
        let matrix = LabeledMatrix::new(
            FeatureRegistry::account_and_time_series().names().to_vec(),
            dataset.apps.iter().map(|a| a.address.clone()).collect(),
            rows,
            dataset.apps.iter().map(|a| a.label).collect(),
        )?;
        Ok(FeatureTable {
            interval_hours,
            matrix,
            ponzi_types: dataset.apps.iter().map(|a| a.ponzi_type).collect(),
        })
    }

    pub fn select(&self, set: &FeatureSet) -> Result<LabeledMatrix<F>> {
        match set {
            FeatureSet::AccTs => Ok(self.matrix.clone()),
            other => self.matrix.select_named_columns(&other.names()),
        }
    }
}
