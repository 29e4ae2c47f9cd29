//! Canonical feature names and column order.

use std::collections::HashSet;

use serde::{Deserialize, Serialize};

use crate::accountfeat::ACCOUNT_FEATURES;
use crate::error::{Error, Result};
use crate::tsbuild::SERIES_NAMES;
use crate::tsmeasure::MEASURE_NAMES;

/// Number of account features.
pub const ACCOUNT_ARITY: usize = 29;
/// Number of per-interval series.
pub const SERIES_COUNT: usize = 43;
/// Number of statistical measures applied to each series.
pub const MEASURE_COUNT: usize = 12;
/// Number of time-series features.
pub const TS_ARITY: usize = SERIES_COUNT * MEASURE_COUNT;

/// Ordered, unique feature names. Order is the column order everywhere downstream.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FeatureRegistry {
    names: Vec<String>,
}

impl FeatureRegistry {
    pub fn new(names: Vec<String>) -> Result<Self> {
        let mut seen = HashSet::with_capacity(names.len());
        for n in &names {
            if !seen.insert(n.as_str()) {
                return Err(Error::invalid(format!("duplicate feature name {n}")));
            }
        }
        Ok(FeatureRegistry { names })
    }

    pub fn account() -> Self {
        FeatureRegistry {
            names: ACCOUNT_FEATURES.iter().map(|s| s.to_string()).collect(),
        }
    }

    /// `<series>__<measure>`, series-major.
    pub fn time_series() -> Self {
        let names = SERIES_NAMES
            .iter()
            .flat_map(|s| MEASURE_NAMES.iter().map(move |m| ts_feature_name(s, m)))
            .collect();
        FeatureRegistry { names }
    }

    pub fn account_and_time_series() -> Self {
        let mut names = Self::account().names;
        names.extend(Self::time_series().names);
        FeatureRegistry { names }
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn arity(&self) -> usize {
        self.names.len()
    }

    pub fn index_of(&self, name: &str) -> Option<usize> {
        self.names.iter().position(|n| n == name)
    }

    /// Whether `name` is a time-series feature name.
    pub fn is_time_series(name: &str) -> bool {
        name.contains("__")
    }
}

pub fn ts_feature_name(series: &str, measure: &str) -> String {
    format!("{series}__{measure}")
}

/// A feature row aligned to a registry.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureVector<F> {
    pub values: Vec<F>,
}

impl<F> FeatureVector<F> {
    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }
}
