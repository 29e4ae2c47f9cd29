//! Classifiers: k-nearest neighbors, random forest, gradient-boosted trees.

mod forest;
mod gbdt;
mod knn;
mod tree;

use std::fmt;
use std::io::{Read, Write};
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ingest::Label;
use crate::sampling::LabeledMatrix;
use crate::scalar::Scalar;

pub use forest::{fit_cart, CartParams, ForestModel};
pub use gbdt::{sigmoid, GbdtModel, GbdtParams};
pub use knn::KnnModel;
pub use tree::{Node, Tree};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ModelKind {
    Knn,
    RandomForest,
    Gbdt,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Growth {
    LevelWise,
    LeafWise,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FeatureSubsample {
    Sqrt,
    All,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelConfig {
    pub kind: ModelKind,
    pub knn_k: usize,
    /// Forest size or boosting rounds.
    pub trees: usize,
    /// `None` means unlimited.
    pub max_depth: Option<usize>,
    pub max_leaves: usize,
    pub learning_rate: f64,
    pub growth: Growth,
    pub subsample_features: FeatureSubsample,
    pub bootstrap: bool,
    /// L2 term added to the hessian sum in boosting.
    pub lambda: f64,
    pub seed: u64,
}

impl ModelConfig {
    pub fn knn(k: usize) -> Self {
        ModelConfig {
            kind: ModelKind::Knn,
            knn_k: k,
            ..Self::gbdt(Growth::LeafWise)
        }
    }

    pub fn random_forest() -> Self {
        ModelConfig {
            kind: ModelKind::RandomForest,
            max_depth: None,
            subsample_features: FeatureSubsample::Sqrt,
            bootstrap: true,
            ..Self::gbdt(Growth::LeafWise)
        }
    }

    pub fn gbdt(growth: Growth) -> Self {
        ModelConfig {
            kind: ModelKind::Gbdt,
            knn_k: 5,
            trees: 100,
            max_depth: match growth {
                Growth::LevelWise => Some(6),
                Growth::LeafWise => None,
            },
            max_leaves: 31,
            learning_rate: 0.1,
            growth,
            subsample_features: FeatureSubsample::All,
            bootstrap: false,
            lambda: 1.0,
            seed: 0,
        }
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    /// Command-line token: `knn`, `rf`, `gbdt-level` or `gbdt-leaf`.
    pub fn token(&self) -> &'static str {
        match (self.kind, self.growth) {
            (ModelKind::Knn, _) => "knn",
            (ModelKind::RandomForest, _) => "rf",
            (ModelKind::Gbdt, Growth::LevelWise) => "gbdt-level",
            (ModelKind::Gbdt, Growth::LeafWise) => "gbdt-leaf",
        }
    }

    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("knn_k", self.knn_k),
            ("trees", self.trees),
            ("max_leaves", self.max_leaves),
        ];
        if let Some((name, _)) = positive.iter().find(|(_, v)| *v == 0) {
            return Err(Error::invalid(format!("{name} must be positive")));
        }
        if self.max_depth == Some(0) {
            return Err(Error::invalid("max_depth must be positive"));
        }
        if !(self.learning_rate > 0.0 && self.learning_rate <= 1.0) {
            return Err(Error::invalid("learning_rate must lie in (0, 1]"));
        }
        if !(self.lambda >= 0.0) {
            return Err(Error::invalid("lambda must be non-negative"));
        }
        Ok(())
    }
}

impl FromStr for ModelConfig {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "knn" => Ok(Self::knn(5)),
            "rf" => Ok(Self::random_forest()),
            "gbdt-level" => Ok(Self::gbdt(Growth::LevelWise)),
            "gbdt-leaf" => Ok(Self::gbdt(Growth::LeafWise)),
            other => Err(Error::invalid(format!(
                "unknown model token {other:?} (expected knn, rf, gbdt-level or gbdt-leaf)"
            ))),
        }
    }
}

impl fmt::Display for ModelConfig {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.token())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Fitted<F> {
    Knn(KnnModel<F>),
    Forest(ForestModel<F>),
    Gbdt(GbdtModel<F>),
}

/// A fitted classifier with the configuration and arity it was trained with.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Model<F> {
    pub config: ModelConfig,
    pub arity: usize,
    pub fitted: Fitted<F>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Predictions<F> {
    pub labels: Vec<Label>,
    /// Ponzi probability (boosting) or ponzi vote fraction (knn, forest), in `[0, 1]`.
    pub scores: Vec<F>,
}

/// Split counts per feature, aligned with the training columns.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ImportanceTable {
    pub counts: Vec<u64>,
}

impl ImportanceTable {
    pub fn total(&self) -> u64 {
        self.counts.iter().sum()
    }

    /// Feature indices by descending count; ties keep column order.
    pub fn ranking(&self) -> Vec<usize> {
        let mut idx: Vec<usize> = (0..self.counts.len()).collect();
        idx.sort_by(|&a, &b| self.counts[b].cmp(&self.counts[a]));
        idx
    }

    pub fn used(&self) -> usize {
        self.counts.iter().filter(|&&c| c > 0).count()
    }
}

pub fn label_of<F: Scalar>(score: F) -> Label {
    if score >= F::lit(0.5) {
        Label::Ponzi
    } else {
        Label::NonPonzi
    }
}

impl<F: Scalar> Model<F> {
    pub fn fit(config: &ModelConfig, train: &LabeledMatrix<F>) -> Result<Self> {
        config.validate()?;
        if train.is_empty() {
            return Err(Error::InsufficientData("empty training set".into()));
        }
        let fitted = match config.kind {
            ModelKind::Knn => Fitted::Knn(KnnModel::fit(train, config.knn_k)?),
            ModelKind::RandomForest => {
                let features_per_split = match config.subsample_features {
                    FeatureSubsample::Sqrt => {
                        Some(((train.arity() as f64).sqrt().floor() as usize).max(1))
                    }
                    FeatureSubsample::All => None,
                };
                let params = CartParams {
                    max_depth: config.max_depth,
                    features_per_split,
                };
                Fitted::Forest(ForestModel::fit(
                    train,
                    config.trees,
                    config.bootstrap,
                    params,
                    config.seed,
                )?)
            }
            ModelKind::Gbdt => {
                let params = GbdtParams {
                    rounds: config.trees,
                    learning_rate: F::lit(config.learning_rate),
                    lambda: F::lit(config.lambda),
                    growth: config.growth,
                    max_depth: config.max_depth,
                    max_leaves: config.max_leaves,
                };
                Fitted::Gbdt(GbdtModel::fit(train, params)?)
            }
        };
        Ok(Model {
            config: config.clone(),
            arity: train.arity(),
            fitted,
        })
    }

    pub fn score(&self, row: &[F]) -> F {
        match &self.fitted {
            Fitted::Knn(m) => m.score(row),
            Fitted::Forest(m) => m.score(row),
            Fitted::Gbdt(m) => m.score(row),
        }
    }

    pub fn predict(&self, rows: &[Vec<F>]) -> Result<Predictions<F>> {
        if let Some(bad) = rows.iter().find(|r| r.len() != self.arity) {
            return Err(Error::ArityMismatch {
                expected: self.arity,
                got: bad.len(),
            });
        }
        let scores: Vec<F> = rows.par_iter().map(|r| self.score(r)).collect();
        Ok(Predictions {
            labels: scores.iter().map(|&s| label_of(s)).collect(),
            scores,
        })
    }

    pub fn trees(&self) -> Option<&[Tree<F>]> {
        match &self.fitted {
            Fitted::Knn(_) => None,
            Fitted::Forest(m) => Some(&m.trees),
            Fitted::Gbdt(m) => Some(&m.trees),
        }
    }

    pub fn feature_importance(&self) -> Result<ImportanceTable> {
        let trees = self.trees().ok_or(Error::Unsupported {
            model: "knn",
            op: "feature importance",
        })?;
        let mut counts = vec![0; self.arity];
        for t in trees {
            t.count_splits(&mut counts);
        }
        Ok(ImportanceTable { counts })
    }
}

/// Version written into saved model files.
pub const MODEL_FORMAT_VERSION: u32 = 1;

/// On-disk model: format version, feature names and the fitted model.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SavedModel<F> {
    pub format_version: u32,
    pub feature_names: Vec<String>,
    pub model: Model<F>,
}

impl<F: Scalar> SavedModel<F> {
    pub fn new(feature_names: Vec<String>, model: Model<F>) -> Self {
        SavedModel {
            format_version: MODEL_FORMAT_VERSION,
            feature_names,
            model,
        }
    }

    pub fn write_json<W: Write>(&self, w: W) -> Result<()> {
        serde_json::to_writer(w, self)?;
        Ok(())
    }

    pub fn read_json<R: Read>(r: R) -> Result<Self> {
        let saved: Self = serde_json::from_reader(r)?;
        if saved.format_version != MODEL_FORMAT_VERSION {
            return Err(Error::invalid(format!(
                "model format version {} is not supported (expected {MODEL_FORMAT_VERSION})",
                saved.format_version
            )));
        }
        if saved.feature_names.len() != saved.model.arity {
            return Err(Error::ArityMismatch {
                expected: saved.model.arity,
                got: saved.feature_names.len(),
            });
        }
        Ok(saved)
    }
}
