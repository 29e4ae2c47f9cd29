//! Metrics, stratified splitting, cross-validation and the three experiments.

mod experiments;
mod features;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ingest::Label;
use crate::models::{Model, ModelConfig};
use crate::sampling::LabeledMatrix;
use crate::scalar::Scalar;

pub use experiments::{
    evaluate, run_experiment1, run_experiment2, run_experiment3, split_importance, top_k_indices,
    CurvePoint, EvaluationReport, Exp2Report, ExperimentPlan, Holdout, PlanEcho, RepeatResult,
};
pub use features::{FeatureSet, FeatureTable};

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConfusionCounts {
    pub tp: u64,
    pub fp: u64,
    pub tn: u64,
    #[serde(rename = "fn")]
    pub fn_: u64,
}

impl ConfusionCounts {
    /// Tallies predictions against ground truth; ponzi is the positive class.
    pub fn tally(truth: &[Label], predicted: &[Label]) -> Result<Self> {
        if truth.len() != predicted.len() {
            return Err(Error::invalid("truth and prediction lengths differ"));
        }
        let mut c = ConfusionCounts::default();
        for (t, p) in truth.iter().zip(predicted) {
            match (t.is_ponzi(), p.is_ponzi()) {
                (true, true) => c.tp += 1,
                (false, true) => c.fp += 1,
                (false, false) => c.tn += 1,
                (true, false) => c.fn_ += 1,
            }
        }
        Ok(c)
    }

    pub fn total(&self) -> u64 {
        self.tp + self.fp + self.tn + self.fn_
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct Metrics {
    pub accuracy: f64,
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
}

impl Metrics {
    /// Component-wise arithmetic mean.
    pub fn mean(all: &[Metrics]) -> Metrics {
        let n = all.len().max(1) as f64;
        let sum = |f: fn(&Metrics) -> f64| all.iter().map(f).sum::<f64>() / n;
        Metrics {
            accuracy: sum(|m| m.accuracy),
            precision: sum(|m| m.precision),
            recall: sum(|m| m.recall),
            f1: sum(|m| m.f1),
        }
    }
}

fn ratio(num: u64, den: u64) -> f64 {
    if den == 0 {
        0.0
    } else {
        num as f64 / den as f64
    }
}

pub fn metrics(c: &ConfusionCounts) -> Result<Metrics> {
    let total = c.total();
    if total == 0 {
        return Err(Error::InsufficientData("no rows to score".into()));
    }
    let precision = ratio(c.tp, c.tp + c.fp);
    let recall = ratio(c.tp, c.tp + c.fn_);
    let f1 = if precision + recall > 0.0 {
        2.0 * precision * recall / (precision + recall)
    } else {
        0.0
    };
    Ok(Metrics {
        accuracy: ratio(c.tp + c.tn, total),
        precision,
        recall,
        f1,
    })
}

fn class_indices(labels: &[Label]) -> (Vec<usize>, Vec<usize>) {
    (0..labels.len()).partition(|&i| labels[i].is_ponzi())
}

/// Per-class shuffled split into `(train, test)` row indices, each sorted ascending.
///
/// The test set takes `floor(n * fraction)` rows, of which `floor(n_ponzi * fraction)`
/// are ponzi; both classes keep at least one training row.
pub fn stratified_split(
    labels: &[Label],
    test_fraction: f64,
    seed: u64,
) -> Result<(Vec<usize>, Vec<usize>)> {
    if !(test_fraction > 0.0 && test_fraction < 1.0) {
        return Err(Error::invalid("test fraction must lie in (0, 1)"));
    }
    let (mut pos, mut neg) = class_indices(labels);
    if pos.len() < 2 || neg.len() < 2 {
        return Err(Error::InsufficientData(format!(
            "stratified split needs two rows per class (ponzi {}, non-ponzi {})",
            pos.len(),
            neg.len()
        )));
    }
    let total = (labels.len() as f64 * test_fraction).floor() as usize;
    let test_pos = ((pos.len() as f64 * test_fraction).floor() as usize).min(pos.len() - 1);
    let test_neg = total.saturating_sub(test_pos).min(neg.len() - 1);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    pos.shuffle(&mut rng);
    neg.shuffle(&mut rng);
    let mut test: Vec<usize> = pos[..test_pos]
        .iter()
        .chain(&neg[..test_neg])
        .copied()
        .collect();
    let mut train: Vec<usize> = pos[test_pos..]
        .iter()
        .chain(&neg[test_neg..])
        .copied()
        .collect();
    test.sort_unstable();
    train.sort_unstable();
    Ok((train, test))
}

/// Stratified fold assignment: each class is shuffled and dealt round-robin.
pub fn stratified_folds(labels: &[Label], folds: usize, seed: u64) -> Result<Vec<Vec<usize>>> {
    let (mut pos, mut neg) = class_indices(labels);
    let minority = pos.len().min(neg.len());
    if folds < 2 {
        return Err(Error::invalid("cross-validation needs at least two folds"));
    }
    if folds > minority {
        return Err(Error::InsufficientData(format!(
            "{folds} folds exceed the minority class size {minority}"
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    pos.shuffle(&mut rng);
    neg.shuffle(&mut rng);
    let mut out = vec![Vec::new(); folds];
    for (i, &row) in pos.iter().enumerate() {
        out[i % folds].push(row);
    }
    for (i, &row) in neg.iter().enumerate() {
        out[i % folds].push(row);
    }
    for f in &mut out {
        f.sort_unstable();
    }
    Ok(out)
}

/// Fits on all folds but one and scores the held-out fold, for every fold.
pub fn kfold_cv<F: Scalar>(
    train: &LabeledMatrix<F>,
    folds: usize,
    config: &ModelConfig,
    seed: u64,
) -> Result<Vec<Metrics>> {
    let parts = stratified_folds(&train.labels, folds, seed)?;
    let mut in_fold = vec![0usize; train.len()];
    for (k, rows) in parts.iter().enumerate() {
        for &r in rows {
            in_fold[r] = k;
        }
    }
    parts
        .iter()
        .enumerate()
        .map(|(k, val)| {
            let fit_rows: Vec<usize> = (0..train.len()).filter(|&r| in_fold[r] != k).collect();
            let model = Model::fit(config, &train.select_rows(&fit_rows))?;
            score_rows(&model, &train.select_rows(val))
        })
        .collect()
}

/// Confusion-based metrics of `model` on `test`.
pub fn score_rows<F: Scalar>(model: &Model<F>, test: &LabeledMatrix<F>) -> Result<Metrics> {
    let preds = model.predict(&test.rows)?;
    metrics(&ConfusionCounts::tally(&test.labels, &preds.labels)?)
}
