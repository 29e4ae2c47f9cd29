//! Repeated split / oversample / fit / test runs and the three experiments built on them.

use std::time::Instant;

use rand::seq::index::sample;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::features::{FeatureSet, FeatureTable};
use super::{kfold_cv, metrics, stratified_split, ConfusionCounts, Metrics};
use crate::error::{Error, Result};
use crate::ingest::{Label, PonziType};
use crate::models::{Growth, ImportanceTable, Model, ModelConfig, ModelKind};
use crate::registry::FeatureRegistry;
use crate::sampling::{borderline_smote, LabeledMatrix, SmoteParams};
use crate::scalar::Scalar;
use crate::tsbuild::INTERVAL_HOURS;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentPlan {
    pub feature_sets: Vec<FeatureSet>,
    pub interval_hours: Vec<u32>,
    pub models: Vec<ModelConfig>,
    pub repeats: usize,
    pub folds: usize,
    /// Run k-fold cross-validation on each oversampled training split (diagnostic only).
    pub cv: bool,
    pub test_fraction: f64,
    pub smote: SmoteParams,
    pub seed: u64,
}

impl Default for ExperimentPlan {
    fn default() -> Self {
        ExperimentPlan {
            feature_sets: vec![FeatureSet::Acc, FeatureSet::Ts, FeatureSet::AccTs],
            interval_hours: INTERVAL_HOURS.to_vec(),
            models: vec![ModelConfig::gbdt(Growth::LeafWise)],
            repeats: 50,
            folds: 5,
            cv: true,
            test_fraction: 0.2,
            smote: SmoteParams::default(),
            seed: 0,
        }
    }
}

impl ExperimentPlan {
    pub fn validate(&self) -> Result<()> {
        if self.repeats == 0 {
            return Err(Error::invalid("repeats must be positive"));
        }
        if self.folds < 2 {
            return Err(Error::invalid("folds must be at least 2"));
        }
        if !(self.test_fraction > 0.0 && self.test_fraction < 1.0) {
            return Err(Error::invalid("test fraction must lie in (0, 1)"));
        }
        if !(self.smote.target_ratio > 0.0) {
            return Err(Error::invalid("SMOTE target ratio must be positive"));
        }
        for m in &self.models {
            m.validate()?;
        }
        Ok(())
    }

    /// Seed of repeat `r`.
    pub fn repeat_seed(&self, r: usize) -> u64 {
        self.seed.wrapping_add(r as u64)
    }
}

/// The settings one report was produced with.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlanEcho {
    pub experiment: String,
    pub feature_set: String,
    pub arity: usize,
    pub interval_hours: u32,
    pub model: ModelConfig,
    pub repeats: usize,
    pub folds: usize,
    pub cv: bool,
    pub test_fraction: f64,
    pub smote: SmoteParams,
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RepeatResult {
    pub repeat: usize,
    pub seed: u64,
    pub train_rows: usize,
    pub synthetic_rows: usize,
    pub test_rows: usize,
    pub confusion: ConfusionCounts,
    pub metrics: Metrics,
    /// Per-fold validation metrics on the oversampled training split.
    pub cv: Option<Vec<Metrics>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvaluationReport {
    pub plan: PlanEcho,
    pub per_repeat: Vec<RepeatResult>,
    pub mean: Metrics,
    /// Left empty by callers that need byte-reproducible output.
    pub wall_time_s: Option<f64>,
}

/// Which held-out scheme types an Experiment-3 run tests on.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Holdout {
    pub types: Vec<PonziType>,
}

impl Holdout {
    pub fn single(t: PonziType) -> Self {
        Holdout { types: vec![t] }
    }

    /// Tree, handover and waterfall together.
    pub fn all_three() -> Self {
        Holdout {
            types: vec![PonziType::Tree, PonziType::Handover, PonziType::Waterfall],
        }
    }

    pub fn name(&self) -> String {
        if *self == Self::all_three() {
            return "all_three".into();
        }
        let parts: Vec<&str> = self.types.iter().map(|t| t.as_str()).collect();
        parts.join("+")
    }

    pub fn parse(s: &str) -> Result<Self> {
        if matches!(s, "all" | "all_three" | "all-three") {
            return Ok(Self::all_three());
        }
        let types = s
            .split('+')
            .map(str::parse)
            .collect::<Result<Vec<PonziType>>>()?;
        Ok(Holdout { types })
    }
}

impl PlanEcho {
    pub fn new(
        experiment: &str,
        plan: &ExperimentPlan,
        feature_set: &str,
        arity: usize,
        hours: u32,
        model: &ModelConfig,
    ) -> Self {
        echo(experiment, plan, feature_set, arity, hours, model)
    }
}

fn echo(
    experiment: &str,
    plan: &ExperimentPlan,
    feature_set: &str,
    arity: usize,
    hours: u32,
    model: &ModelConfig,
) -> PlanEcho {
    PlanEcho {
        experiment: experiment.into(),
        feature_set: feature_set.into(),
        arity,
        interval_hours: hours,
        model: model.clone(),
        repeats: plan.repeats,
        folds: plan.folds,
        cv: plan.cv,
        test_fraction: plan.test_fraction,
        smote: plan.smote,
        seed: plan.seed,
    }
}

/// Oversamples `train`, optionally cross-validates, fits on all of it and scores `test`.
fn train_and_test<F: Scalar>(
    train: &LabeledMatrix<F>,
    test: &LabeledMatrix<F>,
    model: &ModelConfig,
    plan: &ExperimentPlan,
    repeat: usize,
) -> Result<RepeatResult> {
    let seed = plan.repeat_seed(repeat);
    let smote = borderline_smote(train, &SmoteParams { seed, ..plan.smote })?;
    let config = model.clone().with_seed(seed);
    let cv = if plan.cv {
        Some(kfold_cv(&smote.data, plan.folds, &config, seed)?)
    } else {
        None
    };
    let fitted = Model::fit(&config, &smote.data)?;
    let preds = fitted.predict(&test.rows)?;
    let confusion = ConfusionCounts::tally(&test.labels, &preds.labels)?;
    Ok(RepeatResult {
        repeat,
        seed,
        train_rows: train.len(),
        synthetic_rows: smote.synthetic,
        test_rows: test.len(),
        metrics: metrics(&confusion)?,
        confusion,
        cv,
    })
}

fn summarize(plan: PlanEcho, per_repeat: Vec<RepeatResult>, started: Instant) -> EvaluationReport {
    let all: Vec<Metrics> = per_repeat.iter().map(|r| r.metrics).collect();
    EvaluationReport {
        plan,
        mean: Metrics::mean(&all),
        per_repeat,
        wall_time_s: Some(started.elapsed().as_secs_f64()),
    }
}

/// `plan.repeats` rounds of stratified split, oversampling of the training part,
/// fitting and testing on the untouched test part.
pub fn evaluate<F: Scalar>(
    data: &LabeledMatrix<F>,
    model: &ModelConfig,
    plan: &ExperimentPlan,
    echo: PlanEcho,
) -> Result<EvaluationReport> {
    plan.validate()?;
    let started = Instant::now();
    let per_repeat = (0..plan.repeats)
        .into_par_iter()
        .map(|r| {
            let (train, test) =
                stratified_split(&data.labels, plan.test_fraction, plan.repeat_seed(r))?;
            train_and_test(
                &data.select_rows(&train),
                &data.select_rows(&test),
                model,
                plan,
                r,
            )
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(summarize(echo, per_repeat, started))
}

/// Every feature set crossed with every model, per table (one table per interval length).
pub fn run_experiment1<F: Scalar>(
    tables: &[FeatureTable<F>],
    plan: &ExperimentPlan,
) -> Result<Vec<EvaluationReport>> {
    plan.validate()?;
    let mut out = Vec::new();
    for table in tables {
        for set in &plan.feature_sets {
            let data = table.select(set)?;
            for model in &plan.models {
                let e = echo(
                    "1",
                    plan,
                    set.name(),
                    data.arity(),
                    table.interval_hours,
                    model,
                );
                log::info!(
                    "experiment 1: {} {} at {}h",
                    set,
                    model,
                    table.interval_hours
                );
                out.push(evaluate(&data, model, plan, e)?);
            }
        }
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CurvePoint {
    pub k: usize,
    pub f1: f64,
    /// Share of time-series features among the top `k`.
    pub ts_share: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Exp2Report {
    pub plan: PlanEcho,
    pub feature_names: Vec<String>,
    pub importance: ImportanceTable,
    /// Feature names by descending split count, ties in column order.
    pub ranking: Vec<String>,
    /// Features split on at least once.
    pub used: usize,
    pub curve: Vec<CurvePoint>,
    pub best_k: usize,
    pub best_f1: f64,
    /// F1 with every feature.
    pub full_f1: f64,
    /// The top `best_k` features, in column order.
    pub refined: Vec<String>,
    pub wall_time_s: Option<f64>,
}

impl Exp2Report {
    /// Top `k` features by importance, in column order.
    pub fn top_k(&self, k: usize) -> Vec<String> {
        top_k_names(&self.feature_names, &self.importance, k)
    }

    /// `(account, time-series)` member counts of the top `k`.
    pub fn composition(&self, k: usize) -> (usize, usize) {
        let top = self.top_k(k);
        let ts = top
            .iter()
            .filter(|n| FeatureRegistry::is_time_series(n))
            .count();
        (top.len() - ts, ts)
    }

    /// The `k,f1,ts_share` table.
    pub fn curve_csv(&self) -> String {
        let mut s = String::from("k,f1,ts_share\n");
        for p in &self.curve {
            s.push_str(&format!("{},{:?},{:?}\n", p.k, p.f1, p.ts_share));
        }
        s
    }
}

/// Split counts of `model` fitted on the oversampled training part of repeat 0.
pub fn split_importance<F: Scalar>(
    data: &LabeledMatrix<F>,
    plan: &ExperimentPlan,
    model: &ModelConfig,
) -> Result<ImportanceTable> {
    plan.validate()?;
    let seed = plan.repeat_seed(0);
    let (train, _) = stratified_split(&data.labels, plan.test_fraction, seed)?;
    let smote = borderline_smote(
        &data.select_rows(&train),
        &SmoteParams { seed, ..plan.smote },
    )?;
    Model::fit(&model.clone().with_seed(seed), &smote.data)?.feature_importance()
}

/// Column indices of the `k` most-split features, in column order.
pub fn top_k_indices(importance: &ImportanceTable, k: usize) -> Vec<usize> {
    let mut top: Vec<usize> = importance.ranking().into_iter().take(k).collect();
    top.sort_unstable();
    top
}

fn top_k_names(names: &[String], importance: &ImportanceTable, k: usize) -> Vec<String> {
    top_k_indices(importance, k)
        .into_iter()
        .map(|i| names[i].clone())
        .collect()
}

/// Split-count importance from a gbdt fitted on the oversampled training part of
/// repeat 0, then the test F1 of the same protocol restricted to the top `k`
/// features for `k = step, 2 step, ...` up to all of them.
pub fn run_experiment2<F: Scalar>(
    table: &FeatureTable<F>,
    plan: &ExperimentPlan,
    model: &ModelConfig,
    step: usize,
) -> Result<Exp2Report> {
    plan.validate()?;
    if model.kind == ModelKind::Knn {
        return Err(Error::Unsupported {
            model: "knn",
            op: "feature importance",
        });
    }
    if step == 0 {
        return Err(Error::invalid("step must be positive"));
    }
    let started = Instant::now();
    let data = table.select(&FeatureSet::AccTs)?;
    let importance = split_importance(&data, plan, model)?;

    let d = data.arity();
    let mut ks: Vec<usize> = (step..=d).step_by(step).collect();
    if ks.last() != Some(&d) {
        ks.push(d);
    }
    let mut curve = Vec::with_capacity(ks.len());
    let mut full_f1 = 0.0;
    for &k in &ks {
        let cols = top_k_indices(&importance, k);
        let subset = data.select_columns(&cols);
        let e = echo(
            "2",
            plan,
            &format!("top_{k}"),
            k,
            table.interval_hours,
            model,
        );
        let report = evaluate(&subset, model, plan, e)?;
        let ts = cols
            .iter()
            .filter(|&&c| FeatureRegistry::is_time_series(&data.names[c]))
            .count();
        log::info!("experiment 2: top {k} f1 {:.4}", report.mean.f1);
        curve.push(CurvePoint {
            k,
            f1: report.mean.f1,
            ts_share: ts as f64 / k as f64,
        });
        if k == d {
            full_f1 = report.mean.f1;
        }
    }
    // First maximum wins, so ties prefer the smaller feature set.
    let best = curve
        .iter()
        .fold(&curve[0], |b, p| if p.f1 > b.f1 { p } else { b });
    let (best_k, best_f1) = (best.k, best.f1);
    let ranking = importance
        .ranking()
        .into_iter()
        .map(|i| data.names[i].clone())
        .collect();
    Ok(Exp2Report {
        plan: echo("2", plan, "ACC_TS", d, table.interval_hours, model),
        refined: top_k_names(&data.names, &importance, best_k),
        feature_names: data.names.clone(),
        used: importance.used(),
        importance,
        ranking,
        curve,
        best_k,
        best_f1,
        full_f1,
        wall_time_s: Some(started.elapsed().as_secs_f64()),
    })
}

/// Trains without any application of the held-out types, then tests on all of them
/// plus enough sampled non-ponzi applications to reach `scam_rate`.
pub fn run_experiment3<F: Scalar>(
    table: &FeatureTable<F>,
    set: &FeatureSet,
    plan: &ExperimentPlan,
    model: &ModelConfig,
    holdout: &Holdout,
    scam_rate: f64,
) -> Result<EvaluationReport> {
    plan.validate()?;
    if holdout.types.is_empty() {
        return Err(Error::invalid("holdout needs at least one scheme type"));
    }
    if holdout.types.contains(&PonziType::Chain) {
        return Err(Error::invalid(
            "chain-shaped schemes cannot be held out: they are the bulk of the ponzi class, \
             so removing them leaves too little ponzi training data",
        ));
    }
    if !(scam_rate > 0.0 && scam_rate <= 1.0) {
        return Err(Error::invalid("scam rate must lie in (0, 1]"));
    }
    let data = table.select(set)?;
    let held: Vec<usize> = (0..data.len())
        .filter(|&i| {
            data.labels[i].is_ponzi()
                && table.ponzi_types[i].is_some_and(|t| holdout.types.contains(&t))
        })
        .collect();
    if let Some(missing) = holdout
        .types
        .iter()
        .find(|t| !held.iter().any(|&i| table.ponzi_types[i] == Some(**t)))
    {
        return Err(Error::InsufficientData(format!(
            "no {missing} applications to hold out"
        )));
    }
    let negatives: Vec<usize> = (0..data.len())
        .filter(|&i| data.labels[i] == Label::NonPonzi)
        .collect();
    let wanted = (held.len() as f64 * (1.0 - scam_rate) / scam_rate).round() as usize;
    if wanted >= negatives.len() {
        return Err(Error::InsufficientData(format!(
            "{wanted} non-ponzi test applications requested, {} available",
            negatives.len()
        )));
    }
    let started = Instant::now();
    let per_repeat = (0..plan.repeats)
        .into_par_iter()
        .map(|r| {
            let mut rng = ChaCha8Rng::seed_from_u64(plan.repeat_seed(r));
            let mut in_test = vec![false; data.len()];
            for &i in &held {
                in_test[i] = true;
            }
            for j in sample(&mut rng, negatives.len(), wanted) {
                in_test[negatives[j]] = true;
            }
            let (test, train): (Vec<usize>, Vec<usize>) =
                (0..data.len()).partition(|&i| in_test[i]);
            train_and_test(
                &data.select_rows(&train),
                &data.select_rows(&test),
                model,
                plan,
                r,
            )
        })
        .collect::<Result<Vec<_>>>()?;
    let e = echo(
        &format!("3:{}:{scam_rate}", holdout.name()),
        plan,
        set.name(),
        data.arity(),
        table.interval_hours,
        model,
    );
    Ok(summarize(e, per_repeat, started))
}
