mod common;

use std::collections::HashSet;
use std::sync::OnceLock;

use common::*;
use ponzi_core::eval::{
    evaluate, kfold_cv, metrics, run_experiment1, run_experiment2, run_experiment3,
    stratified_folds, stratified_split, ConfusionCounts, EvaluationReport, ExperimentPlan,
    FeatureSet, Holdout, Metrics, PlanEcho,
};
use ponzi_core::ingest::{Label, PonziType};
use ponzi_core::models::{Growth, ModelConfig};
use ponzi_core::registry::FeatureRegistry;
use ponzi_core::synthgen::{Corpus, CorpusSpec};
use ponzi_core::{Error, FeatureTable};
use proptest::prelude::*;

fn small_table() -> &'static FeatureTable {
    static TABLE: OnceLock<FeatureTable> = OnceLock::new();
    TABLE.get_or_init(|| {
        let spec = CorpusSpec {
            chain: 12,
            tree: 4,
            handover: 4,
            waterfall: 4,
            benign: 150,
            seed: 7,
            ..CorpusSpec::default()
        };
        let ds = Corpus::generate(&spec).unwrap().dataset().unwrap();
        FeatureTable::build(&ds, 24).unwrap()
    })
}

fn quick_plan(repeats: usize, seed: u64) -> ExperimentPlan {
    ExperimentPlan {
        feature_sets: vec![FeatureSet::AccTs],
        interval_hours: vec![24],
        models: vec![ModelConfig::gbdt(Growth::LeafWise)],
        repeats,
        cv: false,
        seed,
        ..ExperimentPlan::default()
    }
}

fn run(set: &FeatureSet, plan: &ExperimentPlan) -> EvaluationReport {
    let table = small_table();
    let data = table.select(set).unwrap();
    let model = &plan.models[0];
    let echo = PlanEcho::new("test", plan, set.name(), data.arity(), 24, model);
    let mut r = evaluate(&data, model, plan, echo).unwrap();
    r.wall_time_s = None;
    r
}

#[test]
fn metric_examples() {
    let m = metrics(&ConfusionCounts {
        tp: 2,
        fp: 1,
        tn: 6,
        fn_: 1,
    })
    .unwrap();
    assert!(close(m.accuracy, 0.8, 1e-15));
    assert!(close(m.precision, 2.0 / 3.0, 1e-15));
    assert!(close(m.recall, 2.0 / 3.0, 1e-15));
    assert!(close(m.f1, 2.0 / 3.0, 1e-15));
    let perfect = metrics(&ConfusionCounts {
        tp: 3,
        fp: 0,
        tn: 5,
        fn_: 0,
    })
    .unwrap();
    assert_eq!(
        perfect,
        Metrics {
            accuracy: 1.0,
            precision: 1.0,
            recall: 1.0,
            f1: 1.0
        }
    );
    let none = metrics(&ConfusionCounts {
        fn_: 3,
        ..Default::default()
    })
    .unwrap();
    assert_eq!((none.precision, none.recall, none.f1), (0.0, 0.0, 0.0));
    assert!(matches!(
        metrics(&ConfusionCounts::default()),
        Err(Error::InsufficientData(_))
    ));
}

#[test]
fn split_example() {
    let labels: Vec<Label> = (0..100).map(|i| label(i % 17 == 0 && i < 100)).collect();
    assert_eq!(labels.iter().filter(|l| l.is_ponzi()).count(), 6);
    let (train, test) = stratified_split(&labels, 0.2, 4).unwrap();
    let ponzi_test = test.iter().filter(|&&i| labels[i].is_ponzi()).count();
    assert_eq!((ponzi_test, test.len() - ponzi_test), (1, 19));
    assert_eq!(train.len(), 80);
    assert_eq!(stratified_split(&labels, 0.2, 4).unwrap(), (train, test));
    let one = vec![Label::Ponzi, Label::NonPonzi, Label::NonPonzi];
    assert!(stratified_split(&one, 0.2, 0).is_err());
}

#[test]
fn folds_cover_and_reject_too_many() {
    let labels: Vec<Label> = (0..40).map(|i| label(i % 4 == 0)).collect();
    let folds = stratified_folds(&labels, 5, 3).unwrap();
    let mut seen: Vec<usize> = folds.concat();
    seen.sort_unstable();
    assert_eq!(seen, (0..40).collect::<Vec<_>>());
    for f in &folds {
        assert_eq!(f.iter().filter(|&&i| labels[i].is_ponzi()).count(), 2);
    }
    assert!(stratified_folds(&labels, 11, 3).is_err());
    assert!(stratified_folds(&labels, 1, 3).is_err());

    let data = separable(60, 0.1, 5);
    let cv = kfold_cv(&data, 5, &ModelConfig::gbdt(Growth::LeafWise), 2).unwrap();
    assert_eq!(cv.len(), 5);
    for m in cv {
        for v in [m.accuracy, m.precision, m.recall, m.f1] {
            assert!((0.0..=1.0).contains(&v));
        }
    }
}

#[test]
fn reports_are_reproducible_and_consistent() {
    let plan = quick_plan(3, 11);
    let a = run(&FeatureSet::AccTs, &plan);
    let b = run(&FeatureSet::AccTs, &plan);
    assert_eq!(a, b);
    let n = small_table().matrix.len();
    for r in &a.per_repeat {
        assert_eq!(r.confusion.total() as usize, r.test_rows);
        assert_eq!(r.test_rows, (n as f64 * 0.2).floor() as usize);
        assert_eq!(r.train_rows + r.test_rows, n);
        assert_eq!(r.metrics, metrics(&r.confusion).unwrap());
        assert_eq!(r.seed, 11 + r.repeat as u64);
    }
    let all: Vec<Metrics> = a.per_repeat.iter().map(|r| r.metrics).collect();
    assert_eq!(a.mean, Metrics::mean(&all));
    for v in [a.mean.accuracy, a.mean.precision, a.mean.recall, a.mean.f1] {
        assert!((0.0..=1.0).contains(&v));
    }

    // the mean of one repeat is that repeat, and it is the first repeat of a longer run
    let one = run(&FeatureSet::AccTs, &quick_plan(1, 11));
    assert_eq!(one.mean, one.per_repeat[0].metrics);
    assert_eq!(one.per_repeat[0], a.per_repeat[0]);
}

#[test]
fn cross_validation_is_diagnostic_only() {
    let with_cv = run(
        &FeatureSet::Acc,
        &ExperimentPlan {
            cv: true,
            ..quick_plan(2, 3)
        },
    );
    let without = run(&FeatureSet::Acc, &quick_plan(2, 3));
    assert_eq!(with_cv.mean, without.mean);
    assert!(with_cv
        .per_repeat
        .iter()
        .all(|r| r.cv.as_ref().is_some_and(|c| c.len() == 5)));
    assert!(without.per_repeat.iter().all(|r| r.cv.is_none()));
}

#[test]
fn experiment1_covers_every_arm() {
    let table = small_table();
    let plan = ExperimentPlan {
        feature_sets: vec![FeatureSet::Acc, FeatureSet::Ts, FeatureSet::AccTs],
        models: vec![
            ModelConfig::gbdt(Growth::LeafWise),
            ModelConfig::random_forest(),
        ],
        ..quick_plan(1, 0)
    };
    let reports = run_experiment1(std::slice::from_ref(table), &plan).unwrap();
    let arms: Vec<(String, usize, String)> = reports
        .iter()
        .map(|r| {
            (
                r.plan.feature_set.clone(),
                r.plan.arity,
                r.plan.model.token().to_string(),
            )
        })
        .collect();
    let want: Vec<(String, usize, String)> = [("ACC", 29), ("TS", 516), ("ACC_TS", 545)]
        .iter()
        .flat_map(|&(s, d)| ["gbdt-leaf", "rf"].map(|m| (s.to_string(), d, m.to_string())))
        .collect();
    assert_eq!(arms, want);
}

#[test]
fn experiment2_mechanism() {
    let table = small_table();
    let plan = quick_plan(2, 5);
    let model = ModelConfig::gbdt(Growth::LeafWise);
    let rep = run_experiment2(table, &plan, &model, 100).unwrap();
    let ks: Vec<usize> = rep.curve.iter().map(|p| p.k).collect();
    assert_eq!(ks, vec![100, 200, 300, 400, 500, 545]);

    // top-545 is the plain ACC_TS run
    let full = run(&FeatureSet::AccTs, &plan);
    assert_eq!(rep.full_f1, full.mean.f1);
    assert_eq!(rep.curve.last().unwrap().f1, full.mean.f1);

    // nested prefixes; zero-count features only after every used one
    let mut prev: HashSet<String> = HashSet::new();
    for k in (5..=545).step_by(5) {
        let top: HashSet<String> = rep.top_k(k).into_iter().collect();
        assert_eq!(top.len(), k);
        assert!(prev.is_subset(&top), "top-{k}");
        let zero = top
            .iter()
            .filter(|n| {
                rep.importance.counts[rep.feature_names.iter().position(|f| f == *n).unwrap()] == 0
            })
            .count();
        assert_eq!(zero, k.saturating_sub(rep.used), "top-{k}");
        prev = top;
    }
    let (acc, ts) = rep.composition(rep.best_k);
    assert_eq!(acc + ts, rep.best_k);
    assert_eq!(rep.refined, rep.top_k(rep.best_k));
    assert!(rep
        .refined
        .iter()
        .all(|n| FeatureRegistry::account_and_time_series()
            .index_of(n)
            .is_some()));
    assert!(rep.curve.iter().all(|p| p.f1 <= rep.best_f1));
    assert!(rep.curve_csv().starts_with("k,f1,ts_share\n100,"));

    let knn = ModelConfig::knn(5);
    assert!(matches!(
        run_experiment2(table, &plan, &knn, 5),
        Err(Error::Unsupported { .. })
    ));
}

#[test]
fn experiment3_holdouts() {
    let table = small_table();
    let plan = quick_plan(2, 1);
    let model = ModelConfig::gbdt(Growth::LeafWise);
    let set = FeatureSet::AccTs;

    let only = run_experiment3(
        table,
        &set,
        &plan,
        &model,
        &Holdout::single(PonziType::Waterfall),
        1.0,
    )
    .unwrap();
    for r in &only.per_repeat {
        assert_eq!(r.test_rows, 4);
        assert_eq!(r.confusion.fp + r.confusion.tn, 0);
        if r.confusion.tp > 0 {
            assert_eq!(r.metrics.precision, 1.0);
        }
    }

    let half = run_experiment3(
        table,
        &set,
        &plan,
        &model,
        &Holdout::single(PonziType::Waterfall),
        0.5,
    )
    .unwrap();
    for r in &half.per_repeat {
        assert_eq!(r.test_rows, 8);
        assert_eq!(r.confusion.tn + r.confusion.fp, 4);
        assert_eq!(r.train_rows, table.matrix.len() - 8);
    }

    let all = run_experiment3(table, &set, &plan, &model, &Holdout::all_three(), 0.5).unwrap();
    assert!(all.per_repeat.iter().all(|r| r.test_rows == 24));

    let chain = run_experiment3(
        table,
        &set,
        &plan,
        &model,
        &Holdout::single(PonziType::Chain),
        0.5,
    );
    match chain {
        Err(Error::InvalidArgument(msg)) => assert!(msg.contains("chain")),
        other => panic!("chain holdout accepted: {other:?}"),
    }
    assert!(run_experiment3(
        table,
        &set,
        &plan,
        &model,
        &Holdout::single(PonziType::Other),
        0.5
    )
    .is_err());
    assert!(run_experiment3(
        table,
        &set,
        &plan,
        &model,
        &Holdout::single(PonziType::Tree),
        0.0
    )
    .is_err());
    assert_eq!(Holdout::parse("all").unwrap(), Holdout::all_three());
    assert_eq!(
        Holdout::parse("tree+waterfall").unwrap().types,
        vec![PonziType::Tree, PonziType::Waterfall]
    );
}

#[test]
fn plan_validation() {
    let bad = [
        ExperimentPlan {
            repeats: 0,
            ..quick_plan(1, 0)
        },
        ExperimentPlan {
            folds: 1,
            ..quick_plan(1, 0)
        },
        ExperimentPlan {
            test_fraction: 1.0,
            ..quick_plan(1, 0)
        },
        ExperimentPlan {
            test_fraction: 0.0,
            ..quick_plan(1, 0)
        },
    ];
    for p in bad {
        assert!(p.validate().is_err());
    }
    assert!(quick_plan(1, 0).validate().is_ok());
}

proptest! {
    #[test]
    fn split_is_a_stratified_partition(
        n_pos in 2usize..40,
        n_neg in 2usize..200,
        fraction in 0.05f64..0.95,
        seed in any::<u64>(),
    ) {
        let labels: Vec<Label> = (0..n_pos + n_neg).map(|i| label(i % 2 == 0 && i / 2 < n_pos)).collect();
        let (train, test) = stratified_split(&labels, fraction, seed).unwrap();
        let mut all: Vec<usize> = train.iter().chain(&test).copied().collect();
        all.sort_unstable();
        prop_assert_eq!(all, (0..labels.len()).collect::<Vec<_>>());
        let n = labels.len();
        let p = labels.iter().filter(|l| l.is_ponzi()).count();
        let tp = test.iter().filter(|&&i| labels[i].is_ponzi()).count();
        prop_assert_eq!(tp, ((p as f64 * fraction).floor() as usize).min(p - 1));
        prop_assert!(test.len() <= (n as f64 * fraction).floor() as usize);
        prop_assert!(train.iter().any(|&i| labels[i].is_ponzi()));
        prop_assert!(train.iter().any(|&i| !labels[i].is_ponzi()));
        prop_assert_eq!(stratified_split(&labels, fraction, seed).unwrap(), (train, test));
    }

    #[test]
    fn metrics_stay_in_range(tp in 0u64..50, fp in 0u64..50, tn in 0u64..50, fn_ in 0u64..50) {
        prop_assume!(tp + fp + tn + fn_ > 0);
        let m = metrics(&ConfusionCounts { tp, fp, tn, fn_ }).unwrap();
        for v in [m.accuracy, m.precision, m.recall, m.f1] {
            prop_assert!((0.0..=1.0).contains(&v));
        }
        prop_assert!(m.f1 <= m.precision.max(m.recall) + 1e-15);
    }
}
