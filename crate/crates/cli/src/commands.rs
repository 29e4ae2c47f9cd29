use std::collections::{BTreeMap, HashSet};
use std::fs::{self, File};
use std::io::{BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use ponzi_core::eval::{
    evaluate, run_experiment1, run_experiment2, run_experiment3, split_importance, top_k_indices,
    ExperimentPlan, FeatureSet, FeatureTable, Holdout, PlanEcho,
};
use ponzi_core::ingest::{
    assemble_dataset, parse_transactions, read_address_types, read_labels, write_address_types,
    write_labels, write_transactions_jsonl, Dataset, LabelRow, Transaction, TxSchema,
};
use ponzi_core::models::{Growth, Model, ModelConfig, SavedModel};
use ponzi_core::registry::{ACCOUNT_ARITY, TS_ARITY};
use ponzi_core::sampling::{borderline_smote, LabeledMatrix, SmoteParams};
use ponzi_core::synthgen::{generate, Corpus, CorpusSpec, Scheme, SchemeParams};
use ponzi_core::Real;
use serde::Serialize;

use crate::{
    EvalArgs, ExperimentArgs, FeaturesArgs, IngestArgs, Outcome, PredictArgs, SynthArgs, TrainArgs,
};

pub const TXS_FILE: &str = "transactions.jsonl";
pub const LABELS_FILE: &str = "labels.csv";
pub const ADDR_TYPES_FILE: &str = "address_types.csv";

fn create(path: &Path) -> Result<BufWriter<File>> {
    if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        fs::create_dir_all(parent).with_context(|| format!("creating {}", parent.display()))?;
    }
    Ok(BufWriter::new(
        File::create(path).with_context(|| format!("creating {}", path.display()))?,
    ))
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut w = create(path)?;
    serde_json::to_writer_pretty(&mut w, value)?;
    w.write_all(b"\n")?;
    w.flush()?;
    Ok(())
}

fn make_dir(dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))
}

/// Reads a dataset directory as written by `ingest` or `synth`.
pub fn load_dataset(dir: &Path) -> Result<Dataset> {
    let jsonl = dir.join(TXS_FILE);
    let txs_path = if jsonl.exists() {
        jsonl
    } else {
        dir.join("transactions.csv")
    };
    let txs = parse_transactions(&txs_path, TxSchema::from_path(&txs_path))?;
    let labels = read_labels(&dir.join(LABELS_FILE))?;
    let types_path = dir.join(ADDR_TYPES_FILE);
    let types = if types_path.exists() {
        Some(read_address_types(&types_path)?)
    } else {
        None
    };
    let (dataset, _) = assemble_dataset(txs, &labels, types.as_ref(), false)?;
    log::info!(
        "loaded {} applications from {}",
        dataset.len(),
        dir.display()
    );
    Ok(dataset)
}

fn read_features(path: &Path) -> Result<LabeledMatrix<Real>> {
    let f = File::open(path).with_context(|| format!("opening {}", path.display()))?;
    LabeledMatrix::read_csv(BufReader::new(f))
        .with_context(|| format!("reading features from {}", path.display()))
}

#[derive(Debug, Serialize)]
struct IngestSummary {
    parsed_txs: usize,
    failed_txs: usize,
    labeled: usize,
    unmatched: usize,
    report: ponzi_core::ingest::RefineReport,
}

/// Writes the retained applications back out in ingestible form: every transaction
/// once, in canonical order, with the counterpart types it was refined with.
fn write_dataset(dataset: &Dataset, dir: &Path) -> Result<Vec<PathBuf>> {
    make_dir(dir)?;
    let mut seen = HashSet::new();
    let mut txs: Vec<&Transaction> = Vec::new();
    let mut types: BTreeMap<String, bool> = BTreeMap::new();
    for app in &dataset.apps {
        for tx in &app.txs {
            types
                .entry(app.counterpart(tx).to_string())
                .or_insert(tx.counterpart_is_contract);
            let key = (
                &tx.tx_hash,
                &tx.from_addr,
                &tx.to_addr,
                tx.value_wei,
                tx.timestamp,
                tx.kind,
            );
            if seen.insert(key) {
                txs.push(tx);
            }
        }
    }
    txs.sort_by(|a, b| a.order_key(b));
    let txs: Vec<Transaction> = txs.into_iter().cloned().collect();
    let labels: Vec<LabelRow> = dataset
        .apps
        .iter()
        .map(|a| LabelRow {
            address: a.address.clone(),
            label: a.label,
            ponzi_type: a.ponzi_type,
        })
        .collect();
    let paths = [TXS_FILE, LABELS_FILE, ADDR_TYPES_FILE].map(|n| dir.join(n));
    let mut w = create(&paths[0])?;
    write_transactions_jsonl(&mut w, &txs)?;
    w.flush()?;
    let mut w = create(&paths[1])?;
    write_labels(&mut w, &labels)?;
    w.flush()?;
    let types: Vec<(String, bool)> = types.into_iter().collect();
    let mut w = create(&paths[2])?;
    write_address_types(&mut w, &types)?;
    w.flush()?;
    Ok(paths.to_vec())
}

pub fn ingest(a: &IngestArgs) -> Result<Outcome> {
    let txs = parse_transactions(&a.txs, TxSchema::from_path(&a.txs))?;
    let parsed = txs.len();
    let failed = txs.iter().filter(|t| !t.is_success()).count();
    let labels = read_labels(&a.labels)?;
    let types = a
        .addr_types
        .as_deref()
        .map(read_address_types)
        .transpose()?;
    let (dataset, join) = assemble_dataset(txs, &labels, types.as_ref(), a.strict)?;
    let r = &dataset.report;
    println!("transactions: {parsed} parsed, {failed} failed dropped");
    println!(
        "labeled addresses without transactions: {}",
        join.unmatched.len()
    );
    for (name, c) in [
        ("retained", r.retained),
        ("dropped (no transactions)", r.dropped_no_txs),
        ("dropped (lifetime under one day)", r.dropped_short_lifetime),
    ] {
        println!("{name}: {} non-ponzi, {} ponzi", c.non_ponzi, c.ponzi);
    }
    let mut outputs = write_dataset(&dataset, &a.out)?;
    let summary = a.out.join("summary.json");
    write_json(
        &summary,
        &IngestSummary {
            parsed_txs: parsed,
            failed_txs: failed,
            labeled: labels.len(),
            unmatched: join.unmatched.len(),
            report: dataset.report.clone(),
        },
    )?;
    outputs.push(summary);
    let mut inputs = vec![a.txs.clone(), a.labels.clone()];
    inputs.extend(a.addr_types.clone());
    Ok(Outcome {
        inputs,
        outputs,
        out: a.out.clone(),
        seed: None,
    })
}

pub fn features(a: &FeaturesArgs) -> Result<Outcome> {
    let dataset = load_dataset(&a.dataset)?;
    let table = FeatureTable::<Real>::build(&dataset, a.interval_hours)?;
    let m = table.select(&a.set)?;
    let mut w = create(&a.out)?;
    m.write_csv(&mut w)?;
    w.flush()?;
    println!(
        "{} rows, {} {} features at {}h",
        m.len(),
        m.arity(),
        a.set,
        a.interval_hours
    );
    Ok(Outcome {
        inputs: vec![a.dataset.clone()],
        outputs: vec![a.out.clone()],
        out: a.out.clone(),
        seed: None,
    })
}

fn base_plan(seed: u64) -> ExperimentPlan {
    ExperimentPlan {
        seed,
        ..ExperimentPlan::default()
    }
}

/// Restricts `data` to the `k` features a leaf-wise gbdt splits on most.
fn refine_top_k(
    data: LabeledMatrix<Real>,
    k: usize,
    plan: &ExperimentPlan,
) -> Result<LabeledMatrix<Real>> {
    if k == 0 || k > data.arity() {
        bail!("--top-k must lie in 1..={}", data.arity());
    }
    let importance = split_importance(&data, plan, &ModelConfig::gbdt(Growth::LeafWise))?;
    let refined = data.select_columns(&top_k_indices(&importance, k));
    log::info!("refined to top {k} features: {}", refined.names.join(","));
    Ok(refined)
}

fn set_name(arity: usize, top_k: Option<usize>) -> String {
    match (top_k, arity) {
        (Some(k), _) => format!("top_{k}"),
        (None, ACCOUNT_ARITY) => "ACC".into(),
        (None, TS_ARITY) => "TS".into(),
        (None, n) if n == ACCOUNT_ARITY + TS_ARITY => "ACC_TS".into(),
        _ => "custom".into(),
    }
}

pub fn train(a: &TrainArgs) -> Result<Outcome> {
    let mut data = read_features(&a.features)?;
    let plan = base_plan(a.seed);
    if let Some(k) = a.top_k {
        data = refine_top_k(data, k, &plan)?;
    }
    let smote = borderline_smote(
        &data,
        &SmoteParams {
            seed: a.seed,
            ..SmoteParams::default()
        },
    )?;
    let model = Model::fit(&a.model.clone().with_seed(a.seed), &smote.data)?;
    let saved = SavedModel::new(data.names.clone(), model);
    let mut w = create(&a.out)?;
    saved.write_json(&mut w)?;
    w.flush()?;
    println!(
        "trained {} on {} rows ({} synthetic), {} features",
        a.model,
        smote.data.len(),
        smote.synthetic,
        data.arity()
    );
    Ok(Outcome {
        inputs: vec![a.features.clone()],
        outputs: vec![a.out.clone()],
        out: a.out.clone(),
        seed: Some(a.seed),
    })
}

pub fn predict(a: &PredictArgs) -> Result<Outcome> {
    let f = File::open(&a.model).with_context(|| format!("opening {}", a.model.display()))?;
    let saved = SavedModel::<Real>::read_json(BufReader::new(f))?;
    let data = read_features(&a.features)?.select_named_columns(&saved.feature_names)?;
    let preds = saved.model.predict(&data.rows)?;
    let mut w = create(&a.out)?;
    writeln!(w, "address,score,label")?;
    for ((id, s), l) in data.ids.iter().zip(&preds.scores).zip(&preds.labels) {
        writeln!(w, "{id},{s:?},{l}")?;
    }
    w.flush()?;
    let positives = preds.labels.iter().filter(|l| l.is_ponzi()).count();
    println!("{} rows scored, {positives} predicted ponzi", data.len());
    Ok(Outcome {
        inputs: vec![a.model.clone(), a.features.clone()],
        outputs: vec![a.out.clone()],
        out: a.out.clone(),
        seed: None,
    })
}

pub fn eval(a: &EvalArgs) -> Result<Outcome> {
    let mut data = read_features(&a.features)?;
    let plan = ExperimentPlan {
        repeats: a.repeats,
        folds: a.folds,
        cv: !a.no_cv,
        test_fraction: a.test_fraction,
        models: vec![a.model.clone()],
        ..base_plan(a.seed)
    };
    if let Some(k) = a.top_k {
        data = refine_top_k(data, k, &plan)?;
    }
    // Feature tables read from CSV carry no interval length; 0 marks it unknown.
    let echo = PlanEcho::new(
        "eval",
        &plan,
        &set_name(data.arity(), a.top_k),
        data.arity(),
        0,
        &a.model,
    );
    let mut report = evaluate(&data, &a.model, &plan, echo)?;
    report.wall_time_s = None;
    write_json(&a.out, &report)?;
    let m = report.mean;
    println!(
        "{} over {} repeats: accuracy {:.4} precision {:.4} recall {:.4} f1 {:.4}",
        a.model, a.repeats, m.accuracy, m.precision, m.recall, m.f1
    );
    Ok(Outcome {
        inputs: vec![a.features.clone()],
        outputs: vec![a.out.clone()],
        out: a.out.clone(),
        seed: Some(a.seed),
    })
}

fn metrics_row(
    hours: u32,
    set: &str,
    extra: &str,
    model: &str,
    arity: usize,
    m: &ponzi_core::eval::Metrics,
) -> String {
    format!(
        "{hours},{set},{extra}{model},{arity},{:?},{:?},{:?},{:?}\n",
        m.accuracy, m.precision, m.recall, m.f1
    )
}

pub fn experiment(a: &ExperimentArgs) -> Result<Outcome> {
    let dataset = load_dataset(&a.dataset)?;
    make_dir(&a.out)?;
    let hours = if !a.interval_hours.is_empty() {
        a.interval_hours.clone()
    } else if a.which == 1 {
        vec![12, 24, 48]
    } else {
        vec![24]
    };
    let sets = if !a.sets.is_empty() {
        a.sets.clone()
    } else if a.which == 1 {
        vec![FeatureSet::Acc, FeatureSet::Ts, FeatureSet::AccTs]
    } else {
        vec![FeatureSet::AccTs]
    };
    let plan = ExperimentPlan {
        feature_sets: sets.clone(),
        interval_hours: hours.clone(),
        models: a.models.clone(),
        repeats: a.repeats,
        folds: a.folds,
        cv: !a.no_cv,
        test_fraction: a.test_fraction,
        ..base_plan(a.seed)
    };
    plan.validate()?;
    let tables = hours
        .iter()
        .map(|&h| FeatureTable::<Real>::build(&dataset, h))
        .collect::<ponzi_core::Result<Vec<_>>>()?;
    let mut outputs = Vec::new();
    match a.which {
        1 => {
            let mut reports = run_experiment1(&tables, &plan)?;
            let mut csv = String::from(
                "interval_hours,feature_set,model,arity,accuracy,precision,recall,f1\n",
            );
            for r in &mut reports {
                r.wall_time_s = None;
                let p = &r.plan;
                csv.push_str(&metrics_row(
                    p.interval_hours,
                    &p.feature_set,
                    "",
                    p.model.token(),
                    p.arity,
                    &r.mean,
                ));
            }
            print!("{csv}");
            let (json, table) = (
                a.out.join("experiment1.json"),
                a.out.join("experiment1.csv"),
            );
            write_json(&json, &reports)?;
            fs::write(&table, csv)?;
            outputs.extend([json, table]);
        }
        2 => {
            let mut reports = Vec::new();
            for table in &tables {
                for model in &a.models {
                    let mut r = run_experiment2(table, &plan, model, a.step)?;
                    r.wall_time_s = None;
                    let tag = format!("{}h_{}", table.interval_hours, model.token());
                    let curve = a.out.join(format!("experiment2_curve_{tag}.csv"));
                    let refined = a.out.join(format!("refined_features_{tag}.txt"));
                    fs::write(&curve, r.curve_csv())?;
                    fs::write(&refined, r.refined.join("\n") + "\n")?;
                    let (acc, ts) = r.composition(r.best_k);
                    println!(
                        "{tag}: {} of {} features used; best top-{} f1 {:.4} ({acc} account, {ts} time-series), all features f1 {:.4}",
                        r.used,
                        r.feature_names.len(),
                        r.best_k,
                        r.best_f1,
                        r.full_f1
                    );
                    outputs.extend([curve, refined]);
                    reports.push(r);
                }
            }
            let json = a.out.join("experiment2.json");
            write_json(&json, &reports)?;
            outputs.push(json);
        }
        _ => {
            let holdouts = a
                .holdout
                .iter()
                .map(|h| Holdout::parse(h))
                .collect::<ponzi_core::Result<Vec<_>>>()?;
            let mut reports = Vec::new();
            let mut csv = String::from("interval_hours,feature_set,holdout,scam_rate,model,arity,accuracy,precision,recall,f1\n");
            for table in &tables {
                for set in &sets {
                    for model in &a.models {
                        for h in &holdouts {
                            for &rate in &a.scam_rates {
                                let mut r = run_experiment3(table, set, &plan, model, h, rate)?;
                                r.wall_time_s = None;
                                let extra = format!("{},{rate:?},", h.name());
                                csv.push_str(&metrics_row(
                                    table.interval_hours,
                                    set.name(),
                                    &extra,
                                    model.token(),
                                    r.plan.arity,
                                    &r.mean,
                                ));
                                reports.push(r);
                            }
                        }
                    }
                }
            }
            print!("{csv}");
            let (json, table) = (
                a.out.join("experiment3.json"),
                a.out.join("experiment3.csv"),
            );
            write_json(&json, &reports)?;
            fs::write(&table, csv)?;
            outputs.extend([json, table]);
        }
    }
    Ok(Outcome {
        inputs: vec![a.dataset.clone()],
        outputs,
        out: a.out.clone(),
        seed: Some(a.seed),
    })
}

pub fn synth(a: &SynthArgs) -> Result<Outcome> {
    let corpus = if a.scheme == "corpus" {
        Corpus::generate(&CorpusSpec {
            chain: a.chain,
            tree: a.tree,
            handover: a.handover,
            waterfall: a.waterfall,
            benign: a.benign,
            failed_rate: a.failed_rate,
            seed: a.seed,
            ..CorpusSpec::default()
        })?
    } else {
        let scheme: Scheme = a.scheme.parse()?;
        let mut p = SchemeParams::new(scheme, a.seed);
        if let Some(n) = a.n_investors {
            p.n_investors = n;
        }
        if let Some(d) = a.duration_days {
            p.duration_days = d;
        }
        let app = generate(&p)?;
        let address_types = app
            .txs
            .iter()
            .map(|t| (app.counterpart(t).to_string(), t.counterpart_is_contract))
            .collect();
        Corpus {
            apps: vec![app],
            params: vec![p],
            address_types,
            failed: Vec::new(),
        }
    };
    corpus.write(&a.out)?;
    let ponzi = corpus.apps.iter().filter(|x| x.label.is_ponzi()).count();
    println!(
        "{} applications ({ponzi} ponzi, {} non-ponzi), {} transactions",
        corpus.apps.len(),
        corpus.apps.len() - ponzi,
        corpus.transactions().len()
    );
    Ok(Outcome {
        inputs: Vec::new(),
        outputs: [TXS_FILE, LABELS_FILE, ADDR_TYPES_FILE]
            .iter()
            .map(|n| a.out.join(n))
            .collect(),
        out: a.out.clone(),
        seed: Some(a.seed),
    })
}
