use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;

fn ponzi(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_ponzi"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn ok(args: &[&str]) -> String {
    let out = ponzi(args);
    assert!(
        out.status.success(),
        "ponzi {args:?} failed:\n{}",
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8(out.stdout).unwrap()
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

/// A small synthetic corpus directory plus its 24h feature tables.
struct Fixture {
    _dir: tempfile::TempDir,
    root: PathBuf,
    corpus: PathBuf,
}

impl Fixture {
    fn new() -> Self {
        let dir = tempfile::tempdir().unwrap();
        let root = dir.path().to_path_buf();
        let corpus = root.join("corpus");
        ok(&[
            "synth",
            "--out",
            s(&corpus),
            "--chain",
            "10",
            "--tree",
            "2",
            "--handover",
            "2",
            "--waterfall",
            "2",
            "--benign",
            "50",
            "--seed",
            "3",
        ]);
        Fixture {
            _dir: dir,
            root,
            corpus,
        }
    }

    fn path(&self, name: &str) -> PathBuf {
        self.root.join(name)
    }

    fn features(&self, set: &str) -> PathBuf {
        let out = self.path(&format!("features_{set}.csv"));
        if !out.exists() {
            ok(&[
                "features",
                "--dataset",
                s(&self.corpus),
                "--set",
                set,
                "--out",
                s(&out),
            ]);
        }
        out
    }
}

fn csv_rows(path: &Path) -> Vec<Vec<String>> {
    fs::read_to_string(path)
        .unwrap()
        .lines()
        .map(|l| l.split(',').map(str::to_string).collect())
        .collect()
}

fn manifest_of(out: &Path) -> PathBuf {
    if out.is_dir() {
        out.join("run.manifest.json")
    } else {
        let mut name = out.file_name().unwrap().to_os_string();
        name.push(".manifest.json");
        out.with_file_name(name)
    }
}

#[test]
fn usage_and_runtime_exit_codes() {
    let fx = Fixture::new();
    let f = fx.features("acc");
    let out = fx.path("r.json");
    let bad = ponzi(&[
        "eval",
        "--features",
        s(&f),
        "--model",
        "svm-poly",
        "--out",
        s(&out),
    ]);
    assert_eq!(bad.status.code(), Some(2));
    assert_eq!(
        ponzi(&[
            "features",
            "--dataset",
            "x",
            "--interval-hours",
            "6",
            "--out",
            "y"
        ])
        .status
        .code(),
        Some(2)
    );
    assert_eq!(ponzi(&["frobnicate"]).status.code(), Some(2));
    let missing = ponzi(&[
        "eval",
        "--features",
        s(&fx.path("none.csv")),
        "--out",
        s(&out),
    ]);
    assert_eq!(missing.status.code(), Some(1));
    assert!(!out.exists());
}

#[test]
fn feature_tables_have_registry_arity() {
    let fx = Fixture::new();
    let mut row_counts = Vec::new();
    for (set, arity) in [("acc", 29), ("ts", 516), ("acc-ts", 545)] {
        let rows = csv_rows(&fx.features(set));
        let header = &rows[0];
        assert_eq!(header.first().map(String::as_str), Some("address"));
        assert_eq!(header.last().map(String::as_str), Some("label"));
        assert_eq!(header.len() - 2, arity, "{set}");
        row_counts.push(rows.len() - 1);
        assert!(manifest_of(&fx.features(set)).exists());
    }
    // a few short-lived synthetic apps are refined away; the rest appear in every table
    assert!(
        row_counts[0] > 50 && row_counts.iter().all(|&n| n == row_counts[0]),
        "{row_counts:?}"
    );
}

#[test]
fn eval_reports_are_reproducible() {
    let fx = Fixture::new();
    let f = fx.features("acc");
    let run = |name: &str| {
        let out = fx.path(name);
        ok(&[
            "eval",
            "--features",
            s(&f),
            "--repeats",
            "1",
            "--seed",
            "7",
            "--out",
            s(&out),
        ]);
        fs::read(out).unwrap()
    };
    let a = run("a.json");
    assert_eq!(a, run("b.json"));
    let report: Value = serde_json::from_slice(&a).unwrap();
    assert_eq!(report["per_repeat"].as_array().unwrap().len(), 1);
    assert_eq!(report["plan"]["arity"], 29);
}

#[test]
fn flags_override_config_file() {
    let fx = Fixture::new();
    let f = fx.features("acc");
    let config = fx.path("defaults.conf");
    fs::write(
        &config,
        "# shared defaults\nrepeats = 3\nseed = 5\nno_cv = true\n",
    )
    .unwrap();
    let out = fx.path("r.json");
    ok(&[
        "--config",
        s(&config),
        "eval",
        "--features",
        s(&f),
        "--repeats",
        "2",
        "--out",
        s(&out),
    ]);
    let report: Value = serde_json::from_str(&fs::read_to_string(&out).unwrap()).unwrap();
    assert_eq!(report["per_repeat"].as_array().unwrap().len(), 2);
    assert_eq!(report["plan"]["seed"], 5);
    assert_eq!(report["plan"]["cv"], false);
}

#[test]
fn figure_data_agrees_with_features() {
    let fx = Fixture::new();
    let acc = csv_rows(&fx.features("acc"));
    let col = |name: &str| acc[0].iter().position(|h| h == name).unwrap();
    let labels = csv_rows(&fx.corpus.join("labels.csv"));
    let schemes: Vec<&str> = labels[1..]
        .iter()
        .filter(|r| r[1] == "ponzi")
        .map(|r| r[0].as_str())
        .take(3)
        .collect();
    for address in schemes {
        let out = fx.path(&format!("fig_{address}"));
        ok(&[
            "figure-data",
            "--dataset",
            s(&fx.corpus),
            "--address",
            address,
            "--out",
            s(&out),
        ]);
        let row = acc.iter().find(|r| r[0] == address).unwrap();
        let n_txs: f64 = row[col("num_all_txs")].parse().unwrap();

        let daily = csv_rows(&out.join("daily_volume.csv"));
        let total: usize = daily[1..]
            .iter()
            .map(|r| r[1].parse::<usize>().unwrap())
            .sum();
        assert_eq!(total as f64, n_txs);

        let events = csv_rows(&out.join("events.csv"));
        assert_eq!((events.len() - 1) as f64, n_txs);

        let balance = csv_rows(&out.join("balance.csv"));
        let last: f64 = balance.last().unwrap()[1].parse().unwrap();
        let want: f64 = row[col("balance")].parse().unwrap();
        assert!(
            (last - want).abs() <= 1e-9 * want.abs().max(1.0),
            "{last} vs {want}"
        );
    }
    let absent = ponzi(&[
        "figure-data",
        "--dataset",
        s(&fx.corpus),
        "--address",
        "0xnone",
        "--out",
        s(&fx.path("x")),
    ]);
    assert_eq!(absent.status.code(), Some(1));
}

#[test]
fn every_command_replays_from_its_manifest() {
    let fx = Fixture::new();
    let acc = fx.features("acc");
    let ingested = fx.path("ingested");
    let model = fx.path("model.json");
    let preds = fx.path("preds.csv");
    let report = fx.path("report.json");
    let exp1 = fx.path("exp1");
    let exp3 = fx.path("exp3");
    let fig = fx.path("fig");
    let address = csv_rows(&acc)[1][0].clone();
    let corpus = fx.corpus.clone();
    let runs: Vec<(Vec<String>, PathBuf)> = vec![
        (
            vec![
                "ingest".into(),
                "--txs".into(),
                s(&corpus.join("transactions.jsonl")).into(),
                "--labels".into(),
                s(&corpus.join("labels.csv")).into(),
                "--addr-types".into(),
                s(&corpus.join("address_types.csv")).into(),
                "--out".into(),
                s(&ingested).into(),
            ],
            ingested.clone(),
        ),
        (
            format!("train --features {} --model rf --seed 4 --out {}", s(&acc), s(&model))
                .split_whitespace().map(String::from).collect(),
            model.clone(),
        ),
        (
            format!("predict --model {} --features {} --out {}", s(&model), s(&acc), s(&preds))
                .split_whitespace().map(String::from).collect(),
            preds.clone(),
        ),
        (
            format!("eval --features {} --repeats 2 --seed 9 --top-k 10 --out {}", s(&acc), s(&report))
                .split_whitespace().map(String::from).collect(),
            report.clone(),
        ),
        (
            format!(
                "experiment 1 --dataset {} --sets acc,ts --interval-hours 48 --repeats 1 --no-cv --out {}",
                s(&corpus),
                s(&exp1)
            )
            .split_whitespace().map(String::from).collect(),
            exp1.clone(),
        ),
        (
            format!(
                "experiment 3 --dataset {} --sets acc --holdout tree --scam-rates 0.5 --repeats 1 --no-cv --out {}",
                s(&corpus),
                s(&exp3)
            )
            .split_whitespace().map(String::from).collect(),
            exp3.clone(),
        ),
        (
            format!("figure-data --dataset {} --address {address} --out {}", s(&corpus), s(&fig))
                .split_whitespace().map(String::from).collect(),
            fig.clone(),
        ),
        (
            format!("synth --scheme waterfall --n-investors 30 --seed 2 --out {}", s(&fx.path("wf")))
                .split_whitespace().map(String::from).collect(),
            fx.path("wf"),
        ),
    ];
    for (args, out) in &runs {
        let args: Vec<&str> = args.iter().map(String::as_str).collect();
        ok(&args);
        let manifest = manifest_of(out);
        let recorded: Value =
            serde_json::from_str(&fs::read_to_string(&manifest).unwrap()).unwrap();
        assert_eq!(recorded["command"], args[0]);
        assert!(
            !recorded["outputs"].as_array().unwrap().is_empty(),
            "{args:?}"
        );
        let stdout = ok(&["replay", "--manifest", s(&manifest), "--check"]);
        assert!(stdout.contains("identical"), "{args:?}: {stdout}");
    }

    // a doctored digest is reported and fails the check
    let manifest = manifest_of(&report);
    let mut m: Value = serde_json::from_str(&fs::read_to_string(&manifest).unwrap()).unwrap();
    m["outputs"][0]["sha256"] = Value::from("00");
    fs::write(&manifest, serde_json::to_string(&m).unwrap()).unwrap();
    let out = ponzi(&["replay", "--manifest", s(&manifest), "--check"]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stdout).contains("differs"));
}
