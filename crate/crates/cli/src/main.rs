//! `ponzi`: ingest, featurize, train, evaluate and synthesize from the command line.

mod commands;
mod figures;
mod manifest;

use std::collections::BTreeMap;
use std::ffi::OsString;
use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

use anyhow::{bail, Context, Result};
use clap::{ArgAction, Args, Parser, Subcommand};
use ponzi_core::eval::FeatureSet;
use ponzi_core::models::ModelConfig;
use serde::Serialize;

use crate::manifest::{digest_all, manifest_path, mismatches, RunManifest};

#[derive(Debug, Parser)]
#[command(
    name = "ponzi",
    version,
    about = "Ponzi-scheme contract detection",
    args_override_self = true
)]
struct Cli {
    /// Maximum number of worker threads.
    #[arg(long, global = true, value_name = "N")]
    threads: Option<usize>,

    /// File of `key=value` lines used as defaults for the subcommand's flags.
    #[arg(long, global = true, value_name = "FILE")]
    config: Option<PathBuf>,

    /// More logging (-v info, -vv debug).
    #[arg(short, long, global = true, action = ArgAction::Count)]
    verbose: u8,

    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand, Serialize)]
#[serde(untagged)]
enum Command {
    /// Parse, filter and refine a labeled transaction corpus into a dataset directory.
    Ingest(IngestArgs),
    /// Compute a feature table from a dataset directory.
    Features(FeaturesArgs),
    /// Fit one model on a feature table and save it.
    Train(TrainArgs),
    /// Score a feature table with a saved model.
    Predict(PredictArgs),
    /// Repeated split / oversample / fit / test evaluation of one model.
    Eval(EvalArgs),
    /// Run experiment 1 (feature sets and models), 2 (top-k features) or 3 (unseen types).
    Experiment(ExperimentArgs),
    /// Generate a synthetic corpus or a single scheme trace.
    Synth(SynthArgs),
    /// Per-day volume, per-transaction event and balance tables of one application.
    FigureData(FigureArgs),
    /// Re-run the command recorded in a manifest and compare output digests.
    Replay(ReplayArgs),
}

impl Command {
    fn name(&self) -> &'static str {
        match self {
            Command::Ingest(_) => "ingest",
            Command::Features(_) => "features",
            Command::Train(_) => "train",
            Command::Predict(_) => "predict",
            Command::Eval(_) => "eval",
            Command::Experiment(_) => "experiment",
            Command::Synth(_) => "synth",
            Command::FigureData(_) => "figure-data",
            Command::Replay(_) => "replay",
        }
    }
}

fn parse_hours(s: &str) -> Result<u32, String> {
    match s.parse::<u32>() {
        Ok(h @ (12 | 24 | 48)) => Ok(h),
        _ => Err(format!("interval must be 12, 24 or 48 hours, got {s:?}")),
    }
}

fn parse_fraction(s: &str) -> Result<f64, String> {
    match s.parse::<f64>() {
        Ok(f) if f > 0.0 && f < 1.0 => Ok(f),
        _ => Err(format!("expected a number in (0, 1), got {s:?}")),
    }
}

#[derive(Debug, Args, Serialize)]
pub struct IngestArgs {
    /// Transactions file (.jsonl or .csv).
    #[arg(long)]
    pub txs: PathBuf,
    /// Labels CSV: address,label,ponzi_type.
    #[arg(long)]
    pub labels: PathBuf,
    /// Optional address,is_contract CSV.
    #[arg(long)]
    pub addr_types: Option<PathBuf>,
    /// Fail when a labeled address has no transactions.
    #[arg(long)]
    pub strict: bool,
    /// Output dataset directory.
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args, Serialize)]
pub struct FeaturesArgs {
    /// Dataset directory (from `ingest` or `synth`).
    #[arg(long)]
    pub dataset: PathBuf,
    #[arg(long, default_value = "24", value_parser = parse_hours)]
    pub interval_hours: u32,
    /// acc, ts or acc-ts.
    #[arg(long, default_value = "acc-ts")]
    pub set: FeatureSet,
    /// Output feature CSV.
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args, Serialize)]
pub struct TrainArgs {
    /// Feature CSV.
    #[arg(long)]
    pub features: PathBuf,
    /// knn, rf, gbdt-level or gbdt-leaf.
    #[arg(long, default_value = "gbdt-leaf")]
    pub model: ModelConfig,
    /// Keep only the k features split on most by a leaf-wise gbdt.
    #[arg(long)]
    pub top_k: Option<usize>,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Output model JSON.
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args, Serialize)]
pub struct PredictArgs {
    /// Saved model JSON.
    #[arg(long)]
    pub model: PathBuf,
    /// Feature CSV containing at least the model's features.
    #[arg(long)]
    pub features: PathBuf,
    /// Output CSV: address,score,label.
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args, Serialize)]
pub struct EvalArgs {
    /// Feature CSV.
    #[arg(long)]
    pub features: PathBuf,
    /// knn, rf, gbdt-level or gbdt-leaf.
    #[arg(long, default_value = "gbdt-leaf")]
    pub model: ModelConfig,
    #[arg(long, default_value_t = 50)]
    pub repeats: usize,
    #[arg(long, default_value_t = 5)]
    pub folds: usize,
    #[arg(long, default_value = "0.2", value_parser = parse_fraction)]
    pub test_fraction: f64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Keep only the k features split on most by a leaf-wise gbdt.
    #[arg(long)]
    pub top_k: Option<usize>,
    /// Skip the cross-validation diagnostics.
    #[arg(long)]
    pub no_cv: bool,
    /// Output report JSON.
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args, Serialize)]
pub struct ExperimentArgs {
    /// Which experiment: 1, 2 or 3.
    #[arg(value_parser = clap::value_parser!(u8).range(1..=3))]
    pub which: u8,
    /// Dataset directory (from `ingest` or `synth`).
    #[arg(long)]
    pub dataset: PathBuf,
    /// Output directory.
    #[arg(long)]
    pub out: PathBuf,
    /// Comma-separated model tokens.
    #[arg(long, value_delimiter = ',', default_value = "gbdt-leaf")]
    pub models: Vec<ModelConfig>,
    /// Comma-separated feature sets [default: acc,ts,acc-ts for 1, acc-ts for 3].
    #[arg(long, value_delimiter = ',')]
    pub sets: Vec<FeatureSet>,
    /// Comma-separated interval lengths [default: 12,24,48 for 1, 24 otherwise].
    #[arg(long, value_delimiter = ',', value_parser = parse_hours)]
    pub interval_hours: Vec<u32>,
    #[arg(long, default_value_t = 50)]
    pub repeats: usize,
    #[arg(long, default_value_t = 5)]
    pub folds: usize,
    #[arg(long, default_value = "0.2", value_parser = parse_fraction)]
    pub test_fraction: f64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Skip the cross-validation diagnostics.
    #[arg(long)]
    pub no_cv: bool,
    /// Experiment 2: prefix step of the top-k curve.
    #[arg(long, default_value_t = 5)]
    pub step: usize,
    /// Experiment 3: comma-separated held-out types (tree, handover, waterfall, all).
    #[arg(
        long,
        value_delimiter = ',',
        default_value = "tree,handover,waterfall,all"
    )]
    pub holdout: Vec<String>,
    /// Experiment 3: comma-separated ponzi shares of the test set.
    #[arg(long, value_delimiter = ',', default_value = "1.0,0.5,0.06")]
    pub scam_rates: Vec<f64>,
}

#[derive(Debug, Args, Serialize)]
pub struct SynthArgs {
    /// Output directory.
    #[arg(long)]
    pub out: PathBuf,
    /// corpus, chain, tree, handover, waterfall or benign.
    #[arg(long, default_value = "corpus")]
    pub scheme: String,
    #[arg(long, default_value_t = 48)]
    pub chain: usize,
    #[arg(long, default_value_t = 4)]
    pub tree: usize,
    #[arg(long, default_value_t = 4)]
    pub handover: usize,
    #[arg(long, default_value_t = 4)]
    pub waterfall: usize,
    #[arg(long, default_value_t = 940)]
    pub benign: usize,
    /// Corpus: chance of a failed copy of each incoming call.
    #[arg(long, default_value_t = 0.02)]
    pub failed_rate: f64,
    /// Single scheme: number of investors (or users).
    #[arg(long)]
    pub n_investors: Option<usize>,
    /// Single benign trace: active days.
    #[arg(long)]
    pub duration_days: Option<u32>,
    #[arg(long, default_value_t = 1)]
    pub seed: u64,
}

#[derive(Debug, Args, Serialize)]
pub struct FigureArgs {
    /// Dataset directory.
    #[arg(long)]
    pub dataset: PathBuf,
    /// Application address.
    #[arg(long)]
    pub address: String,
    /// Output directory.
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args, Serialize)]
pub struct ReplayArgs {
    /// Manifest written by an earlier run.
    #[arg(long)]
    pub manifest: PathBuf,
    /// Fail when any output differs from the recorded digest.
    #[arg(long)]
    pub check: bool,
}

/// What a command read and wrote, for its manifest.
pub struct Outcome {
    pub inputs: Vec<PathBuf>,
    pub outputs: Vec<PathBuf>,
    /// The `--out` target the manifest is placed next to (or inside).
    pub out: PathBuf,
    pub seed: Option<u64>,
}

/// Index of the subcommand token in `args` (program name at 0).
fn subcommand_position(args: &[OsString]) -> Option<usize> {
    let mut i = 1;
    while i < args.len() {
        let a = args[i].to_string_lossy();
        if a == "--threads" || a == "--config" {
            i += 2;
        } else if a.starts_with('-') {
            i += 1;
        } else {
            return Some(i);
        }
    }
    None
}

/// Turns `key=value` lines into flags; `#` starts a comment, `true`/`false` toggle switches.
fn config_flags(text: &str) -> Result<Vec<OsString>> {
    let mut out = Vec::new();
    for (n, line) in text.lines().enumerate() {
        let line = line.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let Some((key, value)) = line.split_once('=') else {
            bail!("config line {}: expected key=value", n + 1);
        };
        let key = key.trim().replace('_', "-");
        let value = value.trim().trim_matches('"');
        match value {
            "true" => out.push(format!("--{key}").into()),
            "false" => {}
            v => {
                out.push(format!("--{key}").into());
                out.push(v.into());
            }
        }
    }
    Ok(out)
}

/// Drops `--config FILE` and `--config=FILE` from an argument list.
fn without_config(args: &[OsString]) -> Vec<OsString> {
    let mut out = Vec::new();
    let mut skip = false;
    for a in args {
        if skip {
            skip = false;
            continue;
        }
        let s = a.to_string_lossy();
        if s == "--config" {
            skip = true;
        } else if !s.starts_with("--config=") {
            out.push(a.clone());
        }
    }
    out
}

/// Parses `args`, splicing config-file flags in front of the subcommand's own flags
/// so that flags given on the command line win.
fn parse(args: Vec<OsString>) -> Result<(Cli, Vec<OsString>), clap::Error> {
    let cli = Cli::try_parse_from(&args)?;
    let Some(config) = &cli.config else {
        return Ok((cli, args));
    };
    let text = std::fs::read_to_string(config).map_err(|e| {
        clap::Error::raw(
            clap::error::ErrorKind::Io,
            format!("cannot read config {}: {e}\n", config.display()),
        )
    })?;
    let extra = config_flags(&text)
        .map_err(|e| clap::Error::raw(clap::error::ErrorKind::InvalidValue, format!("{e}\n")))?;
    let pos = subcommand_position(&args).expect("parsed command line has a subcommand");
    let mut expanded = without_config(&args[..=pos]);
    expanded.extend(extra);
    expanded.extend(without_config(&args[pos + 1..]));
    let cli = Cli::try_parse_from(&expanded)?;
    Ok((cli, expanded))
}

fn flags_of(command: &Command) -> BTreeMap<String, serde_json::Value> {
    match serde_json::to_value(command) {
        Ok(serde_json::Value::Object(map)) => map.into_iter().collect(),
        _ => BTreeMap::new(),
    }
}

fn run_command(command: &Command) -> Result<Outcome> {
    match command {
        Command::Ingest(a) => commands::ingest(a),
        Command::Features(a) => commands::features(a),
        Command::Train(a) => commands::train(a),
        Command::Predict(a) => commands::predict(a),
        Command::Eval(a) => commands::eval(a),
        Command::Experiment(a) => commands::experiment(a),
        Command::Synth(a) => commands::synth(a),
        Command::FigureData(a) => figures::figure_data(a),
        Command::Replay(_) => unreachable!("replay is handled by the caller"),
    }
}

/// Runs `cli` and writes its manifest; returns the manifest.
fn execute(cli: &Cli, argv: &[OsString], effective: &[OsString]) -> Result<RunManifest> {
    let started = Instant::now();
    let outcome = run_command(&cli.command)?;
    let mut inputs = outcome.inputs.clone();
    if let Some(c) = &cli.config {
        inputs.push(c.clone());
    }
    let strings = |a: &[OsString]| {
        a.iter()
            .skip(1)
            .map(|s| s.to_string_lossy().into_owned())
            .collect()
    };
    let manifest = RunManifest {
        command: cli.command.name().to_string(),
        argv: strings(argv),
        effective_args: strings(effective),
        flags: flags_of(&cli.command),
        seed: outcome.seed,
        cwd: std::env::current_dir().unwrap_or_default(),
        inputs: digest_all(&inputs)?,
        outputs: digest_all(&outcome.outputs)?,
        tool_version: env!("CARGO_PKG_VERSION").to_string(),
        wall_time_s: started.elapsed().as_secs_f64(),
    };
    let path = manifest_path(&outcome.out);
    manifest.write(&path)?;
    log::info!("manifest written to {}", path.display());
    Ok(manifest)
}

fn replay(args: &ReplayArgs) -> Result<()> {
    let recorded = RunManifest::read(&args.manifest)?;
    if recorded.command == "replay" {
        bail!("a replay manifest cannot be replayed");
    }
    let mut effective: Vec<OsString> = vec!["ponzi".into()];
    effective.extend(recorded.effective_args.iter().map(OsString::from));
    let cli = Cli::try_parse_from(&effective).with_context(|| {
        format!(
            "manifest {} holds invalid arguments",
            args.manifest.display()
        )
    })?;
    let fresh = execute(&cli, &effective, &effective)?;
    let bad = mismatches(&recorded.outputs, &fresh.outputs);
    if bad.is_empty() {
        println!("replay: {} output(s) identical", recorded.outputs.len());
        return Ok(());
    }
    for p in &bad {
        println!("replay: differs: {}", p.display());
    }
    if args.check {
        bail!("{} output(s) differ from the manifest", bad.len());
    }
    Ok(())
}

fn main() -> ExitCode {
    let argv: Vec<OsString> = std::env::args_os().collect();
    let (cli, effective) = match parse(argv.clone()) {
        Ok(v) => v,
        Err(e) => e.exit(),
    };
    let level = match cli.verbose {
        0 => log::LevelFilter::Warn,
        1 => log::LevelFilter::Info,
        _ => log::LevelFilter::Debug,
    };
    env_logger::Builder::new()
        .filter_level(level)
        .parse_default_env()
        .init();
    if let Some(n) = cli.threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
        {
            log::warn!("could not size the thread pool: {e}");
        }
    }
    let result = match &cli.command {
        Command::Replay(a) => replay(a),
        _ => execute(&cli, &argv, &effective).map(|_| ()),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn os(v: &[&str]) -> Vec<OsString> {
        v.iter().map(OsString::from).collect()
    }

    #[test]
    fn config_lines_become_flags() {
        let flags = config_flags("# defaults\nrepeats = 3\nno_cv=true\nstrict=false\n\n").unwrap();
        assert_eq!(flags, os(&["--repeats", "3", "--no-cv"]));
        assert!(config_flags("repeats").is_err());
    }

    #[test]
    fn finds_subcommand_after_globals() {
        let args = os(&["ponzi", "--threads", "2", "-v", "eval", "--repeats", "1"]);
        assert_eq!(subcommand_position(&args), Some(4));
        assert_eq!(
            without_config(&os(&["a", "--config", "f", "b", "--config=g"])),
            os(&["a", "b"])
        );
    }
}
