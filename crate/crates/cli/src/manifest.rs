//! Run manifests: what was run, on which inputs, producing which outputs.

use std::collections::BTreeMap;
use std::fs::{self, File};
use std::io::{self, BufReader};
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

pub const MANIFEST_SUFFIX: &str = ".manifest.json";

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FileDigest {
    pub path: PathBuf,
    pub sha256: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub command: String,
    /// Arguments as typed, without the program name.
    pub argv: Vec<String>,
    /// Arguments after config-file expansion; replay runs these.
    pub effective_args: Vec<String>,
    /// Every option of the subcommand with its resolved value.
    pub flags: BTreeMap<String, serde_json::Value>,
    pub seed: Option<u64>,
    pub cwd: PathBuf,
    pub inputs: Vec<FileDigest>,
    pub outputs: Vec<FileDigest>,
    pub tool_version: String,
    pub wall_time_s: f64,
}

impl RunManifest {
    pub fn write(&self, path: &Path) -> Result<()> {
        let text = serde_json::to_string_pretty(self)?;
        fs::write(path, text + "\n").with_context(|| format!("writing {}", path.display()))
    }

    pub fn read(path: &Path) -> Result<Self> {
        let f = File::open(path).with_context(|| format!("opening {}", path.display()))?;
        serde_json::from_reader(BufReader::new(f))
            .with_context(|| format!("parsing manifest {}", path.display()))
    }
}

/// Where the manifest of a run writing to `out` goes: inside a directory output,
/// next to a file output.
pub fn manifest_path(out: &Path) -> PathBuf {
    if out.is_dir() {
        out.join(format!("run{MANIFEST_SUFFIX}"))
    } else {
        let mut name = out.file_name().unwrap_or_default().to_os_string();
        name.push(MANIFEST_SUFFIX);
        out.with_file_name(name)
    }
}

pub fn sha256_file(path: &Path) -> Result<String> {
    let mut f = File::open(path).with_context(|| format!("opening {}", path.display()))?;
    let mut h = Sha256::new();
    io::copy(&mut f, &mut h).with_context(|| format!("reading {}", path.display()))?;
    Ok(hex::encode(h.finalize()))
}

fn is_manifest(path: &Path) -> bool {
    path.to_string_lossy().ends_with(MANIFEST_SUFFIX)
}

/// Digests of `paths`; a directory contributes its regular files (not recursively),
/// manifests excluded. Missing paths are skipped.
pub fn digest_all(paths: &[PathBuf]) -> Result<Vec<FileDigest>> {
    let mut files = Vec::new();
    for p in paths {
        if p.is_dir() {
            let mut inner: Vec<PathBuf> = fs::read_dir(p)
                .with_context(|| format!("listing {}", p.display()))?
                .filter_map(|e| e.ok().map(|e| e.path()))
                .filter(|q| q.is_file() && !is_manifest(q))
                .collect();
            inner.sort();
            files.extend(inner);
        } else if p.is_file() {
            files.push(p.clone());
        }
    }
    files.dedup();
    files
        .into_iter()
        .map(|path| {
            let sha256 = sha256_file(&path)?;
            Ok(FileDigest { path, sha256 })
        })
        .collect()
}

/// Outputs whose digest differs from (or is missing relative to) the recorded one.
pub fn mismatches(recorded: &[FileDigest], now: &[FileDigest]) -> Vec<PathBuf> {
    let now: BTreeMap<&Path, &str> = now
        .iter()
        .map(|d| (d.path.as_path(), d.sha256.as_str()))
        .collect();
    recorded
        .iter()
        .filter(|d| now.get(d.path.as_path()) != Some(&d.sha256.as_str()))
        .map(|d| d.path.clone())
        .collect()
}
