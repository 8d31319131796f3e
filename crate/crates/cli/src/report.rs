//! Report files: every report carries the seed, a hash of the effective
//! configuration and the tool version.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use serde::Serialize;
use sha2::{Digest, Sha256};

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ReportMeta {
    pub tool: &'static str,
    pub version: &'static str,
    pub command: &'static str,
    pub seed: u64,
    pub config_hash: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub wall_time_secs: Option<f64>,
}

impl ReportMeta {
    pub fn new(command: &'static str, seed: u64, config_hash: String) -> Self {
        Self { tool: "rdm-gmr", version: env!("CARGO_PKG_VERSION"), command, seed, config_hash, wall_time_secs: None }
    }
}

/// SHA-256 over the command, the effective settings and the input bytes.
pub fn config_hash(command: &str, settings: &impl Serialize, inputs: &[&Path]) -> Result<String> {
    let mut h = Sha256::new();
    h.update(command.as_bytes());
    h.update(serde_json::to_vec(settings)?);
    for p in inputs {
        h.update(std::fs::read(p).with_context(|| format!("reading {}", p.display()))?);
    }
    Ok(format!("{:x}", h.finalize()))
}

fn create(dir: &Path, name: &str) -> Result<(PathBuf, BufWriter<File>)> {
    std::fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    let path = dir.join(name);
    let file = File::create(&path).with_context(|| format!("creating {}", path.display()))?;
    Ok((path, BufWriter::new(file)))
}

#[derive(Serialize)]
struct Envelope<'a, T> {
    #[serde(flatten)]
    meta: &'a ReportMeta,
    results: &'a T,
}

pub fn write_json<T: Serialize>(dir: &Path, name: &str, meta: &ReportMeta, results: &T) -> Result<PathBuf> {
    let (path, mut w) = create(dir, name)?;
    serde_json::to_writer_pretty(&mut w, &Envelope { meta, results })?;
    writeln!(w)?;
    w.flush()?;
    Ok(path)
}

/// Writes `rows` as CSV, preceded by `# key: value` metadata lines when
/// `meta` is given.
pub fn write_csv<R: Serialize>(dir: &Path, name: &str, meta: Option<&ReportMeta>, rows: &[R]) -> Result<PathBuf> {
    let (path, mut w) = create(dir, name)?;
    if let Some(m) = meta {
        writeln!(w, "# tool: {} {}", m.tool, m.version)?;
        writeln!(w, "# command: {}", m.command)?;
        writeln!(w, "# seed: {}", m.seed)?;
        writeln!(w, "# config_hash: {}", m.config_hash)?;
        if let Some(t) = m.wall_time_secs {
            writeln!(w, "# wall_time_secs: {t:.3}")?;
        }
    }
    let mut csv = csv::Writer::from_writer(w);
    for r in rows {
        csv.serialize(r)?;
    }
    csv.flush()?;
    Ok(path)
}
