//! CSV and manifest emission.
//!
//! CSV uses RFC-4180 quoting, `.` decimal separator, UTF-8, `\n` line
//! terminator; numbers are written in Rust's shortest round-trip form so
//! identical runs produce byte-identical bodies. Manifests are JSON with
//! sorted keys; only the timing fields vary between identical runs.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use serde_json::{json, Value};

use crate::errors::CliResult;

pub fn fmt_f64(v: f64) -> String {
    format!("{v}")
}

pub fn write_csv(path: &Path, header: &[&str], rows: &[Vec<String>]) -> CliResult<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(header)?;
    for row in rows {
        w.write_record(row)?;
    }
    w.flush()?;
    Ok(())
}

/// Gnuplot-native column layout: a `#`-prefixed header line followed by
/// space-separated rows, ready for `plot "file.dat" using 1:2`.
pub fn write_gnuplot(path: &Path, header: &[&str], rows: &[Vec<String>]) -> CliResult<()> {
    let mut text = format!("# {}\n", header.join(" "));
    for row in rows {
        text.push_str(&row.join(" "));
        text.push('\n');
    }
    std::fs::write(path, text)?;
    Ok(())
}

pub struct ManifestBuilder {
    command: String,
    kind: Option<String>,
    seed: Option<u64>,
    config: BTreeMap<String, String>,
    outputs: Vec<PathBuf>,
    extra: BTreeMap<String, Value>,
    started_unix_ms: u128,
    start: std::time::Instant,
}

impl ManifestBuilder {
    pub fn new(command: &str) -> Self {
        Self {
            command: command.to_string(),
            kind: None,
            seed: None,
            config: BTreeMap::new(),
            outputs: Vec::new(),
            extra: BTreeMap::new(),
            started_unix_ms: SystemTime::now()
                .duration_since(UNIX_EPOCH)
                .map(|d| d.as_millis())
                .unwrap_or(0),
            start: std::time::Instant::now(),
        }
    }

    pub fn kind(mut self, kind: &str) -> Self {
        self.kind = Some(kind.to_string());
        self
    }

    pub fn seed(mut self, seed: u64) -> Self {
        self.seed = Some(seed);
        self
    }

    pub fn config(mut self, echo: BTreeMap<String, String>) -> Self {
        self.config = echo;
        self
    }

    pub fn output(mut self, path: &Path) -> Self {
        self.outputs.push(path.to_path_buf());
        self
    }

    pub fn extra(mut self, key: &str, value: Value) -> Self {
        self.extra.insert(key.to_string(), value);
        self
    }

    pub fn write(self, path: &Path) -> CliResult<Value> {
        let manifest = json!({
            "artifact": "sls",
            "version": env!("CARGO_PKG_VERSION"),
            "command": self.command,
            "kind": self.kind,
            "seed": self.seed,
            "config": self.config,
            "outputs": self.outputs.iter().map(|p| p.display().to_string()).collect::<Vec<_>>(),
            "started_unix_ms": self.started_unix_ms as u64,
            "duration_ms": self.start.elapsed().as_millis() as u64,
            "extra": self.extra,
        });
        std::fs::write(path, format!("{:#}\n", manifest))?;
        Ok(manifest)
    }
}

pub fn ensure_dir(dir: &Path) -> CliResult<()> {
    std::fs::create_dir_all(dir)?;
    Ok(())
}
