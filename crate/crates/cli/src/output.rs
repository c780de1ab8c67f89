//! Self-describing output files: every CSV starts with a metadata comment,
//! every JSON document wraps its payload next to the same metadata.

use std::fs;
use std::path::{Path, PathBuf};

use serde::Serialize;

use crate::error::CliError;

pub const TOOL: &str = "cqad";
pub const VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Debug, Clone, Serialize)]
pub struct Meta {
    pub tool: &'static str,
    pub version: &'static str,
    pub config_hash: String,
    pub command: &'static str,
}

impl Meta {
    pub fn new(config_hash: String, command: &'static str) -> Self {
        Self { tool: TOOL, version: VERSION, config_hash, command }
    }

    fn header(&self) -> String {
        format!("# tool={} version={} config_hash={}\n", self.tool, self.version, self.config_hash)
    }
}

#[derive(Serialize)]
struct Document<'a, T: Serialize> {
    meta: &'a Meta,
    data: &'a T,
}

#[derive(Serialize)]
struct Manifest<'a> {
    meta: &'a Meta,
    complete: bool,
    files: &'a [String],
    #[serde(skip_serializing_if = "Option::is_none")]
    failed_stage: Option<&'a str>,
    #[serde(skip_serializing_if = "Option::is_none")]
    error: Option<String>,
}

/// Output directory plus the list of files written so far.
pub struct Output {
    dir: PathBuf,
    meta: Meta,
    written: Vec<String>,
}

impl Output {
    pub fn create(dir: &Path, meta: Meta) -> Result<Self, CliError> {
        fs::create_dir_all(dir).map_err(|source| CliError::Output { path: dir.to_path_buf(), source })?;
        Ok(Self { dir: dir.to_path_buf(), meta, written: Vec::new() })
    }

    fn write(&mut self, name: &str, bytes: Vec<u8>) -> Result<(), CliError> {
        let path = self.dir.join(name);
        fs::write(&path, bytes).map_err(|source| CliError::Output { path, source })?;
        self.written.push(name.to_string());
        Ok(())
    }

    /// Writes `rows` under `headers`; cells are already formatted.
    pub fn csv(&mut self, name: &str, headers: &[&str], rows: &[Vec<String>]) -> Result<(), CliError> {
        let mut w = csv::Writer::from_writer(self.meta.header().into_bytes());
        w.write_record(headers)?;
        for r in rows {
            w.write_record(r)?;
        }
        let bytes = w.into_inner().map_err(|e| CliError::Csv(e.into_error().into()))?;
        self.write(name, bytes)
    }

    pub fn json<T: Serialize>(&mut self, name: &str, data: &T) -> Result<(), CliError> {
        let mut bytes = serde_json::to_vec_pretty(&Document { meta: &self.meta, data })?;
        bytes.push(b'\n');
        self.write(name, bytes)
    }

    /// Records which files exist and whether the command ran to completion.
    pub fn finish(mut self, failure: Option<(&str, &CliError)>) -> Result<(), CliError> {
        let files = self.written.clone();
        let manifest = Manifest {
            meta: &self.meta,
            complete: failure.is_none(),
            files: &files,
            failed_stage: failure.map(|f| f.0),
            error: failure.map(|f| f.1.to_string()),
        };
        let mut bytes = serde_json::to_vec_pretty(&manifest)?;
        bytes.push(b'\n');
        self.write("manifest.json", bytes)
    }
}

/// Shortest round-trip form, so identical runs give identical bytes; scientific outside [1e-4, 1e15) so that
/// zero-point amplitudes and inductances stay readable.
pub fn num(v: f64) -> String {
    let a = v.abs();
    if a != 0.0 && a.is_finite() && !(1e-4..1e15).contains(&a) {
        format!("{v:e}")
    } else {
        format!("{v}")
    }
}

pub fn opt(v: Option<f64>) -> String {
    v.map(num).unwrap_or_default()
}

pub fn q(v: cqad_core::loss::QFactor) -> String {
    if v.is_limited() { num(v.value()) } else { v.to_string() }
}
