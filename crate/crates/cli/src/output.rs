//! Tables, artifacts and the run manifest.

use std::fs;
use std::path::{Path, PathBuf};

use serde::Serialize;

use crate::config::Format;
use crate::error::CliError;

/// Bumped whenever a column or field name changes.
pub const SCHEMA_VERSION: u32 = 1;
pub const MANIFEST_NAME: &str = "manifest.json";

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(untagged)]
pub enum Cell {
    F(f64),
    U(u64),
    S(String),
}

impl Cell {
    fn text(&self) -> String {
        match self {
            // Debug keeps the shortest round-trip representation.
            Cell::F(v) => format!("{v:?}"),
            Cell::U(v) => v.to_string(),
            Cell::S(s) => s.clone(),
        }
    }
}

impl From<f64> for Cell {
    fn from(v: f64) -> Self {
        Cell::F(v)
    }
}

impl From<usize> for Cell {
    fn from(v: usize) -> Self {
        Cell::U(v as u64)
    }
}

impl From<&str> for Cell {
    fn from(v: &str) -> Self {
        Cell::S(v.to_string())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub columns: Vec<&'static str>,
    pub rows: Vec<Vec<Cell>>,
}

impl Table {
    pub fn new(columns: &[&'static str]) -> Self {
        Self {
            columns: columns.to_vec(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<Cell>) {
        debug_assert_eq!(row.len(), self.columns.len());
        self.rows.push(row);
    }

    pub fn to_csv(&self) -> Result<Vec<u8>, CliError> {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(&self.columns)?;
        for row in &self.rows {
            w.write_record(row.iter().map(Cell::text))?;
        }
        w.into_inner().map_err(|e| CliError::Io(std::io::Error::other(e.to_string())))
    }

    /// Array of row objects keyed by column name.
    pub fn to_json(&self) -> Result<Vec<u8>, CliError> {
        let rows: Vec<serde_json::Map<String, serde_json::Value>> = self
            .rows
            .iter()
            .map(|row| {
                self.columns
                    .iter()
                    .zip(row)
                    .map(|(c, v)| Ok((c.to_string(), serde_json::to_value(v)?)))
                    .collect::<Result<_, serde_json::Error>>()
            })
            .collect::<Result<_, _>>()?;
        let mut bytes = serde_json::to_vec_pretty(&rows)?;
        bytes.push(b'\n');
        Ok(bytes)
    }

    pub fn artifact(&self, stem: &str, format: Format) -> Result<Artifact, CliError> {
        let bytes = match format {
            Format::Csv => self.to_csv()?,
            Format::Json => self.to_json()?,
        };
        Ok(Artifact::new(format!("{stem}.{}", format.extension()), bytes))
    }
}

/// One output file, relative to the run's output directory.
#[derive(Debug, Clone, PartialEq)]
pub struct Artifact {
    pub path: PathBuf,
    pub bytes: Vec<u8>,
}

impl Artifact {
    pub fn new(path: impl Into<PathBuf>, bytes: Vec<u8>) -> Self {
        Self {
            path: path.into(),
            bytes,
        }
    }

    pub fn json<T: Serialize>(path: impl Into<PathBuf>, value: &T) -> Result<Self, CliError> {
        let mut bytes = serde_json::to_vec_pretty(value)?;
        bytes.push(b'\n');
        Ok(Self::new(path, bytes))
    }
}

/// What a scenario produced: files plus a small summary for the manifest.
#[derive(Debug, Clone, Default)]
pub struct Outputs {
    pub artifacts: Vec<Artifact>,
    pub summary: serde_json::Value,
}

#[derive(Debug, Clone, Serialize)]
pub struct Manifest {
    pub schema_version: u32,
    pub engine_version: String,
    pub scenario: String,
    pub seed: u64,
    pub format: Format,
    pub threads: usize,
    pub config: serde_json::Value,
    pub outputs: Vec<String>,
    pub summary: serde_json::Value,
    pub wall_clock_seconds: f64,
}

/// Write every artifact through a staging directory inside `dir`, so that a
/// failure never leaves a partial set of outputs behind.
pub fn write_outputs(dir: &Path, artifacts: &[Artifact]) -> Result<(), CliError> {
    let created = !dir.exists();
    fs::create_dir_all(dir)?;
    let result = stage_and_commit(dir, artifacts);
    if result.is_err() && created {
        let _ = fs::remove_dir_all(dir);
    }
    result
}

fn stage_and_commit(dir: &Path, artifacts: &[Artifact]) -> Result<(), CliError> {
    let staging = tempfile::Builder::new().prefix(".corrsync-staging").tempdir_in(dir)?;
    for a in artifacts {
        if a.path.is_absolute() || a.path.components().any(|c| matches!(c, std::path::Component::ParentDir)) {
            return Err(CliError::Io(std::io::Error::other(format!(
                "refusing to write outside the output directory: {}",
                a.path.display()
            ))));
        }
        let target = staging.path().join(&a.path);
        if let Some(parent) = target.parent() {
            fs::create_dir_all(parent)?;
        }
        fs::write(&target, &a.bytes)?;
    }
    let mut moved: Vec<PathBuf> = Vec::new();
    for a in artifacts {
        let dest = dir.join(&a.path);
        let step = dest
            .parent()
            .map_or(Ok(()), fs::create_dir_all)
            .and_then(|_| fs::rename(staging.path().join(&a.path), &dest));
        if let Err(e) = step {
            for m in &moved {
                let _ = fs::remove_file(m);
            }
            return Err(e.into());
        }
        moved.push(dest);
    }
    Ok(())
}
