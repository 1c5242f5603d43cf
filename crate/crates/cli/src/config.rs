//! Run configuration files.
//!
//! A configuration is a flat TOML file. The keys `scenario`, `seed`,
//! `format`, `output` and `threads` are global; every other key is a
//! parameter of the scenario. Unknown keys are errors. Command-line flags
//! override file values.
//!
//! ```toml
//! scenario = "dephase"
//! seed = 7
//! sigma = 1.0
//! gamma = 0.5
//! xi = 0.0
//! t_final = 10.0
//! dt = 0.01
//! ```

use std::path::{Path, PathBuf};

use clap::ValueEnum;
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::error::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    #[default]
    Csv,
    Json,
}

impl Format {
    pub fn extension(self) -> &'static str {
        match self {
            Format::Csv => "csv",
            Format::Json => "json",
        }
    }
}

#[derive(Debug, Clone, Default)]
pub struct FileConfig {
    pub scenario: Option<String>,
    pub seed: Option<u64>,
    pub format: Option<Format>,
    pub output: Option<PathBuf>,
    pub threads: Option<usize>,
    pub params: toml::Table,
}

fn take<T: DeserializeOwned>(table: &mut toml::Table, key: &str) -> Result<Option<T>, CliError> {
    table
        .remove(key)
        .map(|v| v.try_into().map_err(|e| CliError::Config(format!("key `{key}`: {e}"))))
        .transpose()
}

impl FileConfig {
    pub fn parse(text: &str) -> Result<Self, CliError> {
        let mut table: toml::Table = text.parse().map_err(|e| CliError::Config(format!("{e}")))?;
        Ok(Self {
            scenario: take(&mut table, "scenario")?,
            seed: take(&mut table, "seed")?,
            format: take(&mut table, "format")?,
            output: take(&mut table, "output")?,
            threads: take(&mut table, "threads")?,
            params: table,
        })
    }

    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::parse(&text)
    }
}

/// Overlay the flags given on the command line onto the file parameters and
/// decode the result into the scenario's parameter set.
pub fn merge<T: Serialize + DeserializeOwned>(file: &toml::Table, flags: &T) -> Result<T, CliError> {
    let mut merged = file.clone();
    let flag_table = toml::Table::try_from(flags).map_err(|e| CliError::Config(e.to_string()))?;
    merged.extend(flag_table);
    toml::Value::Table(merged).try_into().map_err(|e: toml::de::Error| {
        let msg = e.message().to_string();
        if msg.contains("unknown field") {
            CliError::UnknownKey(msg)
        } else {
            CliError::Config(msg)
        }
    })
}

/// Value of a required parameter.
pub fn req<T: Clone>(v: &Option<T>, name: &'static str) -> Result<T, CliError> {
    v.clone().ok_or(CliError::MissingRequired(name))
}

/// Value of an optional parameter, recording the default so that it appears
/// in the manifest.
pub fn opt<T: Clone>(v: &mut Option<T>, default: T) -> T {
    v.get_or_insert(default).clone()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[derive(Debug, Default, Serialize, Deserialize, PartialEq)]
    #[serde(deny_unknown_fields)]
    struct P {
        sigma: Option<f64>,
        xi: Option<f64>,
    }

    #[test]
    fn flags_override_file_values() {
        let file = FileConfig::parse("seed = 3\nsigma = 1\nxi = 0.1\n").unwrap();
        assert_eq!(file.seed, Some(3));
        let flags = P {
            sigma: None,
            xi: Some(0.3),
        };
        let p: P = merge(&file.params, &flags).unwrap();
        assert_eq!(p, P { sigma: Some(1.0), xi: Some(0.3) });
    }

    #[test]
    fn unknown_keys_are_rejected() {
        let file = FileConfig::parse("sigma = 1\nsgima = 2\n").unwrap();
        let err = merge(&file.params, &P::default()).unwrap_err();
        assert!(matches!(err, CliError::UnknownKey(_)), "{err}");
        assert_eq!(err.exit_code(), 2);
    }

    #[test]
    fn bad_global_types_are_config_errors() {
        assert!(matches!(FileConfig::parse("format = \"xml\""), Err(CliError::Config(_))));
        assert!(matches!(FileConfig::parse("seed = \"x\""), Err(CliError::Config(_))));
        assert!(matches!(FileConfig::parse("sigma = "), Err(CliError::Config(_))));
    }

    #[test]
    fn missing_required_is_reported_by_name() {
        let err = req::<f64>(&None, "sigma").unwrap_err();
        assert_eq!(err.to_string(), "missing required parameter `sigma`");
    }
}
