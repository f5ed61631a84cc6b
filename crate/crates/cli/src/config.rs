//! Flat `key = value` configuration files and the defaults < file < flags
//! precedence rule.

use std::collections::BTreeMap;
use std::path::Path;
use std::str::FromStr;

use crate::{CliError, CliResult};

/// A parsed configuration file. Keys use the same names as the long flags.
#[derive(Debug, Default, Clone)]
pub struct FileConfig {
    values: BTreeMap<String, String>,
}

impl FileConfig {
    /// Load a config file, or an empty one when no path was given.
    pub fn load(path: Option<&Path>) -> CliResult<Self> {
        let Some(path) = path else {
            return Ok(FileConfig::default());
        };
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Data(format!("cannot read {}: {e}", path.display())))?;
        let mut values = BTreeMap::new();
        for (idx, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let Some((key, value)) = line.split_once('=') else {
                return Err(CliError::Usage(format!(
                    "{}:{}: expected `key = value`, got {raw:?}",
                    path.display(),
                    idx + 1
                )));
            };
            values.insert(key.trim().to_owned(), value.trim().to_owned());
        }
        Ok(FileConfig { values })
    }

    fn raw(&self, key: &str) -> Option<&str> {
        self.values.get(key).map(String::as_str)
    }

    /// Parsed value for `key`, when the file sets it.
    pub fn get<T: FromStr>(&self, key: &str) -> CliResult<Option<T>> {
        match self.raw(key) {
            None => Ok(None),
            Some(raw) => raw.parse().map(Some).map_err(|_| {
                CliError::Usage(format!("config key {key}: invalid value {raw:?}"))
            }),
        }
    }

    /// Flag value if set, else file value, else the default.
    pub fn resolve<T: FromStr>(&self, flag: Option<T>, key: &str, default: T) -> CliResult<T> {
        match flag {
            Some(v) => Ok(v),
            None => Ok(self.get(key)?.unwrap_or(default)),
        }
    }

    /// Flag value if set, else file value.
    pub fn resolve_opt<T: FromStr>(&self, flag: Option<T>, key: &str) -> CliResult<Option<T>> {
        match flag {
            Some(v) => Ok(Some(v)),
            None => self.get(key),
        }
    }
}

/// Parse a comma-separated list of integers (for `--topn` and `--values`).
pub fn parse_list(raw: &str) -> CliResult<Vec<usize>> {
    let mut out = Vec::new();
    for tok in raw.split(',') {
        let tok = tok.trim();
        if tok.is_empty() {
            continue;
        }
        out.push(
            tok.parse()
                .map_err(|_| CliError::Usage(format!("invalid list entry {tok:?}")))?,
        );
    }
    if out.is_empty() {
        return Err(CliError::Usage(format!("empty list {raw:?}")));
    }
    Ok(out)
}

/// Hours (possibly fractional) to whole seconds.
pub fn hours_to_secs(hours: f64) -> i64 {
    (hours * 3600.0).round() as i64
}
