//! Flat key-value run configuration files.
//!
//! The format is one `section.key = value` entry per line; `#` starts a
//! comment. Every command-line flag overrides the corresponding file entry,
//! so the file only supplies defaults.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use crate::errors::{CliError, CliResult};

#[derive(Debug, Default, Clone)]
pub struct FileConfig {
    entries: BTreeMap<String, String>,
}

const KNOWN_KEYS: &[&str] = &[
    "run.method",
    "run.views",
    "run.out",
    "run.seed",
    "run.threads",
    "solver.lambda",
    "solver.budget",
    "solver.eps_reg",
    "cv.folds",
    "cv.starts",
    "cv.grid_mode",
    "cv.tune_once",
];

impl FileConfig {
    pub fn load(path: &Path) -> CliResult<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
        let mut entries = BTreeMap::new();
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| {
                CliError::Config(format!(
                    "{}: line {} is not `key = value`",
                    path.display(),
                    lineno + 1
                ))
            })?;
            let key = key.trim().to_string();
            if !KNOWN_KEYS.contains(&key.as_str()) {
                return Err(CliError::Config(format!(
                    "{}: unknown key `{key}` on line {}",
                    path.display(),
                    lineno + 1
                )));
            }
            entries.insert(key, value.trim().to_string());
        }
        Ok(Self { entries })
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        self.entries.get(key).map(String::as_str)
    }

    pub fn get_parsed<T: std::str::FromStr>(&self, key: &str) -> CliResult<Option<T>> {
        match self.get(key) {
            None => Ok(None),
            Some(raw) => raw.parse::<T>().map(Some).map_err(|_| {
                CliError::Config(format!("config key `{key}` has invalid value {raw:?}"))
            }),
        }
    }

    /// Whitespace- or comma-separated list of values.
    pub fn get_list<T: std::str::FromStr>(&self, key: &str) -> CliResult<Option<Vec<T>>> {
        match self.get(key) {
            None => Ok(None),
            Some(raw) => raw
                .split(|c: char| c == ',' || c.is_whitespace())
                .filter(|s| !s.is_empty())
                .map(|s| {
                    s.parse::<T>().map_err(|_| {
                        CliError::Config(format!(
                            "config key `{key}` has invalid value {s:?}"
                        ))
                    })
                })
                .collect::<CliResult<Vec<T>>>()
                .map(Some),
        }
    }

    pub fn get_paths(&self, key: &str) -> CliResult<Option<Vec<PathBuf>>> {
        Ok(self
            .get_list::<String>(key)?
            .map(|items| items.into_iter().map(PathBuf::from).collect()))
    }
}
