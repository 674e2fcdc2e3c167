//! Flat `key = value` configuration files.
//!
//! Every key mirrors a command-line flag without the leading dashes. Blank
//! lines and lines starting with `#` are ignored; `data` may repeat.
//! Values given on the command line win over the file.

use std::collections::BTreeMap;
use std::path::Path;

use crate::error::CliError;

pub const KEYS: [&str; 13] = [
    "data",
    "input-kind",
    "strategy",
    "gamma",
    "epsilon",
    "window",
    "eta",
    "tco2-literal-eq10",
    "format",
    "out",
    "seed",
    "groups",
    "threads",
];

#[derive(Debug, Default, Clone, PartialEq)]
pub struct ConfigFile {
    pub data: Vec<String>,
    values: BTreeMap<String, String>,
}

impl ConfigFile {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path).map_err(|e| {
            CliError::Validation(format!("cannot read config {}: {e}", path.display()))
        })?;
        Self::parse(&text).map_err(|msg| CliError::Validation(format!("{}: {msg}", path.display())))
    }

    pub fn parse(text: &str) -> Result<Self, String> {
        let mut config = ConfigFile::default();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| format!("line {}: expected key = value", i + 1))?;
            let key = key.trim().trim_start_matches("--").replace('_', "-");
            let value = value.trim().to_owned();
            if !KEYS.contains(&key.as_str()) {
                return Err(format!("line {}: unknown key {key:?}", i + 1));
            }
            if key == "data" {
                config.data.push(value);
            } else if config.values.insert(key.clone(), value).is_some() {
                return Err(format!("line {}: {key} given twice", i + 1));
            }
        }
        Ok(config)
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        self.values.get(key).map(String::as_str)
    }
}
