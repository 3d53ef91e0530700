//! Plain-text key-value configuration. Lines are `key = value` with `#`
//! comments; keys use the long option names of the subcommand being run.
//! Command-line flags override config values, which override built-in
//! defaults. Keys that the current command does not consult are ignored.

use std::collections::BTreeMap;
use std::fmt::Display;
use std::path::Path;
use std::str::FromStr;

use crate::Failure;

#[derive(Debug, Default)]
pub struct Config {
    values: BTreeMap<String, String>,
}

impl Config {
    pub fn load(path: &Path) -> Result<Self, Failure> {
        let text = std::fs::read_to_string(path).map_err(|e| {
            Failure::Usage(format!("cannot read config {}: {e}", path.display()))
        })?;
        let mut values = BTreeMap::new();
        for (idx, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| {
                Failure::Usage(format!(
                    "config {} line {}: expected 'key = value', got '{raw}'",
                    path.display(),
                    idx + 1
                ))
            })?;
            // last occurrence of a repeated key wins
            values.insert(key.trim().to_string(), value.trim().to_string());
        }
        Ok(Config { values })
    }

    /// CLI value if given, else the parsed config value, else None.
    pub fn lookup<T>(&self, cli: Option<T>, key: &str) -> Result<Option<T>, Failure>
    where
        T: FromStr,
        T::Err: Display,
    {
        if cli.is_some() {
            return Ok(cli);
        }
        match self.values.get(key) {
            None => Ok(None),
            Some(raw) => raw.parse().map(Some).map_err(|e| {
                Failure::Usage(format!("config key '{key}': cannot parse '{raw}': {e}"))
            }),
        }
    }

    /// Boolean flags: present on the command line means true; otherwise
    /// the config may supply true/false.
    pub fn flag(&self, cli: bool, key: &str) -> Result<bool, Failure> {
        if cli {
            return Ok(true);
        }
        Ok(self.lookup::<bool>(None, key)?.unwrap_or(false))
    }
}
