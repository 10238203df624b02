//! Flat `key = value` config files layered under command-line flags.

use std::path::Path;
use std::str::FromStr;

use toml::{Table, Value};

use crate::error::CliError;

/// Keys read from a config file. Every key must be consumed by the
/// subcommand, so typos are reported instead of silently ignored.
#[derive(Debug, Default)]
pub struct FileLayer {
    table: Table,
}

impl FileLayer {
    pub fn load(path: Option<&Path>) -> Result<Self, CliError> {
        let Some(path) = path else {
            return Ok(Self::default());
        };
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::usage(format!("cannot read config {}: {e}", path.display())))?;
        Self::parse(&text)
    }

    pub fn parse(text: &str) -> Result<Self, CliError> {
        let raw: Table = text
            .parse()
            .map_err(|e| CliError::usage(format!("config file: {e}")))?;
        let mut table = Table::new();
        for (key, value) in raw {
            if matches!(value, Value::Table(_)) {
                return Err(CliError::usage(format!(
                    "config file: nested table '{key}' is not supported"
                )));
            }
            let norm = normalize(&key);
            if table.insert(norm.clone(), value).is_some() {
                return Err(CliError::usage(format!("config file: duplicate key '{norm}'")));
            }
        }
        Ok(FileLayer { table })
    }

    /// `flag` if given, otherwise the file value under `key`.
    pub fn take<T>(&mut self, key: &str, flag: Option<T>) -> Result<Option<T>, CliError>
    where
        T: FromStr,
        T::Err: std::fmt::Display,
    {
        let from_file = self.table.remove(key);
        if flag.is_some() {
            return Ok(flag);
        }
        let Some(value) = from_file else {
            return Ok(None);
        };
        let text = scalar_text(key, &value)?;
        text.parse()
            .map(Some)
            .map_err(|e| CliError::usage(format!("config key '{key}': {e}")))
    }

    /// Removes `key` without reading it.
    pub fn discard(&mut self, key: &str) {
        self.table.remove(key);
    }

    pub fn finish(self) -> Result<(), CliError> {
        match self.table.keys().next() {
            None => Ok(()),
            Some(k) => Err(CliError::usage(format!(
                "config file: key '{k}' does not apply to this command"
            ))),
        }
    }
}

fn normalize(key: &str) -> String {
    let k = key.trim().replace('_', "-");
    if k == "K" { "k".into() } else { k }
}

fn scalar_text(key: &str, value: &Value) -> Result<String, CliError> {
    Ok(match value {
        Value::String(s) => s.clone(),
        Value::Integer(i) => i.to_string(),
        Value::Float(f) => f.to_string(),
        Value::Boolean(b) => b.to_string(),
        Value::Array(items) => items
            .iter()
            .map(|v| scalar_text(key, v))
            .collect::<Result<Vec<_>, _>>()?
            .join(","),
        _ => return Err(CliError::usage(format!("config key '{key}': unsupported value"))),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn flags_win_over_file() {
        let mut f = FileLayer::parse("n = 20\nK = 2.5\nmethods = [\"ours\", \"mb\"]").unwrap();
        assert_eq!(f.take::<usize>("n", Some(15)).unwrap(), Some(15));
        assert_eq!(f.take::<f64>("k", None).unwrap(), Some(2.5));
        assert_eq!(f.take::<String>("methods", None).unwrap().as_deref(), Some("ours,mb"));
        assert_eq!(f.take::<usize>("p", None).unwrap(), None);
        f.finish().unwrap();
    }

    #[test]
    fn leftover_and_bad_keys_are_usage_errors() {
        let f = FileLayer::parse("nn = 3").unwrap();
        assert_eq!(f.finish().unwrap_err().code, 2);
        let mut f = FileLayer::parse("n = \"ten\"").unwrap();
        assert_eq!(f.take::<usize>("n", None).unwrap_err().code, 2);
        assert!(FileLayer::parse("[x]\na = 1").is_err());
        assert!(FileLayer::parse("n = 1\nn = 2").is_err());
    }

    #[test]
    fn underscores_map_to_dashes() {
        let mut f = FileLayer::parse("some_key = true").unwrap();
        assert_eq!(f.take::<bool>("some-key", None).unwrap(), Some(true));
    }
}
