// SPDX-License-Identifier: MIT OR Apache-2.0

//! Layered settings: config file, then flags, then `--set` overrides.

use std::path::{Path, PathBuf};

use dpdp::{Error, Result};
use serde::de::DeserializeOwned;
use toml::{Table, Value};

/// Settings given as subcommand flags.
#[derive(Debug, Default)]
pub struct Overrides(Vec<(&'static str, Value)>);

impl Overrides {
    fn push(&mut self, key: &'static str, value: Option<Value>) -> &mut Self {
        if let Some(v) = value {
            self.0.push((key, v));
        }
        self
    }

    pub fn path(&mut self, key: &'static str, value: &Option<PathBuf>) -> &mut Self {
        self.push(key, value.as_ref().map(|p| Value::String(p.to_string_lossy().into_owned())))
    }

    pub fn string(&mut self, key: &'static str, value: &Option<String>) -> &mut Self {
        self.push(key, value.clone().map(Value::String))
    }

    pub fn int<T: TryInto<i64>>(&mut self, key: &'static str, value: Option<T>) -> &mut Self {
        self.push(key, value.and_then(|v| v.try_into().ok()).map(Value::Integer))
    }

    pub fn float(&mut self, key: &'static str, value: Option<f64>) -> &mut Self {
        self.push(key, value.map(Value::Float))
    }
}

fn config_error(detail: impl Into<String>) -> Error {
    Error::InvalidConfig(detail.into()).in_stage("config", None)
}

/// Parses the right-hand side of `--set`: TOML syntax first, else a bare
/// string.
fn parse_value(text: &str) -> Value {
    toml::from_str::<Table>(&format!("v = {text}"))
        .ok()
        .and_then(|mut t| t.remove("v"))
        .unwrap_or_else(|| Value::String(text.to_string()))
}

fn insert_dotted(table: &mut Table, key: &str, value: Value) -> Result<()> {
    let mut parts: Vec<&str> = key.split('.').collect();
    let last = parts.pop().filter(|k| !k.is_empty()).ok_or_else(|| config_error(format!("bad key {key:?}")))?;
    let mut cur = table;
    for p in parts {
        let entry = cur.entry(p.to_string()).or_insert_with(|| Value::Table(Table::new()));
        cur = entry
            .as_table_mut()
            .ok_or_else(|| config_error(format!("{p} in {key:?} is not a table")))?;
    }
    cur.insert(last.to_string(), value);
    Ok(())
}

/// Merges the config file, flag values and `--set` overrides.
pub fn load_table(file: Option<&Path>, flags: Overrides, sets: &[String]) -> Result<Table> {
    let mut table = match file {
        Some(p) => {
            let text = std::fs::read_to_string(p).map_err(|e| config_error(format!("{}: {e}", p.display())))?;
            toml::from_str(&text).map_err(|e| config_error(format!("{}: {e}", p.display())))?
        }
        None => Table::new(),
    };
    for (k, v) in flags.0 {
        insert_dotted(&mut table, k, v)?;
    }
    for s in sets {
        let (k, v) = s
            .split_once('=')
            .ok_or_else(|| config_error(format!("--set expects KEY=VALUE, got {s:?}")))?;
        insert_dotted(&mut table, k.trim(), parse_value(v.trim()))?;
    }
    Ok(table)
}

/// Deserialises a merged table into a subcommand's settings.
pub fn parse<T: DeserializeOwned>(table: Table) -> Result<T> {
    Value::Table(table).try_into().map_err(|e: toml::de::Error| config_error(e.to_string()))
}
