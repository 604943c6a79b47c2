//! Layered scenario configuration: built-in defaults, then a TOML file, then
//! `key=value` overrides, then `--seed`.

use std::fmt;
use std::path::Path;

use l1cv::experiments::{ExperimentConfig, Scenario};
use toml::{Table, Value};

/// A configuration problem; the message names the offending key where there is one.
#[derive(Debug, Clone, PartialEq)]
pub struct ConfigError(pub String);

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for ConfigError {}

fn err<T>(msg: impl Into<String>) -> Result<T, ConfigError> {
    Err(ConfigError(msg.into()))
}

pub fn defaults_table(scenario: Scenario) -> Table {
    match Value::try_from(ExperimentConfig::defaults(scenario)) {
        Ok(Value::Table(t)) => t,
        _ => unreachable!("defaults serialize to a table"),
    }
}

fn join(prefix: &str, key: &str) -> String {
    if prefix.is_empty() {
        key.to_string()
    } else {
        format!("{prefix}.{key}")
    }
}

/// Rejects keys of `given` that the schema (`known`) does not have.
fn check_keys(known: &Table, given: &Table, prefix: &str) -> Result<(), ConfigError> {
    for (k, v) in given {
        let path = join(prefix, k);
        match (known.get(k), v) {
            (None, _) => return err(format!("{path}: unknown key")),
            (Some(Value::Table(kt)), Value::Table(gt)) => check_keys(kt, gt, &path)?,
            (Some(Value::Table(_)), _) => return err(format!("{path}: expected a table")),
            _ => {}
        }
    }
    Ok(())
}

fn merge(base: &mut Table, over: Table) {
    for (k, v) in over {
        match (base.get_mut(&k), v) {
            (Some(Value::Table(bt)), Value::Table(ot)) => merge(bt, ot),
            (_, v) => {
                base.insert(k, v);
            }
        }
    }
}

/// Splits `a.b=value`; the value is read as a TOML literal, or as a bare string.
pub fn parse_override(raw: &str) -> Result<(Vec<String>, Value), ConfigError> {
    let Some((key, value)) = raw.split_once('=') else {
        return err(format!("override `{raw}` is not of the form key=value"));
    };
    let key = key.trim();
    if key.is_empty() {
        return err(format!("override `{raw}` has an empty key"));
    }
    let value = value.trim();
    let parsed = toml::from_str::<Table>(&format!("v = {value}"))
        .ok()
        .and_then(|mut t| t.remove("v"))
        .unwrap_or_else(|| Value::String(value.to_string()));
    Ok((key.split('.').map(str::to_string).collect(), parsed))
}

fn override_table(path: &[String], value: Value) -> Table {
    let mut t = Table::new();
    match path {
        [last] => {
            t.insert(last.clone(), value);
        }
        [first, rest @ ..] => {
            t.insert(first.clone(), Value::Table(override_table(rest, value)));
        }
        [] => {}
    }
    t
}

fn read_file(path: &Path) -> Result<Table, ConfigError> {
    let text = std::fs::read_to_string(path).or_else(|e| err(format!("cannot read {}: {e}", path.display())))?;
    toml::from_str(&text).or_else(|e| err(format!("{}: {e}", path.display())))
}

fn scenario_of(value: &Value) -> Result<Scenario, ConfigError> {
    value
        .clone()
        .try_into()
        .or_else(|_| err(format!("scenario: unknown scenario {value}")))
}

/// Resolves the final configuration. `fixed` is the scenario implied by the
/// subcommand; without one the scenario comes from the overrides, the file,
/// or falls back to `custom`.
pub fn resolve(fixed: Option<Scenario>, file: Option<&Path>, overrides: &[String], seed: Option<u64>) -> Result<ExperimentConfig, ConfigError> {
    let file_table = file.map(read_file).transpose()?.unwrap_or_default();
    let parsed: Vec<(Vec<String>, Value)> = overrides.iter().map(|o| parse_override(o)).collect::<Result<_, _>>()?;

    let mut requested = None;
    if let Some(v) = file_table.get("scenario") {
        requested = Some(scenario_of(v)?);
    }
    for (path, v) in &parsed {
        if path.len() == 1 && path[0] == "scenario" {
            requested = Some(scenario_of(v)?);
        }
    }
    let scenario = match (fixed, requested) {
        (Some(f), Some(r)) if f != r => {
            return err(format!(
                "scenario: the config asks for {} but the subcommand runs {}",
                r.short_name(),
                f.short_name()
            ))
        }
        (Some(f), _) => f,
        (None, r) => r.unwrap_or(Scenario::Custom),
    };

    let mut table = defaults_table(scenario);
    let known = table.clone();
    check_keys(&known, &file_table, "")?;
    merge(&mut table, file_table);
    for (path, v) in parsed {
        let over = override_table(&path, v);
        check_keys(&known, &over, "")?;
        merge(&mut table, over);
    }
    if let Some(s) = seed {
        let s = i64::try_from(s).or_else(|_| err(format!("seed: {s} exceeds the largest storable seed {}", i64::MAX)))?;
        table.insert("seed".into(), Value::Integer(s));
    }

    let text = toml::to_string(&table).or_else(|e| err(format!("cannot encode configuration: {e}")))?;
    let config: ExperimentConfig = toml::from_str(&text).or_else(|e| err(e.to_string()))?;
    config.validate().or_else(|e| err(e.to_string()))?;
    Ok(config)
}
