use std::fmt;
use std::fs;
use std::path::Path;

use regretlab::portfolio::PriceRelativeMatrix;
use regretlab::{ActionSet, Observable, State};
use serde::Serialize;
use serde_json::Value;

pub const EXIT_USAGE: u8 = 2;
pub const EXIT_VIOLATION: u8 = 3;
pub const EXIT_NUMERICAL: u8 = 4;

#[derive(Debug)]
pub enum CliError {
    Usage(String),
    Numerical(String),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Usage(_) => EXIT_USAGE,
            CliError::Numerical(_) => EXIT_NUMERICAL,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Usage(m) | CliError::Numerical(m) => f.write_str(m),
        }
    }
}

impl From<regretlab::Error> for CliError {
    fn from(e: regretlab::Error) -> Self {
        match e {
            regretlab::Error::NumericalFailure(_) => CliError::Numerical(e.to_string()),
            other => CliError::Usage(other.to_string()),
        }
    }
}

pub type CliResult<T> = std::result::Result<T, CliError>;

pub fn usage(msg: impl Into<String>) -> CliError {
    CliError::Usage(msg.into())
}

/// What a command prints, and whether it found a violation.
pub struct Output {
    pub text: String,
    pub violation: bool,
}

impl Output {
    pub fn json<T: Serialize>(v: &T) -> CliResult<Self> {
        Ok(Self { text: to_json(v)?, violation: false })
    }

    pub fn check<T: Serialize>(v: &T, passed: bool) -> CliResult<Self> {
        Ok(Self { text: to_json(v)?, violation: !passed })
    }

    pub fn raw(text: String) -> Self {
        Self { text, violation: false }
    }
}

pub fn to_json<T: Serialize>(v: &T) -> CliResult<String> {
    serde_json::to_string_pretty(v).map_err(|e| CliError::Numerical(e.to_string()))
}

pub fn read_value(path: &Path) -> CliResult<Value> {
    let text = fs::read_to_string(path).map_err(|e| usage(format!("{}: {e}", path.display())))?;
    serde_json::from_str(&text).map_err(|e| usage(format!("{}: {e}", path.display())))
}

fn numbers(v: &Value, what: &str) -> CliResult<Vec<f64>> {
    serde_json::from_value(v.clone()).map_err(|e| usage(format!("{what}: {e}")))
}

/// A bare array of numbers, or an object carrying one under one of `keys`.
pub fn vector_from(v: &Value, keys: &[&str], what: &str) -> CliResult<Vec<f64>> {
    match v {
        Value::Array(_) => numbers(v, what),
        Value::Object(map) => keys
            .iter()
            .find_map(|k| map.get(*k))
            .ok_or_else(|| usage(format!("{what}: expected one of the keys {keys:?}")))
            .and_then(|inner| numbers(inner, what)),
        _ => Err(usage(format!("{what}: expected an array or object"))),
    }
}

pub fn read_vector(path: &Path, keys: &[&str]) -> CliResult<Vec<f64>> {
    vector_from(&read_value(path)?, keys, &path.display().to_string())
}

pub fn read_probs(path: &Path) -> CliResult<Vec<f64>> {
    read_vector(path, &["probs", "p", "q"])
}

pub fn state_from(v: &Value, what: &str) -> CliResult<State> {
    match v {
        Value::Array(_) => Ok(State::classical(&numbers(v, what)?)?),
        _ => serde_json::from_value(v.clone()).map_err(|e| usage(format!("{what}: {e}"))),
    }
}

pub fn read_state(path: &Path) -> CliResult<State> {
    state_from(&read_value(path)?, &path.display().to_string())
}

pub fn observable_from(v: &Value, what: &str) -> CliResult<Observable> {
    match v {
        Value::Array(_) => Ok(Observable::classical(&numbers(v, what)?)),
        _ => serde_json::from_value(v.clone()).map_err(|e| usage(format!("{what}: {e}"))),
    }
}

pub fn read_observable(path: &Path) -> CliResult<Observable> {
    observable_from(&read_value(path)?, &path.display().to_string())
}

fn list<'a>(v: &'a Value, key: &str, what: &str) -> CliResult<&'a Vec<Value>> {
    match v {
        Value::Array(items) => Ok(items),
        Value::Object(map) => match map.get(key) {
            Some(Value::Array(items)) => Ok(items),
            _ => Err(usage(format!("{what}: expected a \"{key}\" array"))),
        },
        _ => Err(usage(format!("{what}: expected an array or object"))),
    }
}

pub fn read_states(path: &Path) -> CliResult<Vec<State>> {
    let what = path.display().to_string();
    let v = read_value(path)?;
    list(&v, "states", &what)?.iter().map(|s| state_from(s, &what)).collect()
}

pub fn read_actions(path: &Path) -> CliResult<ActionSet> {
    let what = path.display().to_string();
    let v = read_value(path)?;
    let actions = list(&v, "actions", &what)?
        .iter()
        .map(|a| observable_from(a, &what))
        .collect::<CliResult<Vec<_>>>()?;
    Ok(ActionSet::new(actions)?)
}

pub fn read_matrix(path: &Path) -> CliResult<PriceRelativeMatrix> {
    let what = path.display().to_string();
    let v = read_value(path)?;
    let rows = match &v {
        Value::Object(map) => map.get("matrix").ok_or_else(|| usage(format!("{what}: expected a \"matrix\" key")))?,
        other => other,
    };
    let rows: Vec<Vec<f64>> = serde_json::from_value(rows.clone()).map_err(|e| usage(format!("{what}: {e}")))?;
    Ok(PriceRelativeMatrix::from_rows(&rows)?)
}

/// `null` for non-finite values, which JSON cannot carry.
pub fn finite(x: f64) -> Option<f64> {
    x.is_finite().then_some(x)
}
