use std::io::Write;
use std::path::Path;

use serde::Serialize;
use serde_json::Value;

use vmperc::stats::Estimate;
use vmperc::Result;

#[derive(Clone, Debug, Serialize)]
pub struct ResultEntry {
    pub name: String,
    /// A number, or a decimal string for integers beyond 2^53.
    pub value: Value,
    pub se: Option<f64>,
    pub bias_bound: Option<f64>,
}

impl ResultEntry {
    pub fn estimate(name: impl Into<String>, e: &Estimate<f64>) -> Self {
        ResultEntry { name: name.into(), value: num(e.value), se: Some(e.se), bias_bound: Some(e.bias_bound) }
    }

    pub fn exact(name: impl Into<String>, v: impl Into<Value>) -> Self {
        ResultEntry { name: name.into(), value: v.into(), se: None, bias_bound: None }
    }

    pub fn with_bias(name: impl Into<String>, value: f64, se: f64, bias: f64) -> Self {
        ResultEntry { name: name.into(), value: num(value), se: Some(se), bias_bound: Some(bias) }
    }
}

/// Non-finite floats have no JSON number form; they are written as strings.
pub fn num(x: f64) -> Value {
    serde_json::Number::from_f64(x).map(Value::Number).unwrap_or_else(|| Value::String(x.to_string()))
}

#[derive(Clone, Debug, Serialize)]
pub struct Seeds {
    pub root: Option<u64>,
    pub per_replica_rule: &'static str,
}

#[derive(Clone, Debug, Serialize)]
pub struct RunReport {
    pub config: Value,
    pub results: Vec<ResultEntry>,
    pub seeds: Seeds,
    pub wall_time_s: f64,
    pub version: &'static str,
    /// Full module output.
    #[serde(skip_serializing_if = "Value::is_null")]
    pub details: Value,
}

impl RunReport {
    pub fn write(&self, path: Option<&Path>) -> Result<()> {
        let text = serde_json::to_string_pretty(self)?;
        match path {
            Some(p) => std::fs::write(p, text + "\n")?,
            None => {
                let mut out = std::io::stdout().lock();
                writeln!(out, "{text}")?;
            }
        }
        Ok(())
    }
}
