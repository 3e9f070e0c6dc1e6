//! Tabular experiment results and their CSV / JSON renderings.
//!
//! Rendered output depends only on the result's content. Wall time is kept
//! on the struct for reporting but never written, so equal configs and seeds
//! give byte-identical files.

use std::fmt::Display;
use std::io::Write;
use std::time::Duration;

use serde_json::{json, Map, Value};

use super::config::ConfigMap;
use crate::error::Result;

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Debug, Clone, PartialEq)]
pub struct Row {
    /// Ordered `(name, value)` pairs identifying the cell.
    pub params: Vec<(String, String)>,
    pub statistic: String,
    pub value: f64,
    pub dispersion: Option<f64>,
}

impl Row {
    pub fn param(&self, name: &str) -> Option<&str> {
        self.params
            .iter()
            .find(|(k, _)| k == name)
            .map(|(_, v)| v.as_str())
    }

    fn matches(&self, statistic: &str, filter: &[(&str, &str)]) -> bool {
        self.statistic == statistic && filter.iter().all(|(k, v)| self.param(k) == Some(*v))
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Check {
    pub name: String,
    pub pass: bool,
    pub detail: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentResult {
    pub name: String,
    pub master_seed: u64,
    pub version: String,
    /// Effective configuration, sorted by key.
    pub config: Vec<(String, String)>,
    pub rows: Vec<Row>,
    pub checks: Vec<Check>,
    pub wall_time: Duration,
}

/// Shorthand for one row parameter.
pub fn p(name: &str, value: impl Display) -> (String, String) {
    (name.to_owned(), value.to_string())
}

impl ExperimentResult {
    pub fn new(name: &str, master_seed: u64, config: &ConfigMap) -> Self {
        Self {
            name: name.to_owned(),
            master_seed,
            version: VERSION.to_owned(),
            config: config
                .iter()
                .map(|(k, v)| (k.to_owned(), v.to_owned()))
                .collect(),
            rows: Vec::new(),
            checks: Vec::new(),
            wall_time: Duration::ZERO,
        }
    }

    pub fn push(
        &mut self,
        params: &[(String, String)],
        statistic: &str,
        value: f64,
        dispersion: Option<f64>,
    ) {
        self.rows.push(Row {
            params: params.to_vec(),
            statistic: statistic.to_owned(),
            value,
            dispersion,
        });
    }

    pub fn check(&mut self, name: impl Into<String>, pass: bool, detail: impl Into<String>) {
        self.checks.push(Check {
            name: name.into(),
            pass,
            detail: detail.into(),
        });
    }

    pub fn all_passed(&self) -> bool {
        self.checks.iter().all(|c| c.pass)
    }

    /// First row with this statistic whose parameters include `filter`.
    pub fn find(&self, statistic: &str, filter: &[(&str, &str)]) -> Option<&Row> {
        self.rows.iter().find(|r| r.matches(statistic, filter))
    }

    pub fn value(&self, statistic: &str, filter: &[(&str, &str)]) -> Option<f64> {
        self.find(statistic, filter).map(|r| r.value)
    }

    pub fn rows_for<'a>(&'a self, statistic: &'a str) -> impl Iterator<Item = &'a Row> + 'a {
        self.rows.iter().filter(move |r| r.statistic == statistic)
    }

    /// Parameter columns in first-seen order.
    fn param_columns(&self) -> Vec<&str> {
        let mut cols: Vec<&str> = Vec::new();
        for r in &self.rows {
            for (k, _) in &r.params {
                if !cols.contains(&k.as_str()) {
                    cols.push(k);
                }
            }
        }
        cols
    }

    /// CSV with `#`-prefixed metadata lines before the header and check
    /// lines after the last row. Parameters a row lacks are left empty.
    pub fn write_csv<W: Write>(&self, mut out: W) -> Result<()> {
        writeln!(out, "# experiment={}", self.name)?;
        writeln!(out, "# version={}", self.version)?;
        writeln!(out, "# seed={}", self.master_seed)?;
        for (k, v) in &self.config {
            writeln!(out, "# config.{k}={v}")?;
        }
        let cols = self.param_columns();
        {
            let mut w = csv::Writer::from_writer(&mut out);
            let mut header: Vec<&str> = cols.clone();
            header.extend(["statistic", "value", "dispersion"]);
            w.write_record(&header)?;
            for r in &self.rows {
                let mut rec: Vec<String> = cols
                    .iter()
                    .map(|c| r.param(c).unwrap_or_default().to_owned())
                    .collect();
                rec.push(r.statistic.clone());
                rec.push(r.value.to_string());
                rec.push(r.dispersion.map(|d| d.to_string()).unwrap_or_default());
                w.write_record(&rec)?;
            }
            w.flush()?;
        }
        for c in &self.checks {
            writeln!(
                out,
                "# check {} {}: {}",
                if c.pass { "PASS" } else { "FAIL" },
                c.name,
                c.detail
            )?;
        }
        Ok(())
    }

    pub fn to_json(&self) -> Value {
        let config: Map<String, Value> = self
            .config
            .iter()
            .map(|(k, v)| (k.clone(), Value::String(v.clone())))
            .collect();
        let rows: Vec<Value> = self
            .rows
            .iter()
            .map(|r| {
                let mut m: Map<String, Value> = r
                    .params
                    .iter()
                    .map(|(k, v)| (k.clone(), Value::String(v.clone())))
                    .collect();
                m.insert("statistic".into(), Value::String(r.statistic.clone()));
                m.insert("value".into(), number(r.value));
                m.insert("dispersion".into(), r.dispersion.map_or(Value::Null, number));
                Value::Object(m)
            })
            .collect();
        let checks: Vec<Value> = self
            .checks
            .iter()
            .map(|c| json!({"name": c.name, "pass": c.pass, "detail": c.detail}))
            .collect();
        json!({
            "experiment": self.name,
            "version": self.version,
            "seed": self.master_seed,
            "config": config,
            "rows": rows,
            "checks": checks,
        })
    }

    pub fn write_json<W: Write>(&self, mut out: W) -> Result<()> {
        serde_json::to_writer_pretty(&mut out, &self.to_json())?;
        writeln!(out)?;
        Ok(())
    }
}

/// Non-finite values have no JSON number form and are written as strings.
fn number(x: f64) -> Value {
    serde_json::Number::from_f64(x).map_or_else(|| Value::String(x.to_string()), Value::Number)
}
