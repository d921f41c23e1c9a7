//! Run records and their CSV / JSON serializations.

use std::io::Write;

use serde::{Serialize, Serializer};
use serde_json::{Map, Value};

use crate::config::{ExperimentConfig, Format};
use crate::error::{Result, TyplabError};

/// Printed in place of a ratio whose denominator is zero.
pub const UNDEFINED: &str = "undefined";

/// Ratio that may be `0/0`. Serializes as a number or as [`UNDEFINED`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Ratio(pub Option<f64>);

impl Ratio {
    pub fn new(num: f64, den: f64) -> Self {
        Self((den != 0.0).then(|| num / den))
    }
}

impl Serialize for Ratio {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        match self.0 {
            Some(x) if x.is_finite() => s.serialize_f64(x),
            _ => s.serialize_str(UNDEFINED),
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct Metadata {
    pub artifact_version: String,
    pub rng_algorithm: String,
    pub config_hash: String,
    pub started_unix_ms: u64,
    pub duration_ms: f64,
    pub workers: usize,
}

#[derive(Debug, Clone, Serialize)]
pub struct RunRecord {
    pub config: ExperimentConfig,
    pub metadata: Metadata,
    pub summary: Map<String, Value>,
    pub warnings: Vec<String>,
    pub failures: Vec<String>,
    pub cells: Vec<Value>,
}

impl RunRecord {
    pub fn write(&self, format: Format, out: &mut impl Write) -> Result<()> {
        match format {
            Format::Json => {
                serde_json::to_writer_pretty(&mut *out, self).map_err(|e| TyplabError::Output(e.to_string()))?;
                writeln!(out)?;
            }
            Format::Csv => self.write_csv(out)?,
        }
        Ok(())
    }

    pub fn to_string(&self, format: Format) -> Result<String> {
        let mut buf = Vec::new();
        self.write(format, &mut buf)?;
        String::from_utf8(buf).map_err(|e| TyplabError::Output(e.to_string()))
    }

    /// `#`-prefixed metadata preamble, then a header row and one row per cell.
    /// Everything that varies between identical runs (timestamps, durations,
    /// worker count) lives in the preamble.
    fn write_csv(&self, out: &mut impl Write) -> Result<()> {
        let m = &self.metadata;
        writeln!(out, "# typlab {}", m.artifact_version)?;
        writeln!(out, "# experiment: {}", self.config.experiment.name())?;
        writeln!(out, "# rng_algorithm: {}", m.rng_algorithm)?;
        writeln!(out, "# config_hash: {}", m.config_hash)?;
        writeln!(
            out,
            "# config: {}",
            serde_json::to_string(&self.config).map_err(|e| TyplabError::Output(e.to_string()))?
        )?;
        writeln!(out, "# started_unix_ms: {}", m.started_unix_ms)?;
        writeln!(out, "# duration_ms: {}", m.duration_ms)?;
        writeln!(out, "# workers: {}", m.workers)?;
        for (k, v) in &self.summary {
            let mut flat = Vec::new();
            flatten(k, v, &mut flat);
            for (key, val) in flat {
                writeln!(out, "# summary.{key}: {val}")?;
            }
        }
        for w in &self.warnings {
            writeln!(out, "# warning: {w}")?;
        }
        for f in &self.failures {
            writeln!(out, "# failure: {f}")?;
        }

        let rows: Vec<Vec<(String, String)>> = self
            .cells
            .iter()
            .map(|c| {
                let mut flat = Vec::new();
                flatten("", c, &mut flat);
                flat
            })
            .collect();
        let mut header: Vec<String> = Vec::new();
        for row in &rows {
            for (k, _) in row {
                if !header.contains(k) {
                    header.push(k.clone());
                }
            }
        }

        let mut w = csv::Writer::from_writer(Vec::new());
        let csv_err = |e: csv::Error| TyplabError::Output(e.to_string());
        w.write_record(&header).map_err(csv_err)?;
        for row in &rows {
            let record: Vec<&str> = header
                .iter()
                .map(|h| row.iter().find(|(k, _)| k == h).map_or("", |(_, v)| v.as_str()))
                .collect();
            w.write_record(&record).map_err(csv_err)?;
        }
        let body = w.into_inner().map_err(|e| TyplabError::Output(e.to_string()))?;
        out.write_all(&body)?;
        Ok(())
    }
}

/// Shortest decimal that parses back to the same `f64`.
pub fn format_f64(x: f64) -> String {
    if x.is_finite() {
        format!("{x:?}")
    } else {
        UNDEFINED.to_string()
    }
}

fn flatten(prefix: &str, v: &Value, out: &mut Vec<(String, String)>) {
    let key = |k: &str| {
        if prefix.is_empty() {
            k.to_string()
        } else {
            format!("{prefix}.{k}")
        }
    };
    match v {
        Value::Object(map) => {
            for (k, inner) in map {
                flatten(&key(k), inner, out);
            }
        }
        Value::Null => out.push((prefix.to_string(), String::new())),
        Value::Bool(b) => out.push((prefix.to_string(), b.to_string())),
        Value::String(s) => out.push((prefix.to_string(), s.clone())),
        Value::Number(n) => {
            let s = if let Some(u) = n.as_u64() {
                u.to_string()
            } else if let Some(i) = n.as_i64() {
                i.to_string()
            } else {
                format_f64(n.as_f64().unwrap_or(f64::NAN))
            };
            out.push((prefix.to_string(), s));
        }
        Value::Array(items) => out.push((prefix.to_string(), Value::Array(items.clone()).to_string())),
    }
}

/// CSV lines that are not part of the `#` preamble.
pub fn csv_body(text: &str) -> String {
    text.lines()
        .filter(|l| !l.starts_with('#'))
        .collect::<Vec<_>>()
        .join("\n")
}
