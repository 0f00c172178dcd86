//! CSV tables with a JSON mirror.
//!
//! Reals are written in scientific notation with 17 significant digits, which
//! round-trips every `f64` exactly.

use std::fs;
use std::path::Path;

use serde_json::{json, Map, Value};

use furry_core::furry::{ConvergenceReport, ConvergenceRow};

use crate::config::RunConfig;

pub const CONVERGENCE_COLUMNS: [&str; 6] = [
    "gamma",
    "k",
    "resolvent_distance",
    "weighted_remainder_norm",
    "max_eigval_error",
    "fitted_ratio",
];

/// Printed in every metadata block.
pub const INTERACTION_NOTE: &str =
    "electron-electron interaction truncated to its monopole term 1/max(r1, r2)";

#[derive(Debug, thiserror::Error)]
pub enum ReportError {
    #[error("i/o: {0}")]
    Io(#[from] std::io::Error),
    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
    #[error("malformed table: {0}")]
    Malformed(String),
}

#[derive(Debug, Clone, PartialEq)]
pub enum Cell {
    Int(i64),
    Real(f64),
    Bool(bool),
    Text(String),
}

impl Cell {
    fn csv(&self) -> String {
        match self {
            Cell::Int(v) => v.to_string(),
            Cell::Real(v) => format_real(*v),
            Cell::Bool(v) => v.to_string(),
            Cell::Text(v) => v.clone(),
        }
    }

    fn json(&self) -> Value {
        match self {
            Cell::Int(v) => json!(v),
            Cell::Real(v) if v.is_finite() => json!(v),
            Cell::Real(v) => json!(v.to_string()),
            Cell::Bool(v) => json!(v),
            Cell::Text(v) => json!(v),
        }
    }
}

impl From<f64> for Cell {
    fn from(v: f64) -> Self {
        Cell::Real(v)
    }
}

impl From<usize> for Cell {
    fn from(v: usize) -> Self {
        Cell::Int(v as i64)
    }
}

impl From<bool> for Cell {
    fn from(v: bool) -> Self {
        Cell::Bool(v)
    }
}

impl From<&str> for Cell {
    fn from(v: &str) -> Self {
        Cell::Text(v.to_string())
    }
}

impl From<String> for Cell {
    fn from(v: String) -> Self {
        Cell::Text(v)
    }
}

/// `d.dddddddddddddddde±x`.
pub fn format_real(v: f64) -> String {
    format!("{v:.16e}")
}

#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub columns: Vec<String>,
    pub rows: Vec<Vec<Cell>>,
}

impl Table {
    pub fn new(columns: &[&str]) -> Self {
        Self {
            columns: columns.iter().map(|s| s.to_string()).collect(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<Cell>) {
        assert_eq!(
            row.len(),
            self.columns.len(),
            "row width differs from header"
        );
        self.rows.push(row);
    }

    pub fn to_csv(&self) -> Result<Vec<u8>, ReportError> {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(&self.columns)?;
        for row in &self.rows {
            w.write_record(row.iter().map(Cell::csv))?;
        }
        w.into_inner().map_err(|e| ReportError::Io(e.into_error()))
    }

    fn json_rows(&self) -> Value {
        Value::Array(
            self.rows
                .iter()
                .map(|row| {
                    let obj: Map<String, Value> = self
                        .columns
                        .iter()
                        .cloned()
                        .zip(row.iter().map(Cell::json))
                        .collect();
                    Value::Object(obj)
                })
                .collect(),
        )
    }

    /// Writes `<stem>.csv` and `<stem>.json` into `dir`.
    pub fn write(&self, dir: &Path, stem: &str, metadata: &Value) -> Result<(), ReportError> {
        fs::create_dir_all(dir)?;
        fs::write(dir.join(format!("{stem}.csv")), self.to_csv()?)?;
        let doc = json!({ "metadata": metadata, "rows": self.json_rows() });
        let mut text = serde_json::to_string_pretty(&doc)?;
        text.push('\n');
        fs::write(dir.join(format!("{stem}.json")), text)?;
        Ok(())
    }
}

/// Metadata shared by every output file of a run.
pub fn metadata(cfg: &RunConfig, kind: &str) -> Value {
    let mut settings = serde_json::to_value(cfg).expect("config serializes");
    if let Value::Object(map) = &mut settings {
        map.remove("output_dir");
    }
    json!({
        "kind": kind,
        "config_hash": cfg.hash(),
        "config": settings,
        "grid": { "kappa": cfg.kappa, "n": cfg.n, "map_scale": cfg.map_scale },
        "n_plus": cfg.n_plus,
        "interaction": INTERACTION_NOTE,
    })
}

pub fn convergence_table(report: &ConvergenceReport) -> Table {
    let mut table = Table::new(&CONVERGENCE_COLUMNS);
    for r in &report.rows {
        table.push(vec![
            r.gamma.into(),
            r.k.into(),
            r.resolvent_distance.into(),
            r.weighted_remainder_norm.into(),
            r.max_eigval_error.into(),
            r.fitted_ratio.into(),
        ]);
    }
    table
}

/// Parses the CSV written by [`convergence_table`].
pub fn parse_convergence_csv(bytes: &[u8]) -> Result<Vec<ConvergenceRow>, ReportError> {
    let mut reader = csv::Reader::from_reader(bytes);
    let header: Vec<String> = reader.headers()?.iter().map(str::to_string).collect();
    if header != CONVERGENCE_COLUMNS {
        return Err(ReportError::Malformed(format!(
            "unexpected header {header:?}"
        )));
    }
    let real = |s: &str| {
        s.parse::<f64>()
            .map_err(|e| ReportError::Malformed(format!("bad number {s:?}: {e}")))
    };
    reader
        .records()
        .map(|rec| {
            let rec = rec?;
            Ok(ConvergenceRow {
                gamma: real(&rec[0])?,
                k: rec[1]
                    .parse()
                    .map_err(|e| ReportError::Malformed(format!("bad k {:?}: {e}", &rec[1])))?,
                resolvent_distance: real(&rec[2])?,
                weighted_remainder_norm: real(&rec[3])?,
                max_eigval_error: real(&rec[4])?,
                fitted_ratio: real(&rec[5])?,
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reals_have_seventeen_significant_digits() {
        assert_eq!(format_real(0.1), "1.0000000000000001e-1");
        assert_eq!(format_real(-2.5e-3), "-2.5000000000000001e-3");
        assert_eq!(format_real(-0.25), "-2.5000000000000000e-1");
        for v in [std::f64::consts::PI, 1e-300, 6.02214076e23, 0.0] {
            assert_eq!(format_real(v).parse::<f64>().unwrap(), v);
        }
    }

    #[test]
    fn convergence_csv_round_trips() {
        let report = ConvergenceReport {
            n_particles: 2,
            n_plus: 3,
            rows: (0..4)
                .map(|k| ConvergenceRow {
                    gamma: 0.3,
                    k,
                    resolvent_distance: 0.1f64.powi(k as i32) / 3.0,
                    weighted_remainder_norm: std::f64::consts::E * 1e-3,
                    max_eigval_error: 1.0 / 7.0,
                    fitted_ratio: 0.136,
                })
                .collect(),
        };
        let bytes = convergence_table(&report).to_csv().unwrap();
        assert_eq!(parse_convergence_csv(&bytes).unwrap(), report.rows);
    }

    #[test]
    fn foreign_header_is_rejected() {
        assert!(parse_convergence_csv(b"a,b\n1,2\n").is_err());
    }
}
