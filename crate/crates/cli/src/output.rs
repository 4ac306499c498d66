//! Report structs and writers. JSON reports carry `schema: 1`.

use crate::error::{CliError, CliResult};
use nalgebra::DMatrix;
use robertson::moments::{inequality_report, InequalityReport, UncertaintyPair};
use serde::{Deserialize, Serialize};
use std::io::Write;
use std::path::PathBuf;

pub const SCHEMA: u32 = 1;

pub fn rows(m: &DMatrix<f64>) -> Vec<Vec<f64>> {
    (0..m.nrows()).map(|i| m.row(i).iter().copied().collect()).collect()
}

/// Full 17-significant-digit rendering; parses back to the same bits.
pub fn num(x: f64) -> String {
    format!("{x:.16e}")
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Squeezing {
    pub observable: String,
    pub delta: f64,
    pub reference: f64,
    pub ratio: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ObservableReport {
    pub observables: Vec<String>,
    pub sigma: Vec<Vec<f64>>,
    pub c: Vec<Vec<f64>>,
    pub inequalities: InequalityReport,
    pub minimized: bool,
    pub squeezing: Vec<Squeezing>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub truncation_warning: Option<f64>,
}

impl ObservableReport {
    /// `references` gives the coherent-state uncertainty for each observable
    /// that has one.
    pub fn new(pair: &UncertaintyPair, tol: f64, trace_orders: &[u32], references: &[Option<f64>]) -> CliResult<Self> {
        Self::with_c0(pair, tol, trace_orders, references, None)
    }

    /// As `new`, with the trace-relation constant c0^2 supplied.
    pub fn with_c0(
        pair: &UncertaintyPair,
        tol: f64,
        trace_orders: &[u32],
        references: &[Option<f64>],
        c0_squared: Option<f64>,
    ) -> CliResult<Self> {
        let inequalities = inequality_report(pair, trace_orders, c0_squared)?;
        let minimized = robertson::moments::robertson_minimized(pair, tol);
        let squeezing = pair
            .labels
            .iter()
            .zip(references)
            .enumerate()
            .filter_map(|(i, (label, r))| {
                r.map(|reference| {
                    let delta = pair.sigma[(i, i)].max(0.0).sqrt();
                    Squeezing { observable: label.clone(), delta, reference, ratio: delta / reference }
                })
            })
            .collect();
        Ok(ObservableReport {
            observables: pair.labels.clone(),
            sigma: rows(&pair.sigma),
            c: rows(&pair.cmat),
            inequalities,
            minimized,
            squeezing,
            truncation_warning: pair.truncation_warning,
        })
    }
}

/// Where output goes: a file, or stdout when no path is given.
pub struct Sink(Option<PathBuf>);

impl Sink {
    pub fn new(path: Option<PathBuf>) -> Self {
        Sink(path)
    }

    fn io_err(&self, source: std::io::Error) -> CliError {
        let path = self.0.as_ref().map_or("<stdout>".to_string(), |p| p.display().to_string());
        CliError::Io { path, source }
    }

    pub fn write_json<T: Serialize>(&self, value: &T) -> CliResult<()> {
        let mut text = serde_json::to_string_pretty(value)?;
        text.push('\n');
        self.write_bytes(text.as_bytes())
    }

    pub fn write_bytes(&self, bytes: &[u8]) -> CliResult<()> {
        match &self.0 {
            Some(p) => std::fs::write(p, bytes).map_err(|e| self.io_err(e)),
            None => std::io::stdout().write_all(bytes).map_err(|e| self.io_err(e)),
        }
    }
}

/// CSV text from a header and rows of already-formatted fields; an empty
/// header writes bare rows.
pub fn csv_text(header: &[String], records: &[Vec<String>]) -> CliResult<Vec<u8>> {
    let mut w = csv::Writer::from_writer(Vec::new());
    if !header.is_empty() {
        w.write_record(header)?;
    }
    for r in records {
        w.write_record(r)?;
    }
    w.into_inner().map_err(|e| CliError::Io { path: "<csv buffer>".into(), source: e.into_error() })
}
