//! Value parsers for command-line arguments.

use crate::error::{usage, CliError, CliResult};
use nalgebra::DMatrix;
use num_complex::Complex64 as C64;
use std::path::Path;

/// `re,im` or a bare `re`.
pub fn complex(s: &str) -> Result<C64, String> {
    let parts: Vec<&str> = s.split(',').map(str::trim).collect();
    let num = |p: &str| p.parse::<f64>().map_err(|e| format!("{p:?}: {e}"));
    match parts.as_slice() {
        [re] => Ok(C64::new(num(re)?, 0.0)),
        [re, im] => Ok(C64::new(num(re)?, num(im)?)),
        _ => Err(format!("expected `re` or `re,im`, got {s:?}")),
    }
}

/// Spin as `1`, `3/2`, `0.5`; returns 2j.
pub fn twice_j(s: &str) -> Result<u32, String> {
    let twice = if let Some((n, d)) = s.split_once('/') {
        let n: u32 = n.trim().parse().map_err(|e| format!("{s:?}: {e}"))?;
        match d.trim() {
            "1" => 2 * n,
            "2" => n,
            _ => return Err(format!("spin {s:?} must be an integer or half-integer")),
        }
    } else {
        let x: f64 = s.trim().parse().map_err(|e| format!("{s:?}: {e}"))?;
        let t = 2.0 * x;
        if t.fract() != 0.0 {
            return Err(format!("spin {s:?} must be an integer or half-integer"));
        }
        t as u32
    };
    if twice == 0 {
        return Err("spin must be at least 1/2".into());
    }
    Ok(twice)
}

pub fn tolerance(s: &str) -> Result<f64, String> {
    let t: f64 = s.parse().map_err(|e| format!("{s:?}: {e}"))?;
    if !(1e-14..=1e-3).contains(&t) {
        return Err(format!("tolerance {t:e} outside [1e-14, 1e-3]"));
    }
    Ok(t)
}

/// Real matrix from a CSV file, one row per line, no header.
pub fn read_matrix(path: &Path) -> CliResult<DMatrix<f64>> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .comment(Some(b'#'))
        .trim(csv::Trim::All)
        .from_path(path)?;
    let mut rows: Vec<Vec<f64>> = Vec::new();
    for (i, rec) in reader.records().enumerate() {
        let rec = rec?;
        let row = rec
            .iter()
            .map(|f| f.parse::<f64>())
            .collect::<Result<Vec<_>, _>>()
            .map_err(|e| CliError::Usage(format!("{}: row {}: {e}", path.display(), i + 1)))?;
        rows.push(row);
    }
    let n = rows.len();
    if n == 0 {
        return usage(format!("{}: empty matrix", path.display()));
    }
    if let Some(bad) = rows.iter().position(|r| r.len() != n) {
        return usage(format!("{}: row {} has {} entries, expected {n}", path.display(), bad + 1, rows[bad].len()));
    }
    Ok(DMatrix::from_fn(n, n, |i, j| rows[i][j]))
}

/// Amplitudes from a CSV file of `re,im` (or `re`) lines.
pub fn read_amplitudes(path: &Path) -> CliResult<Vec<C64>> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .comment(Some(b'#'))
        .trim(csv::Trim::All)
        .from_path(path)?;
    let mut out = Vec::new();
    for (i, rec) in reader.records().enumerate() {
        let rec = rec?;
        let joined: Vec<&str> = rec.iter().collect();
        let z = complex(&joined.join(",")).map_err(|e| CliError::Usage(format!("{}: line {}: {e}", path.display(), i + 1)))?;
        out.push(z);
    }
    if out.is_empty() {
        return usage(format!("{}: no amplitudes", path.display()));
    }
    Ok(out)
}
