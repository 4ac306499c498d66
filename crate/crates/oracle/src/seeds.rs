//! Seed manifests: plain text, one decimal seed per line. Blank lines and
//! lines starting with `#` are ignored.

use crate::{OracleError, Result};

pub fn parse_manifest(text: &str) -> Result<Vec<u64>> {
    let mut seeds = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let seed = line.parse::<u64>().map_err(|e| OracleError::Manifest {
            line: i + 1,
            message: format!("{line:?}: {e}"),
        })?;
        seeds.push(seed);
    }
    Ok(seeds)
}

/// The manifest shipped with the crate.
pub const DEFAULT_MANIFEST: &str = include_str!("../seeds.txt");

pub fn default_seeds() -> Vec<u64> {
    parse_manifest(DEFAULT_MANIFEST).expect("bundled seed manifest parses")
}
