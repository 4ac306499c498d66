use crate::C64;
use std::fmt;

/// One main-path vs oracle comparison.
#[derive(Debug, Clone, PartialEq)]
pub struct OracleReport {
    pub quantity: String,
    pub main_value: C64,
    pub oracle_value: C64,
    pub rel_error: f64,
    pub tolerance: f64,
    pub pass: bool,
}

impl OracleReport {
    /// Relative error is |main - oracle| / max(1, |oracle|).
    pub fn compare(quantity: impl Into<String>, main: C64, oracle: C64, tolerance: f64) -> Self {
        let rel_error = (main - oracle).norm() / oracle.norm().max(1.0);
        OracleReport {
            quantity: quantity.into(),
            main_value: main,
            oracle_value: oracle,
            rel_error,
            tolerance,
            pass: rel_error < tolerance,
        }
    }

    pub fn compare_real(quantity: impl Into<String>, main: f64, oracle: f64, tolerance: f64) -> Self {
        Self::compare(quantity, C64::new(main, 0.0), C64::new(oracle, 0.0), tolerance)
    }
}

impl fmt::Display for OracleReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{} {}: main {:.12e}{:+.3e}i oracle {:.12e}{:+.3e}i rel {:.2e} (tol {:.0e})",
            if self.pass { "ok  " } else { "FAIL" },
            self.quantity,
            self.main_value.re,
            self.main_value.im,
            self.oracle_value.re,
            self.oracle_value.im,
            self.rel_error,
            self.tolerance
        )
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn pass_iff_below_tolerance() {
        assert!(OracleReport::compare_real("x", 1.0, 1.0 + 1e-12, 1e-10).pass);
        assert!(!OracleReport::compare_real("x", 1.0, 1.1, 1e-10).pass);
    }
}
