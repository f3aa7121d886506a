//! The JSON metrics artifact written next to every solve.
//!
//! Key names are stable: `rel_error_x`, `rel_error_l`, `rel_error_s`,
//! `iterations`, `wall_seconds`, `effective_rank`, `converged`. Relative
//! errors are squared Frobenius ratios. Fields that do not apply to a run
//! (no ground truth, no iteration count) are `null`. `wall_seconds` comes
//! from a monotonic clock and is the one field that varies between
//! otherwise identical runs, so golden comparisons should ignore it.

use std::path::Path;

use serde::Serialize;

use crate::error::CliError;
use crate::io::write_atomic;

#[derive(Debug, Clone, Serialize)]
pub struct MetricsReport {
    pub rel_error_x: Option<f64>,
    pub rel_error_l: Option<f64>,
    pub rel_error_s: Option<f64>,
    pub iterations: Option<usize>,
    pub wall_seconds: f64,
    pub effective_rank: Option<usize>,
    pub converged: bool,
}

impl MetricsReport {
    fn check(&self) -> Result<(), CliError> {
        let reals = [
            ("rel_error_x", self.rel_error_x),
            ("rel_error_l", self.rel_error_l),
            ("rel_error_s", self.rel_error_s),
            ("wall_seconds", Some(self.wall_seconds)),
        ];
        for (name, value) in reals {
            if let Some(v) = value {
                if !v.is_finite() || v < 0.0 {
                    return Err(CliError::Solver(format!(
                        "metric {name} must be finite and nonnegative, got {v}"
                    )));
                }
            }
        }
        Ok(())
    }
}

pub fn write_metrics(path: &Path, report: &MetricsReport) -> Result<(), CliError> {
    report.check()?;
    let mut text = serde_json::to_string_pretty(report)
        .map_err(|e| CliError::Solver(format!("metrics serialization: {e}")))?;
    text.push('\n');
    write_atomic(path, text.as_bytes())
}
