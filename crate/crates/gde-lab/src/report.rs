//! Run report: per-check verdicts with the measured values, plus named
//! scalar results and the artifact manifest.

use serde::Serialize;
use std::collections::BTreeMap;

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, Serialize)]
pub struct Check {
    pub name: String,
    pub passed: bool,
    pub measured: f64,
    pub tolerance: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub detail: Option<String>,
}

/// Keeps every number in the report a JSON number: serde_json writes
/// NaN/inf as null, which downstream readers reject.
fn sanitize(measured: f64) -> (f64, Option<String>) {
    if measured.is_finite() {
        (measured, None)
    } else {
        (f64::MAX, Some(format!("measured value was {measured}")))
    }
}

impl Check {
    pub fn at_most(name: &str, measured: f64, tolerance: f64) -> Check {
        let (stored, detail) = sanitize(measured);
        Check {
            name: name.into(),
            passed: measured.is_finite() && measured <= tolerance,
            measured: stored,
            tolerance,
            detail,
        }
    }

    pub fn at_least(name: &str, measured: f64, floor: f64) -> Check {
        let (stored, detail) = sanitize(measured);
        Check {
            name: name.into(),
            passed: measured.is_finite() && measured >= floor,
            measured: stored,
            tolerance: floor,
            detail,
        }
    }

    /// |measured - center| <= half_width.
    pub fn in_band(name: &str, measured: f64, center: f64, half_width: f64) -> Check {
        let (stored, detail) = sanitize(measured);
        Check {
            name: name.into(),
            passed: measured.is_finite() && (measured - center).abs() <= half_width,
            measured: stored,
            tolerance: half_width,
            detail: Some(detail.unwrap_or_else(|| format!("band center {center}"))),
        }
    }

    /// A check that could not be evaluated at all.
    pub fn failure(name: &str, detail: String) -> Check {
        Check {
            name: name.into(),
            passed: false,
            measured: 0.0,
            tolerance: 0.0,
            detail: Some(detail),
        }
    }

    pub fn with_detail(mut self, detail: String) -> Check {
        self.detail = Some(detail);
        self
    }
}

/// `wall_clock_seconds` stays the last field: serde keeps declaration
/// order, so the one nondeterministic line lands at the bottom of the
/// JSON and byte-level comparisons can strip it.
#[derive(Debug, Clone, Serialize)]
pub struct RunReport {
    pub schema_version: u32,
    pub scenario: String,
    pub seed: u64,
    pub checks: Vec<Check>,
    pub results: BTreeMap<String, f64>,
    pub artifacts: Vec<String>,
    pub wall_clock_seconds: f64,
}

impl RunReport {
    pub fn all_passed(&self) -> bool {
        !self.checks.is_empty() && self.checks.iter().all(|c| c.passed)
    }

    pub fn to_json(&self) -> String {
        let mut text = serde_json::to_string_pretty(self).expect("report serializes");
        text.push('\n');
        text
    }
}
