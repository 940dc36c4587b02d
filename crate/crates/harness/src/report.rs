//! JSON verification reports.
//!
//! A report is one JSON object:
//!
//! ```text
//! { "format": "flagbeta-report", "format_version": 1, "version": "0.1.0",
//!   "suite": "...", "seed": 0, "config_hash": "<sha-256 hex>",
//!   "tolerance_profile": "default", "run": { resolved run spec },
//!   "records": [ { "name", "anchor", "status", "observed", "expected",
//!                  "tolerance", "metric": { "kind", "value" }, "details",
//!                  "oracle_failure", "runtime_ms" } ],
//!   "summary": { "pass", "fail", "warn" }, "status": "pass" | "fail" }
//! ```
//!
//! Non-finite numbers are written as `null`. `runtime_ms` is present only when
//! timings were requested, so reports of identical runs are byte-identical.

use std::fmt;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::config::RunSpec;

pub const FORMAT: &str = "flagbeta-report";
pub const FORMAT_VERSION: u32 = 1;

/// Identifiers tying each record to the result it checks.
pub mod anchor {
    pub const FLAG_INTEGRAL: &str = "flag-integral/gamma-product";
    pub const CONVERGENCE: &str = "flag-integral/convergence";
    pub const PUSHFORWARD: &str = "pushforward/last-column";
    pub const SCALAR_LEMMA: &str = "scalar-lemma";
    pub const COEFFICIENTS: &str = "scalar-lemma/coefficients";
    pub const DESNANOT_JACOBI: &str = "desnanot-jacobi";
    pub const DIEUDONNE: &str = "dieudonne-determinant";
    pub const HUA: &str = "hua-integral";

    pub const ALL: [&str; 8] =
        [FLAG_INTEGRAL, CONVERGENCE, PUSHFORWARD, SCALAR_LEMMA, COEFFICIENTS, DESNANOT_JACOBI, DIEUDONNE, HUA];
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Status {
    Pass,
    Fail,
    Warn,
}

impl fmt::Display for Status {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Status::Pass => "PASS",
            Status::Fail => "FAIL",
            Status::Warn => "WARN",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MetricKind {
    /// `(observed - expected) / stderr`; passes when `|z| <= tolerance`.
    Z,
    /// `|observed - expected| / |expected|`; passes when `<= tolerance`.
    RelErr,
    /// Test p-value; passes when `> tolerance`.
    PValue,
    /// Failures among repetitions; passes when `<= tolerance`.
    Count,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Metric {
    pub kind: MetricKind,
    pub value: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Record {
    pub name: String,
    pub anchor: String,
    pub status: Status,
    pub observed: Option<f64>,
    pub expected: Option<f64>,
    pub tolerance: f64,
    pub metric: Metric,
    #[serde(default, skip_serializing_if = "String::is_empty")]
    pub details: String,
    #[serde(default, skip_serializing_if = "std::ops::Not::not")]
    pub oracle_failure: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub runtime_ms: Option<f64>,
}

fn finite(x: f64) -> Option<f64> {
    x.is_finite().then_some(x)
}

impl Record {
    fn new(
        name: impl Into<String>,
        anchor: &str,
        observed: f64,
        expected: Option<f64>,
        tolerance: f64,
        metric: Metric,
    ) -> Self {
        let pass = match (metric.kind, metric.value) {
            (_, None) => false,
            (MetricKind::Z, Some(v)) => v.abs() <= tolerance,
            (MetricKind::RelErr | MetricKind::Count, Some(v)) => v <= tolerance,
            (MetricKind::PValue, Some(v)) => v > tolerance,
        };
        Record {
            name: name.into(),
            anchor: anchor.to_string(),
            status: if pass { Status::Pass } else { Status::Fail },
            observed: finite(observed),
            expected: expected.and_then(finite),
            tolerance,
            metric,
            details: String::new(),
            oracle_failure: false,
            runtime_ms: None,
        }
    }

    /// Compares by relative error.
    pub fn rel(name: impl Into<String>, anchor: &str, observed: f64, expected: f64, tolerance: f64) -> Self {
        let r = flagbeta::tolerance::rel_err(observed, expected);
        Record::new(
            name,
            anchor,
            observed,
            Some(expected),
            tolerance,
            Metric { kind: MetricKind::RelErr, value: finite(r) },
        )
    }

    /// As [`Record::rel`] with the error measured against another scale.
    pub fn rel_scaled(
        name: impl Into<String>,
        anchor: &str,
        observed: f64,
        expected: f64,
        scale: f64,
        tolerance: f64,
    ) -> Self {
        let r = (observed - expected).abs() / scale.abs().max(f64::MIN_POSITIVE);
        Record::new(
            name,
            anchor,
            observed,
            Some(expected),
            tolerance,
            Metric { kind: MetricKind::RelErr, value: finite(r) },
        )
    }

    /// Compares a Monte-Carlo mean by its z-score.
    pub fn z(name: impl Into<String>, anchor: &str, mean: f64, stderr: f64, expected: f64, tolerance: f64) -> Self {
        let z = (mean - expected) / stderr;
        Record::new(name, anchor, mean, Some(expected), tolerance, Metric { kind: MetricKind::Z, value: finite(z) })
            .with_details(format!("stderr {stderr:.6e}"))
    }

    pub fn p_value(name: impl Into<String>, anchor: &str, statistic: f64, p: f64, significance: f64) -> Self {
        Record::new(name, anchor, statistic, None, significance, Metric { kind: MetricKind::PValue, value: finite(p) })
    }

    pub fn count(name: impl Into<String>, anchor: &str, failures: usize, trials: usize, allowed: usize) -> Self {
        Record::new(
            name,
            anchor,
            failures as f64,
            None,
            allowed as f64,
            Metric { kind: MetricKind::Count, value: Some(failures as f64) },
        )
        .with_details(format!("{failures} of {trials} failed"))
    }

    /// A yes/no condition, with `observed` the quantity it was decided on.
    pub fn condition(
        name: impl Into<String>,
        anchor: &str,
        holds: bool,
        observed: f64,
        why: impl Into<String>,
    ) -> Self {
        let failures = if holds { 0.0 } else { 1.0 };
        Record::new(name, anchor, observed, None, 0.0, Metric { kind: MetricKind::Count, value: Some(failures) })
            .with_details(why)
    }

    /// A check that could not be computed.
    pub fn failed(
        name: impl Into<String>,
        anchor: &str,
        kind: MetricKind,
        tolerance: f64,
        why: impl Into<String>,
    ) -> Self {
        Record::new(name, anchor, f64::NAN, None, tolerance, Metric { kind, value: None }).with_details(why)
    }

    /// As [`Record::failed`], for a quadrature oracle that did not deliver.
    pub fn oracle_failed(name: impl Into<String>, anchor: &str, tolerance: f64, why: impl Into<String>) -> Self {
        let mut r = Record::failed(name, anchor, MetricKind::RelErr, tolerance, why);
        r.oracle_failure = true;
        r
    }

    pub fn with_details(mut self, details: impl Into<String>) -> Self {
        let d = details.into();
        if self.details.is_empty() {
            self.details = d;
        } else if !d.is_empty() {
            self.details = format!("{}; {d}", self.details);
        }
        self
    }

    /// Downgrades to a documented observation that never fails the suite.
    pub fn as_warning(mut self) -> Self {
        self.status = Status::Warn;
        self
    }

    pub fn passed(&self) -> bool {
        self.status != Status::Fail
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Summary {
    pub pass: usize,
    pub fail: usize,
    pub warn: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub format: String,
    pub format_version: u32,
    pub version: String,
    pub suite: String,
    pub seed: u64,
    pub config_hash: String,
    pub tolerance_profile: String,
    pub run: RunSpec,
    pub records: Vec<Record>,
    pub summary: Summary,
    pub status: Status,
}

impl Report {
    pub fn new(spec: &RunSpec, records: Vec<Record>) -> Self {
        let mut summary = Summary::default();
        for r in &records {
            match r.status {
                Status::Pass => summary.pass += 1,
                Status::Fail => summary.fail += 1,
                Status::Warn => summary.warn += 1,
            }
        }
        Report {
            format: FORMAT.to_string(),
            format_version: FORMAT_VERSION,
            version: env!("CARGO_PKG_VERSION").to_string(),
            suite: spec.suite.name().to_string(),
            seed: spec.seed,
            config_hash: spec.config_hash(),
            tolerance_profile: spec.tolerance_profile.name().to_string(),
            run: spec.clone(),
            status: if summary.fail == 0 { Status::Pass } else { Status::Fail },
            summary,
            records,
        }
    }

    /// 0 when everything passed, 3 when a quadrature oracle failed, 1 otherwise.
    pub fn exit_code(&self) -> i32 {
        if self.records.iter().any(|r| r.oracle_failure) {
            3
        } else if self.status == Status::Fail {
            1
        } else {
            0
        }
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("reports serialize");
        s.push('\n');
        s
    }

    pub fn from_json(s: &str) -> serde_json::Result<Self> {
        serde_json::from_str(s)
    }

    pub fn write(&self, path: &Path) -> std::io::Result<()> {
        std::fs::write(path, self.to_json())
    }

    /// One line per record.
    pub fn text_summary(&self) -> String {
        let mut out = String::new();
        for r in &self.records {
            let metric = match r.metric.value {
                Some(v) => format!("{:?}={v:.3e}", r.metric.kind).to_lowercase(),
                None => "n/a".to_string(),
            };
            out.push_str(&format!("{:<4} [{}] {} ({metric}, tol {:e})\n", r.status, r.anchor, r.name, r.tolerance));
        }
        out.push_str(&format!(
            "{}: {} pass, {} fail, {} warn\n",
            self.suite, self.summary.pass, self.summary.fail, self.summary.warn
        ));
        out
    }
}
