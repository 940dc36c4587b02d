//! Verification suites. Each suite turns a [`RunSpec`] into report records.

use std::time::Instant;

use flagbeta::closed_form::{pair_count, ColumnExponents, ExponentSet};
use flagbeta::MeasureSpec;
use num_complex::Complex64;
use rayon::prelude::*;

use crate::config::{RunSpec, Suite};
use crate::oracle::{quadrature_oracle, IntegrandSpec};
use crate::quadrature::QuadError;
use crate::report::{Record, Report};

mod boundary;
mod coeffs;
mod dj;
mod hua;
mod lemma;
pub mod main_integral;
mod pushforward;
mod qdet;

/// Shared state of one suite run.
pub struct Ctx<'a> {
    pub spec: &'a RunSpec,
    pub record_timings: bool,
}

type Check<'a> = Box<dyn Fn() -> Vec<Record> + Send + Sync + 'a>;

impl Ctx<'_> {
    /// Runs independent checks in parallel and concatenates their records in order.
    fn run(&self, checks: Vec<Check<'_>>) -> Vec<Record> {
        let timings = self.record_timings;
        checks
            .par_iter()
            .map(|check| {
                let start = Instant::now();
                let mut records = check();
                if timings {
                    let ms = start.elapsed().as_secs_f64() * 1e3;
                    for r in &mut records {
                        r.runtime_ms = Some(ms);
                    }
                }
                records
            })
            .collect::<Vec<_>>()
            .into_iter()
            .flatten()
            .collect()
    }

    fn kappa_half(&self) -> f64 {
        self.spec.field.kappa_f64() / 2.0
    }
}

pub fn run_suite(spec: &RunSpec, record_timings: bool) -> Report {
    let ctx = Ctx { spec, record_timings };
    let records = match spec.suite {
        Suite::All => Suite::EACH
            .iter()
            .flat_map(|&s| {
                let sub = spec.for_suite(s);
                run_records(&Ctx { spec: &sub, record_timings })
            })
            .collect(),
        _ => run_records(&ctx),
    };
    Report::new(spec, records)
}

fn run_records(ctx: &Ctx<'_>) -> Vec<Record> {
    match ctx.spec.suite {
        Suite::Lemma => lemma::run(ctx),
        Suite::Coeffs => coeffs::run(ctx),
        Suite::Dj => dj::run(ctx),
        Suite::Qdet => qdet::run(ctx),
        Suite::Main => main_integral::run(ctx),
        Suite::Pushforward => pushforward::run(ctx),
        Suite::Hua => hua::run(ctx),
        Suite::Boundary => boundary::run(ctx),
        Suite::All => unreachable!("expanded by run_suite"),
    }
}

/// The exponents of a run: all pairs, the last column only, or `kappa/2 + 1` everywhere.
pub fn exponent_set(spec: &RunSpec) -> flagbeta::Result<ExponentSet> {
    let n = spec.n;
    match &spec.lambda {
        None => ExponentSet::uniform(n, Complex64::new(spec.field.kappa_f64() / 2.0 + 1.0, 0.0)),
        Some(l) if l.len() == pair_count(n) => ExponentSet::new(n, l.clone()),
        Some(l) => Ok(ExponentSet::column_only(&ColumnExponents::new(l.clone())?)),
    }
}

/// The column-exponent measure of a run; `None` when the run gives all pairs (n > 2)
/// or complex values.
pub fn measure_spec(spec: &RunSpec) -> Option<flagbeta::Result<MeasureSpec>> {
    match &spec.lambda {
        None => Some(Ok(MeasureSpec::default_for(spec.n, spec.field))),
        Some(l) if l.len() == spec.n - 1 && l.iter().all(|z| z.im == 0.0) => {
            Some(MeasureSpec::new(spec.n, spec.field, l.iter().map(|z| z.re).collect()))
        }
        Some(_) => None,
    }
}

/// Runs an oracle and compares it with its closed form.
pub fn oracle_record(name: &str, anchor: &str, integrand: &IntegrandSpec, tol: f64) -> Record {
    let expected = match integrand.closed_form() {
        Ok(v) => v,
        Err(e) => {
            return Record::failed(name, anchor, crate::report::MetricKind::RelErr, tol, format!("closed form: {e}"))
        }
    };
    match quadrature_oracle(integrand) {
        Ok(est) => Record::rel(name, anchor, est.value, expected, tol)
            .with_details(format!("quadrature error estimate {:.3e}", est.rel_error())),
        Err(e) => Record::oracle_failed(name, anchor, tol, format!("{}: {e}", integrand.name())),
    }
}

/// Records whether the oracle reports divergence.
pub fn divergence_record(name: &str, anchor: &str, integrand: &IntegrandSpec) -> Record {
    match quadrature_oracle(integrand) {
        Err(QuadError::Divergent { at }) => {
            Record::condition(name, anchor, true, at, format!("divergence detected at |x| = {at:.3e}"))
        }
        Err(e) => Record::oracle_failed(name, anchor, 0.0, format!("expected divergence, got: {e}")),
        Ok(est) => Record::condition(
            name,
            anchor,
            false,
            est.value,
            format!("expected divergence, quadrature returned {:e}", est.value),
        ),
    }
}

/// Worst relative error of a batch of `(observed, expected)` pairs, as one record.
pub fn worst_rel(name: &str, anchor: &str, pairs: impl IntoIterator<Item = (f64, f64)>, tol: f64) -> Record {
    worst_scaled(name, anchor, pairs.into_iter().map(|(o, e)| (o, e, e)), tol)
}

/// As [`worst_rel`] for `(observed, expected, scale)` triples.
pub fn worst_scaled(name: &str, anchor: &str, items: impl IntoIterator<Item = (f64, f64, f64)>, tol: f64) -> Record {
    let mut worst: Option<(f64, (f64, f64, f64))> = None;
    let mut count = 0usize;
    for item in items {
        count += 1;
        let (obs, exp, scale) = item;
        let r = (obs - exp).abs() / scale.abs().max(f64::MIN_POSITIVE);
        let r = if r.is_nan() { f64::INFINITY } else { r };
        if worst.is_none_or(|(w, _)| r > w) {
            worst = Some((r, item));
        }
    }
    match worst {
        Some((_, (obs, exp, scale))) => {
            Record::rel_scaled(name, anchor, obs, exp, scale, tol).with_details(format!("worst of {count} comparisons"))
        }
        None => Record::failed(name, anchor, crate::report::MetricKind::RelErr, tol, "no comparisons made"),
    }
}
