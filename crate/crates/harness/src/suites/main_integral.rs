//! The flag integral against its Gamma-product closed form.

use flagbeta::closed_form::{convergence_margin, main_rhs, main_rhs_by_pushforward, nu_from_lambda, ExponentSet};
use flagbeta::importance::{check_finite_variance, is_mc_estimate_complex, proposal_for, ComplexMCEstimate};
use flagbeta::{EntryExponents, FieldTag, ProposalRule};
use num_complex::Complex64;

use super::{exponent_set, oracle_record, Check, Ctx};
use crate::oracle::IntegrandSpec;
use crate::report::{anchor, MetricKind, Record};

/// Relative floor added to Monte-Carlo standard errors, for proposals whose
/// weights are nearly constant.
pub const STDERR_FLOOR: f64 = 1e-12;

/// The quadrature oracle available for `(n, field)` with real exponents, if any.
pub fn oracle_for(l: &ExponentSet, tag: FieldTag) -> Option<IntegrandSpec> {
    if !l.is_real() {
        return None;
    }
    let re: Vec<f64> = l.values().iter().map(|z| z.re).collect();
    match (l.n(), tag) {
        (2, FieldTag::Quaternion) => Some(IntegrandSpec::FlagOrderTwoRadial { tag, lambda: re[0] }),
        (2, _) => Some(IntegrandSpec::FlagOrderTwo { tag, lambda: re[0] }),
        (3, FieldTag::Real) => Some(IntegrandSpec::FlagOrderThreeReal { lambda: [re[0], re[1], re[2]] }),
        _ => None,
    }
}

/// Tempers tried in order by [`default_proposal`].
pub const TEMPERS: [f64; 3] = [0.2, 0.1, 0.05];

/// The proposal used for `l`: the first entrywise temper with finite weight
/// variance, else the tail-matched column measure.
pub fn default_proposal(l: &ExponentSet, tag: FieldTag) -> flagbeta::Result<(ProposalRule, EntryExponents)> {
    for temper in TEMPERS {
        let rule = ProposalRule::Entrywise { temper };
        if let Ok(p) = proposal_for(l, tag, rule) {
            if check_finite_variance(l, &p).is_ok() {
                return Ok((rule, p));
            }
        }
    }
    let tail = ProposalRule::TailMatched { fraction: 0.5 };
    Ok((tail, proposal_for(l, tag, tail)?))
}

/// Monte-Carlo records for real and (when nonzero) imaginary parts.
pub fn mc_records(
    name: &str,
    anchor: &str,
    l: &ExponentSet,
    tag: FieldTag,
    samples: usize,
    seed: u64,
    z_tol: f64,
) -> Vec<Record> {
    let expected = match main_rhs(l, tag) {
        Ok(v) => v.exp(),
        Err(e) => return vec![Record::failed(name, anchor, MetricKind::Z, z_tol, format!("closed form: {e}"))],
    };
    let run = || -> flagbeta::Result<(ProposalRule, ComplexMCEstimate)> {
        let (rule, proposal) = default_proposal(l, tag)?;
        Ok((rule, is_mc_estimate_complex(l, &proposal, samples, seed)?))
    };
    match run() {
        Ok((rule, est)) => {
            let mut out = Vec::new();
            let mut parts = vec![("re", est.re, expected.re)];
            if !l.is_real() {
                parts.push(("im", est.im, expected.im));
            }
            for (part, e, exp) in parts {
                let floor = STDERR_FLOOR * expected.norm();
                let se = (e.stderr * e.stderr + floor * floor).sqrt();
                let label = if l.is_real() { name.to_string() } else { format!("{name} ({part})") };
                out.push(
                    Record::z(label, anchor, e.mean, se, exp, z_tol)
                        .with_details(format!("{} samples, seed {seed}, proposal {rule:?}", e.n_samples)),
                );
            }
            out
        }
        Err(e) => vec![Record::failed(name, anchor, MetricKind::Z, z_tol, e.to_string())],
    }
}

fn describe(l: &ExponentSet) -> String {
    let v: Vec<String> = l
        .values()
        .iter()
        .map(|z: &Complex64| if z.im == 0.0 { format!("{}", z.re) } else { format!("{}{:+}i", z.re, z.im) })
        .collect();
    format!("({})", v.join(", "))
}

pub fn run(ctx: &Ctx<'_>) -> Vec<Record> {
    let spec = ctx.spec;
    let tag = spec.field;
    let tol = &spec.tolerances;
    let l = match exponent_set(spec) {
        Ok(l) => l,
        Err(e) => {
            return vec![Record::failed("exponents", anchor::FLAG_INTEGRAL, MetricKind::RelErr, 0.0, e.to_string())]
        }
    };
    let label = format!("n={} {} lambda={}", spec.n, tag.code(), describe(&l));
    let margin = convergence_margin(&nu_from_lambda(&l, tag), tag);
    let domain = Record::condition(
        format!("exponents in the convergence domain, {label}"),
        anchor::CONVERGENCE,
        margin > 0.0,
        margin,
        "observed = min Re nu_pq - kappa/2, must be positive",
    );
    if margin <= 0.0 {
        return vec![domain];
    }
    let l = &l;
    let label = &label;
    let mut checks: Vec<Check<'_>> = vec![Box::new(move || {
        let a = main_rhs(l, tag);
        let b = main_rhs_by_pushforward(l, tag);
        match (a, b) {
            (Ok(a), Ok(b)) => vec![Record::rel_scaled(
                format!("Gamma product equals column-by-column assembly, {label}"),
                anchor::FLAG_INTEGRAL,
                (b - a).norm(),
                0.0,
                a.norm().max(1.0),
                tol.coeffs,
            )
            .with_details("compares log values")],
            (a, b) => vec![Record::failed(
                format!("closed forms, {label}"),
                anchor::FLAG_INTEGRAL,
                MetricKind::RelErr,
                tol.coeffs,
                format!("{:?} / {:?}", a.err(), b.err()),
            )],
        }
    })];
    if let Some(integrand) = oracle_for(l, tag) {
        let qtol = if integrand.quadrature_dims() <= 2 { tol.quad_low_dim } else { tol.quad_high_dim };
        checks.push(Box::new(move || {
            vec![oracle_record(&format!("quadrature, {label}"), anchor::FLAG_INTEGRAL, &integrand, qtol)]
        }));
    }
    checks.push(Box::new(move || {
        mc_records(
            &format!("Monte Carlo, {label}"),
            anchor::FLAG_INTEGRAL,
            l,
            tag,
            spec.samples,
            spec.seed,
            tol.z_score,
        )
    }));
    let mut out = vec![domain];
    out.extend(ctx.run(checks));
    out
}
