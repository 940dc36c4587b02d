//! Pushforward of the column measures under forgetting the last column.

use flagbeta::closed_form::{main_rhs, pushforward_constant, ColumnExponents, ExponentSet};
use flagbeta::rng::{stream_base, stream_rng};
use flagbeta::sampler::sample_flags;
use flagbeta::stats::energy_test;
use flagbeta::{FieldTag, MeasureSpec, UnitriangularMatrix};
use rayon::prelude::*;

use super::{measure_spec, Check, Ctx};
use crate::oracle::{quadrature_oracle, IntegrandSpec};
use crate::report::{anchor, MetricKind, Record};

/// Samples per level in one energy test.
pub const ENERGY_SAMPLES: usize = 400;
/// Permutations per energy test.
pub const PERMUTATIONS: usize = 199;
/// Fixed values of `z_12` for the order-three constant check.
pub const Z12_VALUES: [f64; 3] = [0.0, 0.7, -1.9];

/// Features compared by the energy test: every `ln s_pq` and `asinh` of every entry component.
pub fn features(z: &UnitriangularMatrix) -> Vec<f64> {
    let mut f: Vec<f64> = z.log_s_table().into_iter().flatten().collect();
    for e in z.entries() {
        f.extend(e.components().iter().map(|x| x.asinh()));
    }
    f
}

/// Energy-test p-value for one seed: projected order-`n` samples against order-`n-1` samples.
pub fn energy_p_value(spec: &MeasureSpec, seed: u64) -> flagbeta::Result<(f64, f64)> {
    energy_p_value_against(spec, &spec.prefix(spec.n() - 1)?, seed)
}

/// As [`energy_p_value`] with an arbitrary order-`n-1` measure on the other side.
pub fn energy_p_value_against(spec: &MeasureSpec, lower: &MeasureSpec, seed: u64) -> flagbeta::Result<(f64, f64)> {
    let x = sample_flags(spec, ENERGY_SAMPLES, seed, stream_base(1))?
        .iter()
        .map(|s| s.z.project().map(|z| features(&z)))
        .collect::<flagbeta::Result<Vec<_>>>()?;
    let y: Vec<Vec<f64>> =
        sample_flags(lower, ENERGY_SAMPLES, seed, stream_base(2))?.iter().map(|s| features(&s.z)).collect();
    let outcome = energy_test(&x, &y, PERMUTATIONS, &mut stream_rng(seed, stream_base(3)));
    Ok((outcome.statistic, outcome.p_value))
}

fn constant_record(m: usize, lambda: &[f64], tag: FieldTag, z12: Option<f64>, tol: f64) -> Record {
    let name = match z12 {
        Some(z) => format!("last-column integral at order {m} over {}, lambda={lambda:?}, z12={z}", tag.name()),
        None => format!("last-column integral at order {m} over {}, lambda={lambda:?}", tag.name()),
    };
    let integrand = match (m, z12) {
        (2, _) if tag == FieldTag::Quaternion => IntegrandSpec::FlagOrderTwoRadial { tag, lambda: lambda[0] },
        (2, _) => IntegrandSpec::FlagOrderTwo { tag, lambda: lambda[0] },
        (_, Some(z12)) => IntegrandSpec::LastColumnOrderThreeReal { lambda: [lambda[0], lambda[1]], z12 },
        _ => unreachable!("order-three checks carry z12"),
    };
    let expected = match ColumnExponents::from_real(lambda).and_then(|c| pushforward_constant(&c, tag)) {
        Ok(v) => v.exp().re,
        Err(e) => return Record::failed(name, anchor::PUSHFORWARD, MetricKind::RelErr, tol, e.to_string()),
    };
    match quadrature_oracle(&integrand) {
        Ok(est) => Record::rel(name, anchor::PUSHFORWARD, est.value, expected, tol)
            .with_details(format!("quadrature error estimate {:.3e}", est.rel_error())),
        Err(e) => Record::oracle_failed(name, anchor::PUSHFORWARD, tol, format!("{}: {e}", integrand.name())),
    }
}

pub fn run(ctx: &Ctx<'_>) -> Vec<Record> {
    let spec = ctx.spec;
    let tol = &spec.tolerances;
    let tag = spec.field;
    if spec.n < 2 {
        return vec![Record::failed(
            "column measure",
            anchor::PUSHFORWARD,
            MetricKind::RelErr,
            0.0,
            "order must be at least 2",
        )];
    }
    let measure = match measure_spec(spec) {
        Some(Ok(m)) => m,
        Some(Err(e)) => {
            return vec![Record::failed("column measure", anchor::PUSHFORWARD, MetricKind::RelErr, 0.0, e.to_string())]
        }
        None => {
            return vec![Record::failed(
                "column measure",
                anchor::PUSHFORWARD,
                MetricKind::RelErr,
                0.0,
                format!("needs {} real column exponents", spec.n - 1),
            )]
        }
    };
    let measure = &measure;
    let mut checks: Vec<Check<'_>> = Vec::new();
    for m in 2..=spec.n.min(3) {
        let Ok(prefix) = measure.prefix(m) else { continue };
        let lambda = prefix.lambda().to_vec();
        if m == 2 {
            checks.push(Box::new(move || vec![constant_record(2, &lambda, tag, None, tol.quad_high_dim)]));
        } else if tag == FieldTag::Real {
            for z12 in Z12_VALUES {
                let lambda = lambda.clone();
                checks.push(Box::new(move || vec![constant_record(3, &lambda, tag, Some(z12), tol.quad_high_dim)]));
            }
        }
    }
    checks.push(Box::new(move || {
        let name = format!("total mass of the order-{} column measure over {}", spec.n, tag.name());
        let via_flag = ColumnExponents::from_real(measure.lambda())
            .map(|c| ExponentSet::column_only(&c))
            .and_then(|l| main_rhs(&l, tag));
        match via_flag {
            Ok(v) => vec![Record::rel_scaled(
                name,
                anchor::PUSHFORWARD,
                measure.log_total_mass(),
                v.re,
                v.re.abs().max(1.0),
                tol.coeffs,
            )
            .with_details("product of per-level constants against the Gamma product, log values")],
            Err(e) => vec![Record::failed(name, anchor::PUSHFORWARD, MetricKind::RelErr, tol.coeffs, e.to_string())],
        }
    }));
    checks.push(Box::new(move || {
        let reps = tol.seed_repetitions;
        let name = format!(
            "projected order-{} samples against order-{} samples over {}, energy test",
            spec.n,
            spec.n - 1,
            tag.name()
        );
        let results: Vec<flagbeta::Result<(f64, f64)>> =
            (0..reps as u64).into_par_iter().map(|k| energy_p_value(measure, spec.seed.wrapping_add(k))).collect();
        let mut p_values = Vec::new();
        for r in results {
            match r {
                Ok((_, p)) => p_values.push(p),
                Err(e) => return vec![Record::failed(name, anchor::PUSHFORWARD, MetricKind::Count, 0.0, e.to_string())],
            }
        }
        let failures = p_values.iter().filter(|&&p| p <= tol.significance).count();
        let min_p = p_values.iter().cloned().fold(f64::INFINITY, f64::min);
        vec![Record::count(name, anchor::PUSHFORWARD, failures, reps, tol.max_seed_failures).with_details(format!(
            "seeds {}..{}, {ENERGY_SAMPLES} samples per level, {PERMUTATIONS} permutations, p <= {} counts as a failure, smallest p {min_p:.3}",
            spec.seed,
            spec.seed.wrapping_add(reps as u64 - 1),
            tol.significance
        ))]
    }));
    ctx.run(checks)
}
