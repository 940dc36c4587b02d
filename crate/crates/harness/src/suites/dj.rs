//! The Desnanot–Jacobi identity over R and C, and where it breaks over H.

use flagbeta::matrix::desnanot_jacobi;
use flagbeta::rng::{stream_base, stream_rng};
use flagbeta::{FieldTag, MatrixK, Scalar};
use rayon::prelude::*;

use super::{Check, Ctx};
use crate::report::{anchor, Record};

const SIZES: std::ops::RangeInclusive<usize> = 3..=6;
const COUNTEREXAMPLE_TRIALS: u64 = 50;

/// Both sides of the identity with every determinant replaced by `qdet`, for a
/// Hermitian positive definite `S`. The two off-diagonal minors then have equal
/// `qdet`, and the identity holds over every field through the 2x2 Schur
/// complement of `U`.
pub fn qdet_residual(s: &MatrixK) -> flagbeta::Result<(f64, f64)> {
    let m = s.rows() - 2;
    let keep = |drop: usize| -> Vec<usize> { (0..m + 2).filter(|&i| i != drop).collect() };
    let head: Vec<usize> = (0..m).collect();
    let (last, prev) = (m + 1, m);
    let q = |r: &[usize], c: &[usize]| s.select(r, c).qdet();
    let lhs = q(&head, &head)? * s.qdet()?;
    let rhs = q(&keep(last), &keep(last))? * q(&keep(prev), &keep(prev))?
        - q(&keep(last), &keep(prev))? * q(&keep(prev), &keep(last))?;
    Ok((lhs, rhs))
}

/// `[[i, j], [j, i]]`: invertible, yet `x11 x22 - x12 x21 = 0`.
pub fn counterexample() -> MatrixK {
    let unit = |k: usize| {
        let mut c = [0.0; 4];
        c[k] = 1.0;
        Scalar::from_components(&c, FieldTag::Quaternion)
    };
    MatrixK::from_fn(2, 2, FieldTag::Quaternion, |r, c| if r == c { unit(1) } else { unit(2) })
}

fn hermitian_pd(m: usize, tag: FieldTag, trial: u64, seed: u64) -> MatrixK {
    MatrixK::random_gaussian(m, m + 1, tag, &mut stream_rng(seed, stream_base(40) + trial)).gram()
}

pub fn run(ctx: &Ctx<'_>) -> Vec<Record> {
    let spec = ctx.spec;
    let tol = spec.tolerances.desnanot_jacobi;
    let mut checks: Vec<Check<'_>> = Vec::new();
    for tag in [FieldTag::Real, FieldTag::Complex] {
        for m in SIZES {
            checks.push(Box::new(move || {
                let worst = (0..spec.samples as u64)
                    .into_par_iter()
                    .map(|t| {
                        let mut rng = stream_rng(spec.seed, stream_base(30 + m as u32) + t);
                        let s = MatrixK::random_gaussian(m, m, tag, &mut rng);
                        desnanot_jacobi(&s).map(|d| d.rel_residual).unwrap_or(f64::INFINITY)
                    })
                    .reduce(|| 0.0, f64::max);
                vec![Record::rel_scaled(
                    format!("identity on {} random {m}x{m} matrices over {}", spec.samples, tag.name()),
                    anchor::DESNANOT_JACOBI,
                    worst,
                    0.0,
                    1.0,
                    tol,
                )
                .with_details("worst relative residual")]
            }));
        }
    }
    for tag in [FieldTag::Complex, FieldTag::Quaternion] {
        checks.push(Box::new(move || {
            let worst = (0..COUNTEREXAMPLE_TRIALS)
                .map(|t| {
                    let (l, r) = qdet_residual(&hermitian_pd(4, tag, t, spec.seed)).unwrap();
                    (l - r).abs() / l.abs().max(r.abs())
                })
                .fold(0.0, f64::max);
            vec![Record::rel_scaled(
                format!("qdet form on {COUNTEREXAMPLE_TRIALS} {} Hermitian positive definite 4x4", tag.name()),
                anchor::DESNANOT_JACOBI,
                worst,
                0.0,
                1.0,
                tol,
            )
            .with_details("worst relative residual")]
        }));
    }
    checks.push(Box::new(move || {
        let s = counterexample();
        let expansion = (s.get(0, 0) * s.get(1, 1) - s.get(0, 1) * s.get(1, 0)).abs();
        let q = s.qdet().unwrap_or(f64::NAN);
        vec![Record::rel(
            "expansion x11 x22 - x12 x21 on [[i, j], [j, i]] over quaternion",
            anchor::DESNANOT_JACOBI,
            expansion,
            q,
            tol,
        )
        .with_details(
            "counterexample: with U empty the identity reads det S = x11 x22 - x12 x21, which needs commuting entries",
        )
        .as_warning()]
    }));
    ctx.run(checks)
}
