//! Properties of the Dieudonné determinant.

use flagbeta::rng::{stream_base, stream_rng};
use flagbeta::{FieldTag, MatrixK, Scalar, UnitriangularMatrix};
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use super::{worst_rel, worst_scaled, Check, Ctx};
use crate::report::{anchor, Record};

const MAX_SIZE: usize = 5;

fn trials<T: Send>(ctx: &Ctx<'_>, task: u32, f: impl Fn(&mut ChaCha8Rng) -> T + Sync + Send) -> Vec<T> {
    let spec = ctx.spec;
    (0..spec.samples as u64).into_par_iter().map(|t| f(&mut stream_rng(spec.seed, stream_base(task) + t))).collect()
}

fn size(rng: &mut ChaCha8Rng) -> usize {
    rng.random_range(1..=MAX_SIZE)
}

pub fn run(ctx: &Ctx<'_>) -> Vec<Record> {
    let spec = ctx.spec;
    let tag = spec.field;
    let tol = spec.tolerances.qdet;
    let label = format!("{} random {} instances", spec.samples, tag.name());
    let label = &label;
    let mut checks: Vec<Check<'_>> = vec![
        Box::new(move || {
            let pairs = trials(ctx, 50, |rng| {
                let m = size(rng);
                let a = MatrixK::random_gaussian(m, m, tag, rng);
                let b = MatrixK::random_gaussian(m, m, tag, rng);
                ((&a * &b).qdet().unwrap_or(f64::NAN), a.qdet().unwrap_or(f64::NAN) * b.qdet().unwrap_or(f64::NAN))
            });
            vec![worst_rel(&format!("qdet(AB) = qdet(A) qdet(B), {label}"), anchor::DIEUDONNE, pairs, tol)]
        }),
        Box::new(move || {
            let pairs = trials(ctx, 51, |rng| {
                let m = size(rng);
                let z = UnitriangularMatrix::random_gaussian(m, tag, rng).to_matrix();
                (z.qdet().unwrap_or(f64::NAN), 1.0)
            });
            vec![worst_rel(&format!("unitriangular has qdet 1, {label}"), anchor::DIEUDONNE, pairs, tol)]
        }),
        Box::new(move || {
            let pairs = trials(ctx, 52, |rng| {
                let m = size(rng);
                let diag: Vec<Scalar> = (0..m).map(|_| Scalar::gaussian_sample(tag, rng)).collect();
                let d = MatrixK::from_fn(m, m, tag, |i, j| if i == j { diag[i] } else { Scalar::zero(tag) });
                (d.qdet().unwrap_or(f64::NAN), diag.iter().map(|x| x.abs()).product())
            });
            vec![worst_rel(&format!("diagonal has qdet = product of |d_i|, {label}"), anchor::DIEUDONNE, pairs, tol)]
        }),
        Box::new(move || {
            let pairs = trials(ctx, 53, |rng| {
                let m = rng.random_range(2..=MAX_SIZE);
                let split = rng.random_range(1..m);
                let pd = MatrixK::random_gaussian(m, m + 1, tag, rng).gram();
                let rhs = pd.block(0, split, 0, split).qdet().unwrap_or(f64::NAN)
                    * pd.schur_complement(split).and_then(|s| s.qdet()).unwrap_or(f64::NAN);
                (pd.qdet().unwrap_or(f64::NAN), rhs)
            });
            vec![worst_rel(
                &format!("block factorization through the Schur complement, positive definite, {label}"),
                anchor::DIEUDONNE,
                pairs,
                tol,
            )]
        }),
        Box::new(move || {
            let pairs = trials(ctx, 54, |rng| {
                let m = size(rng);
                let a = MatrixK::random_gaussian(m, m, tag, rng);
                (a.qdet_by_elimination().unwrap_or(f64::NAN), a.qdet().unwrap_or(f64::NAN))
            });
            vec![worst_rel(
                &format!("elimination over K agrees with the real embedding, {label}"),
                anchor::DIEUDONNE,
                pairs,
                tol,
            )]
        }),
    ];
    if tag != FieldTag::Quaternion {
        checks.push(Box::new(move || {
            let items = trials(ctx, 55, |rng| {
                let m = size(rng);
                let a = MatrixK::random_gaussian(m, m, tag, rng);
                let d = a.det_rc().map(|x| x.abs()).unwrap_or(f64::NAN);
                (a.qdet().unwrap_or(f64::NAN), d, d)
            });
            vec![worst_scaled(&format!("qdet = |det|, {label}"), anchor::DIEUDONNE, items, spec.tolerances.qdet_vs_det)]
        }));
    }
    ctx.run(checks)
}
