//! Coefficients of `s_pn` as a quadratic form in `z_pn`.

use flagbeta::rng::{stream_base, stream_rng};
use flagbeta::UnitriangularMatrix;
use rayon::prelude::*;

use super::{worst_rel, worst_scaled, Ctx};
use crate::config::RunSpec;
use crate::report::{anchor, MetricKind, Record};

#[derive(Default)]
struct Batch {
    a: Vec<(f64, f64)>,
    disc: Vec<(f64, f64)>,
    fit: Vec<(f64, f64, f64)>,
    errors: Vec<String>,
}

pub fn run(ctx: &Ctx<'_>) -> Vec<Record> {
    let spec = ctx.spec;
    ctx.run(vec![Box::new(move || records(spec))])
}

fn records(spec: &RunSpec) -> Vec<Record> {
    let (n, tag) = (spec.n, spec.field);
    let tol = spec.tolerances.coeffs;
    let per_trial: Vec<Batch> = (0..spec.samples)
        .into_par_iter()
        .map(|trial| {
            let mut b = Batch::default();
            let z = UnitriangularMatrix::random_gaussian(
                n,
                tag,
                &mut stream_rng(spec.seed, stream_base(20) + trial as u64),
            );
            for p in 1..n {
                let r = (|| -> flagbeta::Result<()> {
                    let qc = z.quad_coeffs(p)?;
                    b.a.push((qc.a, z.s_ext(p - 1, n - 1)?));
                    b.disc.push((qc.discriminant(), z.s_ext(p - 1, n)? * z.s_ext(p, n - 1)?));
                    let fit = z.quad_coeffs_by_fit(p, n)?;
                    let scale = qc.a.max(qc.c);
                    b.fit.push((fit.a, qc.a, qc.a));
                    b.fit.push((fit.c, qc.c, qc.c));
                    for (x, y) in fit.b.components().iter().zip(qc.b.components()) {
                        b.fit.push((*x, *y, scale));
                    }
                    Ok(())
                })();
                if let Err(e) = r {
                    b.errors.push(format!("p={p}: {e}"));
                }
            }
            b
        })
        .collect();
    let mut all = Batch::default();
    for b in per_trial {
        all.a.extend(b.a);
        all.disc.extend(b.disc);
        all.fit.extend(b.fit);
        all.errors.extend(b.errors);
    }
    let label = format!("n={n} {}, {} random Z", tag.code(), spec.samples);
    let mut out = vec![
        worst_rel(&format!("a = s_(p-1)(n-1), {label}"), anchor::COEFFICIENTS, all.a, tol),
        worst_rel(&format!("ac - |b|^2 = s_(p-1)n s_p(n-1), {label}"), anchor::COEFFICIENTS, all.disc, tol),
        worst_scaled(
            &format!("block formula agrees with a fitted quadratic, {label}"),
            anchor::COEFFICIENTS,
            all.fit,
            tol,
        ),
    ];
    if !all.errors.is_empty() {
        out.push(Record::failed(
            format!("coefficient evaluation, {label}"),
            anchor::COEFFICIENTS,
            MetricKind::Count,
            0.0,
            all.errors.join("; "),
        ));
    }
    out
}
