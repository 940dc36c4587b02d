//! The scalar integral `∫ (a|u|^2 + 2u·b + c)^{-lambda} du` and the column step
//! built on it, checked by quadrature on random matrices.

use flagbeta::rng::{stream_base, stream_rng};
use flagbeta::{FieldTag, UnitriangularMatrix};
use rand::Rng;

use super::{oracle_record, Ctx};
use crate::oracle::IntegrandSpec;
use crate::report::{anchor, Record};

const TRIALS: usize = 12;

pub fn run(ctx: &Ctx<'_>) -> Vec<Record> {
    let spec = ctx.spec;
    let (n, tag) = (spec.n, spec.field);
    let tol = spec.tolerances.quad_low_dim;
    if tag == FieldTag::Quaternion {
        return vec![Record::rel("scalar integral over H", anchor::SCALAR_LEMMA, f64::NAN, f64::NAN, tol)
            .with_details("no oracle: the integral is four-dimensional")
            .as_warning()];
    }
    let checks = (0..TRIALS)
        .map(|trial| -> super::Check<'_> {
            Box::new(move || {
                let mut rng = stream_rng(spec.seed, stream_base(10) + trial as u64);
                let z = UnitriangularMatrix::random_gaussian(n, tag, &mut rng);
                let p = rng.random_range(1..n);
                let lambda = ctx.kappa_half() + 0.2 + 0.25 * trial as f64;
                let mut out = Vec::new();
                match z.quad_coeffs(p) {
                    Ok(qc) => {
                        let integrand = IntegrandSpec::ScalarQuadratic {
                            tag,
                            a: qc.a,
                            b: qc.b.components().to_vec(),
                            c: qc.c,
                            lambda,
                        };
                        out.push(oracle_record(
                            &format!("scalar integral, trial {trial}, p={p}, lambda={lambda}"),
                            anchor::SCALAR_LEMMA,
                            &integrand,
                            tol,
                        ));
                    }
                    Err(e) => out.push(Record::failed(
                        format!("scalar integral, trial {trial}"),
                        anchor::SCALAR_LEMMA,
                        crate::report::MetricKind::RelErr,
                        tol,
                        e.to_string(),
                    )),
                }
                let entries: Vec<f64> = z.entries().iter().flat_map(|e| e.components().to_vec()).collect();
                let step = IntegrandSpec::ColumnStep { tag, n, p, entries, lambda };
                out.push(oracle_record(
                    &format!("column step in s_pn, trial {trial}, p={p}, lambda={lambda}"),
                    anchor::SCALAR_LEMMA,
                    &step,
                    tol,
                ));
                out
            })
        })
        .collect();
    ctx.run(checks)
}
