//! The order-two integral just inside and just outside `lambda = kappa/2`.

use flagbeta::{ExponentSet, FieldTag};

use super::main_integral::mc_records;
use super::{divergence_record, oracle_record, Check, Ctx};
use crate::oracle::IntegrandSpec;
use crate::report::{anchor, MetricKind, Record};

/// Distance from the threshold on either side.
pub const OFFSET: f64 = 0.05;

pub fn run(ctx: &Ctx<'_>) -> Vec<Record> {
    let spec = ctx.spec;
    let tol = &spec.tolerances;
    let mut checks: Vec<Check<'_>> = Vec::new();
    for tag in FieldTag::ALL {
        let half = tag.kappa_f64() / 2.0;
        let inside = half + OFFSET;
        let outside = half - OFFSET;
        checks.push(Box::new(move || {
            let integrand = IntegrandSpec::FlagOrderTwoRadial { tag, lambda: inside };
            vec![oracle_record(
                &format!("quadrature at lambda = kappa/2 + {OFFSET} over {}", tag.name()),
                anchor::CONVERGENCE,
                &integrand,
                tol.quad_low_dim,
            )]
        }));
        checks.push(Box::new(move || {
            let name = format!("Monte Carlo at lambda = kappa/2 + {OFFSET} over {}", tag.name());
            match ExponentSet::from_real(2, &[inside]) {
                Ok(l) => mc_records(&name, anchor::CONVERGENCE, &l, tag, spec.samples, spec.seed, tol.z_score_boundary),
                Err(e) => {
                    vec![Record::failed(name, anchor::CONVERGENCE, MetricKind::Z, tol.z_score_boundary, e.to_string())]
                }
            }
        }));
        checks.push(Box::new(move || {
            let integrand = IntegrandSpec::FlagOrderTwoRadial { tag, lambda: outside };
            let mut r = divergence_record(
                &format!("divergence at lambda = kappa/2 - {OFFSET} over {}", tag.name()),
                anchor::CONVERGENCE,
                &integrand,
            );
            if outside > 0.5 {
                r.details = format!("{}; a threshold of 1/2 would admit lambda = {outside}", r.details);
            }
            vec![r]
        }));
        if tag == FieldTag::Real {
            checks.push(Box::new(move || {
                let integrand = IntegrandSpec::FlagOrderTwo { tag, lambda: outside };
                vec![divergence_record(
                    &format!("divergence at lambda = kappa/2 - {OFFSET} over {}, direct integrand", tag.name()),
                    anchor::CONVERGENCE,
                    &integrand,
                )]
            }));
        }
    }
    ctx.run(checks)
}
