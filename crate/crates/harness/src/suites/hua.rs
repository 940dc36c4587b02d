//! Hua's integral of `det(1 + T^2)^{-alpha}` over real symmetric matrices.

use flagbeta::closed_form::hua_converges;
use num_complex::Complex64;

use super::{divergence_record, oracle_record, Check, Ctx};
use crate::oracle::IntegrandSpec;
use crate::report::{anchor, Record};

pub const DEFAULT_ALPHAS: [f64; 2] = [1.5, 2.0];

pub fn run(ctx: &Ctx<'_>) -> Vec<Record> {
    let spec = ctx.spec;
    let tol = &spec.tolerances;
    let alphas: Vec<f64> = match spec.alpha {
        Some(a) => vec![a],
        None => DEFAULT_ALPHAS.to_vec(),
    };
    let mut checks: Vec<Check<'_>> = Vec::new();
    for &alpha in &alphas {
        for n in 1..=spec.n.clamp(1, 2) {
            let integrand = IntegrandSpec::Hua { n, alpha };
            let name = format!("I_{n}({alpha})");
            let converges = hua_converges(Complex64::new(alpha, 0.0), n);
            checks.push(Box::new(move || {
                let qtol = if n == 1 { tol.quad_low_dim } else { tol.quad_high_dim };
                match (converges, n) {
                    (true, _) => vec![oracle_record(&name, anchor::HUA, &integrand, qtol)],
                    (false, 1) => vec![divergence_record(&format!("{name} diverges"), anchor::HUA, &integrand)],
                    (false, _) => vec![Record::rel(&name, anchor::HUA, f64::NAN, f64::NAN, qtol)
                        .with_details("outside the convergence domain; not checked")
                        .as_warning()],
                }
            }));
        }
    }
    ctx.run(checks)
}
