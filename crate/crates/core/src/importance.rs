//! Importance-sampling estimates of `∫ Π s_pq^{-lambda_pq} dZ`.
//!
//! Samples come from an entrywise measure whose normalized density is known in
//! closed form, and each weight is `F(Z) / q(Z)`.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::closed_form::{convergence_domain, convergence_margin, nu_from_lambda, ExponentSet};
use crate::error::{Error, Result};
use crate::flag::UnitriangularMatrix;
use crate::rng::map_chunks;
use crate::sampler::{EntryExponents, FlagSampler, MeasureSpec};
use crate::scalar::FieldTag;
use crate::stats::RunningMoments;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MCEstimate {
    pub mean: f64,
    pub stderr: f64,
    pub n_samples: u64,
    pub seed: u64,
}

impl MCEstimate {
    fn from_moments(m: &RunningMoments, seed: u64) -> Self {
        MCEstimate { mean: m.mean, stderr: m.stderr(), n_samples: m.count, seed }
    }

    /// `(observed - mean) / stderr`.
    pub fn z_score(&self, expected: f64) -> f64 {
        (self.mean - expected) / self.stderr
    }
}

/// Real and imaginary parts of a complex-valued estimate.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ComplexMCEstimate {
    pub re: MCEstimate,
    pub im: MCEstimate,
}

/// How to pick the proposal measure.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum ProposalRule {
    /// `lambda'_p = Σ_{q>p} Re lambda_pq`, raised to at least `3 kappa/4`.
    RowSum,
    /// `lambda'_k = kappa/2 + fraction · min_{p<=k<q} (Re nu_pq - kappa/2)/(q-p)`:
    /// tails heavier than the integrand by a controlled amount.
    TailMatched { fraction: f64 },
    /// Entrywise `Λ_pq = kappa/2 + (1 - temper)(Re nu_pq - kappa/2)`. At
    /// `temper = 0` the weights are constant.
    Entrywise { temper: f64 },
}

pub fn proposal_for(l: &ExponentSet, tag: FieldTag, rule: ProposalRule) -> Result<EntryExponents> {
    let n = l.n();
    let kappa = tag.kappa_f64();
    let column = |lambda: Vec<f64>| Ok(MeasureSpec::new(n, tag, lambda)?.entry_exponents());
    match rule {
        ProposalRule::RowSum => {
            column((1..n).map(|p| ((p + 1)..=n).map(|q| l.get(p, q).re).sum::<f64>().max(0.75 * kappa)).collect())
        }
        ProposalRule::TailMatched { fraction } => {
            if !(fraction > 0.0 && fraction <= 1.0) {
                return Err(Error::InvalidParameter(format!("fraction {fraction} outside (0, 1]")));
            }
            let nu = nu_from_lambda(l, tag);
            column(
                (1..n)
                    .map(|k| {
                        let slack = nu
                            .iter()
                            .filter(|((p, q), _)| *p <= k && k < *q)
                            .map(|((p, q), v)| (v.re - kappa / 2.0) / (q - p) as f64)
                            .fold(f64::INFINITY, f64::min);
                        kappa / 2.0 + fraction * slack
                    })
                    .collect(),
            )
        }
        ProposalRule::Entrywise { temper } => {
            if !(0.0..1.0).contains(&temper) {
                return Err(Error::InvalidParameter(format!("temper {temper} outside [0, 1)")));
            }
            let nu = nu_from_lambda(l, tag);
            EntryExponents::from_fn(n, tag, |p, q| kappa / 2.0 + (1.0 - temper) * (nu.get(p, q).re - kappa / 2.0))
        }
    }
}

/// Errors unless `F^2 / q` is integrable, i.e. the exponents
/// `2 Re lambda_pq - mu_pq` lie in the convergence domain, where `q` is
/// proportional to `Π s_pq^{-mu_pq}`.
pub fn check_finite_variance(l: &ExponentSet, proposal: &EntryExponents) -> Result<()> {
    let n = l.n();
    let tag = proposal.tag();
    if proposal.n() != n {
        return Err(Error::Shape(format!("proposal order {} for order-{n} exponents", proposal.n())));
    }
    let mu = proposal.density_exponents();
    let second = ExponentSet::from_fn(n, |p, q| Complex64::new(2.0 * l.get(p, q).re - mu[q - 2][p - 1], 0.0))?;
    let margin = convergence_margin(&nu_from_lambda(&second, tag), tag);
    if margin > 0.0 {
        Ok(())
    } else {
        Err(Error::DegenerateProposal(format!("weights have infinite variance (second-moment margin {margin:.4})")))
    }
}

/// `-Σ lambda_pq ln s_pq(Z)`.
pub fn log_integrand(l: &ExponentSet, z: &UnitriangularMatrix) -> Complex64 {
    let table = z.log_s_table();
    l.iter().map(|((p, q), lam)| -lam * table[q - 2][p - 1]).sum()
}

/// Estimate of the integral for real exponents.
pub fn is_mc_estimate(l: &ExponentSet, proposal: &EntryExponents, samples: usize, seed: u64) -> Result<MCEstimate> {
    if !l.is_real() {
        return Err(Error::InvalidParameter("complex exponents: use is_mc_estimate_complex".into()));
    }
    Ok(is_mc_estimate_complex(l, proposal, samples, seed)?.re)
}

/// Estimate of the real and imaginary parts of the integral.
pub fn is_mc_estimate_complex(
    l: &ExponentSet,
    proposal: &EntryExponents,
    samples: usize,
    seed: u64,
) -> Result<ComplexMCEstimate> {
    let tag = proposal.tag();
    if !convergence_domain(&nu_from_lambda(l, tag), tag) {
        return Err(Error::Divergent("exponents outside the convergence domain".into()));
    }
    if samples < 2 {
        return Err(Error::InvalidParameter("need at least two samples".into()));
    }
    check_finite_variance(l, proposal)?;
    let sampler = FlagSampler::for_entries(proposal)?;
    let parts = map_chunks(samples, seed, 0, |chunk, rng| -> Result<(RunningMoments, RunningMoments, bool)> {
        let mut re = RunningMoments::default();
        let mut im = RunningMoments::default();
        let mut any_nonzero = false;
        for i in 0..chunk.len {
            let z = sampler.draw(rng)?;
            let lw = log_integrand(l, &z) - proposal.log_density(&z)?;
            let w = lw.exp();
            if !w.re.is_finite() || !w.im.is_finite() {
                return Err(Error::DegenerateProposal(format!("non-finite weight at sample {}", chunk.start + i)));
            }
            any_nonzero |= w.re != 0.0 || w.im != 0.0;
            re.push(w.re);
            im.push(w.im);
        }
        Ok((re, im, any_nonzero))
    });
    let mut re = RunningMoments::default();
    let mut im = RunningMoments::default();
    let mut any_nonzero = false;
    for part in parts {
        let (r, i, nz) = part?;
        re.merge(&r);
        im.merge(&i);
        any_nonzero |= nz;
    }
    if !any_nonzero {
        return Err(Error::DegenerateProposal("all weights are zero".into()));
    }
    Ok(ComplexMCEstimate { re: MCEstimate::from_moments(&re, seed), im: MCEstimate::from_moments(&im, seed) })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::closed_form::main_rhs;

    #[test]
    fn row_sum_rule() {
        let l = ExponentSet::from_real(3, &[2.0, 2.0, 2.0]).unwrap();
        let spec = proposal_for(&l, FieldTag::Real, ProposalRule::RowSum).unwrap();
        assert_eq!((spec.get(1, 2), spec.get(1, 3), spec.get(2, 3)), (4.0, 5.5, 2.0));
        let clipped = ExponentSet::from_real(2, &[0.3]).unwrap();
        assert!(proposal_for(&clipped, FieldTag::Real, ProposalRule::RowSum).unwrap().get(1, 2) >= 0.75);
    }

    #[test]
    fn heavy_target_is_rejected() {
        // a proposal with much lighter tails than the integrand gives unbounded weights
        let l = ExponentSet::from_real(2, &[1.0]).unwrap();
        let light = MeasureSpec::new(2, FieldTag::Real, vec![1.8]).unwrap().entry_exponents();
        assert!(matches!(check_finite_variance(&l, &light), Err(Error::DegenerateProposal(_))));
        let heavy = MeasureSpec::new(2, FieldTag::Real, vec![0.7]).unwrap().entry_exponents();
        assert!(check_finite_variance(&l, &heavy).is_ok());
    }

    #[test]
    fn order_two_real_estimate() {
        let l = ExponentSet::from_real(2, &[1.0]).unwrap();
        let prop = proposal_for(&l, FieldTag::Real, ProposalRule::TailMatched { fraction: 0.5 }).unwrap();
        let est = is_mc_estimate(&l, &prop, 50_000, 3).unwrap();
        let expected = std::f64::consts::PI;
        assert!(est.z_score(expected).abs() < 4.0, "{est:?}");
    }

    #[test]
    fn complex_exponent_estimate() {
        let l = ExponentSet::new(2, vec![Complex64::new(1.5, 0.7)]).unwrap();
        let prop = proposal_for(&l, FieldTag::Complex, ProposalRule::TailMatched { fraction: 0.5 }).unwrap();
        let est = is_mc_estimate_complex(&l, &prop, 50_000, 4).unwrap();
        let expected = main_rhs(&l, FieldTag::Complex).unwrap().exp();
        assert!(est.re.z_score(expected.re).abs() < 4.0);
        assert!(est.im.z_score(expected.im).abs() < 4.0);
        assert!(is_mc_estimate(&l, &prop, 100, 4).is_err());
    }

    #[test]
    fn untempered_entrywise_weights_are_constant() {
        let l = ExponentSet::from_real(4, &[2.5, 1.8, 3.1, 2.2, 2.9, 2.4]).unwrap();
        for tag in [FieldTag::Real, FieldTag::Complex] {
            let prop = proposal_for(&l, tag, ProposalRule::Entrywise { temper: 0.0 }).unwrap();
            let est = is_mc_estimate(&l, &prop, 2000, 1).unwrap();
            let expected = main_rhs(&l, tag).unwrap().exp().re;
            assert!((est.mean - expected).abs() <= 1e-9 * expected, "{tag}: {est:?}");
            assert!(est.stderr <= 1e-9 * expected);
        }
    }

    #[test]
    fn tempered_entrywise_estimate_in_order_five() {
        let l = ExponentSet::from_real(5, &[3.0; 10]).unwrap();
        let prop = proposal_for(&l, FieldTag::Quaternion, ProposalRule::Entrywise { temper: 0.2 }).unwrap();
        check_finite_variance(&l, &prop).unwrap();
        let est = is_mc_estimate(&l, &prop, 50_000, 8).unwrap();
        let expected = main_rhs(&l, FieldTag::Quaternion).unwrap().exp().re;
        assert!(est.z_score(expected).abs() < 4.0, "{est:?} vs {expected}");
        assert!(est.stderr < 0.05 * expected);
        assert!(proposal_for(&l, FieldTag::Real, ProposalRule::Entrywise { temper: 1.0 }).is_err());
    }

    #[test]
    fn divergent_target() {
        let l = ExponentSet::from_real(2, &[0.5]).unwrap();
        let prop = MeasureSpec::new(2, FieldTag::Real, vec![0.7]).unwrap().entry_exponents();
        assert!(matches!(is_mc_estimate(&l, &prop, 100, 0), Err(Error::Divergent(_))));
    }
}
