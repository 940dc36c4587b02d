//! Exact sampling of the column-exponent measures `Π_p s_pn^{-lambda_p} dZ`.
//!
//! Columns are drawn left to right and, within column `q`, entries top-down.
//! Given everything drawn before it, `z_pq` has density proportional to
//! `s_pq^{-Λ}` with `Λ = lambda_p + ... + lambda_{q-1} - (q-1-p) kappa/2`, and
//! `s_pq` is a positive quadratic form in `z_pq`, so the conditional law is an
//! affine image of a spherical Student-t on K.
//!
//! [`EntryExponents`] allows a separate `Λ_pq` for every entry. Its density is
//! normalized entry by entry with the scalar integral.

use rand::Rng;
use rand_distr::{Distribution, Gamma};
use serde::{Deserialize, Serialize};

use crate::closed_form::{column_measure_margin, log_total_mass};
use crate::error::{Error, Result};
use crate::flag::UnitriangularMatrix;
use crate::gamma::ln_gamma_real;
use crate::rng::map_chunks;
use crate::scalar::{FieldTag, Scalar};

/// Column-exponent measure of order `n`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MeasureSpec {
    n: usize,
    tag: FieldTag,
    lambda: Vec<f64>,
}

impl MeasureSpec {
    /// Requires every interval sum `lambda_p + ... + lambda_{q-1}` to exceed
    /// `(q-p) kappa/2`, which makes the measure and all its projections finite.
    pub fn new(n: usize, tag: FieldTag, lambda: Vec<f64>) -> Result<Self> {
        if n < 1 {
            return Err(Error::InvalidParameter("order must be positive".into()));
        }
        if lambda.len() != n - 1 {
            return Err(Error::Shape(format!("order {n} needs {} exponents, got {}", n - 1, lambda.len())));
        }
        if lambda.iter().any(|x| !x.is_finite()) {
            return Err(Error::InvalidParameter("non-finite exponent".into()));
        }
        if column_measure_margin(&lambda, tag) <= 0.0 {
            return Err(Error::Divergent(format!(
                "exponents {lambda:?} violate lambda_p + ... + lambda_(q-1) > (q-p) kappa/2 for kappa = {}",
                tag.kappa()
            )));
        }
        Ok(MeasureSpec { n, tag, lambda })
    }

    /// `lambda_p = kappa/2 + 1` for every `p`.
    pub fn default_for(n: usize, tag: FieldTag) -> Self {
        MeasureSpec::new(n, tag, vec![tag.kappa_f64() / 2.0 + 1.0; n.saturating_sub(1)]).expect("in range")
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn tag(&self) -> FieldTag {
        self.tag
    }

    pub fn lambda(&self) -> &[f64] {
        &self.lambda
    }

    /// Natural log of the total mass.
    pub fn log_total_mass(&self) -> f64 {
        log_total_mass(&self.lambda, self.tag).expect("validated at construction")
    }

    /// `Λ` for the conditional law of `z_pq`.
    pub fn effective_exponent(&self, p: usize, q: usize) -> f64 {
        assert!(p >= 1 && p < q && q <= self.n, "({p},{q}) out of range");
        self.lambda[p - 1..q - 1].iter().sum::<f64>() - (q - 1 - p) as f64 * self.tag.kappa_f64() / 2.0
    }

    /// Same exponents on the leading order-`m` block.
    pub fn prefix(&self, m: usize) -> Result<MeasureSpec> {
        if m < 1 || m > self.n {
            return Err(Error::InvalidParameter(format!("prefix order {m} of {}", self.n)));
        }
        MeasureSpec::new(m, self.tag, self.lambda[..m - 1].to_vec())
    }

    /// The conditional exponents `Λ_pq` of every entry.
    pub fn entry_exponents(&self) -> EntryExponents {
        let exps = (2..=self.n).map(|q| (1..q).map(|p| self.effective_exponent(p, q)).collect()).collect();
        EntryExponents { n: self.n, tag: self.tag, exps }
    }

    /// Unnormalized log-density `-Σ_p lambda_p ln s_pn(Z)`.
    pub fn log_density(&self, z: &UnitriangularMatrix) -> Result<f64> {
        if z.n() != self.n || z.tag() != self.tag {
            return Err(Error::Shape(format!(
                "order {} over {} does not match the measure ({} over {})",
                z.n(),
                z.tag(),
                self.n,
                self.tag
            )));
        }
        if self.n == 1 {
            return Ok(0.0);
        }
        let logs = z.log_s_column(self.n)?;
        Ok(-self.lambda.iter().zip(&logs).map(|(l, s)| l * s).sum::<f64>())
    }
}

/// Where a sample came from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SeedInfo {
    pub seed: u64,
    pub stream: u64,
    /// Global position in the emitted sequence.
    pub index: u64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FlagSample {
    pub z: UnitriangularMatrix,
    pub log_density: f64,
    pub seed_info: SeedInfo,
}

/// Draws `w` in K with density proportional to `(1 + |w|^2)^{-nu}`.
///
/// `w = g / sqrt(2 G)` with `g` standard normal in `R^kappa` and `G` Gamma with
/// shape `nu - kappa/2`; equivalently a spherical t with `2 nu - kappa` degrees
/// of freedom scaled by its square root.
pub fn student_t_sample<R: Rng + ?Sized>(nu: f64, tag: FieldTag, rng: &mut R) -> Result<Scalar> {
    let shape = nu - tag.kappa_f64() / 2.0;
    if shape.is_nan() || shape <= 0.0 {
        return Err(Error::Divergent(format!("(1+|w|^2)^(-{nu}) is not integrable over {tag}")));
    }
    let gamma = Gamma::new(shape, 1.0).map_err(|e| Error::InvalidParameter(e.to_string()))?;
    Ok(student_t_with(&gamma, tag, rng))
}

fn student_t_with<R: Rng + ?Sized>(gamma: &Gamma<f64>, tag: FieldTag, rng: &mut R) -> Scalar {
    let g = Scalar::gaussian_sample(tag, rng);
    let chi: f64 = gamma.sample(rng);
    g.scale(1.0 / (2.0 * chi).sqrt())
}

/// Draws `u = z_pq` from density proportional to `s_pq(Z)^{-nu_eff}` as a
/// function of `u`, given the columns left of `q` and the entries of column
/// `q` above row `p`.
pub fn conditional_entry_sample<R: Rng + ?Sized>(
    z: &UnitriangularMatrix,
    p: usize,
    q: usize,
    nu_eff: f64,
    rng: &mut R,
) -> Result<Scalar> {
    let w = student_t_sample(nu_eff, z.tag(), rng)?;
    let (center, width) = z.conditional_center_width(p, q)?;
    Ok(center + w.scale(width))
}

/// Draws one matrix from the normalized measure; returns it with its log-density.
pub fn sample_flag<R: Rng + ?Sized>(spec: &MeasureSpec, rng: &mut R) -> Result<(UnitriangularMatrix, f64)> {
    let z = FlagSampler::new(spec)?.draw(rng)?;
    let log_density = spec.log_density(&z)?;
    Ok((z, log_density))
}

/// `count` samples from the streams of `seed` beginning at `stream_base`.
/// Identical arguments give identical output for any worker count.
pub fn sample_flags(spec: &MeasureSpec, count: usize, seed: u64, stream_base: u64) -> Result<Vec<FlagSample>> {
    let sampler = FlagSampler::new(spec)?;
    let parts = map_chunks(count, seed, stream_base, |chunk, rng| -> Result<Vec<FlagSample>> {
        (0..chunk.len)
            .map(|i| {
                let z = sampler.draw(rng)?;
                let log_density = spec.log_density(&z)?;
                let seed_info = SeedInfo { seed, stream: chunk.stream, index: (chunk.start + i) as u64 };
                Ok(FlagSample { z, log_density, seed_info })
            })
            .collect()
    });
    let mut out = Vec::with_capacity(count);
    for part in parts {
        out.extend(part?);
    }
    Ok(out)
}

/// Measure on unitriangular matrices under which each `z_pq`, given the entries
/// drawn before it, has density proportional to `s_pq^{-Λ_pq}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EntryExponents {
    n: usize,
    tag: FieldTag,
    /// `exps[q - 2][p - 1] = Λ_pq`.
    exps: Vec<Vec<f64>>,
}

impl EntryExponents {
    /// Requires every `Λ_pq > kappa/2`.
    pub fn from_fn(n: usize, tag: FieldTag, mut f: impl FnMut(usize, usize) -> f64) -> Result<Self> {
        if n < 1 {
            return Err(Error::InvalidParameter("order must be positive".into()));
        }
        let half = tag.kappa_f64() / 2.0;
        let exps: Vec<Vec<f64>> = (2..=n).map(|q| (1..q).map(|p| f(p, q)).collect()).collect();
        for (q, col) in (2..).zip(&exps) {
            for (p, &x) in (1..).zip(col) {
                if x.is_nan() || x <= half || x.is_infinite() {
                    return Err(Error::Divergent(format!("Λ_{p}{q} = {x} needs to exceed kappa/2 = {half}")));
                }
            }
        }
        Ok(EntryExponents { n, tag, exps })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn tag(&self) -> FieldTag {
        self.tag
    }

    pub fn get(&self, p: usize, q: usize) -> f64 {
        assert!(p >= 1 && p < q && q <= self.n, "({p},{q}) out of range");
        self.exps[q - 2][p - 1]
    }

    /// `μ` with density proportional to `Π s_pq^{-μ_pq}`, as `out[q - 2][p - 1]`.
    ///
    /// The normalizer of `z_pq` is `C(Λ) a^{Λ-kappa} (s_(p-1)q s_p(q-1))^{kappa/2-Λ}`
    /// with `a = s_(p-1)(q-1)`, and `s_0q = s_pp = 1`.
    pub fn density_exponents(&self) -> Vec<Vec<f64>> {
        let kappa = self.tag.kappa_f64();
        let mut mu: Vec<Vec<f64>> = self.exps.clone();
        for q in 2..=self.n {
            for p in 1..q {
                let x = self.get(p, q);
                if p >= 2 {
                    mu[q - 3][p - 2] -= kappa - x;
                    mu[q - 2][p - 2] -= x - kappa / 2.0;
                }
                if p < q - 1 {
                    mu[q - 3][p - 1] -= x - kappa / 2.0;
                }
            }
        }
        mu
    }

    /// Sum of `ln C(Λ_pq) = (kappa/2) ln π + ln Γ(Λ_pq - kappa/2) - ln Γ(Λ_pq)`.
    pub fn log_normalizer(&self) -> f64 {
        let half = self.tag.kappa_f64() / 2.0;
        self.exps
            .iter()
            .flatten()
            .map(|&x| {
                half * std::f64::consts::PI.ln() + ln_gamma_real(x - half).expect("checked")
                    - ln_gamma_real(x).expect("checked")
            })
            .sum()
    }

    /// Normalized log-density.
    pub fn log_density(&self, z: &UnitriangularMatrix) -> Result<f64> {
        if z.n() != self.n || z.tag() != self.tag {
            return Err(Error::Shape(format!(
                "order {} over {} does not match the measure ({} over {})",
                z.n(),
                z.tag(),
                self.n,
                self.tag
            )));
        }
        let table = z.log_s_table();
        let log_s = |p: usize, q: usize| if p == 0 || p == q { 0.0 } else { table[q - 2][p - 1] };
        let mu = self.density_exponents();
        let mut acc = -self.log_normalizer();
        for q in 2..=self.n {
            for p in 1..q {
                acc -= mu[q - 2][p - 1] * log_s(p, q);
            }
        }
        Ok(acc)
    }
}

/// Sequential sampler with the per-entry Gamma laws prepared once.
pub struct FlagSampler {
    n: usize,
    tag: FieldTag,
    /// `gammas[q - 2][p - 1]` for the entry `z_pq`.
    gammas: Vec<Vec<Gamma<f64>>>,
}

impl FlagSampler {
    pub fn new(spec: &MeasureSpec) -> Result<Self> {
        FlagSampler::for_entries(&spec.entry_exponents())
    }

    pub fn for_entries(e: &EntryExponents) -> Result<Self> {
        let half = e.tag.kappa_f64() / 2.0;
        let gammas = e
            .exps
            .iter()
            .map(|col| {
                col.iter()
                    .map(|&x| Gamma::new(x - half, 1.0).map_err(|err| Error::InvalidParameter(err.to_string())))
                    .collect::<Result<Vec<_>>>()
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(FlagSampler { n: e.n, tag: e.tag, gammas })
    }

    pub fn draw<R: Rng + ?Sized>(&self, rng: &mut R) -> Result<UnitriangularMatrix> {
        let tag = self.tag;
        let mut z = UnitriangularMatrix::identity(self.n, tag);
        for q in 2..=self.n {
            for p in 1..q {
                let w = student_t_with(&self.gammas[q - 2][p - 1], tag, rng);
                let (center, width) = z.conditional_center_width(p, q)?;
                let u = center + w.scale(width);
                z.set_entry(p, q, u)?;
            }
        }
        Ok(z)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::stream_rng;

    #[test]
    fn spec_validation() {
        assert!(MeasureSpec::new(3, FieldTag::Real, vec![1.0, 1.0]).is_ok());
        assert!(matches!(MeasureSpec::new(2, FieldTag::Complex, vec![1.0]), Err(Error::Divergent(_))));
        assert!(matches!(MeasureSpec::new(3, FieldTag::Real, vec![0.4, 2.0]), Err(Error::Divergent(_))));
        assert!(matches!(MeasureSpec::new(3, FieldTag::Real, vec![1.0]), Err(Error::Shape(_))));
        let s = MeasureSpec::new(4, FieldTag::Real, vec![2.0, 1.5, 1.0]).unwrap();
        assert!((s.effective_exponent(1, 4) - (4.5 - 1.0)).abs() < 1e-15);
        assert!((s.effective_exponent(3, 4) - 1.0).abs() < 1e-15);
    }

    #[test]
    fn student_t_rejects_divergent_laws() {
        let mut rng = stream_rng(0, 0);
        assert!(matches!(student_t_sample(1.0, FieldTag::Complex, &mut rng), Err(Error::Divergent(_))));
        assert!(student_t_sample(1.01, FieldTag::Complex, &mut rng).is_ok());
    }

    #[test]
    fn cauchy_quartiles() {
        let mut rng = stream_rng(5, 0);
        let n = 200_000;
        let below_one = (0..n).filter(|_| student_t_sample(1.0, FieldTag::Real, &mut rng).unwrap().re() <= 1.0).count()
            as f64
            / n as f64;
        let sigma = (0.75f64 * 0.25 / n as f64).sqrt();
        assert!((below_one - 0.75).abs() < 4.0 * sigma);
    }

    #[test]
    fn stored_log_density_recomputes() {
        let spec = MeasureSpec::new(4, FieldTag::Quaternion, vec![3.5, 3.0, 3.2]).unwrap();
        for s in sample_flags(&spec, 200, 9, 0).unwrap() {
            let direct: f64 = (1..4).map(|p| -spec.lambda()[p - 1] * s.z.s(p, 4).unwrap().ln()).sum();
            assert!((s.log_density - direct).abs() <= 1e-10 * direct.abs().max(1.0));
        }
    }

    #[test]
    fn order_one_and_two() {
        let one = MeasureSpec::new(1, FieldTag::Real, vec![]).unwrap();
        let (z, ld) = sample_flag(&one, &mut stream_rng(0, 0)).unwrap();
        assert_eq!((z.n(), ld), (1, 0.0));
        assert_eq!(one.log_total_mass(), 0.0);
        let two = MeasureSpec::new(2, FieldTag::Real, vec![1.0]).unwrap();
        assert!((two.log_total_mass() - std::f64::consts::PI.ln()).abs() < 1e-14);
    }

    #[test]
    fn entry_density_matches_column_measure() {
        for tag in FieldTag::ALL {
            let k = tag.kappa_f64();
            let spec = MeasureSpec::new(4, tag, vec![k / 2.0 + 1.3, k / 2.0 + 0.6, k / 2.0 + 0.9]).unwrap();
            let e = spec.entry_exponents();
            let mu = e.density_exponents();
            for (q, col) in (2..).zip(&mu) {
                for (p, &m) in (1..).zip(col) {
                    let want = if q == 4 { spec.lambda()[p - 1] } else { 0.0 };
                    assert!((m - want).abs() < 1e-12, "{tag} ({p},{q}): {m}");
                }
            }
            for s in sample_flags(&spec, 50, 3, 0).unwrap() {
                let normalized = s.log_density - spec.log_total_mass();
                let entrywise = e.log_density(&s.z).unwrap();
                assert!((normalized - entrywise).abs() <= 1e-9 * normalized.abs().max(1.0), "{tag}");
            }
        }
    }

    #[test]
    fn entry_exponents_validation() {
        assert!(EntryExponents::from_fn(3, FieldTag::Real, |_, _| 0.6).is_ok());
        assert!(matches!(EntryExponents::from_fn(3, FieldTag::Complex, |_, _| 1.0), Err(Error::Divergent(_))));
        assert!(matches!(EntryExponents::from_fn(2, FieldTag::Real, |_, _| f64::NAN), Err(Error::Divergent(_))));
    }

    #[test]
    fn sample_streams_are_reproducible() {
        let spec = MeasureSpec::default_for(3, FieldTag::Complex);
        let a = sample_flags(&spec, 5000, 11, 0).unwrap();
        let b = sample_flags(&spec, 5000, 11, 0).unwrap();
        assert_eq!(a, b);
        assert_eq!(a[4096].seed_info, SeedInfo { seed: 11, stream: 1, index: 4096 });
    }
}
