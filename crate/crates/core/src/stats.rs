//! Streaming moments and the distribution tests used by the checks.

use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

/// Count, mean and sum of squared deviations (Welford), mergeable with Chan's update.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct RunningMoments {
    pub count: u64,
    pub mean: f64,
    pub m2: f64,
}

impl RunningMoments {
    pub fn push(&mut self, x: f64) {
        self.count += 1;
        let delta = x - self.mean;
        self.mean += delta / self.count as f64;
        self.m2 += delta * (x - self.mean);
    }

    pub fn merge(&mut self, other: &RunningMoments) {
        if other.count == 0 {
            return;
        }
        if self.count == 0 {
            *self = *other;
            return;
        }
        let n = (self.count + other.count) as f64;
        let (na, nb) = (self.count as f64, other.count as f64);
        let delta = other.mean - self.mean;
        self.mean += delta * nb / n;
        self.m2 += other.m2 + delta * delta * na * nb / n;
        self.count += other.count;
    }

    /// Unbiased sample variance.
    pub fn variance(&self) -> f64 {
        if self.count < 2 {
            f64::NAN
        } else {
            self.m2 / (self.count - 1) as f64
        }
    }

    /// Standard error of the mean.
    pub fn stderr(&self) -> f64 {
        (self.variance() / self.count as f64).sqrt()
    }
}

impl FromIterator<f64> for RunningMoments {
    fn from_iter<I: IntoIterator<Item = f64>>(iter: I) -> Self {
        let mut m = RunningMoments::default();
        for x in iter {
            m.push(x);
        }
        m
    }
}

/// `P(K > x)` for the Kolmogorov distribution.
pub fn kolmogorov_survival(x: f64) -> f64 {
    if x <= 0.0 {
        return 1.0;
    }
    if x < 1.18 {
        // theta-function form converges fast for small x
        let y = -std::f64::consts::PI.powi(2) / (8.0 * x * x);
        let s: f64 = (1..=7).map(|k| ((2 * k - 1) as f64).powi(2) * y).map(f64::exp).sum();
        return (1.0 - (2.0 * std::f64::consts::PI).sqrt() / x * s).clamp(0.0, 1.0);
    }
    let s: f64 = (1..=100)
        .map(|k| {
            let sign = if k % 2 == 1 { 1.0 } else { -1.0 };
            sign * (-2.0 * (k * k) as f64 * x * x).exp()
        })
        .sum();
    (2.0 * s).clamp(0.0, 1.0)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TestOutcome {
    pub statistic: f64,
    pub p_value: f64,
}

/// One-sample Kolmogorov–Smirnov test against a continuous CDF.
pub fn ks_test(sample: &[f64], cdf: impl Fn(f64) -> f64) -> TestOutcome {
    let mut xs = sample.to_vec();
    xs.sort_by(f64::total_cmp);
    let n = xs.len() as f64;
    let mut d: f64 = 0.0;
    for (i, &x) in xs.iter().enumerate() {
        let f = cdf(x);
        d = d.max(f - i as f64 / n).max((i + 1) as f64 / n - f);
    }
    let sqrt_n = n.sqrt();
    let p_value = kolmogorov_survival((sqrt_n + 0.12 + 0.11 / sqrt_n) * d);
    TestOutcome { statistic: d, p_value }
}

/// Two-sample energy test with a permutation p-value `(1 + #{E_perm >= E}) / (B + 1)`.
pub fn energy_test<R: Rng + ?Sized>(x: &[Vec<f64>], y: &[Vec<f64>], permutations: usize, rng: &mut R) -> TestOutcome {
    let pooled: Vec<&Vec<f64>> = x.iter().chain(y).collect();
    let total = pooled.len();
    let mut dist = vec![0.0; total * total];
    for i in 0..total {
        for j in i + 1..total {
            let d = euclid(pooled[i], pooled[j]);
            dist[i * total + j] = d;
            dist[j * total + i] = d;
        }
    }
    let row_sums: Vec<f64> = dist.chunks(total).map(|r| r.iter().sum()).collect();
    let grand: f64 = row_sums.iter().sum();
    let (nx, ny) = (x.len(), y.len());

    let statistic_for = |mask: &[f64]| -> f64 {
        let mut sxx = 0.0;
        let mut syy = 0.0;
        for i in 0..total {
            let row = &dist[i * total..(i + 1) * total];
            let in_x: f64 = row.iter().zip(mask).map(|(d, m)| d * m).sum();
            if mask[i] == 1.0 {
                sxx += in_x;
            } else {
                syy += row_sums[i] - in_x;
            }
        }
        let sxy = (grand - sxx - syy) / 2.0;
        let (a, b) = (nx as f64, ny as f64);
        a * b / (a + b) * (2.0 * sxy / (a * b) - sxx / (a * a) - syy / (b * b))
    };

    let mut mask: Vec<f64> = (0..total).map(|i| if i < nx { 1.0 } else { 0.0 }).collect();
    let observed = statistic_for(&mask);
    let mut exceed = 0usize;
    for _ in 0..permutations {
        mask.shuffle(rng);
        if statistic_for(&mask) >= observed {
            exceed += 1;
        }
    }
    TestOutcome { statistic: observed, p_value: (1 + exceed) as f64 / (permutations + 1) as f64 }
}

fn euclid(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use rand_distr::{Distribution, StandardNormal};

    #[test]
    fn moments_merge_matches_single_pass() {
        let xs: Vec<f64> = (0..1000).map(|i| ((i * 37) % 101) as f64 * 0.3 - 4.0).collect();
        let all: RunningMoments = xs.iter().copied().collect();
        let mut merged: RunningMoments = xs[..333].iter().copied().collect();
        merged.merge(&xs[333..].iter().copied().collect());
        assert_eq!(all.count, merged.count);
        assert!((all.mean - merged.mean).abs() < 1e-12);
        assert!((all.variance() - merged.variance()).abs() < 1e-10);
    }

    #[test]
    fn kolmogorov_branches_agree() {
        for x in [1.1, 1.15, 1.2, 1.25] {
            let s: f64 =
                (1..=100).map(|k| if k % 2 == 1 { 1.0 } else { -1.0 } * (-2.0 * (k * k) as f64 * x * x).exp()).sum();
            assert!((kolmogorov_survival(x) - 2.0 * s).abs() < 1e-12);
        }
        // tabulated quantile: P(K > 1.358) ≈ 0.05
        assert!((kolmogorov_survival(1.358) - 0.05).abs() < 5e-4);
    }

    #[test]
    fn ks_accepts_and_rejects() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let u: Vec<f64> = (0..5000).map(|_| rng.random::<f64>()).collect();
        assert!(ks_test(&u, |x| x.clamp(0.0, 1.0)).p_value > 0.01);
        let sq: Vec<f64> = u.iter().map(|x| x * x).collect();
        assert!(ks_test(&sq, |x| x.clamp(0.0, 1.0)).p_value < 1e-6);
    }

    #[test]
    fn energy_detects_shift_only() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let draw = |shift: f64, rng: &mut ChaCha8Rng| -> Vec<Vec<f64>> {
            (0..200)
                .map(|_| {
                    let a: f64 = StandardNormal.sample(rng);
                    let b: f64 = StandardNormal.sample(rng);
                    vec![a + shift, b]
                })
                .collect()
        };
        let x = draw(0.0, &mut rng);
        let y = draw(0.0, &mut rng);
        let z = draw(0.6, &mut rng);
        assert!(energy_test(&x, &y, 199, &mut rng).p_value > 0.01);
        assert!(energy_test(&x, &z, 199, &mut rng).p_value <= 0.01);
    }
}
