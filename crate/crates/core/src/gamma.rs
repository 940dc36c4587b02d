//! Complex log-Gamma on the principal branch.

use num_complex::Complex64;

use crate::error::{Error, Result};

const HALF_LN_TWO_PI: f64 = 0.918_938_533_204_672_8;

/// `B_2k / (2k (2k - 1))` for k = 1..10.
const STIRLING: [f64; 10] = [
    1.0 / 12.0,
    -1.0 / 360.0,
    1.0 / 1260.0,
    -1.0 / 1680.0,
    1.0 / 1188.0,
    -691.0 / 360_360.0,
    1.0 / 156.0,
    -3617.0 / 122_400.0,
    43_867.0 / 244_188.0,
    -174_611.0 / 125_400.0,
];

const SHIFT_TARGET: f64 = 15.0;

/// `ln Γ(z)`, analytic off the non-positive real axis and real for real `z > 0`.
///
/// Arguments are shifted right with `ln Γ(z) = ln Γ(z + m) - Σ ln(z + k)` until
/// `Re z >= 15`, where the Stirling series is summed.
pub fn log_gamma(z: Complex64) -> Result<Complex64> {
    if !z.re.is_finite() || !z.im.is_finite() {
        return Err(Error::InvalidParameter(format!("log_gamma of non-finite argument {z}")));
    }
    if z.im == 0.0 && z.re <= 0.0 && z.re.fract() == 0.0 {
        return Err(Error::Pole(format!("Gamma has a pole at {}", z.re)));
    }
    let mut shift = Complex64::new(0.0, 0.0);
    let mut w = z;
    while w.re < SHIFT_TARGET {
        shift += w.ln();
        w += 1.0;
    }
    Ok(stirling(w) - shift)
}

/// Real convenience wrapper; errors at poles and for negative arguments where
/// `Γ` changes sign (use [`log_gamma`] there).
pub fn ln_gamma_real(x: f64) -> Result<f64> {
    if x <= 0.0 {
        return Err(Error::InvalidParameter(format!("ln_gamma_real needs x > 0, got {x}")));
    }
    Ok(log_gamma(Complex64::new(x, 0.0))?.re)
}

fn stirling(z: Complex64) -> Complex64 {
    let inv = z.inv();
    let inv2 = inv * inv;
    let mut series = Complex64::new(0.0, 0.0);
    let mut pow = inv;
    for c in STIRLING {
        series += pow * c;
        pow *= inv2;
    }
    (z - 0.5) * z.ln() - z + HALF_LN_TWO_PI + series
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use std::f64::consts::PI;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn known_values() {
        assert!(log_gamma(c(1.0, 0.0)).unwrap().norm() < 1e-14);
        assert!(log_gamma(c(2.0, 0.0)).unwrap().norm() < 1e-14);
        let half = log_gamma(c(0.5, 0.0)).unwrap();
        assert!((half.re - 0.5 * PI.ln()).abs() < 1e-14 && half.im == 0.0);
        // ln Γ(11) = ln 10!
        assert!((log_gamma(c(11.0, 0.0)).unwrap().re - 3_628_800f64.ln()).abs() < 1e-12);
        // |Γ(i)|^2 = π / sinh π
        let gi = log_gamma(c(0.0, 1.0)).unwrap();
        assert!((2.0 * gi.re - (PI / PI.sinh()).ln()).abs() < 1e-13);
    }

    #[test]
    fn poles() {
        for k in [0.0, -1.0, -7.0] {
            assert!(matches!(log_gamma(c(k, 0.0)), Err(Error::Pole(_))));
        }
        assert!(log_gamma(c(-1.0, 1e-9)).is_ok());
    }

    #[test]
    fn agrees_with_statrs_on_reals() {
        let mut x = 0.5;
        while x <= 50.0 {
            let ours = ln_gamma_real(x).unwrap();
            let theirs = statrs::function::gamma::ln_gamma(x);
            assert!((ours - theirs).abs() < 1e-12, "x={x}: {ours} vs {theirs}");
            x += 0.37;
        }
    }

    #[test]
    fn negative_reals_off_poles() {
        // Γ(-1/2) = -2√π
        let v = log_gamma(c(-0.5, 0.0)).unwrap();
        assert!((v.re - (2.0 * PI.sqrt()).ln()).abs() < 1e-13);
        assert!((v.exp().re + 2.0 * PI.sqrt()).abs() < 1e-12);
    }

    proptest! {
        #[test]
        fn recurrence(re in 0.5f64..50.0, im in -30.0f64..30.0) {
            let z = c(re, im);
            let lhs = log_gamma(z + 1.0).unwrap() - log_gamma(z).unwrap();
            prop_assert!((lhs - z.ln()).norm() < 1e-11);
        }

        #[test]
        fn reflection(re in 0.05f64..0.95, im in -3.0f64..3.0) {
            let z = c(re, im);
            let lhs = (log_gamma(z).unwrap() + log_gamma(1.0 - z).unwrap()).exp();
            let rhs = PI / (z * PI).sin();
            prop_assert!((lhs - rhs).norm() <= 1e-11 * rhs.norm());
        }

        #[test]
        fn conjugate_symmetry(re in 0.5f64..20.0, im in -20.0f64..20.0) {
            let z = c(re, im);
            prop_assert!((log_gamma(z.conj()).unwrap() - log_gamma(z).unwrap().conj()).norm() < 1e-12);
        }
    }
}
