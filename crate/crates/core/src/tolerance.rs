//! Numerical tolerances shared by the property checks and the verification harness.
//!
//! Every threshold a check compares against lives here so that a profile
//! switch (`default` / `strict`) changes them all at once.

use serde::{Deserialize, Serialize};

/// Tolerance configuration record.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Tolerances {
    /// Scalar algebra identities (norm multiplicativity, associativity).
    pub scalar: f64,
    /// Lemma coefficient identities and the polynomial-fit cross-check.
    pub coeffs: f64,
    /// Dieudonné determinant identities.
    pub qdet: f64,
    /// Agreement of `qdet` with `|det|` over R and C.
    pub qdet_vs_det: f64,
    /// Desnanot–Jacobi identity.
    pub desnanot_jacobi: f64,
    /// Quadrature versus closed form, one or two real dimensions.
    pub quad_low_dim: f64,
    /// Quadrature versus closed form, three or four real dimensions.
    pub quad_high_dim: f64,
    /// Stored versus recomputed sample log-density.
    pub log_density: f64,
    /// |z| bound for Monte-Carlo versus closed form.
    pub z_score: f64,
    /// |z| bound for the near-boundary Monte-Carlo check.
    pub z_score_boundary: f64,
    /// Joint-sigma bound for agreement of two importance-sampling proposals.
    pub z_score_joint: f64,
    /// Significance level for distributional tests.
    pub significance: f64,
    /// Maximum allowed failures among the repeated-seed distributional tests.
    pub max_seed_failures: usize,
    /// Number of seeds for the repeated distributional tests.
    pub seed_repetitions: usize,
    /// Condition estimate above which factorizations log a warning.
    pub condition_warning: f64,
}

impl Tolerances {
    pub const DEFAULT: Tolerances = Tolerances {
        scalar: 1e-12,
        coeffs: 1e-9,
        qdet: 1e-8,
        qdet_vs_det: 1e-10,
        desnanot_jacobi: 1e-9,
        quad_low_dim: 1e-6,
        quad_high_dim: 1e-5,
        log_density: 1e-10,
        z_score: 4.0,
        z_score_boundary: 6.0,
        z_score_joint: 5.0,
        significance: 0.01,
        max_seed_failures: 2,
        seed_repetitions: 20,
        condition_warning: 1e12,
    };

    /// Tighter numerical bounds; the statistical thresholds are unchanged.
    pub const STRICT: Tolerances = Tolerances {
        scalar: 1e-13,
        coeffs: 1e-10,
        qdet: 1e-10,
        qdet_vs_det: 1e-12,
        desnanot_jacobi: 1e-10,
        quad_low_dim: 1e-8,
        quad_high_dim: 1e-6,
        ..Tolerances::DEFAULT
    };
}

impl Default for Tolerances {
    fn default() -> Self {
        Tolerances::DEFAULT
    }
}

/// `|observed - expected| / |expected|`.
pub fn rel_err(observed: f64, expected: f64) -> f64 {
    let scale = expected.abs().max(f64::MIN_POSITIVE);
    (observed - expected).abs() / scale
}
