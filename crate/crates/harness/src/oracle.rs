//! Quadrature oracles for the low-dimensional integrals.
//!
//! Each [`IntegrandSpec`] is integrated directly by nested quadrature and can
//! report the closed form it is meant to reproduce.

use std::f64::consts::PI;

use flagbeta::closed_form::{
    hua_rhs, main_rhs, pushforward_constant, scalar_integral_rhs, ColumnExponents, ExponentSet,
};
use flagbeta::gamma::ln_gamma_real;
use flagbeta::{FieldTag, QuadCoeffs, Scalar, UnitriangularMatrix};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::quadrature::{
    integrate_above_log, integrate_line, integrate_line_scaled, nested, require_accuracy, Estimate, QuadError,
    QuadOptions,
};

pub const MAX_DIMS: usize = 4;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum IntegrandSpec {
    /// `∫_K (1 + |z|^2)^{-lambda} dz`, coordinate by coordinate.
    FlagOrderTwo { tag: FieldTag, lambda: f64 },
    /// The same integral reduced to one radial coordinate.
    FlagOrderTwoRadial { tag: FieldTag, lambda: f64 },
    /// `∫_{R^3} s_12^{-l12} s_13^{-l13} s_23^{-l23}` over real unitriangular 3×3 matrices.
    FlagOrderThreeReal { lambda: [f64; 3] },
    /// `∫_{R^2} s_13^{-l1} s_23^{-l2} d(z_13, z_23)` at a fixed `z_12`, divided by `s_12^{-l1}`.
    LastColumnOrderThreeReal { lambda: [f64; 2], z12: f64 },
    /// `∫_K (a|u|^2 + 2 u·b + c)^{-lambda} du`.
    ScalarQuadratic { tag: FieldTag, a: f64, b: Vec<f64>, c: f64, lambda: f64 },
    /// `∫_K s_pn(Z)^{-lambda} dz_pn` with the other entries of `Z` fixed;
    /// `entries` are the components of `Z` in row-major order.
    ColumnStep { tag: FieldTag, n: usize, p: usize, entries: Vec<f64>, lambda: f64 },
    /// `∫_{Symm_n(R)} det(1 + T^2)^{-alpha} dT` for `n <= 2`.
    Hua { n: usize, alpha: f64 },
}

impl IntegrandSpec {
    /// Real dimension of the integration domain before any reduction.
    pub fn dims(&self) -> usize {
        match self {
            IntegrandSpec::FlagOrderTwo { tag, .. } | IntegrandSpec::FlagOrderTwoRadial { tag, .. } => tag.kappa(),
            IntegrandSpec::FlagOrderThreeReal { .. } => 3,
            IntegrandSpec::LastColumnOrderThreeReal { .. } => 2,
            IntegrandSpec::ScalarQuadratic { tag, .. } | IntegrandSpec::ColumnStep { tag, .. } => tag.kappa(),
            IntegrandSpec::Hua { n, .. } => n * (n + 1) / 2,
        }
    }

    /// Number of nested one-dimensional rules actually run.
    pub fn quadrature_dims(&self) -> usize {
        match self {
            IntegrandSpec::FlagOrderTwoRadial { .. } => 1,
            _ => self.dims(),
        }
    }

    pub fn name(&self) -> String {
        match self {
            IntegrandSpec::FlagOrderTwo { tag, lambda } => format!("flag n=2 {} lambda={lambda}", tag.code()),
            IntegrandSpec::FlagOrderTwoRadial { tag, lambda } => {
                format!("flag n=2 {} lambda={lambda} radial", tag.code())
            }
            IntegrandSpec::FlagOrderThreeReal { lambda } => {
                format!("flag n=3 r lambda=({}, {}, {})", lambda[0], lambda[1], lambda[2])
            }
            IntegrandSpec::LastColumnOrderThreeReal { lambda, z12 } => {
                format!("last column n=3 r lambda=({}, {}) z12={z12}", lambda[0], lambda[1])
            }
            IntegrandSpec::ScalarQuadratic { tag, lambda, .. } => {
                format!("scalar quadratic {} lambda={lambda}", tag.code())
            }
            IntegrandSpec::ColumnStep { tag, n, p, lambda, .. } => {
                format!("column step {} n={n} p={p} lambda={lambda}", tag.code())
            }
            IntegrandSpec::Hua { n, alpha } => format!("hua n={n} alpha={alpha}"),
        }
    }

    /// The closed form this integral should equal.
    pub fn closed_form(&self) -> flagbeta::Result<f64> {
        let re = |l: Complex64| l.exp().re;
        match self {
            IntegrandSpec::FlagOrderTwo { tag, lambda } | IntegrandSpec::FlagOrderTwoRadial { tag, lambda } => {
                Ok(re(main_rhs(&ExponentSet::from_real(2, &[*lambda])?, *tag)?))
            }
            IntegrandSpec::FlagOrderThreeReal { lambda } => {
                Ok(re(main_rhs(&ExponentSet::from_real(3, lambda)?, FieldTag::Real)?))
            }
            IntegrandSpec::LastColumnOrderThreeReal { lambda, .. } => {
                Ok(re(pushforward_constant(&ColumnExponents::from_real(lambda)?, FieldTag::Real)?))
            }
            IntegrandSpec::ScalarQuadratic { tag, a, b, c, lambda } => {
                let q = QuadCoeffs { a: *a, b: Scalar::from_components(b, *tag), c: *c };
                Ok(re(scalar_integral_rhs(&q, Complex64::new(*lambda, 0.0), *tag)?))
            }
            IntegrandSpec::ColumnStep { tag, n, p, entries, lambda } => {
                let z = column_step_matrix(*tag, *n, entries)?;
                let (p, n) = (*p, *n);
                let kappa = tag.kappa_f64();
                let ln_s = |a: usize, b: usize| z.s_ext(a, b).map(f64::ln);
                let lam = Complex64::new(*lambda, 0.0);
                let ln = kappa / 2.0 * PI.ln() + flagbeta::gamma::log_gamma(lam - kappa / 2.0)?
                    - flagbeta::gamma::log_gamma(lam)?
                    + (lam - kappa) * ln_s(p - 1, n - 1)?
                    + (kappa / 2.0 - lam) * (ln_s(p - 1, n)? + ln_s(p, n - 1)?);
                Ok(re(ln))
            }
            IntegrandSpec::Hua { n, alpha } => Ok(re(hua_rhs(Complex64::new(*alpha, 0.0), *n)?)),
        }
    }
}

/// Relative tolerance of the outermost rule.
pub fn default_tolerance(dims: usize) -> f64 {
    if dims <= 2 {
        1e-10
    } else {
        1e-7
    }
}

pub fn quadrature_oracle(spec: &IntegrandSpec) -> Result<Estimate, QuadError> {
    quadrature_oracle_with(spec, default_tolerance(spec.quadrature_dims()))
}

pub fn quadrature_oracle_with(spec: &IntegrandSpec, tol: f64) -> Result<Estimate, QuadError> {
    let dims = spec.dims();
    if dims > MAX_DIMS {
        return Err(QuadError::TooManyDimensions { dims, max: MAX_DIMS });
    }
    let top = QuadOptions::with_tol(tol);
    let (mid, inner) = (top.inner(10.0), top.inner(100.0));
    let est = match spec {
        IntegrandSpec::FlagOrderTwo { tag, lambda } => {
            let lam = *lambda;
            match tag {
                FieldTag::Real => integrate_line(|x| Ok(Estimate::exact((1.0 + x * x).powf(-lam))), &[], &top)?,
                FieldTag::Complex => integrate_line(
                    |x| {
                        let w = (1.0 + x * x).sqrt();
                        nested(integrate_line_scaled(
                            |y| Ok(Estimate::exact((1.0 + x * x + y * y).powf(-lam))),
                            &[],
                            w,
                            &mid,
                        ))
                    },
                    &[],
                    &top,
                )?,
                FieldTag::Quaternion => return Err(QuadError::TooManyDimensions { dims, max: 2 }),
            }
        }
        IntegrandSpec::FlagOrderTwoRadial { tag, lambda } => radial(*tag, *lambda, &top)?,
        IntegrandSpec::FlagOrderThreeReal { lambda } => {
            let [l12, l13, l23] = *lambda;
            integrate_line(
                |x| {
                    let s12 = 1.0 + x * x;
                    let outer = s12.powf(-l12);
                    let w_int = nested(integrate_line(
                        |w| {
                            let y_int = nested(integrate_line_scaled(
                                |y| {
                                    let s13 = s12 + y * y;
                                    let d = x * w - y;
                                    let s23 = 1.0 + w * w + d * d;
                                    Ok(Estimate::exact(s13.powf(-l13) * s23.powf(-l23)))
                                },
                                &[0.0, x * w],
                                s12.max(1.0 + w * w).sqrt(),
                                &inner,
                            ))?;
                            Ok(y_int)
                        },
                        &[0.0],
                        &mid,
                    ))?;
                    Ok(Estimate { value: outer * w_int.value, error: outer * w_int.error })
                },
                &[0.0],
                &top,
            )?
        }
        IntegrandSpec::LastColumnOrderThreeReal { lambda, z12 } => {
            let [l1, l2] = *lambda;
            let x = *z12;
            let s12 = 1.0 + x * x;
            let e = integrate_line(
                |w| {
                    nested(integrate_line_scaled(
                        |y| {
                            let d = x * w - y;
                            Ok(Estimate::exact((s12 + y * y).powf(-l1) * (1.0 + w * w + d * d).powf(-l2)))
                        },
                        &[0.0, x * w],
                        s12.max(1.0 + w * w).sqrt(),
                        &mid,
                    ))
                },
                &[0.0],
                &top,
            )?;
            let scale = s12.powf(l1);
            Estimate { value: e.value * scale, error: e.error * scale }
        }
        IntegrandSpec::ScalarQuadratic { tag, a, b, c, lambda } => {
            let (a, c) = (*a, *c);
            let disc = a * c - b.iter().map(|x| x * x).sum::<f64>();
            let center: Vec<f64> = b.iter().map(|x| -x / a).collect();
            let width = disc.max(0.0).sqrt() / a;
            over_field(*tag, &center, width, *lambda, &top, &mid, |u| {
                a * u.iter().map(|x| x * x).sum::<f64>() + 2.0 * u.iter().zip(b).map(|(x, y)| x * y).sum::<f64>() + c
            })?
        }
        IntegrandSpec::ColumnStep { tag, n, p, entries, lambda } => {
            let z = column_step_matrix(*tag, *n, entries).map_err(|_| QuadError::NonFinite { x: f64::NAN })?;
            // the peak location and width only steer the rule
            let qc = z.quad_coeffs_at(*p, *n).map_err(|_| QuadError::NonFinite { x: f64::NAN })?;
            let center: Vec<f64> = qc.center().components().to_vec();
            let width = qc.discriminant().max(0.0).sqrt() / qc.a;
            let (p, n, tag) = (*p, *n, *tag);
            over_field(tag, &center, width, *lambda, &top, &mid, |u| {
                let mut zz = z.clone();
                zz.set_entry(p, n, Scalar::from_components(u, tag)).expect("valid entry");
                zz.s(p, n).unwrap_or(f64::NAN)
            })?
        }
        IntegrandSpec::Hua { n: 1, alpha } => {
            let al = *alpha;
            integrate_line(|t| Ok(Estimate::exact((1.0 + t * t).powf(-al))), &[], &top)?
        }
        IntegrandSpec::Hua { n: 2, alpha } => {
            let al = *alpha;
            integrate_line(
                |a| {
                    nested(integrate_line(
                        |c| {
                            let ac = a * c;
                            let breaks: Vec<f64> = if ac > 1.0 {
                                let r = (ac - 1.0).sqrt();
                                vec![-r, 0.0, r]
                            } else {
                                vec![0.0]
                            };
                            nested(integrate_line_scaled(
                                |b| {
                                    let det = ac - b * b;
                                    let tr = a + c;
                                    Ok(Estimate::exact(((1.0 - det) * (1.0 - det) + tr * tr).powf(-al)))
                                },
                                &breaks,
                                (1.0 + (ac - 1.0).abs() + (a + c).abs()).sqrt(),
                                &inner,
                            ))
                        },
                        &[0.0],
                        &mid,
                    ))
                },
                &[0.0],
                &top,
            )?
        }
        IntegrandSpec::Hua { n, .. } => return Err(QuadError::TooManyDimensions { dims: n * (n + 1) / 2, max: 3 }),
    };
    require_accuracy(est, &top, top.max_level)
}

fn column_step_matrix(tag: FieldTag, n: usize, entries: &[f64]) -> flagbeta::Result<UnitriangularMatrix> {
    let scalars: Vec<Scalar> = entries.chunks(tag.kappa()).map(|c| Scalar::from_components(c, tag)).collect();
    UnitriangularMatrix::from_entries(n, tag, &scalars)
}

/// `∫_K q(u)^{-lambda} du` for `K = R` or `C`, with the peak of `q` at `center`.
fn over_field(
    tag: FieldTag,
    center: &[f64],
    width: f64,
    lambda: f64,
    top: &QuadOptions,
    mid: &QuadOptions,
    q: impl Fn(&[f64]) -> f64,
) -> Result<Estimate, QuadError> {
    let width = if width > 0.0 && width.is_finite() { width } else { 1.0 };
    match tag {
        FieldTag::Real => integrate_line_scaled(|u| Ok(Estimate::exact(q(&[u]).powf(-lambda))), center, width, top),
        FieldTag::Complex => integrate_line_scaled(
            |u0| {
                nested(integrate_line_scaled(
                    |u1| Ok(Estimate::exact(q(&[u0, u1]).powf(-lambda))),
                    &center[1..],
                    width,
                    mid,
                ))
            },
            &center[..1],
            width,
            top,
        ),
        FieldTag::Quaternion => Err(QuadError::TooManyDimensions { dims: 4, max: 2 }),
    }
}

/// `(2 pi^{kappa/2} / Γ(kappa/2)) ∫_0^inf r^{kappa-1} (1+r^2)^{-lambda} dr`, in log form.
fn radial(tag: FieldTag, lambda: f64, opts: &QuadOptions) -> Result<Estimate, QuadError> {
    let kappa = tag.kappa_f64();
    let ln_sphere = std::f64::consts::LN_2 + kappa / 2.0 * PI.ln() - ln_gamma_real(kappa / 2.0).expect("kappa/2 > 0");
    let ln_f = |r: f64| {
        if r <= 0.0 {
            return if kappa > 1.0 { f64::NEG_INFINITY } else { 0.0 };
        }
        let ln_r = r.ln();
        let ln_q = if r > 1.0 { 2.0 * ln_r + (1.0 / (r * r)).ln_1p() } else { (r * r).ln_1p() };
        (kappa - 1.0) * ln_r - lambda * ln_q
    };
    let opts = QuadOptions { x_max: 1e300, ..*opts };
    let e = integrate_above_log(ln_f, 0.0, &opts)?;
    let k = ln_sphere.exp();
    Ok(Estimate { value: k * e.value, error: k * e.error })
}
