//! Double-exponential quadrature on the real line and its pieces.
//!
//! Each real coordinate is mapped by `x = tan(theta)` with
//! `theta = (pi/2) tanh((pi/2) sinh t)`, and the trapezoid rule in `t` is
//! refined by halving the step until two successive levels agree. Half-lines
//! and finite intervals use the matching one-sided maps, which lets callers
//! split the line at known ridges of the integrand.
//!
//! Nested integration passes [`Estimate`] values out of the integrand so that
//! inner errors accumulate into the outer error.

use std::f64::consts::PI;

use thiserror::Error;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Estimate {
    pub value: f64,
    pub error: f64,
}

impl Estimate {
    pub fn exact(value: f64) -> Self {
        Estimate { value, error: 0.0 }
    }

    pub fn rel_error(&self) -> f64 {
        self.error / self.value.abs().max(f64::MIN_POSITIVE)
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum QuadError {
    #[error("integral diverges: integrand does not decay by |x| = {at:.3e}")]
    Divergent { at: f64 },
    #[error("no convergence after {levels} refinements (estimate {value:e}, error {error:.3e})")]
    NonConvergence { levels: u32, value: f64, error: f64 },
    #[error("integrand is not finite at x = {x:e}")]
    NonFinite { x: f64 },
    #[error("{dims} real dimensions requested; at most {max} are supported")]
    TooManyDimensions { dims: usize, max: usize },
}

impl QuadError {
    pub fn is_divergence(&self) -> bool {
        matches!(self, QuadError::Divergent { .. })
    }
}

/// For inner integrals of a nested rule: an unconverged inner value is passed
/// on with its error estimate, which the outer rule accumulates.
pub fn nested(r: Result<Estimate, QuadError>) -> Result<Estimate, QuadError> {
    match r {
        Err(QuadError::NonConvergence { value, error, .. }) if value.is_finite() && error.is_finite() => {
            Ok(Estimate { value, error })
        }
        other => other,
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadOptions {
    /// Relative agreement required between successive levels.
    pub tol: f64,
    /// Levels to run before convergence may be declared.
    pub min_level: u32,
    /// Finest step is `2^-max_level`.
    pub max_level: u32,
    /// Tail walking stops once terms fall below `tail_eps` times the running total.
    pub tail_eps: f64,
    /// Reaching `|x| > x_max` with terms above `trunc_eps` times the running
    /// total signals divergence.
    pub x_max: f64,
    pub trunc_eps: f64,
    /// Absolute agreement that also counts as converged. Inner rules of a
    /// nested integral use it to stop early where they contribute nothing;
    /// their error still reaches the outer estimate.
    pub abs_tol: f64,
}

impl QuadOptions {
    pub fn with_tol(tol: f64) -> Self {
        QuadOptions { tol, ..QuadOptions::default() }
    }

    pub fn tighter(&self, factor: f64) -> Self {
        QuadOptions { tol: self.tol / factor, ..*self }
    }

    /// Options for an inner rule whose values are `O(1)` at most.
    pub fn inner(&self, factor: f64) -> Self {
        QuadOptions { tol: self.tol / factor, abs_tol: self.tol * 1e-25, ..*self }
    }
}

impl Default for QuadOptions {
    fn default() -> Self {
        QuadOptions {
            tol: 1e-9,
            min_level: 3,
            max_level: 9,
            tail_eps: 1e-16,
            x_max: 1e150,
            trunc_eps: 1e-8,
            abs_tol: 0.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
enum Piece {
    /// `(-inf, inf)`, centered at the shift, with a length scale.
    Line(f64, f64),
    /// `(a, inf)`.
    Above(f64, f64),
    /// `(-inf, b)`.
    Below(f64, f64),
    Interval(f64, f64),
}

struct Node {
    x: f64,
    ln_w: f64,
    /// Past the representable end of an infinite side.
    overflow: bool,
}

/// `ln sin(d)` for `0 < d <= pi/2`, accurate for tiny `d`.
fn ln_sin(d: f64, ln_d: f64) -> f64 {
    if d < 1e-4 {
        ln_d + (-d * d / 6.0).ln_1p()
    } else {
        d.sin().ln()
    }
}

fn ln_cosh(t: f64) -> f64 {
    let a = t.abs();
    a + (-2.0 * a).exp().ln_1p() - std::f64::consts::LN_2
}

impl Piece {
    fn node(&self, t: f64) -> Node {
        let s = PI / 2.0 * t.sinh();
        let two_s = 2.0 * s.abs();
        let e = (-two_s).exp();
        let ln_1pe = e.ln_1p();
        let ln_ch = ln_cosh(t);
        match *self {
            Piece::Line(c, sigma) => {
                // distance of theta from the nearer end
                let d = PI * e / (1.0 + e);
                let ln_d = PI.ln() - two_s - ln_1pe;
                let ln_w = 2.0 * PI.ln() + ln_ch - two_s - 2.0 * ln_1pe - 2.0 * ln_sin(d, ln_d);
                let ln_w = ln_w + sigma.ln();
                let off = if d > 0.0 { sigma * d.cos() / d.sin() } else { f64::INFINITY };
                let x = c + off.copysign(t);
                Node { x, ln_w, overflow: !x.is_finite() }
            }
            Piece::Above(a, sigma) | Piece::Below(a, sigma) => {
                let theta_or_d = PI / 2.0 * e / (1.0 + e);
                let ln_td = (PI / 2.0).ln() - two_s - ln_1pe;
                let (off, ln_cos) = if t >= 0.0 {
                    let off = if theta_or_d > 0.0 { theta_or_d.cos() / theta_or_d.sin() } else { f64::INFINITY };
                    (off, ln_sin(theta_or_d, ln_td))
                } else {
                    (theta_or_d.tan(), theta_or_d.cos().ln())
                };
                let ln_w = (PI * PI / 2.0).ln() + ln_ch - two_s - 2.0 * ln_1pe - 2.0 * ln_cos + sigma.ln();
                let off = sigma * off;
                let x = if matches!(self, Piece::Above(..)) { a + off } else { a - off };
                Node { x, ln_w, overflow: !x.is_finite() }
            }
            Piece::Interval(a, b) => {
                let hw = (b - a) / 2.0;
                let off = hw * 2.0 * e / (1.0 + e);
                let x = if t >= 0.0 { b - off } else { a + off };
                let ln_w = hw.ln() + (2.0 * PI).ln() + ln_ch - two_s - 2.0 * ln_1pe;
                Node { x, ln_w, overflow: false }
            }
        }
    }

    fn has_infinite_end(&self, t: f64) -> bool {
        match self {
            Piece::Line(..) => true,
            Piece::Above(..) | Piece::Below(..) => t > 0.0,
            Piece::Interval(..) => false,
        }
    }

    fn at_finite_end(&self, x: f64, t: f64) -> bool {
        match *self {
            Piece::Line(..) => false,
            Piece::Above(a, _) | Piece::Below(a, _) => t < 0.0 && x == a,
            Piece::Interval(a, b) => x == a || x == b,
        }
    }
}

/// Term `f(x) w` and its error `|w| err(x)`.
type Term = (f64, f64);

fn pieces_for(breaks: &[f64], scale: f64) -> Vec<Piece> {
    let mut b: Vec<f64> = breaks.iter().copied().filter(|x| x.is_finite()).collect();
    b.sort_by(f64::total_cmp);
    b.dedup_by(|x, y| (*x - *y).abs() <= 1e-12 * x.abs().max(y.abs()).max(1.0));
    if b.is_empty() {
        return vec![Piece::Line(0.0, scale)];
    }
    let mut out = vec![Piece::Below(b[0], scale)];
    for w in b.windows(2) {
        out.push(Piece::Interval(w[0], w[1]));
    }
    out.push(Piece::Above(b[b.len() - 1], scale));
    out
}

fn integrate_pieces(
    pieces: &[Piece],
    eval: &mut dyn FnMut(f64, f64) -> Result<Term, QuadError>,
    opts: &QuadOptions,
) -> Result<Estimate, QuadError> {
    let mut raw = 0.0;
    let mut raw_err = 0.0;
    // level 0 walks every direction to its natural end and fixes how far
    // later levels need to go
    let mut coarse: Vec<Vec<(f64, f64)>> = Vec::with_capacity(2 * pieces.len());
    for piece in pieces {
        let n = piece.node(0.0);
        let (v, e) = eval(n.x, n.ln_w)?;
        raw += v;
        raw_err += e;
        for dir in [1.0, -1.0] {
            let mut terms = vec![(0.0, v.abs())];
            for j in 1.. {
                let t = dir * j as f64;
                let n = piece.node(t);
                if piece.at_finite_end(n.x, t) || n.ln_w < -745.0 {
                    break;
                }
                if (n.overflow || n.x.abs() > opts.x_max) && piece.has_infinite_end(t) {
                    break;
                }
                let (v, e) = eval(n.x, n.ln_w)?;
                raw += v;
                raw_err += e;
                terms.push((t.abs(), v.abs()));
            }
            coarse.push(terms);
        }
    }
    let peak = coarse.iter().flatten().map(|&(_, v)| v).fold(0.0, f64::max);
    let extents: Vec<f64> = coarse
        .iter()
        .map(|terms| {
            let last = terms.iter().rev().find(|&&(_, v)| v > opts.tail_eps * peak).map_or(0.0, |&(t, _)| t);
            last + 1.0
        })
        .collect();

    let mut prev = raw;
    let mut last = Estimate { value: raw, error: f64::INFINITY };
    for level in 1..=opts.max_level {
        let h = (-(level as f64)).exp2();
        for (k, piece) in pieces.iter().enumerate() {
            for (d, dir) in [1.0, -1.0].into_iter().enumerate() {
                let extent = extents[2 * k + d];
                let mut last_term = 0.0;
                let mut j = 1i64;
                loop {
                    let t = dir * j as f64 * h;
                    if t.abs() > extent {
                        break;
                    }
                    let n = piece.node(t);
                    if piece.at_finite_end(n.x, t) || n.ln_w < -745.0 {
                        break;
                    }
                    if (n.overflow || n.x.abs() > opts.x_max) && piece.has_infinite_end(t) {
                        if level >= opts.min_level && last_term > opts.trunc_eps * prev.abs() {
                            return Err(QuadError::Divergent { at: n.x.abs().min(f64::MAX) });
                        }
                        break;
                    }
                    let (v, e) = eval(n.x, n.ln_w)?;
                    raw += v;
                    raw_err += e;
                    last_term = v.abs();
                    j += 2;
                }
            }
        }
        let total = raw * h;
        let diff = (total - prev).abs();
        last = Estimate { value: total, error: diff + raw_err * h };
        if level >= opts.min_level && diff <= (opts.tol * total.abs()).max(opts.abs_tol) {
            return Ok(last);
        }
        prev = total;
    }
    Err(QuadError::NonConvergence { levels: opts.max_level, value: last.value, error: last.error })
}

/// `∫_R f`, with the line split at `breaks` (pass `&[]` for none).
pub fn integrate_line<F>(f: F, breaks: &[f64], opts: &QuadOptions) -> Result<Estimate, QuadError>
where
    F: FnMut(f64) -> Result<Estimate, QuadError>,
{
    integrate_line_scaled(f, breaks, 1.0, opts)
}

/// As [`integrate_line`], with the infinite pieces stretched by `scale`, the
/// width beyond which the integrand starts to decay.
pub fn integrate_line_scaled<F>(mut f: F, breaks: &[f64], scale: f64, opts: &QuadOptions) -> Result<Estimate, QuadError>
where
    F: FnMut(f64) -> Result<Estimate, QuadError>,
{
    let mut eval = |x: f64, ln_w: f64| -> Result<Term, QuadError> {
        let e = f(x)?;
        if !e.value.is_finite() {
            return Err(QuadError::NonFinite { x });
        }
        let w = ln_w.exp();
        Ok((e.value * w, e.error.abs() * w))
    };
    integrate_pieces(&pieces_for(breaks, scale), &mut eval, opts)
}

/// `∫_a^inf f`.
pub fn integrate_above<F>(mut f: F, a: f64, opts: &QuadOptions) -> Result<Estimate, QuadError>
where
    F: FnMut(f64) -> Result<Estimate, QuadError>,
{
    let mut eval = |x: f64, ln_w: f64| -> Result<Term, QuadError> {
        let e = f(x)?;
        if !e.value.is_finite() {
            return Err(QuadError::NonFinite { x });
        }
        let w = ln_w.exp();
        Ok((e.value * w, e.error.abs() * w))
    };
    integrate_pieces(&[Piece::Above(a, 1.0)], &mut eval, opts)
}

/// `∫_a^b f` by tanh-sinh.
pub fn integrate_interval<F>(mut f: F, a: f64, b: f64, opts: &QuadOptions) -> Result<Estimate, QuadError>
where
    F: FnMut(f64) -> Result<Estimate, QuadError>,
{
    let mut eval = |x: f64, ln_w: f64| -> Result<Term, QuadError> {
        let e = f(x)?;
        if !e.value.is_finite() {
            return Err(QuadError::NonFinite { x });
        }
        let w = ln_w.exp();
        Ok((e.value * w, e.error.abs() * w))
    };
    integrate_pieces(&[Piece::Interval(a, b)], &mut eval, opts)
}

/// `∫_a^inf exp(ln_f(x)) dx` with the integrand supplied in log form, so
/// tails can be followed to `|x| ~ 1e300` without overflow.
pub fn integrate_above_log<F>(mut ln_f: F, a: f64, opts: &QuadOptions) -> Result<Estimate, QuadError>
where
    F: FnMut(f64) -> f64,
{
    let mut eval = |x: f64, ln_w: f64| -> Result<Term, QuadError> {
        let l = ln_f(x);
        if l.is_nan() || l == f64::INFINITY {
            return Err(QuadError::NonFinite { x });
        }
        Ok(((l + ln_w).exp(), 0.0))
    };
    integrate_pieces(&[Piece::Above(a, 1.0)], &mut eval, opts)
}

/// Checks a top-level result against its own tolerance.
pub fn require_accuracy(e: Estimate, opts: &QuadOptions, levels: u32) -> Result<Estimate, QuadError> {
    if e.error <= opts.tol * e.value.abs() * 10.0 {
        Ok(e)
    } else {
        Err(QuadError::NonConvergence { levels, value: e.value, error: e.error })
    }
}
