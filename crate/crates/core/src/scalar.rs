//! Arithmetic over the real division algebras R, C and H.
//!
//! A [`Scalar`] always carries four real slots `(re, i, j, k)`; components past
//! the field dimension are kept at zero so one code path serves every field.

use std::fmt;
use std::ops::{Add, AddAssign, Mul, Neg, Sub, SubAssign};

use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Which division algebra a value lives in.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum FieldTag {
    Real,
    Complex,
    Quaternion,
}

impl FieldTag {
    pub const ALL: [FieldTag; 3] = [FieldTag::Real, FieldTag::Complex, FieldTag::Quaternion];

    /// Real dimension of the field.
    pub const fn kappa(self) -> usize {
        match self {
            FieldTag::Real => 1,
            FieldTag::Complex => 2,
            FieldTag::Quaternion => 4,
        }
    }

    /// `kappa` as a float, for exponent arithmetic.
    pub fn kappa_f64(self) -> f64 {
        self.kappa() as f64
    }

    pub fn from_kappa(kappa: usize) -> Option<FieldTag> {
        match kappa {
            1 => Some(FieldTag::Real),
            2 => Some(FieldTag::Complex),
            4 => Some(FieldTag::Quaternion),
            _ => None,
        }
    }

    /// One-letter code used by the CLI and the file formats.
    pub fn code(self) -> &'static str {
        match self {
            FieldTag::Real => "r",
            FieldTag::Complex => "c",
            FieldTag::Quaternion => "h",
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            FieldTag::Real => "real",
            FieldTag::Complex => "complex",
            FieldTag::Quaternion => "quaternion",
        }
    }

    pub fn from_code(code: &str) -> Option<FieldTag> {
        match code {
            "r" | "R" | "real" => Some(FieldTag::Real),
            "c" | "C" | "complex" => Some(FieldTag::Complex),
            "h" | "H" | "quaternion" => Some(FieldTag::Quaternion),
            _ => None,
        }
    }
}

impl fmt::Display for FieldTag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// An element of R, C or H.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Scalar {
    c: [f64; 4],
    tag: FieldTag,
}

impl Scalar {
    pub const fn zero(tag: FieldTag) -> Self {
        Scalar { c: [0.0; 4], tag }
    }

    pub const fn one(tag: FieldTag) -> Self {
        Scalar::real(1.0, tag)
    }

    /// The real number `x` viewed inside `tag`.
    pub const fn real(x: f64, tag: FieldTag) -> Self {
        Scalar { c: [x, 0.0, 0.0, 0.0], tag }
    }

    /// Builds a scalar from its first `kappa` components.
    ///
    /// Panics if `components.len()` differs from the field dimension.
    pub fn from_components(components: &[f64], tag: FieldTag) -> Self {
        assert_eq!(components.len(), tag.kappa(), "component count must equal kappa");
        let mut c = [0.0; 4];
        c[..components.len()].copy_from_slice(components);
        Scalar { c, tag }
    }

    /// Quaternion `re + i·x + j·y + k·z`.
    pub const fn quaternion(re: f64, i: f64, j: f64, k: f64) -> Self {
        Scalar { c: [re, i, j, k], tag: FieldTag::Quaternion }
    }

    pub const fn complex(re: f64, im: f64) -> Self {
        Scalar { c: [re, im, 0.0, 0.0], tag: FieldTag::Complex }
    }

    pub fn tag(&self) -> FieldTag {
        self.tag
    }

    pub fn re(&self) -> f64 {
        self.c[0]
    }

    /// The populated components (length `kappa`).
    pub fn components(&self) -> &[f64] {
        &self.c[..self.tag.kappa()]
    }

    pub fn component(&self, idx: usize) -> f64 {
        self.c[idx]
    }

    pub fn conj(self) -> Self {
        Scalar { c: [self.c[0], -self.c[1], -self.c[2], -self.c[3]], tag: self.tag }
    }

    pub fn abs2(self) -> f64 {
        self.c.iter().map(|x| x * x).sum()
    }

    pub fn abs(self) -> f64 {
        // hypot chain avoids overflow for entries near the f64 range
        self.c.iter().fold(0.0_f64, |acc, &x| acc.hypot(x))
    }

    pub fn is_zero(self) -> bool {
        self.c.iter().all(|&x| x == 0.0)
    }

    pub fn is_finite(self) -> bool {
        self.c.iter().all(|x| x.is_finite())
    }

    pub fn scale(self, s: f64) -> Self {
        Scalar { c: self.c.map(|x| x * s), tag: self.tag }
    }

    /// Multiplicative inverse `conj(x) / |x|²`.
    pub fn inv(self) -> Result<Self> {
        let n2 = self.abs2();
        if n2 == 0.0 {
            return Err(Error::DivisionByZero);
        }
        Ok(self.conj().scale(1.0 / n2))
    }

    /// Euclidean inner product of the component vectors, `Re(x · conj(y))`.
    pub fn dot(self, other: Scalar) -> f64 {
        self.c.iter().zip(other.c.iter()).map(|(a, b)| a * b).sum()
    }

    /// Vector of independent standard normal components.
    pub fn gaussian_sample<R: Rng + ?Sized>(tag: FieldTag, rng: &mut R) -> Self {
        let mut c = [0.0; 4];
        for slot in c.iter_mut().take(tag.kappa()) {
            *slot = rng.sample(StandardNormal);
        }
        Scalar { c, tag }
    }

    fn check_tag(self, other: Scalar) {
        assert_eq!(self.tag, other.tag, "field tag mismatch in scalar arithmetic");
    }
}

impl Add for Scalar {
    type Output = Scalar;
    fn add(self, rhs: Scalar) -> Scalar {
        self.check_tag(rhs);
        let mut c = self.c;
        for (a, b) in c.iter_mut().zip(rhs.c) {
            *a += b;
        }
        Scalar { c, tag: self.tag }
    }
}

impl Sub for Scalar {
    type Output = Scalar;
    fn sub(self, rhs: Scalar) -> Scalar {
        self + (-rhs)
    }
}

impl AddAssign for Scalar {
    fn add_assign(&mut self, rhs: Scalar) {
        *self = *self + rhs;
    }
}

impl SubAssign for Scalar {
    fn sub_assign(&mut self, rhs: Scalar) {
        *self = *self - rhs;
    }
}

impl Neg for Scalar {
    type Output = Scalar;
    fn neg(self) -> Scalar {
        Scalar { c: self.c.map(|x| -x), tag: self.tag }
    }
}

impl Mul for Scalar {
    type Output = Scalar;
    /// Hamilton product; restricted to C and R it is the usual product.
    fn mul(self, rhs: Scalar) -> Scalar {
        self.check_tag(rhs);
        let [a1, b1, c1, d1] = self.c;
        let [a2, b2, c2, d2] = rhs.c;
        Scalar {
            c: [
                a1 * a2 - b1 * b2 - c1 * c2 - d1 * d2,
                a1 * b2 + b1 * a2 + c1 * d2 - d1 * c2,
                a1 * c2 - b1 * d2 + c1 * a2 + d1 * b2,
                a1 * d2 + b1 * c2 - c1 * b2 + d1 * a2,
            ],
            tag: self.tag,
        }
    }
}

impl fmt::Display for Scalar {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        const UNITS: [&str; 4] = ["", "i", "j", "k"];
        write!(f, "{}", self.c[0])?;
        for (x, unit) in self.c.iter().zip(UNITS).take(self.tag.kappa()).skip(1) {
            if *x < 0.0 {
                write!(f, "-{}{unit}", -x)?;
            } else {
                write!(f, "+{x}{unit}")?;
            }
        }
        Ok(())
    }
}
