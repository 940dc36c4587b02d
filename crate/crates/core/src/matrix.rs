//! Dense matrices over R, C and H.
//!
//! Determinants come in two flavours: [`MatrixK::det_rc`] is the ordinary
//! signed determinant (commutative fields only) and [`MatrixK::qdet`] is the
//! Dieudonné absolute determinant, `det(A_R)^(1/kappa)` of the real embedding,
//! which is defined for every field and agrees with `|det|` over R and C.

use std::fmt;
use std::ops::{Add, Mul, Sub};

use rand::Rng;

use crate::error::{Error, Result};
use crate::scalar::{FieldTag, Scalar};
use crate::tolerance::Tolerances;

/// Row-major dense matrix with entries in a single field.
#[derive(Debug, Clone, PartialEq)]
pub struct MatrixK {
    rows: usize,
    cols: usize,
    tag: FieldTag,
    data: Vec<Scalar>,
}

impl MatrixK {
    pub fn zeros(rows: usize, cols: usize, tag: FieldTag) -> Self {
        MatrixK { rows, cols, tag, data: vec![Scalar::zero(tag); rows * cols] }
    }

    pub fn identity(n: usize, tag: FieldTag) -> Self {
        MatrixK::from_fn(n, n, tag, |i, j| if i == j { Scalar::one(tag) } else { Scalar::zero(tag) })
    }

    pub fn from_fn(rows: usize, cols: usize, tag: FieldTag, mut f: impl FnMut(usize, usize) -> Scalar) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for i in 0..rows {
            for j in 0..cols {
                let x = f(i, j);
                assert_eq!(x.tag(), tag, "field tag mismatch in matrix construction");
                data.push(x);
            }
        }
        MatrixK { rows, cols, tag, data }
    }

    /// Builds a matrix from row vectors; all rows must have equal length.
    pub fn from_rows(rows: Vec<Vec<Scalar>>, tag: FieldTag) -> Result<Self> {
        let cols = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|r| r.len() != cols) {
            return Err(Error::Shape("ragged rows".into()));
        }
        if rows.iter().flatten().any(|x| x.tag() != tag) {
            return Err(Error::Shape("entries from a different field".into()));
        }
        let n = rows.len();
        Ok(MatrixK { rows: n, cols, tag, data: rows.into_iter().flatten().collect() })
    }

    /// Real matrix from row-major values.
    pub fn from_real(rows: usize, cols: usize, values: &[f64], tag: FieldTag) -> Self {
        assert_eq!(values.len(), rows * cols);
        MatrixK::from_fn(rows, cols, tag, |i, j| Scalar::real(values[i * cols + j], tag))
    }

    /// Matrix with independent standard normal components.
    pub fn random_gaussian<R: Rng + ?Sized>(rows: usize, cols: usize, tag: FieldTag, rng: &mut R) -> Self {
        MatrixK::from_fn(rows, cols, tag, |_, _| Scalar::gaussian_sample(tag, rng))
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn tag(&self) -> FieldTag {
        self.tag
    }

    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }

    pub fn get(&self, i: usize, j: usize) -> Scalar {
        assert!(i < self.rows && j < self.cols, "matrix index ({i},{j}) out of range");
        self.data[i * self.cols + j]
    }

    pub fn set(&mut self, i: usize, j: usize, x: Scalar) {
        assert!(i < self.rows && j < self.cols, "matrix index ({i},{j}) out of range");
        assert_eq!(x.tag(), self.tag, "field tag mismatch in matrix assignment");
        self.data[i * self.cols + j] = x;
    }

    pub fn row(&self, i: usize) -> &[Scalar] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    /// Conjugate transpose.
    pub fn adjoint(&self) -> MatrixK {
        MatrixK::from_fn(self.cols, self.rows, self.tag, |i, j| self.get(j, i).conj())
    }

    /// `M M*`.
    pub fn gram(&self) -> MatrixK {
        MatrixK::from_fn(self.rows, self.rows, self.tag, |i, j| {
            self.row(i).iter().zip(self.row(j)).fold(Scalar::zero(self.tag), |acc, (&a, &b)| acc + a * b.conj())
        })
    }

    /// Submatrix on the listed rows and columns (in the given order).
    pub fn select(&self, rows: &[usize], cols: &[usize]) -> MatrixK {
        MatrixK::from_fn(rows.len(), cols.len(), self.tag, |i, j| self.get(rows[i], cols[j]))
    }

    /// Contiguous block `[r0, r1) x [c0, c1)`.
    pub fn block(&self, r0: usize, r1: usize, c0: usize, c1: usize) -> MatrixK {
        assert!(r0 <= r1 && r1 <= self.rows && c0 <= c1 && c1 <= self.cols, "block out of range");
        MatrixK::from_fn(r1 - r0, c1 - c0, self.tag, |i, j| self.get(r0 + i, c0 + j))
    }

    pub fn is_hermitian(&self, tol: f64) -> bool {
        self.is_square()
            && (0..self.rows).all(|i| (0..self.cols).all(|j| (self.get(i, j) - self.get(j, i).conj()).abs() <= tol))
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().map(|x| x.abs()).fold(0.0, f64::max)
    }

    /// Real `(kappa·rows) x (kappa·cols)` matrix of the R-linear map `x -> M x`
    /// on `K^cols`, entries acting by left multiplication. Row-major.
    pub fn real_embedding(&self) -> Vec<f64> {
        let k = self.tag.kappa();
        let width = k * self.cols;
        let mut out = vec![0.0; k * self.rows * width];
        for i in 0..self.rows {
            for j in 0..self.cols {
                let block = left_mul_block(self.get(i, j));
                for r in 0..k {
                    for c in 0..k {
                        out[(k * i + r) * width + k * j + c] = block[r][c];
                    }
                }
            }
        }
        out
    }

    /// Signed determinant over R or C via elimination with partial pivoting.
    pub fn det_rc(&self) -> Result<Scalar> {
        if self.tag == FieldTag::Quaternion {
            return Err(Error::UnsupportedField("quaternion (use qdet)"));
        }
        self.require_square()?;
        let elim = self.eliminate();
        if elim.singular {
            return Ok(Scalar::zero(self.tag));
        }
        let prod = elim.pivots.iter().fold(Scalar::one(self.tag), |acc, &p| acc * p);
        Ok(if elim.swaps % 2 == 1 { -prod } else { prod })
    }

    /// Dieudonné absolute determinant `det(A_R)^(1/kappa)`.
    pub fn qdet(&self) -> Result<f64> {
        Ok(self.log_qdet()?.exp())
    }

    /// Natural log of [`MatrixK::qdet`]; `-inf` for singular input.
    pub fn log_qdet(&self) -> Result<f64> {
        self.require_square()?;
        let n = self.tag.kappa() * self.rows;
        let log_abs = real_log_abs_det(self.real_embedding(), n);
        Ok(log_abs / self.tag.kappa_f64())
    }

    /// `prod |pivot|` of the elimination in K. Equal to `qdet` for every field;
    /// kept as an independent route for cross-checking the embedding.
    pub fn qdet_by_elimination(&self) -> Result<f64> {
        self.require_square()?;
        let elim = self.eliminate();
        if elim.singular {
            return Ok(0.0);
        }
        Ok(elim.pivots.iter().map(|p| p.abs()).product())
    }

    /// Solves `self · X = rhs` (entries of `self` multiply from the left).
    pub fn solve(&self, rhs: &MatrixK) -> Result<MatrixK> {
        self.require_square()?;
        if rhs.rows != self.rows || rhs.tag != self.tag {
            return Err(Error::Shape(format!(
                "solve: {}x{} system with {}x{} right-hand side",
                self.rows, self.cols, rhs.rows, rhs.cols
            )));
        }
        let n = self.rows;
        let m = rhs.cols;
        let mut a = self.clone();
        let mut b = rhs.clone();
        let scale = a.max_abs();
        let mut piv_min = f64::INFINITY;
        let mut piv_max: f64 = 0.0;
        for col in 0..n {
            let p = (col..n).max_by(|&x, &y| a.get(x, col).abs().total_cmp(&a.get(y, col).abs())).unwrap_or(col);
            let pivot_abs = a.get(p, col).abs();
            if pivot_abs == 0.0 || pivot_abs <= scale * 1e-14 * n as f64 {
                return Err(Error::SingularBlock);
            }
            piv_min = piv_min.min(pivot_abs);
            piv_max = piv_max.max(pivot_abs);
            a.swap_rows(col, p);
            b.swap_rows(col, p);
            let inv = a.get(col, col).inv()?;
            for r in col + 1..n {
                let l = a.get(r, col) * inv;
                if l.is_zero() {
                    continue;
                }
                for c in col..n {
                    let v = a.get(r, c) - l * a.get(col, c);
                    a.set(r, c, v);
                }
                for c in 0..m {
                    let v = b.get(r, c) - l * b.get(col, c);
                    b.set(r, c, v);
                }
            }
        }
        warn_condition(piv_max, piv_min);
        let mut x = MatrixK::zeros(n, m, self.tag);
        for r in (0..n).rev() {
            let inv = a.get(r, r).inv()?;
            for c in 0..m {
                let mut acc = b.get(r, c);
                for k in r + 1..n {
                    acc -= a.get(r, k) * x.get(k, c);
                }
                x.set(r, c, inv * acc);
            }
        }
        Ok(x)
    }

    /// `x - w u^{-1} v` for the block split `[[u, v], [w, x]]` with `u` of size `split`.
    pub fn schur_complement(&self, split: usize) -> Result<MatrixK> {
        self.require_square()?;
        if split > self.rows {
            return Err(Error::IndexOutOfRange(format!("split {split} for order {}", self.rows)));
        }
        let n = self.rows;
        let x = self.block(split, n, split, n);
        if split == 0 {
            return Ok(x);
        }
        let u = self.block(0, split, 0, split);
        let v = self.block(0, split, split, n);
        let w = self.block(split, n, 0, split);
        let uinv_v = u.solve(&v)?;
        Ok(&x - &(&w * &uinv_v))
    }

    /// Natural logs of the row-prefix Gram determinants: entry `p - 1` is
    /// `ln qdet(M_p M_p*)` for the first `p` rows `M_p`. Computed by modified
    /// Gram–Schmidt on the rows, which keeps the products free of the
    /// cancellation a direct Gram determinant suffers for large entries.
    pub fn row_gram_log_determinants(&self) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.rows);
        let mut acc = 0.0;
        self.orthonormalize_rows(|norm2| {
            acc += norm2.ln();
            out.push(acc);
        });
        out
    }

    /// Orthonormal basis of the row space, under left scalar multiplication.
    pub fn orthonormal_row_basis(&self) -> Vec<Vec<Scalar>> {
        self.orthonormalize_rows(|_| {})
    }

    fn orthonormalize_rows(&self, mut on_norm2: impl FnMut(f64)) -> Vec<Vec<Scalar>> {
        let mut basis: Vec<Vec<Scalar>> = Vec::with_capacity(self.rows);
        for i in 0..self.rows {
            let r = project_out(self.row(i).to_vec(), &basis);
            let norm2: f64 = r.iter().map(|x| x.abs2()).sum();
            on_norm2(norm2);
            let inv_norm = 1.0 / norm2.sqrt();
            basis.push(r.into_iter().map(|x| x.scale(inv_norm)).collect());
        }
        basis
    }

    fn require_square(&self) -> Result<()> {
        if self.is_square() {
            Ok(())
        } else {
            Err(Error::Shape(format!("expected a square matrix, got {}x{}", self.rows, self.cols)))
        }
    }

    fn swap_rows(&mut self, a: usize, b: usize) {
        if a != b {
            for c in 0..self.cols {
                self.data.swap(a * self.cols + c, b * self.cols + c);
            }
        }
    }

    fn eliminate(&self) -> Elimination {
        let n = self.rows;
        let mut a = self.clone();
        let mut pivots = Vec::with_capacity(n);
        let mut swaps = 0;
        for col in 0..n {
            let p = (col..n).max_by(|&x, &y| a.get(x, col).abs().total_cmp(&a.get(y, col).abs())).unwrap_or(col);
            if a.get(p, col).is_zero() {
                return Elimination { pivots, swaps, singular: true };
            }
            if p != col {
                a.swap_rows(col, p);
                swaps += 1;
            }
            let pivot = a.get(col, col);
            let inv = pivot.inv().expect("nonzero pivot");
            for r in col + 1..n {
                let l = a.get(r, col) * inv;
                for c in col..n {
                    let v = a.get(r, c) - l * a.get(col, c);
                    a.set(r, c, v);
                }
            }
            pivots.push(pivot);
        }
        let max = pivots.iter().map(|p| p.abs()).fold(0.0, f64::max);
        let min = pivots.iter().map(|p| p.abs()).fold(f64::INFINITY, f64::min);
        warn_condition(max, min);
        Elimination { pivots, swaps, singular: false }
    }
}

struct Elimination {
    pivots: Vec<Scalar>,
    swaps: usize,
    singular: bool,
}

fn warn_condition(piv_max: f64, piv_min: f64) {
    if piv_min > 0.0 && piv_max / piv_min > Tolerances::DEFAULT.condition_warning {
        log::warn!("ill-conditioned elimination: pivot ratio {:.3e}", piv_max / piv_min);
    }
}

/// `sum_k r_k conj(e_k)`.
/// Removes the components of `r` along an orthonormal `basis`, in two passes.
pub fn project_out(mut r: Vec<Scalar>, basis: &[Vec<Scalar>]) -> Vec<Scalar> {
    for _ in 0..2 {
        for e in basis {
            let c = inner(&r, e);
            for (rk, &ek) in r.iter_mut().zip(e) {
                *rk -= c * ek;
            }
        }
    }
    r
}

/// `sum_i r_i conj(e_i)`.
pub fn inner(r: &[Scalar], e: &[Scalar]) -> Scalar {
    let tag = r[0].tag();
    r.iter().zip(e).fold(Scalar::zero(tag), |acc, (&a, &b)| acc + a * b.conj())
}

/// Matrix of `x -> q x` on the first `kappa` real coordinates.
fn left_mul_block(q: Scalar) -> [[f64; 4]; 4] {
    let (a, b, c, d) = (q.component(0), q.component(1), q.component(2), q.component(3));
    [[a, -b, -c, -d], [b, a, -d, c], [c, d, a, -b], [d, -c, b, a]]
}

/// `ln |det|` of a real row-major `n x n` matrix; `-inf` when singular.
fn real_log_abs_det(mut a: Vec<f64>, n: usize) -> f64 {
    let mut acc = 0.0;
    let mut piv_max: f64 = 0.0;
    let mut piv_min = f64::INFINITY;
    for col in 0..n {
        let p = (col..n).max_by(|&x, &y| a[x * n + col].abs().total_cmp(&a[y * n + col].abs())).unwrap_or(col);
        let pivot = a[p * n + col];
        if pivot == 0.0 {
            return f64::NEG_INFINITY;
        }
        if p != col {
            for c in 0..n {
                a.swap(p * n + c, col * n + c);
            }
        }
        piv_max = piv_max.max(pivot.abs());
        piv_min = piv_min.min(pivot.abs());
        acc += pivot.abs().ln();
        for r in col + 1..n {
            let l = a[r * n + col] / pivot;
            if l != 0.0 {
                for c in col..n {
                    a[r * n + c] -= l * a[col * n + c];
                }
            }
        }
    }
    warn_condition(piv_max, piv_min);
    acc
}

impl Mul for &MatrixK {
    type Output = MatrixK;
    fn mul(self, rhs: &MatrixK) -> MatrixK {
        assert_eq!(self.cols, rhs.rows, "inner dimensions differ");
        assert_eq!(self.tag, rhs.tag, "field tag mismatch");
        MatrixK::from_fn(self.rows, rhs.cols, self.tag, |i, j| {
            (0..self.cols).fold(Scalar::zero(self.tag), |acc, k| acc + self.get(i, k) * rhs.get(k, j))
        })
    }
}

impl Add for &MatrixK {
    type Output = MatrixK;
    fn add(self, rhs: &MatrixK) -> MatrixK {
        assert!(self.rows == rhs.rows && self.cols == rhs.cols, "shape mismatch");
        MatrixK::from_fn(self.rows, self.cols, self.tag, |i, j| self.get(i, j) + rhs.get(i, j))
    }
}

impl Sub for &MatrixK {
    type Output = MatrixK;
    fn sub(self, rhs: &MatrixK) -> MatrixK {
        assert!(self.rows == rhs.rows && self.cols == rhs.cols, "shape mismatch");
        MatrixK::from_fn(self.rows, self.cols, self.tag, |i, j| self.get(i, j) - rhs.get(i, j))
    }
}

impl fmt::Display for MatrixK {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for i in 0..self.rows {
            let row: Vec<String> = self.row(i).iter().map(|x| x.to_string()).collect();
            writeln!(f, "[{}]", row.join(", "))?;
        }
        Ok(())
    }
}

/// Outcome of the Desnanot–Jacobi identity on one matrix.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DesnanotJacobi {
    /// `det(U) det(S)`.
    pub lhs: Scalar,
    /// `det(S11) det(S22) - det(S12) det(S21)`.
    pub rhs: Scalar,
    /// `|lhs - rhs|` over the largest magnitude among the three products.
    pub rel_residual: f64,
}

/// Evaluates both sides of the Desnanot–Jacobi identity for `S` of order `m + 2`,
/// where `U` is the leading `m x m` block and the four bordered minors delete one
/// of the last two rows and one of the last two columns.
pub fn desnanot_jacobi(s: &MatrixK) -> Result<DesnanotJacobi> {
    if s.tag() == FieldTag::Quaternion {
        return Err(Error::UnsupportedField("quaternion: the identity needs a commutative field"));
    }
    s.require_square()?;
    if s.rows() < 2 {
        return Err(Error::Shape("Desnanot–Jacobi needs order >= 2".into()));
    }
    let m = s.rows() - 2;
    let keep = |drop: usize| -> Vec<usize> { (0..m + 2).filter(|&i| i != drop).collect() };
    let head: Vec<usize> = (0..m).collect();
    let (last, prev) = (m + 1, m);
    let det_u = s.select(&head, &head).det_rc()?;
    let det_s = s.det_rc()?;
    let s11 = s.select(&keep(last), &keep(last)).det_rc()?;
    let s22 = s.select(&keep(prev), &keep(prev)).det_rc()?;
    let s12 = s.select(&keep(last), &keep(prev)).det_rc()?;
    let s21 = s.select(&keep(prev), &keep(last)).det_rc()?;
    let lhs = det_u * det_s;
    let rhs = s11 * s22 - s12 * s21;
    let scale = lhs.abs().max((s11 * s22).abs()).max((s12 * s21).abs());
    let rel_residual = if scale == 0.0 { 0.0 } else { (lhs - rhs).abs() / scale };
    Ok(DesnanotJacobi { lhs, rhs, rel_residual })
}

/// Whether the Desnanot–Jacobi identity holds for `S` to relative tolerance `tol`.
pub fn desnanot_jacobi_check(s: &MatrixK, tol: f64) -> Result<bool> {
    Ok(desnanot_jacobi(s)?.rel_residual <= tol)
}
