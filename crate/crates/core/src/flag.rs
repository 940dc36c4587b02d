//! Unitriangular flag coordinates and their corner-Gram statistics.
//!
//! All row/column indices in this module are 1-based, matching the usual
//! `z_pq` notation. Entries are stored column by column so a matrix can be
//! projected to order `n - 1` or extended by one column cheaply.

use rand::Rng;

use crate::error::{Error, Result};
use crate::matrix::{inner, project_out, MatrixK};
use crate::scalar::{FieldTag, Scalar};

/// Upper unitriangular `n x n` matrix over K, parametrized by its free entries.
#[derive(Debug, Clone, PartialEq)]
pub struct UnitriangularMatrix {
    tag: FieldTag,
    /// `columns[q - 2]` holds `z_1q, ..., z_(q-1)q`.
    columns: Vec<Vec<Scalar>>,
}

impl UnitriangularMatrix {
    /// The identity of order `n` (all free entries zero).
    pub fn identity(n: usize, tag: FieldTag) -> Self {
        assert!(n >= 1, "order must be positive");
        let columns = (2..=n).map(|q| vec![Scalar::zero(tag); q - 1]).collect();
        UnitriangularMatrix { tag, columns }
    }

    /// Builds from the free entries in row-major order `z_12, z_13, ..., z_1n, z_23, ...`.
    pub fn from_entries(n: usize, tag: FieldTag, entries: &[Scalar]) -> Result<Self> {
        if entries.len() != n * (n - 1) / 2 {
            return Err(Error::Shape(format!(
                "order {n} needs {} free entries, got {}",
                n * (n - 1) / 2,
                entries.len()
            )));
        }
        if entries.iter().any(|x| x.tag() != tag) {
            return Err(Error::Shape("entries from a different field".into()));
        }
        let mut z = UnitriangularMatrix::identity(n, tag);
        let mut it = entries.iter();
        for p in 1..n {
            for q in p + 1..=n {
                z.columns[q - 2][p - 1] = *it.next().expect("length checked");
            }
        }
        Ok(z)
    }

    /// Free entries with independent standard normal components.
    pub fn random_gaussian<R: Rng + ?Sized>(n: usize, tag: FieldTag, rng: &mut R) -> Self {
        let count = n * (n - 1) / 2;
        let entries: Vec<Scalar> = (0..count).map(|_| Scalar::gaussian_sample(tag, rng)).collect();
        UnitriangularMatrix::from_entries(n, tag, &entries).expect("count matches")
    }

    pub fn n(&self) -> usize {
        self.columns.len() + 1
    }

    pub fn tag(&self) -> FieldTag {
        self.tag
    }

    /// `z_pq` for `1 <= p < q <= n`.
    pub fn entry(&self, p: usize, q: usize) -> Result<Scalar> {
        self.check_free(p, q)?;
        Ok(self.columns[q - 2][p - 1])
    }

    pub fn set_entry(&mut self, p: usize, q: usize, value: Scalar) -> Result<()> {
        self.check_free(p, q)?;
        if value.tag() != self.tag {
            return Err(Error::Shape("entry from a different field".into()));
        }
        self.columns[q - 2][p - 1] = value;
        Ok(())
    }

    /// Any entry of the full matrix, including the unit diagonal and zeros below it.
    pub fn full_entry(&self, i: usize, j: usize) -> Scalar {
        assert!(i >= 1 && j >= 1 && i <= self.n() && j <= self.n(), "index ({i},{j}) out of range");
        match i.cmp(&j) {
            std::cmp::Ordering::Equal => Scalar::one(self.tag),
            std::cmp::Ordering::Greater => Scalar::zero(self.tag),
            std::cmp::Ordering::Less => self.columns[j - 2][i - 1],
        }
    }

    /// Free entries in row-major order.
    pub fn entries(&self) -> Vec<Scalar> {
        let n = self.n();
        let mut out = Vec::with_capacity(n * (n - 1) / 2);
        for p in 1..n {
            for q in p + 1..=n {
                out.push(self.columns[q - 2][p - 1]);
            }
        }
        out
    }

    /// Free entries of column `q`, top to bottom.
    pub fn column(&self, q: usize) -> Result<&[Scalar]> {
        if q < 2 || q > self.n() {
            return Err(Error::IndexOutOfRange(format!("column {q} of order {}", self.n())));
        }
        Ok(&self.columns[q - 2])
    }

    pub fn to_matrix(&self) -> MatrixK {
        let n = self.n();
        MatrixK::from_fn(n, n, self.tag, |i, j| self.full_entry(i + 1, j + 1))
    }

    /// The upper-left `p x q` block `[Z]_pq`.
    pub fn corner(&self, p: usize, q: usize) -> Result<MatrixK> {
        if p < 1 || p > q || q > self.n() {
            return Err(Error::IndexOutOfRange(format!("corner ({p},{q}) of order {}", self.n())));
        }
        Ok(MatrixK::from_fn(p, q, self.tag, |i, j| self.full_entry(i + 1, j + 1)))
    }

    /// `s_pq = qdet([Z]_pq [Z]_pq*)` for `1 <= p < q <= n`.
    pub fn s(&self, p: usize, q: usize) -> Result<f64> {
        Ok(self.log_s(p, q)?.exp())
    }

    pub fn log_s(&self, p: usize, q: usize) -> Result<f64> {
        self.check_free(p, q)?;
        let logs = self.corner(p, q)?.row_gram_log_determinants();
        Ok(logs[p - 1])
    }

    /// `s_pq` extended to `0 <= p <= q <= n` with `s_0q = s_pp = 1`.
    pub fn s_ext(&self, p: usize, q: usize) -> Result<f64> {
        Ok(self.log_s_ext(p, q)?.exp())
    }

    /// `ln` of [`Self::s_ext`].
    pub fn log_s_ext(&self, p: usize, q: usize) -> Result<f64> {
        if q > self.n() || p > q {
            return Err(Error::IndexOutOfRange(format!("s_({p},{q}) of order {}", self.n())));
        }
        if p == 0 || p == q {
            return Ok(0.0);
        }
        self.log_s(p, q)
    }

    /// Center `-b/a` and width `sqrt(ac - |b|^2) / a` of `s_pq` as a quadratic in `u = z_pq`.
    ///
    /// The center minimizes the distance of row `p` of `[Z]_pq` to the span of
    /// the rows above it and is found by projection. The width comes from
    /// `a = s_(p-1)(q-1)` and `ac - |b|^2 = s_(p-1)q s_p(q-1)`. Neither solves
    /// with the Gram matrix, which is numerically singular for large entries.
    pub fn conditional_center_width(&self, p: usize, q: usize) -> Result<(Scalar, f64)> {
        self.check_free(p, q)?;
        let tag = self.tag;
        let basis = if p == 1 { Vec::new() } else { self.corner(p - 1, q)?.orthonormal_row_basis() };
        let mut row: Vec<Scalar> = (1..=q).map(|j| self.full_entry(p, j)).collect();
        row[q - 1] = Scalar::zero(tag);
        let mut unit = vec![Scalar::zero(tag); q];
        unit[q - 1] = Scalar::one(tag);
        let r0 = project_out(row, &basis);
        let w = project_out(unit, &basis);
        let w_norm2: f64 = w.iter().map(|x| x.abs2()).sum();
        let center = inner(&w, &r0).conj().scale(-1.0 / w_norm2);
        let log_a = self.log_s_ext(p - 1, q - 1)?;
        let log_disc = self.log_s_ext(p - 1, q)? + self.log_s_ext(p, q - 1)?;
        Ok((center, (0.5 * log_disc - log_a).exp()))
    }

    /// `ln s_1q, ..., ln s_(q-1)q` from one orthogonalization pass over `[Z]_(q-1)q`.
    pub fn log_s_column(&self, q: usize) -> Result<Vec<f64>> {
        if q < 2 || q > self.n() {
            return Err(Error::IndexOutOfRange(format!("column {q} of order {}", self.n())));
        }
        Ok(self.corner(q - 1, q)?.row_gram_log_determinants())
    }

    /// `out[q - 2][p - 1] = ln s_pq` for every `p < q`.
    pub fn log_s_table(&self) -> Vec<Vec<f64>> {
        (2..=self.n()).map(|q| self.log_s_column(q).expect("column in range")).collect()
    }

    /// Drops the last row and column.
    pub fn project(&self) -> Result<UnitriangularMatrix> {
        if self.n() < 2 {
            return Err(Error::Shape("cannot project an order-1 matrix".into()));
        }
        let mut columns = self.columns.clone();
        columns.pop();
        Ok(UnitriangularMatrix { tag: self.tag, columns })
    }

    /// Appends a column `z_1(n+1), ..., z_n(n+1)`.
    pub fn extend_column(&self, column: Vec<Scalar>) -> Result<UnitriangularMatrix> {
        if column.len() != self.n() {
            return Err(Error::Shape(format!("new column needs {} entries, got {}", self.n(), column.len())));
        }
        if column.iter().any(|x| x.tag() != self.tag) {
            return Err(Error::Shape("entry from a different field".into()));
        }
        let mut columns = self.columns.clone();
        columns.push(column);
        Ok(UnitriangularMatrix { tag: self.tag, columns })
    }

    /// Coefficients of `s_pn` as a quadratic form in `u = z_pn`.
    pub fn quad_coeffs(&self, p: usize) -> Result<QuadCoeffs> {
        self.quad_coeffs_at(p, self.n())
    }

    /// Coefficients of `s_pq` as a quadratic form in `u = z_pq`. Only columns
    /// left of `q` and the entries of column `q` above row `p` enter.
    ///
    /// With `[Z]_pq = [[Q, R, t], [0, rho, u]]` and `G = QQ* + RR* + tt*`:
    /// `a = det G (1 - t* G^-1 t)`, `b = -det G (rho R*) G^-1 t` and
    /// `c = det G (rho rho* - (rho R*) G^-1 (R rho*))`.
    pub fn quad_coeffs_at(&self, p: usize, q: usize) -> Result<QuadCoeffs> {
        self.check_free(p, q)?;
        let tag = self.tag;
        let rho = MatrixK::from_fn(1, q - p, tag, |_, j| self.full_entry(p, p + j));
        let rho_norm2: f64 = rho.row(0).iter().map(|x| x.abs2()).sum();
        if p == 1 {
            return Ok(QuadCoeffs { a: 1.0, b: Scalar::zero(tag), c: rho_norm2 });
        }
        let top = self.corner(p - 1, q)?;
        let g = top.gram();
        let det_g = g.qdet()?;
        let r = top.block(0, p - 1, p - 1, q - 1);
        let t = top.block(0, p - 1, q - 1, q);
        let r_rho = &r * &rho.adjoint();
        let g_inv_t = g.solve(&t)?;
        let g_inv_r_rho = g.solve(&r_rho)?;
        let rho_r = r_rho.adjoint();
        let t_g_t = (&t.adjoint() * &g_inv_t).get(0, 0).re();
        let a = det_g * (1.0 - t_g_t);
        let b = -(&rho_r * &g_inv_t).get(0, 0).scale(det_g);
        let c = det_g * (rho_norm2 - (&rho_r * &g_inv_r_rho).get(0, 0).re());
        Ok(QuadCoeffs { a, b, c })
    }

    /// Recovers the coefficients of `s_pq` in `u = z_pq` by probing `u = 0, ±e_i`.
    pub fn quad_coeffs_by_fit(&self, p: usize, q: usize) -> Result<QuadCoeffs> {
        self.check_free(p, q)?;
        let tag = self.tag;
        let mut probe = self.clone();
        let mut s_at = |u: Scalar| -> Result<f64> {
            probe.set_entry(p, q, u)?;
            probe.s(p, q)
        };
        let c = s_at(Scalar::zero(tag))?;
        let mut a_sum = 0.0;
        let mut b = [0.0; 4];
        for (i, bi) in b.iter_mut().enumerate().take(tag.kappa()) {
            let mut e = [0.0; 4];
            e[i] = 1.0;
            let plus = s_at(Scalar::from_components(&e[..tag.kappa()], tag))?;
            e[i] = -1.0;
            let minus = s_at(Scalar::from_components(&e[..tag.kappa()], tag))?;
            a_sum += (plus + minus) / 2.0 - c;
            *bi = (plus - minus) / 4.0;
        }
        let a = a_sum / tag.kappa_f64();
        Ok(QuadCoeffs { a, b: Scalar::from_components(&b[..tag.kappa()], tag), c })
    }

    fn check_free(&self, p: usize, q: usize) -> Result<()> {
        if p >= 1 && p < q && q <= self.n() {
            Ok(())
        } else {
            Err(Error::IndexOutOfRange(format!("({p},{q}) is not a free entry of order {}", self.n())))
        }
    }
}

/// `s(u) = a|u|^2 + u conj(b) + b conj(u) + c`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadCoeffs {
    pub a: f64,
    pub b: Scalar,
    pub c: f64,
}

impl QuadCoeffs {
    pub fn eval(&self, u: Scalar) -> f64 {
        self.a * u.abs2() + 2.0 * u.dot(self.b) + self.c
    }

    /// `ac - |b|^2`.
    pub fn discriminant(&self) -> f64 {
        self.a * self.c - self.b.abs2()
    }

    /// Minimizer `-b/a`.
    pub fn center(&self) -> Scalar {
        self.b.scale(-1.0 / self.a)
    }

    pub fn is_positive_definite(&self) -> bool {
        self.a > 0.0 && self.c > 0.0 && self.discriminant() > 0.0
    }
}
