//! Small dense complex linear algebra.
//!
//! Everything here is sized for coefficient matrices of a few hundred
//! entries at most. Inner products always accumulate in ascending index
//! order so that reports are bit-stable across runs.

use std::fmt;
use std::ops::{Index, Mul};

use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};

pub type C64 = Complex64;

pub const ZERO: C64 = C64::new(0.0, 0.0);
pub const ONE: C64 = C64::new(1.0, 0.0);

/// Dense row-major complex matrix with finite entries.
#[derive(Clone, PartialEq)]
pub struct CMatrix {
    rows: usize,
    cols: usize,
    data: Vec<C64>,
}

impl CMatrix {
    pub fn new(rows: usize, cols: usize, data: Vec<C64>) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(Error::InvalidInput(format!(
                "{} entries supplied for a {rows} x {cols} matrix",
                data.len()
            )));
        }
        if let Some(pos) = data.iter().position(|z| !z.is_finite()) {
            return Err(Error::NonFinite(pos));
        }
        Ok(Self { rows, cols, data })
    }

    pub fn from_rows(rows: &[Vec<C64>]) -> Result<Self> {
        let ncols = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|r| r.len() != ncols) {
            return Err(Error::InvalidInput("ragged rows".into()));
        }
        Self::new(rows.len(), ncols, rows.concat())
    }

    /// Builds a matrix entry by entry.
    ///
    /// Panics if `f` yields a non-finite value.
    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> C64) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for r in 0..rows {
            for c in 0..cols {
                let z = f(r, c);
                assert!(z.is_finite(), "non-finite entry at ({r}, {c})");
                data.push(z);
            }
        }
        Self { rows, cols, data }
    }

    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self { rows, cols, data: vec![ZERO; rows * cols] }
    }

    pub fn identity(n: usize) -> Self {
        Self::from_fn(n, n, |r, c| if r == c { ONE } else { ZERO })
    }

    /// Column vector from a slice.
    pub fn column_vector(v: &[C64]) -> Result<Self> {
        Self::new(v.len(), 1, v.to_vec())
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn data(&self) -> &[C64] {
        &self.data
    }

    pub fn into_data(self) -> Vec<C64> {
        self.data
    }

    pub fn get(&self, r: usize, c: usize) -> C64 {
        self.data[r * self.cols + c]
    }

    pub(crate) fn set(&mut self, r: usize, c: usize, z: C64) {
        debug_assert!(z.is_finite());
        self.data[r * self.cols + c] = z;
    }

    pub fn column(&self, c: usize) -> Vec<C64> {
        (0..self.rows).map(|r| self.get(r, c)).collect()
    }

    pub fn adjoint(&self) -> Self {
        Self::from_fn(self.cols, self.rows, |r, c| self.get(c, r).conj())
    }

    pub fn transpose(&self) -> Self {
        Self::from_fn(self.cols, self.rows, |r, c| self.get(c, r))
    }

    pub fn scale(&self, s: C64) -> Self {
        Self { rows: self.rows, cols: self.cols, data: self.data.iter().map(|z| z * s).collect() }
    }

    pub fn matmul(&self, other: &CMatrix) -> Result<Self> {
        if self.cols != other.rows {
            return Err(Error::InvalidInput(format!(
                "cannot multiply {}x{} by {}x{}",
                self.rows, self.cols, other.rows, other.cols
            )));
        }
        Ok(Self::from_fn(self.rows, other.cols, |r, c| {
            let mut acc = ZERO;
            for t in 0..self.cols {
                acc += self.get(r, t) * other.get(t, c);
            }
            acc
        }))
    }

    /// Kronecker product `self ⊗ other`.
    pub fn kron(&self, other: &CMatrix) -> Self {
        let rows = self.rows * other.rows;
        let cols = self.cols * other.cols;
        Self::from_fn(rows, cols, |r, c| {
            self.get(r / other.rows, c / other.cols) * other.get(r % other.rows, c % other.cols)
        })
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.data.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
    }

    /// Largest entrywise modulus of `self - other`; infinite on shape mismatch.
    pub fn max_abs_diff(&self, other: &CMatrix) -> f64 {
        if self.rows != other.rows || self.cols != other.cols {
            return f64::INFINITY;
        }
        self.data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max)
    }

    /// `|X†X − I|_max`.
    pub fn isometry_defect(&self) -> f64 {
        let g = self.adjoint().matmul(self).expect("shapes agree");
        g.max_abs_diff(&CMatrix::identity(self.cols))
    }

    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }
}

impl Index<(usize, usize)> for CMatrix {
    type Output = C64;

    fn index(&self, (r, c): (usize, usize)) -> &C64 {
        &self.data[r * self.cols + c]
    }
}

impl Mul for &CMatrix {
    type Output = CMatrix;

    fn mul(self, rhs: &CMatrix) -> CMatrix {
        self.matmul(rhs).expect("matrix dimensions must agree")
    }
}

impl fmt::Debug for CMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "CMatrix {}x{} [", self.rows, self.cols)?;
        for r in 0..self.rows {
            write!(f, "  ")?;
            for c in 0..self.cols {
                let z = self.get(r, c);
                write!(f, "{:+.6}{:+.6}i ", z.re, z.im)?;
            }
            writeln!(f)?;
        }
        write!(f, "]")
    }
}

/// Thin singular value decomposition `A = U Σ V†`.
///
/// For an `m x n` input, `p = min(m, n)`; `u` is `m x p`, `v` is `n x p`
/// and `singular_values` has length `p`, sorted non-increasing.
#[derive(Clone, Debug)]
pub struct SvdResult {
    pub singular_values: Vec<f64>,
    pub u: CMatrix,
    pub v: CMatrix,
}

impl SvdResult {
    pub fn reconstruct(&self) -> CMatrix {
        let p = self.singular_values.len();
        let mut us = self.u.clone();
        for r in 0..us.rows() {
            for c in 0..p {
                let z = us.get(r, c) * self.singular_values[c];
                us.set(r, c, z);
            }
        }
        &us * &self.v.adjoint()
    }

    /// Number of singular values strictly above `tol`.
    pub fn rank(&self, tol: f64) -> usize {
        self.singular_values.iter().filter(|&&s| s > tol).count()
    }
}

const JACOBI_MAX_SWEEPS: usize = 80;

/// Singular value decomposition by one-sided (Hestenes) Jacobi rotations.
pub fn svd(a: &CMatrix) -> Result<SvdResult> {
    if a.rows() == 0 || a.cols() == 0 {
        return Err(Error::InvalidInput("svd of an empty matrix".into()));
    }
    if let Some(pos) = a.data().iter().position(|z| !z.is_finite()) {
        return Err(Error::NonFinite(pos));
    }
    if a.rows() >= a.cols() {
        Ok(jacobi_tall(a))
    } else {
        // A† = U' Σ V'†  =>  A = V' Σ U'†
        let t = jacobi_tall(&a.adjoint());
        Ok(SvdResult { singular_values: t.singular_values, u: t.v, v: t.u })
    }
}

/// Jacobi SVD for `m >= n`.
fn jacobi_tall(a: &CMatrix) -> SvdResult {
    let m = a.rows();
    let n = a.cols();
    // column-major working copies
    let mut w: Vec<Vec<C64>> = (0..n).map(|c| a.column(c)).collect();
    let mut v: Vec<Vec<C64>> = (0..n)
        .map(|c| (0..n).map(|r| if r == c { ONE } else { ZERO }).collect())
        .collect();

    for _ in 0..JACOBI_MAX_SWEEPS {
        let mut rotated = false;
        for p in 0..n {
            for q in (p + 1)..n {
                let alpha: f64 = w[p].iter().map(|z| z.norm_sqr()).sum();
                let beta: f64 = w[q].iter().map(|z| z.norm_sqr()).sum();
                let mut g = ZERO;
                for i in 0..m {
                    g += w[p][i].conj() * w[q][i];
                }
                let gabs = g.norm();
                if gabs == 0.0 || gabs <= f64::EPSILON * (alpha * beta).sqrt() {
                    continue;
                }
                rotated = true;
                let phase = g / gabs;
                let zeta = (beta - alpha) / (2.0 * gabs);
                let t = zeta.signum() / (zeta.abs() + (1.0 + zeta * zeta).sqrt());
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = c * t;
                let ph_conj = phase.conj();
                for col in [&mut w, &mut v] {
                    let (lo, hi) = col.split_at_mut(q);
                    let cp = &mut lo[p];
                    let cq = &mut hi[0];
                    for i in 0..cp.len() {
                        let xp = cp[i];
                        let xq = cq[i] * ph_conj;
                        cp[i] = xp * c - xq * s;
                        cq[i] = xp * s + xq * c;
                    }
                }
            }
        }
        if !rotated {
            break;
        }
    }

    let norms: Vec<f64> = w.iter().map(|col| col.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()).collect();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| norms[j].total_cmp(&norms[i]));

    let tiny = f64::MIN_POSITIVE.sqrt();
    let mut u_cols: Vec<Vec<C64>> = Vec::with_capacity(n);
    let mut pending = Vec::new();
    for (slot, &j) in order.iter().enumerate() {
        if norms[j] > tiny {
            u_cols.push(w[j].iter().map(|z| z / norms[j]).collect());
        } else {
            u_cols.push(vec![ZERO; m]);
            pending.push(slot);
        }
    }
    complete_orthonormal(&mut u_cols, &pending);

    let singular_values = order.iter().map(|&j| norms[j]).collect();
    let u = CMatrix::from_fn(m, n, |r, c| u_cols[c][r]);
    let vm = CMatrix::from_fn(n, n, |r, c| v[order[c]][r]);
    SvdResult { singular_values, u, v: vm }
}

/// Fills the listed slots with unit vectors orthogonal to every other column.
fn complete_orthonormal(cols: &mut [Vec<C64>], pending: &[usize]) {
    if pending.is_empty() {
        return;
    }
    let m = cols[0].len();
    let mut candidate = 0;
    for &slot in pending {
        loop {
            assert!(candidate < m, "cannot complete orthonormal set");
            let mut x = vec![ZERO; m];
            x[candidate] = ONE;
            candidate += 1;
            // two passes of Gram-Schmidt
            for _ in 0..2 {
                for (j, col) in cols.iter().enumerate() {
                    if j == slot || (pending.contains(&j) && col.iter().all(|z| *z == ZERO)) {
                        continue;
                    }
                    let proj = inner(col, &x);
                    for i in 0..m {
                        x[i] -= col[i] * proj;
                    }
                }
            }
            let nx = x.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
            if nx > 0.5 {
                cols[slot] = x.into_iter().map(|z| z / nx).collect();
                break;
            }
        }
    }
}

/// Conjugate-linear in the first argument: `Σ conj(a_t) b_t`, ascending `t`.
pub fn inner(a: &[C64], b: &[C64]) -> C64 {
    let mut acc = ZERO;
    for (x, y) in a.iter().zip(b) {
        acc += x.conj() * y;
    }
    acc
}

pub fn norm(a: &[C64]) -> f64 {
    a.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

/// Gram matrix `G[i][j] = ⟨v_i|v_j⟩`.
pub fn gram(vectors: &[Vec<C64>]) -> Result<CMatrix> {
    let len = vectors.first().map_or(0, Vec::len);
    if vectors.iter().any(|v| v.len() != len) {
        return Err(Error::InvalidInput("gram: vectors of different lengths".into()));
    }
    let n = vectors.len();
    Ok(CMatrix::from_fn(n, n, |i, j| inner(&vectors[i], &vectors[j])))
}

/// Kronecker product of two vectors.
pub fn kron_vec(a: &[C64], b: &[C64]) -> Vec<C64> {
    let mut out = Vec::with_capacity(a.len() * b.len());
    for x in a {
        for y in b {
            out.push(x * y);
        }
    }
    out
}

/// Haar-distributed random unitary (QR of a complex Gaussian matrix with
/// the phases of R's diagonal folded back in).
pub fn random_unitary<R: Rng + ?Sized>(n: usize, rng: &mut R) -> CMatrix {
    let mut cols: Vec<Vec<C64>> = (0..n)
        .map(|_| {
            (0..n)
                .map(|_| C64::new(rng.sample::<f64, _>(StandardNormal), rng.sample::<f64, _>(StandardNormal)))
                .collect()
        })
        .collect();
    for j in 0..n {
        for _ in 0..2 {
            for i in 0..j {
                let proj = inner(&cols[i], &cols[j]);
                let (lo, hi) = cols.split_at_mut(j);
                for t in 0..n {
                    hi[0][t] -= lo[i][t] * proj;
                }
            }
        }
        let nj = norm(&cols[j]);
        for z in cols[j].iter_mut() {
            *z /= nj;
        }
    }
    CMatrix::from_fn(n, n, |r, c| cols[c][r])
}
