//! Coefficient matrices for the constructions.
//!
//! An isometry `X` (`X†X = I`) supplies one state per column: the column
//! entries become the amplitudes placed on a pattern of grid cells.

use std::fmt;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::numerics::{CMatrix, C64, ZERO};
use crate::weyl::root_of_unity;

/// Tolerance for `|X†X − I|_max` when accepting an isometry.
pub const ISOMETRY_TOL: f64 = 1e-10;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Source {
    Dft,
    Od,
    Ud,
    File,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Field {
    Complex,
    Real,
}

impl Field {
    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "complex" => Ok(Field::Complex),
            "real" => Ok(Field::Real),
            other => Err(Error::InvalidInput(format!("unknown field `{other}`"))),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Isometry {
    entries: CMatrix,
    source: Source,
    field: Field,
}

impl Isometry {
    /// Validates `X†X = I` within [`ISOMETRY_TOL`]; a `Real` field also
    /// requires every imaginary part to be exactly zero.
    pub fn new(entries: CMatrix, source: Source, field: Field) -> Result<Self> {
        if entries.rows() < entries.cols() || entries.cols() == 0 {
            return Err(Error::InvalidInput(format!(
                "a {}x{} matrix cannot be an isometry",
                entries.rows(),
                entries.cols()
            )));
        }
        let defect = entries.isometry_defect();
        if defect > ISOMETRY_TOL {
            return Err(Error::InvalidInput(format!("not an isometry: |X†X - I|_max = {defect:e}")));
        }
        if field == Field::Real && entries.data().iter().any(|z| z.im != 0.0) {
            return Err(Error::InvalidInput("real isometry has complex entries".into()));
        }
        Ok(Self { entries, source, field })
    }

    pub fn entries(&self) -> &CMatrix {
        &self.entries
    }

    pub fn source(&self) -> Source {
        self.source
    }

    pub fn field(&self) -> Field {
        self.field
    }

    pub fn rows(&self) -> usize {
        self.entries.rows()
    }

    pub fn cols(&self) -> usize {
        self.entries.cols()
    }

    pub fn get(&self, r: usize, c: usize) -> C64 {
        self.entries.get(r, c)
    }

    pub fn is_square(&self) -> bool {
        self.entries.is_square()
    }

    /// Same isometry with columns permuted and each column multiplied by a phase.
    pub fn rephase_columns(&self, perm: &[usize], phases: &[C64]) -> Result<Self> {
        let n = self.cols();
        if perm.len() != n || phases.len() != n {
            return Err(Error::InvalidInput("permutation/phase length mismatch".into()));
        }
        let m = CMatrix::from_fn(self.rows(), n, |r, c| self.get(r, perm[c]) * phases[c]);
        Self::new(m, self.source, Field::Complex)
    }
}

impl fmt::Display for Isometry {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let name = match self.source {
            Source::Dft => "dft",
            Source::Od => "od",
            Source::Ud => "ud",
            Source::File => "file",
        };
        write!(f, "{name}({}x{})", self.rows(), self.cols())
    }
}

/// Unitary DFT matrix, `X[p][q] = e^{2πi·pq/n} / √n`.
pub fn dft(n: usize) -> Result<Isometry> {
    if n == 0 {
        return Err(Error::InvalidInput("dft size must be at least 1".into()));
    }
    let scale = 1.0 / (n as f64).sqrt();
    let mut m = CMatrix::from_fn(n, n, |p, q| root_of_unity(p * q, n) * scale);
    let field = if n <= 2 { Field::Real } else { Field::Complex };
    if field == Field::Real {
        // ±1 exactly; avoid a stray -1.2e-16 imaginary part from the polar form
        m = CMatrix::from_fn(n, n, |p, q| C64::new(m.get(p, q).re, 0.0));
    }
    Isometry::new(m, Source::Dft, field)
}

/// Real orthogonal `O_d = (2·J − d·I)/d` with `J` the all-ones matrix.
pub fn od(d: usize) -> Result<Isometry> {
    if d <= 2 {
        return Err(Error::ZeroEntry(format!("O_{d} has zero entries; need d >= 3")));
    }
    let inv = 1.0 / d as f64;
    let m = CMatrix::from_fn(d, d, |r, c| {
        let v = if r == c { (2.0 - d as f64) * inv } else { 2.0 * inv };
        C64::new(v, 0.0)
    });
    Isometry::new(m, Source::Od, Field::Real)
}

/// `U_d = i·O_d`.
pub fn ud(d: usize) -> Result<Isometry> {
    let o = od(d)?;
    Isometry::new(o.entries.scale(C64::new(0.0, 1.0)), Source::Ud, Field::Complex)
}

/// True iff every entry has modulus strictly above `tol`.
pub fn no_zero_entries(x: &Isometry, tol: f64) -> bool {
    x.entries.data().iter().all(|z| z.norm() > tol)
}

/// Per-column outcome of [`sebk_isometry_predicate`].
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ColumnVerdict {
    /// Exactly `k` entries above `tol`, each of modulus `1/√k`.
    pub sparse_equal: bool,
    /// Leading `k−1` entries of modulus `1/√k`, remaining tail of squared norm `1/k`.
    pub head_and_tail: bool,
}

impl ColumnVerdict {
    pub fn passes(&self) -> bool {
        self.sparse_equal || self.head_and_tail
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct PredicateVerdict {
    pub columns: Vec<ColumnVerdict>,
    pub holds: bool,
}

/// Column conditions under which a `(k+r) x (k+r)` isometry yields an
/// equal-coefficient rank-`k` basis: every column must either have exactly
/// `k` nonzero entries of modulus `1/√k`, or have modulus `1/√k` in rows
/// `0..k−1` and a tail (rows `k−1..`) of squared norm `1/k`.
pub fn sebk_isometry_predicate(x: &Isometry, k: usize, tol: f64) -> Result<PredicateVerdict> {
    let n = x.rows();
    if !x.is_square() || k < 2 || n <= k || n >= 2 * k {
        return Err(Error::InvalidInput(format!(
            "predicate needs a square matrix of size in ({k}, {}); got {}x{}",
            2 * k,
            x.rows(),
            x.cols()
        )));
    }
    let target = 1.0 / (k as f64).sqrt();
    let columns: Vec<ColumnVerdict> = (0..n)
        .map(|j| {
            let col = x.entries.column(j);
            let nonzero: Vec<f64> = col.iter().map(|z| z.norm()).filter(|&a| a > tol).collect();
            let sparse_equal = nonzero.len() == k && nonzero.iter().all(|a| (a - target).abs() <= tol);
            let head_ok = col[..k - 1].iter().all(|z| (z.norm() - target).abs() <= tol);
            let tail: f64 = col[k - 1..].iter().map(|z| z.norm_sqr()).sum();
            let head_and_tail = head_ok && (tail - 1.0 / k as f64).abs() <= tol;
            ColumnVerdict { sparse_equal, head_and_tail }
        })
        .collect();
    let holds = columns.iter().all(ColumnVerdict::passes);
    Ok(PredicateVerdict { columns, holds })
}

/// The 4x4 sign pattern whose columns `(0,1,1,1), (1,0,−1,1), (1,1,0,−1),
/// (1,−1,1,0)`, scaled by `1/√3`, form an equal-weight rank-3 basis of the
/// 4x4 diagonal matrices.
pub fn sign_matrix_4() -> Isometry {
    let cols: [[f64; 4]; 4] = [[0., 1., 1., 1.], [1., 0., -1., 1.], [1., 1., 0., -1.], [1., -1., 1., 0.]];
    let s = 1.0 / 3f64.sqrt();
    let m = CMatrix::from_fn(4, 4, |r, c| C64::new(cols[c][r] * s, 0.0));
    Isometry::new(m, Source::File, Field::Real).expect("columns are orthonormal")
}

/// Where construction coefficients come from when a pattern of a given size
/// needs filling.
#[derive(Clone, Debug, PartialEq)]
pub enum CoefficientSource {
    Dft,
    Od,
    Ud,
    /// A fixed matrix; used for patterns of its size, the field default elsewhere.
    Custom(Isometry),
}

impl CoefficientSource {
    /// Square isometry of size `n` for the given field.
    ///
    /// In the real field `Dft` means the real default: the 2x2 Hadamard for
    /// `n = 2` and `O_n` for `n >= 3`.
    pub fn resolve(&self, n: usize, field: Field) -> Result<Isometry> {
        let iso = match (self, field) {
            (CoefficientSource::Dft, Field::Complex) => dft(n)?,
            (CoefficientSource::Dft, Field::Real) => real_default(n)?,
            (CoefficientSource::Od, _) => od(n)?,
            (CoefficientSource::Ud, Field::Complex) => ud(n)?,
            (CoefficientSource::Ud, Field::Real) => {
                return Err(Error::InvalidInput("U_d = i·O_d is not real".into()))
            }
            (CoefficientSource::Custom(x), _) => {
                if x.is_square() && x.rows() == n {
                    if field == Field::Real && x.entries().data().iter().any(|z| z.im != 0.0) {
                        return Err(Error::InvalidInput("real field requested with a complex isometry".into()));
                    }
                    x.clone()
                } else {
                    CoefficientSource::Dft.resolve(n, field)?
                }
            }
        };
        Ok(iso)
    }

    pub fn describe(&self) -> String {
        match self {
            CoefficientSource::Dft => "dft".into(),
            CoefficientSource::Od => "od".into(),
            CoefficientSource::Ud => "ud".into(),
            CoefficientSource::Custom(x) => format!("file({}x{})", x.rows(), x.cols()),
        }
    }
}

fn real_default(n: usize) -> Result<Isometry> {
    match n {
        0 => Err(Error::InvalidInput("size 0".into())),
        1 | 2 => dft(n),
        _ => od(n),
    }
}

/// Embeds the columns of a square isometry on the diagonal of an `n x n`
/// matrix; a column with exactly `k` nonzero entries gives a rank-`k` matrix.
pub fn diagonal_embedding(x: &Isometry) -> Vec<CMatrix> {
    let n = x.rows();
    (0..x.cols())
        .map(|j| {
            let mut m = CMatrix::zeros(n, n);
            for p in 0..n {
                let z = x.get(p, j);
                if z != ZERO {
                    m.set(p, p, z);
                }
            }
            m
        })
        .collect()
}
