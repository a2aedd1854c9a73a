//! Weyl shift-and-phase operators and the maximally entangled bases they
//! generate from `|Ω₀₀⟩ = (1/√d) Σ_i |i⟩|i'⟩`.

use std::f64::consts::TAU;

use crate::error::{Error, Result};
use crate::model::{BipartiteState, EntangledBasis, Family, Provenance};
use crate::numerics::{CMatrix, C64};

/// `e^{2πi·p/q}` with the exponent reduced mod `q` first.
pub(crate) fn root_of_unity(p: usize, q: usize) -> C64 {
    C64::from_polar(1.0, TAU * (p % q) as f64 / q as f64)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum WeylVariant {
    /// `|i⟩ ↦ ξ^{m(i−n)} |i−n⟩` on `C^d`.
    Check,
    /// `|i⟩ ↦ ξ^{mi} |i−n⟩` on `C^d`.
    Hat,
    /// `|i'⟩ ↦ ξ^{mi} |i−n⟩'` on `C^{d'}`, with `ξ = e^{2πi/d}` and the shift mod `d'`.
    Tilde,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct WeylOp {
    variant: WeylVariant,
    m: usize,
    n: usize,
    /// Order of the phase root: `ξ = e^{2πi/d}`.
    d: usize,
    /// Dimension acted on; equals `d` except for `Tilde`.
    dim: usize,
}

impl WeylOp {
    pub fn check(m: usize, n: usize, d: usize) -> Result<Self> {
        Self::build(WeylVariant::Check, m, n, d, d)
    }

    pub fn hat(m: usize, n: usize, d: usize) -> Result<Self> {
        Self::build(WeylVariant::Hat, m, n, d, d)
    }

    pub fn tilde(m: usize, n: usize, d: usize, dprime: usize) -> Result<Self> {
        Self::build(WeylVariant::Tilde, m, n, d, dprime)
    }

    fn build(variant: WeylVariant, m: usize, n: usize, d: usize, dim: usize) -> Result<Self> {
        if d == 0 || dim < d {
            return Err(Error::InvalidDimension(format!("weyl operator with d = {d}, dim = {dim}")));
        }
        if m >= d || n >= dim {
            return Err(Error::InvalidInput(format!("weyl indices (m, n) = ({m}, {n}) out of range")));
        }
        Ok(Self { variant, m, n, d, dim })
    }

    pub fn variant(&self) -> WeylVariant {
        self.variant
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Image of `|i⟩`: `(phase, target index)`.
    pub fn apply_basis(&self, i: usize) -> (C64, usize) {
        let target = (i + self.dim - self.n) % self.dim;
        let exponent = match self.variant {
            WeylVariant::Check => self.m * ((i + self.d - self.n % self.d) % self.d),
            WeylVariant::Hat | WeylVariant::Tilde => self.m * i,
        };
        (root_of_unity(exponent, self.d), target)
    }
}

/// Matrix of a Weyl operator in the computational basis.
pub fn weyl_matrix(op: &WeylOp) -> CMatrix {
    let mut w = CMatrix::zeros(op.dim, op.dim);
    for i in 0..op.dim {
        let (phase, row) = op.apply_basis(i);
        w.set(row, i, phase);
    }
    w
}

/// Maximally entangled basis of `C^d ⊗ C^d'` (`d ≤ d'`), state `(m, n)` at
/// index `m + d·n`.
///
/// For `d = d'` the states are `(Ŵ_{m,n} ⊗ 1)|Ω₀₀⟩`; for `d < d'` they are
/// `(1 ⊗ W̃_{m,n})|Ω₀₀⟩`.
pub fn meb(d: usize, dprime: usize) -> Result<EntangledBasis> {
    if d > dprime {
        return Err(Error::DimensionOrder { d, dprime });
    }
    if d == 0 {
        return Err(Error::InvalidDimension("d = 0".into()));
    }
    let amp = 1.0 / (d as f64).sqrt();
    let mut states = Vec::with_capacity(d * dprime);
    for n in 0..dprime {
        for m in 0..d {
            let mut cells = Vec::with_capacity(d);
            if d == dprime {
                let op = WeylOp::hat(m, n, d)?;
                for i in 0..d {
                    let (phase, row) = op.apply_basis(i);
                    cells.push((row, i, phase * amp));
                }
            } else {
                let op = WeylOp::tilde(m, n, d, dprime)?;
                for i in 0..d {
                    let (phase, col) = op.apply_basis(i);
                    cells.push((i, col, phase * amp));
                }
            }
            states.push(BipartiteState::new(d, dprime, cells)?);
        }
    }
    let variant = if d == dprime { "hat" } else { "tilde" };
    let provenance = Provenance::new()
        .with("construction", "weyl")
        .with("operator", variant)
        .with("ordering", "index = m + d*n");
    EntangledBasis::new([d, dprime], d, states, Family::Meb, provenance)
}

/// MEB of `C^d ⊗ C^d` from the unsimplified operators `W̌_{m,n}`; same
/// ordering as [`meb`].
pub fn meb_check(d: usize) -> Result<EntangledBasis> {
    if d == 0 {
        return Err(Error::InvalidDimension("d = 0".into()));
    }
    let amp = 1.0 / (d as f64).sqrt();
    let mut states = Vec::with_capacity(d * d);
    for n in 0..d {
        for m in 0..d {
            let op = WeylOp::check(m, n, d)?;
            let cells = (0..d)
                .map(|i| {
                    let (phase, row) = op.apply_basis(i);
                    (row, i, phase * amp)
                })
                .collect();
            states.push(BipartiteState::new(d, d, cells)?);
        }
    }
    let provenance = Provenance::new()
        .with("construction", "weyl")
        .with("operator", "check")
        .with("ordering", "index = m + d*n");
    EntangledBasis::new([d, d], d, states, Family::Meb, provenance)
}
