//! States, bases and the state/coefficient-matrix correspondence.
//!
//! A bipartite state `Σ a_kl |k⟩|l'⟩` in `C^d ⊗ C^d'` is identified with the
//! `d x d'` matrix `A = [a_kl]`. Its Schmidt number is `rank(A)` and
//! `⟨ψ_A|ψ_B⟩ = Tr(A†B)`.

use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numerics::{svd, CMatrix, C64, ZERO};

/// Default threshold above which a singular value counts toward the rank.
pub const RANK_TOL: f64 = 1e-8;
/// Threshold at or below which a singular value is treated as exactly zero.
pub const ZERO_TOL: f64 = 1e-10;
/// Normalization tolerance for states built in memory.
pub const STATE_NORM_TOL: f64 = 1e-12;

/// One grid cell `(row, col)` of the `d x d'` coefficient grid.
pub type Cell = (usize, usize);

/// Normalized pure state of `C^d ⊗ C^d'`, stored sparsely.
///
/// Amplitudes are kept in row-major cell order and exact zeros are dropped,
/// so equal states have equal representations.
#[derive(Clone, Debug, PartialEq)]
pub struct BipartiteState {
    d: usize,
    dprime: usize,
    amplitudes: Vec<(usize, usize, C64)>,
}

impl BipartiteState {
    pub fn new(d: usize, dprime: usize, amplitudes: Vec<(usize, usize, C64)>) -> Result<Self> {
        Self::with_norm_tol(d, dprime, amplitudes, STATE_NORM_TOL)
    }

    pub fn with_norm_tol(
        d: usize,
        dprime: usize,
        mut amplitudes: Vec<(usize, usize, C64)>,
        tol: f64,
    ) -> Result<Self> {
        if d == 0 || dprime == 0 {
            return Err(Error::InvalidDimension(format!("{d} x {dprime}")));
        }
        for (pos, &(k, l, a)) in amplitudes.iter().enumerate() {
            if k >= d || l >= dprime {
                return Err(Error::InvalidInput(format!("cell ({k}, {l}) outside {d} x {dprime}")));
            }
            if !a.is_finite() {
                return Err(Error::NonFinite(pos));
            }
        }
        amplitudes.retain(|&(_, _, a)| a != ZERO);
        amplitudes.sort_by_key(|&(k, l, _)| (k, l));
        if amplitudes.windows(2).any(|w| (w[0].0, w[0].1) == (w[1].0, w[1].1)) {
            return Err(Error::InvalidInput("duplicate cell in amplitude list".into()));
        }
        let norm_sq: f64 = amplitudes.iter().map(|(_, _, a)| a.norm_sqr()).sum();
        if (norm_sq - 1.0).abs() > tol {
            return Err(Error::Normalization { norm_sq });
        }
        Ok(Self { d, dprime, amplitudes })
    }

    pub fn d(&self) -> usize {
        self.d
    }

    pub fn dprime(&self) -> usize {
        self.dprime
    }

    pub fn amplitudes(&self) -> &[(usize, usize, C64)] {
        &self.amplitudes
    }

    /// Dense amplitude vector, index `k * d' + l`.
    pub fn to_vector(&self) -> Vec<C64> {
        let mut v = vec![ZERO; self.d * self.dprime];
        for &(k, l, a) in &self.amplitudes {
            v[k * self.dprime + l] = a;
        }
        v
    }

    /// `(U_a ⊗ U_b)|ψ⟩`; the result is dense in general.
    pub fn apply_local(&self, ua: &CMatrix, ub: &CMatrix) -> Result<Self> {
        let a = state_to_matrix(self);
        let rotated = &(ua * &a) * &ub.transpose();
        matrix_to_state_tol(&rotated, 1e-10)
    }
}

/// `A[k][l] = a_kl`.
pub fn state_to_matrix(s: &BipartiteState) -> CMatrix {
    let mut a = CMatrix::zeros(s.d, s.dprime);
    for &(k, l, z) in &s.amplitudes {
        a.set(k, l, z);
    }
    a
}

/// Inverse of [`state_to_matrix`]; requires unit Frobenius norm within `1e-10`.
pub fn matrix_to_state(a: &CMatrix) -> Result<BipartiteState> {
    matrix_to_state_tol(a, ZERO_TOL)
}

fn matrix_to_state_tol(a: &CMatrix, tol: f64) -> Result<BipartiteState> {
    let mut amps = Vec::new();
    for k in 0..a.rows() {
        for l in 0..a.cols() {
            let z = a.get(k, l);
            if z != ZERO {
                amps.push((k, l, z));
            }
        }
    }
    BipartiteState::with_norm_tol(a.rows(), a.cols(), amps, tol)
}

/// Schmidt number and coefficients of a bipartite state.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SchmidtData {
    pub schmidt_number: usize,
    pub coefficients: Vec<f64>,
    pub tol_used: f64,
}

pub fn schmidt(s: &BipartiteState, rank_tol: f64) -> SchmidtData {
    schmidt_of_matrix(&state_to_matrix(s), rank_tol)
}

pub(crate) fn schmidt_of_matrix(a: &CMatrix, rank_tol: f64) -> SchmidtData {
    let sv = svd(a).expect("coefficient matrices are finite and non-empty");
    let coefficients: Vec<f64> = sv.singular_values.into_iter().filter(|&x| x > rank_tol).collect();
    SchmidtData { schmidt_number: coefficients.len(), coefficients, tol_used: rank_tol }
}

/// Which construction family a basis claims to belong to.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Family {
    /// Product basis (Schmidt number 1).
    Pb,
    /// Maximally entangled basis.
    Meb,
    /// Equal Schmidt coefficients `1/√k`.
    Sebk,
    /// Schmidt number `k`, coefficients unconstrained.
    Ebk,
    Custom,
}

impl Family {
    pub fn as_str(self) -> &'static str {
        match self {
            Family::Pb => "pb",
            Family::Meb => "meb",
            Family::Sebk => "sebk",
            Family::Ebk => "ebk",
            Family::Custom => "custom",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "pb" => Ok(Family::Pb),
            "meb" => Ok(Family::Meb),
            "sebk" => Ok(Family::Sebk),
            "ebk" => Ok(Family::Ebk),
            "custom" => Ok(Family::Custom),
            other => Err(Error::InvalidInput(format!("unknown family `{other}`"))),
        }
    }
}

impl fmt::Display for Family {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Free-form record of how a basis was produced. Keys are sorted so that
/// serialized output is deterministic.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Provenance(pub BTreeMap<String, String>);

impl Provenance {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn with(mut self, key: &str, value: impl Into<String>) -> Self {
        self.0.insert(key.to_string(), value.into());
        self
    }

    pub fn insert(&mut self, key: &str, value: impl Into<String>) {
        self.0.insert(key.to_string(), value.into());
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        self.0.get(key).map(String::as_str)
    }
}

/// A complete orthonormal family of `d·d'` states with a target Schmidt number.
#[derive(Clone, Debug, PartialEq)]
pub struct EntangledBasis {
    pub dims: [usize; 2],
    pub k: usize,
    pub states: Vec<BipartiteState>,
    pub family: Family,
    pub provenance: Provenance,
}

impl EntangledBasis {
    pub fn new(
        dims: [usize; 2],
        k: usize,
        states: Vec<BipartiteState>,
        family: Family,
        provenance: Provenance,
    ) -> Result<Self> {
        let [d, dprime] = dims;
        if states.len() != d * dprime {
            return Err(Error::InvalidInput(format!(
                "{} states supplied for a {d} x {dprime} basis",
                states.len()
            )));
        }
        if states.iter().any(|s| s.d != d || s.dprime != dprime) {
            return Err(Error::InvalidInput("state dimensions disagree with basis dimensions".into()));
        }
        Ok(Self { dims, k, states, family, provenance })
    }

    pub fn matrices(&self) -> Vec<CMatrix> {
        self.states.iter().map(state_to_matrix).collect()
    }

    pub fn transpose(&self) -> Self {
        let [d, dprime] = self.dims;
        let states = self
            .states
            .iter()
            .map(|s| BipartiteState {
                d: dprime,
                dprime: d,
                amplitudes: {
                    let mut a: Vec<_> = s.amplitudes.iter().map(|&(k, l, z)| (l, k, z)).collect();
                    a.sort_by_key(|&(k, l, _)| (k, l));
                    a
                },
            })
            .collect();
        Self {
            dims: [dprime, d],
            k: self.k,
            states,
            family: self.family,
            provenance: self.provenance.clone(),
        }
    }
}

/// An ordering of every cell of a `d x d'` grid, each exactly once.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PositionSequence {
    d: usize,
    dprime: usize,
    positions: Vec<Cell>,
}

impl PositionSequence {
    pub fn new(d: usize, dprime: usize, positions: Vec<Cell>) -> Result<Self> {
        if positions.len() != d * dprime {
            return Err(Error::InvalidInput("position sequence does not cover the grid".into()));
        }
        let mut seen = vec![false; d * dprime];
        for &(r, c) in &positions {
            if r >= d || c >= dprime || std::mem::replace(&mut seen[r * dprime + c], true) {
                return Err(Error::InvalidInput(format!("cell ({r}, {c}) out of range or repeated")));
            }
        }
        Ok(Self { d, dprime, positions })
    }

    pub fn positions(&self) -> &[Cell] {
        &self.positions
    }

    pub fn dims(&self) -> (usize, usize) {
        (self.d, self.dprime)
    }
}
