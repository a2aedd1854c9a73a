//! Entangled bases with fixed Schmidt number.
//!
//! Bipartite states of `C^d ⊗ C^d'` are handled through their `d x d'`
//! coefficient matrices, so that Schmidt numbers are matrix ranks and
//! inner products are Hilbert-Schmidt products. The crate builds maximally
//! entangled bases from Weyl operators, equal-weight and general rank-`k`
//! bases from cyclic position sequences and block tilings, lifts them to
//! GHZ-like multipartite bases, and certifies any basis from its raw
//! amplitudes.

pub mod cli;
pub mod construct;
pub mod error;
pub mod io;
pub mod isometry;
pub mod model;
pub mod multipartite;
pub mod numerics;
pub mod tiling;
pub mod verify;
pub mod weyl;

pub use error::{Error, Result};
pub use model::{BipartiteState, EntangledBasis, Family};
pub use numerics::{CMatrix, C64};
