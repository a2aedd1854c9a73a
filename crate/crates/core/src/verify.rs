//! Certification of bases from raw amplitudes.
//!
//! Nothing about how a basis was built is trusted: orthonormality, Schmidt
//! numbers and coefficients are recomputed from the state vectors.

use std::fmt;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::model::{EntangledBasis, Family};
use crate::multipartite::{ghz_check, marginal_spectrum, GhzVerdict, MultipartiteBasis};
use crate::numerics::{gram, svd, CMatrix, C64};

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct VerifyTolerances {
    /// Largest allowed `|G − I|` entry.
    pub gram: f64,
    /// Singular values above this count toward the Schmidt number; the
    /// `(k+1)`-th must also be below `rank · 1e-2`.
    pub rank: f64,
    /// Largest allowed `|σ − 1/√k|` for the equal-coefficient classes.
    pub coefficient: f64,
}

impl Default for VerifyTolerances {
    fn default() -> Self {
        Self { gram: 1e-10, rank: 1e-8, coefficient: 1e-10 }
    }
}

impl VerifyTolerances {
    /// Upper edge of the zero band for singular values.
    pub fn zero_band(&self) -> f64 {
        self.rank * 1e-2
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Classification {
    Invalid,
    Pb,
    Ebk,
    Sebk,
    Meb,
}

impl Classification {
    pub fn as_str(self) -> &'static str {
        match self {
            Classification::Invalid => "invalid",
            Classification::Pb => "pb",
            Classification::Ebk => "ebk",
            Classification::Sebk => "sebk",
            Classification::Meb => "meb",
        }
    }

    /// Whether a basis with this classification is a member of `claimed`.
    pub fn satisfies(self, claimed: Family) -> bool {
        use Classification as C;
        match (self, claimed) {
            (C::Invalid, _) => false,
            (_, Family::Custom | Family::Ebk) => true,
            (C::Pb, Family::Pb | Family::Sebk) => true,
            (C::Sebk | C::Meb, Family::Sebk) => true,
            (C::Meb, Family::Meb) => true,
            _ => false,
        }
    }
}

impl fmt::Display for Classification {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum FailureKind {
    Count,
    Gram,
    SchmidtNumber,
    AmbiguousRank,
    NotGhz,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Failure {
    pub kind: FailureKind,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub state: Option<usize>,
    pub message: String,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct StateReport {
    pub index: usize,
    pub schmidt_number: usize,
    /// Schmidt coefficients (bipartite) or GHZ weights (multipartite) above
    /// the rank tolerance, non-increasing.
    pub coefficients: Vec<f64>,
    /// `max |σ − 1/√k|` over the coefficients.
    pub max_deviation: f64,
    /// Some singular value lies between the zero band and the rank tolerance.
    pub ambiguous: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct VerificationReport {
    pub dims: Vec<usize>,
    pub claimed_k: usize,
    pub state_count: usize,
    pub gram_max_deviation: f64,
    pub per_state: Vec<StateReport>,
    pub classification: Classification,
    pub failures: Vec<Failure>,
    pub tolerances: VerifyTolerances,
}

impl VerificationReport {
    pub fn passed(&self) -> bool {
        self.classification != Classification::Invalid
    }

    /// Worst `|σ − 1/√k|` over all states.
    pub fn max_coefficient_deviation(&self) -> f64 {
        self.per_state.iter().map(|s| s.max_deviation).fold(0.0, f64::max)
    }

    /// Plain-text rendering.
    pub fn render_text(&self) -> String {
        let dims: Vec<String> = self.dims.iter().map(ToString::to_string).collect();
        let mut out = format!(
            "dims {}  k {}  states {}\ngram max deviation {:.3e}\nmax coefficient deviation {:.3e}\nclassification {}\n",
            dims.join("x"),
            self.claimed_k,
            self.state_count,
            self.gram_max_deviation,
            self.max_coefficient_deviation(),
            self.classification
        );
        if self.failures.is_empty() {
            out.push_str("no failures\n");
        } else {
            out.push_str(&format!("{} failure(s):\n", self.failures.len()));
            for f in &self.failures {
                match f.state {
                    Some(i) => out.push_str(&format!("  state {i}: {}\n", f.message)),
                    None => out.push_str(&format!("  {}\n", f.message)),
                }
            }
        }
        out
    }
}

fn gram_deviation(vectors: &[Vec<C64>]) -> Result<f64> {
    if vectors.is_empty() {
        return Ok(0.0);
    }
    let g = gram(vectors)?;
    Ok(g.max_abs_diff(&CMatrix::identity(vectors.len())))
}

fn check_lengths(vectors: &[Vec<C64>], dims: &[usize]) -> Result<()> {
    if dims.is_empty() || dims.contains(&0) {
        return Err(Error::InvalidDimension(format!("{dims:?}")));
    }
    let total: usize = dims.iter().product();
    if let Some(i) = vectors.iter().position(|v| v.len() != total) {
        return Err(Error::InvalidInput(format!(
            "state {i} has {} amplitudes, dims {dims:?} need {total}",
            vectors[i].len()
        )));
    }
    if let Some(i) = vectors.iter().position(|v| v.iter().any(|z| !z.is_finite())) {
        return Err(Error::InvalidInput(format!("state {i} has a non-finite amplitude")));
    }
    Ok(())
}

/// Rank test on a non-increasing spectrum. Returns the state report and any
/// failure.
fn rank_report(index: usize, spectrum: &[f64], k: usize, tol: &VerifyTolerances) -> (StateReport, Option<Failure>) {
    let schmidt_number = spectrum.iter().filter(|&&x| x > tol.rank).count();
    let coefficients: Vec<f64> = spectrum[..schmidt_number].to_vec();
    let target = 1.0 / (k.max(1) as f64).sqrt();
    let max_deviation = coefficients.iter().map(|x| (x - target).abs()).fold(0.0, f64::max);
    let ambiguous = spectrum.iter().any(|&x| x > tol.zero_band() && x <= tol.rank);
    let report = StateReport { index, schmidt_number, coefficients, max_deviation, ambiguous };
    let failure = if schmidt_number != k {
        Some(Failure {
            kind: FailureKind::SchmidtNumber,
            state: Some(index),
            message: format!("Schmidt number {schmidt_number}, expected {k}"),
        })
    } else if ambiguous {
        let next = spectrum.get(k).copied().unwrap_or(0.0);
        Some(Failure {
            kind: FailureKind::AmbiguousRank,
            state: Some(index),
            message: format!("singular value {next:.3e} lies between {:.1e} and {:.1e}", tol.zero_band(), tol.rank),
        })
    } else {
        None
    };
    (report, failure)
}

fn classify(failures: &[Failure], per_state: &[StateReport], k: usize, tol: &VerifyTolerances) -> Classification {
    if !failures.is_empty() {
        Classification::Invalid
    } else if k == 1 {
        Classification::Pb
    } else if per_state.iter().all(|s| s.max_deviation <= tol.coefficient) {
        Classification::Sebk
    } else {
        Classification::Ebk
    }
}

fn count_failure(found: usize, expected: usize) -> Option<Failure> {
    (found != expected).then(|| Failure {
        kind: FailureKind::Count,
        state: None,
        message: format!("{found} states, a basis needs {expected}"),
    })
}

fn gram_failure(dev: f64, tol: &VerifyTolerances) -> Option<Failure> {
    (dev > tol.gram).then(|| Failure {
        kind: FailureKind::Gram,
        state: None,
        message: format!("Gram matrix deviates from the identity by {dev:.3e} (tolerance {:.1e})", tol.gram),
    })
}

/// Verifies dense state vectors of `C^d ⊗ C^d'` (index `i·d' + j`) against
/// Schmidt number `k`.
pub fn verify_states(dims: [usize; 2], states: &[Vec<C64>], k: usize, tol: &VerifyTolerances) -> Result<VerificationReport> {
    check_lengths(states, &dims)?;
    let [d, dp] = dims;
    let mut failures: Vec<Failure> = count_failure(states.len(), d * dp).into_iter().collect();
    let gram_max_deviation = gram_deviation(states)?;
    failures.extend(gram_failure(gram_max_deviation, tol));
    let mut per_state = Vec::with_capacity(states.len());
    for (i, v) in states.iter().enumerate() {
        let a = CMatrix::new(d, dp, v.clone())?;
        let spectrum = svd(&a)?.singular_values;
        let (report, failure) = rank_report(i, &spectrum, k, tol);
        per_state.push(report);
        failures.extend(failure);
    }
    let mut classification = classify(&failures, &per_state, k, tol);
    if classification == Classification::Sebk && k == d.min(dp) {
        classification = Classification::Meb;
    }
    Ok(VerificationReport {
        dims: dims.to_vec(),
        claimed_k: k,
        state_count: states.len(),
        gram_max_deviation,
        per_state,
        classification,
        failures,
        tolerances: *tol,
    })
}

pub fn verify_basis(basis: &EntangledBasis, k: usize, tol: &VerifyTolerances) -> Result<VerificationReport> {
    if basis.states.iter().any(|s| [s.d(), s.dprime()] != basis.dims) {
        return Err(Error::InvalidInput("states do not share the basis dimensions".into()));
    }
    let vectors: Vec<Vec<C64>> = basis.states.iter().map(|s| s.to_vector()).collect();
    verify_states(basis.dims, &vectors, k, tol)
}

/// Verifies dense `N`-partite tensors (party 1 most significant): count,
/// Gram matrix, a GHZ-like decomposition with `k` terms per state, and the
/// weights for the equal-coefficient class. Two-party input is delegated
/// to [`verify_states`].
pub fn verify_tensors(dims: &[usize], tensors: &[Vec<C64>], k: usize, tol: &VerifyTolerances) -> Result<VerificationReport> {
    if dims.len() == 2 {
        return verify_states([dims[0], dims[1]], tensors, k, tol);
    }
    check_lengths(tensors, dims)?;
    let total: usize = dims.iter().product();
    let mut failures: Vec<Failure> = count_failure(tensors.len(), total).into_iter().collect();
    let gram_max_deviation = gram_deviation(tensors)?;
    failures.extend(gram_failure(gram_max_deviation, tol));
    let mut per_state = Vec::with_capacity(tensors.len());
    for (i, t) in tensors.iter().enumerate() {
        let spectrum = marginal_spectrum(t, dims, 0)?;
        let (mut report, failure) = rank_report(i, &spectrum, k, tol);
        if let Some(f) = failure {
            failures.push(f);
        } else {
            match ghz_check(t, dims, k, tol.rank)? {
                GhzVerdict::Ghz(state) => {
                    let target = 1.0 / (k as f64).sqrt();
                    report.coefficients = state.weights();
                    report.max_deviation = report.coefficients.iter().map(|x| (x - target).abs()).fold(0.0, f64::max);
                }
                GhzVerdict::Failed(why) => failures.push(Failure {
                    kind: FailureKind::NotGhz,
                    state: Some(i),
                    message: why.to_string(),
                }),
            }
        }
        per_state.push(report);
    }
    let classification = classify(&failures, &per_state, k, tol);
    Ok(VerificationReport {
        dims: dims.to_vec(),
        claimed_k: k,
        state_count: tensors.len(),
        gram_max_deviation,
        per_state,
        classification,
        failures,
        tolerances: *tol,
    })
}

pub fn verify_multipartite(basis: &MultipartiteBasis, k: usize, tol: &VerifyTolerances) -> Result<VerificationReport> {
    verify_tensors(&basis.dims, &basis.tensors(), k, tol)
}
