//! GHZ-like multipartite bases.
//!
//! A state `Σ_j λ_j |e_j^(1)⟩…|e_j^(N)⟩` with orthonormal `{e_j^(l)}` for
//! every party is stored in this term form. A bipartite basis is converted
//! to term form, then lifted one party at a time: term `l` of state `i`
//! gains the vector `|(j + l) mod d_next⟩`, giving states `(i, j)`.

use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};
use rand_distr::StandardNormal;

use crate::construct::{self, ConstructionRequest};
use crate::error::{Error, Result};
use crate::isometry::{CoefficientSource, Field};
use crate::model::{BipartiteState, EntangledBasis, Family, Provenance};
use crate::numerics::{inner, norm, svd, CMatrix, C64, ZERO};

const WEIGHT_SUM_TOL: f64 = 1e-12;
const ORTHONORMAL_TOL: f64 = 1e-10;
/// Contraction vectors tried when separating party 2 from the rest.
const CONTRACTION_TRIALS: u64 = 4;

#[derive(Clone, Debug, PartialEq)]
pub struct ProductTerm {
    pub weight: f64,
    /// One unit vector per party.
    pub factors: Vec<Vec<C64>>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct MultipartiteState {
    dims: Vec<usize>,
    terms: Vec<ProductTerm>,
}

impl MultipartiteState {
    pub fn new(dims: Vec<usize>, terms: Vec<ProductTerm>) -> Result<Self> {
        if dims.len() < 2 || dims.contains(&0) {
            return Err(Error::InvalidDimension(format!("{dims:?}")));
        }
        if terms.is_empty() {
            return Err(Error::InvalidInput("a state needs at least one term".into()));
        }
        for t in &terms {
            if !(t.weight > 0.0) || !t.weight.is_finite() {
                return Err(Error::InvalidInput(format!("term weight {} is not positive", t.weight)));
            }
            if t.factors.len() != dims.len() || t.factors.iter().zip(&dims).any(|(f, &d)| f.len() != d) {
                return Err(Error::InvalidInput("term factors do not match the party dimensions".into()));
            }
        }
        let weight_sq: f64 = terms.iter().map(|t| t.weight * t.weight).sum();
        if (weight_sq - 1.0).abs() > WEIGHT_SUM_TOL {
            return Err(Error::Normalization { norm_sq: weight_sq });
        }
        for party in 0..dims.len() {
            if let Some(a) = terms.iter().position(|t| (norm(&t.factors[party]) - 1.0).abs() > ORTHONORMAL_TOL) {
                return Err(Error::InvalidInput(format!("party {party} vector of term {a} is not a unit vector")));
            }
        }
        if !party_orthonormal(&terms, 0, ORTHONORMAL_TOL) {
            return Err(Error::InvalidInput("party-1 vectors are not orthonormal".into()));
        }
        Ok(Self { dims, terms })
    }

    /// Whether every party's vectors are orthonormal, i.e. the terms are a
    /// GHZ-like decomposition.
    pub fn is_ghz_form(&self) -> bool {
        (0..self.dims.len()).all(|p| party_orthonormal(&self.terms, p, ORTHONORMAL_TOL))
    }

    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    pub fn terms(&self) -> &[ProductTerm] {
        &self.terms
    }

    /// Number of product terms.
    pub fn k(&self) -> usize {
        self.terms.len()
    }

    pub fn weights(&self) -> Vec<f64> {
        self.terms.iter().map(|t| t.weight).collect()
    }

    /// Dense amplitudes, party 1 most significant.
    pub fn to_tensor(&self) -> Vec<C64> {
        let mut out = vec![ZERO; self.dims.iter().product()];
        for t in &self.terms {
            let mut prod = vec![C64::new(t.weight, 0.0)];
            for f in &t.factors {
                prod = crate::numerics::kron_vec(&prod, f);
            }
            for (o, p) in out.iter_mut().zip(prod) {
                *o += p;
            }
        }
        out
    }

    /// Reorders parties: party `t` of the result is party `order[t]` here.
    pub fn permute_parties(&self, order: &[usize]) -> Result<Self> {
        check_permutation(order, self.dims.len())?;
        let dims = order.iter().map(|&p| self.dims[p]).collect();
        let terms = self
            .terms
            .iter()
            .map(|t| ProductTerm { weight: t.weight, factors: order.iter().map(|&p| t.factors[p].clone()).collect() })
            .collect();
        Ok(Self { dims, terms })
    }
}

fn party_orthonormal(terms: &[ProductTerm], party: usize, tol: f64) -> bool {
    (0..terms.len()).all(|a| {
        (0..terms.len()).all(|b| {
            let g = inner(&terms[a].factors[party], &terms[b].factors[party]);
            (g - C64::new(if a == b { 1.0 } else { 0.0 }, 0.0)).norm() <= tol
        })
    })
}

fn check_permutation(order: &[usize], n: usize) -> Result<()> {
    let mut seen = vec![false; n];
    if order.len() != n || order.iter().any(|&p| p >= n || std::mem::replace(&mut seen[p], true)) {
        return Err(Error::InvalidInput(format!("{order:?} is not a permutation of 0..{n}")));
    }
    Ok(())
}

#[derive(Clone, Debug, PartialEq)]
pub struct MultipartiteBasis {
    pub dims: Vec<usize>,
    pub k: usize,
    pub states: Vec<MultipartiteState>,
    pub family: Family,
    pub provenance: Provenance,
}

impl MultipartiteBasis {
    pub fn new(dims: Vec<usize>, k: usize, states: Vec<MultipartiteState>, family: Family, provenance: Provenance) -> Result<Self> {
        let total: usize = dims.iter().product();
        if states.len() != total {
            return Err(Error::InvalidInput(format!("{} states for a space of dimension {total}", states.len())));
        }
        if let Some(i) = states.iter().position(|s| s.dims != dims || s.k() != k) {
            return Err(Error::InvalidInput(format!("state {i} does not have dims {dims:?} and {k} terms")));
        }
        Ok(Self { dims, k, states, family, provenance })
    }

    pub fn tensors(&self) -> Vec<Vec<C64>> {
        self.states.iter().map(MultipartiteState::to_tensor).collect()
    }

    /// Term form of a bipartite basis.
    ///
    /// The support of each state splits into connected components (cells
    /// linked by a shared row or column). A component inside one column is
    /// one term; any other component gives one term per row. Terms follow
    /// the smallest cell of their component. Splitting by rows keeps the
    /// party-1 vectors orthonormal and lines terms up across states that
    /// share a support, which is what lifting needs; the party-2 vectors are
    /// orthonormal only when every component is a cell, row or column.
    pub fn from_bipartite(basis: &EntangledBasis) -> Result<Self> {
        let states = basis.states.iter().map(bipartite_terms).collect::<Result<Vec<_>>>()?;
        let family = match basis.family {
            Family::Meb => Family::Sebk,
            f => f,
        };
        let mut provenance = basis.provenance.clone();
        provenance.insert("lift_chain", dims_label(&basis.dims));
        Self::new(basis.dims.to_vec(), basis.k, states, family, provenance)
    }
}

fn dims_label(dims: &[usize]) -> String {
    dims.iter().map(ToString::to_string).collect::<Vec<_>>().join("x")
}

fn unit(d: usize, i: usize) -> Vec<C64> {
    let mut v = vec![ZERO; d];
    v[i] = C64::new(1.0, 0.0);
    v
}

fn bipartite_terms(s: &BipartiteState) -> Result<MultipartiteState> {
    let (d, dp) = (s.d(), s.dprime());
    let amps = s.amplitudes();
    let n = amps.len();
    let mut parent: Vec<usize> = (0..n).collect();
    fn find(parent: &mut [usize], x: usize) -> usize {
        let mut r = x;
        while parent[r] != r {
            r = parent[r];
        }
        parent[x] = r;
        r
    }
    for a in 0..n {
        for b in a + 1..n {
            if amps[a].0 == amps[b].0 || amps[a].1 == amps[b].1 {
                let (ra, rb) = (find(&mut parent, a), find(&mut parent, b));
                parent[ra.max(rb)] = ra.min(rb);
            }
        }
    }
    // amplitudes are row-major, so the first member of a component is its smallest cell
    let mut components: Vec<Vec<usize>> = Vec::new();
    let mut slot = vec![usize::MAX; n];
    for i in 0..n {
        let root = find(&mut parent, i);
        if slot[root] == usize::MAX {
            slot[root] = components.len();
            components.push(Vec::new());
        }
        components[slot[root]].push(i);
    }

    let mut terms = Vec::new();
    for comp in components {
        let cells: Vec<(usize, usize, C64)> = comp.iter().map(|&i| amps[i]).collect();
        if cells.iter().all(|c| c.1 == cells[0].1) && cells.len() > 1 {
            let weight = cells.iter().map(|c| c.2.norm_sqr()).sum::<f64>().sqrt();
            let mut left = vec![ZERO; d];
            for &(k, _, a) in &cells {
                left[k] = a / weight;
            }
            terms.push(ProductTerm { weight, factors: vec![left, unit(dp, cells[0].1)] });
            continue;
        }
        // one term per row; cells are row-major within the component
        for row in cells.chunk_by(|a, b| a.0 == b.0) {
            let weight = row.iter().map(|c| c.2.norm_sqr()).sum::<f64>().sqrt();
            let phase = row[0].2 / row[0].2.norm();
            let mut right = vec![ZERO; dp];
            for &(_, l, a) in row {
                right[l] = a / (phase * weight);
            }
            let left: Vec<C64> = unit(d, row[0].0).into_iter().map(|z| z * phase).collect();
            terms.push(ProductTerm { weight, factors: vec![left, right] });
        }
    }
    MultipartiteState::new(vec![d, dp], terms)
}

/// Adds one party of dimension `d_next`; output state `(i, j)` sits at
/// index `i·d_next + j`.
pub fn lift(basis: &MultipartiteBasis, d_next: usize) -> Result<MultipartiteBasis> {
    if d_next == 0 || basis.k > d_next {
        return Err(Error::InvalidDimension(format!(
            "cannot lift {} terms into a party of dimension {d_next}",
            basis.k
        )));
    }
    let mut dims = basis.dims.clone();
    dims.push(d_next);
    let mut states = Vec::with_capacity(basis.states.len() * d_next);
    for s in &basis.states {
        for j in 0..d_next {
            let terms = s
                .terms
                .iter()
                .enumerate()
                .map(|(l, t)| {
                    let mut factors = t.factors.clone();
                    factors.push(unit(d_next, (j + l) % d_next));
                    ProductTerm { weight: t.weight, factors }
                })
                .collect();
            states.push(MultipartiteState { dims: dims.clone(), terms });
        }
    }
    let mut provenance = basis.provenance.clone();
    let chain = provenance.get("lift_chain").map_or_else(|| dims_label(&basis.dims), str::to_string);
    provenance.insert("lift_chain", format!("{chain} -> {}", dims_label(&dims)));
    MultipartiteBasis::new(dims, basis.k, states, basis.family, provenance)
}

/// First pair `(p, q)`, `p < q` in lexicographic order, that can seed a
/// basis of the requested family.
pub fn seed_pair(dims: &[usize], k: usize, family: Family) -> Option<(usize, usize)> {
    let n = dims.len();
    (0..n)
        .flat_map(|p| (p + 1..n).map(move |q| (p, q)))
        .find(|&(p, q)| {
            let fits = k <= dims[p].min(dims[q]);
            match family {
                Family::Sebk | Family::Meb => fits && (dims[p] * dims[q]) % k == 0,
                _ => fits,
            }
        })
}

/// `N`-partite basis: a bipartite seed on the first admissible pair, lifted
/// over the other parties in ascending order, then relabelled to the
/// requested party order.
pub fn generate_npartite(
    dims: &[usize],
    k: usize,
    family: Family,
    coeffs: &CoefficientSource,
    field: Field,
) -> Result<MultipartiteBasis> {
    if dims.len() < 2 || dims.contains(&0) {
        return Err(Error::InvalidDimension(format!("{dims:?}")));
    }
    let min = *dims.iter().min().expect("non-empty");
    if k == 0 || k > min {
        return Err(Error::InvalidInput(format!("k = {k} must satisfy 1 <= k <= min(dims) = {min}")));
    }
    let seed_family = match family {
        Family::Custom => return Err(Error::InvalidInput("cannot generate a custom family".into())),
        Family::Pb if k != 1 => return Err(Error::InvalidInput(format!("a product basis has k = 1, not {k}"))),
        Family::Meb if k != min => {
            return Err(Error::InvalidInput(format!("a maximally entangled basis of {dims:?} has k = {min}")))
        }
        Family::Meb => Family::Sebk,
        f => f,
    };
    let Some((p, q)) = seed_pair(dims, k, seed_family) else {
        return Err(Error::Unsupported(format!(
            "no pair of parties in {dims:?} has dimension product divisible by k = {k}, so there is no \
             equal-coefficient seed; {}",
            construct::sebk_unsupported_reason(dims[0], dims[1], k)
        )));
    };
    let req = ConstructionRequest::new(dims[p], dims[q], k, seed_family).with_coeffs(coeffs.clone()).with_field(field);
    let seed = construct::generate(&req)?;
    let mut basis = MultipartiteBasis::from_bipartite(&seed)?;
    let mut built = vec![p, q];
    for party in (0..dims.len()).filter(|&x| x != p && x != q) {
        basis = lift(&basis, dims[party])?;
        built.push(party);
    }
    // party t of the output is built[position of t]
    let order: Vec<usize> = (0..dims.len()).map(|t| built.iter().position(|&b| b == t).expect("every party built")).collect();
    let states = basis.states.iter().map(|s| s.permute_parties(&order)).collect::<Result<Vec<_>>>()?;
    let mut provenance = basis.provenance;
    provenance.insert("seed_pair", format!("{p},{q}"));
    provenance.insert("build_order", built.iter().map(ToString::to_string).collect::<Vec<_>>().join(","));
    provenance.insert("party_permutation", order.iter().map(ToString::to_string).collect::<Vec<_>>().join(","));
    let family = match family {
        Family::Meb => Family::Sebk,
        _ => basis.family,
    };
    MultipartiteBasis::new(dims.to_vec(), k, states, family, provenance)
}

/// `d_party x (rest)` unfolding of a dense tensor, remaining parties in order.
pub fn unfolding(tensor: &[C64], dims: &[usize], party: usize) -> Result<CMatrix> {
    let total: usize = dims.iter().product();
    if tensor.len() != total || party >= dims.len() {
        return Err(Error::InvalidInput(format!("tensor of length {} does not match dims {dims:?}", tensor.len())));
    }
    let stride: usize = dims[party + 1..].iter().product();
    let dl = dims[party];
    let rest = total / dl;
    let mut m = CMatrix::zeros(dl, rest);
    for (idx, &z) in tensor.iter().enumerate() {
        let i = (idx / stride) % dl;
        let high = idx / (stride * dl);
        let low = idx % stride;
        m.set(i, high * stride + low, z);
    }
    Ok(m)
}

/// Singular values of the party-`l` unfolding, non-increasing.
pub fn marginal_spectrum(tensor: &[C64], dims: &[usize], party: usize) -> Result<Vec<f64>> {
    Ok(svd(&unfolding(tensor, dims, party)?)?.singular_values)
}

/// Why a state failed the GHZ-form test.
#[derive(Clone, Debug, PartialEq)]
pub enum GhzFailure {
    /// The party-1 unfolding has the wrong rank.
    Rank { expected: usize, found: usize },
    /// The right Schmidt vectors of the party-1 split are not products.
    NotProduct { residual: f64 },
}

impl std::fmt::Display for GhzFailure {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            GhzFailure::Rank { expected, found } => write!(f, "party-1 rank {found}, expected {expected}"),
            GhzFailure::NotProduct { residual } => {
                write!(f, "right Schmidt vectors are not products (residual {residual:.3e})")
            }
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum GhzVerdict {
    Ghz(MultipartiteState),
    Failed(GhzFailure),
}

/// Recovers the GHZ-like form `Σ_j λ_j |e_j^(1)⟩…|e_j^(N)⟩` of a dense state.
///
/// The party-1 unfolding must have rank `k`. Party 1 is then contracted
/// with a generic vector, which gives the `k` terms distinct weights, so
/// the party-2 split of the contraction recovers `e_j^(2)` and the rest
/// `e_j^(3..N)`; the rest is checked to be a product one party at a time.
/// Party-1 vectors follow by projection and the reconstruction must match
/// the state within `tol`. Terms are returned with `λ` non-increasing.
pub fn ghz_check(tensor: &[C64], dims: &[usize], k: usize, tol: f64) -> Result<GhzVerdict> {
    if dims.len() < 2 || dims.contains(&0) {
        return Err(Error::InvalidDimension(format!("{dims:?}")));
    }
    let m1 = unfolding(tensor, dims, 0)?;
    let dec = svd(&m1)?;
    let found = dec.rank(tol);
    if found != k {
        return Ok(GhzVerdict::Failed(GhzFailure::Rank { expected: k, found }));
    }
    if dims.len() == 2 {
        let terms = (0..k)
            .map(|j| ProductTerm {
                weight: dec.singular_values[j],
                factors: vec![dec.u.column(j), dec.v.column(j).iter().map(|z| z.conj()).collect()],
            })
            .collect();
        return finish(dims, terms, tol, 0.0);
    }

    let (d1, d2) = (dims[0], dims[1]);
    let rest: usize = dims[2..].iter().product();
    let mut best: Option<(f64, Vec<Vec<C64>>)> = None;
    for trial in 0..CONTRACTION_TRIALS {
        let mut rng = StdRng::seed_from_u64(0x6768_7a00 + trial);
        let w: Vec<C64> = (0..d1).map(|_| C64::new(rng.sample(StandardNormal), rng.sample(StandardNormal))).collect();
        let phi = CMatrix::from_fn(d2, rest, |i2, r| (0..d1).map(|i1| w[i1] * tensor[(i1 * d2 + i2) * rest + r]).sum());
        let sub = svd(&phi)?;
        let sv = &sub.singular_values;
        let gap = (0..k)
            .map(|j| {
                let next = sv.get(j + 1).copied().unwrap_or(0.0);
                let prev = if j == 0 { f64::INFINITY } else { sv[j - 1] - sv[j] };
                (sv[j] - next).min(prev)
            })
            .fold(f64::INFINITY, f64::min)
            / sv[0].max(f64::MIN_POSITIVE);
        if best.as_ref().is_none_or(|(g, _)| gap > *g) {
            // f_j = e_j^(2) ⊗ conj(v_j)
            let fs = (0..k)
                .map(|j| {
                    let right: Vec<C64> = sub.v.column(j).iter().map(|z| z.conj()).collect();
                    crate::numerics::kron_vec(&sub.u.column(j), &right)
                })
                .collect();
            best = Some((gap, fs));
        }
    }
    let (_, fs) = best.expect("at least one trial");

    let mut terms = Vec::with_capacity(k);
    let mut approx = vec![ZERO; tensor.len()];
    let block = d2 * rest;
    for f in &fs {
        let a: Vec<C64> = (0..d1).map(|i1| inner(f, &tensor[i1 * block..(i1 + 1) * block])).collect();
        let weight = norm(&a);
        for i1 in 0..d1 {
            for (t, fz) in f.iter().enumerate() {
                approx[i1 * block + t] += a[i1] * fz;
            }
        }
        let mut factors = vec![a.iter().map(|z| z / weight.max(f64::MIN_POSITIVE)).collect::<Vec<_>>()];
        match product_factors(f, &dims[1..], tol) {
            Some(rest_factors) => factors.extend(rest_factors),
            None => return Ok(GhzVerdict::Failed(GhzFailure::NotProduct { residual: f64::NAN })),
        }
        terms.push(ProductTerm { weight, factors });
    }
    let residual = tensor.iter().zip(&approx).map(|(x, y)| (x - y).norm_sqr()).sum::<f64>().sqrt();
    if residual > tol {
        return Ok(GhzVerdict::Failed(GhzFailure::NotProduct { residual }));
    }
    finish(dims, terms, tol, residual)
}

fn finish(dims: &[usize], mut terms: Vec<ProductTerm>, tol: f64, residual: f64) -> Result<GhzVerdict> {
    terms.sort_by(|a, b| b.weight.total_cmp(&a.weight));
    let total = terms.iter().map(|t| t.weight * t.weight).sum::<f64>().sqrt();
    for t in &mut terms {
        t.weight /= total;
    }
    let orthonormal = (0..dims.len()).all(|party| party_orthonormal(&terms, party, tol.max(ORTHONORMAL_TOL)));
    if !orthonormal {
        return Ok(GhzVerdict::Failed(GhzFailure::NotProduct { residual }));
    }
    Ok(GhzVerdict::Ghz(MultipartiteState { dims: dims.to_vec(), terms }))
}

/// Splits a unit vector into one factor per party, or `None` if it is not a
/// product within `tol`.
fn product_factors(v: &[C64], dims: &[usize], tol: f64) -> Option<Vec<Vec<C64>>> {
    if dims.len() == 1 {
        return Some(vec![v.to_vec()]);
    }
    let rest: usize = dims[1..].iter().product();
    let m = CMatrix::from_fn(dims[0], rest, |i, r| v[i * rest + r]);
    let dec = svd(&m).ok()?;
    if dec.singular_values.get(1).copied().unwrap_or(0.0) > tol {
        return None;
    }
    let scale = dec.singular_values[0];
    let first: Vec<C64> = dec.u.column(0).iter().map(|z| z * scale).collect();
    let tail: Vec<C64> = dec.v.column(0).iter().map(|z| z.conj()).collect();
    let mut out = vec![first];
    out.extend(product_factors(&tail, &dims[1..], tol)?);
    Some(out)
}
