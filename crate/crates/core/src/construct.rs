//! Bipartite basis generation.
//!
//! When `k | d·d'` the grid is walked in the γ order (main diagonal first,
//! then the wrapped diagonals `(r, (t + r) mod d')`) and cut into runs of `k`
//! cells. Each run has distinct rows and distinct columns, so any `k`
//! nonzero amplitudes on it give a Schmidt-rank-`k` state; the columns of a
//! `k x k` isometry supply `k` orthonormal states per run.
//!
//! Otherwise the grid is decomposed and tiled (see [`crate::tiling`]).

use crate::error::{Error, Result};
use crate::isometry::{no_zero_entries, CoefficientSource, Field, Isometry};
use crate::model::{BipartiteState, Cell, EntangledBasis, Family, PositionSequence, Provenance};
use crate::numerics::{C64, ONE};
use crate::tiling;
use crate::weyl;

/// Zero threshold for construction coefficients.
pub(crate) const COEFF_ZERO_TOL: f64 = 1e-12;

#[derive(Clone, Debug, PartialEq)]
pub struct ConstructionRequest {
    pub d: usize,
    pub dprime: usize,
    pub k: usize,
    pub family: Family,
    pub coeffs: CoefficientSource,
    pub field: Field,
}

impl ConstructionRequest {
    pub fn new(d: usize, dprime: usize, k: usize, family: Family) -> Self {
        Self { d, dprime, k, family, coeffs: CoefficientSource::Dft, field: Field::Complex }
    }

    pub fn with_coeffs(mut self, coeffs: CoefficientSource) -> Self {
        self.coeffs = coeffs;
        self
    }

    pub fn with_field(mut self, field: Field) -> Self {
        self.field = field;
        self
    }

    fn validate(&self) -> Result<()> {
        let lo = self.d.min(self.dprime);
        if lo == 0 {
            return Err(Error::InvalidDimension(format!("{} x {}", self.d, self.dprime)));
        }
        if self.k == 0 || self.k > lo {
            return Err(Error::InvalidInput(format!(
                "k = {} must satisfy 1 <= k <= min(d, d') = {lo}",
                self.k
            )));
        }
        Ok(())
    }
}

/// γ ordering of the `d x d'` grid (`d ≤ d'`): position `i < d` is `(i, i)`,
/// position `t·d + r` is `(r, (t + r) mod d')`.
pub fn gamma_sequence(d: usize, dprime: usize) -> Result<PositionSequence> {
    if d > dprime {
        return Err(Error::DimensionOrder { d, dprime });
    }
    let positions = (0..d * dprime).map(|i| gamma(i, d, dprime)).collect();
    PositionSequence::new(d, dprime, positions)
}

fn gamma(i: usize, d: usize, dprime: usize) -> Cell {
    let (t, r) = (i / d, i % d);
    (r, (t + r) % dprime)
}

/// Sparse cell lists for the cyclic construction on a `rows x cols` grid,
/// transposing internally when `rows > cols`. State `(m, n)` sits at index
/// `m + k·n` and carries column `m` of `x` on γ-run `n`.
pub(crate) fn cyclic_cells(rows: usize, cols: usize, k: usize, x: &Isometry) -> Result<Vec<Vec<(Cell, C64)>>> {
    if (rows * cols) % k != 0 {
        return Err(Error::NotMultiple { rows, cols, k });
    }
    if k > rows.min(cols) {
        return Err(Error::InvalidInput(format!("k = {k} exceeds min({rows}, {cols})")));
    }
    if !x.is_square() || x.rows() != k {
        return Err(Error::InvalidInput(format!("need a {k}x{k} coefficient matrix, got {x}")));
    }
    if !no_zero_entries(x, COEFF_ZERO_TOL) {
        return Err(Error::DegenerateCoefficients(format!("{x} has a zero entry")));
    }
    let transpose = rows > cols;
    let (d, dprime) = if transpose { (cols, rows) } else { (rows, cols) };
    let runs = d * dprime / k;
    let mut out = Vec::with_capacity(d * dprime);
    for n in 0..runs {
        for m in 0..k {
            let cells = (0..k)
                .map(|l| {
                    let (r, c) = gamma(n * k + l, d, dprime);
                    let cell = if transpose { (c, r) } else { (r, c) };
                    (cell, x.get(l, m))
                })
                .collect();
            out.push(cells);
        }
    }
    Ok(out)
}

fn equal_modulus(x: &Isometry, k: usize) -> bool {
    let target = 1.0 / (k as f64).sqrt();
    x.entries().data().iter().all(|z| (z.norm() - target).abs() <= 1e-12)
}

/// Cyclic construction for `k | d·d'`; `d > d'` is handled by transposition.
pub fn ebk_cyclic(req: &ConstructionRequest) -> Result<EntangledBasis> {
    req.validate()?;
    let (d, dprime, k) = (req.d, req.dprime, req.k);
    if (d * dprime) % k != 0 {
        return Err(Error::NotMultiple { rows: d, cols: dprime, k });
    }
    let x = req.coeffs.resolve(k, req.field)?;
    if req.family == Family::Sebk && !equal_modulus(&x, k) {
        return Err(Error::InvalidInput(format!(
            "equal Schmidt coefficients need every coefficient of modulus 1/sqrt({k}); {x} does not qualify"
        )));
    }
    let cells = cyclic_cells(d, dprime, k, &x)?;
    let states = cells
        .into_iter()
        .map(|c| BipartiteState::new(d, dprime, c.into_iter().map(|((r, col), a)| (r, col, a)).collect()))
        .collect::<Result<Vec<_>>>()?;
    let family = if equal_modulus(&x, k) { Family::Sebk } else { Family::Ebk };
    let provenance = Provenance::new()
        .with("construction", "gamma-cyclic")
        .with("coefficients", x.to_string())
        .with("field", field_name(req.field))
        .with("ordering", "index = m + k*n (n = gamma run, m = coefficient column)")
        .with("transposed", (d > dprime).to_string());
    EntangledBasis::new([d, dprime], k, states, family, provenance)
}

pub(crate) fn field_name(f: Field) -> &'static str {
    match f {
        Field::Complex => "complex",
        Field::Real => "real",
    }
}

/// Computational product basis, row-major.
pub fn product_basis(d: usize, dprime: usize) -> Result<EntangledBasis> {
    let states = (0..d)
        .flat_map(|r| (0..dprime).map(move |c| (r, c)))
        .map(|(r, c)| BipartiteState::new(d, dprime, vec![(r, c, ONE)]))
        .collect::<Result<Vec<_>>>()?;
    let provenance = Provenance::new().with("construction", "product").with("ordering", "index = row*d' + col");
    EntangledBasis::new([d, dprime], 1, states, Family::Pb, provenance)
}

/// Message attached to equal-coefficient requests the constructions cannot meet.
pub fn sebk_unsupported_reason(d: usize, dprime: usize, k: usize) -> String {
    format!(
        "no equal-coefficient basis (SEB{k}) in {d}x{dprime} from these constructions: k = {k} does not divide \
         d*d' = {}. Existence is conditional on a square isometry of size k + min(r, r') whose columns meet \
         the equal-weight column conditions (see `sebk_isometry_predicate`); none is known for this case",
        d * dprime
    )
}

/// Top-level dispatch: product basis for `k = 1`, the cyclic construction
/// when `k | d·d'`, tiling otherwise.
pub fn generate(req: &ConstructionRequest) -> Result<EntangledBasis> {
    req.validate()?;
    let (d, dprime, k) = (req.d, req.dprime, req.k);
    let mut basis = match req.family {
        Family::Custom => return Err(Error::InvalidInput("cannot generate a custom family".into())),
        Family::Pb => {
            if k != 1 {
                return Err(Error::InvalidInput(format!("a product basis has k = 1, not {k}")));
            }
            product_basis(d, dprime)?
        }
        Family::Meb => {
            if k != d.min(dprime) {
                return Err(Error::InvalidInput(format!("a MEB of {d}x{dprime} has k = {}", d.min(dprime))));
            }
            if req.field == Field::Real {
                return Err(Error::Unsupported("maximally entangled bases are generated over the complex field only".into()));
            }
            if d <= dprime {
                weyl::meb(d, dprime)?
            } else {
                weyl::meb(dprime, d)?.transpose()
            }
        }
        Family::Sebk | Family::Ebk if k == 1 => product_basis(d, dprime)?,
        Family::Sebk | Family::Ebk => {
            if req.family == Family::Sebk && req.field == Field::Real {
                return Err(Error::Unsupported(
                    "equal-coefficient bases are generated over the complex field only; use family ebk".into(),
                ));
            }
            if (d * dprime) % k == 0 {
                ebk_cyclic(req)?
            } else if req.family == Family::Sebk {
                return Err(Error::Unsupported(sebk_unsupported_reason(d, dprime, k)));
            } else if d <= dprime {
                tiling::assemble(d, dprime, k, &req.coeffs, req.field)?
            } else {
                let mut b = tiling::assemble(dprime, d, k, &req.coeffs, req.field)?.transpose();
                b.provenance.insert("transposed", "true");
                b
            }
        }
    };
    basis.provenance.insert("requested_family", req.family.as_str());
    Ok(basis)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::isometry::{dft, Source};
    use crate::model::{schmidt, RANK_TOL};
    use crate::numerics::{gram, CMatrix};
    use std::f64::consts::TAU;

    #[test]
    fn gamma_examples() {
        let g = gamma_sequence(4, 6).unwrap();
        let p = g.positions();
        assert_eq!(p[4], (0, 1));
        assert_eq!(p[15], (3, 0));
        assert_eq!(&p[..3], &[(0, 0), (1, 1), (2, 2)]);
        assert_eq!(gamma_sequence(2, 2).unwrap().positions(), &[(0, 0), (1, 1), (0, 1), (1, 0)]);
        assert!(gamma_sequence(3, 2).is_err());
    }

    #[test]
    fn gamma_runs_have_distinct_rows_and_columns() {
        for d in 1..=8 {
            for dp in d..=8 {
                let seq = gamma_sequence(d, dp).unwrap();
                for k in 1..=d {
                    if (d * dp) % k != 0 {
                        continue;
                    }
                    for run in seq.positions().chunks(k) {
                        for a in 0..k {
                            for b in (a + 1)..k {
                                assert_ne!(run[a].0, run[b].0, "rows in {d}x{dp} k={k}");
                                assert_ne!(run[a].1, run[b].1, "cols in {d}x{dp} k={k}");
                            }
                        }
                    }
                }
            }
        }
    }

    #[test]
    fn cyclic_4x6_k3_first_run() {
        let b = ebk_cyclic(&ConstructionRequest::new(4, 6, 3, Family::Sebk)).unwrap();
        assert_eq!(b.states.len(), 24);
        assert_eq!(b.family, Family::Sebk);
        let xi = C64::from_polar(1.0, TAU / 3.0);
        let t = 1.0 / 3f64.sqrt();
        // state index 4: m = 1 on the run (3,3), (0,1), (1,2)
        let s = &b.states[4];
        let expect = [((0, 1), xi * t), ((1, 2), xi * xi * t), ((3, 3), C64::new(t, 0.0))];
        for (&(r, c, a), ((er, ec), ea)) in s.amplitudes().iter().zip(expect) {
            assert_eq!((r, c), (er, ec));
            assert!((a - ea).norm() < 1e-15);
        }
        let sd = schmidt(&b.states[3], RANK_TOL);
        assert_eq!(sd.schmidt_number, 3);
        assert!(sd.coefficients.iter().all(|x| (x - t).abs() < 1e-12));
    }

    #[test]
    fn cyclic_with_real_rotation_is_not_equal_weight() {
        let h = 3f64.sqrt() / 2.0;
        let m = CMatrix::from_rows(&[
            vec![C64::new(0.5, 0.0), C64::new(h, 0.0)],
            vec![C64::new(h, 0.0), C64::new(-0.5, 0.0)],
        ])
        .unwrap();
        let x = Isometry::new(m, Source::File, Field::Real).unwrap();
        let req = ConstructionRequest::new(2, 2, 2, Family::Ebk).with_coeffs(CoefficientSource::Custom(x.clone()));
        let b = ebk_cyclic(&req).unwrap();
        assert_eq!(b.family, Family::Ebk);
        for s in &b.states {
            let sd = schmidt(s, RANK_TOL);
            assert_eq!(sd.schmidt_number, 2);
            assert!((sd.coefficients[0] - h).abs() < 1e-12);
            assert!((sd.coefficients[1] - 0.5).abs() < 1e-12);
        }
        let sebk = ConstructionRequest::new(2, 2, 2, Family::Sebk).with_coeffs(CoefficientSource::Custom(x));
        assert!(ebk_cyclic(&sebk).is_err());
    }

    #[test]
    fn cyclic_errors() {
        assert!(matches!(
            ebk_cyclic(&ConstructionRequest::new(3, 3, 2, Family::Ebk)),
            Err(Error::NotMultiple { .. })
        ));
        let i2 = Isometry::new(CMatrix::identity(2), Source::File, Field::Real).unwrap();
        let req = ConstructionRequest::new(2, 2, 2, Family::Ebk).with_coeffs(CoefficientSource::Custom(i2));
        assert!(matches!(ebk_cyclic(&req), Err(Error::DegenerateCoefficients(_))));
    }

    #[test]
    fn cyclic_equals_meb_for_square_full_rank() {
        for d in 2..=5 {
            let a = ebk_cyclic(&ConstructionRequest::new(d, d, d, Family::Sebk)).unwrap();
            let b = weyl::meb(d, d).unwrap();
            for (x, y) in a.states.iter().zip(&b.states) {
                let ov = crate::numerics::inner(&x.to_vector(), &y.to_vector()).norm();
                assert!((ov - 1.0).abs() < 1e-10);
            }
        }
    }

    #[test]
    fn generate_dispatch() {
        let pb = generate(&ConstructionRequest::new(2, 2, 1, Family::Ebk)).unwrap();
        let cells: Vec<_> = pb.states.iter().map(|s| (s.amplitudes()[0].0, s.amplitudes()[0].1)).collect();
        assert_eq!(cells, vec![(0, 0), (0, 1), (1, 0), (1, 1)]);
        let eb2 = generate(&ConstructionRequest::new(3, 3, 2, Family::Ebk)).unwrap();
        assert_eq!(eb2.states.len(), 9);
        let err = generate(&ConstructionRequest::new(3, 3, 2, Family::Sebk)).unwrap_err();
        assert!(err.is_unsupported());
        assert!(generate(&ConstructionRequest::new(3, 3, 4, Family::Ebk)).is_err());
        assert!(generate(&ConstructionRequest::new(3, 3, 0, Family::Ebk)).is_err());
    }

    #[test]
    fn transposed_requests_are_orthonormal() {
        let b = generate(&ConstructionRequest::new(5, 3, 2, Family::Ebk)).unwrap();
        assert_eq!(b.dims, [5, 3]);
        let g = gram(&b.states.iter().map(|s| s.to_vector()).collect::<Vec<_>>()).unwrap();
        assert!(g.max_abs_diff(&CMatrix::identity(15)) < 1e-12);
    }

    #[test]
    fn dft_coefficients_have_no_zeros() {
        for k in 1..8 {
            assert!(no_zero_entries(&dft(k).unwrap(), COEFF_ZERO_TOL));
        }
    }
}
