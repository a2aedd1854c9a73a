//! Shared fixtures and brute-force oracles for the integration tests.
//!
//! Nothing here calls into the library's numerics: inner products are
//! written out as double loops and Schmidt coefficients come from a
//! separate Jacobi eigensolver on `A A†`.

#![allow(dead_code)]

use ebk::C64;
use rand::Rng;

pub fn c(re: f64) -> C64 {
    C64::new(re, 0.0)
}

/// Dense vector of length `len` from `(flat index, amplitude)` pairs.
pub fn dense(len: usize, entries: &[(usize, C64)]) -> Vec<C64> {
    let mut v = vec![C64::new(0.0, 0.0); len];
    for &(i, a) in entries {
        v[i] += a;
    }
    v
}

fn bipartite(d: usize, dp: usize, cells: &[((usize, usize), C64)]) -> Vec<C64> {
    dense(d * dp, &cells.iter().map(|&((r, col), a)| (r * dp + col, a)).collect::<Vec<_>>())
}

fn tripartite(dims: [usize; 3], cells: &[((usize, usize, usize), f64)]) -> Vec<C64> {
    let [_, b, cdim] = dims;
    dense(
        dims.iter().product(),
        &cells.iter().map(|&((x, y, z), a)| ((x * b + y) * cdim + z, c(a))).collect::<Vec<_>>(),
    )
}

/// The four Bell states.
pub fn bell() -> Vec<Vec<C64>> {
    let h = std::f64::consts::FRAC_1_SQRT_2;
    vec![
        bipartite(2, 2, &[((0, 0), c(h)), ((1, 1), c(h))]),
        bipartite(2, 2, &[((0, 0), c(h)), ((1, 1), c(-h))]),
        bipartite(2, 2, &[((0, 1), c(h)), ((1, 0), c(h))]),
        bipartite(2, 2, &[((0, 1), c(h)), ((1, 0), c(-h))]),
    ]
}

/// Six maximally entangled states of `C^2 ⊗ C^3`.
pub fn meb_2x3() -> Vec<Vec<C64>> {
    let h = std::f64::consts::FRAC_1_SQRT_2;
    let mut out = Vec::new();
    for (a, b) in [((0, 0), (1, 1)), ((0, 1), (1, 2)), ((0, 2), (1, 0))] {
        out.push(bipartite(2, 3, &[(a, c(h)), (b, c(h))]));
        out.push(bipartite(2, 3, &[(a, c(h)), (b, c(-h))]));
    }
    out
}

/// Twenty-four rank-3 states of `C^4 ⊗ C^6`, written out term by term.
pub fn eb3_4x6() -> Vec<Vec<C64>> {
    let xi = |p: usize| C64::from_polar(1.0, std::f64::consts::TAU * p as f64 / 3.0);
    let s = 1.0 / 3f64.sqrt();
    let supports: [[(usize, usize); 3]; 8] = [
        [(0, 0), (1, 1), (2, 2)],
        [(3, 3), (0, 1), (1, 2)],
        [(2, 3), (3, 4), (0, 2)],
        [(1, 3), (2, 4), (3, 5)],
        [(0, 3), (1, 4), (2, 5)],
        [(3, 0), (0, 4), (1, 5)],
        [(2, 0), (3, 1), (0, 5)],
        [(1, 0), (2, 1), (3, 2)],
    ];
    let mut out = Vec::new();
    for sup in supports {
        for m in 0..3 {
            let cells: Vec<_> = sup.iter().enumerate().map(|(l, &cell)| (cell, xi(m * l) * s)).collect();
            out.push(bipartite(4, 6, &cells));
        }
    }
    out
}

/// Nine-state basis of `C^3 ⊗ C^3` with Schmidt number 2 and unequal weights.
pub fn eb2_unequal_3x3() -> Vec<Vec<C64>> {
    let (h, s3, r2, r3, r6, r23) =
        (0.5, 3f64.sqrt() / 2.0, 1.0 / 2f64.sqrt(), 1.0 / 3f64.sqrt(), 1.0 / 6f64.sqrt(), (2.0f64 / 3.0).sqrt());
    let raw: [&[((usize, usize), f64)]; 9] = [
        &[((0, 0), h), ((1, 1), s3)],
        &[((0, 0), s3), ((1, 1), -h)],
        &[((0, 1), r2), ((1, 0), r2)],
        &[((0, 1), -r2), ((1, 0), r2)],
        &[((1, 2), r2), ((2, 0), r2)],
        &[((1, 2), r2), ((2, 0), -r2)],
        &[((0, 2), r2), ((2, 1), r2)],
        &[((0, 2), r3), ((2, 1), -r3), ((2, 2), r3)],
        &[((0, 2), r6), ((2, 1), -r6), ((2, 2), -r23)],
    ];
    raw.iter()
        .map(|cells| bipartite(3, 3, &cells.iter().map(|&(p, a)| (p, c(a))).collect::<Vec<_>>()))
        .collect()
}

/// Eight three-qubit GHZ states.
pub fn ghz_8() -> Vec<Vec<C64>> {
    let h = std::f64::consts::FRAC_1_SQRT_2;
    let mut out = Vec::new();
    for (a, b) in [((0, 0, 0), (1, 1, 1)), ((0, 0, 1), (1, 1, 0)), ((0, 1, 0), (1, 0, 1)), ((0, 1, 1), (1, 0, 0))] {
        out.push(tripartite([2, 2, 2], &[(a, h), (b, h)]));
        out.push(tripartite([2, 2, 2], &[(a, h), (b, -h)]));
    }
    out
}

/// Twenty-seven states of `C^3 ⊗ C^3 ⊗ C^3`, state `(i, j)` at `3i + j`,
/// exactly as listed term by term.
pub fn eb2_27() -> Vec<Vec<C64>> {
    let (h, s3, r2, r3, r6, r23) =
        (0.5, 3f64.sqrt() / 2.0, 1.0 / 2f64.sqrt(), 1.0 / 3f64.sqrt(), 1.0 / 6f64.sqrt(), (2.0f64 / 3.0).sqrt());
    type Cells = Vec<((usize, usize, usize), f64)>;
    let rows: Vec<[Cells; 3]> = vec![
        [
            vec![((0, 0, 0), h), ((1, 1, 1), s3)],
            vec![((0, 0, 1), h), ((1, 1, 2), s3)],
            vec![((0, 0, 2), h), ((1, 1, 0), s3)],
        ],
        [
            vec![((0, 0, 0), s3), ((1, 1, 1), -h)],
            vec![((0, 0, 1), s3), ((1, 1, 2), -h)],
            vec![((0, 0, 2), s3), ((1, 1, 0), -h)],
        ],
        [
            vec![((0, 1, 0), r2), ((1, 0, 1), r2)],
            vec![((0, 1, 1), r2), ((1, 0, 2), r2)],
            vec![((0, 1, 2), r2), ((1, 0, 0), r2)],
        ],
        [
            vec![((0, 1, 0), -r2), ((1, 0, 1), r2)],
            vec![((0, 1, 1), -r2), ((1, 0, 2), r2)],
            vec![((0, 1, 2), -r2), ((1, 0, 0), r2)],
        ],
        [
            vec![((1, 2, 0), r2), ((2, 0, 1), r2)],
            vec![((1, 2, 1), r2), ((2, 0, 2), r2)],
            vec![((1, 2, 2), r2), ((2, 0, 0), r2)],
        ],
        [
            vec![((1, 2, 0), r2), ((2, 0, 1), -r2)],
            vec![((1, 2, 1), r2), ((2, 0, 2), -r2)],
            vec![((1, 2, 2), r2), ((2, 0, 0), -r2)],
        ],
        [
            vec![((0, 2, 0), r2), ((2, 1, 1), r2)],
            vec![((0, 2, 1), r2), ((2, 1, 2), r2)],
            vec![((0, 2, 2), r2), ((2, 1, 0), r2)],
        ],
        [
            vec![((0, 2, 0), r3), ((2, 1, 1), -r3), ((2, 2, 1), r3)],
            vec![((0, 2, 1), r3), ((2, 1, 2), -r3), ((2, 2, 2), r3)],
            vec![((0, 2, 2), r3), ((2, 1, 0), -r3), ((2, 2, 0), r3)],
        ],
        [
            vec![((0, 2, 0), r6), ((2, 1, 1), -r6), ((2, 2, 1), -r23)],
            vec![((0, 2, 1), r6), ((2, 1, 2), -r6), ((2, 2, 2), -r23)],
            vec![((0, 2, 2), r6), ((2, 1, 0), -r6), ((2, 2, 0), -r23)],
        ],
    ];
    rows.iter().flat_map(|r| r.iter().map(|cells| tripartite([3, 3, 3], cells))).collect()
}

/// `⟨a|b⟩` as a plain loop.
pub fn braket(a: &[C64], b: &[C64]) -> C64 {
    let mut s = C64::new(0.0, 0.0);
    for i in 0..a.len() {
        s += a[i].conj() * b[i];
    }
    s
}

/// Largest `|⟨v_i|v_j⟩ − δ_ij|` by direct double loop.
pub fn gram_oracle(states: &[Vec<C64>]) -> f64 {
    let mut worst: f64 = 0.0;
    for i in 0..states.len() {
        for j in 0..states.len() {
            let target = if i == j { 1.0 } else { 0.0 };
            worst = worst.max((braket(&states[i], &states[j]) - c(target)).norm());
        }
    }
    worst
}

/// Eigenvalues of a real symmetric matrix by cyclic Jacobi rotations,
/// descending.
pub fn symmetric_eigenvalues(mut a: Vec<Vec<f64>>) -> Vec<f64> {
    let n = a.len();
    for _sweep in 0..100 {
        let off: f64 = (0..n).flat_map(|i| (0..n).filter(move |&j| j != i).map(move |j| (i, j))).map(|(i, j)| a[i][j] * a[i][j]).sum();
        if off < 1e-30 {
            break;
        }
        for p in 0..n {
            for q in p + 1..n {
                if a[p][q].abs() < 1e-300 {
                    continue;
                }
                let theta = (a[q][q] - a[p][p]) / (2.0 * a[p][q]);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let t = if theta == 0.0 { 1.0 } else { t };
                let cs = 1.0 / (t * t + 1.0).sqrt();
                let sn = t * cs;
                for k in 0..n {
                    let (akp, akq) = (a[k][p], a[k][q]);
                    a[k][p] = cs * akp - sn * akq;
                    a[k][q] = sn * akp + cs * akq;
                }
                for k in 0..n {
                    let (apk, aqk) = (a[p][k], a[q][k]);
                    a[p][k] = cs * apk - sn * aqk;
                    a[q][k] = sn * apk + cs * aqk;
                }
            }
        }
    }
    let mut ev: Vec<f64> = (0..n).map(|i| a[i][i]).collect();
    ev.sort_by(|x, y| y.total_cmp(x));
    ev
}

/// Schmidt coefficients of a `d x d'` state from the eigenvalues of `A A†`
/// (or `A†A` when that is smaller).
///
/// The Hermitian matrix `H = X + iY` is embedded as the real symmetric
/// `[[X, −Y], [Y, X]]`, whose spectrum is that of `H` with every eigenvalue
/// doubled; every other eigenvalue is kept. Eigenvalue round-off near
/// `1e-16` shows up as coefficients near `1e-8`, so rank decisions on this
/// output need a threshold well above that.
pub fn schmidt_oracle(v: &[C64], d: usize, dp: usize) -> Vec<f64> {
    if dp < d {
        let t: Vec<C64> = (0..dp * d).map(|i| v[(i % d) * dp + i / d]).collect();
        return schmidt_oracle(&t, dp, d);
    }
    let a = |r: usize, col: usize| v[r * dp + col];
    let mut h = vec![vec![C64::new(0.0, 0.0); d]; d];
    for i in 0..d {
        for j in 0..d {
            for l in 0..dp {
                h[i][j] += a(i, l) * a(j, l).conj();
            }
        }
    }
    let mut big = vec![vec![0.0; 2 * d]; 2 * d];
    for i in 0..d {
        for j in 0..d {
            big[i][j] = h[i][j].re;
            big[i + d][j + d] = h[i][j].re;
            big[i][j + d] = -h[i][j].im;
            big[i + d][j] = h[i][j].im;
        }
    }
    symmetric_eigenvalues(big).into_iter().step_by(2).map(|e| e.max(0.0).sqrt()).collect()
}

/// Matches every expected state to a distinct produced state that agrees
/// with it up to a global phase, entrywise within `tol`. Returns the
/// worst entrywise error, or a description of the first unmatched state.
pub fn match_up_to_phase_and_order(expected: &[Vec<C64>], got: &[Vec<C64>], tol: f64) -> Result<f64, String> {
    if expected.len() != got.len() {
        return Err(format!("{} states expected, {} produced", expected.len(), got.len()));
    }
    let mut used = vec![false; got.len()];
    let mut worst: f64 = 0.0;
    for (i, e) in expected.iter().enumerate() {
        let mut found = None;
        for (j, g) in got.iter().enumerate() {
            if used[j] || e.len() != g.len() {
                continue;
            }
            let ov = braket(g, e);
            if ov.norm() < 0.5 {
                continue;
            }
            let phase = ov / ov.norm();
            let err = e.iter().zip(g).map(|(x, y)| (x - y * phase).norm()).fold(0.0, f64::max);
            if err <= tol {
                found = Some((j, err));
                break;
            }
        }
        match found {
            Some((j, err)) => {
                used[j] = true;
                worst = worst.max(err);
            }
            None => return Err(format!("expected state {i} has no match within {tol:e}")),
        }
    }
    Ok(worst)
}

/// Haar-ish random unitary built independently of the library: Gram-Schmidt
/// on uniform complex entries.
pub fn random_unitary_oracle<R: Rng>(n: usize, rng: &mut R) -> Vec<Vec<C64>> {
    let mut cols: Vec<Vec<C64>> = Vec::new();
    while cols.len() < n {
        let mut v: Vec<C64> = (0..n).map(|_| C64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0))).collect();
        for _ in 0..2 {
            for u in &cols {
                let p = braket(u, &v);
                for t in 0..n {
                    v[t] -= u[t] * p;
                }
            }
        }
        let nv = braket(&v, &v).re.sqrt();
        if nv > 1e-3 {
            cols.push(v.into_iter().map(|z| z / nv).collect());
        }
    }
    // row-major matrix with the vectors as columns
    (0..n).map(|r| (0..n).map(|col| cols[col][r]).collect()).collect()
}

/// Applies `U_1 ⊗ … ⊗ U_N` to a dense tensor (party 1 most significant).
pub fn apply_local(tensor: &[C64], dims: &[usize], unitaries: &[Vec<Vec<C64>>]) -> Vec<C64> {
    let mut t = tensor.to_vec();
    for (party, u) in unitaries.iter().enumerate() {
        let inner: usize = dims[party + 1..].iter().product();
        let d = dims[party];
        let outer = t.len() / (d * inner);
        let mut next = vec![C64::new(0.0, 0.0); t.len()];
        for o in 0..outer {
            for i in 0..inner {
                for r in 0..d {
                    let mut s = C64::new(0.0, 0.0);
                    for q in 0..d {
                        s += u[r][q] * t[(o * d + q) * inner + i];
                    }
                    next[(o * d + r) * inner + i] = s;
                }
            }
        }
        t = next;
    }
    t
}
