//! Acceptance suite. Runs every criterion, prints one PASS/FAIL line each
//! and exits non-zero if any failed.

mod common;

use std::panic::{catch_unwind, AssertUnwindSafe};
use std::process::Command;
use std::time::{Duration, Instant};

use ebk::construct::{generate, ConstructionRequest};
use ebk::io::BasisFile;
use ebk::isometry::{dft, sebk_isometry_predicate, sign_matrix_4, CoefficientSource, Field, Isometry, Source};
use ebk::model::{BipartiteState, Provenance};
use ebk::multipartite::{generate_npartite, lift, marginal_spectrum, MultipartiteBasis};
use ebk::numerics::random_unitary;
use ebk::tiling::l_pattern_basis;
use ebk::verify::{verify_basis, verify_multipartite, verify_states, verify_tensors, Classification, FailureKind, VerifyTolerances};
use ebk::{CMatrix, EntangledBasis, Family, C64};
use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};

use common::*;

type Outcome = Result<String, String>;

macro_rules! ensure {
    ($cond:expr, $($fmt:tt)+) => {
        if !$cond {
            return Err(format!($($fmt)+));
        }
    };
}

fn tol() -> VerifyTolerances {
    VerifyTolerances::default()
}

fn basis_from_dense(d: usize, dp: usize, k: usize, vectors: &[Vec<C64>], family: Family) -> EntangledBasis {
    let states = vectors
        .iter()
        .map(|v| BipartiteState::new(d, dp, v.iter().enumerate().map(|(i, &z)| (i / dp, i % dp, z)).collect()).unwrap())
        .collect();
    EntangledBasis::new([d, dp], k, states, family, Provenance::new()).unwrap()
}

fn vectors(b: &EntangledBasis) -> Vec<Vec<C64>> {
    b.states.iter().map(|s| s.to_vector()).collect()
}

fn timed(name: &str, f: impl FnOnce() -> Outcome) -> Result<(String, Duration), String> {
    let start = Instant::now();
    let out = f().map_err(|e| format!("{name}: {e}"))?;
    Ok((out, start.elapsed()))
}

/// Golden comparisons against the explicitly listed bases.
fn criterion_1() -> Outcome {
    let mut notes = Vec::new();
    let mut slowest = Duration::ZERO;
    let mut record = |r: Result<(String, Duration), String>| -> Result<(), String> {
        let (s, t) = r?;
        slowest = slowest.max(t);
        notes.push(s);
        Ok(())
    };

    record(timed("bell", || {
        let b = generate(&ConstructionRequest::new(2, 2, 2, Family::Meb)).map_err(|e| e.to_string())?;
        let err = match_up_to_phase_and_order(&bell(), &vectors(&b), 1e-12)?;
        Ok(format!("bell {err:.0e}"))
    }))?;
    record(timed("meb 2x3", || {
        let b = generate(&ConstructionRequest::new(2, 3, 2, Family::Sebk)).map_err(|e| e.to_string())?;
        let err = match_up_to_phase_and_order(&meb_2x3(), &vectors(&b), 1e-12)?;
        Ok(format!("2x3 {err:.0e}"))
    }))?;
    record(timed("eb3 4x6", || {
        let b = generate(&ConstructionRequest::new(4, 6, 3, Family::Sebk)).map_err(|e| e.to_string())?;
        let err = match_up_to_phase_and_order(&eb3_4x6(), &vectors(&b), 1e-12)?;
        Ok(format!("4x6 {err:.0e}"))
    }))?;
    record(timed("unequal eb2", || {
        let file = BasisFile::from_bipartite(&basis_from_dense(3, 3, 2, &eb2_unequal_3x3(), Family::Ebk));
        let loaded = BasisFile::parse(&file.to_json()).map_err(|e| e.to_string())?;
        let r = verify_tensors(&loaded.dims, &loaded.dense_states(), 2, &tol()).map_err(|e| e.to_string())?;
        ensure!(r.classification == Classification::Ebk, "classified {}", r.classification);
        ensure!(!r.classification.satisfies(Family::Sebk), "accepted as sebk");
        ensure!(r.per_state.iter().all(|s| s.schmidt_number == 2), "Schmidt numbers");
        Ok("3x3 unequal: ebk, not sebk".into())
    }))?;
    record(timed("ghz 8", || {
        let b = generate_npartite(&[2, 2, 2], 2, Family::Sebk, &CoefficientSource::Dft, Field::Complex)
            .map_err(|e| e.to_string())?;
        let err = match_up_to_phase_and_order(&ghz_8(), &b.tensors(), 1e-12)?;
        let bell_basis = generate(&ConstructionRequest::new(2, 2, 2, Family::Meb)).map_err(|e| e.to_string())?;
        let lifted = lift(&MultipartiteBasis::from_bipartite(&bell_basis).map_err(|e| e.to_string())?, 2)
            .map_err(|e| e.to_string())?;
        match_up_to_phase_and_order(&ghz_8(), &lifted.tensors(), 1e-12)?;
        let r = verify_multipartite(&b, 2, &tol()).map_err(|e| e.to_string())?;
        ensure!(r.classification == Classification::Sebk, "GHZ basis classified {}", r.classification);
        Ok(format!("ghz8 {err:.0e}"))
    }))?;
    record(timed("eb2 27", || {
        let seed = basis_from_dense(3, 3, 2, &eb2_unequal_3x3(), Family::Ebk);
        let lifted = lift(&MultipartiteBasis::from_bipartite(&seed).map_err(|e| e.to_string())?, 3)
            .map_err(|e| e.to_string())?;
        let got = lifted.tensors();
        let expected = eb2_27();
        // same order as listed: state (i, j) at 3i + j
        let err = expected
            .iter()
            .zip(&got)
            .flat_map(|(e, g)| e.iter().zip(g).map(|(x, y)| (x - y).norm()))
            .fold(0.0, f64::max);
        ensure!(err <= 1e-12, "27-state lift differs by {err:e}");
        let g = gram_oracle(&got);
        ensure!(g <= 1e-12, "27-state Gram deviation {g:e}");
        let r = verify_multipartite(&lifted, 2, &tol()).map_err(|e| e.to_string())?;
        let not_ghz = r.failures.iter().filter(|f| f.kind == FailureKind::NotGhz).count();
        Ok(format!("27-state {err:.0e}, gram {g:.0e} (strict GHZ-form check: {not_ghz} states fail)"))
    }))?;
    ensure!(slowest < Duration::from_millis(500), "slowest fixture took {slowest:?}");
    Ok(format!("{}; slowest {slowest:?}", notes.join(", ")))
}

/// Bipartite grid for `1 <= k <= d <= d' <= 6`.
fn criterion_2() -> Outcome {
    let start = Instant::now();
    let bin = env!("CARGO_BIN_EXE_ebk");
    let (mut ebk_cases, mut sebk_cases, mut unsupported) = (0, 0, 0);
    for d in 1..=6usize {
        for dp in d..=6usize {
            for k in 1..=d {
                let b = generate(&ConstructionRequest::new(d, dp, k, Family::Ebk)).map_err(|e| format!("ebk {d}x{dp} k={k}: {e}"))?;
                check_grid_basis(&b, d, dp, k, false).map_err(|e| format!("ebk {d}x{dp} k={k}: {e}"))?;
                ebk_cases += 1;
                if (d * dp) % k == 0 {
                    let b = generate(&ConstructionRequest::new(d, dp, k, Family::Sebk))
                        .map_err(|e| format!("sebk {d}x{dp} k={k}: {e}"))?;
                    check_grid_basis(&b, d, dp, k, true).map_err(|e| format!("sebk {d}x{dp} k={k}: {e}"))?;
                    sebk_cases += 1;
                } else {
                    let out = Command::new(bin)
                        .args(["generate", "--dims", &format!("{d},{dp}"), "--k", &k.to_string(), "--family", "sebk"])
                        .output()
                        .map_err(|e| e.to_string())?;
                    ensure!(out.status.code() == Some(2), "sebk {d}x{dp} k={k}: exit {:?}", out.status.code());
                    unsupported += 1;
                }
            }
        }
    }
    let elapsed = start.elapsed();
    ensure!(elapsed < Duration::from_secs(10), "grid took {elapsed:?}");
    Ok(format!("{ebk_cases} ebk, {sebk_cases} sebk, {unsupported} sebk exit 2; {elapsed:?}"))
}

fn check_grid_basis(b: &EntangledBasis, d: usize, dp: usize, k: usize, equal: bool) -> Result<(), String> {
    let r = verify_basis(b, k, &tol()).map_err(|e| e.to_string())?;
    ensure!(r.state_count == d * dp, "{} states", r.state_count);
    ensure!(r.gram_max_deviation <= 1e-10, "Gram deviation {:e}", r.gram_max_deviation);
    for (i, s) in b.states.iter().enumerate() {
        let sv = ebk::numerics::svd(&ebk::model::state_to_matrix(s)).map_err(|e| e.to_string())?.singular_values;
        ensure!(sv[k - 1] > 1e-8, "state {i}: sigma_k = {:e}", sv[k - 1]);
        ensure!(sv.get(k).is_none_or(|&x| x <= 1e-10), "state {i}: sigma_(k+1) = {:e}", sv[k]);
        if equal {
            let target = 1.0 / (k as f64).sqrt();
            let dev = sv[..k].iter().map(|x| (x - target).abs()).fold(0.0, f64::max);
            ensure!(dev <= 1e-10, "state {i}: coefficient deviation {dev:e}");
        }
    }
    ensure!(r.passed(), "classified {}", r.classification);
    Ok(())
}

/// Rank-`k` orthonormal matrix bases on the L-shaped supports.
fn criterion_3() -> Outcome {
    let mut count = 0;
    let mut worst: f64 = 0.0;
    for k in 2..=5usize {
        for s in 1..k {
            let x = dft(k + s).map_err(|e| e.to_string())?;
            let mats = l_pattern_basis(k, s, &x).map_err(|e| format!("k={k} s={s}: {e}"))?;
            ensure!(mats.len() == k + s, "k={k} s={s}: {} matrices", mats.len());
            let flat: Vec<Vec<C64>> = mats.iter().map(|m| m.data().to_vec()).collect();
            let g = gram_oracle(&flat);
            worst = worst.max(g);
            ensure!(g <= 1e-12, "k={k} s={s}: Hilbert-Schmidt Gram deviation {g:e}");
            for (i, m) in mats.iter().enumerate() {
                let sv = ebk::numerics::svd(m).map_err(|e| e.to_string())?.singular_values;
                let rank = sv.iter().filter(|&&x| x > 1e-8).count();
                ensure!(rank == k, "k={k} s={s} matrix {i}: rank {rank}");
                let oracle = schmidt_oracle(m.data(), m.rows(), m.cols());
                let oracle_rank = oracle.iter().filter(|&&x| x > 1e-6).count();
                ensure!(oracle_rank == k, "k={k} s={s} matrix {i}: oracle rank {oracle_rank}");
                let gap = oracle.iter().zip(&sv).take(k).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
                ensure!(gap <= 1e-12, "k={k} s={s} matrix {i}: oracle disagrees by {gap:e}");
            }
            count += 1;
        }
    }
    Ok(format!("{count} (k, s) pairs, worst Gram deviation {worst:.1e}"))
}

/// Column conditions on square isometries for equal-weight rank-3 bases.
fn criterion_4() -> Outcome {
    let sign = sign_matrix_4();
    let f4 = dft(4).map_err(|e| e.to_string())?;
    let id = Isometry::new(CMatrix::identity(4), Source::File, Field::Real).map_err(|e| e.to_string())?;
    let holds = |x: &Isometry| sebk_isometry_predicate(x, 3, 1e-10).map(|v| v.holds).map_err(|e| e.to_string());
    ensure!(holds(&sign)?, "sign matrix / sqrt(3) rejected");
    ensure!(!holds(&f4)?, "dft(4) accepted");
    ensure!(!holds(&id)?, "identity accepted");
    let mut rng = StdRng::seed_from_u64(4);
    let mut flips = 0;
    for trial in 0..100 {
        let x = [&sign, &f4, &id][trial % 3];
        let mut perm: Vec<usize> = (0..4).collect();
        for i in (1..4).rev() {
            perm.swap(i, rng.random_range(0..=i));
        }
        let phases: Vec<C64> = (0..4).map(|_| C64::from_polar(1.0, rng.random_range(0.0..std::f64::consts::TAU))).collect();
        let y = x.rephase_columns(&perm, &phases).map_err(|e| e.to_string())?;
        if holds(&y)? != holds(x)? {
            flips += 1;
        }
    }
    ensure!(flips == 0, "{flips} flips under column permutation and phases");
    Ok("sign matrix passes, dft(4) and I4 fail, 0 flips in 100 trials".into())
}

const MULTI_DIMS: [&[usize]; 5] = [&[2, 2, 2], &[2, 2, 3], &[2, 3, 4], &[3, 3, 3], &[2, 2, 2, 2]];

/// Multipartite grid.
fn criterion_5() -> Outcome {
    let start = Instant::now();
    let (mut ebk_cases, mut sebk_ok, mut sebk_unsupported) = (0, 0, 0);
    for dims in MULTI_DIMS {
        let total: usize = dims.iter().product();
        let min = *dims.iter().min().unwrap();
        for k in 1..=min {
            let tag = format!("{dims:?} k={k}");
            let b = generate_npartite(dims, k, Family::Ebk, &CoefficientSource::Dft, Field::Complex)
                .map_err(|e| format!("ebk {tag}: {e}"))?;
            let tensors = b.tensors();
            ensure!(tensors.len() == total, "{tag}: {} states", tensors.len());
            let g = gram_oracle(&tensors);
            ensure!(g <= 1e-10, "{tag}: Gram deviation {g:e}");
            let r = verify_multipartite(&b, k, &tol()).map_err(|e| e.to_string())?;
            ensure!(r.failures.is_empty(), "{tag}: {:?}", r.failures.first().map(|f| &f.message));
            for (i, t) in tensors.iter().enumerate() {
                for party in 0..dims.len() {
                    let sp = marginal_spectrum(t, dims, party).map_err(|e| e.to_string())?;
                    let rank = sp.iter().filter(|&&x| x > 1e-8).count();
                    ensure!(rank == k, "{tag} state {i} party {party}: marginal rank {rank}");
                    ensure!(sp.iter().all(|&x| x > 1e-8 || x <= 1e-10), "{tag} state {i} party {party}: ambiguous");
                }
            }
            ebk_cases += 1;

            let admissible = (0..dims.len()).any(|p| (p + 1..dims.len()).any(|q| (dims[p] * dims[q]) % k == 0));
            match generate_npartite(dims, k, Family::Sebk, &CoefficientSource::Dft, Field::Complex) {
                Ok(b) => {
                    ensure!(admissible, "sebk {tag} built without an admissible pair");
                    let r = verify_multipartite(&b, k, &tol()).map_err(|e| e.to_string())?;
                    let want = if k == 1 { Classification::Pb } else { Classification::Sebk };
                    ensure!(r.classification == want, "sebk {tag}: classified {}", r.classification);
                    sebk_ok += 1;
                }
                Err(e) => {
                    ensure!(!admissible && e.is_unsupported(), "sebk {tag}: {e}");
                    sebk_unsupported += 1;
                }
            }
        }
    }
    let elapsed = start.elapsed();
    ensure!(elapsed < Duration::from_secs(10), "grid took {elapsed:?}");
    Ok(format!("{ebk_cases} ebk cases, sebk {sebk_ok} built / {sebk_unsupported} unsupported; {elapsed:?}"))
}

fn rotate_bipartite(v: &[Vec<C64>], d: usize, dp: usize, rng: &mut StdRng) -> Vec<Vec<C64>> {
    let u = [random_unitary_oracle(d, rng), random_unitary_oracle(dp, rng)];
    v.iter().map(|t| apply_local(t, &[d, dp], &u)).collect()
}

/// Library verification against the brute-force oracles.
fn criterion_6() -> Outcome {
    let mut rng = StdRng::seed_from_u64(6);
    let mut worst_gram: f64 = 0.0;
    let mut worst_coeff: f64 = 0.0;
    for trial in 0..200 {
        let d = rng.random_range(1..=4usize);
        let dp = rng.random_range(1..=4usize);
        let k = rng.random_range(1..=d.min(dp));
        let family = if trial % 2 == 0 { Family::Ebk } else { Family::Sebk };
        let family = if family == Family::Sebk && (d * dp) % k != 0 { Family::Ebk } else { family };
        let b = generate(&ConstructionRequest::new(d, dp, k, family)).map_err(|e| e.to_string())?;
        let states = rotate_bipartite(&vectors(&b), d, dp, &mut rng);
        let r = verify_states([d, dp], &states, k, &tol()).map_err(|e| e.to_string())?;
        let g = gram_oracle(&states);
        worst_gram = worst_gram.max((g - r.gram_max_deviation).abs());
        ensure!((g - r.gram_max_deviation).abs() <= 1e-9, "trial {trial}: Gram {g:e} vs {:e}", r.gram_max_deviation);
        for (i, v) in states.iter().enumerate() {
            let sv = schmidt_oracle(v, d, dp);
            let rank = sv.iter().filter(|&&x| x > 1e-6).count();
            let rep = &r.per_state[i];
            ensure!(rank == rep.schmidt_number, "trial {trial} state {i}: rank {rank} vs {}", rep.schmidt_number);
            for (a, b) in sv.iter().zip(&rep.coefficients) {
                worst_coeff = worst_coeff.max((a - b).abs());
                ensure!((a - b).abs() <= 1e-9, "trial {trial} state {i}: coefficient {a} vs {b}");
            }
        }
    }
    Ok(format!("200 rotated bases; worst Gram gap {worst_gram:.1e}, worst coefficient gap {worst_coeff:.1e}"))
}

/// Classification under random local unitaries.
fn criterion_7() -> Outcome {
    let mut cases: Vec<(Vec<usize>, usize, Vec<Vec<C64>>)> = Vec::new();
    for (d, dp, k, fam) in [(3, 3, 3, Family::Meb), (4, 6, 3, Family::Sebk), (3, 3, 2, Family::Ebk), (3, 5, 2, Family::Ebk), (2, 2, 1, Family::Pb)]
    {
        let b = generate(&ConstructionRequest::new(d, dp, k, fam)).map_err(|e| e.to_string())?;
        cases.push((vec![d, dp], k, vectors(&b)));
    }
    cases.push((vec![3, 3], 2, eb2_unequal_3x3()));
    for (dims, k, fam) in [(&[2usize, 2, 2][..], 2, Family::Sebk), (&[3, 3, 3][..], 2, Family::Ebk), (&[2, 3, 4][..], 2, Family::Sebk)] {
        let b = generate_npartite(dims, k, fam, &CoefficientSource::Dft, Field::Complex).map_err(|e| e.to_string())?;
        cases.push((dims.to_vec(), k, b.tensors()));
    }
    let mut rng = StdRng::seed_from_u64(7);
    let mut seen = std::collections::BTreeSet::new();
    for trial in 0..50 {
        let (dims, k, states) = &cases[trial % cases.len()];
        let before = verify_tensors(dims, states, *k, &tol()).map_err(|e| e.to_string())?.classification;
        ensure!(before != Classification::Invalid, "case {} does not pass before rotation", trial % cases.len());
        let us: Vec<_> = dims.iter().map(|&d| random_unitary_oracle(d, &mut rng)).collect();
        let rotated: Vec<Vec<C64>> = states.iter().map(|t| apply_local(t, dims, &us)).collect();
        let after = verify_tensors(dims, &rotated, *k, &tol()).map_err(|e| e.to_string())?.classification;
        ensure!(before == after, "trial {trial} {dims:?}: {before} became {after}");
        seen.insert(format!("{dims:?}:{before}"));
    }
    Ok(format!("50 rotations over {} bases, classifications unchanged", cases.len()))
}

/// Distinct isometries give distinct passing bases.
fn criterion_8() -> Outcome {
    let mut rng = StdRng::seed_from_u64(8);
    let mut bases = Vec::new();
    for i in 0..20 {
        let u = random_unitary(3, &mut rng);
        let x = Isometry::new(u, Source::File, Field::Complex).map_err(|e| e.to_string())?;
        let req = ConstructionRequest::new(4, 6, 3, Family::Ebk).with_coeffs(CoefficientSource::Custom(x));
        let b = generate(&req).map_err(|e| format!("isometry {i}: {e}"))?;
        let r = verify_basis(&b, 3, &tol()).map_err(|e| e.to_string())?;
        ensure!(r.passed(), "isometry {i}: classified {}", r.classification);
        bases.push(vectors(&b));
    }
    for i in 0..bases.len() {
        for j in i + 1..bases.len() {
            // some state of basis i is far from every state of basis j
            let distinct = bases[i]
                .iter()
                .any(|a| bases[j].iter().map(|b| braket(a, b).norm_sqr()).fold(0.0, f64::max) < 1.0 - 1e-6);
            ensure!(distinct, "bases {i} and {j} coincide up to phases and order");
        }
    }
    Ok("20 random 3x3 isometries in 4x6, k = 3: all pass, 190 pairs distinct".into())
}

fn main() {
    let criteria: [(&str, fn() -> Outcome); 8] = [
        ("1 golden fixtures", criterion_1),
        ("2 bipartite grid", criterion_2),
        ("3 rank-k matrix bases", criterion_3),
        ("4 isometry column predicate", criterion_4),
        ("5 multipartite grid", criterion_5),
        ("6 oracle equivalence", criterion_6),
        ("7 local-unitary invariance", criterion_7),
        ("8 distinct isometries", criterion_8),
    ];
    let mut failed = 0;
    for (name, f) in criteria {
        let outcome = catch_unwind(AssertUnwindSafe(f)).unwrap_or_else(|p| {
            Err(p.downcast_ref::<String>().cloned().or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string())).unwrap_or_default())
        });
        match outcome {
            Ok(msg) => println!("PASS criterion {name}: {msg}"),
            Err(msg) => {
                failed += 1;
                println!("FAIL criterion {name}: {msg}");
            }
        }
    }
    println!("acceptance: {} passed, {failed} failed", 8 - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}
