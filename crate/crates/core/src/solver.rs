//! End-to-end decision and construction for X^⊤AX = B with symmetric B.
//!
//! Consistency of X^⊤AX = I_m requires m ≤ min(τ(A), υ(A)) for every A;
//! the bound is attained whenever A has no H̃₄(1) blocks, and also when
//! each H̃₄(1) can be paired with an H₂(−1). Unpaired H̃₄(1) blocks with
//! m within the bound fall outside the decidable region and are reported
//! as Undecided rather than guessed.

use std::collections::HashMap;

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::blocks::{permutation_p2k, Block, BlockKind, BlockSum};
use crate::engine::{EngineConfig, WitnessMode};
use crate::error::{Error, Result};
use crate::invariants::tau_upsilon;
use crate::matrix::Matrix;
use crate::reduction::{
    gamma_tilde2_drop, law_addition, law_elimination, law_permutation, lemma_j3, reduce, CaseTag,
    Justification, ReductionContext, TransformationChain, TransformationStep,
};
use crate::scalar::{GaussianRational, Scalar};

#[derive(Clone, Copy, Debug, PartialEq, Eq, serde::Serialize)]
pub enum DecisionStatus {
    Consistent,
    Inconsistent,
    Undecided,
}

/// Exact diagonal certificate: X0^⊤·A·X0 = diag(d) with all dᵢ ≠ 0.
#[derive(Clone, Debug)]
pub struct DiagonalCertificate {
    pub x0: Matrix,
    pub d: Vec<GaussianRational>,
}

#[derive(Clone, Debug)]
pub struct Decision {
    pub status: DecisionStatus,
    pub m: usize,
    pub tau: usize,
    pub upsilon: usize,
    pub min_bound: usize,
    pub notes: Vec<String>,
    pub chain: Option<TransformationChain>,
    pub x: Option<Matrix>,
    pub certificate: Option<DiagonalCertificate>,
    pub residual: Option<f64>,
    pub seed: u64,
}

/// Q invertible with Q^⊤BQ = diag(d₁..d_m) ⊕ 0_k, dᵢ ≠ 0.
#[derive(Clone, Debug)]
pub struct SymmetricNormalization {
    pub q: Matrix,
    pub m: usize,
    pub k: usize,
    pub d: Vec<GaussianRational>,
}

/// Lagrange congruence diagonalization of an exact symmetric matrix.
/// Pivots on nonzero diagonal entries; when the active diagonal is all
/// zero but some off-diagonal entry b_ij is not, the column operation
/// x_i ← x_i + x_j manufactures the pivot 2·b_ij.
pub fn normalize_symmetric(b: &Matrix) -> Result<SymmetricNormalization> {
    if !b.is_square() {
        return Err(Error::dim("normalize_symmetric", "matrix not square"));
    }
    if !b.is_exact() {
        return Err(Error::NotExact);
    }
    if !b.is_symmetric() {
        return Err(Error::NotSymmetric);
    }
    let n = b.rows();
    let mut w = b.clone();
    let mut q = Matrix::identity(n);
    let mut p = 0usize;
    // Congruence by E: w ← E^⊤·w·E, q ← q·E.
    let apply = |w: &mut Matrix, q: &mut Matrix, e: &Matrix| {
        *w = e.transpose().mul(w).unwrap().mul(e).unwrap();
        *q = q.mul(e).unwrap();
    };
    while p < n {
        let pivot_row = (p..n).find(|&i| !w[(i, i)].is_zero());
        let pivot_row = match pivot_row {
            Some(i) => i,
            None => {
                let off = (p..n)
                    .flat_map(|i| ((i + 1)..n).map(move |j| (i, j)))
                    .find(|&(i, j)| !w[(i, j)].is_zero());
                match off {
                    None => break, // active block entirely zero
                    Some((i, j)) => {
                        let mut e = Matrix::identity(n);
                        e[(j, i)] = Scalar::one();
                        apply(&mut w, &mut q, &e);
                        i
                    }
                }
            }
        };
        if pivot_row != p {
            let mut e = Matrix::zeros(n, n);
            for r in 0..n {
                let dest = if r == p {
                    pivot_row
                } else if r == pivot_row {
                    p
                } else {
                    r
                };
                e[(r, dest)] = Scalar::one();
            }
            apply(&mut w, &mut q, &e);
        }
        let pivot = w[(p, p)].clone();
        let pivot_inv = pivot.inv()?;
        let mut e = Matrix::identity(n);
        let mut nontrivial = false;
        for r in (p + 1)..n {
            if !w[(p, r)].is_zero() {
                e[(p, r)] = -&(&w[(p, r)] * &pivot_inv);
                nontrivial = true;
            }
        }
        if nontrivial {
            apply(&mut w, &mut q, &e);
        }
        p += 1;
    }
    let m = p;
    let d: Vec<GaussianRational> = (0..m)
        .map(|i| w[(i, i)].as_exact().cloned())
        .collect::<Result<_>>()?;
    // Everything below and right of the pivots is zero by construction.
    debug_assert!((m..n).all(|i| (m..n).all(|j| w[(i, j)].is_zero())));
    Ok(SymmetricNormalization {
        q,
        m,
        k: n - m,
        d,
    })
}

/// Decision without construction.
pub fn decide(a: &BlockSum, m: usize) -> Result<Decision> {
    decide_with_seed(a, m, crate::engine::DEFAULT_SEED)
}

pub fn decide_with_seed(a: &BlockSum, m: usize, seed: u64) -> Result<Decision> {
    a.validate().map_err(Error::InvalidBlock)?;
    let inv = tau_upsilon(a)?;
    let min_bound = inv.min();
    let mut notes = Vec::new();
    let status = if m == 0 {
        notes.push("m = 0: the empty solution is always valid".into());
        DecisionStatus::Consistent
    } else if m > min_bound {
        notes.push(format!(
            "necessary bound violated: m = {m} > min(tau, upsilon) = {min_bound}"
        ));
        DecisionStatus::Inconsistent
    } else {
        let h4 = a.count_matching(Block::is_h4_plus_one);
        let h2 = a.count_matching(Block::is_h2_minus_one);
        if h4 == 0 {
            notes.push("no H4(1) blocks: the bound m <= min(tau, upsilon) is attained".into());
            DecisionStatus::Consistent
        } else if h4 <= h2 {
            notes.push(format!(
                "each of the {h4} H4(1) blocks pairs with an H2(-1) and absorbs away"
            ));
            DecisionStatus::Consistent
        } else {
            notes.push(format!(
                "{h4} H4(1) blocks exceed {h2} H2(-1) blocks: consistency for m within \
                 the bound is not characterized by this library's decision theory"
            ));
            DecisionStatus::Undecided
        }
    };
    Ok(Decision {
        status,
        m,
        tau: inv.tau,
        upsilon: inv.upsilon,
        min_bound,
        notes,
        chain: None,
        x: None,
        certificate: None,
        residual: None,
        seed,
    })
}

/// Engine handle, fixture catalog and deflation randomness for solve().
pub struct SolverContext {
    pub rctx: ReductionContext,
    fixtures: HashMap<Block, (Matrix, Vec<GaussianRational>)>,
    rng: ChaCha8Rng,
    seed: u64,
}

impl SolverContext {
    pub fn new(seed: u64) -> Self {
        SolverContext {
            rctx: ReductionContext::new(seed),
            fixtures: HashMap::new(),
            rng: ChaCha8Rng::seed_from_u64(seed ^ 0x9e3779b97f4a7c15),
            seed,
        }
    }

    pub fn with_config(cfg: EngineConfig) -> Self {
        let seed = cfg.seed;
        SolverContext {
            rctx: ReductionContext::with_config(cfg),
            fixtures: HashMap::new(),
            rng: ChaCha8Rng::seed_from_u64(seed ^ 0x9e3779b97f4a7c15),
            seed,
        }
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }
}

const DEFLATE_TRIES_PER_STEP: usize = 32;
const DEFLATE_RESTARTS: usize = 16;

/// Randomized greedy deflation: maintains the admissible subspace V,
/// repeatedly picks w = V·c with w^⊤Aw ≠ 0 and shrinks V by the two
/// exact linear constraints. Candidates in the kernel of the restricted
/// skew part are preferred since they shrink V by only one dimension.
/// Returns exact (X0, d) with X0^⊤·A·X0 = diag(d), dᵢ ≠ 0.
pub fn greedy_deflate(
    a: &Matrix,
    m: usize,
    rng: &mut ChaCha8Rng,
) -> Result<(Matrix, Vec<GaussianRational>)> {
    deflate_impl(a, m, rng, false)
}

/// Exact block certificate by deflation: (X, d) with X^⊤AX = diag(d),
/// maximizing the number of unit entries in d. A fast direct search
/// handles the easy blocks reproducibly; the structural route goes
/// through a maximal isotropic subspace of the skew part (where the
/// form is symmetric), Lagrange-diagonalizes there and unit-normalizes
/// the diagonal as far as conic scans reach.
fn deflate_block_certificate(
    a: &Matrix,
    m: usize,
    rng: &mut ChaCha8Rng,
) -> Result<(Matrix, Vec<GaussianRational>)> {
    if !a.is_square() {
        return Err(Error::dim("deflate_block_certificate", "matrix not square"));
    }
    if !a.is_exact() {
        return Err(Error::NotExact);
    }
    let n = a.rows();
    if m == 0 {
        return Ok((Matrix::zeros(n, 0), Vec::new()));
    }
    let at = a.transpose();
    let half = Scalar::from_ratio(1, 2);
    let sym = a.add(&at)?.scale(&half);
    let skew = a.sub(&at)?.scale(&half);
    if let Some((x, _)) = deflate_once(a, &at, &skew, m, rng, true, true)? {
        return Ok((x, vec![GaussianRational::one(); m]));
    }
    // Deterministic starting bases: identity, then sparse elementary
    // tweaks. Small bases keep the diagonal values small, which is what
    // the conic scans need.
    let mut starts: Vec<Matrix> = vec![Matrix::identity(n)];
    let tweaks = [Scalar::one(), -Scalar::one(), Scalar::i(), Scalar::from_int(2)];
    'outer: for s in &tweaks {
        for i in 0..n {
            for j in 0..n {
                if i == j {
                    continue;
                }
                let mut w = Matrix::identity(n);
                w[(i, j)] = s.clone();
                starts.push(w);
                if starts.len() >= 32 {
                    break 'outer;
                }
            }
        }
    }
    for _ in 0..8 {
        let mut w;
        loop {
            w = Matrix::from_fn(n, n, |_, _| {
                let re = rng.random_range(-1i64..=1);
                let im = if rng.random_range(0..4u8) == 0 {
                    rng.random_range(-1i64..=1)
                } else {
                    0
                };
                Scalar::from_ints(re, im)
            });
            if !w.det()?.is_zero() {
                break;
            }
        }
        starts.push(w);
    }
    let mut best: Option<(Matrix, Vec<GaussianRational>)> = None;
    for (attempt, w0) in starts.iter().enumerate() {
        let Some((x, d)) = isotropic_attempt(a, &sym, &skew, m, w0)? else {
            continue;
        };
        let units = d.iter().filter(|v| v.is_one()).count();
        if units == m {
            return Ok((x, d));
        }
        let best_units = best
            .as_ref()
            .map_or(0, |(_, bd)| bd.iter().filter(|v| v.is_one()).count());
        if best.is_none() || units > best_units {
            best = Some((x, d));
        }
        // A valid diagonal certificate in hand is good enough; cap the
        // hunt for full unit scaling.
        if best.is_some() && attempt >= 23 {
            break;
        }
    }
    if let Some(hit) = best {
        return Ok(hit);
    }
    // Last resort: plain greedy deflation without unit scaling.
    deflate_impl(a, m, rng, false)
}

/// One attempt of the structural route: maximal skew-isotropic subspace
/// (Darboux split), exact Lagrange diagonalization of the symmetric
/// restriction, then partial unit normalization of the diagonal.
fn isotropic_attempt(
    a: &Matrix,
    sym: &Matrix,
    skew: &Matrix,
    m: usize,
    w0: &Matrix,
) -> Result<Option<(Matrix, Vec<GaussianRational>)>> {
    let u = maximal_isotropic(skew, w0)?;
    if u.cols() < m {
        return Ok(None);
    }
    let su = u.transpose().mul(sym)?.mul(&u)?;
    let norm = normalize_symmetric(&su)?;
    if norm.m < m {
        return Ok(None);
    }
    let (t, d_out) = diagonal_reduce(&norm.d, m)?;
    let q_cols = norm.q.submatrix(0, norm.q.rows(), 0, norm.m);
    let x = u.mul(&q_cols)?.mul(&t)?;
    let gram = x.transpose().mul(a)?.mul(&x)?;
    let mut expected = Matrix::zeros(m, m);
    for (i, v) in d_out.iter().enumerate() {
        expected[(i, i)] = Scalar::Exact(v.clone());
    }
    if gram != expected {
        return Err(Error::Census("isotropic construction lost exactness".into()));
    }
    Ok(Some((x, d_out)))
}

/// T with T^⊤·diag(d)·T = diag(d_out), |d_out| = m, with as many unit
/// entries as reachable. Entries with square values scale directly;
/// otherwise two entries d_p, d_q combine through a small
/// Gaussian-integer point of α²·d_p + β²·d_q = s², yielding one unit
/// vector and one fresh diagonal direction of value d_p·d_q·s². Stalled
/// entries pass through unscaled.
fn diagonal_reduce(d: &[GaussianRational], m: usize) -> Result<(Matrix, Vec<GaussianRational>)> {
    let mp = d.len();
    debug_assert!(m <= mp);
    let mut entries: Vec<(Matrix, GaussianRational)> = d
        .iter()
        .enumerate()
        .map(|(i, v)| {
            let mut col = Matrix::zeros(mp, 1);
            col[(i, 0)] = Scalar::one();
            (col, v.clone())
        })
        .collect();
    let mut units: Vec<Matrix> = Vec::new();
    while units.len() < m {
        if let Some(pos) = entries.iter().position(|(_, v)| v.sqrt_exact().is_some()) {
            let (col, v) = entries.remove(pos);
            let root = v.sqrt_exact().expect("checked above");
            units.push(col.scale(&Scalar::Exact(root.inv()?)));
            continue;
        }
        let Some((p, q, alpha, beta, s2)) = find_conic_point(&entries) else {
            break;
        };
        let (col_q, v_q) = entries.remove(q);
        let (col_p, v_p) = entries.remove(p);
        let root = s2.sqrt_exact().expect("scan verified squareness");
        let w = col_p
            .scale(&Scalar::Exact(alpha.clone()))
            .add(&col_q.scale(&Scalar::Exact(beta.clone())))?
            .scale(&Scalar::Exact(root.inv()?));
        units.push(w);
        // Complementary direction, diagonal value d_p·d_q·s².
        let w2 = col_p
            .scale(&Scalar::Exact(-(&beta * &v_q)))
            .add(&col_q.scale(&Scalar::Exact(&alpha * &v_p)))?;
        let value = &(&v_p * &v_q) * &s2;
        entries.push((w2, value));
    }
    let mut d_out: Vec<GaussianRational> = vec![GaussianRational::one(); units.len()];
    let mut cols = units;
    while cols.len() < m {
        let (col, v) = entries.remove(0);
        d_out.push(v);
        cols.push(col);
    }
    let mut t = cols[0].clone();
    for c in &cols[1..] {
        t = t.hstack(c)?;
    }
    Ok((t, d_out))
}

/// Small Gaussian-integer point of α²·d_p + β²·d_q = (square), over all
/// index pairs. Pairs whose values have grown huge are skipped: chained
/// combinations multiply numerators, and square hits on such values are
/// hopeless anyway.
fn find_conic_point(
    entries: &[(Matrix, GaussianRational)],
) -> Option<(usize, usize, GaussianRational, GaussianRational, GaussianRational)> {
    let small_enough = |v: &GaussianRational| -> bool {
        let n = v.norm_sqr();
        n.numer().bits() <= 96 && n.denom().bits() <= 96
    };
    for bound in [2i64, 4] {
        let coords: Vec<GaussianRational> = (-bound..=bound)
            .flat_map(|re| (-bound..=bound).map(move |im| GaussianRational::from_ints(re, im)))
            .collect();
        for p in 0..entries.len() {
            for q in (p + 1)..entries.len() {
                let v_p = &entries[p].1;
                let v_q = &entries[q].1;
                if !small_enough(v_p) || !small_enough(v_q) {
                    continue;
                }
                for alpha in &coords {
                    if alpha.is_zero() {
                        continue;
                    }
                    for beta in &coords {
                        if beta.is_zero() {
                            continue;
                        }
                        let s2 = &(&(alpha * alpha) * v_p) + &(&(beta * beta) * v_q);
                        if s2.is_zero() {
                            continue;
                        }
                        if s2.sqrt_exact().is_some() {
                            return Some((p, q, alpha.clone(), beta.clone(), s2));
                        }
                    }
                }
            }
        }
    }
    None
}

/// Basis of a maximal isotropic subspace of a skew form: hyperbolic
/// pairs are split off one at a time; the first halves together with the
/// radical span a subspace of dimension n − rank/2 on which the form
/// vanishes identically.
fn maximal_isotropic(skew: &Matrix, start: &Matrix) -> Result<Matrix> {
    let n = skew.rows();
    let mut w = start.clone();
    let mut halves: Vec<Matrix> = Vec::new();
    loop {
        let d = w.cols();
        if d == 0 {
            break;
        }
        let restricted = w.transpose().mul(skew)?.mul(&w)?;
        let mut pivot: Option<(usize, usize)> = None;
        'outer: for i in 0..d {
            for j in 0..d {
                if !restricted[(i, j)].is_zero() {
                    pivot = Some((i, j));
                    break 'outer;
                }
            }
        }
        let Some((i, j)) = pivot else { break };
        let a_vec = w.col(i);
        let b_vec = w.col(j);
        halves.push(a_vec.clone());
        // Shrink to the K-orthogonal complement of the pair.
        let r1 = a_vec.transpose().mul(skew)?.mul(&w)?;
        let r2 = b_vec.transpose().mul(skew)?.mul(&w)?;
        let null = r1.vstack(&r2)?.nullspace()?;
        let mut shrunk = Matrix::zeros(n, null.len());
        for (c, nb) in null.iter().enumerate() {
            let col = w.mul(nb)?;
            for r in 0..n {
                shrunk[(r, c)] = col[(r, 0)].clone();
            }
        }
        w = shrunk;
    }
    // Remaining w spans the radical (within the start basis); halves are
    // pairwise skew-orthogonal to it and to each other.
    let mut u = w;
    for h in halves {
        u = if u.cols() == 0 { h } else { u.hstack(&h)? };
    }
    debug_assert!(u
        .transpose()
        .mul(skew)
        .unwrap()
        .mul(&u)
        .unwrap()
        .is_zero());
    Ok(u)
}

fn deflate_impl(
    a: &Matrix,
    m: usize,
    rng: &mut ChaCha8Rng,
    unit: bool,
) -> Result<(Matrix, Vec<GaussianRational>)> {
    if !a.is_square() {
        return Err(Error::dim("greedy_deflate", "matrix not square"));
    }
    if !a.is_exact() {
        return Err(Error::NotExact);
    }
    let n = a.rows();
    if m == 0 {
        return Ok((Matrix::zeros(n, 0), Vec::new()));
    }
    if m > n {
        return Err(Error::InvalidRequest(format!("m = {m} exceeds n = {n}")));
    }
    let at = a.transpose();
    let half = Scalar::from_ratio(1, 2);
    let skew = a.sub(&at)?.scale(&half);
    for restart in 0..DEFLATE_RESTARTS {
        match deflate_once(a, &at, &skew, m, rng, unit, restart == 0)? {
            Some(hit) => return Ok(hit),
            None => continue,
        }
    }
    Err(Error::ConstructionBudget(format!(
        "deflation found no {} sequence of {m} admissible vectors",
        if unit { "unit-scalable" } else { "nonzero-value" }
    )))
}

fn deflate_once(
    a: &Matrix,
    at: &Matrix,
    skew: &Matrix,
    m: usize,
    rng: &mut ChaCha8Rng,
    unit: bool,
    deterministic_first: bool,
) -> Result<Option<(Matrix, Vec<GaussianRational>)>> {
    let n = a.rows();
    let mut v = Matrix::identity(n);
    let mut cols: Vec<Matrix> = Vec::new();
    let mut values: Vec<GaussianRational> = Vec::new();
    for _step in 0..m {
        let d = v.cols();
        if d == 0 {
            return Ok(None);
        }
        // Candidates in ker(V^⊤·skew·V) keep the shrink at one dimension.
        let skew_res = v.transpose().mul(skew)?.mul(&v)?;
        let kernel = skew_res.nullspace()?;
        let mut found: Option<(Matrix, GaussianRational)> = None;
        'search: for pool in [Some(kernel.as_slice()), None] {
            let (basis_cols, dim): (Option<&[Matrix]>, usize) = match pool {
                Some(kb) if !kb.is_empty() => (Some(kb), kb.len()),
                Some(_) => continue,
                None => (None, d),
            };
            for c in candidate_coefficients(dim, rng, deterministic_first) {
                let w_small = match basis_cols {
                    Some(kb) => {
                        let mut acc = Matrix::zeros(d, 1);
                        for (t, kcol) in c.iter().zip(kb.iter()) {
                            if !t.is_zero() {
                                acc = acc.add(&kcol.scale(t))?;
                            }
                        }
                        acc
                    }
                    None => {
                        Matrix::from_fn(d, 1, |i, _| c[i].clone())
                    }
                };
                if w_small.is_zero() {
                    continue;
                }
                let w = v.mul(&w_small)?;
                let q = w.transpose().mul(a)?.mul(&w)?;
                let q = q[(0, 0)].as_exact()?.clone();
                if q.is_zero() {
                    continue;
                }
                if unit {
                    if let Some(root) = q.sqrt_exact() {
                        let scaled = w.scale(&Scalar::Exact(root.inv()?));
                        found = Some((scaled, GaussianRational::one()));
                        break 'search;
                    }
                } else {
                    found = Some((w, q));
                    break 'search;
                }
            }
        }
        let found = match found {
            Some(hit) => Some(hit),
            None if unit => pair_completion(a, at, &v, rng)?,
            None => None,
        };
        let Some((w, value)) = found else {
            return Ok(None);
        };
        // Shrink V by w^⊤AV·c′ = 0 and w^⊤A^⊤V·c′ = 0.
        let r1 = w.transpose().mul(a)?.mul(&v)?;
        let r2 = w.transpose().mul(at)?.mul(&v)?;
        let constraints = r1.vstack(&r2)?;
        let null = constraints.nullspace()?;
        let mut shrunk = Matrix::zeros(n, null.len());
        for (j, b) in null.iter().enumerate() {
            let col = v.mul(b)?;
            for i in 0..n {
                shrunk[(i, j)] = col[(i, 0)].clone();
            }
        }
        v = shrunk;
        cols.push(w);
        values.push(value);
    }
    let mut x0 = cols[0].clone();
    for c in &cols[1..] {
        x0 = x0.hstack(c)?;
    }
    // Exactness check of the full diagonal identity.
    let gram = x0.transpose().mul(a)?.mul(&x0)?;
    let mut expected = Matrix::zeros(m, m);
    for (i, val) in values.iter().enumerate() {
        expected[(i, i)] = Scalar::Exact(val.clone());
    }
    if gram != expected {
        return Err(Error::Census("deflation produced a non-diagonal Gram matrix".into()));
    }
    Ok(Some((x0, values)))
}

/// When no single admissible vector has a perfect-square value, combine
/// two cross-orthogonal admissible vectors u, v: the value of αu + βv is
/// α²·q_u + β²·q_v, and a small Gaussian-integer scan usually lands on a
/// square.
fn pair_completion(
    a: &Matrix,
    at: &Matrix,
    v: &Matrix,
    rng: &mut ChaCha8Rng,
) -> Result<Option<(Matrix, GaussianRational)>> {
    let d = v.cols();
    let mut first: Option<(Matrix, GaussianRational)> = None;
    for c in candidate_coefficients(d, rng, true) {
        let w_small = Matrix::from_fn(d, 1, |i, _| c[i].clone());
        if w_small.is_zero() {
            continue;
        }
        let w = v.mul(&w_small)?;
        let q = w.transpose().mul(a)?.mul(&w)?[(0, 0)].as_exact()?.clone();
        if !q.is_zero() {
            first = Some((w, q));
            break;
        }
    }
    let Some((u, q_u)) = first else {
        return Ok(None);
    };
    // Admissible complement of u inside the current space.
    let r1 = u.transpose().mul(a)?.mul(v)?;
    let r2 = u.transpose().mul(at)?.mul(v)?;
    let null = r1.vstack(&r2)?.nullspace()?;
    if null.is_empty() {
        return Ok(None);
    }
    for nb in null.iter().take(4) {
        let w2 = v.mul(nb)?;
        let q_v = w2.transpose().mul(a)?.mul(&w2)?[(0, 0)].as_exact()?.clone();
        if q_v.is_zero() {
            continue;
        }
        for are in -3i64..=3 {
            for aim in 0i64..=3 {
                for bre in -3i64..=3 {
                    for bim in 0i64..=3 {
                        if (are == 0 && aim == 0) || (bre == 0 && bim == 0) {
                            continue;
                        }
                        let alpha = GaussianRational::from_ints(are, aim);
                        let beta = GaussianRational::from_ints(bre, bim);
                        let value = &(&(&alpha * &alpha) * &q_u) + &(&(&beta * &beta) * &q_v);
                        if value.is_zero() {
                            continue;
                        }
                        if let Some(root) = value.sqrt_exact() {
                            let w = u
                                .scale(&Scalar::Exact(alpha))
                                .add(&w2.scale(&Scalar::Exact(beta)))?
                                .scale(&Scalar::Exact(root.inv()?));
                            return Ok(Some((w, GaussianRational::one())));
                        }
                    }
                }
            }
        }
    }
    Ok(None)
}

/// Candidate coefficient vectors. The first restart tries canonical
/// units and pairs before random noise (so easy fixtures come out
/// reproducible); later restarts are purely random to escape greedy
/// dead ends.
fn candidate_coefficients(
    d: usize,
    rng: &mut ChaCha8Rng,
    deterministic_first: bool,
) -> Vec<Vec<Scalar>> {
    let mut out = Vec::new();
    if deterministic_first {
        let unit = |i: usize, s: Scalar| -> Vec<Scalar> {
            let mut v = vec![Scalar::zero(); d];
            v[i] = s;
            v
        };
        for i in 0..d {
            out.push(unit(i, Scalar::one()));
        }
        for i in 0..d.min(6) {
            for j in (i + 1)..d.min(6) {
                for (si, sj) in [
                    (Scalar::one(), Scalar::one()),
                    (Scalar::one(), -Scalar::one()),
                    (Scalar::one(), Scalar::i()),
                    (Scalar::one(), -Scalar::i()),
                ] {
                    let mut v = vec![Scalar::zero(); d];
                    v[i] = si;
                    v[j] = sj;
                    out.push(v);
                }
            }
        }
    }
    for _ in 0..DEFLATE_TRIES_PER_STEP {
        let v: Vec<Scalar> = (0..d)
            .map(|_| {
                let re = rng.random_range(-2i64..=2);
                let im = rng.random_range(-2i64..=2);
                Scalar::from_ints(re, im)
            })
            .collect();
        out.push(v);
    }
    out
}

/// Solves the Sylvester-type system W + W^⊤·J_k(μ) = I_k exactly, giving
/// the closed-form solution X = [I; W] with X^⊤·H_{2k}(μ)·X = I_k.
fn h_block_unit_solution(k: usize, mu: &GaussianRational) -> Result<Matrix> {
    // Unknowns w_{ij}: w_ij + μ·w_ji + [j ≥ 2]·w_{(j−1)i} = δ_ij.
    let nn = k * k;
    let mut lhs = Matrix::zeros(nn, nn);
    let mut rhs = Matrix::zeros(nn, 1);
    let idx = |i: usize, j: usize| i * k + j;
    for i in 0..k {
        for j in 0..k {
            let row = idx(i, j);
            lhs[(row, idx(i, j))] = &lhs[(row, idx(i, j))] + &Scalar::one();
            lhs[(row, idx(j, i))] = &lhs[(row, idx(j, i))] + &Scalar::Exact(mu.clone());
            if j >= 1 {
                lhs[(row, idx(j - 1, i))] = &lhs[(row, idx(j - 1, i))] + &Scalar::one();
            }
            if i == j {
                rhs[(row, 0)] = Scalar::one();
            }
        }
    }
    let sol = lhs
        .solve(&rhs)?
        .ok_or_else(|| Error::ConstructionBudget("H-block unit system inconsistent".into()))?;
    let w = Matrix::from_fn(k, k, |i, j| sol[(idx(i, j), 0)].clone());
    Ok(Matrix::identity(k).vstack(&w).expect("conformal"))
}

/// Exact diagonal certificate for a single block: (X, d) with
/// X^⊤·materialize(b)·X = diag(d), |d| = τ(b) and all dᵢ ≠ 0, preferring
/// unit values. The catalog is cached per block.
pub fn block_certificate(
    b: &Block,
    ctx: &mut SolverContext,
) -> Result<(Matrix, Vec<GaussianRational>)> {
    if b.is_h2_minus_one() {
        return Err(Error::InvalidRequest(
            "H2(-1) is skew: no nonzero symmetric restriction exists".into(),
        ));
    }
    if b.is_h4_plus_one() {
        return Err(Error::InvalidRequest(
            "H4(1) does not attain the bound; it must be paired with an H2(-1)".into(),
        ));
    }
    if let Some(hit) = ctx.fixtures.get(b) {
        return Ok(hit.clone());
    }
    let target_m = tau_upsilon(&BlockSum::single(b.clone()))?.tau;
    let mat = b.materialize();
    let entry: (Matrix, Vec<GaussianRational>) = match b.kind() {
        BlockKind::J if b.size() == 1 => (Matrix::zeros(1, 0), Vec::new()),
        BlockKind::J if b.size() == 3 => (lemma_j3()?.x, vec![GaussianRational::one(); 2]),
        BlockKind::J => deflate_block_certificate(&mat, target_m, &mut ctx.rng)?,
        BlockKind::Gamma if b.size() >= 2 => {
            // Reuse the tilde certificate through the exact congruence
            // P^⊤·Γ_k·P = Γ̃_k.
            let (p, mode) = ctx.rctx.gamma_tilde_witness(b.size())?;
            if mode == WitnessMode::Exact {
                let (xt, d) = block_certificate(&b.to_tilde(), ctx)?;
                (p.mul(&xt)?, d)
            } else {
                deflate_block_certificate(&mat, target_m, &mut ctx.rng)?
            }
        }
        BlockKind::Gamma | BlockKind::GammaTilde => {
            if b.size() == 1 {
                (Matrix::identity(1), vec![GaussianRational::one()])
            } else if b.size() == 2 && b.kind() == BlockKind::GammaTilde {
                (gamma_tilde2_drop()?.x, vec![GaussianRational::one()])
            } else {
                deflate_block_certificate(&mat, target_m, &mut ctx.rng)?
            }
        }
        BlockKind::H if b.size() >= 4 => {
            // Reuse the tilde certificate through P_{2k}.
            let k = b.size() / 2;
            let (xt, d) = block_certificate(&b.to_tilde(), ctx)?;
            (permutation_p2k(k).mul(&xt)?, d)
        }
        BlockKind::H | BlockKind::HTilde => {
            let mu = b.mu().expect("Type-II block carries mu");
            let one = GaussianRational::one();
            if mu == &one || mu == &(-one) {
                // H̃_{4k−2}(−1) with k ≥ 2 and H̃_{4k}(1) with k ≥ 2.
                deflate_block_certificate(&mat, target_m, &mut ctx.rng)?
            } else {
                let k = b.size() / 2;
                let x_plain = h_block_unit_solution(k, mu)?;
                let x = if b.kind() == BlockKind::HTilde {
                    permutation_p2k(k).transpose().mul(&x_plain)?
                } else {
                    x_plain
                };
                (x, vec![GaussianRational::one(); k])
            }
        }
    };
    let (x, d) = &entry;
    let check = x.transpose().mul(&mat)?.mul(x)?;
    let mut expected = Matrix::zeros(target_m, target_m);
    for (i, v) in d.iter().enumerate() {
        expected[(i, i)] = Scalar::Exact(v.clone());
    }
    if check != expected || d.len() != target_m || d.iter().any(GaussianRational::is_zero) {
        return Err(Error::Census(format!(
            "certificate for {b} failed exact verification"
        )));
    }
    ctx.fixtures.insert(b.clone(), entry.clone());
    Ok(entry)
}

/// Exact X with X^⊤·materialize(b)·X = I_{τ(b)}, when the block's
/// certificate is fully unit-scaled; fails with a construction-budget
/// error otherwise.
pub fn solve_block_to_identity(b: &Block, ctx: &mut SolverContext) -> Result<Matrix> {
    let (x, d) = block_certificate(b, ctx)?;
    if d.iter().all(GaussianRational::is_one) {
        Ok(x)
    } else {
        Err(Error::ConstructionBudget(format!(
            "no exact unit scaling found for {b}"
        )))
    }
}

/// What the right-hand side of the equation is.
#[derive(Clone, Debug)]
pub enum SolveTarget {
    /// B = I_m.
    IdentityRank(usize),
    /// B = I_m ⊕ 0_k, given abstractly.
    RankNullity { m: usize, k: usize },
    /// An explicit exact symmetric matrix.
    Symmetric(Matrix),
}

/// Decision with construction: decides, reduces, assembles X and
/// verifies it. The exact diagonal certificate is retained whenever the
/// whole chain stayed exact; irrational unit scalings fall back to a
/// float X verified against the tolerance.
pub fn solve(a: &BlockSum, target: &SolveTarget, ctx: &mut SolverContext) -> Result<Decision> {
    a.validate().map_err(Error::InvalidBlock)?;
    let n = a.total_size();
    let (q_opt, m, k_null, d_target) = match target {
        SolveTarget::IdentityRank(m) => (None, *m, 0usize, vec![GaussianRational::one(); *m]),
        SolveTarget::RankNullity { m, k } => (None, *m, *k, vec![GaussianRational::one(); *m]),
        SolveTarget::Symmetric(b) => {
            let norm = normalize_symmetric(b)?;
            (Some(norm.q), norm.m, norm.k, norm.d)
        }
    };
    let mut decision = decide_with_seed(a, m, ctx.seed())?;
    if decision.status != DecisionStatus::Consistent {
        return Ok(decision);
    }
    if m == 0 {
        let x = Matrix::zeros(n, k_null);
        decision.x = Some(x);
        decision.residual = Some(0.0);
        return Ok(decision);
    }

    let mut chain = TransformationChain::new(a.clone());
    // Strip J₁(0) blocks: permute them to the tail, then eliminate.
    let blocks = a.expanded_vec();
    let j1_positions: Vec<usize> = blocks
        .iter()
        .enumerate()
        .filter(|(_, b)| b.kind() == BlockKind::J && b.size() == 1)
        .map(|(i, _)| i)
        .collect();
    if !j1_positions.is_empty() {
        let keep: Vec<usize> = (0..blocks.len()).filter(|i| !j1_positions.contains(i)).collect();
        if keep.is_empty() {
            // A is a zero matrix; m ≥ 1 would have been rejected by the
            // bound, so this point is unreachable.
            return Err(Error::Census("all-J1 sum with m >= 1 passed the bound".into()));
        }
        let sigma: Vec<usize> = keep.iter().chain(j1_positions.iter()).copied().collect();
        if sigma.iter().enumerate().any(|(i, &s)| i != s) {
            let current = chain.current().clone();
            chain.push(law_permutation(&current, &sigma)?)?;
        }
        let kept_sum = BlockSum::from_blocks(keep.iter().map(|&i| blocks[i].clone()));
        let dropped = BlockSum::from_parts(vec![(Block::j(1)?, j1_positions.len())])?;
        chain.push(law_elimination(&kept_sum, &dropped)?)?;
    }

    // Absorption pipeline on the stripped sum.
    let stripped = chain.current().clone();
    let (reduction_chain, end_state, tag) = reduce(&stripped, &mut ctx.rctx)?;
    for step in reduction_chain.steps() {
        chain.push(step.clone())?;
    }

    let construction = construct_certificates(&end_state, tag, ctx);
    let (pre_steps, per_block) = match construction {
        Ok(v) => v,
        Err(Error::ConstructionBudget(msg)) => {
            decision
                .notes
                .push(format!("construction budget exhausted: {msg}"));
            decision.chain = Some(chain);
            return Ok(decision);
        }
        Err(e) => return Err(e),
    };
    for step in pre_steps {
        chain.push(step)?;
    }
    let all_unit = per_block
        .iter()
        .all(|(_, _, d)| d.iter().all(GaussianRational::is_one));
    let (x1, d_all): (Matrix, Vec<GaussianRational>) = if all_unit {
        // The whole construction is a formal chain: per-block steps to
        // Γ₁ powers combined by the Addition law, then Elimination down
        // to rank m.
        let mut parts = Vec::new();
        let mut total = 0usize;
        for (b, x, d) in &per_block {
            let tau_b = d.len();
            let justification = match b.kind() {
                BlockKind::J if b.size() == 3 => Justification::LemmaJ3,
                BlockKind::GammaTilde if b.size() == 2 => Justification::GammaTilde2Drop,
                _ => Justification::Deflation,
            };
            let target = BlockSum::from_parts(if tau_b > 0 {
                vec![(Block::gamma(1)?, tau_b)]
            } else {
                vec![]
            })?;
            parts.push(TransformationStep::verified(
                BlockSum::single(b.clone()),
                target,
                x.clone(),
                justification,
            )?);
            total += tau_b;
        }
        if !parts.is_empty() {
            let addition = law_addition(parts)?;
            let trivial =
                addition.source == addition.target && addition.x == Matrix::identity(addition.x.rows());
            if !trivial {
                chain.push(addition)?;
            }
        }
        debug_assert!(total >= m, "invariants guarantee tau/upsilon >= m");
        if total > m {
            let keep = BlockSum::from_parts(vec![(Block::gamma(1)?, m)])?;
            let drop = BlockSum::from_parts(vec![(Block::gamma(1)?, total - m)])?;
            chain.push(law_elimination(&keep, &drop)?)?;
        }
        (chain.composed_x().clone(), vec![GaussianRational::one(); m])
    } else {
        // Mixed certificate: compose the chain witness with the direct
        // sum of block certificates and keep the m best columns (unit
        // values first). The chain stops at the reduced state; the
        // certificate carries the rest.
        let xs: Vec<Matrix> = per_block.iter().map(|(_, x, _)| x.clone()).collect();
        let xb = Matrix::direct_sum_all(&xs);
        let x0_full = chain.composed_x().mul(&xb)?;
        let d_concat: Vec<GaussianRational> = per_block
            .iter()
            .flat_map(|(_, _, d)| d.iter().cloned())
            .collect();
        let mut order: Vec<usize> = (0..d_concat.len())
            .filter(|&i| d_concat[i].is_one())
            .collect();
        order.extend((0..d_concat.len()).filter(|&i| !d_concat[i].is_one()));
        debug_assert!(order.len() >= m);
        let mut x1 = x0_full.col(order[0]);
        for &idx in &order[1..m] {
            x1 = x1.hstack(&x0_full.col(idx))?;
        }
        let d_all: Vec<GaussianRational> =
            order[..m].iter().map(|&i| d_concat[i].clone()).collect();
        (x1, d_all)
    };
    let chain_residual = chain.verify()?;

    // Reassemble for the actual right-hand side: the i-th column needs
    // the scaling √(d_targetᵢ/d_allᵢ), exact when every ratio is a
    // square in ℚ(i).
    let ratios: Vec<GaussianRational> = d_target
        .iter()
        .zip(&d_all)
        .map(|(t, s)| t / s)
        .collect();
    let all_roots_exact: Option<Vec<GaussianRational>> =
        ratios.iter().map(GaussianRational::sqrt_exact).collect();
    let x_full = {
        let scaled = match &all_roots_exact {
            Some(roots) => {
                let mut diag = Matrix::zeros(m, m);
                for (i, r) in roots.iter().enumerate() {
                    diag[(i, i)] = Scalar::Exact(r.clone());
                }
                x1.mul(&diag)?
            }
            None => {
                let mut diag = Matrix::zeros(m, m);
                for (i, ratio) in ratios.iter().enumerate() {
                    let root = crate::engine::branch_sqrt_c64(ratio.to_c64());
                    diag[(i, i)] = Scalar::float(root);
                }
                x1.to_float().mul(&diag)?
            }
        };
        let padded = scaled.hstack(&Matrix::zeros(n, k_null))?;
        match &q_opt {
            Some(q) => padded.mul(&q.inverse()?)?,
            None => padded,
        }
    };

    // Verify the assembled solution against B.
    let b_matrix = match target {
        SolveTarget::Symmetric(b) => b.clone(),
        _ => {
            let mut b = Matrix::zeros(m + k_null, m + k_null);
            for i in 0..m {
                b[(i, i)] = Scalar::one();
            }
            b
        }
    };
    let a_mat = a.materialize();
    let check = x_full.transpose().mul(&a_mat)?.mul(&x_full)?;
    let residual = if x_full.is_exact() && chain.mode() == WitnessMode::Exact {
        if check != b_matrix {
            return Err(Error::Census("exact solution failed verification".into()));
        }
        0.0
    } else {
        let r = check.sub(&b_matrix)?.max_abs();
        let tol = ctx.rctx.engine.tolerance() * b_matrix.max_abs().max(1.0);
        if r > tol {
            return Err(Error::Census(format!(
                "assembled solution residual {r:.3e} exceeds tolerance"
            )));
        }
        r.max(chain_residual)
    };

    if x1.is_exact() && chain.mode() == WitnessMode::Exact {
        decision.certificate = Some(DiagonalCertificate { x0: x1, d: d_all });
    }
    decision.chain = Some(chain);
    decision.x = Some(x_full);
    decision.residual = Some(residual);
    Ok(decision)
}

/// C1 cleanup steps (eliminating H₂(−1) and inert J₁ leftovers) plus the
/// per-block diagonal certificates of everything that remains.
#[allow(clippy::type_complexity)]
fn construct_certificates(
    end: &BlockSum,
    tag: CaseTag,
    ctx: &mut SolverContext,
) -> Result<(Vec<TransformationStep>, Vec<(Block, Matrix, Vec<GaussianRational>)>)> {
    let mut steps = Vec::new();
    let mut working = end.clone();
    if tag == CaseTag::C1 {
        // Permute the H₂(−1) (and inert J₁) blocks to the tail, eliminate.
        let blocks = working.expanded_vec();
        let dead: Vec<usize> = blocks
            .iter()
            .enumerate()
            .filter(|(_, b)| b.is_h2_minus_one() || (b.kind() == BlockKind::J && b.size() == 1))
            .map(|(i, _)| i)
            .collect();
        if !dead.is_empty() {
            let keep: Vec<usize> = (0..blocks.len()).filter(|i| !dead.contains(i)).collect();
            let sigma: Vec<usize> = keep.iter().chain(dead.iter()).copied().collect();
            if sigma.iter().enumerate().any(|(i, &s)| i != s) {
                let step = law_permutation(&working, &sigma)?;
                steps.push(step);
            }
            let kept_sum = BlockSum::from_blocks(keep.iter().map(|&i| blocks[i].clone()));
            let dropped = BlockSum::from_blocks(dead.iter().map(|&i| blocks[i].clone()));
            let step = law_elimination(&kept_sum, &dropped)?;
            working = step.target.clone();
            steps.push(step);
        }
    }
    let mut per_block = Vec::new();
    for b in working.expanded_vec() {
        let (x, d) = block_certificate(&b, ctx)?;
        per_block.push((b, x, d));
    }
    Ok((steps, per_block))
}

/// Verification report for an explicit (A, X, B) triple.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum VerifyMode {
    Exact,
    Tolerance(f64),
}

#[derive(Clone, Debug)]
pub struct VerifyReport {
    pub pass: bool,
    pub residual: f64,
    pub exact: bool,
}

pub fn verify(a: &Matrix, x: &Matrix, b: &Matrix, mode: VerifyMode) -> Result<VerifyReport> {
    if x.rows() != a.rows() || !a.is_square() || !b.is_square() || x.cols() != b.rows() {
        return Err(Error::dim(
            "verify",
            format!(
                "A is {}x{}, X is {}x{}, B is {}x{}",
                a.rows(),
                a.cols(),
                x.rows(),
                x.cols(),
                b.rows(),
                b.cols()
            ),
        ));
    }
    let lhs = x.transpose().mul(a)?.mul(x)?;
    let all_exact = a.is_exact() && x.is_exact() && b.is_exact();
    match mode {
        VerifyMode::Exact => {
            if !all_exact {
                return Err(Error::NotExact);
            }
            let pass = lhs == *b;
            Ok(VerifyReport {
                pass,
                residual: if pass { 0.0 } else { lhs.sub(b)?.max_abs() },
                exact: true,
            })
        }
        VerifyMode::Tolerance(t) => {
            let residual = lhs.sub(b)?.max_abs();
            Ok(VerifyReport {
                pass: residual <= t,
                residual,
                exact: all_exact && residual == 0.0,
            })
        }
    }
}
