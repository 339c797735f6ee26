//! Constructive congruence between invertible matrices.
//!
//! Two invertible matrices are congruent exactly when their cosquares
//! A^{−⊤}A are similar, and the proof can be run forwards: from a
//! similarity S of the cosquares, B′ = S^⊤BS shares its cosquare with A,
//! M = A⁻¹B′ is A-selfadjoint, and a square root R of M that is a
//! polynomial in M yields the witness P = R·S⁻¹ with P^⊤AP = B.
//!
//! The similarity search, the square root, and the final witness are all
//! verified before being returned; exact (Gaussian-rational) paths are
//! preferred and a numeric fallback covers spectra that leave ℚ(i).

use num_complex::Complex64;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::cmatrix::CMatrix;
use crate::error::{Error, Result};
use crate::matrix::{deflate_poly, eval_poly, Matrix};
use crate::scalar::{GaussianRational, Scalar};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum WitnessMode {
    Exact,
    Numeric,
}

/// A verified congruence certificate: P^⊤·A·P = B with residual 0 in
/// exact mode, or max-entry residual ≤ tolerance in numeric mode.
#[derive(Clone, Debug)]
pub struct CongruenceWitness {
    pub p: Matrix,
    pub residual: f64,
    pub mode: WitnessMode,
    pub seed: u64,
}

#[derive(Clone, Debug)]
pub struct EngineConfig {
    pub seed: u64,
    pub tolerance: f64,
    /// S-resamples attempted on the exact square-root path.
    pub exact_attempts: usize,
    /// S-resamples attempted on the numeric square-root path.
    pub numeric_attempts: usize,
    pub newton_restarts: usize,
    pub newton_iters: usize,
}

pub const DEFAULT_SEED: u64 = 20240901;

impl Default for EngineConfig {
    fn default() -> Self {
        EngineConfig {
            seed: DEFAULT_SEED,
            tolerance: 1e-9,
            exact_attempts: 24,
            numeric_attempts: 4,
            newton_restarts: 16,
            newton_iters: 100,
        }
    }
}

pub struct CongruenceEngine {
    cfg: EngineConfig,
    rng: ChaCha8Rng,
}

/// A^{−⊤}·A, exactly.
pub fn cosquare(a: &Matrix) -> Result<Matrix> {
    if !a.is_square() {
        return Err(Error::dim("cosquare", "matrix not square"));
    }
    let inv_t = a.inverse()?.transpose();
    inv_t.mul(a)
}

impl CongruenceEngine {
    pub fn new(cfg: EngineConfig) -> Self {
        let rng = ChaCha8Rng::seed_from_u64(cfg.seed);
        CongruenceEngine { cfg, rng }
    }

    pub fn with_seed(seed: u64) -> Self {
        Self::new(EngineConfig {
            seed,
            ..Default::default()
        })
    }

    pub fn seed(&self) -> u64 {
        self.cfg.seed
    }

    pub fn tolerance(&self) -> f64 {
        self.cfg.tolerance
    }

    /// Exact basis of the intertwiner space {S : C1·S = S·C2}, after the
    /// characteristic-polynomial fast-fail. An empty space, like a
    /// char-poly mismatch, certifies non-similarity.
    fn similarity_space(&self, c1: &Matrix, c2: &Matrix) -> Result<Vec<Matrix>> {
        if !c1.is_square() || !c2.is_square() || c1.rows() != c2.rows() {
            return Err(Error::dim("find_similarity", "need square matrices of equal size"));
        }
        if c1.char_poly()? != c2.char_poly()? {
            return Err(Error::NotSimilar);
        }
        let kernel = sylvester_kernel(c1, c2)?;
        if kernel.is_empty() {
            return Err(Error::NotSimilar);
        }
        Ok(kernel)
    }

    /// Random small-integer combination of the kernel basis with
    /// nonzero determinant; invertible elements are generic when the
    /// matrices are similar. Coefficients start at ±1 to keep entry
    /// growth down and widen twice.
    fn sample_intertwiner(&mut self, kernel: &[Matrix]) -> Result<Matrix> {
        let n = kernel[0].rows();
        for range in [1i64, 3, 9] {
            for _ in 0..43 {
                let mut s = Matrix::zeros(n, n);
                for b in kernel {
                    let t = self.rng.random_range(-range..=range);
                    if t != 0 {
                        s = s.add(&b.scale(&Scalar::from_int(t)))?;
                    }
                }
                if !s.det()?.is_zero() {
                    return Ok(s);
                }
            }
        }
        Err(Error::SimilaritySearchExhausted)
    }

    /// Invertible S with C1·S = S·C2, i.e. S⁻¹·C1·S = C2.
    ///
    /// Fast-fails on differing characteristic polynomials; computes the
    /// exact nullspace of S ↦ C1·S − S·C2 and samples random small-integer
    /// combinations until one is invertible. When sampling exhausts its
    /// budget and the spectrum is exactly computable in ℚ(i), Jordan
    /// structures settle similarity with certainty (and produce S when
    /// the structures agree).
    pub fn find_similarity(&mut self, c1: &Matrix, c2: &Matrix) -> Result<Matrix> {
        if c1.rows() == 0 && c2.rows() == 0 && c1.is_square() && c2.is_square() {
            return Ok(Matrix::identity(0));
        }
        let kernel = self.similarity_space(c1, c2)?;
        match self.sample_intertwiner(&kernel) {
            Ok(s) => {
                debug_assert_eq!(c1.mul(&s).unwrap(), s.mul(c2).unwrap());
                Ok(s)
            }
            Err(Error::SimilaritySearchExhausted) => {
                if let Some(spectrum) = exact_spectrum(&c1.char_poly()?) {
                    let (basis1, structure1) = jordan_basis(c1, &spectrum)?;
                    let (basis2, structure2) = jordan_basis(c2, &spectrum)?;
                    if structure1 != structure2 {
                        return Err(Error::NotSimilar);
                    }
                    let s = basis1.mul(&basis2.inverse()?)?;
                    debug_assert_eq!(c1.mul(&s).unwrap(), s.mul(c2).unwrap());
                    return Ok(s);
                }
                Err(Error::SimilaritySearchExhausted)
            }
            Err(e) => Err(e),
        }
    }

    /// Square root R of M with R² = M and R a polynomial in M (so R
    /// commutes with everything commuting with M). Branch: for an
    /// eigenvalue r·e^{iθ}, θ ∈ (−π, π], the root √r·e^{iθ/2} is taken.
    pub fn primary_sqrt(&mut self, m: &Matrix) -> Result<(Matrix, WitnessMode)> {
        if !m.is_square() {
            return Err(Error::dim("primary_sqrt", "matrix not square"));
        }
        if m.rows() == 0 {
            return Ok((Matrix::identity(0), WitnessMode::Exact));
        }
        if m.is_exact() {
            if m.det()?.is_zero() {
                return Err(Error::Singular);
            }
            if let Some(r) = sqrt_exact_path(m)? {
                return Ok((r, WitnessMode::Exact));
            }
        }
        let r = self.sqrt_numeric(m)?;
        Ok((r, WitnessMode::Numeric))
    }

    fn sqrt_numeric(&mut self, m: &Matrix) -> Result<Matrix> {
        // Rational spectra take the radical-split route: the components
        // are exact, so the float fold is accurate to rounding.
        if m.is_exact() {
            if let Some(spectrum) = exact_spectrum(&m.char_poly()?) {
                let split = spectral_sqrt(m, &spectrum)?;
                let r = split.fold_float();
                let res = sqrt_residual(&CMatrix::from_matrix(&r), &CMatrix::from_matrix(m));
                if res <= self.cfg.tolerance * m.max_abs().max(1.0) {
                    return Ok(r);
                }
            }
        }
        let cm = CMatrix::from_matrix(m);
        let coeffs: Vec<Complex64> = if m.is_exact() {
            m.char_poly()?.iter().map(|c| c.to_c64()).collect()
        } else {
            numeric_char_poly(&cm)
        };
        let roots = durand_kerner(&coeffs);
        let scale = roots.iter().map(|r| r.norm()).fold(1.0_f64, f64::max);
        let clusters = cluster_roots(&roots, 0.05 * scale);
        if clusters.iter().any(|(c, _)| c.norm() < 1e-12 * scale) {
            return Err(Error::Singular);
        }
        let mut r = numeric_hermite_sqrt(&cm, &clusters);
        // Newton refinement; the iterate stays (numerically) a polynomial
        // in M because the starting point is one.
        let mut best = r.clone();
        let mut best_res = sqrt_residual(&best, &cm);
        for _ in 0..20 {
            let Some(rinv) = r.inverse() else { break };
            r = r.add(&rinv.mul(&cm)).scale(Complex64::new(0.5, 0.0));
            let res = sqrt_residual(&r, &cm);
            if res < best_res {
                best_res = res;
                best = r.clone();
            } else {
                break;
            }
        }
        let denom = cm.max_abs().max(1.0);
        if best_res / denom <= self.cfg.tolerance {
            Ok(best.to_matrix())
        } else {
            Err(Error::SqrtFailure(format!(
                "numeric square root residual {best_res:.3e} exceeds tolerance"
            )))
        }
    }

    /// Constructive congruence: verified P with P^⊤·A·P = B.
    pub fn find_congruence(&mut self, a: &Matrix, b: &Matrix) -> Result<CongruenceWitness> {
        if !a.is_square() || !b.is_square() || a.rows() != b.rows() {
            return Err(Error::dim("find_congruence", "need square matrices of equal size"));
        }
        if a.rows() == 0 {
            return Ok(CongruenceWitness {
                p: Matrix::identity(0),
                residual: 0.0,
                mode: WitnessMode::Exact,
                seed: self.cfg.seed,
            });
        }
        if !a.is_exact() || !b.is_exact() {
            return self.newton_fallback(a, b);
        }
        let ca = cosquare(a)?;
        let cb = cosquare(b)?;
        let kernel = match self.similarity_space(&cb, &ca) {
            Ok(k) => k,
            Err(Error::NotSimilar) => return Err(Error::NotCongruent),
            Err(e) => return Err(e),
        };
        let a_inv = a.inverse()?;
        // Hunt for an S whose M = A⁻¹·S^⊤BS has a fully square spectrum
        // (exact witness); remember the first rational spectrum seen for
        // the radical-split fallback and the first S at all for the
        // Durand–Kerner one.
        let mut radical_candidate: Option<(Matrix, Matrix, Vec<(GaussianRational, usize)>)> = None;
        let mut plain_candidate: Option<(Matrix, Matrix)> = None;
        // Each hunting attempt costs one characteristic polynomial of M.
        // Rational spectra are the gate to verified witnesses, so the
        // budget is deliberately generous.
        for _ in 0..self.cfg.exact_attempts {
            let Ok(s) = self.sample_intertwiner(&kernel) else {
                break;
            };
            let b_prime = s.transpose().mul(b)?.mul(&s)?;
            let m = a_inv.mul(&b_prime)?;
            assert_eq!(
                a.mul(&m).unwrap(),
                m.transpose().mul(a).unwrap(),
                "intertwining identity A·M = M^⊤·A must hold once S is a similarity"
            );
            let Some(spectrum) = exact_spectrum(&m.char_poly()?) else {
                plain_candidate.get_or_insert((s, m));
                continue;
            };
            let all_square = spectrum.iter().all(|(l, _)| l.sqrt_exact().is_some());
            if all_square {
                let split = spectral_sqrt(&m, &spectrum)?;
                let r = split.fold_exact()?.expect("all radicals exact");
                let p = r.mul(&s.inverse()?)?;
                let check = p.transpose().mul(a)?.mul(&p)?;
                assert_eq!(check, *b, "exact congruence witness must verify");
                return Ok(CongruenceWitness {
                    p,
                    residual: 0.0,
                    mode: WitnessMode::Exact,
                    seed: self.cfg.seed,
                });
            }
            if radical_candidate.is_none() {
                radical_candidate = Some((s, m, spectrum));
            }
        }
        if let Some((s, m, spectrum)) = radical_candidate {
            // R = Σ √λᵢ·Gᵢ with exact Gᵢ: the congruence identity splits
            // into rational pieces that are verified exactly inside
            // spectral_sqrt, so the float witness carries only rounding
            // error.
            let split = spectral_sqrt(&m, &spectrum)?;
            let s_inv = s.inverse()?;
            let p = split.fold_float().mul(&s_inv)?;
            let residual = congruence_residual(a, &p, b);
            if residual <= self.cfg.tolerance * b.max_abs().max(1.0) {
                return Ok(CongruenceWitness {
                    p,
                    residual,
                    mode: WitnessMode::Numeric,
                    seed: self.cfg.seed,
                });
            }
        }
        if let Some((s, m)) = plain_candidate {
            for _ in 0..self.cfg.numeric_attempts {
                if let Ok(r) = self.sqrt_numeric(&m) {
                    let p = r.mul(&s.inverse()?)?;
                    let res = congruence_residual(a, &p, b);
                    if res <= self.cfg.tolerance * b.max_abs().max(1.0) {
                        return Ok(CongruenceWitness {
                            p,
                            residual: res,
                            mode: WitnessMode::Numeric,
                            seed: self.cfg.seed,
                        });
                    }
                }
            }
        }
        self.newton_fallback(a, b)
    }

    /// Damped Gauss-Newton on F(P) = P^⊤AP − B from random starts.
    fn newton_fallback(&mut self, a: &Matrix, b: &Matrix) -> Result<CongruenceWitness> {
        let n = a.rows();
        let ca = CMatrix::from_matrix(a);
        let cb = CMatrix::from_matrix(b);
        let tol = self.cfg.tolerance * cb.max_abs().max(1.0);
        for _ in 0..self.cfg.newton_restarts {
            let mut p = CMatrix::zeros(n, n);
            for i in 0..n {
                for j in 0..n {
                    p.set(
                        i,
                        j,
                        Complex64::new(
                            self.rng.random_range(-1.0..1.0),
                            self.rng.random_range(-1.0..1.0),
                        ),
                    );
                }
            }
            let mut res = newton_residual(&ca, &p, &cb);
            for _ in 0..self.cfg.newton_iters {
                if res <= tol {
                    break;
                }
                let Some(step) = newton_step(&ca, &p, &cb) else {
                    break;
                };
                let mut t = 1.0;
                let mut improved = false;
                while t > 1.0 / 1024.0 {
                    let candidate = p.add(&step.scale(Complex64::new(t, 0.0)));
                    let cand_res = newton_residual(&ca, &candidate, &cb);
                    if cand_res < res {
                        p = candidate;
                        res = cand_res;
                        improved = true;
                        break;
                    }
                    t *= 0.5;
                }
                if !improved {
                    break;
                }
            }
            if res <= tol {
                return Ok(CongruenceWitness {
                    p: p.to_matrix(),
                    residual: res,
                    mode: WitnessMode::Numeric,
                    seed: self.cfg.seed,
                });
            }
        }
        Err(Error::CongruenceNotFound)
    }
}

/// Max-entry residual of P^⊤AP − B in floats.
pub fn congruence_residual(a: &Matrix, p: &Matrix, b: &Matrix) -> f64 {
    let ca = CMatrix::from_matrix(a);
    let cp = CMatrix::from_matrix(p);
    let cb = CMatrix::from_matrix(b);
    newton_residual(&ca, &cp, &cb)
}

fn newton_residual(a: &CMatrix, p: &CMatrix, b: &CMatrix) -> f64 {
    p.transpose().mul(a).mul(p).sub(b).max_abs()
}

fn sqrt_residual(r: &CMatrix, m: &CMatrix) -> f64 {
    r.mul(r).sub(m).max_abs()
}

/// Gauss-Newton step: solve (GᴴG + εI)·d = −Gᴴ·f for the linearization
/// G[Δ] = Δ^⊤AP + P^⊤AΔ.
fn newton_step(a: &CMatrix, p: &CMatrix, b: &CMatrix) -> Option<CMatrix> {
    let n = a.rows;
    let nn = n * n;
    let ap = a.mul(p);
    let pta = p.transpose().mul(a);
    let mut g = CMatrix::zeros(nn, nn);
    for i in 0..n {
        for j in 0..n {
            let row = i * n + j;
            for q in 0..n {
                // d/dP(p,q) [Δ^⊤AP](i,j) contributes when q = i
                for pp in 0..n {
                    if q == i {
                        let v = g.at(row, pp * n + q) + ap.at(pp, j);
                        g.set(row, pp * n + q, v);
                    }
                }
                // d/dP(p,q) [P^⊤AΔ](i,j) contributes when q = j
                if q == j {
                    for pp in 0..n {
                        let v = g.at(row, pp * n + q) + pta.at(i, pp);
                        g.set(row, pp * n + q, v);
                    }
                }
            }
        }
    }
    let f = p.transpose().mul(a).mul(p).sub(b);
    let mut fvec = CMatrix::zeros(nn, 1);
    for i in 0..n {
        for j in 0..n {
            fvec.set(i * n + j, 0, f.at(i, j));
        }
    }
    // Normal equations with a small Tikhonov term: the Jacobian is
    // singular along the isometry orbit of B.
    let gh = conj_transpose(&g);
    let mut lhs = gh.mul(&g);
    let eps = 1e-10 * (1.0 + lhs.max_abs());
    for i in 0..nn {
        let v = lhs.at(i, i) + Complex64::new(eps, 0.0);
        lhs.set(i, i, v);
    }
    let rhs = gh.mul(&fvec).scale(Complex64::new(-1.0, 0.0));
    let d = lhs.solve(&rhs)?;
    let mut step = CMatrix::zeros(n, n);
    for i in 0..n {
        for j in 0..n {
            step.set(i, j, d.at(i * n + j, 0));
        }
    }
    Some(step)
}

fn conj_transpose(m: &CMatrix) -> CMatrix {
    let mut out = CMatrix::zeros(m.cols, m.rows);
    for i in 0..m.rows {
        for j in 0..m.cols {
            out.set(j, i, m.at(i, j).conj());
        }
    }
    out
}

/// A square root of M in radical-split form: R = Σᵢ √λᵢ·Gᵢ, with each Gᵢ
/// an exact rational polynomial in M. The components satisfy Gᵢ·Gⱼ = 0
/// for i ≠ j and Σᵢ λᵢ·Gᵢ² = M exactly, so every identity involving R
/// splits into exactly-checkable rational pieces regardless of which
/// radicals √λᵢ are irrational.
struct SpectralSqrt {
    components: Vec<(GaussianRational, Matrix)>,
}

impl SpectralSqrt {
    /// Exact R when every √λᵢ lies in ℚ(i), None otherwise.
    fn fold_exact(&self) -> Result<Option<Matrix>> {
        let n = self.components[0].1.rows();
        let mut acc = Matrix::zeros(n, n);
        for (lambda, g) in &self.components {
            let Some(root) = lambda.sqrt_exact() else {
                return Ok(None);
            };
            acc = acc.add(&g.scale(&Scalar::Exact(root)))?;
        }
        Ok(Some(acc))
    }

    /// Float R = Σ √λᵢ·Gᵢ; accurate to rounding because the Gᵢ are exact.
    fn fold_float(&self) -> Matrix {
        let n = self.components[0].1.rows();
        let mut acc = CMatrix::zeros(n, n);
        for (lambda, g) in &self.components {
            let root = branch_sqrt(lambda.to_c64());
            acc = acc.add(&CMatrix::from_matrix(g).scale(root));
        }
        acc.to_matrix()
    }
}

/// Square root of M with fully rational spectrum, in radical-split form.
///
/// For each eigenvalue, Gᵢ = qᵢ(M) where qᵢ is the Hermite interpolant of
/// the normalized branch √x/√λᵢ at λᵢ (whose jet is rational) and of the
/// zero jet at every other eigenvalue.
fn spectral_sqrt(m: &Matrix, spectrum: &[(GaussianRational, usize)]) -> Result<SpectralSqrt> {
    let mut nodes: Vec<GaussianRational> = Vec::new();
    let mut node_cluster: Vec<usize> = Vec::new();
    for (ci, (lambda, mult)) in spectrum.iter().enumerate() {
        if lambda.is_zero() {
            return Err(Error::Singular);
        }
        for _ in 0..*mult {
            nodes.push(lambda.clone());
            node_cluster.push(ci);
        }
    }
    let mut components = Vec::new();
    for (ci, (lambda, _)) in spectrum.iter().enumerate() {
        let jets: Vec<Vec<GaussianRational>> = spectrum
            .iter()
            .enumerate()
            .map(|(cj, (l, mult))| {
                if cj == ci {
                    // jet of √x/√λᵢ at λᵢ: c₀ = 1, c_j = c_{j−1}·(3/2 − j)/λ
                    let mut jet = vec![GaussianRational::one()];
                    for j in 1..*mult {
                        let factor = &(GaussianRational::from_ratio(3, 2)
                            - GaussianRational::from_int(j as i64))
                            / l;
                        let prev = jet.last().unwrap().clone();
                        jet.push(&prev * &factor);
                    }
                    jet
                } else {
                    vec![GaussianRational::zero(); *mult]
                }
            })
            .collect();
        let coeffs = confluent_newton_coeffs(&nodes, &node_cluster, &jets);
        let g = eval_newton_matrix(&coeffs, &nodes, m)?;
        components.push((lambda.clone(), g));
    }
    // The split identities make every later verification exact.
    let n = m.rows();
    let mut recombined = Matrix::zeros(n, n);
    for (lambda, g) in &components {
        recombined = recombined.add(&g.mul(g)?.scale(&Scalar::Exact(lambda.clone())))?;
    }
    assert_eq!(recombined, *m, "spectral components must recombine to M");
    for (i, (_, gi)) in components.iter().enumerate() {
        for (_, gj) in components.iter().skip(i + 1) {
            assert!(
                gi.mul(gj)?.is_zero(),
                "spectral components must annihilate each other"
            );
        }
    }
    Ok(SpectralSqrt { components })
}

/// Exact square root when the whole spectrum lies in ℚ(i) and every
/// eigenvalue has a Gaussian-rational root.
fn sqrt_exact_path(m: &Matrix) -> Result<Option<Matrix>> {
    let coeffs = m.char_poly()?;
    let Some(spectrum) = exact_spectrum(&coeffs) else {
        return Ok(None);
    };
    if spectrum
        .iter()
        .any(|(l, _)| !l.is_zero() && l.sqrt_exact().is_none())
    {
        return Ok(None);
    }
    let split = spectral_sqrt(m, &spectrum)?;
    let r = split.fold_exact()?.expect("all radicals exact by test above");
    let check = r.mul(&r)?;
    assert_eq!(check, *m, "exact Hermite square root must verify");
    Ok(Some(r))
}

/// Confluent divided-difference coefficients for Hermite data given as
/// raw derivative jets per node cluster.
fn confluent_newton_coeffs(
    nodes: &[GaussianRational],
    node_cluster: &[usize],
    jets: &[Vec<GaussianRational>],
) -> Vec<GaussianRational> {
    let n = nodes.len();
    let jet_at = |node_index: usize, order: usize| -> GaussianRational {
        let mut v = jets[node_cluster[node_index]][order].clone();
        let mut fact = GaussianRational::one();
        for f in 1..=order {
            fact = &fact * &GaussianRational::from_int(f as i64);
        }
        v = &v / &fact;
        v
    };
    let mut table: Vec<Vec<GaussianRational>> = vec![Vec::new(); n];
    for i in 0..n {
        table[i] = vec![GaussianRational::zero(); n - i];
        table[i][0] = jet_at(i, 0);
    }
    for j in 1..n {
        for i in 0..(n - j) {
            if node_cluster[i] == node_cluster[i + j] {
                table[i][j] = jet_at(i, j);
            } else {
                let num = &table[i + 1][j - 1] - &table[i][j - 1];
                let den = &nodes[i + j] - &nodes[i];
                table[i][j] = &num / &den;
            }
        }
    }
    (0..n).map(|j| table[0][j].clone()).collect()
}

/// p(M) for p in Newton form with the given nodes.
fn eval_newton_matrix(
    coeffs: &[GaussianRational],
    nodes: &[GaussianRational],
    m: &Matrix,
) -> Result<Matrix> {
    let n = m.rows();
    let mut acc = Matrix::identity(n).scale(&Scalar::Exact(coeffs[0].clone()));
    let mut product = Matrix::identity(n);
    for k in 1..coeffs.len() {
        let shift = Matrix::identity(n).scale(&Scalar::Exact(nodes[k - 1].clone()));
        product = product.mul(&m.sub(&shift)?)?;
        acc = acc.add(&product.scale(&Scalar::Exact(coeffs[k].clone())))?;
    }
    Ok(acc)
}

/// Full exact factorization of a monic polynomial over ℚ(i), if every
/// root is a Gaussian rational. Root hints come from Durand–Kerner on the
/// exact squarefree part (where every root is simple, so the iteration is
/// well conditioned); each hint is rationalized and verified exactly
/// against the full polynomial. Returns (root, multiplicity) pairs sorted
/// by (re, im); None when any root resists exact identification.
pub fn exact_spectrum(coeffs: &[GaussianRational]) -> Option<Vec<(GaussianRational, usize)>> {
    let mut remaining = coeffs.to_vec();
    let mut out: Vec<(GaussianRational, usize)> = Vec::new();
    let mut absorb = |cand: GaussianRational, remaining: &mut Vec<GaussianRational>| {
        let mut mult = 0;
        while remaining.len() > 1 && eval_poly(remaining, &cand).is_zero() {
            *remaining = deflate_poly(remaining, &cand);
            mult += 1;
        }
        if mult > 0 {
            out.push((cand, mult));
        }
    };

    if remaining.len() > 1 {
        let squarefree = crate::matrix::poly_squarefree_part(&remaining);
        let c64: Vec<Complex64> = squarefree.iter().map(|c| c.to_c64()).collect();
        for root in durand_kerner(&c64) {
            if remaining.len() == 1 {
                break;
            }
            for cand in rational_candidates(root) {
                absorb(cand, &mut remaining);
            }
        }
    }
    if remaining.len() == 1 {
        out.sort_by(|(a, _), (b, _)| (a.re(), a.im()).cmp(&(b.re(), b.im())));
        Some(out)
    } else {
        None
    }
}

fn rational_candidates(z: Complex64) -> Vec<GaussianRational> {
    let mut v = Vec::new();
    if let (Some(re), Some(im)) = (rationalize(z.re), rationalize(z.im)) {
        v.push(GaussianRational::new(re, im));
    }
    // Nearest Gaussian integer as a fallback hint.
    v.push(GaussianRational::from_ints(
        z.re.round() as i64,
        z.im.round() as i64,
    ));
    v
}

/// Continued-fraction rationalization of a float with small denominator.
fn rationalize(x: f64) -> Option<crate::scalar::Rational> {
    use num_bigint::BigInt;
    if !x.is_finite() {
        return None;
    }
    let tol = 1e-6 * x.abs().max(1.0);
    let (mut p0, mut q0) = (1i128, 0i128);
    let (mut p1, mut q1) = (x.floor() as i128, 1i128);
    let mut frac = x - x.floor();
    for _ in 0..40 {
        let approx = p1 as f64 / q1 as f64;
        if (x - approx).abs() <= tol {
            return Some(crate::scalar::Rational::new(
                BigInt::from(p1),
                BigInt::from(q1),
            ));
        }
        if frac.abs() < 1e-12 || q1 > 1_000_000 {
            return None;
        }
        let r = 1.0 / frac;
        let a = r.floor();
        frac = r - a;
        let a = a as i128;
        let (p2, q2) = (a * p1 + p0, a * q1 + q0);
        (p0, q0, p1, q1) = (p1, q1, p2, q2);
    }
    None
}

/// All roots of a monic polynomial (coefficients monic-first) by the
/// Durand–Kerner simultaneous iteration.
pub fn durand_kerner(coeffs: &[Complex64]) -> Vec<Complex64> {
    let degree = coeffs.len() - 1;
    if degree == 0 {
        return Vec::new();
    }
    let radius = 1.0
        + coeffs[1..]
            .iter()
            .map(|c| c.norm())
            .fold(0.0_f64, f64::max);
    let seed = Complex64::new(0.4, 0.9);
    let mut roots: Vec<Complex64> = (0..degree)
        .map(|k| seed.powu(k as u32 + 1) * radius / seed.norm().powi(k as i32 + 1) * 0.9)
        .collect();
    let eval = |x: Complex64| -> Complex64 {
        let mut acc = Complex64::new(0.0, 0.0);
        for c in coeffs {
            acc = acc * x + c;
        }
        acc
    };
    for _ in 0..600 {
        let mut max_move = 0.0_f64;
        for i in 0..degree {
            let mut denom = Complex64::new(1.0, 0.0);
            for j in 0..degree {
                if j != i {
                    denom *= roots[i] - roots[j];
                }
            }
            if denom.norm() < 1e-300 {
                denom = Complex64::new(1e-300, 0.0);
            }
            let delta = eval(roots[i]) / denom;
            roots[i] -= delta;
            max_move = max_move.max(delta.norm());
        }
        if max_move < 1e-14 * radius {
            break;
        }
    }
    roots
}

/// Greedy clustering of numeric roots; returns (centroid, multiplicity).
pub fn cluster_roots(roots: &[Complex64], tol: f64) -> Vec<(Complex64, usize)> {
    let mut clusters: Vec<(Complex64, Vec<Complex64>)> = Vec::new();
    for &r in roots {
        if let Some((center, members)) = clusters
            .iter_mut()
            .find(|(center, _)| (*center - r).norm() <= tol)
        {
            members.push(r);
            let sum: Complex64 = members.iter().sum();
            *center = sum / members.len() as f64;
        } else {
            clusters.push((r, vec![r]));
        }
    }
    clusters
        .into_iter()
        .map(|(center, members)| (center, members.len()))
        .collect()
}

/// Characteristic polynomial of a float matrix by Faddeev–LeVerrier.
fn numeric_char_poly(m: &CMatrix) -> Vec<Complex64> {
    let n = m.rows;
    let mut coeffs = vec![Complex64::new(1.0, 0.0)];
    let mut mk = m.clone();
    for k in 1..=n {
        let mut tr = Complex64::new(0.0, 0.0);
        for i in 0..n {
            tr += mk.at(i, i);
        }
        let ck = -tr / k as f64;
        coeffs.push(ck);
        if k < n {
            let mut shifted = mk.clone();
            for i in 0..n {
                let v = shifted.at(i, i) + ck;
                shifted.set(i, i, v);
            }
            mk = m.mul(&shifted);
        }
    }
    coeffs
}

/// √ with the branch θ ∈ (−π, π]: negative reals map to +i·√r.
pub fn branch_sqrt_c64(z: Complex64) -> Complex64 {
    branch_sqrt(z)
}

fn branch_sqrt(z: Complex64) -> Complex64 {
    if z.im == 0.0 && z.re < 0.0 {
        Complex64::new(0.0, (-z.re).sqrt())
    } else {
        z.sqrt()
    }
}

/// Numeric Hermite interpolation of the square root on root clusters.
fn numeric_hermite_sqrt(m: &CMatrix, clusters: &[(Complex64, usize)]) -> CMatrix {
    let mut nodes: Vec<Complex64> = Vec::new();
    let mut node_cluster: Vec<usize> = Vec::new();
    let mut values: Vec<Vec<Complex64>> = Vec::new();
    for (ci, &(lambda, mult)) in clusters.iter().enumerate() {
        let mut jet = vec![branch_sqrt(lambda)];
        for j in 1..mult {
            let factor = (0.5 - (j as f64 - 1.0)) / lambda;
            let prev = *jet.last().unwrap();
            jet.push(prev * factor);
        }
        for _ in 0..mult {
            nodes.push(lambda);
            node_cluster.push(ci);
        }
        values.push(jet);
    }
    let n = nodes.len();
    let jet_at = |node_index: usize, order: usize| -> Complex64 {
        let mut fact = 1.0;
        for f in 1..=order {
            fact *= f as f64;
        }
        values[node_cluster[node_index]][order] / fact
    };
    let mut table: Vec<Vec<Complex64>> = vec![Vec::new(); n];
    for i in 0..n {
        table[i] = vec![Complex64::new(0.0, 0.0); n - i];
        table[i][0] = jet_at(i, 0);
    }
    for j in 1..n {
        for i in 0..(n - j) {
            if node_cluster[i] == node_cluster[i + j] {
                table[i][j] = jet_at(i, j);
            } else {
                table[i][j] = (table[i + 1][j - 1] - table[i][j - 1]) / (nodes[i + j] - nodes[i]);
            }
        }
    }
    let size = m.rows;
    let mut acc = CMatrix::identity(size).scale(table[0][0]);
    let mut product = CMatrix::identity(size);
    for k in 1..n {
        let mut shifted = m.clone();
        for i in 0..size {
            let v = shifted.at(i, i) - nodes[k - 1];
            shifted.set(i, i, v);
        }
        product = product.mul(&shifted);
        acc = acc.add(&product.scale(table[0][k]));
    }
    acc
}

/// Exact basis of {S : C1·S = S·C2}, reshaped to n×n matrices.
fn sylvester_kernel(c1: &Matrix, c2: &Matrix) -> Result<Vec<Matrix>> {
    let n = c1.rows();
    let mut l = Matrix::zeros(n * n, n * n);
    for i in 0..n {
        for j in 0..n {
            let row = i * n + j;
            for p in 0..n {
                // C1[i,p]·S[p,j]
                let c = c1[(i, p)].clone();
                if !c.is_zero() {
                    let col = p * n + j;
                    l[(row, col)] = &l[(row, col)] + &c;
                }
            }
            for q in 0..n {
                // −S[i,q]·C2[q,j]
                let c = c2[(q, j)].clone();
                if !c.is_zero() {
                    let col = i * n + q;
                    l[(row, col)] = &l[(row, col)] - &c;
                }
            }
        }
    }
    let basis = l.nullspace()?;
    Ok(basis
        .into_iter()
        .map(|v| Matrix::from_fn(n, n, |i, j| v[(i * n + j, 0)].clone()))
        .collect())
}

/// Jordan basis for a matrix with fully rational spectrum: returns the
/// basis P (C = P·J·P⁻¹) and, per eigenvalue, the sorted chain lengths.
fn jordan_basis(
    c: &Matrix,
    spectrum: &[(GaussianRational, usize)],
) -> Result<(Matrix, Vec<(GaussianRational, Vec<usize>)>)> {
    let n = c.rows();
    let mut columns: Vec<Matrix> = Vec::new();
    let mut structure = Vec::new();
    for (lambda, alg_mult) in spectrum {
        let shift = Matrix::identity(n).scale(&Scalar::Exact(lambda.clone()));
        let nmat = c.sub(&shift)?;
        let chains = jordan_chains(&nmat, *alg_mult)?;
        let mut lens: Vec<usize> = chains.iter().map(Vec::len).collect();
        lens.sort_unstable_by(|a, b| b.cmp(a));
        structure.push((lambda.clone(), lens));
        let mut sorted = chains;
        sorted.sort_by_key(|chain| std::cmp::Reverse(chain.len()));
        for chain in sorted {
            columns.extend(chain);
        }
    }
    if columns.len() != n {
        return Err(Error::Census(format!(
            "jordan basis collected {} of {} columns",
            columns.len(),
            n
        )));
    }
    let mut p = columns[0].clone();
    for col in &columns[1..] {
        p = p.hstack(col)?;
    }
    Ok((p, structure))
}

/// Jordan chains of a nilpotent-on-its-generalized-eigenspace map N,
/// restricted to ker N^s of dimension alg_mult. Each chain is returned
/// eigenvector-first: [N^{l−1}u, …, N·u, u].
fn jordan_chains(nmat: &Matrix, alg_mult: usize) -> Result<Vec<Vec<Matrix>>> {
    let n = nmat.rows();
    let mut powers = vec![Matrix::identity(n)];
    let mut kernels: Vec<Vec<Matrix>> = vec![Vec::new()];
    let mut s = 0;
    for j in 1..=n {
        let pj = powers.last().unwrap().mul(nmat)?;
        powers.push(pj.clone());
        let ker = pj.nullspace()?;
        let dim = ker.len();
        kernels.push(ker);
        if dim >= alg_mult {
            s = j;
            break;
        }
    }
    if s == 0 {
        return Err(Error::Census("generalized kernel never reached full multiplicity".into()));
    }
    // Greedy top selection per level, working down from the longest chains.
    let mut tops: Vec<(usize, Matrix)> = Vec::new(); // (level, top vector)
    for level in (1..=s).rev() {
        let mut span: Vec<Matrix> = kernels[level - 1].clone();
        // Descents of already-chosen longer chains to this level.
        for (top_level, top) in &tops {
            if *top_level > level {
                let mut v = top.clone();
                for _ in 0..(*top_level - level) {
                    v = nmat.mul(&v)?;
                }
                span.push(v);
            }
        }
        let mut span_mat = columns_matrix(n, &span);
        for cand in &kernels[level] {
            let trial = match span_mat {
                Some(ref m) => m.hstack(cand)?,
                None => cand.clone(),
            };
            if trial.rank()? > span_mat.as_ref().map_or(0, |m| m.rank().unwrap()) {
                span_mat = Some(trial);
                tops.push((level, cand.clone()));
            }
        }
    }
    let mut chains = Vec::new();
    let mut total = 0;
    for (level, top) in tops {
        let mut chain = vec![top.clone()];
        let mut v = top;
        for _ in 1..level {
            v = nmat.mul(&v)?;
            chain.push(v.clone());
        }
        chain.reverse();
        total += chain.len();
        chains.push(chain);
    }
    if total != alg_mult {
        return Err(Error::Census(format!(
            "jordan chains cover {total} of {alg_mult} dimensions"
        )));
    }
    Ok(chains)
}

fn columns_matrix(rows: usize, cols: &[Matrix]) -> Option<Matrix> {
    let mut it = cols.iter();
    let first = it.next()?.clone();
    let mut m = first;
    for c in it {
        m = m.hstack(c).expect("column heights agree");
    }
    debug_assert_eq!(m.rows(), rows);
    Some(m)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::blocks::Block;

    fn gr(re: i64, im: i64) -> GaussianRational {
        GaussianRational::from_ints(re, im)
    }

    #[test]
    fn cosquare_examples() {
        assert_eq!(
            cosquare(&Matrix::from_ints(1, 1, &[1])).unwrap(),
            Matrix::from_ints(1, 1, &[1])
        );
        // cosquare(H₄(−1)) = J₂(−1) ⊕ J₂(−1)^{−⊤}
        let h4 = Block::h(4, gr(-1, 0)).unwrap().materialize();
        let cs = cosquare(&h4).unwrap();
        let j2 = Matrix::from_ints(2, 2, &[-1, 1, 0, -1]);
        let expected = j2.direct_sum(&j2.inverse().unwrap().transpose());
        assert_eq!(cs, expected);
        // cosquare(Γ₂) is upper triangular with diagonal −1 and corner −2
        let g2 = Block::gamma(2).unwrap().materialize();
        let cs = cosquare(&g2).unwrap();
        assert_eq!(cs, Matrix::from_ints(2, 2, &[-1, -2, 0, -1]));
        let cp = cs.char_poly().unwrap();
        assert_eq!(
            cp,
            vec![GaussianRational::one(), gr(2, 0), GaussianRational::one()]
        );
    }

    #[test]
    fn exact_spectrum_finds_repeated_roots() {
        // (λ+1)^4 = λ⁴+4λ³+6λ²+4λ+1
        let coeffs = vec![gr(1, 0), gr(4, 0), gr(6, 0), gr(4, 0), gr(1, 0)];
        let spec = exact_spectrum(&coeffs).unwrap();
        assert_eq!(spec, vec![(gr(-1, 0), 4)]);
    }

    #[test]
    fn find_similarity_identity_case() {
        let mut engine = CongruenceEngine::with_seed(1);
        let i2 = Matrix::identity(2);
        let s = engine.find_similarity(&i2, &i2).unwrap();
        assert!(!s.det().unwrap().is_zero());
    }

    #[test]
    fn find_similarity_rejects_different_nilpotent_structure() {
        let mut engine = CongruenceEngine::with_seed(1);
        let j2 = Matrix::from_ints(2, 2, &[0, 1, 0, 0]);
        let zero = Matrix::zeros(2, 2);
        assert_eq!(engine.find_similarity(&j2, &zero), Err(Error::NotSimilar));
    }

    #[test]
    fn similar_jordan_pairs_produce_exact_similarity() {
        let mut engine = CongruenceEngine::with_seed(3);
        // Congruence-free sanity: C1 = J₃(2), C2 = T·J₃(2)·T⁻¹
        let j3 = crate::blocks::jordan_block(3, &gr(2, 0));
        let t = Matrix::from_ints(3, 3, &[1, 2, 0, 0, 1, 1, 1, 0, 3]);
        let c2 = t.inverse().unwrap().mul(&j3).unwrap().mul(&t).unwrap();
        let s = engine.find_similarity(&j3, &c2).unwrap();
        assert_eq!(j3.mul(&s).unwrap(), s.mul(&c2).unwrap());
        assert!(!s.det().unwrap().is_zero());
    }

    #[test]
    fn primary_sqrt_examples() {
        let mut engine = CongruenceEngine::with_seed(1);
        let (r, mode) = engine.primary_sqrt(&Matrix::identity(3)).unwrap();
        assert_eq!(r, Matrix::identity(3));
        assert_eq!(mode, WitnessMode::Exact);

        let minus_i2 = Matrix::from_ints(2, 2, &[-1, 0, 0, -1]);
        let (r, mode) = engine.primary_sqrt(&minus_i2).unwrap();
        assert_eq!(mode, WitnessMode::Exact);
        let mut expected = Matrix::zeros(2, 2);
        expected[(0, 0)] = Scalar::i();
        expected[(1, 1)] = Scalar::i();
        assert_eq!(r, expected);

        let j2_1 = Matrix::from_ints(2, 2, &[1, 1, 0, 1]);
        let (r, mode) = engine.primary_sqrt(&j2_1).unwrap();
        assert_eq!(mode, WitnessMode::Exact);
        let mut expected = Matrix::identity(2);
        expected[(0, 1)] = Scalar::from_ratio(1, 2);
        assert_eq!(r, expected);
    }

    #[test]
    fn primary_sqrt_commutes_and_squares() {
        let mut engine = CongruenceEngine::with_seed(5);
        let m = Matrix::from_ints(3, 3, &[2, 1, 0, 0, 2, 0, 0, 0, -1]);
        let (r, mode) = engine.primary_sqrt(&m).unwrap();
        // √2 forces the numeric path here.
        assert_eq!(mode, WitnessMode::Numeric);
        let rr = r.mul(&r).unwrap();
        let diff = rr.sub(&m).unwrap().max_abs();
        assert!(diff <= 1e-9, "residual {diff}");
        let commute = r.mul(&m).unwrap().sub(&m.mul(&r).unwrap()).unwrap().max_abs();
        assert!(commute <= 1e-9, "commutator {commute}");
    }

    #[test]
    fn primary_sqrt_rejects_singular() {
        let mut engine = CongruenceEngine::with_seed(1);
        let m = Matrix::zeros(2, 2);
        assert_eq!(engine.primary_sqrt(&m).unwrap_err(), Error::Singular);
    }

    #[test]
    fn find_congruence_swap_to_identity() {
        let mut engine = CongruenceEngine::with_seed(11);
        let swap = Matrix::from_ints(2, 2, &[0, 1, 1, 0]);
        let w = engine.find_congruence(&swap, &Matrix::identity(2)).unwrap();
        let res = congruence_residual(&swap, &w.p, &Matrix::identity(2));
        assert!(res <= 1e-9);
        if w.mode == WitnessMode::Exact {
            assert_eq!(
                w.p.transpose().mul(&swap).unwrap().mul(&w.p).unwrap(),
                Matrix::identity(2)
            );
        }
    }

    #[test]
    fn find_congruence_gamma_to_tilde() {
        let mut engine = CongruenceEngine::with_seed(11);
        let g2 = Block::gamma(2).unwrap().materialize();
        let g2t = Block::gamma_tilde(2).unwrap().materialize();
        let w = engine.find_congruence(&g2, &g2t).unwrap();
        assert_eq!(w.mode, WitnessMode::Exact);
        assert_eq!(
            w.p.transpose().mul(&g2).unwrap().mul(&w.p).unwrap(),
            g2t
        );
    }

    #[test]
    fn find_congruence_detects_noncongruent() {
        let mut engine = CongruenceEngine::with_seed(11);
        // Γ₂ and I₂ have non-similar cosquares (eigenvalues −1 vs 1).
        let g2 = Block::gamma(2).unwrap().materialize();
        assert_eq!(
            engine.find_congruence(&g2, &Matrix::identity(2)).unwrap_err(),
            Error::NotCongruent
        );
    }
}
