//! Dense matrices over `Scalar` with exact kernel operations.
//!
//! Elimination, rank, inverse, nullspace, linear solve and the
//! characteristic polynomial all run in exact Gaussian-rational arithmetic
//! and refuse matrices carrying floating entries.

use std::fmt;
use std::ops::{Index, IndexMut, Mul};

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::Zero;

use crate::error::{Error, Result};
use crate::scalar::{GaussianRational, Scalar};

#[derive(Clone, PartialEq)]
pub struct Matrix {
    rows: usize,
    cols: usize,
    data: Vec<Scalar>,
}

impl Matrix {
    pub fn new(rows: usize, cols: usize, data: Vec<Scalar>) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(Error::dim(
                "Matrix::new",
                format!("{}x{} needs {} entries, got {}", rows, cols, rows * cols, data.len()),
            ));
        }
        Ok(Matrix { rows, cols, data })
    }

    pub fn zeros(rows: usize, cols: usize) -> Self {
        Matrix {
            rows,
            cols,
            data: vec![Scalar::zero(); rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = Scalar::one();
        }
        m
    }

    /// α×β matrix whose (α,1) entry is 1 and all others are 0 (1-based
    /// corner position, i.e. the bottom-left entry).
    pub fn unit_e(alpha: usize, beta: usize) -> Self {
        let mut m = Self::zeros(alpha, beta);
        if alpha > 0 && beta > 0 {
            m[(alpha - 1, 0)] = Scalar::one();
        }
        m
    }

    /// j-th canonical column vector of size n (1-based j).
    pub fn canonical_e(j: usize, n: usize) -> Self {
        let mut m = Self::zeros(n, 1);
        m[(j - 1, 0)] = Scalar::one();
        m
    }

    pub fn from_rows(rows: Vec<Vec<Scalar>>) -> Result<Self> {
        let r = rows.len();
        let c = rows.first().map_or(0, |row| row.len());
        if rows.iter().any(|row| row.len() != c) {
            return Err(Error::dim("Matrix::from_rows", "ragged rows"));
        }
        Ok(Matrix {
            rows: r,
            cols: c,
            data: rows.into_iter().flatten().collect(),
        })
    }

    /// Convenience constructor from integer entries, row-major.
    pub fn from_ints(rows: usize, cols: usize, entries: &[i64]) -> Self {
        assert_eq!(entries.len(), rows * cols);
        Matrix {
            rows,
            cols,
            data: entries.iter().map(|&v| Scalar::from_int(v)).collect(),
        }
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> Scalar) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for i in 0..rows {
            for j in 0..cols {
                data.push(f(i, j));
            }
        }
        Matrix { rows, cols, data }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }

    pub fn is_empty(&self) -> bool {
        self.rows == 0 || self.cols == 0
    }

    pub fn is_exact(&self) -> bool {
        self.data.iter().all(Scalar::is_exact)
    }

    pub fn entries(&self) -> &[Scalar] {
        &self.data
    }

    pub fn transpose(&self) -> Matrix {
        Matrix::from_fn(self.cols, self.rows, |i, j| self[(j, i)].clone())
    }

    pub fn add(&self, rhs: &Matrix) -> Result<Matrix> {
        if self.rows != rhs.rows || self.cols != rhs.cols {
            return Err(Error::dim(
                "add",
                format!("{}x{} vs {}x{}", self.rows, self.cols, rhs.rows, rhs.cols),
            ));
        }
        Ok(Matrix {
            rows: self.rows,
            cols: self.cols,
            data: self
                .data
                .iter()
                .zip(&rhs.data)
                .map(|(a, b)| a + b)
                .collect(),
        })
    }

    pub fn sub(&self, rhs: &Matrix) -> Result<Matrix> {
        if self.rows != rhs.rows || self.cols != rhs.cols {
            return Err(Error::dim(
                "sub",
                format!("{}x{} vs {}x{}", self.rows, self.cols, rhs.rows, rhs.cols),
            ));
        }
        Ok(Matrix {
            rows: self.rows,
            cols: self.cols,
            data: self
                .data
                .iter()
                .zip(&rhs.data)
                .map(|(a, b)| a - b)
                .collect(),
        })
    }

    pub fn neg(&self) -> Matrix {
        Matrix {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|a| -a).collect(),
        }
    }

    pub fn scale(&self, s: &Scalar) -> Matrix {
        Matrix {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|a| a * s).collect(),
        }
    }

    pub fn mul(&self, rhs: &Matrix) -> Result<Matrix> {
        if self.cols != rhs.rows {
            return Err(Error::dim(
                "mul",
                format!("{}x{} times {}x{}", self.rows, self.cols, rhs.rows, rhs.cols),
            ));
        }
        let mut out = Matrix::zeros(self.rows, rhs.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = &self[(i, k)];
                if a.is_zero() {
                    continue;
                }
                for j in 0..rhs.cols {
                    let b = &rhs[(k, j)];
                    if b.is_zero() {
                        continue;
                    }
                    let cur = &out[(i, j)] + &(a * b);
                    out[(i, j)] = cur;
                }
            }
        }
        Ok(out)
    }

    /// A ⊕ B: A top-left, B bottom-right, zeros elsewhere.
    pub fn direct_sum(&self, rhs: &Matrix) -> Matrix {
        let mut out = Matrix::zeros(self.rows + rhs.rows, self.cols + rhs.cols);
        for i in 0..self.rows {
            for j in 0..self.cols {
                out[(i, j)] = self[(i, j)].clone();
            }
        }
        for i in 0..rhs.rows {
            for j in 0..rhs.cols {
                out[(self.rows + i, self.cols + j)] = rhs[(i, j)].clone();
            }
        }
        out
    }

    pub fn direct_sum_all(parts: &[Matrix]) -> Matrix {
        let rows = parts.iter().map(Matrix::rows).sum();
        let cols = parts.iter().map(Matrix::cols).sum();
        let mut out = Matrix::zeros(rows, cols);
        let (mut ro, mut co) = (0, 0);
        for p in parts {
            for i in 0..p.rows {
                for j in 0..p.cols {
                    out[(ro + i, co + j)] = p[(i, j)].clone();
                }
            }
            ro += p.rows;
            co += p.cols;
        }
        out
    }

    pub fn hstack(&self, rhs: &Matrix) -> Result<Matrix> {
        if self.rows != rhs.rows {
            return Err(Error::dim("hstack", "row counts differ"));
        }
        Ok(Matrix::from_fn(self.rows, self.cols + rhs.cols, |i, j| {
            if j < self.cols {
                self[(i, j)].clone()
            } else {
                rhs[(i, j - self.cols)].clone()
            }
        }))
    }

    pub fn vstack(&self, rhs: &Matrix) -> Result<Matrix> {
        if self.cols != rhs.cols {
            return Err(Error::dim("vstack", "column counts differ"));
        }
        Ok(Matrix::from_fn(self.rows + rhs.rows, self.cols, |i, j| {
            if i < self.rows {
                self[(i, j)].clone()
            } else {
                rhs[(i - self.rows, j)].clone()
            }
        }))
    }

    pub fn submatrix(&self, r0: usize, r1: usize, c0: usize, c1: usize) -> Matrix {
        assert!(r1 <= self.rows && c1 <= self.cols && r0 <= r1 && c0 <= c1);
        Matrix::from_fn(r1 - r0, c1 - c0, |i, j| self[(r0 + i, c0 + j)].clone())
    }

    pub fn col(&self, j: usize) -> Matrix {
        self.submatrix(0, self.rows, j, j + 1)
    }

    pub fn trace(&self) -> Scalar {
        let mut t = Scalar::zero();
        for i in 0..self.rows.min(self.cols) {
            t = &t + &self[(i, i)];
        }
        t
    }

    pub fn is_zero(&self) -> bool {
        self.data.iter().all(Scalar::is_zero)
    }

    pub fn is_symmetric(&self) -> bool {
        if !self.is_square() {
            return false;
        }
        for i in 0..self.rows {
            for j in (i + 1)..self.cols {
                if self[(i, j)] != self[(j, i)] {
                    return false;
                }
            }
        }
        true
    }

    /// Largest entry magnitude, as f64.
    pub fn max_abs(&self) -> f64 {
        self.data.iter().map(Scalar::abs_f64).fold(0.0, f64::max)
    }

    /// Every entry converted to its floating twin.
    pub fn to_float(&self) -> Matrix {
        Matrix {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|s| Scalar::float(s.to_c64())).collect(),
        }
    }

    fn exact_entries(&self) -> Result<Vec<GaussianRational>> {
        self.data
            .iter()
            .map(|s| s.as_exact().cloned())
            .collect::<Result<Vec<_>>>()
    }

    /// Exact rank via Gaussian elimination with first-nonzero pivoting.
    pub fn rank(&self) -> Result<usize> {
        let mut work = EliminationState::new(self)?;
        work.forward();
        Ok(work.pivots.len())
    }

    pub fn det(&self) -> Result<GaussianRational> {
        if !self.is_square() {
            return Err(Error::dim("det", "matrix not square"));
        }
        if self.rows == 0 {
            return Ok(GaussianRational::one());
        }
        let mut work = EliminationState::new(self)?;
        work.forward();
        if work.pivots.len() < self.rows {
            return Ok(GaussianRational::zero());
        }
        let mut d = if work.swaps % 2 == 0 {
            GaussianRational::one()
        } else {
            -GaussianRational::one()
        };
        for factor in &work.pivot_values {
            d = &d * factor;
        }
        Ok(d)
    }

    pub fn inverse(&self) -> Result<Matrix> {
        if !self.is_square() {
            return Err(Error::dim("inverse", "matrix not square"));
        }
        let n = self.rows;
        let aug = self.hstack(&Matrix::identity(n))?;
        let mut work = EliminationState::new(&aug)?;
        work.forward();
        if work.pivots.len() < n || work.pivots.iter().any(|&(_, c)| c >= n) {
            return Err(Error::Singular);
        }
        work.backward();
        let reduced = work.into_matrix(n, 2 * n);
        Ok(reduced.submatrix(0, n, n, 2 * n))
    }

    /// Basis of the right nullspace, as column vectors. M·v = 0 exactly.
    pub fn nullspace(&self) -> Result<Vec<Matrix>> {
        let mut work = EliminationState::new(self)?;
        work.forward();
        work.backward();
        let m = work.into_matrix(self.rows, self.cols);
        let pivot_cols: Vec<usize> = {
            let mut cs = Vec::new();
            'rows: for i in 0..self.rows {
                for j in 0..self.cols {
                    if !m[(i, j)].is_zero() {
                        cs.push(j);
                        continue 'rows;
                    }
                }
            }
            cs
        };
        let mut basis = Vec::new();
        for free in 0..self.cols {
            if pivot_cols.contains(&free) {
                continue;
            }
            let mut v = Matrix::zeros(self.cols, 1);
            v[(free, 0)] = Scalar::one();
            for (pi, &pc) in pivot_cols.iter().enumerate() {
                v[(pc, 0)] = -&m[(pi, free)];
            }
            basis.push(v);
        }
        Ok(basis)
    }

    /// One exact solution of M·x = rhs, or None when inconsistent.
    pub fn solve(&self, rhs: &Matrix) -> Result<Option<Matrix>> {
        if rhs.rows != self.rows {
            return Err(Error::dim("solve", "rhs row count differs"));
        }
        let aug = self.hstack(rhs)?;
        let mut work = EliminationState::new(&aug)?;
        work.forward();
        // Any pivot landing in the rhs block certifies inconsistency.
        if work.pivots.iter().any(|&(_, c)| c >= self.cols) {
            return Ok(None);
        }
        work.backward();
        let pivots = work.pivots.clone();
        let m = work.into_matrix(self.rows, self.cols + rhs.cols);
        let mut x = Matrix::zeros(self.cols, rhs.cols);
        for (pi, &(_, pc)) in pivots.iter().enumerate() {
            for j in 0..rhs.cols {
                x[(pc, j)] = m[(pi, self.cols + j)].clone();
            }
        }
        Ok(Some(x))
    }

    /// Exact characteristic polynomial coefficients, monic first:
    /// λⁿ + c₁λⁿ⁻¹ + ... + cₙ via Faddeev–LeVerrier.
    pub fn char_poly(&self) -> Result<Vec<GaussianRational>> {
        if !self.is_square() {
            return Err(Error::dim("char_poly", "matrix not square"));
        }
        let n = self.rows;
        let a = self.exact_entries()?;
        let a_mat = Matrix {
            rows: n,
            cols: n,
            data: a.into_iter().map(Scalar::Exact).collect(),
        };
        let mut coeffs = vec![GaussianRational::one()];
        let mut mk = a_mat.clone();
        for k in 1..=n {
            let tr = mk.trace();
            let ck = {
                let t = tr.as_exact()?.clone();
                let kk = GaussianRational::from_int(k as i64);
                -(&t / &kk)
            };
            coeffs.push(ck.clone());
            if k < n {
                let shifted = mk.add(&Matrix::identity(n).scale(&Scalar::Exact(ck)))?;
                mk = a_mat.mul(&shifted)?;
            }
        }
        Ok(coeffs)
    }
}

impl Index<(usize, usize)> for Matrix {
    type Output = Scalar;
    fn index(&self, (i, j): (usize, usize)) -> &Scalar {
        assert!(i < self.rows && j < self.cols, "index ({i},{j}) out of bounds");
        &self.data[i * self.cols + j]
    }
}

impl IndexMut<(usize, usize)> for Matrix {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut Scalar {
        assert!(i < self.rows && j < self.cols, "index ({i},{j}) out of bounds");
        &mut self.data[i * self.cols + j]
    }
}

impl Mul<&Matrix> for &Matrix {
    type Output = Matrix;
    fn mul(self, rhs: &Matrix) -> Matrix {
        Matrix::mul(self, rhs).expect("matrix dimension mismatch")
    }
}

impl fmt::Debug for Matrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "Matrix {}x{} [", self.rows, self.cols)?;
        for i in 0..self.rows {
            write!(f, "  [")?;
            for j in 0..self.cols {
                if j > 0 {
                    write!(f, ", ")?;
                }
                write!(f, "{}", self[(i, j)])?;
            }
            writeln!(f, "]")?;
        }
        write!(f, "]")
    }
}

/// Row-echelon elimination over exact Gaussian rationals.
struct EliminationState {
    rows: usize,
    cols: usize,
    data: Vec<GaussianRational>,
    pivots: Vec<(usize, usize)>,
    pivot_values: Vec<GaussianRational>,
    swaps: usize,
}

impl EliminationState {
    fn new(m: &Matrix) -> Result<Self> {
        Ok(EliminationState {
            rows: m.rows,
            cols: m.cols,
            data: m.exact_entries()?,
            pivots: Vec::new(),
            pivot_values: Vec::new(),
            swaps: 0,
        })
    }

    fn at(&self, i: usize, j: usize) -> &GaussianRational {
        &self.data[i * self.cols + j]
    }

    fn set(&mut self, i: usize, j: usize, v: GaussianRational) {
        self.data[i * self.cols + j] = v;
    }

    fn swap_rows(&mut self, a: usize, b: usize) {
        if a == b {
            return;
        }
        for j in 0..self.cols {
            self.data.swap(a * self.cols + j, b * self.cols + j);
        }
        self.swaps += 1;
    }

    /// Forward elimination to echelon form with unit pivots.
    fn forward(&mut self) {
        let mut row = 0;
        for col in 0..self.cols {
            if row >= self.rows {
                break;
            }
            let Some(p) = (row..self.rows).find(|&r| !self.at(r, col).is_zero()) else {
                continue;
            };
            self.swap_rows(row, p);
            let pivot = self.at(row, col).clone();
            self.pivot_values.push(pivot.clone());
            let inv = pivot.inv().expect("nonzero pivot");
            for j in col..self.cols {
                let v = self.at(row, j) * &inv;
                self.set(row, j, v);
            }
            for r in (row + 1)..self.rows {
                let f = self.at(r, col).clone();
                if f.is_zero() {
                    continue;
                }
                for j in col..self.cols {
                    let v = self.at(r, j) - &(&f * self.at(row, j));
                    self.set(r, j, v);
                }
            }
            self.pivots.push((row, col));
            row += 1;
        }
    }

    /// Back-substitution to reduced row-echelon form.
    fn backward(&mut self) {
        for idx in (0..self.pivots.len()).rev() {
            let (prow, pcol) = self.pivots[idx];
            for r in 0..prow {
                let f = self.at(r, pcol).clone();
                if f.is_zero() {
                    continue;
                }
                for j in pcol..self.cols {
                    let v = self.at(r, j) - &(&f * self.at(prow, j));
                    self.set(r, j, v);
                }
            }
        }
    }

    fn into_matrix(self, rows: usize, cols: usize) -> Matrix {
        debug_assert_eq!(rows, self.rows);
        debug_assert_eq!(cols, self.cols);
        Matrix {
            rows,
            cols,
            data: self.data.into_iter().map(Scalar::Exact).collect(),
        }
    }
}

/// Evaluate a monic-first coefficient sequence at a matrix argument.
pub fn eval_poly_at_matrix(coeffs: &[GaussianRational], m: &Matrix) -> Result<Matrix> {
    if !m.is_square() {
        return Err(Error::dim("eval_poly_at_matrix", "matrix not square"));
    }
    let n = m.rows();
    let mut acc = Matrix::zeros(n, n);
    for c in coeffs {
        acc = m.mul(&acc)?;
        acc = acc.add(&Matrix::identity(n).scale(&Scalar::Exact(c.clone())))?;
    }
    Ok(acc)
}

/// Evaluate a monic-first coefficient sequence at a scalar argument.
pub fn eval_poly(coeffs: &[GaussianRational], x: &GaussianRational) -> GaussianRational {
    let mut acc = GaussianRational::zero();
    for c in coeffs {
        acc = &(&acc * x) + c;
    }
    acc
}

/// Deflate a monic polynomial by a verified root: returns q with
/// p(λ) = (λ - root)·q(λ). The caller must ensure p(root) = 0.
pub fn deflate_poly(coeffs: &[GaussianRational], root: &GaussianRational) -> Vec<GaussianRational> {
    let mut out = Vec::with_capacity(coeffs.len().saturating_sub(1));
    let mut acc = GaussianRational::zero();
    for c in &coeffs[..coeffs.len() - 1] {
        acc = &(&acc * root) + c;
        out.push(acc.clone());
    }
    out
}

/// Multiplicity of an exact root of a monic polynomial.
pub fn root_multiplicity(coeffs: &[GaussianRational], root: &GaussianRational) -> usize {
    let mut p = coeffs.to_vec();
    let mut mult = 0;
    while p.len() > 1 && eval_poly(&p, root).is_zero() {
        p = deflate_poly(&p, root);
        mult += 1;
    }
    mult
}

/// Derivative of a monic-first coefficient sequence.
pub fn poly_derivative(coeffs: &[GaussianRational]) -> Vec<GaussianRational> {
    let n = coeffs.len();
    if n <= 1 {
        return vec![GaussianRational::zero()];
    }
    (0..n - 1)
        .map(|i| {
            let power = (n - 1 - i) as i64;
            &coeffs[i] * &GaussianRational::from_int(power)
        })
        .collect()
}

fn poly_trim(mut p: Vec<GaussianRational>) -> Vec<GaussianRational> {
    while p.len() > 1 && p[0].is_zero() {
        p.remove(0);
    }
    p
}

fn poly_make_monic(p: Vec<GaussianRational>) -> Vec<GaussianRational> {
    let p = poly_trim(p);
    if p[0].is_zero() || p[0].is_one() {
        return p;
    }
    let inv = p[0].inv().expect("nonzero leading coefficient");
    p.iter().map(|c| c * &inv).collect()
}

/// Remainder of a by b (b taken monic), coefficients monic-first.
fn poly_rem(a: &[GaussianRational], b: &[GaussianRational]) -> Vec<GaussianRational> {
    let b = poly_make_monic(b.to_vec());
    if b.len() == 1 {
        return vec![GaussianRational::zero()];
    }
    let mut r = a.to_vec();
    while r.len() >= b.len() {
        let factor = r[0].clone();
        if !factor.is_zero() {
            for (i, bc) in b.iter().enumerate() {
                r[i] = &r[i] - &(&factor * bc);
            }
        }
        r.remove(0);
    }
    if r.is_empty() {
        r.push(GaussianRational::zero());
    }
    poly_trim(r)
}

/// Monic gcd over ℚ(i)[x] by the Euclidean algorithm.
pub fn poly_gcd(a: &[GaussianRational], b: &[GaussianRational]) -> Vec<GaussianRational> {
    let mut x = poly_make_monic(poly_trim(a.to_vec()));
    let mut y = poly_make_monic(poly_trim(b.to_vec()));
    if x.len() < y.len() {
        std::mem::swap(&mut x, &mut y);
    }
    while !(y.len() == 1 && y[0].is_zero()) {
        let r = poly_rem(&x, &y);
        x = y;
        y = poly_make_monic(r);
    }
    x
}

/// Exact quotient a / b for an exact divisor (remainder must vanish).
pub fn poly_div_exact(a: &[GaussianRational], b: &[GaussianRational]) -> Vec<GaussianRational> {
    let b = poly_make_monic(b.to_vec());
    let mut r = a.to_vec();
    let mut q = Vec::new();
    while r.len() >= b.len() {
        let factor = r[0].clone();
        q.push(factor.clone());
        if !factor.is_zero() {
            for (i, bc) in b.iter().enumerate() {
                r[i] = &r[i] - &(&factor * bc);
            }
        }
        r.remove(0);
    }
    debug_assert!(r.iter().all(GaussianRational::is_zero), "division must be exact");
    if q.is_empty() {
        q.push(GaussianRational::zero());
    }
    q
}

/// Squarefree part p / gcd(p, p′): same roots, all simple.
pub fn poly_squarefree_part(p: &[GaussianRational]) -> Vec<GaussianRational> {
    if p.len() <= 2 {
        return p.to_vec();
    }
    let d = poly_derivative(p);
    let g = poly_gcd(p, &d);
    if g.len() == 1 {
        return p.to_vec();
    }
    poly_div_exact(p, &g)
}

pub fn rational_from_i64(n: i64) -> BigRational {
    BigRational::from_integer(BigInt::from(n))
}

pub fn rational_is_zero(q: &BigRational) -> bool {
    q.is_zero()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn direct_sum_of_units() {
        let a = Matrix::from_ints(1, 1, &[1]);
        let b = Matrix::from_ints(1, 1, &[0]);
        let s = a.direct_sum(&b);
        assert_eq!(s, Matrix::from_ints(2, 2, &[1, 0, 0, 0]));
    }

    #[test]
    fn unit_e_places_corner_one() {
        let e = Matrix::unit_e(3, 2);
        assert_eq!(e, Matrix::from_ints(3, 2, &[0, 0, 0, 0, 1, 0]));
    }

    #[test]
    fn transpose_of_skew() {
        let m = Matrix::from_ints(2, 2, &[0, 1, -1, 0]);
        assert_eq!(m.transpose(), Matrix::from_ints(2, 2, &[0, -1, 1, 0]));
        assert_eq!(m.transpose().transpose(), m);
    }

    #[test]
    fn rank_of_skew_plus_transpose() {
        let m = Matrix::from_ints(2, 2, &[0, 1, -1, 0]);
        let s = m.add(&m.transpose()).unwrap();
        assert!(s.is_zero());
        assert_eq!(s.rank().unwrap(), 0);
    }

    #[test]
    fn inverse_of_swap() {
        let m = Matrix::from_ints(2, 2, &[0, 1, 1, 0]);
        assert_eq!(m.inverse().unwrap(), m);
    }

    #[test]
    fn nullspace_of_row() {
        let m = Matrix::from_ints(1, 2, &[1, 1]);
        let basis = m.nullspace().unwrap();
        assert_eq!(basis.len(), 1);
        let v = &basis[0];
        assert!(m.mul(v).unwrap().is_zero());
        // (1, -1) up to scaling
        let ratio = &v[(0, 0)] / &v[(1, 0)];
        assert_eq!(ratio, Scalar::from_int(-1));
    }

    #[test]
    fn char_poly_examples() {
        let swap = Matrix::from_ints(2, 2, &[0, 1, 1, 0]);
        let cp = swap.char_poly().unwrap();
        assert_eq!(
            cp,
            vec![
                GaussianRational::one(),
                GaussianRational::zero(),
                GaussianRational::from_int(-1)
            ]
        );
        // J_2(-1) = [[-1,1],[0,-1]]: λ² + 2λ + 1
        let j2 = Matrix::from_ints(2, 2, &[-1, 1, 0, -1]);
        assert_eq!(
            j2.char_poly().unwrap(),
            vec![
                GaussianRational::one(),
                GaussianRational::from_int(2),
                GaussianRational::one()
            ]
        );
    }

    #[test]
    fn solve_consistent_and_inconsistent() {
        let m = Matrix::from_ints(2, 2, &[1, 1, 2, 2]);
        let consistent = Matrix::from_ints(2, 1, &[3, 6]);
        let sol = m.solve(&consistent).unwrap().unwrap();
        assert_eq!(m.mul(&sol).unwrap(), consistent);
        let inconsistent = Matrix::from_ints(2, 1, &[3, 5]);
        assert!(m.solve(&inconsistent).unwrap().is_none());
    }

    #[test]
    fn float_matrices_are_rejected_by_exact_ops() {
        let mut m = Matrix::identity(2);
        m[(0, 0)] = Scalar::float(num_complex::Complex64::new(1.0, 0.0));
        assert_eq!(m.rank(), Err(Error::NotExact));
        assert_eq!(m.char_poly(), Err(Error::NotExact));
    }

    #[test]
    fn empty_matrix_edge_cases() {
        let e = Matrix::zeros(0, 0);
        assert_eq!(e.rank().unwrap(), 0);
        assert_eq!(&e * &e, e);
        let col = Matrix::zeros(3, 0);
        let wide = Matrix::zeros(0, 2);
        let prod = &col * &wide;
        assert_eq!((prod.rows(), prod.cols()), (3, 2));
        assert!(prod.is_zero());
    }
}
