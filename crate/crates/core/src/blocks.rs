//! Symbolic canonical-form-for-congruence blocks and their direct sums.
//!
//! Three families: Type-0 nilpotent Jordan blocks J_k(0), Type-I blocks
//! Γ_k (with tridiagonal variant Γ̃_k), and Type-II blocks H_{2k}(μ) (with
//! tridiagonal variant H̃_{2k}(μ), μ ≠ 0 and μ ≠ (−1)^{k+1}, μ determined
//! up to replacement by μ⁻¹).
//!
//! Blocks with μ = (−1)^{k+1} are structurally representable — they appear
//! as intermediate states of the absorption pipeline — but `validate`
//! rejects them and the parser refuses them.

use std::fmt;

use crate::error::{Error, Result};
use crate::matrix::Matrix;
use crate::scalar::{GaussianRational, Scalar};

#[derive(Clone, Copy, PartialEq, Eq, Hash, Debug)]
pub enum BlockKind {
    J,
    Gamma,
    GammaTilde,
    H,
    HTilde,
}

#[derive(Clone, PartialEq, Eq, Hash)]
pub struct Block {
    kind: BlockKind,
    size: usize,
    mu: Option<GaussianRational>,
}

/// Canonical identity of a block: plain and tilde variants of the same
/// block are congruent and compare equal here; μ is the canonical
/// representative of {μ, μ⁻¹}.
#[derive(Clone, PartialEq, Eq, Hash, Debug)]
pub enum BlockClass {
    Type0 { size: usize },
    TypeI { size: usize },
    TypeII { size: usize, mu: GaussianRational },
}

/// The chosen representative of {μ, μ⁻¹}: the one with |μ|² > 1; on the
/// unit circle, the one with nonnegative imaginary part (so ±1 map to
/// themselves). Deterministic and idempotent.
pub fn canonicalize_mu(mu: &GaussianRational) -> Result<GaussianRational> {
    if mu.is_zero() {
        return Err(Error::InvalidBlock("mu = 0".into()));
    }
    let n = mu.norm_sqr();
    let one = crate::matrix::rational_from_i64(1);
    if n > one {
        Ok(mu.clone())
    } else if n < one {
        mu.inv()
    } else if mu.im() >= &crate::matrix::rational_from_i64(0) {
        Ok(mu.clone())
    } else {
        mu.inv()
    }
}

impl Block {
    pub fn j(size: usize) -> Result<Block> {
        if size == 0 {
            return Err(Error::InvalidBlock("J block must have size >= 1".into()));
        }
        Ok(Block {
            kind: BlockKind::J,
            size,
            mu: None,
        })
    }

    pub fn gamma(size: usize) -> Result<Block> {
        if size == 0 {
            return Err(Error::InvalidBlock("Gamma block must have size >= 1".into()));
        }
        Ok(Block {
            kind: BlockKind::Gamma,
            size,
            mu: None,
        })
    }

    pub fn gamma_tilde(size: usize) -> Result<Block> {
        if size == 0 {
            return Err(Error::InvalidBlock("Gamma block must have size >= 1".into()));
        }
        Ok(Block {
            kind: BlockKind::GammaTilde,
            size,
            mu: None,
        })
    }

    pub fn h(size: usize, mu: GaussianRational) -> Result<Block> {
        Self::type_ii(BlockKind::H, size, mu)
    }

    pub fn h_tilde(size: usize, mu: GaussianRational) -> Result<Block> {
        Self::type_ii(BlockKind::HTilde, size, mu)
    }

    fn type_ii(kind: BlockKind, size: usize, mu: GaussianRational) -> Result<Block> {
        if size == 0 || size % 2 != 0 {
            return Err(Error::InvalidBlock(format!(
                "H block size must be even and positive, got {size}"
            )));
        }
        let mu = canonicalize_mu(&mu)?;
        Ok(Block {
            kind,
            size,
            mu: Some(mu),
        })
    }

    pub fn kind(&self) -> BlockKind {
        self.kind
    }

    /// Total matrix size (2k for Type-II blocks).
    pub fn size(&self) -> usize {
        self.size
    }

    /// The subscript parameter k: size for J/Γ, size/2 for H.
    pub fn param_k(&self) -> usize {
        match self.kind {
            BlockKind::H | BlockKind::HTilde => self.size / 2,
            _ => self.size,
        }
    }

    pub fn mu(&self) -> Option<&GaussianRational> {
        self.mu.as_ref()
    }

    /// Checks the canonical-form side condition. Structural constraints
    /// (positive size, even H size, μ ≠ 0) hold by construction; the one
    /// remaining constraint is μ ≠ (−1)^{k+1} for Type-II blocks.
    pub fn validate(&self) -> std::result::Result<(), String> {
        if let (BlockKind::H | BlockKind::HTilde, Some(mu)) = (self.kind, &self.mu) {
            let k = self.size / 2;
            let forbidden = if k % 2 == 0 {
                -GaussianRational::one()
            } else {
                GaussianRational::one()
            };
            if mu == &forbidden {
                return Err(format!("mu = (-1)^(k+1) with k = {k} is excluded"));
            }
        }
        Ok(())
    }

    pub fn class(&self) -> BlockClass {
        match self.kind {
            BlockKind::J => BlockClass::Type0 { size: self.size },
            BlockKind::Gamma | BlockKind::GammaTilde => BlockClass::TypeI { size: self.size },
            BlockKind::H | BlockKind::HTilde => BlockClass::TypeII {
                size: self.size,
                mu: self.mu.clone().expect("Type-II block carries mu"),
            },
        }
    }

    pub fn is_h2_minus_one(&self) -> bool {
        matches!(self.kind, BlockKind::H | BlockKind::HTilde)
            && self.size == 2
            && self.mu.as_ref() == Some(&-GaussianRational::one())
    }

    pub fn is_h4_plus_one(&self) -> bool {
        matches!(self.kind, BlockKind::H | BlockKind::HTilde)
            && self.size == 4
            && self.mu.as_ref() == Some(&GaussianRational::one())
    }

    /// Whether the plain and tilde materializations coincide entrywise
    /// (Γ₁ = Γ̃₁ and H₂(μ) = H̃₂(μ)).
    pub fn tilde_equals_plain(&self) -> bool {
        match self.kind {
            BlockKind::Gamma | BlockKind::GammaTilde => self.size == 1,
            BlockKind::H | BlockKind::HTilde => self.size == 2,
            BlockKind::J => true,
        }
    }

    /// The tilde-variant block of the same class (identity on J and on
    /// already-tilde blocks).
    pub fn to_tilde(&self) -> Block {
        let kind = match self.kind {
            BlockKind::Gamma => BlockKind::GammaTilde,
            BlockKind::H => BlockKind::HTilde,
            k => k,
        };
        Block {
            kind,
            size: self.size,
            mu: self.mu.clone(),
        }
    }

    /// Explicit matrix of the block.
    pub fn materialize(&self) -> Matrix {
        let n = self.size;
        match self.kind {
            BlockKind::J => jordan_block(n, &GaussianRational::zero()),
            BlockKind::Gamma => {
                // Anti-diagonal pair pattern: row i holds (−1)^{k−i} at
                // columns k+1−i and (for i ≥ 2) k+2−i, 1-based.
                let mut m = Matrix::zeros(n, n);
                for i in 1..=n {
                    let sign = if (n - i) % 2 == 0 { 1 } else { -1 };
                    m[(i - 1, n - i)] = Scalar::from_int(sign);
                    if i >= 2 {
                        m[(i - 1, n + 1 - i)] = Scalar::from_int(sign);
                    }
                }
                m
            }
            BlockKind::GammaTilde => {
                let mut m = Matrix::zeros(n, n);
                m[(0, 0)] = Scalar::one();
                for i in 1..n {
                    m[(i - 1, i)] = Scalar::one();
                    let sign = if i % 2 == 0 { 1 } else { -1 };
                    m[(i, i - 1)] = Scalar::from_int(sign);
                }
                m
            }
            BlockKind::H => {
                let k = n / 2;
                let mu = self.mu.as_ref().expect("Type-II block carries mu");
                let zero = Matrix::zeros(k, k);
                let top = zero.hstack(&Matrix::identity(k)).expect("conformal");
                let bottom = jordan_block(k, mu).hstack(&Matrix::zeros(k, k)).expect("conformal");
                top.vstack(&bottom).expect("conformal")
            }
            BlockKind::HTilde => {
                let mu = self.mu.as_ref().expect("Type-II block carries mu");
                let mut m = Matrix::zeros(n, n);
                for i in 1..n {
                    m[(i - 1, i)] = Scalar::one();
                }
                for i in 1..=(n / 2) {
                    m[(2 * i - 1, 2 * i - 2)] = Scalar::Exact(mu.clone());
                }
                m
            }
        }
    }
}

/// k×k Jordan block at eigenvalue μ.
pub fn jordan_block(k: usize, mu: &GaussianRational) -> Matrix {
    let mut m = Matrix::zeros(k, k);
    for i in 0..k {
        m[(i, i)] = Scalar::Exact(mu.clone());
        if i + 1 < k {
            m[(i, i + 1)] = Scalar::one();
        }
    }
    m
}

/// The permutation matrix P_{2k} = [e₁ e_{k+1} e₂ e_{k+2} … e_k e_{2k}]
/// with P^⊤ H_{2k}(μ) P = H̃_{2k}(μ).
pub fn permutation_p2k(k: usize) -> Matrix {
    let n = 2 * k;
    let mut p = Matrix::zeros(n, n);
    for j in 0..k {
        p[(j, 2 * j)] = Scalar::one();
        p[(k + j, 2 * j + 1)] = Scalar::one();
    }
    p
}

impl fmt::Display for Block {
    /// Canonical DSL spelling: "J3", "G5", "G5~", "H6(2)", "H4(-1)~".
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.kind {
            BlockKind::J => write!(f, "J{}", self.size),
            BlockKind::Gamma => write!(f, "G{}", self.size),
            BlockKind::GammaTilde => write!(f, "G{}~", self.size),
            BlockKind::H => write!(f, "H{}({})", self.size, self.mu.as_ref().unwrap()),
            BlockKind::HTilde => write!(f, "H{}({})~", self.size, self.mu.as_ref().unwrap()),
        }
    }
}

impl fmt::Debug for Block {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{self}")
    }
}

/// An ordered direct sum of blocks with multiplicities. Insertion order is
/// preserved; congruence equality compares canonicalized multisets.
#[derive(Clone, PartialEq, Default)]
pub struct BlockSum {
    parts: Vec<(Block, usize)>,
}

impl BlockSum {
    pub fn empty() -> Self {
        BlockSum { parts: Vec::new() }
    }

    pub fn from_parts(parts: Vec<(Block, usize)>) -> Result<Self> {
        if parts.iter().any(|&(_, m)| m == 0) {
            return Err(Error::InvalidBlock("multiplicity must be >= 1".into()));
        }
        let mut sum = BlockSum::empty();
        for (b, m) in parts {
            sum.push_with_multiplicity(b, m);
        }
        Ok(sum)
    }

    pub fn from_blocks(blocks: impl IntoIterator<Item = Block>) -> Self {
        let mut sum = BlockSum::empty();
        for b in blocks {
            sum.push(b);
        }
        sum
    }

    pub fn single(block: Block) -> Self {
        Self::from_blocks([block])
    }

    /// Appends one copy, folding into the trailing part when equal.
    pub fn push(&mut self, block: Block) {
        self.push_with_multiplicity(block, 1);
    }

    pub fn push_with_multiplicity(&mut self, block: Block, mult: usize) {
        if mult == 0 {
            return;
        }
        if let Some((last, m)) = self.parts.last_mut() {
            if *last == block {
                *m += mult;
                return;
            }
        }
        self.parts.push((block, mult));
    }

    pub fn parts(&self) -> &[(Block, usize)] {
        &self.parts
    }

    pub fn is_empty(&self) -> bool {
        self.parts.is_empty()
    }

    pub fn expanded(&self) -> impl Iterator<Item = &Block> {
        self.parts
            .iter()
            .flat_map(|(b, m)| std::iter::repeat(b).take(*m))
    }

    pub fn expanded_vec(&self) -> Vec<Block> {
        self.expanded().cloned().collect()
    }

    pub fn block_count(&self) -> usize {
        self.parts.iter().map(|(_, m)| m).sum()
    }

    pub fn total_size(&self) -> usize {
        self.parts.iter().map(|(b, m)| b.size() * m).sum()
    }

    pub fn materialize(&self) -> Matrix {
        let mats: Vec<Matrix> = self.expanded().map(Block::materialize).collect();
        Matrix::direct_sum_all(&mats)
    }

    pub fn validate(&self) -> std::result::Result<(), String> {
        for (b, _) in &self.parts {
            b.validate().map_err(|v| format!("{b}: {v}"))?;
        }
        Ok(())
    }

    /// Congruence equality: same multiset of canonicalized blocks.
    pub fn congruence_eq(&self, other: &BlockSum) -> bool {
        let mut a: Vec<(BlockClass, usize)> = Vec::new();
        let tally = |acc: &mut Vec<(BlockClass, usize)>, sum: &BlockSum| {
            for (b, m) in &sum.parts {
                let class = b.class();
                if let Some(entry) = acc.iter_mut().find(|(c, _)| *c == class) {
                    entry.1 += m;
                } else {
                    acc.push((class, *m));
                }
            }
        };
        tally(&mut a, self);
        let mut b: Vec<(BlockClass, usize)> = Vec::new();
        tally(&mut b, other);
        a.len() == b.len()
            && a.iter()
                .all(|(c, m)| b.iter().any(|(c2, m2)| c2 == c && m2 == m))
    }

    pub fn count_matching(&self, pred: impl Fn(&Block) -> bool) -> usize {
        self.parts
            .iter()
            .filter(|(b, _)| pred(b))
            .map(|(_, m)| m)
            .sum()
    }
}

impl fmt::Display for BlockSum {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut first = true;
        for (b, m) in &self.parts {
            if !first {
                write!(f, " + ")?;
            }
            first = false;
            if *m == 1 {
                write!(f, "{b}")?;
            } else {
                write!(f, "{b}*{m}")?;
            }
        }
        Ok(())
    }
}

impl fmt::Debug for BlockSum {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{self}")
    }
}
