//! Exact combinatorics of multi-indices.
//!
//! Multi-indices `α ∈ ℕ^d` label the monomials `z^α` of polynomials in `d`
//! complex variables. The graded basis enumerates them by total degree,
//! lexicographically descending within each degree, so that for `d = 2`,
//! degree 2 reads `(2,0), (1,1), (0,2)`. All counting is done in
//! arbitrary-precision integers; rationals appear only where a value is a
//! genuine ratio (monomial norms).

use std::cmp::Ordering;
use std::fmt;

use num::bigint::BigInt;
use num::rational::BigRational;
use num::BigUint;
use num::One;

use crate::error::{Error, Result};

/// Largest basis size a `GradedBasisIndexer` will agree to describe.
pub const DEFAULT_INDEX_CAP: usize = 20_000;

/// An exponent vector `α = (α_1, …, α_d)` with its total degree cached.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct MultiIndex {
    exponents: Vec<u32>,
    degree: u32,
}

impl MultiIndex {
    /// Builds a multi-index from its exponents. Panics on an empty vector:
    /// the ambient dimension must be at least 1.
    pub fn new(exponents: Vec<u32>) -> Self {
        assert!(!exponents.is_empty(), "multi-index dimension must be >= 1");
        let degree = exponents.iter().sum();
        MultiIndex { exponents, degree }
    }

    /// The zero index of the given dimension.
    pub fn zero(dimension: usize) -> Self {
        MultiIndex::new(vec![0; dimension])
    }

    /// Unit index `e_i` (1 in coordinate `i`, zero elsewhere).
    pub fn unit(dimension: usize, i: usize) -> Self {
        assert!(i < dimension);
        let mut exponents = vec![0; dimension];
        exponents[i] = 1;
        MultiIndex::new(exponents)
    }

    pub fn dimension(&self) -> usize {
        self.exponents.len()
    }

    /// Total degree `|α| = Σ α_i`.
    pub fn degree(&self) -> u32 {
        self.degree
    }

    pub fn exponents(&self) -> &[u32] {
        &self.exponents
    }

    pub fn get(&self, i: usize) -> u32 {
        self.exponents[i]
    }

    pub fn is_zero(&self) -> bool {
        self.degree == 0
    }

    /// `α!` as a big integer.
    pub fn factorial(&self) -> BigUint {
        self.exponents
            .iter()
            .map(|&e| factorial(u64::from(e)))
            .product()
    }

    /// Coordinate-wise sum.
    pub fn plus(&self, other: &MultiIndex) -> MultiIndex {
        assert_eq!(self.dimension(), other.dimension());
        MultiIndex::new(
            self.exponents
                .iter()
                .zip(&other.exponents)
                .map(|(a, b)| a + b)
                .collect(),
        )
    }

    /// Coordinate-wise difference, or `None` if any coordinate would go negative.
    pub fn checked_minus(&self, other: &MultiIndex) -> Option<MultiIndex> {
        assert_eq!(self.dimension(), other.dimension());
        self.exponents
            .iter()
            .zip(&other.exponents)
            .map(|(a, b)| a.checked_sub(*b))
            .collect::<Option<Vec<_>>>()
            .map(MultiIndex::new)
    }

    /// The index with coordinate `i` raised by one.
    pub fn raised(&self, i: usize) -> MultiIndex {
        let mut exponents = self.exponents.clone();
        exponents[i] += 1;
        MultiIndex::new(exponents)
    }
}

impl fmt::Debug for MultiIndex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "(")?;
        for (k, e) in self.exponents.iter().enumerate() {
            if k > 0 {
                write!(f, ",")?;
            }
            write!(f, "{e}")?;
        }
        write!(f, ")")
    }
}

impl fmt::Display for MultiIndex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Debug::fmt(self, f)
    }
}

/// Graded order: degree ascending, lexicographically descending within a degree.
impl Ord for MultiIndex {
    fn cmp(&self, other: &Self) -> Ordering {
        self.degree
            .cmp(&other.degree)
            .then_with(|| other.exponents.cmp(&self.exponents))
    }
}

impl PartialOrd for MultiIndex {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

/// `n!` as a big integer.
pub fn factorial(n: u64) -> BigUint {
    let mut acc = BigUint::one();
    for k in 2..=n {
        acc *= k;
    }
    acc
}

/// Binomial coefficient `C(n, k)`; zero when `k > n`.
pub fn binomial(n: u64, k: u64) -> BigUint {
    if k > n {
        return BigUint::ZERO;
    }
    let k = k.min(n - k);
    let mut acc = BigUint::one();
    for i in 0..k {
        acc = acc * (n - i) / (i + 1);
    }
    acc
}

/// Multinomial coefficient `(Σ parts)! / Π parts_i!`.
pub fn multinomial(parts: &[u32]) -> BigUint {
    let mut acc = BigUint::one();
    let mut total: u64 = 0;
    for &p in parts {
        total += u64::from(p);
        acc *= binomial(total, u64::from(p));
    }
    acc
}

/// Number of multi-indices of dimension `d` with total degree `j`.
pub fn slab_size(d: usize, j: u32) -> BigUint {
    binomial(u64::from(j) + d as u64 - 1, d as u64 - 1)
}

/// Rank of the degree-`N` truncation projection: `d_N = Σ_{j≤N} C(j+d−1, d−1)`,
/// the number of multi-indices with `|α| ≤ N`.
pub fn truncation_rank(d: usize, n: u32) -> BigUint {
    assert!(d >= 1);
    (0..=n).map(|j| slab_size(d, j)).sum()
}

/// All multi-indices of dimension `d` and degree `j`, in graded order
/// (lexicographically descending).
pub fn enumerate_slab(d: usize, j: u32) -> Vec<MultiIndex> {
    assert!(d >= 1);
    let mut out = Vec::new();
    let mut current = vec![0u32; d];
    fill_slab(&mut out, &mut current, 0, j);
    out
}

fn fill_slab(out: &mut Vec<MultiIndex>, current: &mut Vec<u32>, pos: usize, remaining: u32) {
    if pos + 1 == current.len() {
        current[pos] = remaining;
        out.push(MultiIndex::new(current.clone()));
        return;
    }
    for v in (0..=remaining).rev() {
        current[pos] = v;
        fill_slab(out, current, pos + 1, remaining - v);
    }
}

/// Left side of the Chu-Vandermonde-type identity: enumeration of
/// `Σ_{|w|=j} Π_i C(k_i + w_i, w_i)` in exact arithmetic.
pub fn chu_vandermonde_lhs(k: &MultiIndex, j: u32) -> BigUint {
    enumerate_slab(k.dimension(), j)
        .iter()
        .map(|w| {
            w.exponents()
                .iter()
                .zip(k.exponents())
                .map(|(&wi, &ki)| binomial(u64::from(ki) + u64::from(wi), u64::from(wi)))
                .product::<BigUint>()
        })
        .sum()
}

/// Right side of the same identity: the single binomial
/// `C(k_1+…+k_d + j + d−1, j)`.
pub fn chu_vandermonde_rhs(k: &MultiIndex, j: u32) -> BigUint {
    let total: u64 = k.exponents().iter().map(|&e| u64::from(e)).sum();
    binomial(total + u64::from(j) + k.dimension() as u64 - 1, u64::from(j))
}

/// Squared norm of the monomial `z^α` in the Drury-Arveson space:
/// `α!/|α|!` as an exact rational.
pub fn monomial_norm_sq(alpha: &MultiIndex) -> BigRational {
    BigRational::new(
        BigInt::from(alpha.factorial()),
        BigInt::from(factorial(u64::from(alpha.degree()))),
    )
}

/// Bijection between multi-indices with `|α| ≤ N` and ranks `0..d_N` in the
/// graded order. Slab offsets are precomputed; ranking within a slab is
/// combinatorial, so no table of indices is stored.
#[derive(Clone, Debug)]
pub struct GradedBasisIndexer {
    dimension: usize,
    cutoff: u32,
    /// `slab_offsets[j]` = number of indices of degree `< j`; last entry is `d_N`.
    slab_offsets: Vec<usize>,
}

impl GradedBasisIndexer {
    pub fn new(dimension: usize, cutoff: u32) -> Result<Self> {
        Self::with_cap(dimension, cutoff, DEFAULT_INDEX_CAP)
    }

    pub fn with_cap(dimension: usize, cutoff: u32, cap: usize) -> Result<Self> {
        if dimension == 0 {
            return Err(Error::InvalidParameter(
                "basis dimension must be >= 1".into(),
            ));
        }
        let total = truncation_rank(dimension, cutoff);
        if total > BigUint::from(cap) {
            return Err(Error::CapExceeded {
                rank: u128::try_from(&total).unwrap_or(u128::MAX),
                dimension,
                cutoff,
                cap,
            });
        }
        let mut slab_offsets = Vec::with_capacity(cutoff as usize + 2);
        let mut acc = 0usize;
        slab_offsets.push(0);
        for j in 0..=cutoff {
            acc += usize::try_from(&slab_size(dimension, j)).expect("within cap");
            slab_offsets.push(acc);
        }
        Ok(GradedBasisIndexer {
            dimension,
            cutoff,
            slab_offsets,
        })
    }

    pub fn dimension(&self) -> usize {
        self.dimension
    }

    pub fn cutoff(&self) -> u32 {
        self.cutoff
    }

    /// `d_N`, the number of multi-indices with `|α| ≤ N`.
    pub fn total_rank(&self) -> usize {
        *self.slab_offsets.last().unwrap()
    }

    /// Ranks occupied by degree-`j` indices.
    pub fn slab_range(&self, j: u32) -> std::ops::Range<usize> {
        assert!(j <= self.cutoff);
        self.slab_offsets[j as usize]..self.slab_offsets[j as usize + 1]
    }

    /// Position of `α` in the graded order.
    pub fn rank(&self, alpha: &MultiIndex) -> Result<usize> {
        if alpha.dimension() != self.dimension {
            return Err(Error::DimensionMismatch {
                expected: self.dimension,
                found: alpha.dimension(),
            });
        }
        if alpha.degree() > self.cutoff {
            return Err(Error::DegreeExceedsCutoff {
                degree: alpha.degree(),
                cutoff: self.cutoff,
            });
        }
        Ok(self.slab_offsets[alpha.degree() as usize] + rank_in_slab(alpha.exponents()))
    }

    /// Inverse of [`rank`](Self::rank).
    pub fn unrank(&self, rank: usize) -> Result<MultiIndex> {
        if rank >= self.total_rank() {
            return Err(Error::RankOutOfRange {
                rank,
                size: self.total_rank(),
            });
        }
        // partition_point returns the first offset > rank, i.e. degree + 1.
        let degree = self.slab_offsets.partition_point(|&o| o <= rank) - 1;
        let local = rank - self.slab_offsets[degree];
        Ok(unrank_in_slab(self.dimension, degree as u32, local))
    }

    /// All indices with `|α| ≤ N` in graded order.
    pub fn basis(&self) -> Vec<MultiIndex> {
        let mut out = Vec::with_capacity(self.total_rank());
        for j in 0..=self.cutoff {
            out.extend(enumerate_slab(self.dimension, j));
        }
        out
    }
}

/// Number of indices of the same degree preceding `exps` in descending-lex order.
fn rank_in_slab(exps: &[u32]) -> usize {
    let d = exps.len();
    let mut rank = 0usize;
    let mut remaining: u32 = exps.iter().sum();
    for (pos, &e) in exps.iter().enumerate().take(d - 1) {
        let tail = d - pos - 1;
        for v in (e + 1)..=remaining {
            rank += usize::try_from(&slab_size(tail, remaining - v)).expect("slab within usize");
        }
        remaining -= e;
    }
    rank
}

fn unrank_in_slab(d: usize, degree: u32, mut local: usize) -> MultiIndex {
    let mut exps = vec![0u32; d];
    let mut remaining = degree;
    for pos in 0..d - 1 {
        let tail = d - pos - 1;
        for v in (0..=remaining).rev() {
            let count =
                usize::try_from(&slab_size(tail, remaining - v)).expect("slab within usize");
            if local < count {
                exps[pos] = v;
                remaining -= v;
                break;
            }
            local -= count;
        }
    }
    exps[d - 1] = remaining;
    MultiIndex::new(exps)
}
