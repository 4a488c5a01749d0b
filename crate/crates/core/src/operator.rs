//! Assembly of exact finite truncations `P_N T P_N`.
//!
//! Operators are finite sums `T = Σ c_{αβ} S^{β*} S^α + K` acting on the
//! Drury-Arveson space or a weighted Bergman space. The compression to the
//! span of monomials of degree at most `N` is computed through rectangular
//! shift factors: `P_N S^{β*} S^α P_N = (R_β)^H R_α`, where `R_γ` is the
//! matrix of `S^γ` from the degree-`≤N` basis into the degree-`≤(N+D)`
//! basis. Multiplying two square truncated shift matrices instead would
//! insert a spurious projection between the factors and corrupt every
//! entry that reaches across the cutoff.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::io::BufReader;
use std::path::Path;

use nalgebra::DMatrix;
use num::bigint::BigInt;
use num::rational::BigRational;
use num::{BigUint, One};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::multiindex::{factorial, GradedBasisIndexer, MultiIndex};

/// Default cap on the dense truncation size `d_N`.
pub const DEFAULT_ASSEMBLY_CAP: usize = 5_000;

/// Shift-weight family: which space the shifts act on.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum WeightKind {
    DruryArveson,
    /// Weighted Bergman space with weight parameter `a > -1`.
    Bergman { a: f64 },
}

/// Weighted shift coefficients for a fixed space and dimension.
///
/// Raising coordinate `i` at the basis index `m` carries the weight
/// `√((m_i+1)/(|m|+1))` on the Drury-Arveson space and
/// `√((m_i+1)/(d+|m|+a+2))` on the Bergman space with parameter `a`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct WeightFamily {
    kind: WeightKind,
    dimension: usize,
}

impl WeightFamily {
    pub fn drury_arveson(dimension: usize) -> Self {
        assert!(dimension >= 1);
        WeightFamily {
            kind: WeightKind::DruryArveson,
            dimension,
        }
    }

    pub fn bergman(dimension: usize, a: f64) -> Result<Self> {
        assert!(dimension >= 1);
        if !(a > -1.0) {
            return Err(Error::InvalidParameter(format!(
                "Bergman weight parameter must be > -1, got {a}"
            )));
        }
        Ok(WeightFamily {
            kind: WeightKind::Bergman { a },
            dimension,
        })
    }

    pub fn dimension(&self) -> usize {
        self.dimension
    }

    pub fn kind(&self) -> WeightKind {
        self.kind
    }

    pub fn is_drury_arveson(&self) -> bool {
        matches!(self.kind, WeightKind::DruryArveson)
    }

    pub fn describe(&self) -> String {
        match self.kind {
            WeightKind::DruryArveson => "drury-arveson".to_string(),
            WeightKind::Bergman { a } => format!("bergman(a={a})"),
        }
    }

    /// Single-step raising weight at `m` in coordinate `i`.
    pub fn step_weight(&self, m: &MultiIndex, i: usize) -> f64 {
        self.step_weight_sq(m, i).sqrt()
    }

    /// Squared single-step weight: a single rational, so one rounding.
    pub fn step_weight_sq(&self, m: &MultiIndex, i: usize) -> f64 {
        let mi = f64::from(m.get(i));
        let deg = f64::from(m.degree());
        match self.kind {
            WeightKind::DruryArveson => (mi + 1.0) / (deg + 1.0),
            WeightKind::Bergman { a } => (mi + 1.0) / (self.dimension as f64 + deg + a + 2.0),
        }
    }

    /// Squared single-step weight as an exact rational (Drury-Arveson only).
    pub fn step_weight_sq_rational(&self, m: &MultiIndex, i: usize) -> Option<BigRational> {
        match self.kind {
            WeightKind::DruryArveson => Some(BigRational::new(
                BigInt::from(m.get(i) + 1),
                BigInt::from(m.degree() + 1),
            )),
            WeightKind::Bergman { .. } => None,
        }
    }
}

/// Applies the word `S^γ` to the basis vector `e_m`: returns the target
/// index `m + γ` and the product of single-step weights along the raising
/// path (coordinates applied in ascending order; the product is
/// path-independent because each step depends only on the raised
/// coordinate's count and the current total degree).
pub fn shift_column(
    weights: &WeightFamily,
    gamma: &MultiIndex,
    m: &MultiIndex,
) -> (MultiIndex, f64) {
    assert_eq!(gamma.dimension(), weights.dimension());
    assert_eq!(m.dimension(), weights.dimension());
    let mut current = m.clone();
    let mut weight = 1.0;
    for i in 0..gamma.dimension() {
        for _ in 0..gamma.get(i) {
            weight *= weights.step_weight(&current, i);
            current = current.raised(i);
        }
    }
    (current, weight)
}

/// Like [`shift_column`], but returns the squared weight, accumulated as a
/// product of rational step ratios with no square roots. Diagonal matrix
/// entries `||S^γ e_m||²` are computed this way.
pub fn shift_column_sq(
    weights: &WeightFamily,
    gamma: &MultiIndex,
    m: &MultiIndex,
) -> (MultiIndex, f64) {
    assert_eq!(gamma.dimension(), weights.dimension());
    assert_eq!(m.dimension(), weights.dimension());
    let mut current = m.clone();
    let mut weight_sq = 1.0;
    for i in 0..gamma.dimension() {
        for _ in 0..gamma.get(i) {
            weight_sq *= weights.step_weight_sq(&current, i);
            current = current.raised(i);
        }
    }
    (current, weight_sq)
}

/// Exact squared weight of `S^γ` applied to `e_m` on the Drury-Arveson
/// space: `Π_i (m_i+γ_i)!/m_i! · |m|!/(|m|+|γ|)!`.
pub fn shift_weight_sq_rational(
    weights: &WeightFamily,
    gamma: &MultiIndex,
    m: &MultiIndex,
) -> Option<BigRational> {
    if !weights.is_drury_arveson() {
        return None;
    }
    let mut numer = BigUint::one();
    for i in 0..gamma.dimension() {
        for t in 1..=gamma.get(i) {
            numer *= u64::from(m.get(i) + t);
        }
    }
    let mut denom = BigUint::one();
    for t in 1..=gamma.degree() {
        denom *= u64::from(m.degree() + t);
    }
    Some(BigRational::new(BigInt::from(numer), BigInt::from(denom)))
}

/// How the symbol loader treats missing or inconsistent conjugate terms.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SymmetryMode {
    /// Missing conjugate terms are filled in automatically.
    AutoComplete,
    /// Every term must come with its exact conjugate partner.
    Strict,
}

/// A finite Hermitian symbol `φ(z) = Σ c_{αβ} z̄^β z^α`, doubling as the
/// operator recipe `T = Σ c_{αβ} S^{β*} S^α`.
///
/// Hermitian symmetry (`c_{βα} = conj(c_{αβ})`, real diagonal
/// coefficients) is established at construction, so the assembled matrix
/// is Hermitian by construction and the symbol is real on the sphere.
#[derive(Clone, Debug)]
pub struct HermitianSymbol {
    dimension: usize,
    /// Full coefficient map, both orientations of every pair present.
    terms: BTreeMap<(MultiIndex, MultiIndex), Complex64>,
    max_degree: u32,
    label: Option<String>,
}

impl HermitianSymbol {
    /// Builds a symbol from coefficient entries `(α, β, c)`, accumulating
    /// duplicates and enforcing Hermitian symmetry per `mode`.
    pub fn from_entries(
        dimension: usize,
        entries: impl IntoIterator<Item = (MultiIndex, MultiIndex, Complex64)>,
        mode: SymmetryMode,
    ) -> Result<Self> {
        assert!(dimension >= 1);
        let mut terms: BTreeMap<(MultiIndex, MultiIndex), Complex64> = BTreeMap::new();
        for (alpha, beta, c) in entries {
            for idx in [&alpha, &beta] {
                if idx.dimension() != dimension {
                    return Err(Error::DimensionMismatch {
                        expected: dimension,
                        found: idx.dimension(),
                    });
                }
            }
            *terms.entry((alpha, beta)).or_insert(Complex64::ZERO) += c;
        }
        terms.retain(|_, c| c.re != 0.0 || c.im != 0.0);

        let keys: Vec<_> = terms.keys().cloned().collect();
        for key in keys {
            let (alpha, beta) = &key;
            let c = terms[&key];
            if alpha == beta {
                if c.im != 0.0 {
                    return Err(Error::NotHermitian {
                        detail: format!(
                            "diagonal coefficient at ({alpha},{beta}) must be real, got {c}"
                        ),
                    });
                }
                continue;
            }
            let mate = (beta.clone(), alpha.clone());
            match terms.get(&mate) {
                Some(&cm) if cm == c.conj() => {}
                Some(&cm) => {
                    return Err(Error::NotHermitian {
                        detail: format!(
                            "coefficient at ({beta},{alpha}) is {cm}, expected conj {}",
                            c.conj()
                        ),
                    });
                }
                None => match mode {
                    SymmetryMode::AutoComplete => {
                        terms.insert(mate, c.conj());
                    }
                    SymmetryMode::Strict => {
                        return Err(Error::NotHermitian {
                            detail: format!("missing conjugate term at ({beta},{alpha})"),
                        });
                    }
                },
            }
        }

        let max_degree = terms
            .keys()
            .map(|(a, b)| a.degree().max(b.degree()))
            .max()
            .unwrap_or(0);
        Ok(HermitianSymbol {
            dimension,
            terms,
            max_degree,
            label: None,
        })
    }

    /// The constant symbol `φ ≡ c`.
    pub fn constant(dimension: usize, c: f64) -> Self {
        let z = MultiIndex::zero(dimension);
        HermitianSymbol::from_entries(
            dimension,
            [(z.clone(), z, Complex64::new(c, 0.0))],
            SymmetryMode::Strict,
        )
        .expect("constant symbol is Hermitian")
    }

    pub fn zero(dimension: usize) -> Self {
        HermitianSymbol {
            dimension,
            terms: BTreeMap::new(),
            max_degree: 0,
            label: None,
        }
    }

    /// The symbol plus `c·1`.
    pub fn shifted(&self, c: f64) -> Self {
        let z = MultiIndex::zero(self.dimension);
        let mut entries: Vec<_> = self
            .terms
            .iter()
            .map(|((a, b), &c)| (a.clone(), b.clone(), c))
            .collect();
        entries.push((z.clone(), z, Complex64::new(c, 0.0)));
        HermitianSymbol::from_entries(self.dimension, entries, SymmetryMode::Strict)
            .expect("shift preserves symmetry")
    }

    /// All coefficients scaled by the real factor `t`.
    pub fn scaled(&self, t: f64) -> Self {
        let mut out = self.clone();
        for c in out.terms.values_mut() {
            *c *= t;
        }
        out.terms.retain(|_, c| c.re != 0.0 || c.im != 0.0);
        out.label = None;
        out
    }

    pub fn dimension(&self) -> usize {
        self.dimension
    }

    /// Largest degree appearing in any word: `D = max max(|α|,|β|)`.
    pub fn max_degree(&self) -> u32 {
        self.max_degree
    }

    pub fn num_terms(&self) -> usize {
        self.terms.len()
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    /// Full coefficient map: both orientations of every pair.
    pub fn terms(&self) -> impl Iterator<Item = (&MultiIndex, &MultiIndex, Complex64)> {
        self.terms.iter().map(|((a, b), &c)| (a, b, c))
    }

    /// One representative per Hermitian pair: the diagonal words plus the
    /// first orientation of each off-diagonal pair.
    pub fn canonical_terms(&self) -> impl Iterator<Item = (&MultiIndex, &MultiIndex, Complex64)> {
        self.terms
            .iter()
            .filter(|((a, b), _)| a <= b)
            .map(|((a, b), &c)| (a, b, c))
    }

    pub fn set_label(&mut self, label: impl Into<String>) {
        self.label = Some(label.into());
    }

    /// Short identifier used in report provenance.
    pub fn describe(&self) -> String {
        if let Some(label) = &self.label {
            return label.clone();
        }
        let mut out = String::new();
        for (alpha, beta, c) in self.canonical_terms() {
            if !out.is_empty() {
                out.push('+');
            }
            let _ = write!(out, "({alpha}|{beta}:{c})");
        }
        if out.is_empty() {
            out.push('0');
        }
        out
    }

    /// Evaluates `φ` at a point of the unit sphere. Terms are paired with
    /// their conjugates so the result is exactly real.
    pub fn eval(&self, z: &[Complex64]) -> Result<f64> {
        if z.len() != self.dimension {
            return Err(Error::DimensionMismatch {
                expected: self.dimension,
                found: z.len(),
            });
        }
        let norm = z.iter().map(|v| v.norm_sqr()).sum::<f64>().sqrt();
        let deviation = (norm - 1.0).abs();
        if deviation > 1e-12 {
            return Err(Error::OffSphere { deviation });
        }
        let mut acc = 0.0;
        for (alpha, beta, c) in self.canonical_terms() {
            let m_alpha = monomial_value(z, alpha);
            if alpha == beta {
                acc += c.re * m_alpha.norm_sqr();
            } else {
                let m_beta = monomial_value(z, beta);
                acc += 2.0 * (c * m_beta.conj() * m_alpha).re;
            }
        }
        Ok(acc)
    }
}

fn monomial_value(z: &[Complex64], alpha: &MultiIndex) -> Complex64 {
    alpha
        .exponents()
        .iter()
        .zip(z)
        .map(|(&e, v)| v.powu(e))
        .product()
}

/// Monte Carlo estimate of the symbol range `[min φ, max φ]` over the sphere.
pub fn symbol_range_bounds(
    symbol: &HermitianSymbol,
    samples: usize,
    seed: u64,
) -> Result<(f64, f64)> {
    assert!(samples >= 1);
    let measure = crate::measure::SphereMeasure::new(symbol.dimension(), seed);
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    let mut point = Vec::new();
    for k in 0..samples as u64 {
        measure.sample_point_into(k, &mut point);
        let v = symbol.eval(&point)?;
        lo = lo.min(v);
        hi = hi.max(v);
    }
    Ok((lo, hi))
}

/// A fixed finite-rank Hermitian perturbation, given entrywise in the
/// graded basis. The support does not depend on the truncation cutoff;
/// truncation simply clips entries outside the range of `P_N`.
#[derive(Clone, Debug)]
pub struct CompactPerturbation {
    /// Sorted, deduplicated, Hermitian-complete entry list.
    entries: Vec<(usize, usize, Complex64)>,
    /// One past the largest basis rank touched.
    support: usize,
}

impl CompactPerturbation {
    pub fn from_entries(
        entries: impl IntoIterator<Item = (usize, usize, Complex64)>,
        mode: SymmetryMode,
    ) -> Result<Self> {
        let mut map: BTreeMap<(usize, usize), Complex64> = BTreeMap::new();
        for (row, col, v) in entries {
            *map.entry((row, col)).or_insert(Complex64::ZERO) += v;
        }
        map.retain(|_, v| v.re != 0.0 || v.im != 0.0);
        let keys: Vec<_> = map.keys().cloned().collect();
        for (row, col) in keys {
            let v = map[&(row, col)];
            if row == col {
                if v.im != 0.0 {
                    return Err(Error::NotHermitian {
                        detail: format!("diagonal entry ({row},{col}) must be real, got {v}"),
                    });
                }
                continue;
            }
            match map.get(&(col, row)) {
                Some(&m) if m == v.conj() => {}
                Some(&m) => {
                    return Err(Error::NotHermitian {
                        detail: format!("entry ({col},{row}) is {m}, expected conj {}", v.conj()),
                    });
                }
                None => match mode {
                    SymmetryMode::AutoComplete => {
                        map.insert((col, row), v.conj());
                    }
                    SymmetryMode::Strict => {
                        return Err(Error::NotHermitian {
                            detail: format!("missing conjugate entry at ({col},{row})"),
                        });
                    }
                },
            }
        }
        let support = map.keys().map(|&(r, c)| r.max(c) + 1).max().unwrap_or(0);
        Ok(CompactPerturbation {
            entries: map.into_iter().map(|((r, c), v)| (r, c, v)).collect(),
            support,
        })
    }

    /// The rank-one projection onto basis vector `k`.
    pub fn rank_one_unit(k: usize) -> Self {
        CompactPerturbation {
            entries: vec![(k, k, Complex64::ONE)],
            support: k + 1,
        }
    }

    pub fn zero() -> Self {
        CompactPerturbation {
            entries: Vec::new(),
            support: 0,
        }
    }

    pub fn entries(&self) -> &[(usize, usize, Complex64)] {
        &self.entries
    }

    pub fn support(&self) -> usize {
        self.support
    }

    pub fn is_zero(&self) -> bool {
        self.entries.is_empty()
    }

    /// Dense matrix of the perturbation on its support.
    pub fn support_matrix(&self) -> DMatrix<Complex64> {
        let n = self.support;
        let mut m = DMatrix::zeros(n, n);
        for &(r, c, v) in &self.entries {
            m[(r, c)] += v;
        }
        m
    }

    /// `Tr(P_N K P_N)` for a truncation of rank `d_n` (diagonal entries are
    /// real by Hermitian symmetry).
    pub fn trace_within(&self, d_n: usize) -> f64 {
        self.entries
            .iter()
            .filter(|&&(r, c, _)| r == c && r < d_n)
            .map(|&(_, _, v)| v.re)
            .sum()
    }

    fn add_into(&self, matrix: &mut DMatrix<Complex64>) {
        let n = matrix.nrows();
        for &(r, c, v) in &self.entries {
            if r < n && c < n {
                matrix[(r, c)] += v;
            }
        }
    }
}

/// Rectangular matrix of the word `S^γ` from a source basis into an
/// extended basis: one nonzero per column.
struct RectangularShift {
    /// `columns[w] = (rank of w+γ in the extended basis, shift weight)`.
    columns: Vec<(usize, f64)>,
}

fn rectangular_shift(
    weights: &WeightFamily,
    gamma: &MultiIndex,
    source: &[MultiIndex],
    extended: &GradedBasisIndexer,
) -> Result<RectangularShift> {
    let mut columns = Vec::with_capacity(source.len());
    for m in source {
        let (target, weight) = shift_column(weights, gamma, m);
        columns.push((extended.rank(&target)?, weight));
    }
    Ok(RectangularShift { columns })
}

/// The exact Hermitian matrix of `P_N T P_N` with its basis metadata.
#[derive(Clone, Debug)]
pub struct TruncatedOperator {
    indexer: GradedBasisIndexer,
    matrix: DMatrix<Complex64>,
    symbol_id: String,
    provenance: String,
}

impl TruncatedOperator {
    pub fn indexer(&self) -> &GradedBasisIndexer {
        &self.indexer
    }

    pub fn matrix(&self) -> &DMatrix<Complex64> {
        &self.matrix
    }

    pub fn dimension(&self) -> usize {
        self.indexer.dimension()
    }

    pub fn cutoff(&self) -> u32 {
        self.indexer.cutoff()
    }

    /// `d_N`, the matrix size.
    pub fn rank(&self) -> usize {
        self.indexer.total_rank()
    }

    /// Identifier of the symbol the truncation was assembled from.
    pub fn symbol_id(&self) -> &str {
        &self.symbol_id
    }

    pub fn provenance(&self) -> &str {
        &self.provenance
    }

    /// Matrix trace (real: the diagonal of a Hermitian assembly is real).
    pub fn trace(&self) -> f64 {
        (0..self.rank()).map(|k| self.matrix[(k, k)].re).sum()
    }

    /// Entrywise check `M = M^H`, exact.
    pub fn is_hermitian(&self) -> bool {
        let n = self.rank();
        for r in 0..n {
            for c in r..n {
                if self.matrix[(r, c)] != self.matrix[(c, r)].conj() {
                    return false;
                }
            }
        }
        true
    }
}

/// Assembles `P_N T P_N` for `T = Σ c_{αβ} S^{β*} S^α + K` with the default
/// size cap.
pub fn assemble_truncation(
    symbol: &HermitianSymbol,
    weights: &WeightFamily,
    cutoff: u32,
    perturbation: Option<&CompactPerturbation>,
) -> Result<TruncatedOperator> {
    assemble_truncation_with_cap(symbol, weights, cutoff, perturbation, DEFAULT_ASSEMBLY_CAP)
}

pub fn assemble_truncation_with_cap(
    symbol: &HermitianSymbol,
    weights: &WeightFamily,
    cutoff: u32,
    perturbation: Option<&CompactPerturbation>,
    cap: usize,
) -> Result<TruncatedOperator> {
    if symbol.dimension() != weights.dimension() {
        return Err(Error::DimensionMismatch {
            expected: weights.dimension(),
            found: symbol.dimension(),
        });
    }
    let d = symbol.dimension();
    let indexer = GradedBasisIndexer::with_cap(d, cutoff, cap)?;
    let extended = GradedBasisIndexer::with_cap(d, cutoff + symbol.max_degree(), usize::MAX)?;
    let basis = indexer.basis();
    let d_n = indexer.total_rank();
    let mut matrix = DMatrix::zeros(d_n, d_n);

    for (alpha, beta, c) in symbol.canonical_terms() {
        if alpha == beta {
            // Diagonal word: entry (w,w) = c ||S^α e_w||², c real; the
            // squared weight is taken without round-tripping through sqrt.
            for (w, m) in basis.iter().enumerate() {
                let (_, weight_sq) = shift_column_sq(weights, alpha, m);
                matrix[(w, w)] += Complex64::new(c.re * weight_sq, 0.0);
            }
            continue;
        }
        let r_alpha = rectangular_shift(weights, alpha, &basis, &extended)?;
        let r_beta = rectangular_shift(weights, beta, &basis, &extended)?;
        // (R_β)^H R_α: invert R_β's target map, then match columns of R_α.
        let mut back: Vec<Option<(usize, f64)>> = vec![None; extended.total_rank()];
        for (v, &(target, b_v)) in r_beta.columns.iter().enumerate() {
            back[target] = Some((v, b_v));
        }
        for (w, &(target, a_w)) in r_alpha.columns.iter().enumerate() {
            if let Some((v, b_v)) = back[target] {
                let scale = a_w * b_v;
                matrix[(v, w)] += c * scale;
                matrix[(w, v)] += c.conj() * scale;
            }
        }
    }

    if let Some(k) = perturbation {
        k.add_into(&mut matrix);
    }

    let symbol_id = symbol.describe();
    let provenance = format!(
        "symbol={} weights={} N={} K={}",
        symbol_id,
        weights.describe(),
        cutoff,
        match perturbation {
            Some(k) if !k.is_zero() => format!("{}-entry", k.entries.len()),
            _ => "none".to_string(),
        }
    );
    let op = TruncatedOperator {
        indexer,
        matrix,
        symbol_id,
        provenance,
    };
    debug_assert!(op.is_hermitian());
    Ok(op)
}

/// Exact truncation of the single (generally non-Hermitian) word
/// `S^{β*} S^α` at the given cutoff. Word truncations are exact at every
/// cutoff: each entry `⟨S^α e_w, S^β e_v⟩` is computed in the extended
/// basis, so no cutoff leakage occurs.
pub fn word_truncation(
    weights: &WeightFamily,
    alpha: &MultiIndex,
    beta: &MultiIndex,
    cutoff: u32,
) -> Result<DMatrix<Complex64>> {
    let d = weights.dimension();
    let indexer = GradedBasisIndexer::with_cap(d, cutoff, DEFAULT_ASSEMBLY_CAP)?;
    let extended =
        GradedBasisIndexer::with_cap(d, cutoff + alpha.degree().max(beta.degree()), usize::MAX)?;
    let basis = indexer.basis();
    let d_n = indexer.total_rank();
    let r_alpha = rectangular_shift(weights, alpha, &basis, &extended)?;
    let r_beta = rectangular_shift(weights, beta, &basis, &extended)?;
    let mut back: Vec<Option<(usize, f64)>> = vec![None; extended.total_rank()];
    for (v, &(target, b_v)) in r_beta.columns.iter().enumerate() {
        back[target] = Some((v, b_v));
    }
    let mut matrix = DMatrix::zeros(d_n, d_n);
    for (w, &(target, a_w)) in r_alpha.columns.iter().enumerate() {
        if let Some((v, b_v)) = back[target] {
            matrix[(v, w)] = Complex64::new(a_w * b_v, 0.0);
        }
    }
    Ok(matrix)
}

/// `Tr(P_N S^{α*} S^α P_N)` on the Drury-Arveson space as an exact
/// rational, computed both by enumerating `Σ_{|w|≤N} ||S^α e_w||²` and by
/// the closed form `(α!/(|α|+d−1)!) Σ_{j≤N} (|α|+j+d−1)!/(|α|+j)!`. The two
/// routes must agree exactly.
pub fn trace_exact(weights: &WeightFamily, alpha: &MultiIndex, cutoff: u32) -> Result<BigRational> {
    if !weights.is_drury_arveson() {
        return Err(Error::RequiresDruryArveson);
    }
    let enumerated = trace_exact_enumerated(weights.dimension(), alpha, cutoff);
    let closed = trace_exact_closed_form(weights.dimension(), alpha, cutoff);
    assert_eq!(
        enumerated, closed,
        "trace identity violated for alpha={alpha} N={cutoff}"
    );
    Ok(closed)
}

/// Enumeration route: sums exact squared shift weights over `|w| ≤ N`.
pub fn trace_exact_enumerated(d: usize, alpha: &MultiIndex, cutoff: u32) -> BigRational {
    let weights = WeightFamily::drury_arveson(d);
    let mut acc = BigRational::from(BigInt::from(0));
    for j in 0..=cutoff {
        for w in crate::multiindex::enumerate_slab(d, j) {
            acc += shift_weight_sq_rational(&weights, alpha, &w).expect("DA weights");
        }
    }
    acc
}

/// Closed-form route: `(α!/(|α|+d−1)!) Σ_{j≤N} (|α|+j+d−1)!/(|α|+j)!`.
pub fn trace_exact_closed_form(d: usize, alpha: &MultiIndex, cutoff: u32) -> BigRational {
    let a = u64::from(alpha.degree());
    let dm1 = d as u64 - 1;
    let prefactor = BigRational::new(
        BigInt::from(alpha.factorial()),
        BigInt::from(factorial(a + dm1)),
    );
    let mut sum = BigInt::from(0);
    for j in 0..=u64::from(cutoff) {
        // (|α|+j+d−1)!/(|α|+j)! = Π_{t=1}^{d−1} (|α|+j+t), an integer.
        let mut term = BigInt::from(1);
        for t in 1..=dm1 {
            term *= BigInt::from(a + j + t);
        }
        sum += term;
    }
    prefactor * BigRational::from(sum)
}

/// Verifies that `Tr(P_N S^{α*} S^β P_N) = 0` for distinct words `α ≠ β`
/// by assembling both orientations of the single mixed term and checking
/// each diagonal vanishes identically.
pub fn mixed_word_trace_is_zero(
    weights: &WeightFamily,
    alpha: &MultiIndex,
    beta: &MultiIndex,
    cutoff: u32,
) -> Result<bool> {
    if alpha == beta {
        return Err(Error::EqualWords);
    }
    for (a, b) in [(alpha, beta), (beta, alpha)] {
        let m = word_truncation(weights, a, b, cutoff)?;
        for k in 0..m.nrows() {
            if m[(k, k)] != Complex64::ZERO {
                return Ok(false);
            }
        }
    }
    Ok(true)
}

#[derive(Serialize, Deserialize)]
struct SymbolTermRecord {
    alpha: Vec<u32>,
    beta: Vec<u32>,
    #[serde(default)]
    re: f64,
    #[serde(default)]
    im: f64,
}

#[derive(Serialize, Deserialize)]
struct PerturbationRecord {
    row: usize,
    col: usize,
    #[serde(default)]
    re: f64,
    #[serde(default)]
    im: f64,
}

#[derive(Serialize, Deserialize)]
struct SymbolFileRecord {
    dimension: usize,
    terms: Vec<SymbolTermRecord>,
    #[serde(default)]
    perturbation: Option<Vec<PerturbationRecord>>,
}

/// Loads a symbol definition file: a JSON object with the symbol dimension,
/// the coefficient terms, and an optional compact-perturbation entry list.
pub fn load_symbol_file(
    path: impl AsRef<Path>,
    mode: SymmetryMode,
) -> Result<(HermitianSymbol, Option<CompactPerturbation>)> {
    let path = path.as_ref();
    let file = std::fs::File::open(path).map_err(|e| Error::SymbolFile {
        path: path.display().to_string(),
        message: e.to_string(),
    })?;
    let record: SymbolFileRecord =
        serde_json::from_reader(BufReader::new(file)).map_err(|e| Error::SymbolFile {
            path: path.display().to_string(),
            message: format!("line {}, column {}: {}", e.line(), e.column(), e),
        })?;
    symbol_from_record(record, mode).map_err(|e| match e {
        Error::SymbolFile { .. } => e,
        other => Error::SymbolFile {
            path: path.display().to_string(),
            message: other.to_string(),
        },
    })
}

fn symbol_from_record(
    record: SymbolFileRecord,
    mode: SymmetryMode,
) -> Result<(HermitianSymbol, Option<CompactPerturbation>)> {
    if record.dimension == 0 {
        return Err(Error::InvalidParameter("dimension must be >= 1".into()));
    }
    let entries = record
        .terms
        .into_iter()
        .map(|t| {
            if t.alpha.len() != record.dimension || t.beta.len() != record.dimension {
                return Err(Error::DimensionMismatch {
                    expected: record.dimension,
                    found: t.alpha.len().max(t.beta.len()),
                });
            }
            Ok((
                MultiIndex::new(t.alpha),
                MultiIndex::new(t.beta),
                Complex64::new(t.re, t.im),
            ))
        })
        .collect::<Result<Vec<_>>>()?;
    let symbol = HermitianSymbol::from_entries(record.dimension, entries, mode)?;
    let perturbation = record
        .perturbation
        .map(|entries| {
            CompactPerturbation::from_entries(
                entries
                    .into_iter()
                    .map(|p| (p.row, p.col, Complex64::new(p.re, p.im))),
                mode,
            )
        })
        .transpose()?;
    Ok((symbol, perturbation))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::multiindex::enumerate_slab;
    use num::ToPrimitive;
    use proptest::prelude::*;

    fn idx(exps: &[u32]) -> MultiIndex {
        MultiIndex::new(exps.to_vec())
    }

    fn re(c: f64) -> Complex64 {
        Complex64::new(c, 0.0)
    }

    /// Symbol z_1 + z̄_1 in the given dimension.
    fn real_part_symbol(d: usize) -> HermitianSymbol {
        HermitianSymbol::from_entries(
            d,
            [(MultiIndex::unit(d, 0), MultiIndex::zero(d), re(1.0))],
            SymmetryMode::AutoComplete,
        )
        .unwrap()
    }

    /// Symbol z̄_1 z_1 = |z_1|² in the given dimension.
    fn modulus_sq_symbol(d: usize) -> HermitianSymbol {
        let e1 = MultiIndex::unit(d, 0);
        HermitianSymbol::from_entries(d, [(e1.clone(), e1, re(1.0))], SymmetryMode::Strict).unwrap()
    }

    #[test]
    fn shift_column_examples() {
        let da = WeightFamily::drury_arveson(2);
        let (t, w) = shift_column(&da, &idx(&[1, 0]), &idx(&[0, 0]));
        assert_eq!(t, idx(&[1, 0]));
        assert_eq!(w, 1.0);

        let (t, w) = shift_column(&da, &idx(&[1, 0]), &idx(&[0, 1]));
        assert_eq!(t, idx(&[1, 1]));
        assert!((w - (0.5f64).sqrt()).abs() < 1e-15);

        let (t, w) = shift_column(&da, &idx(&[0, 0]), &idx(&[3, 1]));
        assert_eq!(t, idx(&[3, 1]));
        assert_eq!(w, 1.0);
    }

    #[test]
    fn shift_path_independence_exact() {
        // DA weights: the exact rational weight of a word only depends on the
        // source and the word, not the coordinate application order.
        let da = WeightFamily::drury_arveson(3);
        let gamma = idx(&[2, 1, 1]);
        let m = idx(&[1, 0, 2]);
        let expected = shift_weight_sq_rational(&da, &gamma, &m).unwrap();
        for order in [
            [0, 1, 2],
            [2, 1, 0],
            [1, 2, 0],
            [0, 2, 1],
            [2, 0, 1],
            [1, 0, 2],
        ] {
            let mut current = m.clone();
            let mut acc = BigRational::one();
            for &i in &order {
                for _ in 0..gamma.get(i) {
                    acc *= da.step_weight_sq_rational(&current, i).unwrap();
                    current = current.raised(i);
                }
            }
            assert_eq!(acc, expected, "order {order:?}");
            assert_eq!(current, m.plus(&gamma));
        }
    }

    #[test]
    fn bergman_path_independence_float() {
        let bergman = WeightFamily::bergman(3, 0.5).unwrap();
        let gamma = idx(&[2, 0, 2]);
        let m = idx(&[0, 1, 1]);
        let (_, reference) = shift_column(&bergman, &gamma, &m);
        for order in [[2, 1, 0], [1, 2, 0], [2, 0, 1]] {
            let mut current = m.clone();
            let mut acc = 1.0;
            for &i in &order {
                for _ in 0..gamma.get(i) {
                    acc *= bergman.step_weight(&current, i);
                    current = current.raised(i);
                }
            }
            assert!((acc - reference).abs() <= 1e-12 * reference);
        }
    }

    #[test]
    fn bergman_requires_valid_parameter() {
        assert!(WeightFamily::bergman(2, -1.0).is_err());
        assert!(WeightFamily::bergman(2, -0.5).is_ok());
    }

    #[test]
    fn assemble_real_part_symbol_matches_hand_computation() {
        let da = WeightFamily::drury_arveson(2);
        let op = assemble_truncation(&real_part_symbol(2), &da, 1, None).unwrap();
        assert_eq!(op.rank(), 3);
        let expected = [[0.0, 1.0, 0.0], [1.0, 0.0, 0.0], [0.0, 0.0, 0.0]];
        for r in 0..3 {
            for c in 0..3 {
                assert_eq!(op.matrix()[(r, c)], re(expected[r][c]), "({r},{c})");
            }
        }
    }

    #[test]
    fn assemble_constant_symbol_is_identity() {
        let da = WeightFamily::drury_arveson(3);
        let op = assemble_truncation(&HermitianSymbol::constant(3, 1.0), &da, 2, None).unwrap();
        assert_eq!(op.rank(), 10);
        for r in 0..10 {
            for c in 0..10 {
                let expected = if r == c { re(1.0) } else { Complex64::ZERO };
                assert_eq!(op.matrix()[(r, c)], expected);
            }
        }
    }

    #[test]
    fn assemble_modulus_sq_is_diagonal() {
        let da = WeightFamily::drury_arveson(2);
        let op = assemble_truncation(&modulus_sq_symbol(2), &da, 1, None).unwrap();
        let diag: Vec<f64> = (0..3).map(|k| op.matrix()[(k, k)].re).collect();
        assert_eq!(diag, vec![1.0, 1.0, 0.5]);
        for r in 0..3 {
            for c in 0..3 {
                if r != c {
                    assert_eq!(op.matrix()[(r, c)], Complex64::ZERO);
                }
            }
        }
    }

    #[test]
    fn nesting_consistency() {
        // Entries are cutoff-independent: the top-left block at a larger
        // cutoff reproduces the smaller truncation bit for bit.
        let da = WeightFamily::drury_arveson(2);
        let e1 = MultiIndex::unit(2, 0);
        let e2 = MultiIndex::unit(2, 1);
        let symbol = HermitianSymbol::from_entries(
            2,
            [
                (e1.clone(), MultiIndex::zero(2), Complex64::new(0.5, 0.25)),
                (e1.plus(&e2), e2.clone(), re(-0.75)),
                (e2.clone(), e2.clone(), re(2.0)),
            ],
            SymmetryMode::AutoComplete,
        )
        .unwrap();
        let big = assemble_truncation(&symbol, &da, 6, None).unwrap();
        for m in 0..=5u32 {
            let small = assemble_truncation(&symbol, &da, m, None).unwrap();
            let k = small.rank();
            for r in 0..k {
                for c in 0..k {
                    assert_eq!(
                        small.matrix()[(r, c)],
                        big.matrix()[(r, c)],
                        "M={m} ({r},{c})"
                    );
                }
            }
        }
    }

    #[test]
    fn selection_rule_and_hermiticity() {
        let da = WeightFamily::drury_arveson(2);
        let alpha = idx(&[2, 0]);
        let beta = idx(&[0, 1]);
        let symbol = HermitianSymbol::from_entries(
            2,
            [(alpha.clone(), beta.clone(), Complex64::new(0.3, -0.7))],
            SymmetryMode::AutoComplete,
        )
        .unwrap();
        let op = assemble_truncation(&symbol, &da, 4, None).unwrap();
        assert!(op.is_hermitian());
        let basis = op.indexer().basis();
        for (v, row_idx) in basis.iter().enumerate() {
            for (w, col_idx) in basis.iter().enumerate() {
                let entry = op.matrix()[(v, w)];
                if entry != Complex64::ZERO {
                    let from_term =
                        col_idx.plus(&alpha).checked_minus(&beta) == Some(row_idx.clone());
                    let from_mate =
                        col_idx.plus(&beta).checked_minus(&alpha) == Some(row_idx.clone());
                    assert!(from_term || from_mate, "unexpected entry at ({v},{w})");
                }
            }
        }
    }

    #[test]
    fn diagonal_blocks_reproduce_exact_traces() {
        // Assembled single-word truncations match the exact rational trace
        // within 1e−10 relative over d ≤ 3, |α| ≤ 3, N ≤ 15.
        for d in 1..=3usize {
            let da = WeightFamily::drury_arveson(d);
            for degree in 0..=3u32 {
                for alpha in enumerate_slab(d, degree) {
                    let symbol = HermitianSymbol::from_entries(
                        d,
                        [(alpha.clone(), alpha.clone(), re(1.0))],
                        SymmetryMode::Strict,
                    )
                    .unwrap();
                    for n in 0..=15u32 {
                        let op = assemble_truncation(&symbol, &da, n, None).unwrap();
                        let exact = trace_exact(&da, &alpha, n).unwrap().to_f64().unwrap();
                        let got = op.trace();
                        assert!(
                            (got - exact).abs() <= 1e-10 * exact.abs().max(1.0),
                            "d={d} alpha={alpha} N={n}: {got} vs {exact}"
                        );
                    }
                }
            }
        }
    }

    #[test]
    fn trace_exact_examples() {
        let da = WeightFamily::drury_arveson(2);
        assert_eq!(
            trace_exact(&da, &idx(&[1, 0]), 0).unwrap(),
            BigRational::one()
        );
        assert_eq!(
            trace_exact(&da, &idx(&[1, 0]), 1).unwrap(),
            BigRational::new(5.into(), 2.into())
        );
        // α = 0: trace of the identity truncation is d_N.
        assert_eq!(
            trace_exact(&da, &MultiIndex::zero(2), 3).unwrap(),
            BigRational::from(BigInt::from(10))
        );
        let bergman = WeightFamily::bergman(2, 0.0).unwrap();
        assert!(matches!(
            trace_exact(&bergman, &idx(&[1, 0]), 1),
            Err(Error::RequiresDruryArveson)
        ));
    }

    #[test]
    fn mixed_word_traces_vanish() {
        let da2 = WeightFamily::drury_arveson(2);
        assert!(mixed_word_trace_is_zero(&da2, &idx(&[1, 0]), &idx(&[0, 1]), 5).unwrap());
        let da1 = WeightFamily::drury_arveson(1);
        assert!(mixed_word_trace_is_zero(&da1, &idx(&[2]), &idx(&[0]), 10).unwrap());
        let da3 = WeightFamily::drury_arveson(3);
        assert!(mixed_word_trace_is_zero(&da3, &idx(&[1, 0, 0]), &idx(&[1, 1, 0]), 4).unwrap());
        assert!(matches!(
            mixed_word_trace_is_zero(&da2, &idx(&[1, 0]), &idx(&[1, 0]), 3),
            Err(Error::EqualWords)
        ));
    }

    #[test]
    fn symbol_eval_examples() {
        let one = HermitianSymbol::constant(2, 1.0);
        let z = [re(1.0), re(0.0)];
        assert_eq!(one.eval(&z).unwrap(), 1.0);

        let sym = real_part_symbol(1);
        assert_eq!(sym.eval(&[re(1.0)]).unwrap(), 2.0);

        let msq = modulus_sq_symbol(2);
        let s = (0.5f64).sqrt();
        let v = msq.eval(&[re(s), re(s)]).unwrap();
        assert!((v - 0.5).abs() < 1e-15);

        assert!(matches!(
            msq.eval(&[re(1.0), re(1.0)]),
            Err(Error::OffSphere { .. })
        ));
    }

    #[test]
    fn symbol_range_bounds_examples() {
        let c = HermitianSymbol::constant(2, 3.25);
        assert_eq!(symbol_range_bounds(&c, 100, 7).unwrap(), (3.25, 3.25));

        let (lo, hi) = symbol_range_bounds(&real_part_symbol(1), 20_000, 11).unwrap();
        assert!(lo < -1.99 && lo >= -2.0);
        assert!(hi > 1.99 && hi <= 2.0);

        let (lo, hi) = symbol_range_bounds(&modulus_sq_symbol(2), 20_000, 13).unwrap();
        assert!(lo >= 0.0 && lo < 0.01);
        assert!(hi <= 1.0 && hi > 0.99);
    }

    #[test]
    fn symmetry_enforcement() {
        let e1 = MultiIndex::unit(2, 0);
        let z = MultiIndex::zero(2);
        // Strict mode rejects a lone off-diagonal term.
        assert!(matches!(
            HermitianSymbol::from_entries(
                2,
                [(e1.clone(), z.clone(), re(1.0))],
                SymmetryMode::Strict
            ),
            Err(Error::NotHermitian { .. })
        ));
        // Auto-complete fills it in.
        let sym = HermitianSymbol::from_entries(
            2,
            [(e1.clone(), z.clone(), Complex64::new(0.0, 1.0))],
            SymmetryMode::AutoComplete,
        )
        .unwrap();
        assert_eq!(sym.num_terms(), 2);
        // Inconsistent pairs are rejected in both modes.
        assert!(matches!(
            HermitianSymbol::from_entries(
                2,
                [
                    (e1.clone(), z.clone(), re(1.0)),
                    (z.clone(), e1.clone(), re(2.0))
                ],
                SymmetryMode::AutoComplete
            ),
            Err(Error::NotHermitian { .. })
        ));
        // Non-real diagonal is rejected.
        assert!(matches!(
            HermitianSymbol::from_entries(
                2,
                [(e1.clone(), e1.clone(), Complex64::new(1.0, 0.5))],
                SymmetryMode::AutoComplete
            ),
            Err(Error::NotHermitian { .. })
        ));
    }

    #[test]
    fn perturbation_support_and_trace() {
        let k = CompactPerturbation::rank_one_unit(0);
        assert_eq!(k.support(), 1);
        assert_eq!(k.trace_within(10), 1.0);

        let k2 = CompactPerturbation::from_entries(
            [(0, 2, Complex64::new(0.5, 0.25))],
            SymmetryMode::AutoComplete,
        )
        .unwrap();
        assert_eq!(k2.support(), 3);
        assert_eq!(k2.entries().len(), 2);
        assert_eq!(k2.trace_within(10), 0.0);

        assert!(matches!(
            CompactPerturbation::from_entries(
                [(0, 1, re(1.0)), (1, 0, re(0.5))],
                SymmetryMode::Strict
            ),
            Err(Error::NotHermitian { .. })
        ));
    }

    #[test]
    fn assembly_cap_errors() {
        let da = WeightFamily::drury_arveson(3);
        let sym = HermitianSymbol::constant(3, 1.0);
        assert!(matches!(
            assemble_truncation_with_cap(&sym, &da, 30, None, 100),
            Err(Error::CapExceeded { .. })
        ));
    }

    #[test]
    fn dimension_mismatch_errors() {
        let da = WeightFamily::drury_arveson(3);
        let sym = HermitianSymbol::constant(2, 1.0);
        assert!(matches!(
            assemble_truncation(&sym, &da, 2, None),
            Err(Error::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn folner_commutator_from_assembled_shift_matches_closed_form() {
        // ||S_i P_N − P_N S_i||₂² = Σ_{|w|=N} (w_i+1)/(N+1), exactly; for
        // d=2 this is (N+2)/2.
        let da = WeightFamily::drury_arveson(2);
        for n in 0..=12u32 {
            for i in 0..2 {
                let mut acc = BigRational::from(BigInt::from(0));
                for w in enumerate_slab(2, n) {
                    acc += da.step_weight_sq_rational(&w, i).unwrap();
                }
                let closed = BigRational::new(BigInt::from(n + 2), BigInt::from(2));
                assert_eq!(acc, closed, "i={i} N={n}");
            }
        }
    }

    #[test]
    fn symbol_file_roundtrip() {
        let dir = std::env::temp_dir().join("szego-core-symbol-test");
        std::fs::create_dir_all(&dir).unwrap();
        let path = dir.join("symbol.json");
        std::fs::write(
            &path,
            r#"{
  "dimension": 2,
  "terms": [
    {"alpha": [1, 0], "beta": [0, 0], "re": 1.0},
    {"alpha": [1, 0], "beta": [1, 0], "re": 2.0}
  ],
  "perturbation": [
    {"row": 0, "col": 0, "re": 1.0}
  ]
}"#,
        )
        .unwrap();
        let (symbol, perturbation) = load_symbol_file(&path, SymmetryMode::AutoComplete).unwrap();
        assert_eq!(symbol.dimension(), 2);
        assert_eq!(symbol.num_terms(), 3); // auto-completed conjugate
        let k = perturbation.unwrap();
        assert_eq!(k.support(), 1);

        // Strict mode rejects the same file (missing conjugate term).
        assert!(load_symbol_file(&path, SymmetryMode::Strict).is_err());

        std::fs::write(&path, "{ not json").unwrap();
        assert!(matches!(
            load_symbol_file(&path, SymmetryMode::AutoComplete),
            Err(Error::SymbolFile { .. })
        ));
    }

    proptest! {
        /// Path independence of shift words under arbitrary application
        /// orders, exact rationals (DA).
        #[test]
        fn word_weight_is_path_independent(
            gamma_exps in proptest::collection::vec(0u32..=4, 2..=3),
            m_exps in proptest::collection::vec(0u32..=5, 2..=3),
            perm_seed in 0usize..720,
        ) {
            prop_assume!(gamma_exps.len() == m_exps.len());
            let d = gamma_exps.len();
            let gamma = MultiIndex::new(gamma_exps);
            prop_assume!(gamma.degree() <= 4);
            let m = MultiIndex::new(m_exps);
            let da = WeightFamily::drury_arveson(d);
            let expected = shift_weight_sq_rational(&da, &gamma, &m).unwrap();

            // All single raises in a seed-permuted order.
            let mut steps: Vec<usize> = (0..d)
                .flat_map(|i| std::iter::repeat(i).take(gamma.get(i) as usize))
                .collect();
            let mut s = perm_seed;
            for k in (1..steps.len()).rev() {
                steps.swap(k, s % (k + 1));
                s /= k + 1;
            }
            let mut current = m.clone();
            let mut acc = BigRational::one();
            for &i in &steps {
                acc *= da.step_weight_sq_rational(&current, i).unwrap();
                current = current.raised(i);
            }
            prop_assert_eq!(acc, expected);
        }

        /// Assembled matrices are exactly Hermitian for random small symbols.
        #[test]
        fn assembly_is_hermitian(
            a1 in 0u32..=2, a2 in 0u32..=2, b1 in 0u32..=2, b2 in 0u32..=2,
            cre in -2.0f64..2.0, cim in -2.0f64..2.0,
            n in 0u32..=4,
        ) {
            let da = WeightFamily::drury_arveson(2);
            let alpha = MultiIndex::new(vec![a1, a2]);
            let beta = MultiIndex::new(vec![b1, b2]);
            let c = if alpha == beta {
                Complex64::new(cre, 0.0)
            } else {
                Complex64::new(cre, cim)
            };
            let symbol = HermitianSymbol::from_entries(
                2,
                [(alpha, beta, c)],
                SymmetryMode::AutoComplete,
            ).unwrap();
            let op = assemble_truncation(&symbol, &da, n, None).unwrap();
            prop_assert!(op.is_hermitian());
        }
    }
}
