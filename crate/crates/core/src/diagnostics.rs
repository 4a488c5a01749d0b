//! Quantitative verification of the limit theorems' hypotheses and
//! conclusions: Følner ratios (both equivalent conditions), trace-per-unit-
//! volume limits, compact-perturbation decay, and the gap between the two
//! sides of the Szegő limit.

use std::io::Write;

use nalgebra::DMatrix;
use num::bigint::BigInt;
use num::rational::BigRational;
use num::{ToPrimitive, Zero};
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::measure::{exact_polynomial_pushforward, integrate_pushforward};
use crate::multiindex::{enumerate_slab, truncation_rank, MultiIndex};
use crate::operator::{
    assemble_truncation, trace_exact, CompactPerturbation, HermitianSymbol, WeightFamily,
};
use crate::spectral::{trace_norm, EmpiricalSpectralDistribution, POSITIVITY_THRESHOLD};

/// Test functions admitted by the verification layer: monomial powers,
/// the logarithm, and explicit polynomials (coefficients `c_0..c_k`).
#[derive(Clone, Debug, PartialEq)]
pub enum TestFunction {
    Power(u32),
    Log,
    Polynomial(Vec<f64>),
}

impl TestFunction {
    pub fn eval(&self, x: f64) -> Option<f64> {
        match self {
            TestFunction::Power(k) => Some(x.powi(*k as i32)),
            TestFunction::Log => (x > POSITIVITY_THRESHOLD).then(|| x.ln()),
            TestFunction::Polynomial(coeffs) => {
                Some(coeffs.iter().rev().fold(0.0, |acc, &c| acc * x + c))
            }
        }
    }

    /// Coefficients `c_0..c_k` when the function is a polynomial.
    pub fn polynomial_coefficients(&self) -> Option<Vec<f64>> {
        match self {
            TestFunction::Power(k) => {
                let mut coeffs = vec![0.0; *k as usize + 1];
                coeffs[*k as usize] = 1.0;
                Some(coeffs)
            }
            TestFunction::Log => None,
            TestFunction::Polynomial(coeffs) => Some(coeffs.clone()),
        }
    }

    pub fn is_polynomial(&self) -> bool {
        !matches!(self, TestFunction::Log)
    }

    pub fn describe(&self) -> String {
        match self {
            TestFunction::Power(k) => format!("x^{k}"),
            TestFunction::Log => "log".to_string(),
            TestFunction::Polynomial(coeffs) => format!("poly{coeffs:?}"),
        }
    }
}

/// One row of a convergence table. The gap is always recomputed from the
/// stored sides.
#[derive(Clone, Debug)]
pub struct ConvergenceRow {
    pub n: u32,
    pub d_n: usize,
    pub lhs: f64,
    pub rhs: f64,
    /// Experiment-specific companion value (error bound, oracle, stderr).
    pub aux: Option<f64>,
}

impl ConvergenceRow {
    pub fn gap(&self) -> f64 {
        (self.lhs - self.rhs).abs()
    }
}

/// Rows of `(N, d_N, lhs, rhs)` with strictly increasing `N`.
#[derive(Clone, Debug)]
pub struct ConvergenceTable {
    descriptor: String,
    aux_label: Option<String>,
    rows: Vec<ConvergenceRow>,
}

impl ConvergenceTable {
    pub fn new(descriptor: impl Into<String>, aux_label: Option<&str>) -> Self {
        ConvergenceTable {
            descriptor: descriptor.into(),
            aux_label: aux_label.map(str::to_string),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: ConvergenceRow) {
        if let Some(last) = self.rows.last() {
            assert!(row.n > last.n, "cutoffs must be strictly increasing");
        }
        self.rows.push(row);
    }

    pub fn descriptor(&self) -> &str {
        &self.descriptor
    }

    pub fn aux_label(&self) -> Option<&str> {
        self.aux_label.as_deref()
    }

    pub fn rows(&self) -> &[ConvergenceRow] {
        &self.rows
    }

    pub fn last_row(&self) -> Option<&ConvergenceRow> {
        self.rows.last()
    }

    /// Whether the gaps over the last `window` rows are non-increasing
    /// within `slack`. Limits come without rates, so trend checks look at
    /// the sampled tail only.
    pub fn tail_gaps_non_increasing(&self, window: usize, slack: f64) -> bool {
        let rows = if self.rows.len() > window {
            &self.rows[self.rows.len() - window..]
        } else {
            &self.rows[..]
        };
        rows.windows(2).all(|w| w[1].gap() <= w[0].gap() + slack)
    }

    /// CSV export: descriptor comment, then `N,d_N,lhs,rhs,gap,bound` rows
    /// (the bound column carries the aux value and may be empty).
    pub fn write_csv<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        writeln!(w, "# {}", self.descriptor)?;
        if let Some(label) = &self.aux_label {
            writeln!(w, "# bound column: {label}")?;
        }
        writeln!(w, "N,d_N,lhs,rhs,gap,bound")?;
        for row in &self.rows {
            let aux = row.aux.map(|v| v.to_string()).unwrap_or_default();
            writeln!(
                w,
                "{},{},{},{},{},{}",
                row.n,
                row.d_n,
                row.lhs,
                row.rhs,
                row.gap(),
                aux
            )?;
        }
        Ok(())
    }
}

fn d_n_usize(d: usize, n: u32) -> usize {
    usize::try_from(&truncation_rank(d, n)).expect("rank fits usize")
}

/// `||P_N M − M P_N||₂ / √d_N` for a matrix assembled at a cutoff at least
/// `N + D`: only entries with exactly one side inside the range of `P_N`
/// contribute.
pub fn commutator_hs_ratio(matrix: &DMatrix<Complex64>, d_n: usize) -> f64 {
    let size = matrix.nrows();
    assert!(d_n <= size);
    let mut acc = 0.0;
    for c in 0..size {
        for r in 0..size {
            if (r < d_n) != (c < d_n) {
                acc += matrix[(r, c)].norm_sqr();
            }
        }
    }
    (acc / d_n as f64).sqrt()
}

/// `||(I − P_N) M P_N||₂ / √d_N` for a matrix assembled past the cutoff.
pub fn corner_hs_ratio(matrix: &DMatrix<Complex64>, d_n: usize) -> f64 {
    let size = matrix.nrows();
    assert!(d_n <= size);
    let mut acc = 0.0;
    for c in 0..d_n {
        for r in d_n..size {
            acc += matrix[(r, c)].norm_sqr();
        }
    }
    (acc / d_n as f64).sqrt()
}

/// Følner commutator ratio `τ_N` for a Hermitian symbol: the operator is
/// assembled at cutoff `N + D` (entries are exact there because the
/// operator is a sum of words), and the commutator with `P_N` is read off
/// the off-diagonal blocks.
pub fn folner_ratio_commutator(
    symbol: &HermitianSymbol,
    weights: &WeightFamily,
    n: u32,
) -> Result<f64> {
    let op = assemble_truncation(symbol, weights, n + symbol.max_degree(), None)?;
    let d_n = d_n_usize(symbol.dimension(), n);
    Ok(commutator_hs_ratio(op.matrix(), d_n))
}

/// Corner ratio `||(I−P_N) T P_N||₂ / √d_N` for a Hermitian symbol.
pub fn folner_ratio_corner(
    symbol: &HermitianSymbol,
    weights: &WeightFamily,
    n: u32,
) -> Result<f64> {
    let op = assemble_truncation(symbol, weights, n + symbol.max_degree(), None)?;
    let d_n = d_n_usize(symbol.dimension(), n);
    Ok(corner_hs_ratio(op.matrix(), d_n))
}

/// Følner commutator ratio for the single word `S^{β*} S^α` (exact at all
/// cutoffs; computed sparsely, one matrix entry per column).
pub fn folner_ratio_commutator_word(
    weights: &WeightFamily,
    alpha: &MultiIndex,
    beta: &MultiIndex,
    n: u32,
) -> Result<f64> {
    word_folner_ratios(weights, alpha, beta, n).map(|(commutator, _)| commutator)
}

/// Corner ratio for the single word `S^{β*} S^α`.
pub fn folner_ratio_corner_word(
    weights: &WeightFamily,
    alpha: &MultiIndex,
    beta: &MultiIndex,
    n: u32,
) -> Result<f64> {
    word_folner_ratios(weights, alpha, beta, n).map(|(_, corner)| corner)
}

fn word_folner_ratios(
    weights: &WeightFamily,
    alpha: &MultiIndex,
    beta: &MultiIndex,
    n: u32,
) -> Result<(f64, f64)> {
    let d = weights.dimension();
    for idx in [alpha, beta] {
        if idx.dimension() != d {
            return Err(Error::DimensionMismatch {
                expected: d,
                found: idx.dimension(),
            });
        }
    }
    // Entries (v, w) with w + α = v + β vanish unless |w| ≤ N + |β|: past
    // that, both sides of the commutator are outside the range of P_N.
    // Squared entries are products of rational step ratios, so they are
    // accumulated without square roots.
    let mut commutator_sq = 0.0;
    let mut corner_sq = 0.0;
    for j in 0..=(n + beta.degree()) {
        for w in enumerate_slab(d, j) {
            if let Some(v) = w.plus(alpha).checked_minus(beta) {
                let (_, a_sq) = crate::operator::shift_column_sq(weights, alpha, &w);
                let (_, b_sq) = crate::operator::shift_column_sq(weights, beta, &v);
                let value_sq = a_sq * b_sq;
                let w_in = w.degree() <= n;
                let v_in = v.degree() <= n;
                if w_in != v_in {
                    commutator_sq += value_sq;
                }
                if w_in && !v_in {
                    corner_sq += value_sq;
                }
            }
        }
    }
    let d_n = d_n_usize(d, n) as f64;
    Ok(((commutator_sq / d_n).sqrt(), (corner_sq / d_n).sqrt()))
}

/// Exact squared Hilbert-Schmidt norm `||S_i P_N − P_N S_i||₂²` on the
/// Drury-Arveson space: `Σ_{|w|=N} (w_i+1)/(N+1)`, summed from the
/// assembly's own rational shift weights.
pub fn shift_commutator_hs_sq(d: usize, i: usize, n: u32) -> BigRational {
    let da = WeightFamily::drury_arveson(d);
    let mut acc = BigRational::zero();
    for w in enumerate_slab(d, n) {
        acc += da.step_weight_sq_rational(&w, i).expect("DA weights");
    }
    acc
}

/// Exact squared Følner ratio `τ_N(S_i)²` on the Drury-Arveson space.
pub fn shift_folner_ratio_sq(d: usize, i: usize, n: u32) -> BigRational {
    shift_commutator_hs_sq(d, i, n)
        / BigRational::from(BigInt::from(truncation_rank(d, n)))
}

/// Table of `χ_N(S^{α*} S^α)` against the limit `(d−1)! α!/(d−1+|α|)!`.
/// The left side is exact (rational) on the Drury-Arveson space and
/// numeric on Bergman spaces.
pub fn chi_limit_table(
    alpha: &MultiIndex,
    weights: &WeightFamily,
    n_list: &[u32],
) -> Result<ConvergenceTable> {
    validate_cutoffs(n_list)?;
    let d = weights.dimension();
    if alpha.dimension() != d {
        return Err(Error::DimensionMismatch {
            expected: d,
            found: alpha.dimension(),
        });
    }
    let limit = crate::measure::monomial_moment(alpha, alpha)
        .to_f64()
        .expect("limit is a small rational");
    let mut table = ConvergenceTable::new(
        format!(
            "chi_N(S^{{{alpha}*}} S^{{{alpha}}}) on {} vs (d-1)! a!/(d-1+|a|)!",
            weights.describe()
        ),
        None,
    );
    for &n in n_list {
        let d_n = d_n_usize(d, n);
        let lhs = if weights.is_drury_arveson() {
            let tr = trace_exact(weights, alpha, n)?;
            (tr / BigRational::from(BigInt::from(d_n))).to_f64().unwrap()
        } else {
            // Diagonal word: χ_N = (1/d_N) Σ_{|w|≤N} ||S^α e_w||².
            let mut acc = 0.0;
            for j in 0..=n {
                for w in enumerate_slab(d, j) {
                    let (_, weight_sq) = crate::operator::shift_column_sq(weights, alpha, &w);
                    acc += weight_sq;
                }
            }
            acc / d_n as f64
        };
        table.push(ConvergenceRow {
            n,
            d_n,
            lhs,
            rhs: limit,
            aux: None,
        });
    }
    Ok(table)
}

/// Table of `χ_N(K)` for a finite-rank perturbation, with the decay bound
/// `||K||₁ / √d_N` alongside.
pub fn compact_decay_table(
    perturbation: &CompactPerturbation,
    dimension: usize,
    n_list: &[u32],
) -> Result<ConvergenceTable> {
    validate_cutoffs(n_list)?;
    let tn = if perturbation.is_zero() {
        0.0
    } else {
        trace_norm(&perturbation.support_matrix())?
    };
    let mut table = ConvergenceTable::new(
        format!("chi_N(K) for a finite-rank K (trace norm {tn})"),
        Some("trace_norm/sqrt(d_N)"),
    );
    for &n in n_list {
        let d_n = d_n_usize(dimension, n);
        table.push(ConvergenceRow {
            n,
            d_n,
            lhs: perturbation.trace_within(d_n) / d_n as f64,
            rhs: 0.0,
            aux: Some(tn / (d_n as f64).sqrt()),
        });
    }
    Ok(table)
}

/// How the reference side of the Szegő gap is computed.
#[derive(Clone, Debug)]
pub enum IntegrationSpec {
    /// Symbolic expansion with exact sphere moments (polynomial `f` only).
    ExactPolynomial,
    /// Seeded Monte Carlo over the sphere.
    MonteCarlo { samples: usize, seed: u64 },
}

/// Both sides of the Szegő limit at one cutoff.
#[derive(Clone, Debug)]
pub struct SzegoGap {
    /// `(1/d_N) Σ f(λ_i)`.
    pub lhs: f64,
    /// `∫ f∘φ dσ`.
    pub rhs: f64,
    /// Standard error of `rhs` when it was Monte Carlo.
    pub rhs_stderr: Option<f64>,
}

impl SzegoGap {
    pub fn gap(&self) -> f64 {
        (self.lhs - self.rhs).abs()
    }
}

/// Evaluates both sides of the Szegő limit for a symbol (plus an optional
/// compact perturbation, which changes the left side at finite `N` but not
/// the reference side).
pub fn szego_gap(
    symbol: &HermitianSymbol,
    weights: &WeightFamily,
    perturbation: Option<&CompactPerturbation>,
    f: &TestFunction,
    n: u32,
    integration: &IntegrationSpec,
) -> Result<SzegoGap> {
    let op = assemble_truncation(symbol, weights, n, perturbation)?;
    let esd = EmpiricalSpectralDistribution::from_operator(&op)?;
    let lhs = esd.mean_of(|x| f.eval(x))?;
    let (rhs, rhs_stderr) = match integration {
        IntegrationSpec::ExactPolynomial => {
            let coeffs = f.polynomial_coefficients().ok_or_else(|| {
                Error::InvalidParameter(
                    "exact integration requires a polynomial test function".into(),
                )
            })?;
            let mut acc = BigRational::zero();
            for (k, &c) in coeffs.iter().enumerate() {
                if c != 0.0 {
                    acc += BigRational::from_float(c).expect("finite coefficient")
                        * exact_polynomial_pushforward(symbol, k as u32)?;
                }
            }
            (acc.to_f64().unwrap(), None)
        }
        IntegrationSpec::MonteCarlo { samples, seed } => {
            let (est, se) = integrate_pushforward(symbol, |x| f.eval(x), *samples, *seed)?;
            (est, Some(se))
        }
    };
    Ok(SzegoGap {
        lhs,
        rhs,
        rhs_stderr,
    })
}

fn validate_cutoffs(n_list: &[u32]) -> Result<()> {
    if n_list.is_empty() {
        return Err(Error::InvalidParameter("empty cutoff list".into()));
    }
    if n_list.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::InvalidParameter(
            "cutoffs must be strictly increasing".into(),
        ));
    }
    Ok(())
}
