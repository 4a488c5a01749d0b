//! Eigenvalues of truncated operators and empirical spectral distributions.
//!
//! The empirical spectral distribution of `P_N T P_N` places weight
//! `1/d_N` on each of the `d_N` eigenvalues (counting multiplicity). Its
//! means over test functions are the left-hand side of the Szegő limit.

use std::io::Write;

use nalgebra::{DMatrix, SymmetricEigen};
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::operator::TruncatedOperator;

/// Eigenvalues below this threshold count as non-positive for the
/// geometric mean: a log blowup there is a genuine signal that the
/// operator is not bounded below away from zero at this cutoff.
pub const POSITIVITY_THRESHOLD: f64 = 1e-12;

const RESIDUAL_TOLERANCE: f64 = 1e-8;

/// Full spectrum of a Hermitian matrix, sorted ascending with
/// multiplicity. A few eigenpairs are spot-checked against the residual
/// bound `||Mv − λv|| ≤ 1e−8 ||M||`; failure (or non-convergence) is
/// reported with the provenance string.
pub fn eigenvalues_hermitian(matrix: &DMatrix<Complex64>, provenance: &str) -> Result<Vec<f64>> {
    let n = matrix.nrows();
    assert_eq!(n, matrix.ncols(), "matrix must be square");
    if n == 0 {
        return Ok(Vec::new());
    }
    let max_iterations = 100 * n.max(32);

    // Real symmetric matrices take the cheaper real path.
    let all_real = matrix.iter().all(|c| c.im == 0.0);
    let (mut values, residual_ok) = if all_real {
        let real = matrix.map(|c| c.re);
        let eigen = SymmetricEigen::try_new(real.clone(), f64::EPSILON, max_iterations)
            .ok_or_else(|| Error::EigenFailure {
                provenance: provenance.to_string(),
            })?;
        let scale = real.norm();
        let ok = spot_check_indices(n).into_iter().all(|k| {
            let v = eigen.eigenvectors.column(k);
            let r = &real * v - v * eigen.eigenvalues[k];
            r.norm() <= RESIDUAL_TOLERANCE * scale.max(f64::MIN_POSITIVE)
        });
        (eigen.eigenvalues.iter().cloned().collect::<Vec<_>>(), ok)
    } else {
        let eigen = SymmetricEigen::try_new(matrix.clone(), f64::EPSILON, max_iterations)
            .ok_or_else(|| Error::EigenFailure {
                provenance: provenance.to_string(),
            })?;
        let scale = matrix.norm();
        let ok = spot_check_indices(n).into_iter().all(|k| {
            let v = eigen.eigenvectors.column(k);
            let r = matrix * v - v * Complex64::new(eigen.eigenvalues[k], 0.0);
            r.norm() <= RESIDUAL_TOLERANCE * scale.max(f64::MIN_POSITIVE)
        });
        (eigen.eigenvalues.iter().cloned().collect::<Vec<_>>(), ok)
    };

    if !residual_ok || values.iter().any(|v| !v.is_finite()) {
        return Err(Error::EigenFailure {
            provenance: provenance.to_string(),
        });
    }
    values.sort_by(|a, b| a.partial_cmp(b).unwrap());
    Ok(values)
}

fn spot_check_indices(n: usize) -> Vec<usize> {
    let mut idx = vec![0, n / 2, n - 1];
    idx.dedup();
    idx
}

/// Sum of singular values of a Hermitian matrix (= Σ |eigenvalue|).
pub fn trace_norm(matrix: &DMatrix<Complex64>) -> Result<f64> {
    Ok(eigenvalues_hermitian(matrix, "trace-norm")?
        .iter()
        .map(|v| v.abs())
        .sum())
}

/// Where an empirical spectral distribution came from.
#[derive(Clone, Debug)]
pub struct EsdProvenance {
    pub dimension: usize,
    pub cutoff: u32,
    pub symbol: String,
}

/// The uniform probability measure on the `d_N` truncation eigenvalues,
/// counted with multiplicity.
#[derive(Clone, Debug)]
pub struct EmpiricalSpectralDistribution {
    eigenvalues: Vec<f64>,
    provenance: EsdProvenance,
}

impl EmpiricalSpectralDistribution {
    /// Eigensolves the truncation. The distribution length is exactly the
    /// truncation rank.
    pub fn from_operator(op: &TruncatedOperator) -> Result<Self> {
        let eigenvalues = eigenvalues_hermitian(op.matrix(), op.provenance())?;
        Ok(EmpiricalSpectralDistribution {
            eigenvalues,
            provenance: EsdProvenance {
                dimension: op.dimension(),
                cutoff: op.cutoff(),
                symbol: op.symbol_id().to_string(),
            },
        })
    }

    /// Wraps an externally computed spectrum (oracles, tests).
    pub fn from_sorted_eigenvalues(eigenvalues: Vec<f64>, provenance: EsdProvenance) -> Self {
        assert!(!eigenvalues.is_empty());
        assert!(eigenvalues.iter().all(|v| v.is_finite()));
        assert!(eigenvalues.windows(2).all(|w| w[0] <= w[1]));
        EmpiricalSpectralDistribution {
            eigenvalues,
            provenance,
        }
    }

    pub fn eigenvalues(&self) -> &[f64] {
        &self.eigenvalues
    }

    pub fn len(&self) -> usize {
        self.eigenvalues.len()
    }

    pub fn is_empty(&self) -> bool {
        self.eigenvalues.is_empty()
    }

    /// Weight of each atom: `1/d_N`.
    pub fn weight(&self) -> f64 {
        1.0 / self.len() as f64
    }

    pub fn provenance(&self) -> &EsdProvenance {
        &self.provenance
    }

    pub fn min(&self) -> f64 {
        self.eigenvalues[0]
    }

    pub fn max(&self) -> f64 {
        self.eigenvalues[self.len() - 1]
    }

    /// `(1/d_N) Σ f(λ_i)`. The test function returns `None` where it is
    /// undefined; the offending eigenvalue is reported in the error.
    pub fn mean_of(&self, f: impl Fn(f64) -> Option<f64>) -> Result<f64> {
        let mut acc = 0.0;
        for &v in &self.eigenvalues {
            acc += f(v).ok_or(Error::FunctionDomain { value: v })?;
        }
        Ok(acc / self.len() as f64)
    }

    /// `exp((1/d_N) Σ log λ_i) = det(M)^(1/d_N)`; requires all eigenvalues
    /// positive (threshold [`POSITIVITY_THRESHOLD`]).
    pub fn geometric_mean(&self) -> Result<f64> {
        let mut acc = 0.0;
        for &v in &self.eigenvalues {
            if v <= POSITIVITY_THRESHOLD {
                return Err(Error::NonPositive {
                    value: v,
                    threshold: POSITIVITY_THRESHOLD,
                });
            }
            acc += v.ln();
        }
        Ok((acc / self.len() as f64).exp())
    }

    /// CSV export: metadata comment, then `index,eigenvalue` rows.
    pub fn write_csv<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        writeln!(
            w,
            "# d={} N={} d_N={} symbol={}",
            self.provenance.dimension,
            self.provenance.cutoff,
            self.len(),
            self.provenance.symbol
        )?;
        writeln!(w, "index,eigenvalue")?;
        for (k, v) in self.eigenvalues.iter().enumerate() {
            writeln!(w, "{k},{v}")?;
        }
        Ok(())
    }
}

/// `χ_N(T) = Tr(P_N T P_N) / rank(P_N)`.
pub fn chi_n(op: &TruncatedOperator) -> f64 {
    op.trace() / op.rank() as f64
}

/// Sup-distance between the two empirical CDFs.
pub fn kolmogorov_distance(
    a: &EmpiricalSpectralDistribution,
    b: &EmpiricalSpectralDistribution,
) -> f64 {
    assert!(!a.is_empty() && !b.is_empty());
    let xs = a.eigenvalues();
    let ys = b.eigenvalues();
    let (n, m) = (xs.len() as f64, ys.len() as f64);
    let (mut i, mut j) = (0usize, 0usize);
    let mut sup = 0.0f64;
    while i < xs.len() || j < ys.len() {
        let v = match (xs.get(i), ys.get(j)) {
            (Some(&x), Some(&y)) => x.min(y),
            (Some(&x), None) => x,
            (None, Some(&y)) => y,
            (None, None) => unreachable!(),
        };
        while i < xs.len() && xs[i] <= v {
            i += 1;
        }
        while j < ys.len() && ys[j] <= v {
            j += 1;
        }
        sup = sup.max((i as f64 / n - j as f64 / m).abs());
    }
    sup
}
