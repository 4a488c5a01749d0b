//! Cross-module limit checks: trace-per-unit-volume limits against exact
//! sphere moments, and the d=1 determinant limit against a quadrature
//! oracle for the circle integral.

use num::bigint::BigInt;
use num::rational::BigRational;
use num::ToPrimitive;
use num_complex::Complex64;

use szego_core::measure::monomial_moment;
use szego_core::multiindex::{enumerate_slab, truncation_rank, MultiIndex};
use szego_core::operator::{
    assemble_truncation, trace_exact, HermitianSymbol, SymmetryMode, WeightFamily,
};
use szego_core::spectral::EmpiricalSpectralDistribution;

fn re(c: f64) -> Complex64 {
    Complex64::new(c, 0.0)
}

/// χ_N of every single word S^{α*}S^α converges to the exact sphere moment
/// ∫ z̄^α z^α dσ, with the gap shrinking along the schedule.
#[test]
fn chi_limits_match_monomial_moments() {
    for d in 1..=3usize {
        let weights = WeightFamily::drury_arveson(d);
        for degree in 0..=3u32 {
            for alpha in enumerate_slab(d, degree) {
                let limit = monomial_moment(&alpha, &alpha).to_f64().unwrap();
                let chi = |n: u32| -> f64 {
                    let d_n = BigRational::from(BigInt::from(truncation_rank(d, n)));
                    (trace_exact(&weights, &alpha, n).unwrap() / d_n)
                        .to_f64()
                        .unwrap()
                };
                let gaps: Vec<f64> = [5u32, 10, 20, 40]
                    .iter()
                    .map(|&n| (chi(n) - limit).abs())
                    .collect();
                assert!(
                    gaps.windows(2).all(|w| w[1] <= w[0]),
                    "d={d} alpha={alpha}: gaps {gaps:?}"
                );
                assert!(
                    gaps[3] < gaps[0] / 4.0 + 1e-15,
                    "d={d} alpha={alpha}: no contraction, gaps {gaps:?}"
                );
            }
        }
    }
}

/// Midpoint-rule quadrature of `∫ log(2+2cosθ) dθ/2π` (an integrable
/// log singularity at θ=π; midpoints never hit it for even counts).
fn circle_log_integral(points: usize) -> f64 {
    let h = 2.0 * std::f64::consts::PI / points as f64;
    let mut acc = 0.0;
    for k in 0..points {
        let theta = (k as f64 + 0.5) * h;
        acc += (2.0 + 2.0 * theta.cos()).ln();
    }
    acc / points as f64
}

/// d=1 determinant limit: det(T_N)^{1/(N+1)} of the symbol 2+z+z̄
/// approaches exp(∫ log(2+2cosθ) dm) = 1, checked against the quadrature
/// oracle rather than the known closed value.
#[test]
fn d1_geometric_mean_approaches_quadrature_oracle() {
    let oracle = circle_log_integral(1 << 20).exp();
    // The integral is exactly 0; the oracle itself should confirm that.
    assert!((oracle - 1.0).abs() < 1e-3, "quadrature oracle {oracle}");

    let da = WeightFamily::drury_arveson(1);
    let symbol = HermitianSymbol::from_entries(
        1,
        [(MultiIndex::new(vec![1]), MultiIndex::zero(1), re(1.0))],
        SymmetryMode::AutoComplete,
    )
    .unwrap()
    .shifted(2.0);

    let gm = |n: u32| -> f64 {
        let op = assemble_truncation(&symbol, &da, n, None).unwrap();
        EmpiricalSpectralDistribution::from_operator(&op)
            .unwrap()
            .geometric_mean()
            .unwrap()
    };
    // det(T_n) = n+1 for this tridiagonal family, so the geometric mean is
    // (n+2)^(1/(n+1)): slow but monotone convergence to the oracle value.
    let gm20 = gm(20);
    let gm60 = gm(60);
    assert!((gm20 - oracle).abs() < 0.16, "gm(20) = {gm20} vs {oracle}");
    assert!((gm60 - oracle).abs() < (gm20 - oracle).abs());
    assert!((gm20 - 22.0f64.powf(1.0 / 21.0)).abs() < 1e-10);
}
