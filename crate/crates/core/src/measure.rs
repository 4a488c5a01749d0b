//! Normalized surface measure on the unit sphere of `C^d`.
//!
//! The reference side of the Szegő limit: exact monomial moments, seeded
//! Monte Carlo integration of `f ∘ φ`, and exact push-forward moments of
//! polynomial powers of a symbol.

use std::collections::BTreeMap;

use num::bigint::BigInt;
use num::rational::BigRational;
use num::{One, Zero};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::multiindex::{factorial, MultiIndex};
use crate::operator::HermitianSymbol;

/// Default cap on the number of monomial pairs in a symbolic expansion.
pub const DEFAULT_EXPANSION_CAP: usize = 1_000_000;

/// Uniform (normalized Lebesgue) measure on the unit sphere `∂B_d`,
/// sampled through normalized complex Gaussians. Sample `k` is drawn from
/// its own counter-indexed stream, so results do not depend on how a batch
/// is sharded.
#[derive(Clone, Copy, Debug)]
pub struct SphereMeasure {
    dimension: usize,
    seed: u64,
}

impl SphereMeasure {
    pub fn new(dimension: usize, seed: u64) -> Self {
        assert!(dimension >= 1);
        SphereMeasure { dimension, seed }
    }

    pub fn dimension(&self) -> usize {
        self.dimension
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    /// Draws sample `index` into `point` (resized as needed).
    pub fn sample_point_into(&self, index: u64, point: &mut Vec<Complex64>) {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        rng.set_stream(index.into());
        point.clear();
        loop {
            let mut norm_sq = 0.0;
            for _ in 0..self.dimension {
                let re: f64 = rng.sample(StandardNormal);
                let im: f64 = rng.sample(StandardNormal);
                let z = Complex64::new(re, im);
                norm_sq += z.norm_sqr();
                point.push(z);
            }
            if norm_sq > 1e-200 {
                let inv = norm_sq.sqrt().recip();
                for z in point.iter_mut() {
                    *z *= inv;
                }
                return;
            }
            point.clear();
        }
    }

    pub fn sample_point(&self, index: u64) -> Vec<Complex64> {
        let mut point = Vec::with_capacity(self.dimension);
        self.sample_point_into(index, &mut point);
        point
    }

    /// `n` i.i.d. uniform points on the sphere.
    pub fn sample(&self, n: usize) -> Vec<Vec<Complex64>> {
        assert!(n >= 1);
        (0..n as u64).map(|k| self.sample_point(k)).collect()
    }
}

/// Exact monomial moment `∫ z̄^β z^α dσ`: zero unless `α = β`, in which
/// case it equals `(d−1)! α! / (d−1+|α|)!`.
pub fn monomial_moment(alpha: &MultiIndex, beta: &MultiIndex) -> BigRational {
    assert_eq!(alpha.dimension(), beta.dimension());
    if alpha != beta {
        return BigRational::zero();
    }
    let d = alpha.dimension() as u64;
    BigRational::new(
        BigInt::from(factorial(d - 1) * alpha.factorial()),
        BigInt::from(factorial(d - 1 + u64::from(alpha.degree()))),
    )
}

/// Monte Carlo estimate of `∫ f(φ(z)) dσ(z)` with its standard error
/// (sample standard deviation over `√n`). The test function returns `None`
/// where undefined; the offending symbol value is reported.
pub fn integrate_pushforward(
    symbol: &HermitianSymbol,
    f: impl Fn(f64) -> Option<f64>,
    samples: usize,
    seed: u64,
) -> Result<(f64, f64)> {
    assert!(samples >= 1);
    let measure = SphereMeasure::new(symbol.dimension(), seed);
    let mut point = Vec::new();
    let mut mean = 0.0;
    let mut m2 = 0.0;
    for k in 0..samples as u64 {
        measure.sample_point_into(k, &mut point);
        let phi = symbol.eval(&point)?;
        let y = f(phi).ok_or(Error::FunctionDomain { value: phi })?;
        // Welford update keeps the variance accumulation stable.
        let delta = y - mean;
        mean += delta / (k as f64 + 1.0);
        m2 += delta * (y - mean);
    }
    let stderr = if samples > 1 {
        (m2 / (samples as f64 - 1.0)).sqrt() / (samples as f64).sqrt()
    } else {
        0.0
    };
    Ok((mean, stderr))
}

type RationalComplex = (BigRational, BigRational);

fn rc_mul(a: &RationalComplex, b: &RationalComplex) -> RationalComplex {
    (
        &a.0 * &b.0 - &a.1 * &b.1,
        &a.0 * &b.1 + &a.1 * &b.0,
    )
}

fn rational_from_f64(x: f64) -> BigRational {
    BigRational::from_float(x).expect("finite coefficient")
}

/// Exact value of `∫ φ^k dσ` by symbolic expansion of `φ^k` into monomial
/// pairs and summation of exact moments. Coefficients are lifted to exact
/// rationals, so the result is an exact rational number.
pub fn exact_polynomial_pushforward(symbol: &HermitianSymbol, k: u32) -> Result<BigRational> {
    exact_polynomial_pushforward_capped(symbol, k, DEFAULT_EXPANSION_CAP)
}

pub fn exact_polynomial_pushforward_capped(
    symbol: &HermitianSymbol,
    k: u32,
    cap: usize,
) -> Result<BigRational> {
    let d = symbol.dimension();
    let zero_pair = (MultiIndex::zero(d), MultiIndex::zero(d));

    let base: BTreeMap<(MultiIndex, MultiIndex), RationalComplex> = symbol
        .terms()
        .map(|(a, b, c)| {
            (
                (a.clone(), b.clone()),
                (rational_from_f64(c.re), rational_from_f64(c.im)),
            )
        })
        .collect();

    // φ^0 = 1.
    let mut acc: BTreeMap<(MultiIndex, MultiIndex), RationalComplex> = BTreeMap::new();
    acc.insert(zero_pair, (BigRational::one(), BigRational::zero()));

    for _ in 0..k {
        let mut next: BTreeMap<(MultiIndex, MultiIndex), RationalComplex> = BTreeMap::new();
        for ((a1, b1), c1) in &acc {
            for ((a2, b2), c2) in &base {
                let key = (a1.plus(a2), b1.plus(b2));
                let product = rc_mul(c1, c2);
                match next.get_mut(&key) {
                    Some(existing) => {
                        existing.0 += product.0;
                        existing.1 += product.1;
                    }
                    None => {
                        if next.len() >= cap {
                            return Err(Error::ExpansionCapExceeded {
                                terms: next.len() + 1,
                                cap,
                            });
                        }
                        next.insert(key, product);
                    }
                }
            }
        }
        acc = next;
    }

    // Only diagonal pairs have nonzero moments; their coefficients are real
    // by Hermitian symmetry of the power.
    let mut result = BigRational::zero();
    for ((a, b), (re, im)) in &acc {
        if a == b {
            debug_assert!(im.is_zero());
            result += re * monomial_moment(a, a);
        }
    }
    Ok(result)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::operator::SymmetryMode;
    use num::ToPrimitive;

    fn re(c: f64) -> Complex64 {
        Complex64::new(c, 0.0)
    }

    fn idx(exps: &[u32]) -> MultiIndex {
        MultiIndex::new(exps.to_vec())
    }

    /// d=1 symbol 2 + z + z̄.
    fn circle_symbol() -> HermitianSymbol {
        HermitianSymbol::from_entries(
            1,
            [(idx(&[1]), idx(&[0]), re(1.0))],
            SymmetryMode::AutoComplete,
        )
        .unwrap()
        .shifted(2.0)
    }

    #[test]
    fn moment_examples() {
        assert_eq!(
            monomial_moment(&idx(&[1, 0]), &idx(&[1, 0])),
            BigRational::new(1.into(), 2.into())
        );
        assert_eq!(
            monomial_moment(&idx(&[1, 0]), &idx(&[0, 1])),
            BigRational::zero()
        );
        assert_eq!(
            monomial_moment(&MultiIndex::zero(3), &MultiIndex::zero(3)),
            BigRational::one()
        );
    }

    #[test]
    fn moment_positivity_and_symmetry() {
        for d in 1..=3 {
            for j in 0..=4 {
                for alpha in crate::multiindex::enumerate_slab(d, j) {
                    let m = monomial_moment(&alpha, &alpha);
                    assert!(m > BigRational::zero());
                    assert!(m <= BigRational::one());
                    // Invariance under coordinate permutation (reversal).
                    let mut rev = alpha.exponents().to_vec();
                    rev.reverse();
                    let reversed = MultiIndex::new(rev);
                    assert_eq!(m, monomial_moment(&reversed, &reversed));
                }
            }
        }
    }

    #[test]
    fn samples_lie_on_sphere_and_are_deterministic() {
        for d in [1usize, 2, 4] {
            let measure = SphereMeasure::new(d, 42);
            for k in 0..50 {
                let p = measure.sample_point(k);
                let norm = p.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
                assert!((norm - 1.0).abs() <= 1e-12);
            }
            // Bit-for-bit reproducibility under the same seed.
            let again = SphereMeasure::new(d, 42);
            assert_eq!(measure.sample_point(7), again.sample_point(7));
            // Different seed, different point.
            let other = SphereMeasure::new(d, 43);
            assert_ne!(measure.sample_point(7), other.sample_point(7));
        }
    }

    #[test]
    fn sample_statistics_match_exact_moments() {
        // Mean of z over the circle is 0; CLT bound at ~3σ with 10^6 samples.
        let n = 1_000_000u64;
        let measure = SphereMeasure::new(1, 7);
        let mut point = Vec::new();
        let mut sum = Complex64::ZERO;
        for k in 0..n {
            measure.sample_point_into(k, &mut point);
            sum += point[0];
        }
        let mean = sum / n as f64;
        assert!(mean.norm() <= 5e-3, "{}", mean.norm());

        // Mean of |z_1|² is 1/d.
        for d in [2usize, 3] {
            let measure = SphereMeasure::new(d, 11);
            let mut acc = 0.0;
            for k in 0..n {
                measure.sample_point_into(k, &mut point);
                acc += point[0].norm_sqr();
            }
            let mean = acc / n as f64;
            assert!(
                (mean - 1.0 / d as f64).abs() <= 3e-3,
                "d={d}: {mean}"
            );
        }
    }

    #[test]
    fn pushforward_constant_function() {
        let symbol = circle_symbol();
        let (est, se) = integrate_pushforward(&symbol, |_| Some(1.0), 1000, 3).unwrap();
        assert_eq!(est, 1.0);
        assert_eq!(se, 0.0);
    }

    #[test]
    fn pushforward_examples() {
        // d=2 symbol |z_1|², identity function: estimate ≈ 1/2.
        let e1 = MultiIndex::unit(2, 0);
        let msq = HermitianSymbol::from_entries(
            2,
            [(e1.clone(), e1, re(1.0))],
            SymmetryMode::Strict,
        )
        .unwrap();
        let (est, se) = integrate_pushforward(&msq, Some, 200_000, 5).unwrap();
        assert!((est - 0.5).abs() <= 4.0 * se, "est={est} se={se}");

        // d=1 symbol 2+z+z̄ with f = x²: ∫ (2+2cosθ)² dm = 6.
        let (est, se) = integrate_pushforward(&circle_symbol(), |x| Some(x * x), 200_000, 9).unwrap();
        assert!((est - 6.0).abs() <= 4.0 * se, "est={est} se={se}");
    }

    #[test]
    fn pushforward_domain_error_carries_value() {
        // 2+z+z̄ dips below 1, so log(x−1) is undefined somewhere.
        let symbol = circle_symbol();
        let err = integrate_pushforward(
            &symbol,
            |x| (x > 1.5).then(|| (x - 1.5).ln()),
            10_000,
            13,
        )
        .unwrap_err();
        assert!(matches!(err, Error::FunctionDomain { value } if value <= 1.5));
    }

    #[test]
    fn exact_pushforward_examples() {
        let symbol = circle_symbol();
        assert_eq!(
            exact_polynomial_pushforward(&symbol, 0).unwrap(),
            BigRational::one()
        );
        // ∫ (2+z+z̄) dm = 2, ∫ (2+z+z̄)² dm = 6.
        assert_eq!(
            exact_polynomial_pushforward(&symbol, 1).unwrap(),
            BigRational::from(BigInt::from(2))
        );
        assert_eq!(
            exact_polynomial_pushforward(&symbol, 2).unwrap(),
            BigRational::from(BigInt::from(6))
        );

        let e1 = MultiIndex::unit(2, 0);
        let msq = HermitianSymbol::from_entries(
            2,
            [(e1.clone(), e1, re(1.0))],
            SymmetryMode::Strict,
        )
        .unwrap();
        assert_eq!(
            exact_polynomial_pushforward(&msq, 1).unwrap(),
            BigRational::new(1.into(), 2.into())
        );
        // ∫ |z_1|^{2k} dσ = 1/(k+1) at d=2.
        for k in 2..=4u32 {
            assert_eq!(
                exact_polynomial_pushforward(&msq, k).unwrap(),
                BigRational::new(1.into(), (k as i64 + 1).into()),
                "k={k}"
            );
        }
    }

    #[test]
    fn exact_pushforward_cap() {
        let symbol = circle_symbol();
        assert!(matches!(
            exact_polynomial_pushforward_capped(&symbol, 4, 3),
            Err(Error::ExpansionCapExceeded { .. })
        ));
    }

    #[test]
    fn monte_carlo_agrees_with_exact_pushforward() {
        let symbol = circle_symbol();
        for k in 1..=4u32 {
            let exact = exact_polynomial_pushforward(&symbol, k)
                .unwrap()
                .to_f64()
                .unwrap();
            let (est, se) =
                integrate_pushforward(&symbol, |x| Some(x.powi(k as i32)), 400_000, 17).unwrap();
            assert!(
                (est - exact).abs() <= 4.0 * se,
                "k={k}: est={est} exact={exact} se={se}"
            );
        }
    }
}
