//! Probability vectors on the simplex and the divergences the scaling
//! algorithms are driven by.

use crate::error::{Error, Result};

/// Absolute tolerance on the simplex-sum check at `Marginal` construction.
pub const SIMPLEX_SUM_TOL: f64 = 1e-8;

/// Window within which `Marginal::normalized` silently rescales to unit sum.
pub const NORMALIZE_WINDOW: f64 = 1e-6;

/// Probability vector: nonnegative entries summing to one.
#[derive(Clone, Debug, PartialEq)]
pub struct Marginal {
    values: Vec<f64>,
}

impl Marginal {
    /// Validates against the default simplex tolerance.
    pub fn new(values: Vec<f64>) -> Result<Self> {
        Self::with_sum_tolerance(values, SIMPLEX_SUM_TOL)
    }

    /// Same as `new` with a caller-chosen tolerance on the sum.
    pub fn with_sum_tolerance(values: Vec<f64>, tolerance: f64) -> Result<Self> {
        for (index, &v) in values.iter().enumerate() {
            if !v.is_finite() || v < 0.0 {
                return Err(Error::DomainError {
                    context: "Marginal",
                    index,
                    value: v,
                    requirement: "nonnegative and finite",
                });
            }
        }
        let sum: f64 = values.iter().sum();
        if (sum - 1.0).abs() > tolerance {
            return Err(Error::NotNormalized { sum, tolerance });
        }
        Ok(Marginal { values })
    }

    /// Rescales to exact unit sum when the raw sum is already within
    /// `NORMALIZE_WINDOW` of one; rejects anything farther out. Intended for
    /// data (e.g. normalized images) that has accumulated rounding error.
    pub fn normalized(values: Vec<f64>) -> Result<Self> {
        for (index, &v) in values.iter().enumerate() {
            if !v.is_finite() || v < 0.0 {
                return Err(Error::DomainError {
                    context: "Marginal::normalized",
                    index,
                    value: v,
                    requirement: "nonnegative and finite",
                });
            }
        }
        let sum: f64 = values.iter().sum();
        if (sum - 1.0).abs() > NORMALIZE_WINDOW {
            return Err(Error::NotNormalized {
                sum,
                tolerance: NORMALIZE_WINDOW,
            });
        }
        let values = values.into_iter().map(|v| v / sum).collect();
        Self::with_sum_tolerance(values, SIMPLEX_SUM_TOL)
    }

    pub fn uniform(n: usize) -> Self {
        Marginal {
            values: vec![1.0 / n as f64; n],
        }
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn get(&self, i: usize) -> f64 {
        self.values[i]
    }

    pub fn sum(&self) -> f64 {
        self.values.iter().sum()
    }
}

/// l1 distance between two equal-length vectors.
pub fn l1_distance(u: &[f64], v: &[f64]) -> Result<f64> {
    if u.len() != v.len() {
        return Err(Error::DimensionMismatch {
            context: "l1_distance",
            expected: u.len(),
            actual: v.len(),
        });
    }
    Ok(u.iter().zip(v).map(|(a, b)| (a - b).abs()).sum())
}

/// Kullback-Leibler divergence `sum_i p_i log(p_i / q_i)` with the usual
/// convention `0 log(0/q) = 0`. Requires `p` absolutely continuous w.r.t. `q`.
pub fn kl_divergence(p: &[f64], q: &[f64]) -> Result<f64> {
    if p.len() != q.len() {
        return Err(Error::DimensionMismatch {
            context: "kl_divergence",
            expected: p.len(),
            actual: q.len(),
        });
    }
    let mut total = 0.0;
    for (index, (&pi, &qi)) in p.iter().zip(q).enumerate() {
        if pi < 0.0 {
            return Err(Error::DomainError {
                context: "kl_divergence",
                index,
                value: pi,
                requirement: "nonnegative p",
            });
        }
        if qi < 0.0 {
            return Err(Error::DomainError {
                context: "kl_divergence",
                index,
                value: qi,
                requirement: "nonnegative q",
            });
        }
        if pi == 0.0 {
            continue;
        }
        if qi == 0.0 {
            return Err(Error::DivergenceUndefined { index, p: pi });
        }
        total += pi * (pi / qi).ln();
    }
    Ok(total)
}

/// Entrywise entropy `sum p log(1/p)` with `0 log(1/0) = 0`.
pub fn entropy(values: &[f64]) -> Result<f64> {
    let mut total = 0.0;
    for (index, &v) in values.iter().enumerate() {
        if v < 0.0 {
            return Err(Error::DomainError {
                context: "entropy",
                index,
                value: v,
                requirement: "nonnegative",
            });
        }
        if v > 0.0 {
            total -= v * v.ln();
        }
    }
    Ok(total)
}

/// Coordinate progress measure `rho(a, b) = b - a + a log(a/b)`, valued in
/// `[0, +inf]`. Zero iff `a = b`; `+inf` when `b = 0 < a`.
pub fn rho(a: f64, b: f64) -> f64 {
    debug_assert!(a >= 0.0 && b >= 0.0, "rho expects nonnegative arguments");
    if a == 0.0 {
        return b;
    }
    if b == 0.0 {
        return f64::INFINITY;
    }
    b - a + a * (a / b).ln()
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_simplex(rng: &mut ChaCha8Rng, n: usize) -> Vec<f64> {
        let raw: Vec<f64> = (0..n).map(|_| -rng.gen::<f64>().ln()).collect();
        let s: f64 = raw.iter().sum();
        raw.into_iter().map(|x| x / s).collect()
    }

    #[test]
    fn l1_cases() {
        let u = [0.7, 0.3];
        assert_eq!(l1_distance(&u, &u).unwrap(), 0.0);
        assert_eq!(l1_distance(&[1.0, 0.0], &[0.0, 1.0]).unwrap(), 2.0);
        let d = l1_distance(&[0.7, 0.3], &[0.4, 0.6]).unwrap();
        assert!((d - 0.6).abs() < 1e-15);
        assert!(l1_distance(&[1.0], &[0.5, 0.5]).is_err());
    }

    #[test]
    fn kl_identical_is_zero() {
        let p = [0.3, 0.4, 0.3];
        assert_eq!(kl_divergence(&p, &p).unwrap(), 0.0);
    }

    #[test]
    fn kl_point_mass_vs_uniform() {
        let kl = kl_divergence(&[1.0, 0.0], &[0.5, 0.5]).unwrap();
        assert!((kl - std::f64::consts::LN_2).abs() < 1e-12);
    }

    #[test]
    fn kl_direct_evaluation() {
        // 0.5 ln 2 + 0.5 ln(2/3), evaluated independently
        let expected = 0.5 * 2.0_f64.ln() + 0.5 * (2.0_f64 / 3.0).ln();
        let kl = kl_divergence(&[0.5, 0.5], &[0.25, 0.75]).unwrap();
        assert!((kl - expected).abs() < 1e-15);
        assert!((kl - 0.14384103622589042).abs() < 1e-12);
    }

    #[test]
    fn kl_undefined_when_q_vanishes() {
        let err = kl_divergence(&[0.5, 0.5], &[1.0, 0.0]).unwrap_err();
        assert!(matches!(err, Error::DivergenceUndefined { index: 1, .. }));
    }

    #[test]
    fn kl_nonnegative_on_random_simplex_pairs() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..200 {
            let p = random_simplex(&mut rng, 6);
            let q = random_simplex(&mut rng, 6);
            let kl = kl_divergence(&p, &q).unwrap();
            assert!(kl >= -1e-12, "kl = {kl}");
            let self_kl = kl_divergence(&p, &p).unwrap();
            assert!(self_kl.abs() < 1e-12);
        }
    }

    #[test]
    fn entropy_cases() {
        assert_eq!(entropy(&[0.0, 1.0, 0.0]).unwrap(), 0.0);
        let h = entropy(&[0.5, 0.5]).unwrap();
        assert!((h - std::f64::consts::LN_2).abs() < 1e-15);
        // uniform n x n matrix flattened: entropy = 2 ln n
        let n = 5;
        let flat = vec![1.0 / (n * n) as f64; n * n];
        let h = entropy(&flat).unwrap();
        assert!((h - 2.0 * (n as f64).ln()).abs() < 1e-12);
        assert!(entropy(&[0.5, -0.5]).is_err());
    }

    #[test]
    fn rho_cases() {
        for a in [0.0, 0.1, 1.0, 3.7] {
            assert_eq!(rho(a, a), 0.0);
        }
        assert_eq!(rho(0.0, 0.7), 0.7);
        let r = rho(1.0, 2.0);
        assert!((r - (1.0 - std::f64::consts::LN_2)).abs() < 1e-15);
        assert!(rho(0.5, 0.0).is_infinite());
    }

    #[test]
    fn rho_nonnegative_zero_iff_equal() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..500 {
            let a: f64 = rng.gen::<f64>() * 2.0;
            let b: f64 = rng.gen::<f64>() * 2.0 + 1e-12;
            let r = rho(a, b);
            assert!(r >= 0.0);
            if (a - b).abs() > 1e-9 {
                assert!(r > 0.0);
            }
        }
    }

    #[test]
    fn marginal_validation() {
        assert!(Marginal::new(vec![0.5, 0.5]).is_ok());
        assert!(Marginal::new(vec![0.5, 0.6]).is_err());
        assert!(Marginal::new(vec![-0.1, 1.1]).is_err());
        assert!(Marginal::new(vec![0.5, f64::NAN]).is_err());
        // overridable tolerance
        assert!(Marginal::with_sum_tolerance(vec![0.5, 0.503], 1e-2).is_ok());
    }

    #[test]
    fn marginal_normalized_window() {
        let m = Marginal::normalized(vec![0.5, 0.5 + 5e-7]).unwrap();
        assert!((m.sum() - 1.0).abs() < 1e-15);
        assert!(Marginal::normalized(vec![0.5, 0.6]).is_err());
    }

    #[test]
    fn pinsker_spot_check() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..200 {
            let p = random_simplex(&mut rng, 8);
            let q = random_simplex(&mut rng, 8);
            let l1 = l1_distance(&p, &q).unwrap();
            let kl = kl_divergence(&p, &q).unwrap();
            assert!(l1 <= (2.0 * kl).sqrt() + 1e-12);
        }
    }
}
