//! Gibbs kernels `exp(-eta C)` and diagonally scaled matrices
//! `D(e^x) A D(e^y)` kept in a log-domain representation.
//!
//! The base matrix is stored through its entrywise logarithm, so kernels
//! whose entries underflow in f64 (large `eta * ||C||_inf`) remain exactly
//! representable. Scaled marginals are evaluated on a fast multiplicative
//! path while every exponent stays small, and through log-sum-exp
//! accumulation otherwise.

use crate::error::{Error, Result};
use crate::matrix::{CostMatrix, Mat};
use crate::measures::Marginal;

/// Exponent-magnitude budget below which scaled entries are formed by plain
/// multiplication; beyond it, evaluation falls back to log-sum-exp.
pub const EXPONENT_GUARD: f64 = 500.0;

/// Entrywise `exp(-eta * C)`. Entries lie in `(0, 1]` with smallest entry
/// `exp(-eta ||C||_inf)` (which may underflow to zero in f64 for extreme
/// `eta`; use [`log_gibbs_kernel`] plus [`ScaledKernel::from_log_matrix`]
/// when that matters).
pub fn gibbs_kernel(cost: &CostMatrix, eta: f64) -> Result<Mat> {
    check_eta(eta)?;
    Ok(cost.entries().map(|c| (-eta * c).exp()))
}

/// Entrywise `-eta * C`: the exact logarithm of the Gibbs kernel.
pub fn log_gibbs_kernel(cost: &CostMatrix, eta: f64) -> Result<Mat> {
    check_eta(eta)?;
    Ok(cost.entries().map(|c| -eta * c))
}

fn check_eta(eta: f64) -> Result<()> {
    if !eta.is_finite() || eta <= 0.0 {
        return Err(Error::InvalidParameter {
            name: "eta",
            value: eta,
            requirement: "positive and finite",
        });
    }
    Ok(())
}

/// Rescales a nonnegative matrix to unit total mass.
pub fn normalize_total_mass(m: &Mat) -> Result<Mat> {
    for (index, &v) in m.as_slice().iter().enumerate() {
        if !v.is_finite() || v < 0.0 {
            return Err(Error::DomainError {
                context: "normalize_total_mass",
                index,
                value: v,
                requirement: "nonnegative and finite",
            });
        }
    }
    let total = m.total();
    if !total.is_finite() || total <= 0.0 {
        return Err(Error::DegenerateInput {
            context: "normalize_total_mass",
            detail: format!("total mass {total} is not positive and finite"),
        });
    }
    Ok(m.map(|v| v / total))
}

fn log_sum_exp(terms: impl Iterator<Item = f64> + Clone) -> f64 {
    let m = terms.clone().fold(f64::NEG_INFINITY, f64::max);
    if m == f64::NEG_INFINITY {
        return f64::NEG_INFINITY;
    }
    let s: f64 = terms.map(|t| (t - m).exp()).sum();
    m + s.ln()
}

/// Base matrix plus log-domain row/column scalings, with cached marginals of
/// the scaled matrix `D(e^x) A D(e^y)`.
///
/// A solve owns its kernel exclusively while mutating it; finished kernels
/// are immutable and freely shareable across threads.
#[derive(Clone, Debug)]
pub struct ScaledKernel {
    log_base: Mat,
    base: Mat,
    log_x: Vec<f64>,
    log_y: Vec<f64>,
    row_sums: Vec<f64>,
    col_sums: Vec<f64>,
}

impl ScaledKernel {
    /// Wraps a strictly positive square matrix with zero scalings.
    pub fn from_matrix(a: &Mat) -> Result<Self> {
        if !a.is_square() {
            return Err(Error::DimensionMismatch {
                context: "ScaledKernel::from_matrix square",
                expected: a.n_rows(),
                actual: a.n_cols(),
            });
        }
        for (index, &v) in a.as_slice().iter().enumerate() {
            if !v.is_finite() || v <= 0.0 {
                return Err(Error::DomainError {
                    context: "ScaledKernel::from_matrix",
                    index,
                    value: v,
                    requirement: "strictly positive and finite",
                });
            }
        }
        Self::build(a.map(f64::ln), a.clone())
    }

    /// Wraps a matrix given by its entrywise logarithm; entries must be
    /// finite (the represented matrix is strictly positive even when the
    /// realized f64 entries underflow).
    pub fn from_log_matrix(log_a: Mat) -> Result<Self> {
        if !log_a.is_square() {
            return Err(Error::DimensionMismatch {
                context: "ScaledKernel::from_log_matrix square",
                expected: log_a.n_rows(),
                actual: log_a.n_cols(),
            });
        }
        for (index, &v) in log_a.as_slice().iter().enumerate() {
            if !v.is_finite() {
                return Err(Error::DomainError {
                    context: "ScaledKernel::from_log_matrix",
                    index,
                    value: v,
                    requirement: "finite log entry",
                });
            }
        }
        let base = log_a.map(f64::exp);
        Self::build(log_a, base)
    }

    fn build(log_base: Mat, base: Mat) -> Result<Self> {
        let n = log_base.n_rows();
        let mut kernel = ScaledKernel {
            log_base,
            base,
            log_x: vec![0.0; n],
            log_y: vec![0.0; n],
            row_sums: vec![0.0; n],
            col_sums: vec![0.0; n],
        };
        kernel.refresh_marginals()?;
        Ok(kernel)
    }

    pub fn n(&self) -> usize {
        self.log_base.n_rows()
    }

    pub fn base(&self) -> &Mat {
        &self.base
    }

    pub fn log_base(&self) -> &Mat {
        &self.log_base
    }

    pub fn log_x(&self) -> &[f64] {
        &self.log_x
    }

    pub fn log_y(&self) -> &[f64] {
        &self.log_y
    }

    pub fn cached_row_sums(&self) -> &[f64] {
        &self.row_sums
    }

    pub fn cached_col_sums(&self) -> &[f64] {
        &self.col_sums
    }

    /// Total mass of the scaled matrix, from the cached row sums.
    pub fn total_mass(&self) -> f64 {
        self.row_sums.iter().sum()
    }

    /// `||r(K) - r||_1 + ||c(K) - c||_1` from the cached marginals.
    pub fn cached_violation(&self, r: &Marginal, c: &Marginal) -> f64 {
        let rd: f64 = self
            .row_sums
            .iter()
            .zip(r.values())
            .map(|(a, b)| (a - b).abs())
            .sum();
        let cd: f64 = self
            .col_sums
            .iter()
            .zip(c.values())
            .map(|(a, b)| (a - b).abs())
            .sum();
        rd + cd
    }

    /// `log(s / l)` of the base matrix: log of (sum of entries / smallest
    /// entry). Invariant under rescaling of the base, so it can be taken
    /// before or after normalization.
    pub fn log_mass_ratio(&self) -> f64 {
        let log_s = log_sum_exp(self.log_base.as_slice().iter().copied());
        let log_l = self.log_base.min_entry();
        log_s - log_l
    }

    /// Rescales the base matrix to unit total mass (scalings untouched).
    pub fn normalize_base(&mut self) -> Result<()> {
        let log_z = log_sum_exp(self.log_base.as_slice().iter().copied());
        if !log_z.is_finite() {
            return Err(Error::DegenerateInput {
                context: "ScaledKernel::normalize_base",
                detail: format!("log total mass = {log_z}"),
            });
        }
        self.log_base = self.log_base.map(|v| v - log_z);
        self.base = self.log_base.map(f64::exp);
        self.refresh_marginals()
    }

    /// Materializes the scaled matrix `D(e^x) A D(e^y)`.
    pub fn realize(&self) -> Mat {
        let n = self.n();
        let mut out = Mat::zeros(n, n);
        for i in 0..n {
            let xi = self.log_x[i];
            for j in 0..n {
                let xy = xi + self.log_y[j];
                let lb = self.log_base[(i, j)];
                out[(i, j)] = if xy.abs() <= EXPONENT_GUARD && lb.abs() <= EXPONENT_GUARD {
                    xy.exp() * self.base[(i, j)]
                } else {
                    (xi + lb + self.log_y[j]).exp()
                };
            }
        }
        out
    }

    /// Scaled entries of row `i` as a vector (O(n)).
    fn scaled_row(&self, i: usize) -> Vec<f64> {
        let xi = self.log_x[i];
        (0..self.n())
            .map(|j| (xi + self.log_base[(i, j)] + self.log_y[j]).exp())
            .collect()
    }

    fn scaled_col(&self, j: usize) -> Vec<f64> {
        let yj = self.log_y[j];
        (0..self.n())
            .map(|i| (self.log_x[i] + self.log_base[(i, j)] + yj).exp())
            .collect()
    }

    fn fast_path_ok(&self) -> bool {
        let finite_max = |v: &[f64]| {
            v.iter()
                .filter(|x| x.is_finite())
                .fold(0.0_f64, |acc, &x| acc.max(x.abs()))
        };
        let mb = self.log_base.max_abs_entry();
        finite_max(&self.log_x) + finite_max(&self.log_y) + mb <= EXPONENT_GUARD
    }

    /// Recomputes both cached marginal vectors from the base and scalings in
    /// O(n^2).
    pub fn refresh_marginals(&mut self) -> Result<()> {
        if self.fast_path_ok() {
            self.refresh_fast();
        } else {
            self.refresh_stable();
        }
        for v in self.row_sums.iter().chain(&self.col_sums) {
            if !v.is_finite() {
                return Err(Error::NumericOverflow {
                    context: "ScaledKernel::refresh_marginals",
                });
            }
        }
        Ok(())
    }

    fn refresh_fast(&mut self) {
        let n = self.n();
        let u: Vec<f64> = self.log_x.iter().map(|&x| x.exp()).collect();
        let v: Vec<f64> = self.log_y.iter().map(|&y| y.exp()).collect();
        self.col_sums.iter_mut().for_each(|c| *c = 0.0);
        for (i, &ui) in u.iter().enumerate() {
            let row = self.base.row(i);
            let mut rs = 0.0;
            for j in 0..n {
                let e = ui * row[j] * v[j];
                rs += e;
                self.col_sums[j] += e;
            }
            self.row_sums[i] = rs;
        }
    }

    fn refresh_stable(&mut self) {
        let n = self.n();
        for i in 0..n {
            let xi = self.log_x[i];
            if xi == f64::NEG_INFINITY {
                self.row_sums[i] = 0.0;
                continue;
            }
            let terms = (0..n).map(|j| self.log_base[(i, j)] + self.log_y[j]);
            let lse = log_sum_exp(terms);
            self.row_sums[i] = if lse == f64::NEG_INFINITY {
                0.0
            } else {
                (xi + lse).exp()
            };
        }
        for j in 0..n {
            let yj = self.log_y[j];
            if yj == f64::NEG_INFINITY {
                self.col_sums[j] = 0.0;
                continue;
            }
            let terms = (0..n).map(|i| self.log_base[(i, j)] + self.log_x[i]);
            let lse = log_sum_exp(terms);
            self.col_sums[j] = if lse == f64::NEG_INFINITY {
                0.0
            } else {
                (yj + lse).exp()
            };
        }
    }

    /// Log step that rescales a marginal sum `current` to `target`. The
    /// quantity 0/0 is interpreted as 1 (step 0).
    fn scaling_delta(target: f64, current: f64, context: &'static str) -> Result<f64> {
        if target == 0.0 && current == 0.0 {
            return Ok(0.0);
        }
        if current <= 0.0 {
            return Err(Error::DegenerateInput {
                context,
                detail: format!("marginal sum {current} cannot be rescaled to {target}"),
            });
        }
        Ok(target.ln() - current.ln())
    }

    /// Full row pass: rescales every row so its sum matches `r` exactly,
    /// then recomputes the caches.
    pub fn scale_rows_to(&mut self, r: &Marginal) -> Result<()> {
        for i in 0..self.n() {
            let delta = Self::scaling_delta(r.get(i), self.row_sums[i], "scale_rows_to")?;
            self.log_x[i] += delta;
        }
        self.refresh_marginals()
    }

    /// Full column pass, mirror of [`Self::scale_rows_to`].
    pub fn scale_cols_to(&mut self, c: &Marginal) -> Result<()> {
        for j in 0..self.n() {
            let delta = Self::scaling_delta(c.get(j), self.col_sums[j], "scale_cols_to")?;
            self.log_y[j] += delta;
        }
        self.refresh_marginals()
    }

    /// Rescales row `i` so its sum equals `target`, maintaining all caches
    /// incrementally in O(n): the row sum is set exactly, and every column
    /// sum is adjusted by that column's entry delta. Cross sums are clamped
    /// at zero, where increment cancellation would otherwise leave
    /// ~1e-16-scale negatives.
    pub fn apply_row_update(&mut self, i: usize, target: f64) -> Result<()> {
        let current = self.row_sums[i];
        let delta = Self::scaling_delta(target, current, "apply_row_update")?;
        let old = self.scaled_row(i);
        self.log_x[i] += delta;
        let new = self.scaled_row(i);
        for j in 0..self.n() {
            self.col_sums[j] = (self.col_sums[j] + (new[j] - old[j])).max(0.0);
        }
        self.row_sums[i] = target;
        Ok(())
    }

    /// Column mirror of [`Self::apply_row_update`].
    pub fn apply_col_update(&mut self, j: usize, target: f64) -> Result<()> {
        let current = self.col_sums[j];
        let delta = Self::scaling_delta(target, current, "apply_col_update")?;
        let old = self.scaled_col(j);
        self.log_y[j] += delta;
        let new = self.scaled_col(j);
        for i in 0..self.n() {
            self.row_sums[i] = (self.row_sums[i] + (new[i] - old[i])).max(0.0);
        }
        self.col_sums[j] = target;
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::matrix::marginal_violation;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn cost(rows: &[Vec<f64>]) -> CostMatrix {
        CostMatrix::new(Mat::from_rows(rows).unwrap()).unwrap()
    }

    #[test]
    fn gibbs_zero_cost_is_all_ones() {
        let c = cost(&[vec![0.0, 0.0], vec![0.0, 0.0]]);
        let a = gibbs_kernel(&c, 3.0).unwrap();
        assert_eq!(a.as_slice(), &[1.0, 1.0, 1.0, 1.0]);
    }

    #[test]
    fn gibbs_log2_halves() {
        let c = cost(&[vec![0.0, 1.0], vec![1.0, 0.0]]);
        let a = gibbs_kernel(&c, std::f64::consts::LN_2).unwrap();
        assert!((a[(0, 1)] - 0.5).abs() < 1e-15);
        assert!((a[(1, 0)] - 0.5).abs() < 1e-15);
        assert_eq!(a[(0, 0)], 1.0);
    }

    #[test]
    fn gibbs_eta_two() {
        let c = cost(&[vec![0.0, 1.0], vec![1.0, 0.0]]);
        let a = gibbs_kernel(&c, 2.0).unwrap();
        let expected = (-2.0_f64).exp();
        assert!((a[(0, 1)] - expected).abs() < 1e-15);
        assert!((expected - 0.1353352832366127).abs() < 1e-12);
    }

    #[test]
    fn gibbs_rejects_bad_eta() {
        let c = cost(&[vec![0.0]]);
        assert!(gibbs_kernel(&c, 0.0).is_err());
        assert!(gibbs_kernel(&c, -1.0).is_err());
        assert!(gibbs_kernel(&c, f64::NAN).is_err());
    }

    #[test]
    fn gibbs_entry_range_invariant() {
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        for _ in 0..20 {
            let n = 4;
            let data: Vec<f64> = (0..n * n).map(|_| rng.gen::<f64>() * 3.0).collect();
            let c = CostMatrix::new(Mat::new(n, n, data).unwrap()).unwrap();
            let eta = 0.5 + rng.gen::<f64>() * 4.0;
            let a = gibbs_kernel(&c, eta).unwrap();
            let lo = (-eta * c.max_abs()).exp();
            for &v in a.as_slice() {
                assert!(v <= 1.0 + 1e-15 && v >= lo - 1e-15);
            }
            assert!((a.min_entry().ln() + eta * c.max_abs()).abs() < 1e-9);
        }
    }

    #[test]
    fn normalize_cases() {
        let ones = Mat::filled(2, 2, 1.0);
        let n = normalize_total_mass(&ones).unwrap();
        assert_eq!(n.as_slice(), &[0.25, 0.25, 0.25, 0.25]);

        let already = Mat::from_rows(&[vec![0.5, 0.25], vec![0.125, 0.125]]).unwrap();
        assert_eq!(normalize_total_mass(&already).unwrap(), already);

        let diag = Mat::from_rows(&[vec![2.0, 0.0], vec![0.0, 2.0]]).unwrap();
        let n = normalize_total_mass(&diag).unwrap();
        assert_eq!(n.as_slice(), &[0.5, 0.0, 0.0, 0.5]);

        assert!(normalize_total_mass(&Mat::zeros(2, 2)).is_err());
    }

    #[test]
    fn realize_identity_at_zero_scalings() {
        let a = Mat::from_rows(&[vec![0.2, 0.3], vec![0.1, 0.4]]).unwrap();
        let k = ScaledKernel::from_matrix(&a).unwrap();
        let r = k.realize();
        for (x, y) in r.as_slice().iter().zip(a.as_slice()) {
            assert!((x - y).abs() < 1e-15);
        }
    }

    #[test]
    fn realize_diagonal_action() {
        let eps = 1e-3;
        let a = Mat::from_rows(&[vec![1.0, eps], vec![eps, 1.0]]).unwrap();
        let mut k = ScaledKernel::from_matrix(&a).unwrap();
        k.log_x[0] = std::f64::consts::LN_2;
        let r = k.realize();
        assert!((r[(0, 0)] - 2.0).abs() < 1e-12);
        assert!((r[(0, 1)] - 2.0 * eps).abs() < 1e-12);
        assert!((r[(1, 0)] - eps).abs() < 1e-15);
    }

    #[test]
    fn realize_entrywise_product() {
        let mut k = ScaledKernel::from_matrix(&Mat::filled(2, 2, 1.0)).unwrap();
        k.log_x = vec![0.0, 3.0_f64.ln()];
        k.log_y = vec![2.0_f64.ln(), 0.0];
        let r = k.realize();
        let expected = [2.0, 1.0, 6.0, 3.0];
        for (got, want) in r.as_slice().iter().zip(&expected) {
            assert!((got - want).abs() < 1e-12, "{got} vs {want}");
        }
    }

    #[test]
    fn refresh_matches_realize_oracle() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..50 {
            let n = 3;
            let data: Vec<f64> = (0..n * n).map(|_| rng.gen::<f64>() + 0.05).collect();
            let a = Mat::new(n, n, data).unwrap();
            let mut k = ScaledKernel::from_matrix(&a).unwrap();
            k.log_x = (0..n).map(|_| rng.gen::<f64>() * 4.0 - 2.0).collect();
            k.log_y = (0..n).map(|_| rng.gen::<f64>() * 4.0 - 2.0).collect();
            k.refresh_marginals().unwrap();
            let real = k.realize();
            for (got, want) in k.cached_row_sums().iter().zip(real.row_sums()) {
                assert!((got - want).abs() <= 1e-12 * want.max(1.0));
            }
            for (got, want) in k.cached_col_sums().iter().zip(real.col_sums()) {
                assert!((got - want).abs() <= 1e-12 * want.max(1.0));
            }
        }
    }

    #[test]
    fn refresh_zero_scalings_gives_base_marginals() {
        let a = Mat::from_rows(&[vec![0.2, 0.3], vec![0.1, 0.4]]).unwrap();
        let k = ScaledKernel::from_matrix(&a).unwrap();
        assert_eq!(k.cached_row_sums(), a.row_sums().as_slice());
        assert_eq!(k.cached_col_sums(), a.col_sums().as_slice());
    }

    #[test]
    fn row_pass_hits_targets_exactly() {
        let a = Mat::from_rows(&[vec![0.4, 0.1], vec![0.2, 0.3]]).unwrap();
        let mut k = ScaledKernel::from_matrix(&a).unwrap();
        let r = Marginal::new(vec![0.7, 0.3]).unwrap();
        k.scale_rows_to(&r).unwrap();
        for (got, want) in k.cached_row_sums().iter().zip(r.values()) {
            assert!((got - want).abs() < 1e-12);
        }
    }

    #[test]
    fn cached_violation_tracks_realized_matrix() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let n = 4;
        let data: Vec<f64> = (0..n * n).map(|_| rng.gen::<f64>() + 0.01).collect();
        let a = Mat::new(n, n, data).unwrap();
        let mut k = ScaledKernel::from_matrix(&a).unwrap();
        k.log_x = (0..n).map(|_| rng.gen::<f64>() - 0.5).collect();
        k.refresh_marginals().unwrap();
        let r = Marginal::uniform(n);
        let c = Marginal::uniform(n);
        let via_cache = k.cached_violation(&r, &c);
        let via_realize = marginal_violation(&k.realize(), &r, &c).unwrap();
        assert!((via_cache - via_realize).abs() < 1e-9);
    }

    #[test]
    fn incremental_row_update_matches_full_recompute() {
        let mut rng = ChaCha8Rng::seed_from_u64(13);
        let n = 4;
        let data: Vec<f64> = (0..n * n).map(|_| rng.gen::<f64>() + 0.02).collect();
        let a = Mat::new(n, n, data).unwrap();
        let mut k = ScaledKernel::from_matrix(&a).unwrap();
        for step in 0..200 {
            let i = step % n;
            let target = 0.1 + rng.gen::<f64>();
            if step % 2 == 0 {
                k.apply_row_update(i, target).unwrap();
            } else {
                k.apply_col_update(i, target).unwrap();
            }
            let mut fresh = k.clone();
            fresh.refresh_marginals().unwrap();
            for (a, b) in k.cached_row_sums().iter().zip(fresh.cached_row_sums()) {
                assert!((a - b).abs() < 1e-10, "row cache drift {a} vs {b}");
            }
            for (a, b) in k.cached_col_sums().iter().zip(fresh.cached_col_sums()) {
                assert!((a - b).abs() < 1e-10, "col cache drift {a} vs {b}");
            }
        }
    }

    #[test]
    fn no_op_update_keeps_state() {
        let a = Mat::from_rows(&[vec![0.4, 0.1], vec![0.2, 0.3]]).unwrap();
        let mut k = ScaledKernel::from_matrix(&a).unwrap();
        let before = k.clone();
        let current = k.cached_row_sums()[0];
        k.apply_row_update(0, current).unwrap();
        assert_eq!(k.log_x(), before.log_x());
        assert_eq!(k.cached_row_sums(), before.cached_row_sums());
    }

    #[test]
    fn doubling_row_raises_col_sums_by_old_entries() {
        let mut k = ScaledKernel::from_matrix(&Mat::filled(2, 2, 1.0)).unwrap();
        let old = k.scaled_row(0);
        let target = 2.0 * k.cached_row_sums()[0];
        let cols_before = k.cached_col_sums().to_vec();
        k.apply_row_update(0, target).unwrap();
        for j in 0..2 {
            assert!((k.cached_col_sums()[j] - cols_before[j] - old[j]).abs() < 1e-12);
        }
    }

    #[test]
    fn deep_log_domain_marginals_are_finite() {
        // base entries exp(-800) underflow to 0.0 in f64, but scalings
        // compensating to O(1) must still produce exact marginals
        let n = 3;
        let lb = Mat::filled(n, n, -800.0);
        let mut k = ScaledKernel::from_log_matrix(lb).unwrap();
        assert_eq!(k.base().as_slice()[0], 0.0);
        k.log_x = vec![400.0; n];
        k.log_y = vec![400.0; n];
        k.refresh_marginals().unwrap();
        for &rs in k.cached_row_sums() {
            assert!((rs - n as f64).abs() < 1e-9);
        }
    }

    #[test]
    fn zero_target_rows_are_emptied_not_nan() {
        let a = Mat::from_rows(&[vec![0.4, 0.1], vec![0.2, 0.3]]).unwrap();
        let mut k = ScaledKernel::from_matrix(&a).unwrap();
        let r = Marginal::new(vec![0.0, 1.0]).unwrap();
        k.scale_rows_to(&r).unwrap();
        assert_eq!(k.cached_row_sums()[0], 0.0);
        assert!((k.cached_row_sums()[1] - 1.0).abs() < 1e-12);
        // 0/0 convention: rescaling the emptied row to target 0 is a no-op
        k.scale_rows_to(&r).unwrap();
        assert_eq!(k.cached_row_sums()[0], 0.0);
    }

    #[test]
    fn log_mass_ratio_matches_direct_computation() {
        let a = Mat::from_rows(&[vec![0.2, 0.3], vec![0.1, 0.4]]).unwrap();
        let k = ScaledKernel::from_matrix(&a).unwrap();
        let expected = (1.0_f64 / 0.1).ln();
        assert!((k.log_mass_ratio() - expected).abs() < 1e-12);
        // invariant under base normalization
        let mut kn = k.clone();
        kn.normalize_base().unwrap();
        assert!((kn.log_mass_ratio() - expected).abs() < 1e-12);
    }
}
