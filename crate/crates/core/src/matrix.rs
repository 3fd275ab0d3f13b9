//! Dense row-major matrices and the transport-specific wrappers built on them.

use crate::error::{Error, Result};
use crate::measures::Marginal;

/// Dense matrix with row-major storage.
#[derive(Clone, Debug, PartialEq)]
pub struct Mat {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl Mat {
    pub fn new(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(Error::DimensionMismatch {
                context: "Mat::new data length",
                expected: rows * cols,
                actual: data.len(),
            });
        }
        Ok(Mat { rows, cols, data })
    }

    pub fn zeros(rows: usize, cols: usize) -> Self {
        Mat {
            rows,
            cols,
            data: vec![0.0; rows * cols],
        }
    }

    pub fn filled(rows: usize, cols: usize, value: f64) -> Self {
        Mat {
            rows,
            cols,
            data: vec![value; rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Mat::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = 1.0;
        }
        m
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let n_rows = rows.len();
        let n_cols = rows.first().map_or(0, |r| r.len());
        let mut data = Vec::with_capacity(n_rows * n_cols);
        for row in rows {
            if row.len() != n_cols {
                return Err(Error::DimensionMismatch {
                    context: "Mat::from_rows ragged row",
                    expected: n_cols,
                    actual: row.len(),
                });
            }
            data.extend_from_slice(row);
        }
        Ok(Mat {
            rows: n_rows,
            cols: n_cols,
            data,
        })
    }

    /// Rank-one product `u v^T`.
    pub fn outer(u: &[f64], v: &[f64]) -> Self {
        let mut data = Vec::with_capacity(u.len() * v.len());
        for &ui in u {
            for &vj in v {
                data.push(ui * vj);
            }
        }
        Mat {
            rows: u.len(),
            cols: v.len(),
            data,
        }
    }

    pub fn n_rows(&self) -> usize {
        self.rows
    }

    pub fn n_cols(&self) -> usize {
        self.cols
    }

    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn row_mut(&mut self, i: usize) -> &mut [f64] {
        &mut self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Mat {
        Mat {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|&x| f(x)).collect(),
        }
    }

    /// Sum of all entries.
    pub fn total(&self) -> f64 {
        self.data.iter().sum()
    }

    /// Entrywise l1 norm.
    pub fn l1_norm(&self) -> f64 {
        self.data.iter().map(|x| x.abs()).sum()
    }

    pub fn min_entry(&self) -> f64 {
        self.data.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn max_abs_entry(&self) -> f64 {
        self.data.iter().fold(0.0_f64, |acc, x| acc.max(x.abs()))
    }

    /// Vector of row sums.
    pub fn row_sums(&self) -> Vec<f64> {
        (0..self.rows).map(|i| self.row(i).iter().sum()).collect()
    }

    /// Vector of column sums.
    pub fn col_sums(&self) -> Vec<f64> {
        let mut sums = vec![0.0; self.cols];
        for i in 0..self.rows {
            for (j, &x) in self.row(i).iter().enumerate() {
                sums[j] += x;
            }
        }
        sums
    }

    /// Entrywise l1 distance to another matrix of the same shape.
    pub fn l1_distance(&self, other: &Mat) -> Result<f64> {
        if self.rows != other.rows || self.cols != other.cols {
            return Err(Error::DimensionMismatch {
                context: "Mat::l1_distance shapes",
                expected: self.data.len(),
                actual: other.data.len(),
            });
        }
        Ok(self
            .data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| (a - b).abs())
            .sum())
    }

    /// Frobenius inner product.
    pub fn dot(&self, other: &Mat) -> Result<f64> {
        if self.rows != other.rows || self.cols != other.cols {
            return Err(Error::DimensionMismatch {
                context: "Mat::dot shapes",
                expected: self.data.len(),
                actual: other.data.len(),
            });
        }
        Ok(self
            .data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| a * b)
            .sum())
    }
}

impl std::ops::Index<(usize, usize)> for Mat {
    type Output = f64;
    fn index(&self, (i, j): (usize, usize)) -> &f64 {
        &self.data[i * self.cols + j]
    }
}

impl std::ops::IndexMut<(usize, usize)> for Mat {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut f64 {
        &mut self.data[i * self.cols + j]
    }
}

/// Row sums of a matrix.
pub fn row_sums(m: &Mat) -> Vec<f64> {
    m.row_sums()
}

/// Column sums of a matrix.
pub fn col_sums(m: &Mat) -> Vec<f64> {
    m.col_sums()
}

/// l1 deviation of `m`'s marginals from the targets:
/// `||r(M) - r||_1 + ||c(M) - c||_1`. Zero exactly on members of the
/// transport polytope.
pub fn marginal_violation(m: &Mat, r: &Marginal, c: &Marginal) -> Result<f64> {
    if m.n_rows() != r.len() {
        return Err(Error::DimensionMismatch {
            context: "marginal_violation rows",
            expected: r.len(),
            actual: m.n_rows(),
        });
    }
    if m.n_cols() != c.len() {
        return Err(Error::DimensionMismatch {
            context: "marginal_violation cols",
            expected: c.len(),
            actual: m.n_cols(),
        });
    }
    let row_dev: f64 = m
        .row_sums()
        .iter()
        .zip(r.values())
        .map(|(a, b)| (a - b).abs())
        .sum();
    let col_dev: f64 = m
        .col_sums()
        .iter()
        .zip(c.values())
        .map(|(a, b)| (a - b).abs())
        .sum();
    Ok(row_dev + col_dev)
}

/// Nonnegative, bounded cost matrix with its sup norm cached.
#[derive(Clone, Debug)]
pub struct CostMatrix {
    entries: Mat,
    max_abs: f64,
}

impl CostMatrix {
    pub fn new(entries: Mat) -> Result<Self> {
        if !entries.is_square() {
            return Err(Error::DimensionMismatch {
                context: "CostMatrix::new square",
                expected: entries.n_rows(),
                actual: entries.n_cols(),
            });
        }
        for (idx, &v) in entries.as_slice().iter().enumerate() {
            if !v.is_finite() {
                return Err(Error::DomainError {
                    context: "CostMatrix::new",
                    index: idx,
                    value: v,
                    requirement: "finite",
                });
            }
            if v < 0.0 {
                return Err(Error::DomainError {
                    context: "CostMatrix::new",
                    index: idx,
                    value: v,
                    requirement: "nonnegative",
                });
            }
        }
        let max_abs = entries.max_abs_entry();
        Ok(CostMatrix { entries, max_abs })
    }

    pub fn n(&self) -> usize {
        self.entries.n_rows()
    }

    pub fn entries(&self) -> &Mat {
        &self.entries
    }

    /// Cached `||C||_inf`.
    pub fn max_abs(&self) -> f64 {
        self.max_abs
    }
}

/// Per-coordinate tolerance used when certifying membership in the
/// transport polytope.
pub const FEASIBILITY_TOL: f64 = 1e-10;

/// Nonnegative coupling candidate; carries the marginals it was certified
/// against once `certify` has succeeded.
#[derive(Clone, Debug)]
pub struct TransportPlan {
    entries: Mat,
    feasible_for: Option<(Marginal, Marginal)>,
}

impl TransportPlan {
    pub fn new(entries: Mat) -> Result<Self> {
        for (idx, &v) in entries.as_slice().iter().enumerate() {
            if v.is_nan() || v < 0.0 {
                return Err(Error::DomainError {
                    context: "TransportPlan::new",
                    index: idx,
                    value: v,
                    requirement: "nonnegative",
                });
            }
        }
        Ok(TransportPlan {
            entries,
            feasible_for: None,
        })
    }

    /// Builds a plan and certifies it against `(r, c)` in one step.
    pub fn certified(entries: Mat, r: &Marginal, c: &Marginal) -> Result<Self> {
        let mut plan = TransportPlan::new(entries)?;
        plan.certify(r, c, FEASIBILITY_TOL)?;
        Ok(plan)
    }

    /// Checks per-coordinate agreement of the marginals with `(r, c)` and
    /// records the certificate on success.
    pub fn certify(&mut self, r: &Marginal, c: &Marginal, tol: f64) -> Result<()> {
        if self.entries.n_rows() != r.len() || self.entries.n_cols() != c.len() {
            return Err(Error::DimensionMismatch {
                context: "TransportPlan::certify",
                expected: r.len(),
                actual: self.entries.n_rows(),
            });
        }
        let rows = self.entries.row_sums();
        for (i, (&got, &want)) in rows.iter().zip(r.values()).enumerate() {
            if (got - want).abs() > tol {
                return Err(Error::InternalInvariant(format!(
                    "row sum {i} = {got} deviates from target {want} by more than {tol}"
                )));
            }
        }
        let cols = self.entries.col_sums();
        for (j, (&got, &want)) in cols.iter().zip(c.values()).enumerate() {
            if (got - want).abs() > tol {
                return Err(Error::InternalInvariant(format!(
                    "column sum {j} = {got} deviates from target {want} by more than {tol}"
                )));
            }
        }
        self.feasible_for = Some((r.clone(), c.clone()));
        Ok(())
    }

    pub fn is_certified(&self) -> bool {
        self.feasible_for.is_some()
    }

    pub fn feasible_for(&self) -> Option<(&Marginal, &Marginal)> {
        self.feasible_for.as_ref().map(|(r, c)| (r, c))
    }

    pub fn entries(&self) -> &Mat {
        &self.entries
    }

    pub fn into_entries(self) -> Mat {
        self.entries
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn row_sums_identity() {
        assert_eq!(Mat::identity(2).row_sums(), vec![1.0, 1.0]);
    }

    #[test]
    fn row_sums_zeros() {
        assert_eq!(Mat::zeros(3, 3).row_sums(), vec![0.0, 0.0, 0.0]);
    }

    #[test]
    fn row_sums_direct() {
        let m = Mat::from_rows(&[vec![0.5, 0.3], vec![0.1, 0.1]]).unwrap();
        let rs = m.row_sums();
        assert!((rs[0] - 0.8).abs() < 1e-15);
        assert!((rs[1] - 0.2).abs() < 1e-15);
    }

    #[test]
    fn col_sums_identity() {
        assert_eq!(Mat::identity(2).col_sums(), vec![1.0, 1.0]);
    }

    #[test]
    fn col_sums_direct() {
        let m = Mat::from_rows(&[vec![0.5, 0.3], vec![0.1, 0.1]]).unwrap();
        let cs = m.col_sums();
        assert!((cs[0] - 0.6).abs() < 1e-15);
        assert!((cs[1] - 0.4).abs() < 1e-15);
    }

    #[test]
    fn col_sums_rank_one() {
        let m = Mat::outer(&[1.0, 0.0], &[0.2, 0.8]);
        assert_eq!(m.col_sums(), vec![0.2, 0.8]);
    }

    #[test]
    fn marginal_violation_product_plan_is_zero() {
        let r = Marginal::new(vec![0.3, 0.7]).unwrap();
        let c = Marginal::new(vec![0.6, 0.4]).unwrap();
        let m = Mat::outer(r.values(), c.values());
        assert!(marginal_violation(&m, &r, &c).unwrap() < 1e-15);
    }

    #[test]
    fn marginal_violation_zero_matrix() {
        let r = Marginal::new(vec![0.5, 0.5]).unwrap();
        let c = Marginal::new(vec![0.5, 0.5]).unwrap();
        let v = marginal_violation(&Mat::zeros(2, 2), &r, &c).unwrap();
        assert!((v - 2.0).abs() < 1e-15);
    }

    #[test]
    fn marginal_violation_direct() {
        let m = Mat::from_rows(&[vec![0.5, 0.3], vec![0.1, 0.1]]).unwrap();
        let r = Marginal::new(vec![0.5, 0.5]).unwrap();
        let c = Marginal::new(vec![0.5, 0.5]).unwrap();
        let v = marginal_violation(&m, &r, &c).unwrap();
        assert!((v - 0.8).abs() < 1e-15, "got {v}");
    }

    #[test]
    fn marginal_violation_dimension_error() {
        let m = Mat::zeros(2, 2);
        let r = Marginal::new(vec![0.5, 0.5]).unwrap();
        let c3 = Marginal::new(vec![0.4, 0.3, 0.3]).unwrap();
        assert!(marginal_violation(&m, &r, &c3).is_err());
    }

    #[test]
    fn cost_matrix_rejects_negative_and_nan() {
        let neg = Mat::from_rows(&[vec![0.0, -1.0], vec![1.0, 0.0]]).unwrap();
        assert!(CostMatrix::new(neg).is_err());
        let nan = Mat::from_rows(&[vec![0.0, f64::NAN], vec![1.0, 0.0]]).unwrap();
        assert!(CostMatrix::new(nan).is_err());
    }

    #[test]
    fn cost_matrix_caches_max() {
        let c = CostMatrix::new(Mat::from_rows(&[vec![0.0, 3.5], vec![1.0, 0.0]]).unwrap()).unwrap();
        assert_eq!(c.max_abs(), 3.5);
    }

    #[test]
    fn plan_certification() {
        let r = Marginal::new(vec![0.5, 0.5]).unwrap();
        let c = Marginal::new(vec![0.5, 0.5]).unwrap();
        let good = Mat::from_rows(&[vec![0.25, 0.25], vec![0.25, 0.25]]).unwrap();
        let plan = TransportPlan::certified(good, &r, &c).unwrap();
        assert!(plan.is_certified());

        let bad = Mat::from_rows(&[vec![0.3, 0.25], vec![0.25, 0.25]]).unwrap();
        assert!(TransportPlan::certified(bad, &r, &c).is_err());
    }

    #[test]
    fn plan_rejects_negative() {
        let m = Mat::from_rows(&[vec![0.5, -0.1], vec![0.3, 0.3]]).unwrap();
        assert!(TransportPlan::new(m).is_err());
    }
}
