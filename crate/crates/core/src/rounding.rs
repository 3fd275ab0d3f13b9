//! Projection of a near-feasible nonnegative matrix to exact membership in
//! the transport polytope, with a controlled l1 perturbation: scale rows
//! down to their targets, then columns, then distribute the missing mass as
//! a rank-one correction.

use crate::error::{Error, Result};
use crate::matrix::{Mat, TransportPlan, FEASIBILITY_TOL};
use crate::measures::Marginal;

/// Rejection window on the input's total mass; the l1 guarantee presumes an
/// input comparable to a coupling.
pub const MASS_WINDOW: (f64, f64) = (0.5, 2.0);

/// Largest tolerated gap between `sum(r)` and `sum(c)`; beyond it the
/// polytope itself is empty at certification precision.
pub const BALANCE_TOL: f64 = FEASIBILITY_TOL;

pub(crate) fn check_balanced(r: &Marginal, c: &Marginal) -> Result<()> {
    let gap = (r.sum() - c.sum()).abs();
    if gap > BALANCE_TOL {
        return Err(Error::UnbalancedMarginals {
            gap,
            tolerance: BALANCE_TOL,
        });
    }
    Ok(())
}

/// Rounds `F` to an exactly feasible coupling of `(r, c)`.
///
/// The output satisfies `||G - F||_1 <= 2 (||r(F) - r||_1 + ||c(F) - c||_1)`
/// and is certified to per-coordinate tolerance `1e-10`.
pub fn round_to_polytope(f: &Mat, r: &Marginal, c: &Marginal) -> Result<TransportPlan> {
    round_impl(f, r, c, false)
}

/// Randomized variant: `coin = false` runs the row-first order of
/// [`round_to_polytope`]; `coin = true` runs the column-first order. The two
/// branch bounds are `||r(F)-r||_1 + 2 ||c(F)-c||_1` and its mirror, so a
/// fair coin gives the 3/2-factor bound in expectation. The coin is supplied
/// by the caller; this function draws no randomness of its own.
pub fn round_randomized(f: &Mat, r: &Marginal, c: &Marginal, coin: bool) -> Result<TransportPlan> {
    round_impl(f, r, c, coin)
}

fn round_impl(f: &Mat, r: &Marginal, c: &Marginal, col_first: bool) -> Result<TransportPlan> {
    if f.n_rows() != r.len() || f.n_cols() != c.len() {
        return Err(Error::DimensionMismatch {
            context: "round_to_polytope",
            expected: r.len(),
            actual: f.n_rows(),
        });
    }
    for (index, &v) in f.as_slice().iter().enumerate() {
        if !v.is_finite() || v < 0.0 {
            return Err(Error::DomainError {
                context: "round_to_polytope",
                index,
                value: v,
                requirement: "nonnegative and finite",
            });
        }
    }
    check_balanced(r, c)?;
    let mass = f.total();
    if !(MASS_WINDOW.0..=MASS_WINDOW.1).contains(&mass) {
        return Err(Error::InvalidParameter {
            name: "total input mass",
            value: mass,
            requirement: "within [0.5, 2]; rounding expects an approximate coupling",
        });
    }

    let steps = round_steps(f, r, c, col_first);

    // Mass-removal identity: the positive parts of the marginal overshoots
    // account exactly for the mass the two scaling steps dropped.
    let delta = mass - steps.f2.total();
    if (steps.removed - delta).abs() > 1e-10 {
        return Err(Error::InternalInvariant(format!(
            "rounding removed {} but mass shrank by {delta}",
            steps.removed
        )));
    }

    let err_r_norm: f64 = steps.err_r.iter().sum();
    let err_c_norm: f64 = steps.err_c.iter().sum();

    // err_r and err_c both sum to 1 - ||F''||_1 whenever sum(r) = sum(c);
    // disagreement beyond float noise plus the marginals' own imbalance
    // indicates a scaling bug.
    let imbalance = (r.sum() - c.sum()).abs();
    if (err_r_norm - err_c_norm).abs() > 1e-9 + imbalance {
        return Err(Error::InternalInvariant(format!(
            "rounding error masses disagree: {err_r_norm} vs {err_c_norm}"
        )));
    }

    let g = if err_r_norm == 0.0 {
        steps.f2
    } else {
        let mut g = steps.f2;
        for i in 0..g.n_rows() {
            let scale = steps.err_r[i] / err_r_norm;
            if scale == 0.0 {
                continue;
            }
            for (j, entry) in g.row_mut(i).iter_mut().enumerate() {
                *entry += scale * steps.err_c[j];
            }
        }
        g
    };
    TransportPlan::certified(g, r, c)
}

pub(crate) struct RoundSteps {
    /// The doubly rescaled matrix F''.
    pub f2: Mat,
    /// Row deficits `r - r(F'')`, clamped at zero.
    pub err_r: Vec<f64>,
    /// Column deficits `c - c(F'')`, clamped at zero.
    pub err_c: Vec<f64>,
    /// Mass removed by the two scaling steps, accumulated as the positive
    /// parts of the marginal overshoots.
    pub removed: f64,
}

pub(crate) fn round_steps(f: &Mat, r: &Marginal, c: &Marginal, col_first: bool) -> RoundSteps {
    let mut f2 = f.clone();
    let mut removed = 0.0;
    if col_first {
        removed += scale_cols_down(&mut f2, c);
        removed += scale_rows_down(&mut f2, r);
    } else {
        removed += scale_rows_down(&mut f2, r);
        removed += scale_cols_down(&mut f2, c);
    }
    let err_r: Vec<f64> = f2
        .row_sums()
        .iter()
        .zip(r.values())
        .map(|(&got, &want)| (want - got).max(0.0))
        .collect();
    let err_c: Vec<f64> = f2
        .col_sums()
        .iter()
        .zip(c.values())
        .map(|(&got, &want)| (want - got).max(0.0))
        .collect();
    RoundSteps {
        f2,
        err_r,
        err_c,
        removed,
    }
}

/// Scales each row by `min(r_i / r_i(F), 1)`, returning the mass removed
/// `sum_i (r_i(F) - r_i)_+`. Zero-sum rows are left alone (0/0 -> 1).
fn scale_rows_down(f: &mut Mat, r: &Marginal) -> f64 {
    let sums = f.row_sums();
    let mut removed = 0.0;
    for (i, &sum) in sums.iter().enumerate() {
        let target = r.get(i);
        if sum > target {
            removed += sum - target;
            let scale = target / sum;
            for v in f.row_mut(i) {
                *v *= scale;
            }
        }
    }
    removed
}

fn scale_cols_down(f: &mut Mat, c: &Marginal) -> f64 {
    let sums = f.col_sums();
    let mut removed = 0.0;
    for j in 0..f.n_cols() {
        let target = c.get(j);
        if sums[j] > target {
            removed += sums[j] - target;
            let scale = target / sums[j];
            for i in 0..f.n_rows() {
                f[(i, j)] *= scale;
            }
        }
    }
    removed
}
