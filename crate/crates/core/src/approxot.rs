//! End-to-end additive-approximation driver: build the Gibbs kernel on the
//! schedule `eta = 4 log(n) / eps`, `eps' = eps / (8 ||C||_inf)`, project
//! approximately with a pluggable solver, and round to exact feasibility.

use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::greenkhorn::{greenkhorn_project_kernel, GreenkhornOptions};
use crate::kernel::{log_gibbs_kernel, ScaledKernel};
use crate::matrix::{CostMatrix, Mat, TransportPlan};
use crate::measures::Marginal;
use crate::rounding::{check_balanced, round_to_polytope};
use crate::sinkhorn::{sinkhorn_project_kernel, ProjectOptions, ProjectionTrace};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ProjectorKind {
    Sinkhorn,
    Greenkhorn,
}

impl std::fmt::Display for ProjectorKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            ProjectorKind::Sinkhorn => write!(f, "sinkhorn"),
            ProjectorKind::Greenkhorn => write!(f, "greenkhorn"),
        }
    }
}

#[derive(Clone, Debug)]
pub struct SolveOptions {
    pub projector: ProjectorKind,
    /// Overrides the schedule's `eta` (the small-regularization regime);
    /// the additive guarantee is then no longer implied.
    pub eta_override: Option<f64>,
    pub record_trace: bool,
}

impl Default for SolveOptions {
    fn default() -> Self {
        SolveOptions {
            projector: ProjectorKind::Sinkhorn,
            eta_override: None,
            record_trace: false,
        }
    }
}

/// Outcome of one solve.
#[derive(Clone, Debug)]
pub struct SolveReport {
    pub plan: TransportPlan,
    /// `<plan, C>`.
    pub objective: f64,
    pub eta: f64,
    pub eps_prime: f64,
    pub projector: ProjectorKind,
    pub iterations: u64,
    /// Measured marginal violation of the unrounded projector output
    /// (at most `eps_prime`).
    pub projection_violation: f64,
    pub wall_time: Duration,
    pub trace: Option<ProjectionTrace>,
}

/// Frobenius inner product of a plan with a cost matrix.
pub fn transport_objective(plan: &TransportPlan, cost: &CostMatrix) -> Result<f64> {
    plan.entries().dot(cost.entries())
}

/// Computes a coupling of `(r, c)` whose cost is within `eps` of the optimum.
pub fn approx_ot(
    cost: &CostMatrix,
    r: &Marginal,
    c: &Marginal,
    eps: f64,
    projector: ProjectorKind,
) -> Result<SolveReport> {
    approx_ot_with(
        cost,
        r,
        c,
        eps,
        &SolveOptions {
            projector,
            ..Default::default()
        },
    )
}

pub fn approx_ot_with(
    cost: &CostMatrix,
    r: &Marginal,
    c: &Marginal,
    eps: f64,
    options: &SolveOptions,
) -> Result<SolveReport> {
    let start = Instant::now();
    if !eps.is_finite() || eps <= 0.0 {
        return Err(Error::InvalidParameter {
            name: "eps",
            value: eps,
            requirement: "positive and finite",
        });
    }
    let n = cost.n();
    if n == 0 {
        return Err(Error::DegenerateInput {
            context: "approx_ot",
            detail: "empty cost matrix".into(),
        });
    }
    if r.len() != n || c.len() != n {
        return Err(Error::DimensionMismatch {
            context: "approx_ot marginals",
            expected: n,
            actual: r.len().max(c.len()),
        });
    }
    check_balanced(r, c)?;

    let eta = options
        .eta_override
        .unwrap_or(4.0 * (n as f64).ln() / eps);
    let eps_prime = eps / (8.0 * cost.max_abs());

    // n = 1: the only coupling is [[1]]; the schedule is meaningless there.
    if n == 1 {
        let plan = TransportPlan::certified(Mat::filled(1, 1, 1.0), r, c)?;
        let objective = transport_objective(&plan, cost)?;
        return Ok(SolveReport {
            plan,
            objective,
            eta,
            eps_prime,
            projector: options.projector,
            iterations: 0,
            projection_violation: 0.0,
            wall_time: start.elapsed(),
            trace: None,
        });
    }

    // Zero cost: every coupling is optimal with objective 0.
    if cost.max_abs() == 0.0 {
        let product = Mat::outer(r.values(), c.values()).map(|v| v / c.sum());
        let plan = TransportPlan::certified(product, r, c)?;
        return Ok(SolveReport {
            plan,
            objective: 0.0,
            eta,
            eps_prime,
            projector: options.projector,
            iterations: 0,
            projection_violation: 0.0,
            wall_time: start.elapsed(),
            trace: None,
        });
    }

    if options.eta_override.is_some() && (!eta.is_finite() || eta <= 0.0) {
        return Err(Error::InvalidParameter {
            name: "eta_override",
            value: eta,
            requirement: "positive and finite",
        });
    }

    // The projection tolerance is additionally capped at 1/4 so the
    // projected mass stays near one and rounding's input window is met even
    // for very coarse eps.
    let projection_tol = eps_prime.min(0.25);

    // The kernel is built directly in the log domain, so extreme
    // eta * ||C||_inf stays representable end to end.
    let kernel = ScaledKernel::from_log_matrix(log_gibbs_kernel(cost, eta)?)?;

    let (mut kernel, trace) = match options.projector {
        ProjectorKind::Sinkhorn => {
            let opts = ProjectOptions {
                record_trace: options.record_trace,
            };
            sinkhorn_project_kernel(kernel, r, c, projection_tol, &opts)?
        }
        ProjectorKind::Greenkhorn => {
            let opts = GreenkhornOptions {
                record_trace: options.record_trace,
                ..Default::default()
            };
            greenkhorn_project_kernel(kernel, r, c, projection_tol, &opts)?
        }
    };

    // Post-hoc verification of the chain of guarantees, on freshly
    // recomputed marginals rather than the solver's caches.
    kernel.refresh_marginals()?;
    let violation = kernel.cached_violation(r, c);
    if violation > projection_tol * (1.0 + 1e-9) + 1e-12 {
        return Err(Error::InternalInvariant(format!(
            "projector returned violation {violation} above its tolerance {projection_tol}"
        )));
    }
    let b = kernel.realize();
    let plan = round_to_polytope(&b, r, c)?;
    let moved = plan.entries().l1_distance(&b)?;
    if moved > 2.0 * eps_prime.min(0.25) + 1e-9 {
        return Err(Error::InternalInvariant(format!(
            "rounding moved {moved} in l1, above the 2 eps' budget {}",
            2.0 * eps_prime.min(0.25)
        )));
    }

    let objective = transport_objective(&plan, cost)?;
    Ok(SolveReport {
        plan,
        objective,
        eta,
        eps_prime,
        projector: options.projector,
        iterations: trace.iterations,
        projection_violation: violation,
        wall_time: start.elapsed(),
        trace: options.record_trace.then_some(trace),
    })
}
