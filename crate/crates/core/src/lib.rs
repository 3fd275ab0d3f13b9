//! Entropic optimal transport toolkit.
//!
//! Computes additive approximations to optimal transport distances between
//! discrete measures by scaling a Gibbs kernel onto the transport polytope
//! and rounding the result to exact feasibility:
//!
//! - [`sinkhorn`]: classical alternating row/column scaling with an l1
//!   stopping rule and potential-function instrumentation;
//! - [`greenkhorn`]: greedy single-coordinate scaling with O(n) iterations;
//! - [`rounding`]: projection of near-feasible matrices onto the polytope
//!   with a controlled l1 perturbation;
//! - [`approxot`]: the end-to-end driver tying schedule, projection, and
//!   rounding together;
//! - [`oracle`]: an independent exact transportation-simplex solver used for
//!   verification at desk scale;
//! - [`bench`](crate::bench): the image-transport benchmark harness (synthetic squares,
//!   IDX images, head-to-head convergence traces).
//!
//! All randomized components take explicit 64-bit seeds and draw from
//! `ChaCha8Rng` in documented order, so results are reproducible.
//!
//! ```
//! use otkit::{approx_ot, CostMatrix, Marginal, Mat, ProjectorKind};
//!
//! let cost = CostMatrix::new(Mat::from_rows(&[
//!     vec![0.0, 1.0],
//!     vec![1.0, 0.0],
//! ])?)?;
//! let r = Marginal::new(vec![0.7, 0.3])?;
//! let c = Marginal::new(vec![0.4, 0.6])?;
//!
//! // coupling within 0.05 of the optimal cost (0.3 for this instance)
//! let report = approx_ot(&cost, &r, &c, 0.05, ProjectorKind::Greenkhorn)?;
//! assert!(report.plan.is_certified());
//! assert!(report.objective >= 0.3 - 1e-9 && report.objective <= 0.35);
//! # Ok::<(), otkit::Error>(())
//! ```

pub mod approxot;
pub mod bench;
pub mod error;
pub mod greenkhorn;
pub mod io;
pub mod kernel;
pub mod matrix;
pub mod measures;
pub mod oracle;
pub mod rounding;
pub mod sinkhorn;

pub use approxot::{approx_ot, approx_ot_with, transport_objective, ProjectorKind, SolveOptions, SolveReport};
pub use error::{Error, Result};
pub use greenkhorn::{greedy_select, greenkhorn_project, greenkhorn_project_with, GreenkhornOptions, GreenkhornState};
pub use kernel::{gibbs_kernel, log_gibbs_kernel, normalize_total_mass, ScaledKernel};
pub use matrix::{col_sums, marginal_violation, row_sums, CostMatrix, Mat, TransportPlan, FEASIBILITY_TOL};
pub use measures::{entropy, kl_divergence, l1_distance, rho, Marginal, SIMPLEX_SUM_TOL};
pub use oracle::{exact_ot, OracleSolution};
pub use rounding::{round_randomized, round_to_polytope};
pub use sinkhorn::{potential, sinkhorn_project, sinkhorn_project_with, ProjectOptions, ProjectionTrace, SinkhornState, Termination, TraceRecord, UpdateTarget};
