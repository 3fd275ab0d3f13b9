//! Classical Sinkhorn-Knopp alternating projection with an l1 stopping rule,
//! potential-function instrumentation, and a hard iteration cap derived from
//! the proof of its convergence bound.

use crate::error::{Error, Result};
use crate::kernel::ScaledKernel;
use crate::matrix::Mat;
use crate::measures::Marginal;

/// Which marginals an iteration rescaled.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum UpdateTarget {
    /// Full row pass.
    Rows,
    /// Full column pass.
    Cols,
    /// Single-row update (greedy solver).
    Row(usize),
    /// Single-column update (greedy solver).
    Col(usize),
}

impl std::fmt::Display for UpdateTarget {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            UpdateTarget::Rows => write!(f, "rows"),
            UpdateTarget::Cols => write!(f, "cols"),
            UpdateTarget::Row(i) => write!(f, "row({i})"),
            UpdateTarget::Col(j) => write!(f, "col({j})"),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Termination {
    Converged,
    IterationCap,
    Overflow,
}

/// One per-iteration measurement.
#[derive(Clone, Debug)]
pub struct TraceRecord {
    pub iter: u64,
    /// Marginal violation of the iterate after this update.
    pub dist: f64,
    /// Potential value after this update.
    pub potential: f64,
    pub target: UpdateTarget,
}

/// Record of a projection run.
#[derive(Clone, Debug)]
pub struct ProjectionTrace {
    pub records: Vec<TraceRecord>,
    pub terminated: Termination,
    pub iterations: u64,
}

/// Projection options; trace recording is off by default to keep the hot
/// loop allocation-free.
#[derive(Clone, Debug, Default)]
pub struct ProjectOptions {
    pub record_trace: bool,
}

/// Dual potential `f(x, y) = sum_ij A_ij e^{x_i + y_j} - <r, x> - <c, y>`,
/// evaluated from the kernel's cached marginals. Expects a base normalized
/// to unit total mass (as the solvers maintain), under which `f(0,0) = 1`.
pub fn potential(kernel: &ScaledKernel, r: &Marginal, c: &Marginal) -> f64 {
    let mass = kernel.total_mass();
    mass - dot_ignore_zero_mass(r.values(), kernel.log_x())
        - dot_ignore_zero_mass(c.values(), kernel.log_y())
}

/// `<w, v>` with the convention that coordinates of zero weight contribute
/// nothing even when the scaling there is -inf.
fn dot_ignore_zero_mass(w: &[f64], v: &[f64]) -> f64 {
    w.iter()
        .zip(v)
        .filter(|(&wi, _)| wi != 0.0)
        .map(|(&wi, &vi)| wi * vi)
        .sum()
}

/// Stepping interface for the alternating projection: one `advance` performs
/// a full row pass (odd iterations) or column pass (even iterations).
pub struct SinkhornState {
    kernel: ScaledKernel,
    r: Marginal,
    c: Marginal,
    iterations: u64,
    log_mass_ratio: f64,
}

impl SinkhornState {
    /// Takes ownership of a kernel, normalizes its base to unit mass, and
    /// prepares for iteration.
    pub fn new(mut kernel: ScaledKernel, r: Marginal, c: Marginal) -> Result<Self> {
        if kernel.n() != r.len() || kernel.n() != c.len() {
            return Err(Error::DimensionMismatch {
                context: "SinkhornState marginals",
                expected: kernel.n(),
                actual: r.len().max(c.len()),
            });
        }
        let log_mass_ratio = kernel.log_mass_ratio();
        kernel.normalize_base()?;
        Ok(SinkhornState {
            kernel,
            r,
            c,
            iterations: 0,
            log_mass_ratio,
        })
    }

    pub fn dist(&self) -> f64 {
        self.kernel.cached_violation(&self.r, &self.c)
    }

    pub fn potential(&self) -> f64 {
        potential(&self.kernel, &self.r, &self.c)
    }

    pub fn iterations(&self) -> u64 {
        self.iterations
    }

    pub fn kernel(&self) -> &ScaledKernel {
        &self.kernel
    }

    pub fn into_kernel(self) -> ScaledKernel {
        self.kernel
    }

    pub fn marginals(&self) -> (&Marginal, &Marginal) {
        (&self.r, &self.c)
    }

    /// `log(s / l)` of the input matrix, fixed at construction.
    pub fn log_mass_ratio(&self) -> f64 {
        self.log_mass_ratio
    }

    /// Iteration bound `ceil(4 eps'^-2 log(s/l)) + 2` enforced as a hard cap.
    pub fn iteration_cap(&self, eps_prime: f64) -> u64 {
        iteration_cap(4.0 * self.log_mass_ratio / (eps_prime * eps_prime), 2)
    }

    /// One full pass; odd iterations rescale rows, even iterations columns.
    pub fn advance(&mut self) -> Result<UpdateTarget> {
        self.iterations += 1;
        if self.iterations % 2 == 1 {
            self.kernel.scale_rows_to(&self.r)?;
            Ok(UpdateTarget::Rows)
        } else {
            self.kernel.scale_cols_to(&self.c)?;
            Ok(UpdateTarget::Cols)
        }
    }
}

pub(crate) fn iteration_cap(raw: f64, slack: u64) -> u64 {
    if !raw.is_finite() || raw < 0.0 {
        return u64::MAX;
    }
    (raw.ceil() as u64).saturating_add(slack)
}

/// Runs the alternating projection on a strictly positive matrix until the
/// l1 marginal violation drops to `eps_prime`.
///
/// The returned kernel satisfies `B = D(e^x) (A / ||A||_1) D(e^y)` with
/// `dist(B, U_{r,c}) <= eps_prime`. Exceeding the theoretical iteration cap
/// is reported as an internal defect rather than truncated.
pub fn sinkhorn_project(
    a: &Mat,
    r: &Marginal,
    c: &Marginal,
    eps_prime: f64,
) -> Result<(ScaledKernel, ProjectionTrace)> {
    sinkhorn_project_with(a, r, c, eps_prime, &ProjectOptions::default())
}

pub fn sinkhorn_project_with(
    a: &Mat,
    r: &Marginal,
    c: &Marginal,
    eps_prime: f64,
    options: &ProjectOptions,
) -> Result<(ScaledKernel, ProjectionTrace)> {
    let kernel = ScaledKernel::from_matrix(a)?;
    sinkhorn_project_kernel(kernel, r, c, eps_prime, options)
}

/// Same as [`sinkhorn_project`] but starting from an already-built kernel
/// (e.g. one constructed in the log domain).
pub fn sinkhorn_project_kernel(
    kernel: ScaledKernel,
    r: &Marginal,
    c: &Marginal,
    eps_prime: f64,
    options: &ProjectOptions,
) -> Result<(ScaledKernel, ProjectionTrace)> {
    check_eps_prime(eps_prime)?;
    let mut state = SinkhornState::new(kernel, r.clone(), c.clone())?;
    let cap = state.iteration_cap(eps_prime);
    let mut records = Vec::new();
    while state.dist() > eps_prime {
        if state.iterations() >= cap {
            return Err(Error::IterationCap {
                cap,
                context: "sinkhorn_project",
            });
        }
        let target = state.advance()?;
        if options.record_trace {
            records.push(TraceRecord {
                iter: state.iterations(),
                dist: state.dist(),
                potential: state.potential(),
                target,
            });
        }
    }
    let trace = ProjectionTrace {
        records,
        terminated: Termination::Converged,
        iterations: state.iterations(),
    };
    Ok((state.into_kernel(), trace))
}

pub(crate) fn check_eps_prime(eps_prime: f64) -> Result<()> {
    if !eps_prime.is_finite() || eps_prime <= 0.0 {
        return Err(Error::InvalidParameter {
            name: "eps_prime",
            value: eps_prime,
            requirement: "positive and finite",
        });
    }
    Ok(())
}
