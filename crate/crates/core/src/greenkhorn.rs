//! Greedy coordinate variant of the alternating projection: each iteration
//! rescales the single row or column with the largest rho-violation, with
//! marginal caches maintained incrementally in O(n).

use crate::error::{Error, Result};
use crate::kernel::ScaledKernel;
use crate::matrix::Mat;
use crate::measures::{rho, Marginal};
use crate::sinkhorn::{
    check_eps_prime, iteration_cap, potential, ProjectionTrace, Termination, TraceRecord,
    UpdateTarget,
};

/// Picks the coordinate with the largest rho-violation. Rows win ties
/// against columns; the lower index wins ties within a vector.
pub fn greedy_select(
    row_sums: &[f64],
    col_sums: &[f64],
    r: &Marginal,
    c: &Marginal,
) -> (UpdateTarget, f64) {
    let (i, row_best) = argmax_rho(r.values(), row_sums);
    let (j, col_best) = argmax_rho(c.values(), col_sums);
    if row_best >= col_best {
        (UpdateTarget::Row(i), row_best)
    } else {
        (UpdateTarget::Col(j), col_best)
    }
}

fn argmax_rho(target: &[f64], current: &[f64]) -> (usize, f64) {
    let mut best = (0, f64::NEG_INFINITY);
    for (i, (&t, &s)) in target.iter().zip(current).enumerate() {
        let v = rho(t, s);
        if v > best.1 {
            best = (i, v);
        }
    }
    best
}

/// How many greedy iterations may pass between full O(n^2) cache rebuilds.
pub const DEFAULT_REFRESH_EVERY: u64 = 1000;

#[derive(Clone, Debug)]
pub struct GreenkhornOptions {
    pub record_trace: bool,
    /// Cache rebuild cadence (0 disables periodic refresh).
    pub refresh_every: u64,
    /// Start from the column-then-row warm start (each column multiplied by
    /// the corresponding target mass, then a full row pass) instead of the
    /// plain normalized kernel.
    pub warm_start: bool,
}

impl Default for GreenkhornOptions {
    fn default() -> Self {
        GreenkhornOptions {
            record_trace: false,
            refresh_every: DEFAULT_REFRESH_EVERY,
            warm_start: false,
        }
    }
}

/// Stepping interface: one `advance` rescales a single row or column.
pub struct GreenkhornState {
    kernel: ScaledKernel,
    r: Marginal,
    c: Marginal,
    rho_rows: Vec<f64>,
    rho_cols: Vec<f64>,
    iterations: u64,
    refresh_every: u64,
    log_mass_ratio: f64,
}

impl GreenkhornState {
    pub fn new(kernel: ScaledKernel, r: Marginal, c: Marginal) -> Result<Self> {
        Self::with_options(kernel, r, c, &GreenkhornOptions::default())
    }

    pub fn with_options(
        mut kernel: ScaledKernel,
        r: Marginal,
        c: Marginal,
        options: &GreenkhornOptions,
    ) -> Result<Self> {
        if kernel.n() != r.len() || kernel.n() != c.len() {
            return Err(Error::DimensionMismatch {
                context: "GreenkhornState marginals",
                expected: kernel.n(),
                actual: r.len().max(c.len()),
            });
        }
        let log_mass_ratio = kernel.log_mass_ratio();
        kernel.normalize_base()?;
        let mut state = GreenkhornState {
            kernel,
            r,
            c,
            rho_rows: Vec::new(),
            rho_cols: Vec::new(),
            iterations: 0,
            refresh_every: options.refresh_every,
            log_mass_ratio,
        };
        if options.warm_start {
            state.apply_warm_start()?;
        }
        state.rebuild_rho_caches();
        Ok(state)
    }

    fn apply_warm_start(&mut self) -> Result<()> {
        self.kernel.scale_cols_to(&self.c)?;
        self.kernel.scale_rows_to(&self.r)
    }

    fn rebuild_rho_caches(&mut self) {
        self.rho_rows = self
            .r
            .values()
            .iter()
            .zip(self.kernel.cached_row_sums())
            .map(|(&t, &s)| rho(t, s))
            .collect();
        self.rho_cols = self
            .c
            .values()
            .iter()
            .zip(self.kernel.cached_col_sums())
            .map(|(&t, &s)| rho(t, s))
            .collect();
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

    pub fn log_mass_ratio(&self) -> f64 {
        self.log_mass_ratio
    }

    /// Iteration bound `ceil(28 n eps'^-2 log(s/l)) + 1` enforced as a cap.
    pub fn iteration_cap(&self, eps_prime: f64) -> u64 {
        let n = self.kernel.n() as f64;
        iteration_cap(28.0 * n * self.log_mass_ratio / (eps_prime * eps_prime), 1)
    }

    /// The coordinate the next `advance` will update, from cached rho values.
    pub fn greedy_choice(&self) -> (UpdateTarget, f64) {
        let (i, row_best) = argmax_cached(&self.rho_rows);
        let (j, col_best) = argmax_cached(&self.rho_cols);
        if row_best >= col_best {
            (UpdateTarget::Row(i), row_best)
        } else {
            (UpdateTarget::Col(j), col_best)
        }
    }

    /// True when the chosen coordinate's cached sum has decayed to zero with
    /// a positive target: the cache is cancellation noise there and must be
    /// recomputed before a line search can trust it.
    fn choice_needs_refresh(&self, target: UpdateTarget) -> bool {
        match target {
            UpdateTarget::Row(i) => {
                self.r.get(i) > 0.0 && self.kernel.cached_row_sums()[i] <= 0.0
            }
            UpdateTarget::Col(j) => {
                self.c.get(j) > 0.0 && self.kernel.cached_col_sums()[j] <= 0.0
            }
            _ => false,
        }
    }

    /// Recomputes the marginal caches and the rho caches from scratch.
    pub fn refresh(&mut self) -> Result<()> {
        self.kernel.refresh_marginals()?;
        self.rebuild_rho_caches();
        Ok(())
    }

    /// One greedy update with exact line search on the selected coordinate.
    pub fn advance(&mut self) -> Result<UpdateTarget> {
        let (mut target, _) = self.greedy_choice();
        if self.choice_needs_refresh(target) {
            self.refresh()?;
            target = self.greedy_choice().0;
        }
        match target {
            UpdateTarget::Row(i) => {
                self.kernel.apply_row_update(i, self.r.get(i))?;
                self.rho_rows[i] = 0.0;
                for (j, cache) in self.rho_cols.iter_mut().enumerate() {
                    *cache = rho(self.c.get(j), self.kernel.cached_col_sums()[j]);
                }
            }
            UpdateTarget::Col(j) => {
                self.kernel.apply_col_update(j, self.c.get(j))?;
                self.rho_cols[j] = 0.0;
                for (i, cache) in self.rho_rows.iter_mut().enumerate() {
                    *cache = rho(self.r.get(i), self.kernel.cached_row_sums()[i]);
                }
            }
            _ => unreachable!(),
        }
        self.iterations += 1;
        if self.refresh_every > 0 && self.iterations.is_multiple_of(self.refresh_every) {
            self.kernel.refresh_marginals()?;
            self.rebuild_rho_caches();
        }
        Ok(target)
    }
}

fn argmax_cached(values: &[f64]) -> (usize, f64) {
    let mut best = (0, f64::NEG_INFINITY);
    for (i, &v) in values.iter().enumerate() {
        if v > best.1 {
            best = (i, v);
        }
    }
    best
}

/// Greedy projection of a strictly positive matrix onto the transport
/// polytope up to l1 violation `eps_prime`.
pub fn greenkhorn_project(
    a: &Mat,
    r: &Marginal,
    c: &Marginal,
    eps_prime: f64,
) -> Result<(ScaledKernel, ProjectionTrace)> {
    greenkhorn_project_with(a, r, c, eps_prime, &GreenkhornOptions::default())
}

pub fn greenkhorn_project_with(
    a: &Mat,
    r: &Marginal,
    c: &Marginal,
    eps_prime: f64,
    options: &GreenkhornOptions,
) -> Result<(ScaledKernel, ProjectionTrace)> {
    let kernel = ScaledKernel::from_matrix(a)?;
    greenkhorn_project_kernel(kernel, r, c, eps_prime, options)
}

pub fn greenkhorn_project_kernel(
    kernel: ScaledKernel,
    r: &Marginal,
    c: &Marginal,
    eps_prime: f64,
    options: &GreenkhornOptions,
) -> Result<(ScaledKernel, ProjectionTrace)> {
    check_eps_prime(eps_prime)?;
    let mut state = GreenkhornState::with_options(kernel, r.clone(), c.clone(), options)?;
    let cap = state.iteration_cap(eps_prime);
    let mut records = Vec::new();
    loop {
        if state.dist() <= eps_prime {
            // apparent convergence from incrementally maintained caches:
            // accept only once a full recompute confirms it
            state.refresh()?;
            if state.dist() <= eps_prime {
                break;
            }
        }
        if state.iterations() >= cap {
            return Err(Error::IterationCap {
                cap,
                context: "greenkhorn_project",
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
