//! Exact transportation LP solver for desk-scale verification, independent
//! of the entropic pipeline: transportation simplex with a northwest-corner
//! start, most-negative-reduced-cost pivoting, and a least-index fallback
//! rule that breaks degenerate stalling.

use crate::error::{Error, Result};
use crate::matrix::{CostMatrix, Mat, TransportPlan};
use crate::measures::Marginal;
use crate::rounding::check_balanced;

/// Largest problem size the oracle accepts; it exists to verify, not to
/// compete.
pub const MAX_ORACLE_N: usize = 256;

/// Optimal plan with its value and a dual optimality certificate.
#[derive(Clone, Debug)]
pub struct OracleSolution {
    pub plan: TransportPlan,
    pub value: f64,
    /// Row potentials u with `u_i + v_j <= C_ij` for all cells.
    pub dual_row: Vec<f64>,
    /// Column potentials v.
    pub dual_col: Vec<f64>,
}

#[derive(Clone, Copy, Debug)]
struct BasisArc {
    row: usize,
    col: usize,
    flow: f64,
}

/// Solves `min <P, C>` over couplings of `(r, c)` exactly.
///
/// The certificate satisfies dual feasibility `u_i + v_j <= C_ij + 1e-9`,
/// complementary slackness on the support, and `<r,u> + <c,v> >= value - 1e-9`.
pub fn exact_ot(cost: &CostMatrix, r: &Marginal, c: &Marginal) -> Result<OracleSolution> {
    let n = cost.n();
    if n == 0 {
        return Err(Error::DegenerateInput {
            context: "exact_ot",
            detail: "empty cost matrix".into(),
        });
    }
    if n > MAX_ORACLE_N {
        return Err(Error::CapabilityExceeded {
            n,
            max: MAX_ORACLE_N,
            context: "exact_ot",
        });
    }
    if r.len() != n || c.len() != n {
        return Err(Error::DimensionMismatch {
            context: "exact_ot marginals",
            expected: n,
            actual: r.len().max(c.len()),
        });
    }
    check_balanced(r, c)?;

    let mut simplex = Simplex::new(cost, r, c);
    simplex.solve()?;
    simplex.into_solution(cost, r, c)
}

struct Simplex<'a> {
    n: usize,
    cost: &'a Mat,
    r: &'a [f64],
    c: &'a [f64],
    basis: Vec<BasisArc>,
    /// Node -> indices into `basis`; nodes 0..n are rows, n..2n columns.
    adjacency: Vec<Vec<usize>>,
    dual_row: Vec<f64>,
    dual_col: Vec<f64>,
    pivot_tol: f64,
}

impl<'a> Simplex<'a> {
    fn new(cost: &'a CostMatrix, r: &'a Marginal, c: &'a Marginal) -> Self {
        let n = cost.n();
        let mut simplex = Simplex {
            n,
            cost: cost.entries(),
            r: r.values(),
            c: c.values(),
            basis: Vec::with_capacity(2 * n - 1),
            adjacency: vec![Vec::new(); 2 * n],
            dual_row: vec![0.0; n],
            dual_col: vec![0.0; n],
            pivot_tol: 1e-11 * (1.0 + cost.max_abs()),
        };
        simplex.northwest_corner();
        simplex
    }

    fn col_node(&self, j: usize) -> usize {
        self.n + j
    }

    /// Staircase initial basis: exactly 2n - 1 arcs forming a spanning tree,
    /// padded with degenerate zero allocations on ties.
    fn northwest_corner(&mut self) {
        let n = self.n;
        let mut a = self.r.to_vec();
        let mut b = self.c.to_vec();
        let (mut i, mut j) = (0, 0);
        loop {
            let alloc = a[i].min(b[j]);
            self.push_arc(BasisArc {
                row: i,
                col: j,
                flow: alloc,
            });
            a[i] -= alloc;
            b[j] -= alloc;
            if i == n - 1 && j == n - 1 {
                break;
            }
            if j == n - 1 {
                i += 1;
            } else if i == n - 1 {
                j += 1;
            } else if a[i] <= b[j] {
                i += 1;
            } else {
                j += 1;
            }
        }
        debug_assert_eq!(self.basis.len(), 2 * n - 1);
    }

    fn push_arc(&mut self, arc: BasisArc) {
        let id = self.basis.len();
        self.adjacency[arc.row].push(id);
        self.adjacency[self.n + arc.col].push(id);
        self.basis.push(arc);
    }

    /// Recomputes duals from the basis tree, rooted at row 0.
    fn compute_duals(&mut self) {
        let total = 2 * self.n;
        let mut seen = vec![false; total];
        let mut stack = vec![0usize];
        seen[0] = true;
        self.dual_row[0] = 0.0;
        while let Some(node) = stack.pop() {
            for &arc_id in &self.adjacency[node] {
                let arc = self.basis[arc_id];
                let (row_node, col_node) = (arc.row, self.col_node(arc.col));
                let next = if node == row_node { col_node } else { row_node };
                if seen[next] {
                    continue;
                }
                seen[next] = true;
                if next == col_node {
                    self.dual_col[arc.col] = self.cost[(arc.row, arc.col)] - self.dual_row[arc.row];
                } else {
                    self.dual_row[arc.row] = self.cost[(arc.row, arc.col)] - self.dual_col[arc.col];
                }
                stack.push(next);
            }
        }
    }

    /// Most negative reduced cost, lexicographic tie-break; when `bland` is
    /// set, the first negative cell wins instead.
    fn entering_arc(&self, bland: bool) -> Option<(usize, usize)> {
        let mut best: Option<((usize, usize), f64)> = None;
        for i in 0..self.n {
            for j in 0..self.n {
                let reduced = self.cost[(i, j)] - self.dual_row[i] - self.dual_col[j];
                if reduced < -self.pivot_tol {
                    if bland {
                        return Some((i, j));
                    }
                    if best.is_none_or(|(_, b)| reduced < b) {
                        best = Some(((i, j), reduced));
                    }
                }
            }
        }
        best.map(|(cell, _)| cell)
    }

    /// Tree path from row node `i` to column node `j` as basis arc indices.
    fn tree_path(&self, i: usize, j: usize) -> Vec<usize> {
        let total = 2 * self.n;
        let start = i;
        let goal = self.col_node(j);
        let mut parent: Vec<Option<(usize, usize)>> = vec![None; total]; // (node, arc)
        let mut seen = vec![false; total];
        let mut queue = std::collections::VecDeque::new();
        seen[start] = true;
        queue.push_back(start);
        while let Some(node) = queue.pop_front() {
            if node == goal {
                break;
            }
            for &arc_id in &self.adjacency[node] {
                let arc = self.basis[arc_id];
                let next = if node == arc.row {
                    self.col_node(arc.col)
                } else {
                    arc.row
                };
                if !seen[next] {
                    seen[next] = true;
                    parent[next] = Some((node, arc_id));
                    queue.push_back(next);
                }
            }
        }
        let mut path = Vec::new();
        let mut node = goal;
        while let Some((prev, arc_id)) = parent[node] {
            path.push(arc_id);
            node = prev;
        }
        // ordered from the entering column's endpoint back to the row
        path
    }

    fn solve(&mut self) -> Result<()> {
        let cap: u64 = 50 * (self.n as u64 * self.n as u64) + 100;
        let mut pivots: u64 = 0;
        let mut stalled: u64 = 0;
        let mut bland = false;
        loop {
            self.compute_duals();
            let Some((i, j)) = self.entering_arc(bland) else {
                return Ok(());
            };
            pivots += 1;
            if pivots > cap {
                return Err(Error::IterationCap {
                    cap,
                    context: "exact_ot simplex pivoting",
                });
            }

            // Cycle = entering arc plus the tree path from col j back to
            // row i; walking from the column end, signs alternate -, +, ...
            let path = self.tree_path(i, j);
            // ties on the departing flow break by cell coordinates, a stable
            // identity (basis slot ids get recycled by replace_arc)
            let mut leaving: Option<(usize, f64)> = None;
            for (pos, &arc_id) in path.iter().enumerate() {
                if pos % 2 == 0 {
                    let arc = self.basis[arc_id];
                    let better = match leaving {
                        None => true,
                        Some((best_id, best_flow)) => {
                            let best = self.basis[best_id];
                            arc.flow < best_flow
                                || (arc.flow == best_flow
                                    && (arc.row, arc.col) < (best.row, best.col))
                        }
                    };
                    if better {
                        leaving = Some((arc_id, arc.flow));
                    }
                }
            }
            let (leaving_id, theta) = leaving.ok_or_else(|| {
                Error::InternalInvariant("pivot cycle has no leaving candidate".into())
            })?;

            for (pos, &arc_id) in path.iter().enumerate() {
                if pos % 2 == 0 {
                    self.basis[arc_id].flow -= theta;
                } else {
                    self.basis[arc_id].flow += theta;
                }
            }
            self.basis[leaving_id].flow = 0.0;
            self.replace_arc(leaving_id, BasisArc {
                row: i,
                col: j,
                flow: theta,
            });

            // Bland's least-index rule provably escapes degenerate cycling;
            // engage it after a long run of zero-step pivots.
            if theta <= 1e-15 {
                stalled += 1;
                if stalled > 8 * self.n as u64 {
                    bland = true;
                }
            } else {
                stalled = 0;
                bland = false;
            }
        }
    }

    fn replace_arc(&mut self, id: usize, arc: BasisArc) {
        let old = self.basis[id];
        self.adjacency[old.row].retain(|&a| a != id);
        self.adjacency[self.n + old.col].retain(|&a| a != id);
        self.basis[id] = arc;
        self.adjacency[arc.row].push(id);
        self.adjacency[self.n + arc.col].push(id);
    }

    /// Re-derives the basic flows from the original marginals by leaf
    /// elimination on the basis tree, wiping out per-pivot float drift.
    fn reconstruct_flows(&mut self) -> Result<()> {
        let n = self.n;
        let total = 2 * n;
        let mut residual = vec![0.0; total];
        residual[..n].copy_from_slice(self.r);
        residual[n..].copy_from_slice(self.c);
        let mut degree: Vec<usize> = self.adjacency.iter().map(|a| a.len()).collect();
        let mut removed = vec![false; self.basis.len()];
        let mut leaves: Vec<usize> = (0..total).filter(|&v| degree[v] == 1).collect();
        let mut processed = 0;
        while let Some(node) = leaves.pop() {
            let Some(&arc_id) = self.adjacency[node]
                .iter()
                .find(|&&a| !removed[a])
            else {
                continue; // root of the elimination order
            };
            let arc = self.basis[arc_id];
            let other = if node == arc.row {
                self.col_node(arc.col)
            } else {
                arc.row
            };
            let flow = residual[node];
            if flow < -1e-9 {
                return Err(Error::InternalInvariant(format!(
                    "reconstructed basic flow {flow} is negative"
                )));
            }
            self.basis[arc_id].flow = flow.max(0.0);
            residual[node] = 0.0;
            residual[other] -= flow;
            removed[arc_id] = true;
            processed += 1;
            degree[node] -= 1;
            degree[other] -= 1;
            if degree[other] == 1 {
                leaves.push(other);
            }
        }
        if processed != self.basis.len() {
            return Err(Error::InternalInvariant(format!(
                "basis is not a spanning tree: eliminated {processed} of {} arcs",
                self.basis.len()
            )));
        }
        Ok(())
    }

    fn into_solution(
        mut self,
        cost: &CostMatrix,
        r: &Marginal,
        c: &Marginal,
    ) -> Result<OracleSolution> {
        self.reconstruct_flows()?;
        self.compute_duals();
        let n = self.n;
        let mut entries = Mat::zeros(n, n);
        let mut value = 0.0;
        for arc in &self.basis {
            entries[(arc.row, arc.col)] += arc.flow;
            value += arc.flow * self.cost[(arc.row, arc.col)];
        }

        // Validate the certificate before handing it out.
        let cert_tol = 1e-9 * (1.0 + cost.max_abs());
        for i in 0..n {
            for j in 0..n {
                let slack = self.cost[(i, j)] - self.dual_row[i] - self.dual_col[j];
                if slack < -cert_tol {
                    return Err(Error::InternalInvariant(format!(
                        "dual infeasibility at ({i},{j}): slack {slack}"
                    )));
                }
            }
        }
        let dual_value: f64 = r
            .values()
            .iter()
            .zip(&self.dual_row)
            .map(|(a, b)| a * b)
            .sum::<f64>()
            + c.values()
                .iter()
                .zip(&self.dual_col)
                .map(|(a, b)| a * b)
                .sum::<f64>();
        if (dual_value - value).abs() > cert_tol {
            return Err(Error::InternalInvariant(format!(
                "duality gap {} between primal {value} and dual {dual_value}",
                (dual_value - value).abs()
            )));
        }

        let plan = TransportPlan::certified(entries, r, c)?;
        Ok(OracleSolution {
            plan,
            value,
            dual_row: self.dual_row,
            dual_col: self.dual_col,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn cost(rows: &[Vec<f64>]) -> CostMatrix {
        CostMatrix::new(Mat::from_rows(rows).unwrap()).unwrap()
    }

    fn random_simplex(rng: &mut ChaCha8Rng, n: usize) -> Marginal {
        let raw: Vec<f64> = (0..n).map(|_| -rng.gen::<f64>().ln()).collect();
        let s: f64 = raw.iter().sum();
        Marginal::new(raw.into_iter().map(|x| x / s).collect()).unwrap()
    }

    /// Brute-force oracle for tiny instances: enumerate every basis (subset
    /// of 2n-1 cells), solve it by leaf elimination, and keep the best
    /// feasible vertex.
    pub(crate) fn brute_force_value(cost: &CostMatrix, r: &Marginal, c: &Marginal) -> f64 {
        let n = cost.n();
        let cells: Vec<(usize, usize)> = (0..n)
            .flat_map(|i| (0..n).map(move |j| (i, j)))
            .collect();
        let k = 2 * n - 1;
        let mut best = f64::INFINITY;
        let mut chosen = vec![0usize; k];
        enumerate_subsets(&cells, k, 0, 0, &mut chosen, &mut |subset| {
            if let Some(value) = vertex_value(cost, r, c, subset) {
                if value < best {
                    best = value;
                }
            }
        });
        best
    }

    fn enumerate_subsets(
        cells: &[(usize, usize)],
        k: usize,
        start: usize,
        depth: usize,
        chosen: &mut Vec<usize>,
        visit: &mut impl FnMut(&[(usize, usize)]),
    ) {
        if depth == k {
            let subset: Vec<(usize, usize)> = chosen.iter().map(|&i| cells[i]).collect();
            visit(&subset);
            return;
        }
        for i in start..cells.len() {
            chosen[depth] = i;
            enumerate_subsets(cells, k, i + 1, depth + 1, chosen, visit);
        }
    }

    /// Leaf elimination on the candidate basis; `None` when the subset is
    /// not a spanning tree or yields negative flows.
    fn vertex_value(
        cost: &CostMatrix,
        r: &Marginal,
        c: &Marginal,
        subset: &[(usize, usize)],
    ) -> Option<f64> {
        let n = cost.n();
        let total = 2 * n;
        let mut adjacency: Vec<Vec<usize>> = vec![Vec::new(); total];
        for (id, &(i, j)) in subset.iter().enumerate() {
            adjacency[i].push(id);
            adjacency[n + j].push(id);
        }
        let mut residual = vec![0.0; total];
        residual[..n].copy_from_slice(r.values());
        for j in 0..n {
            residual[n + j] = c.get(j);
        }
        let mut degree: Vec<usize> = adjacency.iter().map(|a| a.len()).collect();
        let mut removed = vec![false; subset.len()];
        let mut flows = vec![0.0; subset.len()];
        let mut leaves: Vec<usize> = (0..total).filter(|&v| degree[v] == 1).collect();
        let mut processed = 0;
        while let Some(node) = leaves.pop() {
            // the elimination root ends up with no remaining arc
            let Some(&arc_id) = adjacency[node].iter().find(|&&a| !removed[a]) else {
                continue;
            };
            let (i, j) = subset[arc_id];
            let other = if node == i { n + j } else { i };
            let flow = residual[node];
            if flow < -1e-12 {
                return None;
            }
            flows[arc_id] = flow;
            residual[node] = 0.0;
            residual[other] -= flow;
            removed[arc_id] = true;
            processed += 1;
            degree[node] -= 1;
            degree[other] -= 1;
            if degree[other] == 1 {
                leaves.push(other);
            }
        }
        if processed != subset.len() {
            return None;
        }
        Some(
            subset
                .iter()
                .zip(&flows)
                .map(|(&(i, j), &f)| f * cost.entries()[(i, j)])
                .sum(),
        )
    }

    #[test]
    fn zero_cost_gives_zero_value() {
        let c0 = cost(&[vec![0.0, 0.0], vec![0.0, 0.0]]);
        let r = Marginal::new(vec![0.3, 0.7]).unwrap();
        let c = Marginal::new(vec![0.5, 0.5]).unwrap();
        let sol = exact_ot(&c0, &r, &c).unwrap();
        assert!(sol.value.abs() < 1e-12);
        assert!(sol.plan.is_certified());
    }

    #[test]
    fn identical_marginals_zero_diagonal_cost() {
        let cm = cost(&[vec![0.0, 2.0, 5.0], vec![2.0, 0.0, 1.0], vec![5.0, 1.0, 0.0]]);
        let r = Marginal::new(vec![0.2, 0.5, 0.3]).unwrap();
        let sol = exact_ot(&cm, &r, &r).unwrap();
        assert!(sol.value.abs() < 1e-12, "value {}", sol.value);
    }

    #[test]
    fn two_by_two_known_optimum() {
        let cm = cost(&[vec![0.0, 1.0], vec![1.0, 0.0]]);
        let r = Marginal::new(vec![0.7, 0.3]).unwrap();
        let c = Marginal::new(vec![0.4, 0.6]).unwrap();
        let sol = exact_ot(&cm, &r, &c).unwrap();
        assert!((sol.value - 0.3).abs() < 1e-12);
    }

    #[test]
    fn matches_vertex_enumeration_on_tiny_instances() {
        let mut rng = ChaCha8Rng::seed_from_u64(89);
        for trial in 0..30 {
            let n = 2 + trial % 2; // n in {2, 3}
            let data: Vec<f64> = (0..n * n).map(|_| rng.gen::<f64>()).collect();
            let cm = CostMatrix::new(Mat::new(n, n, data).unwrap()).unwrap();
            let r = random_simplex(&mut rng, n);
            let c = random_simplex(&mut rng, n);
            let sol = exact_ot(&cm, &r, &c).unwrap();
            let brute = brute_force_value(&cm, &r, &c);
            assert!(
                (sol.value - brute).abs() < 1e-9,
                "simplex {} vs brute force {brute}",
                sol.value
            );
        }
    }

    #[test]
    fn certificate_validates_complementary_slackness() {
        let mut rng = ChaCha8Rng::seed_from_u64(97);
        for _ in 0..10 {
            let n = 8;
            let data: Vec<f64> = (0..n * n).map(|_| rng.gen::<f64>()).collect();
            let cm = CostMatrix::new(Mat::new(n, n, data).unwrap()).unwrap();
            let r = random_simplex(&mut rng, n);
            let c = random_simplex(&mut rng, n);
            let sol = exact_ot(&cm, &r, &c).unwrap();
            for i in 0..n {
                for j in 0..n {
                    let slack = cm.entries()[(i, j)] - sol.dual_row[i] - sol.dual_col[j];
                    assert!(slack >= -1e-9);
                    if sol.plan.entries()[(i, j)] > 1e-10 {
                        assert!(slack.abs() <= 1e-8, "support cell ({i},{j}) slack {slack}");
                    }
                }
            }
        }
    }

    #[test]
    fn degenerate_uniform_instances_terminate() {
        // uniform marginals produce maximally tied staircases
        for n in [2, 3, 5, 8] {
            let u = Marginal::uniform(n);
            let eye_cost = CostMatrix::new(Mat::identity(n).map(|v| 1.0 - v)).unwrap();
            let sol = exact_ot(&eye_cost, &u, &u).unwrap();
            assert!(sol.value.abs() < 1e-12, "n={n} value {}", sol.value);

            let ones = CostMatrix::new(Mat::filled(n, n, 1.0)).unwrap();
            let sol = exact_ot(&ones, &u, &u).unwrap();
            assert!((sol.value - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn rejects_oversize_and_unbalanced_inputs() {
        let n = MAX_ORACLE_N + 1;
        let cm = CostMatrix::new(Mat::zeros(n, n)).unwrap();
        let u = Marginal::uniform(n);
        assert!(matches!(
            exact_ot(&cm, &u, &u),
            Err(Error::CapabilityExceeded { .. })
        ));

        let cm2 = cost(&[vec![0.0, 1.0], vec![1.0, 0.0]]);
        let r = Marginal::with_sum_tolerance(vec![0.5, 0.5002], 1e-3).unwrap();
        let c = Marginal::uniform(2);
        assert!(matches!(
            exact_ot(&cm2, &r, &c),
            Err(Error::UnbalancedMarginals { .. })
        ));
    }
}
