//! Monge–Kantorovich transport and the slowing-down limit.
//!
//! [`mk_solve`] computes exact transport plans by successive shortest paths
//! on integer masses. The sweeps solve the Schrödinger problem for a family
//! of references indexed by `k` and compare `H(π̂^k | R01^k) / α_k` with the
//! transport value, where `α_k = log k` for slowed-down chains (cost: graph
//! distance) and `α_k = k` for Gaussian grid kernels (cost: `(x − y)² / 2`).

use std::collections::VecDeque;

use nalgebra::DMatrix;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{check_dim, Error, Result};
use crate::markov::{gaussian_grid_kernel, ReversibleChain};
use crate::measure::{total_variation, Measure, ProbabilityMeasure};
use crate::schrodinger::{solve, SolveOptions, StaticSolution};

/// Common denominator for integer masses.
pub const DEFAULT_DENOMINATOR: u64 = 1_000_000;

/// Largest tolerated complementary-slackness violation.
pub const SLACK_TOLERANCE: f64 = 1e-9;

/// Default slow-down factors `10, 10², …, 10⁶`.
pub fn default_k_values() -> Vec<f64> {
    (1..=6).map(|e| 10f64.powi(e)).collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct TransportProblem {
    pub cost: DMatrix<f64>,
    pub mu0: ProbabilityMeasure,
    pub mu1: ProbabilityMeasure,
}

impl TransportProblem {
    pub fn new(cost: DMatrix<f64>, mu0: ProbabilityMeasure, mu1: ProbabilityMeasure) -> Result<Self> {
        check_dim(mu0.len(), cost.nrows())?;
        check_dim(mu1.len(), cost.ncols())?;
        if cost.iter().any(|c| !c.is_finite() || *c < 0.0) {
            return Err(Error::Precondition("transport costs must be finite and nonnegative".into()));
        }
        Ok(TransportProblem { cost, mu0, mu1 })
    }

    pub fn cost_of(&self, coupling: &DMatrix<f64>) -> f64 {
        self.cost.component_mul(coupling).sum()
    }
}

/// Exact plan of the problem with masses rounded to `1/denominator`.
#[derive(Debug, Clone, PartialEq)]
pub struct MkSolution {
    pub value: f64,
    pub coupling: DMatrix<f64>,
    /// Dual potentials with `u(x) + v(y) ≤ c(x,y)`, tight on the plan's support.
    pub u: Vec<f64>,
    pub v: Vec<f64>,
    pub dual_value: f64,
    /// Largest violation of dual feasibility or of tightness on the support.
    pub max_slack: f64,
    pub denominator: u64,
}

/// Integer masses summing to `denominator`, by largest-remainder rounding.
pub fn largest_remainder(weights: &[f64], denominator: u64) -> Vec<u64> {
    let total: f64 = weights.iter().sum();
    let scaled: Vec<f64> = weights.iter().map(|w| w / total * denominator as f64).collect();
    let mut out: Vec<u64> = scaled.iter().map(|s| s.floor() as u64).collect();
    let assigned: u64 = out.iter().sum();
    let mut order: Vec<usize> = (0..weights.len()).collect();
    // ties go to the lower index
    order.sort_by(|&a, &b| (scaled[b] - scaled[b].floor()).total_cmp(&(scaled[a] - scaled[a].floor())).then(a.cmp(&b)));
    for &i in order.iter().take(denominator.saturating_sub(assigned) as usize) {
        out[i] += 1;
    }
    out
}

pub fn mk_solve(problem: &TransportProblem) -> Result<MkSolution> {
    mk_solve_with_denominator(problem, DEFAULT_DENOMINATOR)
}

/// Successive shortest paths on the bipartite network `source → x → y → sink`.
pub fn mk_solve_with_denominator(problem: &TransportProblem, denominator: u64) -> Result<MkSolution> {
    if denominator == 0 {
        return Err(Error::Precondition("denominator must be positive".into()));
    }
    let (n0, n1) = problem.cost.shape();
    let mut supply = largest_remainder(problem.mu0.weights(), denominator);
    let mut demand = largest_remainder(problem.mu1.weights(), denominator);
    let cost = &problem.cost;
    let mut flow = vec![vec![0u64; n1]; n0];

    // nodes: rows 0..n0, columns n0..n0+n1
    loop {
        let sources: Vec<usize> = (0..n0).filter(|&x| supply[x] > 0).collect();
        if sources.is_empty() {
            break;
        }
        let (dist, pred) = residual_shortest_paths(cost, &flow, &sources);
        let target = (0..n1)
            .filter(|&y| demand[y] > 0 && dist[n0 + y].is_finite())
            .min_by(|&a, &b| dist[n0 + a].total_cmp(&dist[n0 + b]).then(a.cmp(&b)))
            .ok_or_else(|| Error::Consistency("no augmenting path in the transport network".into()))?;

        // walk back to a source collecting the bottleneck
        let mut path = Vec::new();
        let mut node = n0 + target;
        while let Some(prev) = pred[node] {
            path.push((prev, node));
            node = prev;
        }
        let origin = node;
        let mut amount = supply[origin].min(demand[target]);
        for &(a, b) in &path {
            if a >= n0 {
                // backward arc column → row cancels existing flow
                amount = amount.min(flow[b][a - n0]);
            }
        }
        for &(a, b) in &path {
            if a < n0 {
                flow[a][b - n0] += amount;
            } else {
                flow[b][a - n0] -= amount;
            }
        }
        supply[origin] -= amount;
        demand[target] -= amount;
    }

    let d = denominator as f64;
    let coupling = DMatrix::from_fn(n0, n1, |x, y| flow[x][y] as f64 / d);
    let value = problem.cost_of(&coupling);

    // duals from shortest distances in the final residual network, all nodes as roots
    let (dist, _) = residual_shortest_paths(cost, &flow, &(0..n0).collect::<Vec<_>>());
    let u: Vec<f64> = (0..n0).map(|x| -dist[x]).collect();
    let v: Vec<f64> = (0..n1).map(|y| dist[n0 + y]).collect();
    let mass0 = largest_remainder(problem.mu0.weights(), denominator);
    let mass1 = largest_remainder(problem.mu1.weights(), denominator);
    let dual_value = (0..n0).map(|x| u[x] * mass0[x] as f64 / d).sum::<f64>()
        + (0..n1).map(|y| v[y] * mass1[y] as f64 / d).sum::<f64>();
    let mut max_slack: f64 = 0.0;
    for x in 0..n0 {
        for y in 0..n1 {
            let reduced = cost[(x, y)] - u[x] - v[y];
            max_slack = max_slack.max(-reduced);
            if flow[x][y] > 0 {
                max_slack = max_slack.max(reduced.abs());
            }
        }
    }
    if max_slack > SLACK_TOLERANCE {
        return Err(Error::Consistency(format!("transport plan fails complementary slackness by {max_slack:e}")));
    }
    Ok(MkSolution { value, coupling, u, v, dual_value, max_slack, denominator })
}

/// Bellman–Ford (queue based) from a set of zero-distance roots. Forward arcs
/// `x → y` cost `c`, backward arcs `y → x` with positive flow cost `−c`.
fn residual_shortest_paths(cost: &DMatrix<f64>, flow: &[Vec<u64>], roots: &[usize]) -> (Vec<f64>, Vec<Option<usize>>) {
    let (n0, n1) = cost.shape();
    let total = n0 + n1;
    let mut dist = vec![f64::INFINITY; total];
    let mut pred = vec![None; total];
    let mut queued = vec![false; total];
    let mut queue = VecDeque::new();
    for &r in roots {
        dist[r] = 0.0;
        queued[r] = true;
        queue.push_back(r);
    }
    while let Some(a) = queue.pop_front() {
        queued[a] = false;
        let relax: Vec<(usize, f64)> = if a < n0 {
            (0..n1).map(|y| (n0 + y, cost[(a, y)])).collect()
        } else {
            let y = a - n0;
            (0..n0).filter(|&x| flow[x][y] > 0).map(|x| (x, -cost[(x, y)])).collect()
        };
        for (b, w) in relax {
            // strict improvement beyond round-off keeps the search finite
            let improves = !dist[b].is_finite() || dist[a] + w < dist[b] - 1e-12 * (1.0 + dist[b].abs());
            if improves {
                dist[b] = dist[a] + w;
                pred[b] = Some(a);
                if !queued[b] {
                    queued[b] = true;
                    queue.push_back(b);
                }
            }
        }
    }
    (dist, pred)
}

/// Monotone (north-west corner) coupling of two measures on a sorted 1-D grid.
pub fn monotone_coupling(mu0: &[f64], mu1: &[f64]) -> DMatrix<f64> {
    let mut plan = DMatrix::zeros(mu0.len(), mu1.len());
    let (mut a, mut b) = (mu0.to_vec(), mu1.to_vec());
    let (mut i, mut j) = (0, 0);
    while i < a.len() && j < b.len() {
        let m = a[i].min(b[j]);
        plan[(i, j)] += m;
        a[i] -= m;
        b[j] -= m;
        if a[i] <= b[j] {
            i += 1;
        } else {
            j += 1;
        }
    }
    plan
}

/// `W₂² / 2` on a sorted 1-D grid via the monotone coupling.
pub fn quadratic_cost_1d(grid: &[f64], mu0: &[f64], mu1: &[f64]) -> f64 {
    let plan = monotone_coupling(mu0, mu1);
    let mut acc = 0.0;
    for x in 0..grid.len() {
        for y in 0..grid.len() {
            let d = grid[x] - grid[y];
            acc += plan[(x, y)] * d * d / 2.0;
        }
    }
    acc
}

pub fn quadratic_cost_matrix(grid: &[f64]) -> DMatrix<f64> {
    DMatrix::from_fn(grid.len(), grid.len(), |x, y| (grid[x] - grid[y]).powi(2) / 2.0)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GammaSweepReport {
    pub k_values: Vec<f64>,
    pub normalized_values: Vec<f64>,
    #[serde(skip)]
    pub couplings: Vec<DMatrix<f64>>,
    pub mk_value: f64,
    /// `⟨c, π̂^k⟩ − mk_value` per `k`.
    pub mk_optimal_set_check: Vec<f64>,
    /// Entropic midpoints `μ^k_{1/2}`; Gaussian sweeps only.
    #[serde(skip)]
    pub midpoints: Vec<Vec<f64>>,
}

impl GammaSweepReport {
    pub fn distance_to_limit(&self) -> Vec<f64> {
        self.normalized_values.iter().map(|v| (v - self.mk_value).abs()).collect()
    }

    /// Whether the last normalized value is the closest to the transport value.
    pub fn last_is_closest(&self) -> bool {
        let d = self.distance_to_limit();
        match d.last() {
            Some(last) => d.iter().all(|v| *last <= *v),
            None => false,
        }
    }
}

fn check_k_values(k_values: &[f64]) -> Result<()> {
    if k_values.is_empty() {
        return Err(Error::Precondition("at least one k is required".into()));
    }
    if k_values.iter().any(|k| !(k.is_finite() && *k >= 2.0)) {
        return Err(Error::Precondition("every k must be finite and at least 2".into()));
    }
    if k_values.windows(2).any(|w| !(w[0] < w[1])) {
        return Err(Error::Precondition("k values must be strictly increasing".into()));
    }
    Ok(())
}

fn with_k(err: Error, k: f64) -> Error {
    match err {
        Error::NotConverged { iterations, residual } => {
            Error::Consistency(format!("solver did not converge at k = {k} ({iterations} iterations, residual {residual:e})"))
        }
        other => other,
    }
}

/// Sweep over slowed-down chains `L/k` with `α_k = log k` and graph-distance cost.
pub fn gamma_sweep_graph(
    chain: &ReversibleChain,
    mu0: &ProbabilityMeasure,
    mu1: &ProbabilityMeasure,
    k_values: &[f64],
    options: &SolveOptions,
) -> Result<GammaSweepReport> {
    check_k_values(k_values)?;
    let problem = TransportProblem::new(chain.graph().distance_matrix(), mu0.clone(), mu1.clone())?;
    let mk = mk_solve(&problem)?;
    let solutions: Vec<StaticSolution> = k_values
        .par_iter()
        .map(|&k| {
            let kernel = chain.slow_down(k)?.endpoint_coupling()?;
            solve(&kernel, mu0, mu1, options).map_err(|e| with_k(e, k))
        })
        .collect::<Result<_>>()?;
    Ok(assemble(k_values, solutions, |k| k.ln(), &problem, mk.value, Vec::new()))
}

fn assemble(
    k_values: &[f64],
    solutions: Vec<StaticSolution>,
    alpha: impl Fn(f64) -> f64,
    problem: &TransportProblem,
    mk_value: f64,
    midpoints: Vec<Vec<f64>>,
) -> GammaSweepReport {
    let normalized_values = k_values.iter().zip(&solutions).map(|(&k, s)| s.primal_value / alpha(k)).collect();
    let mk_optimal_set_check = solutions.iter().map(|s| problem.cost_of(&s.coupling) - mk_value).collect();
    GammaSweepReport {
        k_values: k_values.to_vec(),
        normalized_values,
        couplings: solutions.into_iter().map(|s| s.coupling).collect(),
        mk_value,
        mk_optimal_set_check,
        midpoints,
    }
}

/// Sweep over Gaussian grid kernels with `α_k = k` and cost `(x − y)² / 2`.
///
/// Each `k` is warm-started from the previous one, with `log g1` rescaled by
/// the ratio of the two `k`.
pub fn gamma_sweep_gaussian(
    grid: &[f64],
    base: &Measure,
    mu0: &ProbabilityMeasure,
    mu1: &ProbabilityMeasure,
    k_values: &[f64],
    options: &SolveOptions,
) -> Result<GammaSweepReport> {
    check_k_values(k_values)?;
    let problem = TransportProblem::new(quadratic_cost_matrix(grid), mu0.clone(), mu1.clone())?;
    let mk = mk_solve(&problem)?;
    let mut solutions: Vec<StaticSolution> = Vec::with_capacity(k_values.len());
    let mut midpoints = Vec::with_capacity(k_values.len());
    for (i, &k) in k_values.iter().enumerate() {
        let kernel = gaussian_grid_kernel(grid, k, base)?;
        let mut opts = options.clone();
        if let Some(prev) = solutions.last() {
            let ratio = k / k_values[i - 1];
            opts.initial_log_g1 =
                Some(prev.potentials.log_g1.iter().map(|v| if v.is_finite() { v * ratio } else { 0.0 }).collect());
        }
        let sol = solve(&kernel, mu0, mu1, &opts).map_err(|e| with_k(e, k))?;
        midpoints.push(gaussian_bridge_midpoint(grid, base, k, &sol.coupling));
        solutions.push(sol);
    }
    Ok(assemble(k_values, solutions, |k| k, &problem, mk.value, midpoints))
}

/// Time-1/2 marginal of the mixture of Gaussian bridges under `coupling`.
///
/// The bridge from `x` to `y` at time 1/2 is the grid law proportional to
/// `base(z) exp(−k [(z − x)² + (y − z)²])`.
pub fn gaussian_bridge_midpoint(grid: &[f64], base: &Measure, k: f64, coupling: &DMatrix<f64>) -> Vec<f64> {
    let n = grid.len();
    let mut out = vec![0.0; n];
    for x in 0..n {
        for y in 0..n {
            let w = coupling[(x, y)];
            if w == 0.0 {
                continue;
            }
            let logs: Vec<f64> = (0..n)
                .map(|z| base.get(z).ln() - k * ((grid[z] - grid[x]).powi(2) + (grid[y] - grid[z]).powi(2)))
                .collect();
            let top = logs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            let weights: Vec<f64> = logs.iter().map(|l| (l - top).exp()).collect();
            let total: f64 = weights.iter().sum();
            for z in 0..n {
                out[z] += w * weights[z] / total;
            }
        }
    }
    out
}

/// Displacement midpoint: the monotone coupling pushed to `(x + y)/2`, with
/// mass snapped to the nearest grid point and exact ties split evenly.
pub fn displacement_midpoint(grid: &[f64], mu0: &[f64], mu1: &[f64]) -> Vec<f64> {
    let plan = monotone_coupling(mu0, mu1);
    let n = grid.len();
    let mut out = vec![0.0; n];
    for x in 0..n {
        for y in 0..n {
            let w = plan[(x, y)];
            if w == 0.0 {
                continue;
            }
            let mid = 0.5 * (grid[x] + grid[y]);
            let dists: Vec<f64> = grid.iter().map(|g| (g - mid).abs()).collect();
            let best = dists.iter().copied().fold(f64::INFINITY, f64::min);
            let tol = 1e-12 * (1.0 + mid.abs());
            let nearest: Vec<usize> = (0..n).filter(|&z| dists[z] - best <= tol).collect();
            for &z in &nearest {
                out[z] += w / nearest.len() as f64;
            }
        }
    }
    out
}

/// TV distance between each stored entropic midpoint and the displacement midpoint.
pub fn entropic_midpoint_vs_displacement(
    report: &GammaSweepReport,
    grid: &[f64],
    mu0: &ProbabilityMeasure,
    mu1: &ProbabilityMeasure,
) -> Result<Vec<f64>> {
    if report.midpoints.len() != report.k_values.len() {
        return Err(Error::Precondition("the sweep did not record midpoints".into()));
    }
    let target = displacement_midpoint(grid, mu0.weights(), mu1.weights());
    report.midpoints.iter().map(|m| total_variation(m, &target)).collect()
}

/// Whether the last three entries are non-increasing (within `slack`).
pub fn last_three_non_increasing(values: &[f64], slack: f64) -> bool {
    if values.len() < 3 {
        return false;
    }
    values[values.len() - 3..].windows(2).all(|w| w[1] <= w[0] + slack)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::markov::simple_random_walk;

    fn pm(v: &[f64]) -> ProbabilityMeasure {
        ProbabilityMeasure::new(v.to_vec()).unwrap()
    }

    #[test]
    fn largest_remainder_is_exact() {
        assert_eq!(largest_remainder(&[1.0, 1.0, 1.0], 10), vec![4, 3, 3]);
        assert_eq!(largest_remainder(&[0.25, 0.75], 4), vec![1, 3]);
        assert_eq!(largest_remainder(&[0.2, 0.2, 0.6], 1_000_000).iter().sum::<u64>(), 1_000_000);
    }

    #[test]
    fn identical_marginals_cost_nothing() {
        let c = simple_random_walk(4, &[(0, 1), (1, 2), (2, 3)]).unwrap();
        let mu = pm(&[0.1, 0.2, 0.3, 0.4]);
        let p = TransportProblem::new(c.graph().distance_matrix(), mu.clone(), mu).unwrap();
        let s = mk_solve(&p).unwrap();
        assert_eq!(s.value, 0.0);
        assert!((s.value - s.dual_value).abs() < 1e-12);
    }

    #[test]
    fn dirac_to_dirac_costs_the_distance() {
        let c = simple_random_walk(4, &[(0, 1), (1, 2), (2, 3)]).unwrap();
        let p = TransportProblem::new(
            c.graph().distance_matrix(),
            ProbabilityMeasure::dirac(4, 0),
            ProbabilityMeasure::dirac(4, 3),
        )
        .unwrap();
        let s = mk_solve(&p).unwrap();
        assert_eq!(s.value, 3.0);
        assert!((s.dual_value - 3.0).abs() < 1e-12);
    }

    #[test]
    fn quadratic_plan_matches_monotone_rearrangement() {
        let grid: Vec<f64> = (0..6).map(|i| i as f64 / 5.0).collect();
        let mu0 = [0.3, 0.1, 0.2, 0.0, 0.25, 0.15];
        let mu1 = [0.05, 0.05, 0.4, 0.3, 0.1, 0.1];
        let p = TransportProblem::new(quadratic_cost_matrix(&grid), pm(&mu0), pm(&mu1)).unwrap();
        let s = mk_solve(&p).unwrap();
        assert!((s.value - quadratic_cost_1d(&grid, &mu0, &mu1)).abs() < 1e-12);
        assert!((s.value - s.dual_value).abs() < 1e-9);
    }

    #[test]
    fn displacement_midpoint_splits_ties() {
        let grid = [0.0, 0.25, 0.5, 0.75, 1.0];
        let m = displacement_midpoint(&grid, &[1.0, 0.0, 0.0, 0.0, 0.0], &[0.0, 0.0, 0.0, 0.0, 1.0]);
        assert_eq!(m, vec![0.0, 0.0, 1.0, 0.0, 0.0]);
        let m = displacement_midpoint(&grid, &[1.0, 0.0, 0.0, 0.0, 0.0], &[0.0, 1.0, 0.0, 0.0, 0.0]);
        assert_eq!(m, vec![0.5, 0.5, 0.0, 0.0, 0.0]);
    }

    #[test]
    fn k_values_are_validated() {
        assert!(check_k_values(&[10.0, 5.0]).is_err());
        assert!(check_k_values(&[1.0]).is_err());
        assert!(check_k_values(&default_k_values()).is_ok());
    }
}
