//! Reversible continuous-time random walks on finite graphs and the endpoint
//! kernels they induce on the unit time horizon.
//!
//! A chain is given by jump rates `J[x][y]` (jumps per unit time) and a
//! reversing measure `m` with `m(x) J[x][y] = m(y) J[y][x]`. The generator is
//! `Lu(x) = Σ_y (u(y) − u(x)) J[x][y]` and transition kernels `e^{tL}` are
//! computed by uniformization, which keeps every entry nonnegative and every
//! row stochastic by construction.

use std::collections::VecDeque;

use nalgebra::{DMatrix, DVector};

use crate::error::{check_dim, Error, Result};
use crate::measure::Measure;
use crate::numeric::logsumexp;

/// Relative tolerance of the detailed-balance check.
pub const DETAILED_BALANCE_TOLERANCE: f64 = 1e-12;

/// Neglected Poisson tail mass in uniformization.
pub const UNIFORMIZATION_TAIL: f64 = 1e-14;

/// Largest `λt` handled by a single Poisson series before splitting the time step.
const MAX_POISSON_MEAN: f64 = 30.0;

/// Jump rates on a connected finite graph.
#[derive(Debug, Clone, PartialEq)]
pub struct RateGraph {
    rates: DMatrix<f64>,
    neighbors: Vec<Vec<usize>>,
}

impl RateGraph {
    /// Build from a dense rate matrix. Off-diagonal entries must be finite and
    /// nonnegative, the diagonal must be zero, and the symmetrized adjacency
    /// must be connected.
    pub fn new(rates: DMatrix<f64>) -> Result<Self> {
        let n = rates.nrows();
        if n == 0 || rates.ncols() != n {
            return Err(Error::Construction(format!(
                "rate matrix must be square and nonempty, got {}x{}",
                rates.nrows(),
                rates.ncols()
            )));
        }
        for x in 0..n {
            for y in 0..n {
                let j = rates[(x, y)];
                if x == y && j != 0.0 {
                    return Err(Error::Construction(format!("nonzero self-rate at state {x}")));
                }
                if !(j.is_finite() && j >= 0.0) {
                    return Err(Error::Construction(format!("invalid rate {j} from {x} to {y}")));
                }
            }
        }
        let neighbors: Vec<Vec<usize>> = (0..n)
            .map(|x| (0..n).filter(|&y| y != x && (rates[(x, y)] > 0.0 || rates[(y, x)] > 0.0)).collect())
            .collect();
        if n > 1 {
            if let Some(isolated) = neighbors.iter().position(|nb| nb.is_empty()) {
                return Err(Error::Construction(format!("state {isolated} has no neighbor")));
            }
        }
        let graph = RateGraph { rates, neighbors };
        let reached = graph.bfs(0).iter().filter(|d| d.is_some()).count();
        if reached != n {
            return Err(Error::Construction(format!(
                "graph is disconnected: only {reached} of {n} states reachable from state 0"
            )));
        }
        Ok(graph)
    }

    pub fn len(&self) -> usize {
        self.rates.nrows()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn rates(&self) -> &DMatrix<f64> {
        &self.rates
    }

    pub fn rate(&self, x: usize, y: usize) -> f64 {
        self.rates[(x, y)]
    }

    /// Neighbors in the symmetrized adjacency.
    pub fn neighbors(&self, x: usize) -> &[usize] {
        &self.neighbors[x]
    }

    /// Total jump frequency `Σ_y J[x][y]` out of `x`.
    pub fn exit_rate(&self, x: usize) -> f64 {
        self.rates.row(x).sum()
    }

    fn bfs(&self, source: usize) -> Vec<Option<usize>> {
        let mut dist = vec![None; self.len()];
        dist[source] = Some(0);
        let mut queue = VecDeque::from([source]);
        while let Some(x) = queue.pop_front() {
            let d = dist[x].unwrap();
            for &y in &self.neighbors[x] {
                if dist[y].is_none() {
                    dist[y] = Some(d + 1);
                    queue.push_back(y);
                }
            }
        }
        dist
    }

    /// Shortest hop count between two states.
    pub fn graph_distance(&self, x: usize, y: usize) -> usize {
        self.bfs(x)[y].expect("rate graphs are connected")
    }

    /// All-pairs hop distances.
    pub fn distance_matrix(&self) -> DMatrix<f64> {
        let n = self.len();
        let mut d = DMatrix::zeros(n, n);
        for x in 0..n {
            for (y, dist) in self.bfs(x).into_iter().enumerate() {
                d[(x, y)] = dist.expect("rate graphs are connected") as f64;
            }
        }
        d
    }
}

/// A continuous-time Markov chain with a reversing measure.
#[derive(Debug, Clone, PartialEq)]
pub struct ReversibleChain {
    graph: RateGraph,
    m: Measure,
    generator: DMatrix<f64>,
}

impl ReversibleChain {
    /// Pair rates with a reversing measure, checking positivity of `m` and
    /// detailed balance.
    pub fn new(graph: RateGraph, m: Measure) -> Result<Self> {
        check_dim(graph.len(), m.len())?;
        if let Some(x) = (0..m.len()).find(|&x| m.get(x) <= 0.0) {
            return Err(Error::Construction(format!("reversing measure vanishes at state {x}")));
        }
        let n = graph.len();
        for x in 0..n {
            for y in (x + 1)..n {
                let fwd = m.get(x) * graph.rate(x, y);
                let bwd = m.get(y) * graph.rate(y, x);
                if (fwd - bwd).abs() > DETAILED_BALANCE_TOLERANCE * fwd.max(bwd) {
                    return Err(Error::Construction(format!(
                        "detailed balance fails on edge ({x}, {y}): m(x)J[x][y] = {fwd}, m(y)J[y][x] = {bwd}"
                    )));
                }
            }
        }
        let mut generator = graph.rates.clone();
        for x in 0..n {
            generator[(x, x)] = -graph.exit_rate(x);
        }
        Ok(ReversibleChain { graph, m, generator })
    }

    /// Symmetric conductances `c(x,y) = m(x) J[x][y]` and a positive measure `m`.
    pub fn from_conductances(m: Measure, edges: &[(usize, usize, f64)]) -> Result<Self> {
        let n = m.len();
        let mut rates = DMatrix::zeros(n, n);
        for &(x, y, c) in edges {
            if x >= n || y >= n || x == y {
                return Err(Error::Construction(format!("invalid edge ({x}, {y})")));
            }
            if !(c.is_finite() && c > 0.0) {
                return Err(Error::Construction(format!("invalid conductance {c} on edge ({x}, {y})")));
            }
            if m.get(x) <= 0.0 || m.get(y) <= 0.0 {
                return Err(Error::Construction("reversing measure must be positive".into()));
            }
            rates[(x, y)] = c / m.get(x);
            rates[(y, x)] = c / m.get(y);
        }
        ReversibleChain::new(RateGraph::new(rates)?, m)
    }

    pub fn graph(&self) -> &RateGraph {
        &self.graph
    }

    /// Reversing measure.
    pub fn m(&self) -> &Measure {
        &self.m
    }

    pub fn generator(&self) -> &DMatrix<f64> {
        &self.generator
    }

    pub fn len(&self) -> usize {
        self.graph.len()
    }

    pub fn is_empty(&self) -> bool {
        self.graph.is_empty()
    }

    /// `Lu`.
    pub fn apply_generator(&self, u: &[f64]) -> Vec<f64> {
        let n = self.len();
        (0..n)
            .map(|x| self.graph.neighbors(x).iter().map(|&y| (u[y] - u[x]) * self.graph.rate(x, y)).sum())
            .collect()
    }

    /// Largest detailed-balance residual `|m(x)J[x][y] − m(y)J[y][x]|`.
    pub fn detailed_balance_residual(&self) -> f64 {
        let n = self.len();
        let mut worst: f64 = 0.0;
        for x in 0..n {
            for y in 0..n {
                let r = (self.m.get(x) * self.graph.rate(x, y) - self.m.get(y) * self.graph.rate(y, x)).abs();
                worst = worst.max(r);
            }
        }
        worst
    }

    fn uniformization_rate(&self) -> f64 {
        (0..self.len()).map(|x| -self.generator[(x, x)]).fold(0.0, f64::max)
    }

    /// `e^{tL}` by uniformization.
    pub fn transition_kernel(&self, t: f64) -> Result<DMatrix<f64>> {
        check_time(t)?;
        let n = self.len();
        let lambda = self.uniformization_rate();
        if t == 0.0 || lambda == 0.0 {
            return Ok(DMatrix::identity(n, n));
        }
        let (pieces, step) = split_time(lambda, t);
        let jump = self.jump_matrix(lambda);
        let mut one_step = DMatrix::zeros(n, n);
        let mut power = DMatrix::identity(n, n);
        for (i, w) in poisson_weights(lambda * step, n + 2).into_iter().enumerate() {
            if i > 0 {
                power = &power * &jump;
            }
            one_step += &power * w;
        }
        let mut kernel = one_step.clone();
        for _ in 1..pieces {
            kernel = &kernel * &one_step;
        }
        Ok(kernel)
    }

    /// `e^{tL} v` without forming the matrix.
    pub fn apply_kernel(&self, t: f64, v: &[f64]) -> Result<Vec<f64>> {
        check_time(t)?;
        check_dim(self.len(), v.len())?;
        let lambda = self.uniformization_rate();
        if t == 0.0 || lambda == 0.0 {
            return Ok(v.to_vec());
        }
        let (pieces, step) = split_time(lambda, t);
        let jump = self.jump_matrix(lambda);
        let weights = poisson_weights(lambda * step, v.len() + 2);
        let mut current = DVector::from_column_slice(v);
        for _ in 0..pieces {
            let mut acc = DVector::zeros(v.len());
            let mut term = current.clone();
            for (i, w) in weights.iter().enumerate() {
                if i > 0 {
                    term = &jump * &term;
                }
                acc += &term * *w;
            }
            current = acc;
        }
        Ok(current.iter().copied().collect())
    }

    /// `I + L/λ`, a stochastic matrix.
    fn jump_matrix(&self, lambda: f64) -> DMatrix<f64> {
        let n = self.len();
        let mut p = &self.generator / lambda;
        for x in 0..n {
            // diagonal is 1 − exit(x)/λ ≥ 0; clamp the round-off at the maximizer
            p[(x, x)] = (1.0 + p[(x, x)]).max(0.0);
        }
        p
    }

    /// The joint endpoint law `R01[x][y] = m(x) p_1(x, y)` on the unit horizon.
    pub fn endpoint_coupling(&self) -> Result<EndpointKernel> {
        let p1 = self.transition_kernel(1.0)?;
        let n = self.len();
        let matrix = DMatrix::from_fn(n, n, |x, y| self.m.get(x) * p1[(x, y)]);
        let log_matrix = matrix.map(f64::ln);
        Ok(EndpointKernel {
            matrix,
            log_matrix,
            row_base: self.m.clone(),
            col_base: self.m.clone(),
        })
    }

    /// Slowed-down chain with generator `L/k`; the reversing measure is unchanged.
    pub fn slow_down(&self, k: f64) -> Result<ReversibleChain> {
        if !(k.is_finite() && k > 0.0) {
            return Err(Error::Precondition(format!("slow-down factor must be positive, got {k}")));
        }
        let rates = self.graph.rates.map(|j| j / k);
        ReversibleChain::new(RateGraph::new(rates)?, self.m.clone())
    }

    /// Positivity of `p_h` at `h = 1/2`.
    pub fn check_regenerative(&self) -> Result<RegenerativeReport> {
        self.check_regenerative_at(0.5)
    }

    pub fn check_regenerative_at(&self, h: f64) -> Result<RegenerativeReport> {
        if !(h > 0.0) {
            return Err(Error::Precondition(format!("regeneration time must be positive, got {h}")));
        }
        let p = self.transition_kernel(h)?;
        let n = self.len();
        let mut zero_entries = Vec::new();
        let mut min_entry = f64::INFINITY;
        for x in 0..n {
            for y in 0..n {
                min_entry = min_entry.min(p[(x, y)]);
                if p[(x, y)] <= 0.0 {
                    zero_entries.push((x, y));
                }
            }
        }
        Ok(RegenerativeReport { regenerative: zero_entries.is_empty(), zero_entries, min_entry })
    }
}

/// Continuous-time simple random walk: `J[x][y] = 1/n_x` on neighbors, `m(x) = n_x`.
pub fn simple_random_walk(n: usize, edges: &[(usize, usize)]) -> Result<ReversibleChain> {
    let mut adjacency = vec![vec![false; n]; n];
    for &(x, y) in edges {
        if x >= n || y >= n {
            return Err(Error::Construction(format!("edge ({x}, {y}) out of range for {n} states")));
        }
        if x == y {
            return Err(Error::Construction(format!("self-loop at state {x}")));
        }
        adjacency[x][y] = true;
        adjacency[y][x] = true;
    }
    let degree: Vec<usize> = adjacency.iter().map(|row| row.iter().filter(|&&a| a).count()).collect();
    if let Some(x) = degree.iter().position(|&d| d == 0) {
        return Err(Error::Construction(format!("state {x} is isolated")));
    }
    let rates = DMatrix::from_fn(n, n, |x, y| if adjacency[x][y] { 1.0 / degree[x] as f64 } else { 0.0 });
    let m = Measure::new(degree.iter().map(|&d| d as f64).collect())?;
    ReversibleChain::new(RateGraph::new(rates)?, m)
}

#[derive(Debug, Clone, PartialEq)]
pub struct RegenerativeReport {
    pub regenerative: bool,
    pub zero_entries: Vec<(usize, usize)>,
    pub min_entry: f64,
}

/// The joint law of `(X_0, X_1)` under the reference, kept in linear and
/// log domain. Log entries stay meaningful when linear ones underflow.
#[derive(Debug, Clone, PartialEq)]
pub struct EndpointKernel {
    matrix: DMatrix<f64>,
    log_matrix: DMatrix<f64>,
    row_base: Measure,
    col_base: Measure,
}

impl EndpointKernel {
    /// Build from log entries; the linear matrix and base measures are derived.
    pub fn from_log_matrix(log_matrix: DMatrix<f64>) -> Result<Self> {
        if log_matrix.iter().any(|v| v.is_nan() || *v == f64::INFINITY) {
            return Err(Error::Construction("log kernel entries must be < +inf and not NaN".into()));
        }
        let (r, c) = log_matrix.shape();
        let row_base = Measure::new((0..r).map(|x| logsumexp(log_matrix.row(x).iter().copied()).exp()).collect())?;
        let col_base =
            Measure::new((0..c).map(|y| logsumexp(log_matrix.column(y).iter().copied()).exp()).collect())?;
        Ok(EndpointKernel { matrix: log_matrix.map(f64::exp), log_matrix, row_base, col_base })
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.matrix
    }

    pub fn log_matrix(&self) -> &DMatrix<f64> {
        &self.log_matrix
    }

    /// Time-0 marginal `R_0`.
    pub fn row_base(&self) -> &Measure {
        &self.row_base
    }

    /// Time-1 marginal `R_1`.
    pub fn col_base(&self) -> &Measure {
        &self.col_base
    }

    pub fn rows(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn cols(&self) -> usize {
        self.matrix.ncols()
    }

    pub fn time_horizon(&self) -> f64 {
        1.0
    }

    /// `max |R01 − R01ᵀ| / max R01`.
    pub fn symmetry_residual(&self) -> f64 {
        let scale = self.matrix.amax();
        (&self.matrix - self.matrix.transpose()).amax() / scale
    }
}

/// `R01[x][y] = base(x) base(y) exp(−k (x − y)² / 2)` on a strictly increasing 1-D grid.
pub fn gaussian_grid_kernel(grid: &[f64], k: f64, base: &Measure) -> Result<EndpointKernel> {
    check_dim(grid.len(), base.len())?;
    if grid.windows(2).any(|w| !(w[0] < w[1])) {
        return Err(Error::Precondition("grid must be strictly increasing".into()));
    }
    if !(k.is_finite() && k >= 0.0) {
        return Err(Error::Precondition(format!("speed k must be nonnegative, got {k}")));
    }
    if !base.has_full_support() {
        return Err(Error::Precondition("grid base measure must be positive".into()));
    }
    let n = grid.len();
    let log_base: Vec<f64> = base.weights().iter().map(|w| w.ln()).collect();
    let log_matrix = DMatrix::from_fn(n, n, |x, y| {
        let d = grid[x] - grid[y];
        log_base[x] + log_base[y] - k * d * d / 2.0
    });
    EndpointKernel::from_log_matrix(log_matrix)
}

fn check_time(t: f64) -> Result<()> {
    if t.is_finite() && t >= 0.0 {
        Ok(())
    } else {
        Err(Error::Precondition(format!("time must be finite and nonnegative, got {t}")))
    }
}

/// Number of equal pieces and their length so that `λ · step ≤ MAX_POISSON_MEAN`.
fn split_time(lambda: f64, t: f64) -> (usize, f64) {
    let pieces = ((lambda * t) / MAX_POISSON_MEAN).ceil().max(1.0) as usize;
    (pieces, t / pieces as f64)
}

/// Poisson(μ) weights `w_0, …, w_N` with neglected tail below [`UNIFORMIZATION_TAIL`].
/// Poisson weights `w_0, …, w_N` with tail below [`UNIFORMIZATION_TAIL`] and
/// `N ≥ min_terms`, so that entries reached only after many jumps keep their
/// leading order even when the absolute tail bound is met early.
fn poisson_weights(mean: f64, min_terms: usize) -> Vec<f64> {
    let mut weights = vec![(-mean).exp()];
    let mut n = 0usize;
    loop {
        let next = weights[n] * mean / (n + 1) as f64;
        // tail Σ_{j>n} w_j ≤ w_{n+1} / (1 − μ/(n+2)) once n + 2 > μ
        let ratio = mean / (n + 2) as f64;
        if n >= min_terms && ratio < 1.0 && next / (1.0 - ratio) < UNIFORMIZATION_TAIL {
            break;
        }
        weights.push(next);
        n += 1;
    }
    weights
}

#[cfg(test)]
mod tests {
    use super::*;

    fn path3() -> ReversibleChain {
        simple_random_walk(3, &[(0, 1), (1, 2)]).unwrap()
    }

    fn two_state() -> ReversibleChain {
        let rates = DMatrix::from_row_slice(2, 2, &[0.0, 1.0, 1.0, 0.0]);
        ReversibleChain::new(RateGraph::new(rates).unwrap(), Measure::counting(2)).unwrap()
    }

    #[test]
    fn path_graph_simple_walk() {
        let c = path3();
        assert_eq!(c.m().weights(), &[1.0, 2.0, 1.0]);
        assert_eq!(c.graph().rate(0, 1), 1.0);
        assert_eq!(c.graph().rate(1, 0), 0.5);
        assert_eq!(c.graph().rate(1, 2), 0.5);
        assert_eq!(c.graph().rate(2, 1), 1.0);
        assert_eq!(c.detailed_balance_residual(), 0.0);
    }

    #[test]
    fn triangle_and_square_are_balanced() {
        let tri = simple_random_walk(3, &[(0, 1), (1, 2), (2, 0)]).unwrap();
        assert_eq!(tri.m().weights(), &[2.0, 2.0, 2.0]);
        assert!(tri.graph().rates().iter().enumerate().all(|(i, &j)| i % 4 == 0 || j == 0.5));
        let sq = simple_random_walk(4, &[(0, 1), (1, 2), (2, 3), (3, 0)]).unwrap();
        assert_eq!(sq.detailed_balance_residual(), 0.0);
    }

    #[test]
    fn construction_errors() {
        assert!(simple_random_walk(3, &[(0, 1)]).is_err());
        assert!(simple_random_walk(4, &[(0, 1), (2, 3)]).is_err());
        let rates = DMatrix::from_row_slice(2, 2, &[0.0, 1.0, 1.0, 0.0]);
        let bad_m = Measure::new(vec![1.0, 2.0]).unwrap();
        assert!(ReversibleChain::new(RateGraph::new(rates).unwrap(), bad_m).is_err());
    }

    #[test]
    fn generator_rows_sum_to_zero_exactly() {
        let c = path3();
        for x in 0..3 {
            assert_eq!(c.generator().row(x).sum(), 0.0);
        }
    }

    #[test]
    fn kernel_at_zero_is_identity() {
        assert_eq!(path3().transition_kernel(0.0).unwrap(), DMatrix::identity(3, 3));
    }

    #[test]
    fn two_state_kernel_matches_eigendecomposition() {
        // eigenvalues {0, −2}: p_t(a,a) = (1 + e^{−2t})/2
        let c = two_state();
        for &t in &[0.1, 0.5, 1.0, 3.7, 40.0] {
            let p = c.transition_kernel(t).unwrap();
            let expected = 0.5 * (1.0 + (-2.0 * t).exp());
            assert!((p[(0, 0)] - expected).abs() < 1e-13, "t={t}: {} vs {expected}", p[(0, 0)]);
            assert!((p[(0, 1)] - (1.0 - expected)).abs() < 1e-13);
        }
    }

    #[test]
    fn negative_time_is_rejected() {
        assert!(matches!(path3().transition_kernel(-0.1), Err(Error::Precondition(_))));
    }

    #[test]
    fn apply_kernel_agrees_with_matrix() {
        let c = path3();
        let v = [0.3, -1.0, 2.5];
        let p = c.transition_kernel(0.7).unwrap();
        let pv = c.apply_kernel(0.7, &v).unwrap();
        for x in 0..3 {
            let direct: f64 = (0..3).map(|y| p[(x, y)] * v[y]).sum();
            assert!((direct - pv[x]).abs() < 1e-14);
        }
    }

    #[test]
    fn two_state_endpoint_coupling() {
        let r = two_state().endpoint_coupling().unwrap();
        let expected = 0.5 * (1.0 + (-2.0f64).exp());
        assert!((r.matrix()[(0, 0)] - expected).abs() < 1e-13);
        assert!(r.symmetry_residual() < 1e-12);
    }

    #[test]
    fn triangle_endpoint_rows_sum_to_m() {
        let tri = simple_random_walk(3, &[(0, 1), (1, 2), (2, 0)]).unwrap();
        let r = tri.endpoint_coupling().unwrap();
        for x in 0..3 {
            assert!((r.matrix().row(x).sum() - 2.0).abs() < 1e-12);
        }
        assert_eq!(r.row_base().weights(), tri.m().weights());
    }

    #[test]
    fn gaussian_kernel_values() {
        let base = Measure::counting(2);
        let r = gaussian_grid_kernel(&[0.0, 1.0], 2.0, &base).unwrap();
        assert!((r.matrix()[(0, 1)] - (-1.0f64).exp()).abs() < 1e-15);
        assert_eq!(r.log_matrix()[(0, 1)], -1.0);
        let flat = gaussian_grid_kernel(&[0.0, 1.0], 0.0, &Measure::new(vec![2.0, 3.0]).unwrap()).unwrap();
        assert!((flat.matrix()[(0, 1)] - 6.0).abs() < 1e-14);
        let diag = gaussian_grid_kernel(&[0.0, 1.0], 1e6, &Measure::new(vec![2.0, 3.0]).unwrap()).unwrap();
        assert_eq!(diag.log_matrix()[(1, 1)], 3f64.ln() + 3f64.ln());
        assert_eq!(diag.matrix()[(0, 1)], 0.0);
        assert!(diag.log_matrix()[(0, 1)].is_finite());
    }

    #[test]
    fn gaussian_kernel_rejects_unsorted_grid() {
        assert!(gaussian_grid_kernel(&[0.0, 0.0], 1.0, &Measure::counting(2)).is_err());
    }

    #[test]
    fn slow_down_halves_rates() {
        let c = path3();
        assert_eq!(c.slow_down(1.0).unwrap(), c);
        let s = c.slow_down(2.0).unwrap();
        assert_eq!(s.graph().rate(1, 0), 0.25);
        assert_eq!(s.m(), c.m());
        assert!(c.slow_down(0.0).is_err());
        assert!(c.slow_down(-1.0).is_err());
    }

    #[test]
    fn graph_distances() {
        let c5 = simple_random_walk(5, &[(0, 1), (1, 2), (2, 3), (3, 4), (4, 0)]).unwrap();
        assert_eq!(c5.graph().graph_distance(0, 0), 0);
        assert_eq!(c5.graph().graph_distance(0, 2), 2);
        let p4 = simple_random_walk(4, &[(0, 1), (1, 2), (2, 3)]).unwrap();
        assert_eq!(p4.graph().graph_distance(0, 3), 3);
    }

    #[test]
    fn regenerative_even_at_tiny_times() {
        let tri = simple_random_walk(3, &[(0, 1), (1, 2), (2, 0)]).unwrap();
        assert!(tri.check_regenerative().unwrap().regenerative);
        let rep = tri.check_regenerative_at(1e-6).unwrap();
        assert!(rep.regenerative);
        assert!(rep.min_entry > 0.0 && rep.min_entry < 1e-6);
    }

    #[test]
    fn poisson_tail_is_bounded() {
        for &mu in &[1e-6, 0.5, 3.0, 29.9] {
            let w = poisson_weights(mu, 0);
            assert!((1.0 - w.iter().sum::<f64>()).abs() < 1e-13, "mu={mu}");
        }
    }
}
