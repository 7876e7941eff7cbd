//! Entropic interpolation between two marginals along a reversible chain.
//!
//! Given converged potentials `(f0, g1)` for the endpoint kernel of a chain,
//! the bridge has time marginals `μ_t = f_t g_t m` with `f_t = e^{tL} f0` and
//! `g_t = e^{(1−t)L} g1`. This module builds that path on a uniform time grid
//! and evaluates the identities it satisfies: the bridge-mixture
//! disintegration, the three-time Markov factorization, the Hamilton–Jacobi
//! equations for `ψ = log g` and `φ = log f`, the current equation, the action
//! identity, and the second derivative of `t ↦ H(μ_t|m)`.
//!
//! Quantities on zero-mass states are stored as `None`.

use nalgebra::DMatrix;
use rayon::prelude::*;

use crate::entropy::relative_entropy_weights;
use crate::error::{check_dim, Error, Result};
use crate::markov::{EndpointKernel, ReversibleChain};
use crate::measure::{Measure, ProbabilityMeasure};
use crate::numeric::{theta, theta_star};
use crate::schrodinger::{BridgePotentials, StaticSolution};

/// Largest tolerated `|Σ μ_t − 1|` before the path is rejected.
pub const NORMALIZATION_ERROR: f64 = 1e-8;

/// Time marginals and potentials on the grid `t_i = i / T`, `i = 0..=T`.
#[derive(Debug, Clone, PartialEq)]
pub struct InterpolationPath {
    pub times: Vec<f64>,
    pub mu: Vec<Vec<f64>>,
    pub f: Vec<Vec<f64>>,
    pub g: Vec<Vec<f64>>,
    pub phi: Vec<Vec<Option<f64>>>,
    pub psi: Vec<Vec<Option<f64>>>,
    /// `max_t |Σ_x μ_t(x) − 1|`, before any renormalization.
    pub normalization_defect: f64,
}

impl InterpolationPath {
    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn step(&self) -> f64 {
        self.times[1] - self.times[0]
    }

    /// Index of the grid time closest to `t`.
    pub fn nearest_index(&self, t: f64) -> usize {
        let n = self.len() - 1;
        ((t * n as f64).round() as usize).min(n)
    }

    pub fn marginal(&self, i: usize) -> Result<ProbabilityMeasure> {
        ProbabilityMeasure::from_unnormalized(self.mu[i].clone())
    }

    /// `h(t_i) = H(μ_{t_i} | m)`.
    pub fn entropy_profile(&self, m: &Measure) -> Result<Vec<f64>> {
        self.mu
            .iter()
            .map(|mu| Ok(relative_entropy_weights(mu, m.weights())?.expect_finite("entropy along a bridge")))
            .collect()
    }
}

fn uniform_grid(grid_size: usize) -> Result<Vec<f64>> {
    if grid_size < 2 {
        return Err(Error::Precondition(format!("grid size must be at least 2, got {grid_size}")));
    }
    Ok((0..=grid_size).map(|i| i as f64 / grid_size as f64).collect())
}

fn log_or_absent(v: &[f64]) -> Vec<Option<f64>> {
    v.iter().map(|&x| if x > 0.0 { Some(x.ln()) } else { None }).collect()
}

/// Build the path for `grid_size` uniform time steps.
pub fn build_path(chain: &ReversibleChain, potentials: &BridgePotentials, grid_size: usize) -> Result<InterpolationPath> {
    check_dim(chain.len(), potentials.f0.len())?;
    check_dim(chain.len(), potentials.g1.len())?;
    let times = uniform_grid(grid_size)?;
    let m = chain.m().weights();

    let columns: Vec<(Vec<f64>, Vec<f64>)> = times
        .par_iter()
        .map(|&t| {
            let f = chain.apply_kernel(t, &potentials.f0)?;
            let g = chain.apply_kernel(1.0 - t, &potentials.g1)?;
            Ok((f, g))
        })
        .collect::<Result<_>>()?;

    let mut path = InterpolationPath {
        times,
        mu: Vec::with_capacity(columns.len()),
        f: Vec::with_capacity(columns.len()),
        g: Vec::with_capacity(columns.len()),
        phi: Vec::with_capacity(columns.len()),
        psi: Vec::with_capacity(columns.len()),
        normalization_defect: 0.0,
    };
    for (f, g) in columns {
        let mu: Vec<f64> = (0..m.len()).map(|x| f[x] * g[x] * m[x]).collect();
        let defect = (mu.iter().sum::<f64>() - 1.0).abs();
        path.normalization_defect = path.normalization_defect.max(defect);
        path.phi.push(log_or_absent(&f));
        path.psi.push(log_or_absent(&g));
        path.mu.push(mu);
        path.f.push(f);
        path.g.push(g);
    }
    if path.normalization_defect > NORMALIZATION_ERROR {
        return Err(Error::Consistency(format!(
            "time marginals lose normalization (defect {:e}); the potentials do not solve the Schrödinger system for this chain",
            path.normalization_defect
        )));
    }
    Ok(path)
}

/// `max_{t,z} |μ_t(z) − Σ_{x,y} π[x][y] p_t(x,z) p_{1−t}(z,y) / p_1(x,y)|`.
pub fn verify_disintegration(path: &InterpolationPath, chain: &ReversibleChain, coupling: &DMatrix<f64>) -> Result<f64> {
    let n = chain.len();
    check_dim(n, coupling.nrows())?;
    let p1 = chain.transition_kernel(1.0)?;
    check_bridge_support(coupling, &p1)?;
    let residuals: Vec<f64> = path
        .times
        .par_iter()
        .zip(path.mu.par_iter())
        .map(|(&t, mu)| {
            let mixture = bridge_mixture_marginal(chain, coupling, &p1, t)?;
            Ok(mixture.iter().zip(mu).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max))
        })
        .collect::<Result<_>>()?;
    Ok(residuals.into_iter().fold(0.0, f64::max))
}

fn check_bridge_support(coupling: &DMatrix<f64>, p1: &DMatrix<f64>) -> Result<()> {
    for x in 0..coupling.nrows() {
        for y in 0..coupling.ncols() {
            if coupling[(x, y)] > 0.0 && p1[(x, y)] <= 0.0 {
                return Err(Error::Structural(format!("coupling charges ({x}, {y}) where p_1 vanishes")));
            }
        }
    }
    Ok(())
}

/// Time-`t` marginal of `∫ R^{xy} π(dxdy)` by the Markov property.
pub fn bridge_mixture_marginal(
    chain: &ReversibleChain,
    coupling: &DMatrix<f64>,
    p1: &DMatrix<f64>,
    t: f64,
) -> Result<Vec<f64>> {
    let n = chain.len();
    let pt = chain.transition_kernel(t)?;
    let ps = chain.transition_kernel(1.0 - t)?;
    let mut out = vec![0.0; n];
    for x in 0..n {
        for y in 0..n {
            let w = coupling[(x, y)];
            if w == 0.0 {
                continue;
            }
            let w = w / p1[(x, y)];
            for (z, o) in out.iter_mut().enumerate() {
                *o += w * pt[(x, z)] * ps[(z, y)];
            }
        }
    }
    Ok(out)
}

/// Three-time factorization residual at each interior grid time, maximized.
///
/// For `J(x,z,y) = π[x][y] p_t(x,z) p_{1−t}(z,y) / p_1(x,y)` the law of
/// `(X_0, X_t, X_1)` is Markov iff `J = P(X_0=x|X_t=z) μ_t(z) P(X_1=y|X_t=z)`.
pub fn verify_markov_factorization(
    path: &InterpolationPath,
    chain: &ReversibleChain,
    coupling: &DMatrix<f64>,
) -> Result<f64> {
    let interior = &path.times[1..path.len() - 1];
    let residuals: Vec<f64> = interior
        .par_iter()
        .map(|&t| markov_factorization_residual(chain, coupling, t))
        .collect::<Result<_>>()?;
    Ok(residuals.into_iter().fold(0.0, f64::max))
}

pub fn markov_factorization_residual(chain: &ReversibleChain, coupling: &DMatrix<f64>, t: f64) -> Result<f64> {
    let n = chain.len();
    check_dim(n, coupling.nrows())?;
    check_dim(n, coupling.ncols())?;
    let p1 = chain.transition_kernel(1.0)?;
    check_bridge_support(coupling, &p1)?;
    let pt = chain.transition_kernel(t)?;
    let ps = chain.transition_kernel(1.0 - t)?;
    let mut worst: f64 = 0.0;
    for z in 0..n {
        let joint = DMatrix::from_fn(n, n, |x, y| {
            if coupling[(x, y)] == 0.0 {
                0.0
            } else {
                coupling[(x, y)] * pt[(x, z)] * ps[(z, y)] / p1[(x, y)]
            }
        });
        let mass = joint.sum();
        if mass == 0.0 {
            continue;
        }
        for x in 0..n {
            let past = joint.row(x).sum() / mass;
            for y in 0..n {
                let future = joint.column(y).sum() / mass;
                worst = worst.max((joint[(x, y)] - past * mass * future).abs());
            }
        }
    }
    Ok(worst)
}

/// Forward and backward jump intensities at each grid time. Rows of states
/// outside `supp(μ_t)` are zero and flagged in `row_support`.
#[derive(Debug, Clone, PartialEq)]
pub struct JumpField {
    pub forward: Vec<DMatrix<f64>>,
    pub backward: Vec<DMatrix<f64>>,
    pub row_support: Vec<Vec<bool>>,
}

pub fn jump_intensities(path: &InterpolationPath, chain: &ReversibleChain) -> Result<JumpField> {
    let n = chain.len();
    let rates = chain.graph().rates();
    let mut field = JumpField { forward: Vec::new(), backward: Vec::new(), row_support: Vec::new() };
    for i in 0..path.len() {
        let (f, g, mu) = (&path.f[i], &path.g[i], &path.mu[i]);
        let support: Vec<bool> = mu.iter().map(|&v| v > 0.0).collect();
        let mut fwd = DMatrix::zeros(n, n);
        let mut bwd = DMatrix::zeros(n, n);
        for x in (0..n).filter(|&x| support[x]) {
            if g[x] <= 0.0 || f[x] <= 0.0 {
                return Err(Error::Consistency(format!(
                    "potential vanishes at state {x} although mu_t charges it (t = {})",
                    path.times[i]
                )));
            }
            for &y in chain.graph().neighbors(x) {
                fwd[(x, y)] = g[y] / g[x] * rates[(x, y)];
                bwd[(x, y)] = f[y] / f[x] * rates[(x, y)];
            }
        }
        field.forward.push(fwd);
        field.backward.push(bwd);
        field.row_support.push(support);
    }
    Ok(field)
}

/// Residual of a time-dependent equation at the interior grid times.
#[derive(Debug, Clone, PartialEq)]
pub struct ResidualProfile {
    /// Interior times `t_1, …, t_{T−1}`.
    pub times: Vec<f64>,
    /// Max over states at each interior time; `0` where no state is evaluable.
    pub per_time: Vec<f64>,
}

impl ResidualProfile {
    pub fn max(&self) -> f64 {
        self.per_time.iter().copied().fold(0.0, f64::max)
    }

    /// Max restricted to times in `[lo, hi]`.
    pub fn max_on(&self, lo: f64, hi: f64) -> f64 {
        self.times
            .iter()
            .zip(&self.per_time)
            .filter(|(t, _)| **t >= lo - 1e-12 && **t <= hi + 1e-12)
            .map(|(_, r)| *r)
            .fold(0.0, f64::max)
    }
}

fn require_three_points(path: &InterpolationPath) -> Result<()> {
    if path.len() < 3 {
        return Err(Error::Precondition("residuals need at least three grid times".into()));
    }
    Ok(())
}

/// `Σ_y θ(u(y) − u(x)) J[x][y]`.
fn theta_term(chain: &ReversibleChain, u: &[f64], x: usize) -> f64 {
    chain.graph().neighbors(x).iter().map(|&y| theta(u[y] - u[x]) * chain.graph().rate(x, y)).sum()
}

fn all_present(v: &[Option<f64>]) -> Option<Vec<f64>> {
    v.iter().copied().collect()
}

/// `(∂_t + L)ψ + Σ_y θ(ψ(y) − ψ(x)) J[x][y]` with central time differences.
pub fn hjb_residual(path: &InterpolationPath, chain: &ReversibleChain) -> Result<ResidualProfile> {
    hamilton_jacobi_residual(path, chain, &path.psi, 1.0)
}

/// The backward analogue `(−∂_t + L)φ + Σ_y θ(φ(y) − φ(x)) J[x][y]`.
pub fn backward_hjb_residual(path: &InterpolationPath, chain: &ReversibleChain) -> Result<ResidualProfile> {
    hamilton_jacobi_residual(path, chain, &path.phi, -1.0)
}

fn hamilton_jacobi_residual(
    path: &InterpolationPath,
    chain: &ReversibleChain,
    potential: &[Vec<Option<f64>>],
    time_sign: f64,
) -> Result<ResidualProfile> {
    require_three_points(path)?;
    let dt = path.step();
    let mut per_time = Vec::new();
    for i in 1..path.len() - 1 {
        let mut worst: f64 = 0.0;
        if let Some(u) = all_present(&potential[i]) {
            let lu = chain.apply_generator(&u);
            for x in 0..chain.len() {
                let (Some(next), Some(prev)) = (potential[i + 1][x], potential[i - 1][x]) else {
                    continue;
                };
                let dudt = (next - prev) / (2.0 * dt);
                let r = time_sign * dudt + lu[x] + theta_term(chain, &u, x);
                worst = worst.max(r.abs());
            }
        }
        per_time.push(worst);
    }
    Ok(ResidualProfile { times: path.times[1..path.len() - 1].to_vec(), per_time })
}

/// Residual of `∂_t μ_t(x) = Σ_y [μ_t(y) j(y;x) J[y][x] − μ_t(x) j(x;y) J[x][y]]`
/// with `j(x;y) = g_t(y)/g_t(x)`.
pub fn current_equation_residual(path: &InterpolationPath, chain: &ReversibleChain) -> Result<ResidualProfile> {
    require_three_points(path)?;
    let dt = path.step();
    let m = chain.m().weights();
    let graph = chain.graph();
    let mut per_time = Vec::new();
    for i in 1..path.len() - 1 {
        let (f, g) = (&path.f[i], &path.g[i]);
        let mut worst: f64 = 0.0;
        for x in 0..chain.len() {
            let dmu = (path.mu[i + 1][x] - path.mu[i - 1][x]) / (2.0 * dt);
            // μ(y) j(y;x) = f(y) g(x) m(y), μ(x) j(x;y) = f(x) g(y) m(x)
            let flux: f64 = graph
                .neighbors(x)
                .iter()
                .map(|&y| f[y] * g[x] * m[y] * graph.rate(y, x) - f[x] * g[y] * m[x] * graph.rate(x, y))
                .sum();
            worst = worst.max((dmu - flux).abs());
        }
        per_time.push(worst);
    }
    Ok(ResidualProfile { times: path.times[1..path.len() - 1].to_vec(), per_time })
}

/// Residuals of the heat equations `(−∂_t + L) f = 0` and `(∂_t + L) g = 0`.
pub fn heat_equation_residuals(
    path: &InterpolationPath,
    chain: &ReversibleChain,
) -> Result<(ResidualProfile, ResidualProfile)> {
    require_three_points(path)?;
    let dt = path.step();
    let mut rf = Vec::new();
    let mut rg = Vec::new();
    for i in 1..path.len() - 1 {
        let lf = chain.apply_generator(&path.f[i]);
        let lg = chain.apply_generator(&path.g[i]);
        let mut wf: f64 = 0.0;
        let mut wg: f64 = 0.0;
        for x in 0..chain.len() {
            let df = (path.f[i + 1][x] - path.f[i - 1][x]) / (2.0 * dt);
            let dg = (path.g[i + 1][x] - path.g[i - 1][x]) / (2.0 * dt);
            wf = wf.max((-df + lf[x]).abs());
            wg = wg.max((dg + lg[x]).abs());
        }
        rf.push(wf);
        rg.push(wg);
    }
    let times = path.times[1..path.len() - 1].to_vec();
    Ok((ResidualProfile { times: times.clone(), per_time: rf }, ResidualProfile { times, per_time: rg }))
}

/// Instantaneous action `Σ_{x,y} μ_t(x) θ*(j(x;y) − 1) J[x][y]` at grid index `i`.
pub fn action_density(path: &InterpolationPath, chain: &ReversibleChain, i: usize) -> f64 {
    let (mu, g) = (&path.mu[i], &path.g[i]);
    let graph = chain.graph();
    let mut acc = 0.0;
    for x in 0..chain.len() {
        if mu[x] == 0.0 {
            continue;
        }
        for &y in graph.neighbors(x) {
            let j = g[y] / g[x];
            debug_assert!(j >= 0.0, "jump ratio must be nonnegative");
            acc += mu[x] * theta_star(j - 1.0) * graph.rate(x, y);
        }
    }
    acc
}

/// Time integral of [`action_density`] by the trapezoid rule, summed in ascending time.
pub fn action_value(path: &InterpolationPath, chain: &ReversibleChain) -> f64 {
    let densities: Vec<f64> = (0..path.len()).into_par_iter().map(|i| action_density(path, chain, i)).collect();
    trapezoid(&path.times, &densities)
}

fn trapezoid(times: &[f64], values: &[f64]) -> f64 {
    let mut acc = 0.0;
    for i in 1..times.len() {
        acc += 0.5 * (times[i] - times[i - 1]) * (values[i] + values[i - 1]);
    }
    acc
}

/// Carré du champ `Γ(u,v)(x) = Σ_y (u(y) − u(x))(v(y) − v(x)) J[x][y]`,
/// equal to `L(uv) − u Lv − v Lu`.
pub fn carre_du_champ(chain: &ReversibleChain, u: &[f64], v: &[f64]) -> Vec<f64> {
    let graph = chain.graph();
    (0..chain.len())
        .map(|x| graph.neighbors(x).iter().map(|&y| (u[y] - u[x]) * (v[y] - v[x]) * graph.rate(x, y)).sum())
        .collect()
}

/// `Bu = e^{−u} L e^{u}`, evaluated as `Σ_y (e^{u(y)−u(x)} − 1) J[x][y]`.
pub fn exponential_generator(chain: &ReversibleChain, u: &[f64]) -> Vec<f64> {
    let graph = chain.graph();
    (0..chain.len())
        .map(|x| graph.neighbors(x).iter().map(|&y| (u[y] - u[x]).exp_m1() * graph.rate(x, y)).sum())
        .collect()
}

/// `e^{−ψ} Γ(e^{ψ} w, v)`, evaluated without forming `e^{ψ}`.
fn tilted_gamma(chain: &ReversibleChain, psi: &[f64], w: &[f64], v: &[f64]) -> Vec<f64> {
    let graph = chain.graph();
    (0..chain.len())
        .map(|x| {
            graph
                .neighbors(x)
                .iter()
                .map(|&y| ((psi[y] - psi[x]).exp() * w[y] - w[x]) * (v[y] - v[x]) * graph.rate(x, y))
                .sum()
        })
        .collect()
}

/// `Θψ = e^{−ψ} Γ(e^{ψ}, ψ) − Bψ + Lψ`.
pub fn theta_operator(chain: &ReversibleChain, psi: &[f64]) -> Vec<f64> {
    let ones = vec![1.0; psi.len()];
    let g = tilted_gamma(chain, psi, &ones, psi);
    let b = exponential_generator(chain, psi);
    let l = chain.apply_generator(psi);
    (0..psi.len()).map(|x| g[x] - b[x] + l[x]).collect()
}

/// `Θ₂ψ = LΘψ + e^{−ψ}Γ(e^ψ, Θψ) + e^{−ψ}Γ(e^ψ, ψ) Bψ − e^{−ψ}Γ(e^ψ Bψ, ψ)`.
pub fn theta2_operator(chain: &ReversibleChain, psi: &[f64]) -> Vec<f64> {
    let ones = vec![1.0; psi.len()];
    let th = theta_operator(chain, psi);
    let l_th = chain.apply_generator(&th);
    let g_th = tilted_gamma(chain, psi, &ones, &th);
    let g_psi = tilted_gamma(chain, psi, &ones, psi);
    let b = exponential_generator(chain, psi);
    let g_b = tilted_gamma(chain, psi, &b, psi);
    (0..psi.len()).map(|x| l_th[x] + g_th[x] + g_psi[x] * b[x] - g_b[x]).collect()
}

/// Second derivative of `h(t) = H(μ_t|m)` against the Θ₂ formula.
#[derive(Debug, Clone, PartialEq)]
pub struct ConvexityReport {
    /// `h` at every grid time.
    pub entropy: Vec<f64>,
    /// Interior times.
    pub times: Vec<f64>,
    /// Central second differences of `h`.
    pub finite_difference: Vec<f64>,
    /// `½ ⟨Θ₂φ_t + Θ₂ψ_t, μ_t⟩`.
    pub formula: Vec<f64>,
    /// `max_t |finite_difference − formula| / max_t |formula|`.
    pub max_relative_mismatch: f64,
    /// Least-squares constant `c` in `finite_difference ≈ c · formula`.
    pub measured_ratio: f64,
}

pub fn entropy_convexity_check(path: &InterpolationPath, chain: &ReversibleChain) -> Result<ConvexityReport> {
    require_three_points(path)?;
    let entropy = path.entropy_profile(chain.m())?;
    let dt = path.step();
    let interior: Vec<usize> = (1..path.len() - 1).collect();
    let formula: Vec<f64> = interior
        .par_iter()
        .map(|&i| {
            let phi = all_present(&path.phi[i])
                .ok_or_else(|| Error::Precondition("convexity check needs full-support marginals on (0,1)".into()))?;
            let psi = all_present(&path.psi[i])
                .ok_or_else(|| Error::Precondition("convexity check needs full-support marginals on (0,1)".into()))?;
            let a = theta2_operator(chain, &phi);
            let b = theta2_operator(chain, &psi);
            Ok(0.5 * path.mu[i].iter().enumerate().map(|(x, mu)| mu * (a[x] + b[x])).sum::<f64>())
        })
        .collect::<Result<_>>()?;
    let finite_difference: Vec<f64> =
        interior.iter().map(|&i| (entropy[i + 1] - 2.0 * entropy[i] + entropy[i - 1]) / (dt * dt)).collect();
    let scale = formula.iter().fold(0.0f64, |a, v| a.max(v.abs()));
    let worst = finite_difference.iter().zip(&formula).fold(0.0f64, |a, (d, f)| a.max((d - f).abs()));
    let max_relative_mismatch = if scale > 0.0 { worst / scale } else { worst };
    let num: f64 = finite_difference.iter().zip(&formula).map(|(d, f)| d * f).sum();
    let den: f64 = formula.iter().map(|f| f * f).sum();
    let measured_ratio = if den > 0.0 { num / den } else { f64::NAN };
    Ok(ConvexityReport {
        entropy,
        times: interior.iter().map(|&i| path.times[i]).collect(),
        finite_difference,
        formula,
        max_relative_mismatch,
        measured_ratio,
    })
}

/// Entropic interpolation over a Gaussian grid kernel.
///
/// There is no generator here. The path uses the row-normalized Gaussian
/// kernels `K_s(x,·) ∝ base(·) exp(−k (x − ·)² / (2s))` as the time-`s`
/// transition: `g_t = K_{1−t} g1`, `f_t = K_t f0`, `μ_t ∝ f_t g_t R0`. The
/// endpoints are exact; in between `μ_t` is renormalized and the defect is
/// reported.
#[derive(Debug, Clone, PartialEq)]
pub struct GridPath {
    pub grid: Vec<f64>,
    pub k: f64,
    pub times: Vec<f64>,
    pub mu: Vec<Vec<f64>>,
    pub psi: Vec<Vec<Option<f64>>>,
    pub normalization_defect: f64,
}

fn gaussian_transition(grid: &[f64], base: &Measure, k: f64, s: f64, v: &[f64]) -> Vec<f64> {
    let n = grid.len();
    if s == 0.0 {
        return v.to_vec();
    }
    (0..n)
        .map(|x| {
            let logs: Vec<f64> = (0..n)
                .map(|y| {
                    let d = grid[x] - grid[y];
                    base.get(y).ln() - k * d * d / (2.0 * s)
                })
                .collect();
            let top = logs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            let mut num = 0.0;
            let mut den = 0.0;
            for y in 0..n {
                let w = (logs[y] - top).exp();
                num += w * v[y];
                den += w;
            }
            num / den
        })
        .collect()
}

pub fn build_grid_path(
    grid: &[f64],
    k: f64,
    base: &Measure,
    kernel: &EndpointKernel,
    potentials: &BridgePotentials,
    grid_size: usize,
) -> Result<GridPath> {
    check_dim(grid.len(), base.len())?;
    check_dim(grid.len(), kernel.rows())?;
    let times = uniform_grid(grid_size)?;
    let r0 = kernel.row_base().weights();
    let rows: Vec<(Vec<f64>, Vec<Option<f64>>, f64)> = times
        .par_iter()
        .map(|&t| {
            let f = gaussian_transition(grid, base, k, t, &potentials.f0);
            let g = gaussian_transition(grid, base, k, 1.0 - t, &potentials.g1);
            let raw: Vec<f64> = (0..grid.len()).map(|x| f[x] * g[x] * r0[x]).collect();
            // the exact endpoint scaling: μ_0 = f0 · K_1 g1 · R0 already has unit mass
            let mass: f64 = raw.iter().sum();
            let mu = raw.iter().map(|v| v / mass).collect();
            (mu, log_or_absent(&g), (mass - 1.0).abs())
        })
        .collect();
    let mut path = GridPath {
        grid: grid.to_vec(),
        k,
        times,
        mu: Vec::new(),
        psi: Vec::new(),
        normalization_defect: 0.0,
    };
    for (mu, psi, defect) in rows {
        path.normalization_defect = path.normalization_defect.max(defect);
        path.mu.push(mu);
        path.psi.push(psi);
    }
    Ok(path)
}

/// Kinetic action on the grid against the entropy identity it approximates.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GaussianActionReport {
    /// `∫ Σ_x μ_t(x) |∂_x ψ_t(x)|² / (2k) dt` with finite-difference gradients.
    pub action: f64,
    /// `H(π̂|R01) − H(μ0|R0)`.
    pub reference: f64,
    pub mismatch: f64,
}

/// Gradient by central differences, one-sided at the ends.
fn grid_gradient(grid: &[f64], u: &[f64]) -> Vec<f64> {
    let n = grid.len();
    (0..n)
        .map(|i| {
            let (a, b) = if i == 0 { (0, 1) } else if i == n - 1 { (n - 2, n - 1) } else { (i - 1, i + 1) };
            (u[b] - u[a]) / (grid[b] - grid[a])
        })
        .collect()
}

pub fn gaussian_action_value(
    path: &GridPath,
    solution: &StaticSolution,
    kernel: &EndpointKernel,
    mu0: &ProbabilityMeasure,
) -> Result<GaussianActionReport> {
    if path.grid.len() < 2 {
        return Err(Error::Unsupported("the kinetic action needs a 1-D grid with at least two points".into()));
    }
    let densities: Vec<f64> = (0..path.times.len())
        .map(|i| {
            let mu = &path.mu[i];
            // states with absent ψ carry no mass
            let psi: Vec<f64> = path.psi[i].iter().map(|p| p.unwrap_or(f64::NAN)).collect();
            let grad = grid_gradient(&path.grid, &psi);
            mu.iter().zip(&grad).filter(|(m, g)| **m > 0.0 && g.is_finite()).map(|(m, g)| m * g * g).sum::<f64>()
                / (2.0 * path.k)
        })
        .collect();
    let action = trapezoid(&path.times, &densities);
    let h0 = relative_entropy_weights(mu0.weights(), kernel.row_base().weights())?.expect_finite("H(mu0|R0)");
    let reference = solution.primal_value - h0;
    Ok(GaussianActionReport { action, reference, mismatch: (action - reference).abs() })
}
