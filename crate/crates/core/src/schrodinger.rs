//! The static Schrödinger problem
//!
//! ```text
//! H(π | R01) → min   over couplings π of (μ0, μ1)
//! ```
//!
//! solved by iterative proportional fitting in the log domain. The optimizer
//! has product form `π(x,y) = f0(x) g1(y) R01[x][y]`, where `(f0, g1)` solve
//! the Schrödinger system
//!
//! ```text
//! f0(x) Σ_y R01[x][y] g1(y) = μ0(x),    g1(y) Σ_x R01[x][y] f0(x) = μ1(y).
//! ```
//!
//! The pair is determined up to `(c f0, g1 / c)`; the solver fixes the gauge
//! by centering `log f0` at its median over the support of `μ0`.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{check_dim, Error, Result};
use crate::ext::ExtendedReal;
use crate::markov::EndpointKernel;
use crate::measure::ProbabilityMeasure;
use crate::numeric::{logsumexp, median};

pub const DEFAULT_TOLERANCE: f64 = 1e-10;
pub const DEFAULT_MAX_ITER: usize = 100_000;

#[derive(Debug, Clone, PartialEq)]
pub struct SolveOptions {
    /// Stop once the total-variation marginal residual is at most this.
    pub tol: f64,
    pub max_iter: usize,
    /// Starting `log g1` on the support of `μ1`; zero when absent.
    pub initial_log_g1: Option<Vec<f64>>,
}

impl Default for SolveOptions {
    fn default() -> Self {
        SolveOptions { tol: DEFAULT_TOLERANCE, max_iter: DEFAULT_MAX_ITER, initial_log_g1: None }
    }
}

impl SolveOptions {
    pub fn with_tol(tol: f64) -> Self {
        SolveOptions { tol, ..Default::default() }
    }
}

/// The pair `(f0, g1)` with their logarithms (`-inf` off the supports).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(from = "PotentialsRecord")]
pub struct BridgePotentials {
    pub f0: Vec<f64>,
    pub g1: Vec<f64>,
    #[serde(skip)]
    pub log_f0: Vec<f64>,
    #[serde(skip)]
    pub log_g1: Vec<f64>,
    /// The constant subtracted from `log f0` (and added to `log g1`) when fixing the gauge.
    pub normalization: f64,
    /// Marginal residual at termination.
    pub residual: f64,
}

#[derive(Deserialize)]
struct PotentialsRecord {
    f0: Vec<f64>,
    g1: Vec<f64>,
    normalization: f64,
    residual: f64,
}

impl From<PotentialsRecord> for BridgePotentials {
    fn from(r: PotentialsRecord) -> Self {
        BridgePotentials {
            log_f0: r.f0.iter().map(|v| v.ln()).collect(),
            log_g1: r.g1.iter().map(|v| v.ln()).collect(),
            f0: r.f0,
            g1: r.g1,
            normalization: r.normalization,
            residual: r.residual,
        }
    }
}

impl BridgePotentials {
    /// Build from log potentials, `-inf` marking absent states.
    pub fn from_logs(log_f0: Vec<f64>, log_g1: Vec<f64>, normalization: f64, residual: f64) -> Self {
        BridgePotentials {
            f0: log_f0.iter().map(|v| v.exp()).collect(),
            g1: log_g1.iter().map(|v| v.exp()).collect(),
            log_f0,
            log_g1,
            normalization,
            residual,
        }
    }

    /// `(c f0, g1 / c)`.
    pub fn regauged(&self, c: f64) -> BridgePotentials {
        let lc = c.ln();
        BridgePotentials::from_logs(
            self.log_f0.iter().map(|v| v + lc).collect(),
            self.log_g1.iter().map(|v| v - lc).collect(),
            self.normalization - lc,
            self.residual,
        )
    }

    /// `log ⟨f0 ⊗ g1, R01⟩`.
    pub fn log_mass(&self, kernel: &EndpointKernel) -> f64 {
        let lr = kernel.log_matrix();
        logsumexp((0..kernel.rows()).flat_map(|x| {
            (0..kernel.cols()).map(move |y| self.log_f0[x] + self.log_g1[y] + lr[(x, y)])
        }))
    }

    /// `π(x,y) = f0(x) g1(y) R01[x][y]`.
    pub fn coupling(&self, kernel: &EndpointKernel) -> DMatrix<f64> {
        let lr = kernel.log_matrix();
        DMatrix::from_fn(kernel.rows(), kernel.cols(), |x, y| (self.log_f0[x] + self.log_g1[y] + lr[(x, y)]).exp())
    }
}

/// Output of [`solve`].
#[derive(Debug, Clone, PartialEq)]
pub struct StaticSolution {
    pub coupling: DMatrix<f64>,
    pub potentials: BridgePotentials,
    /// `H(π̂ | R01)`.
    pub primal_value: f64,
    pub dual_value: f64,
    pub iterations: usize,
    /// Marginal residual after each full sweep.
    pub residual_history: Vec<f64>,
}

impl StaticSolution {
    pub fn duality_gap(&self) -> f64 {
        self.primal_value - self.dual_value
    }

    pub fn row_marginal(&self) -> Vec<f64> {
        (0..self.coupling.nrows()).map(|x| self.coupling.row(x).sum()).collect()
    }

    pub fn col_marginal(&self) -> Vec<f64> {
        (0..self.coupling.ncols()).map(|y| self.coupling.column(y).sum()).collect()
    }
}

/// Solve the static Schrödinger problem for the endpoint kernel `R01`.
pub fn solve(
    kernel: &EndpointKernel,
    mu0: &ProbabilityMeasure,
    mu1: &ProbabilityMeasure,
    options: &SolveOptions,
) -> Result<StaticSolution> {
    check_dim(kernel.rows(), mu0.len())?;
    check_dim(kernel.cols(), mu1.len())?;
    if !(options.tol > 0.0) {
        return Err(Error::Precondition(format!("tolerance must be positive, got {}", options.tol)));
    }
    for x in mu0.support() {
        if kernel.row_base().get(x) <= 0.0 {
            return Err(Error::Precondition(format!(
                "mu0 is not absolutely continuous with respect to the reference at state {x}"
            )));
        }
    }
    for y in mu1.support() {
        if kernel.col_base().get(y) <= 0.0 {
            return Err(Error::Precondition(format!(
                "mu1 is not absolutely continuous with respect to the reference at state {y}"
            )));
        }
    }

    // zero-mass states are excised from the iteration
    let rows = mu0.support();
    let cols = mu1.support();
    let lr = kernel.log_matrix();
    let log_mu0: Vec<f64> = rows.iter().map(|&x| mu0.get(x).ln()).collect();
    let log_mu1: Vec<f64> = cols.iter().map(|&y| mu1.get(y).ln()).collect();

    let mut lf = vec![0.0; rows.len()];
    let mut lg = match &options.initial_log_g1 {
        Some(init) => {
            check_dim(mu1.len(), init.len())?;
            cols.iter().map(|&y| init[y]).collect()
        }
        None => vec![0.0; cols.len()],
    };

    let mut history = Vec::new();
    let mut converged = false;
    for _ in 0..options.max_iter {
        for (i, &x) in rows.iter().enumerate() {
            let s = logsumexp(cols.iter().zip(&lg).map(|(&y, g)| lr[(x, y)] + g));
            if s == f64::NEG_INFINITY {
                return Err(Error::Precondition(format!(
                    "state {x} cannot reach the support of mu1 under the reference"
                )));
            }
            lf[i] = log_mu0[i] - s;
        }
        for (j, &y) in cols.iter().enumerate() {
            let s = logsumexp(rows.iter().zip(&lf).map(|(&x, f)| lr[(x, y)] + f));
            if s == f64::NEG_INFINITY {
                return Err(Error::Precondition(format!(
                    "state {y} cannot be reached from the support of mu0 under the reference"
                )));
            }
            lg[j] = log_mu1[j] - s;
        }
        let residual = marginal_residual(lr, &rows, &cols, &lf, &lg, mu0, mu1);
        history.push(residual);
        if residual <= options.tol {
            converged = true;
            break;
        }
    }
    let residual = *history.last().unwrap_or(&f64::INFINITY);
    if !converged {
        return Err(Error::NotConverged { iterations: history.len(), residual });
    }

    let shift = median(&lf);
    let mut log_f0 = vec![f64::NEG_INFINITY; mu0.len()];
    let mut log_g1 = vec![f64::NEG_INFINITY; mu1.len()];
    for (i, &x) in rows.iter().enumerate() {
        log_f0[x] = lf[i] - shift;
    }
    for (j, &y) in cols.iter().enumerate() {
        log_g1[y] = lg[j] + shift;
    }
    let potentials = BridgePotentials::from_logs(log_f0, log_g1, shift, residual);
    let coupling = potentials.coupling(kernel);

    let mut primal = 0.0;
    for &x in &rows {
        for &y in &cols {
            let p = coupling[(x, y)];
            if p > 0.0 {
                primal += p * (potentials.log_f0[x] + potentials.log_g1[y]);
            }
        }
    }
    let dual = dual_value(&potentials, kernel, mu0, mu1)?.expect_finite("dual value at a converged bridge");

    Ok(StaticSolution {
        coupling,
        potentials,
        primal_value: primal,
        dual_value: dual,
        iterations: history.len(),
        residual_history: history,
    })
}

fn marginal_residual(
    lr: &DMatrix<f64>,
    rows: &[usize],
    cols: &[usize],
    lf: &[f64],
    lg: &[f64],
    mu0: &ProbabilityMeasure,
    mu1: &ProbabilityMeasure,
) -> f64 {
    let mut col_sums = vec![0.0; cols.len()];
    let mut row_dev = 0.0;
    for (i, &x) in rows.iter().enumerate() {
        let mut row = 0.0;
        for (j, &y) in cols.iter().enumerate() {
            let p = (lr[(x, y)] + lf[i] + lg[j]).exp();
            row += p;
            col_sums[j] += p;
        }
        row_dev += (row - mu0.get(x)).abs();
    }
    let col_dev: f64 = cols.iter().zip(&col_sums).map(|(&y, s)| (s - mu1.get(y)).abs()).sum();
    0.5 * row_dev.max(col_dev)
}

/// The dual objective `⟨φ, μ0⟩ + ⟨ψ, μ1⟩ − log⟨e^{φ⊕ψ}, R01⟩` for arbitrary log-potentials.
///
/// Returns `-inf` if `φ` or `ψ` is `-inf` somewhere on the support of its marginal.
pub fn dual_objective(
    phi: &[f64],
    psi: &[f64],
    kernel: &EndpointKernel,
    mu0: &ProbabilityMeasure,
    mu1: &ProbabilityMeasure,
) -> Result<ExtendedReal> {
    check_dim(kernel.rows(), phi.len())?;
    check_dim(kernel.cols(), psi.len())?;
    check_dim(mu0.len(), phi.len())?;
    check_dim(mu1.len(), psi.len())?;
    let linear = |pot: &[f64], mu: &ProbabilityMeasure| -> Option<f64> {
        let mut acc = 0.0;
        for (x, &w) in mu.weights().iter().enumerate() {
            if w > 0.0 {
                if pot[x] == f64::NEG_INFINITY {
                    return None;
                }
                acc += w * pot[x];
            }
        }
        Some(acc)
    };
    let (Some(a), Some(b)) = (linear(phi, mu0), linear(psi, mu1)) else {
        return Ok(ExtendedReal::NegInfinity);
    };
    let lr = kernel.log_matrix();
    let log_mass = logsumexp(
        (0..kernel.rows()).flat_map(|x| (0..kernel.cols()).map(move |y| phi[x] + psi[y] + lr[(x, y)])),
    );
    Ok(ExtendedReal::from(a + b - log_mass))
}

/// Dual value of a pair of potentials.
pub fn dual_value(
    potentials: &BridgePotentials,
    kernel: &EndpointKernel,
    mu0: &ProbabilityMeasure,
    mu1: &ProbabilityMeasure,
) -> Result<ExtendedReal> {
    dual_objective(&potentials.log_f0, &potentials.log_g1, kernel, mu0, mu1)
}

/// Residuals of the two Schrödinger-system equations, divided by the
/// reference marginals: `|f0(x) Σ_y p(x,y) g1(y) − μ0(x)/R0(x)|` with
/// `p(x,y) = R01[x][y]/R0(x)`, and symmetrically for `g1`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SystemResidual {
    pub f_residual: f64,
    pub g_residual: f64,
}

impl SystemResidual {
    pub fn max(&self) -> f64 {
        self.f_residual.max(self.g_residual)
    }
}

pub fn verify_schrodinger_system(
    potentials: &BridgePotentials,
    kernel: &EndpointKernel,
    mu0: &ProbabilityMeasure,
    mu1: &ProbabilityMeasure,
) -> Result<SystemResidual> {
    check_dim(kernel.rows(), mu0.len())?;
    check_dim(kernel.cols(), mu1.len())?;
    let lr = kernel.log_matrix();
    let mut f_residual: f64 = 0.0;
    for x in 0..kernel.rows() {
        let r0 = kernel.row_base().get(x);
        let lhs = (potentials.log_f0[x]
            + logsumexp((0..kernel.cols()).map(|y| lr[(x, y)] + potentials.log_g1[y]))
            - r0.ln())
        .exp();
        f_residual = f_residual.max((lhs - mu0.get(x) / r0).abs());
    }
    let mut g_residual: f64 = 0.0;
    for y in 0..kernel.cols() {
        let r1 = kernel.col_base().get(y);
        let lhs = (potentials.log_g1[y]
            + logsumexp((0..kernel.rows()).map(|x| lr[(x, y)] + potentials.log_f0[x]))
            - r1.ln())
        .exp();
        g_residual = g_residual.max((lhs - mu1.get(y) / r1).abs());
    }
    Ok(SystemResidual { f_residual, g_residual })
}

/// `(1 − ε) μ + ε ν` for `ε ∈ (0, 1)`.
pub fn blend_marginals(
    mu: &ProbabilityMeasure,
    reference: &ProbabilityMeasure,
    eps: f64,
) -> Result<ProbabilityMeasure> {
    check_dim(mu.len(), reference.len())?;
    if !(eps > 0.0 && eps < 1.0) {
        return Err(Error::Precondition(format!("blend weight must lie in (0, 1), got {eps}")));
    }
    ProbabilityMeasure::from_unnormalized(
        mu.weights().iter().zip(reference.weights()).map(|(a, b)| (1.0 - eps) * a + eps * b).collect(),
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::markov::{simple_random_walk, RateGraph, ReversibleChain};
    use crate::measure::Measure;

    fn triangle() -> ReversibleChain {
        simple_random_walk(3, &[(0, 1), (1, 2), (2, 0)]).unwrap()
    }

    fn path3() -> ReversibleChain {
        simple_random_walk(3, &[(0, 1), (1, 2)]).unwrap()
    }

    #[test]
    fn normalized_reversing_measure_gives_constant_potentials() {
        let c = path3();
        let r = c.endpoint_coupling().unwrap();
        let mass = c.m().total_mass();
        let mu = c.m().normalized().unwrap();
        let sol = solve(&r, &mu, &mu, &SolveOptions::default()).unwrap();
        // median gauge pins f0 = 1; the symmetric gauge gives 1/sqrt|m| for both
        let expected = 1.0 / mass.sqrt();
        let symmetric = sol.potentials.regauged(expected);
        for x in 0..3 {
            assert!((sol.potentials.f0[x] - 1.0).abs() < 1e-10);
            assert!((symmetric.f0[x] - expected).abs() < 1e-10);
            assert!((symmetric.g1[x] - expected).abs() < 1e-10);
        }
        assert!((sol.primal_value + mass.ln()).abs() < 1e-10);
        assert!((sol.dual_value + mass.ln()).abs() < 1e-10);
        for (p, q) in sol.coupling.iter().zip(r.matrix().iter()) {
            assert!((p - q / mass).abs() < 1e-12);
        }
    }

    #[test]
    fn dirac_to_dirac_has_a_single_feasible_coupling() {
        let c = path3();
        let r = c.endpoint_coupling().unwrap();
        let d = ProbabilityMeasure::dirac(3, 0);
        let sol = solve(&r, &d, &d, &SolveOptions::default()).unwrap();
        assert!((sol.coupling[(0, 0)] - 1.0).abs() < 1e-15);
        assert_eq!(sol.coupling.iter().filter(|&&p| p > 0.0).count(), 1);
        let expected = -r.matrix()[(0, 0)].ln();
        assert!((sol.primal_value - expected).abs() < 1e-12);
        assert!((sol.dual_value - expected).abs() < 1e-12);
        // support matching
        assert_eq!(sol.potentials.f0[1], 0.0);
        assert_eq!(sol.potentials.g1[2], 0.0);
        let res = verify_schrodinger_system(&sol.potentials, &r, &d, &d).unwrap();
        assert!(res.max() < 1e-12);
    }

    #[test]
    fn triangle_uniform_value() {
        let r = triangle().endpoint_coupling().unwrap();
        let mu = ProbabilityMeasure::uniform(3);
        let sol = solve(&r, &mu, &mu, &SolveOptions::default()).unwrap();
        assert!((sol.primal_value + 6f64.ln()).abs() < 1e-10);
        let res = verify_schrodinger_system(&sol.potentials, &r, &mu, &mu).unwrap();
        assert!(res.max() < 1e-12);
    }

    #[test]
    fn support_violation_names_the_state() {
        let rates = DMatrix::from_row_slice(2, 2, &[0.0, 1.0, 1.0, 0.0]);
        let chain = ReversibleChain::new(RateGraph::new(rates).unwrap(), Measure::counting(2)).unwrap();
        let r = chain.endpoint_coupling().unwrap();
        // a kernel whose second row carries no mass
        let mut lr = r.log_matrix().clone();
        lr[(1, 0)] = f64::NEG_INFINITY;
        lr[(1, 1)] = f64::NEG_INFINITY;
        let k = EndpointKernel::from_log_matrix(lr).unwrap();
        let mu = ProbabilityMeasure::uniform(2);
        match solve(&k, &mu, &mu, &SolveOptions::default()) {
            Err(Error::Precondition(msg)) => assert!(msg.contains("state 1"), "{msg}"),
            other => panic!("expected precondition error, got {other:?}"),
        }
    }

    #[test]
    fn non_convergence_carries_residual() {
        let r = path3().endpoint_coupling().unwrap();
        let mu0 = ProbabilityMeasure::new(vec![0.7, 0.2, 0.1]).unwrap();
        let mu1 = ProbabilityMeasure::new(vec![0.1, 0.2, 0.7]).unwrap();
        let opts = SolveOptions { tol: 1e-14, max_iter: 2, initial_log_g1: None };
        match solve(&r, &mu0, &mu1, &opts) {
            Err(Error::NotConverged { iterations: 2, residual }) => assert!(residual > 1e-14),
            other => panic!("expected non-convergence, got {other:?}"),
        }
    }

    #[test]
    fn gauge_change_leaves_values_unchanged() {
        let r = path3().endpoint_coupling().unwrap();
        let mu0 = ProbabilityMeasure::new(vec![0.5, 0.3, 0.2]).unwrap();
        let mu1 = ProbabilityMeasure::new(vec![0.1, 0.3, 0.6]).unwrap();
        let sol = solve(&r, &mu0, &mu1, &SolveOptions::default()).unwrap();
        let other = sol.potentials.regauged(7.5);
        let d1 = dual_value(&sol.potentials, &r, &mu0, &mu1).unwrap().expect_finite("d");
        let d2 = dual_value(&other, &r, &mu0, &mu1).unwrap().expect_finite("d");
        assert!((d1 - d2).abs() < 1e-13);
        for (a, b) in sol.coupling.iter().zip(other.coupling(&r).iter()) {
            assert!((a - b).abs() < 1e-15);
        }
        assert!(other.log_mass(&r).abs() < 1e-10);
    }

    #[test]
    fn vanishing_potential_on_support_is_minus_infinity() {
        let r = path3().endpoint_coupling().unwrap();
        let mu = ProbabilityMeasure::uniform(3);
        let phi = [f64::NEG_INFINITY, 0.0, 0.0];
        let v = dual_objective(&phi, &[0.0; 3], &r, &mu, &mu).unwrap();
        assert_eq!(v, ExtendedReal::NegInfinity);
    }

    #[test]
    fn blend_of_dirac() {
        let mu = ProbabilityMeasure::dirac(3, 0);
        let b = blend_marginals(&mu, &ProbabilityMeasure::uniform(3), 0.3).unwrap();
        let expected = [0.7 + 0.1, 0.1, 0.1];
        for (a, e) in b.weights().iter().zip(expected) {
            assert!((a - e).abs() < 1e-15);
        }
        assert!(b.has_full_support());
        assert!(blend_marginals(&mu, &ProbabilityMeasure::uniform(3), 0.0).is_err());
        assert!(blend_marginals(&mu, &ProbabilityMeasure::uniform(3), 1.0).is_err());
    }
}
