//! The acceptance checks. Each returns an [`Outcome`]; none of them panics on failure.

use std::fmt;
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use schrodinger::entropy::{additive_decomposition, relative_entropy, verify_variational_formula, JointShape};
use schrodinger::interpolation::{
    action_value, backward_hjb_residual, build_path, current_equation_residual, entropy_convexity_check,
    hjb_residual, markov_factorization_residual, verify_disintegration, verify_markov_factorization,
};
use schrodinger::markov::simple_random_walk;
use schrodinger::particles::{condition_and_compare, InitialPositions, SimulationConfig};
use schrodinger::schrodinger::{solve, verify_schrodinger_system, SolveOptions, StaticSolution};
use schrodinger::transport::{
    default_k_values, entropic_midpoint_vs_displacement, gamma_sweep_gaussian, gamma_sweep_graph,
    last_three_non_increasing, quadratic_cost_1d,
};
use schrodinger::{Measure, ProbabilityMeasure, Result};

use crate::oracles::{
    corrupt_coupling, five_node_instances, golden_section_two_state, grid_gaussian, random_instances,
    two_state_instances, unit_grid, Instance, BASE_SEED,
};

#[derive(Debug, Clone, PartialEq)]
pub struct Outcome {
    pub id: usize,
    pub title: &'static str,
    pub passed: bool,
    pub detail: String,
}

impl fmt::Display for Outcome {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let tag = if self.passed { "PASS" } else { "FAIL" };
        write!(f, "{tag} [{:>2}] {}: {}", self.id, self.title, self.detail)
    }
}

fn outcome(id: usize, title: &'static str, result: Result<(bool, String)>) -> Outcome {
    match result {
        Ok((passed, detail)) => Outcome { id, title, passed, detail },
        Err(e) => Outcome { id, title, passed: false, detail: format!("error: {e}") },
    }
}

fn solve_instance(inst: &Instance) -> Result<(StaticSolution, Duration)> {
    let kernel = inst.chain.endpoint_coupling()?;
    let start = Instant::now();
    let sol = solve(&kernel, &inst.mu0, &inst.mu1, &SolveOptions::default())?;
    Ok((sol, start.elapsed()))
}

pub fn system_residual() -> Outcome {
    outcome(1, "Schrödinger-system residual", (|| {
        let mut worst_res: f64 = 0.0;
        let mut worst_iter = 0;
        let mut worst_time = Duration::ZERO;
        for inst in random_instances() {
            let kernel = inst.chain.endpoint_coupling()?;
            let start = Instant::now();
            let sol = solve(&kernel, &inst.mu0, &inst.mu1, &SolveOptions::default())?;
            let res = verify_schrodinger_system(&sol.potentials, &kernel, &inst.mu0, &inst.mu1)?;
            worst_time = worst_time.max(start.elapsed());
            worst_res = worst_res.max(res.max());
            worst_iter = worst_iter.max(sol.iterations);
        }
        let passed = worst_res <= 1e-9 && worst_iter <= 100_000 && worst_time < Duration::from_secs(1);
        Ok((passed, format!("max residual {worst_res:.2e}, max iterations {worst_iter}, slowest solve {worst_time:.2?}")))
    })())
}

pub fn duality() -> Outcome {
    outcome(2, "Duality gap", (|| {
        let mut worst: f64 = 0.0;
        for inst in random_instances() {
            let (sol, _) = solve_instance(&inst)?;
            worst = worst.max((sol.primal_value - sol.dual_value).abs());
        }
        Ok((worst <= 1e-8, format!("max |primal - dual| {worst:.2e}")))
    })())
}

pub fn two_state_oracle() -> Outcome {
    outcome(3, "Two-state golden-section oracle", (|| {
        let mut worst: f64 = 0.0;
        let mut count = 0;
        let pool = random_instances().into_iter().filter(|i| i.chain.len() == 2).chain(two_state_instances());
        for inst in pool {
            let kernel = inst.chain.endpoint_coupling()?;
            let (sol, _) = solve_instance(&inst)?;
            let oracle = golden_section_two_state(&kernel, &inst.mu0, &inst.mu1);
            worst = worst.max((oracle - &sol.coupling).amax());
            count += 1;
        }
        Ok((worst <= 1e-8, format!("{count} instances, max entrywise difference {worst:.2e}")))
    })())
}

pub fn born_and_disintegration() -> Outcome {
    outcome(4, "Born formula and bridge disintegration", (|| {
        let mut worst_mix: f64 = 0.0;
        let mut worst_born: f64 = 0.0;
        for inst in random_instances() {
            let (sol, _) = solve_instance(&inst)?;
            let path = build_path(&inst.chain, &sol.potentials, 100)?;
            worst_mix = worst_mix.max(verify_disintegration(&path, &inst.chain, &sol.coupling)?);
            // Born formula against independently propagated potentials
            for (i, &t) in path.times.iter().enumerate() {
                let f = inst.chain.transition_kernel(t)? * nalgebra::DVector::from_column_slice(&sol.potentials.f0);
                let g = inst.chain.transition_kernel(1.0 - t)? * nalgebra::DVector::from_column_slice(&sol.potentials.g1);
                for x in 0..inst.chain.len() {
                    worst_born = worst_born.max((path.mu[i][x] - f[x] * g[x] * inst.chain.m().get(x)).abs());
                }
            }
            for x in 0..inst.chain.len() {
                worst_born = worst_born.max((path.mu[0][x] - inst.mu0.get(x)).abs());
                worst_born = worst_born.max((path.mu[100][x] - inst.mu1.get(x)).abs());
            }
        }
        let passed = worst_mix <= 1e-9 && worst_born <= 1e-9;
        Ok((passed, format!("max mixture residual {worst_mix:.2e}, max Born residual {worst_born:.2e}")))
    })())
}

pub fn markov_preservation() -> Outcome {
    outcome(5, "Markov preservation", (|| {
        let mut worst: f64 = 0.0;
        let mut weakest_control = f64::INFINITY;
        for inst in random_instances() {
            let (sol, _) = solve_instance(&inst)?;
            let path = build_path(&inst.chain, &sol.potentials, 20)?;
            worst = worst.max(verify_markov_factorization(&path, &inst.chain, &sol.coupling)?);
            let bad = corrupt_coupling(&sol.coupling);
            weakest_control = weakest_control.min(markov_factorization_residual(&inst.chain, &bad, 0.5)?);
        }
        let passed = worst <= 1e-9 && weakest_control > 1e-3;
        Ok((passed, format!("max factorization residual {worst:.2e}, smallest corrupted residual {weakest_control:.2e}")))
    })())
}

pub fn pde_refinement() -> Outcome {
    outcome(6, "HJB and current-equation refinement", (|| {
        let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
        for inst in random_instances() {
            let (sol, _) = solve_instance(&inst)?;
            let coarse = build_path(&inst.chain, &sol.potentials, 1000)?;
            let fine = build_path(&inst.chain, &sol.potentials, 2000)?;
            let ratios = [
                hjb_residual(&coarse, &inst.chain)?.max() / hjb_residual(&fine, &inst.chain)?.max(),
                backward_hjb_residual(&coarse, &inst.chain)?.max() / backward_hjb_residual(&fine, &inst.chain)?.max(),
                current_equation_residual(&coarse, &inst.chain)?.max()
                    / current_equation_residual(&fine, &inst.chain)?.max(),
            ];
            for r in ratios {
                lo = lo.min(r);
                hi = hi.max(r);
            }
        }
        let passed = lo >= 3.0 && hi <= 5.0;
        Ok((passed, format!("residual ratios for dt 1e-3 -> 5e-4 in [{lo:.3}, {hi:.3}]")))
    })())
}

pub fn action_identity() -> Outcome {
    outcome(7, "Action identity", (|| {
        let mut worst: f64 = 0.0;
        let mut shrinks = true;
        for inst in five_node_instances() {
            let (sol, _) = solve_instance(&inst)?;
            let h0 = relative_entropy(&inst.mu0, inst.chain.m())?.expect_finite("H(mu0|m)");
            let target = sol.primal_value - h0;
            let gap = |steps| -> Result<f64> {
                Ok((action_value(&build_path(&inst.chain, &sol.potentials, steps)?, &inst.chain) - target).abs())
            };
            let (coarse, fine) = (gap(1000)?, gap(2000)?);
            worst = worst.max(coarse);
            shrinks &= fine < coarse;
        }
        let passed = worst <= 1e-4 && shrinks;
        Ok((passed, format!("max gap at 1000 steps {worst:.2e}, shrinks under refinement: {shrinks}")))
    })())
}

pub fn entropy_convexity() -> Outcome {
    outcome(8, "Entropy convexity", (|| {
        let mut worst: f64 = 0.0;
        let mut worst_rate = f64::INFINITY;
        let mut ratios = Vec::new();
        for inst in five_node_instances() {
            let (sol, _) = solve_instance(&inst)?;
            let coarse = entropy_convexity_check(&build_path(&inst.chain, &sol.potentials, 1000)?, &inst.chain)?;
            let fine = entropy_convexity_check(&build_path(&inst.chain, &sol.potentials, 2000)?, &inst.chain)?;
            worst = worst.max(coarse.max_relative_mismatch);
            worst_rate = worst_rate.min(coarse.max_relative_mismatch / fine.max_relative_mismatch);
            ratios.push(coarse.measured_ratio);
        }
        let (rmin, rmax) = ratios.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), r| (a.min(*r), b.max(*r)));
        let passed = worst <= 1e-3 && worst_rate >= 3.0;
        Ok((
            passed,
            format!(
                "max relative mismatch {worst:.3e}, refinement factor {worst_rate:.3}, measured h''/formula in [{rmin:.6}, {rmax:.6}]"
            ),
        ))
    })())
}

pub fn gamma_limit_graph() -> Outcome {
    outcome(9, "Slowing-down limit on the path graph", (|| {
        let start = Instant::now();
        let chain = simple_random_walk(4, &[(0, 1), (1, 2), (2, 3)])?;
        let report = gamma_sweep_graph(
            &chain,
            &ProbabilityMeasure::dirac(4, 0),
            &ProbabilityMeasure::dirac(4, 3),
            &default_k_values(),
            &SolveOptions::default(),
        )?;
        let elapsed = start.elapsed();
        let last_gap = *report.mk_optimal_set_check.last().unwrap_or(&f64::INFINITY);
        let passed = report.mk_value == 3.0
            && report.last_is_closest()
            && last_three_non_increasing(&report.distance_to_limit(), 0.0)
            && last_gap < 0.05
            && elapsed < Duration::from_secs(30);
        let values: Vec<String> = report.normalized_values.iter().map(|v| format!("{v:.4}")).collect();
        Ok((
            passed,
            format!("MK value {}, normalized values [{}], cost gap at 1e6 {last_gap:.2e}, {elapsed:.2?}", report.mk_value, values.join(", ")),
        ))
    })())
}

pub fn gamma_limit_quadratic() -> Outcome {
    outcome(10, "Slowing-down limit, quadratic cost", (|| {
        let grid = unit_grid(21);
        let base = Measure::new(vec![1.0 / 20.0; 21])?;
        let mu0 = grid_gaussian(&grid, 0.25, 0.1);
        let mu1 = grid_gaussian(&grid, 0.75, 0.1);
        let report = gamma_sweep_gaussian(&grid, &base, &mu0, &mu1, &default_k_values(), &SolveOptions::default())?;
        let oracle = quadratic_cost_1d(&grid, mu0.weights(), mu1.weights());
        let last = *report.normalized_values.last().unwrap_or(&f64::NAN);
        let rel = (last - oracle).abs() / oracle;
        let tv = entropic_midpoint_vs_displacement(&report, &grid, &mu0, &mu1)?;
        let monotone = last_three_non_increasing(&tv, 0.0);
        let tv_text: Vec<String> = tv.iter().map(|v| format!("{v:.2e}")).collect();
        Ok((
            rel <= 0.1 && monotone,
            format!("value at 1e6 {last:.6} vs W2^2/2 {oracle:.6} (rel {rel:.2e}); midpoint TV [{}]", tv_text.join(", ")),
        ))
    })())
}

pub fn entropy_identities() -> Outcome {
    outcome(11, "Variational formula and additive decomposition", (|| {
        let mut rng = ChaCha8Rng::seed_from_u64(BASE_SEED + 3000);
        let mut worst_opt: f64 = 0.0;
        let mut worst_violation = f64::NEG_INFINITY;
        for _ in 0..10 {
            let n = rng.random_range(2..=6);
            let p = ProbabilityMeasure::from_unnormalized((0..n).map(|_| rng.random_range(0.0..1.0)).collect())?;
            let r = Measure::new((0..n).map(|_| rng.random_range(0.1..2.0)).collect())?;
            let trials: Vec<Vec<f64>> =
                (0..100).map(|_| (0..n).map(|_| rng.random_range(-3.0..3.0)).collect()).collect();
            let report = verify_variational_formula(&p, &r, &trials)?;
            worst_opt = worst_opt.max(report.optimizer_gap);
            worst_violation = worst_violation.max(report.max_violation);
        }
        let mut worst_split: f64 = 0.0;
        for _ in 0..20 {
            let p = ProbabilityMeasure::from_unnormalized((0..9).map(|_| rng.random_range(0.0..1.0)).collect())?;
            let r = Measure::new((0..9).map(|_| rng.random_range(0.1..2.0)).collect())?;
            let split = additive_decomposition(&p, &r, JointShape { rows: 3, cols: 3 })?;
            let direct = relative_entropy(&p, &r)?.expect_finite("joint entropy");
            worst_split = worst_split.max((split.total().expect_finite("decomposition") - direct).abs());
        }
        let passed = worst_opt <= 1e-10 && worst_violation <= 1e-12 && worst_split <= 1e-10;
        Ok((
            passed,
            format!(
                "optimizer gap {worst_opt:.2e}, max bound violation {worst_violation:.2e} over 1000 bounds, decomposition error {worst_split:.2e}"
            ),
        ))
    })())
}

/// Setup of the particle experiment: simple random walk on the 4-cycle,
/// uniform start, target mildly concentrated on node 0.
pub fn particle_setup(n: usize, batches: usize) -> Result<(SimulationConfig, StaticSolution)> {
    let chain = simple_random_walk(4, &[(0, 1), (1, 2), (2, 3), (3, 0)])?;
    let mu0 = ProbabilityMeasure::uniform(4);
    let rest = 0.65 / 3.0;
    let mu1 = ProbabilityMeasure::from_unnormalized(vec![0.35, rest, rest, rest])?;
    let sol = solve(&chain.endpoint_coupling()?, &mu0, &mu1, &SolveOptions::default())?;
    let config = SimulationConfig {
        chain,
        n,
        initial_positions: InitialPositions::Profile(mu0),
        target: mu1,
        epsilon: 0.05,
        seed: BASE_SEED,
        batches,
    };
    Ok((config, sol))
}

pub fn particle_lab() -> Outcome {
    outcome(12, "Conditioned particles", (|| {
        let start = Instant::now();
        let (config, sol) = particle_setup(200, 20_000)?;
        let path = build_path(&config.chain, &sol.potentials, 100)?;
        let r = condition_and_compare(&config, &sol, &path)?;
        let elapsed = start.elapsed();
        let se = r.standard_errors.rate_estimate;
        let within = (r.rate_estimate - r.reference_value).abs() <= 3.0 * se;
        let passed = r.accepted_batches >= 50 && r.midtime_tv <= 0.1 && within && elapsed < Duration::from_secs(120);
        Ok((
            passed,
            format!(
                "{} accepted of {}, mid-time TV {:.4}, rate {:.5} vs reference {:.5} (bootstrap SE {:.1e}), {elapsed:.2?}",
                r.accepted_batches, r.batches, r.midtime_tv, r.rate_estimate, r.reference_value, se
            ),
        ))
    })())
}

pub type Check = fn() -> Outcome;

pub const ALL: [Check; 12] = [
    system_residual,
    duality,
    two_state_oracle,
    born_and_disintegration,
    markov_preservation,
    pde_refinement,
    action_identity,
    entropy_convexity,
    gamma_limit_graph,
    gamma_limit_quadratic,
    entropy_identities,
    particle_lab,
];

pub fn run_all() -> Vec<Outcome> {
    ALL.iter().map(|check| check()).collect()
}
