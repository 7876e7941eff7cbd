mod common;

use schrodinger::interpolation::build_path;
use schrodinger::markov::ReversibleChain;
use schrodinger::measure::total_variation;
use schrodinger::particles::{
    condition_and_compare, exact_acceptance_probability, simulate_walkers, InitialPositions, SimulationConfig,
};
use schrodinger::schrodinger::{solve, SolveOptions};
use schrodinger::{Measure, ProbabilityMeasure};

use common::path_graph;

fn two_state() -> ReversibleChain {
    ReversibleChain::from_conductances(Measure::new(vec![1.0, 2.0]).unwrap(), &[(0, 1, 1.5)]).unwrap()
}

fn config(chain: ReversibleChain, n: usize, start: InitialPositions, target: ProbabilityMeasure, batches: usize) -> SimulationConfig {
    SimulationConfig { chain, n, initial_positions: start, target, epsilon: 0.3, seed: 99, batches }
}

#[test]
fn single_walker_follows_the_transition_law() {
    let chain = two_state();
    let p = chain.transition_kernel(0.5).unwrap();
    let cfg = config(chain, 1, InitialPositions::Explicit(vec![0]), ProbabilityMeasure::uniform(2), 40_000);
    let walkers = simulate_walkers(&cfg).unwrap();
    let hits = walkers.iter().filter(|b| b[0].state_at(0.5) == 1).count() as f64;
    let freq = hits / 40_000.0;
    let se = (p[(0, 1)] * (1.0 - p[(0, 1)]) / 40_000.0).sqrt();
    assert!((freq - p[(0, 1)]).abs() < 4.0 * se, "{freq} vs {}", p[(0, 1)]);
}

#[test]
fn acceptance_rate_matches_enumeration() {
    let chain = path_graph(3);
    let target = ProbabilityMeasure::new(vec![0.25, 0.25, 0.5]).unwrap();
    let cfg = config(chain.clone(), 4, InitialPositions::Profile(ProbabilityMeasure::uniform(3)), target.clone(), 20_000);
    let exact = exact_acceptance_probability(&cfg).unwrap();
    let start = ProbabilityMeasure::new(vec![0.5, 0.25, 0.25]).unwrap();
    let sol = solve(&chain.endpoint_coupling().unwrap(), &start, &target, &SolveOptions::default()).unwrap();
    let path = build_path(&chain, &sol.potentials, 10).unwrap();
    let report = condition_and_compare(&cfg, &sol, &path).unwrap();
    let se = (exact * (1.0 - exact) / 20_000.0).sqrt();
    assert!((report.acceptance_rate - exact).abs() < 4.0 * se, "{} vs {exact}", report.acceptance_rate);
}

#[test]
fn many_walkers_reproduce_the_evolved_profile() {
    let chain = path_graph(5);
    let mu0 = ProbabilityMeasure::new(vec![0.4, 0.3, 0.1, 0.1, 0.1]).unwrap();
    let cfg = config(chain.clone(), 10_000, InitialPositions::Profile(mu0.clone()), ProbabilityMeasure::uniform(5), 1);
    let walkers = simulate_walkers(&cfg).unwrap();
    let mut counts = vec![0.0; 5];
    for t in &walkers[0] {
        counts[t.terminal()] += 1e-4;
    }
    let p1 = chain.transition_kernel(1.0).unwrap();
    let expected: Vec<f64> = (0..5).map(|y| (0..5).map(|x| mu0.get(x) * p1[(x, y)]).sum()).collect();
    assert!(total_variation(&counts, &expected).unwrap() < 0.02);
}

#[test]
fn reports_depend_only_on_the_seed() {
    let chain = path_graph(3);
    let target = ProbabilityMeasure::uniform(3);
    let cfg = config(chain.clone(), 6, InitialPositions::Profile(ProbabilityMeasure::uniform(3)), target.clone(), 500);
    let sol = solve(&chain.endpoint_coupling().unwrap(), &ProbabilityMeasure::uniform(3), &target, &SolveOptions::default()).unwrap();
    let path = build_path(&chain, &sol.potentials, 10).unwrap();
    let a = condition_and_compare(&cfg, &sol, &path).unwrap();
    let b = rayon::ThreadPoolBuilder::new().num_threads(1).build().unwrap().install(|| condition_and_compare(&cfg, &sol, &path).unwrap());
    assert_eq!(a, b);
}
