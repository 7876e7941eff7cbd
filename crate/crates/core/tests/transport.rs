mod common;

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use schrodinger::interpolation::build_path;
use schrodinger::schrodinger::{solve, SolveOptions};
use schrodinger::transport::{
    gamma_sweep_graph, mk_solve, monotone_coupling, quadratic_cost_1d, quadratic_cost_matrix, TransportProblem,
    SLACK_TOLERANCE,
};
use schrodinger::ProbabilityMeasure;

use common::{cycle, path_graph, random_chain};

fn random_profile(rng: &mut ChaCha8Rng, n: usize) -> ProbabilityMeasure {
    let w: Vec<f64> = (0..n).map(|_| rng.random_range(0.0..1.0)).collect();
    ProbabilityMeasure::from_unnormalized(w).unwrap()
}

#[test]
fn flow_solver_agrees_with_monotone_rearrangement() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for _ in 0..10 {
        let n = rng.random_range(3..9);
        let grid: Vec<f64> = (0..n).map(|i| i as f64 / (n - 1) as f64).collect();
        let (a, b) = (random_profile(&mut rng, n), random_profile(&mut rng, n));
        let problem = TransportProblem::new(quadratic_cost_matrix(&grid), a.clone(), b.clone()).unwrap();
        let sol = mk_solve(&problem).unwrap();
        let oracle = quadratic_cost_1d(&grid, a.weights(), b.weights());
        assert!((sol.value - oracle).abs() < 1e-5, "{} vs {oracle}", sol.value);
        let plan = monotone_coupling(a.weights(), b.weights());
        assert!((problem.cost_of(&plan) - oracle).abs() < 1e-12);
    }
}

#[test]
fn flow_solver_certifies_with_duals() {
    for seed in 0..5 {
        let (chain, mu0, mu1) = random_chain(300 + seed, 6);
        let problem = TransportProblem::new(chain.graph().distance_matrix(), mu0, mu1).unwrap();
        let sol = mk_solve(&problem).unwrap();
        assert!(sol.max_slack <= SLACK_TOLERANCE);
        assert!((sol.value - sol.dual_value).abs() < 1e-9);
        for x in 0..6 {
            let row: f64 = sol.coupling.row(x).sum();
            assert!((row - problem.mu0.get(x)).abs() < 2e-6);
        }
    }
}

#[test]
fn equal_marginals_have_a_vanishing_limit() {
    let chain = path_graph(4);
    let mu = ProbabilityMeasure::new(vec![0.1, 0.4, 0.3, 0.2]).unwrap();
    let report = gamma_sweep_graph(&chain, &mu, &mu, &[10.0, 1e2, 1e3], &SolveOptions::default()).unwrap();
    assert_eq!(report.mk_value, 0.0);
    let d = report.distance_to_limit();
    assert!(d[0] > d[1] && d[1] > d[2], "{d:?}");
    let gaps = &report.mk_optimal_set_check;
    assert!(gaps[0] > gaps[2] && gaps[2] < 0.05, "{gaps:?}");
}

#[test]
fn opposite_corners_of_the_square_split_evenly() {
    let chain = cycle(4).slow_down(1e3).unwrap();
    let (mu0, mu1) = (ProbabilityMeasure::dirac(4, 0), ProbabilityMeasure::dirac(4, 2));
    let k = chain.endpoint_coupling().unwrap();
    let sol = solve(&k, &mu0, &mu1, &SolveOptions::default()).unwrap();
    let path = build_path(&chain, &sol.potentials, 2).unwrap();
    let mid = &path.mu[1];
    assert!((mid[1] - mid[3]).abs() < 1e-12);
    // two jumps at uniform times: binomial weights along the geodesics
    assert!((mid[0] - 0.25).abs() < 1e-3 && (mid[2] - 0.25).abs() < 1e-3, "{mid:?}");
}

#[test]
fn graph_limit_on_the_path() {
    let chain = path_graph(4);
    let (mu0, mu1) = (ProbabilityMeasure::dirac(4, 0), ProbabilityMeasure::dirac(4, 3));
    let report = gamma_sweep_graph(&chain, &mu0, &mu1, &[10.0, 1e2, 1e4], &SolveOptions::default()).unwrap();
    assert_eq!(report.mk_value, 3.0);
    assert!(report.last_is_closest());
    assert!(report.couplings.iter().all(|c| (c - DMatrix::from_fn(4, 4, |x, y| f64::from(x == 0 && y == 3))).amax() < 1e-12));
}
