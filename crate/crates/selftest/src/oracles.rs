//! Seeded instances and independent reference computations.

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use schrodinger::markov::{EndpointKernel, ReversibleChain};
use schrodinger::{Measure, ProbabilityMeasure};

pub const BASE_SEED: u64 = 20_240_601;

/// A chain with two full-support marginals.
#[derive(Debug, Clone)]
pub struct Instance {
    pub seed: u64,
    pub chain: ReversibleChain,
    pub mu0: ProbabilityMeasure,
    pub mu1: ProbabilityMeasure,
}

fn random_profile(rng: &mut ChaCha8Rng, n: usize) -> ProbabilityMeasure {
    let w: Vec<f64> = (0..n).map(|_| rng.random_range(0.05..1.0)).collect();
    ProbabilityMeasure::from_unnormalized(w).expect("positive weights")
}

/// Connected graph on `nodes` states: a random spanning tree plus each
/// remaining pair with probability 0.3. Conductances and `m` are uniform on
/// `[0.5, 2]`.
pub fn random_instance(seed: u64, nodes: usize) -> Instance {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let m: Vec<f64> = (0..nodes).map(|_| rng.random_range(0.5..2.0)).collect();
    let mut edges = Vec::new();
    let mut linked = vec![vec![false; nodes]; nodes];
    for x in 1..nodes {
        let y = rng.random_range(0..x);
        linked[x][y] = true;
        linked[y][x] = true;
        edges.push((x, y, rng.random_range(0.5..2.0)));
    }
    for x in 0..nodes {
        for y in x + 1..nodes {
            if !linked[x][y] && rng.random_bool(0.3) {
                edges.push((x, y, rng.random_range(0.5..2.0)));
            }
        }
    }
    let chain = ReversibleChain::from_conductances(Measure::new(m).expect("positive m"), &edges)
        .expect("random conductances give a reversible chain");
    let mu0 = random_profile(&mut rng, nodes);
    let mu1 = random_profile(&mut rng, nodes);
    Instance { seed, chain, mu0, mu1 }
}

/// The 20 instances shared by several checks: 2 to 8 nodes, cycling.
pub fn random_instances() -> Vec<Instance> {
    (0..20).map(|i| random_instance(BASE_SEED + i as u64, 2 + i % 7)).collect()
}

pub fn five_node_instances() -> Vec<Instance> {
    (0..5).map(|i| random_instance(BASE_SEED + 1000 + i as u64, 5)).collect()
}

pub fn two_state_instances() -> Vec<Instance> {
    (0..10).map(|i| random_instance(BASE_SEED + 2000 + i as u64, 2)).collect()
}

/// Entry `(0,0)` parametrizes every coupling of two laws on two points.
fn two_state_coupling(a: f64, p: f64, q: f64) -> [f64; 4] {
    [a, p - a, q - a, 1.0 - p - q + a]
}

fn two_state_entropy(a: f64, p: f64, q: f64, r: &DMatrix<f64>) -> f64 {
    let c = two_state_coupling(a, p, q);
    let rr = [r[(0, 0)], r[(0, 1)], r[(1, 0)], r[(1, 1)]];
    c.iter().zip(rr).map(|(&v, w)| if v > 0.0 { v * (v / w).ln() } else { 0.0 }).sum()
}

/// Minimize `H(·|R01)` over the couplings of two 2-point laws by golden-section search.
pub fn golden_section_two_state(kernel: &EndpointKernel, mu0: &ProbabilityMeasure, mu1: &ProbabilityMeasure) -> DMatrix<f64> {
    let (p, q) = (mu0.get(0), mu1.get(0));
    let r = kernel.matrix();
    let mut lo = (p + q - 1.0).max(0.0);
    let mut hi = p.min(q);
    let inv_phi = (5f64.sqrt() - 1.0) / 2.0;
    let mut c = hi - inv_phi * (hi - lo);
    let mut d = lo + inv_phi * (hi - lo);
    let mut fc = two_state_entropy(c, p, q, r);
    let mut fd = two_state_entropy(d, p, q, r);
    for _ in 0..200 {
        if hi - lo < 1e-15 {
            break;
        }
        if fc < fd {
            hi = d;
            d = c;
            fd = fc;
            c = hi - inv_phi * (hi - lo);
            fc = two_state_entropy(c, p, q, r);
        } else {
            lo = c;
            c = d;
            fc = fd;
            d = lo + inv_phi * (hi - lo);
            fd = two_state_entropy(d, p, q, r);
        }
    }
    let a = 0.5 * (lo + hi);
    let v = two_state_coupling(a, p, q);
    DMatrix::from_row_slice(2, 2, &v)
}

/// Move mass around the 2×2 cycle `(a,b) → (a,d) → (c,d) → (c,b)` that
/// leaves both marginals unchanged; the cycle with the largest minimum entry
/// is used, with 90% of that minimum as the step.
pub fn corrupt_coupling(coupling: &DMatrix<f64>) -> DMatrix<f64> {
    let (rows, cols) = coupling.shape();
    let mut best = (0.0, 0, 0, 0, 0);
    for a in 0..rows {
        for c in a + 1..rows {
            for b in 0..cols {
                for d in b + 1..cols {
                    let m = coupling[(a, d)].min(coupling[(c, b)]);
                    if m > best.0 {
                        best = (m, a, b, c, d);
                    }
                }
            }
        }
    }
    let (m, a, b, c, d) = best;
    let step = 0.9 * m;
    let mut out = coupling.clone();
    out[(a, b)] += step;
    out[(c, d)] += step;
    out[(a, d)] -= step;
    out[(c, b)] -= step;
    out
}

/// Discretized Gaussian profile on a grid.
pub fn grid_gaussian(grid: &[f64], center: f64, sigma: f64) -> ProbabilityMeasure {
    let w: Vec<f64> = grid.iter().map(|x| (-(x - center).powi(2) / (2.0 * sigma * sigma)).exp()).collect();
    ProbabilityMeasure::from_unnormalized(w).expect("positive weights")
}

pub fn unit_grid(points: usize) -> Vec<f64> {
    (0..points).map(|i| i as f64 / (points - 1) as f64).collect()
}
