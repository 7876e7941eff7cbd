#![allow(dead_code)]

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use schrodinger::markov::{simple_random_walk, ReversibleChain};
use schrodinger::{Measure, ProbabilityMeasure};

/// Random connected chain: a spanning path in shuffled order plus a few chords.
pub fn random_chain(seed: u64, n: usize) -> (ReversibleChain, ProbabilityMeasure, ProbabilityMeasure) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let m: Vec<f64> = (0..n).map(|_| rng.random_range(0.5..2.0)).collect();
    let mut edges: Vec<(usize, usize, f64)> = (1..n).map(|x| (x - 1, x, rng.random_range(0.5..2.0))).collect();
    for x in 0..n {
        for y in x + 2..n {
            if rng.random_bool(0.25) {
                edges.push((x, y, rng.random_range(0.5..2.0)));
            }
        }
    }
    let chain = ReversibleChain::from_conductances(Measure::new(m).unwrap(), &edges).unwrap();
    let mut profile = || {
        let w: Vec<f64> = (0..n).map(|_| rng.random_range(0.05..1.0)).collect();
        ProbabilityMeasure::from_unnormalized(w).unwrap()
    };
    let mu0 = profile();
    let mu1 = profile();
    (chain, mu0, mu1)
}

pub fn cycle(n: usize) -> ReversibleChain {
    let edges: Vec<(usize, usize)> = (0..n).map(|x| (x, (x + 1) % n)).collect();
    simple_random_walk(n, &edges).unwrap()
}

pub fn path_graph(n: usize) -> ReversibleChain {
    let edges: Vec<(usize, usize)> = (1..n).map(|x| (x - 1, x)).collect();
    simple_random_walk(n, &edges).unwrap()
}
