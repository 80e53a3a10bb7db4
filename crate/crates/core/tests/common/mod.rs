#![allow(dead_code)]

use std::f64::consts::SQRT_2;

use flatcount::graph::{GraphBuilder, WeightedDigraph};
use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// One vertex with loops `a` (length 1, cost 1) and `b` (length sqrt 2, cost 0).
pub fn loop2() -> WeightedDigraph {
    let mut b = GraphBuilder::new(1, 1.0);
    b.add_state("a", "v", "v", 1.0, vec![1.0]);
    b.add_state("b", "v", "v", SQRT_2, vec![0.0]);
    b.transall();
    b.build().unwrap()
}

/// [`loop2`] with a second cost counting every loop.
pub fn loop2_two_costs() -> WeightedDigraph {
    let mut b = GraphBuilder::new(2, 1.0);
    b.add_state("a", "v", "v", 1.0, vec![1.0, 1.0]);
    b.add_state("b", "v", "v", SQRT_2, vec![0.0, 1.0]);
    b.transall();
    b.build().unwrap()
}

pub fn bisect(mut lo: f64, mut hi: f64, f: impl Fn(f64) -> f64) -> f64 {
    let flo = f(lo);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if (f(mid) > 0.0) == (flo > 0.0) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

/// Growth rate of [`loop2`]: root of `e^-h + e^-(sqrt 2) h = 1`.
pub fn loop2_h() -> f64 {
    bisect(0.0, 2.0, |h| (-h).exp() + (-SQRT_2 * h).exp() - 1.0)
}

/// Mean of the `a`-count per unit length for [`loop2`].
pub fn loop2_lambda() -> f64 {
    let h = loop2_h();
    let (a, b) = ((-h).exp(), (-SQRT_2 * h).exp());
    a / (a + SQRT_2 * b)
}

/// Dense edge-indexed matrix `M(s)` at `t = 0`.
pub fn full_matrix(g: &WeightedDigraph, s: f64) -> DMatrix<f64> {
    let n = g.len();
    let mut m = DMatrix::zeros(n, n);
    for i in 0..n {
        for &j in g.successors(i) {
            m[(i, j)] = (-s * g.state(j).length).exp();
        }
    }
    m
}

pub fn spectral_radius(m: &DMatrix<f64>) -> f64 {
    m.complex_eigenvalues().iter().map(|z| z.norm()).fold(0.0, f64::max)
}

/// Growth rate from the full matrix by bisection on the spectral radius.
pub fn full_matrix_h(g: &WeightedDigraph) -> f64 {
    bisect(-5.0, 20.0, |s| spectral_radius(&full_matrix(g, s)) - 1.0)
}

/// Strongly connected random graph on one vertex set: a Hamiltonian cycle of
/// states plus `extra` random successors per state. Costs are uniform in
/// `[0, 1]` times the length, plus one length-proportional channel when
/// `dim > 1`.
pub fn random_graph(seed: u64, n: usize, extra: usize, dim: usize) -> WeightedDigraph {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut b = GraphBuilder::new(dim, 1.0);
    let mut ids = Vec::with_capacity(n);
    for i in 0..n {
        let len = rng.random_range(0.5..3.0);
        let mut costs: Vec<f64> = (0..dim).map(|_| rng.random_range(0.0..1.0) * len).collect();
        if dim > 1 {
            costs[dim - 1] = 0.5 * len;
        }
        ids.push(b.add_state(&format!("e{i}"), "u", "u", len, costs));
    }
    for i in 0..n {
        b.add_transition(ids[i], ids[(i + 1) % n]);
        for _ in 0..extra {
            let j = rng.random_range(0..n);
            b.add_transition(ids[i], ids[j]);
        }
    }
    b.build().unwrap()
}

/// Like [`random_graph`] with one cost, but lengths grow with the state index
/// the way a length truncation of an infinite system does.
pub fn graded_graph(seed: u64, n: usize, extra: usize) -> WeightedDigraph {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut b = GraphBuilder::new(1, 1.0);
    let mut ids = Vec::with_capacity(n);
    for i in 0..n {
        let len = 0.5 + 8.0 * i as f64 / n as f64 + rng.random_range(0.0..0.3);
        let cost = rng.random_range(0.0..1.0) * len;
        ids.push(b.add_state(&format!("e{i}"), "u", "u", len, vec![cost]));
    }
    for i in 0..n {
        b.add_transition(ids[i], ids[(i + 1) % n]);
        for _ in 0..extra {
            let j = rng.random_range(0..n);
            b.add_transition(ids[i], ids[j]);
        }
    }
    b.build().unwrap()
}
