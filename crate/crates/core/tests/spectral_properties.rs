mod common;

use approx::assert_relative_eq;
use flatcount::graph::{enumerate_paths, CountingVisitor};
use flatcount::limit_laws::{accumulate, AccumulateOptions};
use flatcount::spectral::{degeneracy_test, SolverOptions, SpectralError, SpectralSolver};
use nalgebra::DMatrix;
use proptest::prelude::*;

use common::*;

fn solver_with_head(g: &flatcount::graph::WeightedDigraph, head: usize) -> SpectralSolver<'_> {
    SpectralSolver::new(
        g,
        SolverOptions {
            head: Some(head),
            ..Default::default()
        },
    )
    .unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn truncated_and_full_growth_rates_agree(seed in 0u64..10_000, n in 6usize..20, extra in 1usize..4, k in 1usize..6) {
        let g = random_graph(seed, n, extra, 1);
        let full = solver_with_head(&g, g.len()).growth_rate().unwrap();
        match solver_with_head(&g, k.min(g.len())).growth_rate() {
            Ok(h) => prop_assert!((h - full).abs() < 1e-8, "{h} vs {full}"),
            // a small head can leave the root where the tail does not contract
            Err(SpectralError::TailNotContracting { .. } | SpectralError::BracketFailure { .. }) => {}
            Err(e) => return Err(TestCaseError::fail(e.to_string())),
        }
        let oracle = full_matrix_h(&g);
        prop_assert!((full - oracle).abs() < 1e-8, "{full} vs {oracle}");
    }

    #[test]
    fn analytic_mean_matches_finite_differences(seed in 0u64..10_000, n in 4usize..12) {
        let g = random_graph(seed, n, 2, 1);
        let r = SpectralSolver::new(&g, SolverOptions::default()).unwrap().analyze().unwrap();
        prop_assert!(r.diagnostics.mean_agrees(), "{:?}", r.diagnostics.mean_gap);
        prop_assert!(r.lambda[0] > 0.0);
    }
}

#[test]
fn pressure_is_convex_along_coordinates() {
    let g = loop2_two_costs();
    let solver = SpectralSolver::new(&g, SolverOptions::default()).unwrap();
    let d = 0.05;
    for i in -4..=4 {
        for j in -4..=4 {
            let t = [0.1 * i as f64, 0.1 * j as f64];
            let at = |u: [f64; 2]| solver.pressure(&u, 0.5).unwrap();
            let mid = at(t);
            for axis in 0..2 {
                let mut up = t;
                let mut down = t;
                up[axis] += d;
                down[axis] -= d;
                assert!(at(up) + at(down) - 2.0 * mid >= -1e-9, "{t:?} axis {axis}");
            }
        }
    }
}

#[test]
fn loop2_matches_closed_form() {
    let r = SpectralSolver::new(&loop2(), SolverOptions::default()).unwrap().analyze().unwrap();
    assert_relative_eq!(r.h, loop2_h(), epsilon = 1e-12);
    assert_relative_eq!(r.lambda[0], loop2_lambda(), epsilon = 1e-10);
}

#[test]
fn length_scaling_divides_growth_and_mean() {
    let g = loop2();
    let base = SpectralSolver::new(&g, SolverOptions::default()).unwrap().analyze().unwrap();
    for beta in [0.5, 1.7, 3.0] {
        let scaled = g.scaled_lengths(beta);
        let r = SpectralSolver::new(&scaled, SolverOptions::default()).unwrap().analyze().unwrap();
        assert_relative_eq!(r.h, base.h / beta, epsilon = 1e-11);
        assert_relative_eq!(r.lambda[0], base.lambda[0] / beta, epsilon = 1e-9);
    }
}

#[test]
fn degenerate_directions_match_covariance() {
    // the second channel is proportional to length, so it is degenerate
    for seed in [1u64, 7, 42] {
        let g = random_graph(seed, 8, 2, 2);
        let r = SpectralSolver::new(&g, SolverOptions::default()).unwrap().analyze().unwrap();
        let rep = degeneracy_test(&g, &r.lambda, 2.0 * g.max_length()).unwrap();
        assert!(rep.is_degenerate());
        let tr = r.sigma.trace();
        for v in &rep.degenerate_directions {
            let v = DMatrix::from_column_slice(2, 1, v);
            let q = (v.transpose() * &r.sigma * &v)[(0, 0)];
            assert!(q.abs() <= 1e-8 * tr.max(1.0), "{q}");
        }
    }
    // on one vertex with two loops, (1 - sqrt 2, sqrt 2) . c equals the length
    let g = loop2_two_costs();
    let r = SpectralSolver::new(&g, SolverOptions::default()).unwrap().analyze().unwrap();
    let rep = degeneracy_test(&g, &r.lambda, 4.0).unwrap();
    assert_eq!(rep.residue_rank, 1);
    let v = &rep.degenerate_directions[0];
    let s2 = std::f64::consts::SQRT_2;
    assert!((v[0] * s2 - v[1] * (1.0 - s2)).abs() < 1e-9, "{v:?}");
    let g = random_graph(3, 8, 2, 1);
    let r = SpectralSolver::new(&g, SolverOptions::default()).unwrap().analyze().unwrap();
    let rep = degeneracy_test(&g, &r.lambda, 2.0 * g.max_length()).unwrap();
    assert_eq!(rep.residue_rank, 1);
    assert!(r.sigma[(0, 0)] > 0.0);
}

#[test]
fn empirical_means_do_not_depend_on_base_point() {
    // two vertices joined both ways, with loops at each
    let mut b = flatcount::graph::GraphBuilder::new(1, 1.0);
    b.add_state("p", "u", "u", 1.0, vec![1.0]);
    b.add_state("q", "u", "w", std::f64::consts::SQRT_2, vec![0.0]);
    b.add_state("r", "w", "u", 1.3, vec![0.5]);
    b.add_state("s", "w", "w", 0.9, vec![0.0]);
    b.transall();
    let g = b.build().unwrap();
    let r = SpectralSolver::new(&g, SolverOptions::default()).unwrap().analyze().unwrap();
    let t = 18.0;
    let mu = accumulate(&g, "u", t, &r.lambda, &AccumulateOptions::default()).unwrap();
    let mw = accumulate(&g, "w", t, &r.lambda, &AccumulateOptions::default()).unwrap();
    let ratio = |m: &flatcount::limit_laws::EmpiricalSummary| m.mean[0] * t / m.mean_length;
    let band = 3.0 * r.sigma[(0, 0)].sqrt() / t.sqrt();
    assert!((ratio(&mu) - ratio(&mw)).abs() < band);
    assert!((ratio(&mu) - r.lambda[0]).abs() < band);
}

#[test]
fn log_count_rate_stabilises() {
    let g = loop2();
    let rate = |t: f64| {
        let n = enumerate_paths(&g, "v", t, CountingVisitor::default(), Default::default())
            .unwrap()
            .count;
        (n as f64, (n as f64).ln() / t)
    };
    let (n20, r20) = rate(20.0);
    let (_, r22) = rate(22.0);
    assert!(n20 > 1e5);
    assert!((r20 - r22).abs() < 0.1);
    assert!(r22 < loop2_h() + 0.05);
}
