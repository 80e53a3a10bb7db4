mod common;

use flatcount::graph::EnumerationOptions;
use flatcount::limit_laws::{accumulate, odd_moment_check, wick_value, AccumulateOptions, MomentSpec};
use flatcount::spectral::{SolverOptions, SpectralResult, SpectralSolver};
use nalgebra::DMatrix;
use proptest::prelude::*;

use common::*;

fn loop2_result() -> SpectralResult {
    SpectralSolver::new(&loop2(), SolverOptions::default())
        .unwrap()
        .analyze()
        .unwrap()
}

#[test]
fn mean_gap_shrinks_with_threshold() {
    let r = loop2_result();
    let at = |t| accumulate(&loop2(), "v", t, &r.lambda, &AccumulateOptions::default()).unwrap();
    let (s15, s20) = (at(15.0), at(20.0));
    let gap = |s: &flatcount::limit_laws::EmpiricalSummary| (s.mean[0] - r.lambda[0]).abs();
    let noise = 2.0 * r.sigma[(0, 0)].sqrt() / (s20.count as f64).sqrt();
    assert!(gap(&s20) < gap(&s15) + noise, "{} vs {}", gap(&s20), gap(&s15));
}

#[test]
fn sample_covariance_approaches_sigma() {
    let r = loop2_result();
    let s = accumulate(&loop2(), "v", 24.0, &r.lambda, &AccumulateOptions::default()).unwrap();
    let rel = (&s.cov_hat - &r.sigma).norm() / r.sigma.norm();
    assert!(rel < 0.25, "{rel}");
}

#[test]
fn odd_moments_stay_in_band() {
    let r = loop2_result();
    let s = accumulate(&loop2(), "v", 20.0, &r.lambda, &AccumulateOptions::default()).unwrap();
    for q in [1, 3] {
        let m = odd_moment_check(&s, &MomentSpec::new(vec![q]).unwrap()).unwrap();
        assert!(m.within_band && !m.degenerate, "{q}: {m:?}");
    }
}

#[test]
fn summaries_do_not_depend_on_thread_count() {
    let r = loop2_result();
    let run = |threads| {
        let opts = AccumulateOptions {
            seed: 11,
            reservoir_cap: 500,
            enumeration: EnumerationOptions {
                threads: Some(threads),
                ..Default::default()
            },
        };
        accumulate(&loop2(), "v", 16.0, &r.lambda, &opts).unwrap()
    };
    let (one, four) = (run(1), run(4));
    assert_eq!(one.reservoir, four.reservoir);
    assert_eq!(one.count, four.count);
    for ((qa, a), (qb, b)) in one.moments.iter().zip(&four.moments) {
        assert_eq!(qa, qb);
        assert!((a - b).abs() <= 1e-12 * a.abs().max(1.0));
    }
}

fn psd(entries: &[f64]) -> DMatrix<f64> {
    let a = DMatrix::from_row_slice(3, 3, entries);
    &a * a.transpose()
}

proptest! {
    #[test]
    fn pairing_sum_is_permutation_invariant(
        entries in proptest::collection::vec(-2.0f64..2.0, 9),
        q in proptest::collection::vec(0u32..3, 3),
        perm in Just([0usize, 1, 2]).prop_shuffle(),
    ) {
        let order: u32 = q.iter().sum();
        prop_assume!(order > 0 && order % 2 == 0 && order <= 4);
        let sigma = psd(&entries);
        let base = wick_value(&sigma, &MomentSpec::new(q.clone()).unwrap()).unwrap();
        let pq: Vec<u32> = perm.iter().map(|&i| q[i]).collect();
        let ps = DMatrix::from_fn(3, 3, |i, j| sigma[(perm[i], perm[j])]);
        let moved = wick_value(&ps, &MomentSpec::new(pq).unwrap()).unwrap();
        prop_assert!((base - moved).abs() <= 1e-10 * base.abs().max(1.0));
    }
}
