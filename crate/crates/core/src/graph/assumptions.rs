use std::collections::VecDeque;

use rayon::prelude::*;

use super::cycles::{cycle_basis, dijkstra, trace_path, CycleOptions};
use super::WeightedDigraph;

/// Pairs sampled for the connector constant on large graphs: sources x targets.
const LARGE_GRAPH: usize = 1000;
const SAMPLE_SIDE: usize = 100;
const MAX_STORED_WITNESSES: usize = 10_000;

#[derive(Debug, Clone, PartialEq)]
pub struct G1Entry {
    pub sigma: f64,
    pub sum: f64,
    /// Contribution of the longest tenth of the states.
    pub last_decile: f64,
    /// Whether contributions per length decile are non-increasing.
    pub deciles_monotone: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConnectivityReport {
    pub strongly_connected: bool,
    pub pairs_sampled: usize,
    /// `(from, to, connector length)` for up to the first 10^4 sampled pairs.
    pub connector_lengths: Vec<(usize, usize, f64)>,
    /// Max over samples of connector length minus both endpoint lengths.
    pub estimated_c: f64,
    /// Connector realising `estimated_c`.
    pub worst_witness: Option<Vec<usize>>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LatticeReport {
    pub suspected: bool,
    pub spacing: Option<f64>,
    pub residual: f64,
    pub lengths_tested: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct AssumptionReport {
    pub g1: Vec<G1Entry>,
    pub g2: ConnectivityReport,
    pub g3: LatticeReport,
    pub cycle_count: usize,
}

fn reach(k: usize, start: usize, next: impl Fn(usize) -> Vec<usize>) -> usize {
    let mut seen = vec![false; k];
    seen[start] = true;
    let mut queue = VecDeque::from([start]);
    let mut n = 1;
    while let Some(x) = queue.pop_front() {
        for y in next(x) {
            if !seen[y] {
                seen[y] = true;
                n += 1;
                queue.push_back(y);
            }
        }
    }
    n
}

pub(crate) fn strongly_connected(g: &WeightedDigraph) -> bool {
    let k = g.len();
    if k == 0 {
        return false;
    }
    let mut preds: Vec<Vec<usize>> = vec![Vec::new(); k];
    for x in 0..k {
        for &y in g.successors(x) {
            preds[y].push(x);
        }
    }
    reach(k, 0, |x| g.successors(x).to_vec()) == k && reach(k, 0, |x| preds[x].clone()) == k
}

fn g1_entry(g: &WeightedDigraph, sigma: f64) -> G1Entry {
    let terms: Vec<f64> = g.states().iter().map(|s| (-sigma * s.length).exp()).collect();
    let k = terms.len();
    let sum: f64 = terms.iter().sum();
    let deciles: Vec<f64> = (0..10)
        .map(|d| terms[d * k / 10..(d + 1) * k / 10].iter().sum())
        .collect();
    let monotone = deciles.windows(2).all(|w| w[1] <= w[0] * (1.0 + 1e-12));
    G1Entry {
        sigma,
        sum,
        last_decile: deciles[9],
        deciles_monotone: monotone,
    }
}

fn connectivity(g: &WeightedDigraph) -> ConnectivityReport {
    let k = g.len();
    let strongly = strongly_connected(g);
    let (sources, targets): (Vec<usize>, Vec<usize>) = if k <= LARGE_GRAPH {
        ((0..k).collect(), (0..k).collect())
    } else {
        let stride = |i: usize| i * k / SAMPLE_SIDE;
        (
            (0..SAMPLE_SIDE).map(stride).collect(),
            (0..SAMPLE_SIDE).map(|i| (stride(i) + k / (2 * SAMPLE_SIDE)) % k).collect(),
        )
    };

    let per_source: Vec<Vec<(usize, usize, f64)>> = sources
        .par_iter()
        .map(|&e| {
            let best = dijkstra(g, e);
            targets
                .iter()
                .filter(|&&f| f != e || k == 1)
                .filter(|&&f| best[f].0.is_finite())
                .map(|&f| (e, f, best[f].0))
                .collect()
        })
        .collect();

    let mut pairs_sampled = 0;
    let mut stored = Vec::new();
    let mut worst: Option<(usize, usize, f64)> = None;
    for row in per_source {
        for (e, f, len) in row {
            pairs_sampled += 1;
            let excess = len - g.state(e).length - g.state(f).length;
            if worst.map_or(true, |(_, _, w)| excess > w) {
                worst = Some((e, f, excess));
            }
            if stored.len() < MAX_STORED_WITNESSES {
                stored.push((e, f, len));
            }
        }
    }
    let worst_witness = worst.and_then(|(e, f, _)| trace_path(&dijkstra(g, e), e, f));
    ConnectivityReport {
        strongly_connected: strongly,
        pairs_sampled,
        connector_lengths: stored,
        estimated_c: worst.map_or(f64::NAN, |w| w.2),
        worst_witness,
    }
}

/// Denominator cap for the rationality search at tolerance `tol`: convergents
/// with larger denominators approximate any real to within `tol` and would
/// make every length set look arithmetic.
fn denominator_cap(tol: f64) -> u64 {
    let cap = 0.1 / tol.max(1e-300).sqrt();
    cap.clamp(1.0, 1e6) as u64
}

/// First continued-fraction convergent `p/q` with `|x - p/q| <= tol * max(1, x)`
/// and `q <= q_max`.
fn rational_approx(x: f64, tol: f64, q_max: u64) -> Option<(i64, u64)> {
    let (mut h0, mut h1) = (0i128, 1i128);
    let (mut k0, mut k1) = (1i128, 0i128);
    let mut r = x;
    for _ in 0..64 {
        let a = r.floor();
        let ai = a as i128;
        let (h2, k2) = (ai * h1 + h0, ai * k1 + k0);
        if k2 as u64 > q_max {
            return None;
        }
        if (x - h2 as f64 / k2 as f64).abs() <= tol * x.abs().max(1.0) {
            return Some((h2 as i64, k2 as u64));
        }
        (h0, h1, k0, k1) = (h1, h2, k1, k2);
        let frac = r - a;
        if frac <= 0.0 {
            return None;
        }
        r = 1.0 / frac;
    }
    None
}

fn gcd(a: u64, b: u64) -> u64 {
    if b == 0 {
        a
    } else {
        gcd(b, a % b)
    }
}

/// Tests whether all `lengths` lie in a common lattice `dZ`.
pub fn lattice_search(lengths: &[f64], tol: f64) -> LatticeReport {
    let positive: Vec<f64> = lengths.iter().copied().filter(|&l| l > 0.0).collect();
    let Some(base) = positive.iter().copied().min_by(f64::total_cmp) else {
        return LatticeReport {
            suspected: false,
            spacing: None,
            residual: f64::NAN,
            lengths_tested: 0,
        };
    };
    let q_max = denominator_cap(tol);
    let mut lcm: u64 = 1;
    let mut ok = true;
    for &l in &positive {
        match rational_approx(l / base, tol, q_max) {
            Some((_, q)) => {
                lcm = lcm / gcd(lcm, q) * q;
                if lcm > q_max {
                    ok = false;
                    break;
                }
            }
            None => {
                ok = false;
                break;
            }
        }
    }
    let d = base / lcm as f64;
    let residual = positive
        .iter()
        .map(|&l| (l - d * (l / d).round()).abs())
        .fold(0.0, f64::max);
    let suspected = ok && residual <= tol * positive.iter().copied().fold(1.0, f64::max);
    LatticeReport {
        suspected,
        spacing: suspected.then_some(d),
        residual,
        lengths_tested: positive.len(),
    }
}

/// Report-only check of summability, connectivity and non-arithmeticity.
pub fn validate_assumptions(g: &WeightedDigraph, sigmas: &[f64], lattice_tol: f64) -> AssumptionReport {
    let g1 = sigmas.iter().map(|&s| g1_entry(g, s)).collect();
    let g2 = connectivity(g);
    let cycles = cycle_basis(g, 2.0 * g.max_length(), CycleOptions::default()).unwrap_or_default();
    let lengths: Vec<f64> = cycles.iter().map(|c| c.length).collect();
    let g3 = lattice_search(&lengths, lattice_tol);
    AssumptionReport {
        g1,
        g2,
        g3,
        cycle_count: cycles.len(),
    }
}

#[cfg(test)]
mod tests {
    use super::super::fixtures::{lat2, loop2};
    use super::super::GraphBuilder;
    use super::*;

    #[test]
    fn loop2_connected_and_not_arithmetic() {
        let r = validate_assumptions(&loop2(), &[0.5, 1.0], 1e-9);
        assert!(r.g2.strongly_connected);
        assert!(!r.g3.suspected);
        assert_eq!(r.g1.len(), 2);
        let want = (-1.0f64).exp() + (-std::f64::consts::SQRT_2).exp();
        assert!((r.g1[1].sum - want).abs() < 1e-15);
    }

    #[test]
    fn lat2_is_arithmetic_with_unit_spacing() {
        let r = validate_assumptions(&lat2(), &[1.0], 1e-9);
        assert!(r.g3.suspected);
        assert!((r.g3.spacing.unwrap() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn disconnected_components() {
        let mut b = GraphBuilder::new(0, 1.0);
        b.add_state("a", "u", "u", 1.0, vec![]);
        b.add_state("b", "w", "w", 1.5, vec![]);
        b.transall();
        let r = validate_assumptions(&b.build().unwrap(), &[1.0], 1e-9);
        assert!(!r.g2.strongly_connected);
    }

    #[test]
    fn witness_is_a_valid_path() {
        let mut b = GraphBuilder::new(0, 1.0);
        b.add_state("x", "u", "w", 1.0, vec![]);
        b.add_state("y", "w", "u", 2.0, vec![]);
        b.add_state("z", "w", "w", 0.5, vec![]);
        b.transall();
        let g = b.build().unwrap();
        let r = validate_assumptions(&g, &[1.0], 1e-9);
        let w = r.g2.worst_witness.unwrap();
        assert!(g.path_record(&w).is_ok());
        assert!(r.g2.estimated_c >= 0.0);
    }

    #[test]
    fn rationality_search() {
        assert!(lattice_search(&[0.5, 1.5, 2.25], 1e-9).suspected);
        assert!((lattice_search(&[0.5, 1.5, 2.25], 1e-9).spacing.unwrap() - 0.25).abs() < 1e-12);
        assert!(!lattice_search(&[1.0, std::f64::consts::SQRT_2], 1e-9).suspected);
        assert!(!lattice_search(&[1.0, std::f64::consts::PI], 1e-9).suspected);
        assert!(!lattice_search(&[], 1e-9).suspected);
    }

    #[test]
    fn deciles_of_sorted_lengths_are_monotone() {
        let mut b = GraphBuilder::new(0, 1.0);
        for i in 0..40 {
            b.add_state(&format!("s{i}"), "v", "v", 1.0 + i as f64 * 0.1, vec![]);
        }
        let e = g1_entry(&b.build().unwrap(), 1.0);
        assert!(e.deciles_monotone);
        assert!(e.last_decile < e.sum / 10.0);
    }
}
