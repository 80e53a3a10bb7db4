use std::collections::BinaryHeap;

use nalgebra::DMatrix;

use super::LimitError;
use crate::graph::{enumerate_paths, EnumerationOptions, PathView, PathVisitor, WeightedDigraph};

pub const RESERVOIR_CAP: usize = 100_000;
pub const MAX_ORDER: usize = 4;

/// All multi-indices `q` in `n` variables with `1 <= |q| <= 4`, graded then
/// lexicographically descending.
pub fn multi_indices(n: usize) -> Vec<Vec<u32>> {
    fn rec(n: usize, left: u32, prefix: &mut Vec<u32>, out: &mut Vec<Vec<u32>>) {
        if prefix.len() == n {
            if left == 0 {
                out.push(prefix.clone());
            }
            return;
        }
        for e in (0..=left).rev() {
            prefix.push(e);
            rec(n, left - e, prefix, out);
            prefix.pop();
        }
    }
    let mut out = Vec::new();
    for order in 1..=MAX_ORDER as u32 {
        rec(n, order, &mut Vec::new(), &mut out);
    }
    out
}

fn mix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Order-independent sampling key of a path: depends only on the seed and the
/// state sequence.
pub fn path_key(seed: u64, states: &[usize]) -> u64 {
    let mut h = mix(seed ^ 0x5851_f42d_4c95_7f2d);
    for &s in states {
        h = mix(h ^ s as u64);
    }
    mix(h ^ states.len() as u64)
}

#[derive(Debug, Clone)]
pub struct AccumulateOptions {
    pub seed: u64,
    pub reservoir_cap: usize,
    pub enumeration: EnumerationOptions,
}

impl Default for AccumulateOptions {
    fn default() -> Self {
        AccumulateOptions {
            seed: 0,
            reservoir_cap: RESERVOIR_CAP,
            enumeration: EnumerationOptions::default(),
        }
    }
}

/// Streaming accumulator for one threshold `T`.
#[derive(Debug, Clone)]
pub struct MomentVisitor {
    t: f64,
    lambda: Vec<f64>,
    seed: u64,
    cap: usize,
    indices: Vec<Vec<u32>>,
    count: u64,
    sum_c: Vec<f64>,
    sum_len: f64,
    /// Raw sums of `z^q` over `indices`, `z = (c - Lambda l)/sqrt(T)`.
    sum_z: Vec<f64>,
    /// Sums of `y y^T`, `y = (c - Lambda T)/sqrt(T)`.
    sum_yy: Vec<f64>,
    sum_y: Vec<f64>,
    /// Max-heap on key; holds the `cap` smallest keys seen.
    heap: BinaryHeap<(u64, usize)>,
    slots: Vec<f64>,
    scratch: Vec<f64>,
}

impl MomentVisitor {
    pub fn new(t: f64, lambda: &[f64], seed: u64, cap: usize) -> Self {
        let n = lambda.len();
        let indices = multi_indices(n);
        MomentVisitor {
            t,
            lambda: lambda.to_vec(),
            seed,
            cap,
            count: 0,
            sum_c: vec![0.0; n],
            sum_len: 0.0,
            sum_z: vec![0.0; indices.len()],
            indices,
            sum_yy: vec![0.0; n * n],
            sum_y: vec![0.0; n],
            heap: BinaryHeap::new(),
            slots: Vec::new(),
            scratch: vec![0.0; n * (MAX_ORDER + 1)],
        }
    }

    fn offer(&mut self, key: u64, z: &[f64]) {
        let n = z.len();
        if self.cap == 0 {
            return;
        }
        if self.heap.len() < self.cap {
            let slot = self.heap.len();
            self.slots.extend_from_slice(z);
            self.heap.push((key, slot));
        } else if let Some(&(top, slot)) = self.heap.peek() {
            if key < top {
                self.heap.pop();
                self.slots[slot * n..(slot + 1) * n].copy_from_slice(z);
                self.heap.push((key, slot));
            }
        }
    }

    pub fn finish(self) -> EmpiricalSummary {
        let n = self.lambda.len();
        let nf = self.count as f64;
        let empty = self.count == 0;
        let div = |x: f64| if empty { f64::NAN } else { x / nf };

        let mean: Vec<f64> = self.sum_c.iter().map(|&s| div(s) / self.t).collect();
        let moments: Vec<(Vec<u32>, f64)> = self
            .indices
            .iter()
            .cloned()
            .zip(self.sum_z.iter().map(|&s| div(s)))
            .collect();

        let first = |i: usize| {
            moments
                .iter()
                .find(|(q, _)| q.iter().sum::<u32>() == 1 && q[i] == 1)
                .map(|m| m.1)
                .unwrap_or(f64::NAN)
        };
        let second = |i: usize, j: usize| {
            let mut want = vec![0u32; n];
            want[i] += 1;
            want[j] += 1;
            moments
                .iter()
                .find(|(q, _)| *q == want)
                .map(|m| m.1)
                .unwrap_or(f64::NAN)
        };
        let cov_hat = DMatrix::from_fn(n, n, |i, j| second(i, j) - first(i) * first(j));
        let cov_lambda_t = DMatrix::from_fn(n, n, |i, j| div(self.sum_yy[i * n + j]));
        let cov_sample = DMatrix::from_fn(n, n, |i, j| {
            div(self.sum_yy[i * n + j]) - div(self.sum_y[i]) * div(self.sum_y[j])
        });

        let mut entries: Vec<(u64, usize)> = self.heap.into_vec();
        entries.sort_unstable();
        let reservoir: Vec<Vec<f64>> = entries
            .iter()
            .map(|&(_, slot)| self.slots[slot * n..(slot + 1) * n].to_vec())
            .collect();

        EmpiricalSummary {
            t: self.t,
            count: self.count,
            lambda: self.lambda,
            mean,
            mean_length: div(self.sum_len),
            moments,
            cov_hat,
            cov_lambda_t,
            cov_sample,
            reservoir,
            seed: self.seed,
            empty,
        }
    }
}

impl PathVisitor for MomentVisitor {
    fn visit(&mut self, p: &PathView<'_>) {
        let n = self.lambda.len();
        let rt = self.t.sqrt();
        self.count += 1;
        self.sum_len += p.length;
        let mut z = [0.0f64; 16];
        let z = if n <= 16 { &mut z[..n] } else { return };
        for i in 0..n {
            let c = p.costs[i];
            self.sum_c[i] += c;
            z[i] = (c - self.lambda[i] * p.length) / rt;
            let y = (c - self.lambda[i] * self.t) / rt;
            self.sum_y[i] += y;
            self.scratch[i] = y;
        }
        for i in 0..n {
            for j in 0..n {
                self.sum_yy[i * n + j] += self.scratch[i] * self.scratch[j];
            }
        }
        // powers[i * 5 + e] = z_i^e
        let mut powers = [1.0f64; 16 * (MAX_ORDER + 1)];
        for i in 0..n {
            for e in 1..=MAX_ORDER {
                powers[i * 5 + e] = powers[i * 5 + e - 1] * z[i];
            }
        }
        for (acc, q) in self.sum_z.iter_mut().zip(&self.indices) {
            let mut m = 1.0;
            for (i, &e) in q.iter().enumerate() {
                if e > 0 {
                    m *= powers[i * 5 + e as usize];
                }
            }
            *acc += m;
        }
        let key = path_key(self.seed, p.states);
        self.offer(key, z);
    }

    fn split(&self) -> Self {
        MomentVisitor::new(self.t, &self.lambda, self.seed, self.cap)
    }

    fn merge(&mut self, other: Self) {
        let n = self.lambda.len();
        self.count += other.count;
        self.sum_len += other.sum_len;
        for (a, b) in self.sum_c.iter_mut().zip(&other.sum_c) {
            *a += b;
        }
        for (a, b) in self.sum_z.iter_mut().zip(&other.sum_z) {
            *a += b;
        }
        for (a, b) in self.sum_yy.iter_mut().zip(&other.sum_yy) {
            *a += b;
        }
        for (a, b) in self.sum_y.iter_mut().zip(&other.sum_y) {
            *a += b;
        }
        for (key, slot) in other.heap.into_vec() {
            let z = &other.slots[slot * n..(slot + 1) * n];
            self.offer(key, z);
        }
    }
}

/// Statistics of `mu_T`: the uniform measure on paths from the start vertex
/// with length below `T`.
#[derive(Debug, Clone, PartialEq)]
pub struct EmpiricalSummary {
    pub t: f64,
    pub count: u64,
    pub lambda: Vec<f64>,
    /// Average of `c(p)/T`.
    pub mean: Vec<f64>,
    pub mean_length: f64,
    /// Raw moments `E[z^q]` with `z = (c(p) - Lambda l(p))/sqrt(T)`.
    pub moments: Vec<(Vec<u32>, f64)>,
    /// Covariance of `z`.
    pub cov_hat: DMatrix<f64>,
    /// Second moments of `(c(p) - Lambda T)/sqrt(T)`.
    pub cov_lambda_t: DMatrix<f64>,
    /// Covariance of `c(p)/sqrt(T)` about its sample mean.
    pub cov_sample: DMatrix<f64>,
    /// Bottom-key sample of `z` vectors, sorted by key.
    pub reservoir: Vec<Vec<f64>>,
    pub seed: u64,
    pub empty: bool,
}

impl EmpiricalSummary {
    pub fn dim(&self) -> usize {
        self.lambda.len()
    }

    /// `E[z^q]`; `None` for orders outside `1..=4`.
    pub fn moment(&self, q: &[u32]) -> Option<f64> {
        self.moments.iter().find(|(m, _)| m == q).map(|m| m.1)
    }

    /// Coordinate `i` of every reservoir sample.
    pub fn samples(&self, i: usize) -> Vec<f64> {
        self.reservoir.iter().map(|z| z[i]).collect()
    }
}

/// Enumerates paths below `T` from `start` and accumulates their statistics
/// against the supplied mean vector.
pub fn accumulate(
    g: &WeightedDigraph,
    start: &str,
    t: f64,
    lambda: &[f64],
    opts: &AccumulateOptions,
) -> Result<EmpiricalSummary, LimitError> {
    if lambda.len() != g.cost_dim() {
        return Err(LimitError::DimensionMismatch {
            expected: g.cost_dim(),
            found: lambda.len(),
        });
    }
    if lambda.len() > 16 {
        return Err(LimitError::TooManyCosts(lambda.len()));
    }
    let visitor = MomentVisitor::new(t, lambda, opts.seed, opts.reservoir_cap);
    let out = enumerate_paths(g, start, t, visitor, opts.enumeration)?;
    Ok(out.visitor.finish())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::fixtures::loop2;

    const LAMBDA: f64 = 0.4734620271044482;

    #[test]
    fn index_table() {
        assert_eq!(multi_indices(1), vec![vec![1], vec![2], vec![3], vec![4]]);
        assert_eq!(multi_indices(2).len(), 14);
    }

    #[test]
    fn loop2_mean_near_lambda() {
        let s = accumulate(&loop2(), "v", 15.0, &[LAMBDA], &Default::default()).unwrap();
        let ratio = s.mean[0] * 15.0 / s.mean_length;
        assert!((ratio - LAMBDA).abs() < 0.03, "{ratio}");
        assert_eq!(s.count, 8583);
        assert_eq!(s.reservoir.len(), 8583);
    }

    #[test]
    fn deterministic_cost() {
        let g = loop2().with_state_costs(1, 1.0, |s| vec![s.length]).unwrap();
        let s = accumulate(&g, "v", 12.0, &[1.0], &Default::default()).unwrap();
        assert!((s.mean[0] * 12.0 - s.mean_length).abs() < 1e-12);
        assert!(s.cov_hat[(0, 0)].abs() < 1e-20);
    }

    #[test]
    fn below_shortest_state_is_empty() {
        let s = accumulate(&loop2(), "v", 0.5, &[LAMBDA], &Default::default()).unwrap();
        assert!(s.empty);
        assert_eq!(s.count, 0);
        assert!(s.reservoir.is_empty());
    }

    #[test]
    fn reservoir_is_bounded_and_thread_independent() {
        let g = loop2();
        let run = |threads| {
            let opts = AccumulateOptions {
                seed: 7,
                reservoir_cap: 500,
                enumeration: EnumerationOptions {
                    threads: Some(threads),
                    ..Default::default()
                },
            };
            accumulate(&g, "v", 14.0, &[LAMBDA], &opts).unwrap()
        };
        let a = run(1);
        let b = run(3);
        assert_eq!(a, b);
        assert_eq!(a.reservoir.len(), 500);
        let c = accumulate(
            &g,
            "v",
            14.0,
            &[LAMBDA],
            &AccumulateOptions {
                seed: 8,
                reservoir_cap: 500,
                ..Default::default()
            },
        )
        .unwrap();
        assert_ne!(a.reservoir, c.reservoir);
    }

    #[test]
    fn keys_ignore_visit_order_but_not_content() {
        assert_eq!(path_key(1, &[0, 1, 1]), path_key(1, &[0, 1, 1]));
        assert_ne!(path_key(1, &[0, 1, 1]), path_key(1, &[1, 0, 1]));
        assert_ne!(path_key(1, &[0]), path_key(1, &[0, 0]));
    }
}
