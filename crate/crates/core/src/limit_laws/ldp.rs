use super::LimitError;
use crate::graph::{enumerate_paths, EnumerationOptions, PathView, PathVisitor, WeightedDigraph};

/// One point of the tail curve.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LdpPoint {
    pub t: f64,
    pub count: u64,
    pub tail: u64,
    /// `log(tail / count)`; `-inf` when the tail is empty.
    pub log_fraction: f64,
    /// `log_fraction / T`.
    pub rate: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LdpCurve {
    pub epsilon: f64,
    pub index: usize,
    pub points: Vec<LdpPoint>,
    /// Least-squares slope of `log_fraction` against `T` over finite points.
    pub slope: Option<f64>,
}

impl LdpCurve {
    /// Whether the fitted decay is at least `fraction` of a predicted rate.
    pub fn consistent_with(&self, rate: f64, fraction: f64) -> bool {
        self.slope.is_some_and(|s| s < 0.0 && s <= -fraction * rate)
    }
}

struct TailVisitor {
    grid: Vec<f64>,
    lambda_i: f64,
    epsilon: f64,
    index: usize,
    counts: Vec<u64>,
    tails: Vec<u64>,
}

impl PathVisitor for TailVisitor {
    fn visit(&mut self, p: &PathView<'_>) {
        let c = p.costs[self.index];
        // grid is increasing; only thresholds above the path length count it
        let start = self.grid.partition_point(|&t| t <= p.length);
        for k in start..self.grid.len() {
            let t = self.grid[k];
            self.counts[k] += 1;
            if (c / t - self.lambda_i).abs() > self.epsilon {
                self.tails[k] += 1;
            }
        }
    }
    fn split(&self) -> Self {
        TailVisitor {
            grid: self.grid.clone(),
            lambda_i: self.lambda_i,
            epsilon: self.epsilon,
            index: self.index,
            counts: vec![0; self.grid.len()],
            tails: vec![0; self.grid.len()],
        }
    }
    fn merge(&mut self, other: Self) {
        for (a, b) in self.counts.iter_mut().zip(other.counts) {
            *a += b;
        }
        for (a, b) in self.tails.iter_mut().zip(other.tails) {
            *a += b;
        }
    }
}

fn fit_slope(xs: &[f64], ys: &[f64]) -> Option<f64> {
    if xs.len() < 2 {
        return None;
    }
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    if sxx == 0.0 {
        return None;
    }
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    Some(sxy / sxx)
}

/// Exact tail fractions `mu_T(|c_i/T - Lambda_i| > eps)` over an increasing
/// grid of thresholds, from a single enumeration at the largest one.
pub fn ldp_curve(
    g: &WeightedDigraph,
    start: &str,
    t_grid: &[f64],
    epsilon: f64,
    index: usize,
    lambda: &[f64],
    opts: EnumerationOptions,
) -> Result<LdpCurve, LimitError> {
    if index >= g.cost_dim() || lambda.len() != g.cost_dim() {
        return Err(LimitError::DimensionMismatch {
            expected: g.cost_dim(),
            found: lambda.len(),
        });
    }
    if t_grid.is_empty() || t_grid.windows(2).any(|w| !(w[0] < w[1])) {
        return Err(LimitError::Grid);
    }
    let visitor = TailVisitor {
        grid: t_grid.to_vec(),
        lambda_i: lambda[index],
        epsilon,
        index,
        counts: vec![0; t_grid.len()],
        tails: vec![0; t_grid.len()],
    };
    let t_max = *t_grid.last().expect("non-empty");
    let out = enumerate_paths(g, start, t_max, visitor, opts)?.visitor;
    let points: Vec<LdpPoint> = t_grid
        .iter()
        .enumerate()
        .map(|(k, &t)| {
            let (count, tail) = (out.counts[k], out.tails[k]);
            let log_fraction = if tail == 0 || count == 0 {
                f64::NEG_INFINITY
            } else {
                (tail as f64 / count as f64).ln()
            };
            LdpPoint {
                t,
                count,
                tail,
                log_fraction,
                rate: log_fraction / t,
            }
        })
        .collect();
    let (xs, ys): (Vec<f64>, Vec<f64>) = points
        .iter()
        .filter(|p| p.log_fraction.is_finite())
        .map(|p| (p.t, p.log_fraction))
        .unzip();
    Ok(LdpCurve {
        epsilon,
        index,
        slope: fit_slope(&xs, &ys),
        points,
    })
}
