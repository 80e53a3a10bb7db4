use nalgebra::DMatrix;
use statrs::distribution::{ContinuousCDF, Normal};

use super::{EmpiricalSummary, LimitError};

/// Variances at or below this are treated as a degenerate direction.
pub const DEGENERATE_VARIANCE: f64 = 1e-10;

/// Kolmogorov-Smirnov distance between `samples` and `N(0, variance)`.
pub fn ks_distance(samples: &[f64], variance: f64) -> Result<f64, LimitError> {
    if samples.is_empty() {
        return Err(LimitError::EmptyReservoir);
    }
    if !(variance > DEGENERATE_VARIANCE) {
        return Err(LimitError::DegenerateDirection { variance });
    }
    let normal = Normal::new(0.0, variance.sqrt()).map_err(|e| LimitError::Distribution(e.to_string()))?;
    let mut xs = samples.to_vec();
    xs.sort_by(f64::total_cmp);
    let m = xs.len() as f64;
    let mut d: f64 = 0.0;
    for (i, &x) in xs.iter().enumerate() {
        let f = normal.cdf(x);
        d = d.max(f - i as f64 / m).max((i + 1) as f64 / m - f);
    }
    Ok(d)
}

/// KS distance of coordinate `i` of the reservoir against `N(0, Sigma_ii)`.
pub fn ks_gaussian(summary: &EmpiricalSummary, sigma: &DMatrix<f64>, i: usize) -> Result<f64, LimitError> {
    if i >= summary.dim() || sigma.nrows() != summary.dim() {
        return Err(LimitError::DimensionMismatch {
            expected: summary.dim(),
            found: sigma.nrows().max(i + 1),
        });
    }
    ks_distance(&summary.samples(i), sigma[(i, i)])
}
