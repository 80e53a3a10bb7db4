use super::{SpectralError, SpectralSolver};

#[derive(Debug, Clone, PartialEq)]
pub struct ChernoffReport {
    pub epsilon: f64,
    pub index: usize,
    /// `min(upper, lower)`.
    pub rate: f64,
    pub upper: f64,
    pub lower: f64,
    pub t_upper: f64,
    pub t_lower: f64,
    /// Grid points where the pressure could not be solved.
    pub skipped: usize,
    /// Cost has (numerically) zero variance in this coordinate: the rate is
    /// then just the grid maximum of a linear function.
    pub deterministic: bool,
    pub positive: bool,
}

/// Legendre-type bound on `mu_T(|c_i/T - Lambda_i| > eps)` from a grid search
/// of the pressure along coordinate `i` over `[-eta, eta]`.
pub fn chernoff_rate(
    solver: &SpectralSolver<'_>,
    h: f64,
    lambda: &[f64],
    sigma_ii: f64,
    epsilon: f64,
    index: usize,
    eta: f64,
    grid: usize,
) -> Result<ChernoffReport, SpectralError> {
    let n = solver.graph().cost_dim();
    if index >= n {
        return Err(SpectralError::CostIndex { index, dim: n });
    }
    let grid = grid.max(1);
    let ts: Vec<f64> = (0..=2 * grid)
        .map(|j| eta * (j as f64 - grid as f64) / grid as f64)
        .collect();
    let points: Vec<Vec<f64>> = ts
        .iter()
        .map(|&t| {
            let mut v = vec![0.0; n];
            v[index] = t;
            v
        })
        .collect();
    let solved = solver.pressure_grid(&points, h);
    let skipped = points.len() - solved.len();

    let li = lambda[index];
    let (mut upper, mut t_upper) = (0.0, 0.0);
    let (mut lower, mut t_lower) = (0.0, 0.0);
    for (t, s) in &solved {
        let t = t[index];
        let dp = s - h;
        if t >= 0.0 {
            let v = t * (li + epsilon) - dp;
            if v > upper {
                upper = v;
                t_upper = t;
            }
        }
        if t <= 0.0 {
            let v = t * (li - epsilon) - dp;
            if v > lower {
                lower = v;
                t_lower = t;
            }
        }
    }
    let rate = upper.min(lower);
    Ok(ChernoffReport {
        epsilon,
        index,
        rate,
        upper,
        lower,
        t_upper,
        t_lower,
        skipped,
        deterministic: sigma_ii.abs() <= 1e-10,
        positive: rate > 0.0,
    })
}
