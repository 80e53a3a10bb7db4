//! Transfer matrices, Perron eigendata, growth rate, pressure and the
//! derived mean, covariance, degeneracy and large-deviation quantities.

mod chernoff;
mod degeneracy;
mod eigen;
mod report;
mod solver;
mod transfer;

use thiserror::Error;

use crate::graph::{GraphError, WeightedDigraph};

pub use chernoff::{chernoff_rate, ChernoffReport};
pub use degeneracy::{degeneracy_test, residue_report, DegeneracyReport};
pub use eigen::{leading_eigentriple, leading_eigentriple_from, EigenTriple};
pub use report::{pressure_csv, result_kv};
pub use solver::{
    clamp_psd, default_head, Diagnostics, Evaluation, RootPoint, SolverOptions, SpectralResult,
    SpectralSolver, MEAN_FD_TOL, NEUMANN_TOL, ROOT_TOL,
};
pub use transfer::{assemble_transfer, tail_norm, TransferBlocks};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SpectralError {
    #[error("tail not contracting: D_norm = {d_norm} >= 1 at head size {k}")]
    TailNotContracting { d_norm: f64, k: usize },
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("head size {k} outside 1..={total}")]
    BadHeadSize { k: usize, total: usize },
    #[error("reducible head: raise the head size")]
    ReducibleHead,
    #[error("matrix has negative or non-finite entries")]
    NegativeEntry,
    #[error("no convergence in {what} (residual {residual:e})")]
    NoConvergence { what: &'static str, residual: f64 },
    #[error("bracketing failure: {reason}")]
    BracketFailure { reason: &'static str },
    #[error("t = {t:?} outside pressure domain")]
    OutsidePressureDomain { t: Vec<f64> },
    #[error("finite-difference stencil failed: {0}")]
    FiniteDifference(Box<SpectralError>),
    #[error("cost index {index} out of range for {dim} costs")]
    CostIndex { index: usize, dim: usize },
    #[error("graph has no states")]
    EmptyGraph,
    #[error(transparent)]
    Graph(#[from] GraphError),
}

fn solver(g: &WeightedDigraph, k: Option<usize>, tol: f64) -> Result<SpectralSolver<'_>, SpectralError> {
    SpectralSolver::new(
        g,
        SolverOptions {
            head: k,
            neumann_tol: tol,
            ..Default::default()
        },
    )
}

/// Growth rate `h`: the root of `lambda(s, 0) = 1`.
pub fn growth_rate(g: &WeightedDigraph, k: Option<usize>, tol: f64) -> Result<f64, SpectralError> {
    solver(g, k, tol)?.growth_rate()
}

/// Pressure `sigma(t)`.
pub fn pressure(g: &WeightedDigraph, t: &[f64], k: Option<usize>, tol: f64) -> Result<f64, SpectralError> {
    let s = solver(g, k, tol)?;
    let h = s.growth_rate()?;
    s.pressure(t, h)
}

/// Mean vector with its diagnostics (analytic value plus finite-difference gap).
pub fn mean_vector(
    g: &WeightedDigraph,
    k: Option<usize>,
    fd_step: Option<f64>,
) -> Result<(Vec<f64>, Diagnostics), SpectralError> {
    let r = analyze(g, k, fd_step)?;
    Ok((r.lambda, r.diagnostics))
}

/// Covariance matrix (Hessian of the pressure at zero).
pub fn covariance_matrix(
    g: &WeightedDigraph,
    k: Option<usize>,
    fd_step: Option<f64>,
) -> Result<nalgebra::DMatrix<f64>, SpectralError> {
    Ok(analyze(g, k, fd_step)?.sigma)
}

/// Full spectral analysis with default tolerances.
pub fn analyze(
    g: &WeightedDigraph,
    k: Option<usize>,
    fd_step: Option<f64>,
) -> Result<SpectralResult, SpectralError> {
    SpectralSolver::new(
        g,
        SolverOptions {
            head: k,
            fd_step,
            ..Default::default()
        },
    )?
    .analyze()
}
