//! Empirical statistics of the uniform counting measure on paths and their
//! comparison with the spectral predictions.

mod accumulate;
mod gaussian;
mod ldp;
mod moments;
mod output;

use thiserror::Error;

use crate::graph::GraphError;

pub use accumulate::{
    accumulate, multi_indices, path_key, AccumulateOptions, EmpiricalSummary, MomentVisitor,
    RESERVOIR_CAP,
};
pub use gaussian::{ks_distance, ks_gaussian, DEGENERATE_VARIANCE};
pub use ldp::{ldp_curve, LdpCurve, LdpPoint};
pub use moments::{odd_moment_check, wick_check, wick_value, MomentSpec, OddMoment, WickCheck};
pub use output::{histogram_bins, histogram_csv, ldp_csv, samples_csv, stats_csv, HistogramBin};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum LimitError {
    #[error("degenerate direction (variance {variance:e})")]
    DegenerateDirection { variance: f64 },
    #[error("empty reservoir")]
    EmptyReservoir,
    #[error("moment order {0} outside 1..=4")]
    Order(u32),
    #[error("odd moment order {0}: use the odd-moment check")]
    OddOrder(u32),
    #[error("even moment order {0}: use the pairing check")]
    EvenOrder(u32),
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("at most 16 costs are supported, got {0}")]
    TooManyCosts(usize),
    #[error("threshold grid must be non-empty and increasing")]
    Grid,
    #[error("distribution: {0}")]
    Distribution(String),
    #[error(transparent)]
    Graph(#[from] GraphError),
}
