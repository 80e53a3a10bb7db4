//! Command-line front end: pipelines from graph and surface inputs to
//! `result.kv`, CSV tables and SVG histograms.

mod commands;
mod config;
mod svg;

use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use thiserror::Error;

use flatcount::graph::GraphError;
use flatcount::limit_laws::LimitError;
use flatcount::spectral::SpectralError;
use flatcount::surface::SurfaceError;

pub use config::{read_kv, RunConfig};
pub use svg::{read_samples, render_histogram, MIN_SAMPLES};

pub const EXIT_OK: i32 = 0;
pub const EXIT_VALIDATION: i32 = 2;
pub const EXIT_BUDGET: i32 = 3;
pub const EXIT_USAGE: i32 = 64;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("csv: {0}")]
    Csv(String),
    #[error("too few samples: {0} (need at least {MIN_SAMPLES})")]
    TooFewSamples(usize),
    #[error("degenerate direction (variance {0:e})")]
    DegenerateDirection(f64),
    #[error(transparent)]
    Graph(#[from] GraphError),
    #[error(transparent)]
    Spectral(#[from] SpectralError),
    #[error(transparent)]
    Limit(#[from] LimitError),
    #[error(transparent)]
    Surface(#[from] SurfaceError),
}

impl CliError {
    pub fn io(path: &Path, source: std::io::Error) -> CliError {
        CliError::Io {
            path: path.to_path_buf(),
            source,
        }
    }

    fn is_budget(&self) -> bool {
        fn graph(e: &GraphError) -> bool {
            matches!(e, GraphError::BudgetExceeded { .. })
        }
        fn limit(e: &LimitError) -> bool {
            matches!(e, LimitError::Graph(g) if graph(g))
        }
        fn spectral(e: &SpectralError) -> bool {
            matches!(e, SpectralError::Graph(g) if graph(g))
        }
        match self {
            CliError::Graph(e) => graph(e),
            CliError::Limit(e) => limit(e),
            CliError::Spectral(e) => spectral(e),
            CliError::Surface(e) => match e {
                SurfaceError::BudgetExceeded { .. } => true,
                SurfaceError::Graph(g) => graph(g),
                SurfaceError::Limit(l) => limit(l),
                SurfaceError::Spectral(s) => spectral(s),
                _ => false,
            },
            _ => false,
        }
    }

    pub fn exit_code(&self) -> i32 {
        if self.is_budget() {
            EXIT_BUDGET
        } else if matches!(self, CliError::Usage(_)) {
            EXIT_USAGE
        } else {
            EXIT_VALIDATION
        }
    }
}

#[derive(Debug, Parser)]
#[command(name = "flatcount", version, about = "Spectral counting predictions and exhaustive checks")]
pub struct Cli {
    #[command(flatten)]
    pub common: Common,
    #[command(subcommand)]
    pub group: Group,
}

#[derive(Debug, Clone, Args)]
pub struct Common {
    /// Output directory.
    #[arg(long, global = true, default_value = "out")]
    pub out: PathBuf,
    /// Worker threads (default: all cores).
    #[arg(long, global = true)]
    pub threads: Option<usize>,
    /// Reservoir sampling seed.
    #[arg(long, global = true, default_value_t = 0)]
    pub seed: u64,
    /// Cap on enumerated paths, or on wedge records for saddle searches.
    #[arg(long, global = true)]
    pub budget: Option<u64>,
}

#[derive(Debug, Subcommand)]
pub enum Group {
    /// Weighted digraph pipelines.
    #[command(subcommand)]
    Graph(GraphCmd),
    /// Translation surface pipelines.
    #[command(subcommand)]
    Surface(SurfaceCmd),
    /// Built-in reproduction checks.
    #[command(subcommand)]
    Verify(VerifyCmd),
}

#[derive(Debug, Clone, Args)]
pub struct SpectralArgs {
    /// Head size of the truncation.
    #[arg(long = "head")]
    pub head: Option<usize>,
    #[arg(long)]
    pub fd_step: Option<f64>,
}

#[derive(Debug, Subcommand)]
pub enum GraphCmd {
    /// Check connectivity, tail sums and the lattice heuristic.
    Validate {
        input: PathBuf,
        #[arg(long, value_delimiter = ',', default_value = "0.5,1,2")]
        sigmas: Vec<f64>,
        #[arg(long, default_value_t = 1e-9)]
        lattice_tol: f64,
    },
    /// Growth rate, mean, covariance, degeneracy and pressure samples.
    Predict {
        input: PathBuf,
        #[command(flatten)]
        spectral: SpectralArgs,
        /// Pressure grid along each cost axis.
        #[arg(long, value_delimiter = ',', allow_hyphen_values = true, default_value = "-0.5,-0.25,0,0.25,0.5")]
        t_grid: Vec<f64>,
    },
    /// Exact path statistics below T against the spectral predictions.
    Stats {
        input: PathBuf,
        #[arg(long)]
        start: Option<String>,
        #[arg(short = 'T', long = "threshold")]
        threshold: f64,
        #[command(flatten)]
        spectral: SpectralArgs,
    },
    /// Tail fractions over a threshold grid against the Chernoff rate.
    Ldp {
        input: PathBuf,
        #[arg(long)]
        start: Option<String>,
        #[arg(long, value_delimiter = ',', default_value = "8,10,12,14,16")]
        grid: Vec<f64>,
        #[arg(long, default_value_t = 0.2)]
        epsilon: f64,
        #[arg(long, default_value_t = 0)]
        index: usize,
        #[arg(long, default_value_t = 3.0)]
        eta: f64,
        #[command(flatten)]
        spectral: SpectralArgs,
    },
}

#[derive(Debug, Subcommand)]
pub enum SurfaceCmd {
    /// Cone angles, genus and Gauss-Bonnet.
    Validate { surface: String },
    /// Saddle connections up to length L.
    Saddles {
        surface: String,
        #[arg(short = 'L', long = "cutoff")]
        cutoff: f64,
    },
    /// Transition graph of saddle connections up to length L.
    Graph {
        surface: String,
        #[arg(short = 'L', long = "cutoff")]
        cutoff: f64,
        #[arg(long, default_value = "count")]
        costs: String,
    },
    /// Saddle path statistics below T on the graph truncated at L.
    Paths {
        surface: String,
        #[arg(short = 'L', long = "cutoff")]
        cutoff: f64,
        #[arg(short = 'T', long = "threshold")]
        threshold: f64,
        #[arg(long, default_value = "re,im")]
        costs: String,
        /// Starting singularity class.
        #[arg(long, default_value_t = 0)]
        start: usize,
        #[command(flatten)]
        spectral: SpectralArgs,
    },
}

#[derive(Debug, Subcommand)]
pub enum VerifyCmd {
    /// The two turn angles of the three-connection path on the sheared L-shape.
    Figure1,
    /// Genus and cone angles of the built-in surfaces.
    GaussBonnet,
    /// Fourth moment of LOOP2 against three times the squared variance.
    Wick {
        #[arg(short = 'T', long = "threshold", default_value_t = 24.0)]
        threshold: f64,
    },
}

/// Runs one command line (including the program name) and returns the exit
/// status.
pub fn run_command<I, S>(argv: I) -> i32
where
    I: IntoIterator<Item = S>,
    S: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
        }
    };
    match commands::dispatch(&cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}
