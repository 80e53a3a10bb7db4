//! Translation surfaces glued from plane polygons, their saddle connections,
//! and the transition system of locally geodesic saddle paths.

mod builtin;
mod model;
mod parse;
mod saddles;
mod transition;
mod triangulate;

use std::f64::consts::TAU;

use thiserror::Error;

use crate::graph::GraphError;
use crate::limit_laws::LimitError;
use crate::spectral::SpectralError;

pub use builtin::{
    builtin, builtin_names, lshape, sheared_lshape, staircase, transform, SHEAR, TURN_PATH,
};
pub use model::{
    CornerRef, EdgeRef, GaussBonnet, Point, Polygon, SingularityClass, TranslationSurface,
};
pub use parse::{load_surface, to_surface_text};
pub use saddles::{
    enumerate_saddles, enumerate_saddles_with, SaddleConnection, SaddleOptions, SaddleSet,
    DEDUP_TOL, RECORD_BUDGET,
};
pub use transition::{
    angle_change, build_transition_graph, cost_bound, find_turn_path, saddle_path_stats,
    CostChannel, CostMenu, PathStatsOptions, SaddlePathStats, Turn, LEGALITY_TOL,
};

/// Tolerance for cone angles being multiples of `2 pi`.
pub const CONE_TOL: f64 = 1e-9;
/// Offsets this close to `2 pi` are rounded up to the next sector.
const SECTOR_SNAP: f64 = 1e-11;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SurfaceError {
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("unknown polygon `{0}`")]
    UnknownPolygon(String),
    #[error("polygon {polygon} has no edge {edge}")]
    BadEdge { polygon: usize, edge: usize },
    #[error("polygon {0} is degenerate")]
    DegeneratePolygon(usize),
    #[error("polygon {0} is not counter-clockwise")]
    NotCounterClockwise(usize),
    #[error("edge {polygon}.{edge} is not glued")]
    UngluedEdge { polygon: usize, edge: usize },
    #[error("edge {polygon}.{edge} is glued more than once")]
    GluedTwice { polygon: usize, edge: usize },
    #[error("gluing {a:?} <-> {b:?}: edge vectors are not opposite")]
    GluingMismatch { a: EdgeRef, b: EdgeRef },
    #[error("polygons do not form a connected surface")]
    Disconnected,
    #[error("cone angle {angle} of class {class} is not a multiple of 2 pi")]
    ConeAngle { class: usize, angle: f64 },
    #[error("no singularities")]
    NoSingularities,
    #[error("class {0} is a marked point (cone angle 2 pi)")]
    MarkedPoint(usize),
    #[error("Euler characteristic {chi} inconsistent with cone excess {excess}")]
    GaussBonnet { chi: i64, excess: u32 },
    #[error("could not triangulate polygon {0}")]
    Triangulation(usize),
    #[error("unknown built-in surface `{0}`")]
    UnknownBuiltin(String),
    #[error("cutoff must be positive and finite, got {0}")]
    BadCutoff(f64),
    #[error("wedge budget exceeded: {records} records (budget {budget})")]
    BudgetExceeded { records: u64, budget: u64 },
    #[error("saddle {first} ends at class {end} but saddle {second} starts at class {start}")]
    EndpointMismatch {
        first: usize,
        second: usize,
        end: usize,
        start: usize,
    },
    #[error("unknown singularity class {0}")]
    UnknownClass(usize),
    #[error("cost menu is empty")]
    EmptyMenu,
    #[error("unknown cost channel `{0}`")]
    UnknownChannel(String),
    #[error("saddle cutoff {cutoff} is below path threshold {threshold}")]
    CutoffBelowThreshold { cutoff: f64, threshold: f64 },
    #[error("no saddle connections up to length {0}")]
    EmptyGraph(f64),
    #[error("transition graph is not strongly connected")]
    NotStronglyConnected,
    #[error("{0}")]
    Internal(String),
    #[error(transparent)]
    Graph(#[from] GraphError),
    #[error(transparent)]
    Spectral(#[from] SpectralError),
    #[error(transparent)]
    Limit(#[from] LimitError),
}

/// Angular coordinate on a cone of `sectors * 2 pi`, split into a sector
/// index and an offset in `[0, 2 pi)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConeAngle {
    pub sector: u32,
    pub offset: f64,
}

impl ConeAngle {
    pub fn from_value(theta: f64, sectors: u32) -> ConeAngle {
        let sectors = sectors.max(1);
        let x = theta.rem_euclid(TAU * sectors as f64);
        let mut sector = (x / TAU).floor() as u32;
        let mut offset = x - TAU * sector as f64;
        if offset > TAU - SECTOR_SNAP {
            sector += 1;
            offset = 0.0;
        }
        ConeAngle {
            sector: sector % sectors,
            offset: offset.max(0.0),
        }
    }

    pub fn value(self) -> f64 {
        TAU * self.sector as f64 + self.offset
    }

    /// `(self - other) mod (sectors * 2 pi)`, in `[0, sectors * 2 pi)`.
    pub fn minus(self, other: ConeAngle, sectors: u32) -> f64 {
        let mut sector = (self.sector + sectors - other.sector % sectors) % sectors;
        let mut offset = self.offset - other.offset;
        if offset < 0.0 {
            offset += TAU;
            sector = (sector + sectors - 1) % sectors;
        }
        TAU * sector as f64 + offset
    }
}
