//! Spectral predictions and exhaustive-enumeration checks for path statistics
//! on weighted digraphs and translation surfaces.

pub mod graph;
pub mod limit_laws;
pub mod spectral;
pub mod surface;
