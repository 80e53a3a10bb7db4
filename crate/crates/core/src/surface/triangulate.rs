use std::collections::HashMap;

use super::model::{cross, sub};
use super::{CornerRef, EdgeRef, Point, SurfaceError, TranslationSurface};

/// Neighbour across one triangle edge; `shift` maps the neighbour's chart into
/// this triangle's chart.
#[derive(Debug, Clone, Copy, PartialEq)]
pub(crate) struct Neighbour {
    pub tri: usize,
    pub edge: usize,
    pub shift: Point,
}

/// Counter-clockwise triangle of polygon vertices; edge `i` runs from
/// vertex `i` to vertex `i + 1`.
#[derive(Debug, Clone, PartialEq)]
pub(crate) struct Triangle {
    pub polygon: usize,
    pub idx: [usize; 3],
    pub pts: [Point; 3],
    pub nbr: [Neighbour; 3],
}

impl Triangle {
    pub fn corner(&self, i: usize) -> CornerRef {
        CornerRef {
            polygon: self.polygon,
            corner: self.idx[i % 3],
        }
    }
}

/// Ear clipping; a vertex is an ear only if its triangle is strictly convex
/// and contains no other remaining vertex, boundary included.
pub(crate) fn ear_clip(vertices: &[Point]) -> Option<Vec<[usize; 3]>> {
    let scale = vertices
        .iter()
        .flat_map(|p| p.iter())
        .fold(1.0f64, |m, x| m.max(x.abs()));
    let eps = 1e-12 * scale * scale;
    let mut idx: Vec<usize> = (0..vertices.len()).collect();
    let mut out = Vec::with_capacity(vertices.len().saturating_sub(2));
    while idx.len() > 3 {
        let m = idx.len();
        let ear = (0..m).find(|&i| {
            let (a, b, c) = (idx[(i + m - 1) % m], idx[i], idx[(i + 1) % m]);
            let (pa, pb, pc) = (vertices[a], vertices[b], vertices[c]);
            if cross(sub(pb, pa), sub(pc, pb)) <= eps {
                return false;
            }
            !idx.iter().any(|&r| {
                r != a && r != b && r != c && {
                    let p = vertices[r];
                    cross(sub(pb, pa), sub(p, pa)) >= -eps
                        && cross(sub(pc, pb), sub(p, pb)) >= -eps
                        && cross(sub(pa, pc), sub(p, pc)) >= -eps
                }
            })
        })?;
        out.push([idx[(ear + m - 1) % m], idx[ear], idx[(ear + 1) % m]]);
        idx.remove(ear);
    }
    let [a, b, c] = [idx[0], idx[1], idx[2]];
    if cross(sub(vertices[b], vertices[a]), sub(vertices[c], vertices[b])) <= eps {
        return None;
    }
    out.push([a, b, c]);
    Some(out)
}

/// Triangulates every polygon and links triangles across diagonals and glued
/// edges.
pub(crate) fn triangulate(s: &TranslationSurface) -> Result<Vec<Triangle>, SurfaceError> {
    let dummy = Neighbour {
        tri: usize::MAX,
        edge: 0,
        shift: [0.0, 0.0],
    };
    let mut tris = Vec::new();
    let mut by_edge: HashMap<(usize, usize, usize), (usize, usize)> = HashMap::new();
    for (p, poly) in s.polygons().iter().enumerate() {
        let pieces = ear_clip(&poly.vertices).ok_or(SurfaceError::Triangulation(p))?;
        for idx in pieces {
            let t = tris.len();
            for i in 0..3 {
                by_edge.insert((p, idx[i], idx[(i + 1) % 3]), (t, i));
            }
            tris.push(Triangle {
                polygon: p,
                idx,
                pts: idx.map(|j| poly.vertices[j]),
                nbr: [dummy; 3],
            });
        }
    }
    let missing = || SurfaceError::Internal("triangle edge without neighbour".into());
    for t in 0..tris.len() {
        for i in 0..3 {
            let p = tris[t].polygon;
            let (a, b) = (tris[t].idx[i], tris[t].idx[(i + 1) % 3]);
            let n = s.polygons()[p].len();
            let nbr = if b == (a + 1) % n {
                let q = s.partner(EdgeRef { polygon: p, edge: a });
                let m = s.polygons()[q.polygon].len();
                let (tri, edge) = *by_edge.get(&(q.polygon, q.edge, (q.edge + 1) % m)).ok_or_else(missing)?;
                let w_end = s.polygons()[q.polygon].vertices[(q.edge + 1) % m];
                Neighbour {
                    tri,
                    edge,
                    shift: sub(s.polygons()[p].vertices[a], w_end),
                }
            } else {
                let (tri, edge) = *by_edge.get(&(p, b, a)).ok_or_else(missing)?;
                Neighbour {
                    tri,
                    edge,
                    shift: [0.0, 0.0],
                }
            };
            tris[t].nbr[i] = nbr;
        }
    }
    Ok(tris)
}
