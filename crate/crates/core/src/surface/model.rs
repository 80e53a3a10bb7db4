use std::f64::consts::TAU;

use super::{ConeAngle, SurfaceError, CONE_TOL};

pub type Point = [f64; 2];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct EdgeRef {
    pub polygon: usize,
    pub edge: usize,
}

/// Corner `corner` of a polygon sits at its vertex `corner`, between the
/// outgoing edge `corner` and the incoming edge `corner - 1`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct CornerRef {
    pub polygon: usize,
    pub corner: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Polygon {
    pub name: String,
    pub vertices: Vec<Point>,
}

impl Polygon {
    pub fn len(&self) -> usize {
        self.vertices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vertices.is_empty()
    }

    pub fn edge_vector(&self, j: usize) -> Point {
        let n = self.len();
        sub(self.vertices[(j + 1) % n], self.vertices[j])
    }

    fn signed_area(&self) -> f64 {
        let n = self.len();
        (0..n)
            .map(|j| cross(self.vertices[j], self.vertices[(j + 1) % n]))
            .sum::<f64>()
            / 2.0
    }

    /// Interior angle at corner `j`, in `(0, 2 pi)`.
    pub fn interior_angle(&self, j: usize) -> f64 {
        let n = self.len();
        let back = sub(self.vertices[(j + n - 1) % n], self.vertices[j]);
        local_angle(self.edge_vector(j), back)
    }
}

/// One cone point: the cyclic list of polygon corners glued around it.
#[derive(Debug, Clone, PartialEq)]
pub struct SingularityClass {
    pub id: usize,
    /// Counter-clockwise around the cone, starting at the reference corner.
    pub corners: Vec<CornerRef>,
    /// Angular coordinate at which each corner's sector begins.
    pub corner_offsets: Vec<f64>,
    pub cone_angle: f64,
    /// Cone angle is `2 pi (k + 1)`.
    pub k: u32,
    /// Planar argument of the reference direction (angular coordinate zero).
    pub reference_direction: f64,
}

impl SingularityClass {
    pub fn sectors(&self) -> u32 {
        self.k + 1
    }

    pub fn label(&self) -> String {
        format!("x{}", self.id)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct GaussBonnet {
    pub vertices: usize,
    pub edges: usize,
    pub faces: usize,
    pub euler_characteristic: i64,
    pub genus: i64,
    /// Sum of `k(x)` over all classes; equals `2g - 2`.
    pub total_excess: u32,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TranslationSurface {
    name: String,
    polygons: Vec<Polygon>,
    partner: Vec<Vec<EdgeRef>>,
    classes: Vec<SingularityClass>,
    /// `(class, position in the class's corner list)` per polygon corner.
    corner_class: Vec<Vec<(usize, usize)>>,
    gauss_bonnet: GaussBonnet,
}

impl TranslationSurface {
    /// Validates the gluings and computes corner classes and cone angles.
    pub fn new(
        name: &str,
        polygons: Vec<Polygon>,
        gluings: &[(EdgeRef, EdgeRef)],
    ) -> Result<TranslationSurface, SurfaceError> {
        for (p, poly) in polygons.iter().enumerate() {
            if poly.len() < 3 || (0..poly.len()).any(|j| norm(poly.edge_vector(j)) == 0.0) {
                return Err(SurfaceError::DegeneratePolygon(p));
            }
            if poly.signed_area() <= 0.0 {
                return Err(SurfaceError::NotCounterClockwise(p));
            }
        }
        let partner = pair_edges(&polygons, gluings)?;
        check_connected(&polygons, &partner)?;

        let mut corner_class: Vec<Vec<Option<(usize, usize)>>> =
            polygons.iter().map(|p| vec![None; p.len()]).collect();
        let mut classes = Vec::new();
        for p in 0..polygons.len() {
            for j in 0..polygons[p].len() {
                if corner_class[p][j].is_some() {
                    continue;
                }
                let id = classes.len();
                let mut corners = Vec::new();
                let mut offsets = Vec::new();
                let mut total = 0.0;
                let mut c = CornerRef { polygon: p, corner: j };
                loop {
                    corner_class[c.polygon][c.corner] = Some((id, corners.len()));
                    corners.push(c);
                    offsets.push(total);
                    total += polygons[c.polygon].interior_angle(c.corner);
                    let n = polygons[c.polygon].len();
                    let incoming = partner[c.polygon][(c.corner + n - 1) % n];
                    c = CornerRef {
                        polygon: incoming.polygon,
                        corner: incoming.edge,
                    };
                    if corner_class[c.polygon][c.corner].is_some() {
                        break;
                    }
                }
                let turns = (total / TAU).round();
                if turns < 1.0 || (total - TAU * turns).abs() > CONE_TOL {
                    return Err(SurfaceError::ConeAngle { class: id, angle: total });
                }
                let e = polygons[p].edge_vector(j);
                classes.push(SingularityClass {
                    id,
                    corners,
                    corner_offsets: offsets,
                    cone_angle: total,
                    k: turns as u32 - 1,
                    reference_direction: e[1].atan2(e[0]),
                });
            }
        }
        if classes.iter().all(|c| c.k == 0) {
            return Err(SurfaceError::NoSingularities);
        }
        if let Some(c) = classes.iter().find(|c| c.k == 0) {
            return Err(SurfaceError::MarkedPoint(c.id));
        }

        let edges = partner.iter().map(Vec::len).sum::<usize>() / 2;
        let chi = classes.len() as i64 - edges as i64 + polygons.len() as i64;
        let excess: u32 = classes.iter().map(|c| c.k).sum();
        if chi % 2 != 0 || -chi != excess as i64 {
            return Err(SurfaceError::GaussBonnet { chi, excess });
        }
        let gauss_bonnet = GaussBonnet {
            vertices: classes.len(),
            edges,
            faces: polygons.len(),
            euler_characteristic: chi,
            genus: (2 - chi) / 2,
            total_excess: excess,
        };
        let corner_class = corner_class
            .into_iter()
            .map(|row| row.into_iter().map(|c| c.expect("every corner classified")).collect())
            .collect();
        Ok(TranslationSurface {
            name: name.to_string(),
            polygons,
            partner,
            classes,
            corner_class,
            gauss_bonnet,
        })
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn polygons(&self) -> &[Polygon] {
        &self.polygons
    }

    pub fn classes(&self) -> &[SingularityClass] {
        &self.classes
    }

    pub fn class(&self, id: usize) -> Result<&SingularityClass, SurfaceError> {
        self.classes.get(id).ok_or(SurfaceError::UnknownClass(id))
    }

    pub fn partner(&self, e: EdgeRef) -> EdgeRef {
        self.partner[e.polygon][e.edge]
    }

    /// Each glued pair once, smaller edge first.
    pub fn gluings(&self) -> Vec<(EdgeRef, EdgeRef)> {
        let mut out = Vec::new();
        for (p, row) in self.partner.iter().enumerate() {
            for (j, &q) in row.iter().enumerate() {
                let e = EdgeRef { polygon: p, edge: j };
                if e < q {
                    out.push((e, q));
                }
            }
        }
        out
    }

    pub fn corner_class(&self, c: CornerRef) -> usize {
        self.corner_class[c.polygon][c.corner].0
    }

    pub fn gauss_bonnet(&self) -> GaussBonnet {
        self.gauss_bonnet
    }

    pub fn genus(&self) -> i64 {
        self.gauss_bonnet.genus
    }

    pub fn k_max(&self) -> u32 {
        self.classes.iter().map(|c| c.k).max().unwrap_or(0)
    }

    /// Angular coordinate of direction `d` leaving corner `c`; `d` must lie
    /// in the corner's closed sector.
    pub fn angle_at(&self, c: CornerRef, d: Point) -> ConeAngle {
        let (class, pos) = self.corner_class[c.polygon][c.corner];
        let cl = &self.classes[class];
        let e = self.polygons[c.polygon].edge_vector(c.corner);
        ConeAngle::from_value(cl.corner_offsets[pos] + local_angle(e, d), cl.sectors())
    }
}

fn pair_edges(polygons: &[Polygon], gluings: &[(EdgeRef, EdgeRef)]) -> Result<Vec<Vec<EdgeRef>>, SurfaceError> {
    let mut partner: Vec<Vec<Option<EdgeRef>>> = polygons.iter().map(|p| vec![None; p.len()]).collect();
    for &(a, b) in gluings {
        for e in [a, b] {
            if polygons.get(e.polygon).is_none_or(|p| e.edge >= p.len()) {
                return Err(SurfaceError::BadEdge {
                    polygon: e.polygon,
                    edge: e.edge,
                });
            }
        }
        for e in [a, b] {
            if partner[e.polygon][e.edge].is_some() || a == b {
                return Err(SurfaceError::GluedTwice {
                    polygon: e.polygon,
                    edge: e.edge,
                });
            }
        }
        let va = polygons[a.polygon].edge_vector(a.edge);
        let vb = polygons[b.polygon].edge_vector(b.edge);
        let scale = norm(va).max(1.0);
        if norm([va[0] + vb[0], va[1] + vb[1]]) > 1e-12 * scale {
            return Err(SurfaceError::GluingMismatch { a, b });
        }
        partner[a.polygon][a.edge] = Some(b);
        partner[b.polygon][b.edge] = Some(a);
    }
    partner
        .into_iter()
        .enumerate()
        .map(|(p, row)| {
            row.into_iter()
                .enumerate()
                .map(|(j, e)| e.ok_or(SurfaceError::UngluedEdge { polygon: p, edge: j }))
                .collect()
        })
        .collect()
}

fn check_connected(polygons: &[Polygon], partner: &[Vec<EdgeRef>]) -> Result<(), SurfaceError> {
    let mut seen = vec![false; polygons.len()];
    let mut stack = vec![0];
    seen[0] = true;
    while let Some(p) = stack.pop() {
        for e in &partner[p] {
            if !seen[e.polygon] {
                seen[e.polygon] = true;
                stack.push(e.polygon);
            }
        }
    }
    if seen.iter().all(|&s| s) {
        Ok(())
    } else {
        Err(SurfaceError::Disconnected)
    }
}

pub(crate) fn sub(a: Point, b: Point) -> Point {
    [a[0] - b[0], a[1] - b[1]]
}

pub(crate) fn add(a: Point, b: Point) -> Point {
    [a[0] + b[0], a[1] + b[1]]
}

pub(crate) fn cross(a: Point, b: Point) -> f64 {
    a[0] * b[1] - a[1] * b[0]
}

pub(crate) fn dot(a: Point, b: Point) -> f64 {
    a[0] * b[0] + a[1] * b[1]
}

pub(crate) fn norm(a: Point) -> f64 {
    a[0].hypot(a[1])
}

/// Counter-clockwise angle from `from` to `to`, in `[0, 2 pi)`.
pub(crate) fn local_angle(from: Point, to: Point) -> f64 {
    let a = cross(from, to).atan2(dot(from, to)).rem_euclid(TAU);
    if a > TAU - 1e-12 {
        0.0
    } else {
        a
    }
}
