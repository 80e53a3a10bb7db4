use std::fmt::Write as _;

use super::{EdgeRef, Polygon, SurfaceError, TranslationSurface};

/// Parses the line-oriented surface format:
///
/// ```text
/// # comment
/// polygon A
/// v 0 0
/// v 1 0
/// ...
/// glue A.0 A.2
/// ```
///
/// Vertices are listed counter-clockwise; edge `j` runs from vertex `j` to
/// vertex `j + 1`.
pub fn load_surface(name: &str, source: &str) -> Result<TranslationSurface, SurfaceError> {
    let mut polygons: Vec<Polygon> = Vec::new();
    let mut glue_lines: Vec<(usize, String, String)> = Vec::new();
    for (i, raw) in source.lines().enumerate() {
        let line = i + 1;
        let text = raw.split('#').next().unwrap_or("").trim();
        if text.is_empty() {
            continue;
        }
        let err = |message: &str| SurfaceError::Parse {
            line,
            message: message.to_string(),
        };
        let words: Vec<&str> = text.split_whitespace().collect();
        match words[0] {
            "polygon" => {
                let [_, id] = words[..] else {
                    return Err(err("expected `polygon <id>`"));
                };
                if polygons.iter().any(|p| p.name == id) {
                    return Err(err("duplicate polygon id"));
                }
                polygons.push(Polygon {
                    name: id.to_string(),
                    vertices: Vec::new(),
                });
            }
            "v" => {
                let [_, x, y] = words[..] else {
                    return Err(err("expected `v <x> <y>`"));
                };
                let parse = |s: &str| {
                    s.parse::<f64>()
                        .ok()
                        .filter(|v| v.is_finite())
                        .ok_or_else(|| err(&format!("bad coordinate `{s}`")))
                };
                let p = [parse(x)?, parse(y)?];
                polygons
                    .last_mut()
                    .ok_or_else(|| err("vertex before any polygon"))?
                    .vertices
                    .push(p);
            }
            "glue" => {
                let [_, a, b] = words[..] else {
                    return Err(err("expected `glue <pid>.<edge> <pid>.<edge>`"));
                };
                glue_lines.push((line, a.to_string(), b.to_string()));
            }
            other => return Err(err(&format!("unknown directive `{other}`"))),
        }
    }
    let mut gluings = Vec::with_capacity(glue_lines.len());
    for (line, a, b) in glue_lines {
        gluings.push((edge_ref(&polygons, &a, line)?, edge_ref(&polygons, &b, line)?));
    }
    TranslationSurface::new(name, polygons, &gluings)
}

fn edge_ref(polygons: &[Polygon], token: &str, line: usize) -> Result<EdgeRef, SurfaceError> {
    let (pid, edge) = token.rsplit_once('.').ok_or_else(|| SurfaceError::Parse {
        line,
        message: format!("bad edge reference `{token}`"),
    })?;
    let edge = edge.parse::<usize>().map_err(|_| SurfaceError::Parse {
        line,
        message: format!("bad edge index in `{token}`"),
    })?;
    let polygon = polygons
        .iter()
        .position(|p| p.name == pid)
        .ok_or_else(|| SurfaceError::UnknownPolygon(pid.to_string()))?;
    Ok(EdgeRef { polygon, edge })
}

pub fn to_surface_text(s: &TranslationSurface) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "# {}", s.name());
    for p in s.polygons() {
        let _ = writeln!(out, "polygon {}", p.name);
        for v in &p.vertices {
            let _ = writeln!(out, "v {:?} {:?}", v[0], v[1]);
        }
    }
    let names: Vec<&str> = s.polygons().iter().map(|p| p.name.as_str()).collect();
    for (a, b) in s.gluings() {
        let _ = writeln!(
            out,
            "glue {}.{} {}.{}",
            names[a.polygon], a.edge, names[b.polygon], b.edge
        );
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::surface::builtin;

    #[test]
    fn round_trip_preserves_structure() {
        for name in ["lshape", "staircase7"] {
            let s = builtin(name).unwrap();
            let back = load_surface(name, &to_surface_text(&s)).unwrap();
            assert_eq!(back, s);
        }
    }

    #[test]
    fn torus_file_is_rejected() {
        let src = "polygon T\nv 0 0\nv 1 0\nv 1 1\nv 0 1\nglue T.0 T.2\nglue T.1 T.3\n";
        assert_eq!(load_surface("torus", src).unwrap_err(), SurfaceError::NoSingularities);
    }

    #[test]
    fn parse_errors_carry_line_numbers() {
        let e = load_surface("x", "polygon A\nv 0 zero\n").unwrap_err();
        assert!(matches!(e, SurfaceError::Parse { line: 2, .. }));
        let e = load_surface("x", "v 0 0\n").unwrap_err();
        assert!(matches!(e, SurfaceError::Parse { line: 1, .. }));
        let e = load_surface("x", "polygon A\nv 0 0\nv 1 0\nv 0 1\nglue B.0 A.1\n").unwrap_err();
        assert_eq!(e, SurfaceError::UnknownPolygon("B".into()));
    }
}
