use super::{EdgeRef, Point, Polygon, SurfaceError, TranslationSurface};

/// Shear applied by [`sheared_lshape`]: `[[1, a], [0, 1 - a]]` with
/// `a = (5 - 3 sqrt 3) / 2`. It turns the slope of `(-2, -1)` into
/// `tan(pi / 6)`, so the second turn of [`TURN_PATH`] becomes `13 pi / 6`.
pub const SHEAR: [[f64; 2]; 2] = {
    let a = (5.0 - 3.0 * 1.732_050_807_568_877_2) / 2.0;
    [[1.0, a], [0.0, 1.0 - a]]
};

/// Holonomies of a three-connection saddle path on the unit L-shape whose
/// first turn measures `5 pi / 4`.
pub const TURN_PATH: [Point; 3] = [[1.0, -1.0], [1.0, 0.0], [-2.0, -1.0]];

const LSHAPE: [Point; 8] = [
    [0.0, 0.0],
    [1.0, 0.0],
    [2.0, 0.0],
    [2.0, 1.0],
    [1.0, 1.0],
    [1.0, 2.0],
    [0.0, 2.0],
    [0.0, 1.0],
];
const LSHAPE_GLUE: [(usize, usize); 4] = [(0, 5), (1, 3), (2, 7), (4, 6)];

const STAIRCASE: [Point; 18] = [
    [0.0, 0.0],
    [1.0, 0.0],
    [2.0, 0.0],
    [3.0, 0.0],
    [4.0, 0.0],
    [4.0, 1.0],
    [5.0, 1.0],
    [6.0, 1.0],
    [7.0, 1.0],
    [7.0, 2.0],
    [6.0, 2.0],
    [5.0, 2.0],
    [4.0, 2.0],
    [3.0, 2.0],
    [3.0, 1.0],
    [2.0, 1.0],
    [1.0, 1.0],
    [0.0, 1.0],
];
const STAIRCASE_GLUE: [(usize, usize); 9] = [
    (1, 12),
    (0, 11),
    (3, 10),
    (2, 9),
    (16, 7),
    (15, 6),
    (14, 5),
    (4, 17),
    (8, 13),
];

fn single(name: &str, vertices: Vec<Point>, glue: &[(usize, usize)]) -> TranslationSurface {
    let e = |edge| EdgeRef { polygon: 0, edge };
    let gluings: Vec<_> = glue.iter().map(|&(a, b)| (e(a), e(b))).collect();
    let poly = Polygon {
        name: "0".into(),
        vertices,
    };
    TranslationSurface::new(name, vec![poly], &gluings).expect("built-in surface is valid")
}

pub fn transform(m: [[f64; 2]; 2], p: Point) -> Point {
    [m[0][0] * p[0] + m[0][1] * p[1], m[1][0] * p[0] + m[1][1] * p[1]]
}

/// Three unit squares in an L, opposite sides identified: one cone point of
/// angle `6 pi`, genus 2.
pub fn lshape() -> TranslationSurface {
    single("lshape", LSHAPE.to_vec(), &LSHAPE_GLUE)
}

/// The L-shape under [`SHEAR`].
pub fn sheared_lshape() -> TranslationSurface {
    let v = LSHAPE.iter().map(|&p| transform(SHEAR, p)).collect();
    single("lshape-sheared", v, &LSHAPE_GLUE)
}

/// Two staggered rows of four unit squares: four cone points of angle
/// `4 pi`, genus 3.
pub fn staircase() -> TranslationSurface {
    single("staircase7", STAIRCASE.to_vec(), &STAIRCASE_GLUE)
}

pub fn builtin_names() -> &'static [&'static str] {
    &["lshape", "lshape-sheared", "staircase7"]
}

pub fn builtin(name: &str) -> Result<TranslationSurface, SurfaceError> {
    match name {
        "lshape" => Ok(lshape()),
        "lshape-sheared" => Ok(sheared_lshape()),
        "staircase7" => Ok(staircase()),
        other => Err(SurfaceError::UnknownBuiltin(other.to_string())),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn lshape_invariants() {
        let s = lshape();
        assert_eq!(s.classes().len(), 1);
        let c = &s.classes()[0];
        assert_eq!(c.k, 2);
        assert!((c.cone_angle - 6.0 * PI).abs() < 1e-12);
        assert_eq!(s.genus(), 2);
        let order: Vec<usize> = c.corners.iter().map(|c| c.corner).collect();
        assert_eq!(order, vec![0, 2, 3, 7, 4, 1, 5, 6]);
    }

    #[test]
    fn staircase_invariants() {
        let s = staircase();
        assert_eq!(s.classes().len(), 4);
        assert!(s.classes().iter().all(|c| c.k == 1));
        assert_eq!(s.genus(), 3);
        let gb = s.gauss_bonnet();
        assert_eq!((gb.vertices, gb.edges, gb.faces), (4, 9, 1));
    }

    #[test]
    fn shear_constants() {
        let a = (5.0 - 3.0 * 3f64.sqrt()) / 2.0;
        assert!((SHEAR[0][1] - a).abs() < 1e-15);
        let d = transform(SHEAR, TURN_PATH[2]);
        assert!(((d[1] / d[0]) - (PI / 6.0).tan()).abs() < 1e-12);
        assert_eq!(sheared_lshape().genus(), 2);
    }
}
