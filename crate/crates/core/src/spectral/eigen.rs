use std::collections::VecDeque;

use nalgebra::{DMatrix, DVector};

use super::SpectralError;

pub const EIGEN_TOL: f64 = 1e-12;
pub const MAX_ITERATIONS: usize = 100_000;
pub const RESIDUAL_TOL: f64 = 1e-10;

/// Perron eigendata of a nonnegative irreducible matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct EigenTriple {
    pub lambda: f64,
    /// Left eigenvector, scaled so that `u . v = 1`.
    pub u: Vec<f64>,
    /// Right eigenvector, max entry 1.
    pub v: Vec<f64>,
    pub iterations: usize,
    /// Larger of the two relative residuals.
    pub residual: f64,
}

fn irreducible(w: &DMatrix<f64>) -> bool {
    let k = w.nrows();
    let reach = |transpose: bool| {
        let mut seen = vec![false; k];
        seen[0] = true;
        let mut q = VecDeque::from([0usize]);
        let mut n = 1;
        while let Some(i) = q.pop_front() {
            for j in 0..k {
                let x = if transpose { w[(j, i)] } else { w[(i, j)] };
                if x > 0.0 && !seen[j] {
                    seen[j] = true;
                    n += 1;
                    q.push_back(j);
                }
            }
        }
        n == k
    };
    reach(false) && reach(true)
}

fn max_abs(v: &DVector<f64>) -> f64 {
    v.iter().fold(0.0, |m, x| m.max(x.abs()))
}

/// Power iteration on `(M + I) / 2`; returns the normalised vector, the
/// iteration count and whether the update fell below tolerance.
fn power(m: &DMatrix<f64>, start: DVector<f64>, budget: usize) -> (DVector<f64>, usize, bool) {
    let mut v = start;
    let scale = max_abs(&v);
    if scale > 0.0 {
        v /= scale;
    }
    let mut buf = DVector::zeros(v.len());
    for it in 1..=budget {
        buf.gemv(0.5, m, &v, 0.0);
        buf.axpy(0.5, &v, 1.0);
        let norm = max_abs(&buf);
        if !(norm > 0.0) || !norm.is_finite() {
            return (v, it, false);
        }
        buf /= norm;
        let change = buf
            .iter()
            .zip(v.iter())
            .fold(0.0f64, |acc, (a, b)| acc.max((a - b).abs()));
        std::mem::swap(&mut v, &mut buf);
        if change <= EIGEN_TOL {
            return (v, it, true);
        }
    }
    (v, budget, false)
}

/// Leading eigenvalue and eigenvectors of a nonnegative irreducible matrix.
pub fn leading_eigentriple(w: &DMatrix<f64>) -> Result<EigenTriple, SpectralError> {
    leading_eigentriple_from(w, None)
}

/// As [`leading_eigentriple`], optionally warm-started from previous vectors.
pub fn leading_eigentriple_from(
    w: &DMatrix<f64>,
    warm: Option<(&[f64], &[f64])>,
) -> Result<EigenTriple, SpectralError> {
    let k = w.nrows();
    if k == 0 || w.ncols() != k {
        return Err(SpectralError::DimensionMismatch {
            expected: k,
            found: w.ncols(),
        });
    }
    if w.iter().any(|&x| x < 0.0 || !x.is_finite()) {
        return Err(SpectralError::NegativeEntry);
    }
    if !irreducible(w) {
        return Err(SpectralError::ReducibleHead);
    }
    let (u0, v0) = match warm {
        Some((u, v)) if u.len() == k && v.len() == k && u.iter().chain(v).all(|&x| x > 0.0) => {
            (DVector::from_column_slice(u), DVector::from_column_slice(v))
        }
        _ => (DVector::from_element(k, 1.0), DVector::from_element(k, 1.0)),
    };
    let wt = w.transpose();

    let mut v = v0;
    let mut u = u0;
    let mut iterations = 0;
    let mut residual = f64::INFINITY;
    let mut lambda = 0.0;
    while iterations < MAX_ITERATIONS {
        let budget = (MAX_ITERATIONS - iterations).min(5_000);
        let (nv, iv, _) = power(w, v, budget);
        let (nu, iu, _) = power(&wt, u, budget);
        iterations += iv.max(iu);
        v = nv;
        u = nu;

        let wv = w * &v;
        let uw = &wt * &u;
        let uv = u.dot(&v);
        lambda = u.dot(&wv) / uv;
        let rv = (&wv - &v * lambda).amax() / max_abs(&v);
        let ru = (&uw - &u * lambda).amax() / max_abs(&u);
        residual = rv.max(ru);
        let scale = lambda.abs().max(1.0);
        if residual <= RESIDUAL_TOL * scale {
            break;
        }
    }
    if !(residual <= RESIDUAL_TOL * lambda.abs().max(1.0)) {
        return Err(SpectralError::NoConvergence {
            what: "power iteration",
            residual,
        });
    }
    let vmax = max_abs(&v);
    v /= vmax;
    let uv = u.dot(&v);
    u /= uv;
    Ok(EigenTriple {
        lambda,
        u: u.iter().copied().collect(),
        v: v.iter().copied().collect(),
        iterations,
        residual,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    #[test]
    fn one_by_one() {
        let e = leading_eigentriple(&DMatrix::from_element(1, 1, 0.37)).unwrap();
        assert_relative_eq!(e.lambda, 0.37, max_relative = 1e-15);
        assert_eq!(e.u, vec![1.0]);
        assert_eq!(e.v, vec![1.0]);
    }

    #[test]
    fn all_ones() {
        let e = leading_eigentriple(&DMatrix::from_element(2, 2, 1.0)).unwrap();
        assert_relative_eq!(e.lambda, 2.0, max_relative = 1e-14);
        assert_relative_eq!(e.v[0], 1.0);
        assert_relative_eq!(e.v[1], 1.0);
    }

    #[test]
    fn rank_one_eigenvalue_is_the_trace() {
        let (a, b) = ((-1.0f64).exp(), (-std::f64::consts::SQRT_2).exp());
        let w = DMatrix::from_row_slice(2, 2, &[a, b, a, b]);
        let e = leading_eigentriple(&w).unwrap();
        assert_relative_eq!(e.lambda, a + b, max_relative = 1e-14);
        assert_relative_eq!(e.lambda, 0.6110, epsilon = 1e-4);
    }

    #[test]
    fn periodic_pattern_converges() {
        let w = DMatrix::from_row_slice(2, 2, &[0.0, 2.0, 0.5, 0.0]);
        let e = leading_eigentriple(&w).unwrap();
        assert_relative_eq!(e.lambda, 1.0, max_relative = 1e-12);
    }

    #[test]
    fn rejects_reducible_and_negative() {
        let w = DMatrix::from_row_slice(2, 2, &[1.0, 1.0, 0.0, 1.0]);
        assert!(matches!(leading_eigentriple(&w), Err(SpectralError::ReducibleHead)));
        let w = DMatrix::from_row_slice(1, 1, &[-1.0]);
        assert!(matches!(leading_eigentriple(&w), Err(SpectralError::NegativeEntry)));
    }

    proptest! {
        #[test]
        fn residuals_and_normalisation(entries in proptest::collection::vec(0.01f64..3.0, 16)) {
            let w = DMatrix::from_row_slice(4, 4, &entries);
            let e = leading_eigentriple(&w).unwrap();
            let v = DVector::from_column_slice(&e.v);
            let u = DVector::from_column_slice(&e.u);
            prop_assert!((&w * &v - &v * e.lambda).amax() <= 1e-10 * v.amax() * e.lambda.max(1.0));
            prop_assert!((w.transpose() * &u - &u * e.lambda).amax() <= 1e-10 * u.amax() * e.lambda.max(1.0));
            prop_assert!((u.dot(&v) - 1.0).abs() < 1e-12);
            prop_assert!((v.max() - 1.0).abs() < 1e-15);
            prop_assert!(e.u.iter().chain(&e.v).all(|&x| x > 0.0));
        }
    }
}
