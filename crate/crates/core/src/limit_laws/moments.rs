use nalgebra::DMatrix;

use super::{EmpiricalSummary, LimitError, DEGENERATE_VARIANCE};

/// Multi-index `q` of a mixed moment.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MomentSpec {
    pub q: Vec<u32>,
}

impl MomentSpec {
    pub fn new(q: Vec<u32>) -> Result<Self, LimitError> {
        let order: u32 = q.iter().sum();
        if order == 0 || order > 4 {
            return Err(LimitError::Order(order));
        }
        Ok(MomentSpec { q })
    }

    pub fn order(&self) -> u32 {
        self.q.iter().sum()
    }

    /// Coordinate of each factor: `q = (1, 2)` gives `[0, 1, 1]`.
    pub fn labels(&self) -> Vec<usize> {
        self.q
            .iter()
            .enumerate()
            .flat_map(|(i, &e)| std::iter::repeat(i).take(e as usize))
            .collect()
    }
}

fn pairings(labels: &[usize], sigma: &DMatrix<f64>) -> f64 {
    if labels.is_empty() {
        return 1.0;
    }
    let first = labels[0];
    let rest = &labels[1..];
    let mut total = 0.0;
    for j in 0..rest.len() {
        let mut remaining = rest.to_vec();
        let partner = remaining.remove(j);
        total += sigma[(first, partner)] * pairings(&remaining, sigma);
    }
    total
}

/// Gaussian moment `E[Z^q]` for `Z ~ N(0, Sigma)`: sum over perfect pairings.
pub fn wick_value(sigma: &DMatrix<f64>, spec: &MomentSpec) -> Result<f64, LimitError> {
    if spec.order() % 2 == 1 {
        return Err(LimitError::OddOrder(spec.order()));
    }
    if spec.q.len() != sigma.nrows() {
        return Err(LimitError::DimensionMismatch {
            expected: sigma.nrows(),
            found: spec.q.len(),
        });
    }
    Ok(pairings(&spec.labels(), sigma))
}

/// Empirical and Gaussian values of an even moment and their relative error.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WickCheck {
    pub empirical: f64,
    pub wick: f64,
    pub relative_error: f64,
}

pub fn wick_check(
    summary: &EmpiricalSummary,
    sigma: &DMatrix<f64>,
    spec: &MomentSpec,
) -> Result<WickCheck, LimitError> {
    let wick = wick_value(sigma, spec)?;
    let empirical = summary
        .moment(&spec.q)
        .ok_or(LimitError::DimensionMismatch {
            expected: summary.dim(),
            found: spec.q.len(),
        })?;
    Ok(WickCheck {
        empirical,
        wick,
        relative_error: (empirical - wick).abs() / wick.abs().max(1e-12),
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OddMoment {
    pub value: f64,
    /// Heuristic band `5 * order / sqrt(T)`.
    pub band: f64,
    pub within_band: bool,
    /// Second moments vanish; the band check is skipped.
    pub degenerate: bool,
}

/// Empirical odd moment; expected to vanish as `T` grows.
pub fn odd_moment_check(summary: &EmpiricalSummary, spec: &MomentSpec) -> Result<OddMoment, LimitError> {
    if spec.order() % 2 == 0 {
        return Err(LimitError::EvenOrder(spec.order()));
    }
    let value = summary.moment(&spec.q).ok_or(LimitError::DimensionMismatch {
        expected: summary.dim(),
        found: spec.q.len(),
    })?;
    let degenerate = spec.q.iter().enumerate().any(|(i, &e)| {
        if e == 0 {
            return false;
        }
        let mut sq = vec![0u32; spec.q.len()];
        sq[i] = 2;
        summary.moment(&sq).map_or(true, |m| m.abs() <= DEGENERATE_VARIANCE)
    });
    let band = 5.0 * spec.order() as f64 / summary.t.sqrt();
    Ok(OddMoment {
        value,
        band,
        within_band: degenerate || value.abs() < band,
        degenerate,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn spec(q: &[u32]) -> MomentSpec {
        MomentSpec::new(q.to_vec()).unwrap()
    }

    #[test]
    fn isserlis_counts() {
        let s1 = DMatrix::from_element(1, 1, 0.3);
        assert!((wick_value(&s1, &spec(&[2])).unwrap() - 0.3).abs() < 1e-15);
        assert!((wick_value(&s1, &spec(&[4])).unwrap() - 3.0 * 0.09).abs() < 1e-15);
        let s = DMatrix::from_row_slice(2, 2, &[2.0, 0.5, 0.5, 3.0]);
        let want = 2.0 * 3.0 + 2.0 * 0.25;
        assert!((wick_value(&s, &spec(&[2, 2])).unwrap() - want).abs() < 1e-14);
        // (3,1): 3 Sigma11 Sigma12
        assert!((wick_value(&s, &spec(&[3, 1])).unwrap() - 3.0 * 2.0 * 0.5).abs() < 1e-14);
    }

    #[test]
    fn contract_violations() {
        let s = DMatrix::from_element(1, 1, 1.0);
        assert!(matches!(wick_value(&s, &spec(&[3])), Err(LimitError::OddOrder(3))));
        assert!(matches!(MomentSpec::new(vec![5]), Err(LimitError::Order(5))));
        assert!(matches!(MomentSpec::new(vec![0, 0]), Err(LimitError::Order(0))));
    }

    proptest! {
        #[test]
        fn invariant_under_joint_permutation(
            a in 0.1f64..2.0, b in 0.1f64..2.0, c in -0.5f64..0.5, q0 in 0u32..=4, q1 in 0u32..=4
        ) {
            prop_assume!(q0 + q1 > 0 && q0 + q1 <= 4 && (q0 + q1) % 2 == 0);
            let s = DMatrix::from_row_slice(2, 2, &[a, c, c, b]);
            let p = DMatrix::from_row_slice(2, 2, &[b, c, c, a]);
            let x = wick_value(&s, &spec(&[q0, q1])).unwrap();
            let y = wick_value(&p, &spec(&[q1, q0])).unwrap();
            prop_assert!((x - y).abs() <= 1e-12 * x.abs().max(1.0));
        }
    }
}
