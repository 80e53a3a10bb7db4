use nalgebra::DMatrix;

use super::SpectralError;
use crate::graph::{cycle_basis, CycleOptions, PathRecord, WeightedDigraph};

pub const RANK_TOL: f64 = 1e-8;

#[derive(Debug, Clone, PartialEq)]
pub struct DegeneracyReport {
    /// `(cycle index, c(p) - Lambda l(p))`.
    pub residues: Vec<(usize, Vec<f64>)>,
    pub residue_rank: usize,
    /// Orthonormal basis of directions orthogonal to every residue.
    pub degenerate_directions: Vec<Vec<f64>>,
    /// For one cost with rank zero: the ratio `c(p)/l(p)`.
    pub scalar_tau: Option<f64>,
    pub singular_values: Vec<f64>,
}

impl DegeneracyReport {
    pub fn is_degenerate(&self) -> bool {
        !self.degenerate_directions.is_empty()
    }
}

/// Residues over the cycle family up to `max_cycle_len` and their rank.
pub fn degeneracy_test(
    g: &WeightedDigraph,
    lambda: &[f64],
    max_cycle_len: f64,
) -> Result<DegeneracyReport, SpectralError> {
    let cycles = cycle_basis(g, max_cycle_len, CycleOptions::default())?;
    residue_report(&cycles, lambda)
}

/// Rank analysis of residues for an explicit family of closed paths.
pub fn residue_report(cycles: &[PathRecord], lambda: &[f64]) -> Result<DegeneracyReport, SpectralError> {
    let n = lambda.len();
    let residues: Vec<(usize, Vec<f64>)> = cycles
        .iter()
        .enumerate()
        .map(|(i, p)| {
            if p.costs.len() != n {
                return Err(SpectralError::DimensionMismatch {
                    expected: n,
                    found: p.costs.len(),
                });
            }
            Ok((
                i,
                p.costs
                    .iter()
                    .zip(lambda)
                    .map(|(c, l)| c - l * p.length)
                    .collect(),
            ))
        })
        .collect::<Result<_, _>>()?;

    // zero rows keep V square when there are fewer cycles than costs
    let rows = residues.len().max(n);
    let mut m = DMatrix::<f64>::zeros(rows, n);
    for (i, (_, r)) in residues.iter().enumerate() {
        for a in 0..n {
            m[(i, a)] = r[a];
        }
    }
    let svd = m.svd(false, true);
    let v_t = svd.v_t.expect("requested V");
    let singular: Vec<f64> = svd.singular_values.iter().copied().collect();
    let s_max = singular.iter().copied().fold(0.0, f64::max);
    let cut = RANK_TOL * s_max.max(1.0);
    let mut rank = 0;
    let mut null = Vec::new();
    for (i, &s) in singular.iter().enumerate() {
        if s > cut {
            rank += 1;
        } else {
            null.push(v_t.row(i).iter().copied().collect());
        }
    }
    let scalar_tau = if n == 1 && rank == 0 {
        cycles.first().map(|p| p.costs[0] / p.length)
    } else {
        None
    };
    let mut sorted = singular;
    sorted.sort_by(|a, b| b.total_cmp(a));
    Ok(DegeneracyReport {
        residues,
        residue_rank: rank,
        degenerate_directions: null,
        scalar_tau,
        singular_values: sorted,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::fixtures::loop2;
    use crate::graph::GraphBuilder;

    #[test]
    fn proportional_cost_is_degenerate() {
        let g = loop2().with_state_costs(1, 2.0, |s| vec![2.0 * s.length]).unwrap();
        let r = degeneracy_test(&g, &[2.0], 5.0).unwrap();
        assert_eq!(r.residue_rank, 0);
        assert!((r.scalar_tau.unwrap() - 2.0).abs() < 1e-14);
    }

    #[test]
    fn loop2_count_cost_is_not_degenerate() {
        let r = degeneracy_test(&loop2(), &[0.4734620271044482], 5.0).unwrap();
        assert_eq!(r.residue_rank, 1);
        assert!(r.degenerate_directions.is_empty());
        assert!(r.scalar_tau.is_none());
    }

    #[test]
    fn antisymmetric_cost_with_reversal() {
        // x: u -> w and y: w -> u carry opposite costs; the loop z at w breaks
        // the cancellation.
        let mut b = GraphBuilder::new(1, 2.0);
        b.add_state("x", "u", "w", 1.0, vec![1.0]);
        b.add_state("y", "w", "u", 1.0, vec![-1.0]);
        b.add_state("z", "w", "w", 1.5, vec![1.0]);
        b.transall();
        let g = b.build().unwrap();
        let r = degeneracy_test(&g, &[0.0], 6.0).unwrap();
        assert_eq!(r.residue_rank, 1);
    }

    #[test]
    fn rank_plus_nullity_is_dimension() {
        let g = loop2()
            .with_state_costs(3, 2.0, |s| vec![1.0, 1.0, s.length])
            .unwrap();
        let r = degeneracy_test(&g, &[0.4734620271044482, 0.4734620271044482, 1.0], 5.0).unwrap();
        assert_eq!(r.residue_rank + r.degenerate_directions.len(), 3);
        assert_eq!(r.residue_rank, 1);
    }
}
