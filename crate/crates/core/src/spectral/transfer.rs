use nalgebra::DMatrix;

use super::SpectralError;
use crate::graph::WeightedDigraph;

/// Hard cap on Neumann terms; only reachable when `D_norm` is very close to 1.
const MAX_NEUMANN_TERMS: usize = 200_000;

/// Edge-indexed transfer matrix at `(s, t)` split into head `0..k` and tail
/// `k..K`, with the head reduction `W = A + B (I - D)^-1 C`.
///
/// Entries are `M(e, e') = exp(-s l(e') + <t, c(e')> + <t, pc(e, e')>)` on
/// transitions and zero elsewhere. Rows are stored sparsely, aligned with the
/// graph's successor lists.
#[derive(Debug, Clone)]
pub struct TransferBlocks {
    pub k: usize,
    pub total: usize,
    pub s: f64,
    pub t: Vec<f64>,
    pub w: DMatrix<f64>,
    pub d_norm: f64,
    pub neumann_terms: usize,
    pub tail_residual: f64,
    weights: Vec<Vec<f64>>,
    /// `(I - D)^-1 C`, row-major `(K - k) x k`.
    y: Vec<f64>,
}

fn entry_weights(g: &WeightedDigraph, s: f64, t: &[f64]) -> Vec<Vec<f64>> {
    let base: Vec<f64> = g
        .states()
        .iter()
        .map(|st| -s * st.length + dot(t, &st.costs))
        .collect();
    (0..g.len())
        .map(|i| {
            g.successors(i)
                .iter()
                .enumerate()
                .map(|(slot, &j)| {
                    let extra = g.pair_cost_at(i, slot).map_or(0.0, |pc| dot(t, pc));
                    (base[j] + extra).exp()
                })
                .collect()
        })
        .collect()
}

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Row-sum norm of the tail block `D` for head size `k`.
pub fn tail_norm(g: &WeightedDigraph, s: f64, t: &[f64], k: usize) -> f64 {
    let weights = entry_weights(g, s, t);
    tail_norm_of(g, &weights, k)
}

fn tail_norm_of(g: &WeightedDigraph, weights: &[Vec<f64>], k: usize) -> f64 {
    (k..g.len())
        .map(|i| {
            g.successors(i)
                .iter()
                .zip(&weights[i])
                .filter(|(&j, _)| j >= k)
                .map(|(_, w)| w)
                .sum::<f64>()
        })
        .fold(0.0, f64::max)
}

/// Builds the blocks at `(s, t)` with head size `k`.
pub fn assemble_transfer(
    g: &WeightedDigraph,
    s: f64,
    t: &[f64],
    k: usize,
    tol: f64,
) -> Result<TransferBlocks, SpectralError> {
    let total = g.len();
    if t.len() != g.cost_dim() {
        return Err(SpectralError::DimensionMismatch {
            expected: g.cost_dim(),
            found: t.len(),
        });
    }
    if k == 0 || k > total {
        return Err(SpectralError::BadHeadSize { k, total });
    }
    let weights = entry_weights(g, s, t);
    let d_norm = tail_norm_of(g, &weights, k);
    if !(d_norm < 1.0) {
        return Err(SpectralError::TailNotContracting { d_norm, k });
    }

    let mut w = DMatrix::<f64>::zeros(k, k);
    for i in 0..k {
        for (&j, &x) in g.successors(i).iter().zip(&weights[i]) {
            if j < k {
                w[(i, j)] += x;
            }
        }
    }

    let tail = total - k;
    let mut y = vec![0.0; tail * k];
    let mut neumann_terms = 0;
    let mut tail_residual = 0.0;
    if tail > 0 {
        // X_0 = C
        let mut x = vec![0.0; tail * k];
        for r in 0..tail {
            let i = k + r;
            for (&j, &wt) in g.successors(i).iter().zip(&weights[i]) {
                if j < k {
                    x[r * k + j] += wt;
                }
            }
        }
        let b_norm = (0..k)
            .map(|i| {
                g.successors(i)
                    .iter()
                    .zip(&weights[i])
                    .filter(|(&j, _)| j >= k)
                    .map(|(_, w)| w)
                    .sum::<f64>()
            })
            .fold(0.0, f64::max);
        let ratio = if d_norm > 0.0 { d_norm / (1.0 - d_norm) } else { 0.0 };
        let mut next = vec![0.0; tail * k];
        loop {
            for (acc, xi) in y.iter_mut().zip(&x) {
                *acc += xi;
            }
            neumann_terms += 1;
            let x_norm = x
                .chunks(k)
                .map(|row| row.iter().map(|v| v.abs()).sum::<f64>())
                .fold(0.0, f64::max);
            tail_residual = b_norm * x_norm * ratio;
            if tail_residual <= tol || x_norm == 0.0 {
                break;
            }
            if neumann_terms >= MAX_NEUMANN_TERMS {
                return Err(SpectralError::NoConvergence {
                    what: "neumann series",
                    residual: tail_residual,
                });
            }
            // X_{m+1} = D X_m
            next.iter_mut().for_each(|v| *v = 0.0);
            for r in 0..tail {
                let i = k + r;
                let out = &mut next[r * k..(r + 1) * k];
                for (&j, &wt) in g.successors(i).iter().zip(&weights[i]) {
                    if j >= k {
                        let src = &x[(j - k) * k..(j - k + 1) * k];
                        for (o, v) in out.iter_mut().zip(src) {
                            *o += wt * v;
                        }
                    }
                }
            }
            std::mem::swap(&mut x, &mut next);
        }
        // W += B Y
        for i in 0..k {
            for (&j, &wt) in g.successors(i).iter().zip(&weights[i]) {
                if j >= k {
                    let src = &y[(j - k) * k..(j - k + 1) * k];
                    for (c, v) in src.iter().enumerate() {
                        w[(i, c)] += wt * v;
                    }
                }
            }
        }
    }

    Ok(TransferBlocks {
        k,
        total,
        s,
        t: t.to_vec(),
        w,
        d_norm,
        neumann_terms,
        tail_residual,
        weights,
        y,
    })
}

impl TransferBlocks {
    /// Full `K x K` matrix `M`.
    pub fn full(&self, g: &WeightedDigraph) -> DMatrix<f64> {
        let mut m = DMatrix::zeros(self.total, self.total);
        for i in 0..self.total {
            for (&j, &w) in g.successors(i).iter().zip(&self.weights[i]) {
                m[(i, j)] += w;
            }
        }
        m
    }

    /// Blocks `(A, B, C, D)` of the full matrix.
    pub fn blocks(
        &self,
        g: &WeightedDigraph,
    ) -> (DMatrix<f64>, DMatrix<f64>, DMatrix<f64>, DMatrix<f64>) {
        let m = self.full(g);
        let (k, n) = (self.k, self.total);
        (
            m.view((0, 0), (k, k)).into_owned(),
            m.view((0, k), (k, n - k)).into_owned(),
            m.view((k, 0), (n - k, k)).into_owned(),
            m.view((k, k), (n - k, n - k)).into_owned(),
        )
    }

    /// First-order derivatives of the leading eigenvalue of `W` given its
    /// eigenvectors (`u v = 1`): returns `(d/ds, d/dt_r)`.
    ///
    /// Uses `u dW v = U dM V` with `U = (u, u B (I-D)^-1)` and
    /// `V = (v, (I-D)^-1 C v)`, so only entrywise derivatives of `M` enter.
    pub fn eigen_derivatives(
        &self,
        g: &WeightedDigraph,
        u: &[f64],
        v: &[f64],
        tol: f64,
    ) -> (f64, Vec<f64>) {
        let (k, total) = (self.k, self.total);
        let tail = total - k;
        let n = g.cost_dim();

        let mut big_v = Vec::with_capacity(total);
        big_v.extend_from_slice(v);
        for r in 0..tail {
            big_v.push(dot(&self.y[r * k..(r + 1) * k], v));
        }

        let mut big_u = Vec::with_capacity(total);
        big_u.extend_from_slice(u);
        if tail > 0 {
            // z = (u B) sum_m D^m
            let mut term = vec![0.0; tail];
            for i in 0..k {
                for (&j, &w) in g.successors(i).iter().zip(&self.weights[i]) {
                    if j >= k {
                        term[j - k] += u[i] * w;
                    }
                }
            }
            // The row-sum bound on D does not control left products, so stop
            // on the relative size of the terms instead.
            let mut z = vec![0.0; tail];
            let mut z_norm = 0.0;
            let mut next = vec![0.0; tail];
            for _ in 0..MAX_NEUMANN_TERMS {
                let norm = term.iter().map(|x| x.abs()).sum::<f64>();
                for (a, b) in z.iter_mut().zip(&term) {
                    *a += b;
                }
                z_norm += norm;
                if norm <= tol * z_norm.max(f64::MIN_POSITIVE) || norm == 0.0 {
                    break;
                }
                next.iter_mut().for_each(|x| *x = 0.0);
                for r in 0..tail {
                    let i = k + r;
                    if term[r] == 0.0 {
                        continue;
                    }
                    for (&j, &w) in g.successors(i).iter().zip(&self.weights[i]) {
                        if j >= k {
                            next[j - k] += term[r] * w;
                        }
                    }
                }
                std::mem::swap(&mut term, &mut next);
            }
            big_u.extend_from_slice(&z);
        }

        let mut d_s = 0.0;
        let mut d_t = vec![0.0; n];
        for i in 0..total {
            if big_u[i] == 0.0 {
                continue;
            }
            for (slot, (&j, &w)) in g.successors(i).iter().zip(&self.weights[i]).enumerate() {
                let x = big_u[i] * w * big_v[j];
                let st = g.state(j);
                d_s -= x * st.length;
                let pc = g.pair_cost_at(i, slot);
                for r in 0..n {
                    let c = st.costs[r] + pc.map_or(0.0, |p| p[r]);
                    d_t[r] += x * c;
                }
            }
        }
        let uv = dot(u, v);
        (d_s / uv, d_t.iter().map(|x| x / uv).collect())
    }
}
