use nalgebra::{DMatrix, SymmetricEigen};
use rayon::prelude::*;

use super::eigen::{leading_eigentriple_from, EigenTriple};
use super::transfer::{assemble_transfer, tail_norm, TransferBlocks};
use super::SpectralError;
use crate::graph::WeightedDigraph;

pub const ROOT_TOL: f64 = 1e-12;
pub const NEUMANN_TOL: f64 = 1e-15;
/// Head size is the smallest `k` with tail norm at most this at `(h/2, 0)`.
pub const HEAD_TAIL_NORM: f64 = 0.5;
const MAX_BRACKET_STEPS: usize = 200;
const MAX_ROOT_STEPS: usize = 200;
/// Tolerance that the analytic and finite-difference means must agree to.
pub const MEAN_FD_TOL: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolverOptions {
    /// Head size; `None` picks one from the tail norm at half the growth rate.
    pub head: Option<usize>,
    pub neumann_tol: f64,
    pub root_tol: f64,
    /// Finite-difference step; `None` means `1e-3 * max(1, h)`.
    pub fd_step: Option<f64>,
}

impl Default for SolverOptions {
    fn default() -> Self {
        SolverOptions {
            head: None,
            neumann_tol: NEUMANN_TOL,
            root_tol: ROOT_TOL,
            fd_step: None,
        }
    }
}

/// Transfer data and eigendata at one `(s, t)`.
#[derive(Debug, Clone)]
pub struct Evaluation {
    pub blocks: TransferBlocks,
    pub eigen: EigenTriple,
}

/// Root of `lambda(s, t) = 1` for fixed `t`.
#[derive(Debug, Clone)]
pub struct RootPoint {
    pub s: f64,
    pub t: Vec<f64>,
    pub eval: Evaluation,
    pub evaluations: usize,
}

/// Solves for growth rate and pressure on one graph at a fixed head size.
#[derive(Debug, Clone)]
pub struct SpectralSolver<'g> {
    g: &'g WeightedDigraph,
    k: usize,
    opts: SolverOptions,
}

impl<'g> SpectralSolver<'g> {
    pub fn new(g: &'g WeightedDigraph, opts: SolverOptions) -> Result<Self, SpectralError> {
        if g.is_empty() {
            return Err(SpectralError::EmptyGraph);
        }
        let k = match opts.head {
            Some(k) if k == 0 || k > g.len() => {
                return Err(SpectralError::BadHeadSize { k, total: g.len() })
            }
            Some(k) => k,
            None => default_head(g, opts)?,
        };
        Ok(SpectralSolver { g, k, opts })
    }

    pub fn graph(&self) -> &'g WeightedDigraph {
        self.g
    }

    pub fn head_size(&self) -> usize {
        self.k
    }

    pub fn options(&self) -> SolverOptions {
        self.opts
    }

    pub fn evaluate(
        &self,
        s: f64,
        t: &[f64],
        warm: Option<&EigenTriple>,
    ) -> Result<Evaluation, SpectralError> {
        let blocks = assemble_transfer(self.g, s, t, self.k, self.opts.neumann_tol)?;
        let eigen = leading_eigentriple_from(
            &blocks.w,
            warm.map(|e| (e.u.as_slice(), e.v.as_slice())),
        )?;
        Ok(Evaluation { blocks, eigen })
    }

    pub fn lambda(&self, s: f64, t: &[f64]) -> Result<f64, SpectralError> {
        Ok(self.evaluate(s, t, None)?.eigen.lambda)
    }

    /// `(d lambda/ds, d lambda/dt)` at an evaluated point.
    pub fn derivatives(&self, eval: &Evaluation) -> (f64, Vec<f64>) {
        eval.blocks
            .eigen_derivatives(self.g, &eval.eigen.u, &eval.eigen.v, 1e-17)
    }

    /// Solves `lambda(s, t) = 1` for `s`, starting the bracket search at `guess`.
    pub fn solve(&self, t: &[f64], guess: f64) -> Result<RootPoint, SpectralError> {
        let mut warm: Option<EigenTriple> = None;
        let count = std::cell::Cell::new(0usize);
        let eval_at = |s: f64, warm: &mut Option<EigenTriple>| -> Result<Evaluation, SpectralError> {
            count.set(count.get() + 1);
            let e = self.evaluate(s, t, warm.as_ref())?;
            *warm = Some(e.eigen.clone());
            Ok(e)
        };

        // Find a starting point where the tail contracts.
        let mut s0 = guess;
        let mut first = None;
        let mut step = 0.5 * guess.abs().max(1.0);
        for _ in 0..MAX_BRACKET_STEPS {
            match eval_at(s0, &mut warm) {
                Ok(e) => {
                    first = Some(e);
                    break;
                }
                Err(SpectralError::TailNotContracting { .. }) => {
                    s0 += step;
                    step *= 2.0;
                }
                Err(e) => return Err(e),
            }
        }
        let first = first.ok_or(SpectralError::BracketFailure {
            reason: "tail never contracts",
        })?;
        let f0 = first.eigen.lambda - 1.0;
        if f0.abs() <= self.opts.root_tol {
            return Ok(RootPoint {
                s: s0,
                t: t.to_vec(),
                eval: first,
                evaluations: count.get(),
            });
        }

        // Bracket: lambda decreases in s.
        let (mut lo, mut hi);
        let (mut f_lo, mut f_hi);
        let mut e_lo: Option<Evaluation>;
        let mut e_hi: Option<Evaluation>;
        let mut step = 0.5 * s0.abs().max(1.0);
        if f0 > 0.0 {
            lo = s0;
            f_lo = f0;
            e_lo = Some(first);
            let mut s = s0;
            loop {
                s += step;
                step *= 2.0;
                let e = eval_at(s, &mut warm)?;
                let f = e.eigen.lambda - 1.0;
                if f <= 0.0 {
                    hi = s;
                    f_hi = f;
                    e_hi = Some(e);
                    break;
                }
                lo = s;
                f_lo = f;
                e_lo = Some(e);
                if count.get() > MAX_BRACKET_STEPS {
                    return Err(SpectralError::BracketFailure {
                        reason: "eigenvalue stays above 1",
                    });
                }
            }
        } else {
            hi = s0;
            f_hi = f0;
            e_hi = Some(first);
            let mut s = s0;
            // Points to the left may leave the contraction region; bisect toward it.
            let mut bad: Option<f64> = None;
            loop {
                if count.get() > MAX_BRACKET_STEPS {
                    return Err(SpectralError::BracketFailure {
                        reason: "eigenvalue stays below 1 where the tail contracts",
                    });
                }
                let cand = match bad {
                    None => s - step,
                    Some(b) => 0.5 * (b + s),
                };
                if let Some(b) = bad {
                    if (s - b).abs() <= 1e-12 * s.abs().max(1.0) {
                        return Err(SpectralError::BracketFailure {
                            reason: "eigenvalue stays below 1 where the tail contracts",
                        });
                    }
                }
                match eval_at(cand, &mut warm) {
                    Ok(e) => {
                        let f = e.eigen.lambda - 1.0;
                        if f >= 0.0 {
                            lo = cand;
                            f_lo = f;
                            e_lo = Some(e);
                            break;
                        }
                        hi = cand;
                        f_hi = f;
                        e_hi = Some(e);
                        s = cand;
                        if bad.is_none() {
                            step *= 2.0;
                        }
                    }
                    Err(SpectralError::TailNotContracting { .. }) => bad = Some(cand),
                    Err(e) => return Err(e),
                }
            }
        }

        // Illinois-modified regula falsi with bisection fallback; `w_*` are
        // the weighted function values used for the secant step.
        let (mut w_lo, mut w_hi) = (f_lo, f_hi);
        let mut side = 0i8;
        for _ in 0..MAX_ROOT_STEPS {
            if f_lo.abs() <= self.opts.root_tol {
                return Ok(RootPoint {
                    s: lo,
                    t: t.to_vec(),
                    eval: e_lo.expect("evaluated"),
                    evaluations: count.get(),
                });
            }
            if f_hi.abs() <= self.opts.root_tol {
                return Ok(RootPoint {
                    s: hi,
                    t: t.to_vec(),
                    eval: e_hi.expect("evaluated"),
                    evaluations: count.get(),
                });
            }
            let mut s = (lo * w_hi - hi * w_lo) / (w_hi - w_lo);
            if !(s > lo && s < hi) {
                s = 0.5 * (lo + hi);
            }
            if hi - lo <= 4.0 * f64::EPSILON * s.abs().max(1e-300) {
                // Bracket exhausted at machine precision.
                let (ss, ee) = if f_lo.abs() < f_hi.abs() {
                    (lo, e_lo)
                } else {
                    (hi, e_hi)
                };
                return Ok(RootPoint {
                    s: ss,
                    t: t.to_vec(),
                    eval: ee.expect("evaluated"),
                    evaluations: count.get(),
                });
            }
            let e = eval_at(s, &mut warm)?;
            let f = e.eigen.lambda - 1.0;
            if f > 0.0 {
                lo = s;
                f_lo = f;
                w_lo = f;
                e_lo = Some(e);
                if side == 1 {
                    w_hi *= 0.5;
                }
                side = 1;
            } else {
                hi = s;
                f_hi = f;
                w_hi = f;
                e_hi = Some(e);
                if side == -1 {
                    w_lo *= 0.5;
                }
                side = -1;
            }
        }
        Err(SpectralError::NoConvergence {
            what: "root solve",
            residual: f_lo.abs().min(f_hi.abs()),
        })
    }

    pub fn growth_rate(&self) -> Result<f64, SpectralError> {
        Ok(self.solve(&vec![0.0; self.g.cost_dim()], 0.0)?.s)
    }

    /// `sigma(t)`: the `s` with `lambda(s, t) = 1`.
    pub fn pressure(&self, t: &[f64], guess: f64) -> Result<f64, SpectralError> {
        self.solve(t, guess).map(|r| r.s).map_err(|e| match e {
            SpectralError::BracketFailure { .. } | SpectralError::NoConvergence { .. } => {
                SpectralError::OutsidePressureDomain { t: t.to_vec() }
            }
            other => other,
        })
    }

    /// Analytic `grad sigma(t) = -grad_t lambda / lambda_s` at a root.
    pub fn pressure_gradient_at(&self, root: &RootPoint) -> Vec<f64> {
        let (ds, dt) = self.derivatives(&root.eval);
        dt.iter().map(|x| -x / ds).collect()
    }

    pub fn pressure_gradient(&self, t: &[f64], guess: f64) -> Result<(f64, Vec<f64>), SpectralError> {
        let r = self.solve(t, guess)?;
        Ok((r.s, self.pressure_gradient_at(&r)))
    }

    pub fn fd_step(&self, h: f64) -> f64 {
        self.opts.fd_step.unwrap_or(1e-3 * h.abs().max(1.0))
    }
}

/// Smallest head with tail norm at most [`HEAD_TAIL_NORM`] at half the growth
/// rate computed on the full matrix.
pub fn default_head(g: &WeightedDigraph, opts: SolverOptions) -> Result<usize, SpectralError> {
    let total = g.len();
    let full = SpectralSolver {
        g,
        k: total,
        opts,
    };
    let h = full.growth_rate()?;
    let zero = vec![0.0; g.cost_dim()];
    let (mut lo, mut hi) = (1usize, total);
    while lo < hi {
        let mid = (lo + hi) / 2;
        if tail_norm(g, 0.5 * h, &zero, mid) <= HEAD_TAIL_NORM {
            hi = mid;
        } else {
            lo = mid + 1;
        }
    }
    Ok(lo)
}

/// Per-derivative finite-difference diagnostics.
#[derive(Debug, Clone, PartialEq)]
pub struct Diagnostics {
    /// Richardson-extrapolated central differences of `sigma`.
    pub mean_fd: Vec<f64>,
    /// `|analytic - fd|` per component.
    pub mean_gap: Vec<f64>,
    /// `|D(delta) - D(delta/2)|` per component of the mean.
    pub mean_richardson: Vec<f64>,
    /// Richardson error estimates per covariance entry.
    pub sigma_richardson: DMatrix<f64>,
    /// Second differences of `sigma` itself (noisier cross-check).
    pub hessian_fd: DMatrix<f64>,
    pub eigen_residual: f64,
    pub d_norm_at_h: f64,
    pub neumann_terms_at_h: usize,
    pub tail_residual_at_h: f64,
}

impl Diagnostics {
    pub fn mean_agrees(&self) -> bool {
        self.mean_gap.iter().all(|&g| g < MEAN_FD_TOL)
    }
}

#[derive(Debug, Clone)]
pub struct SpectralResult {
    pub h: f64,
    pub lambda: Vec<f64>,
    pub sigma: DMatrix<f64>,
    /// `(t, sigma(t))` samples; grid points outside the domain are omitted.
    pub pressure_samples: Vec<(Vec<f64>, f64)>,
    pub fd_step: f64,
    pub head_size: usize,
    pub total_states: usize,
    pub lambda_at_h: f64,
    pub diagnostics: Diagnostics,
}

impl<'g> SpectralSolver<'g> {
    /// Growth rate, mean and covariance with diagnostics.
    pub fn analyze(&self) -> Result<SpectralResult, SpectralError> {
        let n = self.g.cost_dim();
        let zero = vec![0.0; n];
        let root = self.solve(&zero, 0.0)?;
        let h = root.s;
        let lambda = self.pressure_gradient_at(&root);
        let delta = self.fd_step(h);

        // Stencil evaluations are independent; run them in parallel and
        // combine in index order.
        let offsets: Vec<(usize, f64)> = (0..n)
            .flat_map(|i| [(i, delta), (i, -delta), (i, 0.5 * delta), (i, -0.5 * delta)])
            .collect();
        let stencil: Vec<Result<(f64, Vec<f64>), SpectralError>> = offsets
            .par_iter()
            .map(|&(i, d)| {
                let mut t = zero.clone();
                t[i] = d;
                self.pressure_gradient(&t, h + d * lambda[i])
            })
            .collect();
        let stencil = stencil
            .into_iter()
            .collect::<Result<Vec<_>, _>>()
            .map_err(|e| SpectralError::FiniteDifference(Box::new(e)))?;

        let mut mean_fd = vec![0.0; n];
        let mut mean_gap = vec![0.0; n];
        let mut mean_richardson = vec![0.0; n];
        let mut sigma = DMatrix::zeros(n, n);
        let mut sigma_richardson = DMatrix::zeros(n, n);
        let mut hessian_fd = DMatrix::zeros(n, n);
        for j in 0..n {
            let (sp, gp) = &stencil[4 * j];
            let (sm, gm) = &stencil[4 * j + 1];
            let (sp2, gp2) = &stencil[4 * j + 2];
            let (sm2, gm2) = &stencil[4 * j + 3];
            let d1 = (sp - sm) / (2.0 * delta);
            let d2 = (sp2 - sm2) / delta;
            mean_fd[j] = (4.0 * d2 - d1) / 3.0;
            mean_gap[j] = (mean_fd[j] - lambda[j]).abs();
            mean_richardson[j] = (d2 - d1).abs();
            hessian_fd[(j, j)] = (sp2 - 2.0 * h + sm2) / (0.25 * delta * delta);
            for i in 0..n {
                let c1 = (gp[i] - gm[i]) / (2.0 * delta);
                let c2 = (gp2[i] - gm2[i]) / delta;
                sigma[(i, j)] = (4.0 * c2 - c1) / 3.0;
                sigma_richardson[(i, j)] = (c2 - c1).abs();
            }
        }
        let sigma = clamp_psd(&(0.5 * (&sigma + sigma.transpose())));

        let diagnostics = Diagnostics {
            mean_fd,
            mean_gap,
            mean_richardson,
            sigma_richardson,
            hessian_fd,
            eigen_residual: root.eval.eigen.residual,
            d_norm_at_h: root.eval.blocks.d_norm,
            neumann_terms_at_h: root.eval.blocks.neumann_terms,
            tail_residual_at_h: root.eval.blocks.tail_residual,
        };
        Ok(SpectralResult {
            h,
            lambda,
            sigma,
            pressure_samples: vec![(zero, h)],
            fd_step: delta,
            head_size: self.k,
            total_states: self.g.len(),
            lambda_at_h: root.eval.eigen.lambda,
            diagnostics,
        })
    }

    /// Evaluates `sigma(t)` on a grid of points; unsolvable points are skipped.
    pub fn pressure_grid(&self, points: &[Vec<f64>], h: f64) -> Vec<(Vec<f64>, f64)> {
        let vals: Vec<Option<f64>> = points
            .par_iter()
            .map(|t| self.pressure(t, h).ok())
            .collect();
        points
            .iter()
            .zip(vals)
            .filter_map(|(t, v)| v.map(|v| (t.clone(), v)))
            .collect()
    }
}

/// Symmetric matrix with eigenvalues below `1e-10 * trace` set to zero.
pub fn clamp_psd(m: &DMatrix<f64>) -> DMatrix<f64> {
    let n = m.nrows();
    if n == 0 {
        return m.clone();
    }
    let trace = m.trace().abs();
    let eig = SymmetricEigen::new(m.clone());
    let floor = 1e-10 * trace;
    let mut changed = false;
    let vals = eig.eigenvalues.map(|x| {
        if x < floor {
            changed = true;
            0.0
        } else {
            x
        }
    });
    if !changed {
        return m.clone();
    }
    let q = &eig.eigenvectors;
    let out = q * DMatrix::from_diagonal(&vals) * q.transpose();
    0.5 * (&out + out.transpose())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::fixtures::loop2;
    use crate::graph::GraphBuilder;
    use approx::assert_relative_eq;

    const SQ2: f64 = std::f64::consts::SQRT_2;

    /// Bisection root of a decreasing scalar function.
    fn bisect(f: impl Fn(f64) -> f64, mut lo: f64, mut hi: f64) -> f64 {
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if f(mid) > 0.0 {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        0.5 * (lo + hi)
    }

    fn loop2_sigma(t: f64) -> f64 {
        bisect(|s| (t - s).exp() + (-SQ2 * s).exp() - 1.0, -10.0, 10.0)
    }

    #[test]
    fn growth_rate_matches_scalar_root() {
        let g = loop2();
        for k in [1, 2] {
            let sol = SpectralSolver::new(&g, SolverOptions { head: Some(k), ..Default::default() }).unwrap();
            assert_relative_eq!(sol.growth_rate().unwrap(), loop2_sigma(0.0), epsilon = 1e-11);
        }
        assert_relative_eq!(loop2_sigma(0.0), 0.5801882726692213, epsilon = 1e-13);
    }

    #[test]
    fn pressure_matches_scalar_root() {
        let g = loop2();
        let sol = SpectralSolver::new(&g, Default::default()).unwrap();
        for t in [-0.5, -0.1, 0.1, 0.7] {
            assert_relative_eq!(sol.pressure(&[t], 0.58).unwrap(), loop2_sigma(t), epsilon = 1e-11);
        }
        let (p, m, z) = (
            sol.pressure(&[0.1], 0.5).unwrap(),
            sol.pressure(&[-0.1], 0.5).unwrap(),
            sol.pressure(&[0.0], 0.5).unwrap(),
        );
        assert!(p + m >= 2.0 * z - 1e-10);
    }

    #[test]
    fn lattice_single_loop_has_zero_growth() {
        let mut b = GraphBuilder::new(0, 1.0);
        b.add_state("a", "v", "v", 1.0, vec![]);
        b.transall();
        let g = b.build().unwrap();
        let sol = SpectralSolver::new(&g, SolverOptions { head: Some(1), ..Default::default() }).unwrap();
        assert!(sol.growth_rate().unwrap().abs() < 1e-12);
    }

    #[test]
    fn doubling_lengths_halves_growth() {
        let g = loop2();
        let g2 = g.scaled_lengths(2.0);
        let h = SpectralSolver::new(&g, Default::default()).unwrap().growth_rate().unwrap();
        let h2 = SpectralSolver::new(&g2, Default::default()).unwrap().growth_rate().unwrap();
        assert_relative_eq!(h2, 0.5 * h, epsilon = 1e-12);
    }

    #[test]
    fn mean_and_covariance_match_scalar_oracle() {
        let g = loop2();
        let r = SpectralSolver::new(&g, Default::default()).unwrap().analyze().unwrap();
        let h = loop2_sigma(0.0);
        let want = (-h).exp() / ((-h).exp() + SQ2 * (-SQ2 * h).exp());
        assert_relative_eq!(r.lambda[0], want, epsilon = 1e-11);
        assert_relative_eq!(r.lambda[0], 0.4734620271044482, epsilon = 1e-11);
        assert!(r.diagnostics.mean_agrees());
        // second derivative of the implicit root, independent formula
        let (a, b) = ((-h).exp(), (-SQ2 * h).exp());
        let sp = want;
        let spp = a * (1.0 - sp).powi(2) + b * 2.0 * sp * sp;
        let spp = spp / (a + SQ2 * b);
        assert_relative_eq!(r.sigma[(0, 0)], spp, epsilon = 1e-8);
    }

    #[test]
    fn cost_equal_to_length_is_deterministic() {
        let g = loop2()
            .with_state_costs(1, 1.0, |s| vec![s.length])
            .unwrap();
        let r = SpectralSolver::new(&g, Default::default()).unwrap().analyze().unwrap();
        assert_relative_eq!(r.lambda[0], 1.0, epsilon = 1e-12);
        assert!(r.sigma[(0, 0)].abs() <= 1e-8);
    }

    #[test]
    fn repeated_cost_gives_rank_one_covariance() {
        let g = loop2()
            .with_state_costs(2, 1.0, |s| if s.label == "a" { vec![1.0, 1.0] } else { vec![0.0, 0.0] })
            .unwrap();
        let r = SpectralSolver::new(&g, Default::default()).unwrap().analyze().unwrap();
        let s = &r.sigma;
        assert_relative_eq!(s[(0, 0)], s[(0, 1)], epsilon = 1e-8);
        assert_relative_eq!(s[(1, 1)], s[(0, 1)], epsilon = 1e-8);
        let eig = SymmetricEigen::new(s.clone()).eigenvalues;
        assert!(eig.min().abs() <= 1e-8 * s.trace());
    }

    #[test]
    fn psd_clamp() {
        let m = DMatrix::from_row_slice(2, 2, &[1.0, 1.0, 1.0, 1.0 - 1e-12]);
        let c = clamp_psd(&m);
        let eig = SymmetricEigen::new(c).eigenvalues;
        assert!(eig.min() >= -1e-15);
    }
}
