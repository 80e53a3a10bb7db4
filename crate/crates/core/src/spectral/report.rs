use std::fmt::Write as _;

use super::SpectralResult;

fn join(v: impl IntoIterator<Item = f64>) -> String {
    v.into_iter()
        .map(|x| format!("{x:?}"))
        .collect::<Vec<_>>()
        .join(",")
}

/// Flat `key = value` block; vectors comma-separated, matrices row-major.
pub fn result_kv(r: &SpectralResult) -> String {
    let d = &r.diagnostics;
    let mut out = String::new();
    let n = r.lambda.len();
    let rows = |m: &nalgebra::DMatrix<f64>| {
        (0..m.nrows())
            .map(|i| join(m.row(i).iter().copied()))
            .collect::<Vec<_>>()
            .join(";")
    };
    let _ = writeln!(out, "h = {:?}", r.h);
    let _ = writeln!(out, "lambda_at_h = {:?}", r.lambda_at_h);
    let _ = writeln!(out, "cost_dim = {n}");
    let _ = writeln!(out, "Lambda = {}", join(r.lambda.iter().copied()));
    let _ = writeln!(out, "Sigma = {}", rows(&r.sigma));
    let _ = writeln!(out, "fd_step = {:?}", r.fd_step);
    let _ = writeln!(out, "head_size = {}", r.head_size);
    let _ = writeln!(out, "total_states = {}", r.total_states);
    let _ = writeln!(out, "Lambda_fd = {}", join(d.mean_fd.iter().copied()));
    let _ = writeln!(out, "Lambda_fd_gap = {}", join(d.mean_gap.iter().copied()));
    let _ = writeln!(out, "Lambda_richardson = {}", join(d.mean_richardson.iter().copied()));
    let _ = writeln!(out, "Sigma_richardson = {}", rows(&d.sigma_richardson));
    let _ = writeln!(out, "Hessian_fd_diag = {}", join(d.hessian_fd.diagonal().iter().copied()));
    let _ = writeln!(out, "eigen_residual = {:?}", d.eigen_residual);
    let _ = writeln!(out, "d_norm_at_h = {:?}", d.d_norm_at_h);
    let _ = writeln!(out, "neumann_terms_at_h = {}", d.neumann_terms_at_h);
    let _ = writeln!(out, "tail_residual_at_h = {:?}", d.tail_residual_at_h);
    out
}

/// CSV of pressure samples: `t_1,..,t_n,sigma`.
pub fn pressure_csv(samples: &[(Vec<f64>, f64)], n: usize) -> String {
    let mut out = String::new();
    let head: Vec<String> = (1..=n).map(|i| format!("t{i}")).collect();
    let _ = writeln!(out, "{},sigma", head.join(","));
    for (t, s) in samples {
        let _ = writeln!(out, "{},{:?}", join(t.iter().copied()), s);
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::fixtures::loop2;
    use crate::spectral::analyze;

    #[test]
    fn kv_has_core_keys() {
        let r = analyze(&loop2(), None, None).unwrap();
        let kv = result_kv(&r);
        for key in ["h = ", "Lambda = ", "Sigma = ", "fd_step = "] {
            assert!(kv.lines().any(|l| l.starts_with(key)), "{key}");
        }
        let csv = pressure_csv(&[(vec![0.1], 0.6)], 1);
        assert_eq!(csv, "t1,sigma\n0.1,0.6\n");
    }
}
