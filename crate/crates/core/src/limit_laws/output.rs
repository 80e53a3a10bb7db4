use std::fmt::Write as _;

use super::{EmpiricalSummary, LdpCurve};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HistogramBin {
    pub lo: f64,
    pub hi: f64,
    pub count: u64,
    /// `count / (total * width)`.
    pub density: f64,
}

/// Fixed-width bins aligned at zero, covering every sample.
pub fn histogram_bins(samples: &[f64], width: f64) -> Vec<HistogramBin> {
    if samples.is_empty() || !(width > 0.0) {
        return Vec::new();
    }
    let lo = samples.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = samples.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let first = (lo / width).floor() as i64;
    let last = (hi / width).floor() as i64;
    let nbins = (last - first + 1) as usize;
    let mut counts = vec![0u64; nbins];
    for &x in samples {
        let b = ((x / width).floor() as i64 - first) as usize;
        counts[b.min(nbins - 1)] += 1;
    }
    let total = samples.len() as f64;
    counts
        .iter()
        .enumerate()
        .map(|(b, &count)| {
            let lo = (first + b as i64) as f64 * width;
            HistogramBin {
                lo,
                hi: lo + width,
                count,
                density: count as f64 / (total * width),
            }
        })
        .collect()
}

pub fn histogram_csv(bins: &[HistogramBin]) -> String {
    let mut out = String::from("lo,hi,count,density\n");
    for b in bins {
        let _ = writeln!(out, "{:?},{:?},{},{:?}", b.lo, b.hi, b.count, b.density);
    }
    out
}

/// One row per `(T, statistic)`.
pub fn stats_csv(summaries: &[EmpiricalSummary]) -> String {
    let mut out = String::from("T,statistic,value\n");
    for s in summaries {
        let t = s.t;
        let _ = writeln!(out, "{t:?},N,{}", s.count);
        let _ = writeln!(out, "{t:?},mean_length,{:?}", s.mean_length);
        for (i, m) in s.mean.iter().enumerate() {
            let _ = writeln!(out, "{t:?},mean_{},{m:?}", i + 1);
        }
        for (q, m) in &s.moments {
            let label: Vec<String> = q.iter().map(u32::to_string).collect();
            let _ = writeln!(out, "{t:?},moment_{},{m:?}", label.join("_"));
        }
        let n = s.dim();
        for i in 0..n {
            for j in i..n {
                let _ = writeln!(out, "{t:?},cov_hat_{}{},{:?}", i + 1, j + 1, s.cov_hat[(i, j)]);
                let _ = writeln!(out, "{t:?},cov_lambda_t_{}{},{:?}", i + 1, j + 1, s.cov_lambda_t[(i, j)]);
                let _ = writeln!(out, "{t:?},cov_sample_{}{},{:?}", i + 1, j + 1, s.cov_sample[(i, j)]);
            }
        }
        let _ = writeln!(out, "{t:?},reservoir_size,{}", s.reservoir.len());
    }
    out
}

pub fn samples_csv(summary: &EmpiricalSummary) -> String {
    let n = summary.dim();
    let head: Vec<String> = (1..=n).map(|i| format!("z{i}")).collect();
    let mut out = head.join(",");
    out.push('\n');
    for z in &summary.reservoir {
        let row: Vec<String> = z.iter().map(|x| format!("{x:?}")).collect();
        out.push_str(&row.join(","));
        out.push('\n');
    }
    out
}

pub fn ldp_csv(curve: &LdpCurve) -> String {
    let mut out = String::from("T,count,tail,log_fraction,rate\n");
    for p in &curve.points {
        let _ = writeln!(
            out,
            "{:?},{},{},{:?},{:?}",
            p.t, p.count, p.tail, p.log_fraction, p.rate
        );
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bins_cover_all_samples() {
        let xs = [-0.25, -0.05, 0.0, 0.05, 0.31];
        let bins = histogram_bins(&xs, 0.1);
        assert_eq!(bins.iter().map(|b| b.count).sum::<u64>(), 5);
        assert!((bins[0].lo + 0.3).abs() < 1e-12);
        let mass: f64 = bins.iter().map(|b| b.density * 0.1).sum();
        assert!((mass - 1.0).abs() < 1e-12);
        assert!(histogram_bins(&[], 0.1).is_empty());
    }
}
