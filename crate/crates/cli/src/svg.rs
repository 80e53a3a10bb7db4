use std::f64::consts::PI;
use std::fmt::Write as _;

use flatcount::limit_laws::{histogram_bins, DEGENERATE_VARIANCE};

use crate::CliError;

const WIDTH: f64 = 640.0;
const HEIGHT: f64 = 400.0;
const MARGIN: f64 = 40.0;
pub const MIN_SAMPLES: usize = 10;

/// Column `column` of a samples CSV (`#` lines are comments).
pub fn read_samples(csv_text: &str, column: usize) -> Result<Vec<f64>, CliError> {
    let mut rdr = csv::ReaderBuilder::new()
        .comment(Some(b'#'))
        .from_reader(csv_text.as_bytes());
    let mut out = Vec::new();
    for rec in rdr.records() {
        let rec = rec.map_err(|e| CliError::Csv(e.to_string()))?;
        let field = rec
            .get(column)
            .ok_or_else(|| CliError::Csv(format!("no column {column}")))?;
        out.push(
            field
                .trim()
                .parse()
                .map_err(|_| CliError::Csv(format!("bad number `{field}`")))?,
        );
    }
    Ok(out)
}

/// Histogram of the samples (bin width `sqrt(variance) / 10`) under the
/// centred Gaussian density of the given variance.
pub fn render_histogram(samples: &[f64], variance: f64, title: &str) -> Result<String, CliError> {
    if samples.len() < MIN_SAMPLES {
        return Err(CliError::TooFewSamples(samples.len()));
    }
    if !(variance > DEGENERATE_VARIANCE) {
        return Err(CliError::DegenerateDirection(variance));
    }
    let sd = variance.sqrt();
    let bins = histogram_bins(samples, sd / 10.0);
    let reach = samples.iter().fold(4.0 * sd, |m, x| m.max(x.abs()));
    let peak = 1.0 / (2.0 * PI * variance).sqrt();
    let top = bins.iter().fold(peak, |m, b| m.max(b.density)) * 1.1;
    let (pw, ph) = (WIDTH - 2.0 * MARGIN, HEIGHT - 2.0 * MARGIN);
    let x = |v: f64| MARGIN + (v + reach) / (2.0 * reach) * pw;
    let y = |d: f64| HEIGHT - MARGIN - d / top * ph;

    let mut s = String::new();
    let _ = writeln!(s, r#"<?xml version="1.0" encoding="UTF-8"?>"#);
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}">"#
    );
    let _ = writeln!(s, r#"<rect width="100%" height="100%" fill="white"/>"#);
    let _ = writeln!(
        s,
        r#"<text x="{MARGIN}" y="24" font-family="sans-serif" font-size="14">{}</text>"#,
        escape(title)
    );
    let _ = writeln!(s, r##"<g fill="#8ab" stroke="#567" stroke-width="0.5">"##);
    for b in bins.iter().filter(|b| b.count > 0) {
        let (x0, x1) = (x(b.lo), x(b.hi));
        let y0 = y(b.density);
        let _ = writeln!(
            s,
            r#"<rect x="{x0:.3}" y="{y0:.3}" width="{:.3}" height="{:.3}"/>"#,
            x1 - x0,
            HEIGHT - MARGIN - y0
        );
    }
    let _ = writeln!(s, "</g>");
    let pts: Vec<String> = (0..=200)
        .map(|i| {
            let v = -reach + 2.0 * reach * i as f64 / 200.0;
            let d = peak * (-v * v / (2.0 * variance)).exp();
            format!("{:.3},{:.3}", x(v), y(d))
        })
        .collect();
    let _ = writeln!(
        s,
        r##"<polyline fill="none" stroke="#c33" stroke-width="2" points="{}"/>"##,
        pts.join(" ")
    );
    let (base, zero) = (HEIGHT - MARGIN, x(0.0));
    let _ = writeln!(
        s,
        r#"<line x1="{MARGIN}" y1="{base}" x2="{:.3}" y2="{base}" stroke="black"/>"#,
        WIDTH - MARGIN
    );
    let _ = writeln!(
        s,
        r#"<line x1="{zero:.3}" y1="{base}" x2="{zero:.3}" y2="{:.3}" stroke="black" stroke-dasharray="3,3"/>"#,
        MARGIN
    );
    for (v, anchor) in [(-reach, "start"), (0.0, "middle"), (reach, "end")] {
        let _ = writeln!(
            s,
            r#"<text x="{:.3}" y="{:.3}" font-family="sans-serif" font-size="11" text-anchor="{anchor}">{v:.3}</text>"#,
            x(v),
            base + 16.0
        );
    }
    let _ = writeln!(
        s,
        r#"<text x="{:.3}" y="{:.3}" font-family="sans-serif" font-size="11" text-anchor="end">n = {}, variance = {variance:.6}</text>"#,
        WIDTH - MARGIN,
        MARGIN - 8.0,
        samples.len()
    );
    s.push_str("</svg>\n");
    Ok(s)
}

fn escape(t: &str) -> String {
    t.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

#[cfg(test)]
mod tests {
    use super::*;

    fn normal(n: usize) -> Vec<f64> {
        // deterministic quantiles of N(0, 1) via the logistic approximation
        (1..=n)
            .map(|i| {
                let p = i as f64 / (n + 1) as f64;
                (p / (1.0 - p)).ln() / 1.702
            })
            .collect()
    }

    #[test]
    fn output_is_deterministic() {
        let xs = normal(10_000);
        let a = render_histogram(&xs, 1.0, "z1").unwrap();
        let b = render_histogram(&xs, 1.0, "z1").unwrap();
        assert_eq!(a, b);
        assert!(a.starts_with("<?xml") && a.ends_with("</svg>\n"));
        assert!(a.contains("<polyline"));
    }

    #[test]
    fn refuses_bad_input() {
        let xs = normal(50);
        let e = render_histogram(&xs, 0.0, "z").unwrap_err();
        assert!(e.to_string().contains("degenerate direction"));
        assert!(matches!(render_histogram(&xs[..9], 1.0, "z"), Err(CliError::TooFewSamples(9))));
    }

    #[test]
    fn reads_commented_csv() {
        let xs = read_samples("# seed = 1\nz1,z2\n0.5,1\n-0.25,2\n", 1).unwrap();
        assert_eq!(xs, vec![1.0, 2.0]);
        assert!(read_samples("z1\nx\n", 0).is_err());
    }
}
