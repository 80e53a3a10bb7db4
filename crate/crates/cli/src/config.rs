use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use crate::CliError;

/// Everything a run depends on; echoed at the top of every artifact.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct RunConfig {
    pub command: String,
    pub input: Option<String>,
    pub threshold: Option<f64>,
    pub cutoff: Option<f64>,
    pub epsilon: Option<f64>,
    pub t_grid: Vec<f64>,
    pub fd_step: Option<f64>,
    pub head: Option<usize>,
    pub costs: Option<String>,
    pub out: PathBuf,
    pub seed: u64,
    pub threads: Option<usize>,
    pub budget: Option<u64>,
}

fn opt<T: std::fmt::Debug>(v: &Option<T>) -> String {
    v.as_ref().map_or_else(|| "-".to_string(), |x| format!("{x:?}"))
}

impl RunConfig {
    pub fn entries(&self) -> Vec<(&'static str, String)> {
        let grid: Vec<String> = self.t_grid.iter().map(|x| format!("{x:?}")).collect();
        vec![
            ("command", self.command.clone()),
            ("input", self.input.clone().unwrap_or_else(|| "-".into())),
            ("T", opt(&self.threshold)),
            ("L", opt(&self.cutoff)),
            ("epsilon", opt(&self.epsilon)),
            ("t_grid", if grid.is_empty() { "-".into() } else { grid.join(",") }),
            ("fd_step", opt(&self.fd_step)),
            ("k_head", opt(&self.head)),
            ("costs", self.costs.clone().unwrap_or_else(|| "-".into())),
            ("seed", self.seed.to_string()),
            ("threads", self.threads.map_or_else(|| "auto".into(), |t| t.to_string())),
            ("budget", opt(&self.budget)),
        ]
    }

    /// Header lines, each behind `prefix`.
    pub fn header(&self, prefix: &str) -> String {
        let mut out = String::new();
        for (k, v) in self.entries() {
            let _ = writeln!(out, "{prefix}{k} = {v}");
        }
        out
    }

    /// Writes `body` to `<out>/<name>` with the config header in the file's
    /// comment syntax.
    pub fn write(&self, name: &str, body: &str) -> Result<PathBuf, CliError> {
        fs::create_dir_all(&self.out).map_err(|e| CliError::io(&self.out, e))?;
        let path = self.out.join(name);
        let text = if name.ends_with(".svg") {
            svg_with_header(body, &self.header(""))
        } else if name.ends_with(".kv") {
            format!("{}{body}", self.header("config."))
        } else {
            format!("{}{body}", self.header("# "))
        };
        fs::write(&path, text).map_err(|e| CliError::io(&path, e))?;
        Ok(path)
    }
}

fn svg_with_header(svg: &str, header: &str) -> String {
    let comment = format!("<!--\n{header}-->\n");
    match svg.find("?>") {
        Some(i) => format!("{}\n{comment}{}", &svg[..i + 2], svg[i + 2..].trim_start()),
        None => format!("{comment}{svg}"),
    }
}

/// Parses a `key = value` file, skipping blank lines.
pub fn read_kv(path: &Path) -> Result<Vec<(String, String)>, CliError> {
    let text = fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
    Ok(text
        .lines()
        .filter_map(|l| l.split_once(" = "))
        .map(|(k, v)| (k.to_string(), v.to_string()))
        .collect())
}
