use std::fs;
use std::path::{Path, PathBuf};

use flatcount_cli::{read_kv, run_command, EXIT_BUDGET, EXIT_OK, EXIT_USAGE, EXIT_VALIDATION};

fn data(name: &str) -> String {
    Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("../../data")
        .join(name)
        .display()
        .to_string()
}

fn run(args: &[&str], out: &Path) -> i32 {
    let mut argv = vec!["flatcount".to_string()];
    argv.extend(args.iter().map(|s| s.to_string()));
    argv.push("--out".into());
    argv.push(out.display().to_string());
    run_command(argv)
}

fn value(out: &Path, key: &str) -> String {
    read_kv(&out.join("result.kv"))
        .unwrap()
        .into_iter()
        .find(|(k, _)| k == key)
        .unwrap_or_else(|| panic!("missing {key}"))
        .1
}

fn num(out: &Path, key: &str) -> f64 {
    value(out, key).split_whitespace().next().unwrap().parse().unwrap()
}

#[test]
fn figure1_angles() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(run(&["verify", "figure1"], dir.path()), EXIT_OK);
    assert!(num(dir.path(), "angle_1_error") < 1e-9);
    assert!(num(dir.path(), "angle_2_error") < 1e-9);
    assert_eq!(value(dir.path(), "config.command"), "verify figure1");
}

#[test]
fn loop2_prediction() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(run(&["graph", "predict", &data("loop2.graph")], dir.path()), EXIT_OK);
    assert!((num(dir.path(), "h") - 0.580188).abs() < 1e-6);
    assert!((num(dir.path(), "Lambda") - 0.473462).abs() < 1e-6);
    let csv = fs::read_to_string(dir.path().join("pressure.csv")).unwrap();
    assert!(csv.starts_with("# command = graph predict"));
}

#[test]
fn exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path();
    assert_eq!(run(&["surface", "validate", &data("torus.surf")], p), EXIT_VALIDATION);
    assert_eq!(run(&["graph", "frobnicate"], p), EXIT_USAGE);
    assert_eq!(run(&["surface", "paths", "lshape", "-L", "3", "-T", "4"], p), EXIT_USAGE);
    assert_eq!(run(&["surface", "graph", "lshape", "-L", "2", "--costs", "spin"], p), EXIT_USAGE);
    assert_eq!(run(&["graph", "stats", &data("loop2.graph"), "-T", "25", "--budget", "1000"], p), EXIT_BUDGET);
    assert_eq!(run(&["surface", "saddles", "lshape", "-L", "20", "--budget", "10"], p), EXIT_BUDGET);
    assert_eq!(run(&["graph", "predict", "no/such/file.graph"], p), EXIT_VALIDATION);
}

#[test]
fn gauss_bonnet_and_surfaces() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path();
    assert_eq!(run(&["verify", "gauss-bonnet"], p), EXIT_OK);
    assert_eq!(value(p, "staircase7.cone_angles"), "4pi,4pi,4pi,4pi");
    assert_eq!(run(&["surface", "validate", &data("octagon.surf")], p), EXIT_OK);
    assert_eq!(value(p, "genus"), "2");
    assert_eq!(run(&["surface", "saddles", "lshape", "-L", "3"], p), EXIT_OK);
    let csv = fs::read_to_string(p.join("saddles.csv")).unwrap();
    let rows = csv.lines().filter(|l| !l.starts_with('#')).count() - 1;
    assert_eq!(rows.to_string(), value(p, "saddles"));
    assert_eq!(run(&["surface", "graph", "lshape", "-L", "1.5", "--costs", "count,angle"], p), EXIT_OK);
    assert!(p.join("transition.graph").exists());
}

fn artifacts(dir: &Path) -> Vec<(PathBuf, String)> {
    let mut files: Vec<PathBuf> = fs::read_dir(dir).unwrap().map(|e| e.unwrap().path()).collect();
    files.sort();
    files
        .into_iter()
        .map(|f| {
            let text = fs::read_to_string(&f).unwrap();
            let body: Vec<&str> = text.lines().filter(|l| !l.contains("threads = ")).collect();
            (f.file_name().unwrap().into(), body.join("\n"))
        })
        .collect()
}

#[test]
fn artifacts_do_not_depend_on_thread_count() {
    let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    let args = |t: &'static str| ["graph", "stats", "--seed", "7", "--threads", t, "-T", "15"];
    let g = data("loop2.graph");
    let mut one = args("1").to_vec();
    one.push(&g);
    let mut four = args("4").to_vec();
    four.push(&g);
    assert_eq!(run(&one, a.path()), EXIT_OK);
    assert_eq!(run(&four, b.path()), EXIT_OK);
    let (x, y) = (artifacts(a.path()), artifacts(b.path()));
    assert!(x.iter().any(|(f, _)| f.to_str() == Some("hist_1.svg")));
    assert_eq!(x, y);
    let raw = fs::read_to_string(a.path().join("hist_1.svg")).unwrap();
    assert!(raw.contains("seed = 7") && raw.contains("threads = 1"));
}

#[test]
fn histogram_refuses_degenerate_costs() {
    let dir = tempfile::tempdir().unwrap();
    let g = dir.path().join("det.graph");
    fs::write(&g, "graph 1 2\nstate a v v 1 2\nstate b v v 1.4142135623730951 2.8284271247461903\ntransall\n").unwrap();
    let out = dir.path().join("out");
    assert_eq!(run(&["graph", "stats", g.to_str().unwrap(), "-T", "8"], &out), EXIT_OK);
    assert!(!out.join("hist_1.svg").exists());
    assert!(value(&out, "hist_1").contains("degenerate"));
}
