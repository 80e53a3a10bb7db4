use std::f64::consts::PI;
use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use flatcount::graph::{load_graph, to_graph_text, validate_assumptions, EnumerationOptions, WeightedDigraph, DEFAULT_MAX_PATHS};
use flatcount::limit_laws::{
    accumulate, histogram_bins, histogram_csv, ks_gaussian, ldp_csv, ldp_curve, odd_moment_check, samples_csv,
    stats_csv, wick_check, AccumulateOptions, EmpiricalSummary, MomentSpec, DEGENERATE_VARIANCE,
};
use flatcount::spectral::{
    chernoff_rate, degeneracy_test, pressure_csv, result_kv, DegeneracyReport, SolverOptions, SpectralResult,
    SpectralSolver,
};
use flatcount::surface::{
    angle_change, build_transition_graph, builtin, builtin_names, enumerate_saddles_with, find_turn_path,
    load_surface, saddle_path_stats, sheared_lshape, transform, CostMenu, PathStatsOptions, Point, SaddleOptions,
    TranslationSurface, RECORD_BUDGET, SHEAR, TURN_PATH,
};

use crate::svg::{read_samples, render_histogram};
use crate::{Cli, CliError, Common, GraphCmd, Group, RunConfig, SpectralArgs, SurfaceCmd, VerifyCmd, EXIT_OK, EXIT_VALIDATION};

const LOOP2: &str = "graph 1 1\nstate a v v 1 1\nstate b v v 1.4142135623730951 0\ntransall\n";

fn base_config(common: &Common, command: &str) -> RunConfig {
    RunConfig {
        command: command.to_string(),
        out: common.out.clone(),
        seed: common.seed,
        threads: common.threads,
        budget: common.budget,
        ..Default::default()
    }
}

fn enumeration(common: &Common) -> EnumerationOptions {
    EnumerationOptions {
        max_paths: common.budget.unwrap_or(DEFAULT_MAX_PATHS),
        threads: common.threads,
        ..Default::default()
    }
}

fn accumulation(common: &Common) -> AccumulateOptions {
    AccumulateOptions {
        seed: common.seed,
        enumeration: enumeration(common),
        ..Default::default()
    }
}

fn saddle_options(common: &Common) -> SaddleOptions {
    SaddleOptions {
        record_budget: common.budget.unwrap_or(RECORD_BUDGET),
        threads: common.threads,
    }
}

fn solver_options(a: &SpectralArgs) -> SolverOptions {
    SolverOptions {
        head: a.head,
        fd_step: a.fd_step,
        ..Default::default()
    }
}

fn read_graph(path: &Path) -> Result<WeightedDigraph, CliError> {
    let text = fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
    Ok(load_graph(&text)?)
}

fn read_surface(arg: &str) -> Result<TranslationSurface, CliError> {
    if builtin_names().contains(&arg) {
        return Ok(builtin(arg)?);
    }
    let path = Path::new(arg);
    let text = fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
    let name = path.file_stem().and_then(|s| s.to_str()).unwrap_or(arg);
    Ok(load_surface(name, &text)?)
}

fn start_vertex(g: &WeightedDigraph, start: &Option<String>) -> Result<String, CliError> {
    match start {
        Some(s) => Ok(s.clone()),
        None => g
            .start_sets()
            .keys()
            .next()
            .cloned()
            .ok_or_else(|| CliError::Usage("graph has no vertices".into())),
    }
}

fn menu(costs: &str) -> Result<CostMenu, CliError> {
    costs.parse().map_err(|e: flatcount::surface::SurfaceError| CliError::Usage(e.to_string()))
}

fn list(v: impl IntoIterator<Item = f64>) -> String {
    v.into_iter().map(|x| format!("{x:?}")).collect::<Vec<_>>().join(",")
}

fn finish(cfg: &RunConfig, kv: &str) -> Result<(), CliError> {
    cfg.write("result.kv", kv)?;
    print!("{kv}");
    Ok(())
}

pub(crate) fn dispatch(cli: &Cli) -> Result<i32, CliError> {
    let c = &cli.common;
    match &cli.group {
        Group::Graph(cmd) => graph(c, cmd),
        Group::Surface(cmd) => surface(c, cmd),
        Group::Verify(cmd) => verify(c, cmd),
    }
}

fn degeneracy_kv(kv: &mut String, d: &DegeneracyReport) {
    let _ = writeln!(kv, "residue_rank = {}", d.residue_rank);
    let _ = writeln!(kv, "cycles_tested = {}", d.residues.len());
    let _ = writeln!(kv, "degenerate = {}", d.is_degenerate());
    for (i, v) in d.degenerate_directions.iter().enumerate() {
        let _ = writeln!(kv, "degenerate_direction_{} = {}", i + 1, list(v.iter().copied()));
    }
    if let Some(tau) = d.scalar_tau {
        let _ = writeln!(kv, "tau = {tau:?}");
    }
}

/// Tables, histograms and checks shared by the graph and surface statistics
/// commands.
fn empirical_outputs(cfg: &RunConfig, r: &SpectralResult, s: &EmpiricalSummary, kv: &mut String) -> Result<(), CliError> {
    let _ = writeln!(kv, "N = {}", s.count);
    let _ = writeln!(kv, "mean = {}", list(s.mean.iter().copied()));
    let _ = writeln!(kv, "mean_length = {:?}", s.mean_length);
    let _ = writeln!(kv, "reservoir_size = {}", s.reservoir.len());
    cfg.write("stats.csv", &stats_csv(std::slice::from_ref(s)))?;
    let samples_path = cfg.write("samples.csv", &samples_csv(s))?;
    let samples_text = fs::read_to_string(&samples_path).map_err(|e| CliError::io(&samples_path, e))?;
    let n = s.dim();
    for i in 0..n {
        let var = r.sigma[(i, i)];
        let tag = i + 1;
        match ks_gaussian(s, &r.sigma, i) {
            Ok(ks) => {
                let _ = writeln!(kv, "ks_{tag} = {ks:?}");
            }
            Err(e) => {
                let _ = writeln!(kv, "ks_{tag} = skipped ({e})");
            }
        }
        for q in [2u32, 4] {
            let mut spec = vec![0; n];
            spec[i] = q;
            let w = wick_check(s, &r.sigma, &MomentSpec::new(spec)?)?;
            let _ = writeln!(kv, "moment_{tag}^{q} = {:?} (pairing {:?}, rel {:?})", w.empirical, w.wick, w.relative_error);
        }
        for q in [1u32, 3] {
            let mut spec = vec![0; n];
            spec[i] = q;
            let m = odd_moment_check(s, &MomentSpec::new(spec)?)?;
            let _ = writeln!(kv, "moment_{tag}^{q} = {:?} (band {:?}, within {})", m.value, m.band, m.within_band);
        }
        if var > DEGENERATE_VARIANCE && s.reservoir.len() >= crate::MIN_SAMPLES {
            let samples = read_samples(&samples_text, i)?;
            cfg.write(&format!("hist_{tag}.csv"), &histogram_csv(&histogram_bins(&samples, var.sqrt() / 10.0)))?;
            let svg = render_histogram(&samples, var, &format!("{} z{tag}, T = {:?}", cfg.command, s.t))?;
            cfg.write(&format!("hist_{tag}.svg"), &svg)?;
        } else {
            let _ = writeln!(kv, "hist_{tag} = skipped (degenerate direction or too few samples)");
        }
    }
    if n == 2 {
        let w = wick_check(s, &r.sigma, &MomentSpec::new(vec![2, 2])?)?;
        let _ = writeln!(kv, "moment_2_2 = {:?} (pairing {:?}, rel {:?})", w.empirical, w.wick, w.relative_error);
    }
    Ok(())
}

fn graph(c: &Common, cmd: &GraphCmd) -> Result<i32, CliError> {
    match cmd {
        GraphCmd::Validate { input, sigmas, lattice_tol } => {
            let mut cfg = base_config(c, "graph validate");
            cfg.input = Some(input.display().to_string());
            let g = read_graph(input)?;
            let rep = validate_assumptions(&g, sigmas, *lattice_tol);
            let mut kv = String::new();
            let _ = writeln!(kv, "states = {}", g.len());
            let _ = writeln!(kv, "transitions = {}", g.transition_count());
            for e in &rep.g1 {
                let _ = writeln!(
                    kv,
                    "g1_sum[{:?}] = {:?} (last decile {:?}, monotone {})",
                    e.sigma, e.sum, e.last_decile, e.deciles_monotone
                );
            }
            let _ = writeln!(kv, "g2_connected = {}", rep.g2.strongly_connected);
            let _ = writeln!(kv, "g2_pairs_sampled = {}", rep.g2.pairs_sampled);
            let _ = writeln!(kv, "g2_estimated_c = {:?}", rep.g2.estimated_c);
            let _ = writeln!(kv, "g3_lattice_suspected = {}", rep.g3.suspected);
            if let Some(d) = rep.g3.spacing {
                let _ = writeln!(kv, "g3_spacing = {d:?}");
            }
            let _ = writeln!(kv, "g3_residual = {:?}", rep.g3.residual);
            let _ = writeln!(kv, "cycles = {}", rep.cycle_count);
            if rep.g3.suspected {
                eprintln!("warning: cycle lengths look arithmetic");
            }
            finish(&cfg, &kv)?;
            if !rep.g2.strongly_connected {
                eprintln!("error: transition relation is not strongly connected");
                return Ok(EXIT_VALIDATION);
            }
            Ok(EXIT_OK)
        }
        GraphCmd::Predict { input, spectral, t_grid } => {
            let mut cfg = base_config(c, "graph predict");
            cfg.input = Some(input.display().to_string());
            cfg.t_grid = t_grid.clone();
            cfg.head = spectral.head;
            cfg.fd_step = spectral.fd_step;
            let g = read_graph(input)?;
            let solver = SpectralSolver::new(&g, solver_options(spectral))?;
            let r = solver.analyze()?;
            let deg = degeneracy_test(&g, &r.lambda, 2.0 * g.max_length())?;
            let n = g.cost_dim();
            let points: Vec<Vec<f64>> = (0..n)
                .flat_map(|i| {
                    t_grid.iter().map(move |&t| {
                        let mut v = vec![0.0; n];
                        v[i] = t;
                        v
                    })
                })
                .collect();
            cfg.write("pressure.csv", &pressure_csv(&solver.pressure_grid(&points, r.h), n))?;
            let mut kv = result_kv(&r);
            degeneracy_kv(&mut kv, &deg);
            finish(&cfg, &kv)?;
            Ok(EXIT_OK)
        }
        GraphCmd::Stats { input, start, threshold, spectral } => {
            let mut cfg = base_config(c, "graph stats");
            cfg.input = Some(input.display().to_string());
            cfg.threshold = Some(*threshold);
            cfg.head = spectral.head;
            cfg.fd_step = spectral.fd_step;
            let g = read_graph(input)?;
            let start = start_vertex(&g, start)?;
            let r = SpectralSolver::new(&g, solver_options(spectral))?.analyze()?;
            let s = accumulate(&g, &start, *threshold, &r.lambda, &accumulation(c))?;
            let mut kv = result_kv(&r);
            let _ = writeln!(kv, "start = {start}");
            empirical_outputs(&cfg, &r, &s, &mut kv)?;
            finish(&cfg, &kv)?;
            Ok(EXIT_OK)
        }
        GraphCmd::Ldp { input, start, grid, epsilon, index, eta, spectral } => {
            let mut cfg = base_config(c, "graph ldp");
            cfg.input = Some(input.display().to_string());
            cfg.epsilon = Some(*epsilon);
            cfg.t_grid = grid.clone();
            cfg.head = spectral.head;
            cfg.fd_step = spectral.fd_step;
            let g = read_graph(input)?;
            let start = start_vertex(&g, start)?;
            let solver = SpectralSolver::new(&g, solver_options(spectral))?;
            let r = solver.analyze()?;
            let curve = ldp_curve(&g, &start, grid, *epsilon, *index, &r.lambda, enumeration(c))?;
            let rate = chernoff_rate(&solver, r.h, &r.lambda, r.sigma[(*index, *index)], *epsilon, *index, *eta, 300)?;
            cfg.write("ldp.csv", &ldp_csv(&curve))?;
            let mut kv = String::new();
            let _ = writeln!(kv, "Lambda = {}", list(r.lambda.iter().copied()));
            let _ = writeln!(kv, "index = {index}");
            let _ = writeln!(kv, "epsilon = {epsilon:?}");
            match curve.slope {
                Some(s) => {
                    let _ = writeln!(kv, "slope = {s:?}");
                }
                None => {
                    let _ = writeln!(kv, "slope = none (empty tails)");
                }
            }
            let _ = writeln!(kv, "chernoff_rate = {:?}", rate.rate);
            let _ = writeln!(kv, "chernoff_upper = {:?} at t = {:?}", rate.upper, rate.t_upper);
            let _ = writeln!(kv, "chernoff_lower = {:?} at t = {:?}", rate.lower, rate.t_lower);
            let _ = writeln!(kv, "consistent_half_rate = {}", curve.consistent_with(rate.rate, 0.5));
            finish(&cfg, &kv)?;
            Ok(EXIT_OK)
        }
    }
}

fn surface(c: &Common, cmd: &SurfaceCmd) -> Result<i32, CliError> {
    match cmd {
        SurfaceCmd::Validate { surface } => {
            let mut cfg = base_config(c, "surface validate");
            cfg.input = Some(surface.clone());
            let s = read_surface(surface)?;
            let gb = s.gauss_bonnet();
            let mut kv = String::new();
            let _ = writeln!(kv, "name = {}", s.name());
            let _ = writeln!(kv, "polygons = {}", s.polygons().len());
            let _ = writeln!(kv, "vertices = {}", gb.vertices);
            let _ = writeln!(kv, "edges = {}", gb.edges);
            let _ = writeln!(kv, "faces = {}", gb.faces);
            let _ = writeln!(kv, "euler_characteristic = {}", gb.euler_characteristic);
            let _ = writeln!(kv, "genus = {}", gb.genus);
            for cl in s.classes() {
                let _ = writeln!(kv, "cone_angle_{} = {:?} ({} pi)", cl.label(), cl.cone_angle, 2 * (cl.k + 1));
            }
            finish(&cfg, &kv)?;
            Ok(EXIT_OK)
        }
        SurfaceCmd::Saddles { surface, cutoff } => {
            let mut cfg = base_config(c, "surface saddles");
            cfg.input = Some(surface.clone());
            cfg.cutoff = Some(*cutoff);
            let s = read_surface(surface)?;
            let set = enumerate_saddles_with(&s, *cutoff, saddle_options(c))?;
            cfg.write("saddles.csv", &set.to_csv())?;
            let mut kv = String::new();
            let _ = writeln!(kv, "saddles = {}", set.len());
            let _ = writeln!(kv, "records = {}", set.records);
            let _ = writeln!(kv, "degenerate_wedges = {}", set.degenerate_wedges);
            if let Some(m) = set.min_length() {
                let _ = writeln!(kv, "min_length = {m:?}");
            }
            finish(&cfg, &kv)?;
            Ok(EXIT_OK)
        }
        SurfaceCmd::Graph { surface, cutoff, costs } => {
            let mut cfg = base_config(c, "surface graph");
            cfg.input = Some(surface.clone());
            cfg.cutoff = Some(*cutoff);
            cfg.costs = Some(costs.clone());
            let menu = menu(costs)?;
            let s = read_surface(surface)?;
            let set = enumerate_saddles_with(&s, *cutoff, saddle_options(c))?;
            let g = build_transition_graph(&s, &set, &menu)?;
            cfg.write("transition.graph", &to_graph_text(&g))?;
            let mut kv = String::new();
            let _ = writeln!(kv, "states = {}", g.len());
            let _ = writeln!(kv, "transitions = {}", g.transition_count());
            let _ = writeln!(kv, "cost_bound = {:?}", g.cost_bound());
            finish(&cfg, &kv)?;
            Ok(EXIT_OK)
        }
        SurfaceCmd::Paths { surface, cutoff, threshold, costs, start, spectral } => {
            let mut cfg = base_config(c, "surface paths");
            cfg.input = Some(surface.clone());
            cfg.cutoff = Some(*cutoff);
            cfg.threshold = Some(*threshold);
            cfg.costs = Some(costs.clone());
            cfg.head = spectral.head;
            cfg.fd_step = spectral.fd_step;
            if threshold > cutoff {
                return Err(CliError::Usage(format!("T = {threshold} exceeds L = {cutoff}")));
            }
            let s = read_surface(surface)?;
            let opts = PathStatsOptions {
                cutoff: *cutoff,
                menu: menu(costs)?,
                solver: solver_options(spectral),
                saddle: saddle_options(c),
                accumulate: accumulation(c),
                cycle_length: None,
            };
            let st = saddle_path_stats(&s, *start, *threshold, &opts)?;
            let mut kv = result_kv(&st.spectral);
            let _ = writeln!(kv, "saddles = {}", st.saddles);
            let _ = writeln!(kv, "transitions = {}", st.transitions);
            degeneracy_kv(&mut kv, &st.degeneracy);
            empirical_outputs(&cfg, &st.spectral, &st.empirical, &mut kv)?;
            finish(&cfg, &kv)?;
            Ok(EXIT_OK)
        }
    }
}

fn verify(c: &Common, cmd: &VerifyCmd) -> Result<i32, CliError> {
    match cmd {
        VerifyCmd::Figure1 => {
            let cfg = base_config(c, "verify figure1");
            let s = sheared_lshape();
            let set = enumerate_saddles_with(&s, 2.5, saddle_options(c))?;
            let hol: Vec<Point> = TURN_PATH.iter().map(|&h| transform(SHEAR, h)).collect();
            let want = [1.25 * PI, 13.0 * PI / 6.0];
            let mut kv = String::new();
            let _ = writeln!(kv, "surface = {}", s.name());
            let _ = writeln!(kv, "expected = {}", list(want));
            let Some(path) = find_turn_path(&s, &set, &hol, &want, 1e-9) else {
                let _ = writeln!(kv, "found = false");
                finish(&cfg, &kv)?;
                return Ok(EXIT_VALIDATION);
            };
            let _ = writeln!(kv, "found = true");
            let _ = writeln!(kv, "saddles = {}", path.iter().map(|i| format!("s{i}")).collect::<Vec<_>>().join(","));
            for k in 0..2 {
                let t = angle_change(&s, set.get(path[k]), set.get(path[k + 1]))?;
                let _ = writeln!(kv, "angle_{} = {:?}", k + 1, t.angle());
                let _ = writeln!(kv, "angle_{}_error = {:e}", k + 1, (t.angle() - want[k]).abs());
                let _ = writeln!(kv, "change_{} = {:?}", k + 1, t.change().unwrap_or(f64::NAN));
            }
            finish(&cfg, &kv)?;
            Ok(EXIT_OK)
        }
        VerifyCmd::GaussBonnet => {
            let cfg = base_config(c, "verify gauss-bonnet");
            let expected: [(&str, i64, &[u32]); 3] =
                [("lshape", 2, &[2]), ("lshape-sheared", 2, &[2]), ("staircase7", 3, &[1, 1, 1, 1])];
            let mut kv = String::new();
            let mut ok = true;
            for (name, genus, ks) in expected {
                let s = builtin(name)?;
                let got: Vec<u32> = s.classes().iter().map(|cl| cl.k).collect();
                let pass = s.genus() == genus && got == ks;
                ok &= pass;
                let angles: Vec<String> = got.iter().map(|k| format!("{}pi", 2 * (k + 1))).collect();
                let _ = writeln!(kv, "{name}.genus = {}", s.genus());
                let _ = writeln!(kv, "{name}.cone_angles = {}", angles.join(","));
                let _ = writeln!(kv, "{name}.pass = {pass}");
            }
            finish(&cfg, &kv)?;
            Ok(if ok { EXIT_OK } else { EXIT_VALIDATION })
        }
        VerifyCmd::Wick { threshold } => {
            let mut cfg = base_config(c, "verify wick");
            cfg.input = Some("loop2".into());
            cfg.threshold = Some(*threshold);
            let g = load_graph(LOOP2)?;
            let r = SpectralSolver::new(&g, SolverOptions::default())?.analyze()?;
            let s = accumulate(&g, "v", *threshold, &r.lambda, &accumulation(c))?;
            let w = wick_check(&s, &r.sigma, &MomentSpec::new(vec![4])?)?;
            let ratio = w.empirical / w.wick;
            let pass = (0.8..=1.2).contains(&ratio);
            let mut kv = String::new();
            let _ = writeln!(kv, "N = {}", s.count);
            let _ = writeln!(kv, "Sigma = {:?}", r.sigma[(0, 0)]);
            let _ = writeln!(kv, "moment_4 = {:?}", w.empirical);
            let _ = writeln!(kv, "pairing_4 = {:?}", w.wick);
            let _ = writeln!(kv, "ratio = {ratio:?}");
            let _ = writeln!(kv, "pass = {pass}");
            finish(&cfg, &kv)?;
            Ok(if pass { EXIT_OK } else { EXIT_VALIDATION })
        }
    }
}
