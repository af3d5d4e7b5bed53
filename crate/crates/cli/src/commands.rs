//! One function per subcommand; each returns an `Outcome` for the report.

use std::fs;
use std::path::{Path, PathBuf};

use conley_core::compactification::annulus::{annulus_flow, radius_at, AnnulusPoint};
use conley_core::compactification::metric::{certify_rho, CertifyOptions, DEFAULT_RHOS};
use conley_core::conley::fixtures::problem_fixture;
use conley_core::conley::{enlarge_exit, relative_homology, validate_index_pair, IndexPair};
use conley_core::connections::{find_all_connections, limit_equilibria, weak_hyperbolicity, Connection, ConnectionSet, ShootOptions};
use conley_core::fields::catalog::catalog_example;
use conley_core::fields::ProblemSpec;
use conley_core::morse::{connection_lower_bound, decomposition_of, uniformity_bound_check};
use serde::Serialize;
use serde_json::json;

use crate::report::{tag, write_file, CliError, Inputs, Outcome, Timer};

pub struct Context {
    pub problem: ProblemSpec,
    pub out: Option<PathBuf>,
    pub seed: u64,
    pub timer: Timer,
}

/// Reads `--problem`, or falls back to the planar family at `--c`.
pub fn load_problem(path: Option<&Path>, c: Option<f64>, eps: f64, seed: u64) -> Result<(ProblemSpec, Inputs), CliError> {
    match (path, c) {
        (Some(path), _) => {
            let text = fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
            let p = ProblemSpec::from_json(&text).map_err(|e| CliError::Input(e.to_string()))?;
            Ok((p, Inputs::new(path.display().to_string(), text.as_bytes(), seed)))
        }
        (None, Some(c)) => {
            let p = catalog_example(c, eps).map_err(|e| CliError::Input(e.to_string()))?;
            let name = format!("catalog:trivial-index c={c} eps={eps}");
            let inputs = Inputs::new(name.clone(), name.as_bytes(), seed);
            Ok((p, inputs))
        }
        (None, None) => Err(CliError::Input("need --problem FILE or --c VALUE".into())),
    }
}

fn numerical(e: impl std::fmt::Display) -> CliError {
    CliError::Numerical(e.to_string())
}

#[derive(Clone, Debug, Default)]
pub struct ShootArgs {
    pub seeds: Option<usize>,
    pub t_final: Option<f64>,
    pub tol: Option<f64>,
}

pub fn shoot_options(problem: &ProblemSpec, args: &ShootArgs, seed: u64) -> ShootOptions {
    let mut o = ShootOptions::from_problem(problem);
    o.seed = seed;
    if let Some(n) = args.seeds {
        o.n_seeds = n;
    }
    if let Some(t) = args.t_final {
        o.t_final = t;
    }
    if let Some(tol) = args.tol {
        o.tol = tol;
    }
    o
}

#[derive(Serialize)]
struct ConnectionRow<'a> {
    h0: f64,
    u0: &'a [f64],
    endpoints: serde_json::Value,
    weakly_hyperbolic: Option<bool>,
    tangent_intersection_dim: Option<usize>,
    morse_source: usize,
    morse_target: usize,
    settled: bool,
}

fn connection_rows(conns: &[Connection]) -> Vec<ConnectionRow<'_>> {
    conns
        .iter()
        .map(|c| ConnectionRow {
            h0: c.h0,
            u0: &c.u0,
            endpoints: json!({
                "source": c.source.point,
                "target": c.target.point,
                "errors": [c.endpoint_errors.0, c.endpoint_errors.1],
            }),
            weakly_hyperbolic: c.weakly_hyperbolic,
            tangent_intersection_dim: c.tangent_intersection_dim,
            morse_source: c.morse_source,
            morse_target: c.morse_target,
            settled: c.settled,
        })
        .collect()
}

/// One CSV per connection under `out/trajectories`.
pub fn write_trajectories(out: &Path, prefix: &str, set: &ConnectionSet) -> Result<usize, CliError> {
    let dir = out.join("trajectories");
    let mut n = 0;
    for (side, conns) in [("f", &set.f_connections), ("g", &set.g_connections)] {
        for (k, c) in conns.iter().enumerate() {
            write_file(&dir.join(format!("{prefix}{side}{k}.csv")), &c.trajectory.to_csv())?;
            n += 1;
        }
    }
    Ok(n)
}

pub fn equilibria(ctx: &mut Context) -> Result<Outcome, CliError> {
    let (_, _, neg, pos, warnings) = ctx.timer.time("equilibria", || limit_equilibria(&ctx.problem)).map_err(numerical)?;
    Ok(Outcome::ok(json!({ "neg": neg, "pos": pos }), warnings))
}

fn search(ctx: &mut Context, args: &ShootArgs) -> Result<ConnectionSet, CliError> {
    let opts = shoot_options(&ctx.problem, args, ctx.seed);
    ctx.timer
        .time("connections", || find_all_connections(&ctx.problem, &opts))
        .map_err(numerical)
}

pub fn connections(ctx: &mut Context, args: &ShootArgs) -> Result<Outcome, CliError> {
    let set = search(ctx, args)?;
    if let Some(out) = &ctx.out {
        write_trajectories(out, "", &set)?;
    }
    let results = json!({
        "connections": connection_rows(&set.f_connections),
        "count": set.f_connections.len(),
        "g_connections": connection_rows(&set.g_connections),
        "g_count": set.g_connections.len(),
    });
    Ok(Outcome::ok(results, set.warnings))
}

pub fn hyperbolicity(ctx: &mut Context, args: &ShootArgs) -> Result<Outcome, CliError> {
    let set = search(ctx, args)?;
    let swapped = ctx.problem.swapped();
    let problem = &ctx.problem;
    let rows = ctx.timer.time("hyperbolicity", || {
        let side = |p: &ProblemSpec, conns: &[Connection]| -> Vec<serde_json::Value> {
            conns
                .iter()
                .map(|c| json!({ "u0": c.u0, "report": weak_hyperbolicity(p, c) }))
                .collect()
        };
        json!({ "f": side(problem, &set.f_connections), "g": side(&swapped, &set.g_connections) })
    });
    Ok(Outcome::ok(rows, set.warnings))
}

#[derive(Clone, Debug)]
pub struct AnnulusArgs {
    pub r0: f64,
    pub t_max: f64,
    pub step: f64,
    pub tol: f64,
}

pub fn annulus(ctx: &mut Context, args: &AnnulusArgs) -> Result<Outcome, CliError> {
    let z0 = AnnulusPoint::new(args.r0, 0.0).ok_or_else(|| CliError::Input(format!("r0 = {} is not in [1/2, 1]", args.r0)))?;
    if !(args.step > 0.0 && args.t_max >= 0.0) {
        return Err(CliError::Input("need --step > 0 and --t-max >= 0".into()));
    }
    let steps = (args.t_max / args.step).round() as usize;
    let trace: Vec<_> = (0..=steps)
        .map(|k| {
            let t = k as f64 * args.step;
            let z = annulus_flow(z0, t);
            let closed = 1.0 - (1.0 - args.r0) * (-t).exp();
            json!({ "t": t, "r": z.r, "phi": z.phi, "closed_form": closed, "error": (z.r - closed).abs(), "radius_at": radius_at(args.r0, t) })
        })
        .collect();
    let cert = ctx
        .timer
        .time("certify_rho", || certify_rho(&ctx.problem, DEFAULT_RHOS, args.tol, &CertifyOptions::default()))
        .map_err(numerical)?;
    Ok(Outcome::ok(json!({ "trace": trace, "certificate": cert }), Vec::new()))
}

#[derive(Clone, Debug)]
pub struct PairArgs {
    pub cells: usize,
    pub layers: usize,
    pub t0: f64,
    pub samples: usize,
    pub enlarge: f64,
}

pub fn build_pair(ctx: &mut Context, args: &PairArgs) -> Result<IndexPair, CliError> {
    let fx = problem_fixture(&ctx.problem, args.cells, args.layers, args.t0).map_err(|e| CliError::Input(e.to_string()))?;
    let mut pair = ctx.timer.time("index_pair", || fx.build()).map_err(numerical)?;
    if args.enlarge > 0.0 {
        pair = enlarge_exit(&fx.process, &pair, args.enlarge, fx.options.dt).map_err(numerical)?;
    }
    if args.samples > 0 {
        let horizon = fx.validation_horizon();
        let report = ctx
            .timer
            .time("validation", || validate_index_pair(&fx.process, &pair, args.samples, horizon, 0.01, ctx.seed));
        pair.validation = Some(report);
    }
    Ok(pair)
}

pub fn index_pair(ctx: &mut Context, args: &PairArgs) -> Result<Outcome, CliError> {
    let pair = build_pair(ctx, args)?;
    if let Some(out) = &ctx.out {
        write_file(&out.join("index-pair.pair.json"), &pair.to_json())?;
    }
    let h = ctx.timer.time("homology", || relative_homology(&pair)).map_err(numerical)?;
    let passed = pair.validation.as_ref().is_none_or(|v| v.passed());
    let results = json!({
        "n1": pair.n1.len(),
        "n2": pair.n2.len(),
        "inv_minus_cubes": pair.inv_minus_cubes,
        "repair": pair.repair,
        "exit_horizon": pair.exit_horizon,
        "validation": pair.validation,
        "betti": h.betti.to_string(),
        "homology": h,
    });
    Ok(Outcome {
        passed,
        ..Outcome::ok(results, pair.warnings.clone())
    })
}

fn read_pair(path: &Path) -> Result<IndexPair, CliError> {
    let text = fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
    IndexPair::from_json(&text).map_err(|e| CliError::Input(e.to_string()))
}

/// Homology of a pair read from a file; no problem is needed.
pub fn homology_of_file(path: &Path) -> Result<Outcome, CliError> {
    homology_outcome(&read_pair(path)?)
}

pub fn homology(ctx: &mut Context, args: &PairArgs) -> Result<Outcome, CliError> {
    let pair = build_pair(ctx, &PairArgs { samples: 0, ..args.clone() })?;
    ctx.timer.time("homology", || homology_outcome(&pair))
}

fn homology_outcome(pair: &IndexPair) -> Result<Outcome, CliError> {
    let h = relative_homology(pair).map_err(numerical)?;
    let mut warnings = Vec::new();
    if !h.euler_consistent {
        warnings.push("Euler characteristic of the Betti numbers differs from the cell count".into());
    }
    Ok(Outcome::ok(json!({ "betti": h.betti.to_string(), "homology": h }), warnings))
}

pub fn morse(ctx: &mut Context, args: &ShootArgs, pair_file: Option<&Path>) -> Result<Outcome, CliError> {
    let set = search(ctx, args)?;
    let d = decomposition_of(&set, ctx.problem.f.is_autonomous()).map_err(numerical)?;
    let mut results = json!({
        "graph": d.graph(),
        "equilibrium_counts": d.equilibrium_counts,
        "between": d.between,
        "violations": d.violations,
    });
    let mut passed = true;
    if let Some(path) = pair_file {
        let pair = read_pair(path)?;
        let betti = relative_homology(&pair).map_err(numerical)?.betti;
        let bound = uniformity_bound_check(&betti, &d, Some(&ctx.problem.domain_box));
        passed = bound.passed;
        results["betti"] = json!(betti.to_string());
        results["uniformity"] = json!(bound);
        results["lower_bound"] = json!(connection_lower_bound(&betti, &d));
    }
    if let Some(out) = &ctx.out {
        write_file(&out.join("morse.graph.json"), &format!("{:#}\n", d.graph()))?;
    }
    Ok(Outcome {
        passed,
        ..Outcome::ok(results, set.warnings)
    })
}

/// Collects the reports and trajectories in `out` into `out/bundle`.
pub fn report_bundle(out: &Path) -> Result<Outcome, CliError> {
    let listing = |dir: &Path, ext: &str| -> Result<Vec<PathBuf>, CliError> {
        if !dir.is_dir() {
            return Ok(Vec::new());
        }
        let mut v: Vec<PathBuf> = fs::read_dir(dir)
            .map_err(|e| CliError::io(dir, e))?
            .filter_map(|e| e.ok().map(|e| e.path()))
            .filter(|p| p.is_file() && p.extension().is_some_and(|x| x == ext))
            .collect();
        v.sort();
        Ok(v)
    };
    let reports = listing(out, "json")?;
    let csvs = listing(&out.join("trajectories"), "csv")?;
    let bundle = out.join("bundle");
    let mut warnings = Vec::new();
    if reports.is_empty() && csvs.is_empty() {
        warnings.push(format!("no cached runs in {}", out.display()));
    }
    let mut summary = String::new();
    let mut n_reports = 0;
    for path in &reports {
        let text = fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
        let name = path.file_name().expect("listed files have names");
        match serde_json::from_str::<serde_json::Value>(&text) {
            Ok(v) if v.get("schema_version").is_some() => {
                write_file(&bundle.join("reports").join(name), &text)?;
                summary.push_str(&summarize(&v));
                n_reports += 1;
            }
            _ => write_file(&bundle.join("artifacts").join(name), &text)?,
        }
    }
    for path in &csvs {
        let text = fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
        write_file(&bundle.join("trajectories").join(path.file_name().expect("listed files have names")), &text)?;
    }
    write_file(&bundle.join("summary.txt"), &summary)?;
    Ok(Outcome::ok(
        json!({ "bundle": bundle.display().to_string(), "reports": n_reports, "artifacts": reports.len() - n_reports, "trajectories": csvs.len() }),
        warnings,
    ))
}

fn summarize(report: &serde_json::Value) -> String {
    let command = report["command"].as_str().unwrap_or("?");
    let mut s = format!("== {command}\n");
    for key in ["count", "g_count", "betti"] {
        if let Some(v) = report["results"].get(key) {
            s.push_str(&format!("{key}: {v}\n"));
        }
    }
    if let Some(rows) = report["results"]["rows"].as_array() {
        for row in rows {
            s.push_str(row["line"].as_str().unwrap_or(""));
            s.push('\n');
        }
    }
    if let Some(checks) = report["results"]["checks"].as_array() {
        for c in checks {
            s.push_str(&format!(
                "{} {}\n",
                if c["pass"].as_bool() == Some(true) { "PASS" } else { "FAIL" },
                c["name"].as_str().unwrap_or("")
            ));
        }
    }
    for w in report["warnings"].as_array().into_iter().flatten() {
        s.push_str(&format!("warning: {}\n", w.as_str().unwrap_or("")));
    }
    s
}

pub fn csv_prefix(c: f64) -> String {
    format!("c{}_", tag(c))
}
