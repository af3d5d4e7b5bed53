//! End-to-end run over the planar trivial-index family.

use conley_core::conley::fixtures::trivial_index_fixture;
use conley_core::conley::{relative_homology, validate_index_pair};
use conley_core::connections::{exhaustive_bounded_search, find_all_connections, Connection, ConnectionSet, SearchOptions, ShootOptions};
use conley_core::dynamics::{norm_diff, Equilibrium};
use conley_core::fields::catalog::catalog_example;
use conley_core::morse::{decomposition_of, uniformity_bound_check};
use serde::Serialize;
use serde_json::{json, Value};

use crate::commands::{csv_prefix, write_trajectories, Context};
use crate::report::{CliError, Outcome};

const RESIDUAL_TOL: f64 = 1e-8;
const U0_TOL: f64 = 1e-3;

const CONTINUATION: &str = "At c < 0 the exhaustive search finds no full bounded solution, so the \
maximal invariant set of the neighbourhood is empty and its index is trivial. The neighbourhood \
stays isolating as c varies, so the same trivial index holds for c > 0, where two full bounded \
solutions exist. Pair homology computed directly at c >= 0 is reported for information only.";

#[derive(Clone, Debug)]
pub struct VerifyArgs {
    pub cs: Vec<f64>,
    pub eps: f64,
    pub cells: usize,
    pub layers: usize,
    pub samples: usize,
}

#[derive(Clone, Debug, Serialize)]
pub struct Check {
    pub name: String,
    pub pass: bool,
    pub detail: String,
}

fn check(out: &mut Vec<Check>, c: f64, name: &str, pass: bool, detail: String) {
    out.push(Check {
        name: format!("c={c} {name}"),
        pass,
        detail,
    });
}

fn single_at(eqs: &[Equilibrium], at: [f64; 2]) -> Result<(), String> {
    match eqs {
        [e] if norm_diff(&e.point, &at) <= RESIDUAL_TOL
            && e.hyperbolic
            && e.morse_index == 1
            && e.residual <= RESIDUAL_TOL =>
        {
            Ok(())
        }
        _ => Err(format!(
            "{:?}",
            eqs.iter().map(|e| (&e.point, e.morse_index, e.hyperbolic)).collect::<Vec<_>>()
        )),
    }
}

fn verdict(conns: &[Connection]) -> &'static str {
    if conns.is_empty() {
        "–"
    } else if conns.iter().all(|c| c.weakly_hyperbolic == Some(true)) {
        "true"
    } else if conns.iter().any(|c| c.weakly_hyperbolic == Some(false)) {
        "false"
    } else {
        "unknown"
    }
}

fn run_row(ctx: &mut Context, c: f64, args: &VerifyArgs, checks: &mut Vec<Check>) -> Result<Value, String> {
    let p = catalog_example(c, args.eps).map_err(|e| e.to_string())?;
    let opts = ShootOptions {
        seed: ctx.seed,
        ..ShootOptions::from_problem(&p)
    };
    let set: ConnectionSet = ctx
        .timer
        .time("connections", || find_all_connections(&p, &opts))
        .map_err(|e| e.to_string())?;
    if let Some(out) = &ctx.out {
        write_trajectories(out, &csv_prefix(c), &set).map_err(|e| e.to_string())?;
    }

    let eq = single_at(&set.neg_equilibria, [0.0, -c]).and(single_at(&set.pos_equilibria, [0.0, 0.0]));
    check(checks, c, "equilibria (0,-c) and (0,0), index 1", eq.is_ok(), eq.err().unwrap_or_default());

    let (nf, ng) = (set.f_connections.len(), set.g_connections.len());
    let want_f = if c < 0.0 { 0 } else if c == 0.0 { 1 } else { 2 };
    check(checks, c, "f-count", nf == want_f, format!("{nf} (expected {want_f})"));
    if c > 0.0 {
        check(checks, c, "g-count", ng == 1, format!("{ng} (expected 1)"));
        let root = c.sqrt();
        let mut xs: Vec<&Vec<f64>> = set.f_connections.iter().map(|k| &k.u0).collect();
        xs.sort_by(|a, b| a[0].total_cmp(&b[0]));
        let close = xs.len() == 2
            && xs
                .iter()
                .zip([-root, root])
                .all(|(u, x)| norm_diff(u, &[x, 0.0]) < U0_TOL);
        check(checks, c, "u(0) near (±√c, 0)", close, format!("{xs:?}"));
    }
    let wh_f = verdict(&set.f_connections);
    let wh_g = verdict(&set.g_connections);
    match c {
        c if c == 0.0 => check(checks, c, "tangential connection not weakly hyperbolic", wh_f == "false", wh_f.into()),
        c if c > 0.0 => check(
            checks,
            c,
            "connections weakly hyperbolic",
            wh_f == "true" && wh_g == "true",
            format!("f {wh_f}, g {wh_g}"),
        ),
        _ => {}
    }

    let mut exhaustive = Value::Null;
    if c < 0.0 {
        let s = ctx
            .timer
            .time("exhaustive_search", || exhaustive_bounded_search(&p, &SearchOptions::from_problem(&p)))
            .map_err(|e| e.to_string())?;
        check(checks, c, "no full bounded solution", s.count == 0, format!("{} of {} grid points", s.count, s.points_tested));
        exhaustive = json!({ "points_tested": s.points_tested, "count": s.count });
    }

    let fx = trivial_index_fixture(c, args.eps, args.cells, args.layers).map_err(|e| e.to_string())?;
    let pair = ctx.timer.time("index_pair", || fx.build()).map_err(|e| e.to_string())?;
    let h = ctx.timer.time("homology", || relative_homology(&pair)).map_err(|e| e.to_string())?;
    let validation = ctx.timer.time("validation", || {
        validate_index_pair(&fx.process, &pair, args.samples, fx.validation_horizon(), 0.01, ctx.seed)
    });
    check(
        checks,
        c,
        "pair validation",
        validation.passed(),
        format!("IP2 {} IP3 {}", validation.ip2_violations, validation.ip3_violations),
    );
    if c < 0.0 {
        check(checks, c, "trivial index", h.betti.is_zero(), h.betti.to_string());
    }
    let d = decomposition_of(&set, false).map_err(|e| e.to_string())?;
    let bound = uniformity_bound_check(&h.betti, &d, Some(&p.domain_box));
    check(checks, c, "uniformity bound", bound.passed, format!("{:?}", bound.rows));

    let line = format!(
        "c={c:<6} f={nf} g={ng} weakly_hyperbolic={wh_f:<7} n1={} n2={} betti={} ip2={} ip3={}",
        pair.n1.len(),
        pair.n2.len(),
        h.betti,
        validation.ip2_violations,
        validation.ip3_violations
    );
    Ok(json!({
        "c": c,
        "line": line,
        "f_count": nf,
        "g_count": ng,
        "weakly_hyperbolic": wh_f,
        "g_weakly_hyperbolic": wh_g,
        "f_u0": set.f_connections.iter().map(|k| &k.u0).collect::<Vec<_>>(),
        "g_u0": set.g_connections.iter().map(|k| &k.u0).collect::<Vec<_>>(),
        "neg_equilibria": set.neg_equilibria.iter().map(|e| &e.point).collect::<Vec<_>>(),
        "pos_equilibria": set.pos_equilibria.iter().map(|e| &e.point).collect::<Vec<_>>(),
        "exhaustive_search": exhaustive,
        "pair": {
            "n1": pair.n1.len(),
            "n2": pair.n2.len(),
            "repair": pair.repair,
            "betti": h.betti.to_string(),
            "informational": c >= 0.0,
            "validation": validation,
        },
        "uniformity": bound,
        "warnings": set.warnings,
    }))
}

pub fn verify_example(ctx: &mut Context, args: &VerifyArgs) -> Result<Outcome, CliError> {
    if args.cs.is_empty() {
        return Err(CliError::Input("empty c-list".into()));
    }
    let mut rows = Vec::new();
    let mut checks = Vec::new();
    let mut warnings = Vec::new();
    for &c in &args.cs {
        match run_row(ctx, c, args, &mut checks) {
            Ok(row) => rows.push(row),
            Err(e) => {
                check(&mut checks, c, "pipeline", false, e.clone());
                warnings.push(format!("c = {c}: {e}"));
                rows.push(json!({ "c": c, "line": format!("c={c:<6} failed: {e}"), "error": e }));
            }
        }
    }
    let passed = checks.iter().all(|c| c.pass);
    let results = json!({
        "eps": args.eps,
        "cells": args.cells,
        "layers": args.layers,
        "samples": args.samples,
        "rows": rows,
        "checks": checks,
        "continuation": CONTINUATION,
        "passed": passed,
    });
    Ok(Outcome {
        results,
        warnings,
        passed,
    })
}
