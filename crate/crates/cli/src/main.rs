//! `conley-nonauto`: equilibria, connections, index pairs and Morse
//! decompositions of asymptotically autonomous ODEs from the command line.
//!
//! Exit codes: 0 success, 1 acceptance failure, 2 input error, 3 numerical error.

mod commands;
mod report;
mod verify;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use commands::{AnnulusArgs, Context, PairArgs, ShootArgs};
use report::{write_file, CliError, Outcome, RunReport, Timer, SCHEMA_VERSION};
use verify::VerifyArgs;

#[derive(Parser, Debug)]
#[command(name = "conley-nonauto", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,

    /// Problem file (JSON).
    #[arg(long, global = true)]
    problem: Option<PathBuf>,
    /// Directory for reports, pair files and trajectory CSVs.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Seed for every random choice.
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    /// Record per-phase wall time in the report.
    #[arg(long, global = true)]
    timings: bool,
    /// Use the planar trivial-index family at this c instead of a problem file.
    #[arg(long, global = true, allow_negative_numbers = true)]
    c: Option<f64>,
    /// Transition width of the planar family.
    #[arg(long, global = true, default_value_t = 0.1)]
    eps: f64,
}

#[derive(Args, Debug, Clone)]
struct ShootFlags {
    /// Seeds on each side of the source equilibrium.
    #[arg(long)]
    seeds: Option<usize>,
    /// Half-width of the shooting window.
    #[arg(long = "T")]
    t_final: Option<f64>,
    /// Endpoint tolerance.
    #[arg(long)]
    tol: Option<f64>,
}

impl From<&ShootFlags> for ShootArgs {
    fn from(f: &ShootFlags) -> Self {
        ShootArgs {
            seeds: f.seeds,
            t_final: f.t_final,
            tol: f.tol,
        }
    }
}

#[derive(Args, Debug, Clone)]
struct PairFlags {
    /// Cells per space axis.
    #[arg(long, default_value_t = 32)]
    cells: usize,
    /// Time layers for non-autonomous problems.
    #[arg(long, default_value_t = 8)]
    layers: usize,
    /// The time window is [-t0, t0] of field time.
    #[arg(long, default_value_t = 4.0)]
    t0: f64,
    /// Orbit samples for the axiom check (0 skips it).
    #[arg(long, default_value_t = 10_000)]
    samples: usize,
    /// Enlarge the exit set by this time.
    #[arg(long, default_value_t = 0.0)]
    enlarge: f64,
}

impl From<&PairFlags> for PairArgs {
    fn from(f: &PairFlags) -> Self {
        PairArgs {
            cells: f.cells,
            layers: f.layers,
            t0: f.t0,
            samples: f.samples,
            enlarge: f.enlarge,
        }
    }
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Equilibria of both limit fields with Morse indices.
    Equilibria,
    /// Connections of f and of g by invariant-manifold shooting.
    Connections(ShootFlags),
    /// Weak hyperbolicity of every connection found.
    Hyperbolicity(ShootFlags),
    /// Annulus flow trace and the small-sector certificate.
    Annulus {
        #[arg(long, default_value_t = 0.5)]
        r0: f64,
        #[arg(long, default_value_t = 20.0)]
        t_max: f64,
        #[arg(long, default_value_t = 1.0)]
        step: f64,
        #[arg(long, default_value_t = 1e-2)]
        tol: f64,
    },
    /// Builds and validates an index pair.
    IndexPair(PairFlags),
    /// Relative homology of a pair file, or of a freshly built pair.
    Homology {
        #[arg(long)]
        pair: Option<PathBuf>,
        #[command(flatten)]
        flags: PairFlags,
    },
    /// Morse decomposition as a graph; bounds checked against a pair file.
    Morse {
        #[command(flatten)]
        shoot: ShootFlags,
        #[arg(long)]
        pair: Option<PathBuf>,
    },
    /// Full pipeline over the planar family with a pass/fail table.
    VerifyExample {
        #[arg(long, value_delimiter = ',', allow_negative_numbers = true, default_values_t = [-0.5, 0.0, 0.25, 1.0])]
        cs: Vec<f64>,
        #[arg(long, default_value_t = 32)]
        cells: usize,
        #[arg(long, default_value_t = 8)]
        layers: usize,
        #[arg(long, default_value_t = 10_000)]
        samples: usize,
    },
    /// Collects cached reports and trajectories under OUT/bundle.
    Report,
}

impl Command {
    fn name(&self) -> &'static str {
        match self {
            Command::Equilibria => "equilibria",
            Command::Connections(_) => "connections",
            Command::Hyperbolicity(_) => "hyperbolicity",
            Command::Annulus { .. } => "annulus",
            Command::IndexPair(_) => "index-pair",
            Command::Homology { .. } => "homology",
            Command::Morse { .. } => "morse",
            Command::VerifyExample { .. } => "verify-example",
            Command::Report => "report",
        }
    }
}

fn run(cli: &Cli) -> Result<(Outcome, Option<report::Inputs>, Timer), CliError> {
    if let Command::Report = cli.command {
        let out = cli.out.as_ref().ok_or_else(|| CliError::Input("report needs --out DIR".into()))?;
        return Ok((commands::report_bundle(out)?, None, Timer::default()));
    }
    if let Command::Homology { pair: Some(path), .. } = &cli.command {
        return Ok((commands::homology_of_file(path)?, None, Timer::default()));
    }
    // verify-example builds its own problems; the others default to c = 1
    let c = match cli.command {
        Command::VerifyExample { .. } => cli.c.or(Some(1.0)),
        _ => cli.c,
    };
    let (problem, inputs) = commands::load_problem(cli.problem.as_deref(), c, cli.eps, cli.seed)?;
    let mut ctx = Context {
        problem,
        out: cli.out.clone(),
        seed: cli.seed,
        timer: Timer::default(),
    };
    let outcome = match &cli.command {
        Command::Equilibria => commands::equilibria(&mut ctx)?,
        Command::Connections(f) => commands::connections(&mut ctx, &f.into())?,
        Command::Hyperbolicity(f) => commands::hyperbolicity(&mut ctx, &f.into())?,
        Command::Annulus { r0, t_max, step, tol } => commands::annulus(
            &mut ctx,
            &AnnulusArgs {
                r0: *r0,
                t_max: *t_max,
                step: *step,
                tol: *tol,
            },
        )?,
        Command::IndexPair(f) => commands::index_pair(&mut ctx, &f.into())?,
        Command::Homology { flags, .. } => commands::homology(&mut ctx, &flags.into())?,
        Command::Morse { shoot, pair } => commands::morse(&mut ctx, &shoot.into(), pair.as_deref())?,
        Command::VerifyExample {
            cs,
            cells,
            layers,
            samples,
        } => verify::verify_example(
            &mut ctx,
            &VerifyArgs {
                cs: cs.clone(),
                eps: cli.eps,
                cells: *cells,
                layers: *layers,
                samples: *samples,
            },
        )?,
        Command::Report => unreachable!("handled above"),
    };
    let inputs = match cli.command {
        Command::VerifyExample { .. } if cli.problem.is_none() => None,
        _ => Some(inputs),
    };
    Ok((outcome, inputs, ctx.timer))
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok((outcome, inputs, timer)) => {
            let report = RunReport {
                schema_version: SCHEMA_VERSION,
                command: cli.command.name().to_string(),
                inputs,
                results: outcome.results,
                timings: cli.timings.then(|| timer.into_map()),
                warnings: outcome.warnings,
            };
            let text = report.to_json();
            print!("{text}");
            if let Some(out) = &cli.out {
                if !matches!(cli.command, Command::Report) {
                    if let Err(e) = write_file(&out.join(format!("{}.json", report.command)), &text) {
                        eprintln!("error: {e}");
                        return ExitCode::from(e.exit_code() as u8);
                    }
                }
            }
            if outcome.passed {
                ExitCode::SUCCESS
            } else {
                eprintln!("acceptance checks failed");
                ExitCode::from(1)
            }
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
