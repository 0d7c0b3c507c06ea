//! `frontlab`: scenario runner for transition-front experiments.
//!
//! Exit status: 0 all verdicts pass, 1 some verdict fails, 2 configuration or
//! usage error, 3 runtime failure.

mod catalog;
mod config;
mod fmt;
mod pipeline;
mod verbs;

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::Result;
use clap::{Args, Parser, Subcommand};

use config::{reaction_from_args, ReactionDesc, SchemaError, DEFAULTS};
use pipeline::{run_scenario, Mode};

#[derive(Parser)]
#[command(name = "frontlab", version, about = "Front speeds, interface diagnostics and terrace detection for 1D reaction-diffusion")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Args)]
struct ReactionArgs {
    /// Constructor name, e.g. cubic_bistable, periodic_cubic, ignition.
    #[arg(short, long, required_unless_present = "config")]
    reaction: Option<String>,
    /// Constructor parameter as key=value; repeatable.
    #[arg(short, long = "param")]
    param: Vec<String>,
    /// Take the reaction from a scenario file (or bundled scenario name) instead.
    #[arg(long, conflicts_with = "reaction")]
    config: Option<String>,
}

impl ReactionArgs {
    fn resolve(&self) -> Result<ReactionDesc> {
        match (&self.config, &self.reaction) {
            (Some(c), _) => Ok(catalog::load(c)?.reaction),
            (None, Some(name)) => Ok(reaction_from_args(name, &self.param)?),
            (None, None) => Err(SchemaError("need --reaction or --config".into()).into()),
        }
    }
}

#[derive(Subcommand)]
enum Cmd {
    /// Traveling front speed and profile by phase-plane shooting.
    Speed {
        #[command(flatten)]
        reaction: ReactionArgs,
        #[arg(long, default_value_t = 1e-10)]
        tol: f64,
        /// Directory for profile.csv.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Derived constants (eps0, theta1', theta1'', zeta, xi, c_zeta, c_xi).
    Constants {
        #[command(flatten)]
        reaction: ReactionArgs,
    },
    /// Hypothesis verdicts as JSON; exit 1 if any fails.
    Check {
        #[command(flatten)]
        reaction: ReactionArgs,
        /// envelope, front, ignition or all.
        #[arg(long, default_value = "all")]
        which: String,
        /// Ignition margin; default: the largest passing one.
        #[arg(long)]
        eta: Option<f64>,
    },
    /// Simulate a scenario: snapshots.csv, trace.csv, meta.json.
    Simulate {
        #[arg(long)]
        config: String,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Trace and verdicts from an existing snapshots.csv.
    Diagnose {
        #[arg(long)]
        snapshots: PathBuf,
        #[command(flatten)]
        reaction: ReactionArgs,
        /// Comma-separated eps levels.
        #[arg(long, value_delimiter = ',')]
        eps: Option<Vec<f64>>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Calibrate the spatial or temporal terrace reaction: calibration.json.
    Calibrate {
        /// spatial or temporal.
        which: String,
        #[arg(long, default_value_t = 0.05)]
        dx: f64,
        /// dt K used by the temporal calibration runs.
        #[arg(long, default_value_t = 0.5)]
        reaction_cfl: f64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Full pipeline for a bundled scenario or config file.
    Run {
        scenario: String,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run several scenarios on a bounded worker pool.
    Sweep {
        #[arg(required = true)]
        scenarios: Vec<String>,
        #[arg(long, default_value_t = 2)]
        jobs: usize,
    },
    /// Catalog of bundled scenarios.
    List {
        #[arg(long)]
        json: bool,
        /// Also print the defaults table.
        #[arg(long)]
        defaults: bool,
    },
    /// Single-file report (report.md) for an artifact directory.
    Export {
        dir: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Reaction utilities.
    Reaction {
        #[command(subcommand)]
        cmd: ReactionCmd,
    },
}

#[derive(Subcommand)]
enum ReactionCmd {
    /// (coordinate, u, f) samples as CSV.
    Dump {
        #[command(flatten)]
        reaction: ReactionArgs,
        #[arg(long, default_value_t = 64)]
        n_coord: usize,
        #[arg(long, default_value_t = 101)]
        n_u: usize,
        /// Output file; stdout by default.
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

/// `--out` if given, else `$FRONTLAB_OUT/<name>` (default root `frontlab-out`).
fn out_dir(explicit: Option<&Path>, name: &str) -> PathBuf {
    explicit.map(Path::to_path_buf).unwrap_or_else(|| {
        let root = std::env::var_os("FRONTLAB_OUT").map_or_else(|| PathBuf::from("frontlab-out"), PathBuf::from);
        root.join(name)
    })
}

fn status_of(err: &anyhow::Error) -> i32 {
    if err.downcast_ref::<SchemaError>().is_some() || err.chain().any(|e| e.is::<SchemaError>()) {
        2
    } else {
        3
    }
}

fn run_one(spec: &str, out: Option<&Path>) -> Result<i32> {
    let sc = catalog::load(spec)?;
    let dir = out_dir(out, &sc.name);
    let res = run_scenario(&sc, &dir, Mode::Full)?;
    let file = res.verdicts.expect("full mode writes verdicts");
    for v in &file.verdicts {
        println!("{}", v.line());
    }
    println!("artifacts: {}", res.dir.display());
    // The status is recomputed from the file on disk.
    Ok(pipeline::VerdictsFile::read(&res.dir.join("verdicts.json"))?.exit_status())
}

fn sweep(scenarios: &[String], jobs: usize) -> Result<i32> {
    use rayon::prelude::*;
    let pool = rayon::ThreadPoolBuilder::new().num_threads(jobs.max(1)).build()?;
    let results: Vec<(String, Result<pipeline::RunOutcome>)> = pool.install(|| {
        scenarios
            .par_iter()
            .map(|s| {
                let r = catalog::load(s).and_then(|sc| run_scenario(&sc, &out_dir(None, &sc.name), Mode::Full));
                (s.clone(), r)
            })
            .collect()
    });
    let mut worst = 0;
    for (name, r) in results {
        let status = match r {
            Ok(o) => o.verdicts.map_or(0, |v| v.exit_status()),
            Err(e) => {
                eprintln!("{name}: {e:#}");
                status_of(&e)
            }
        };
        println!("{name}: {}", ["PASS", "FAIL", "CONFIG ERROR", "ERROR"][status as usize]);
        worst = worst.max(status);
    }
    Ok(worst)
}

fn list(json: bool, defaults: bool) -> Result<i32> {
    let scenarios: Vec<config::Scenario> =
        catalog::BUNDLED.iter().map(|(n, _)| catalog::bundled(n).expect("bundled")).collect::<Result<_, _>>()?;
    if json {
        let items: Vec<_> = scenarios
            .iter()
            .map(|s| {
                let diags: Vec<String> = s.diagnostics.list.iter().map(|d| pipeline::kind_name(*d)).collect();
                serde_json::json!({ "name": s.name, "claim": s.claim, "reaction": s.reaction.constructor(), "diagnostics": diags })
            })
            .collect();
        println!("{}", serde_json::to_string_pretty(&items)?);
    } else {
        for s in &scenarios {
            println!("{:<20} {}", s.name, s.claim);
        }
    }
    if defaults {
        println!();
        for (k, v, doc) in DEFAULTS {
            println!("{k:<22} {:<8} {doc}", fmt::g(*v));
        }
    }
    Ok(0)
}

fn dispatch(cmd: Cmd) -> Result<i32> {
    match cmd {
        Cmd::Speed { reaction, tol, out } => verbs::speed(&reaction.resolve()?, tol, out.as_deref()).map(|_| 0),
        Cmd::Constants { reaction } => verbs::constants(&reaction.resolve()?).map(|_| 0),
        Cmd::Check { reaction, which, eta } => verbs::check(&reaction.resolve()?, &which, eta),
        Cmd::Simulate { config, out } => {
            let sc = catalog::load(&config)?;
            let res = run_scenario(&sc, &out_dir(out.as_deref(), &sc.name), Mode::SimulateOnly)?;
            println!("artifacts: {}", res.dir.display());
            Ok(0)
        }
        Cmd::Diagnose { snapshots, reaction, eps, out } => {
            let desc = reaction.resolve()?;
            verbs::diagnose(&desc, &snapshots, eps, &out_dir(out.as_deref(), "diagnose"))
        }
        Cmd::Calibrate { which, dx, reaction_cfl, out } => {
            verbs::calibrate(&which, dx, reaction_cfl, &out_dir(out.as_deref(), &format!("calibrate_{which}")))
        }
        Cmd::Run { scenario, out } => run_one(&scenario, out.as_deref()),
        Cmd::Sweep { scenarios, jobs } => sweep(&scenarios, jobs),
        Cmd::List { json, defaults } => list(json, defaults),
        Cmd::Export { dir, out } => {
            let path = verbs::export(&dir, out.as_deref())?;
            println!("{}", path.display());
            Ok(0)
        }
        Cmd::Reaction { cmd: ReactionCmd::Dump { reaction, n_coord, n_u, out } } => {
            verbs::dump(&reaction.resolve()?, n_coord, n_u, out.as_deref()).map(|_| 0)
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match dispatch(cli.cmd) {
        Ok(status) => ExitCode::from(status as u8),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(status_of(&e) as u8)
        }
    }
}
