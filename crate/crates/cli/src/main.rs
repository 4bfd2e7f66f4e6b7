//! `caloric-mhd`: run, verify, sweep and report caloric-splitting experiments.
//!
//! Exit codes: 0 success, 1 an audit or study failed, 2 bad config or
//! arguments, 3 solver or I/O error.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use caloric_mhd::exec::{with_jobs, Execution};
use caloric_mhd::experiment::{self, RunConfig, SweepDimension};
use caloric_mhd::Error;
use clap::{Parser, Subcommand, ValueEnum};

#[derive(Parser)]
#[command(name = "caloric-mhd", version, about = "Caloric-splitting MHD solver and inequality audits")]
struct Cli {
    /// worker threads; 1 runs sequentially
    #[arg(long, global = true, env = "CALORIC_MHD_JOBS")]
    jobs: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(clap::Args)]
struct Common {
    /// JSON config; `CALORIC_MHD__SECTION__KEY` variables override its fields
    #[arg(long, env = "CALORIC_MHD_CONFIG")]
    config: PathBuf,
    /// output directory, defaults to `output.dir` from the config
    #[arg(long, env = "CALORIC_MHD_OUT_DIR")]
    out_dir: Option<PathBuf>,
}

#[derive(Clone, Copy, ValueEnum)]
enum Dimension {
    Epsilon,
    Dt,
    N,
}

#[derive(Subcommand)]
enum Command {
    /// Solve, audit, and write the trajectory and reports
    Run(Common),
    /// Re-audit an exported trajectory
    Verify {
        #[command(flatten)]
        common: Common,
        /// trajectory directory written by `run`
        #[arg(long)]
        trajectory: PathBuf,
    },
    /// Refine ε, dt or n and tabulate distances and orders
    Sweep {
        #[command(flatten)]
        common: Common,
        #[arg(long, value_enum)]
        dimension: Dimension,
        /// comma-separated levels, at least three
        #[arg(long, value_delimiter = ',', required = true)]
        levels: Vec<f64>,
    },
    /// Perturb the data and fit the difference-energy envelope
    Stability {
        #[command(flatten)]
        common: Common,
        /// comma-separated perturbation sizes
        #[arg(long, value_delimiter = ',', default_values_t = [1e-4, 1e-5])]
        deltas: Vec<f64>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Render summary.json of a run directory as markdown
    Report {
        /// run directory containing summary.json
        dir: PathBuf,
    },
}

fn load(common: &Common) -> Result<(RunConfig, PathBuf), Error> {
    let config = experiment::load_config(&common.config, std::env::vars())?;
    let out = common
        .out_dir
        .clone()
        .or_else(|| config.output.dir.clone())
        .ok_or_else(|| Error::Config("no output directory: pass --out-dir or set output.dir".into()))?;
    Ok((config, out))
}

fn verdict(pass: bool, what: &str, out: &Path) -> ExitCode {
    println!("{what}: {} ({})", if pass { "PASS" } else { "FAIL" }, out.display());
    if pass {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(1)
    }
}

fn execute(command: Command, exec: Execution) -> Result<ExitCode, Error> {
    Ok(match command {
        Command::Run(common) => {
            let (config, out) = load(&common)?;
            let s = experiment::run(&config, &out, exec)?;
            for a in &s.audits {
                println!("{:<16} {} {:.3e}", a.name, if a.pass { "pass" } else { "FAIL" }, a.worst_ratio);
            }
            verdict(s.pass, "run", &out)
        }
        Command::Verify { common, trajectory } => {
            let (config, out) = load(&common)?;
            let s = experiment::verify(&config, &trajectory, &out, exec)?;
            verdict(s.pass, "verify", &out)
        }
        Command::Sweep { common, dimension, levels } => {
            let (config, out) = load(&common)?;
            let dim = match dimension {
                Dimension::Epsilon => SweepDimension::Epsilon,
                Dimension::Dt => SweepDimension::Dt,
                Dimension::N => SweepDimension::N,
            };
            let t = experiment::sweep(&config, dim, &levels, &out, exec)?;
            for l in &t.levels {
                let order = l.order.map(|o| format!("{o:.2}")).unwrap_or_else(|| "-".into());
                println!("{:<12} {:.6e} {order}", l.value, l.distance);
            }
            verdict(t.pass, "sweep", &out)
        }
        Command::Stability { common, deltas, seed } => {
            let (config, out) = load(&common)?;
            let s = experiment::stability(&config, &deltas, seed, &out, exec)?;
            for r in &s.reports {
                println!("δ={:.1e} Ĉ={:.4e} K={:.3}", r.delta, r.c_hat, r.k);
            }
            verdict(s.pass, "stability", &out)
        }
        Command::Report { dir } => {
            print!("{}", experiment::report(&dir)?);
            ExitCode::SUCCESS
        }
    })
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(2) } else { ExitCode::SUCCESS };
        }
    };
    let exec = with_jobs(cli.jobs);
    match execute(cli.command, exec) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            match e {
                Error::Config(_) => ExitCode::from(2),
                _ => ExitCode::from(3),
            }
        }
    }
}
