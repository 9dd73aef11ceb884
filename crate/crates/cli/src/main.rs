use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use infoest::densities::Mode;
use infoest::montecarlo::with_threads;

mod config;
mod error;
mod output;
mod verify;

use config::{ExperimentConfig, Overrides};
use error::{CliError, Status};
use output::{artefact, sink, write_assertions, write_cdf, write_paths, write_summary};

#[derive(Parser)]
#[command(name = "infoest", version, about = "Monte Carlo checks of pathwise information identities")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    #[command(flatten)]
    common: Common,
}

#[derive(Args)]
struct Common {
    /// Override the master seed of every config.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Override the number of paths.
    #[arg(long, global = true)]
    paths: Option<usize>,
    /// Override the grid resolution.
    #[arg(long, global = true)]
    steps: Option<usize>,
    /// Override the evaluation mode.
    #[arg(long, global = true, value_enum)]
    mode: Option<ModeArg>,
    /// Worker threads; results do not depend on this.
    #[arg(long, global = true, env = "INFOEST_THREADS")]
    threads: Option<usize>,
}

#[derive(Clone, Copy, ValueEnum)]
enum ModeArg {
    Algebraic,
    Analytic,
}

impl From<ModeArg> for Mode {
    fn from(m: ModeArg) -> Self {
        match m {
            ModeArg::Algebraic => Mode::Algebraic,
            ModeArg::Analytic => Mode::Analytic,
        }
    }
}

#[derive(Subcommand)]
enum Command {
    /// Run configs and evaluate their assertions.
    Verify {
        /// A config file, or a directory of `*.json` configs.
        #[arg(long)]
        config: PathBuf,
        /// Directory for per-path, summary and check tables.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Validate the configs without sampling.
        #[arg(long)]
        dry_run: bool,
    },
    /// Variance against a swept parameter.
    Sweep {
        #[arg(long)]
        config: PathBuf,
        /// CSV file; stdout when omitted.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Empirical CDF of the left side with its confidence band.
    Cdf {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
        /// Rows per config.
        #[arg(long)]
        rows: Option<usize>,
    },
    /// Print the scenario tags accepted in configs.
    ListIdentities,
}

const SCENARIOS: [(&str, &str); 13] = [
    ("scalar_z", "scalar input, Brownian-motion coupling"),
    ("scalar_z_mismatch", "scalar input, estimator built for a different prior"),
    ("coupling_b", "additive Gaussian coupling across snr"),
    ("coupling_c", "independent Gaussian coupling across snr"),
    ("cross_coupling", "finite-dimensional noise against its Brownian embedding"),
    ("duncan", "continuous-time input, causal filter"),
    ("duncan_limit", "constant Gaussian input, variance over long horizons"),
    ("mismatch", "causal filters for two input laws"),
    ("feedback_d_phi", "channel with output feedback"),
    ("feedback_m_phi", "channel with output feedback, two input laws"),
    ("sheet_n", "joint snr and time sheet"),
    ("causal_anticausal", "forward against time-reversed filtering"),
    ("causal_vs_noncausal", "filtering against smoothing"),
];

fn load(path: &Path, o: &Overrides) -> Result<Vec<ExperimentConfig>, CliError> {
    let mut configs = config::load(path)?;
    for c in &mut configs {
        c.apply(o);
        c.validate().map_err(|e| CliError::Config(format!("{}: {e}", c.label())))?;
    }
    Ok(configs)
}

fn report(a: &verify::Assertion) {
    match serde_json::to_string(a) {
        Ok(line) => eprintln!("{line}"),
        Err(_) => eprintln!("{a:?}"),
    }
}

fn run_verify(configs: &[ExperimentConfig], out: Option<&PathBuf>) -> Result<Status, CliError> {
    let mut status = Status::Pass;
    let mut done = Vec::new();
    for c in configs {
        let label = c.label();
        let outcome = match verify::verify(c) {
            Ok(o) => o,
            Err(e) => {
                eprintln!("{label}: {e}");
                status = status.worst(e.status());
                continue;
            }
        };
        let s = outcome.status();
        let failed = outcome.assertions.iter().filter(|a| !a.passed).count();
        eprintln!("{label}: {} ({} assertions, {failed} failed)", if s == Status::Pass { "pass" } else { "FAIL" }, outcome.assertions.len());
        outcome.assertions.iter().filter(|a| !a.passed).for_each(report);
        if let Some(dir) = out.or(c.output.as_ref()) {
            write_paths(sink(Some(&artefact(dir, &label, "paths")))?, c, &outcome.runs)?;
            write_summary(sink(Some(&artefact(dir, &label, "summary")))?, &[(c, &outcome.runs)])?;
            write_assertions(sink(Some(&artefact(dir, &label, "checks")))?, &[c], &outcome.assertions)?;
        }
        status = status.worst(s);
        done.push((c, outcome.runs));
    }
    let items: Vec<(&ExperimentConfig, &[verify::Run])> = done.iter().map(|(c, r)| (*c, r.as_slice())).collect();
    write_summary(sink(None)?, &items)?;
    Ok(status)
}

fn run_sweep(configs: &[ExperimentConfig], out: Option<&PathBuf>) -> Result<Status, CliError> {
    if let Some(c) = configs.iter().find(|c| c.sweep.is_none()) {
        return Err(CliError::Config(format!("{} has no sweep section", c.label())));
    }
    let runs = configs.iter().map(verify::collect).collect::<Result<Vec<_>, _>>()?;
    let items: Vec<(&ExperimentConfig, &[verify::Run])> = configs.iter().zip(&runs).map(|(c, r)| (c, r.as_slice())).collect();
    write_summary(sink(out.map(|p| p.as_path()))?, &items)?;
    Ok(Status::Pass)
}

fn run_cdf(configs: &[ExperimentConfig], out: Option<&PathBuf>, rows: Option<usize>) -> Result<Status, CliError> {
    if let Some(c) = configs.iter().find(|c| c.sweep.is_some()) {
        return Err(CliError::Config(format!("{} is a sweep; cdf needs a single scenario", c.label())));
    }
    let mut items = Vec::new();
    for c in configs {
        let run = verify::collect(c)?.remove(0);
        let n_rows = rows.or(c.cdf_rows).unwrap_or(1000);
        items.push((c, run.experiment.identity.name(), run.experiment.cdf.rows(n_rows)));
    }
    write_cdf(sink(out.map(|p| p.as_path()))?, &items)?;
    Ok(Status::Pass)
}

fn execute(cli: Cli) -> Result<Status, CliError> {
    let o = Overrides {
        seed: cli.common.seed,
        paths: cli.common.paths,
        steps: cli.common.steps,
        mode: cli.common.mode.map(Mode::from),
    };
    if cli.common.threads == Some(0) {
        return Err(CliError::Config("thread count must be positive".into()));
    }
    let threads = cli.common.threads;
    match cli.command {
        Command::ListIdentities => {
            for (tag, about) in SCENARIOS {
                println!("{tag:<22}{about}");
            }
            Ok(Status::Pass)
        }
        Command::Verify { config, out, dry_run } => {
            let configs = load(&config, &o)?;
            if dry_run {
                configs.iter().for_each(|c| println!("ok {}", c.label()));
                return Ok(Status::Pass);
            }
            with_threads(threads, || run_verify(&configs, out.as_ref()))?
        }
        Command::Sweep { config, out } => {
            let configs = load(&config, &o)?;
            with_threads(threads, || run_sweep(&configs, out.as_ref()))?
        }
        Command::Cdf { config, out, rows } => {
            if rows == Some(0) {
                return Err(CliError::Config("rows must be positive".into()));
            }
            let configs = load(&config, &o)?;
            with_threads(threads, || run_cdf(&configs, out.as_ref(), rows))?
        }
    }
}

fn main() -> ExitCode {
    // Usage errors share the config exit code; clap's default of 2 means a statistical failure here.
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { Status::Config.code() as u8 } else { 0 });
        }
    };
    let status = match execute(cli) {
        Ok(s) => s,
        Err(e) => {
            eprintln!("error: {e}");
            e.status()
        }
    };
    ExitCode::from(status.code() as u8)
}
