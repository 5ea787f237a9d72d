use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Parser, Subcommand};
use zonalnls_cli::config::ConfigFile;
use zonalnls_cli::Experiment;

#[derive(Parser)]
#[command(name = "zonalnls", version, about = "Zonal NLS experiments on the four-sphere")]
struct Cli {
    /// TOML config file; missing sections use built-in defaults.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output root; runs land in <out>/<experiment>/<run-id>/.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Worker threads for scans.
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Exit with status 2 when an acceptance check fails.
    #[arg(long, global = true)]
    assert: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Clone, Copy)]
enum Command {
    /// Run the invariant suites of every module.
    Selftest,
    /// Evolve one initial datum and record diagnostics.
    Simulate,
    /// Drift of the conserved quantities along one run.
    Conservation,
    /// Energy drift under step halving.
    Convergence,
    /// Condition vs resonant-direction check and constant-data blow-up times.
    BlowupDichotomy,
    /// Dyadic scans of the multilinear forms with exponent fits.
    EstimateScan,
    /// Maximal lattice-point counts per dyadic scale.
    CountingScan,
}

impl From<Command> for Experiment {
    fn from(c: Command) -> Self {
        match c {
            Command::Selftest => Self::Selftest,
            Command::Simulate => Self::Simulate,
            Command::Conservation => Self::Conservation,
            Command::Convergence => Self::Convergence,
            Command::BlowupDichotomy => Self::BlowupDichotomy,
            Command::EstimateScan => Self::EstimateScan,
            Command::CountingScan => Self::CountingScan,
        }
    }
}

fn main() -> ExitCode {
    match real_main() {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}

fn real_main() -> Result<ExitCode> {
    let cli = Cli::parse();
    let file = match &cli.config {
        Some(p) => ConfigFile::load(p)?,
        None => ConfigFile::default(),
    };
    if let Some(n) = cli.threads.or(file.threads) {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .context("configuring worker threads")?;
    }
    let seed = cli.seed.or(file.seed).unwrap_or(0);
    let out = cli
        .out
        .clone()
        .or(file.out.clone())
        .unwrap_or_else(|| PathBuf::from("runs"));
    let experiment = Experiment::from(cli.command);
    let record = zonalnls_cli::run(experiment, &file, &out, seed)?;

    for c in &record.outcome.checks {
        let verdict = if c.pass { "PASS" } else { "FAIL" };
        println!("{verdict} {} ({})", c.name, c.detail);
    }
    println!("wrote {}", record.dir.display());
    let failed = !record.outcome.passed();
    if failed && (cli.assert || experiment == Experiment::Selftest) {
        return Ok(ExitCode::from(2));
    }
    Ok(ExitCode::SUCCESS)
}
