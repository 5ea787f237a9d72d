//! Experiment runner for the `zonalnls` command-line tool.
//!
//! Every run writes into `<out>/<experiment>/<run-id>/` a set of CSV/JSON
//! payloads, a `checks.json` with the acceptance checks, and a
//! `manifest.json` echoing the resolved configuration.

pub mod config;
pub mod experiments;
pub mod selftest;

use std::fs;
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use anyhow::{Context, Result};
use serde::Serialize;
use serde_json::Value;
use sha2::{Digest, Sha256};

use config::ConfigFile;
use experiments::{Check, Outcome};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Experiment {
    Selftest,
    Simulate,
    Conservation,
    Convergence,
    BlowupDichotomy,
    EstimateScan,
    CountingScan,
}

impl Experiment {
    pub fn name(&self) -> &'static str {
        match self {
            Self::Selftest => "selftest",
            Self::Simulate => "simulate",
            Self::Conservation => "conservation",
            Self::Convergence => "convergence",
            Self::BlowupDichotomy => "blowup-dichotomy",
            Self::EstimateScan => "estimate-scan",
            Self::CountingScan => "counting-scan",
        }
    }

    /// Resolved configuration section, defaults filled in.
    pub fn section(&self, file: &ConfigFile) -> Result<Value> {
        Ok(match self {
            Self::Selftest => serde_json::to_value(file.selftest.clone().unwrap_or_default())?,
            Self::Simulate => serde_json::to_value(file.simulate.clone().unwrap_or_default())?,
            Self::Conservation => serde_json::to_value(file.conservation.clone().unwrap_or_default())?,
            Self::Convergence => serde_json::to_value(file.convergence.clone().unwrap_or_default())?,
            Self::BlowupDichotomy => serde_json::to_value(file.blowup_dichotomy.clone().unwrap_or_default())?,
            Self::EstimateScan => serde_json::to_value(file.estimate_scan.clone().unwrap_or_default())?,
            Self::CountingScan => serde_json::to_value(file.counting_scan.clone().unwrap_or_default())?,
        })
    }

    pub fn execute(&self, file: &ConfigFile, seed: u64) -> Result<Outcome> {
        match self {
            Self::Selftest => {
                let report = selftest::run_selftest(&file.selftest.clone().unwrap_or_default());
                let checks = report
                    .suites
                    .iter()
                    .map(|s| {
                        let failed: Vec<&str> = s
                            .invariants
                            .iter()
                            .filter(|i| !i.pass)
                            .map(|i| i.name.as_str())
                            .collect();
                        Check::new(s.name.clone(), s.passed(), failed.join(","))
                    })
                    .collect();
                let mut json = serde_json::to_string_pretty(&report)?;
                json.push('\n');
                Ok(Outcome {
                    files: vec![
                        ("selftest.txt".into(), report.to_text()),
                        ("selftest.json".into(), json),
                    ],
                    checks,
                })
            }
            Self::Simulate => experiments::simulate(&file.simulate.clone().unwrap_or_default(), seed),
            Self::Conservation => experiments::conservation(&file.conservation.clone().unwrap_or_default(), seed),
            Self::Convergence => experiments::convergence(&file.convergence.clone().unwrap_or_default(), seed),
            Self::BlowupDichotomy => {
                experiments::blowup_dichotomy(&file.blowup_dichotomy.clone().unwrap_or_default(), seed)
            }
            Self::EstimateScan => experiments::estimate_scan_run(&file.estimate_scan.clone().unwrap_or_default(), seed),
            Self::CountingScan => experiments::counting_scan(&file.counting_scan.clone().unwrap_or_default()),
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct Manifest {
    pub experiment: String,
    pub config_echo: Value,
    pub seed: u64,
    pub versions: Value,
    pub started: u64,
    pub finished: u64,
    pub input_hash: String,
}

#[derive(Debug, Clone)]
pub struct RunRecord {
    pub dir: PathBuf,
    pub outcome: Outcome,
    pub manifest: Manifest,
}

fn unix_now() -> u64 {
    SystemTime::now().duration_since(UNIX_EPOCH).map_or(0, |d| d.as_secs())
}

/// SHA-256 of the experiment name, seed and resolved config, hex encoded.
pub fn input_hash(experiment: Experiment, echo: &Value, seed: u64) -> Result<String> {
    let canonical = serde_json::to_vec(&serde_json::json!({
        "experiment": experiment.name(),
        "seed": seed,
        "config": echo,
    }))?;
    Ok(hex::encode(Sha256::digest(&canonical)))
}

fn fresh_dir(base: &Path, stem: &str) -> Result<PathBuf> {
    fs::create_dir_all(base).with_context(|| format!("creating {}", base.display()))?;
    let mut k = 1;
    loop {
        let name = if k == 1 {
            stem.to_string()
        } else {
            format!("{stem}-{k}")
        };
        let dir = base.join(name);
        match fs::create_dir(&dir) {
            Ok(()) => return Ok(dir),
            Err(e) if e.kind() == std::io::ErrorKind::AlreadyExists => k += 1,
            Err(e) => return Err(e).with_context(|| format!("creating {}", dir.display())),
        }
    }
}

/// Runs `experiment` and writes its outputs under `out`.
pub fn run(experiment: Experiment, file: &ConfigFile, out: &Path, seed: u64) -> Result<RunRecord> {
    let started = unix_now();
    let echo = experiment.section(file)?;
    let hash = input_hash(experiment, &echo, seed)?;
    let outcome = experiment
        .execute(file, seed)
        .with_context(|| format!("experiment {}", experiment.name()))?;
    let dir = fresh_dir(&out.join(experiment.name()), &format!("seed{seed}-{}", &hash[..12]))?;
    for (name, contents) in &outcome.files {
        fs::write(dir.join(name), contents).with_context(|| format!("writing {name}"))?;
    }
    let mut checks = serde_json::to_string_pretty(&outcome.checks)?;
    checks.push('\n');
    fs::write(dir.join("checks.json"), checks)?;
    let manifest = Manifest {
        experiment: experiment.name().into(),
        config_echo: echo,
        seed,
        versions: serde_json::json!({
            "zonalnls-core": zonalnls::VERSION,
            "zonalnls-cli": env!("CARGO_PKG_VERSION"),
        }),
        started,
        finished: unix_now(),
        input_hash: hash,
    };
    let mut text = serde_json::to_string_pretty(&manifest)?;
    text.push('\n');
    fs::write(dir.join("manifest.json"), text)?;
    Ok(RunRecord { dir, outcome, manifest })
}
