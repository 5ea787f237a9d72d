//! Named experiments. Each returns its output files in memory together with
//! the acceptance checks that `--assert` turns into an exit status.

use std::f64::consts::TAU;
use std::fmt::Write as _;
use std::sync::Arc;

use anyhow::{bail, Context, Result};
use serde::Serialize;
use zonalnls::blowup::{blowup_time, classify, condition_holds, resonant_direction, BlowupReport, ResonantDirection};
use zonalnls::estimates::{build_tensor, estimate_scan, scan_csv, FormKind};
use zonalnls::evolution::{simulate as run_flow, Trajectory};
use zonalnls::resonance::{counting_csv, max_count_scan};
use zonalnls::{Complex64, EquationSpec, SimConfig, Termination, ZonalSpectrum};

use crate::config::{
    ConservationConfig, ConvergenceConfig, CountingConfig, DichotomyConfig, EstimateScanConfig, SimulateConfig,
};

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Check {
    pub name: String,
    pub pass: bool,
    pub detail: String,
}

impl Check {
    pub fn new(name: impl Into<String>, pass: bool, detail: impl Into<String>) -> Self {
        Self {
            name: name.into(),
            pass,
            detail: detail.into(),
        }
    }

    fn at_most(name: impl Into<String>, value: f64, bound: f64) -> Self {
        Self::new(name, value <= bound, format!("{value:.6e} <= {bound:e}"))
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct Outcome {
    /// `(file name, contents)` in write order.
    pub files: Vec<(String, String)>,
    pub checks: Vec<Check>,
}

impl Outcome {
    pub fn file(&self, name: &str) -> Option<&str> {
        self.files.iter().find(|(n, _)| n == name).map(|(_, c)| c.as_str())
    }

    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.pass)
    }
}

fn json<T: Serialize>(value: &T) -> Result<String> {
    let mut s = serde_json::to_string_pretty(value)?;
    s.push('\n');
    Ok(s)
}

fn status_name(t: &Termination) -> &'static str {
    match t {
        Termination::Completed => "completed",
        Termination::BlowupDetected { .. } => "blowup",
    }
}

pub fn simulate(cfg: &SimulateConfig, seed: u64) -> Result<Outcome> {
    let u0 = cfg.initial.build(cfg.run.max_degree, seed)?;
    let traj = run_flow(&u0, cfg.equation, &cfg.run).context("simulate")?;
    Ok(Outcome {
        files: vec![
            ("trajectory.csv".into(), traj.to_csv()),
            ("final_state.json".into(), traj.final_state.to_json() + "\n"),
            ("status.json".into(), json(&traj.status)?),
        ],
        checks: Vec::new(),
    })
}

fn drift_csv(traj: &Trajectory) -> String {
    let d0 = traj.samples[0];
    let mut out = String::from("t,mass_drift,energy_drift,re_integral_drift\n");
    for (t, d) in traj.times.iter().zip(&traj.samples) {
        writeln!(
            out,
            "{t},{},{},{}",
            (d.mass - d0.mass).abs(),
            (d.energy - d0.energy).abs(),
            (d.re_integral - d0.re_integral).abs()
        )
        .expect("writing to a String");
    }
    out
}

pub fn conservation(cfg: &ConservationConfig, seed: u64) -> Result<Outcome> {
    let u0 = cfg.initial.build(cfg.run.max_degree, seed)?;
    let traj = run_flow(&u0, cfg.equation, &cfg.run).context("conservation")?;
    let mut checks = vec![Check::new(
        "completed",
        traj.status == Termination::Completed,
        status_name(&traj.status),
    )];
    match cfg.equation {
        EquationSpec::Hartree { .. } => {
            checks.push(Check::at_most("mass_drift", traj.max_drift(|d| d.mass), cfg.mass_tol));
        }
        EquationSpec::Quadratic { .. } => {
            checks.push(Check::at_most(
                "re_integral_drift",
                traj.max_drift(|d| d.re_integral),
                cfg.quadratic_tol,
            ));
            if cfg.equation.is_hamiltonian() {
                checks.push(Check::at_most(
                    "energy_drift",
                    traj.max_drift(|d| d.energy),
                    cfg.quadratic_tol,
                ));
            }
        }
    }
    Ok(Outcome {
        files: vec![
            ("trajectory.csv".into(), traj.to_csv()),
            ("drift.csv".into(), drift_csv(&traj)),
        ],
        checks,
    })
}

pub fn convergence(cfg: &ConvergenceConfig, seed: u64) -> Result<Outcome> {
    if cfg.levels < 2 {
        bail!("convergence needs at least 2 levels, got {}", cfg.levels);
    }
    let u0 = cfg.initial.build(cfg.max_degree, seed)?;
    let mut rows = Vec::new();
    for k in 0..cfg.levels {
        let dt = cfg.dt / f64::powi(2.0, k as i32);
        let run = SimConfig {
            dt,
            t_final: cfg.t_final,
            max_degree: cfg.max_degree,
            blowup_threshold: f64::MAX,
            record_stride: 1,
            keep_states: false,
        };
        let traj = run_flow(&u0, cfg.equation, &run).with_context(|| format!("convergence at dt = {dt}"))?;
        rows.push((dt, traj.max_drift(|d| d.mass), traj.max_drift(|d| d.energy)));
    }
    let mut csv = String::from("dt,mass_drift,energy_drift,ratio\n");
    let mut checks = Vec::new();
    for (k, &(dt, mass, energy)) in rows.iter().enumerate() {
        let ratio = (k > 0).then(|| rows[k - 1].2 / energy);
        let shown = ratio.map(|r| r.to_string()).unwrap_or_default();
        writeln!(csv, "{dt},{mass},{energy},{shown}").expect("writing to a String");
        if let Some(r) = ratio {
            let [lo, hi] = cfg.ratio_range;
            checks.push(Check::new(
                format!("energy_ratio[{k}]"),
                (lo..=hi).contains(&r),
                format!("{r:.4} in [{lo}, {hi}]"),
            ));
        }
        if matches!(cfg.equation, EquationSpec::Hartree { .. }) {
            checks.push(Check::at_most(format!("mass_drift[{k}]"), mass, cfg.mass_tol));
        }
    }
    Ok(Outcome {
        files: vec![("convergence.csv".into(), csv)],
        checks,
    })
}

fn grid_pairs(cfg: &DichotomyConfig) -> Vec<(Complex64, Complex64)> {
    let args: Vec<f64> = (0..cfg.arguments)
        .map(|k| TAU * k as f64 / cfg.arguments as f64)
        .collect();
    let mut out = Vec::new();
    for &am in &cfg.a_moduli {
        for &bm in &cfg.b_moduli {
            let b_args = if bm == 0.0 { &args[..1] } else { &args[..] };
            for &aa in &args {
                for &ba in b_args {
                    out.push((Complex64::from_polar(am, aa), Complex64::from_polar(bm, ba)));
                }
            }
        }
    }
    out
}

/// `count` entries of `items` at evenly spaced positions.
fn spread<T: Copy>(items: &[T], count: usize) -> Vec<T> {
    if items.len() <= count {
        return items.to_vec();
    }
    (0..count).map(|k| items[k * items.len() / count]).collect()
}

fn simulated_blowup(a: Complex64, b: Complex64, cfg: &DichotomyConfig) -> Result<BlowupReport> {
    let verdict = classify(a, b)?;
    let Some((omega, y0)) = verdict.blowup_data(cfg.blowup_magnitude) else {
        return Ok(BlowupReport::new(verdict, a, b, None, None));
    };
    let closed = blowup_time(y0, omega, a, b)?;
    let horizon = closed.map_or(cfg.max_blowup_time, |t| 2.0 * t);
    let run = SimConfig {
        dt: cfg.blowup_dt,
        t_final: horizon,
        max_degree: 2,
        blowup_threshold: cfg.blowup_threshold,
        record_stride: 1000,
        keep_states: false,
    };
    let traj = run_flow(
        &ZonalSpectrum::constant(omega * y0, 2),
        EquationSpec::hamiltonian_quadratic(a, b),
        &run,
    )?;
    let simulated = match traj.status {
        Termination::BlowupDetected { time } => Some(time),
        Termination::Completed => None,
    };
    Ok(BlowupReport::new(verdict, a, b, simulated, closed))
}

pub fn blowup_dichotomy(cfg: &DichotomyConfig, seed: u64) -> Result<Outcome> {
    if cfg.a_moduli.iter().any(|&m| m.is_nan() || m <= 0.0) {
        bail!("a_moduli must be positive");
    }
    if cfg.arguments == 0 {
        bail!("arguments must be at least 1");
    }
    let pairs = grid_pairs(cfg);
    let mut grid = String::from("a_re,a_im,b_re,b_im,condition_holds,simple_zero\n");
    let mut disagreements = 0usize;
    let mut failing = Vec::new();
    let mut holding = Vec::new();
    for &(a, b) in &pairs {
        let holds = condition_holds(a, b)?;
        let simple = matches!(resonant_direction(a, b)?, ResonantDirection::Simple { .. });
        if holds == simple {
            disagreements += 1;
        }
        writeln!(grid, "{},{},{},{},{holds},{simple}", a.re, a.im, b.re, b.im).expect("writing to a String");
        if holds {
            holding.push((a, b));
        } else if !simple {
            continue;
        } else {
            let (omega, y0) = classify(a, b)?
                .blowup_data(cfg.blowup_magnitude)
                .expect("resonant witness");
            if blowup_time(y0, omega, a, b)?.is_some_and(|t| t <= cfg.max_blowup_time) {
                failing.push((a, b));
            }
        }
    }
    let mut checks = vec![Check::new(
        "grid_agreement",
        disagreements == 0,
        format!("{disagreements} disagreements on {} pairs", pairs.len()),
    )];

    let mut reports = Vec::new();
    let chosen: Vec<(Complex64, Complex64)> = cfg
        .extra_pairs
        .iter()
        .map(|[a, b]| (*a, *b))
        .chain(spread(&failing, cfg.blowup_pairs))
        .collect();
    for (a, b) in chosen {
        let r = simulated_blowup(a, b, cfg).with_context(|| format!("blow-up run for a={a}, b={b}"))?;
        let name = format!("blowup_time[a={a},b={b}]");
        checks.push(match (r.closed_form_t_star, r.rel_gap) {
            (Some(_), Some(gap)) => Check::at_most(name, gap, cfg.max_rel_gap),
            (Some(t), None) => Check::new(name, false, format!("no blow-up detected, closed form {t}")),
            (None, _) => Check::new(name, r.simulated_t_star.is_none(), "closed form global"),
        });
        reports.push(r);
    }
    checks.push(Check::new(
        "blowup_pairs",
        failing.len() >= cfg.blowup_pairs,
        format!("{} candidates for {} requested", failing.len(), cfg.blowup_pairs),
    ));

    let mut stability = String::from("a_re,a_im,b_re,b_im,h1_initial,h1_max,growth,status\n");
    let stable = spread(&holding, cfg.stable_pairs);
    checks.push(Check::new(
        "stable_pairs",
        stable.len() >= cfg.stable_pairs,
        format!(
            "{} condition-holding pairs for {} requested",
            holding.len(),
            cfg.stable_pairs
        ),
    ));
    let data = crate::config::InitialData::Random {
        band: cfg.stable_band,
        h1: cfg.stable_h1,
    };
    for (k, &(a, b)) in stable.iter().enumerate() {
        let u0 = data.build(cfg.stable_degree, seed.wrapping_add(k as u64))?;
        let run = SimConfig {
            dt: cfg.stable_dt,
            t_final: cfg.stable_horizon,
            max_degree: cfg.stable_degree,
            blowup_threshold: 1e6,
            record_stride: 10,
            keep_states: false,
        };
        let traj = run_flow(&u0, EquationSpec::hamiltonian_quadratic(a, b), &run)
            .with_context(|| format!("stability run for a={a}, b={b}"))?;
        let h0 = traj.samples[0].h1;
        let hmax = traj.samples.iter().map(|d| d.h1).fold(h0, f64::max);
        let growth = hmax / h0;
        let status = status_name(&traj.status);
        writeln!(
            stability,
            "{},{},{},{},{h0},{hmax},{growth},{status}",
            a.re, a.im, b.re, b.im
        )
        .expect("writing to a String");
        checks.push(Check::new(
            format!("stability[a={a},b={b}]"),
            traj.status == Termination::Completed && growth < cfg.max_growth,
            format!("growth {growth:.4} < {}, {status}", cfg.max_growth),
        ));
    }

    Ok(Outcome {
        files: vec![
            ("grid.csv".into(), grid),
            ("report.json".into(), json(&reports)?),
            ("stability.csv".into(), stability),
        ],
        checks,
    })
}

pub fn estimate_scan_run(cfg: &EstimateScanConfig, seed: u64) -> Result<Outcome> {
    let specs: Vec<_> = cfg.scans.iter().map(|e| e.spec(seed, cfg.window_sigma)).collect();
    let mut need = 0;
    for (e, s) in cfg.scans.iter().zip(&specs) {
        s.validate().with_context(|| format!("scan {}", e.name))?;
        if s.kind != FormKind::ZonalL1 {
            need = need.max(s.required_tensor_degree()?);
        }
    }
    let tensor = Arc::new(build_tensor(need)?);
    let mut out = Outcome::default();
    for (e, s) in cfg.scans.iter().zip(&specs) {
        let result = estimate_scan(s, Some(tensor.clone())).with_context(|| format!("scan {}", e.name))?;
        out.files.push((format!("{}.csv", e.name), scan_csv(&result.samples)));
        let fit = match &result.fit {
            Ok(f) => serde_json::to_value(f)?,
            Err(err) => serde_json::json!({ "error": err.to_string() }),
        };
        out.files.push((format!("{}.fit.json", e.name), json(&fit)?));
        if let Some(bound) = e.max_slope {
            out.checks.push(match &result.fit {
                Ok(f) => Check::at_most(format!("{}.slope", e.name), f.slope, bound),
                Err(err) => Check::new(format!("{}.slope", e.name), false, err.to_string()),
            });
        }
    }
    Ok(out)
}

pub fn counting_scan(cfg: &CountingConfig) -> Result<Outcome> {
    let mut rows = Vec::new();
    let mut checks = Vec::new();
    for &sigma in &cfg.sigmas {
        for &e in &cfg.exponents {
            let n = 1u64.checked_shl(e).context("scale exponent too large")?;
            let row = max_count_scan(n, sigma, cfg.exclude_degenerate)?;
            checks.push(Check::at_most(
                format!("exponent[N={n},sigma={sigma}]"),
                row.exponent(),
                cfg.max_exponent,
            ));
            rows.push(row);
        }
    }
    Ok(Outcome {
        files: vec![("counting.csv".into(), counting_csv(&rows))],
        checks,
    })
}
