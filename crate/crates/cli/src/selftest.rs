//! Invariant suites run by the `selftest` subcommand. Reports carry no
//! timings, so repeated runs produce identical bytes.

use std::fmt::Write as _;
use std::fs::File;
use std::io::BufWriter;
use std::sync::Arc;

use serde::Serialize;
use zonalnls::blowup::{classify, condition_holds, gauge_decompose, resonant_direction, ResonantDirection};
use zonalnls::estimates::{bilinear_spacetime_norm, brute_force, build_tensor, quadrilinear_sum, Window};
use zonalnls::evolution::{free_propagate, simulate};
use zonalnls::quadrature::{gauss_rule_for_degree, S4_AREA};
use zonalnls::resonance::count_representations;
use zonalnls::spectral::random_localized;
use zonalnls::{
    composite_rule, Complex64, DyadicBand, EquationSpec, SimConfig, SpectralTransform, Termination,
    TripleProductTensor, ZonalSpectrum, ZonalTable,
};

use crate::config::SelftestConfig;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Invariant {
    pub name: String,
    pub pass: bool,
    pub detail: String,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Suite {
    pub name: String,
    pub invariants: Vec<Invariant>,
}

impl Suite {
    fn new(name: &str) -> Self {
        Self {
            name: name.into(),
            invariants: Vec::new(),
        }
    }

    fn check(&mut self, name: &str, pass: bool, detail: impl Into<String>) {
        self.invariants.push(Invariant {
            name: name.into(),
            pass,
            detail: detail.into(),
        });
    }

    fn below(&mut self, name: &str, value: f64, bound: f64) {
        self.check(name, value < bound, format!("{value:.3e} < {bound:e}"));
    }

    fn fail(&mut self, name: &str, err: impl std::fmt::Display) {
        self.check(name, false, err.to_string());
    }

    pub fn passed(&self) -> bool {
        self.invariants.iter().all(|i| i.pass)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Report {
    pub suites: Vec<Suite>,
}

impl Report {
    pub fn passed(&self) -> bool {
        self.suites.iter().all(Suite::passed)
    }

    pub fn failures(&self) -> Vec<String> {
        self.suites
            .iter()
            .flat_map(|s| {
                s.invariants
                    .iter()
                    .filter(|i| !i.pass)
                    .map(move |i| format!("{}.{}", s.name, i.name))
            })
            .collect()
    }

    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for s in &self.suites {
            let verdict = if s.passed() { "PASS" } else { "FAIL" };
            writeln!(out, "suite {}: {verdict}", s.name).expect("writing to a String");
            for i in &s.invariants {
                let v = if i.pass { "ok" } else { "FAILED" };
                writeln!(out, "  {}: {v} ({})", i.name, i.detail).expect("writing to a String");
            }
        }
        out
    }
}

fn quadrature() -> Suite {
    let mut s = Suite::new("quadrature");
    let rule = gauss_rule_for_degree(20);
    s.below("total_area", (rule.integrate_fn(|_| 1.0) - S4_AREA).abs(), 1e-12);
    let second = rule.integrate_fn(|t| t.cos().powi(2));
    s.below("second_moment", (second - S4_AREA / 5.0).abs(), 1e-12);
    let comp = composite_rule(16, 8);
    s.below("composite_area", (comp.integrate_fn(|_| 1.0) - S4_AREA).abs(), 1e-12);
    s
}

fn zonal() -> Suite {
    let mut s = Suite::new("zonal");
    let p = 64;
    let rule = gauss_rule_for_degree(2 * p);
    let table = ZonalTable::new(p, &rule);
    let cols: Vec<Vec<f64>> = (0..=p).map(|k| table.column(k)).collect();
    let mut worst = 0.0f64;
    for i in 0..=p {
        for j in i..=p {
            let g: f64 = rule
                .weights()
                .iter()
                .zip(&cols[i])
                .zip(&cols[j])
                .map(|((w, a), b)| w * a * b)
                .sum();
            let target = if i == j { 1.0 } else { 0.0 };
            worst = worst.max((g - target).abs());
        }
    }
    s.below("orthonormality", worst, 1e-9);
    s
}

fn spectral() -> Suite {
    let mut s = Suite::new("spectral");
    let p = 32;
    let tr = match SpectralTransform::new(Arc::new(gauss_rule_for_degree(2 * p)), p) {
        Ok(t) => t,
        Err(e) => {
            s.fail("transform", e);
            return s;
        }
    };
    let mut worst = 0.0f64;
    let mut parseval = 0.0f64;
    for seed in 0..4 {
        let f = random_localized(DyadicBand(8.0), seed).expect("band 8 fits").resized(p);
        let g = tr.synthesize(&f).expect("matching degree");
        worst = worst.max(tr.analyze(&g, p).expect("matching rule").max_abs_diff(&f));
        parseval = parseval.max((tr.grid_mass(&g).expect("matching rule") - f.mass()).abs());
    }
    s.below("round_trip", worst, 1e-10);
    s.below("parseval", parseval, 1e-12);
    s
}

fn tensor(cfg: &SelftestConfig) -> Suite {
    let mut s = Suite::new("tensor");
    let d = cfg.tensor_degree;
    let rule = gauss_rule_for_degree(3 * d);
    let fresh = match TripleProductTensor::build(d, &rule) {
        Ok(t) => t,
        Err(e) => {
            s.fail("build", e);
            return s;
        }
    };
    let mut zeros = true;
    let mut asym = 0.0f64;
    for (p, q, l, v) in fresh.records() {
        if l > p + q || (p + q + l) % 2 == 1 {
            zeros &= v == 0.0;
        }
        asym = asym
            .max((v - fresh.get(l, p, q)).abs())
            .max((v - fresh.get(q, l, p)).abs());
    }
    s.check("selection_rules", zeros, "inadmissible entries are exactly zero");
    s.below("symmetry", asym, 1e-14);

    let cached = match &cfg.tensor_cache {
        Some(path) if path.exists() => File::open(path)
            .map_err(|e| e.to_string())
            .and_then(|f| TripleProductTensor::read_cache(f).map_err(|e| e.to_string())),
        Some(path) => {
            let written = File::create(path)
                .map_err(|e| e.to_string())
                .and_then(|f| fresh.write_cache(BufWriter::new(f)).map_err(|e| e.to_string()));
            if let Err(e) = written {
                s.fail("cache_write", e);
                return s;
            }
            File::open(path)
                .map_err(|e| e.to_string())
                .and_then(|f| TripleProductTensor::read_cache(f).map_err(|e| e.to_string()))
        }
        None => {
            let mut bytes = Vec::new();
            fresh
                .write_cache(&mut bytes)
                .map_err(|e| e.to_string())
                .and_then(|()| TripleProductTensor::read_cache(bytes.as_slice()).map_err(|e| e.to_string()))
        }
    };
    match cached {
        Ok(t) => {
            s.check("cache_integrity", true, "checksum and layout verified");
            let same_shape = t.max_degree() == fresh.max_degree() && t.rule_fingerprint() == fresh.rule_fingerprint();
            let diff = if same_shape {
                t.records()
                    .zip(fresh.records())
                    .map(|(a, b)| (a.3 - b.3).abs())
                    .fold(0.0, f64::max)
            } else {
                f64::INFINITY
            };
            s.below("cache_matches_rebuild", diff, 1e-14);
        }
        Err(e) => s.fail("cache_integrity", e),
    }
    s
}

fn evolution() -> Suite {
    let mut s = Suite::new("evolution");
    let f = random_localized(DyadicBand(4.0), 5).expect("band 4 fits").resized(16);
    let back = free_propagate(&free_propagate(&f, 0.7), -0.7);
    s.below("free_group", back.max_abs_diff(&f), 1e-13);

    let cfg = SimConfig {
        dt: 1e-2,
        t_final: 0.5,
        max_degree: 16,
        blowup_threshold: 1e6,
        record_stride: 5,
        keep_states: false,
    };
    match simulate(&f, EquationSpec::hartree(1.0), &cfg) {
        Ok(t) => s.below("hartree_mass", t.max_drift(|d| d.mass), 1e-10),
        Err(e) => s.fail("hartree_mass", e),
    }

    let (a, b) = (Complex64::new(1.0, 0.0), Complex64::new(0.0, 0.0));
    let u0 = ZonalSpectrum::constant(Complex64::new(0.0, -0.5), 2);
    let cfg = SimConfig {
        dt: 1e-3,
        t_final: 3.0,
        max_degree: 2,
        blowup_threshold: 1e6,
        record_stride: 1000,
        keep_states: false,
    };
    match simulate(&u0, EquationSpec::hamiltonian_quadratic(a, b), &cfg).map(|t| t.status) {
        Ok(Termination::BlowupDetected { time }) => s.below("constant_blowup", (time - 2.0).abs() / 2.0, 1e-3),
        Ok(other) => s.fail("constant_blowup", format!("{other:?}")),
        Err(e) => s.fail("constant_blowup", e),
    }
    s
}

fn estimates() -> Suite {
    let mut s = Suite::new("estimates");
    let t = match build_tensor(12) {
        Ok(t) => t,
        Err(e) => {
            s.fail("tensor", e);
            return s;
        }
    };
    let w = Window::default();
    let mut quad = 0.0f64;
    let mut bil = 0.0f64;
    for seed in 0..2u64 {
        let fs: Vec<ZonalSpectrum> = [2.0, 2.0, 4.0, 4.0]
            .iter()
            .enumerate()
            .map(|(j, &n)| random_localized(DyadicBand(n), 10 * seed + j as u64).expect("small band"))
            .collect();
        let r = [&fs[0], &fs[1], &fs[2], &fs[3]];
        let sum = quadrilinear_sum(r, 2.0 / 3.0, &t).expect("bands fit");
        let (tau, _) = sum.sup_tau(&w);
        let slow = brute_force::quadrilinear(r, 2.0 / 3.0, tau, &w).expect("bands fit");
        quad = quad.max((sum.eval(tau, &w) - slow).norm() / slow.norm());
        let fast = bilinear_spacetime_norm(&fs[0], &fs[2], 1.0, &t).expect("bands fit");
        let slow = brute_force::bilinear(&fs[0], &fs[2], 1.0).expect("bands fit");
        bil = bil.max((fast - slow).abs() / slow);
    }
    s.below("quadrilinear_oracle", quad, 1e-6);
    s.below("bilinear_oracle", bil, 1e-6);
    s
}

fn resonance() -> Suite {
    let mut s = Suite::new("resonance");
    let cases = [(5u64, 1i64, 100i64, 3u64), (4, -1, 0, 5), (4, 1, 2, 0)];
    let mut ok = true;
    let mut detail = String::new();
    for (n, sigma, m, want) in cases {
        let got = count_representations(n, sigma, m).unwrap_or(u64::MAX);
        ok &= got == want;
        write!(detail, "({n},{sigma},{m})={got} ").expect("writing to a String");
    }
    s.check("known_counts", ok, detail.trim_end());
    s
}

fn blowup() -> Suite {
    let mut s = Suite::new("blowup");
    let mut disagreements = 0;
    let mut total = 0;
    for k in 0..12 {
        for j in 0..12 {
            let a = Complex64::from_polar(0.5, k as f64 * std::f64::consts::PI / 6.0);
            let b = Complex64::from_polar(0.5, j as f64 * std::f64::consts::PI / 6.0);
            let holds = condition_holds(a, b).unwrap_or(false);
            let simple = matches!(resonant_direction(a, b), Ok(ResonantDirection::Simple { .. }));
            disagreements += usize::from(holds == simple);
            total += 1;
        }
    }
    s.check(
        "dichotomy",
        disagreements == 0,
        format!("{disagreements} disagreements on {total} pairs"),
    );
    let g = gauge_decompose(Complex64::new(0.25, 0.0), Complex64::new(0.25, 0.0));
    s.check(
        "canonical_gauge",
        g.is_ok_and(|g| (g.omega - 1.0).norm() < 1e-12 && (g.c - 1.0).abs() < 1e-12),
        "(1/4, 1/4) gives omega = 1, c = 1",
    );
    s.check(
        "resonant_witness",
        classify(Complex64::new(1.0, 0.0), Complex64::new(0.0, 0.0)).is_ok_and(|v| !v.condition_holds),
        "(1, 0) fails the condition",
    );
    s
}

pub fn run_selftest(cfg: &SelftestConfig) -> Report {
    let suites = vec![
        quadrature(),
        zonal(),
        spectral(),
        tensor(cfg),
        evolution(),
        estimates(),
        resonance(),
        blowup(),
    ];
    Report { suites }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::io::{Read, Seek, SeekFrom, Write};

    #[test]
    fn fresh_selftest_passes() {
        let r = run_selftest(&SelftestConfig::default());
        assert!(r.passed(), "{}", r.to_text());
        assert_eq!(r.to_text(), run_selftest(&SelftestConfig::default()).to_text());
    }

    #[test]
    fn corrupted_cache_fails_tensor_suite() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("tensor.bin");
        let cfg = SelftestConfig {
            tensor_cache: Some(path.clone()),
            tensor_degree: 8,
        };
        assert!(tensor(&cfg).passed());
        assert!(tensor(&cfg).passed());

        let mut f = std::fs::OpenOptions::new().read(true).write(true).open(&path).unwrap();
        let mut bytes = Vec::new();
        f.read_to_end(&mut bytes).unwrap();
        let k = bytes.len() / 2;
        bytes[k] ^= 0x10;
        f.seek(SeekFrom::Start(0)).unwrap();
        f.write_all(&bytes).unwrap();
        drop(f);

        let suite = tensor(&cfg);
        assert!(!suite.passed());
        let failed: Vec<&str> = suite
            .invariants
            .iter()
            .filter(|i| !i.pass)
            .map(|i| i.name.as_str())
            .collect();
        assert_eq!(failed, vec!["cache_integrity"]);
    }
}
