//! TOML experiment configuration.
//!
//! A config file holds optional top-level `seed`, `out` and `threads` keys
//! plus one optional table per experiment. Missing tables and keys fall
//! back to the defaults below; unknown keys are rejected everywhere.

use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use serde::{Deserialize, Serialize};
use zonalnls::estimates::{FormKind, ScanSpec, TrilinearPattern, Window};
use zonalnls::spectral::{random_localized, sobolev_norm};
use zonalnls::{Complex64, DyadicBand, EquationSpec, SimConfig, ZonalSpectrum};

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConfigFile {
    pub seed: Option<u64>,
    pub out: Option<PathBuf>,
    pub threads: Option<usize>,
    pub selftest: Option<SelftestConfig>,
    pub simulate: Option<SimulateConfig>,
    pub conservation: Option<ConservationConfig>,
    pub convergence: Option<ConvergenceConfig>,
    pub blowup_dichotomy: Option<DichotomyConfig>,
    pub estimate_scan: Option<EstimateScanConfig>,
    pub counting_scan: Option<CountingConfig>,
}

impl ConfigFile {
    pub fn parse(text: &str) -> Result<Self> {
        Ok(toml::from_str(text)?)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        Self::parse(&text).with_context(|| format!("parsing {}", path.display()))
    }
}

/// Initial data for time-dependent experiments.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum InitialData {
    /// Spectral coefficients `[re, im]` for degrees `0, 1, 2, ...`.
    Modes { coeffs: Vec<Complex64> },
    /// Random probe in a dyadic band, rescaled to the given `H¹` norm.
    Random { band: f64, h1: f64 },
    /// Constant function with the given value.
    Constant { value: Complex64 },
}

impl InitialData {
    pub fn build(&self, max_degree: usize, seed: u64) -> Result<ZonalSpectrum> {
        Ok(match self {
            Self::Modes { coeffs } => {
                if coeffs.len() > max_degree + 1 {
                    bail!("{} initial modes exceed max_degree {max_degree}", coeffs.len());
                }
                ZonalSpectrum::new(coeffs.clone()).resized(max_degree)
            }
            Self::Random { band, h1 } => {
                let f = random_localized(DyadicBand(*band), seed)?;
                if f.max_degree() > max_degree {
                    bail!(
                        "band {band} needs degree {} above max_degree {max_degree}",
                        f.max_degree()
                    );
                }
                f.scaled(Complex64::new(h1 / sobolev_norm(&f, 1.0), 0.0))
                    .resized(max_degree)
            }
            Self::Constant { value } => ZonalSpectrum::constant(*value, max_degree),
        })
    }
}

fn hartree_one() -> EquationSpec {
    EquationSpec::hartree(1.0)
}

fn two_mode_data() -> InitialData {
    InitialData::Modes {
        coeffs: vec![
            Complex64::new(0.0, 0.0),
            Complex64::new(3.0, 0.0),
            Complex64::new(0.0, 2.0),
        ],
    }
}

fn default_run() -> SimConfig {
    SimConfig {
        dt: 1e-3,
        t_final: 1.0,
        max_degree: 32,
        blowup_threshold: 1e8,
        record_stride: 10,
        keep_states: false,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SimulateConfig {
    pub equation: EquationSpec,
    pub initial: InitialData,
    pub run: SimConfig,
}

impl Default for SimulateConfig {
    fn default() -> Self {
        Self {
            equation: hartree_one(),
            initial: two_mode_data(),
            run: default_run(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ConservationConfig {
    pub equation: EquationSpec,
    pub initial: InitialData,
    pub run: SimConfig,
    /// Bound on the mass drift of Hartree flows.
    pub mass_tol: f64,
    /// Bound on the drifts of `∫ Re u` and the energy of quadratic flows.
    pub quadratic_tol: f64,
}

impl Default for ConservationConfig {
    fn default() -> Self {
        Self {
            equation: hartree_one(),
            initial: two_mode_data(),
            run: default_run(),
            mass_tol: 1e-10,
            quadratic_tol: 1e-6,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ConvergenceConfig {
    pub equation: EquationSpec,
    pub initial: InitialData,
    pub max_degree: usize,
    pub t_final: f64,
    /// Coarsest step; each further level halves it.
    pub dt: f64,
    pub levels: usize,
    pub ratio_range: [f64; 2],
    pub mass_tol: f64,
}

impl Default for ConvergenceConfig {
    fn default() -> Self {
        Self {
            equation: hartree_one(),
            initial: two_mode_data(),
            max_degree: 32,
            t_final: 1.0,
            dt: 2e-3,
            levels: 2,
            ratio_range: [3.4, 4.6],
            mass_tol: 1e-10,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DichotomyConfig {
    /// Moduli of `a`; all must be positive.
    pub a_moduli: Vec<f64>,
    pub b_moduli: Vec<f64>,
    /// Arguments are multiples of `2π / arguments`.
    pub arguments: usize,
    /// Pairs always simulated from constant data, as `[a, b]`.
    pub extra_pairs: Vec<[Complex64; 2]>,
    /// Number of condition-failing grid pairs simulated to blow-up.
    pub blowup_pairs: usize,
    /// Magnitude of the constant blow-up data.
    pub blowup_magnitude: f64,
    /// Pairs whose closed-form blow-up time exceeds this are skipped.
    pub max_blowup_time: f64,
    pub blowup_dt: f64,
    pub blowup_threshold: f64,
    pub max_rel_gap: f64,
    /// Number of condition-holding pairs run for small-data stability.
    pub stable_pairs: usize,
    pub stable_band: f64,
    pub stable_h1: f64,
    pub stable_horizon: f64,
    pub stable_dt: f64,
    pub stable_degree: usize,
    pub max_growth: f64,
}

impl Default for DichotomyConfig {
    fn default() -> Self {
        Self {
            a_moduli: vec![0.25, 0.5, 1.0, 2.0],
            b_moduli: vec![0.0, 0.25, 0.5, 1.0, 2.0],
            arguments: 6,
            extra_pairs: vec![[Complex64::new(1.0, 0.0), Complex64::new(0.0, 0.0)]],
            blowup_pairs: 10,
            blowup_magnitude: 0.5,
            max_blowup_time: 20.0,
            blowup_dt: 1e-3,
            blowup_threshold: 1e6,
            max_rel_gap: 0.02,
            stable_pairs: 10,
            stable_band: 2.0,
            stable_h1: 0.05,
            stable_horizon: 50.0,
            stable_dt: 1e-2,
            stable_degree: 8,
            max_growth: 10.0,
        }
    }
}

/// One scan in an `estimate_scan` run. Probe seeds derive from the run
/// seed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScanEntry {
    pub name: String,
    pub kind: FormKind,
    #[serde(default)]
    pub alpha: f64,
    pub bands: Vec<Vec<f64>>,
    #[serde(default = "one")]
    pub draws: usize,
    #[serde(default)]
    pub pattern: TrilinearPattern,
    #[serde(default = "panels")]
    pub panels_per_degree: usize,
    /// Acceptance bound on the fitted slope under `--assert`.
    pub max_slope: Option<f64>,
}

fn one() -> usize {
    1
}

fn panels() -> usize {
    32
}

impl ScanEntry {
    fn new(name: &str, kind: FormKind, alpha: f64, bands: Vec<Vec<f64>>, draws: usize) -> Self {
        Self {
            name: name.into(),
            kind,
            alpha,
            bands,
            draws,
            pattern: TrilinearPattern::default(),
            panels_per_degree: panels(),
            max_slope: Some(0.65),
        }
    }

    pub fn spec(&self, seed: u64, window_sigma: f64) -> ScanSpec {
        ScanSpec {
            kind: self.kind,
            alpha: self.alpha,
            bands: self.bands.clone(),
            draws: self.draws,
            seed,
            window: Window { sigma: window_sigma },
            pattern: self.pattern,
            panels_per_degree: self.panels_per_degree,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EstimateScanConfig {
    pub window_sigma: f64,
    pub scans: Vec<ScanEntry>,
}

impl Default for EstimateScanConfig {
    fn default() -> Self {
        let ns = [2.0, 4.0, 8.0, 16.0];
        let degrees = [4.0, 8.0, 16.0, 32.0];
        Self {
            window_sigma: 1.0,
            scans: vec![
                ScanEntry::new(
                    "zonal_l1",
                    FormKind::ZonalL1,
                    0.0,
                    degrees.iter().map(|&m| vec![m, m, m]).collect(),
                    1,
                ),
                ScanEntry::new(
                    "zonal_l1_top64",
                    FormKind::ZonalL1,
                    0.0,
                    degrees.iter().map(|&m| vec![m, 64.0, 64.0]).collect(),
                    1,
                ),
                ScanEntry::new(
                    "trilinear",
                    FormKind::Trilinear,
                    0.0,
                    ns.iter().map(|&n| vec![n, 32.0, 32.0]).collect(),
                    20,
                ),
                ScanEntry::new(
                    "quadrilinear",
                    FormKind::Quadrilinear,
                    2.0 / 3.0,
                    ns.iter().map(|&n| vec![n, n, 32.0, 32.0]).collect(),
                    20,
                ),
                ScanEntry::new(
                    "bilinear",
                    FormKind::Bilinear,
                    1.0,
                    ns.iter().map(|&n| vec![n, 32.0]).collect(),
                    20,
                ),
            ],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CountingConfig {
    /// Scales `N = 2^e`.
    pub exponents: Vec<u32>,
    pub sigmas: Vec<i64>,
    pub exclude_degenerate: bool,
    /// Bound on `log(max count) / log N` under `--assert`.
    pub max_exponent: f64,
}

impl Default for CountingConfig {
    fn default() -> Self {
        Self {
            exponents: (4..=11).collect(),
            sigmas: vec![1, -1],
            exclude_degenerate: true,
            max_exponent: 0.4,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SelftestConfig {
    /// Tensor cache to verify, or to create when absent.
    pub tensor_cache: Option<PathBuf>,
    pub tensor_degree: usize,
}

impl Default for SelftestConfig {
    fn default() -> Self {
        Self {
            tensor_cache: None,
            tensor_degree: 16,
        }
    }
}
