//! Multilinear space-time forms on zonal data, evaluated exactly through
//! resonance sums over the triple-product tensor.
//!
//! With `u_j = S(t) f_j`, every form is a finite sum of terms
//! `χ̂(Ω − τ)·(coefficients)·(spatial kernel)` where `Ω = Σ ε_j μ_{n_j}` is
//! an integer resonance frequency. Grouping by `Ω` gives a
//! [`ResonanceSum`], which evaluates the form at any `τ` cheaply.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::sync::Arc;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::evolution::free_propagate;
use crate::quadrature::{composite_rule, gauss_legendre, gauss_rule_for_degree, QuadratureRule};
use crate::spectral::{bessel_potential, random_localized, DyadicBand, GridField, SpectralTransform, ZonalSpectrum};
use crate::tensor::TripleProductTensor;
use crate::zonal::{eigenvalue, eigenvalue_int, ZonalHarmonic};

const ZERO: Complex64 = Complex64 { re: 0.0, im: 0.0 };

/// Gaussian window `χ(t) = exp(−t²/(2σ²))`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Window {
    pub sigma: f64,
}

impl Default for Window {
    fn default() -> Self {
        Self { sigma: 1.0 }
    }
}

impl Window {
    pub fn new(sigma: f64) -> Result<Self> {
        if !(sigma > 0.0 && sigma.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "window width must be positive, got {sigma}"
            )));
        }
        Ok(Self { sigma })
    }

    pub fn chi(&self, t: f64) -> f64 {
        (-t * t / (2.0 * self.sigma * self.sigma)).exp()
    }

    /// `χ̂(ξ) = ∫ χ(t) e^{−itξ} dt = σ√(2π) exp(−σ²ξ²/2)`.
    pub fn chi_hat(&self, xi: f64) -> f64 {
        let s = self.sigma;
        s * (2.0 * std::f64::consts::PI).sqrt() * (-0.5 * s * s * xi * xi).exp()
    }

    /// `|ξ|` beyond which `χ̂(ξ)/χ̂(0) < 1e−30`.
    pub fn cutoff(&self) -> f64 {
        (2.0 * 30.0 * std::f64::consts::LN_10).sqrt() / self.sigma
    }
}

/// Product of the two smallest of four scales.
pub fn m_smallest_two(n1: f64, n2: f64, n3: f64, n4: f64) -> f64 {
    let mut s = [n1, n2, n3, n4];
    s.sort_by(f64::total_cmp);
    s[0] * s[1]
}

/// `Σ_Ω h_Ω χ̂(Ω − τ)` over integer frequencies `Ω`.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct ResonanceSum {
    terms: Vec<(i64, Complex64)>,
    omega_max: i64,
}

impl ResonanceSum {
    /// `omega_max` bounds `|Ω|` over every frequency the inputs could reach.
    pub fn new(terms: BTreeMap<i64, Complex64>, omega_max: i64) -> Self {
        Self {
            terms: terms.into_iter().filter(|(_, h)| *h != ZERO).collect(),
            omega_max,
        }
    }

    pub fn terms(&self) -> &[(i64, Complex64)] {
        &self.terms
    }

    pub fn omega_max(&self) -> i64 {
        self.omega_max
    }

    pub fn eval(&self, tau: f64, window: &Window) -> Complex64 {
        let cut = window.cutoff();
        let lo = self.terms.partition_point(|(w, _)| (*w as f64) < tau - cut);
        self.terms[lo..]
            .iter()
            .take_while(|(w, _)| (*w as f64) <= tau + cut)
            .map(|&(w, h)| h * window.chi_hat(w as f64 - tau))
            .sum()
    }

    pub fn sup_tau(&self, window: &Window) -> (f64, f64) {
        sup_tau(|t| self.eval(t, window), self.omega_max)
    }
}

/// `max |F(τ)|` over integers in `[−ω_max, ω_max]`, then over a 0.1 grid on
/// `[τ* − 1, τ* + 1]`. Ties keep the earliest candidate, starting from
/// `τ = 0`, so an identically zero form reports `(0, 0)`.
pub fn sup_tau(eval: impl Fn(f64) -> Complex64, omega_max: i64) -> (f64, f64) {
    let mut best = (0.0, eval(0.0).norm());
    for k in -omega_max.abs()..=omega_max.abs() {
        let v = eval(k as f64).norm();
        if v > best.1 {
            best = (k as f64, v);
        }
    }
    let center = best.0;
    for j in -10..=10 {
        let t = center + 0.1 * j as f64;
        let v = eval(t).norm();
        if v > best.1 {
            best = (t, v);
        }
    }
    best
}

fn check_degrees(fs: &[&ZonalSpectrum], tensor: &TripleProductTensor) -> Result<Vec<usize>> {
    let d: Vec<usize> = fs.iter().map(|f| f.support_degree()).collect();
    let max = tensor.max_degree();
    if let Some(&bad) = d.iter().find(|&&x| x > max) {
        return Err(Error::BandExceedsTensor { degree: bad, max });
    }
    Ok(d)
}

fn nonzero_modes(f: &ZonalSpectrum) -> Vec<(usize, Complex64)> {
    f.coeffs()
        .iter()
        .copied()
        .enumerate()
        .filter(|(_, c)| *c != ZERO)
        .collect()
}

/// `ω ↦ (coefficient of Z_p in the ω-component of u_a ū_b)_p`, i.e. the sum
/// of `c_a c̄_b G[a][b][p]` over modes with `μ_a − μ_b = ω`.
fn pair_profile(
    fa: &ZonalSpectrum,
    fb: &ZonalSpectrum,
    conj_b: bool,
    len: usize,
    tensor: &TripleProductTensor,
) -> BTreeMap<i64, Vec<Complex64>> {
    let mut out: BTreeMap<i64, Vec<Complex64>> = BTreeMap::new();
    let sign = if conj_b { -1 } else { 1 };
    for (a, ca) in nonzero_modes(fa) {
        for (b, cb) in nonzero_modes(fb) {
            let coef = ca * if conj_b { cb.conj() } else { cb };
            let w = eigenvalue_int(a) + sign * eigenvalue_int(b);
            let slot = out.entry(w).or_insert_with(|| vec![ZERO; len]);
            for (p, g) in tensor.fiber(a, b).take_while(|&(p, _)| p < len) {
                slot[p] += coef * g;
            }
        }
    }
    out
}

/// Resonance sum of `∫∫ χ(t) e^{itτ} (1 − Δ)^{−α}(u₁ū₂) u₃ū₄ dx dt`.
pub fn quadrilinear_sum(fs: [&ZonalSpectrum; 4], alpha: f64, tensor: &TripleProductTensor) -> Result<ResonanceSum> {
    let d = check_degrees(&fs, tensor)?;
    let top = (d[0] + d[1]).min(d[2] + d[3]);
    if top > tensor.max_degree() {
        return Err(Error::BandExceedsTensor {
            degree: top,
            max: tensor.max_degree(),
        });
    }
    let len = top + 1;
    let weights: Vec<f64> = (0..len).map(|p| (1.0 + eigenvalue(p)).powf(-alpha)).collect();
    let left = pair_profile(fs[0], fs[1], true, len, tensor);
    let right = pair_profile(fs[2], fs[3], true, len, tensor);
    let mut hist: BTreeMap<i64, Complex64> = BTreeMap::new();
    for (w1, a) in &left {
        let wa: Vec<Complex64> = a.iter().zip(&weights).map(|(x, w)| x * w).collect();
        for (w2, b) in &right {
            let k: Complex64 = wa.iter().zip(b).map(|(x, y)| x * y).sum();
            *hist.entry(w1 + w2).or_insert(ZERO) += k;
        }
    }
    let mu: Vec<i64> = d.iter().map(|&n| eigenvalue_int(n)).collect();
    let omega_max = mu[0].max(mu[1]) + mu[2].max(mu[3]);
    Ok(ResonanceSum::new(hist, omega_max))
}

pub fn quadrilinear_form(
    fs: [&ZonalSpectrum; 4],
    alpha: f64,
    tau: f64,
    window: &Window,
    tensor: &TripleProductTensor,
) -> Result<Complex64> {
    Ok(quadrilinear_sum(fs, alpha, tensor)?.eval(tau, window))
}

/// Which factor of a trilinear form is conjugated.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TrilinearPattern {
    /// `u₁u₂ū₃`
    #[default]
    ConjThird,
    /// `ū₁u₂u₃`
    ConjFirst,
}

impl TrilinearPattern {
    pub fn signs(&self) -> [i64; 3] {
        match self {
            Self::ConjThird => [1, 1, -1],
            Self::ConjFirst => [-1, 1, 1],
        }
    }
}

/// Resonance sum of `∫∫ χ(t) e^{itτ} u₁u₂ū₃ dx dt` (or `ū₁u₂u₃`).
pub fn trilinear_sum(
    fs: [&ZonalSpectrum; 3],
    pattern: TrilinearPattern,
    tensor: &TripleProductTensor,
) -> Result<ResonanceSum> {
    let d = check_degrees(&fs, tensor)?;
    let eps = pattern.signs();
    let c = |j: usize, v: Complex64| if eps[j] < 0 { v.conj() } else { v };
    let third: BTreeMap<usize, Complex64> = nonzero_modes(fs[2]).into_iter().collect();
    let mut hist: BTreeMap<i64, Complex64> = BTreeMap::new();
    for (n1, c1) in nonzero_modes(fs[0]) {
        for (n2, c2) in nonzero_modes(fs[1]) {
            let c12 = c(0, c1) * c(1, c2);
            let w12 = eps[0] * eigenvalue_int(n1) + eps[1] * eigenvalue_int(n2);
            for (n3, g) in tensor.fiber(n1, n2) {
                if let Some(&c3) = third.get(&n3) {
                    *hist.entry(w12 + eps[2] * eigenvalue_int(n3)).or_insert(ZERO) += c12 * c(2, c3) * g;
                }
            }
        }
    }
    let omega_max = d.iter().map(|&n| eigenvalue_int(n)).sum();
    Ok(ResonanceSum::new(hist, omega_max))
}

pub fn trilinear_form(
    fs: [&ZonalSpectrum; 3],
    tau: f64,
    window: &Window,
    pattern: TrilinearPattern,
    tensor: &TripleProductTensor,
) -> Result<Complex64> {
    Ok(trilinear_sum(fs, pattern, tensor)?.eval(tau, window))
}

/// `∫₀¹ e^{ixt} dt`.
fn unit_interval_exp(x: f64) -> Complex64 {
    if x.abs() < 1e-6 {
        Complex64::new(1.0 - x * x / 6.0, x / 2.0)
    } else {
        (Complex64::from_polar(1.0, x) - 1.0) / Complex64::new(0.0, x)
    }
}

/// `‖(1 − Δ)^{−α/2}(u₁u₂)‖_{L²((0,1)×S⁴)}` with the time integral done in
/// closed form.
pub fn bilinear_spacetime_norm(
    f1: &ZonalSpectrum,
    f2: &ZonalSpectrum,
    alpha: f64,
    tensor: &TripleProductTensor,
) -> Result<f64> {
    let d = check_degrees(&[f1, f2], tensor)?;
    let top = d[0] + d[1];
    if top > tensor.max_degree() {
        return Err(Error::BandExceedsTensor {
            degree: top,
            max: tensor.max_degree(),
        });
    }
    let len = top + 1;
    let weights: Vec<f64> = (0..len).map(|p| (1.0 + eigenvalue(p)).powf(-alpha)).collect();
    let prof: Vec<(i64, Vec<Complex64>)> = pair_profile(f1, f2, false, len, tensor).into_iter().collect();
    let mut total = 0.0;
    for (i, (w1, a)) in prof.iter().enumerate() {
        let wa: Vec<Complex64> = a.iter().zip(&weights).map(|(x, w)| x * w).collect();
        for (w2, b) in &prof[i..] {
            let inner: Complex64 = wa.iter().zip(b).map(|(x, y)| x * y.conj()).sum();
            let v = inner * unit_interval_exp((w2 - w1) as f64);
            total += if w1 == w2 { v.re } else { 2.0 * v.re };
        }
    }
    Ok(total.max(0.0).sqrt())
}

/// `∫ |Z_p Z_q Z_l| dx` on a composite rule, checked against the rule with
/// twice the panels.
pub fn zonal_trilinear_l1(p: usize, q: usize, l: usize, panels: usize, per_panel: usize) -> Result<f64> {
    let top = p.max(q).max(l);
    if panels < 4 * top.max(1) {
        return Err(Error::InvalidParameter(format!(
            "{panels} panels cannot resolve degree {top}; need at least {}",
            4 * top.max(1)
        )));
    }
    let (zp, zq, zl) = (ZonalHarmonic::new(p), ZonalHarmonic::new(q), ZonalHarmonic::new(l));
    let eval =
        |rule: &QuadratureRule| -> f64 { rule.integrate_fn(|t| (zp.value(t) * zq.value(t) * zl.value(t)).abs()) };
    let coarse = eval(&composite_rule(panels, per_panel));
    let fine = eval(&composite_rule(2 * panels, per_panel));
    let gap = (coarse - fine).abs() / fine.abs().max(f64::MIN_POSITIVE);
    if gap > 1e-5 {
        return Err(Error::UnderResolved(gap));
    }
    Ok(fine)
}

/// Least-squares fit of `log value` against `log m`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FitReport {
    pub slope: f64,
    pub intercept: f64,
    pub max_residual: f64,
    pub n_samples: usize,
    /// Samples dropped because their value was zero.
    #[serde(default, skip_serializing_if = "is_zero")]
    pub excluded: usize,
}

fn is_zero(v: &usize) -> bool {
    *v == 0
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FormKind {
    Bilinear,
    Trilinear,
    Quadrilinear,
    ZonalL1,
}

impl FormKind {
    pub fn arity(&self) -> usize {
        match self {
            Self::Bilinear => 2,
            Self::Trilinear | Self::ZonalL1 => 3,
            Self::Quadrilinear => 4,
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            Self::Bilinear => "bilinear",
            Self::Trilinear => "trilinear",
            Self::Quadrilinear => "quadrilinear",
            Self::ZonalL1 => "zonal_l1",
        }
    }

    /// The scale the form is fitted against.
    pub fn m_value(&self, bands: &[f64]) -> f64 {
        match self {
            Self::Quadrilinear => m_smallest_two(bands[0], bands[1], bands[2], bands[3]),
            _ => bands.iter().copied().fold(f64::INFINITY, f64::min),
        }
    }
}

/// One evaluated form: the max over draws for one band tuple.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EstimateSample {
    pub kind: FormKind,
    pub alpha: f64,
    /// Dyadic scales, or degrees for [`FormKind::ZonalL1`].
    pub bands: Vec<f64>,
    pub m: f64,
    pub tau_star: Option<f64>,
    pub value: f64,
    pub seed: u64,
}

/// OLS on `(log m, log value)`; zero values are dropped and counted in
/// [`FitReport::excluded`].
pub fn exponent_fit(samples: &[EstimateSample]) -> Result<FitReport> {
    let points: Vec<(f64, f64)> = samples
        .iter()
        .filter(|s| s.value > 0.0)
        .map(|s| (s.m.ln(), s.value.ln()))
        .collect();
    let excluded = samples.len() - points.len();
    let mut ms: Vec<f64> = points.iter().map(|p| p.0).collect();
    ms.sort_by(f64::total_cmp);
    ms.dedup();
    if ms.len() < 3 {
        return Err(Error::DegenerateDesign(ms.len()));
    }
    let n = points.len() as f64;
    let mx = points.iter().map(|p| p.0).sum::<f64>() / n;
    let my = points.iter().map(|p| p.1).sum::<f64>() / n;
    let sxy: f64 = points.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = points.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let max_residual = points
        .iter()
        .map(|p| (p.1 - slope * p.0 - intercept).abs())
        .fold(0.0, f64::max);
    Ok(FitReport {
        slope,
        intercept,
        max_residual,
        n_samples: points.len(),
        excluded,
    })
}

/// A scan over band tuples with random localized probes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScanSpec {
    pub kind: FormKind,
    #[serde(default)]
    pub alpha: f64,
    /// One entry per tuple: dyadic scales, or `(p, q, l)` degrees for
    /// [`FormKind::ZonalL1`].
    pub bands: Vec<Vec<f64>>,
    #[serde(default = "one")]
    pub draws: usize,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub window: Window,
    #[serde(default)]
    pub pattern: TrilinearPattern,
    /// Panels per unit degree for [`FormKind::ZonalL1`].
    #[serde(default = "default_panels")]
    pub panels_per_degree: usize,
}

fn one() -> usize {
    1
}

fn default_panels() -> usize {
    32
}

impl ScanSpec {
    pub fn new(kind: FormKind, alpha: f64, bands: Vec<Vec<f64>>, draws: usize, seed: u64) -> Self {
        Self {
            kind,
            alpha,
            bands,
            draws,
            seed,
            window: Window::default(),
            pattern: TrilinearPattern::default(),
            panels_per_degree: 32,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.bands.is_empty() {
            return Err(Error::InvalidParameter("empty band schedule".into()));
        }
        if self.draws == 0 {
            return Err(Error::InvalidParameter("draws must be at least 1".into()));
        }
        Window::new(self.window.sigma)?;
        let arity = self.kind.arity();
        for t in &self.bands {
            if t.len() != arity {
                return Err(Error::InvalidParameter(format!(
                    "{} takes {arity} bands, got {t:?}",
                    self.kind.name()
                )));
            }
            if self.kind != FormKind::ZonalL1 {
                for &n in t {
                    if n < 1.0 {
                        return Err(Error::InvalidParameter(format!("band scale {n} below 1")));
                    }
                    DyadicBand(n).top_degree()?;
                }
            } else if t.iter().any(|&p| p < 0.0 || p.fract() != 0.0) {
                return Err(Error::InvalidParameter(format!(
                    "degrees must be nonnegative integers, got {t:?}"
                )));
            }
        }
        Ok(())
    }

    /// Smallest tensor degree that evaluates every tuple without truncation.
    pub fn required_tensor_degree(&self) -> Result<usize> {
        let mut need = 0;
        for t in &self.bands {
            let d: Vec<usize> = t.iter().map(|&n| DyadicBand(n).top_degree()).collect::<Result<_>>()?;
            let n = match self.kind {
                FormKind::Bilinear => d[0] + d[1],
                FormKind::Trilinear => *d.iter().max().expect("nonempty"),
                FormKind::Quadrilinear => (d[0] + d[1]).min(d[2] + d[3]).max(*d.iter().max().expect("nonempty")),
                FormKind::ZonalL1 => 0,
            };
            need = need.max(n);
        }
        Ok(need)
    }
}

fn splitmix(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9e37_79b9_7f4a_7c15);
    x = (x ^ (x >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    x = (x ^ (x >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    x ^ (x >> 31)
}

/// Seed of draw `draw` for tuple `tuple`; each probe `j` then uses
/// `probe_seed(draw_seed, j)`.
pub fn draw_seed(seed: u64, tuple: usize, draw: usize) -> u64 {
    splitmix(splitmix(splitmix(seed) ^ tuple as u64) ^ draw as u64)
}

pub fn probe_seed(draw_seed: u64, j: usize) -> u64 {
    splitmix(draw_seed ^ (0x5eed_0000 + j as u64))
}

/// Tensor for degrees `≤ max_degree` on the smallest exact Gauss rule.
pub fn build_tensor(max_degree: usize) -> Result<TripleProductTensor> {
    TripleProductTensor::build(max_degree, &gauss_rule_for_degree(3 * max_degree))
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScanResult {
    pub samples: Vec<EstimateSample>,
    pub fit: Result<FitReport>,
}

fn evaluate_draw(
    spec: &ScanSpec,
    bands: &[f64],
    seed: u64,
    tensor: &TripleProductTensor,
) -> Result<(Option<f64>, f64)> {
    let probes: Vec<ZonalSpectrum> = bands
        .iter()
        .enumerate()
        .map(|(j, &n)| random_localized(DyadicBand(n), probe_seed(seed, j)))
        .collect::<Result<_>>()?;
    match spec.kind {
        FormKind::Bilinear => Ok((
            None,
            bilinear_spacetime_norm(&probes[0], &probes[1], spec.alpha, tensor)?,
        )),
        FormKind::Trilinear => {
            let s = trilinear_sum([&probes[0], &probes[1], &probes[2]], spec.pattern, tensor)?;
            let (t, v) = s.sup_tau(&spec.window);
            Ok((Some(t), v))
        }
        FormKind::Quadrilinear => {
            let s = quadrilinear_sum([&probes[0], &probes[1], &probes[2], &probes[3]], spec.alpha, tensor)?;
            let (t, v) = s.sup_tau(&spec.window);
            Ok((Some(t), v))
        }
        FormKind::ZonalL1 => unreachable!("zonal L1 has no probes"),
    }
}

/// Evaluates every tuple of `spec`, keeping the max over draws, and fits the
/// exponent. `tensor` is built when not supplied.
pub fn estimate_scan(spec: &ScanSpec, tensor: Option<Arc<TripleProductTensor>>) -> Result<ScanResult> {
    spec.validate()?;
    let samples = if spec.kind == FormKind::ZonalL1 {
        spec.bands
            .par_iter()
            .map(|t| {
                let [p, q, l] = [t[0] as usize, t[1] as usize, t[2] as usize];
                let top = p.max(q).max(l).max(1);
                let value = zonal_trilinear_l1(p, q, l, spec.panels_per_degree * top, 8)?;
                Ok(EstimateSample {
                    kind: spec.kind,
                    alpha: spec.alpha,
                    bands: t.clone(),
                    m: (p.min(q).min(l)) as f64,
                    tau_star: None,
                    value,
                    seed: spec.seed,
                })
            })
            .collect::<Result<Vec<_>>>()?
    } else {
        let need = spec.required_tensor_degree()?;
        let tensor = match tensor {
            Some(t) if t.max_degree() >= need => t,
            Some(t) => {
                return Err(Error::BandExceedsTensor {
                    degree: need,
                    max: t.max_degree(),
                })
            }
            None => Arc::new(build_tensor(need)?),
        };
        let jobs: Vec<(usize, usize)> = (0..spec.bands.len())
            .flat_map(|i| (0..spec.draws).map(move |d| (i, d)))
            .collect();
        let values: Vec<(usize, u64, Option<f64>, f64)> = jobs
            .par_iter()
            .map(|&(i, d)| {
                let seed = draw_seed(spec.seed, i, d);
                let (t, v) = evaluate_draw(spec, &spec.bands[i], seed, &tensor)?;
                Ok((i, seed, t, v))
            })
            .collect::<Result<_>>()?;
        let mut best: Vec<Option<(u64, Option<f64>, f64)>> = vec![None; spec.bands.len()];
        for (i, seed, t, v) in values {
            if best[i].is_none_or(|b| v > b.2) {
                best[i] = Some((seed, t, v));
            }
        }
        best.into_iter()
            .zip(&spec.bands)
            .map(|(b, bands)| {
                let (seed, tau_star, value) = b.expect("draws ≥ 1");
                EstimateSample {
                    kind: spec.kind,
                    alpha: spec.alpha,
                    bands: bands.clone(),
                    m: spec.kind.m_value(bands),
                    tau_star,
                    value,
                    seed,
                }
            })
            .collect()
    };
    let fit = exponent_fit(&samples);
    Ok(ScanResult { samples, fit })
}

/// CSV with columns `kind, alpha, N1..N4, m, tau_star, value, seed`.
pub fn scan_csv(samples: &[EstimateSample]) -> String {
    let mut out = String::from("kind,alpha,N1,N2,N3,N4,m,tau_star,value,seed\n");
    for s in samples {
        let mut bands = [String::new(), String::new(), String::new(), String::new()];
        for (slot, b) in bands.iter_mut().zip(&s.bands) {
            *slot = b.to_string();
        }
        let tau = s.tau_star.map(|t| t.to_string()).unwrap_or_default();
        writeln!(
            out,
            "{},{},{},{},{},{},{},{tau},{},{}",
            s.kind.name(),
            s.alpha,
            bands[0],
            bands[1],
            bands[2],
            bands[3],
            s.m,
            s.value,
            s.seed
        )
        .expect("writing to a String");
    }
    out
}

/// Direct space-time quadrature of the same forms: trapezoid in `t` and
/// exact Gauss quadrature in space. Slow; used as a correctness oracle.
pub mod brute_force {
    use super::*;

    struct Grid {
        transform: SpectralTransform,
    }

    impl Grid {
        fn new(table_degree: usize, integrand_degree: usize) -> Result<Self> {
            let rule = Arc::new(gauss_rule_for_degree(integrand_degree.max(2 * table_degree)));
            Ok(Self {
                transform: SpectralTransform::new(rule, table_degree)?,
            })
        }

        fn at(&self, f: &ZonalSpectrum, t: f64) -> Result<GridField> {
            self.transform.synthesize(&free_propagate(f, t))
        }
    }

    /// Trapezoid nodes on `[−8σ, 8σ]` with spacing ≤ `0.5/ω_max`.
    fn time_nodes(window: &Window, omega_max: f64) -> Vec<(f64, f64)> {
        let span = 16.0 * window.sigma;
        let h = (0.5 / omega_max.max(1.0)).min(0.02 * window.sigma);
        let n = (span / h).ceil() as usize;
        let h = span / n as f64;
        (0..=n)
            .map(|k| {
                let w = if k == 0 || k == n { 0.5 * h } else { h };
                (-8.0 * window.sigma + k as f64 * h, w)
            })
            .collect()
    }

    fn conj_mul(u: &GridField, v: &GridField) -> Vec<Complex64> {
        u.values().iter().zip(v.values()).map(|(a, b)| a * b.conj()).collect()
    }

    pub fn quadrilinear(fs: [&ZonalSpectrum; 4], alpha: f64, tau: f64, window: &Window) -> Result<Complex64> {
        let d: Vec<usize> = fs.iter().map(|f| f.support_degree()).collect();
        let top = d[0] + d[1];
        let grid = Grid::new(top.max(d[2]).max(d[3]), 2 * top + d[2] + d[3])?;
        let rule = grid.transform.rule();
        let omega: f64 = d.iter().map(|&n| eigenvalue(n)).sum();
        let mut acc = ZERO;
        for (t, w) in time_nodes(window, omega) {
            let u: Vec<GridField> = fs.iter().map(|f| grid.at(f, t)).collect::<Result<_>>()?;
            let density = GridField::new(conj_mul(&u[0], &u[1]), rule)?;
            let coeffs = grid.transform.analyze(&density, top)?;
            let v = grid.transform.synthesize(&bessel_potential(&coeffs, -alpha))?;
            let integrand: Vec<Complex64> = conj_mul(&u[2], &u[3])
                .iter()
                .zip(v.values())
                .map(|(a, b)| a * b)
                .collect();
            acc += w * window.chi(t) * Complex64::from_polar(1.0, t * tau) * rule.integrate(&integrand)?;
        }
        Ok(acc)
    }

    pub fn trilinear(
        fs: [&ZonalSpectrum; 3],
        tau: f64,
        window: &Window,
        pattern: TrilinearPattern,
    ) -> Result<Complex64> {
        let d: Vec<usize> = fs.iter().map(|f| f.support_degree()).collect();
        let top = *d.iter().max().expect("three inputs");
        let grid = Grid::new(top, d.iter().sum())?;
        let rule = grid.transform.rule();
        let omega: f64 = d.iter().map(|&n| eigenvalue(n)).sum();
        let eps = pattern.signs();
        let mut acc = ZERO;
        for (t, w) in time_nodes(window, omega) {
            let mut prod = vec![Complex64::new(1.0, 0.0); rule.len()];
            for (j, f) in fs.iter().enumerate() {
                let u = grid.at(f, t)?;
                for (p, z) in prod.iter_mut().zip(u.values()) {
                    *p *= if eps[j] < 0 { z.conj() } else { *z };
                }
            }
            acc += w * window.chi(t) * Complex64::from_polar(1.0, t * tau) * rule.integrate(&prod)?;
        }
        Ok(acc)
    }

    /// Composite Gauss–Legendre in `t` on `[0, 1]`.
    pub fn bilinear(f1: &ZonalSpectrum, f2: &ZonalSpectrum, alpha: f64) -> Result<f64> {
        let top = f1.support_degree() + f2.support_degree();
        let grid = Grid::new(top, 2 * top)?;
        let rule = grid.transform.rule();
        let omega = eigenvalue(f1.support_degree()) + eigenvalue(f2.support_degree());
        let panels = (omega / 2.0).ceil() as usize + 1;
        let (x, wx) = gauss_legendre(24);
        let h = 1.0 / panels as f64;
        let mut acc = 0.0;
        for k in 0..panels {
            for (xi, wi) in x.iter().zip(&wx) {
                let t = h * (k as f64 + 0.5 * (xi + 1.0));
                let (u1, u2) = (grid.at(f1, t)?, grid.at(f2, t)?);
                let prod: Vec<Complex64> = u1.values().iter().zip(u2.values()).map(|(a, b)| a * b).collect();
                let coeffs = grid.transform.analyze(&GridField::new(prod, rule)?, top)?;
                let v = grid.transform.synthesize(&bessel_potential(&coeffs, -0.5 * alpha))?;
                let sq: Vec<f64> = v.values().iter().map(|z| z.norm_sqr()).collect();
                acc += 0.5 * h * wi * rule.integrate_real(&sq)?;
            }
        }
        Ok(acc.sqrt())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quadrature::gauss_rule;
    use crate::zonal::zonal_value;
    use std::f64::consts::PI;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn tensor(p: usize) -> TripleProductTensor {
        build_tensor(p).unwrap()
    }

    #[test]
    fn m_examples() {
        assert_eq!(m_smallest_two(1.0, 1.0, 1.0, 1.0), 1.0);
        assert_eq!(m_smallest_two(2.0, 8.0, 4.0, 16.0), 8.0);
        assert_eq!(m_smallest_two(5.0, 5.0, 5.0, 5.0), 25.0);
    }

    #[test]
    fn window_transform() {
        let w = Window::default();
        let (x, wx) = gauss_legendre(200);
        for xi in [0.0, 0.7, 2.5] {
            let num: f64 = x
                .iter()
                .zip(&wx)
                .map(|(s, ws)| 10.0 * ws * w.chi(10.0 * s) * (10.0 * s * xi).cos())
                .sum();
            assert!((num - w.chi_hat(xi)).abs() < 1e-12);
        }
        assert!(w.chi_hat(1.0) < w.chi_hat(0.5) && w.chi_hat(-1.0) == w.chi_hat(1.0));
        assert!(Window::new(0.0).is_err());
    }

    #[test]
    fn constant_inputs() {
        let t = tensor(4);
        let w = Window::default();
        let z0 = ZonalSpectrum::unit(0, 0);
        let q = quadrilinear_form([&z0; 4], 0.7, 0.0, &w, &t).unwrap();
        let want = w.chi_hat(0.0) * 3.0 / (8.0 * PI * PI);
        assert!((q - want).norm() < 1e-14);
        let b = bilinear_spacetime_norm(&z0, &z0, 1.3, &t).unwrap();
        assert!((b - (3.0 / (8.0 * PI * PI)).sqrt()).abs() < 1e-14);
        let zero = ZonalSpectrum::zeros(2);
        assert_eq!(
            quadrilinear_form([&z0, &zero, &z0, &z0], 0.7, 0.0, &w, &t).unwrap(),
            ZERO
        );
        assert_eq!(bilinear_spacetime_norm(&z0, &zero, 1.0, &t).unwrap(), 0.0);
        assert_eq!(
            trilinear_form([&zero, &z0, &z0], 0.0, &w, TrilinearPattern::ConjThird, &t).unwrap(),
            ZERO
        );
    }

    #[test]
    fn selection_rule_kills_trilinear() {
        let t = tensor(6);
        let w = Window::default();
        let (z1, z2, z5) = (
            ZonalSpectrum::unit(1, 1),
            ZonalSpectrum::unit(2, 2),
            ZonalSpectrum::unit(5, 5),
        );
        let s = trilinear_sum([&z1, &z2, &z5], TrilinearPattern::ConjThird, &t).unwrap();
        assert!(s.terms().is_empty());
        for tau in [-30.0, 0.0, 12.0] {
            assert_eq!(
                trilinear_form([&z1, &z2, &z5], tau, &w, TrilinearPattern::ConjFirst, &t).unwrap(),
                ZERO
            );
        }
    }

    #[test]
    fn quadrilinear_matches_brute_force() {
        let t = tensor(12);
        let w = Window::default();
        let bands = [2.0, 2.0, 4.0, 4.0];
        for seed in 0..3 {
            let fs: Vec<ZonalSpectrum> = bands
                .iter()
                .enumerate()
                .map(|(j, &n)| random_localized(DyadicBand(n), 10 * seed + j as u64).unwrap())
                .collect();
            let r = [&fs[0], &fs[1], &fs[2], &fs[3]];
            let sum = quadrilinear_sum(r, 2.0 / 3.0, &t).unwrap();
            let (tau_star, _) = sum.sup_tau(&w);
            for tau in [0.0, tau_star, 7.3] {
                let fast = sum.eval(tau, &w);
                let slow = brute_force::quadrilinear(r, 2.0 / 3.0, tau, &w).unwrap();
                assert!((fast - slow).norm() <= 1e-6 * slow.norm().max(1e-12), "{fast} {slow}");
            }
        }
    }

    #[test]
    fn trilinear_matches_brute_force() {
        let t = tensor(6);
        let w = Window::default();
        for seed in 0..3 {
            let fs: Vec<ZonalSpectrum> = (0..3)
                .map(|j| random_localized(DyadicBand(2.0), 7 * seed + j).unwrap())
                .collect();
            for pattern in [TrilinearPattern::ConjThird, TrilinearPattern::ConjFirst] {
                let r = [&fs[0], &fs[1], &fs[2]];
                let sum = trilinear_sum(r, pattern, &t).unwrap();
                let (tau_star, _) = sum.sup_tau(&w);
                for tau in [0.0, tau_star] {
                    let fast = sum.eval(tau, &w);
                    let slow = brute_force::trilinear(r, tau, &w, pattern).unwrap();
                    assert!((fast - slow).norm() <= 1e-6 * slow.norm(), "{fast} {slow}");
                }
            }
        }
    }

    #[test]
    fn bilinear_matches_brute_force() {
        let t = tensor(12);
        for seed in 0..3 {
            let f1 = random_localized(DyadicBand(2.0), seed).unwrap();
            let f2 = random_localized(DyadicBand(4.0), seed + 100).unwrap();
            for alpha in [0.0, 1.0] {
                let fast = bilinear_spacetime_norm(&f1, &f2, alpha, &t).unwrap();
                let slow = brute_force::bilinear(&f1, &f2, alpha).unwrap();
                assert!((fast - slow).abs() <= 1e-8 * slow, "{fast} {slow}");
            }
        }
    }

    #[test]
    fn form_symmetries() {
        let t = tensor(12);
        let w = Window::default();
        let fs: Vec<ZonalSpectrum> = [2.0, 4.0, 2.0, 4.0]
            .iter()
            .enumerate()
            .map(|(j, &n)| random_localized(DyadicBand(n), 40 + j as u64).unwrap())
            .collect();
        let lam = c(0.3, -1.7);
        let f0s = fs[0].scaled(lam);
        for tau in [0.0, 3.0, -11.5] {
            let base = quadrilinear_form([&fs[0], &fs[1], &fs[2], &fs[3]], 0.5, tau, &w, &t).unwrap();
            let scaled = quadrilinear_form([&f0s, &fs[1], &fs[2], &fs[3]], 0.5, tau, &w, &t).unwrap();
            assert!((scaled - lam * base).norm() < 1e-12 * base.norm().max(1e-3));
            let swapped = quadrilinear_form([&fs[1], &fs[0], &fs[3], &fs[2]], 0.5, -tau, &w, &t).unwrap();
            assert!((swapped - base.conj()).norm() < 1e-12 * base.norm().max(1e-3));
        }
    }

    #[test]
    fn tensor_degree_is_enforced() {
        let t = tensor(4);
        let f = random_localized(DyadicBand(4.0), 1).unwrap();
        let g = random_localized(DyadicBand(2.0), 1).unwrap();
        assert!(matches!(
            quadrilinear_sum([&f, &g, &g, &g], 1.0, &t),
            Err(Error::BandExceedsTensor { .. })
        ));
        assert!(matches!(
            bilinear_spacetime_norm(&g, &g, 1.0, &tensor(3)),
            Err(Error::BandExceedsTensor { degree: 4, max: 3 })
        ));
    }

    #[test]
    fn sup_tau_cases() {
        let w = Window::default();
        let mut terms = BTreeMap::new();
        terms.insert(17, c(0.0, 2.0));
        let s = ResonanceSum::new(terms, 40);
        let (t, v) = s.sup_tau(&w);
        assert!((t - 17.0).abs() <= 0.1);
        assert!((v - 2.0 * w.chi_hat(0.0)).abs() < 1e-12);
        assert!(v >= s.eval(0.0, &w).norm());
        assert_eq!(ResonanceSum::new(BTreeMap::new(), 40).sup_tau(&w), (0.0, 0.0));
    }

    fn exact_l1(p: usize, q: usize, l: usize) -> f64 {
        // integrand is a fixed-sign polynomial between consecutive zeros
        let mut cuts: Vec<f64> = vec![0.0, PI];
        for n in [p, q, l] {
            if n > 0 {
                cuts.extend_from_slice(gauss_rule(n).nodes());
            }
        }
        cuts.sort_by(f64::total_cmp);
        let (x, w) = gauss_legendre((p + q + l) / 2 + 3);
        let mut total = 0.0;
        for pair in cuts.windows(2) {
            let (a, b) = (pair[0].cos(), pair[1].cos());
            let half = 0.5 * (a - b);
            for (xi, wi) in x.iter().zip(&w) {
                let xx = b + half * (xi + 1.0);
                let th = xx.acos();
                let v = (zonal_value(p, th) * zonal_value(q, th) * zonal_value(l, th)).abs();
                total += half * wi * 2.0 * PI * PI * (1.0 - xx * xx) * v;
            }
        }
        total
    }

    #[test]
    fn zonal_l1_cases() {
        let z0 = (3.0 / (8.0 * PI * PI)).sqrt();
        let v = zonal_trilinear_l1(0, 5, 5, 64, 8).unwrap();
        assert!((v - z0).abs() < 1e-6);
        let a = zonal_trilinear_l1(3, 5, 7, 224, 8).unwrap();
        let b = zonal_trilinear_l1(7, 3, 5, 224, 8).unwrap();
        assert!((a - b).abs() < 1e-10);
        for (p, q, l) in [(4, 4, 4), (3, 8, 9), (16, 16, 16)] {
            let v = zonal_trilinear_l1(p, q, l, 32 * p.max(q).max(l), 8).unwrap();
            let e = exact_l1(p, q, l);
            assert!((v - e).abs() < 1e-5 * e, "{p} {q} {l}: {v} {e}");
        }
        assert!(zonal_trilinear_l1(10, 10, 10, 8, 8).is_err());
    }

    #[test]
    fn exponent_fit_cases() {
        let mk = |m: f64, v: f64| EstimateSample {
            kind: FormKind::Quadrilinear,
            alpha: 0.0,
            bands: vec![],
            m,
            tau_star: None,
            value: v,
            seed: 0,
        };
        let s: Vec<_> = [1.0, 2.0, 4.0, 8.0, 16.0]
            .iter()
            .map(|&m| mk(m, f64::powf(m, 0.75)))
            .collect();
        let r = exponent_fit(&s).unwrap();
        assert!((r.slope - 0.75).abs() < 1e-12 && r.intercept.abs() < 1e-12);
        let s: Vec<_> = [1.0, 3.0, 9.0].iter().map(|&m| mk(m, 3.0 * m.sqrt())).collect();
        let r = exponent_fit(&s).unwrap();
        assert!((r.slope - 0.5).abs() < 1e-12 && (r.intercept - 3f64.ln()).abs() < 1e-12);
        assert!(matches!(
            exponent_fit(&[mk(2.0, 1.0), mk(2.0, 3.0), mk(2.0, 4.0)]),
            Err(Error::DegenerateDesign(1))
        ));
        let mut s: Vec<_> = [1.0, 2.0, 4.0].iter().map(|&m| mk(m, m)).collect();
        s.push(mk(8.0, 0.0));
        assert_eq!(exponent_fit(&s).unwrap().excluded, 1);
    }

    #[test]
    fn scan_determinism_and_monotone_draws() {
        let bands = vec![
            vec![1.0, 2.0, 2.0, 2.0],
            vec![2.0, 2.0, 4.0, 4.0],
            vec![1.0, 1.0, 4.0, 4.0],
        ];
        let spec = ScanSpec::new(FormKind::Quadrilinear, 2.0 / 3.0, bands, 1, 9);
        let a = estimate_scan(&spec, None).unwrap();
        let b = estimate_scan(&spec, None).unwrap();
        assert_eq!(a.samples, b.samples);
        assert_eq!(scan_csv(&a.samples), scan_csv(&b.samples));
        let more = estimate_scan(
            &ScanSpec {
                draws: 4,
                ..spec.clone()
            },
            None,
        )
        .unwrap();
        for (x, y) in a.samples.iter().zip(&more.samples) {
            assert!(y.value >= x.value);
        }
        let csv = scan_csv(&a.samples);
        assert!(csv.starts_with("kind,alpha,N1,N2,N3,N4,m,tau_star,value,seed\n"));
        let tri = ScanSpec::new(FormKind::Trilinear, 0.0, vec![vec![2.0, 2.0, 2.0]], 1, 0);
        assert!(scan_csv(&estimate_scan(&tri, None).unwrap().samples)
            .lines()
            .nth(1)
            .unwrap()
            .contains(",2,2,2,,"));
    }

    #[test]
    fn scan_validation() {
        let bad = ScanSpec::new(FormKind::Quadrilinear, 1.0, vec![vec![2.0, 2.0]], 1, 0);
        assert!(estimate_scan(&bad, None).is_err());
        let empty = ScanSpec::new(FormKind::Bilinear, 1.0, vec![vec![1.1, 2.0]], 1, 0);
        assert!(matches!(estimate_scan(&empty, None), Err(Error::EmptyBand(_))));
    }
}
