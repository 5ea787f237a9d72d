//! Zonal fields in spectral and grid form.
//!
//! All Sobolev-type weights use the single convention `1 + μ_p` with
//! `μ_p = p(p + 3)`: norms weight `|c_p|²` by `(1 + μ_p)^s`, the Bessel
//! potential multiplies by `(1 + μ_p)^e`, and a dyadic band `N` holds the
//! degrees with `√(1 + μ_p) ∈ [N, 2N]`.

use std::sync::Arc;

use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::quadrature::{QuadratureRule, S4_AREA};
use crate::zonal::{eigenvalue, ZonalTable};

/// Coefficients `c_0 … c_P` in the orthonormal basis `{Z_p}`.
#[derive(Debug, Clone, PartialEq)]
pub struct ZonalSpectrum {
    coeffs: Vec<Complex64>,
}

impl ZonalSpectrum {
    /// # Panics
    /// If `coeffs` is empty.
    pub fn new(coeffs: Vec<Complex64>) -> Self {
        assert!(!coeffs.is_empty(), "spectrum needs at least the degree-0 coefficient");
        Self { coeffs }
    }

    pub fn zeros(max_degree: usize) -> Self {
        Self::new(vec![Complex64::new(0.0, 0.0); max_degree + 1])
    }

    /// `Z_p` itself, padded to `max_degree`.
    pub fn unit(p: usize, max_degree: usize) -> Self {
        assert!(p <= max_degree);
        let mut s = Self::zeros(max_degree);
        s.coeffs[p] = Complex64::new(1.0, 0.0);
        s
    }

    /// The spatially constant field with value `value` at every point.
    pub fn constant(value: Complex64, max_degree: usize) -> Self {
        let mut s = Self::zeros(max_degree);
        s.coeffs[0] = value * S4_AREA.sqrt();
        s
    }

    pub fn max_degree(&self) -> usize {
        self.coeffs.len() - 1
    }

    pub fn coeffs(&self) -> &[Complex64] {
        &self.coeffs
    }

    pub fn coeffs_mut(&mut self) -> &mut [Complex64] {
        &mut self.coeffs
    }

    pub fn into_coeffs(self) -> Vec<Complex64> {
        self.coeffs
    }

    /// Largest degree with a nonzero coefficient (0 for the zero field).
    pub fn support_degree(&self) -> usize {
        self.coeffs
            .iter()
            .rposition(|c| *c != Complex64::new(0.0, 0.0))
            .unwrap_or(0)
    }

    /// Same field, truncated or zero-padded to `max_degree`.
    pub fn resized(&self, max_degree: usize) -> Self {
        let mut c = self.coeffs.clone();
        c.resize(max_degree + 1, Complex64::new(0.0, 0.0));
        Self::new(c)
    }

    /// `Σ |c_p|²`, the squared L² norm.
    pub fn mass(&self) -> f64 {
        self.coeffs.iter().map(|c| c.norm_sqr()).sum()
    }

    pub fn l2_norm(&self) -> f64 {
        self.mass().sqrt()
    }

    /// `Σ a_p conj(b_p)` over common degrees.
    pub fn inner(&self, other: &Self) -> Complex64 {
        self.coeffs.iter().zip(&other.coeffs).map(|(a, b)| a * b.conj()).sum()
    }

    pub fn scaled(&self, s: Complex64) -> Self {
        Self::new(self.coeffs.iter().map(|c| c * s).collect())
    }

    /// Sum, padded to the larger degree.
    pub fn add(&self, other: &Self) -> Self {
        let n = self.coeffs.len().max(other.coeffs.len());
        let zero = Complex64::new(0.0, 0.0);
        Self::new(
            (0..n)
                .map(|p| self.coeffs.get(p).copied().unwrap_or(zero) + other.coeffs.get(p).copied().unwrap_or(zero))
                .collect(),
        )
    }

    /// `max_p |a_p − b_p|`.
    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        let zero = Complex64::new(0.0, 0.0);
        let n = self.coeffs.len().max(other.coeffs.len());
        (0..n)
            .map(|p| {
                (self.coeffs.get(p).copied().unwrap_or(zero) - other.coeffs.get(p).copied().unwrap_or(zero)).norm()
            })
            .fold(0.0, f64::max)
    }

    fn map_weighted(&self, weight: impl Fn(usize) -> f64) -> Self {
        Self::new(self.coeffs.iter().enumerate().map(|(p, c)| c * weight(p)).collect())
    }
}

/// Field values at the nodes of a quadrature rule.
#[derive(Debug, Clone, PartialEq)]
pub struct GridField {
    values: Vec<Complex64>,
    rule_fingerprint: u64,
}

impl GridField {
    pub fn new(values: Vec<Complex64>, rule: &QuadratureRule) -> Result<Self> {
        if values.len() != rule.len() {
            return Err(Error::LengthMismatch {
                expected: rule.len(),
                got: values.len(),
            });
        }
        Ok(Self {
            values,
            rule_fingerprint: rule.fingerprint(),
        })
    }

    pub fn constant(value: Complex64, rule: &QuadratureRule) -> Self {
        Self {
            values: vec![value; rule.len()],
            rule_fingerprint: rule.fingerprint(),
        }
    }

    pub fn values(&self) -> &[Complex64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [Complex64] {
        &mut self.values
    }

    pub fn rule_fingerprint(&self) -> u64 {
        self.rule_fingerprint
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// `max_i |vᵢ|`.
    pub fn sup_norm(&self) -> f64 {
        self.values.iter().map(|v| v.norm()).fold(0.0, f64::max)
    }

    pub fn map(&self, f: impl Fn(Complex64) -> Complex64) -> Self {
        Self {
            values: self.values.iter().map(|&v| f(v)).collect(),
            rule_fingerprint: self.rule_fingerprint,
        }
    }

    pub fn is_finite(&self) -> bool {
        self.values.iter().all(|v| v.re.is_finite() && v.im.is_finite())
    }

    /// Nodewise product.
    pub fn pointwise_product(&self, other: &Self) -> Result<Self> {
        if self.rule_fingerprint != other.rule_fingerprint {
            return Err(Error::RuleMismatch);
        }
        Ok(Self {
            values: self.values.iter().zip(&other.values).map(|(a, b)| a * b).collect(),
            rule_fingerprint: self.rule_fingerprint,
        })
    }

    pub fn conj(&self) -> Self {
        self.map(|v| v.conj())
    }
}

/// Dyadic frequency band `√(1 − Δ) ∈ [N, 2N]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DyadicBand(pub f64);

impl DyadicBand {
    pub fn scale(&self) -> f64 {
        self.0
    }

    pub fn contains(&self, p: usize) -> bool {
        let w = 1.0 + eigenvalue(p);
        let n = self.0;
        n * n <= w && w <= 4.0 * n * n
    }

    /// Every degree in the band, ascending.
    pub fn degrees(&self) -> Vec<usize> {
        // √(1 + μ_p) > p + 1 for p ≥ 1, so p < 2N bounds the search
        let hi = (2.0 * self.0).ceil().max(0.0) as usize + 1;
        (0..=hi).filter(|&p| self.contains(p)).collect()
    }

    /// Highest degree in the band, or an error if it is empty.
    pub fn top_degree(&self) -> Result<usize> {
        self.degrees().last().copied().ok_or(Error::EmptyBand(self.0))
    }
}

/// Keeps exactly the coefficients whose degree lies in `band`.
pub fn dyadic_project(f: &ZonalSpectrum, band: DyadicBand) -> ZonalSpectrum {
    f.map_weighted(|p| if band.contains(p) { 1.0 } else { 0.0 })
}

/// `c_p ← (1 + μ_p)^exponent c_p`; `exponent = −α` is `(1 − Δ)^{−α}`.
pub fn bessel_potential(f: &ZonalSpectrum, exponent: f64) -> ZonalSpectrum {
    f.map_weighted(|p| (1.0 + eigenvalue(p)).powf(exponent))
}

/// `(Σ (1 + μ_p)^s |c_p|²)^{1/2}`.
pub fn sobolev_norm(f: &ZonalSpectrum, s: f64) -> f64 {
    f.coeffs()
        .iter()
        .enumerate()
        .map(|(p, c)| (1.0 + eigenvalue(p)).powf(s) * c.norm_sqr())
        .sum::<f64>()
        .sqrt()
}

/// `Σ μ_p |c_p|² = ∫ |∇u|² dx`.
pub fn gradient_norm_sq(f: &ZonalSpectrum) -> f64 {
    f.coeffs()
        .iter()
        .enumerate()
        .map(|(p, c)| eigenvalue(p) * c.norm_sqr())
        .sum()
}

/// Unit-norm random spectrum supported in `band`: i.i.d. complex Gaussian
/// coefficients, normalized. Deterministic in `seed`.
pub fn random_localized(band: DyadicBand, seed: u64) -> Result<ZonalSpectrum> {
    let degrees = band.degrees();
    let top = *degrees.last().ok_or(Error::EmptyBand(band.0))?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut f = ZonalSpectrum::zeros(top);
    for &p in &degrees {
        let re: f64 = StandardNormal.sample(&mut rng);
        let im: f64 = StandardNormal.sample(&mut rng);
        f.coeffs[p] = Complex64::new(re, im);
    }
    let n = f.l2_norm();
    Ok(f.scaled(Complex64::new(1.0 / n, 0.0)))
}

/// Synthesis and analysis between [`ZonalSpectrum`] and [`GridField`] on
/// a fixed rule, up to a fixed maximum degree.
#[derive(Debug, Clone)]
pub struct SpectralTransform {
    rule: Arc<QuadratureRule>,
    table: ZonalTable,
}

impl SpectralTransform {
    /// Basis table for degrees `≤ max_degree`. The rule must integrate
    /// degree `2 · max_degree` exactly.
    pub fn new(rule: Arc<QuadratureRule>, max_degree: usize) -> Result<Self> {
        rule.require_degree(2 * max_degree)?;
        let table = ZonalTable::new(max_degree, &rule);
        Ok(Self { rule, table })
    }

    pub fn rule(&self) -> &QuadratureRule {
        &self.rule
    }

    pub fn shared_rule(&self) -> Arc<QuadratureRule> {
        Arc::clone(&self.rule)
    }

    pub fn max_degree(&self) -> usize {
        self.table.max_degree()
    }

    pub fn table(&self) -> &ZonalTable {
        &self.table
    }

    fn check_degree(&self, p: usize) -> Result<()> {
        if p > self.table.max_degree() {
            return Err(Error::InsufficientQuadrature {
                required: 2 * p,
                available: 2 * self.table.max_degree(),
            });
        }
        Ok(())
    }

    /// `vᵢ = Σ_p c_p Z_p(θᵢ)`.
    pub fn synthesize(&self, f: &ZonalSpectrum) -> Result<GridField> {
        let p_max = f.support_degree();
        self.check_degree(p_max)?;
        let c = &f.coeffs()[..=p_max];
        let values = (0..self.rule.len())
            .map(|i| {
                let row = self.table.row(i);
                c.iter().zip(row).map(|(c, z)| c * z).sum()
            })
            .collect();
        Ok(GridField {
            values,
            rule_fingerprint: self.rule.fingerprint(),
        })
    }

    /// `c_p = ∫ g Z_p dx` for `p ≤ max_degree`.
    pub fn analyze(&self, g: &GridField, max_degree: usize) -> Result<ZonalSpectrum> {
        self.check_degree(max_degree)?;
        if g.rule_fingerprint != self.rule.fingerprint() {
            return Err(Error::RuleMismatch);
        }
        let mut coeffs = vec![Complex64::new(0.0, 0.0); max_degree + 1];
        for (i, (v, w)) in g.values.iter().zip(self.rule.weights()).enumerate() {
            let wv = v * *w;
            for (c, z) in coeffs.iter_mut().zip(&self.table.row(i)[..=max_degree]) {
                *c += wv * *z;
            }
        }
        Ok(ZonalSpectrum::new(coeffs))
    }

    /// Analyzes the nodewise product `u·v` to `max_degree`. Exact (free of
    /// aliasing) when the inputs are band-limited to degrees `P_u, P_v` and
    /// the rule integrates degree `P_u + P_v + max_degree`.
    pub fn dealiased_product(&self, u: &ZonalSpectrum, v: &ZonalSpectrum, max_degree: usize) -> Result<ZonalSpectrum> {
        let need = u.support_degree() + v.support_degree() + max_degree;
        self.rule.require_degree(need)?;
        let gu = self.synthesize(u)?;
        let gv = self.synthesize(v)?;
        self.analyze(&gu.pointwise_product(&gv)?, max_degree)
    }

    /// Grid-space `∫ |g|² dx`.
    pub fn grid_mass(&self, g: &GridField) -> Result<f64> {
        let sq: Vec<f64> = g.values.iter().map(|v| v.norm_sqr()).collect();
        self.rule.integrate_real(&sq)
    }
}

/// JSON form: `{"P": P, "convention": "one-plus-mu", "coeffs": [[re, im], …]}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SpectrumJson {
    #[serde(rename = "P")]
    pub max_degree: usize,
    pub convention: String,
    pub coeffs: Vec<[f64; 2]>,
}

pub const WEIGHT_CONVENTION: &str = "one-plus-mu";

impl From<&ZonalSpectrum> for SpectrumJson {
    fn from(f: &ZonalSpectrum) -> Self {
        Self {
            max_degree: f.max_degree(),
            convention: WEIGHT_CONVENTION.to_string(),
            coeffs: f.coeffs().iter().map(|c| [c.re, c.im]).collect(),
        }
    }
}

impl TryFrom<SpectrumJson> for ZonalSpectrum {
    type Error = Error;

    fn try_from(j: SpectrumJson) -> Result<Self> {
        if j.convention != WEIGHT_CONVENTION {
            return Err(Error::InvalidParameter(format!(
                "unknown weight convention {:?}",
                j.convention
            )));
        }
        if j.coeffs.len() != j.max_degree + 1 {
            return Err(Error::LengthMismatch {
                expected: j.max_degree + 1,
                got: j.coeffs.len(),
            });
        }
        Ok(ZonalSpectrum::new(
            j.coeffs.into_iter().map(|[re, im]| Complex64::new(re, im)).collect(),
        ))
    }
}

impl ZonalSpectrum {
    pub fn to_json(&self) -> String {
        serde_json::to_string(&SpectrumJson::from(self)).expect("spectrum serializes")
    }

    pub fn from_json(s: &str) -> Result<Self> {
        let j: SpectrumJson = serde_json::from_str(s).map_err(|e| Error::InvalidParameter(e.to_string()))?;
        j.try_into()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quadrature::gauss_rule_for_degree;
    use proptest::prelude::*;
    use std::f64::consts::PI;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn transform(p: usize, exact: usize) -> SpectralTransform {
        SpectralTransform::new(Arc::new(gauss_rule_for_degree(exact)), p).unwrap()
    }

    fn random_spectrum(p: usize, seed: u64) -> ZonalSpectrum {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        ZonalSpectrum::new(
            (0..=p)
                .map(|_| c(StandardNormal.sample(&mut rng), StandardNormal.sample(&mut rng)))
                .collect(),
        )
    }

    #[test]
    fn synthesize_constant_and_zero() {
        let t = transform(8, 24);
        let g = t.synthesize(&ZonalSpectrum::unit(0, 8)).unwrap();
        let z0 = (3.0 / (8.0 * PI * PI)).sqrt();
        assert!(g.values().iter().all(|v| (v - z0).norm() < 1e-14));
        let g = t.synthesize(&ZonalSpectrum::zeros(8)).unwrap();
        assert!(g.values().iter().all(|v| v.norm() == 0.0));
    }

    #[test]
    fn roundtrip_and_parseval_at_64_and_128() {
        for p in [64usize, 128] {
            let t = transform(p, 3 * p);
            let f = random_spectrum(p, 11);
            let g = t.synthesize(&f).unwrap();
            let back = t.analyze(&g, p).unwrap();
            assert!(back.max_abs_diff(&f) < 1e-10 * f.l2_norm());
            let gm = t.grid_mass(&g).unwrap();
            assert!((gm - f.mass()).abs() / f.mass() < 1e-10);
        }
    }

    #[test]
    fn analyze_unit_and_product_support() {
        let t = transform(12, 36);
        let z3 = t.synthesize(&ZonalSpectrum::unit(3, 12)).unwrap();
        let a = t.analyze(&z3, 12).unwrap();
        assert!(a.max_abs_diff(&ZonalSpectrum::unit(3, 12)) < 1e-11);

        let z4 = t.synthesize(&ZonalSpectrum::unit(4, 12)).unwrap();
        let prod = t.analyze(&z3.pointwise_product(&z4).unwrap(), 12).unwrap();
        for p in 8..=12 {
            assert!(prod.coeffs()[p].norm() < 1e-13, "p={p}");
        }
        assert!(prod.coeffs()[7].norm() > 1e-3);
        assert!(prod.coeffs()[1].norm() > 1e-3);
    }

    #[test]
    fn z1_times_z2_supported_on_one_and_three() {
        let t = transform(6, 18);
        let p = t
            .dealiased_product(&ZonalSpectrum::unit(1, 6), &ZonalSpectrum::unit(2, 6), 6)
            .unwrap();
        for (d, v) in p.coeffs().iter().enumerate() {
            if d == 1 || d == 3 {
                assert!(v.norm() > 1e-3);
            } else {
                assert!(v.norm() < 1e-14, "degree {d}: {v}");
            }
        }
    }

    #[test]
    fn product_with_scaled_constant_is_identity() {
        let t = transform(10, 30);
        let f = random_spectrum(10, 3);
        let one = ZonalSpectrum::unit(0, 0).scaled(c(S4_AREA.sqrt(), 0.0));
        let p = t.dealiased_product(&f, &one, 10).unwrap();
        assert!(p.max_abs_diff(&f) < 1e-12);
    }

    #[test]
    fn product_rejects_foreign_rule() {
        let a = transform(4, 12);
        let b = transform(4, 14);
        let ga = a.synthesize(&ZonalSpectrum::unit(1, 4)).unwrap();
        let gb = b.synthesize(&ZonalSpectrum::unit(1, 4)).unwrap();
        assert_eq!(ga.pointwise_product(&gb), Err(Error::RuleMismatch));
        assert_eq!(a.analyze(&gb, 4), Err(Error::RuleMismatch));
    }

    #[test]
    fn modulus_squared_is_real_nonnegative() {
        let t = transform(10, 30);
        let g = t.synthesize(&random_spectrum(10, 5)).unwrap();
        let m = g.pointwise_product(&g.conj()).unwrap();
        assert!(m.values().iter().all(|v| v.im == 0.0 && v.re >= 0.0));
    }

    #[test]
    fn insufficient_rules_are_rejected() {
        let r = Arc::new(gauss_rule_for_degree(10));
        assert!(SpectralTransform::new(Arc::clone(&r), 6).is_err());
        let t = SpectralTransform::new(r, 5).unwrap();
        assert!(t.synthesize(&ZonalSpectrum::unit(6, 6)).is_err());
        assert!(t
            .dealiased_product(&ZonalSpectrum::unit(4, 5), &ZonalSpectrum::unit(4, 5), 5)
            .is_err());
    }

    #[test]
    fn dyadic_band_membership() {
        assert_eq!(DyadicBand(1.0).degrees(), vec![0]);
        assert_eq!(DyadicBand(2.0).degrees(), vec![1, 2]);
        assert_eq!(DyadicBand(4.0).degrees(), vec![3, 4, 5, 6]);
        for n in [8.0, 16.0, 32.0, 3.3] {
            let b = DyadicBand(n);
            for p in 0..200 {
                let w = (1.0 + eigenvalue(p)).sqrt();
                assert_eq!(b.contains(p), w >= n && w <= 2.0 * n);
                if b.contains(p) {
                    assert!(b.degrees().contains(&p));
                }
            }
        }
        assert!(matches!(DyadicBand(1.05).top_degree(), Err(Error::EmptyBand(_))));
    }

    #[test]
    fn projection_examples() {
        let f = random_spectrum(20, 1);
        let g = dyadic_project(&f, DyadicBand(4.0));
        for (p, v) in g.coeffs().iter().enumerate() {
            assert_eq!(*v != c(0.0, 0.0), (3..=6).contains(&p));
        }
    }

    #[test]
    fn bessel_potential_examples() {
        let f = random_spectrum(16, 2);
        assert_eq!(bessel_potential(&f, 0.0), f);
        let z = bessel_potential(&ZonalSpectrum::unit(5, 8), -0.7);
        assert!((z.coeffs()[5].re - 41f64.powf(-0.7)).abs() < 1e-15);
        let back = bessel_potential(&bessel_potential(&f, -1.3), 1.3);
        assert!(back.max_abs_diff(&f) < 1e-12 * f.l2_norm());
    }

    #[test]
    fn norms() {
        let f = random_spectrum(12, 9);
        assert!((sobolev_norm(&f, 0.0) - f.l2_norm()).abs() < 1e-14);
        for s in [-1.0, 0.5, 3.0] {
            assert!((sobolev_norm(&ZonalSpectrum::unit(0, 4), s) - 1.0).abs() < 1e-15);
        }
        assert!((sobolev_norm(&ZonalSpectrum::unit(1, 4), 2.0) - 5.0).abs() < 1e-14);
        assert_eq!(gradient_norm_sq(&ZonalSpectrum::unit(0, 4)), 0.0);
        for p in 0..10 {
            assert_eq!(gradient_norm_sq(&ZonalSpectrum::unit(p, 10)), (p * (p + 3)) as f64);
        }
        let a = ZonalSpectrum::unit(2, 6).scaled(c(0.3, 0.4));
        let b = ZonalSpectrum::unit(5, 6).scaled(c(-1.0, 2.0));
        let sum = gradient_norm_sq(&a.add(&b));
        assert!((sum - gradient_norm_sq(&a) - gradient_norm_sq(&b)).abs() < 1e-12);
    }

    #[test]
    fn random_localized_contract() {
        for n in [1.0, 2.0, 4.0, 16.0] {
            let b = DyadicBand(n);
            let f = random_localized(b, 42).unwrap();
            assert!((f.l2_norm() - 1.0).abs() < 1e-14);
            assert_eq!(dyadic_project(&f, b), f);
            assert_eq!(random_localized(b, 42).unwrap(), f);
            assert_ne!(random_localized(b, 43).unwrap(), f);
        }
        assert!(random_localized(DyadicBand(1.05), 0).is_err());
    }

    #[test]
    fn json_roundtrip() {
        let f = random_spectrum(5, 8);
        let s = f.to_json();
        assert!(s.contains("\"convention\":\"one-plus-mu\""));
        assert_eq!(ZonalSpectrum::from_json(&s).unwrap(), f);
        assert!(ZonalSpectrum::from_json(r#"{"P":0,"convention":"bracket","coeffs":[[1,0]]}"#).is_err());
    }

    proptest! {
        #[test]
        fn projector_is_orthogonal(seed in 0u64..1000, n in prop::sample::select(vec![1.0, 2.0, 4.0, 8.0])) {
            let b = DyadicBand(n);
            let f = random_spectrum(24, seed);
            let g = random_spectrum(24, seed + 7);
            let pf = dyadic_project(&f, b);
            prop_assert_eq!(dyadic_project(&pf, b), pf.clone());
            prop_assert!(pf.l2_norm() <= f.l2_norm());
            let lhs = pf.inner(&g);
            let rhs = f.inner(&dyadic_project(&g, b));
            prop_assert!((lhs - rhs).norm() < 1e-12);
        }

        #[test]
        fn bessel_potential_contracts(seed in 0u64..1000, alpha in 0.05f64..3.0) {
            let f = random_spectrum(16, seed);
            prop_assert!(bessel_potential(&f, -alpha).l2_norm() < f.l2_norm());
            let z0 = ZonalSpectrum::unit(0, 16).scaled(Complex64::new(0.7, -0.2));
            prop_assert!((bessel_potential(&z0, -alpha).l2_norm() - z0.l2_norm()).abs() < 1e-15);
        }

        #[test]
        fn analysis_is_linear(s1 in 0u64..500, s2 in 0u64..500) {
            let t = transform(16, 32);
            let g1 = t.synthesize(&random_spectrum(16, s1)).unwrap();
            let g2 = t.synthesize(&random_spectrum(16, s2)).unwrap();
            let sum = GridField::new(
                g1.values().iter().zip(g2.values()).map(|(a, b)| a + b).collect(),
                t.rule(),
            ).unwrap();
            let lhs = t.analyze(&sum, 16).unwrap();
            let rhs = t.analyze(&g1, 16).unwrap().add(&t.analyze(&g2, 16).unwrap());
            prop_assert!(lhs.max_abs_diff(&rhs) < 1e-12);
        }
    }
}
