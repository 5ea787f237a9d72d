//! Zonal spherical harmonics on S⁴.
//!
//! `Z_p(θ) = k_p · C_p^{3/2}(cos θ)`, where `C_p^{3/2}` is the Gegenbauer
//! polynomial of order 3/2 and `k_p` makes `‖Z_p‖_{L²(S⁴)} = 1`. The
//! constants `k_p` are computed by quadrature, not from a closed form.

use std::f64::consts::PI;

use crate::quadrature::{gauss_rule, QuadratureRule};

/// Laplace eigenvalue `μ_p = p(p + 3)` of degree-`p` harmonics on S⁴.
pub fn eigenvalue(p: usize) -> f64 {
    (p * (p + 3)) as f64
}

/// Integer form of [`eigenvalue`].
pub fn eigenvalue_int(p: usize) -> i64 {
    (p * (p + 3)) as i64
}

/// `C_p^{3/2}(x)` by the forward three-term recurrence
/// `n Cₙ = (2n + 1) x Cₙ₋₁ − (n + 1) Cₙ₋₂`.
pub fn gegenbauer(p: usize, x: f64) -> f64 {
    let mut prev = 1.0;
    if p == 0 {
        return prev;
    }
    let mut cur = 3.0 * x;
    for n in 2..=p {
        let nf = n as f64;
        let next = ((2.0 * nf + 1.0) * x * cur - (nf + 1.0) * prev) / nf;
        prev = cur;
        cur = next;
    }
    cur
}

/// `C_0^{3/2}(x) … C_P^{3/2}(x)` in one sweep, written into `out`.
pub fn gegenbauer_all(max_degree: usize, x: f64, out: &mut [f64]) {
    debug_assert_eq!(out.len(), max_degree + 1);
    out[0] = 1.0;
    if max_degree == 0 {
        return;
    }
    out[1] = 3.0 * x;
    for n in 2..=max_degree {
        let nf = n as f64;
        out[n] = ((2.0 * nf + 1.0) * x * out[n - 1] - (nf + 1.0) * out[n - 2]) / nf;
    }
}

/// Normalizing constants `k_0 … k_P`, by Gaussian quadrature of `C_p²`.
pub fn norm_constants(max_degree: usize) -> Vec<f64> {
    let rule = gauss_rule(max_degree + 1);
    let mut sums = vec![0.0; max_degree + 1];
    let mut row = vec![0.0; max_degree + 1];
    for (&t, &w) in rule.nodes().iter().zip(rule.weights()) {
        gegenbauer_all(max_degree, t.cos(), &mut row);
        for (s, c) in sums.iter_mut().zip(&row) {
            *s += w * c * c;
        }
    }
    sums.into_iter().map(|s| 1.0 / s.sqrt()).collect()
}

/// A single normalized zonal harmonic.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ZonalHarmonic {
    pub degree: usize,
    pub norm_constant: f64,
}

impl ZonalHarmonic {
    pub fn new(degree: usize) -> Self {
        Self {
            degree,
            norm_constant: norm_constants(degree)[degree],
        }
    }

    pub fn value(&self, theta: f64) -> f64 {
        self.norm_constant * gegenbauer(self.degree, theta.cos())
    }

    pub fn eigenvalue(&self) -> f64 {
        eigenvalue(self.degree)
    }
}

/// `Z_p(θ)` for a single evaluation. Builds the normalization each call; use
/// [`ZonalHarmonic`] or [`ZonalTable`] in loops.
pub fn zonal_value(p: usize, theta: f64) -> f64 {
    ZonalHarmonic::new(p).value(theta)
}

/// `Z_p(θᵢ)` for all `p ≤ P` at the nodes of a rule, stored node-major.
#[derive(Debug, Clone)]
pub struct ZonalTable {
    max_degree: usize,
    n_nodes: usize,
    values: Vec<f64>,
}

impl ZonalTable {
    pub fn new(max_degree: usize, rule: &QuadratureRule) -> Self {
        Self::from_angles(max_degree, rule.nodes())
    }

    pub fn from_angles(max_degree: usize, angles: &[f64]) -> Self {
        let k = norm_constants(max_degree);
        let width = max_degree + 1;
        let mut values = vec![0.0; angles.len() * width];
        for (row, &t) in values.chunks_exact_mut(width).zip(angles) {
            gegenbauer_all(max_degree, t.cos(), row);
            for (v, kp) in row.iter_mut().zip(&k) {
                *v *= kp;
            }
        }
        Self {
            max_degree,
            n_nodes: angles.len(),
            values,
        }
    }

    pub fn max_degree(&self) -> usize {
        self.max_degree
    }

    pub fn n_nodes(&self) -> usize {
        self.n_nodes
    }

    /// `Z_0 … Z_P` at node `i`.
    pub fn row(&self, i: usize) -> &[f64] {
        let w = self.max_degree + 1;
        &self.values[i * w..(i + 1) * w]
    }

    pub fn get(&self, i: usize, p: usize) -> f64 {
        self.values[i * (self.max_degree + 1) + p]
    }

    /// `Z_p` at every node.
    pub fn column(&self, p: usize) -> Vec<f64> {
        (0..self.n_nodes).map(|i| self.get(i, p)).collect()
    }
}

/// Result of fitting `Z_p(θ)(sin θ)^{3/2}` against a sinusoid away from the
/// poles.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OscillationReport {
    pub degree: usize,
    /// Fitted frequency; the asymptotic value is `p + 3/2`.
    pub frequency: f64,
    pub phase: f64,
    pub amplitude: f64,
    /// Residual amplitude relative to `amplitude`: RMS residual divided by
    /// the RMS of the fitted sinusoid.
    pub relative_residual: f64,
    /// Max absolute residual over the window divided by `amplitude`.
    pub relative_max_residual: f64,
    pub window: (f64, f64),
}

/// Pole offset `c` of the window `[c/p, π − c/p]`.
pub const OSCILLATION_POLE_OFFSET: f64 = PI;

/// Fits `Z_p(θ)(sin θ)^{3/2} ≈ A cos(νθ + φ)` on `[c/p, π − c/p]`.
///
/// The frequency ν is found by scanning `[p, p + 3]` and refining with a
/// golden-section search; the amplitude and phase are linear least squares at
/// each trial ν.
///
/// # Panics
/// If `p < 8`.
pub fn oscillation_check(p: usize) -> OscillationReport {
    assert!(p >= 8, "oscillation_check needs p >= 8");
    let h = ZonalHarmonic::new(p);
    let lo = OSCILLATION_POLE_OFFSET / p as f64;
    let hi = PI - lo;
    let samples = 64 * (p + 2);
    let thetas: Vec<f64> = (0..samples)
        .map(|i| lo + (hi - lo) * i as f64 / (samples - 1) as f64)
        .collect();
    let g: Vec<f64> = thetas.iter().map(|&t| h.value(t) * t.sin().powf(1.5)).collect();

    let fit = |nu: f64| -> (f64, f64, f64) {
        // normal equations for g ≈ a cos νθ + b sin νθ
        let (mut cc, mut cs, mut ss, mut gc, mut gs) = (0.0, 0.0, 0.0, 0.0, 0.0);
        for (&t, &y) in thetas.iter().zip(&g) {
            let (s, c) = (nu * t).sin_cos();
            cc += c * c;
            cs += c * s;
            ss += s * s;
            gc += y * c;
            gs += y * s;
        }
        let det = cc * ss - cs * cs;
        let a = (gc * ss - gs * cs) / det;
        let b = (gs * cc - gc * cs) / det;
        let sse: f64 = thetas
            .iter()
            .zip(&g)
            .map(|(&t, &y)| {
                let (s, c) = (nu * t).sin_cos();
                (y - a * c - b * s).powi(2)
            })
            .sum();
        (sse, a, b)
    };

    let pf = p as f64;
    let step = 0.01;
    let mut best = (f64::INFINITY, pf);
    let mut nu = pf;
    while nu <= pf + 3.0 {
        let (sse, _, _) = fit(nu);
        if sse < best.0 {
            best = (sse, nu);
        }
        nu += step;
    }
    let (mut a, mut b) = (best.1 - step, best.1 + step);
    let gr = (5f64.sqrt() - 1.0) / 2.0;
    let mut x1 = b - gr * (b - a);
    let mut x2 = a + gr * (b - a);
    let (mut f1, mut f2) = (fit(x1).0, fit(x2).0);
    for _ in 0..60 {
        if f1 < f2 {
            b = x2;
            x2 = x1;
            f2 = f1;
            x1 = b - gr * (b - a);
            f1 = fit(x1).0;
        } else {
            a = x1;
            x1 = x2;
            f1 = f2;
            x2 = a + gr * (b - a);
            f2 = fit(x2).0;
        }
    }
    let frequency = 0.5 * (a + b);
    let (sse, ca, sb) = fit(frequency);
    let amplitude = ca.hypot(sb);
    let phase = (-sb).atan2(ca);
    let max_res = thetas
        .iter()
        .zip(&g)
        .map(|(&t, &y)| (y - amplitude * (frequency * t + phase).cos()).abs())
        .fold(0.0, f64::max);
    let n = samples as f64;
    OscillationReport {
        degree: p,
        frequency,
        phase,
        amplitude,
        relative_residual: (sse / n).sqrt() / (amplitude / 2f64.sqrt()),
        relative_max_residual: max_res / amplitude,
        window: (lo, hi),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quadrature::{gauss_rule_for_degree, S3_AREA};

    /// Closed-form `‖C_p^{3/2}‖²` against `2π²(1 − x²)dx`:
    /// `2π² · 2(p + 1)(p + 2)/(2p + 3)`.
    fn analytic_norm_sq(p: usize) -> f64 {
        let p = p as f64;
        S3_AREA * 2.0 * (p + 1.0) * (p + 2.0) / (2.0 * p + 3.0)
    }

    #[test]
    fn gegenbauer_small_degrees() {
        assert_eq!(gegenbauer(0, 0.37), 1.0);
        assert!((gegenbauer(1, 0.2) - 0.6).abs() < 1e-15);
        assert!((gegenbauer(2, 0.5) - 0.375).abs() < 1e-15);
        // C_p^{3/2}(1) = (p+1)(p+2)/2
        for p in 0..40 {
            let want = ((p + 1) * (p + 2)) as f64 / 2.0;
            assert!((gegenbauer(p, 1.0) - want).abs() < 1e-9 * want);
        }
    }

    #[test]
    fn gegenbauer_parity() {
        for p in 0..30 {
            let s = if p % 2 == 0 { 1.0 } else { -1.0 };
            assert!((gegenbauer(p, -0.3) - s * gegenbauer(p, 0.3)).abs() < 1e-12);
        }
    }

    #[test]
    fn sweep_matches_single_evaluation() {
        let mut row = vec![0.0; 21];
        gegenbauer_all(20, 0.71, &mut row);
        for (p, v) in row.iter().enumerate() {
            assert!((v - gegenbauer(p, 0.71)).abs() < 1e-12 * v.abs().max(1.0));
        }
    }

    #[test]
    fn norm_constants_match_closed_form() {
        let k = norm_constants(128);
        for (p, kp) in k.iter().enumerate() {
            let want = 1.0 / analytic_norm_sq(p).sqrt();
            assert!((kp - want).abs() / want < 1e-12, "p={p}");
        }
    }

    #[test]
    fn z0_is_inverse_sqrt_area() {
        let z0 = (3.0 / (8.0 * PI * PI)).sqrt();
        assert!((z0 - 0.194924).abs() < 1e-6);
        for t in [0.0, 0.3, 1.7, PI] {
            assert!((zonal_value(0, t) - z0).abs() < 1e-14);
        }
    }

    #[test]
    fn orthonormal_to_degree_64() {
        let rule = gauss_rule_for_degree(128);
        let table = ZonalTable::new(64, &rule);
        for p in 0..=64 {
            for q in p..=64 {
                let s: f64 = (0..rule.len())
                    .map(|i| rule.weights()[i] * table.get(i, p) * table.get(i, q))
                    .sum();
                let d = if p == q { 1.0 } else { 0.0 };
                assert!((s - d).abs() < 1e-10, "p={p} q={q}: {s}");
            }
        }
    }

    #[test]
    fn pointwise_bound_scales_like_p_three_halves() {
        // sup is attained at the poles, Z_p(0) = k_p (p+1)(p+2)/2 ~ p^{3/2}
        let k = norm_constants(64);
        let ratio = |p: usize| {
            let h = ZonalHarmonic {
                degree: p,
                norm_constant: k[p],
            };
            let mut m: f64 = 0.0;
            for i in 0..=4000 {
                m = m.max(h.value(PI * i as f64 / 4000.0).abs());
            }
            m / (p as f64).powf(1.5)
        };
        let c = (1..=16).map(ratio).fold(0.0, f64::max);
        for p in 8..=64 {
            assert!(ratio(p) <= c * (1.0 + 1e-9), "p={p}");
        }
    }

    #[test]
    fn oscillation_fit_behaviour() {
        let r32 = oscillation_check(32);
        assert!(r32.relative_residual <= 0.5, "{r32:?}");
        assert!(r32.relative_max_residual <= 0.5, "{r32:?}");
        assert!((r32.frequency - 33.5).abs() < 0.5, "{r32:?}");
        let r8 = oscillation_check(8);
        let r64 = oscillation_check(64);
        assert!(r64.relative_residual <= 2.0 * r8.relative_residual, "{r8:?} {r64:?}");
        for r in [r8, r64] {
            assert!((r.frequency - (r.degree as f64 + 1.5)).abs() < 0.5, "{r:?}");
        }
    }
}
