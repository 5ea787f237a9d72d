//! Constant-data blow-up classification for Hamiltonian quadratic NLS.
//!
//! For `q(u) = a u² + b ū² + 2ā|u|²` the algebraic condition `ā²/a = b`
//! separates nonlinearities gauge-equivalent to `c(Re v)²` from those with a
//! unimodular direction `ω` along which constant data blow up in finite
//! time.

use std::f64::consts::TAU;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::evolution::quadratic_q;

pub const CONDITION_TOL: f64 = 1e-12;
const SAMPLES: usize = 2048;

/// `q(u) = a u² + b ū² + 2ā|u|²` with cached polar forms
/// `a = A e^{iα}`, `b = B e^{iβ}`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HamiltonianQuadratic {
    a: Complex64,
    b: Complex64,
    a_mod: f64,
    a_arg: f64,
    b_mod: f64,
    b_arg: f64,
}

impl HamiltonianQuadratic {
    pub fn new(a: Complex64, b: Complex64) -> Result<Self> {
        if ![a.re, a.im, b.re, b.im].iter().all(|v| v.is_finite()) {
            return Err(Error::NonFinite("quadratic coefficients"));
        }
        let (a_mod, a_arg) = a.to_polar();
        let (b_mod, b_arg) = b.to_polar();
        Ok(Self {
            a,
            b,
            a_mod,
            a_arg,
            b_mod,
            b_arg,
        })
    }

    pub fn a(&self) -> Complex64 {
        self.a
    }

    pub fn b(&self) -> Complex64 {
        self.b
    }

    pub fn c(&self) -> Complex64 {
        2.0 * self.a.conj()
    }

    /// `(A, α, B, β)`.
    pub fn polar(&self) -> (f64, f64, f64, f64) {
        (self.a_mod, self.a_arg, self.b_mod, self.b_arg)
    }

    pub fn q(&self, u: Complex64) -> Complex64 {
        quadratic_q(u, self.a, self.b, self.c())
    }

    /// `q(ω)ω̄ = aω + bω̄³ + 2āω̄`.
    pub fn rotated(&self, omega: Complex64) -> Complex64 {
        self.q(omega) * omega.conj()
    }

    /// `f(θ) = Re q(e^{iθ})e^{−iθ} = 3A cos(α + θ) + B cos(β − 3θ)`.
    pub fn profile(&self, theta: f64) -> f64 {
        3.0 * self.a_mod * (self.a_arg + theta).cos() + self.b_mod * (self.b_arg - 3.0 * theta).cos()
    }

    pub fn profile_derivative(&self, theta: f64) -> f64 {
        -3.0 * self.a_mod * (self.a_arg + theta).sin() + 3.0 * self.b_mod * (self.b_arg - 3.0 * theta).sin()
    }
}

/// `|ā²/a − b| ≤ 1e−12·max(1, |b|)`.
pub fn condition_holds(a: Complex64, b: Complex64) -> Result<bool> {
    if a == Complex64::new(0.0, 0.0) {
        return Err(Error::ConditionUndefined);
    }
    let lhs = a.conj() * a.conj() / a;
    Ok((lhs - b).norm() <= CONDITION_TOL * b.norm().max(1.0))
}

/// Rotation `u = ωv` turning `q` into `c ω (Re v)²`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Gauge {
    pub omega: Complex64,
    pub c: f64,
}

/// `ω = ā/|a|`, `c = 4|a|`, checked against `a = cω̄/4`, `b = cω³/4` and
/// the identity `q(ωv) = cω(Re v)²` at 100 random points.
pub fn gauge_decompose(a: Complex64, b: Complex64) -> Result<Gauge> {
    if !condition_holds(a, b)? {
        return Err(Error::NoGauge);
    }
    let omega = a.conj() / a.norm();
    let c = 4.0 * a.norm();
    let scale = a.norm().max(b.norm()).max(1.0);
    let close = |x: Complex64, y: Complex64| (x - y).norm() <= 1e-12 * scale;
    if !close(a, c * omega.conj() / 4.0) || !close(b, c * omega * omega * omega / 4.0) {
        return Err(Error::NoGauge);
    }
    let hq = HamiltonianQuadratic::new(a, b)?;
    let mut rng = ChaCha8Rng::seed_from_u64(0x0067_6175_6765);
    for _ in 0..100 {
        let v = Complex64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0));
        if !close(hq.q(omega * v), c * omega * v.re * v.re) {
            return Err(Error::NoGauge);
        }
    }
    Ok(Gauge { omega, c })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ResonantDirection {
    /// Simple zero `θ*` of the profile; `q(ω)ω̄ = iκ` at `ω = e^{iθ*}`.
    Simple { theta_star: f64, kappa: f64 },
    /// Every zero of the profile is a triple zero.
    NoSimpleZero,
}

fn bisect(f: impl Fn(f64) -> f64, mut lo: f64, mut hi: f64) -> f64 {
    let mut flo = f(lo);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        let fm = f(mid);
        if fm == 0.0 {
            return mid;
        }
        if (fm > 0.0) == (flo > 0.0) {
            lo = mid;
            flo = fm;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

/// Finds a simple zero of the profile on `[0, 2π)` by sign changes over
/// 2048 samples and bisection, certified by `|f′(θ*)| > 1e−8·‖f‖_∞`.
pub fn resonant_direction(a: Complex64, b: Complex64) -> Result<ResonantDirection> {
    let hq = HamiltonianQuadratic::new(a, b)?;
    let samples: Vec<f64> = (0..=SAMPLES)
        .map(|k| hq.profile(TAU * k as f64 / SAMPLES as f64))
        .collect();
    let sup = samples.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    if sup == 0.0 {
        return Err(Error::DegenerateNonlinearity);
    }
    let derivative_floor = 1e-8 * sup;
    let h = TAU / SAMPLES as f64;
    for k in 0..SAMPLES {
        let (f0, f1) = (samples[k], samples[k + 1]);
        let theta = if f0 == 0.0 {
            k as f64 * h
        } else if f0 * f1 < 0.0 {
            bisect(|t| hq.profile(t), k as f64 * h, (k + 1) as f64 * h)
        } else {
            continue;
        };
        if hq.profile_derivative(theta).abs() > derivative_floor {
            let kappa = hq.rotated(Complex64::from_polar(1.0, theta)).im;
            if kappa.abs() > 1e-10 {
                return Ok(ResonantDirection::Simple {
                    theta_star: theta.rem_euclid(TAU),
                    kappa,
                });
            }
        }
    }
    Ok(ResonantDirection::NoSimpleZero)
}

/// `y(t) = 1/(y₀⁻¹ + i q(ω)ω̄ t)`. When `q(ω)ω̄` is purely imaginary this
/// is real and `ω y(t)` solves the flow from constant data `ω y₀`.
pub fn ode_solution(y0: f64, omega: Complex64, a: Complex64, b: Complex64, t: f64) -> Result<Complex64> {
    if y0 == 0.0 {
        return Err(Error::InvalidParameter("y0 must be nonzero".into()));
    }
    let k = HamiltonianQuadratic::new(a, b)?.rotated(omega);
    let den = Complex64::new(1.0 / y0, 0.0) + Complex64::i() * k * t;
    if den.norm() < 1e-14 {
        return Err(Error::AtBlowup);
    }
    Ok(den.inv())
}

/// `1/(κy₀)` when `q(ω)ω̄ = iκ` with `κy₀ > 0`; `None` otherwise.
pub fn blowup_time(y0: f64, omega: Complex64, a: Complex64, b: Complex64) -> Result<Option<f64>> {
    if y0 == 0.0 {
        return Err(Error::InvalidParameter("y0 must be nonzero".into()));
    }
    let k = HamiltonianQuadratic::new(a, b)?.rotated(omega);
    if k.re.abs() > 1e-12 * k.norm().max(1.0) {
        return Ok(None);
    }
    let kappa = k.im;
    Ok((kappa * y0 > 0.0).then(|| 1.0 / (kappa * y0)))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Witness {
    Gauge { omega: Complex64, c: f64 },
    Resonant { theta_star: f64, kappa: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BlowupVerdict {
    pub condition_holds: bool,
    pub witness: Witness,
}

impl BlowupVerdict {
    /// Data `ω y₀` with `κ y₀ > 0`, blowing up at `t* = 1/(κ y₀)`; `None`
    /// for the gauge branch.
    pub fn blowup_data(&self, magnitude: f64) -> Option<(Complex64, f64)> {
        match self.witness {
            Witness::Resonant { theta_star, kappa } => {
                Some((Complex64::from_polar(1.0, theta_star), magnitude.abs() * kappa.signum()))
            }
            Witness::Gauge { .. } => None,
        }
    }
}

/// Classifies `(a, b)`: gauge witness under the condition, resonant
/// direction otherwise. `a = 0` goes straight to the resonant search.
pub fn classify(a: Complex64, b: Complex64) -> Result<BlowupVerdict> {
    let holds = match condition_holds(a, b) {
        Ok(h) => h,
        Err(Error::ConditionUndefined) => false,
        Err(e) => return Err(e),
    };
    if holds {
        let g = gauge_decompose(a, b)?;
        return Ok(BlowupVerdict {
            condition_holds: true,
            witness: Witness::Gauge { omega: g.omega, c: g.c },
        });
    }
    match resonant_direction(a, b)? {
        ResonantDirection::Simple { theta_star, kappa } => Ok(BlowupVerdict {
            condition_holds: false,
            witness: Witness::Resonant { theta_star, kappa },
        }),
        ResonantDirection::NoSimpleZero => Err(Error::InvalidParameter(format!(
            "condition fails for a={a}, b={b} but the profile has no simple zero"
        ))),
    }
}

/// One row of the blow-up dichotomy report.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BlowupReport {
    pub a: Complex64,
    pub b: Complex64,
    pub condition_holds: bool,
    pub witness: Witness,
    pub simulated_t_star: Option<f64>,
    pub closed_form_t_star: Option<f64>,
    pub rel_gap: Option<f64>,
}

impl BlowupReport {
    pub fn new(
        verdict: BlowupVerdict,
        a: Complex64,
        b: Complex64,
        simulated: Option<f64>,
        closed: Option<f64>,
    ) -> Self {
        let rel_gap = match (simulated, closed) {
            (Some(s), Some(c)) => Some((s - c).abs() / c),
            _ => None,
        };
        Self {
            a,
            b,
            condition_holds: verdict.condition_holds,
            witness: verdict.witness,
            simulated_t_star: simulated,
            closed_form_t_star: closed,
            rel_gap,
        }
    }
}

/// Mean of the profile over `[0, 2π)` by the periodic trapezoid rule.
pub fn profile_mean(a: Complex64, b: Complex64) -> Result<f64> {
    let hq = HamiltonianQuadratic::new(a, b)?;
    let n = 64;
    Ok((0..n).map(|k| hq.profile(TAU * k as f64 / n as f64)).sum::<f64>() / n as f64)
}

/// `(a, b)` from polar data, for parameter grids.
pub fn from_polar(a_mod: f64, a_arg: f64, b_mod: f64, b_arg: f64) -> (Complex64, Complex64) {
    (Complex64::from_polar(a_mod, a_arg), Complex64::from_polar(b_mod, b_arg))
}

/// The condition-holding `b` for a given `a`: `b = ā²/a`.
pub fn gauge_partner(a: Complex64) -> Complex64 {
    a.conj() * a.conj() / a
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn condition_examples() {
        assert!(condition_holds(c(0.25, 0.0), c(0.25, 0.0)).unwrap());
        assert!(!condition_holds(c(1.0, 0.0), c(0.0, 0.0)).unwrap());
        assert!(condition_holds(Complex64::from_polar(1.0, PI / 3.0), c(-1.0, 0.0)).unwrap());
        assert!(matches!(
            condition_holds(c(0.0, 0.0), c(1.0, 0.0)),
            Err(Error::ConditionUndefined)
        ));
    }

    #[test]
    fn gauge_examples() {
        let g = gauge_decompose(c(0.25, 0.0), c(0.25, 0.0)).unwrap();
        assert!((g.omega - c(1.0, 0.0)).norm() < 1e-15 && (g.c - 1.0).abs() < 1e-15);
        let g = gauge_decompose(c(-0.25, 0.0), c(-0.25, 0.0)).unwrap();
        assert!((g.omega - c(-1.0, 0.0)).norm() < 1e-15 && (g.c - 1.0).abs() < 1e-15);
        assert!(matches!(gauge_decompose(c(1.0, 0.0), c(0.0, 0.0)), Err(Error::NoGauge)));
        let a = Complex64::from_polar(0.7, 1.1);
        assert!(gauge_decompose(a, gauge_partner(a)).is_ok());
    }

    #[test]
    fn resonant_examples() {
        match resonant_direction(c(1.0, 0.0), c(0.0, 0.0)).unwrap() {
            ResonantDirection::Simple { theta_star, kappa } => {
                assert!((theta_star - PI / 2.0).abs() < 1e-12, "{theta_star}");
                assert!((kappa + 1.0).abs() < 1e-12);
            }
            r => panic!("{r:?}"),
        }
        assert_eq!(
            resonant_direction(c(0.25, 0.0), c(0.25, 0.0)).unwrap(),
            ResonantDirection::NoSimpleZero
        );
        match resonant_direction(c(0.0, 0.0), c(1.0, 0.0)).unwrap() {
            ResonantDirection::Simple { theta_star, .. } => assert!((theta_star - PI / 6.0).abs() < 1e-12),
            r => panic!("{r:?}"),
        }
        assert!(matches!(
            resonant_direction(c(0.0, 0.0), c(0.0, 0.0)),
            Err(Error::DegenerateNonlinearity)
        ));
    }

    #[test]
    fn rotated_matches_hand_value() {
        let hq = HamiltonianQuadratic::new(c(1.0, 0.0), c(0.0, 0.0)).unwrap();
        assert!((hq.rotated(c(0.0, 1.0)) - c(0.0, -1.0)).norm() < 1e-15);
        for k in 0..16 {
            let t = 0.4 * k as f64;
            assert!((hq.rotated(Complex64::from_polar(1.0, t)).re - hq.profile(t)).abs() < 1e-14);
        }
    }

    #[test]
    fn ode_examples() {
        let (a, b, w) = (c(1.0, 0.0), c(0.0, 0.0), c(0.0, 1.0));
        assert_eq!(ode_solution(0.3, w, a, b, 0.0).unwrap(), c(0.3, 0.0));
        assert_eq!(blowup_time(0.1, w, a, b).unwrap(), None);
        let t = blowup_time(-0.1, w, a, b).unwrap().unwrap();
        assert!((t - 10.0).abs() < 1e-12);
        assert!((blowup_time(-0.2, w, a, b).unwrap().unwrap() - 5.0).abs() < 1e-12);
        assert!(matches!(ode_solution(-0.1, w, a, b, 10.0), Err(Error::AtBlowup)));
        let y = ode_solution(-0.1, w, a, b, 9.9).unwrap();
        assert!((y.re + 10.0).abs() < 1e-9);

        let q = c(0.25, 0.0);
        assert_eq!(blowup_time(0.5, c(1.0, 0.0), q, q).unwrap(), None);
        for t in [0.0, 1.0, 10.0, 1e3] {
            assert!(ode_solution(0.5, c(1.0, 0.0), q, q, t).unwrap().norm() <= 0.5 + 1e-15);
        }
    }

    #[test]
    fn profile_has_zero_mean() {
        for (a, b) in [
            (c(1.0, 0.3), c(-0.2, 0.9)),
            (c(0.0, 2.0), c(0.0, 0.0)),
            (c(0.25, 0.0), c(0.25, 0.0)),
        ] {
            assert!(profile_mean(a, b).unwrap().abs() < 1e-14);
        }
    }

    #[test]
    fn classify_branches() {
        let v = classify(c(1.0, 0.0), c(0.0, 0.0)).unwrap();
        assert!(!v.condition_holds);
        let (w, y0) = v.blowup_data(0.5).unwrap();
        let t = blowup_time(y0, w, c(1.0, 0.0), c(0.0, 0.0)).unwrap().unwrap();
        assert!((t - 2.0).abs() < 1e-10);
        let v = classify(c(0.25, 0.0), c(0.25, 0.0)).unwrap();
        assert!(v.condition_holds && v.blowup_data(1.0).is_none());
        assert!(!classify(c(0.0, 0.0), c(0.0, 1.0)).unwrap().condition_holds);
        let json = serde_json::to_string(&BlowupReport::new(v, c(0.25, 0.0), c(0.25, 0.0), None, None)).unwrap();
        assert!(json.contains("\"omega\"") && json.contains("\"rel_gap\":null"));
    }
}
