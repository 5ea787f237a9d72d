//! Split-step evolution of zonal NLS flows on S⁴.
//!
//! Equations are `i∂ₜu + Δu = N(u)` with either the Hartree term
//! `N(u) = ±((1 − Δ)^{−α}|u|²)u` or a quadratic term
//! `N(u) = a u² + b ū² + c|u|²`. Linear propagation is exact in spectral
//! space (`c_p ← e^{−itμ_p} c_p`); the nonlinear sub-flow is solved
//! nodewise on a Gauss grid.

use std::fmt::Write as _;
use std::sync::Arc;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::quadrature::{gauss_rule_for_degree, QuadratureRule, S4_AREA};
use crate::spectral::{bessel_potential, gradient_norm_sq, sobolev_norm, GridField, SpectralTransform, ZonalSpectrum};
use crate::zonal::eigenvalue;

const I: Complex64 = Complex64 { re: 0.0, im: 1.0 };

/// Nonlinearity of the flow.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum EquationSpec {
    /// `((1 − Δ)^{−α}|u|²)u`, sign flipped when `focusing`.
    Hartree { alpha: f64, focusing: bool },
    /// `a u² + b ū² + c|u|²`.
    Quadratic { a: Complex64, b: Complex64, c: Complex64 },
}

impl EquationSpec {
    pub fn hartree(alpha: f64) -> Self {
        Self::Hartree { alpha, focusing: false }
    }

    /// Hamiltonian quadratic nonlinearity `a u² + b ū² + 2ā|u|²`.
    pub fn hamiltonian_quadratic(a: Complex64, b: Complex64) -> Self {
        Self::Quadratic {
            a,
            b,
            c: 2.0 * a.conj(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        match *self {
            Self::Hartree { alpha, .. } if !(alpha > 0.0 && alpha.is_finite()) => Err(Error::InvalidParameter(
                format!("Hartree exponent must be positive, got {alpha}"),
            )),
            Self::Quadratic { a, b, c } if [a, b, c].iter().any(|z| !(z.re.is_finite() && z.im.is_finite())) => {
                Err(Error::InvalidParameter("quadratic coefficients must be finite".into()))
            }
            _ => Ok(()),
        }
    }

    /// `c = 2ā` within `1e−14` for quadratic nonlinearities; Hartree flows
    /// are always Hamiltonian.
    pub fn is_hamiltonian(&self) -> bool {
        match *self {
            Self::Hartree { .. } => true,
            Self::Quadratic { a, c, .. } => (c - 2.0 * a.conj()).norm() <= 1e-14,
        }
    }
}

/// `q(u) = a u² + b ū² + c|u|²`.
pub fn quadratic_q(u: Complex64, a: Complex64, b: Complex64, c: Complex64) -> Complex64 {
    a * u * u + b * u.conj() * u.conj() + c * u.norm_sqr()
}

/// Discretization and stopping parameters for [`simulate`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimConfig {
    pub dt: f64,
    pub t_final: f64,
    pub max_degree: usize,
    /// Sup-norm level that counts as blow-up.
    pub blowup_threshold: f64,
    /// Steps between diagnostic samples.
    pub record_stride: usize,
    /// Keep the spectrum at each recorded time.
    #[serde(default)]
    pub keep_states: bool,
}

/// Maximum number of step halvings while localizing a blow-up time.
pub const MAX_HALVINGS: u32 = 20;

impl SimConfig {
    pub fn validate(&self, initial_sup: f64) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidParameter(m));
        if !(self.dt > 0.0 && self.dt.is_finite()) {
            return bad(format!("dt must be positive, got {}", self.dt));
        }
        if !(self.t_final > 0.0 && self.t_final.is_finite()) {
            return bad(format!("T must be positive, got {}", self.t_final));
        }
        if self.record_stride == 0 {
            return bad("record_stride must be at least 1".into());
        }
        if self.blowup_threshold.partial_cmp(&initial_sup) != Some(std::cmp::Ordering::Greater) {
            return bad(format!(
                "blow-up threshold {} must exceed initial sup norm {initial_sup}",
                self.blowup_threshold
            ));
        }
        Ok(())
    }
}

/// Conserved and monitored quantities at one time.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Diagnostics {
    /// `∫|u|²`.
    pub mass: f64,
    /// Hartree energy, or `∫|∇u|² + V(u)` for quadratic flows.
    pub energy: f64,
    /// `‖u‖_{H¹}` under the `1 + μ` convention.
    pub h1: f64,
    /// Max of `|u|` over the grid nodes.
    pub sup: f64,
    /// `∫ Re u`.
    pub re_integral: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "status", rename_all = "snake_case")]
pub enum Termination {
    Completed,
    BlowupDetected { time: f64 },
}

#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub times: Vec<f64>,
    pub samples: Vec<Diagnostics>,
    pub states: Vec<ZonalSpectrum>,
    pub status: Termination,
    pub final_state: ZonalSpectrum,
    pub steps: usize,
}

impl Trajectory {
    /// `max_t |q(t) − q(0)|` for the selected quantity.
    pub fn max_drift(&self, quantity: impl Fn(&Diagnostics) -> f64) -> f64 {
        let q0 = quantity(&self.samples[0]);
        self.samples
            .iter()
            .map(|d| (quantity(d) - q0).abs())
            .fold(0.0, f64::max)
    }

    /// CSV with columns `t, mass, energy, h1, sup, re_integral, status`.
    /// Intermediate rows carry status `running`; the last row carries the
    /// termination status.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("t,mass,energy,h1,sup,re_integral,status\n");
        let last = self.times.len().saturating_sub(1);
        for (k, (t, d)) in self.times.iter().zip(&self.samples).enumerate() {
            let status = if k < last {
                "running"
            } else {
                match self.status {
                    Termination::Completed => "completed",
                    Termination::BlowupDetected { .. } => "blowup",
                }
            };
            writeln!(
                out,
                "{t},{},{},{},{},{},{status}",
                d.mass, d.energy, d.h1, d.sup, d.re_integral
            )
            .expect("writing to a String");
        }
        out
    }
}

/// `c_p ← e^{−itμ_p} c_p`.
pub fn free_propagate(f: &ZonalSpectrum, t: f64) -> ZonalSpectrum {
    let mut g = f.clone();
    for (p, c) in g.coeffs_mut().iter_mut().enumerate() {
        *c *= Complex64::from_polar(1.0, -t * eigenvalue(p));
    }
    g
}

/// Grid and transforms sized for a flow with state degree `P`.
///
/// The rule integrates degree `4P` exactly and the basis table reaches `2P`,
/// so `|u|²` and the Hartree potential are resolved to their full degree and
/// every cubic integrand in the diagnostics is exact.
#[derive(Debug, Clone)]
pub struct Evolver {
    spec: EquationSpec,
    max_degree: usize,
    transform: SpectralTransform,
}

impl Evolver {
    pub fn new(spec: EquationSpec, max_degree: usize) -> Result<Self> {
        spec.validate()?;
        let rule = Arc::new(gauss_rule_for_degree(4 * max_degree));
        let transform = SpectralTransform::new(rule, 2 * max_degree)?;
        Ok(Self {
            spec,
            max_degree,
            transform,
        })
    }

    pub fn spec(&self) -> &EquationSpec {
        &self.spec
    }

    pub fn max_degree(&self) -> usize {
        self.max_degree
    }

    pub fn transform(&self) -> &SpectralTransform {
        &self.transform
    }

    pub fn rule(&self) -> &QuadratureRule {
        self.transform.rule()
    }

    fn check_input(&self, f: &ZonalSpectrum) -> Result<()> {
        if f.support_degree() > self.max_degree {
            return Err(Error::InvalidParameter(format!(
                "state has degree {} above the evolver's {}",
                f.support_degree(),
                self.max_degree
            )));
        }
        Ok(())
    }

    pub fn synthesize(&self, f: &ZonalSpectrum) -> Result<GridField> {
        self.transform.synthesize(f)
    }

    /// Analysis back to the state degree.
    pub fn analyze(&self, g: &GridField) -> Result<ZonalSpectrum> {
        self.transform.analyze(g, self.max_degree)
    }

    /// `V = (1 − Δ)^{−α}|u|²` at the grid nodes.
    pub fn hartree_potential(&self, u: &GridField, alpha: f64) -> Result<GridField> {
        let density = u.map(|v| Complex64::new(v.norm_sqr(), 0.0));
        let d = self.transform.analyze(&density, 2 * self.max_degree)?;
        let v = self.transform.synthesize(&bessel_potential(&d, -alpha))?;
        Ok(v.map(|z| Complex64::new(z.re, 0.0)))
    }

    /// Exact Hartree sub-flow `i uₜ = ±V u`: `u ← e^{∓i·dt·V} u`, with `V`
    /// frozen because `|u|` is pointwise invariant.
    pub fn hartree_substep(&self, u: &GridField, alpha: f64, dt: f64, focusing: bool) -> Result<GridField> {
        let v = self.hartree_potential(u, alpha)?;
        let sign = if focusing { 1.0 } else { -1.0 };
        let mut out = u.clone();
        for (z, pv) in out.values_mut().iter_mut().zip(v.values()) {
            *z *= Complex64::from_polar(1.0, sign * dt * pv.re);
        }
        Ok(out)
    }

    /// Full Strang step: half linear, full nonlinear, half linear.
    pub fn strang_step(&self, f: &ZonalSpectrum, dt: f64) -> Result<ZonalSpectrum> {
        self.check_input(f)?;
        let half = free_propagate(&f.resized(self.max_degree), 0.5 * dt);
        let grid = self.synthesize(&half)?;
        let stepped = match self.spec {
            EquationSpec::Hartree { alpha, focusing } => self.hartree_substep(&grid, alpha, dt, focusing)?,
            EquationSpec::Quadratic { a, b, c } => quadratic_substep(&grid, a, b, c, dt)?,
        };
        let g = self.analyze(&stepped)?;
        let out = free_propagate(&g, 0.5 * dt);
        if out.coeffs().iter().any(|c| !(c.re.is_finite() && c.im.is_finite())) {
            return Err(Error::NonFinite("strang_step"));
        }
        Ok(out)
    }

    /// Mass, energy, H¹ norm, sup norm and `∫ Re u` of a state.
    pub fn diagnostics(&self, f: &ZonalSpectrum) -> Result<Diagnostics> {
        self.check_input(f)?;
        let u = self.synthesize(f)?;
        let kinetic = gradient_norm_sq(f);
        let energy = match self.spec {
            EquationSpec::Hartree { alpha, focusing } => {
                let density = u.map(|v| Complex64::new(v.norm_sqr(), 0.0));
                let d = self.transform.analyze(&density, 2 * self.max_degree)?;
                let pot: f64 = d
                    .coeffs()
                    .iter()
                    .enumerate()
                    .map(|(p, c)| (1.0 + eigenvalue(p)).powf(-alpha) * c.norm_sqr())
                    .sum();
                let sign = if focusing { -1.0 } else { 1.0 };
                kinetic + sign * 0.5 * pot
            }
            EquationSpec::Quadratic { a, b, .. } => {
                let v: Vec<f64> = u.values().iter().map(|&z| cubic_potential(z, a, b)).collect();
                kinetic + self.rule().integrate_real(&v)?
            }
        };
        Ok(Diagnostics {
            mass: f.mass(),
            energy,
            h1: sobolev_norm(f, 1.0),
            sup: u.sup_norm(),
            re_integral: f.coeffs()[0].re * S4_AREA.sqrt(),
        })
    }

    pub fn sup_norm(&self, f: &ZonalSpectrum) -> Result<f64> {
        Ok(self.synthesize(f)?.sup_norm())
    }
}

/// `V(u) = 2 Re(a u|u|²) + (2/3) Re(b̄ u³)`, the real potential with
/// `∂V/∂ū = a u² + b ū² + 2ā|u|²`.
pub fn cubic_potential(u: Complex64, a: Complex64, b: Complex64) -> f64 {
    2.0 * (a * u * u.norm_sqr()).re + (2.0 / 3.0) * (b.conj() * u * u * u).re
}

/// One classical RK4 step of the nodewise ODE `u' = −i q(u)`.
pub fn quadratic_substep(u: &GridField, a: Complex64, b: Complex64, c: Complex64, dt: f64) -> Result<GridField> {
    let rhs = |z: Complex64| -I * quadratic_q(z, a, b, c);
    let out = u.map(|z| {
        let k1 = rhs(z);
        let k2 = rhs(z + 0.5 * dt * k1);
        let k3 = rhs(z + 0.5 * dt * k2);
        let k4 = rhs(z + dt * k3);
        z + dt / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
    });
    if !out.is_finite() {
        return Err(Error::NonFinite("quadratic_substep"));
    }
    Ok(out)
}

/// Marches Strang steps from `u0` to `config.t_final`, or until the sup norm
/// reaches `config.blowup_threshold`.
///
/// A step that crosses the threshold or produces non-finite values is
/// retried with half the step size, up to [`MAX_HALVINGS`] times; after that
/// a crossing step is accepted and reported as the blow-up time, and a
/// non-finite step reports the last finite time.
pub fn simulate(u0: &ZonalSpectrum, spec: EquationSpec, config: &SimConfig) -> Result<Trajectory> {
    let evolver = Evolver::new(spec, config.max_degree)?;
    simulate_with(&evolver, u0, config)
}

/// [`simulate`] on a prebuilt [`Evolver`].
pub fn simulate_with(evolver: &Evolver, u0: &ZonalSpectrum, config: &SimConfig) -> Result<Trajectory> {
    if evolver.max_degree() != config.max_degree {
        return Err(Error::InvalidParameter(format!(
            "evolver degree {} differs from config degree {}",
            evolver.max_degree(),
            config.max_degree
        )));
    }
    let mut state = u0.resized(config.max_degree);
    let d0 = evolver.diagnostics(&state)?;
    config.validate(d0.sup)?;

    let mut traj = Trajectory {
        times: vec![0.0],
        samples: vec![d0],
        states: if config.keep_states {
            vec![state.clone()]
        } else {
            Vec::new()
        },
        status: Termination::Completed,
        final_state: state.clone(),
        steps: 0,
    };
    let record = |traj: &mut Trajectory, t: f64, s: &ZonalSpectrum, d: Diagnostics| {
        traj.times.push(t);
        traj.samples.push(d);
        if config.keep_states {
            traj.states.push(s.clone());
        }
    };

    let t_end = config.t_final;
    let mut t = 0.0;
    let mut dt = config.dt;
    let mut halvings = 0;
    let mut steps = 0usize;
    let mut last_recorded = 0usize;
    while t_end - t > 1e-12 * t_end {
        let h = dt.min(t_end - t);
        let trial = evolver.strang_step(&state, h).and_then(|s| {
            let d = evolver.diagnostics(&s)?;
            if d.sup.is_finite() && d.energy.is_finite() {
                Ok((s, d))
            } else {
                Err(Error::NonFinite("diagnostics"))
            }
        });
        match trial {
            Ok((s, d)) if d.sup < config.blowup_threshold => {
                state = s;
                t += h;
                steps += 1;
                if steps.is_multiple_of(config.record_stride) {
                    record(&mut traj, t, &state, d);
                    last_recorded = steps;
                }
            }
            Ok(_) | Err(Error::NonFinite(_)) if halvings < MAX_HALVINGS => {
                dt *= 0.5;
                halvings += 1;
            }
            Ok((s, d)) => {
                state = s;
                t += h;
                steps += 1;
                record(&mut traj, t, &state, d);
                last_recorded = steps;
                traj.status = Termination::BlowupDetected { time: t };
                break;
            }
            Err(Error::NonFinite(_)) => {
                traj.status = Termination::BlowupDetected { time: t };
                break;
            }
            Err(e) => return Err(e),
        }
    }
    if last_recorded != steps && traj.status == Termination::Completed {
        let d = evolver.diagnostics(&state)?;
        record(&mut traj, t, &state, d);
    }
    traj.final_state = state;
    traj.steps = steps;
    Ok(traj)
}
