//! Quadrature for zonal integrands on S⁴.
//!
//! A zonal function on S⁴ depends only on the polar angle θ, and the surface
//! measure reduces to `2π² sin³θ dθ`. Every rule here carries that factor in
//! its weights, so `Σ wᵢ f(θᵢ)` approximates `∫_{S⁴} f dx` directly.
//!
//! [`gauss_rule`] is the Gaussian rule for the Jacobi weight `1 − x²`
//! (substituting `x = cos θ`), built by Golub–Welsch and polished by Newton
//! iteration with Christoffel weights. [`composite_rule`] is a piecewise
//! Gauss–Legendre rule on a uniform partition of `[0, π]`, for integrands
//! with kinks such as `|Z_p Z_q Z_l|`.

use std::f64::consts::PI;

use nalgebra::{DMatrix, SymmetricEigen};
use num_complex::Complex64;
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};

/// `|S³| = 2π²`, folded into every weight exactly once.
pub const S3_AREA: f64 = 2.0 * PI * PI;

/// `|S⁴| = 8π²/3`.
pub const S4_AREA: f64 = 8.0 * PI * PI / 3.0;

/// Nodes and weights on `(0, π)` for the S⁴ zonal measure.
#[derive(Debug, Clone, PartialEq)]
pub struct QuadratureRule {
    nodes: Vec<f64>,
    weights: Vec<f64>,
    exact_degree: Option<usize>,
    fingerprint: u64,
}

impl QuadratureRule {
    fn new(nodes: Vec<f64>, weights: Vec<f64>, exact_degree: Option<usize>) -> Self {
        let fingerprint = fingerprint(&nodes, &weights);
        Self {
            nodes,
            weights,
            exact_degree,
            fingerprint,
        }
    }

    /// Polar angles, strictly increasing.
    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// Largest degree in `cos θ` integrated exactly; `None` for composite
    /// rules, which make no polynomial-exactness claim.
    pub fn exact_degree(&self) -> Option<usize> {
        self.exact_degree
    }

    /// Content hash of the node and weight bit patterns.
    pub fn fingerprint(&self) -> u64 {
        self.fingerprint
    }

    /// Fails unless the rule integrates polynomials of `degree` in `cos θ`
    /// exactly.
    pub fn require_degree(&self, degree: usize) -> Result<()> {
        match self.exact_degree {
            Some(d) if d >= degree => Ok(()),
            other => Err(Error::InsufficientQuadrature {
                required: degree,
                available: other.unwrap_or(0),
            }),
        }
    }

    /// `Σ wᵢ vᵢ`.
    pub fn integrate(&self, values: &[Complex64]) -> Result<Complex64> {
        self.check_len(values.len())?;
        Ok(self.weights.iter().zip(values).map(|(w, v)| v * *w).sum())
    }

    pub fn integrate_real(&self, values: &[f64]) -> Result<f64> {
        self.check_len(values.len())?;
        Ok(self.weights.iter().zip(values).map(|(w, v)| w * v).sum())
    }

    /// Integrates a function of θ sampled at the nodes.
    pub fn integrate_fn(&self, f: impl Fn(f64) -> f64) -> f64 {
        self.nodes.iter().zip(&self.weights).map(|(&t, w)| w * f(t)).sum()
    }

    fn check_len(&self, got: usize) -> Result<()> {
        if got != self.nodes.len() {
            return Err(Error::LengthMismatch {
                expected: self.nodes.len(),
                got,
            });
        }
        Ok(())
    }
}

fn fingerprint(nodes: &[f64], weights: &[f64]) -> u64 {
    let mut h = Sha256::new();
    for v in nodes.iter().chain(weights) {
        h.update(v.to_le_bytes());
    }
    let digest = h.finalize();
    u64::from_le_bytes(digest[..8].try_into().expect("digest has 32 bytes"))
}

/// Three-term data of a symmetric orthogonal-polynomial family on `[−1, 1]`:
/// monic recurrence `x pₖ = pₖ₊₁ + βₖ pₖ₋₁` and total mass `μ₀`.
struct SymmetricFamily {
    beta: fn(usize) -> f64,
    mass: f64,
}

const JACOBI_ONE_ONE: SymmetricFamily = SymmetricFamily {
    beta: |k| {
        let k = k as f64;
        k * (k + 2.0) / ((2.0 * k + 1.0) * (2.0 * k + 3.0))
    },
    mass: 4.0 / 3.0,
};

const LEGENDRE: SymmetricFamily = SymmetricFamily {
    beta: |k| {
        let k = k as f64;
        k * k / (4.0 * k * k - 1.0)
    },
    mass: 2.0,
};

impl SymmetricFamily {
    /// Orthonormal values `p̂₀(x) … p̂ₙ(x)` and the derivative of `p̂ₙ`.
    fn eval(&self, n: usize, x: f64, out: &mut Vec<f64>) -> f64 {
        out.clear();
        let mut p_prev = 0.0;
        let mut p = 1.0 / self.mass.sqrt();
        let mut d_prev = 0.0;
        let mut d = 0.0;
        out.push(p);
        for k in 0..n {
            let b_next = (self.beta)(k + 1).sqrt();
            let b_cur = if k == 0 { 0.0 } else { (self.beta)(k).sqrt() };
            let p_next = (x * p - b_cur * p_prev) / b_next;
            let d_next = (p + x * d - b_cur * d_prev) / b_next;
            p_prev = p;
            p = p_next;
            d_prev = d;
            d = d_next;
            out.push(p);
        }
        d
    }

    /// Gauss nodes and weights on `[−1, 1]`, ascending in x.
    fn gauss(&self, n: usize) -> (Vec<f64>, Vec<f64>) {
        assert!(n >= 1, "quadrature needs at least one node");
        let jacobi = DMatrix::from_fn(n, n, |r, c| {
            if r == c + 1 {
                (self.beta)(r).sqrt()
            } else if c == r + 1 {
                (self.beta)(c).sqrt()
            } else {
                0.0
            }
        });
        let mut nodes: Vec<f64> = SymmetricEigen::new(jacobi).eigenvalues.iter().copied().collect();
        nodes.sort_by(|a, b| a.total_cmp(b));

        let mut buf = Vec::with_capacity(n + 1);
        let weights = nodes
            .iter_mut()
            .map(|x| {
                for _ in 0..3 {
                    let d = self.eval(n, *x, &mut buf);
                    let step = buf[n] / d;
                    *x -= step;
                    if step.abs() < 1e-17 {
                        break;
                    }
                }
                self.eval(n - 1, *x, &mut buf);
                1.0 / buf.iter().map(|v| v * v).sum::<f64>()
            })
            .collect();
        (nodes, weights)
    }
}

/// Gaussian rule with `n` nodes, exact for `2π² p(cos θ) sin³θ dθ` with
/// `deg p ≤ 2n − 1`.
///
/// # Panics
/// If `n == 0`.
pub fn gauss_rule(n: usize) -> QuadratureRule {
    let (xs, ws) = JACOBI_ONE_ONE.gauss(n);
    // descending x is ascending θ
    let nodes = xs.iter().rev().map(|x| x.clamp(-1.0, 1.0).acos()).collect();
    let weights = ws.iter().rev().map(|w| w * S3_AREA).collect();
    QuadratureRule::new(nodes, weights, Some(2 * n - 1))
}

/// Smallest Gaussian rule exact through `degree`.
pub fn gauss_rule_for_degree(degree: usize) -> QuadratureRule {
    gauss_rule(degree / 2 + 1)
}

/// Gauss–Legendre nodes and weights on `[−1, 1]`.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    LEGENDRE.gauss(n)
}

/// Composite rule on `panels` equal θ-intervals of `[0, π]`.
///
/// Inside each panel the nodes are Gauss–Legendre points in `x = cos θ`,
/// so the per-panel measure `2π²(1 − x²)dx` integrates polynomials in
/// `cos θ` of degree `≤ 2·per_panel − 3` exactly; non-smooth integrands
/// converge under panel refinement.
///
/// # Panics
/// If `panels == 0` or `per_panel < 2`.
pub fn composite_rule(panels: usize, per_panel: usize) -> QuadratureRule {
    assert!(panels >= 1, "composite rule needs at least one panel");
    assert!(per_panel >= 2, "composite rule needs at least two nodes per panel");
    let (xs, ws) = gauss_legendre(per_panel);
    let h = PI / panels as f64;
    let mut nodes = Vec::with_capacity(panels * per_panel);
    let mut weights = Vec::with_capacity(panels * per_panel);
    for k in 0..panels {
        let (xa, xb) = ((k as f64 * h).cos(), ((k + 1) as f64 * h).cos());
        let (mid, half) = (0.5 * (xa + xb), 0.5 * (xa - xb));
        // descending x within the panel is ascending θ
        for (x, w) in xs.iter().rev().zip(ws.iter().rev()) {
            let xc = mid + half * x;
            nodes.push(xc.clamp(-1.0, 1.0).acos());
            weights.push(S3_AREA * (1.0 - xc * xc) * half * w);
        }
    }
    QuadratureRule::new(nodes, weights, None)
}
