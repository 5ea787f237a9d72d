//! Zonal pseudospectral toolkit for nonlinear Schrödinger equations on S⁴.
//!
//! The crate covers exact-degree quadrature for the zonal measure, zonal
//! harmonics and their triple-product tensor, spectral/grid transforms,
//! split-step evolution of Hartree and quadratic NLS flows, resonance-sum
//! evaluation of multilinear space-time forms, lattice-point counting, and
//! the constant-data blow-up classification for Hamiltonian quadratic
//! nonlinearities.

pub mod blowup;
pub mod error;
pub mod estimates;
pub mod evolution;
pub mod quadrature;
pub mod resonance;
pub mod spectral;
pub mod tensor;
pub mod zonal;

pub use error::{Error, Result};
pub use evolution::{EquationSpec, Evolver, SimConfig, Termination, Trajectory};
pub use num_complex::Complex64;
pub use quadrature::{composite_rule, gauss_rule, QuadratureRule};
pub use spectral::{DyadicBand, GridField, SpectralTransform, ZonalSpectrum};
pub use tensor::TripleProductTensor;
pub use zonal::{ZonalHarmonic, ZonalTable};

/// Crate version, echoed into run manifests.
pub const VERSION: &str = env!("CARGO_PKG_VERSION");
