//! Shared fixtures for the benchmarks.

use std::sync::Arc;

use zonalnls::quadrature::gauss_rule_for_degree;
use zonalnls::spectral::random_localized;
use zonalnls::{DyadicBand, SpectralTransform, ZonalSpectrum};

/// Transform at degree `p` on the smallest exact rule.
pub fn transform(p: usize) -> SpectralTransform {
    SpectralTransform::new(Arc::new(gauss_rule_for_degree(2 * p)), p).expect("rule sized for degree")
}

/// Unit-norm probes in the given dyadic bands, seeded by position.
pub fn probes(bands: &[f64], seed: u64) -> Vec<ZonalSpectrum> {
    bands
        .iter()
        .enumerate()
        .map(|(j, &n)| random_localized(DyadicBand(n), seed + j as u64).expect("valid band"))
        .collect()
}
