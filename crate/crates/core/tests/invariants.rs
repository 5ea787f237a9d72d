use std::sync::Arc;

use proptest::prelude::*;
use zonalnls::estimates::{exponent_fit, EstimateSample, FormKind};
use zonalnls::evolution::free_propagate;
use zonalnls::quadrature::gauss_rule_for_degree;
use zonalnls::resonance::count_representations;
use zonalnls::spectral::{dyadic_project, sobolev_norm};
use zonalnls::{Complex64, DyadicBand, EquationSpec, Evolver, SpectralTransform, TripleProductTensor, ZonalSpectrum};

const P: usize = 12;

fn spectrum() -> impl Strategy<Value = ZonalSpectrum> {
    prop::collection::vec((-1.0f64..1.0, -1.0f64..1.0), P + 1)
        .prop_map(|v| ZonalSpectrum::new(v.into_iter().map(|(re, im)| Complex64::new(re, im)).collect()))
}

fn transform() -> SpectralTransform {
    SpectralTransform::new(Arc::new(gauss_rule_for_degree(2 * P)), P).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn round_trip_and_parseval(f in spectrum()) {
        let tr = transform();
        let g = tr.synthesize(&f).unwrap();
        let back = tr.analyze(&g, P).unwrap();
        prop_assert!(back.max_abs_diff(&f) < 1e-12);
        let grid_mass = tr.grid_mass(&g).unwrap();
        prop_assert!((grid_mass - f.mass()).abs() < 1e-12 * f.mass().max(1.0));
    }

    #[test]
    fn free_flow_is_a_unitary_group(f in spectrum(), s in -3.0f64..3.0, t in -3.0f64..3.0) {
        let composed = free_propagate(&free_propagate(&f, s), t);
        prop_assert!(composed.max_abs_diff(&free_propagate(&f, s + t)) < 1e-12);
        prop_assert!((free_propagate(&f, t).mass() - f.mass()).abs() < 1e-12 * f.mass().max(1.0));
        prop_assert!((sobolev_norm(&free_propagate(&f, t), 1.0) - sobolev_norm(&f, 1.0)).abs() < 1e-10);
    }

    #[test]
    fn band_projection_is_idempotent(f in spectrum(), n in 1.0f64..6.0) {
        let band = DyadicBand(n);
        let once = dyadic_project(&f, band);
        prop_assert_eq!(dyadic_project(&once, band), once.clone());
        prop_assert!(once.mass() <= f.mass() + 1e-15);
    }

    #[test]
    fn sobolev_norm_is_monotone(f in spectrum(), s in 0.0f64..2.0, ds in 0.0f64..1.0) {
        prop_assert!(sobolev_norm(&f, s) <= sobolev_norm(&f, s + ds) + 1e-12);
    }

    #[test]
    fn hartree_step_never_gains_mass(f in spectrum(), alpha in 0.2f64..2.0, focusing in any::<bool>()) {
        let spec = if focusing {
            EquationSpec::Hartree { alpha, focusing: true }
        } else {
            EquationSpec::hartree(alpha)
        };
        let ev = Evolver::new(spec, P).unwrap();
        let g = ev.strang_step(&f, 1e-2).unwrap();
        prop_assert!(g.mass() <= f.mass() * (1.0 + 1e-12) + 1e-15);
    }

    #[test]
    fn representation_counts_respect_sign_symmetry(n in 1u64..40, m in -400i64..400) {
        let plus = count_representations(n, 1, m).unwrap();
        if m < 0 {
            prop_assert_eq!(plus, 0);
        }
        let minus = count_representations(n, -1, m).unwrap();
        prop_assert!(minus <= n + 1);
    }

    #[test]
    fn exponent_fit_recovers_power_laws(s in -1.0f64..2.0, c in 0.1f64..10.0) {
        let samples: Vec<EstimateSample> = [2.0f64, 4.0, 8.0, 16.0, 32.0]
            .iter()
            .map(|&m| EstimateSample {
                kind: FormKind::ZonalL1,
                alpha: 0.0,
                bands: vec![m, m, m],
                m,
                tau_star: None,
                value: c * m.powf(s),
                seed: 0,
            })
            .collect();
        let fit = exponent_fit(&samples).unwrap();
        prop_assert!((fit.slope - s).abs() < 1e-10);
        prop_assert!((fit.intercept - c.ln()).abs() < 1e-10);
    }
}

#[test]
fn tensor_is_symmetric_and_obeys_selection_rules() {
    let rule = gauss_rule_for_degree(3 * 10);
    let t = TripleProductTensor::build(10, &rule).unwrap();
    for p in 0..=10 {
        for q in 0..=10 {
            for l in 0..=10 {
                let v = t.get(p, q, l);
                for w in [t.get(q, p, l), t.get(l, q, p), t.get(p, l, q)] {
                    assert!((v - w).abs() < 1e-14, "({p},{q},{l})");
                }
                let triangle = l <= p + q && p <= q + l && q <= p + l;
                if !triangle || (p + q + l) % 2 == 1 {
                    assert_eq!(v, 0.0, "({p},{q},{l})");
                }
            }
        }
    }
}
