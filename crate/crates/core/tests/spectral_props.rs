mod common;

use common::*;
use num_complex::Complex;
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use semiclassic_core::*;
use std::f64::consts::PI;

fn rel(a: f64, b: f64) -> f64 {
    ((a - b) / b).abs()
}

#[test]
fn oracle_agrees_with_closed_form_on_random_matrices() {
    let tol = Tolerances::default();
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    for i in 0..50 {
        let four = i % 2 == 1;
        let blocks = random_blocks(&mut rng, four);
        let g = random_conjugator(&mut rng, if four { 2 } else { 1 });
        let m = regular_matrix(&blocks, &g);
        let dec = cartan_decompose(&m, &tol).unwrap();
        let closed = abs_det(&dec).unwrap();
        let oracle = truncated_det_oracle(&log_generator(&m, &tol).unwrap(), 100_000);
        assert!(rel(oracle, closed) <= 5e-3, "{blocks:?}: {oracle} vs {closed}");
    }
}

#[test]
fn determinant_does_not_depend_on_complex_structure() {
    let tol = Tolerances::default();
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let spec = log_generator(&regular_matrix(&[CartanBlock::Hyperbolic { h: 0.7 }], &random_conjugator(&mut rng, 1)), &tol).unwrap();
    let base = truncated_det_oracle(&spec, 20_000);
    for _ in 0..20 {
        let g = random_conjugator(&mut rng, 1);
        let j = spec.complex_structure().conjugated(&g, 1e-8).unwrap();
        let other = OperatorSpec::from_parts_unchecked(j, spec.generator().clone());
        assert!(rel(truncated_det_oracle(&other, 20_000), base) <= 5e-3);
    }
}

#[test]
fn metaplectic_magnitude() {
    for i in 1..100 {
        let h = 2.0 * PI * i as f64 / 100.0;
        let d = block_abs_det(&CartanBlock::Unitary { h }).unwrap();
        assert!((d.powf(-0.5) - 1.0 / (2.0 * (h / 2.0).sin().abs())).abs() < 1e-12 * d.powf(-0.5));
    }
}

#[test]
fn eta_small_kappa_invariance() {
    for &s2 in &[0.5, 1.0, 2.0] {
        let want = 2.0 * (1.0 - s2 / PI);
        for &frac in &[0.0, 0.25, 0.5] {
            let kappa = frac * s2;
            let c = Sl2Coefficients::new(0.6 * kappa, s2, 0.8 * kappa);
            let eigs = sl2_eigenvalues(&c, 2000).flatten();
            let est = eta_regularized_sum(&eigs, &DEFAULT_S_VALUES, 1e-12).unwrap();
            assert!((est.value - want).abs() < 2e-2, "Σ₂={s2} κ={kappa}: {}", est.value);
        }
    }
}

#[test]
fn cheeger_stability_without_crossing() {
    let tol = Tolerances::default();
    let plus = Sl2Coefficients::new(0.0, 3.0, 0.0);
    let minus = Sl2Coefficients::new(0.3, 0.0, 0.4);
    let a = plus.operator();
    let b = plus.add(&minus).operator();
    let flow = spectral_flow_linear(&a, &b, 400, 200, &tol).unwrap();
    assert_eq!(flow.flow, 0);
    let ea = eta_of_operator(&a, 2000, &DEFAULT_S_VALUES, 1e-12).unwrap().value;
    let eb = eta_of_operator(&b, 2000, &DEFAULT_S_VALUES, 1e-12).unwrap().value;
    assert!((ea - eb).abs() < 2e-2, "{ea} vs {eb}");
}

#[test]
fn eta_jumps_by_two_across_the_crossing() {
    let tol = Tolerances::default();
    let plus = Sl2Coefficients::new(0.0, 0.1, 0.0);
    let minus = Sl2Coefficients::new(0.3, 0.0, 0.4);
    let a = plus.operator();
    let b = plus.add(&minus).operator();
    let flow = spectral_flow_linear(&a, &b, 400, 200, &tol).unwrap();
    assert_eq!(flow.flow, -1);
    assert_eq!(flow.endpoint_count, -1);
    let ea = eta_of_operator(&a, 2000, &DEFAULT_S_VALUES, 1e-12).unwrap().value;
    let eb = eta_of_operator(&b, 2000, &DEFAULT_S_VALUES, 1e-12).unwrap().value;
    assert!(((eb - ea) - 2.0 * flow.flow as f64).abs() < 2e-2, "{ea} → {eb}");
}

#[test]
fn kernel_at_endpoint_is_an_error() {
    let tol = Tolerances::default();
    let a = Sl2Coefficients::new(0.0, 0.0, 0.0).operator();
    let b = Sl2Coefficients::new(0.0, 0.5, 0.0).operator();
    assert!(matches!(spectral_flow_linear(&a, &b, 100, 5, &tol), Err(Error::Kernel(_))));
}

fn paired(v: &[f64]) -> bool {
    let mut s: Vec<f64> = v.to_vec();
    s.sort_by(|a, b| a.partial_cmp(b).unwrap());
    s.iter().zip(s.iter().rev()).all(|(a, b)| (a + b).abs() < 1e-6)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn non_unitary_blocks_have_symmetric_spectra(
        h in 0.1f64..2.0, x in 0.1f64..1.5, y in 0.2f64..3.0, kind in 0usize..3
    ) {
        let b = match kind {
            0 => CartanBlock::Hyperbolic { h },
            1 => CartanBlock::NegHyperbolic { h },
            _ => CartanBlock::ComplexQuad { z: Complex::new(x, y) },
        };
        let s = block_spectrum(&b, 30).unwrap();
        prop_assert!(paired(&s.spectrum.flatten()));
        prop_assert_eq!(block_eta(&b).unwrap(), 0.0);
    }

    #[test]
    fn unitary_eta_is_linear_in_angle(h in 0.05f64..(2.0 * PI - 0.05)) {
        let b = CartanBlock::Unitary { h };
        let eigs = block_spectrum(&b, 2000).unwrap().spectrum.flatten();
        let est = eta_regularized_sum(&eigs, &DEFAULT_S_VALUES, 1e-12).unwrap();
        prop_assert!((est.value - block_eta(&b).unwrap()).abs() < 2e-2);
    }

    #[test]
    fn flow_is_antisymmetric(s2 in 0.05f64..1.0, k1 in -1.0f64..1.0, k3 in -1.0f64..1.0) {
        let tol = Tolerances::default();
        let a = Sl2Coefficients::new(0.0, s2, 0.0).operator();
        let b = Sl2Coefficients::new(k1, s2, k3).operator();
        let c = Sl2Coefficients::new(k1, s2, k3);
        // Skip paths that end on or very near the kernel.
        prop_assume!((c.kappa() - s2).abs() > 1e-3);
        let f = spectral_flow_linear(&a, &b, 200, 10, &tol).unwrap();
        let g = spectral_flow_linear(&b, &a, 200, 10, &tol).unwrap();
        prop_assert_eq!(f.flow, -g.flow);
        prop_assert_eq!(f.flow, if c.kappa() > s2 { -1 } else { 0 });
    }

    #[test]
    fn determinant_is_multiplicative(h1 in 0.3f64..6.0, h2 in 0.1f64..2.0) {
        let b1 = CartanBlock::Unitary { h: h1 };
        let b2 = CartanBlock::Hyperbolic { h: h2 };
        let dec = CartanDecomposition {
            blocks: vec![b1, b2],
            conjugator: nalgebra::DMatrix::identity(4, 4),
            source: nalgebra::DMatrix::identity(4, 4),
        };
        let prod = block_abs_det(&b1).unwrap() * block_abs_det(&b2).unwrap();
        prop_assert!((abs_det(&dec).unwrap() - prod).abs() < 1e-12 * prod);
    }
}
