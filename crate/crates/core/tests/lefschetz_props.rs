use num_complex::Complex;
use proptest::prelude::*;
use semiclassic_core::*;
use std::f64::consts::PI;

fn rot(h: f64) -> SymplecticMatrix<f64> {
    SymplecticMatrix::from_row_slice(2, &[h.cos(), -h.sin(), h.sin(), h.cos()], 1e-10).unwrap()
}

#[test]
fn unitary_identity_on_grid() {
    let tol = Tolerances::default();
    let one = Complex::new(1.0, 0.0);
    for i in 1..=100 {
        let h = 2.0 * PI * i as f64 / 101.0;
        let want = one / (one - Complex::new(0.0, h).exp());
        let got = fixed_point_weight_eta_route(&rot(h), one, &tol).unwrap();
        assert!((got - want).norm() <= 1e-9, "h={h}");
    }
}

#[test]
fn unitary_identity_in_four_dimensions() {
    // R(a) ⊕ R(b): both routes give 1/((1 − e^{ia})(1 − e^{ib})).
    let tol = Tolerances::default();
    let (a, b) = (0.7f64, 4.1f64);
    let mut m = nalgebra::DMatrix::<f64>::zeros(4, 4);
    m[(0, 0)] = a.cos();
    m[(0, 2)] = -a.sin();
    m[(2, 0)] = a.sin();
    m[(2, 2)] = a.cos();
    m[(1, 1)] = b.cos();
    m[(1, 3)] = -b.sin();
    m[(3, 1)] = b.sin();
    m[(3, 3)] = b.cos();
    let df = SymplecticMatrix::new(m, 1e-10).unwrap();
    let one = Complex::new(1.0, 0.0);
    let want = one / ((one - Complex::new(0.0, a).exp()) * (one - Complex::new(0.0, b).exp()));
    let x = fixed_point_weight(&df, one, &tol).unwrap();
    let y = fixed_point_weight_eta_route(&df, one, &tol).unwrap();
    assert!((x - want).norm() < 1e-9);
    assert!((y - want).norm() < 1e-9);
}

fn datum(label: &str, abs_det: f64, action: f64, flow: i64) -> FixedPointDatum<f64> {
    FixedPointDatum {
        label: label.into(),
        df: rot(PI),
        lift_trace: Complex::new(1.0, 0.0),
        action,
        eta: 0.0,
        abs_det,
        flow_index: flow,
        kernel_dim: 0,
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(40))]

    #[test]
    fn projective_line_exactness(k in 0u32..=10, theta in 0.01f64..(2.0 * PI - 0.01)) {
        let tol = Tolerances::default();
        let pts = projective_line_fixed_points(k, theta, &tol).unwrap();
        let lhs = cohomology_trace_oracle(&ToyModelSpec::ProjectiveLine { level: k, theta }).unwrap();
        let rhs = lefschetz_sum(&pts, &tol).unwrap();
        prop_assert!((lhs - rhs).norm() <= 1e-9);
    }

    #[test]
    fn sqm_is_linear_in_the_point_list(
        dets in proptest::collection::vec(0.1f64..10.0, 2..6),
        acts in proptest::collection::vec(0.0f64..6.0, 6),
        flows in proptest::collection::vec(-4i64..4, 6),
        split in 1usize..5,
    ) {
        let pts: Vec<_> = dets.iter().enumerate()
            .map(|(i, d)| datum(&format!("p{i}"), *d, acts[i], flows[i]))
            .collect();
        let split = split.min(pts.len() - 1);
        let whole = sqm_partition(&pts, "p0", 2, 1).unwrap().value;
        let left = sqm_partition(&pts[..split], "p0", 2, 1).unwrap().value;
        let mut right_pts = vec![pts[0].clone()];
        right_pts.extend_from_slice(&pts[split..]);
        let right = sqm_partition(&right_pts, "p0", 2, 1).unwrap().value;
        let r0 = sqm_partition(&pts[..1], "p0", 2, 1).unwrap().value;
        prop_assert!((whole - (left + right - r0)).norm() < 1e-12);
    }

    #[test]
    fn sqm_magnitude_is_reference_independent(
        dets in proptest::collection::vec(0.1f64..10.0, 3),
        abs_actions in proptest::collection::vec(0.0f64..6.0, 3),
        abs_flows in proptest::collection::vec(-4i64..4, 3),
        k in 1i64..6,
    ) {
        // Relative data measured from point r.
        let build = |r: usize| -> Vec<FixedPointDatum<f64>> {
            (0..3).map(|i| {
                if i == r {
                    datum(&format!("p{i}"), dets[i], abs_actions[i] / k as f64, 0)
                } else {
                    datum(&format!("p{i}"), dets[i], abs_actions[i] - abs_actions[r], abs_flows[i] - abs_flows[r])
                }
            }).collect()
        };
        let z0 = sqm_partition(&build(0), "p0", k, 0).unwrap().value;
        let z2 = sqm_partition(&build(2), "p2", k, 0).unwrap().value;
        prop_assert!((z0.norm() - z2.norm()).abs() < 1e-9);
    }
}

#[test]
fn report_sums_its_own_breakdown() {
    let pts = [datum("b", 2.0, 1.0, 1), datum("a", 3.0, 0.5, 0), datum("c", 5.0, 2.0, -1)];
    let r = sqm_partition(&pts, "a", 4, 3).unwrap();
    let labels: Vec<_> = r.per_point.iter().map(|(l, _)| l.as_str()).collect();
    assert_eq!(labels, ["a", "b", "c"]);
    let sum = r.per_point.iter().fold(Complex::new(0.0, 0.0), |a, (_, c)| a + c);
    assert!((sum - r.value).norm() < 1e-12);
}
