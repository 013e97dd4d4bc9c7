use proptest::prelude::*;
use sincinr::basis::*;
use sincinr::numeric::{linspace, trapezoid};
use sincinr::signals::Signal1D;

fn integrable_kind() -> impl Strategy<Value = BasisKind> {
    prop_oneof![
        (0.5f64..2.0).prop_map(BasisKind::sinc),
        (0.15f64..2.0).prop_map(BasisKind::gaussian),
        (0.3f64..1.5, 0.0f64..4.0).prop_map(|(s, w)| BasisKind::gabor(s, w)),
        Just(BasisKind::hermite_default()),
    ]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn riesz_bounds_ordered_and_monotone(kind in integrable_kind(), k1 in 1usize..8, extra in 1usize..8) {
        let grid = linspace(-std::f64::consts::PI, std::f64::consts::PI, 33);
        let k2 = k1 + extra;
        let (a1, b1) = riesz_bounds(&kind, &grid, k1).unwrap();
        let (a2, b2) = riesz_bounds(&kind, &grid, k2).unwrap();
        prop_assert!(a1 <= b1 && a2 <= b2);
        prop_assert!(a2 >= a1 - 1e-12);
        // the extra terms bound how much B can grow
        let tail = grid
            .iter()
            .map(|&xi| periodized_energy(&kind, xi, k2).unwrap() - periodized_energy(&kind, xi, k1).unwrap())
            .fold(0.0, f64::max);
        prop_assert!(b2 <= b1 + tail + 1e-9);
    }

    #[test]
    fn kernel_at_zero_bounded_by_puc_residual(s in 0.2f64..1.5) {
        let kind = BasisKind::gaussian(s);
        let delta = puc_residual(&kind, &unit_grid(400), 50);
        let e0 = error_kernel(&kind, &AnalysisFunction::default(), 0.0, 50).unwrap();
        prop_assert!(e0 < delta * delta + 2.0 * delta + 1e-12, "E(0) = {e0}, delta = {delta}");
    }

    #[test]
    fn approx_operator_is_linear(alpha in -3.0f64..3.0, beta in -3.0f64..3.0, omega in prop::sample::select(vec![0.5, 1.0])) {
        let grid = linspace(-8.0, 8.0, 1601);
        let s1 = Signal1D::from_fn(grid.clone(), |x| (-x * x).exp()).unwrap();
        let s2 = Signal1D::from_fn(grid.clone(), |x| (2.0 * x).sin() * (-0.2 * x * x).exp()).unwrap();
        let mix = Signal1D::from_fn(grid.clone(), |x| alpha * (-x * x).exp() + beta * (2.0 * x).sin() * (-0.2 * x * x).exp()).unwrap();
        let an = AnalysisFunction::default();
        let c1 = approx_operator(&an, omega, &s1, -10..=10).unwrap();
        let c2 = approx_operator(&an, omega, &s2, -10..=10).unwrap();
        let cm = approx_operator(&an, omega, &mix, -10..=10).unwrap();
        for k in -10..=10 {
            prop_assert!((cm.get(k) - alpha * c1.get(k) - beta * c2.get(k)).abs() <= 1e-10);
        }
    }
}

#[test]
fn integer_shifted_sincs_are_orthonormal() {
    let xs = linspace(-50.0, 50.0, 20001);
    for j in -3i32..=3 {
        for k in -3i32..=3 {
            let ys: Vec<f64> = xs
                .iter()
                .map(|&x| sinc(x - j as f64) * sinc(x - k as f64))
                .collect();
            let ip = trapezoid(&xs, &ys);
            let target = if j == k { 1.0 } else { 0.0 };
            assert!((ip - target).abs() <= 2e-2, "<{j},{k}> = {ip}");
        }
    }
}
