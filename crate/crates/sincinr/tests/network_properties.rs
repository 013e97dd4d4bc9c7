use proptest::prelude::*;
use sincinr::basis::{BasisKind, ShiftCoefficients};
use sincinr::network::*;

fn smooth_kind() -> impl Strategy<Value = BasisKind> {
    prop_oneof![
        Just(BasisKind::sinc(1.0)),
        (0.5f64..2.0).prop_map(BasisKind::gaussian),
        (0.5f64..3.0).prop_map(BasisKind::sine),
        Just(BasisKind::gabor(1.0, 2.0)),
        Just(BasisKind::hermite_default()),
    ]
}

fn shape() -> impl Strategy<Value = Vec<usize>> {
    (
        1usize..4,
        prop::collection::vec(1usize..12, 1..3),
        1usize..4,
    )
        .prop_map(|(i, h, o)| {
            let mut s = vec![i];
            s.extend(h);
            s.push(o);
            s
        })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn output_linear_in_last_layer(shape in shape(), kind in smooth_kind(), seed in 0u64..1000, x in prop::collection::vec(-2.0f64..2.0, 3)) {
        let net = init_network(&shape, kind, 1.0, seed).unwrap();
        let mut doubled = net.clone();
        let last = doubled.layers_mut().last_mut().unwrap();
        last.weights.iter_mut().for_each(|w| *w *= 2.0);
        last.bias.iter_mut().for_each(|b| *b *= 2.0);
        let x = &x[..shape[0]];
        let a = net.forward(x).unwrap();
        let b = doubled.forward(x).unwrap();
        for (u, v) in a.iter().zip(&b) {
            prop_assert_eq!(2.0 * u, *v);
        }
    }

    #[test]
    fn jacobian_matches_central_differences(shape in shape(), kind in smooth_kind(), seed in 0u64..1000, omega in 0.5f64..2.0, x in prop::collection::vec(-1.0f64..1.0, 3)) {
        let net = init_network(&shape, kind, omega, seed).unwrap();
        let x = &x[..shape[0]];
        let j = net.jacobian(x).unwrap();
        let h = 1e-5;
        for c in 0..shape[0] {
            let (mut xp, mut xm) = (x.to_vec(), x.to_vec());
            xp[c] += h;
            xm[c] -= h;
            let (fp, fm) = (net.forward(&xp).unwrap(), net.forward(&xm).unwrap());
            for r in 0..net.out_dim() {
                let fd = (fp[r] - fm[r]) / (2.0 * h);
                prop_assert!((j[(r, c)] - fd).abs() <= 1e-5 * j[(r, c)].abs().max(1.0), "{} vs {}", j[(r, c)], fd);
            }
        }
    }

    #[test]
    fn shift_network_equals_direct_sum(coeffs in prop::collection::vec(-2.0f64..2.0, 1..=101), first in -60i64..10, x in -20.0f64..20.0) {
        let kind = BasisKind::sinc(1.0);
        let last = first + coeffs.len() as i64 - 1;
        let c = ShiftCoefficients::new(first, coeffs.clone());
        let net = construct_shift_network(&c, kind.clone(), first..=last).unwrap();
        let direct: f64 = c.iter().map(|(k, a)| a * kind.eval(x - k as f64)).sum();
        prop_assert!((net.forward(&[x]).unwrap()[0] - direct).abs() <= 1e-12);
    }

    #[test]
    fn zero_learning_rate_keeps_parameters(seed in 0u64..1000, adam in any::<bool>()) {
        let net = init_network(&[1, 6, 1], BasisKind::sinc(1.0), 1.0, seed).unwrap();
        let xs: Vec<[f64; 1]> = (0..16).map(|i| [i as f64 / 16.0]).collect();
        let ys: Vec<[f64; 1]> = xs.iter().map(|x| [x[0].sin()]).collect();
        let cfg = TrainConfig {
            learning_rate: 0.0,
            epochs: 5,
            batch_size: 4,
            optimizer: if adam { Optimizer::Adam } else { Optimizer::GradientDescent },
            seed,
        };
        let mut trained = net.clone();
        trained.train(&xs, &ys, &cfg).unwrap();
        let before: Vec<u64> = net.params_flat().iter().map(|v| v.to_bits()).collect();
        let after: Vec<u64> = trained.params_flat().iter().map(|v| v.to_bits()).collect();
        prop_assert_eq!(before, after);
    }
}
