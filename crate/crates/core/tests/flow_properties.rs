use proptest::prelude::*;

use conley_core::catalog;
use conley_core::ls_system::{flow_map, galerkin_truncate, LSField, SplitModel};

const STEP: f64 = 1e-2;

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn linear_flow_closed_form(
        l0 in prop_oneof![-2.0..-0.1f64, 0.1..2.0f64],
        l1 in prop_oneof![-2.0..-0.1f64, 0.1..2.0f64],
        x in proptest::collection::vec(-1.0..1.0f64, 2),
        t in -1.5..1.5f64,
    ) {
        let f = LSField::linear(SplitModel::diagonal(vec![l0, l1]).unwrap());
        let y = flow_map(&f, &x, t, STEP).unwrap();
        for (i, l) in [l0, l1].iter().enumerate() {
            let exact = x[i] * (l * t).exp();
            prop_assert!((y[i] - exact).abs() < 1e-8 * (1.0 + exact.abs()), "{} vs {}", y[i], exact);
        }
    }

    #[test]
    fn flow_group_property(
        x in proptest::collection::vec(-1.2..1.2f64, 2),
        s in -0.8..0.8f64,
        t in -0.8..0.8f64,
    ) {
        let f = catalog::doublewell();
        let direct = flow_map(&f, &x, s + t, STEP / 4.0).unwrap();
        let composed = flow_map(&f, &flow_map(&f, &x, s, STEP / 4.0).unwrap(), t, STEP / 4.0).unwrap();
        for i in 0..2 {
            prop_assert!((direct[i] - composed[i]).abs() < 1e-7 * (1.0 + direct[i].abs()));
        }
    }

    #[test]
    fn backward_inverts_forward(x in proptest::collection::vec(-1.0..1.0f64, 2), t in 0.0..1.0f64) {
        let f = catalog::doublewell();
        let there = flow_map(&f, &x, t, STEP).unwrap();
        let back = flow_map(&f, &there, -t, STEP).unwrap();
        for i in 0..2 {
            prop_assert!((back[i] - x[i]).abs() < 1e-7);
        }
    }

    #[test]
    fn galerkin_truncation_ignores_tail(x in proptest::collection::vec(-1.0..1.0f64, 3), tail in -5.0..5.0f64) {
        let model = SplitModel::new(vec![1.0, -1.0, 2.0], vec![1, 2]).unwrap();
        let f = LSField::from_fn(model, |x| vec![x[1] * x[2], x[0] * x[0], x[0] + x[2]]);
        let g = galerkin_truncate(&f, 2).unwrap();
        let mut y = x.clone();
        y[2] = tail;
        let (mut a, mut b) = (vec![0.0; 3], vec![0.0; 3]);
        g.nonlinearity_into(&x, &mut a);
        g.nonlinearity_into(&y, &mut b);
        prop_assert_eq!(&a, &b);
        prop_assert_eq!(a[2], 0.0);
    }
}
