use std::sync::Arc;

use conley_core::catalog;
use conley_core::continuation::{
    closeness_epsilon, g_nesting_check, galerkin_continuation, gaussian_bump, gronwall_check, reineck_verify,
    verify_isolating_along, HomotopyFamily,
};
use conley_core::isolation::GridBox;
use conley_core::ls_system::{negative_gradient_field, LSField, SplitModel};
use conley_core::z2_chain::GradedDims;
use conley_core::Error;

const STEP: f64 = 1e-2;

fn e01() -> GradedDims {
    GradedDims::from_pairs(&[(0, 1)])
}

fn bumped_saddle() -> LSField {
    catalog::saddle2d().plus(gaussian_bump(vec![0.0, 0.0], 0.5, 1e-3, vec![1.0, 0.0]))
}

#[test]
fn rotated_saddle_continues() {
    let u = GridBox::cube(2, 1.0, 64);
    let r = verify_isolating_along(&catalog::rotated_saddle_homotopy(), &u, 11, 3.0, STEP).unwrap();
    assert!(r.samples.iter().all(|s| s.isolating), "{r}");
    assert_eq!(r.endpoint_e_indices.0.dims, e01());
    assert_eq!(r.endpoint_e_indices.1.dims, e01());
    assert!(r.verdict);
}

#[test]
fn reversed_homotopy_same_verdict() {
    let u = GridBox::cube(2, 1.0, 32);
    let h = catalog::rotated_saddle_homotopy();
    let a = verify_isolating_along(&h, &u, 5, 2.0, STEP).unwrap();
    let b = verify_isolating_along(&h.reversed(), &u, 5, 2.0, STEP).unwrap();
    assert_eq!(a.verdict, b.verdict);
}

#[test]
fn isolation_breaker_loses_isolation() {
    let u = GridBox::cube(2, 1.0, 64);
    let r = verify_isolating_along(&catalog::isolation_breaker(), &u, 11, 3.0, STEP).unwrap();
    let s = r.isolation_lost_at().expect("isolation must fail");
    assert!((0.3..=0.6).contains(&s), "lost at {s}");
    assert_eq!(r.endpoint_e_indices.0.dims, e01());
    assert!(r.endpoint_e_indices.1.dims.is_zero());
    assert!(!r.verdict);
    assert!(matches!(r.into_result(), Err(Error::IsolationLost { .. })));
}

#[test]
fn gronwall_bump_perturbation() {
    let u = GridBox::cube(2, 1.0, 64);
    let r = gronwall_check(&catalog::saddle2d(), &bumped_saddle(), &u, 2.0, 20, STEP).unwrap();
    assert_eq!(r.violations, 0, "{r:?}");
    assert!(r.epsilon > 0.0 && r.epsilon <= 1e-3 + 1e-15);
    // the linear saddle has Lipschitz constant 1
    assert!(r.c >= 1.0 && r.c < 1.2);
}

#[test]
fn gronwall_linear_constant_shift_bound() {
    // variation of constants: |x₀(t) − x₁(t)| = ε(eᵗ − 1), and
    // (eᵗ − 1)/(teᵗ) increases to 1 as t → 0
    let f0 = catalog::saddle2d().with_lipschitz_hint(1.0);
    let f1 = f0.plus_constant(vec![1e-3, 0.0]);
    let r = gronwall_check(&f0, &f1, &GridBox::cube(2, 1.0, 16), 1.0, 20, STEP).unwrap();
    assert_eq!(r.violations, 0);
    let h = STEP;
    let oracle_ratio = (h.exp() - 1.0) / (h * h.exp());
    assert!((r.worst_ratio - oracle_ratio).abs() < 1e-6, "{} vs {oracle_ratio}", r.worst_ratio);
}

#[test]
fn nesting_for_bump_perturbation() {
    let u = GridBox::cube(2, 1.0, 64);
    let r = g_nesting_check(&catalog::saddle2d(), &bumped_saddle(), &u, 1.0, STEP).unwrap();
    assert!(r.hypothesis_met, "{r:?}");
    for inc in &r.inclusions {
        assert!(inc.holds(), "{inc:?}");
    }
}

#[test]
fn closeness_epsilon_is_monotone() {
    for &c in &[0.0, 0.5, 1.0, 2.0] {
        for &t in &[0.5, 1.0, 2.0] {
            for &rho in &[0.05, 0.1, 0.2] {
                let e = closeness_epsilon(c, t, rho);
                assert!(closeness_epsilon(c, t, 2.0 * rho) > e);
                assert!(closeness_epsilon(c, 2.0 * t, rho) < e);
                assert!(closeness_epsilon(c + 1.0, t, rho) < e);
            }
        }
    }
}

fn coupled3d(coupling: f64) -> LSField {
    let model = SplitModel::new(vec![1.0, 1.0, -1.0], vec![1, 2]).unwrap();
    LSField::from_fn(model, move |x| vec![0.0, -2.0 * x[1], coupling * x[0]])
}

#[test]
fn galerkin_level_two_suffices() {
    let u = GridBox::cube(3, 1.0, 16);
    let r = galerkin_continuation(&coupled3d(1e-2), &u, 1.0, STEP).unwrap();
    assert_eq!(r.level, 2);
    assert_eq!(r.rejected, vec![1]);
    assert!(r.indices_equal());
    assert_eq!(r.full_index.dims, e01());
}

#[test]
fn galerkin_support_at_level_one() {
    let model = SplitModel::new(vec![1.0, -1.0], vec![1]).unwrap();
    let f = LSField::from_fn(model, |x| vec![-0.5 * x[0], 0.0]);
    let r = galerkin_continuation(&f, &GridBox::cube(2, 1.0, 32), 2.0, STEP);
    // ẋ₁ = ½x₁ has the same unstable direction in every truncation
    let r = r.unwrap();
    assert_eq!(r.level, 1);
    assert!(r.indices_equal());
}

#[test]
fn galerkin_without_admissible_level() {
    // ẋ₂ = x₂ − x₂ = 0: the full field is not isolated on U at all
    let model = SplitModel::new(vec![1.0, 1.0], vec![1]).unwrap();
    let f = LSField::from_fn(model, |x| vec![0.0, -x[1]]);
    let r = galerkin_continuation(&f, &GridBox::cube(2, 1.0, 16), 2.0, STEP);
    assert!(matches!(r, Err(Error::NoAdmissibleLevel)));
}

#[test]
fn reineck_one_dimensional() {
    let g = catalog::expand1d_gradient();
    let f = catalog::expand1d();
    let u = GridBox::cube(1, 1.0, 64);
    let r = reineck_verify(&f, &u, &g, &HomotopyFamily::constant(f.clone()), 2.0, STEP).unwrap();
    assert!(r.all_equal());
    assert_eq!(r.morse, e01());
}

#[test]
fn reineck_doublewell_with_rotation() {
    let g = catalog::doublewell_gradient();
    let grad = negative_gradient_field(&g);
    let twisted = grad.plus(Arc::new(|x: &[f64], out: &mut [f64]| {
        out[0] = -1e-2 * x[1];
        out[1] = 1e-2 * x[0];
    }));
    let h = HomotopyFamily::linear(twisted.clone(), grad).unwrap();
    let u = GridBox::cube(2, 1.5, 32);
    let r = reineck_verify(&twisted, &u, &g, &h, 2.0, STEP).unwrap();
    assert!(r.all_equal(), "{}", r.continuation);
    assert_eq!(r.e_index.dims, e01());
}

#[test]
fn reineck_rejects_unsupported_gradient() {
    let g = conley_core::ls_system::GradientSpec::quadratic(SplitModel::diagonal(vec![-1.0]).unwrap());
    let f = catalog::expand1d();
    let r = reineck_verify(&f, &GridBox::cube(1, 1.0, 16), &g, &HomotopyFamily::constant(f.clone()), 2.0, STEP);
    assert!(matches!(r, Err(Error::Precondition(_))));
}
