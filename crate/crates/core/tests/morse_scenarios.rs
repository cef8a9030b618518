use std::collections::BTreeMap;

use conley_core::catalog::{self, random_separable, separable_system, AxisProfile};
use conley_core::conley_e::suspension_check;
use conley_core::isolation::GridBox;
use conley_core::ls_system::{negative_gradient_field, GradientSpec, SplitModel};
use conley_core::morse_local::{build_boundary, build_boundary_with, compare_with_e_index, mcf_homology, MorseOptions};
use conley_core::z2_chain::{GradedDims, Z2Matrix};
use conley_core::Error;

const STEP: f64 = 1e-2;

/// Per-axis (generators by μ⁻, homology by μ⁻) of the 1D gradient flow on
/// [−1.5, 1.5], worked out by hand from the graph of φ.
fn axis_tables(p: AxisProfile) -> (Vec<usize>, Vec<usize>) {
    match p {
        AxisProfile::Min(_) => (vec![1, 0], vec![1, 0]),
        AxisProfile::Max(_) => (vec![0, 1], vec![0, 1]),
        // both minima are hit by the maximum
        AxisProfile::Well(_) => (vec![2, 1], vec![1, 0]),
        // each maximum flows into the minimum on one side and out of U on the other
        AxisProfile::Hill(_) => (vec![1, 2], vec![0, 1]),
    }
}

fn convolve(a: &[usize], b: &[usize]) -> Vec<usize> {
    let mut out = vec![0; a.len() + b.len() - 1];
    for (i, x) in a.iter().enumerate() {
        for (j, y) in b.iter().enumerate() {
            out[i + j] += x * y;
        }
    }
    out
}

/// Künneth over Z₂, shifted by −d⁻.
fn kunneth(axes: &[AxisProfile]) -> (GradedDims, GradedDims) {
    let (mut gens, mut hom) = (vec![1], vec![1]);
    for &p in axes {
        let (g, h) = axis_tables(p);
        gens = convolve(&gens, &g);
        hom = convolve(&hom, &h);
    }
    let d_minus = axes.iter().filter(|p| p.spectrum() < 0.0).count() as i64;
    (GradedDims::new(-d_minus, gens), GradedDims::new(-d_minus, hom))
}

#[test]
fn random_separable_systems() {
    for seed in 0..25 {
        let axes = random_separable(seed);
        let (g, u) = separable_system(&axes);
        let mut opts = MorseOptions::default();
        // ∂² = 0 is enforced when the complex is assembled
        let a = build_boundary_with(&g, &u, &opts).unwrap_or_else(|e| panic!("seed {seed} {axes:?}: {e}"));
        let (gens, hom) = kunneth(&axes);
        assert_eq!(a.generator_counts(), gens, "seed {seed} {axes:?}");
        assert_eq!(a.homology().unwrap(), hom, "seed {seed} {axes:?}");
        opts.shooting.directions *= 2;
        let b = build_boundary_with(&g, &u, &opts).unwrap();
        for k in a.min_degree..=a.min_degree + 3 {
            assert_eq!(a.boundary(k), b.boundary(k), "seed {seed} degree {k}");
        }
    }
}

#[test]
fn doublewell_morse_equals_conley() {
    let g = catalog::doublewell_gradient();
    let u = catalog::doublewell_grid();
    let m = build_boundary(&g, &u).unwrap();
    assert_eq!(m.boundary(1), Z2Matrix::from_rows(&[vec![1], vec![1]]));
    let cmp = compare_with_e_index(&g, &u, Some(2.0), STEP).unwrap();
    assert_eq!(cmp.morse, GradedDims::from_pairs(&[(0, 1)]));
    assert!(cmp.agrees(), "{cmp:?}");
}

#[test]
fn doublewell_connection_witnesses_stay_in_u() {
    let u = catalog::doublewell_grid();
    let m = build_boundary(&catalog::doublewell_gradient(), &u).unwrap();
    let bounds = u.bounds();
    for c in &m.connections {
        assert_eq!(c.orbits, 1);
        for w in &c.witnesses {
            assert!(w.points.iter().all(|p| bounds.contains(p)));
        }
    }
}

#[test]
fn mcf_matches_morse_for_gradient_flows() {
    for (g, u) in [
        (catalog::expand1d_gradient(), GridBox::cube(1, 1.0, 64)),
        (catalog::saddle2d_gradient(), GridBox::cube(2, 1.0, 64)),
    ] {
        let f = negative_gradient_field(&g);
        let r = mcf_homology(&f, &u, &g, 3.0, STEP).unwrap();
        assert_eq!(r.dims, conley_core::morse_local::local_morse_homology(&g, &u).unwrap());
        assert_eq!(r.decrease_samples, 500);
    }
    let r = mcf_homology(&catalog::expand1d(), &GridBox::cube(1, 1.0, 64), &catalog::expand1d_gradient(), 2.0, STEP)
        .unwrap();
    assert_eq!(r.dims, GradedDims::from_pairs(&[(0, 1)]));
}

#[test]
fn mcf_rejects_increasing_function() {
    // −½x² increases along ẋ = −x
    let flipped = GradientSpec::quadratic(SplitModel::diagonal(vec![-1.0]).unwrap());
    let r = mcf_homology(&catalog::contract1d(), &GridBox::cube(1, 1.0, 32), &flipped, 2.0, STEP);
    assert!(matches!(r, Err(Error::LyapunovViolation { .. })));
}

#[test]
fn mcf_rejects_nonconstant_on_invariant_set() {
    let g = catalog::doublewell_gradient();
    let r = mcf_homology(&negative_gradient_field(&g), &GridBox::cube(2, 1.5, 32), &g, 2.0, STEP);
    assert!(matches!(r, Err(Error::LyapunovViolation { .. })));
}

#[test]
fn suspension_of_saddle_and_doublewell() {
    let r = suspension_check(&catalog::saddle2d(), &GridBox::cube(2, 1.0, 32), 2.0, STEP, 32).unwrap();
    assert!(r.holds(), "{r:?}");
    let r = suspension_check(&catalog::doublewell(), &GridBox::cube(2, 1.5, 32), 2.0, STEP, 32).unwrap();
    assert!(r.classical_shifted_by_one(), "{r:?}");
    assert!(r.e_tables_equal());
    let mut expected = BTreeMap::new();
    expected.insert(0, 1);
    assert_eq!(r.e_dims.dims, GradedDims::from_map(&expected));
}
