use std::collections::BTreeSet;

use proptest::prelude::*;

use conley_core::z2_chain::{
    cubical_complex, homology_dims, relative_pair_complex, ChainComplexZ2, Cube, CubicalSet, GradedDims, MvTriad,
    Z2Matrix,
};

/// Rank by enumerating every subset of columns: 2^rank distinct sums.
fn brute_rank(m: &Z2Matrix) -> usize {
    assert!(m.cols() <= 12 && m.rows() <= 64);
    let cols: Vec<u64> =
        (0..m.cols()).map(|c| (0..m.rows()).filter(|&r| m.get(r, c)).fold(0u64, |acc, r| acc | 1 << r)).collect();
    let mut seen = BTreeSet::new();
    for mask in 0u32..(1 << cols.len()) {
        let v = (0..cols.len()).filter(|&i| mask >> i & 1 == 1).fold(0u64, |acc, i| acc ^ cols[i]);
        seen.insert(v);
    }
    seen.len().trailing_zeros() as usize
}

fn brute_homology(c: &ChainComplexZ2) -> GradedDims {
    let b = c.boundaries();
    let ranks: Vec<usize> = b.iter().map(brute_rank).collect();
    let dims = (0..b.len()).map(|k| b[k].cols() - ranks[k] - ranks.get(k + 1).copied().unwrap_or(0)).collect();
    GradedDims::new(0, dims)
}

/// Random cubical set in the 2×2 block `[−1, 1]²`: some full squares plus
/// stray edges and vertices, closed under faces.
fn cubical_set() -> impl Strategy<Value = CubicalSet> {
    (
        proptest::collection::vec(any::<bool>(), 4),
        proptest::collection::vec((0..3i32, 0..2i32, any::<bool>()), 0..5),
        proptest::collection::vec((0..3i32, 0..3i32), 0..3),
    )
        .prop_map(|(squares, edges, verts)| {
            let mut cubes = Vec::new();
            for (i, &on) in squares.iter().enumerate() {
                if on {
                    cubes.push(Cube::full(&[i as i32 % 2 - 1, i as i32 / 2 - 1]));
                }
            }
            for (a, b, vertical) in edges {
                let (x, y) = (a - 1, b - 1);
                cubes.push(if vertical {
                    Cube::new(vec![x, y], vec![x, y + 1])
                } else {
                    Cube::new(vec![y, x], vec![y + 1, x])
                });
            }
            for (a, b) in verts {
                cubes.push(Cube::vertex(&[a - 1, b - 1]));
            }
            CubicalSet::closure_of(2, cubes)
        })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(96))]

    #[test]
    fn boundary_squares_to_zero(x in cubical_set()) {
        let cx = cubical_complex(&x).unwrap();
        let b = cx.complex.boundaries();
        for k in 1..b.len() {
            prop_assert!(b[k - 1].mul(&b[k]).is_zero());
        }
    }

    #[test]
    fn homology_matches_brute_force(x in cubical_set()) {
        let cx = cubical_complex(&x).unwrap();
        prop_assert_eq!(homology_dims(&cx.complex).unwrap(), brute_homology(&cx.complex));
    }

    #[test]
    fn rank_matches_brute_force(rows in proptest::collection::vec(proptest::collection::vec(0u8..2, 10), 1..12)) {
        let m = Z2Matrix::from_rows(&rows);
        prop_assert_eq!(m.rank(), brute_rank(&m));
        prop_assert_eq!(m.transpose().rank(), m.rank());
        prop_assert_eq!(m.kernel_basis().len(), m.cols() - m.rank());
        for v in m.kernel_basis() {
            prop_assert!(m.apply(&v).is_zero());
        }
    }

    #[test]
    fn cohomology_equals_homology(x in cubical_set()) {
        let cx = cubical_complex(&x).unwrap();
        prop_assert_eq!(cx.complex.cohomology_dims(), homology_dims(&cx.complex).unwrap());
    }

    #[test]
    fn euler_characteristic(x in cubical_set()) {
        let cx = cubical_complex(&x).unwrap();
        let h = homology_dims(&cx.complex).unwrap();
        let chi_cells: i64 = (0..3).map(|k| (-1i64).pow(k as u32) * cx.complex.generators(k) as i64).sum();
        let chi_h: i64 = h.nonzero().iter().map(|&(k, d)| (-1i64).pow(k as u32) * d as i64).sum();
        prop_assert_eq!(chi_cells, chi_h);
    }

    #[test]
    fn relative_pair_euler(x in cubical_set(), y in cubical_set()) {
        // (X ∪ Y, Y): χ(X ∪ Y, Y) = χ(X ∪ Y) − χ(Y)
        let whole = x.union(&y);
        let rel = relative_pair_complex(&whole, &y).unwrap();
        let chi = |h: GradedDims| -> i64 { h.nonzero().iter().map(|&(k, d)| (-1i64).pow(k as u32) * d as i64).sum() };
        let hw = homology_dims(&cubical_complex(&whole).unwrap().complex).unwrap();
        let hy = homology_dims(&cubical_complex(&y).unwrap().complex).unwrap();
        prop_assert_eq!(chi(homology_dims(&rel).unwrap()), chi(hw) - chi(hy));
        prop_assert_eq!(homology_dims(&rel).unwrap(), brute_homology(&rel));
    }

    #[test]
    fn mayer_vietoris_exact(x in cubical_set(), axis in 0usize..2, flipped in any::<bool>()) {
        let triad = MvTriad::new(&x, axis, flipped).unwrap();
        for e in triad.exactness_all() {
            prop_assert!(e.holds(), "{:?}", e);
        }
    }
}

#[test]
fn relative_pair_of_self_is_zero() {
    let x = CubicalSet::solid_box(&[0, 0], &[2, 2]);
    let rel = relative_pair_complex(&x, &x).unwrap();
    assert!(homology_dims(&rel).unwrap().is_zero());
}
