//! Mayer–Vietoris connecting maps for the triad obtained by cutting a cubical
//! set along a coordinate hyperplane.
//!
//! For `X_W` split by `x_axis = 0` into `X⁺ = {x_axis ≥ 0}` and
//! `X⁻ = {x_axis ≤ 0}` with `X⁺ ∩ X⁻ = X_V`, the short exact sequence of
//! cochain complexes
//!
//! ```text
//! 0 → C*(X_W) → C*(X⁺) ⊕ C*(X⁻) → C*(X_V) → 0
//! ```
//!
//! yields `Δ^k : H^k(X_V) → H^{k+1}(X_W)`. A cocycle `z` on `X_V` is extended
//! by zero to `X⁺`; its coboundary vanishes on `X_V` and is read as a cochain
//! on `X_W` (zero on `X⁻ ∖ X_V`).

use super::{cubical_complex, BitRow, CubicalComplex, CubicalSet, TrackedEchelon, Z2Matrix};
use crate::error::{Error, Result};

/// Cocycle representatives of a basis of `H^k` plus the machinery to express
/// arbitrary cocycles in that basis.
#[derive(Clone, Debug)]
pub struct CohomologyBasis {
    pub degree: usize,
    pub reps: Vec<BitRow>,
    echelon: TrackedEchelon,
    coboundaries: usize,
    cochain_len: usize,
}

impl CohomologyBasis {
    pub fn compute(c: &CubicalComplex, k: usize) -> Self {
        let n = c.generators(k);
        if k >= c.cells.len() {
            return Self {
                degree: k,
                reps: Vec::new(),
                echelon: TrackedEchelon::new(0),
                coboundaries: 0,
                cochain_len: 0,
            };
        }
        let coboundary_rows: Vec<BitRow> = if k >= 1 {
            let dk = c.complex.boundary(k);
            (0..dk.rows()).map(|r| dk.row(r).clone()).collect()
        } else {
            Vec::new()
        };
        // B^k = span of the rows of ∂_k; extend it by cocycles to a basis of Z^k
        let mut probe = TrackedEchelon::new(n);
        for b in &coboundary_rows {
            probe.insert(b);
        }
        let reps: Vec<BitRow> =
            c.complex.coboundary(k).kernel_basis().into_iter().filter(|z| probe.insert(z)).collect();
        let mut echelon = TrackedEchelon::new(n);
        for v in coboundary_rows.iter().chain(&reps) {
            echelon.insert(v);
        }
        Self { degree: k, reps, echelon, coboundaries: coboundary_rows.len(), cochain_len: n }
    }

    pub fn dim(&self) -> usize {
        self.reps.len()
    }

    /// Coordinates of a cocycle in the representative basis.
    pub fn coordinates(&self, cocycle: &BitRow) -> Option<BitRow> {
        assert_eq!(cocycle.len(), self.cochain_len);
        let combo = self.echelon.coordinates(cocycle)?;
        let mut out = BitRow::zeros(self.reps.len());
        for i in 0..self.reps.len() {
            if combo.get(self.coboundaries + i) {
                out.set(i, true);
            }
        }
        Some(out)
    }
}

/// Rank of Δ^k and of the restriction map in one degree, with the exactness
/// verdict `dim H^k(X_V) = rank(restriction) + rank(Δ^k)`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct MvExactness {
    pub degree: usize,
    pub dim_middle: usize,
    pub restriction_rank: usize,
    pub connecting_rank: usize,
}

impl MvExactness {
    pub fn holds(&self) -> bool {
        self.dim_middle == self.restriction_rank + self.connecting_rank
    }
}

/// A cubical set cut by the hyperplane `x_axis = 0`.
#[derive(Clone, Debug)]
pub struct MvTriad {
    pub whole: CubicalSet,
    pub plus: CubicalSet,
    pub minus: CubicalSet,
    pub middle: CubicalSet,
    pub axis: usize,
    whole_cx: CubicalComplex,
    plus_cx: CubicalComplex,
    minus_cx: CubicalComplex,
    middle_cx: CubicalComplex,
}

impl MvTriad {
    /// `flipped` swaps the roles of the two half-spaces (orientation `−u₀`).
    pub fn new(xw: &CubicalSet, axis: usize, flipped: bool) -> Result<Self> {
        if axis >= xw.ambient_dim() {
            return Err(Error::InvalidTriad(format!(
                "axis {axis} out of range for ambient dimension {}",
                xw.ambient_dim()
            )));
        }
        if !xw.is_face_closed() {
            return Err(Error::InvalidTriad("X_W is not face-closed".into()));
        }
        let upper = xw.filter(|c| c.lo()[axis] >= 0);
        let lower = xw.filter(|c| c.hi()[axis] <= 0);
        let (plus, minus) = if flipped { (lower, upper) } else { (upper, lower) };
        if plus.union(&minus) != *xw {
            return Err(Error::InvalidTriad("X⁺ ∪ X⁻ does not cover X_W".into()));
        }
        if !plus.is_face_closed() || !minus.is_face_closed() {
            return Err(Error::InvalidTriad("half-space pieces are not closed".into()));
        }
        let middle = plus.intersection(&minus);
        Ok(Self {
            whole_cx: cubical_complex(xw)?,
            plus_cx: cubical_complex(&plus)?,
            minus_cx: cubical_complex(&minus)?,
            middle_cx: cubical_complex(&middle)?,
            whole: xw.clone(),
            plus,
            minus,
            middle,
            axis,
        })
    }

    fn top(&self) -> usize {
        self.whole.ambient_dim()
    }

    pub fn middle_basis(&self, k: usize) -> CohomologyBasis {
        CohomologyBasis::compute(&self.middle_cx, k)
    }

    pub fn whole_basis(&self, k: usize) -> CohomologyBasis {
        CohomologyBasis::compute(&self.whole_cx, k)
    }

    /// Matrix of Δ^k : H^k(X_V) → H^{k+1}(X_W) in the given bases.
    pub fn connecting_in(&self, src: &CohomologyBasis, dst: &CohomologyBasis) -> Z2Matrix {
        let k = src.degree;
        assert_eq!(dst.degree, k + 1);
        let mut m = Z2Matrix::zeros(dst.dim(), src.dim());
        if k + 1 > self.top() {
            return m;
        }
        let mid_k = &self.middle_cx.cells[k];
        let whole_k1 = &self.whole_cx.cells[k + 1];
        for (j, z) in src.reps.iter().enumerate() {
            let mut image = BitRow::zeros(whole_k1.len());
            for (i, cube) in whole_k1.iter().enumerate() {
                if !self.plus.contains(cube) || self.middle.contains(cube) {
                    continue;
                }
                let mut bit = false;
                for f in cube.faces() {
                    if let Some(&fi) = self.middle_cx.index.get(&f) {
                        if f.dim() == k && z.get(fi) {
                            bit = !bit;
                        }
                    }
                }
                if bit {
                    image.set(i, true);
                }
            }
            debug_assert_eq!(mid_k.len(), z.len());
            let coords = dst.coordinates(&image).expect("connecting image must be a cocycle on X_W");
            for i in coords.ones() {
                m.set(i, j, true);
            }
        }
        m
    }

    /// Δ^k with freshly computed bases.
    pub fn connecting(&self, k: usize) -> Z2Matrix {
        self.connecting_in(&self.middle_basis(k), &self.whole_basis(k + 1))
    }

    /// Rank of H^k(X⁺) ⊕ H^k(X⁻) → H^k(X_V), (a, b) ↦ a|_V − b|_V.
    pub fn restriction_rank(&self, k: usize) -> usize {
        let target = self.middle_basis(k);
        let mut cols = Vec::new();
        for cx in [&self.plus_cx, &self.minus_cx] {
            let basis = CohomologyBasis::compute(cx, k);
            for rep in &basis.reps {
                let mut restricted = BitRow::zeros(self.middle_cx.generators(k));
                for (i, cube) in self.middle_cx.cells[k].iter().enumerate() {
                    let pi = cx.index[cube];
                    if rep.get(pi) {
                        restricted.set(i, true);
                    }
                }
                cols.push(target.coordinates(&restricted).expect("restriction of a cocycle is a cocycle"));
            }
        }
        Z2Matrix::from_columns(target.dim(), &cols).rank()
    }

    pub fn exactness(&self, k: usize) -> MvExactness {
        MvExactness {
            degree: k,
            dim_middle: self.middle_basis(k).dim(),
            restriction_rank: self.restriction_rank(k),
            connecting_rank: self.connecting(k).rank(),
        }
    }

    /// Exactness rows for every degree of the ambient space.
    pub fn exactness_all(&self) -> Vec<MvExactness> {
        (0..=self.top()).map(|k| self.exactness(k)).collect()
    }
}

/// Connecting matrices Δ^k for k = 0..=ambient dimension.
pub fn mv_connecting(xw: &CubicalSet, axis: usize) -> Result<Vec<Z2Matrix>> {
    let triad = MvTriad::new(xw, axis, false)?;
    Ok((0..=xw.ambient_dim()).map(|k| triad.connecting(k)).collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn two_sphere_to_circle() {
        let s2 = CubicalSet::box_sphere(3, 3);
        let triad = MvTriad::new(&s2, 2, false).unwrap();
        assert_eq!(triad.middle, CubicalSet::box_sphere(2, 3));
        let deltas = mv_connecting(&s2, 2).unwrap();
        assert_eq!(deltas[1].rows(), 1);
        assert_eq!(deltas[1].cols(), 1);
        assert_eq!(deltas[1].rank(), 1);
        for row in triad.exactness_all() {
            assert!(row.holds(), "{row:?}");
        }
    }

    #[test]
    fn circle_to_two_points() {
        let s1 = CubicalSet::box_sphere(2, 2);
        let deltas = mv_connecting(&s1, 1).unwrap();
        assert_eq!(deltas[0].cols(), 2);
        assert_eq!(deltas[0].rank(), 1);
    }

    #[test]
    fn empty_set_gives_empty_matrices() {
        let deltas = mv_connecting(&CubicalSet::empty(2), 0).unwrap();
        assert!(deltas.iter().all(|m| m.rows() == 0 && m.cols() == 0));
    }

    #[test]
    fn orientation_flip_preserves_rank() {
        let s2 = CubicalSet::box_sphere(3, 3);
        let a = MvTriad::new(&s2, 2, false).unwrap().connecting(1);
        let b = MvTriad::new(&s2, 2, true).unwrap().connecting(1);
        assert_eq!(a.rank(), b.rank());
    }

    #[test]
    fn rejects_bad_axis_and_open_sets() {
        let s1 = CubicalSet::box_sphere(2, 2);
        assert!(MvTriad::new(&s1, 5, false).is_err());
        let open = s1.filter(|c| c.dim() == 1);
        assert!(matches!(mv_connecting(&open, 0), Err(Error::InvalidTriad(_))));
    }
}
