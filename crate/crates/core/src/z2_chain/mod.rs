//! Z₂ linear algebra and (relative) cubical (co)homology.

mod cubical;
mod matrix;
mod mayer_vietoris;

use std::collections::BTreeMap;
use std::fmt;

pub use cubical::{cubical_complex, relative_pair_complex, Cube, CubicalComplex, CubicalSet};
pub use matrix::{rank_z2, BitRow, TrackedEchelon, Z2Matrix};
pub use mayer_vietoris::{mv_connecting, CohomologyBasis, MvExactness, MvTriad};

use crate::error::{Error, Result};

/// Betti numbers over Z₂ indexed by integer degree.
///
/// `dims[i]` is the dimension in degree `offset + i`; degrees outside the
/// stored range are zero. Equality compares the degree → dimension maps, so
/// padding and offsets do not matter.
#[derive(Clone, Debug, Default)]
pub struct GradedDims {
    pub offset: i64,
    pub dims: Vec<usize>,
}

impl GradedDims {
    pub fn new(offset: i64, dims: Vec<usize>) -> Self {
        Self { offset, dims }
    }

    pub fn zero() -> Self {
        Self::default()
    }

    pub fn from_pairs(pairs: &[(i64, usize)]) -> Self {
        let map: BTreeMap<i64, usize> = pairs.iter().copied().collect();
        Self::from_map(&map)
    }

    pub fn from_map(map: &BTreeMap<i64, usize>) -> Self {
        let Some((&lo, _)) = map.iter().next() else {
            return Self::zero();
        };
        let hi = *map.keys().next_back().unwrap();
        let mut dims = vec![0; (hi - lo + 1) as usize];
        for (&k, &v) in map {
            dims[(k - lo) as usize] = v;
        }
        Self { offset: lo, dims }
    }

    pub fn get(&self, degree: i64) -> usize {
        let i = degree - self.offset;
        if i < 0 {
            return 0;
        }
        self.dims.get(i as usize).copied().unwrap_or(0)
    }

    /// Nonzero `(degree, dim)` entries in increasing degree.
    pub fn nonzero(&self) -> Vec<(i64, usize)> {
        self.dims.iter().enumerate().filter(|(_, &d)| d > 0).map(|(i, &d)| (self.offset + i as i64, d)).collect()
    }

    pub fn is_zero(&self) -> bool {
        self.dims.iter().all(|&d| d == 0)
    }

    pub fn total(&self) -> usize {
        self.dims.iter().sum()
    }

    /// Same table re-indexed so that old degree `k` becomes `k + by`.
    pub fn shifted(&self, by: i64) -> Self {
        Self { offset: self.offset + by, dims: self.dims.clone() }
    }
}

impl PartialEq for GradedDims {
    fn eq(&self, other: &Self) -> bool {
        self.nonzero() == other.nonzero()
    }
}

impl Eq for GradedDims {}

impl fmt::Display for GradedDims {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{{")?;
        for (i, (k, d)) in self.nonzero().into_iter().enumerate() {
            if i > 0 {
                write!(f, ", ")?;
            }
            write!(f, "{k}: {d}")?;
        }
        write!(f, "}}")
    }
}

/// A finite chain complex over Z₂.
///
/// `boundaries[k]` is ∂_k : C_k → C_{k-1}, a matrix with one column per
/// degree-k generator. ∂_0 has zero rows.
#[derive(Clone, Debug)]
pub struct ChainComplexZ2 {
    boundaries: Vec<Z2Matrix>,
}

impl ChainComplexZ2 {
    /// Builds and validates a complex: consecutive shapes must chain and
    /// every composite ∂_k∂_{k+1} must vanish.
    pub fn new(boundaries: Vec<Z2Matrix>) -> Result<Self> {
        let c = Self { boundaries };
        c.validate()?;
        Ok(c)
    }

    /// Skips the ∂∂ check; for complexes built from face relations.
    pub(crate) fn new_unchecked(boundaries: Vec<Z2Matrix>) -> Self {
        Self { boundaries }
    }

    pub fn validate(&self) -> Result<()> {
        if let Some(d0) = self.boundaries.first() {
            if d0.rows() != 0 {
                return Err(Error::ShapeMismatch { degree: 0 });
            }
        }
        for k in 0..self.boundaries.len().saturating_sub(1) {
            let (lo, hi) = (&self.boundaries[k], &self.boundaries[k + 1]);
            if lo.cols() != hi.rows() {
                return Err(Error::ShapeMismatch { degree: k + 1 });
            }
            if !lo.mul(hi).is_zero() {
                return Err(Error::BoundarySquareNonzero { degree: k });
            }
        }
        Ok(())
    }

    /// Highest degree with generators slots (inclusive); `None` for the empty complex.
    pub fn top_degree(&self) -> Option<usize> {
        self.boundaries.len().checked_sub(1)
    }

    pub fn boundary(&self, k: usize) -> &Z2Matrix {
        &self.boundaries[k]
    }

    pub fn boundaries(&self) -> &[Z2Matrix] {
        &self.boundaries
    }

    pub fn generators(&self, k: usize) -> usize {
        self.boundaries.get(k).map_or(0, Z2Matrix::cols)
    }

    /// Coboundary δ^k : C^k → C^{k+1}, i.e. ∂_{k+1}ᵀ.
    pub fn coboundary(&self, k: usize) -> Z2Matrix {
        match self.boundaries.get(k + 1) {
            Some(d) => d.transpose(),
            None => Z2Matrix::zeros(0, self.generators(k)),
        }
    }

    /// Cohomology dimensions, computed from the transposed maps.
    pub fn cohomology_dims(&self) -> GradedDims {
        let n = self.boundaries.len();
        let dims = (0..n)
            .map(|k| {
                let nullity = self.generators(k) - self.coboundary(k).rank();
                let image = if k == 0 { 0 } else { self.coboundary(k - 1).rank() };
                nullity - image
            })
            .collect();
        GradedDims::new(0, dims)
    }
}

/// Z₂ homology dimensions `dim ker ∂_k − rank ∂_{k+1}`.
pub fn homology_dims(c: &ChainComplexZ2) -> Result<GradedDims> {
    c.validate()?;
    let ranks: Vec<usize> = c.boundaries.iter().map(Z2Matrix::rank).collect();
    let dims = (0..c.boundaries.len())
        .map(|k| {
            let nullity = c.generators(k) - ranks[k];
            nullity - ranks.get(k + 1).copied().unwrap_or(0)
        })
        .collect();
    Ok(GradedDims::new(0, dims))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn circle() -> ChainComplexZ2 {
        // 4 vertices, 4 edges e_i = (v_i, v_{i+1})
        let mut d1 = Z2Matrix::zeros(4, 4);
        for e in 0..4 {
            d1.set(e, e, true);
            d1.set((e + 1) % 4, e, true);
        }
        ChainComplexZ2::new(vec![Z2Matrix::zeros(0, 4), d1]).unwrap()
    }

    #[test]
    fn point_interval_circle() {
        let point = ChainComplexZ2::new(vec![Z2Matrix::zeros(0, 1)]).unwrap();
        assert_eq!(homology_dims(&point).unwrap(), GradedDims::from_pairs(&[(0, 1)]));

        let interval =
            ChainComplexZ2::new(vec![Z2Matrix::zeros(0, 2), Z2Matrix::from_rows(&[vec![1], vec![1]])]).unwrap();
        assert_eq!(homology_dims(&interval).unwrap(), GradedDims::from_pairs(&[(0, 1)]));

        assert_eq!(homology_dims(&circle()).unwrap(), GradedDims::from_pairs(&[(0, 1), (1, 1)]));
    }

    #[test]
    fn rejects_nonzero_square() {
        let d1 = Z2Matrix::from_rows(&[vec![1], vec![0]]);
        let d2 = Z2Matrix::from_rows(&[vec![1]]);
        let err = ChainComplexZ2::new(vec![Z2Matrix::zeros(0, 2), d1, d2]).unwrap_err();
        assert!(matches!(err, Error::BoundarySquareNonzero { degree: 1 }));
    }

    #[test]
    fn cohomology_matches_homology_on_circle() {
        let c = circle();
        assert_eq!(c.cohomology_dims(), homology_dims(&c).unwrap());
    }

    #[test]
    fn graded_dims_equality_ignores_padding() {
        let a = GradedDims::new(-1, vec![0, 1, 0, 0]);
        let b = GradedDims::from_pairs(&[(0, 1)]);
        assert_eq!(a, b);
        assert_eq!(a.get(0), 1);
        assert_eq!(a.get(7), 0);
        assert_eq!(a.shifted(2).nonzero(), vec![(2, 1)]);
        assert_eq!(format!("{a}"), "{0: 1}");
        assert!(GradedDims::new(3, vec![0, 0]).is_zero());
    }
}
