//! Elementary cubes, face-closed cubical sets and their chain complexes.

use std::collections::{BTreeSet, HashMap};
use std::fmt;
use std::str::FromStr;

use super::{ChainComplexZ2, Z2Matrix};
use crate::error::{Error, Result};

/// An elementary cube: a product of intervals `[lo_i, hi_i]` with
/// `hi_i − lo_i ∈ {0, 1}` on the integer lattice.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Cube {
    lo: Vec<i32>,
    hi: Vec<i32>,
}

impl Cube {
    pub fn new(lo: Vec<i32>, hi: Vec<i32>) -> Self {
        assert_eq!(lo.len(), hi.len());
        assert!(lo.iter().zip(&hi).all(|(a, b)| b - a == 0 || b - a == 1), "not an elementary cube");
        Self { lo, hi }
    }

    /// The full-dimensional unit cube with lower corner `lo`.
    pub fn full(lo: &[i32]) -> Self {
        Self { lo: lo.to_vec(), hi: lo.iter().map(|x| x + 1).collect() }
    }

    pub fn vertex(p: &[i32]) -> Self {
        Self { lo: p.to_vec(), hi: p.to_vec() }
    }

    pub fn ambient_dim(&self) -> usize {
        self.lo.len()
    }

    pub fn dim(&self) -> usize {
        self.lo.iter().zip(&self.hi).filter(|(a, b)| a != b).count()
    }

    pub fn lo(&self) -> &[i32] {
        &self.lo
    }

    pub fn hi(&self) -> &[i32] {
        &self.hi
    }

    /// Codimension-one faces (two per non-degenerate axis).
    pub fn faces(&self) -> Vec<Cube> {
        let mut out = Vec::with_capacity(2 * self.dim());
        for axis in 0..self.lo.len() {
            if self.lo[axis] == self.hi[axis] {
                continue;
            }
            let mut lower = self.clone();
            lower.hi[axis] = lower.lo[axis];
            let mut upper = self.clone();
            upper.lo[axis] = upper.hi[axis];
            out.push(lower);
            out.push(upper);
        }
        out
    }
}

impl fmt::Debug for Cube {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{self}")
    }
}

/// Snapshot notation: per axis the two interval endpoints, all
/// comma-separated; degenerate intervals repeat the coordinate.
impl fmt::Display for Cube {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, (a, b)) in self.lo.iter().zip(&self.hi).enumerate() {
            if i > 0 {
                write!(f, ",")?;
            }
            write!(f, "{a},{b}")?;
        }
        Ok(())
    }
}

impl FromStr for Cube {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let nums: Vec<i32> = s
            .split(',')
            .map(|t| t.trim().parse::<i32>())
            .collect::<std::result::Result<_, _>>()
            .map_err(|e| Error::InvalidArgument(format!("bad cube line {s:?}: {e}")))?;
        if nums.is_empty() || nums.len() % 2 != 0 {
            return Err(Error::InvalidArgument(format!("cube line {s:?} needs an even number of coordinates")));
        }
        let (lo, hi): (Vec<i32>, Vec<i32>) = nums.chunks(2).map(|c| (c[0], c[1])).unzip();
        if lo.iter().zip(&hi).any(|(a, b)| b - a != 0 && b - a != 1) {
            return Err(Error::InvalidArgument(format!("cube line {s:?} is not an elementary cube")));
        }
        Ok(Cube { lo, hi })
    }
}

/// A finite face-closed set of elementary cubes in a fixed ambient dimension.
#[derive(Clone, PartialEq, Eq, Default)]
pub struct CubicalSet {
    ambient: usize,
    cubes: BTreeSet<Cube>,
}

impl fmt::Debug for CubicalSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("CubicalSet").field("ambient", &self.ambient).field("cubes", &self.cubes.len()).finish()
    }
}

impl CubicalSet {
    pub fn empty(ambient: usize) -> Self {
        Self { ambient, cubes: BTreeSet::new() }
    }

    /// Face closure of arbitrary elementary cubes.
    pub fn closure_of<I: IntoIterator<Item = Cube>>(ambient: usize, cubes: I) -> Self {
        let mut set = BTreeSet::new();
        let mut stack: Vec<Cube> = cubes.into_iter().collect();
        while let Some(c) = stack.pop() {
            assert_eq!(c.ambient_dim(), ambient, "cube in wrong ambient dimension");
            if set.contains(&c) {
                continue;
            }
            stack.extend(c.faces());
            set.insert(c);
        }
        Self { ambient, cubes: set }
    }

    /// Closure of full-dimensional unit cubes given by their lower corners.
    pub fn from_full_cells<'a, I: IntoIterator<Item = &'a [i32]>>(ambient: usize, corners: I) -> Self {
        Self::closure_of(ambient, corners.into_iter().map(Cube::full))
    }

    /// Takes a cube set as given, without closing it.
    pub fn from_cubes_raw<I: IntoIterator<Item = Cube>>(ambient: usize, cubes: I) -> Self {
        Self { ambient, cubes: cubes.into_iter().collect() }
    }

    /// Solid box `[lo, hi]` subdivided into unit cubes.
    pub fn solid_box(lo: &[i32], hi: &[i32]) -> Self {
        let ambient = lo.len();
        let mut corners = vec![Vec::new()];
        for axis in 0..ambient {
            let mut next = Vec::new();
            for c in &corners {
                if lo[axis] == hi[axis] {
                    let mut c2: Vec<i32> = c.clone();
                    c2.push(lo[axis]);
                    next.push(c2);
                    continue;
                }
                for x in lo[axis]..hi[axis] {
                    let mut c2: Vec<i32> = c.clone();
                    c2.push(x);
                    next.push(c2);
                }
            }
            corners = next;
        }
        let cubes = corners.into_iter().map(|c| {
            let hi_c = c.iter().enumerate().map(|(a, &x)| if lo[a] == hi[a] { x } else { x + 1 }).collect();
            Cube::new(c, hi_c)
        });
        Self::closure_of(ambient, cubes)
    }

    /// Boundary of the solid box `[-1, 1]^n × {0}^{ambient-n}`: a cubical
    /// (n−1)-sphere. For `n = 0` the result is empty.
    pub fn box_sphere(n: usize, ambient: usize) -> Self {
        assert!(n <= ambient);
        if n == 0 {
            return Self::empty(ambient);
        }
        let lo: Vec<i32> = (0..ambient).map(|a| if a < n { -1 } else { 0 }).collect();
        let hi: Vec<i32> = (0..ambient).map(|a| if a < n { 1 } else { 0 }).collect();
        let solid = Self::solid_box(&lo, &hi);
        // a cube lies on the boundary iff some axis is pinned at ±1
        Self {
            ambient,
            cubes: solid
                .cubes
                .into_iter()
                .filter(|c| (0..n).any(|a| c.lo[a] == c.hi[a] && c.lo[a].abs() == 1))
                .collect(),
        }
    }

    pub fn ambient_dim(&self) -> usize {
        self.ambient
    }

    pub fn len(&self) -> usize {
        self.cubes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.cubes.is_empty()
    }

    pub fn contains(&self, c: &Cube) -> bool {
        self.cubes.contains(c)
    }

    pub fn iter(&self) -> impl Iterator<Item = &Cube> {
        self.cubes.iter()
    }

    pub fn is_subset(&self, other: &CubicalSet) -> bool {
        self.cubes.is_subset(&other.cubes)
    }

    pub fn is_face_closed(&self) -> bool {
        self.cubes.iter().all(|c| c.faces().iter().all(|f| self.cubes.contains(f)))
    }

    pub fn top_dim(&self) -> Option<usize> {
        self.cubes.iter().map(Cube::dim).max()
    }

    /// Cubes of dimension `k`, in sorted order.
    pub fn cubes_of_dim(&self, k: usize) -> Vec<Cube> {
        self.cubes.iter().filter(|c| c.dim() == k).cloned().collect()
    }

    pub fn filter<F: Fn(&Cube) -> bool>(&self, pred: F) -> CubicalSet {
        Self { ambient: self.ambient, cubes: self.cubes.iter().filter(|c| pred(c)).cloned().collect() }
    }

    pub fn union(&self, other: &CubicalSet) -> CubicalSet {
        assert_eq!(self.ambient, other.ambient);
        Self { ambient: self.ambient, cubes: self.cubes.union(&other.cubes).cloned().collect() }
    }

    pub fn intersection(&self, other: &CubicalSet) -> CubicalSet {
        assert_eq!(self.ambient, other.ambient);
        Self { ambient: self.ambient, cubes: self.cubes.intersection(&other.cubes).cloned().collect() }
    }

    /// One cube per line, sorted.
    pub fn to_snapshot_lines(&self) -> Vec<String> {
        self.cubes.iter().map(Cube::to_string).collect()
    }

    /// Parses snapshot lines; blank lines and `#` comments are skipped.
    pub fn parse_snapshot(ambient: usize, text: &str) -> Result<Self> {
        let mut cubes = BTreeSet::new();
        for line in text.lines() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let c: Cube = line.parse()?;
            if c.ambient_dim() != ambient {
                return Err(Error::DimensionMismatch { expected: ambient, got: c.ambient_dim() });
            }
            cubes.insert(c);
        }
        Ok(Self { ambient, cubes })
    }
}

/// Absolute cubical chain complex of a face-closed set, with the cube order
/// used for each degree.
#[derive(Clone, Debug)]
pub struct CubicalComplex {
    pub cells: Vec<Vec<Cube>>,
    pub index: HashMap<Cube, usize>,
    pub complex: ChainComplexZ2,
}

impl CubicalComplex {
    pub fn generators(&self, k: usize) -> usize {
        self.cells.get(k).map_or(0, Vec::len)
    }
}

fn build_complex(x: &CubicalSet, skip: Option<&CubicalSet>) -> CubicalComplex {
    let top = x.ambient;
    let keep = |c: &Cube| skip.is_none_or(|a| !a.contains(c));
    let mut cells: Vec<Vec<Cube>> = vec![Vec::new(); top + 1];
    for c in x.iter().filter(|c| keep(c)) {
        cells[c.dim()].push(c.clone());
    }
    let index: HashMap<Cube, usize> =
        cells.iter().flat_map(|layer| layer.iter().enumerate().map(|(i, c)| (c.clone(), i))).collect();
    let mut boundaries = Vec::with_capacity(top + 1);
    boundaries.push(Z2Matrix::zeros(0, cells[0].len()));
    for k in 1..=top {
        let mut d = Z2Matrix::zeros(cells[k - 1].len(), cells[k].len());
        for (j, c) in cells[k].iter().enumerate() {
            for f in c.faces() {
                if let Some(&i) = index.get(&f) {
                    d.toggle(i, j);
                }
            }
        }
        boundaries.push(d);
    }
    CubicalComplex { cells, index, complex: ChainComplexZ2::new_unchecked(boundaries) }
}

/// Chain complex of a face-closed cubical set.
pub fn cubical_complex(x: &CubicalSet) -> Result<CubicalComplex> {
    if !x.is_face_closed() {
        return Err(Error::NotFaceClosed);
    }
    Ok(build_complex(x, None))
}

/// Relative chain complex C(X)/C(A): cells of X not in A, with faces that
/// land in A dropped from the boundary.
pub fn relative_pair_complex(x: &CubicalSet, a: &CubicalSet) -> Result<ChainComplexZ2> {
    if x.ambient != a.ambient {
        return Err(Error::DimensionMismatch { expected: x.ambient, got: a.ambient });
    }
    if !a.is_subset(x) {
        return Err(Error::NotSubset);
    }
    if !x.is_face_closed() || !a.is_face_closed() {
        return Err(Error::NotFaceClosed);
    }
    Ok(build_complex(x, Some(a)).complex)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::z2_chain::{homology_dims, GradedDims};

    fn dims(x: &CubicalSet, a: &CubicalSet) -> GradedDims {
        homology_dims(&relative_pair_complex(x, a).unwrap()).unwrap()
    }

    #[test]
    fn interval_rel_endpoints() {
        let x = CubicalSet::from_full_cells(1, [&[0][..]]);
        let a = CubicalSet::closure_of(1, [Cube::vertex(&[0]), Cube::vertex(&[1])]);
        assert_eq!(dims(&x, &a), GradedDims::from_pairs(&[(1, 1)]));
        assert!(dims(&x, &x).is_zero());
    }

    #[test]
    fn filled_square_rel_boundary() {
        let x = CubicalSet::from_full_cells(2, [&[0, 0][..]]);
        let a = x.filter(|c| c.dim() < 2);
        assert_eq!(dims(&x, &a), GradedDims::from_pairs(&[(2, 1)]));
    }

    #[test]
    fn box_spheres_have_sphere_homology() {
        for n in 1..=4 {
            let s = CubicalSet::box_sphere(n, 4);
            let h = homology_dims(&cubical_complex(&s).unwrap().complex).unwrap();
            let expected = if n == 1 {
                GradedDims::from_pairs(&[(0, 2)])
            } else {
                GradedDims::from_pairs(&[(0, 1), ((n - 1) as i64, 1)])
            };
            assert_eq!(h, expected, "S^{}", n - 1);
        }
    }

    #[test]
    fn rejects_non_subset() {
        let x = CubicalSet::from_full_cells(1, [&[0][..]]);
        let a = CubicalSet::closure_of(1, [Cube::vertex(&[5])]);
        assert_eq!(relative_pair_complex(&x, &a).unwrap_err(), Error::NotSubset);
    }

    #[test]
    fn snapshot_format() {
        let c = Cube::new(vec![0, 3], vec![1, 3]);
        assert_eq!(c.to_string(), "0,1,3,3");
        assert_eq!("0,1,3,3".parse::<Cube>().unwrap(), c);
        assert!("0,2".parse::<Cube>().is_err());
        let x = CubicalSet::from_full_cells(2, [&[0, 0][..], &[1, 0][..]]);
        let text = x.to_snapshot_lines().join("\n");
        assert_eq!(CubicalSet::parse_snapshot(2, &text).unwrap(), x);
    }
}
