//! Uniform grids on boxes and sets of their full-dimensional cells.

use std::collections::BTreeSet;
use std::fmt;

use rand::Rng;

use crate::error::{Error, Result};
use crate::ls_system::AaBox;
use crate::z2_chain::{Cube, CubicalSet};

/// A box `[lower, upper]` cut into `subdivisions[i]` equal cells per axis.
#[derive(Clone, Debug, PartialEq)]
pub struct GridBox {
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
    pub subdivisions: Vec<usize>,
}

impl GridBox {
    pub fn new(lower: Vec<f64>, upper: Vec<f64>, subdivisions: Vec<usize>) -> Result<Self> {
        AaBox::new(lower.clone(), upper.clone())?;
        if subdivisions.len() != lower.len() {
            return Err(Error::DimensionMismatch { expected: lower.len(), got: subdivisions.len() });
        }
        if subdivisions.contains(&0) {
            return Err(Error::InvalidArgument("subdivisions must be positive".into()));
        }
        Ok(Self { lower, upper, subdivisions })
    }

    /// `[-r, r]^d` with `n` cells per axis.
    pub fn cube(d: usize, r: f64, n: usize) -> Self {
        Self { lower: vec![-r; d], upper: vec![r; d], subdivisions: vec![n; d] }
    }

    pub fn from_box(b: &AaBox, n: usize) -> Self {
        Self { lower: b.lower.clone(), upper: b.upper.clone(), subdivisions: vec![n; b.dim()] }
    }

    pub fn dim(&self) -> usize {
        self.lower.len()
    }

    pub fn bounds(&self) -> AaBox {
        AaBox { lower: self.lower.clone(), upper: self.upper.clone() }
    }

    pub fn width(&self, axis: usize) -> f64 {
        (self.upper[axis] - self.lower[axis]) / self.subdivisions[axis] as f64
    }

    pub fn widths(&self) -> Vec<f64> {
        (0..self.dim()).map(|i| self.width(i)).collect()
    }

    pub fn max_width(&self) -> f64 {
        self.widths().into_iter().fold(0.0, f64::max)
    }

    pub fn cell_count(&self) -> usize {
        self.subdivisions.iter().product()
    }

    /// Same cell counts on the box inflated by `r` on every side.
    pub fn inflate(&self, r: f64) -> Self {
        Self {
            lower: self.lower.iter().map(|a| a - r).collect(),
            upper: self.upper.iter().map(|b| b + r).collect(),
            subdivisions: self.subdivisions.clone(),
        }
    }

    /// Coordinates of the grid vertex with integer index `v`.
    pub fn vertex(&self, v: &[i32]) -> Vec<f64> {
        (0..self.dim()).map(|i| self.lower[i] + v[i] as f64 * self.width(i)).collect()
    }

    pub fn cell_box(&self, c: &[i32]) -> AaBox {
        let lo = self.vertex(c);
        let hi = (0..self.dim()).map(|i| lo[i] + self.width(i)).collect();
        AaBox { lower: lo, upper: hi }
    }

    pub fn cell_center(&self, c: &[i32]) -> Vec<f64> {
        (0..self.dim()).map(|i| self.lower[i] + (c[i] as f64 + 0.5) * self.width(i)).collect()
    }

    /// The `2^d` corner vertex indices of a cell.
    pub fn cell_corners(&self, c: &[i32]) -> Vec<Vec<i32>> {
        let d = self.dim();
        (0..1usize << d).map(|m| (0..d).map(|i| c[i] + (m >> i & 1) as i32).collect()).collect()
    }

    pub fn in_range(&self, c: &[i32]) -> bool {
        c.iter().zip(&self.subdivisions).all(|(&ci, &n)| ci >= 0 && (ci as usize) < n)
    }

    /// True if the cell has a face on `∂U`.
    pub fn touches_boundary(&self, c: &[i32]) -> bool {
        c.iter().zip(&self.subdivisions).any(|(&ci, &n)| ci == 0 || ci as usize == n - 1)
    }

    /// Indices of every grid cell whose closure meets the box `x ± eps`;
    /// cells outside the grid range are dropped.
    pub fn cells_near(&self, x: &[f64], eps: f64) -> Vec<Vec<i32>> {
        let d = self.dim();
        let mut ranges = Vec::with_capacity(d);
        for i in 0..d {
            let w = self.width(i);
            let lo = ((x[i] - eps - self.lower[i]) / w).floor() as i64;
            let hi = ((x[i] + eps - self.lower[i]) / w).floor() as i64;
            // a point exactly on a grid line also belongs to the cell below it
            let on_line = ((x[i] - eps - self.lower[i]) / w).fract() == 0.0;
            let lo = if on_line { lo - 1 } else { lo };
            let lo = lo.max(0);
            let hi = hi.min(self.subdivisions[i] as i64 - 1);
            if lo > hi {
                return Vec::new();
            }
            ranges.push((lo as i32, hi as i32));
        }
        let mut out = vec![Vec::with_capacity(d)];
        for &(lo, hi) in &ranges {
            let mut next = Vec::with_capacity(out.len() * (hi - lo + 1) as usize);
            for prefix in &out {
                for v in lo..=hi {
                    let mut p: Vec<i32> = prefix.clone();
                    p.push(v);
                    next.push(p);
                }
            }
            out = next;
        }
        out
    }

    /// Every cell index in lexicographic order.
    pub fn all_cells(&self) -> Vec<Vec<i32>> {
        let mut out = vec![Vec::new()];
        for &n in &self.subdivisions {
            out = out
                .into_iter()
                .flat_map(|p: Vec<i32>| {
                    (0..n as i32).map(move |v| {
                        let mut q = p.clone();
                        q.push(v);
                        q
                    })
                })
                .collect();
        }
        out
    }
}

impl fmt::Display for GridBox {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let join = |v: &[f64]| v.iter().map(|x| format!("{x}")).collect::<Vec<_>>().join(",");
        let subs: Vec<String> = self.subdivisions.iter().map(|n| n.to_string()).collect();
        write!(f, "lower={} upper={} subdivisions={}", join(&self.lower), join(&self.upper), subs.join(","))
    }
}

/// A set of full cells of a grid; its realization is the closed union.
#[derive(Clone, Debug, PartialEq)]
pub struct CellSet {
    grid: GridBox,
    cells: BTreeSet<Vec<i32>>,
}

impl CellSet {
    pub fn empty(grid: &GridBox) -> Self {
        Self { grid: grid.clone(), cells: BTreeSet::new() }
    }

    pub fn full(grid: &GridBox) -> Self {
        Self { grid: grid.clone(), cells: grid.all_cells().into_iter().collect() }
    }

    pub fn from_cells<I: IntoIterator<Item = Vec<i32>>>(grid: &GridBox, cells: I) -> Result<Self> {
        let cells: BTreeSet<Vec<i32>> = cells.into_iter().collect();
        if let Some(c) = cells.iter().find(|c| c.len() != grid.dim() || !grid.in_range(c)) {
            return Err(Error::InvalidArgument(format!("cell {c:?} is outside the grid")));
        }
        Ok(Self { grid: grid.clone(), cells })
    }

    pub fn grid(&self) -> &GridBox {
        &self.grid
    }

    pub fn len(&self) -> usize {
        self.cells.len()
    }

    pub fn is_empty(&self) -> bool {
        self.cells.is_empty()
    }

    pub fn is_full(&self) -> bool {
        self.cells.len() == self.grid.cell_count()
    }

    pub fn contains_cell(&self, c: &[i32]) -> bool {
        self.cells.contains(c)
    }

    pub fn iter(&self) -> impl Iterator<Item = &Vec<i32>> {
        self.cells.iter()
    }

    pub fn is_subset(&self, other: &CellSet) -> bool {
        self.cells.is_subset(&other.cells)
    }

    /// Cells of `self` missing from `other`.
    pub fn difference(&self, other: &CellSet) -> CellSet {
        Self { grid: self.grid.clone(), cells: self.cells.difference(&other.cells).cloned().collect() }
    }

    pub fn filter(&self, pred: impl Fn(&[i32]) -> bool) -> CellSet {
        Self { grid: self.grid.clone(), cells: self.cells.iter().filter(|c| pred(c)).cloned().collect() }
    }

    /// Membership of a point in the closed union of the cells.
    pub fn contains_point(&self, x: &[f64]) -> bool {
        if self.is_full() {
            return self.grid.bounds().contains(x);
        }
        if !self.grid.bounds().contains(x) {
            return false;
        }
        // a hair of slack keeps grid vertices from falling between cells
        let eps = 1e-12 * self.grid.max_width();
        self.grid.cells_near(x, eps).iter().any(|c| self.cells.contains(c))
    }

    /// True if a neighbourhood of radius `eps` around `x` lies in the union.
    pub fn contains_point_interior(&self, x: &[f64], eps: f64) -> bool {
        let outer = self.grid.bounds();
        if (0..x.len()).any(|i| x[i] - eps <= outer.lower[i] || x[i] + eps >= outer.upper[i]) {
            return false;
        }
        self.grid.cells_near(x, eps).iter().all(|c| self.cells.contains(c))
    }

    /// Number of cells with a face on `∂U`.
    pub fn boundary_cells(&self) -> usize {
        self.cells.iter().filter(|c| self.grid.touches_boundary(c)).count()
    }

    /// Smallest number of whole cells separating the set from `∂U`
    /// (`None` for the empty set).
    pub fn margin_cells(&self) -> Option<usize> {
        self.cells
            .iter()
            .map(|c| {
                c.iter()
                    .zip(&self.grid.subdivisions)
                    .map(|(&ci, &n)| (ci as usize).min(n - 1 - ci as usize))
                    .min()
                    .unwrap_or(0)
            })
            .min()
    }

    /// Euclidean distance from `∂U` to the realization (the box depth of the
    /// nearest cell corner).
    pub fn distance_to_boundary(&self) -> Option<f64> {
        let bounds = self.grid.bounds();
        self.cells
            .iter()
            .map(|c| {
                let b = self.grid.cell_box(c);
                (0..self.grid.dim())
                    .map(|i| (b.lower[i] - bounds.lower[i]).min(bounds.upper[i] - b.upper[i]))
                    .fold(f64::INFINITY, f64::min)
            })
            .reduce(f64::min)
    }

    /// Real-space bounding box of the realization.
    pub fn bounding_box(&self) -> Option<AaBox> {
        let first = self.cells.iter().next()?;
        let mut bb = self.grid.cell_box(first);
        for c in &self.cells {
            let b = self.grid.cell_box(c);
            for i in 0..bb.dim() {
                bb.lower[i] = bb.lower[i].min(b.lower[i]);
                bb.upper[i] = bb.upper[i].max(b.upper[i]);
            }
        }
        Some(bb)
    }

    /// Uniform point in a uniformly chosen cell.
    pub fn sample_point<R: Rng>(&self, rng: &mut R) -> Option<Vec<f64>> {
        if self.cells.is_empty() {
            return None;
        }
        let k = rng.gen_range(0..self.cells.len());
        let c = self.cells.iter().nth(k).expect("index in range");
        Some(self.grid.cell_box(c).sample(rng))
    }

    /// Face closure as a cubical set on the doubled integer lattice.
    pub fn to_cubical(&self) -> CubicalSet {
        CubicalSet::closure_of(self.grid.dim(), self.cells.iter().map(|c| Cube::full(c)))
    }

    /// Snapshot text: a header with the grid metadata followed by the closure
    /// in the cubical serialization.
    pub fn snapshot(&self, label: &str) -> String {
        let mut s = format!("# {label} full_cells={} {}\n", self.len(), self.grid);
        for line in self.to_cubical().to_snapshot_lines() {
            s.push_str(&line);
            s.push('\n');
        }
        s
    }
}
