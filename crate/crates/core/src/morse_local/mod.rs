//! Local Morse homology of gradient flows `ẋ = −∇f` on an isolating box:
//! critical points by Newton sweeps, connecting orbits counted mod 2 by
//! shooting, and the resulting Z₂ complex graded by relative index
//! `μ⁻(x) − d⁻`.

mod fastslow;
mod shooting;

use std::fmt;

use nalgebra::DVector;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::conley_e::{e_index, EIndex};
use crate::error::{Error, Result};
use crate::isolation::{build_index_pair, compute_gt, CellSet, GridBox};
use crate::ls_system::{negative_gradient_field, norm, sub, GradientSpec, LSField, Trajectory};
use crate::z2_chain::{homology_dims, ChainComplexZ2, GradedDims, Z2Matrix};

pub use fastslow::{
    build_fastslow, build_fastslow_unchecked, fastslow_monotonicity_check, omega, omega_prime, wall_eta,
    wall_eta_prime, FamilyMap, FastSlowField, FastSlowSpec, MonotonicityReport,
};
pub use shooting::{Hit, ShootingOptions};

/// Two Newton limits closer than this are the same critical point.
pub const DEDUP_RADIUS: f64 = 1e-5;
/// Smallest admissible |eigenvalue| of the Hessian at a critical point.
pub const DEGENERACY_TOL: f64 = 1e-6;

const NEWTON_ITERATIONS: usize = 80;
const LYAPUNOV_SEED: u64 = 0x6c79_6170;

#[derive(Clone, Debug, PartialEq)]
pub struct CriticalPoint {
    pub x: Vec<f64>,
    pub value: f64,
    /// Hessian eigenvalues, ascending.
    pub hessian_spectrum: Vec<f64>,
    pub mu_neg: usize,
    /// `μ⁻(x) − d⁻`.
    pub rel_index: i64,
    pub nondegenerate: bool,
}

impl fmt::Display for CriticalPoint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[")?;
        for (i, v) in self.x.iter().enumerate() {
            if i > 0 {
                write!(f, ", ")?;
            }
            write!(f, "{v:.6}")?;
        }
        write!(f, "] index={} f={:.6}", self.rel_index, self.value)
    }
}

fn newton(g: &GradientSpec, seed: &[f64], scale: f64) -> Option<Vec<f64>> {
    let d = seed.len();
    let mut x = seed.to_vec();
    for _ in 0..NEWTON_ITERATIONS {
        let grad = DVector::from_vec(g.gradient(&x));
        if grad.norm() <= 1e-13 * (1.0 + scale) {
            return Some(x);
        }
        let h = g.hessian(&x);
        let dx = h.svd(true, true).solve(&grad, 1e-12).ok()?;
        for i in 0..d {
            x[i] -= dx[i];
        }
        if !x.iter().all(|v| v.is_finite()) || norm(&x) > 1e6 * (1.0 + scale) {
            return None;
        }
        if dx.norm() <= 1e-15 * (1.0 + scale) {
            break;
        }
    }
    let residual = norm(&g.gradient(&x));
    (residual <= 1e-9 * (1.0 + scale)).then_some(x)
}

fn classify(g: &GradientSpec, x: Vec<f64>) -> CriticalPoint {
    let mut spectrum: Vec<f64> = g.hessian(&x).symmetric_eigen().eigenvalues.iter().copied().collect();
    spectrum.sort_by(f64::total_cmp);
    let mu_neg = spectrum.iter().filter(|&&e| e < 0.0).count();
    let min_abs = spectrum.iter().map(|e| e.abs()).fold(f64::INFINITY, f64::min);
    CriticalPoint {
        value: g.value(&x),
        rel_index: mu_neg as i64 - g.model().d_minus() as i64,
        nondegenerate: min_abs > DEGENERACY_TOL,
        hessian_spectrum: spectrum,
        mu_neg,
        x,
    }
}

/// Zeros of `∇f` in the closed box, from Newton iterations started on a
/// `seeds_per_axis`-lattice of cell centers. Sorted by index, then position.
pub fn find_critical_points(g: &GradientSpec, u: &GridBox, seeds_per_axis: usize) -> Vec<CriticalPoint> {
    let lattice =
        GridBox { lower: u.lower.clone(), upper: u.upper.clone(), subdivisions: vec![seeds_per_axis.max(1); u.dim()] };
    let scale = u.bounds().diameter();
    let bounds = u.bounds().inflate(1e-9 * scale);
    let limits: Vec<Option<Vec<f64>>> =
        lattice.all_cells().par_iter().map(|c| newton(g, &lattice.cell_center(c), scale)).collect();
    let mut found: Vec<Vec<f64>> = Vec::new();
    for x in limits.into_iter().flatten() {
        if bounds.contains(&x) && found.iter().all(|y| norm(&sub(&x, y)) > DEDUP_RADIUS) {
            found.push(x);
        }
    }
    let mut points: Vec<CriticalPoint> = found.into_iter().map(|x| classify(g, x)).collect();
    points.sort_by(|a, b| {
        a.rel_index.cmp(&b.rel_index).then_with(|| {
            a.x.iter().zip(&b.x).map(|(p, q)| p.total_cmp(q)).find(|o| o.is_ne()).unwrap_or(std::cmp::Ordering::Equal)
        })
    });
    points
}

/// Settings for [`build_boundary_with`].
#[derive(Clone, Debug, PartialEq)]
pub struct MorseOptions {
    pub seeds_per_axis: usize,
    pub shooting: ShootingOptions,
}

impl Default for MorseOptions {
    fn default() -> Self {
        Self { seeds_per_axis: 9, shooting: ShootingOptions::default() }
    }
}

/// Connecting orbits from `source` to `target` (indices into the generator list).
#[derive(Clone, Debug)]
pub struct Connection {
    pub source: usize,
    pub target: usize,
    /// Distinct orbits found.
    pub orbits: usize,
    /// One representative path per orbit.
    pub witnesses: Vec<Trajectory>,
}

impl Connection {
    pub fn count_mod2(&self) -> u8 {
        (self.orbits % 2) as u8
    }
}

/// The local Morse complex. Chain degree `j` of `complex` corresponds to
/// relative index `min_degree + j`.
#[derive(Clone, Debug)]
pub struct MorseComplexLocal {
    pub generators: Vec<CriticalPoint>,
    pub min_degree: i64,
    pub complex: ChainComplexZ2,
    pub connections: Vec<Connection>,
}

impl MorseComplexLocal {
    /// Generator indices at relative index `k`, in matrix order.
    pub fn at_degree(&self, k: i64) -> Vec<usize> {
        (0..self.generators.len()).filter(|&i| self.generators[i].rel_index == k).collect()
    }

    pub fn generator_counts(&self) -> GradedDims {
        let mut counts = std::collections::BTreeMap::new();
        for c in &self.generators {
            *counts.entry(c.rel_index).or_insert(0) += 1;
        }
        GradedDims::from_map(&counts)
    }

    /// `∂_k` as a matrix from degree `k` to degree `k − 1`.
    pub fn boundary(&self, k: i64) -> Z2Matrix {
        let j = k - self.min_degree;
        if j < 0 || j as usize >= self.complex.boundaries().len() {
            return Z2Matrix::zeros(self.at_degree(k - 1).len(), self.at_degree(k).len());
        }
        self.complex.boundary(j as usize).clone()
    }

    pub fn homology(&self) -> Result<GradedDims> {
        Ok(homology_dims(&self.complex)?.shifted(self.min_degree))
    }
}

pub fn build_boundary(g: &GradientSpec, u: &GridBox) -> Result<MorseComplexLocal> {
    build_boundary_with(g, u, &MorseOptions::default())
}

/// Critical points, mod-2 connection counts and the validated complex.
pub fn build_boundary_with(g: &GradientSpec, u: &GridBox, opts: &MorseOptions) -> Result<MorseComplexLocal> {
    let points = find_critical_points(g, u, opts.seeds_per_axis);
    if let Some(c) = points.iter().find(|c| !c.nondegenerate) {
        let min_abs_eig = c.hessian_spectrum.iter().map(|e| e.abs()).fold(f64::INFINITY, f64::min);
        return Err(Error::DegenerateCriticalPoint { point: c.x.clone(), min_abs_eig });
    }
    let Some(min_degree) = points.first().map(|c| c.rel_index) else {
        return Ok(MorseComplexLocal {
            generators: Vec::new(),
            min_degree: 0,
            complex: ChainComplexZ2::new(Vec::new())?,
            connections: Vec::new(),
        });
    };
    let max_degree = points.last().map_or(min_degree, |c| c.rel_index);
    let shooter = shooting::Shooter::new(g, &points, u, &opts.shooting);

    let mut connections = Vec::new();
    for s in 0..points.len() {
        if points[s].rel_index == min_degree {
            continue;
        }
        let hits = shooter.hits_from(s, g)?;
        let mut targets: Vec<usize> = hits.iter().map(|h| h.target).collect();
        targets.sort_unstable();
        targets.dedup();
        for t in targets {
            let own: Vec<shooting::Hit> = hits.iter().filter(|h| h.target == t).cloned().collect();
            let groups = shooting::cluster(own, opts.shooting.cluster_threshold)?;
            connections.push(Connection {
                source: s,
                target: t,
                orbits: groups.len(),
                witnesses: groups.into_iter().map(|mut g| g.swap_remove(0).path).collect(),
            });
        }
    }

    let position = |i: usize| -> usize { (0..i).filter(|&j| points[j].rel_index == points[i].rel_index).count() };
    let count = |k: i64| points.iter().filter(|c| c.rel_index == k).count();
    let mut boundaries = Vec::new();
    for k in min_degree..=max_degree {
        let mut m = Z2Matrix::zeros(if k == min_degree { 0 } else { count(k - 1) }, count(k));
        for c in connections.iter().filter(|c| points[c.source].rel_index == k) {
            if c.count_mod2() == 1 {
                m.set(position(c.target), position(c.source), true);
            }
        }
        boundaries.push(m);
    }
    let complex = ChainComplexZ2::new(boundaries)?;
    Ok(MorseComplexLocal { generators: points, min_degree, complex, connections })
}

/// Z₂ Morse homology of the isolated invariant set in `U`, graded by
/// relative index.
pub fn local_morse_homology(g: &GradientSpec, u: &GridBox) -> Result<GradedDims> {
    build_boundary(g, u)?.homology()
}

/// Morse homology next to the E-index of the same flow.
#[derive(Clone, Debug, PartialEq)]
pub struct MorseComparison {
    pub morse: GradedDims,
    pub e_index: EIndex,
}

impl MorseComparison {
    pub fn agrees(&self) -> bool {
        self.morse == self.e_index.dims
    }
}

pub fn compare_with_e_index(g: &GradientSpec, u: &GridBox, t: Option<f64>, step: f64) -> Result<MorseComparison> {
    let morse = local_morse_homology(g, u)?;
    let field = negative_gradient_field(g);
    let pair = build_index_pair(&field, u, t, step)?;
    Ok(MorseComparison { morse, e_index: e_index(&pair, g.model())? })
}

/// Homology read off a Lyapunov function, with what was checked.
#[derive(Clone, Debug, PartialEq)]
pub struct McfReport {
    pub dims: GradedDims,
    /// Spread of the Lyapunov function over the invariant-set enclosure.
    pub spread: f64,
    pub decrease_samples: usize,
    pub provenance: String,
}

/// Number of points sampled for the strict-decrease test.
pub const MCF_DECREASE_SAMPLES: usize = 500;

/// Morse homology of the Lyapunov function `lyapunov` for the flow `f`.
///
/// `lyapunov` must be constant (to 1e−2 of the box diameter) on the
/// enclosure `G^T(U)` and strictly decrease along `f` at sampled points
/// outside it; otherwise [`Error::LyapunovViolation`] names a witness.
pub fn mcf_homology(f: &LSField, u: &GridBox, lyapunov: &GradientSpec, t: f64, step: f64) -> Result<McfReport> {
    let enclosure = compute_gt(f, u, t, step)?;
    let (lo, hi) = enclosure_range(lyapunov, &enclosure);
    let spread = if enclosure.is_empty() { 0.0 } else { hi - lo };
    let tolerance = 1e-2 * u.bounds().diameter();
    if spread > tolerance {
        let witness = enclosure
            .iter()
            .map(|c| u.cell_center(c))
            .max_by(|a, b| lyapunov.value(a).total_cmp(&lyapunov.value(b)))
            .unwrap_or_default();
        return Err(Error::LyapunovViolation {
            point: witness,
            reason: format!("not constant on the invariant set: spread {spread:.3e} > {tolerance:.3e}"),
        });
    }

    let mut rng = ChaCha8Rng::seed_from_u64(LYAPUNOV_SEED);
    let bounds = u.bounds();
    let mut checked = 0;
    let mut attempts = 0;
    while checked < MCF_DECREASE_SAMPLES && attempts < 50 * MCF_DECREASE_SAMPLES {
        attempts += 1;
        let x = bounds.sample(&mut rng);
        if enclosure.contains_point(&x) {
            continue;
        }
        checked += 1;
        let v = f.evaluate(&x)?;
        let rate: f64 = lyapunov.gradient(&x).iter().zip(&v).map(|(a, b)| a * b).sum();
        if rate >= 0.0 {
            return Err(Error::LyapunovViolation { point: x, reason: format!("not decreasing: d/dt = {rate:.3e}") });
        }
    }
    let dims = local_morse_homology(lyapunov, u)?;
    Ok(McfReport {
        dims,
        spread,
        decrease_samples: checked,
        provenance: format!(
            "Morse homology of the Lyapunov function; constant to {spread:.2e} on G^{t}(U), \
             decreasing at {checked} samples outside it"
        ),
    })
}

fn enclosure_range(g: &GradientSpec, s: &CellSet) -> (f64, f64) {
    let grid = s.grid();
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    for c in s.iter() {
        let mut pts = vec![grid.cell_center(c)];
        pts.extend(grid.cell_corners(c).iter().map(|v| grid.vertex(v)));
        for p in pts {
            let v = g.value(&p);
            lo = lo.min(v);
            hi = hi.max(v);
        }
    }
    (lo, hi)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ls_system::{Polynomial, SplitModel};

    fn saddle() -> GradientSpec {
        let model = SplitModel::diagonal(vec![1.0, -1.0]).unwrap();
        GradientSpec::polynomial(model, Polynomial::power(2, 0, 0.25, 4))
    }

    #[test]
    fn doublewell_critical_points() {
        // f = ¼x₁⁴ − ½x₁² − ½x₂²
        let model = SplitModel::diagonal(vec![-1.0, -1.0]).unwrap();
        let g = GradientSpec::polynomial(model, Polynomial::power(2, 0, 0.25, 4));
        let u = GridBox::cube(2, 1.5, 8);
        let pts = find_critical_points(&g, &u, 7);
        assert_eq!(pts.len(), 3);
        let idx: Vec<i64> = pts.iter().map(|c| c.rel_index).collect();
        // d⁻ = 2; the center is a max of both coordinates, the wells are saddles
        assert_eq!(idx, vec![-1, -1, 0]);
        assert!(pts.iter().all(|c| c.nondegenerate));
        assert!((pts[0].x[0] + 1.0).abs() < 1e-10);
    }

    #[test]
    fn saddle_has_one_generator() {
        let u = GridBox::cube(2, 1.0, 8);
        let m = build_boundary(&saddle(), &u).unwrap();
        assert_eq!(m.generators.len(), 1);
        assert_eq!(m.homology().unwrap(), GradedDims::from_pairs(&[(0, 1)]));
    }

    #[test]
    fn box_without_zeros_is_empty() {
        let u = GridBox::new(vec![2.0, 2.0], vec![3.0, 3.0], vec![8, 8]).unwrap();
        assert!(find_critical_points(&saddle(), &u, 5).is_empty());
        assert!(local_morse_homology(&saddle(), &u).unwrap().is_zero());
    }

    #[test]
    fn degenerate_point_is_reported() {
        let model = SplitModel::diagonal(vec![1.0]).unwrap();
        // f = ½x² − ½x² + x⁴/4 : the origin is degenerate
        let g =
            GradientSpec::polynomial(model, Polynomial::power(1, 0, -0.5, 2).add(&Polynomial::power(1, 0, 0.25, 4)));
        let u = GridBox::cube(1, 1.0, 8);
        assert!(matches!(build_boundary(&g, &u), Err(Error::DegenerateCriticalPoint { .. })));
    }

    #[test]
    fn one_dimensional_well_connections() {
        // ẋ = x − x³: maximum at 0 of f = ¼x⁴ − ½x², minima at ±1
        let model = SplitModel::diagonal(vec![-1.0]).unwrap();
        let g = GradientSpec::polynomial(model, Polynomial::power(1, 0, 0.25, 4));
        let u = GridBox::cube(1, 1.5, 8);
        let m = build_boundary(&g, &u).unwrap();
        assert_eq!(m.generators.len(), 3);
        assert_eq!(m.boundary(0), Z2Matrix::from_rows(&[vec![1], vec![1]]));
        assert_eq!(m.homology().unwrap(), GradedDims::from_pairs(&[(-1, 1)]));
    }

    fn product_wells() -> GradientSpec {
        let model = SplitModel::diagonal(vec![-1.0, -1.0]).unwrap();
        let b = Polynomial::power(2, 0, 0.25, 4).add(&Polynomial::power(2, 1, 0.25, 4));
        GradientSpec::polynomial(model, b)
    }

    #[test]
    fn two_dimensional_unstable_manifold() {
        let u = GridBox::cube(2, 1.5, 8);
        let m = build_boundary(&product_wells(), &u).unwrap();
        assert_eq!(m.generator_counts(), GradedDims::from_pairs(&[(-2, 4), (-1, 4), (0, 1)]));
        // the source reaches each of the four saddles along one axis
        assert_eq!(m.boundary(0).count_ones(), 4);
        // every saddle reaches its two neighbouring sinks
        assert_eq!(m.boundary(-1).count_ones(), 8);
        assert_eq!(m.homology().unwrap(), GradedDims::from_pairs(&[(-2, 1)]));
    }

    #[test]
    fn doubling_directions_keeps_counts() {
        let u = GridBox::cube(2, 1.5, 8);
        let mut opts = MorseOptions::default();
        let a = build_boundary_with(&product_wells(), &u, &opts).unwrap();
        opts.shooting.directions *= 2;
        let b = build_boundary_with(&product_wells(), &u, &opts).unwrap();
        for k in -1..=0 {
            assert_eq!(a.boundary(k), b.boundary(k));
        }
    }
}
