//! Combinatorial index pairs from sampled trajectories.
//!
//! A cell is classified by its `2^d` corners and its center. `G^T` keeps a
//! cell when some sample has its orbit over `[−T, T]` inside the region;
//! `Γ^T` keeps a `G^T` cell when some sample's forward orbit over `[0, T]`
//! leaves `U` or comes within one cell width of `∂U`. Both rules
//! over-approximate, which is what the exit-set property needs.

mod grid;

use std::collections::HashMap;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::ls_system::{first_exit, flow_map, LSField, Rk4};

pub use grid::{CellSet, GridBox};

/// Horizons tried when no `T` is given, and by the calibration.
pub const HORIZON_LADDER: [f64; 4] = [1.0, 2.0, 4.0, 8.0];

const SAMPLE_SCHEME: &str = "corners+center; G^T: any sample stays; Gamma^T: any sample exits or nears the boundary";

const VERIFY_SEED: u64 = 0x00c0_ffee;

/// Classifies every cell of `cells` by its corners and center; a cell is
/// selected if `pred` holds at any of them.
fn select_cells<P>(cells: &CellSet, pred: P) -> CellSet
where
    P: Fn(&[f64]) -> bool + Sync,
{
    let grid = cells.grid();
    let mut vertices: Vec<Vec<i32>> = cells.iter().flat_map(|c| grid.cell_corners(c)).collect();
    vertices.sort();
    vertices.dedup();
    let vertex_flags: Vec<bool> = vertices.par_iter().map(|v| pred(&grid.vertex(v))).collect();
    let flag: HashMap<&[i32], bool> = vertices.iter().map(Vec::as_slice).zip(vertex_flags).collect();
    let list: Vec<&Vec<i32>> = cells.iter().collect();
    let keep: Vec<bool> = list
        .par_iter()
        .map(|c| grid.cell_corners(c).iter().any(|v| flag[v.as_slice()]) || pred(&grid.cell_center(c)))
        .collect();
    cells.filter(|c| {
        let i = list.binary_search_by(|p| p.as_slice().cmp(c)).expect("cell from the set");
        keep[i]
    })
}

/// True if the orbit of `x` over `[−t, t]` stays in the realization of
/// `region`; integration failures count as leaving.
fn stays_in(f: &LSField, region: &CellSet, x: &[f64], t: f64, step: f64) -> bool {
    let inside = |y: &[f64]| region.contains_point(y);
    matches!(first_exit(f, x, t, step, inside), Ok(None)) && matches!(first_exit(f, x, -t, step, inside), Ok(None))
}

/// `G^T(U)`: cells with a sample whose orbit over `[−T, T]` stays in `U`.
pub fn compute_gt(f: &LSField, u: &GridBox, t: f64, step: f64) -> Result<CellSet> {
    compute_gt_in(f, &CellSet::full(u), t, step)
}

/// `G^T` of an arbitrary cell-set region of the grid.
pub fn compute_gt_in(f: &LSField, region: &CellSet, t: f64, step: f64) -> Result<CellSet> {
    if t < 0.0 {
        return Err(Error::InvalidArgument(format!("horizon must be non-negative, got {t}")));
    }
    if region.grid().dim() != f.dim() {
        return Err(Error::DimensionMismatch { expected: f.dim(), got: region.grid().dim() });
    }
    if t == 0.0 {
        return Ok(region.clone());
    }
    Ok(select_cells(region, |x| stays_in(f, region, x, t, step)))
}

/// `Γ^T(U)` inside a previously computed `G^T(U)`.
pub fn compute_gamma_t(f: &LSField, gt: &CellSet, u: &GridBox, t: f64, step: f64) -> Result<CellSet> {
    if gt.grid() != u {
        return Err(Error::InvalidArgument("G^T was computed on a different grid".into()));
    }
    let widths = u.widths();
    let safe = |y: &[f64]| (0..y.len()).all(|i| y[i] - u.lower[i] > widths[i] && u.upper[i] - y[i] > widths[i]);
    Ok(select_cells(gt, |x| !matches!(first_exit(f, x, t, step, safe), Ok(None))))
}

/// A pair `(N, L)` of cell sets on one grid.
#[derive(Clone, Debug, PartialEq)]
pub struct IndexPairCombinatorial {
    pub n: CellSet,
    pub l: CellSet,
    pub t_used: f64,
    pub sample_scheme: String,
}

impl IndexPairCombinatorial {
    pub fn new(n: CellSet, l: CellSet, t_used: f64) -> Result<Self> {
        if n.grid() != l.grid() {
            return Err(Error::InvalidArgument("N and L live on different grids".into()));
        }
        if !l.is_subset(&n) {
            return Err(Error::NotSubset);
        }
        Ok(Self { n, l, t_used, sample_scheme: SAMPLE_SCHEME.to_string() })
    }

    pub fn grid(&self) -> &GridBox {
        self.n.grid()
    }

    /// Cells of `N` not in `L`.
    pub fn core(&self) -> CellSet {
        self.n.difference(&self.l)
    }

    /// Point lies in the realization of `N` but not in that of `L`.
    pub fn in_core(&self, x: &[f64]) -> bool {
        self.n.contains_point(x) && !self.l.contains_point(x)
    }
}

/// `(G^T, Γ^T)` on `U`. Without `t` the horizon ladder is walked until
/// `G^T` keeps at least one cell away from `∂U`.
pub fn build_index_pair(f: &LSField, u: &GridBox, t: Option<f64>, step: f64) -> Result<IndexPairCombinatorial> {
    let (t, gt) = match t {
        Some(t) => (t, compute_gt(f, u, t, step)?),
        None => {
            let mut found = None;
            for &t in &HORIZON_LADDER {
                let gt = compute_gt(f, u, t, step)?;
                if gt.boundary_cells() == 0 {
                    found = Some((t, gt));
                    break;
                }
            }
            found.ok_or_else(|| {
                Error::NoIsolationMargin(format!("G^T touches the boundary for every T in {HORIZON_LADDER:?}"))
            })?
        }
    };
    // Cells on ∂U always land in Γ^T through the proximity rule, so any
    // G^T cell on ∂U means the horizon is too short for an index pair.
    let touching = gt.boundary_cells();
    if touching > 0 {
        return Err(Error::NoIsolationMargin(format!("T = {t}: {touching} cells of N lie on the boundary of U")));
    }
    let gamma = compute_gamma_t(f, &gt, u, t, step)?;
    IndexPairCombinatorial::new(gt, gamma, t)
}

/// Kind of a sampled index-pair violation.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ViolationKind {
    PositiveInvariance,
    ExitSet,
    Isolation,
}

/// Sampled check of the three index-pair conditions.
#[derive(Clone, Debug, PartialEq)]
pub struct IndexPairReport {
    pub samples: usize,
    pub positive_invariance_violations: usize,
    pub exit_set_violations: usize,
    pub isolation_violations: usize,
    pub witnesses: Vec<(ViolationKind, Vec<f64>)>,
}

impl IndexPairReport {
    pub fn total_violations(&self) -> usize {
        self.positive_invariance_violations + self.exit_set_violations + self.isolation_violations
    }
}

/// Samples `samples` points for each condition:
/// (a) orbits from `L` stay in `L` while in `N`;
/// (b) orbits leaving `N` are in `L` at the moment they leave;
/// (c) orbits that stay in `cl(N∖L)` over a long window stay off its boundary.
pub fn verify_index_pair(f: &LSField, pair: &IndexPairCombinatorial, samples: usize, step: f64) -> IndexPairReport {
    let horizon = 2.0 * pair.t_used.max(1.0);
    let core = pair.core();
    let mut rng = ChaCha8Rng::seed_from_u64(VERIFY_SEED);
    let draw = |set: &CellSet, rng: &mut ChaCha8Rng| -> Vec<Vec<f64>> {
        (0..samples).filter_map(|_| set.sample_point(rng)).collect()
    };
    let from_l = draw(&pair.l, &mut rng);
    let from_n = draw(&pair.n, &mut rng);
    let from_core = draw(&core, &mut rng);

    let pos: Vec<bool> = from_l.par_iter().map(|x| positive_invariance_holds(f, pair, x, horizon, step)).collect();
    let exit: Vec<bool> = from_n.par_iter().map(|x| exit_through_l(f, pair, x, horizon, step)).collect();
    let eps = 1e-9 * pair.grid().max_width();
    let iso: Vec<bool> = from_core.par_iter().map(|x| isolation_holds(f, &core, x, 2.0 * horizon, step, eps)).collect();

    let mut report = IndexPairReport {
        samples,
        positive_invariance_violations: 0,
        exit_set_violations: 0,
        isolation_violations: 0,
        witnesses: Vec::new(),
    };
    for (kind, points, ok) in [
        (ViolationKind::PositiveInvariance, &from_l, &pos),
        (ViolationKind::ExitSet, &from_n, &exit),
        (ViolationKind::Isolation, &from_core, &iso),
    ] {
        for (x, &good) in points.iter().zip(ok) {
            if good {
                continue;
            }
            match kind {
                ViolationKind::PositiveInvariance => report.positive_invariance_violations += 1,
                ViolationKind::ExitSet => report.exit_set_violations += 1,
                ViolationKind::Isolation => report.isolation_violations += 1,
            }
            if report.witnesses.len() < 16 {
                report.witnesses.push((kind, x.clone()));
            }
        }
    }
    report
}

fn positive_invariance_holds(f: &LSField, pair: &IndexPairCombinatorial, x: &[f64], horizon: f64, step: f64) -> bool {
    let mut rk = Rk4::new(f);
    let mut y = x.to_vec();
    let mut t = 0.0;
    while t < horizon {
        if !rk.step(&mut y, step) {
            return true;
        }
        t += step;
        if !pair.n.contains_point(&y) {
            return true;
        }
        if !pair.l.contains_point(&y) {
            return false;
        }
    }
    true
}

fn exit_through_l(f: &LSField, pair: &IndexPairCombinatorial, x: &[f64], horizon: f64, step: f64) -> bool {
    match first_exit(f, x, horizon, step, |y| pair.n.contains_point(y)) {
        Ok(None) | Err(_) => true,
        Ok(Some(t)) => {
            // last point before the refined exit time
            let back = (t - step / 16.0).max(0.0);
            match flow_map(f, x, back, step) {
                Ok(z) => pair.l.contains_point(&z),
                Err(_) => true,
            }
        }
    }
}

fn isolation_holds(f: &LSField, core: &CellSet, x: &[f64], horizon: f64, step: f64, eps: f64) -> bool {
    let mut touched_boundary = false;
    for dir in [1.0, -1.0] {
        let mut rk = Rk4::new(f);
        let mut y = x.to_vec();
        let mut t = 0.0;
        while t < horizon {
            if !rk.step(&mut y, dir * step) || !core.contains_point(&y) {
                // the orbit leaves, so it is not part of the invariant set
                return true;
            }
            touched_boundary |= !core.contains_point_interior(&y, eps);
            t += step;
        }
    }
    !touched_boundary
}

/// `τ_N(x)`: time until the forward orbit leaves the realization of `N∖L`,
/// `0` on `L`, `f64::INFINITY` past `cap`.
pub fn exit_time(f: &LSField, pair: &IndexPairCombinatorial, x: &[f64], cap: f64, step: f64) -> f64 {
    if pair.l.contains_point(x) {
        return 0.0;
    }
    match first_exit(f, x, cap, step, |y| pair.in_core(y)) {
        Ok(Some(t)) => t,
        Ok(None) => f64::INFINITY,
        Err(_) => 0.0,
    }
}

/// Outcome of [`probe_regularity`].
#[derive(Clone, Debug, PartialEq)]
pub struct RegularityProbe {
    pub irregular: bool,
    pub max_jump: f64,
    pub threshold: f64,
}

/// Samples `τ_N` at the centers of the cells of `N` and flags jumps between
/// neighbouring cells larger than ten cell-crossing times. Continuity is not
/// decidable from samples; this is a probe only.
pub fn probe_regularity(f: &LSField, pair: &IndexPairCombinatorial, cap: f64, step: f64) -> RegularityProbe {
    let grid = pair.grid();
    let cells: Vec<&Vec<i32>> = pair.n.iter().collect();
    let taus: Vec<f64> = cells.par_iter().map(|c| exit_time(f, pair, &grid.cell_center(c), cap, step)).collect();
    let speed = cells
        .iter()
        .map(|c| crate::ls_system::norm(&f.evaluate(&grid.cell_center(c)).unwrap_or_default()))
        .fold(0.0, f64::max);
    let crossing = if speed > 0.0 { grid.max_width() / speed } else { f64::INFINITY };
    let threshold = 10.0 * crossing;
    let index: HashMap<&[i32], f64> = cells.iter().map(|c| c.as_slice()).zip(taus.iter().copied()).collect();
    let mut max_jump: f64 = 0.0;
    for (c, &tau) in cells.iter().zip(&taus) {
        if !tau.is_finite() {
            continue;
        }
        for axis in 0..grid.dim() {
            let mut nb = (*c).clone();
            nb[axis] += 1;
            if let Some(&other) = index.get(nb.as_slice()) {
                if other.is_finite() {
                    max_jump = max_jump.max((tau - other).abs());
                }
            }
        }
    }
    RegularityProbe { irregular: max_jump > threshold, max_jump, threshold }
}

/// Constants `(ε₀, ρ, T, T₀)` for a neighbourhood.
#[derive(Clone, Debug, PartialEq)]
pub struct IsolationCalibration {
    pub epsilon0: f64,
    pub rho: f64,
    pub t: f64,
    pub t0: f64,
    /// The uniform-continuity constraint on `ρ` is not computed.
    pub delta_constraint_checked: bool,
}

/// Calibrates the continuation constants on `U`:
/// `ε₀ = ½ d(∂U, G^{T_max}(U))`, `T₀` the first ladder horizon with
/// `N_{ε₀}(G^{T₀}(U)) ⊂ int U`, `ρ` the largest of `ε₀/2, ε₀/4, …` whose
/// inflation keeps the invariant-set enclosure, and `T ≥ T₀` the smallest
/// ladder horizon with `G^T(U_ρ) ⊂ int U`.
pub fn calibrate_isolation(f: &LSField, u: &GridBox, step: f64) -> Result<IsolationCalibration> {
    let t_max = *HORIZON_LADDER.last().expect("non-empty ladder");
    let gts: Vec<CellSet> = HORIZON_LADDER.iter().map(|&t| compute_gt(f, u, t, step)).collect::<Result<_>>()?;
    let first_isolating = gts.iter().position(|g| g.boundary_cells() == 0).ok_or(Error::NotIsolating { t_max })?;
    let enclosure = gts.last().expect("non-empty ladder");
    let half_width = (0..u.dim()).map(|i| 0.5 * (u.upper[i] - u.lower[i])).fold(f64::INFINITY, f64::min);
    let epsilon0 = 0.5 * enclosure.distance_to_boundary().unwrap_or(half_width);
    let t0 = (first_isolating..gts.len())
        .find(|&k| gts[k].distance_to_boundary().map_or(true, |d| d > epsilon0))
        .map_or(t_max, |k| HORIZON_LADDER[k]);

    let reference = enclosure.bounding_box();
    let mut rho = None;
    for k in 1..=6 {
        let r = epsilon0 / f64::from(1 << k);
        let inflated = compute_gt(f, &u.inflate(r), t_max, step)?;
        let tol = u.inflate(r).max_width() + 1e-12;
        let same = match (&reference, inflated.bounding_box()) {
            (None, None) => true,
            (Some(a), Some(b)) => {
                (0..a.dim()).all(|i| (a.lower[i] - b.lower[i]).abs() <= tol && (a.upper[i] - b.upper[i]).abs() <= tol)
            }
            _ => false,
        };
        if same {
            rho = Some(r);
            break;
        }
    }
    let rho = rho.ok_or(Error::NotIsolating { t_max })?;

    let inflated = u.inflate(rho);
    let bounds = u.bounds();
    let mut horizons: Vec<f64> = HORIZON_LADDER.iter().copied().filter(|&t| t >= t0).collect();
    horizons.push(2.0 * t_max);
    for t in horizons {
        let g = compute_gt(f, &inflated, t, step)?;
        let interior = g
            .bounding_box()
            .map_or(true, |b| (0..b.dim()).all(|i| b.lower[i] > bounds.lower[i] && b.upper[i] < bounds.upper[i]));
        if interior {
            return Ok(IsolationCalibration { epsilon0, rho, t, t0, delta_constraint_checked: false });
        }
    }
    Err(Error::NotIsolating { t_max: 2.0 * t_max })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ls_system::SplitModel;
    use crate::z2_chain::{homology_dims, relative_pair_complex, GradedDims};

    const STEP: f64 = 1e-2;

    fn expand() -> LSField {
        LSField::linear(SplitModel::diagonal(vec![1.0]).unwrap())
    }

    fn contract() -> LSField {
        LSField::linear(SplitModel::diagonal(vec![-1.0]).unwrap())
    }

    fn homology(p: &IndexPairCombinatorial) -> GradedDims {
        homology_dims(&relative_pair_complex(&p.n.to_cubical(), &p.l.to_cubical()).unwrap()).unwrap()
    }

    fn extent(s: &CellSet) -> (f64, f64) {
        let b = s.bounding_box().unwrap();
        (b.lower[0], b.upper[0])
    }

    #[test]
    fn gt_of_expanding_interval() {
        let u = GridBox::cube(1, 1.0, 64);
        let w = u.width(0);
        for t in [1.0, 2.0, 3.0] {
            let g = compute_gt(&expand(), &u, t, STEP).unwrap();
            let (lo, hi) = extent(&g);
            let r = (-t as f64).exp();
            assert!((hi - r).abs() <= 2.0 * w && (lo + r).abs() <= 2.0 * w, "T = {t}: [{lo}, {hi}]");
        }
        assert_eq!(compute_gt(&expand(), &u, 0.0, STEP).unwrap().len(), 64);
    }

    #[test]
    fn gamma_is_the_outer_cells() {
        let u = GridBox::cube(1, 1.0, 64);
        let g = compute_gt(&expand(), &u, 2.0, STEP).unwrap();
        let gamma = compute_gamma_t(&expand(), &g, &u, 2.0, STEP).unwrap();
        let first = g.iter().next().unwrap().clone();
        let last = g.iter().last().unwrap().clone();
        assert_eq!(gamma.iter().cloned().collect::<Vec<_>>(), vec![first, last]);
        let g = compute_gt(&contract(), &u, 2.0, STEP).unwrap();
        assert!(compute_gamma_t(&contract(), &g, &u, 2.0, STEP).unwrap().is_empty());
    }

    #[test]
    fn pairs_for_repeller_attractor_and_empty() {
        let u = GridBox::cube(1, 1.0, 64);
        let p = build_index_pair(&expand(), &u, Some(2.0), STEP).unwrap();
        assert_eq!(homology(&p), GradedDims::from_pairs(&[(1, 1)]));
        let p = build_index_pair(&contract(), &u, Some(2.0), STEP).unwrap();
        assert!(p.l.is_empty());
        assert_eq!(homology(&p), GradedDims::from_pairs(&[(0, 1)]));
        let off = GridBox::new(vec![0.2], vec![1.0], vec![64]).unwrap();
        let p = build_index_pair(&expand(), &off, Some(2.0), STEP).unwrap();
        assert!(p.n.is_empty());
        assert!(homology(&p).is_zero());
    }

    #[test]
    fn small_horizon_has_no_margin() {
        let u = GridBox::cube(1, 1.0, 64);
        assert!(matches!(build_index_pair(&contract(), &u, Some(0.01), STEP), Err(Error::NoIsolationMargin(_))));
        let p = build_index_pair(&contract(), &u, None, STEP).unwrap();
        assert_eq!(p.t_used, 1.0);
    }

    #[test]
    fn verification_of_good_and_bad_pairs() {
        let u = GridBox::cube(1, 1.0, 64);
        let p = build_index_pair(&expand(), &u, Some(2.0), STEP).unwrap();
        assert_eq!(verify_index_pair(&expand(), &p, 200, STEP).total_violations(), 0);

        let no_exit = IndexPairCombinatorial::new(p.n.clone(), CellSet::empty(&u), 2.0).unwrap();
        assert!(verify_index_pair(&expand(), &no_exit, 200, STEP).exit_set_violations > 0);

        let full = CellSet::full(&u);
        let whole = IndexPairCombinatorial::new(full.clone(), full, 2.0).unwrap();
        assert_eq!(verify_index_pair(&expand(), &whole, 200, STEP).total_violations(), 0);
    }

    #[test]
    fn exit_time_branches() {
        let u = GridBox::cube(1, 1.0, 256);
        let n = CellSet::full(&u);
        let l = CellSet::from_cells(&u, [vec![0], vec![255]]).unwrap();
        let p = IndexPairCombinatorial::new(n, l, 2.0).unwrap();
        let tau = exit_time(&expand(), &p, &[0.5], 10.0, STEP);
        assert!((tau - 2f64.ln()).abs() < 0.01, "{tau}");
        assert_eq!(exit_time(&expand(), &p, &[0.999], 10.0, STEP), 0.0);
        assert!(exit_time(&expand(), &p, &[0.0], 10.0, STEP).is_infinite());
    }

    #[test]
    fn calibration_of_expanding_interval() {
        let u = GridBox::cube(1, 1.0, 64);
        let c = calibrate_isolation(&expand(), &u, STEP).unwrap();
        assert!((0.43..=0.5).contains(&c.epsilon0), "{c:?}");
        assert!(c.rho < c.epsilon0);
        assert!(!c.delta_constraint_checked);
        let bad = GridBox::new(vec![0.0], vec![1.0], vec![64]).unwrap();
        assert!(matches!(calibrate_isolation(&expand(), &bad, STEP), Err(Error::NotIsolating { .. })));
    }

    #[test]
    fn horizon_monotonicity() {
        let f = LSField::linear(SplitModel::diagonal(vec![1.0, -1.0]).unwrap());
        let u = GridBox::cube(2, 1.0, 32);
        let mut prev = compute_gt(&f, &u, 0.5, STEP).unwrap();
        for t in [1.0, 1.5, 2.0, 3.0] {
            let g = compute_gt(&f, &u, t, STEP).unwrap();
            assert!(g.is_subset(&prev), "T = {t}");
            prev = g;
        }
    }
}
