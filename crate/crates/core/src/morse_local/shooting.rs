//! Connecting orbits of the negative gradient flow found by shooting from the
//! unstable eigensphere of the source.
//!
//! Every shot is classified by where it ends: the face of `U` it leaves
//! through, the critical point it settles at, or undecided. Adjacent
//! directions with different outcomes bracket an orbit on the boundary of the
//! two basins; bisection in the direction parameter pins that orbit down and
//! it is tested for passing through the target ball.

use nalgebra::DVector;
use rayon::prelude::*;

use super::CriticalPoint;
use crate::error::{Error, Result};
use crate::isolation::GridBox;
use crate::ls_system::{negative_gradient_field, norm, sub, GradientSpec, LSField, Rk4, Trajectory};

/// Numerical settings for shooting.
#[derive(Clone, Debug, PartialEq)]
pub struct ShootingOptions {
    pub shoot_radius: f64,
    /// Directions on the unstable circle when it is one-dimensional.
    pub directions: usize,
    pub step: f64,
    pub time_cap: f64,
    pub hit_radius: f64,
    pub cluster_threshold: f64,
    pub bisection_iterations: usize,
}

impl Default for ShootingOptions {
    fn default() -> Self {
        Self {
            shoot_radius: 1e-2,
            directions: 64,
            step: 1e-2,
            time_cap: 50.0,
            hit_radius: 1e-3,
            cluster_threshold: 1e-2,
            bisection_iterations: 34,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum Outcome {
    Exit { axis: usize, upper: bool },
    Rest(usize),
    Undecided,
}

struct Shot {
    outcome: Outcome,
    path: Vec<Vec<f64>>,
}

/// A shot from `source` that passed through the ball around `target`.
#[derive(Clone, Debug)]
pub struct Hit {
    pub target: usize,
    pub path: Trajectory,
}

pub(crate) struct Shooter<'a> {
    field: LSField,
    points: &'a [CriticalPoint],
    bounds: crate::ls_system::AaBox,
    opts: &'a ShootingOptions,
}

impl<'a> Shooter<'a> {
    pub(crate) fn new(g: &GradientSpec, points: &'a [CriticalPoint], u: &GridBox, opts: &'a ShootingOptions) -> Self {
        Self { field: negative_gradient_field(g), points, bounds: u.bounds(), opts }
    }

    fn shoot(&self, start: &[f64]) -> Shot {
        let mut rk = Rk4::new(&self.field);
        let mut y = start.to_vec();
        let mut path = vec![y.clone()];
        let n = (self.opts.time_cap / self.opts.step).ceil() as usize;
        for _ in 0..n {
            if !rk.step(&mut y, self.opts.step) {
                return Shot { outcome: Outcome::Undecided, path };
            }
            path.push(y.clone());
            if !self.bounds.contains(&y) {
                return Shot { outcome: self.exit_face(&y), path };
            }
            // sinks capture for good once the orbit is inside their ball
            if let Some(i) = self.near(&y) {
                if self.points[i].mu_neg == 0 {
                    return Shot { outcome: Outcome::Rest(i), path };
                }
            }
        }
        let outcome = self.near(&y).map_or(Outcome::Undecided, Outcome::Rest);
        Shot { outcome, path }
    }

    fn near(&self, y: &[f64]) -> Option<usize> {
        self.points.iter().position(|c| norm(&sub(y, &c.x)) < self.opts.hit_radius)
    }

    fn exit_face(&self, y: &[f64]) -> Outcome {
        let (mut best, mut axis, mut upper) = (f64::NEG_INFINITY, 0, false);
        for i in 0..y.len() {
            for (over, up) in [(self.bounds.lower[i] - y[i], false), (y[i] - self.bounds.upper[i], true)] {
                if over > best {
                    best = over;
                    axis = i;
                    upper = up;
                }
            }
        }
        Outcome::Exit { axis, upper }
    }

    /// Start point for direction parameter `theta` (an angle on the unstable
    /// circle, or ±1 on the unstable pair).
    fn start(&self, source: &CriticalPoint, basis: &[DVector<f64>], theta: f64) -> Vec<f64> {
        let dir: DVector<f64> = if basis.len() == 1 {
            &basis[0] * theta.signum()
        } else {
            &basis[0] * theta.cos() + &basis[1] * theta.sin()
        };
        source.x.iter().enumerate().map(|(i, xi)| xi + self.opts.shoot_radius * dir[i]).collect()
    }

    /// Every shot from `source` that enters the ball of a critical point with
    /// one less relative index.
    pub(crate) fn hits_from(&self, source_idx: usize, g: &GradientSpec) -> Result<Vec<Hit>> {
        let source = &self.points[source_idx];
        let basis = unstable_basis(g, source);
        let params: Vec<f64> = match basis.len() {
            0 => return Ok(Vec::new()),
            1 => vec![1.0, -1.0],
            2 => {
                let n = self.opts.directions.max(4);
                (0..n).map(|i| (i as f64 + 0.5) * std::f64::consts::TAU / n as f64).collect()
            }
            m => return Err(Error::UnsupportedShooting(m)),
        };
        let targets: Vec<usize> =
            (0..self.points.len()).filter(|&j| self.points[j].rel_index + 1 == source.rel_index).collect();
        if targets.is_empty() {
            return Ok(Vec::new());
        }
        let shots: Vec<Shot> = params.par_iter().map(|&th| self.shoot(&self.start(source, &basis, th))).collect();
        let mut paths: Vec<Vec<Vec<f64>>> = shots.iter().map(|s| s.path.clone()).collect();
        if basis.len() == 2 {
            let n = params.len();
            let gaps: Vec<(f64, f64, Outcome, Outcome)> = (0..n)
                .filter(|&i| shots[i].outcome != shots[(i + 1) % n].outcome)
                .map(|i| {
                    let hi = if i + 1 == n { params[0] + std::f64::consts::TAU } else { params[i + 1] };
                    (params[i], hi, shots[i].outcome, shots[(i + 1) % n].outcome)
                })
                .collect();
            let refined: Vec<Vec<Vec<f64>>> =
                gaps.par_iter().map(|&(lo, hi, a, _)| self.bisect(source, &basis, lo, hi, a)).collect();
            paths.extend(refined);
        }
        let mut hits = Vec::new();
        for path in paths {
            for &t in &targets {
                if let Some(k) = path.iter().position(|p| norm(&sub(p, &self.points[t].x)) < self.opts.hit_radius) {
                    let pts: Vec<Vec<f64>> = path[..=k].to_vec();
                    let times = (0..pts.len()).map(|i| i as f64 * self.opts.step).collect();
                    hits.push(Hit { target: t, path: Trajectory { times, points: pts, step: self.opts.step } });
                }
            }
        }
        Ok(hits)
    }

    fn bisect(
        &self,
        source: &CriticalPoint,
        basis: &[DVector<f64>],
        mut lo: f64,
        mut hi: f64,
        lo_outcome: Outcome,
    ) -> Vec<Vec<f64>> {
        let mut last = self.shoot(&self.start(source, basis, 0.5 * (lo + hi)));
        for _ in 0..self.opts.bisection_iterations {
            let mid = 0.5 * (lo + hi);
            last = self.shoot(&self.start(source, basis, mid));
            if last.outcome == lo_outcome {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        last.path
    }
}

/// Orthonormal eigenvectors of the Hessian for its negative eigenvalues.
fn unstable_basis(g: &GradientSpec, c: &CriticalPoint) -> Vec<DVector<f64>> {
    let eig = g.hessian(&c.x).symmetric_eigen();
    let mut pairs: Vec<(f64, DVector<f64>)> = (0..eig.eigenvalues.len())
        .filter(|&i| eig.eigenvalues[i] < 0.0)
        .map(|i| (eig.eigenvalues[i], eig.eigenvectors.column(i).into_owned()))
        .collect();
    pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
    pairs.into_iter().map(|(_, v)| v).collect()
}

/// Symmetric max–min distance between subsampled paths.
pub(crate) fn path_distance(a: &Trajectory, b: &Trajectory) -> f64 {
    let sub_a = subsample(&a.points);
    let sub_b = subsample(&b.points);
    let one_way = |p: &[&Vec<f64>], q: &[&Vec<f64>]| {
        p.iter().map(|x| q.iter().map(|y| norm(&sub(x, y))).fold(f64::INFINITY, f64::min)).fold(0.0, f64::max)
    };
    one_way(&sub_a, &sub_b).max(one_way(&sub_b, &sub_a))
}

fn subsample(points: &[Vec<f64>]) -> Vec<&Vec<f64>> {
    let stride = (points.len() / 200).max(1);
    let mut out: Vec<&Vec<f64>> = points.iter().step_by(stride).collect();
    if let Some(last) = points.last() {
        out.push(last);
    }
    out
}

/// Groups hits into distinct orbits; fails if two groups are too close to
/// tell apart.
pub(crate) fn cluster(hits: Vec<Hit>, threshold: f64) -> Result<Vec<Vec<Hit>>> {
    let mut groups: Vec<Vec<Hit>> = Vec::new();
    for h in hits {
        match groups.iter_mut().find(|g| path_distance(&g[0].path, &h.path) < threshold) {
            Some(g) => g.push(h),
            None => groups.push(vec![h]),
        }
    }
    for i in 0..groups.len() {
        for j in i + 1..groups.len() {
            let d = path_distance(&groups[i][0].path, &groups[j][0].path);
            if d < 3.0 * threshold {
                return Err(Error::ResolutionInsufficient { distance: d, threshold: 3.0 * threshold });
            }
        }
    }
    Ok(groups)
}
