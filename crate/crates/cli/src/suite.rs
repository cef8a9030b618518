//! The acceptance battery behind the `suite` task.
//!
//! Every criterion returns a deterministic one-line detail; wall-clock times
//! are kept next to the outcome but never enter the report text.

use std::time::{Duration, Instant};

use conley_core::catalog;
use conley_core::conley_e::{
    classical_index, e_cohomology_limit, e_index, nontriviality_check, suspension_check, LevelFamily,
};
use conley_core::continuation::{g_nesting_check, gronwall_check, verify_isolating_along};
use conley_core::isolation::{
    build_index_pair, compute_gamma_t, compute_gt, exit_time, CellSet, GridBox, IndexPairCombinatorial,
};
use conley_core::ls_system::{GradientSpec, SplitModel};
use conley_core::morse_local::{
    build_boundary, build_boundary_with, build_fastslow, compare_with_e_index, fastslow_monotonicity_check,
    find_critical_points, FastSlowSpec, MorseComplexLocal, MorseOptions,
};
use conley_core::z2_chain::{GradedDims, Z2Matrix};

use crate::config::{ScenarioConfig, Task};
use crate::error::Result;
use crate::report::RunReport;
use crate::run::perturbed;

const STEP: f64 = 1e-2;
/// Perturbation amplitude used when the config does not set one.
pub const DEFAULT_PERTURB: f64 = 1e-3;
pub const SEPARABLE_SYSTEMS: u64 = 25;

#[derive(Clone, Debug)]
pub struct Criterion {
    pub id: usize,
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
    pub elapsed: Duration,
}

impl Criterion {
    pub fn line(&self) -> String {
        format!(
            "criterion {:>2} {:<28} {} | {}",
            self.id,
            self.name,
            if self.passed { "PASS" } else { "FAIL" },
            self.detail
        )
    }
}

#[derive(Clone, Debug)]
pub struct SuiteOutcome {
    pub criteria: Vec<Criterion>,
    pub report: RunReport,
}

type Check = fn(&Params) -> Result<(bool, String)>;

struct Params {
    seed: u64,
    perturb: f64,
    s_samples: usize,
}

const CHECKS: [(&str, Check); 11] = [
    ("saddle-index", saddle_index),
    ("gt-geometry", gt_geometry),
    ("morse-equals-conley", morse_equals_conley),
    ("boundary-squares-zero", boundary_squares_zero),
    ("suspension-invariance", suspension_invariance),
    ("sphere-dimension-axiom", sphere_dimension_axiom),
    ("gronwall-bound", gronwall_bound),
    ("nesting", nesting),
    ("continuation-invariance", continuation_invariance),
    ("fast-slow-construction", fast_slow_construction),
    ("non-triviality", non_triviality),
];

/// Runs criteria 1–11 in order. A criterion whose computation errors counts
/// as failed with the error text as its detail.
pub fn run(config: &ScenarioConfig) -> Result<SuiteOutcome> {
    let params = Params {
        seed: config.seed,
        perturb: if config.perturb > 0.0 { config.perturb } else { DEFAULT_PERTURB },
        s_samples: config.s_samples,
    };
    let mut report = RunReport::new(Task::Suite, "acceptance-battery", config.hash());
    report.details.push(format!("seed: {}", params.seed));
    report.details.push(format!("perturbation amplitude: {}", params.perturb));
    let mut criteria = Vec::with_capacity(CHECKS.len());
    for (i, (name, check)) in CHECKS.iter().enumerate() {
        let start = Instant::now();
        let (passed, detail) = check(&params).unwrap_or_else(|e| (false, format!("error: {e}")));
        let c = Criterion { id: i + 1, name, passed, detail, elapsed: start.elapsed() };
        report.details.push(c.line());
        report.stage_timings.push((format!("criterion {}", c.id), c.elapsed));
        if !c.passed {
            report.violations.push(format!("criterion {} ({}) failed", c.id, c.name));
        }
        criteria.push(c);
    }
    report.ok = report.violations.is_empty();
    Ok(SuiteOutcome { criteria, report })
}

fn dims(pairs: &[(i64, usize)]) -> GradedDims {
    GradedDims::from_pairs(pairs)
}

fn saddle_index(_: &Params) -> Result<(bool, String)> {
    let f = catalog::saddle2d();
    let pair = build_index_pair(&f, &GridBox::cube(2, 1.0, 64), Some(3.0), STEP)?;
    let classical = classical_index(&pair)?;
    let e = e_index(&pair, f.model())?;
    let ok = classical == dims(&[(1, 1)]) && e.dims == dims(&[(0, 1)]);
    Ok((ok, format!("classical {classical}, E-graded {}", e.dims)))
}

fn gt_geometry(_: &Params) -> Result<(bool, String)> {
    let f = catalog::expand1d();
    let u = GridBox::cube(1, 1.0, 64);
    let w = u.width(0);
    let gt = compute_gt(&f, &u, 2.0, STEP)?;
    let gamma = compute_gamma_t(&f, &gt, &u, 2.0, STEP)?;
    let Some(b) = gt.bounding_box() else {
        return Ok((false, "G^T is empty".into()));
    };
    let r = (-2f64).exp();
    let within = (b.lower[0] + r).abs() <= 2.0 * w && (b.upper[0] - r).abs() <= 2.0 * w;
    let cells: Vec<&Vec<i32>> = gt.iter().collect();
    let extremes = vec![cells[0].clone(), cells[cells.len() - 1].clone()];
    let gamma_cells: Vec<Vec<i32>> = gamma.iter().cloned().collect();
    let gamma_extreme = gamma_cells == extremes;
    // exit time from U itself
    let whole = IndexPairCombinatorial::new(CellSet::full(&u), CellSet::empty(&u), 2.0)?;
    let tau = exit_time(&f, &whole, &[0.5], 10.0, STEP);
    let tau_ok = (tau - 2f64.ln()).abs() <= 0.01;
    Ok((
        within && gamma_extreme && tau_ok,
        format!(
            "G^T = [{:.4}, {:.4}], Gamma^T = {} extreme cells: {gamma_extreme}, exit_time(0.5) = {tau:.4}",
            b.lower[0],
            b.upper[0],
            gamma_cells.len()
        ),
    ))
}

fn morse_equals_conley(_: &Params) -> Result<(bool, String)> {
    let g = catalog::doublewell_gradient();
    let u = catalog::doublewell_grid();
    let m = build_boundary(&g, &u)?;
    let d1 = m.boundary(1);
    let d1_ok = d1 == Z2Matrix::from_rows(&[vec![1], vec![1]]);
    let cmp = compare_with_e_index(&g, &u, Some(2.0), STEP)?;
    let ok = d1_ok && cmp.morse == dims(&[(0, 1)]) && cmp.agrees();
    Ok((ok, format!("morse {}, E-index {}, boundary_1 = [1,1]^T: {d1_ok}", cmp.morse, cmp.e_index.dims)))
}

/// Composes consecutive boundaries over the whole degree range.
fn squares_vanish(m: &MorseComplexLocal) -> bool {
    let top = m.generators.iter().map(|p| p.rel_index).max().unwrap_or(m.min_degree);
    (m.min_degree + 1..=top).all(|k| m.boundary(k).mul(&m.boundary(k + 1)).is_zero())
}

fn boundary_squares_zero(p: &Params) -> Result<(bool, String)> {
    let mut opts = MorseOptions::default();
    opts.shooting.directions = 64;
    let mut doubled = opts.clone();
    doubled.shooting.directions *= 2;
    let (mut squares, mut stable, mut max_points) = (0, 0, 0);
    for seed in p.seed..p.seed + SEPARABLE_SYSTEMS {
        let (g, u) = catalog::separable_system(&catalog::random_separable(seed));
        let a = build_boundary_with(&g, &u, &opts)?;
        max_points = max_points.max(a.generators.len());
        squares += usize::from(squares_vanish(&a));
        let b = build_boundary_with(&g, &u, &doubled)?;
        let top = a.min_degree + 4;
        stable += usize::from((a.min_degree..=top).all(|k| a.boundary(k) == b.boundary(k)));
    }
    let n = SEPARABLE_SYSTEMS as usize;
    Ok((
        squares == n && stable == n && max_points <= 9,
        format!(
            "{squares}/{n} with zero square, {stable}/{n} stable under doubling, at most {max_points} critical points"
        ),
    ))
}

fn suspension_invariance(_: &Params) -> Result<(bool, String)> {
    let s = suspension_check(&catalog::saddle2d(), &GridBox::cube(2, 1.0, 32), 2.0, STEP, 32)?;
    let d = suspension_check(&catalog::doublewell(), &GridBox::cube(2, 1.5, 32), 2.0, STEP, 32)?;
    Ok((
        s.holds() && d.holds(),
        format!(
            "saddle {} -> {}, doublewell {} -> {}, E-tables equal: {}",
            s.classical,
            s.suspended_classical,
            d.classical,
            d.suspended_classical,
            s.e_tables_equal() && d.e_tables_equal()
        ),
    ))
}

fn sphere_dimension_axiom(_: &Params) -> Result<(bool, String)> {
    let mut ok = true;
    let mut parts = Vec::new();
    for p in 0..3usize {
        let r = e_cohomology_limit(&LevelFamily::sphere_family(p))?;
        ok &= r.limit == dims(&[(p as i64 - 1, 1)]) && r.exactness_ok;
        parts.push(format!("p={p}: {} exact={}", r.limit, r.exactness_ok));
    }
    Ok((ok, parts.join(", ")))
}

fn gronwall_bound(p: &Params) -> Result<(bool, String)> {
    let u = GridBox::cube(2, 1.0, 64);
    let f0 = catalog::saddle2d();
    let r = gronwall_check(&f0, &perturbed(&f0, &u, p.perturb), &u, 2.0, 20, STEP)?;
    Ok((
        r.violations == 0,
        format!(
            "{} violations in {} checks from {} starts, eps = {:.3e}, c = {:.4}, worst ratio {:.4}",
            r.violations, r.checks, r.starts, r.epsilon, r.c, r.worst_ratio
        ),
    ))
}

fn nesting(p: &Params) -> Result<(bool, String)> {
    let u = GridBox::cube(2, 1.0, 64);
    let f0 = catalog::saddle2d();
    let r = g_nesting_check(&f0, &perturbed(&f0, &u, p.perturb), &u, 1.0, STEP)?;
    let slacks: Vec<String> = r.inclusions.iter().map(|i| i.slack.to_string()).collect();
    Ok((
        r.hypothesis_met && r.inclusions.len() == 3 && r.inclusions.iter().all(|i| i.holds()),
        format!("gate met: {}, closeness {:.3e}, slack cells [{}]", r.hypothesis_met, r.closeness, slacks.join(", ")),
    ))
}

fn continuation_invariance(p: &Params) -> Result<(bool, String)> {
    let u = GridBox::cube(2, 1.0, 64);
    let a = verify_isolating_along(&catalog::rotated_saddle_homotopy(), &u, p.s_samples, 3.0, STEP)?;
    let e01 = dims(&[(0, 1)]);
    let rotated_ok = a.samples.iter().all(|s| s.isolating)
        && a.endpoint_e_indices.0.dims == e01
        && a.endpoint_e_indices.1.dims == e01
        && a.verdict;
    let b = verify_isolating_along(&catalog::isolation_breaker(), &u, p.s_samples, 3.0, STEP)?;
    let breaker_ok = b.isolation_lost_at().is_some() && !b.endpoints_equal() && !b.verdict;
    Ok((
        rotated_ok && breaker_ok,
        format!(
            "rotated: {} -> {} over {} samples, min margin {}; breaker: isolation lost at s = {}, {} -> {}",
            a.endpoint_e_indices.0.dims,
            a.endpoint_e_indices.1.dims,
            a.samples.len(),
            a.min_margin().map_or("-".into(), |m| m.to_string()),
            b.isolation_lost_at().map_or("-".into(), |s| format!("{s:.2}")),
            b.endpoint_e_indices.0.dims,
            b.endpoint_e_indices.1.dims
        ),
    ))
}

fn fast_slow_construction(_: &Params) -> Result<(bool, String)> {
    let g = GradientSpec::quadratic(SplitModel::diagonal(vec![-1.0])?);
    let mut spec = FastSlowSpec::constant(g, GridBox::cube(1, 1.0, 8), 0.0, 0.05);
    spec.r = 2.0 * spec.r_threshold();
    let fs = build_fastslow(&spec)?;
    let pts = find_critical_points(&fs.gradient, &fs.domain(8), 40);
    let mus: Vec<f64> = pts.iter().map(|c| fs.mu(&c.x)).collect();
    let interior = mus.iter().filter(|m| (0.05..=0.95).contains(*m)).count();
    let at = |target: f64| pts.iter().find(|c| (fs.mu(&c.x) - target).abs() < 1e-6);
    let shift = match (at(0.0), at(1.0)) {
        (Some(p0), Some(p1)) => Some(p0.mu_neg as i64 - p1.mu_neg as i64),
        _ => None,
    };
    let mono = fastslow_monotonicity_check(&spec, 1000);
    Ok((
        interior == 0 && shift == Some(1) && mono.violations == 0,
        format!(
            "r = {:.4}, {interior} critical points with mu in [0.05, 0.95], index(mu=0) - index(mu=1) = {}, \
             mu-velocity violations {}/{}",
            spec.r,
            shift.map_or("-".into(), |s| s.to_string()),
            mono.violations,
            mono.samples
        ),
    ))
}

fn non_triviality(_: &Params) -> Result<(bool, String)> {
    let f = catalog::saddle2d();
    let u = GridBox::new(vec![2.0, -0.5], vec![3.0, 0.5], vec![32, 32])?;
    let pair = build_index_pair(&f, &u, Some(2.0), STEP)?;
    let classical = classical_index(&pair)?;
    let e = e_index(&pair, f.model())?;
    let nontrivial = nontriviality_check(&e);
    Ok((
        classical.is_zero() && e.is_zero() && !nontrivial,
        format!("N cells {}, classical {classical}, E-graded {}, nontrivial: {nontrivial}", pair.n.len(), e.dims),
    ))
}
