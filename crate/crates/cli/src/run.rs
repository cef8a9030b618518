//! Task dispatch.

use std::time::Instant;

use conley_core::catalog::{Scenario, System};
use conley_core::conley_e::{classical_index, e_cohomology_limit, e_index, nontriviality_check, EIndex};
use conley_core::continuation::{
    gaussian_bump, reineck_verify, verify_isolating_along, ContinuationReport, HomotopyFamily,
};
use conley_core::isolation::{build_index_pair, verify_index_pair, GridBox};
use conley_core::ls_system::{GradientSpec, LSField};
use conley_core::morse_local::{build_boundary, compare_with_e_index};

use crate::config::{ScenarioConfig, Task};
use crate::error::{CliError, Result};
use crate::report::{RunReport, Table};
use crate::suite;

/// Sampled points per index-pair condition.
const VERIFY_SAMPLES: usize = 200;
const BUMP_SIGMA: f64 = 0.5;

/// Runs the configured task on rayon's current thread pool.
pub fn run_scenario(config: &ScenarioConfig) -> Result<RunReport> {
    let start = Instant::now();
    let mut report = if config.task == Task::Suite {
        suite::run(config)?.report
    } else {
        let scenario = config.resolve()?;
        let mut report = RunReport::new(config.task, scenario.name.clone(), config.hash());
        dispatch(config, &scenario, &mut report)?;
        report
    };
    report.timing = start.elapsed();
    Ok(report)
}

/// Runs on a dedicated pool with `threads` workers.
pub fn run_with_threads(config: &ScenarioConfig, threads: usize) -> Result<RunReport> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .map_err(|e| CliError::ThreadPool(e.to_string()))?;
    pool.install(|| run_scenario(config))
}

/// `F` plus a Gaussian bump of the given amplitude at the box centre,
/// pointing along the first axis.
pub fn perturbed(f: &LSField, u: &GridBox, amplitude: f64) -> LSField {
    let mut dir = vec![0.0; f.dim()];
    dir[0] = 1.0;
    f.plus(gaussian_bump(u.bounds().center(), BUMP_SIGMA, amplitude, dir))
}

fn needs(config: &ScenarioConfig, what: &str) -> CliError {
    CliError::config("system", format!("task '{}' needs {what}", config.task))
}

fn field_of<'a>(config: &ScenarioConfig, s: &'a Scenario) -> Result<(&'a LSField, Option<&'a GradientSpec>)> {
    match &s.system {
        System::Field { field, gradient } => Ok((field, gradient.as_ref())),
        _ => Err(needs(config, "a vector field")),
    }
}

fn dispatch(config: &ScenarioConfig, s: &Scenario, report: &mut RunReport) -> Result<()> {
    let (u, t, step) = (&s.grid, s.t, config.step);
    report.details.push(format!("neighborhood: {u}"));
    report.details.push(format!("horizon: {t}"));
    report.details.push(format!("step: {step}"));
    match config.task {
        Task::Index => {
            let (f, _) = field_of(config, s)?;
            let f = if config.perturb > 0.0 { perturbed(f, u, config.perturb) } else { f.clone() };
            let pair = build_index_pair(&f, u, Some(t), step)?;
            let classical = classical_index(&pair)?;
            let e = e_index(&pair, f.model())?;
            report.tables.push(Table::new("classical", classical));
            report.tables.push(Table::new("e_graded", e.dims.clone()));
            report.details.push(format!("N cells: {}", pair.n.len()));
            report.details.push(format!("L cells: {}", pair.l.len()));
            report.details.push(format!("nontrivial: {}", nontriviality_check(&e)));
            let check = verify_index_pair(&f, &pair, VERIFY_SAMPLES, step);
            report.details.push(format!("verification samples per condition: {}", check.samples));
            for (kind, n) in [
                ("positive invariance", check.positive_invariance_violations),
                ("exit set", check.exit_set_violations),
                ("isolation", check.isolation_violations),
            ] {
                if n > 0 {
                    report.violations.push(format!("{kind}: {n} sampled violations"));
                }
            }
            report.ok = report.violations.is_empty();
            if config.output.dump_cells {
                report.snapshots.push(("N".into(), pair.n.snapshot("N")));
                report.snapshots.push(("L".into(), pair.l.snapshot("L")));
            }
        }
        Task::Morse => {
            let (_, g) = field_of(config, s)?;
            let g = g.ok_or_else(|| needs(config, "a gradient system"))?;
            let m = build_boundary(g, u)?;
            report.tables.push(Table::new("morse", m.homology()?));
            report.tables.push(Table::new("generators", m.generator_counts()));
            for p in &m.generators {
                report.details.push(format!("critical point {p}"));
            }
            for c in &m.connections {
                report.details.push(format!("connection {} -> {}: {} orbits", c.source, c.target, c.orbits));
            }
        }
        Task::Compare => {
            let (_, g) = field_of(config, s)?;
            let g = g.ok_or_else(|| needs(config, "a gradient system"))?;
            let cmp = compare_with_e_index(g, u, Some(t), step)?;
            report.tables.push(Table::new("morse", cmp.morse.clone()));
            report.tables.push(Table::new("e_graded", cmp.e_index.dims.clone()));
            report.ok = cmp.agrees();
            report.details.push(if report.ok {
                format!("EQUAL: {}", cmp.morse)
            } else {
                format!("DIFFER: morse {} vs e-index {}", cmp.morse, cmp.e_index.dims)
            });
        }
        Task::Continue => match &s.system {
            System::Homotopy(h) => continuation(config, h, u, t, report)?,
            System::Field { field, gradient: Some(g) } => {
                // continue the (optionally perturbed) field back to the gradient flow
                let start = if config.perturb > 0.0 { perturbed(field, u, config.perturb) } else { field.clone() };
                let h = HomotopyFamily::linear(start.clone(), field.clone())?;
                let r = reineck_verify(&start, u, g, &h, t, step)?;
                push_continuation(&r.continuation, report);
                report.tables.push(Table::new("morse", r.morse.clone()));
                report.tables.push(Table::new("e_graded", r.e_index.dims.clone()));
                report.ok = r.all_equal();
                report.details.push(format!("all tables equal: {}", r.all_equal()));
            }
            System::Field { field, gradient: None } => {
                let end = if config.perturb > 0.0 { perturbed(field, u, config.perturb) } else { field.clone() };
                let h = HomotopyFamily::linear(field.clone(), end)?;
                continuation(config, &h, u, t, report)?;
            }
            System::Spheres(_) => return Err(needs(config, "a field or a homotopy")),
        },
        Task::Ecoh => {
            let System::Spheres(fam) = &s.system else {
                return Err(needs(config, "a level family"));
            };
            let r = e_cohomology_limit(fam)?;
            for (v, dims) in &r.level_dims {
                report.details.push(format!("level dim V = {v}: cohomology {dims}"));
            }
            for (q, ranks) in &r.composite_ranks {
                report.details.push(format!("q = {q}: composite ranks {ranks:?}"));
            }
            report.details.push(format!("E-dimension p: {}", r.p.map_or("-".to_string(), |p| p.to_string())));
            report.details.push(format!("Mayer-Vietoris exactness: {}", r.exactness_ok));
            report.details.push(format!("flipped orientation agrees: {}", r.flipped_orientation_agrees));
            report.tables.push(Table::new("e_cohomology", r.limit));
            report.ok = r.exactness_ok && r.flipped_orientation_agrees;
        }
        Task::Suite => unreachable!("handled by run_scenario"),
    }
    Ok(())
}

fn continuation(
    config: &ScenarioConfig,
    h: &HomotopyFamily,
    u: &GridBox,
    t: f64,
    report: &mut RunReport,
) -> Result<()> {
    let r = verify_isolating_along(h, u, config.s_samples, t, config.step)?;
    push_continuation(&r, report);
    if let Some(s) = r.isolation_lost_at() {
        report.violations.push(format!("isolation lost at s = {s:.4}"));
    }
    report.ok = r.verdict;
    Ok(())
}

fn push_continuation(r: &ContinuationReport, report: &mut RunReport) {
    let endpoint = |e: &EIndex| e.dims.clone();
    report.tables.push(Table::new("e_graded_s0", endpoint(&r.endpoint_e_indices.0)));
    report.tables.push(Table::new("e_graded_s1", endpoint(&r.endpoint_e_indices.1)));
    report.details.extend(r.to_string().lines().map(str::to_string));
    if let Some(m) = r.min_margin() {
        report.details.push(format!("minimum margin: {m} cells"));
    }
    if let Some(c) = &r.calibration {
        report
            .details
            .push(format!("calibration: epsilon0 = {:.6}, rho = {:.6}, T = {}, T0 = {}", c.epsilon0, c.rho, c.t, c.t0));
    }
}
