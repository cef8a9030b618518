//! Homotopies of LS fields and the numerical side of continuation:
//! Gronwall closeness, nesting of the `G^T` sets, isolation along a sampled
//! homotopy, Galerkin reduction and the gradient-continuation chain.

use std::fmt;
use std::sync::Arc;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::conley_e::{e_index, EIndex};
use crate::error::{Error, Result};
use crate::isolation::{build_index_pair, calibrate_isolation, compute_gt, CellSet, GridBox, IsolationCalibration};
use crate::ls_system::{
    galerkin_truncate, lipschitz_estimate, negative_gradient_field, norm, sub, GradientSpec, LSField, Rk4, VectorMap,
};
use crate::morse_local::local_morse_homology;
use crate::z2_chain::GradedDims;

const GRONWALL_SEED: u64 = 0x6772_6f6e;
const NESTING_SEED: u64 = 0x6e65_7374;

/// Default number of uniformly spaced parameter samples.
pub const DEFAULT_S_SAMPLES: usize = 11;

pub type FieldFamily = Arc<dyn Fn(f64) -> LSField + Send + Sync>;

/// `s ↦ H(s, ·)` on `[0, 1]`.
#[derive(Clone)]
pub struct HomotopyFamily {
    at: FieldFamily,
    lipschitz_hint: Option<f64>,
}

impl fmt::Debug for HomotopyFamily {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("HomotopyFamily").field("lipschitz_hint", &self.lipschitz_hint).finish()
    }
}

impl HomotopyFamily {
    pub fn new(at: FieldFamily) -> Self {
        Self { at, lipschitz_hint: None }
    }

    pub fn constant(f: LSField) -> Self {
        Self::new(Arc::new(move |_| f.clone()))
    }

    /// `(1 − s)F₀ + sF₁`, expressed in the model of `F₀`.
    pub fn linear(f0: LSField, f1: LSField) -> Result<Self> {
        if f0.dim() != f1.dim() {
            return Err(Error::DimensionMismatch { expected: f0.dim(), got: f1.dim() });
        }
        Ok(Self::new(Arc::new(move |s| interpolate(&f0, &f1, s))))
    }

    pub fn with_lipschitz_hint(mut self, c: f64) -> Self {
        self.lipschitz_hint = Some(c);
        self
    }

    pub fn lipschitz_hint(&self) -> Option<f64> {
        self.lipschitz_hint
    }

    pub fn at(&self, s: f64) -> LSField {
        (self.at)(s)
    }

    pub fn evaluate(&self, s: f64, x: &[f64]) -> Result<Vec<f64>> {
        self.at(s).evaluate(x)
    }

    pub fn start(&self) -> LSField {
        self.at(0.0)
    }

    pub fn end(&self) -> LSField {
        self.at(1.0)
    }

    /// `s ↦ H(1 − s)`.
    pub fn reversed(&self) -> Self {
        let at = self.at.clone();
        Self { at: Arc::new(move |s| at(1.0 - s)), lipschitz_hint: self.lipschitz_hint }
    }
}

fn interpolate(f0: &LSField, f1: &LSField, s: f64) -> LSField {
    if s == 0.0 {
        return f0.clone();
    }
    if s == 1.0 {
        return f1.clone();
    }
    let (a, b) = (f0.clone(), f1.clone());
    let lin = f0.linear_part().to_vec();
    let d = f0.dim();
    LSField::new(
        f0.model().clone(),
        Arc::new(move |x, out| {
            let mut fb = vec![0.0; d];
            a.eval_into(x, out);
            b.eval_into(x, &mut fb);
            for i in 0..d {
                out[i] = (1.0 - s) * out[i] + s * fb[i] - lin[i] * x[i];
            }
        }),
    )
    .with_linear_part(f0.linear_part().to_vec())
}

/// Gaussian bump `amplitude · e^{−‖x − center‖²/(2σ²)} · direction`.
pub fn gaussian_bump(center: Vec<f64>, sigma: f64, amplitude: f64, direction: Vec<f64>) -> VectorMap {
    let n = norm(&direction);
    let dir: Vec<f64> = direction.iter().map(|v| v / n).collect();
    Arc::new(move |x, out| {
        let r2: f64 = x.iter().zip(&center).map(|(a, b)| (a - b) * (a - b)).sum();
        let w = amplitude * (-r2 / (2.0 * sigma * sigma)).exp();
        for (o, d) in out.iter_mut().zip(&dir) {
            *o = w * d;
        }
    })
}

/// Largest `ε` with `εTe^{cT} < ρ/2`, i.e. `ρ/(2Te^{cT})`.
pub fn closeness_epsilon(c: f64, t: f64, rho: f64) -> f64 {
    rho / (2.0 * t * (c * t).exp())
}

/// Measured divergence of two flows against `εte^{ct}`.
#[derive(Clone, Debug, PartialEq)]
pub struct GronwallReport {
    pub epsilon: f64,
    pub c: f64,
    pub starts: usize,
    pub checks: usize,
    pub violations: usize,
    /// Largest divergence / bound ratio seen.
    pub worst_ratio: f64,
}

/// Safety factor on the Gronwall bound.
pub const GRONWALL_FACTOR: f64 = 1.05;

pub fn gronwall_check(
    f0: &LSField,
    f1: &LSField,
    u: &GridBox,
    t: f64,
    starts: usize,
    step: f64,
) -> Result<GronwallReport> {
    let bounds = u.bounds();
    let mut rng = ChaCha8Rng::seed_from_u64(GRONWALL_SEED);
    let mut probe: Vec<Vec<f64>> = (0..500).map(|_| bounds.sample(&mut rng)).collect();
    probe.extend(bounds.corners());
    let sub_grid = GridBox { subdivisions: vec![16; u.dim()], ..u.clone() };
    probe.extend(sub_grid.all_cells().iter().map(|c| sub_grid.cell_center(c)));
    let mut epsilon: f64 = 0.0;
    for x in &probe {
        epsilon = epsilon.max(norm(&sub(&f0.evaluate(x)?, &f1.evaluate(x)?)));
    }
    let c = f0.lipschitz_hint().unwrap_or_else(|| lipschitz_estimate(f0, &bounds, 200));
    let xs: Vec<Vec<f64>> = (0..starts).map(|_| bounds.sample(&mut rng)).collect();
    let n = (t / step).ceil() as usize;
    let h = t / n as f64;
    let per_start: Vec<(usize, usize, f64)> = xs
        .par_iter()
        .map(|x| {
            let (mut r0, mut r1) = (Rk4::new(f0), Rk4::new(f1));
            let (mut a, mut b) = (x.clone(), x.clone());
            let (mut checks, mut bad, mut worst) = (0, 0, 0.0f64);
            for k in 1..=n {
                if !r0.step(&mut a, h) || !r1.step(&mut b, h) {
                    break;
                }
                let tk = k as f64 * h;
                let bound = epsilon * tk * (c * tk).exp();
                let div = norm(&sub(&a, &b));
                checks += 1;
                if div > bound * GRONWALL_FACTOR + 1e-13 {
                    bad += 1;
                }
                if bound > 0.0 {
                    worst = worst.max(div / bound);
                }
            }
            (checks, bad, worst)
        })
        .collect();
    Ok(GronwallReport {
        epsilon,
        c,
        starts,
        checks: per_start.iter().map(|p| p.0).sum(),
        violations: per_start.iter().map(|p| p.1).sum(),
        worst_ratio: per_start.iter().map(|p| p.2).fold(0.0, f64::max),
    })
}

/// One nesting inclusion `A ⊆ B`.
#[derive(Clone, Debug, PartialEq)]
pub struct Inclusion {
    pub label: String,
    /// Cells of `A` outside `B`.
    pub excess_cells: usize,
    /// Largest Chebyshev cell distance from an excess cell to `B`.
    pub slack: usize,
}

impl Inclusion {
    pub fn holds(&self) -> bool {
        self.slack <= 1
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct NestingReport {
    pub rho: f64,
    /// Largest sampled `‖φ(t,x) − ψ(t,x)‖`.
    pub closeness: f64,
    pub hypothesis_met: bool,
    pub inclusions: Vec<Inclusion>,
}

impl NestingReport {
    pub fn holds(&self) -> bool {
        self.hypothesis_met && self.inclusions.iter().all(Inclusion::holds)
    }
}

fn inclusion(label: &str, a: &CellSet, b: &CellSet) -> Inclusion {
    let excess: Vec<&Vec<i32>> = a.iter().filter(|c| !b.contains_cell(c)).collect();
    let slack = excess
        .iter()
        .map(|c| {
            b.iter()
                .map(|d| c.iter().zip(d).map(|(p, q)| (p - q).unsigned_abs() as usize).max().unwrap_or(0))
                .min()
                .unwrap_or(usize::MAX)
        })
        .max()
        .unwrap_or(0);
    Inclusion { label: label.to_string(), excess_cells: excess.len(), slack }
}

/// `G_ψ^{4T} ⊆ G_φ^{3T} ⊆ G_ψ^{2T} ⊆ G_φ^T` on `U`, gated by the sampled
/// closeness `‖φ(t,x) − ψ(t,x)‖ < ρ/2` for `|t| ≤ 4T` while both orbits
/// stay in `U_ρ`. `ρ` comes from calibrating `φ` on `U`.
pub fn g_nesting_check(phi: &LSField, psi: &LSField, u: &GridBox, t: f64, step: f64) -> Result<NestingReport> {
    let rho = calibrate_isolation(phi, u, step)?.rho;
    let region = u.bounds().inflate(rho);
    let mut rng = ChaCha8Rng::seed_from_u64(NESTING_SEED);
    let xs: Vec<Vec<f64>> = (0..200).map(|_| region.sample(&mut rng)).collect();
    let n = (4.0 * t / step).ceil() as usize;
    let h = 4.0 * t / n as f64;
    let closeness = xs
        .par_iter()
        .map(|x| {
            let mut worst: f64 = 0.0;
            for dir in [h, -h] {
                let (mut r0, mut r1) = (Rk4::new(phi), Rk4::new(psi));
                let (mut a, mut b) = (x.clone(), x.clone());
                for _ in 0..n {
                    if !r0.step(&mut a, dir) || !r1.step(&mut b, dir) {
                        break;
                    }
                    if !region.contains(&a) || !region.contains(&b) {
                        break;
                    }
                    worst = worst.max(norm(&sub(&a, &b)));
                }
            }
            worst
        })
        .reduce(|| 0.0, f64::max);
    if closeness >= 0.5 * rho {
        return Ok(NestingReport { rho, closeness, hypothesis_met: false, inclusions: Vec::new() });
    }
    let g_psi4 = compute_gt(psi, u, 4.0 * t, step)?;
    let g_phi3 = compute_gt(phi, u, 3.0 * t, step)?;
    let g_psi2 = compute_gt(psi, u, 2.0 * t, step)?;
    let g_phi1 = compute_gt(phi, u, t, step)?;
    let inclusions = vec![
        inclusion("G_psi^4T <= G_phi^3T", &g_psi4, &g_phi3),
        inclusion("G_phi^3T <= G_psi^2T", &g_phi3, &g_psi2),
        inclusion("G_psi^2T <= G_phi^T", &g_psi2, &g_phi1),
    ];
    Ok(NestingReport { rho, closeness, hypothesis_met: true, inclusions })
}

/// One parameter sample of a homotopy.
#[derive(Clone, Debug, PartialEq)]
pub struct SSample {
    pub s: f64,
    /// Whole cells between `G^T(U)` and `∂U`; `None` when `G^T` is empty.
    pub margin_cells: Option<usize>,
    pub isolating: bool,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ContinuationReport {
    pub samples: Vec<SSample>,
    pub endpoint_e_indices: (EIndex, EIndex),
    pub calibration: Option<IsolationCalibration>,
    pub verdict: bool,
}

impl ContinuationReport {
    pub fn isolation_lost_at(&self) -> Option<f64> {
        self.samples.iter().find(|s| !s.isolating).map(|s| s.s)
    }

    pub fn endpoints_equal(&self) -> bool {
        self.endpoint_e_indices.0 == self.endpoint_e_indices.1
    }

    /// Smallest margin over the isolating samples.
    pub fn min_margin(&self) -> Option<usize> {
        self.samples.iter().filter_map(|s| s.margin_cells).min()
    }

    /// The report as an error when isolation was lost.
    pub fn into_result(self) -> Result<Self> {
        match self.isolation_lost_at() {
            Some(s) => Err(Error::IsolationLost { s }),
            None => Ok(self),
        }
    }
}

impl fmt::Display for ContinuationReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "s,margin_cells,isolating")?;
        for s in &self.samples {
            let m = s.margin_cells.map_or("-".to_string(), |m| m.to_string());
            writeln!(f, "{:.4},{},{}", s.s, m, s.isolating)?;
        }
        if let Some(s) = self.isolation_lost_at() {
            writeln!(f, "isolation lost at s = {s:.4}")?;
        }
        writeln!(f, "E-index at s=0: {}", self.endpoint_e_indices.0.dims)?;
        writeln!(f, "E-index at s=1: {}", self.endpoint_e_indices.1.dims)?;
        write!(f, "verdict: {}", if self.verdict { "EQUAL" } else { "NOT VERIFIED" })
    }
}

/// Checks that `G^T(U)` keeps a one-cell margin at `s_count` uniformly spaced
/// parameters and compares the endpoint E-indices.
pub fn verify_isolating_along(
    h: &HomotopyFamily,
    u: &GridBox,
    s_count: usize,
    t: f64,
    step: f64,
) -> Result<ContinuationReport> {
    verify_along(h, u, s_count, t, step, true)
}

/// With `full == false` sampling stops at the first non-isolating `s` and
/// no calibration is attempted; only the verdict is meaningful.
fn verify_along(
    h: &HomotopyFamily,
    u: &GridBox,
    s_count: usize,
    t: f64,
    step: f64,
    full: bool,
) -> Result<ContinuationReport> {
    if s_count < 2 {
        return Err(Error::InvalidArgument(format!("need at least 2 parameter samples, got {s_count}")));
    }
    let params: Vec<f64> = (0..s_count).map(|i| i as f64 / (s_count - 1) as f64).collect();
    let mut samples = Vec::with_capacity(params.len());
    for &s in &params {
        let gt = compute_gt(&h.at(s), u, t, step)?;
        let isolating = gt.boundary_cells() == 0;
        samples.push(SSample { s, margin_cells: gt.margin_cells(), isolating });
        if !isolating && !full {
            break;
        }
    }
    let endpoint = |f: LSField| -> Result<EIndex> {
        match build_index_pair(&f, u, Some(t), step) {
            Ok(pair) => e_index(&pair, f.model()),
            // a non-isolating endpoint has no index pair at this horizon
            Err(Error::NoIsolationMargin(_)) => Ok(EIndex::from_classical(&GradedDims::zero(), f.model().d_minus())),
            Err(e) => Err(e),
        }
    };
    let endpoint_e_indices = (endpoint(h.start())?, endpoint(h.end())?);
    let calibration = if full { calibrate_isolation(&h.start(), u, step).ok() } else { None };
    let verdict = samples.iter().all(|s| s.isolating) && endpoint_e_indices.0 == endpoint_e_indices.1;
    Ok(ContinuationReport { samples, endpoint_e_indices, calibration, verdict })
}

#[derive(Clone, Debug, PartialEq)]
pub struct GalerkinReport {
    pub level: usize,
    pub full_index: EIndex,
    pub truncated_index: EIndex,
    /// Levels tried before the admissible one.
    pub rejected: Vec<usize>,
}

impl GalerkinReport {
    pub fn indices_equal(&self) -> bool {
        self.full_index == self.truncated_index
    }
}

/// Smallest model level `n` such that `(1 − s)F + s(L + PₙKPₙ)` stays
/// isolating on `U`.
pub fn galerkin_continuation(f: &LSField, u: &GridBox, t: f64, step: f64) -> Result<GalerkinReport> {
    let mut rejected = Vec::new();
    for &n in f.model().levels() {
        let truncated = galerkin_truncate(f, n)?;
        let h = HomotopyFamily::linear(f.clone(), truncated)?;
        // calibration is not needed for the verdict
        let report = verify_along(&h, u, DEFAULT_S_SAMPLES, t, step, false)?;
        if report.verdict {
            let (full_index, truncated_index) = report.endpoint_e_indices;
            return Ok(GalerkinReport { level: n, full_index, truncated_index, rejected });
        }
        rejected.push(n);
    }
    Err(Error::NoAdmissibleLevel)
}

#[derive(Clone, Debug, PartialEq)]
pub struct ReineckReport {
    pub continuation: ContinuationReport,
    pub morse: GradedDims,
    pub e_index: EIndex,
}

impl ReineckReport {
    /// E-index of `F`, E-index of the gradient end and Morse homology agree.
    pub fn all_equal(&self) -> bool {
        self.continuation.verdict
            && self.e_index == self.continuation.endpoint_e_indices.1
            && self.morse == self.e_index.dims
    }
}

/// Verifies a supplied continuation `H` from `F` to the flow of `−∇g` and
/// compares both E-indices with the local Morse homology of `g`.
pub fn reineck_verify(
    f: &LSField,
    u: &GridBox,
    g: &GradientSpec,
    h: &HomotopyFamily,
    t: f64,
    step: f64,
) -> Result<ReineckReport> {
    if g.support_level().is_none() {
        return Err(Error::Precondition("the gradient end needs a finite support level".into()));
    }
    let x = u.bounds().center();
    let gap = norm(&sub(&h.end().evaluate(&x)?, &negative_gradient_field(g).evaluate(&x)?));
    if gap > 1e-10 {
        return Err(Error::Precondition(format!("homotopy does not end at -grad g (gap {gap:.3e})")));
    }
    let continuation = verify_isolating_along(h, u, DEFAULT_S_SAMPLES, t, step)?;
    let pair = build_index_pair(f, u, Some(t), step)?;
    let e = e_index(&pair, f.model())?;
    Ok(ReineckReport { continuation, morse: local_morse_homology(g, u)?, e_index: e })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ls_system::SplitModel;

    const STEP: f64 = 1e-2;

    fn saddle() -> LSField {
        LSField::linear(SplitModel::diagonal(vec![1.0, -1.0]).unwrap())
    }

    #[test]
    fn epsilon_formula() {
        let e = closeness_epsilon(1.0, 2.0, 0.2);
        assert!((e - 0.2 / (4.0 * 2f64.exp())).abs() < 1e-15);
        assert!((e - 0.006767).abs() < 1e-6);
        assert_eq!(closeness_epsilon(0.0, 1.0, 2.0), 1.0);
    }

    #[test]
    fn linear_homotopy_endpoints() {
        let f1 = saddle().plus_constant(vec![0.1, 0.2]);
        let h = HomotopyFamily::linear(saddle(), f1.clone()).unwrap();
        for x in [[0.3, -0.4], [1.0, 2.0]] {
            let a = h.evaluate(0.0, &x).unwrap();
            let b = h.evaluate(1.0, &x).unwrap();
            assert!(norm(&sub(&a, &saddle().evaluate(&x).unwrap())) < 1e-10);
            assert!(norm(&sub(&b, &f1.evaluate(&x).unwrap())) < 1e-10);
            let mid = h.evaluate(0.5, &x).unwrap();
            assert!((mid[0] - (x[0] + 0.05)).abs() < 1e-12);
        }
    }

    #[test]
    fn gronwall_identical_and_constant_shift() {
        let u = GridBox::cube(2, 1.0, 16);
        let same = gronwall_check(&saddle(), &saddle(), &u, 2.0, 5, STEP).unwrap();
        assert_eq!(same.epsilon, 0.0);
        assert_eq!(same.violations, 0);

        let f0 = LSField::linear(SplitModel::diagonal(vec![1.0]).unwrap()).with_lipschitz_hint(1.0);
        let f1 = f0.plus_constant(vec![1e-3]);
        let r = gronwall_check(&f0, &f1, &GridBox::cube(1, 1.0, 16), 1.0, 20, STEP).unwrap();
        assert_eq!(r.violations, 0);
        assert!((r.epsilon - 1e-3).abs() < 1e-15);
    }

    #[test]
    fn nesting_gate_rejects_far_fields() {
        let u = GridBox::cube(2, 1.0, 32);
        let far = saddle().plus_constant(vec![0.5, 0.0]);
        let r = g_nesting_check(&saddle(), &far, &u, 1.0, STEP).unwrap();
        assert!(!r.hypothesis_met);
        assert!(r.inclusions.is_empty());
    }

    #[test]
    fn nesting_identical_fields_is_exact() {
        let u = GridBox::cube(2, 1.0, 32);
        let r = g_nesting_check(&saddle(), &saddle(), &u, 1.0, STEP).unwrap();
        assert!(r.hypothesis_met);
        assert!(r.inclusions.iter().all(|i| i.excess_cells == 0));
    }

    #[test]
    fn constant_family_is_isolating() {
        let u = GridBox::cube(2, 1.0, 32);
        let r = verify_isolating_along(&HomotopyFamily::constant(saddle()), &u, 3, 2.0, STEP).unwrap();
        assert!(r.verdict);
        assert_eq!(r.endpoint_e_indices.0.dims, GradedDims::from_pairs(&[(0, 1)]));
        assert!(verify_isolating_along(&HomotopyFamily::constant(saddle()), &u, 1, 2.0, STEP).is_err());
    }
}
