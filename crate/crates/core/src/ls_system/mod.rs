//! Finite-dimensional split models, LS vector fields `F = L + K`, gradient
//! specifications `f = ½⟨Lx,x⟩ + b` and their flows.
//!
//! `L` is diagonal in the model basis. Fields evolve by `ẋ = F(x)`; gradient
//! systems enter only through [`negative_gradient_field`], so the linear part
//! of a gradient flow is `−L`.

mod integrate;
mod poly;

use std::fmt;
use std::sync::Arc;

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};

pub use integrate::{first_exit, flow_map, integrate_trajectory, trajectory_in_set, Rk4, SetMembership, Trajectory};
pub use poly::Polynomial;

/// Writes a vector value into the output slice.
pub type VectorMap = Arc<dyn Fn(&[f64], &mut [f64]) + Send + Sync>;
pub type ScalarMap = Arc<dyn Fn(&[f64]) -> f64 + Send + Sync>;
pub type MatrixMap = Arc<dyn Fn(&[f64]) -> DMatrix<f64> + Send + Sync>;

/// Step for central differences when no analytic derivative is supplied.
pub const FD_STEP: f64 = 1e-4;

/// Seed for the internal sampling routines; they are deterministic by design.
const SAMPLING_SEED: u64 = 0x1d5e_ed00;

/// Spectrum of the diagonal operator `L` and the nested coordinate levels
/// `E₁ ⊂ … ⊂ Eₙ` realized as coordinate prefixes.
#[derive(Clone, Debug, PartialEq)]
pub struct SplitModel {
    spectrum: Vec<f64>,
    levels: Vec<usize>,
}

impl SplitModel {
    /// `levels` must be strictly increasing prefix dimensions in `1..=d`; the
    /// full dimension is appended when missing.
    pub fn new(spectrum: Vec<f64>, mut levels: Vec<usize>) -> Result<Self> {
        let d = spectrum.len();
        if d == 0 {
            return Err(Error::InvalidArgument("model dimension must be positive".into()));
        }
        if let Some(i) = spectrum.iter().position(|&s| s == 0.0 || !s.is_finite()) {
            return Err(Error::InvalidArgument(format!("spectrum entry {i} is {}; L must be invertible", spectrum[i])));
        }
        if levels.last() != Some(&d) {
            levels.push(d);
        }
        if levels[0] == 0 || levels.windows(2).any(|w| w[0] >= w[1]) || levels.last() != Some(&d) {
            return Err(Error::InvalidArgument(format!("levels {levels:?} must increase strictly within 1..={d}")));
        }
        Ok(Self { spectrum, levels })
    }

    /// Single level equal to the whole space.
    pub fn diagonal(spectrum: Vec<f64>) -> Result<Self> {
        Self::new(spectrum, Vec::new())
    }

    /// Every prefix is a level.
    pub fn with_all_levels(spectrum: Vec<f64>) -> Result<Self> {
        let d = spectrum.len();
        Self::new(spectrum, (1..=d).collect())
    }

    pub fn dim(&self) -> usize {
        self.spectrum.len()
    }

    pub fn spectrum(&self) -> &[f64] {
        &self.spectrum
    }

    pub fn levels(&self) -> &[usize] {
        &self.levels
    }

    pub fn has_level(&self, n: usize) -> bool {
        self.levels.contains(&n)
    }

    pub fn minus_set(&self) -> Vec<usize> {
        (0..self.dim()).filter(|&i| self.spectrum[i] < 0.0).collect()
    }

    /// `dim(Eₙ ∩ E⁻)` for the full model.
    pub fn d_minus(&self) -> usize {
        self.d_minus_at(self.dim())
    }

    /// `dim(E_level ∩ E⁻)`.
    pub fn d_minus_at(&self, level: usize) -> usize {
        self.spectrum[..level].iter().filter(|&&s| s < 0.0).count()
    }

    /// Model with one more coordinate carrying `entry`; every old level is
    /// kept and the new full dimension becomes a level.
    pub fn appended(&self, entry: f64) -> Result<Self> {
        let mut spectrum = self.spectrum.clone();
        spectrum.push(entry);
        Self::new(spectrum, self.levels.clone())
    }
}

/// Closed axis-aligned box.
#[derive(Clone, Debug, PartialEq)]
pub struct AaBox {
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
}

impl AaBox {
    pub fn new(lower: Vec<f64>, upper: Vec<f64>) -> Result<Self> {
        if lower.len() != upper.len() {
            return Err(Error::DimensionMismatch { expected: lower.len(), got: upper.len() });
        }
        if lower.iter().zip(&upper).any(|(a, b)| !(a < b)) {
            return Err(Error::InvalidArgument("box needs lower < upper on every axis".into()));
        }
        Ok(Self { lower, upper })
    }

    /// `[-r, r]^d`.
    pub fn cube(d: usize, r: f64) -> Self {
        Self { lower: vec![-r; d], upper: vec![r; d] }
    }

    pub fn dim(&self) -> usize {
        self.lower.len()
    }

    pub fn contains(&self, x: &[f64]) -> bool {
        x.iter().zip(self.lower.iter().zip(&self.upper)).all(|(&v, (&a, &b))| a <= v && v <= b)
    }

    /// Distance from an interior point to the boundary (0 outside).
    pub fn depth(&self, x: &[f64]) -> f64 {
        x.iter()
            .zip(self.lower.iter().zip(&self.upper))
            .map(|(&v, (&a, &b))| (v - a).min(b - v))
            .fold(f64::INFINITY, f64::min)
            .max(0.0)
    }

    pub fn inflate(&self, r: f64) -> Self {
        Self { lower: self.lower.iter().map(|a| a - r).collect(), upper: self.upper.iter().map(|b| b + r).collect() }
    }

    pub fn center(&self) -> Vec<f64> {
        self.lower.iter().zip(&self.upper).map(|(a, b)| 0.5 * (a + b)).collect()
    }

    pub fn diameter(&self) -> f64 {
        self.lower.iter().zip(&self.upper).map(|(a, b)| (b - a) * (b - a)).sum::<f64>().sqrt()
    }

    pub fn sample<R: Rng>(&self, rng: &mut R) -> Vec<f64> {
        self.lower.iter().zip(&self.upper).map(|(&a, &b)| rng.gen_range(a..=b)).collect()
    }

    /// All `2^d` corners, in binary order of the axis choices.
    pub fn corners(&self) -> Vec<Vec<f64>> {
        let d = self.dim();
        (0..1usize << d)
            .map(|m| (0..d).map(|i| if m >> i & 1 == 1 { self.upper[i] } else { self.lower[i] }).collect())
            .collect()
    }
}

/// An LS vector field `F(x) = ℓ ⊙ x + K(x)` with `ℓ` the diagonal linear part.
///
/// For fields built directly `ℓ` is the model spectrum; negative-gradient
/// fields record `ℓ = −spectrum` while keeping the model's splitting.
#[derive(Clone)]
pub struct LSField {
    model: SplitModel,
    linear: Vec<f64>,
    nonlinearity: Option<VectorMap>,
    k_jacobian: Option<MatrixMap>,
    support_level: Option<usize>,
    lipschitz_hint: Option<f64>,
}

impl fmt::Debug for LSField {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("LSField")
            .field("model", &self.model)
            .field("linear", &self.linear)
            .field("nonlinear", &self.nonlinearity.is_some())
            .field("support_level", &self.support_level)
            .finish()
    }
}

impl LSField {
    /// `F = L` with `K ≡ 0`.
    pub fn linear(model: SplitModel) -> Self {
        Self {
            linear: model.spectrum.clone(),
            model,
            nonlinearity: None,
            k_jacobian: None,
            support_level: None,
            lipschitz_hint: None,
        }
    }

    pub fn new(model: SplitModel, k: VectorMap) -> Self {
        Self::linear(model).with_nonlinearity(k)
    }

    /// Convenience wrapper for closures returning the value of `K`.
    pub fn from_fn<G>(model: SplitModel, k: G) -> Self
    where
        G: Fn(&[f64]) -> Vec<f64> + Send + Sync + 'static,
    {
        Self::new(model, Arc::new(move |x, out| out.copy_from_slice(&k(x))))
    }

    pub fn with_nonlinearity(mut self, k: VectorMap) -> Self {
        self.nonlinearity = Some(k);
        self.k_jacobian = None;
        self
    }

    pub fn with_linear_part(mut self, linear: Vec<f64>) -> Self {
        assert_eq!(linear.len(), self.model.dim());
        self.linear = linear;
        self
    }

    pub fn with_k_jacobian(mut self, j: MatrixMap) -> Self {
        self.k_jacobian = Some(j);
        self
    }

    pub fn with_support_level(mut self, level: usize) -> Self {
        self.support_level = Some(level);
        self
    }

    pub fn with_lipschitz_hint(mut self, c: f64) -> Self {
        self.lipschitz_hint = Some(c);
        self
    }

    pub fn model(&self) -> &SplitModel {
        &self.model
    }

    pub fn dim(&self) -> usize {
        self.model.dim()
    }

    pub fn linear_part(&self) -> &[f64] {
        &self.linear
    }

    pub fn support_level(&self) -> Option<usize> {
        self.support_level
    }

    pub fn lipschitz_hint(&self) -> Option<f64> {
        self.lipschitz_hint
    }

    pub fn has_nonlinearity(&self) -> bool {
        self.nonlinearity.is_some()
    }

    /// `K(x)` into `out`.
    pub fn nonlinearity_into(&self, x: &[f64], out: &mut [f64]) {
        match &self.nonlinearity {
            Some(k) => k(x, out),
            None => out.fill(0.0),
        }
    }

    /// `F(x)` into `out` without dimension checks.
    #[inline]
    pub fn eval_into(&self, x: &[f64], out: &mut [f64]) {
        self.nonlinearity_into(x, out);
        for ((o, &l), &xi) in out.iter_mut().zip(&self.linear).zip(x) {
            *o += l * xi;
        }
    }

    pub fn evaluate(&self, x: &[f64]) -> Result<Vec<f64>> {
        if x.len() != self.dim() {
            return Err(Error::DimensionMismatch { expected: self.dim(), got: x.len() });
        }
        let mut out = vec![0.0; x.len()];
        self.eval_into(x, &mut out);
        Ok(out)
    }

    /// `DF(x)`, analytic when a Jacobian of `K` was supplied, otherwise by
    /// central differences.
    pub fn jacobian(&self, x: &[f64]) -> DMatrix<f64> {
        let d = self.dim();
        let mut j = match (&self.nonlinearity, &self.k_jacobian) {
            (None, _) => DMatrix::zeros(d, d),
            (Some(_), Some(jk)) => jk(x),
            (Some(_), None) => central_jacobian(d, x, |y, out| self.nonlinearity_into(y, out)),
        };
        for i in 0..d {
            j[(i, i)] += self.linear[i];
        }
        j
    }

    /// Field whose value is `self(x) + v` for a constant vector `v`.
    pub fn plus_constant(&self, v: Vec<f64>) -> Self {
        self.plus(Arc::new(move |_, o| o.copy_from_slice(&v)))
    }

    /// Field whose value is `self(x) + p(x)` for an arbitrary perturbation.
    pub fn plus(&self, p: VectorMap) -> Self {
        let base = self.clone();
        let d = self.dim();
        Self::new(
            self.model.clone(),
            Arc::new(move |x, o| {
                base.nonlinearity_into(x, o);
                let mut extra = vec![0.0; d];
                p(x, &mut extra);
                for (oi, ei) in o.iter_mut().zip(&extra) {
                    *oi += ei;
                }
            }),
        )
        .with_linear_part(self.linear.clone())
    }
}

fn central_jacobian(d: usize, x: &[f64], f: impl Fn(&[f64], &mut [f64])) -> DMatrix<f64> {
    let mut j = DMatrix::zeros(d, d);
    let mut xp = x.to_vec();
    let mut fp = vec![0.0; d];
    let mut fm = vec![0.0; d];
    for c in 0..d {
        xp[c] = x[c] + FD_STEP;
        f(&xp, &mut fp);
        xp[c] = x[c] - FD_STEP;
        f(&xp, &mut fm);
        xp[c] = x[c];
        for r in 0..d {
            j[(r, c)] = (fp[r] - fm[r]) / (2.0 * FD_STEP);
        }
    }
    j
}

/// `F(x) = Lx + K(x)`.
pub fn evaluate_field(f: &LSField, x: &[f64]) -> Result<Vec<f64>> {
    f.evaluate(x)
}

/// `f(x) = ½⟨Lx,x⟩ + b(x)` with `∇b` and optionally the Hessian of `b`.
#[derive(Clone)]
pub struct GradientSpec {
    model: SplitModel,
    b: ScalarMap,
    grad_b: VectorMap,
    hess_b: Option<MatrixMap>,
    support_level: Option<usize>,
}

impl fmt::Debug for GradientSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("GradientSpec")
            .field("model", &self.model)
            .field("analytic_hessian", &self.hess_b.is_some())
            .field("support_level", &self.support_level)
            .finish()
    }
}

impl GradientSpec {
    pub fn new(model: SplitModel, b: ScalarMap, grad_b: VectorMap) -> Self {
        Self { model, b, grad_b, hess_b: None, support_level: None }
    }

    /// `b ≡ 0`.
    pub fn quadratic(model: SplitModel) -> Self {
        let d = model.dim();
        Self::polynomial(model, Polynomial::zero(d))
    }

    /// `b` given as a polynomial, with exact derivatives.
    pub fn polynomial(model: SplitModel, b: Polynomial) -> Self {
        assert_eq!(b.dim(), model.dim());
        let b = Arc::new(b);
        let (b1, b2, b3) = (b.clone(), b.clone(), b);
        Self::new(model, Arc::new(move |x| b1.eval(x)), Arc::new(move |x, out| b2.gradient_into(x, out)))
            .with_hessian(Arc::new(move |x| b3.hessian(x)))
    }

    pub fn with_hessian(mut self, h: MatrixMap) -> Self {
        self.hess_b = Some(h);
        self
    }

    pub fn with_support_level(mut self, level: usize) -> Self {
        self.support_level = Some(level);
        self
    }

    pub fn model(&self) -> &SplitModel {
        &self.model
    }

    pub fn dim(&self) -> usize {
        self.model.dim()
    }

    pub fn support_level(&self) -> Option<usize> {
        self.support_level
    }

    pub fn value(&self, x: &[f64]) -> f64 {
        let quad: f64 = self.model.spectrum.iter().zip(x).map(|(l, xi)| l * xi * xi).sum();
        0.5 * quad + (self.b)(x)
    }

    /// `∇f(x) = Lx + ∇b(x)` into `out`.
    pub fn gradient_into(&self, x: &[f64], out: &mut [f64]) {
        (self.grad_b)(x, out);
        for ((o, l), xi) in out.iter_mut().zip(&self.model.spectrum).zip(x) {
            *o += l * xi;
        }
    }

    pub fn gradient(&self, x: &[f64]) -> Vec<f64> {
        let mut g = vec![0.0; x.len()];
        self.gradient_into(x, &mut g);
        g
    }

    /// Symmetric Hessian of `f`.
    pub fn hessian(&self, x: &[f64]) -> DMatrix<f64> {
        let d = self.dim();
        let mut h = match &self.hess_b {
            Some(hb) => hb(x),
            None => {
                let j = central_jacobian(d, x, |y, out| (self.grad_b)(y, out));
                (&j + j.transpose()) * 0.5
            }
        };
        for i in 0..d {
            h[(i, i)] += self.model.spectrum[i];
        }
        h
    }

    /// `b + ⟨c, x⟩`: the linear perturbation used to restore nondegeneracy.
    pub fn with_linear_term(&self, c: Vec<f64>) -> Self {
        assert_eq!(c.len(), self.dim());
        let (b, gb) = (self.b.clone(), self.grad_b.clone());
        let c1 = c.clone();
        Self {
            model: self.model.clone(),
            b: Arc::new(move |x| b(x) + c1.iter().zip(x).map(|(a, b)| a * b).sum::<f64>()),
            grad_b: Arc::new(move |x, out| {
                gb(x, out);
                for (o, ci) in out.iter_mut().zip(&c) {
                    *o += ci;
                }
            }),
            hess_b: self.hess_b.clone(),
            support_level: self.support_level,
        }
    }
}

/// The field `x ↦ −(Lx + ∇b(x))`, linear part `−L`, model splitting kept.
pub fn negative_gradient_field(g: &GradientSpec) -> LSField {
    let gb = g.grad_b.clone();
    let mut field = LSField::new(
        g.model.clone(),
        Arc::new(move |x, out| {
            gb(x, out);
            for o in out.iter_mut() {
                *o = -*o;
            }
        }),
    )
    .with_linear_part(g.model.spectrum.iter().map(|l| -l).collect());
    if let Some(hb) = &g.hess_b {
        let hb = hb.clone();
        field = field.with_k_jacobian(Arc::new(move |x| -hb(x)));
    }
    if let Some(n) = g.support_level {
        field = field.with_support_level(n);
    }
    field
}

/// Sampled Lipschitz constant of `F` on a box, times the safety factor 1.1.
///
/// Takes the larger of the sampled difference quotients and the sampled
/// Jacobian operator norms (corners included when `d ≤ 10`).
pub fn lipschitz_estimate(f: &LSField, bx: &AaBox, samples: usize) -> f64 {
    let samples = samples.max(2);
    let mut rng = ChaCha8Rng::seed_from_u64(SAMPLING_SEED);
    let d = f.dim();
    let (mut fx, mut fy) = (vec![0.0; d], vec![0.0; d]);
    let mut best: f64 = 0.0;
    let mut points = Vec::with_capacity(samples);
    for _ in 0..samples {
        let x = bx.sample(&mut rng);
        let y = bx.sample(&mut rng);
        let dist = norm(&sub(&x, &y));
        if dist > 0.0 {
            f.eval_into(&x, &mut fx);
            f.eval_into(&y, &mut fy);
            best = best.max(norm(&sub(&fx, &fy)) / dist);
        }
        points.push(x);
    }
    if d <= 10 {
        points.extend(bx.corners());
    }
    for p in &points {
        best = best.max(f.jacobian(p).norm_of_operator());
    }
    1.1 * best
}

trait OperatorNorm {
    fn norm_of_operator(&self) -> f64;
}

impl OperatorNorm for DMatrix<f64> {
    fn norm_of_operator(&self) -> f64 {
        self.clone().svd(false, false).singular_values.max()
    }
}

/// `F_n = L + PₙKPₙ` for a level `n` of the model; coordinates beyond `n`
/// evolve linearly.
pub fn galerkin_truncate(f: &LSField, level: usize) -> Result<LSField> {
    if !f.model.has_level(level) {
        return Err(Error::InvalidArgument(format!(
            "level {level} is not one of the model levels {:?}",
            f.model.levels
        )));
    }
    let base = f.clone();
    let mut out = LSField::new(
        f.model.clone(),
        Arc::new(move |x, o| {
            let mut px = x.to_vec();
            px[level..].fill(0.0);
            base.nonlinearity_into(&px, o);
            o[level..].fill(0.0);
        }),
    )
    .with_linear_part(f.linear.clone())
    .with_support_level(level);
    if f.k_jacobian.is_some() {
        let base = f.clone();
        out = out.with_k_jacobian(Arc::new(move |x| {
            let mut px = x.to_vec();
            px[level..].fill(0.0);
            let mut j = base.jacobian(&px);
            for i in 0..j.nrows() {
                j[(i, i)] -= base.linear[i];
            }
            let d = j.nrows();
            for r in 0..d {
                for c in 0..d {
                    if r >= level || c >= level {
                        j[(r, c)] = 0.0;
                    }
                }
            }
            j
        }));
    }
    if let Some(c) = f.lipschitz_hint {
        out = out.with_lipschitz_hint(c);
    }
    Ok(out)
}

pub(crate) fn sub(a: &[f64], b: &[f64]) -> Vec<f64> {
    a.iter().zip(b).map(|(x, y)| x - y).collect()
}

pub(crate) fn norm(a: &[f64]) -> f64 {
    a.iter().map(|x| x * x).sum::<f64>().sqrt()
}
