//! Fast–slow extension of a family `f_λ`: one more coordinate `μ` with
//!
//! `F(x, μ) = f_λ(x) + r(1 + cos πμ) + η(μ)/κ`, `λ = 1 − ω(μ)`,
//!
//! written in the rescaled coordinate `ν = μ/√κ` so that the gradient is
//! Euclidean and the slow velocity reads `μ̇ = −κ ∂_μF`.

use std::f64::consts::PI;
use std::sync::Arc;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::isolation::GridBox;
use crate::ls_system::{GradientSpec, SplitModel, FD_STEP};

pub type FamilyMap = Arc<dyn Fn(f64) -> GradientSpec + Send + Sync>;

const MONOTONICITY_SEED: u64 = 0x5f1a_0bb1;

fn psi(s: f64) -> f64 {
    if s > 0.0 {
        (-1.0 / s).exp()
    } else {
        0.0
    }
}

fn psi_prime(s: f64) -> f64 {
    if s > 0.0 {
        psi(s) / (s * s)
    } else {
        0.0
    }
}

/// Smooth step: `1` on `μ ≤ 1/3`, `0` on `μ ≥ 2/3`, strictly decreasing between.
pub fn omega(mu: f64) -> f64 {
    let s = 3.0 * mu - 1.0;
    let (a, b) = (psi(s), psi(1.0 - s));
    if a + b == 0.0 {
        return if s <= 0.0 { 1.0 } else { 0.0 };
    }
    1.0 - a / (a + b)
}

pub fn omega_prime(mu: f64) -> f64 {
    let s = 3.0 * mu - 1.0;
    let (a, b) = (psi(s), psi(1.0 - s));
    if a + b == 0.0 {
        return 0.0;
    }
    let ds = (psi_prime(s) * b + a * psi_prime(1.0 - s)) / ((a + b) * (a + b));
    -3.0 * ds
}

fn h(s: f64) -> f64 {
    if s > 0.0 {
        4.0 * s * (-1.0 / s).exp()
    } else {
        0.0
    }
}

fn h_prime(s: f64) -> f64 {
    if s > 0.0 {
        4.0 * (-1.0 / s).exp() * (1.0 + 1.0 / s)
    } else {
        0.0
    }
}

/// Wall potential `η(μ) = h(−μ) + h(μ − 1)`, `h(s) = 4s·e^{−1/s}` for `s > 0`.
pub fn wall_eta(mu: f64) -> f64 {
    h(-mu) + h(mu - 1.0)
}

pub fn wall_eta_prime(mu: f64) -> f64 {
    h_prime(mu - 1.0) - h_prime(-mu)
}

/// Input of the extension: the family, the box for `x`, `r` and `κ`.
#[derive(Clone)]
pub struct FastSlowSpec {
    pub family: FamilyMap,
    pub domain: GridBox,
    pub r: f64,
    pub kappa: f64,
}

impl FastSlowSpec {
    pub fn new(family: FamilyMap, domain: GridBox, r: f64, kappa: f64) -> Self {
        Self { family, domain, r, kappa }
    }

    /// The family `f_λ = g` for every `λ`.
    pub fn constant(g: GradientSpec, domain: GridBox, r: f64, kappa: f64) -> Self {
        Self::new(Arc::new(move |_| g.clone()), domain, r, kappa)
    }

    fn dlambda(&self, lambda: f64, x: &[f64]) -> f64 {
        let hi = (self.family)(lambda + FD_STEP).value(x);
        let lo = (self.family)(lambda - FD_STEP).value(x);
        (hi - lo) / (2.0 * FD_STEP)
    }

    /// `∂_μF(x, μ)`.
    pub fn d_mu(&self, x: &[f64], mu: f64) -> f64 {
        let w = omega_prime(mu);
        let family_term = if w == 0.0 { 0.0 } else { -w * self.dlambda(1.0 - omega(mu), x) };
        family_term - self.r * PI * (PI * mu).sin() + wall_eta_prime(mu) / self.kappa
    }

    /// Slow velocity `μ̇ = −κ ∂_μF`.
    pub fn mu_velocity(&self, x: &[f64], mu: f64) -> f64 {
        -self.kappa * self.d_mu(x, mu)
    }

    /// `C ≥ sup |∂_λ f_λ|` over the box and `λ ∈ [0,1]`: 1.1 × the sampled
    /// supremum plus 0.05.
    pub fn c_bound(&self) -> f64 {
        let g = &self.domain;
        let coarse = GridBox { lower: g.lower.clone(), upper: g.upper.clone(), subdivisions: vec![6; g.dim()] };
        let mut pts: Vec<Vec<f64>> = coarse.all_cells().iter().map(|c| coarse.cell_center(c)).collect();
        pts.extend(g.bounds().corners());
        let mut sup: f64 = 0.0;
        for i in 0..=20 {
            let lambda = i as f64 / 20.0;
            for p in &pts {
                sup = sup.max(self.dlambda(lambda, p).abs());
            }
        }
        1.1 * sup + 0.05
    }

    /// Lower bound on `r` that keeps `μ̇ > 0` on `(0,1)`:
    /// `2·max|ω′|·C/(√3π)`.
    pub fn r_threshold(&self) -> f64 {
        let max_w = (0..=3000).map(|i| omega_prime(i as f64 / 3000.0).abs()).fold(0.0, f64::max);
        2.0 * max_w * self.c_bound() / (3f64.sqrt() * PI)
    }
}

/// The extended gradient system on `(x, ν)`.
#[derive(Clone, Debug)]
pub struct FastSlowField {
    pub gradient: GradientSpec,
    pub r: f64,
    pub kappa: f64,
    pub threshold: f64,
    x_domain: GridBox,
}

impl FastSlowField {
    pub fn mu(&self, z: &[f64]) -> f64 {
        z[z.len() - 1] * self.kappa.sqrt()
    }

    /// `U × [−1/3, 4/3]` in `(x, ν)` coordinates, `n` cells along `ν`.
    pub fn domain(&self, n: usize) -> GridBox {
        let s = self.kappa.sqrt();
        let mut lower = self.x_domain.lower.clone();
        let mut upper = self.x_domain.upper.clone();
        let mut subdivisions = self.x_domain.subdivisions.clone();
        lower.push(-1.0 / 3.0 / s);
        upper.push(4.0 / 3.0 / s);
        subdivisions.push(n);
        GridBox { lower, upper, subdivisions }
    }
}

/// Extension with the threshold enforced.
pub fn build_fastslow(spec: &FastSlowSpec) -> Result<FastSlowField> {
    let threshold = spec.r_threshold();
    if spec.r <= threshold {
        return Err(Error::RBelowThreshold { r: spec.r, threshold });
    }
    build_fastslow_unchecked(spec)
}

/// Extension without the threshold check, for experiments with small `r`.
pub fn build_fastslow_unchecked(spec: &FastSlowSpec) -> Result<FastSlowField> {
    if spec.kappa <= 0.0 {
        return Err(Error::InvalidArgument(format!("kappa must be positive, got {}", spec.kappa)));
    }
    let base = (spec.family)(0.0);
    let d = base.dim();
    let model: SplitModel = base.model().appended(1.0)?;
    let lin = base.model().spectrum().to_vec();
    let root_k = spec.kappa.sqrt();

    let s1 = spec.clone();
    let lin1 = lin.clone();
    let b = Arc::new(move |z: &[f64]| {
        let (x, nu) = (&z[..d], z[d]);
        let mu = nu * root_k;
        let f = (s1.family)(1.0 - omega(mu)).value(x);
        let quad: f64 = lin1.iter().zip(x).map(|(l, xi)| l * xi * xi).sum();
        f + s1.r * (1.0 + (PI * mu).cos()) + wall_eta(mu) / s1.kappa - 0.5 * quad - 0.5 * nu * nu
    });
    let s2 = spec.clone();
    let grad = Arc::new(move |z: &[f64], out: &mut [f64]| {
        let (x, nu) = (&z[..d], z[d]);
        let mu = nu * root_k;
        let gx = (s2.family)(1.0 - omega(mu)).gradient(x);
        for i in 0..d {
            out[i] = gx[i] - lin[i] * x[i];
        }
        out[d] = root_k * s2.d_mu(x, mu) - nu;
    });
    Ok(FastSlowField {
        gradient: GradientSpec::new(model, b, grad),
        r: spec.r,
        kappa: spec.kappa,
        threshold: spec.r_threshold(),
        x_domain: spec.domain.clone(),
    })
}

/// Sampled sign check of `μ̇` on `U × (0,1)`.
#[derive(Clone, Debug, PartialEq)]
pub struct MonotonicityReport {
    pub samples: usize,
    pub violations: usize,
    /// Up to ten `(x, μ, μ̇)` with `μ̇ ≤ 0`.
    pub witnesses: Vec<(Vec<f64>, f64, f64)>,
}

/// `μ̇ > 0` at `samples` random points with `μ ∈ [0.02, 0.98]`.
pub fn fastslow_monotonicity_check(spec: &FastSlowSpec, samples: usize) -> MonotonicityReport {
    use rand::Rng;
    let mut rng = ChaCha8Rng::seed_from_u64(MONOTONICITY_SEED);
    let bounds = spec.domain.bounds();
    let mut report = MonotonicityReport { samples, violations: 0, witnesses: Vec::new() };
    for _ in 0..samples {
        let x = bounds.sample(&mut rng);
        let mu = rng.gen_range(0.02..0.98);
        let v = spec.mu_velocity(&x, mu);
        if v <= 0.0 {
            report.violations += 1;
            if report.witnesses.len() < 10 {
                report.witnesses.push((x, mu, v));
            }
        }
    }
    report
}
