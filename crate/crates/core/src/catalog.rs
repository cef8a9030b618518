//! Named systems with their default neighbourhoods and horizons.

use std::sync::Arc;

use crate::conley_e::{suspend_field, suspend_grid, LevelFamily};
use crate::continuation::HomotopyFamily;
use crate::error::{Error, Result};
use crate::isolation::GridBox;
use crate::ls_system::{negative_gradient_field, GradientSpec, LSField, Polynomial, SplitModel};

/// Bumped whenever a catalog system or default changes.
pub const CATALOG_VERSION: &str = "1";

pub const DEFAULT_STEP: f64 = 1e-2;

pub const NAMES: [&str; 10] = [
    "expand1d",
    "contract1d",
    "saddle2d",
    "doublewell",
    "doublewell-suspended",
    "rotated-saddle-homotopy",
    "isolation-breaker",
    "sphere-family-0",
    "sphere-family-1",
    "sphere-family-2",
];

/// What a catalog name resolves to.
#[derive(Clone, Debug)]
pub enum System {
    Field {
        field: LSField,
        /// Present when the field is the negative gradient of `gradient`.
        gradient: Option<GradientSpec>,
    },
    Homotopy(HomotopyFamily),
    Spheres(LevelFamily),
}

#[derive(Clone, Debug)]
pub struct Scenario {
    pub name: String,
    pub system: System,
    pub grid: GridBox,
    pub t: f64,
}

fn model(spectrum: Vec<f64>) -> SplitModel {
    SplitModel::diagonal(spectrum).expect("catalog spectra are nonzero")
}

/// `f = −½x²` (`d⁻ = 1`), flow `ẋ = x`.
pub fn expand1d_gradient() -> GradientSpec {
    GradientSpec::quadratic(model(vec![-1.0])).with_support_level(1)
}

pub fn expand1d() -> LSField {
    negative_gradient_field(&expand1d_gradient())
}

/// `f = ½x²`, flow `ẋ = −x`.
pub fn contract1d_gradient() -> GradientSpec {
    GradientSpec::quadratic(model(vec![1.0])).with_support_level(1)
}

pub fn contract1d() -> LSField {
    negative_gradient_field(&contract1d_gradient())
}

/// `ẋ = diag(1, −1)x`.
pub fn saddle2d() -> LSField {
    LSField::linear(model(vec![1.0, -1.0]))
}

/// `f = −½x₁² + ½x₂²`, whose negative gradient flow is [`saddle2d`].
pub fn saddle2d_gradient() -> GradientSpec {
    GradientSpec::quadratic(model(vec![-1.0, 1.0])).with_support_level(2)
}

/// `f = ½x₁² − ½x₂² + ¼x₁⁴ − x₁²`: wells at `(±1, 0)`, saddle-source at 0.
pub fn doublewell_gradient() -> GradientSpec {
    let b = Polynomial::power(2, 0, 0.25, 4).add(&Polynomial::power(2, 0, -1.0, 2));
    GradientSpec::polynomial(model(vec![1.0, -1.0]), b).with_support_level(2)
}

pub fn doublewell() -> LSField {
    negative_gradient_field(&doublewell_gradient())
}

pub fn doublewell_grid() -> GridBox {
    GridBox::cube(2, 1.5, 64)
}

pub fn doublewell_suspended() -> LSField {
    suspend_field(&doublewell()).expect("suspension of a catalog field")
}

/// Symmetric matrix `R(θ) diag(1, −1) R(θ)ᵀ`.
pub fn rotated_saddle_matrix(theta: f64) -> [[f64; 2]; 2] {
    let (c, s) = (theta.cos(), theta.sin());
    [[c * c - s * s, 2.0 * c * s], [2.0 * c * s, s * s - c * c]]
}

/// `ẋ = Ax` for the rotated saddle, with `A − L` carried in the nonlinearity.
pub fn rotated_saddle(theta: f64) -> LSField {
    let a = rotated_saddle_matrix(theta);
    LSField::from_fn(model(vec![1.0, -1.0]), move |x| {
        vec![(a[0][0] - 1.0) * x[0] + a[0][1] * x[1], a[1][0] * x[0] + (a[1][1] + 1.0) * x[1]]
    })
}

/// Linear interpolation from [`saddle2d`] to the saddle rotated by 10°.
pub fn rotated_saddle_homotopy() -> HomotopyFamily {
    HomotopyFamily::linear(saddle2d(), rotated_saddle(10f64.to_radians())).expect("same dimension")
}

/// `F_s(x) = L(x − (2s, 0))`: the fixed point leaves `[−1,1]²` at `s = ½`.
pub fn isolation_breaker() -> HomotopyFamily {
    HomotopyFamily::new(Arc::new(|s| saddle2d().plus_constant(vec![-2.0 * s, 0.0])))
}

pub fn lookup(name: &str) -> Result<Scenario> {
    let unit2 = GridBox::cube(2, 1.0, 64);
    let (system, grid, t) = match name {
        "expand1d" => {
            (System::Field { field: expand1d(), gradient: Some(expand1d_gradient()) }, GridBox::cube(1, 1.0, 64), 2.0)
        }
        "contract1d" => (
            System::Field { field: contract1d(), gradient: Some(contract1d_gradient()) },
            GridBox::cube(1, 1.0, 64),
            2.0,
        ),
        "saddle2d" => (System::Field { field: saddle2d(), gradient: Some(saddle2d_gradient()) }, unit2, 3.0),
        "doublewell" => {
            (System::Field { field: doublewell(), gradient: Some(doublewell_gradient()) }, doublewell_grid(), 2.0)
        }
        "doublewell-suspended" => (
            System::Field { field: doublewell_suspended(), gradient: None },
            suspend_grid(&GridBox::cube(2, 1.5, 32), 32),
            2.0,
        ),
        "rotated-saddle-homotopy" => (System::Homotopy(rotated_saddle_homotopy()), unit2, 3.0),
        "isolation-breaker" => (System::Homotopy(isolation_breaker()), unit2, 3.0),
        _ => {
            let p = name
                .strip_prefix("sphere-family-")
                .and_then(|p| p.parse::<usize>().ok())
                .filter(|&p| p <= 2)
                .ok_or_else(|| Error::InvalidArgument(format!("unknown catalog system '{name}'")))?;
            let fam = LevelFamily::sphere_family(p);
            let d = fam.levels.last().map_or(1, |(_, s)| s.ambient_dim());
            (System::Spheres(fam), GridBox::cube(d, 1.0, 8), 1.0)
        }
    };
    Ok(Scenario { name: name.to_string(), system, grid, t })
}

/// One-dimensional building block of a separable gradient system
/// `f(x) = Σᵢ φᵢ(xᵢ)`, each with a small tilt `a·xᵢ`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum AxisProfile {
    /// `½x² + ax`: one minimum.
    Min(f64),
    /// `−½x² + ax`: one maximum.
    Max(f64),
    /// `¼x⁴ − ½x² + ax`: minimum, maximum, minimum.
    Well(f64),
    /// `−¼x⁴ + ½x² + ax`: maximum, minimum, maximum.
    Hill(f64),
}

impl AxisProfile {
    /// Entry of `L` on this axis.
    pub fn spectrum(self) -> f64 {
        match self {
            Self::Min(_) | Self::Hill(_) => 1.0,
            Self::Max(_) | Self::Well(_) => -1.0,
        }
    }

    pub fn tilt(self) -> f64 {
        match self {
            Self::Min(a) | Self::Max(a) | Self::Well(a) | Self::Hill(a) => a,
        }
    }

    fn has_max(self) -> bool {
        !matches!(self, Self::Min(_))
    }

    fn is_multi(self) -> bool {
        matches!(self, Self::Well(_) | Self::Hill(_))
    }
}

/// Separable system built from axis profiles; `U = [−1.5, 1.5]^d`.
pub fn separable_system(axes: &[AxisProfile]) -> (GradientSpec, GridBox) {
    let d = axes.len();
    let mut b = Polynomial::zero(d);
    for (i, p) in axes.iter().enumerate() {
        b = b.add(&Polynomial::power(d, i, p.tilt(), 1));
        match p {
            AxisProfile::Well(_) => b = b.add(&Polynomial::power(d, i, 0.25, 4)),
            AxisProfile::Hill(_) => b = b.add(&Polynomial::power(d, i, -0.25, 4)),
            _ => {}
        }
    }
    let spectrum = axes.iter().map(|p| p.spectrum()).collect();
    let g = GradientSpec::polynomial(model(spectrum), b).with_support_level(d);
    (g, GridBox::cube(d, 1.5, 16))
}

/// Seeded random separable system with `d ≤ 3`, at most nine critical
/// points and at most two unstable directions at any of them.
pub fn random_separable(seed: u64) -> Vec<AxisProfile> {
    use rand::{Rng, SeedableRng};
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    let d = rng.gen_range(1..=3);
    let mut axes: Vec<AxisProfile> = Vec::with_capacity(d);
    for _ in 0..d {
        let a = rng.gen_range(-0.15..0.15);
        let maxes = axes.iter().filter(|p| p.has_max()).count();
        let multi = axes.iter().filter(|p| p.is_multi()).count();
        let choice = if maxes >= 2 { 0 } else { rng.gen_range(0..4) };
        let p = match choice {
            1 => AxisProfile::Max(a),
            2 if multi < 2 => AxisProfile::Well(a),
            3 if multi < 2 => AxisProfile::Hill(a),
            _ => AxisProfile::Min(a),
        };
        axes.push(p);
    }
    axes
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn every_name_resolves() {
        for n in NAMES {
            assert_eq!(lookup(n).unwrap().name, n);
        }
        assert!(lookup("nope").is_err());
        assert!(lookup("sphere-family-3").is_err());
    }

    #[test]
    fn rotated_matrix_is_symmetric_saddle() {
        let a = rotated_saddle_matrix(0.3);
        assert!((a[0][1] - a[1][0]).abs() < 1e-15);
        assert!((a[0][0] + a[1][1]).abs() < 1e-15);
        let det = a[0][0] * a[1][1] - a[0][1] * a[1][0];
        assert!((det + 1.0).abs() < 1e-12);
        let f = rotated_saddle(0.0);
        assert_eq!(f.evaluate(&[0.3, 0.4]).unwrap(), vec![0.3, -0.4]);
    }

    #[test]
    fn random_separable_respects_limits() {
        for seed in 0..200 {
            let axes = random_separable(seed);
            assert!((1..=3).contains(&axes.len()));
            assert!(axes.iter().filter(|p| p.has_max()).count() <= 2);
            assert!(axes.iter().filter(|p| p.is_multi()).count() <= 2);
        }
    }

    #[test]
    fn doublewell_zeros() {
        let f = doublewell();
        for x in [[0.0, 0.0], [1.0, 0.0], [-1.0, 0.0]] {
            assert!(f.evaluate(&x).unwrap().iter().all(|v| v.abs() < 1e-14));
        }
    }
}
