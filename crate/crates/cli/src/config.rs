//! Scenario configuration: TOML schema, validation and resolution into
//! core objects.

use std::fmt;
use std::path::PathBuf;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use conley_core::catalog::{self, Scenario, System, DEFAULT_STEP};
use conley_core::isolation::GridBox;
use conley_core::ls_system::{negative_gradient_field, GradientSpec, LSField, Polynomial, SplitModel};

use crate::error::{CliError, Result};

/// Minimum number of cells per axis.
pub const MIN_SUBDIVISIONS: usize = 8;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Task {
    Index,
    Morse,
    Compare,
    Continue,
    Ecoh,
    Suite,
}

impl Task {
    pub fn name(self) -> &'static str {
        match self {
            Task::Index => "index",
            Task::Morse => "morse",
            Task::Compare => "compare",
            Task::Continue => "continue",
            Task::Ecoh => "ecoh",
            Task::Suite => "suite",
        }
    }
}

impl fmt::Display for Task {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Task {
    type Err = CliError;

    fn from_str(s: &str) -> Result<Self> {
        Ok(match s {
            "index" => Task::Index,
            "morse" => Task::Morse,
            "compare" => Task::Compare,
            "continue" => Task::Continue,
            "ecoh" => Task::Ecoh,
            "suite" => Task::Suite,
            _ => return Err(CliError::config("task", format!("unknown task '{s}'"))),
        })
    }
}

/// One monomial `coeff · Π xᵢ^{eᵢ}`; for field nonlinearities `component`
/// selects the coordinate of `K` it contributes to.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TermConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub component: Option<usize>,
    pub coeff: f64,
    pub exponents: Vec<u32>,
}

/// Either a catalog name or an inline polynomial system.
///
/// Inline systems give the spectrum of `L` and either `potential` terms
/// (the system is the negative gradient of `½⟨Lx, x⟩ + b`, with `b` the sum
/// of the terms) or `nonlinearity` terms (the field `Lx + K(x)`).
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SystemConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub catalog: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub spectrum: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub levels: Option<Vec<usize>>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub potential: Vec<TermConfig>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub nonlinearity: Vec<TermConfig>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NeighborhoodConfig {
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
    pub subdivisions: Vec<usize>,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dir: Option<PathBuf>,
    #[serde(default)]
    pub csv: bool,
    #[serde(default)]
    pub dump_cells: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    pub task: Task,
    #[serde(default)]
    pub system: SystemConfig,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub neighborhood: Option<NeighborhoodConfig>,
    /// Defaults to the catalog horizon, or 2 for inline systems.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub horizon: Option<f64>,
    #[serde(default = "default_step")]
    pub step: f64,
    #[serde(default)]
    pub seed: u64,
    /// Amplitude of a Gaussian bump added to the field; 0 disables it.
    #[serde(default)]
    pub perturb: f64,
    #[serde(default = "default_s_samples")]
    pub s_samples: usize,
    #[serde(default)]
    pub output: OutputConfig,
}

fn default_step() -> f64 {
    DEFAULT_STEP
}

fn default_s_samples() -> usize {
    conley_core::continuation::DEFAULT_S_SAMPLES
}

impl ScenarioConfig {
    pub fn for_task(task: Task) -> Self {
        Self {
            task,
            system: SystemConfig::default(),
            neighborhood: None,
            horizon: None,
            step: DEFAULT_STEP,
            seed: 0,
            perturb: 0.0,
            s_samples: default_s_samples(),
            output: OutputConfig::default(),
        }
    }

    pub fn catalog(task: Task, name: &str) -> Self {
        let mut c = Self::for_task(task);
        c.system.catalog = Some(name.to_string());
        c
    }

    pub fn from_toml(text: &str) -> Result<Self> {
        let c: Self = toml::from_str(text).map_err(|e| CliError::config("config", e.message().to_string()))?;
        Ok(c)
    }

    /// Parses a scenario file whose task is given by the subcommand; a
    /// `task` key in the file is overridden.
    pub fn load(text: &str, task: Task) -> Result<Self> {
        let mut table: toml::Table =
            text.parse().map_err(|e: toml::de::Error| CliError::config("config", e.message().to_string()))?;
        table.insert("task".into(), toml::Value::String(task.name().into()));
        toml::Value::Table(table)
            .try_into()
            .map_err(|e: toml::de::Error| CliError::config("config", e.message().to_string()))
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    /// SHA-256 of the canonical TOML form, as lowercase hex.
    pub fn hash(&self) -> String {
        use sha2::{Digest, Sha256};
        Sha256::digest(self.to_toml().as_bytes()).iter().map(|b| format!("{b:02x}")).collect()
    }

    /// Resolves the system, neighbourhood and horizon, checking every field.
    pub fn resolve(&self) -> Result<Scenario> {
        if !(self.step > 0.0 && self.step.is_finite()) {
            return Err(CliError::config("step", format!("must be positive, got {}", self.step)));
        }
        if self.s_samples < 2 {
            return Err(CliError::config("s_samples", "at least two samples are needed"));
        }
        if !(self.perturb >= 0.0 && self.perturb.is_finite()) {
            return Err(CliError::config("perturb", format!("must be non-negative, got {}", self.perturb)));
        }
        let mut scenario = self.system.resolve()?;
        if let Some(t) = self.horizon {
            if !(t > 0.0 && t.is_finite()) {
                return Err(CliError::config("horizon", format!("must be positive, got {t}")));
            }
            scenario.t = t;
        }
        if self.step > scenario.t / 10.0 {
            return Err(CliError::config("step", format!("{} exceeds horizon/10 = {}", self.step, scenario.t / 10.0)));
        }
        if let Some(n) = &self.neighborhood {
            scenario.grid = n.resolve()?;
        }
        let d = system_dim(&scenario.system);
        if scenario.grid.dim() != d {
            return Err(CliError::config(
                "neighborhood",
                format!("box has dimension {}, system has {d}", scenario.grid.dim()),
            ));
        }
        if let Some(&n) = scenario.grid.subdivisions.iter().find(|&&n| n < MIN_SUBDIVISIONS) {
            return Err(CliError::config(
                "neighborhood.subdivisions",
                format!("{n} is below the minimum of {MIN_SUBDIVISIONS} per axis"),
            ));
        }
        Ok(scenario)
    }
}

fn system_dim(s: &System) -> usize {
    match s {
        System::Field { field, .. } => field.dim(),
        System::Homotopy(h) => h.start().dim(),
        System::Spheres(fam) => fam.levels[0].1.ambient_dim(),
    }
}

impl NeighborhoodConfig {
    fn resolve(&self) -> Result<GridBox> {
        let d = self.lower.len();
        if self.upper.len() != d {
            return Err(CliError::config("neighborhood.upper", format!("expected {d} entries")));
        }
        let subdivisions = match self.subdivisions.len() {
            1 => vec![self.subdivisions[0]; d],
            n if n == d => self.subdivisions.clone(),
            _ => return Err(CliError::config("neighborhood.subdivisions", format!("expected 1 or {d} entries"))),
        };
        if let Some(&n) = subdivisions.iter().find(|&&n| n < MIN_SUBDIVISIONS) {
            return Err(CliError::config(
                "neighborhood.subdivisions",
                format!("{n} is below the minimum of {MIN_SUBDIVISIONS} per axis"),
            ));
        }
        if let Some(i) = (0..d).find(|&i| !(self.lower[i] < self.upper[i])) {
            return Err(CliError::config("neighborhood", format!("lower[{i}] must be below upper[{i}]")));
        }
        GridBox::new(self.lower.clone(), self.upper.clone(), subdivisions)
            .map_err(|e| CliError::config("neighborhood", e.to_string()))
    }
}

impl SystemConfig {
    fn resolve(&self) -> Result<Scenario> {
        match (&self.catalog, &self.spectrum) {
            (Some(_), Some(_)) => Err(CliError::config("system", "give either 'catalog' or an inline 'spectrum'")),
            (Some(name), None) => catalog::lookup(name).map_err(|e| CliError::config("system.catalog", e.to_string())),
            (None, Some(spectrum)) => self.inline(spectrum),
            (None, None) => Err(CliError::config("system", "missing 'catalog' or 'spectrum'")),
        }
    }

    fn inline(&self, spectrum: &[f64]) -> Result<Scenario> {
        let d = spectrum.len();
        if d == 0 {
            return Err(CliError::config("system.spectrum", "must not be empty"));
        }
        let levels = self.levels.clone().unwrap_or_else(|| (1..=d).collect());
        let model = SplitModel::new(spectrum.to_vec(), levels)
            .map_err(|e| CliError::config("system.spectrum", e.to_string()))?;
        let (field, gradient) = match (self.potential.is_empty(), self.nonlinearity.is_empty()) {
            (false, false) => {
                return Err(CliError::config("system", "give either 'potential' or 'nonlinearity' terms"));
            }
            (true, true) => (LSField::linear(model), None),
            (false, true) => {
                let b = polynomial("system.potential", d, &self.potential, None)?;
                let g = GradientSpec::polynomial(model, b).with_support_level(d);
                (negative_gradient_field(&g), Some(g))
            }
            (true, false) => {
                let parts = (0..d)
                    .map(|i| polynomial("system.nonlinearity", d, &self.nonlinearity, Some(i)))
                    .collect::<Result<Vec<_>>>()?;
                if let Some(i) = self.nonlinearity.iter().position(|t| t.component.map_or(true, |c| c >= d)) {
                    return Err(CliError::config(
                        format!("system.nonlinearity[{i}].component"),
                        format!("required, and must be below {d}"),
                    ));
                }
                let field = LSField::from_fn(model, move |x| parts.iter().map(|p| p.eval(x)).collect());
                (field, None)
            }
        };
        let grid = GridBox::cube(d, 1.0, 32);
        Ok(Scenario { name: "inline".to_string(), system: System::Field { field, gradient }, grid, t: 2.0 })
    }
}

fn polynomial(path: &str, d: usize, terms: &[TermConfig], component: Option<usize>) -> Result<Polynomial> {
    let mut p = Polynomial::zero(d);
    for (i, t) in terms.iter().enumerate() {
        if t.exponents.len() != d {
            return Err(CliError::config(format!("{path}[{i}].exponents"), format!("expected {d} entries")));
        }
        if !t.coeff.is_finite() {
            return Err(CliError::config(format!("{path}[{i}].coeff"), "must be finite"));
        }
        if component.is_none() || t.component == component {
            p = p.add(&Polynomial::monomial(d, t.coeff, t.exponents.clone()));
        }
    }
    Ok(p)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn field_path(e: CliError) -> String {
        match e {
            CliError::Config { path, .. } => path,
            other => panic!("not a config error: {other}"),
        }
    }

    #[test]
    fn catalog_config_round_trips() {
        let text = r#"
task = "index"
step = 0.01
[system]
catalog = "saddle2d"
"#;
        let c = ScenarioConfig::from_toml(text).unwrap();
        assert_eq!(c.task, Task::Index);
        assert_eq!(ScenarioConfig::from_toml(&c.to_toml()).unwrap(), c);
        let s = c.resolve().unwrap();
        assert_eq!(s.t, 3.0);
        assert_eq!(s.grid.subdivisions, vec![64, 64]);
    }

    #[test]
    fn step_above_horizon_is_named() {
        let mut c = ScenarioConfig::catalog(Task::Index, "expand1d");
        c.step = 5.0;
        assert_eq!(field_path(c.resolve().unwrap_err()), "step");
        c.step = 0.3; // T = 2, so T/10 = 0.2
        assert_eq!(field_path(c.resolve().unwrap_err()), "step");
    }

    #[test]
    fn coarse_grid_is_rejected() {
        let mut c = ScenarioConfig::catalog(Task::Index, "saddle2d");
        c.neighborhood = Some(NeighborhoodConfig { lower: vec![-1.0; 2], upper: vec![1.0; 2], subdivisions: vec![4] });
        assert_eq!(field_path(c.resolve().unwrap_err()), "neighborhood.subdivisions");
        c.neighborhood = Some(NeighborhoodConfig { lower: vec![-1.0], upper: vec![1.0], subdivisions: vec![16] });
        assert_eq!(field_path(c.resolve().unwrap_err()), "neighborhood");
    }

    #[test]
    fn inline_potential_matches_catalog_doublewell() {
        let text = r#"
task = "morse"
[system]
spectrum = [1.0, -1.0]
potential = [ { coeff = 0.25, exponents = [4, 0] }, { coeff = -1.0, exponents = [2, 0] } ]
[neighborhood]
lower = [-1.5, -1.5]
upper = [1.5, 1.5]
subdivisions = [16]
"#;
        let s = ScenarioConfig::from_toml(text).unwrap().resolve().unwrap();
        let System::Field { field, gradient: Some(g) } = s.system else { panic!("expected a gradient system") };
        let reference = catalog::doublewell_gradient();
        let f_ref = catalog::doublewell();
        for x in [[0.3, -0.2], [1.1, 0.7], [-1.4, 0.0]] {
            assert!((g.value(&x) - reference.value(&x)).abs() < 1e-12);
            let (a, b) = (field.evaluate(&x).unwrap(), f_ref.evaluate(&x).unwrap());
            assert!(a.iter().zip(&b).all(|(p, q)| (p - q).abs() < 1e-12));
        }
    }

    #[test]
    fn inline_nonlinearity_needs_components() {
        let text = r#"
task = "index"
[system]
spectrum = [1.0]
nonlinearity = [ { coeff = -1.0, exponents = [3] } ]
"#;
        let e = ScenarioConfig::from_toml(text).unwrap().resolve().unwrap_err();
        assert_eq!(field_path(e), "system.nonlinearity[0].component");
    }

    #[test]
    fn unknown_keys_and_tasks_fail() {
        assert!(ScenarioConfig::from_toml("task = \"index\"\nbogus = 1\n").is_err());
        assert!(ScenarioConfig::from_toml("task = \"fly\"\n").is_err());
        assert!(ScenarioConfig::for_task(Task::Index).resolve().is_err());
    }

    #[test]
    fn hash_tracks_content() {
        let a = ScenarioConfig::catalog(Task::Index, "saddle2d");
        let mut b = a.clone();
        assert_eq!(a.hash(), b.hash());
        b.seed = 7;
        assert_ne!(a.hash(), b.hash());
        assert_eq!(a.hash().len(), 64);
    }
}
