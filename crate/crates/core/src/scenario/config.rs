use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::estimates::{DEFAULT_MC_SAMPLES, DEFAULT_QUADRATURE_TOL};
use crate::soliton::{FiberKind, SolitonSpec};

/// Verification suites, in execution order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Suite {
    Residuals,
    Identities,
    Flow,
    Ode,
    Bounds,
    Growth,
    Volume,
}

impl Suite {
    pub const ALL: [Suite; 7] =
        [Suite::Residuals, Suite::Identities, Suite::Flow, Suite::Ode, Suite::Bounds, Suite::Growth, Suite::Volume];

    pub fn name(self) -> &'static str {
        match self {
            Suite::Residuals => "residuals",
            Suite::Identities => "identities",
            Suite::Flow => "flow",
            Suite::Ode => "ode",
            Suite::Bounds => "bounds",
            Suite::Growth => "growth",
            Suite::Volume => "volume",
        }
    }

    pub fn description(self) -> &'static str {
        match self {
            Suite::Residuals => "soliton equation residual and fiber curvature against closed forms",
            Suite::Identities => "trace, Ricci-gradient, scalar-curvature and Hamilton identities",
            Suite::Flow => "gradient-flow curve: affine parameter, distance bound, geodesic reparametrization, slope of b",
            Suite::Ode => "differential inequality, slope window, sigma monotonicity, critical points, lower-bound certificates",
            Suite::Bounds => "pointwise curvature and gradient sandwiches",
            Suite::Growth => "quadratic potential growth and volume growth exponents",
            Suite::Volume => "sublevel flux identity and quadrature against Monte Carlo ball volumes",
        }
    }

    pub fn parse(name: &str) -> Result<Suite> {
        Suite::ALL
            .into_iter()
            .find(|s| s.name() == name)
            .ok_or_else(|| Error::Config(format!("unknown check {name:?}; known checks: {}", known_checks())))
    }
}

fn known_checks() -> String {
    Suite::ALL.map(Suite::name).join(", ")
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolitonTable {
    pub n: usize,
    pub k: usize,
    pub lambda: f64,
    /// Defaults to the fiber compatible with `k` and the sign of `lambda`.
    #[serde(default)]
    pub fiber: Option<FiberKind>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
enum ChecksField {
    Keyword(String),
    List(Vec<String>),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Numerics {
    pub fd_step: f64,
    pub ode_step: f64,
    pub quadrature_tol: f64,
    pub mc_samples: usize,
    pub master_seed: u64,
    /// Sample points per pointwise suite.
    pub samples: usize,
    /// Radii in the volume profiles.
    pub profile_radii: usize,
    /// Seeded equality-ODE trajectories in the certificate check.
    pub trajectories: usize,
}

impl Default for Numerics {
    fn default() -> Self {
        Numerics {
            fd_step: 1e-3,
            ode_step: 1e-3,
            quadrature_tol: DEFAULT_QUADRATURE_TOL,
            mc_samples: DEFAULT_MC_SAMPLES,
            master_seed: 0,
            samples: 200,
            profile_radii: 41,
            trajectories: 20,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SeriesFormat {
    Json,
    Csv,
}

impl SeriesFormat {
    pub fn extension(self) -> &'static str {
        match self {
            SeriesFormat::Json => "json",
            SeriesFormat::Csv => "csv",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OutputTable {
    pub report: PathBuf,
    pub series_dir: PathBuf,
    pub format: SeriesFormat,
}

impl Default for OutputTable {
    fn default() -> Self {
        OutputTable { report: "report.json".into(), series_dir: "series".into(), format: SeriesFormat::Csv }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawConfig {
    soliton: SolitonTable,
    #[serde(default)]
    checks: Option<ChecksField>,
    #[serde(default)]
    numerics: Numerics,
    #[serde(default)]
    output: OutputTable,
}

/// A validated scenario.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ScenarioConfig {
    pub spec: SolitonSpec,
    pub checks: Vec<Suite>,
    pub numerics: Numerics,
    pub output: OutputTable,
}

impl ScenarioConfig {
    /// Parses and validates TOML text. Any problem is a config error.
    pub fn from_toml(text: &str) -> Result<Self> {
        let raw: RawConfig = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        let SolitonTable { n, k, lambda, fiber } = raw.soliton;
        let fiber = fiber.unwrap_or_else(|| FiberKind::for_parameters(k, lambda));
        let spec = SolitonSpec::new(n, k, lambda, fiber).map_err(|e| Error::Config(e.to_string()))?;
        let mut checks = match raw.checks {
            None => Suite::ALL.to_vec(),
            Some(ChecksField::Keyword(w)) if w == "all" => Suite::ALL.to_vec(),
            Some(ChecksField::Keyword(w)) => vec![Suite::parse(&w)?],
            Some(ChecksField::List(names)) => names.iter().map(|s| Suite::parse(s)).collect::<Result<_>>()?,
        };
        checks.sort();
        checks.dedup();
        let numerics = raw.numerics;
        validate_numerics(&numerics)?;
        Ok(ScenarioConfig { spec, checks, numerics, output: raw.output })
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_toml(&text)
    }
}

fn validate_numerics(n: &Numerics) -> Result<()> {
    let positive = [("fd_step", n.fd_step), ("ode_step", n.ode_step), ("quadrature_tol", n.quadrature_tol)];
    for (name, v) in positive {
        if !(v > 0.0 && v.is_finite()) {
            return Err(Error::Config(format!("numerics.{name} must be positive, got {v}")));
        }
    }
    if n.mc_samples < 2 {
        return Err(Error::Config(format!("numerics.mc_samples must be at least 2, got {}", n.mc_samples)));
    }
    if n.samples == 0 || n.profile_radii < 2 {
        return Err(Error::Config("numerics.samples and numerics.profile_radii must be positive".into()));
    }
    Ok(())
}

/// A commented configuration with every default spelled out.
pub fn example_config() -> String {
    let d = Numerics::default();
    format!(
        r#"# "all" or a subset of: {checks}
checks = "all"

# Rigid model R^(n-k) x N^k.
[soliton]
n = 4
k = 2
lambda = 0.5
# fiber = "sphere"   # sphere (lambda > 0), hyperbolic (lambda < 0), trivial (k = 0)

[numerics]
fd_step = {fd:e}
ode_step = {ode:e}
quadrature_tol = {qt:e}
mc_samples = {mc}
master_seed = {seed}
samples = {samples}
profile_radii = {radii}
trajectories = {traj}

[output]
report = "report.json"
series_dir = "series"
format = "csv"   # or "json"
"#,
        checks = known_checks(),
        fd = d.fd_step,
        ode = d.ode_step,
        qt = d.quadrature_tol,
        mc = d.mc_samples,
        seed = d.master_seed,
        samples = d.samples,
        radii = d.profile_radii,
        traj = d.trajectories,
    )
}
