//! Scenario files: TOML parsed into [`ScenarioConfig`] and checked against
//! the numeric constraints of the target solver before anything runs.

use std::path::{Path, PathBuf};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use anthracnose::host::{ControlSignal, HostState, ModelParams, Rate, SeasonalForcing, TimeSeries};
use anthracnose::ode_control::{CostSpec, TerminalCost};
use anthracnose::pde::{build_grid, DiffusionField, GridSpec, ScalarField, SpatialGrid, TensorSpec};
use anthracnose::pde_control::{AlphaField, LinearizationPoint, PdeCostSpec, SweepOptions};
use anthracnose::severity::{weather_alpha, SeverityModel, WeatherSample};

use crate::error::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Mode {
    SimulateOde,
    OptimizeOde,
    SimulatePde,
    RiccatiPde,
    SweepPde,
    Forecast,
}

impl Mode {
    fn is_ode(self) -> bool {
        matches!(self, Mode::SimulateOde | Mode::OptimizeOde | Mode::Forecast)
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    pub name: String,
    #[serde(default)]
    pub description: String,
    pub mode: Mode,
    pub t_end: f64,
    pub dt: f64,
    #[serde(default)]
    pub seed: u64,
    /// Output directory; relative paths resolve against the working directory.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub model: Option<ModelConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub initial: Option<InitialConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub control: Option<ControlConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub cost: Option<CostConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub grid: Option<GridConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub pde: Option<PdeConfig>,
}

/// A forcing of time (and for `theta-proportional`, of θ).
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum ForcingConfig {
    Constant {
        value: f64,
    },
    Seasonal {
        a: f64,
        b: f64,
        c: f64,
    },
    ThetaProportional {
        value: f64,
    },
    Series {
        times: Vec<f64>,
        values: Vec<f64>,
    },
    /// `max(0, scale · severity(weather(t)))`.
    Weather {
        #[serde(default, skip_serializing_if = "Option::is_none")]
        csv: Option<PathBuf>,
        /// Inline rows `[t, T, W, H]`.
        #[serde(default, skip_serializing_if = "Option::is_none")]
        samples: Option<Vec<[f64; 4]>>,
        scale: f64,
        severity: SeverityModel,
    },
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelConfig {
    pub theta1: f64,
    #[serde(default = "default_theta2")]
    pub theta2: f64,
    #[serde(default = "default_one")]
    pub v_max: f64,
    pub alpha: ForcingConfig,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub beta: Option<ForcingConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gamma: Option<ForcingConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub eta: Option<ForcingConfig>,
}

fn default_theta2() -> f64 {
    0.5
}

fn default_one() -> f64 {
    1.0
}

fn default_half() -> f64 {
    0.5
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InitialConfig {
    pub theta: f64,
    #[serde(default = "default_half")]
    pub v: f64,
    #[serde(default)]
    pub v_r: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum ControlConfig {
    Constant { value: f64 },
    Series { times: Vec<f64>, values: Vec<f64> },
    /// Piecewise linear through `knots` seeded uniform values in `[0, 1]`.
    Random { knots: usize },
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum TerminalConfig {
    Zero,
    Linear { c: f64 },
    Quadratic { c: f64 },
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CostConfig {
    #[serde(default = "default_one")]
    pub k: f64,
    #[serde(default = "default_terminal")]
    pub terminal: TerminalConfig,
}

fn default_terminal() -> TerminalConfig {
    TerminalConfig::Linear { c: 1.0 }
}

impl Default for CostConfig {
    fn default() -> Self {
        Self {
            k: 1.0,
            terminal: default_terminal(),
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum DiffusionConfig {
    Isotropic { value: f64 },
    Diagonal { values: Vec<f64> },
    Full { tensor: [[f64; 2]; 2] },
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridConfig {
    pub extents: Vec<f64>,
    pub resolution: Vec<usize>,
    pub diffusion: DiffusionConfig,
}

/// A spatial field on the grid.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum FieldConfig {
    Constant {
        value: f64,
    },
    /// `base + Σ slope_k · x_k`
    Linear {
        base: f64,
        slope: Vec<f64>,
    },
    /// `base + amplitude · Π sin(π x_k / L_k)`
    Sine {
        base: f64,
        amplitude: f64,
    },
    /// Seeded uniform values in `[low, high]`.
    Random {
        low: f64,
        high: f64,
    },
    Csv {
        path: PathBuf,
    },
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PdeConfig {
    pub theta1: f64,
    pub theta0: FieldConfig,
    /// Spatial profile of α.
    pub alpha: FieldConfig,
    /// Optional time factor multiplying the profile.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub alpha_time: Option<ForcingConfig>,
    /// Control for `simulate-pde`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub u: Option<FieldConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub k1: Option<FieldConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub k2: Option<FieldConfig>,
    /// Linearization offset for `riccati-pde`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub epsilon: Option<FieldConfig>,
    #[serde(default = "default_half")]
    pub relax: f64,
    #[serde(default = "default_max_iter")]
    pub max_iter: usize,
    #[serde(default = "default_sweep_tol")]
    pub tol: f64,
    /// Number of stored snapshots besides the initial field.
    #[serde(default = "default_snapshots")]
    pub snapshots: usize,
}

fn default_max_iter() -> usize {
    500
}

fn default_sweep_tol() -> f64 {
    1e-6
}

fn default_snapshots() -> usize {
    10
}

/// Solver inputs built from a validated configuration.
#[derive(Debug, Clone)]
pub struct Prepared {
    pub config: ScenarioConfig,
    pub setup: Setup,
}

#[derive(Debug, Clone)]
pub enum Setup {
    Ode(OdeSetup),
    Pde(PdeSetup),
}

#[derive(Debug, Clone)]
pub struct OdeSetup {
    pub params: ModelParams,
    pub x0: HostState,
    pub control: ControlSignal,
    pub cost: CostSpec,
    pub weather: Option<Vec<WeatherSample>>,
    pub severity: Option<(SeverityModel, f64)>,
}

#[derive(Debug, Clone)]
pub struct PdeSetup {
    pub grid: SpatialGrid,
    pub diffusion: DiffusionField,
    pub theta1: f64,
    pub theta0: ScalarField,
    pub alpha: AlphaField,
    pub u: ScalarField,
    pub cost: PdeCostSpec,
    pub epsilon: Option<LinearizationPoint>,
    pub sweep: SweepOptions,
    pub snapshots: usize,
}

fn cfg_err(msg: impl Into<String>) -> CliError {
    CliError::Config(msg.into())
}

fn lib_cfg(context: &str) -> impl Fn(anthracnose::Error) -> CliError + '_ {
    move |e| CliError::Config(format!("{context}: {e}"))
}

/// Parses TOML text; `base_dir` anchors relative CSV paths.
pub fn parse(text: &str, base_dir: &Path) -> Result<ScenarioConfig, CliError> {
    let mut cfg: ScenarioConfig = toml::from_str(text).map_err(|e| cfg_err(e.to_string()))?;
    let resolve = |p: &mut PathBuf| {
        if p.is_relative() {
            *p = base_dir.join(&*p);
        }
    };
    let fix_forcing = |f: &mut ForcingConfig| {
        if let ForcingConfig::Weather { csv: Some(p), .. } = f {
            resolve(p);
        }
    };
    if let Some(m) = cfg.model.as_mut() {
        fix_forcing(&mut m.alpha);
    }
    if let Some(p) = cfg.pde.as_mut() {
        if let Some(f) = p.alpha_time.as_mut() {
            fix_forcing(f);
        }
        for f in [
            Some(&mut p.theta0),
            Some(&mut p.alpha),
            p.u.as_mut(),
            p.k1.as_mut(),
            p.k2.as_mut(),
            p.epsilon.as_mut(),
        ]
        .into_iter()
        .flatten()
        {
            if let FieldConfig::Csv { path } = f {
                resolve(path);
            }
        }
    }
    Ok(cfg)
}

pub fn load(path: &Path) -> Result<ScenarioConfig, CliError> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
    let base = path.parent().unwrap_or_else(|| Path::new("."));
    parse(&text, base).map_err(|e| match e {
        CliError::Config(m) => CliError::Config(format!("{}: {m}", path.display())),
        other => other,
    })
}

fn weather_samples(csv: &Option<PathBuf>, samples: &Option<Vec<[f64; 4]>>) -> Result<Vec<WeatherSample>, CliError> {
    match (csv, samples) {
        (Some(p), None) => anthracnose::io::read_weather_csv(p).map_err(|e| CliError::Io(e.to_string())),
        (None, Some(rows)) => Ok(rows
            .iter()
            .map(|r| WeatherSample {
                t: r[0],
                temperature: r[1],
                wetness: r[2],
                humidity: r[3],
            })
            .collect()),
        _ => Err(cfg_err("weather forcing needs exactly one of `csv` or `samples`")),
    }
}

fn build_rate(f: &ForcingConfig, name: &str) -> Result<Rate, CliError> {
    let ctx = lib_cfg(name);
    Ok(match f {
        ForcingConfig::Constant { value } => Rate::Constant(*value),
        ForcingConfig::Seasonal { a, b, c } => Rate::Seasonal(SeasonalForcing::new(*a, *b, *c).map_err(&ctx)?),
        ForcingConfig::ThetaProportional { value } => Rate::ThetaProportional(*value),
        ForcingConfig::Series { times, values } => {
            Rate::Series(TimeSeries::new(times.clone(), values.clone()).map_err(&ctx)?)
        }
        ForcingConfig::Weather {
            csv,
            samples,
            scale,
            severity,
        } => {
            let w = weather_samples(csv, samples)?;
            weather_alpha(severity, *scale, &w).map_err(&ctx)?
        }
    })
}

fn build_field(f: &FieldConfig, grid: &SpatialGrid, rng: &mut ChaCha8Rng, name: &str) -> Result<ScalarField, CliError> {
    Ok(match f {
        FieldConfig::Constant { value } => ScalarField::constant(grid, *value),
        FieldConfig::Linear { base, slope } => {
            if slope.len() != grid.dim() {
                return Err(cfg_err(format!("{name}: slope needs {} entries", grid.dim())));
            }
            ScalarField::from_fn(grid, |x| base + x.iter().zip(slope).map(|(x, s)| x * s).sum::<f64>())
        }
        FieldConfig::Sine { base, amplitude } => {
            let ext = grid.extents().to_vec();
            ScalarField::from_fn(grid, |x| {
                base + amplitude
                    * x.iter()
                        .zip(&ext)
                        .map(|(x, l)| (std::f64::consts::PI * x / l).sin())
                        .product::<f64>()
            })
        }
        FieldConfig::Random { low, high } => {
            if !(low <= high) {
                return Err(cfg_err(format!("{name}: random field needs low <= high")));
            }
            let v = (0..grid.cell_count()).map(|_| low + (high - low) * rng.random::<f64>()).collect();
            ScalarField::new(v)
        }
        FieldConfig::Csv { path } => {
            anthracnose::io::read_field_csv(path, grid).map_err(|e| CliError::Io(format!("{name}: {e}")))?
        }
    })
}

fn check_finite_positive(v: f64, name: &str) -> Result<(), CliError> {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(cfg_err(format!("`{name}` must be positive and finite, got {v}")))
    }
}

impl ScenarioConfig {
    /// Checks every constraint and builds solver inputs.
    pub fn prepare(&self) -> Result<Prepared, CliError> {
        check_finite_positive(self.t_end, "t_end")?;
        check_finite_positive(self.dt, "dt")?;
        if self.dt > self.t_end {
            return Err(cfg_err(format!("`dt` = {} exceeds `t_end` = {}", self.dt, self.t_end)));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        let setup = if self.mode.is_ode() {
            Setup::Ode(self.prepare_ode(&mut rng)?)
        } else {
            Setup::Pde(self.prepare_pde(&mut rng)?)
        };
        Ok(Prepared {
            config: self.clone(),
            setup,
        })
    }

    fn prepare_ode(&self, rng: &mut ChaCha8Rng) -> Result<OdeSetup, CliError> {
        let m = self
            .model
            .as_ref()
            .ok_or_else(|| cfg_err(format!("mode `{:?}` needs a [model] table", self.mode)))?;
        let init = self
            .initial
            .as_ref()
            .ok_or_else(|| cfg_err("ODE modes need an [initial] table"))?;
        let alpha = build_rate(&m.alpha, "model.alpha")?;
        let (weather, severity) = match (&m.alpha, self.mode) {
            (
                ForcingConfig::Weather {
                    csv,
                    samples,
                    scale,
                    severity,
                },
                _,
            ) => (Some(weather_samples(csv, samples)?), Some((*severity, *scale))),
            (_, Mode::Forecast) => return Err(cfg_err("mode `forecast` needs model.alpha.kind = \"weather\"")),
            _ => (None, None),
        };
        if !alpha.is_time_only() && self.mode != Mode::SimulateOde {
            return Err(cfg_err("optimization needs an alpha that depends on time only"));
        }
        let mut params = ModelParams::new(m.theta1, m.theta2, m.v_max, alpha);
        if let Some(b) = &m.beta {
            params.beta = build_rate(b, "model.beta")?;
        }
        if let Some(g) = &m.gamma {
            params.gamma = build_rate(g, "model.gamma")?;
        }
        if let Some(e) = &m.eta {
            params.eta = build_rate(e, "model.eta")?;
        }
        params.validate(0.0, self.t_end).map_err(lib_cfg("model"))?;
        let x0 = HostState::new(init.theta, init.v, init.v_r);
        let region = anthracnose::host::check_region(&x0, &params);
        if !region.in_s {
            return Err(cfg_err(format!(
                "initial state violates {}",
                region.violated_constraints.join(", ")
            )));
        }
        let control = match self.control.as_ref().unwrap_or(&ControlConfig::Constant { value: 0.0 }) {
            ControlConfig::Constant { value } => ControlSignal::constant(*value, 0.0, self.t_end),
            ControlConfig::Series { times, values } => ControlSignal::new(times.clone(), values.clone()),
            ControlConfig::Random { knots } => {
                let k = (*knots).max(2);
                let times = (0..k).map(|i| self.t_end * i as f64 / (k - 1) as f64).collect();
                let values = (0..k).map(|_| rng.random::<f64>()).collect();
                ControlSignal::new(times, values)
            }
        }
        .map_err(lib_cfg("control"))?;
        let c = self.cost.clone().unwrap_or_default();
        let terminal = match c.terminal {
            TerminalConfig::Zero => TerminalCost::Zero,
            TerminalConfig::Linear { c } => TerminalCost::Linear(c),
            TerminalConfig::Quadratic { c } => TerminalCost::Quadratic(c),
        };
        let cost = CostSpec::new(c.k, terminal).map_err(lib_cfg("cost"))?;
        Ok(OdeSetup {
            params,
            x0,
            control,
            cost,
            weather,
            severity,
        })
    }

    fn prepare_pde(&self, rng: &mut ChaCha8Rng) -> Result<PdeSetup, CliError> {
        let g = self
            .grid
            .as_ref()
            .ok_or_else(|| cfg_err(format!("mode `{:?}` needs a [grid] table", self.mode)))?;
        let p = self
            .pde
            .as_ref()
            .ok_or_else(|| cfg_err(format!("mode `{:?}` needs a [pde] table", self.mode)))?;
        let tensor = match &g.diffusion {
            DiffusionConfig::Isotropic { value } => TensorSpec::Isotropic(*value),
            DiffusionConfig::Diagonal { values } => TensorSpec::Diagonal(values.clone()),
            DiffusionConfig::Full { tensor } => TensorSpec::Full(*tensor),
        };
        let spec = GridSpec {
            extents: g.extents.clone(),
            resolution: g.resolution.clone(),
        };
        let (grid, diffusion) = build_grid(&spec, &tensor).map_err(lib_cfg("grid"))?;
        if !(p.theta1 > 0.0 && p.theta1 < 1.0) {
            return Err(cfg_err(format!("pde.theta1 must lie in (0, 1), got {}", p.theta1)));
        }
        let theta0 = build_field(&p.theta0, &grid, rng, "pde.theta0")?;
        if !(theta0.min() >= 0.0) {
            return Err(cfg_err("pde.theta0 must be nonnegative"));
        }
        let profile = build_field(&p.alpha, &grid, rng, "pde.alpha")?;
        let alpha = match &p.alpha_time {
            None => AlphaField::Static(profile),
            Some(f) => AlphaField::Modulated {
                profile,
                factor: build_rate(f, "pde.alpha_time")?,
            },
        };
        alpha.validate(grid.cell_count()).map_err(lib_cfg("pde.alpha"))?;
        let field_or = |f: &Option<FieldConfig>, default: f64, name: &str, rng: &mut ChaCha8Rng| match f {
            Some(f) => build_field(f, &grid, rng, name),
            None => Ok(ScalarField::constant(&grid, default)),
        };
        let u = field_or(&p.u, 0.0, "pde.u", rng)?;
        u.check_control("pde.u").map_err(lib_cfg("pde.u"))?;
        let k1 = field_or(&p.k1, 1.0, "pde.k1", rng)?;
        let k2 = field_or(&p.k2, 0.0, "pde.k2", rng)?;
        let cost = PdeCostSpec::new(k1, k2).map_err(lib_cfg("pde cost"))?;
        let epsilon = match (self.mode, &p.epsilon) {
            (Mode::RiccatiPde, None) => return Err(cfg_err("mode `riccati-pde` needs pde.epsilon")),
            (_, Some(e)) => Some(
                LinearizationPoint::new(build_field(e, &grid, rng, "pde.epsilon")?).map_err(lib_cfg("pde.epsilon"))?,
            ),
            _ => None,
        };
        if self.mode == Mode::RiccatiPde && grid.cell_count() > anthracnose::pde_control::MAX_RICCATI_CELLS {
            return Err(cfg_err(format!(
                "riccati-pde supports at most {} cells",
                anthracnose::pde_control::MAX_RICCATI_CELLS
            )));
        }
        if !(p.relax > 0.0 && p.relax <= 1.0) {
            return Err(cfg_err("pde.relax must lie in (0, 1]"));
        }
        Ok(PdeSetup {
            grid,
            diffusion,
            theta1: p.theta1,
            theta0,
            alpha,
            u,
            cost,
            epsilon,
            sweep: SweepOptions {
                relax: p.relax,
                max_iter: p.max_iter,
                tol: p.tol,
            },
            snapshots: p.snapshots.max(1),
        })
    }
}
