//! Within-host model: inhibition rate, fruit volume and rotten volume.
//!
//! ```text
//! dθ/dt   = α(t,θ) (1 − θ / (1 − θ₁ u(t)))
//! dv/dt   = β(t,θ) (1 − v θ₂ / ((1 − θ) η(t) v_max))
//! dv_r/dt = γ(t,θ) (1 − v_r / v)
//! ```
//!
//! States live in `S = (R₊ ∖ {1}) × R₊* × R₊`; the bounded region `BS`
//! additionally requires `θ < 1`, `v ≤ v_max` and `v_r ≤ v`.

use std::f64::consts::PI;
use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::integrate::{rk4_step, step_count};

/// Tolerance used by region checks on the closed faces of `S` and `BS`.
pub const REGION_TOL: f64 = 1e-9;

/// Within-host state `(θ, v, v_r)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HostState {
    pub theta: f64,
    pub v: f64,
    pub v_r: f64,
}

impl HostState {
    pub fn new(theta: f64, v: f64, v_r: f64) -> Self {
        Self { theta, v, v_r }
    }

    fn to_array(self) -> [f64; 3] {
        [self.theta, self.v, self.v_r]
    }

    fn from_array(a: [f64; 3]) -> Self {
        Self::new(a[0], a[1], a[2])
    }
}

/// Seasonal inhibition pressure `a (t − b)² (1 − cos(2πt / c))`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SeasonalForcing {
    pub a: f64,
    pub b: f64,
    pub c: f64,
}

impl SeasonalForcing {
    pub fn new(a: f64, b: f64, c: f64) -> Result<Self> {
        let f = Self { a, b, c };
        f.validate()?;
        Ok(f)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.a >= 0.0) || !self.a.is_finite() {
            return Err(Error::param("a", format!("amplitude must be >= 0, got {}", self.a)));
        }
        if !(0.0..=1.0).contains(&self.b) {
            return Err(Error::param("b", format!("phase must lie in [0,1], got {}", self.b)));
        }
        if !(self.c > 0.0 && self.c <= 1.0) {
            return Err(Error::param("c", format!("period must lie in (0,1], got {}", self.c)));
        }
        Ok(())
    }

    pub fn eval(&self, t: f64) -> f64 {
        seasonal_alpha(self, t)
    }
}

/// Evaluates the seasonal pressure at time `t`.
pub fn seasonal_alpha(f: &SeasonalForcing, t: f64) -> f64 {
    let d = t - f.b;
    f.a * d * d * (1.0 - (2.0 * PI * t / f.c).cos())
}

/// Piecewise-linear time series, held constant outside its range.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TimeSeries {
    times: Vec<f64>,
    values: Vec<f64>,
}

impl TimeSeries {
    pub fn new(times: Vec<f64>, values: Vec<f64>) -> Result<Self> {
        if times.is_empty() || times.len() != values.len() {
            return Err(Error::GridMismatch {
                expected: times.len().max(1),
                actual: values.len(),
            });
        }
        if times.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(Error::param("times", "sample times must be strictly increasing"));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::param("values", "samples must be finite"));
        }
        Ok(Self { times, values })
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn eval(&self, t: f64) -> f64 {
        let n = self.times.len();
        if t <= self.times[0] {
            return self.values[0];
        }
        if t >= self.times[n - 1] {
            return self.values[n - 1];
        }
        let i = self.times.partition_point(|&s| s <= t) - 1;
        let (t0, t1) = (self.times[i], self.times[i + 1]);
        let s = (t - t0) / (t1 - t0);
        self.values[i] + s * (self.values[i + 1] - self.values[i])
    }
}

/// A forcing function of time and inhibition rate.
#[derive(Clone)]
pub enum Rate {
    Constant(f64),
    Seasonal(SeasonalForcing),
    /// `c · θ`; the default form of γ.
    ThetaProportional(f64),
    Series(TimeSeries),
    Time(Arc<dyn Fn(f64) -> f64 + Send + Sync>),
    TimeState(Arc<dyn Fn(f64, f64) -> f64 + Send + Sync>),
}

impl Rate {
    pub fn eval(&self, t: f64, theta: f64) -> f64 {
        match self {
            Rate::Constant(c) => *c,
            Rate::Seasonal(f) => f.eval(t),
            Rate::ThetaProportional(c) => c * theta,
            Rate::Series(s) => s.eval(t),
            Rate::Time(f) => f(t),
            Rate::TimeState(f) => f(t, theta),
        }
    }

    pub fn is_time_only(&self) -> bool {
        !matches!(self, Rate::ThetaProportional(_) | Rate::TimeState(_))
    }

    pub fn is_zero(&self) -> bool {
        matches!(self, Rate::Constant(c) | Rate::ThetaProportional(c) if *c == 0.0)
    }
}

impl fmt::Debug for Rate {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Rate::Constant(c) => write!(f, "Constant({c})"),
            Rate::Seasonal(s) => write!(f, "Seasonal({s:?})"),
            Rate::ThetaProportional(c) => write!(f, "ThetaProportional({c})"),
            Rate::Series(s) => write!(f, "Series({} samples)", s.times.len()),
            Rate::Time(_) => f.write_str("Time(<fn>)"),
            Rate::TimeState(_) => f.write_str("TimeState(<fn>)"),
        }
    }
}

/// Parameters and forcings of the within-host model.
#[derive(Debug, Clone)]
pub struct ModelParams {
    pub theta1: f64,
    pub theta2: f64,
    pub v_max: f64,
    pub alpha: Rate,
    pub beta: Rate,
    pub gamma: Rate,
    /// Function of time only, with values in `(0, θ₂]`.
    pub eta: Rate,
}

impl ModelParams {
    /// Parameters with the default forcings `β ≡ 1`, `γ = θ`, `η ≡ θ₂`.
    pub fn new(theta1: f64, theta2: f64, v_max: f64, alpha: Rate) -> Self {
        Self {
            theta1,
            theta2,
            v_max,
            alpha,
            beta: Rate::Constant(1.0),
            gamma: Rate::ThetaProportional(1.0),
            eta: Rate::Constant(theta2),
        }
    }

    /// Checks scalar ranges and samples the forcing constraints on
    /// `[t0, t1] × [0, 1)`.
    pub fn validate(&self, t0: f64, t1: f64) -> Result<()> {
        if !(0.0..1.0).contains(&self.theta1) {
            return Err(Error::param("theta1", format!("must lie in [0,1), got {}", self.theta1)));
        }
        if !(self.theta2 > 0.0 && self.theta2 <= 1.0) {
            return Err(Error::param("theta2", format!("must lie in (0,1], got {}", self.theta2)));
        }
        if !(self.v_max > 0.0) || !self.v_max.is_finite() {
            return Err(Error::param("v_max", format!("must be positive, got {}", self.v_max)));
        }
        if !self.eta.is_time_only() {
            return Err(Error::param("eta", "must depend on time only"));
        }
        const NT: usize = 101;
        const NTHETA: usize = 21;
        for i in 0..NT {
            let t = t0 + (t1 - t0) * i as f64 / (NT - 1) as f64;
            let eta = self.eta.eval(t, 0.0);
            if !(eta > 0.0 && eta <= self.theta2 * (1.0 + 1e-12)) {
                return Err(Error::param(
                    "eta",
                    format!("eta({t}) = {eta} outside (0, theta2 = {}]", self.theta2),
                ));
            }
            let g0 = self.gamma.eval(t, 0.0);
            if g0 != 0.0 {
                return Err(Error::param("gamma", format!("gamma({t}, 0) = {g0}, must be 0")));
            }
            let mut prev_gamma = g0;
            for j in 0..NTHETA {
                let theta = j as f64 / NTHETA as f64;
                for (name, rate) in [("alpha", &self.alpha), ("beta", &self.beta), ("gamma", &self.gamma)] {
                    let r = rate.eval(t, theta);
                    if !(r >= 0.0) || !r.is_finite() {
                        return Err(Error::param(name, format!("{name}({t}, {theta}) = {r}, must be >= 0")));
                    }
                }
                let g = self.gamma.eval(t, theta);
                if g < prev_gamma {
                    return Err(Error::param("gamma", format!("not nondecreasing in theta at t = {t}")));
                }
                prev_gamma = g;
            }
        }
        Ok(())
    }
}

/// A control `u(t)` sampled on a time grid and linearly interpolated.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ControlSignal {
    times: Vec<f64>,
    values: Vec<f64>,
    lipschitz_bound: Option<f64>,
}

impl ControlSignal {
    pub fn new(times: Vec<f64>, values: Vec<f64>) -> Result<Self> {
        let series = TimeSeries::new(times, values)?;
        if let Some(v) = series.values.iter().find(|v| !(0.0..=1.0).contains(*v)) {
            return Err(Error::param("control", format!("value {v} outside [0,1]")));
        }
        Ok(Self {
            times: series.times,
            values: series.values,
            lipschitz_bound: None,
        })
    }

    pub fn constant(value: f64, t0: f64, t1: f64) -> Result<Self> {
        Self::new(vec![t0, t1], vec![value, value])
    }

    /// Samples `f` on `n + 1` uniform points of `[t0, t1]`.
    pub fn from_fn(t0: f64, t1: f64, n: usize, f: impl Fn(f64) -> f64) -> Result<Self> {
        let times: Vec<f64> = (0..=n).map(|i| t0 + (t1 - t0) * i as f64 / n as f64).collect();
        let values = times.iter().map(|&t| f(t)).collect();
        Self::new(times, values)
    }

    /// Attaches a Lipschitz bound `K`, checking membership in `U^K` on the grid.
    pub fn with_lipschitz(mut self, k: f64) -> Result<Self> {
        if !(k >= 0.0) {
            return Err(Error::param("lipschitz_bound", format!("must be >= 0, got {k}")));
        }
        for (t, v) in self.times.windows(2).zip(self.values.windows(2)) {
            if (v[1] - v[0]).abs() > k * (t[1] - t[0]) * (1.0 + 1e-12) + 1e-15 {
                return Err(Error::param(
                    "lipschitz_bound",
                    format!("|u({}) - u({})| exceeds K |t - s| with K = {k}", t[1], t[0]),
                ));
            }
        }
        self.lipschitz_bound = Some(k);
        Ok(self)
    }

    pub fn lipschitz_bound(&self) -> Option<f64> {
        self.lipschitz_bound
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn eval(&self, t: f64) -> f64 {
        let n = self.times.len();
        if t <= self.times[0] {
            return self.values[0];
        }
        if t >= self.times[n - 1] {
            return self.values[n - 1];
        }
        let i = self.times.partition_point(|&s| s <= t) - 1;
        let s = (t - self.times[i]) / (self.times[i + 1] - self.times[i]);
        self.values[i] + s * (self.values[i + 1] - self.values[i])
    }
}

/// A sampled solution path.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Trajectory {
    pub times: Vec<f64>,
    pub states: Vec<HostState>,
}

impl Trajectory {
    pub fn last(&self) -> &HostState {
        self.states.last().expect("trajectory is never empty")
    }

    pub fn thetas(&self) -> Vec<f64> {
        self.states.iter().map(|s| s.theta).collect()
    }
}

/// Right-hand side of the within-host system.
pub fn eval_rhs(t: f64, x: &HostState, u_val: f64, p: &ModelParams) -> Result<[f64; 3]> {
    let denom_u = 1.0 - p.theta1 * u_val;
    if !(denom_u > 0.0) {
        return Err(Error::DivisionGuard { t, what: "1 - theta1 * u <= 0" });
    }
    let one_minus_theta = 1.0 - x.theta;
    if one_minus_theta == 0.0 {
        return Err(Error::DivisionGuard { t, what: "theta reached 1" });
    }
    if !(x.v > 0.0) {
        return Err(Error::DivisionGuard { t, what: "fruit volume reached 0" });
    }
    let eta = p.eta.eval(t, x.theta);
    let alpha = p.alpha.eval(t, x.theta);
    let beta = p.beta.eval(t, x.theta);
    let gamma = p.gamma.eval(t, x.theta);
    Ok([
        alpha * (1.0 - x.theta / denom_u),
        beta * (1.0 - x.v * p.theta2 / (one_minus_theta * eta * p.v_max)),
        gamma * (1.0 - x.v_r / x.v),
    ])
}

/// Integrates the within-host system with fixed-step RK4 from `t0` to `t_end`.
pub fn integrate_ode(
    p: &ModelParams,
    u: &ControlSignal,
    x0: HostState,
    t0: f64,
    t_end: f64,
    dt: f64,
) -> Result<Trajectory> {
    let (n, h) = step_count(t0, t_end, dt)?;
    let rhs = |t: f64, y: &[f64; 3]| eval_rhs(t, &HostState::from_array(*y), u.eval(t), p);
    let mut times = Vec::with_capacity(n + 1);
    let mut states = Vec::with_capacity(n + 1);
    let mut y = x0.to_array();
    times.push(t0);
    states.push(x0);
    for i in 0..n {
        let t = t0 + i as f64 * h;
        y = rk4_step(&rhs, t, &y, h)?;
        times.push(if i + 1 == n { t_end } else { t0 + (i + 1) as f64 * h });
        states.push(HostState::from_array(y));
    }
    Ok(Trajectory { times, states })
}

/// Signed slack of one inequality; nonnegative means satisfied.
#[derive(Debug, Clone, PartialEq)]
pub struct ConstraintSlack {
    pub name: &'static str,
    pub slack: f64,
    /// Strict inequalities are satisfied only with positive slack.
    pub strict: bool,
    pub region: Region,
}

impl ConstraintSlack {
    fn satisfied(&self) -> bool {
        if self.strict {
            self.slack > 0.0
        } else {
            self.slack >= -REGION_TOL
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Region {
    S,
    BS,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RegionReport {
    pub in_s: bool,
    pub in_bs: bool,
    pub constraints: Vec<ConstraintSlack>,
    pub violated_constraints: Vec<&'static str>,
}

impl RegionReport {
    /// Closed constraints whose slack is zero within tolerance.
    pub fn active_faces(&self) -> Vec<&'static str> {
        self.constraints
            .iter()
            .filter(|c| !c.strict && c.slack.abs() <= REGION_TOL)
            .map(|c| c.name)
            .collect()
    }

    pub fn slack(&self, name: &str) -> Option<f64> {
        self.constraints.iter().find(|c| c.name == name).map(|c| c.slack)
    }
}

/// Reports each inequality defining `S` and `BS` with its signed slack.
pub fn check_region(x: &HostState, p: &ModelParams) -> RegionReport {
    let c = |name, slack, strict, region| ConstraintSlack { name, slack, strict, region };
    let constraints = vec![
        c("theta >= 0", x.theta, false, Region::S),
        c("theta != 1", (1.0 - x.theta).abs(), true, Region::S),
        c("v > 0", x.v, true, Region::S),
        c("v_r >= 0", x.v_r, false, Region::S),
        c("theta < 1", 1.0 - x.theta, true, Region::BS),
        c("v <= v_max", p.v_max - x.v, false, Region::BS),
        c("v_r <= v", x.v - x.v_r, false, Region::BS),
    ];
    let violated_constraints: Vec<_> = constraints.iter().filter(|c| !c.satisfied()).map(|c| c.name).collect();
    let in_s = constraints.iter().filter(|c| c.region == Region::S).all(ConstraintSlack::satisfied);
    let in_bs = in_s && constraints.iter().filter(|c| c.region == Region::BS).all(ConstraintSlack::satisfied);
    RegionReport {
        in_s,
        in_bs,
        constraints,
        violated_constraints,
    }
}
