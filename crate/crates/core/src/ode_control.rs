//! Optimal control of the inhibition-rate equation.
//!
//! The cost is `J_T(u) = ∫₀ᵀ (k u² + θ²) dt + f(θ(T))`. The adjoint obeys
//! `dp/dt = α p / (1 − θ₁u) − 2θ` with `p(T) = f′(θ(T))`, and the maximum
//! principle yields a feedback `u(α, θ, p)` through the cubic
//! `c₃ w³ − 2k w + 2k = 0`, `c₃ = α θ₁² θ p`, `w = 1 / (1 − θ₁ u)`.

use std::fmt;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::host::{ControlSignal, ModelParams};
use crate::integrate::{hermite, rk4_step, step_count, trapezoid};

/// Terminal cost `f(θ(T))` with its derivative.
#[derive(Clone)]
pub enum TerminalCost {
    Zero,
    /// `f(θ) = c θ`
    Linear(f64),
    /// `f(θ) = c θ²`
    Quadratic(f64),
    Custom {
        f: Arc<dyn Fn(f64) -> f64 + Send + Sync>,
        f_prime: Arc<dyn Fn(f64) -> f64 + Send + Sync>,
    },
}

impl TerminalCost {
    pub fn value(&self, theta: f64) -> f64 {
        match self {
            TerminalCost::Zero => 0.0,
            TerminalCost::Linear(c) => c * theta,
            TerminalCost::Quadratic(c) => c * theta * theta,
            TerminalCost::Custom { f, .. } => f(theta),
        }
    }

    pub fn slope(&self, theta: f64) -> f64 {
        match self {
            TerminalCost::Zero => 0.0,
            TerminalCost::Linear(c) => *c,
            TerminalCost::Quadratic(c) => 2.0 * c * theta,
            TerminalCost::Custom { f_prime, .. } => f_prime(theta),
        }
    }
}

impl fmt::Debug for TerminalCost {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            TerminalCost::Zero => f.write_str("Zero"),
            TerminalCost::Linear(c) => write!(f, "Linear({c})"),
            TerminalCost::Quadratic(c) => write!(f, "Quadratic({c})"),
            TerminalCost::Custom { .. } => f.write_str("Custom(<fn>)"),
        }
    }
}

#[derive(Debug, Clone)]
pub struct CostSpec {
    /// Cost ratio of control effort.
    pub k: f64,
    pub terminal: TerminalCost,
}

impl CostSpec {
    pub fn new(k: f64, terminal: TerminalCost) -> Result<Self> {
        let c = Self { k, terminal };
        c.validate()?;
        Ok(c)
    }

    /// `k > 0` and `f′` agreeing with central differences of `f` to 1e-6.
    pub fn validate(&self) -> Result<()> {
        if !(self.k > 0.0) || !self.k.is_finite() {
            return Err(Error::param("k", format!("cost ratio must be > 0, got {}", self.k)));
        }
        let h = 1e-5;
        for i in 0..=20 {
            let theta = i as f64 / 20.0;
            let fd = (self.terminal.value(theta + h) - self.terminal.value(theta - h)) / (2.0 * h);
            let exact = self.terminal.slope(theta);
            if (fd - exact).abs() > 1e-6 * (1.0 + exact.abs()) {
                return Err(Error::param(
                    "terminal_f_prime",
                    format!("f'({theta}) = {exact} disagrees with finite difference {fd}"),
                ));
            }
        }
        Ok(())
    }
}

/// Outcome of the feedback cubic.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum FeedbackRegime {
    /// `w₃`, already projected onto `[1, min{3/2, 1/(1−θ₁)}]`.
    Interior(f64),
    /// No usable nonnegative root: the control saturates at `u = 1`.
    Bang,
}

fn cubic(c3: f64, k: f64, w: f64) -> f64 {
    c3 * w * w * w - 2.0 * k * w + 2.0 * k
}

/// Smallest nonnegative root of `c₃ w³ − 2k w + 2k = 0`, or `None` when
/// `27 c₃ > 8k` (no nonnegative root exists).
///
/// For `27 c₃ ≤ 8k` the cubic is strictly decreasing on `[0, 3/2]` with
/// `g(0) = 2k > 0 ≥ g(3/2)`, so the root is bracketed there.
pub fn smallest_nonnegative_root(c3: f64, k: f64) -> Option<f64> {
    if 27.0 * c3 > 8.0 * k {
        return None;
    }
    if c3 == 0.0 {
        return Some(1.0);
    }
    const SCAN: usize = 64;
    let upper = 1.5;
    let mut bracket = None;
    let mut prev = (0.0, cubic(c3, k, 0.0));
    for i in 1..=SCAN {
        let w = upper * i as f64 / SCAN as f64;
        let g = cubic(c3, k, w);
        if g == 0.0 {
            return Some(w);
        }
        if prev.1 > 0.0 && g < 0.0 {
            bracket = Some((prev.0, w));
            break;
        }
        prev = (w, g);
    }
    // At the threshold 27 c₃ = 8k the double root sits exactly at 3/2, where
    // roundoff may leave g(3/2) marginally positive.
    let (mut lo, mut hi) = match bracket {
        Some(b) => b,
        None => return Some(upper),
    };
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        let g = cubic(c3, k, mid);
        if g == 0.0 || mid <= lo || mid >= hi {
            return Some(mid);
        }
        if g > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Some(0.5 * (lo + hi))
}

/// Solves the feedback cubic and projects the root onto
/// `[1, min{3/2, 1/(1−θ₁)}]`.
pub fn solve_feedback_cubic(c3: f64, k: f64, theta1: f64) -> FeedbackRegime {
    match smallest_nonnegative_root(c3, k) {
        None => FeedbackRegime::Bang,
        Some(w) => {
            let upper = 1.5_f64.min(1.0 / (1.0 - theta1));
            FeedbackRegime::Interior(w.clamp(1.0, upper))
        }
    }
}

/// Maps `w = 1/(1 − θ₁u)` back to the control `u`.
pub fn control_from_w(w3: f64, theta1: f64) -> f64 {
    (w3 - 1.0) / (theta1 * w3)
}

/// Optimal feedback `u(α, θ, p)` from the maximum principle.
pub fn optimal_u_feedback(alpha_t: f64, theta: f64, p: f64, theta1: f64, k: f64) -> f64 {
    if theta1 <= 0.0 {
        return 0.0;
    }
    let c3 = alpha_t * theta1 * theta1 * theta * p;
    if 27.0 * c3 >= 8.0 * k {
        return 1.0;
    }
    match solve_feedback_cubic(c3, k, theta1) {
        FeedbackRegime::Bang => 1.0,
        FeedbackRegime::Interior(w3) => control_from_w(w3, theta1).clamp(0.0, 1.0),
    }
}

/// Adjoint right-hand side `α p / (1 − θ₁u) − 2θ`.
pub fn eval_adjoint_rhs(t: f64, p: f64, theta: f64, u_val: f64, alpha_t: f64, theta1: f64) -> Result<f64> {
    let denom = 1.0 - theta1 * u_val;
    if !(denom > 0.0) {
        return Err(Error::DivisionGuard { t, what: "1 - theta1 * u <= 0" });
    }
    Ok(alpha_t * p / denom - 2.0 * theta)
}

fn theta_rhs(t: f64, theta: f64, u_val: f64, params: &ModelParams) -> Result<f64> {
    let denom = 1.0 - params.theta1 * u_val;
    if !(denom > 0.0) {
        return Err(Error::DivisionGuard { t, what: "1 - theta1 * u <= 0" });
    }
    Ok(params.alpha.eval(t, theta) * (1.0 - theta / denom))
}

/// Sampled paths of the state-adjoint system under the optimal feedback.
#[derive(Debug, Clone, PartialEq)]
pub struct CoupledPaths {
    pub times: Vec<f64>,
    pub theta: Vec<f64>,
    pub p: Vec<f64>,
    pub u: Vec<f64>,
    pub alpha: Vec<f64>,
}

fn require_time_only_alpha(params: &ModelParams) -> Result<()> {
    if params.alpha.is_time_only() {
        Ok(())
    } else {
        Err(Error::param("alpha", "optimal control requires alpha to depend on time only"))
    }
}

/// Interior branch of the feedback, continued past the bang threshold by
/// holding `w₃ = 3/2` (the double root at the threshold).
fn interior_feedback(alpha_t: f64, theta: f64, p: f64, theta1: f64, k: f64) -> f64 {
    if theta1 <= 0.0 {
        return 0.0;
    }
    let c3 = alpha_t * theta1 * theta1 * theta * p;
    let w = smallest_nonnegative_root(c3, k).unwrap_or(1.5);
    let w3 = w.clamp(1.0, 1.5_f64.min(1.0 / (1.0 - theta1)));
    control_from_w(w3, theta1).clamp(0.0, 1.0)
}

/// Maximum number of regime switches resolved inside one grid step.
const MAX_EVENTS_PER_STEP: usize = 8;

/// Integrates `(θ, p)` forward from `(θ₀, p₀)` under the optimal feedback.
///
/// Between switches of the bang condition `27 α θ₁² θ p ≥ 8k` the regime is
/// frozen and the smooth branch is integrated with RK4; switching times are
/// located by bisection so the terminal state depends continuously on `p₀`.
pub fn integrate_coupled(
    p0: f64,
    theta0: f64,
    params: &ModelParams,
    cost: &CostSpec,
    t_end: f64,
    dt: f64,
) -> Result<CoupledPaths> {
    require_time_only_alpha(params)?;
    let (n, h) = step_count(0.0, t_end, dt)?;
    let theta1 = params.theta1;
    let k = cost.k;
    let is_bang = |t: f64, y: &[f64; 2]| 27.0 * params.alpha.eval(t, y[0]) * theta1 * theta1 * y[0] * y[1] >= 8.0 * k;
    let rhs_in = |bang: bool| {
        move |t: f64, y: &[f64; 2]| -> Result<[f64; 2]> {
            let alpha = params.alpha.eval(t, y[0]);
            let u = if bang { 1.0 } else { interior_feedback(alpha, y[0], y[1], theta1, k) };
            Ok([
                theta_rhs(t, y[0], u, params)?,
                eval_adjoint_rhs(t, y[1], y[0], u, alpha, theta1)?,
            ])
        }
    };
    let advance = |bang: bool, t: f64, y: &[f64; 2], len: f64| rk4_step(&rhs_in(bang), t, y, len);

    let mut paths = CoupledPaths {
        times: Vec::with_capacity(n + 1),
        theta: Vec::with_capacity(n + 1),
        p: Vec::with_capacity(n + 1),
        u: Vec::with_capacity(n + 1),
        alpha: Vec::with_capacity(n + 1),
    };
    let mut y = [theta0, p0];
    let mut forced: Option<bool> = None;
    for i in 0..=n {
        let t = if i == n { t_end } else { i as f64 * h };
        let alpha = params.alpha.eval(t, y[0]);
        paths.times.push(t);
        paths.theta.push(y[0]);
        paths.p.push(y[1]);
        paths.u.push(optimal_u_feedback(alpha, y[0], y[1], theta1, k));
        paths.alpha.push(alpha);
        if i == n {
            break;
        }
        let target = if i + 1 == n { t_end } else { (i + 1) as f64 * h };
        let (mut tc, mut yc) = (t, y);
        let mut events = 0;
        while tc < target {
            let mode = forced.take().unwrap_or_else(|| is_bang(tc, &yc));
            let len = target - tc;
            let y_end = advance(mode, tc, &yc, len)?;
            if is_bang(target, &y_end) == mode || events >= MAX_EVENTS_PER_STEP {
                yc = y_end;
                break;
            }
            // Locate the first switch inside (tc, target].
            let (mut lo, mut hi) = (0.0, len);
            for _ in 0..60 {
                let mid = 0.5 * (lo + hi);
                let ym = advance(mode, tc, &yc, mid)?;
                if is_bang(tc + mid, &ym) == mode {
                    lo = mid;
                } else {
                    hi = mid;
                }
            }
            yc = advance(mode, tc, &yc, hi)?;
            tc += hi;
            forced = Some(!mode);
            events += 1;
        }
        y = yc;
        if !y.iter().all(|v| v.is_finite()) {
            return Err(Error::Domain(format!("state-adjoint system diverged at t = {t}")));
        }
    }
    Ok(paths)
}

/// `∫ (k u² + θ²) dt + f(θ(T))` by the trapezoidal rule on a uniform grid.
pub fn eval_cost_jt(u: &[f64], theta: &[f64], cost: &CostSpec, dt: f64) -> Result<f64> {
    if u.len() != theta.len() {
        return Err(Error::GridMismatch {
            expected: theta.len(),
            actual: u.len(),
        });
    }
    let Some(&theta_end) = theta.last() else {
        return Ok(0.0);
    };
    let integrand: Vec<f64> = u.iter().zip(theta).map(|(u, th)| cost.k * u * u + th * th).collect();
    Ok(trapezoid(&integrand, dt) + cost.terminal.value(theta_end))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ShootingOptions {
    pub initial_guesses: (f64, f64),
    pub tol: f64,
    pub max_iter: usize,
}

impl Default for ShootingOptions {
    fn default() -> Self {
        Self {
            initial_guesses: (0.0, 1.0),
            tol: 1e-10,
            max_iter: 100,
        }
    }
}

#[derive(Debug, Clone)]
pub struct OptimalSolution {
    pub control: ControlSignal,
    pub times: Vec<f64>,
    pub theta_path: Vec<f64>,
    pub adjoint_path: Vec<f64>,
    pub alpha_path: Vec<f64>,
    pub cost: f64,
    pub p0: f64,
    /// Terminal residual `p(T) − f′(θ(T))`.
    pub residual: f64,
    /// Number of state-adjoint integrations performed.
    pub iterations: usize,
}

/// Shooting on `p₀` with the default guesses `{0, 1}` and 100 iterations.
pub fn shoot_p0(
    theta0: f64,
    params: &ModelParams,
    cost: &CostSpec,
    t_end: f64,
    dt: f64,
    tol: f64,
) -> Result<OptimalSolution> {
    shoot_p0_with(
        theta0,
        params,
        cost,
        t_end,
        dt,
        &ShootingOptions {
            tol,
            ..ShootingOptions::default()
        },
    )
}

/// Secant iteration on `r(p₀) = p(T) − f′(θ(T))`, falling back to bisection
/// once a sign change has been bracketed.
pub fn shoot_p0_with(
    theta0: f64,
    params: &ModelParams,
    cost: &CostSpec,
    t_end: f64,
    dt: f64,
    opts: &ShootingOptions,
) -> Result<OptimalSolution> {
    let residual = |p0: f64| -> Result<(f64, CoupledPaths)> {
        let paths = integrate_coupled(p0, theta0, params, cost, t_end, dt)?;
        let theta_t = *paths.theta.last().expect("non-empty");
        let p_t = *paths.p.last().expect("non-empty");
        Ok((p_t - cost.terminal.slope(theta_t), paths))
    };

    let finish = |p0: f64, r: f64, paths: CoupledPaths, iterations: usize| -> Result<OptimalSolution> {
        let h = paths.times[1] - paths.times[0];
        let cost_value = eval_cost_jt(&paths.u, &paths.theta, cost, h)?;
        Ok(OptimalSolution {
            control: ControlSignal::new(paths.times.clone(), paths.u)?,
            times: paths.times,
            theta_path: paths.theta,
            adjoint_path: paths.p,
            alpha_path: paths.alpha,
            cost: cost_value,
            p0,
            residual: r,
            iterations,
        })
    };

    let (g0, g1) = opts.initial_guesses;
    let mut iterations = 1;
    let (r0, paths0) = residual(g0)?;
    if r0.abs() < opts.tol {
        return finish(g0, r0, paths0, iterations);
    }
    let mut best = (g0, r0);
    let mut prev = (g0, r0);
    let mut history = vec![prev];
    // (point with r < 0, point with r > 0)
    let mut bracket: Option<((f64, f64), (f64, f64))> = None;
    let mut next = g1;

    while iterations < opts.max_iter {
        iterations += 1;
        let (r, paths) = residual(next)?;
        let cur = (next, r);
        if r.abs() < best.1.abs() {
            best = cur;
        }
        if r.abs() < opts.tol {
            return finish(next, r, paths, iterations);
        }
        bracket = match bracket {
            Some((neg, pos)) if (cur.0 - neg.0) * (cur.0 - pos.0) < 0.0 => {
                if r < 0.0 {
                    Some((cur, pos))
                } else {
                    Some((neg, cur))
                }
            }
            Some(b) => Some(b),
            None => history
                .iter()
                .filter(|h| h.1 * r < 0.0)
                .min_by(|a, b| (a.0 - cur.0).abs().total_cmp(&(b.0 - cur.0).abs()))
                .map(|&h| if r < 0.0 { (cur, h) } else { (h, cur) }),
        };
        history.push(cur);

        let denom = cur.1 - prev.1;
        let secant = if denom != 0.0 {
            cur.0 - cur.1 * (cur.0 - prev.0) / denom
        } else {
            f64::NAN
        };
        next = match bracket {
            Some((neg, pos)) if !(secant.is_finite() && (secant - neg.0) * (secant - pos.0) < 0.0) => {
                0.5 * (neg.0 + pos.0)
            }
            _ if secant.is_finite() => secant,
            _ => cur.0 + 2.0 * (cur.0 - prev.0),
        };
        prev = cur;
    }
    Err(Error::NoConvergence {
        iterations,
        best_residual: best.1.abs(),
        best_p0: best.0,
    })
}

/// Open-loop integration of the inhibition equation under a given control.
pub fn simulate_theta(
    params: &ModelParams,
    control: &ControlSignal,
    theta0: f64,
    t_end: f64,
    dt: f64,
) -> Result<(Vec<f64>, Vec<f64>)> {
    let (n, h) = step_count(0.0, t_end, dt)?;
    let rhs = |t: f64, y: &[f64; 1]| Ok([theta_rhs(t, y[0], control.eval(t), params)?]);
    let mut times = Vec::with_capacity(n + 1);
    let mut theta = Vec::with_capacity(n + 1);
    let mut y = [theta0];
    for i in 0..=n {
        let t = if i == n { t_end } else { i as f64 * h };
        times.push(t);
        theta.push(y[0]);
        if i < n {
            y = rk4_step(&rhs, t, &y, h)?;
        }
    }
    Ok((times, theta))
}

/// `J_T` of an open-loop control, integrated on the uniform grid of step ≤ `dt`.
pub fn cost_of_control(
    params: &ModelParams,
    cost: &CostSpec,
    control: &ControlSignal,
    theta0: f64,
    t_end: f64,
    dt: f64,
) -> Result<f64> {
    let (times, theta) = simulate_theta(params, control, theta0, t_end, dt)?;
    let u: Vec<f64> = times.iter().map(|&t| control.eval(t)).collect();
    eval_cost_jt(&u, &theta, cost, times[1] - times[0])
}

/// Integrates the adjoint backward from `p(T) = f′(θ(T))` along a sampled
/// state path; intermediate states come from Hermite interpolation.
pub fn adjoint_backward(
    params: &ModelParams,
    cost: &CostSpec,
    control: &ControlSignal,
    times: &[f64],
    theta: &[f64],
) -> Result<Vec<f64>> {
    if times.len() != theta.len() || times.len() < 2 {
        return Err(Error::GridMismatch {
            expected: times.len(),
            actual: theta.len(),
        });
    }
    require_time_only_alpha(params)?;
    let theta1 = params.theta1;
    let dtheta: Vec<f64> = times
        .iter()
        .zip(theta)
        .map(|(&t, &th)| theta_rhs(t, th, control.eval(t), params))
        .collect::<Result<_>>()?;
    let n = times.len() - 1;
    let mut p = vec![0.0; n + 1];
    p[n] = cost.terminal.slope(theta[n]);
    for i in (0..n).rev() {
        let (ta, tb) = (times[i], times[i + 1]);
        let h = tb - ta;
        let theta_at = |t: f64| {
            let s = (t - ta) / h;
            hermite(theta[i], dtheta[i], theta[i + 1], dtheta[i + 1], h, s)
        };
        let rhs = |t: f64, y: &[f64; 1]| {
            let th = theta_at(t);
            Ok([eval_adjoint_rhs(t, y[0], th, control.eval(t), params.alpha.eval(t, th), theta1)?])
        };
        p[i] = rk4_step(&rhs, tb, &[p[i + 1]], -h)?[0];
    }
    Ok(p)
}

/// Pointwise Hamiltonian gradient `∂H/∂u = 2k u − α θ₁ θ p / (1 − θ₁u)²`
/// along the open-loop trajectory of `control`.
pub fn hamiltonian_gradient(
    params: &ModelParams,
    cost: &CostSpec,
    control: &ControlSignal,
    theta0: f64,
    t_end: f64,
    dt: f64,
) -> Result<(Vec<f64>, Vec<f64>)> {
    let (times, theta) = simulate_theta(params, control, theta0, t_end, dt)?;
    let p = adjoint_backward(params, cost, control, &times, &theta)?;
    let theta1 = params.theta1;
    let grad = times
        .iter()
        .enumerate()
        .map(|(i, &t)| {
            let u = control.eval(t);
            let d = 1.0 - theta1 * u;
            2.0 * cost.k * u - params.alpha.eval(t, theta[i]) * theta1 * theta[i] * p[i] / (d * d)
        })
        .collect();
    Ok((times, grad))
}
