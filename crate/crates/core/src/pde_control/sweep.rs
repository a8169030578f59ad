use log::debug;

use super::adjoint::{hamiltonian_pointwise_feedback, simulate_controlled_pde, solve_adjoint_pde};
use super::{eval_cost_jt3, time_grid, AlphaField, PdeCostSpec};
use crate::error::{Error, Result};
use crate::pde::{DiffusionField, ScalarField, SpatialGrid};

#[derive(Debug, Clone, PartialEq)]
pub struct SweepOptions {
    /// Weight of the new control in `u ← (1 − relax) u + relax u_new`.
    pub relax: f64,
    pub max_iter: usize,
    /// Stop once the max-norm control change drops below this.
    pub tol: f64,
}

impl Default for SweepOptions {
    fn default() -> Self {
        Self {
            relax: 0.5,
            max_iter: 500,
            tol: 1e-6,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepResult {
    pub times: Vec<f64>,
    pub u: Vec<ScalarField>,
    pub theta: Vec<ScalarField>,
    pub p: Vec<ScalarField>,
    /// Cost of the control entering each iteration, then of the final one.
    pub cost_history: Vec<f64>,
    pub iterations: usize,
    pub final_change: f64,
}

impl SweepResult {
    pub fn cost(&self) -> f64 {
        *self.cost_history.last().expect("history is never empty")
    }
}

/// Forward state, backward adjoint, relaxed pointwise update, from `u ≡ 0`.
#[allow(clippy::too_many_arguments)]
pub fn forward_backward_sweep(
    theta0: &ScalarField,
    grid: &SpatialGrid,
    a: &DiffusionField,
    alpha: &AlphaField,
    cost: &PdeCostSpec,
    theta1: f64,
    t_end: f64,
    dt: f64,
    opts: &SweepOptions,
) -> Result<SweepResult> {
    let n = grid.cell_count();
    theta0.check_len(n)?;
    alpha.validate(n)?;
    cost.validate(n)?;
    if !(opts.relax > 0.0 && opts.relax <= 1.0) {
        return Err(Error::param("relax", "must lie in (0, 1]"));
    }
    if !(theta1 > 0.0 && theta1 < 1.0) {
        return Err(Error::param("theta1", "must lie in (0, 1)"));
    }
    let (times, h) = time_grid(t_end, dt)?;
    let mut u = vec![ScalarField::constant(grid, 0.0); times.len()];
    let mut history = Vec::new();
    let mut change = f64::INFINITY;
    for it in 1..=opts.max_iter {
        let theta = simulate_controlled_pde(theta0, grid, a, alpha, &u, theta1, t_end, dt)?;
        history.push(eval_cost_jt3(&theta, &u, cost, grid, h)?);
        let p = solve_adjoint_pde(&theta, &u, alpha, cost, grid, a, theta1, t_end, dt)?;
        change = 0.0;
        for k in 0..times.len() {
            let target = hamiltonian_pointwise_feedback(&alpha.at(times[k]), &theta[k], &p[k], theta1, &cost.k1);
            let next: Vec<f64> = u[k]
                .iter()
                .zip(target.iter())
                .map(|(&old, &new)| (1.0 - opts.relax) * old + opts.relax * new)
                .collect();
            let next = ScalarField::new(next);
            change = change.max(next.max_abs_diff(&u[k]));
            u[k] = next;
        }
        debug!("sweep iteration {it}: cost {:.10e}, control change {change:.3e}", history[it - 1]);
        if change < opts.tol {
            let theta = simulate_controlled_pde(theta0, grid, a, alpha, &u, theta1, t_end, dt)?;
            history.push(eval_cost_jt3(&theta, &u, cost, grid, h)?);
            let p = solve_adjoint_pde(&theta, &u, alpha, cost, grid, a, theta1, t_end, dt)?;
            return Ok(SweepResult {
                times,
                u,
                theta,
                p,
                cost_history: history,
                iterations: it,
                final_change: change,
            });
        }
    }
    Err(Error::SweepNoConvergence {
        iterations: opts.max_iter,
        last_change: change,
        cost_history: history,
    })
}
