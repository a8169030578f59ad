use super::{time_grid, AlphaField, PdeCostSpec};
use crate::error::{Error, Result};
use crate::pde::{assemble_operator, DiffusionField, ImplicitStepper, Reaction, ScalarField, SpatialGrid};

/// Implicit Euler on the full model; the step into `t_{n+1}` uses
/// `u_{n+1}` and `α(t_{n+1})`.
#[allow(clippy::too_many_arguments)]
pub fn simulate_controlled_pde(
    theta0: &ScalarField,
    grid: &SpatialGrid,
    a: &DiffusionField,
    alpha: &AlphaField,
    u: &[ScalarField],
    theta1: f64,
    t_end: f64,
    dt: f64,
) -> Result<Vec<ScalarField>> {
    let (times, h) = time_grid(t_end, dt)?;
    if u.len() != times.len() {
        return Err(Error::GridMismatch {
            expected: times.len(),
            actual: u.len(),
        });
    }
    let mut theta = Vec::with_capacity(times.len());
    theta.push(theta0.clone());
    for (k, &t) in times.iter().enumerate().skip(1) {
        let al = alpha.at(t);
        let l = assemble_operator(grid, a, &al, &u[k], theta1, Reaction::Full)?;
        let next = ImplicitStepper::new(&l, h)?.step(&theta[k - 1], &al)?;
        theta.push(next);
    }
    Ok(theta)
}

/// Exact discrete adjoint of [`simulate_controlled_pde`] with the
/// trapezoidal cost:
///
/// ```text
/// (I + h L_N) p_N = 2 k₂ θ_N + h θ_N
/// (I + h L_n) p_n = p_{n+1} + 2 h θ_n
/// ```
///
/// It is consistent with `∂p/∂t = £p − 2θ`, `p(T) = 2k₂θ(T)`.
#[allow(clippy::too_many_arguments)]
pub fn solve_adjoint_pde(
    theta: &[ScalarField],
    u: &[ScalarField],
    alpha: &AlphaField,
    cost: &PdeCostSpec,
    grid: &SpatialGrid,
    a: &DiffusionField,
    theta1: f64,
    t_end: f64,
    dt: f64,
) -> Result<Vec<ScalarField>> {
    let (times, h) = time_grid(t_end, dt)?;
    let steps = times.len();
    if theta.len() != steps || u.len() != steps {
        return Err(Error::GridMismatch {
            expected: steps,
            actual: theta.len().min(u.len()),
        });
    }
    let n = grid.cell_count();
    cost.validate(n)?;
    let mut p = vec![ScalarField::new(Vec::new()); steps];
    for k in (0..steps).rev() {
        let al = alpha.at(times[k]);
        let l = assemble_operator(grid, a, &al, &u[k], theta1, Reaction::Full)?;
        let stepper = ImplicitStepper::new(&l, h)?;
        let th = &theta[k];
        let rhs: Vec<f64> = if k + 1 == steps {
            (0..n).map(|i| 2.0 * cost.k2[i] * th[i] + h * th[i]).collect()
        } else {
            (0..n).map(|i| p[k + 1][i] + 2.0 * h * th[i]).collect()
        };
        p[k] = stepper.solve(&rhs, None)?.into();
    }
    Ok(p)
}

/// Gradient of the discrete cost with respect to every `u_n` value:
/// `V h [2 w_n k₁ u − p α θ₁ θ / (1 − θ₁u)²]`, without the dynamic term at
/// `n = 0` where `u_0` does not enter the state.
#[allow(clippy::too_many_arguments)]
pub fn control_gradient(
    theta: &[ScalarField],
    u: &[ScalarField],
    p: &[ScalarField],
    alpha: &AlphaField,
    cost: &PdeCostSpec,
    grid: &SpatialGrid,
    theta1: f64,
    t_end: f64,
    dt: f64,
) -> Result<Vec<ScalarField>> {
    let (times, h) = time_grid(t_end, dt)?;
    let last = times.len() - 1;
    let vol = grid.cell_volume();
    let mut grad = Vec::with_capacity(times.len());
    for k in 0..=last {
        let al = alpha.at(times[k]);
        let w = if k == 0 || k == last { 0.5 } else { 1.0 };
        let g: Vec<f64> = (0..grid.cell_count())
            .map(|i| {
                let running = 2.0 * w * cost.k1[i] * u[k][i];
                let dynamic = if k == 0 {
                    0.0
                } else {
                    let d = 1.0 - theta1 * u[k][i];
                    p[k][i] * al[i] * theta1 * theta[k][i] / (d * d)
                };
                vol * h * (running - dynamic)
            })
            .collect();
        grad.push(g.into());
    }
    Ok(grad)
}

/// Smallest nonnegative root of `2k₁u(1 − θ₁u)² = αθ₁θp` projected on
/// `[0, min{1/(3θ₁), 1}]`; `u = 1` where `27αθ₁²θp ≥ 8k₁`.
pub fn pointwise_feedback_value(alpha: f64, theta: f64, p: f64, theta1: f64, k1: f64) -> f64 {
    let c = alpha * theta1 * theta * p;
    if !(c > 0.0) || theta1 <= 0.0 {
        return 0.0;
    }
    if 27.0 * theta1 * c >= 8.0 * k1 {
        return 1.0;
    }
    let g = |u: f64| 2.0 * k1 * u * (1.0 - theta1 * u).powi(2) - c;
    let peak = 1.0 / (3.0 * theta1);
    let upper = peak.min(1.0);
    if g(upper) <= 0.0 {
        return upper;
    }
    // g is increasing on [0, 1/(3θ₁)] with g(0) < 0 < g(upper).
    let (mut lo, mut hi) = (0.0f64, upper);
    loop {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if g(mid) < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    if g(lo).abs() <= g(hi).abs() {
        lo
    } else {
        hi
    }
}

pub fn hamiltonian_pointwise_feedback(
    alpha: &ScalarField,
    theta: &ScalarField,
    p: &ScalarField,
    theta1: f64,
    k1: &ScalarField,
) -> ScalarField {
    (0..theta.len())
        .map(|i| pointwise_feedback_value(alpha[i], theta[i], p[i], theta1, k1[i]))
        .collect::<Vec<_>>()
        .into()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ode_control::optimal_u_feedback;
    use crate::pde::{build_grid, GridSpec, TensorSpec};

    #[test]
    fn feedback_examples() {
        assert_eq!(pointwise_feedback_value(1.0, 0.5, 0.0, 0.6, 1.0), 0.0);
        assert_eq!(pointwise_feedback_value(1.0, 0.5, -3.0, 0.6, 1.0), 0.0);
        assert_eq!(pointwise_feedback_value(10.0, 1.0, 10.0, 0.6, 1.0), 1.0);
        // threshold 27c = 8k₁/θ₁ gives u = 1; just below, the root nears 5/9
        let k1 = 1.0;
        let th1 = 0.6;
        let c_star = 8.0 * k1 / (27.0 * th1);
        assert_eq!(pointwise_feedback_value(1.0, 1.0, c_star / th1 * (1.0 + 1e-12), th1, k1), 1.0);
        let below = pointwise_feedback_value(1.0, 1.0, c_star / th1 * (1.0 - 1e-12), th1, k1);
        assert!((below - 5.0 / 9.0).abs() < 1e-5);
        // dense scan oracle for the root
        let c = 0.5 * c_star;
        let u = pointwise_feedback_value(1.0, 1.0, c / th1, th1, k1);
        let scan = (0..=200_000)
            .map(|i| i as f64 * (5.0 / 9.0) / 200_000.0)
            .find(|&v| 2.0 * k1 * v * (1.0 - th1 * v).powi(2) >= c)
            .unwrap();
        assert!((u - scan).abs() < 1e-5);
        assert!((2.0 * k1 * u * (1.0 - th1 * u).powi(2) - c).abs() < 1e-12);
    }

    #[test]
    fn agrees_with_ode_feedback() {
        for &(al, th, p, th1, k) in &[
            (1.0, 0.5, 0.7, 0.6, 1.0),
            (3.0, 0.2, 0.4, 0.6, 1.0),
            (2.0, 0.9, 2.0, 0.3, 0.5),
            (0.5, 0.4, 0.1, 0.9, 0.2),
            (4.0, 0.5, 0.73, 0.6, 1.0),
        ] {
            let a = pointwise_feedback_value(al, th, p, th1, k);
            let b = optimal_u_feedback(al, th, p, th1, k);
            assert!((a - b).abs() < 1e-9, "{a} vs {b}");
        }
    }

    #[test]
    fn zero_state_gives_zero_adjoint() {
        let (g, a) = build_grid(&GridSpec::line(1.0, 4), &TensorSpec::Isotropic(1.0)).unwrap();
        let zero = ScalarField::constant(&g, 0.0);
        let alpha = AlphaField::Static(ScalarField::constant(&g, 1.0));
        let cost = PdeCostSpec::uniform(&g, 1.0, 0.0).unwrap();
        let th = vec![zero.clone(); 11];
        let p = solve_adjoint_pde(&th, &th, &alpha, &cost, &g, &a, 0.6, 1.0, 0.1).unwrap();
        assert!(p.iter().all(|f| f.iter().all(|&v| v == 0.0)));
    }
}
