use super::operator::OperatorMatrix;
use super::sparse::{conjugate_gradient, CsrMatrix};
use super::{FieldPath, ScalarField};
use crate::error::{Error, Result};
use crate::integrate::step_count;

/// Relative residual for every linear solve in this module.
pub const SOLVE_TOL: f64 = 1e-12;

/// Implicit Euler stepper holding the factor-free system `I + dt·L`.
#[derive(Debug, Clone)]
pub struct ImplicitStepper {
    system: CsrMatrix,
    dt: f64,
}

impl ImplicitStepper {
    pub fn new(l: &OperatorMatrix, dt: f64) -> Result<Self> {
        if !(dt > 0.0) || !dt.is_finite() {
            return Err(Error::StepSize { dt, span: f64::NAN });
        }
        Ok(Self {
            system: l.matrix().shifted(1.0, dt),
            dt,
        })
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    /// Solves `(I + dt·L) θ' = θ + dt·α`.
    pub fn step(&self, theta: &ScalarField, alpha: &ScalarField) -> Result<ScalarField> {
        let n = self.system.dim();
        theta.check_len(n)?;
        alpha.check_len(n)?;
        let rhs: Vec<f64> = theta.iter().zip(alpha.iter()).map(|(t, a)| t + self.dt * a).collect();
        let out = conjugate_gradient(&self.system, &rhs, Some(theta), SOLVE_TOL)?;
        Ok(ScalarField::new(out.x))
    }

    /// Solves `(I + dt·L) x = b`.
    pub fn solve(&self, b: &[f64], guess: Option<&[f64]>) -> Result<Vec<f64>> {
        Ok(conjugate_gradient(&self.system, b, guess, SOLVE_TOL)?.x)
    }
}

pub fn step_implicit(theta: &ScalarField, l: &OperatorMatrix, alpha: &ScalarField, dt: f64) -> Result<ScalarField> {
    ImplicitStepper::new(l, dt)?.step(theta, alpha)
}

/// Full path with every step stored.
pub fn integrate_pde(
    theta0: &ScalarField,
    l: &OperatorMatrix,
    alpha: &ScalarField,
    t_end: f64,
    dt: f64,
) -> Result<FieldPath> {
    integrate_pde_sampled(theta0, l, alpha, t_end, dt, 1)
}

/// Path keeping every `stride`-th step and always the final one.
pub fn integrate_pde_sampled(
    theta0: &ScalarField,
    l: &OperatorMatrix,
    alpha: &ScalarField,
    t_end: f64,
    dt: f64,
    stride: usize,
) -> Result<FieldPath> {
    theta0.check_len(l.dim())?;
    if theta0.iter().any(|&t| !(t >= 0.0)) {
        return Err(Error::param("theta0", "must be nonnegative"));
    }
    let mut path = FieldPath {
        times: vec![0.0],
        fields: vec![theta0.clone()],
    };
    if t_end == 0.0 {
        return Ok(path);
    }
    let (steps, h) = step_count(0.0, t_end, dt)?;
    let stepper = ImplicitStepper::new(l, h)?;
    let stride = stride.max(1);
    let mut theta = theta0.clone();
    for k in 1..=steps {
        theta = stepper.step(&theta, alpha)?;
        if k % stride == 0 || k == steps {
            path.times.push(k as f64 * h);
            path.fields.push(theta.clone());
        }
    }
    Ok(path)
}

/// Solves `L θ* = α`.
pub fn solve_equilibrium(l: &OperatorMatrix, alpha: &ScalarField) -> Result<ScalarField> {
    alpha.check_len(l.dim())?;
    if alpha.iter().all(|&a| a == 0.0) || l.reaction().iter().all(|&r| r == 0.0) {
        return Err(Error::Singular("equilibrium needs a nonzero reaction term"));
    }
    let guess: Vec<f64> = alpha
        .iter()
        .zip(l.reaction())
        .map(|(&a, &r)| if r > 0.0 { a / r } else { 0.0 })
        .collect();
    let out = conjugate_gradient(l.matrix(), alpha, Some(&guess), SOLVE_TOL)?;
    Ok(ScalarField::new(out.x))
}

#[cfg(test)]
mod tests {
    use super::super::grid::{build_grid, GridSpec, TensorSpec};
    use super::super::operator::{assemble_operator, Reaction};
    use super::*;

    #[test]
    fn constant_state_is_fixed_without_source() {
        let (g, a) = build_grid(&GridSpec::rectangle(1.0, 1.0, 5, 4), &TensorSpec::Isotropic(0.3)).unwrap();
        let zero = ScalarField::constant(&g, 0.0);
        let l = assemble_operator(&g, &a, &zero, &zero, 0.6, Reaction::Full).unwrap();
        let th = ScalarField::constant(&g, 0.42);
        let next = step_implicit(&th, &l, &zero, 0.1).unwrap();
        assert!(next.max_abs_diff(&th) < 1e-13);
    }

    #[test]
    fn reduces_to_scalar_ode() {
        let (g, a) = build_grid(&GridSpec::line(1.0, 8), &TensorSpec::Isotropic(1.0)).unwrap();
        let one = ScalarField::constant(&g, 1.0);
        let zero = ScalarField::constant(&g, 0.0);
        let l = assemble_operator(&g, &a, &one, &zero, 0.6, Reaction::Full).unwrap();
        let dt = 1e-3;
        let path = integrate_pde(&zero, &l, &one, 1.0, dt).unwrap();
        let last = path.last();
        assert!(last.max() - last.min() < 1e-12);
        // implicit Euler: 1 − (1+dt)^(−n)
        let exact_scheme = 1.0 - (1.0f64 + dt).powi(-1000);
        assert!((last[0] - exact_scheme).abs() < 1e-10);
        assert!((last[0] - (1.0 - (-1.0f64).exp())).abs() < 1e-3);
    }

    #[test]
    fn zero_horizon_returns_initial() {
        let (g, a) = build_grid(&GridSpec::line(1.0, 4), &TensorSpec::Isotropic(1.0)).unwrap();
        let one = ScalarField::constant(&g, 1.0);
        let l = assemble_operator(&g, &a, &one, &one, 0.6, Reaction::Full).unwrap();
        let p = integrate_pde(&one, &l, &one, 0.0, 0.1).unwrap();
        assert_eq!(p.fields.len(), 1);
        assert!(step_implicit(&one, &l, &one, 0.0).is_err());
    }

    #[test]
    fn equilibria() {
        let (g, a) = build_grid(&GridSpec::rectangle(1.0, 1.0, 6, 6), &TensorSpec::Isotropic(0.5)).unwrap();
        let alpha = ScalarField::constant(&g, 2.0);
        for (u, expect) in [(0.0, 1.0), (1.0, 0.4), (0.5, 0.7)] {
            let uf = ScalarField::constant(&g, u);
            let l = assemble_operator(&g, &a, &alpha, &uf, 0.6, Reaction::Full).unwrap();
            let eq = solve_equilibrium(&l, &alpha).unwrap();
            assert!(eq.iter().all(|v| (v - expect).abs() < 1e-12), "u = {u}");
        }
        let zero = ScalarField::constant(&g, 0.0);
        let l = assemble_operator(&g, &a, &zero, &zero, 0.6, Reaction::Full).unwrap();
        assert!(matches!(solve_equilibrium(&l, &zero), Err(Error::Singular(_))));
    }
}
