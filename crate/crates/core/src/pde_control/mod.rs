//! Optimal control of the diffusive model: quadratic cost, linearization at
//! `(θ, u) = (ε, 0)`, matrix Riccati feedback, discrete adjoint, pointwise
//! Hamiltonian feedback and a forward-backward sweep.

mod adjoint;
mod riccati;
mod sweep;

use crate::error::{Error, Result};
use crate::host::Rate;
use crate::integrate::step_count;
use crate::pde::{assemble_operator, DiffusionField, OperatorMatrix, Reaction, ScalarField, SpatialGrid};

pub use adjoint::{
    control_gradient, hamiltonian_pointwise_feedback, pointwise_feedback_value, simulate_controlled_pde,
    solve_adjoint_pde,
};
pub use riccati::{
    integrate_riccati, riccati_feedback, simulate_linearized_closed_loop, simulate_riccati_pde, FeedbackEval,
    LinearClosedLoop, RiccatiDiagnostics, RiccatiPath, RiccatiPdeRun, RiccatiState, MAX_RICCATI_CELLS,
};
pub use sweep::{forward_backward_sweep, SweepOptions, SweepResult};

/// Weights of `J = ∫∫ (θ² + k₁u²) dx dt + ∫ k₂ θ(T)² dx`.
#[derive(Debug, Clone, PartialEq)]
pub struct PdeCostSpec {
    pub k1: ScalarField,
    pub k2: ScalarField,
}

impl PdeCostSpec {
    pub fn new(k1: ScalarField, k2: ScalarField) -> Result<Self> {
        let c = Self { k1, k2 };
        c.validate(c.k1.len())?;
        Ok(c)
    }

    pub fn uniform(grid: &SpatialGrid, k1: f64, k2: f64) -> Result<Self> {
        Self::new(ScalarField::constant(grid, k1), ScalarField::constant(grid, k2))
    }

    pub fn validate(&self, n: usize) -> Result<()> {
        self.k1.check_len(n)?;
        self.k2.check_len(n)?;
        if !(self.k1.min() > 0.0) || !self.k1.max().is_finite() {
            return Err(Error::param("k1", "must be positive and bounded"));
        }
        if !(self.k2.min() >= 0.0) || !self.k2.max().is_finite() {
            return Err(Error::param("k2", "must be nonnegative and finite"));
        }
        Ok(())
    }
}

/// Linearization offset `ε > 0` per cell; the control offset is 0.
#[derive(Debug, Clone, PartialEq)]
pub struct LinearizationPoint {
    pub epsilon: ScalarField,
}

impl LinearizationPoint {
    pub fn new(epsilon: ScalarField) -> Result<Self> {
        if !(epsilon.min() > 0.0) {
            return Err(Error::param("epsilon", "must be positive in every cell"));
        }
        Ok(Self { epsilon })
    }
}

/// Linearized dynamics `θ' = £₁θ − B v` with `v = u − 1/(εθ₁)`.
///
/// `l1` stores `−£₁ = αI − div(A∇·)` so that it is positive semidefinite
/// like every other assembled operator.
#[derive(Debug, Clone, PartialEq)]
pub struct Linearization {
    pub l1: OperatorMatrix,
    /// Diagonal of `B = αεθ₁`.
    pub b: Vec<f64>,
    pub theta1: f64,
    pub epsilon: ScalarField,
}

impl Linearization {
    /// `1/(εθ₁)` per cell.
    pub fn control_offset(&self) -> Vec<f64> {
        self.epsilon.iter().map(|e| 1.0 / (e * self.theta1)).collect()
    }
}

pub fn linearize(
    alpha: &ScalarField,
    eps: &LinearizationPoint,
    theta1: f64,
    grid: &SpatialGrid,
    a: &DiffusionField,
) -> Result<Linearization> {
    let n = grid.cell_count();
    eps.epsilon.check_len(n)?;
    if !(theta1 > 0.0 && theta1 < 1.0) {
        return Err(Error::param("theta1", "must lie in (0, 1)"));
    }
    let zero = ScalarField::constant(grid, 0.0);
    let l1 = assemble_operator(grid, a, alpha, &zero, theta1, Reaction::Linearized)?;
    let b = alpha.iter().zip(eps.epsilon.iter()).map(|(al, e)| al * e * theta1).collect();
    Ok(Linearization {
        l1,
        b,
        theta1,
        epsilon: eps.epsilon.clone(),
    })
}

/// Inhibition pressure over space and time.
#[derive(Debug, Clone)]
pub enum AlphaField {
    Static(ScalarField),
    /// `profile(x) · factor(t)`
    Modulated { profile: ScalarField, factor: Rate },
}

impl AlphaField {
    pub fn at(&self, t: f64) -> ScalarField {
        match self {
            AlphaField::Static(f) => f.clone(),
            AlphaField::Modulated { profile, factor } => {
                let s = factor.eval(t, 0.0);
                ScalarField::new(profile.iter().map(|p| p * s).collect())
            }
        }
    }

    pub fn validate(&self, n: usize) -> Result<()> {
        let profile = match self {
            AlphaField::Static(f) => f,
            AlphaField::Modulated { profile, factor } => {
                if !factor.is_time_only() {
                    return Err(Error::param("alpha", "time factor must not depend on the state"));
                }
                profile
            }
        };
        profile.check_len(n)?;
        if !(profile.min() >= 0.0) {
            return Err(Error::param("alpha", "profile must be nonnegative"));
        }
        Ok(())
    }
}

/// Uniform time grid `t_n = n·h`, `n = 0..=steps`.
pub(crate) fn time_grid(t_end: f64, dt: f64) -> Result<(Vec<f64>, f64)> {
    let (steps, h) = step_count(0.0, t_end, dt)?;
    Ok(((0..=steps).map(|n| n as f64 * h).collect(), h))
}

/// Trapezoid in time and midpoint in space.
pub fn eval_cost_jt3(
    theta: &[ScalarField],
    u: &[ScalarField],
    cost: &PdeCostSpec,
    grid: &SpatialGrid,
    dt: f64,
) -> Result<f64> {
    if theta.len() != u.len() {
        return Err(Error::GridMismatch {
            expected: theta.len(),
            actual: u.len(),
        });
    }
    let n = grid.cell_count();
    cost.validate(n)?;
    let last = theta.len().saturating_sub(1);
    let mut running = 0.0;
    for (k, (th, uk)) in theta.iter().zip(u).enumerate() {
        th.check_len(n)?;
        uk.check_len(n)?;
        let w = if k == 0 || k == last { 0.5 } else { 1.0 };
        let density: f64 = (0..n).map(|i| th[i] * th[i] + cost.k1[i] * uk[i] * uk[i]).sum();
        if last > 0 {
            running += w * density;
        }
    }
    let terminal: f64 = match theta.last() {
        Some(th) => (0..n).map(|i| cost.k2[i] * th[i] * th[i]).sum(),
        None => 0.0,
    };
    Ok(grid.cell_volume() * (dt * running + terminal))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::pde::{build_grid, GridSpec, TensorSpec};

    fn unit_line(n: usize) -> (SpatialGrid, DiffusionField) {
        build_grid(&GridSpec::line(1.0, n), &TensorSpec::Isotropic(1.0)).unwrap()
    }

    #[test]
    fn cost_examples() {
        let (g, _) = unit_line(5);
        let c = PdeCostSpec::uniform(&g, 1.0, 0.0).unwrap();
        let zeros = vec![ScalarField::constant(&g, 0.0); 11];
        assert_eq!(eval_cost_jt3(&zeros, &zeros, &c, &g, 0.1).unwrap(), 0.0);
        let ones = vec![ScalarField::constant(&g, 1.0); 11];
        assert!((eval_cost_jt3(&ones, &zeros, &c, &g, 0.1).unwrap() - 1.0).abs() < 1e-14);
        let c2 = PdeCostSpec::uniform(&g, 1.0, 3.0).unwrap();
        assert!((eval_cost_jt3(&ones, &zeros, &c2, &g, 0.1).unwrap() - 4.0).abs() < 1e-14);
        assert!(eval_cost_jt3(&ones, &zeros[..3], &c, &g, 0.1).is_err());
        assert!(PdeCostSpec::uniform(&g, 0.0, 1.0).is_err());
        assert!(PdeCostSpec::uniform(&g, 1.0, -1.0).is_err());
    }

    #[test]
    fn linearize_examples() {
        let (g, a) = unit_line(4);
        let eps = LinearizationPoint::new(ScalarField::constant(&g, 0.5)).unwrap();
        let zero = ScalarField::constant(&g, 0.0);
        let lin = linearize(&zero, &eps, 0.6, &g, &a).unwrap();
        assert!(lin.b.iter().all(|&b| b == 0.0));
        assert!(lin.l1.matrix().row_sums().iter().all(|s| s.abs() < 1e-12));

        let (g1, a1) = unit_line(1);
        let alpha = ScalarField::constant(&g1, 2.0);
        let eps1 = LinearizationPoint::new(ScalarField::constant(&g1, 0.5)).unwrap();
        let lin = linearize(&alpha, &eps1, 0.6, &g1, &a1).unwrap();
        // −£₁ = α on one cell
        assert_eq!(lin.l1.matrix().get(0, 0), 2.0);
        assert!((lin.b[0] - 0.6).abs() < 1e-15);

        let tiny = LinearizationPoint::new(ScalarField::constant(&g1, 1e-12)).unwrap();
        assert!(linearize(&alpha, &tiny, 0.6, &g1, &a1).unwrap().b[0] < 1e-11);
        assert!(LinearizationPoint::new(ScalarField::constant(&g1, 0.0)).is_err());
    }

    #[test]
    fn alpha_field_modulation() {
        let (g, _) = unit_line(3);
        let f = AlphaField::Modulated {
            profile: ScalarField::new(vec![1.0, 2.0, 3.0]),
            factor: Rate::Time(std::sync::Arc::new(|t| 2.0 * t)),
        };
        assert_eq!(f.at(0.5).values(), &[1.0, 2.0, 3.0]);
        assert!(f.validate(g.cell_count()).is_ok());
        let bad = AlphaField::Modulated {
            profile: ScalarField::constant(&g, 1.0),
            factor: Rate::ThetaProportional(1.0),
        };
        assert!(bad.validate(3).is_err());
    }
}
