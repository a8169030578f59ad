//! Finite-volume discretization of the diffusive inhibition model
//!
//! ```text
//! ∂θ/∂t + £θ = α,   £θ = αθ / (1 − θ₁u) − div(A ∇θ)
//! ```
//!
//! with no-flux boundaries, on uniform interval or rectangle grids.

mod bounds;
mod evolve;
mod grid;
mod operator;
pub mod sparse;
mod spectrum;

use std::ops::Deref;

use crate::error::{Error, Result};

pub use bounds::{bound_constants, verify_bounds, BoundConstants, BoundsReport};
pub use evolve::{integrate_pde, integrate_pde_sampled, solve_equilibrium, step_implicit, ImplicitStepper};
pub use grid::{build_grid, DiffusionField, Face, GridSpec, SpatialGrid, Tensor, TensorFn, TensorSpec};
pub use operator::{assemble_diffusion, assemble_operator, OperatorMatrix, Reaction};
pub use spectrum::{principal_eigenvalue, smallest_eigenpairs, EigenEstimate, EIGEN_TOL};

/// Per-cell values on a grid.
#[derive(Debug, Clone, PartialEq)]
pub struct ScalarField {
    values: Vec<f64>,
}

impl ScalarField {
    pub fn new(values: Vec<f64>) -> Self {
        Self { values }
    }

    pub fn constant(grid: &SpatialGrid, value: f64) -> Self {
        Self::new(vec![value; grid.cell_count()])
    }

    /// Evaluates `f` at every cell center.
    pub fn from_fn(grid: &SpatialGrid, f: impl Fn(&[f64]) -> f64) -> Self {
        Self::new(grid.centers().iter().map(|x| f(x)).collect())
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.values
    }

    pub fn min(&self) -> f64 {
        self.values.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn max(&self) -> f64 {
        self.values.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn max_abs_diff(&self, other: &ScalarField) -> f64 {
        self.values.iter().zip(&other.values).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max)
    }

    pub fn check_len(&self, n: usize) -> Result<()> {
        if self.values.len() == n {
            Ok(())
        } else {
            Err(Error::GridMismatch {
                expected: n,
                actual: self.values.len(),
            })
        }
    }

    /// Controls must lie in `[0, 1]`.
    pub fn check_control(&self, name: &'static str) -> Result<()> {
        match self.values.iter().position(|u| !(0.0..=1.0).contains(u)) {
            None => Ok(()),
            Some(i) => Err(Error::param(name, format!("value {} at cell {i} outside [0, 1]", self.values[i]))),
        }
    }

    /// Volume-weighted integral over the grid.
    pub fn integral(&self, grid: &SpatialGrid) -> f64 {
        grid.cell_volume() * self.values.iter().sum::<f64>()
    }
}

impl Deref for ScalarField {
    type Target = [f64];

    fn deref(&self) -> &[f64] {
        &self.values
    }
}

impl From<Vec<f64>> for ScalarField {
    fn from(values: Vec<f64>) -> Self {
        Self::new(values)
    }
}

/// Time-sampled sequence of fields.
#[derive(Debug, Clone, PartialEq)]
pub struct FieldPath {
    pub times: Vec<f64>,
    pub fields: Vec<ScalarField>,
}

impl FieldPath {
    pub fn last(&self) -> &ScalarField {
        self.fields.last().expect("paths hold at least the initial field")
    }
}
