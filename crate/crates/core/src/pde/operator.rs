use super::grid::{DiffusionField, SpatialGrid};
use super::sparse::CsrMatrix;
use super::ScalarField;
use crate::error::{Error, Result};

/// Which reaction term enters the diagonal.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Reaction {
    /// `α / (1 − θ₁u)`, the full model operator `£`.
    Full,
    /// `α`, the linearized operator stored as `−£₁`.
    Linearized,
}

/// Assembled operator `L = R + D` with `R` diagonal reaction and `D` the
/// discrete `−div(A ∇·)` with no-flux boundaries.
#[derive(Debug, Clone, PartialEq)]
pub struct OperatorMatrix {
    matrix: CsrMatrix,
    diffusion: CsrMatrix,
    reaction: Vec<f64>,
    includes_reaction: bool,
}

impl OperatorMatrix {
    pub fn matrix(&self) -> &CsrMatrix {
        &self.matrix
    }

    pub fn diffusion(&self) -> &CsrMatrix {
        &self.diffusion
    }

    /// Diagonal reaction coefficients per cell.
    pub fn reaction(&self) -> &[f64] {
        &self.reaction
    }

    pub fn includes_reaction(&self) -> bool {
        self.includes_reaction
    }

    pub fn dim(&self) -> usize {
        self.matrix.dim()
    }

    pub fn apply(&self, x: &[f64]) -> Vec<f64> {
        self.matrix.mul_vec(x)
    }
}

fn diffusion_matrix(grid: &SpatialGrid, a: &DiffusionField) -> Result<CsrMatrix> {
    let n = grid.cell_count();
    if a.tensors().len() != n || !a.is_dim(grid.dim()) {
        return Err(Error::GridMismatch {
            expected: n,
            actual: a.tensors().len(),
        });
    }
    let mut t = Vec::with_capacity(4 * grid.faces().len() + n);
    for (f, k) in grid.faces().iter().zip(a.face_diffusivities(grid)) {
        let w = k * f.area / grid.spacing()[f.axis] / grid.cell_volume();
        t.push((f.left, f.left, w));
        t.push((f.right, f.right, w));
        t.push((f.left, f.right, -w));
        t.push((f.right, f.left, -w));
    }
    // Keep the diagonal present even for isolated cells.
    t.extend((0..n).map(|i| (i, i, 0.0)));
    Ok(CsrMatrix::from_triplets(n, t))
}

/// Pure Neumann diffusion operator.
pub fn assemble_diffusion(grid: &SpatialGrid, a: &DiffusionField) -> Result<OperatorMatrix> {
    let diffusion = diffusion_matrix(grid, a)?;
    Ok(OperatorMatrix {
        matrix: diffusion.clone(),
        reaction: vec![0.0; diffusion.dim()],
        diffusion,
        includes_reaction: false,
    })
}

/// Assembles `L` so that the semi-discrete system reads `dθ/dt + Lθ = α`.
pub fn assemble_operator(
    grid: &SpatialGrid,
    a: &DiffusionField,
    alpha: &ScalarField,
    u: &ScalarField,
    theta1: f64,
    reaction: Reaction,
) -> Result<OperatorMatrix> {
    let n = grid.cell_count();
    alpha.check_len(n)?;
    u.check_len(n)?;
    if alpha.iter().any(|&a| !(a >= 0.0) || !a.is_finite()) {
        return Err(Error::param("alpha", "must be finite and nonnegative"));
    }
    let reaction: Vec<f64> = match reaction {
        Reaction::Linearized => alpha.to_vec(),
        Reaction::Full => alpha
            .iter()
            .zip(u.iter())
            .map(|(&al, &ui)| {
                let d = 1.0 - theta1 * ui;
                if d <= 0.0 {
                    Err(Error::DivisionGuard {
                        t: 0.0,
                        what: "1 - theta1*u vanished in operator assembly",
                    })
                } else {
                    Ok(al / d)
                }
            })
            .collect::<Result<_>>()?,
    };
    let diffusion = diffusion_matrix(grid, a)?;
    let matrix = diffusion.add(&CsrMatrix::diagonal_matrix(&reaction));
    Ok(OperatorMatrix {
        matrix,
        diffusion,
        reaction,
        includes_reaction: true,
    })
}

#[cfg(test)]
mod tests {
    use super::super::grid::{build_grid, GridSpec, TensorSpec};
    use super::*;

    #[test]
    fn neumann_rows_sum_to_zero() {
        let (g, a) = build_grid(&GridSpec::rectangle(1.0, 2.0, 4, 3), &TensorSpec::Diagonal(vec![2.0, 0.5])).unwrap();
        let zero = ScalarField::constant(&g, 0.0);
        let l = assemble_operator(&g, &a, &zero, &zero, 0.6, Reaction::Full).unwrap();
        assert!(l.matrix().row_sums().iter().all(|s| s.abs() < 1e-12));
        let c = l.apply(&vec![0.7; g.cell_count()]);
        assert!(c.iter().all(|v| v.abs() < 1e-12));
    }

    #[test]
    fn reaction_diagonal() {
        let (g, a) = build_grid(&GridSpec::line(1.0, 5), &TensorSpec::Isotropic(1.0)).unwrap();
        let one = ScalarField::constant(&g, 1.0);
        let zero = ScalarField::constant(&g, 0.0);
        let l = assemble_operator(&g, &a, &one, &zero, 0.6, Reaction::Full).unwrap();
        assert_eq!(l.reaction(), &[1.0; 5]);
        let l = assemble_operator(&g, &a, &one, &one, 0.6, Reaction::Full).unwrap();
        assert!(l.reaction().iter().all(|r| (r - 2.5).abs() < 1e-14));
        let l = assemble_operator(&g, &a, &one, &one, 0.6, Reaction::Linearized).unwrap();
        assert_eq!(l.reaction(), &[1.0; 5]);
    }

    #[test]
    fn one_d_stencil_matches_second_difference() {
        let (g, a) = build_grid(&GridSpec::line(1.0, 4), &TensorSpec::Isotropic(1.0)).unwrap();
        let l = assemble_diffusion(&g, &a).unwrap();
        let m = l.matrix();
        assert_eq!(m.get(0, 0), 16.0);
        assert_eq!(m.get(1, 1), 32.0);
        assert_eq!(m.get(1, 0), -16.0);
        assert!(!l.includes_reaction());
    }

    #[test]
    fn guard_on_vanishing_denominator() {
        let (g, a) = build_grid(&GridSpec::line(1.0, 3), &TensorSpec::Isotropic(1.0)).unwrap();
        let one = ScalarField::constant(&g, 1.0);
        assert!(matches!(
            assemble_operator(&g, &a, &one, &one, 1.0, Reaction::Full),
            Err(Error::DivisionGuard { .. })
        ));
        let short = ScalarField::new(vec![1.0; 2]);
        assert!(matches!(
            assemble_operator(&g, &a, &short, &one, 0.5, Reaction::Full),
            Err(Error::GridMismatch { .. })
        ));
    }
}
