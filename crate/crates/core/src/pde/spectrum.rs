use super::operator::OperatorMatrix;
use super::evolve::SOLVE_TOL;
use super::sparse::{conjugate_gradient, CsrMatrix};
use crate::error::{Error, Result};

/// Relative tolerance on successive eigenvalue estimates.
pub const EIGEN_TOL: f64 = 1e-8;

const MAX_ITER: usize = 500;

#[derive(Debug, Clone, PartialEq)]
pub struct EigenEstimate {
    pub value: f64,
    /// Unit-norm eigenvector.
    pub vector: Vec<f64>,
    pub iterations: usize,
    /// `‖L x − λ x‖₂`.
    pub residual: f64,
}

impl EigenEstimate {
    /// The equilibrium is asymptotically stable iff the smallest eigenvalue
    /// of `L` is positive.
    pub fn asymptotically_stable(&self) -> bool {
        self.value > 0.0
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn normalize(x: &mut [f64]) {
    let n = dot(x, x).sqrt();
    x.iter_mut().for_each(|v| *v /= n);
}

fn deflate(x: &mut [f64], basis: &[Vec<f64>]) {
    for b in basis {
        let c = dot(x, b);
        x.iter_mut().zip(b).for_each(|(v, bi)| *v -= c * bi);
    }
}

/// Smallest eigenvalue of symmetric `L` by shifted inverse iteration.
pub fn principal_eigenvalue(l: &OperatorMatrix) -> Result<EigenEstimate> {
    Ok(smallest_eigenpairs(l, 1)?.remove(0))
}

/// The `k` smallest eigenpairs of symmetric positive semidefinite `L`,
/// found one at a time with deflation against earlier vectors.
pub fn smallest_eigenpairs(l: &OperatorMatrix, k: usize) -> Result<Vec<EigenEstimate>> {
    let a = l.matrix();
    let n = a.dim();
    if !a.is_symmetric(1e-12) {
        return Err(Error::param("operator", "eigenvalue iteration requires a symmetric operator"));
    }
    if k == 0 || k > n {
        return Err(Error::param("k", format!("must be in 1..={n}")));
    }
    let scale = a.diagonal().into_iter().fold(0.0, f64::max).max(f64::MIN_POSITIVE);
    let sigma = 1e-4 * scale;
    let shifted = a.shifted(sigma, 1.0);
    let mut found: Vec<EigenEstimate> = Vec::with_capacity(k);
    for j in 0..k {
        let basis: Vec<Vec<f64>> = found.iter().map(|e| e.vector.clone()).collect();
        found.push(inverse_iteration(a, &shifted, &basis, j, scale)?);
    }
    Ok(found)
}

fn inverse_iteration(
    a: &CsrMatrix,
    shifted: &CsrMatrix,
    basis: &[Vec<f64>],
    seed: usize,
    scale: f64,
) -> Result<EigenEstimate> {
    let n = a.dim();
    let mut x: Vec<f64> = (0..n)
        .map(|i| 1.0 + 0.5 * ((i as f64 + 1.0) * (1.618 + seed as f64 * 0.7)).sin())
        .collect();
    deflate(&mut x, basis);
    normalize(&mut x);
    let mut prev = f64::INFINITY;
    for it in 1..=MAX_ITER {
        let mut y = conjugate_gradient(shifted, &x, Some(&x), SOLVE_TOL)?.x;
        deflate(&mut y, basis);
        normalize(&mut y);
        x = y;
        let ax = a.mul_vec(&x);
        let lambda = dot(&x, &ax);
        let residual = ax.iter().zip(&x).map(|(v, xi)| (v - lambda * xi).powi(2)).sum::<f64>().sqrt();
        if (lambda - prev).abs() <= EIGEN_TOL * lambda.abs().max(1.0) && residual <= 1e-6 * scale.max(1.0) {
            return Ok(EigenEstimate {
                value: lambda,
                vector: x,
                iterations: it,
                residual,
            });
        }
        prev = lambda;
    }
    Err(Error::EigenNoConvergence(MAX_ITER))
}

#[cfg(test)]
mod tests {
    use super::super::grid::{build_grid, GridSpec, TensorSpec};
    use super::super::operator::{assemble_diffusion, assemble_operator, Reaction};
    use super::super::ScalarField;
    use super::*;

    #[test]
    fn neumann_kernel_is_constant_mode() {
        let (g, a) = build_grid(&GridSpec::line(1.0, 16), &TensorSpec::Isotropic(1.0)).unwrap();
        let e = principal_eigenvalue(&assemble_diffusion(&g, &a).unwrap()).unwrap();
        assert!(e.value.abs() < 1e-10);
        assert!(!e.asymptotically_stable() || e.value > 0.0);
    }

    #[test]
    fn constant_reaction_shifts_spectrum() {
        let (g, a) = build_grid(&GridSpec::rectangle(1.0, 1.0, 6, 5), &TensorSpec::Isotropic(1.0)).unwrap();
        let alpha = ScalarField::constant(&g, 1.2);
        let u = ScalarField::constant(&g, 0.5);
        let l = assemble_operator(&g, &a, &alpha, &u, 0.6, Reaction::Full).unwrap();
        let e = principal_eigenvalue(&l).unwrap();
        assert!((e.value - 1.2 / 0.7).abs() < 1e-10);
        assert!(e.asymptotically_stable());
    }

    #[test]
    fn second_eigenvalue_matches_dense_and_continuum() {
        let n = 32;
        let (g, a) = build_grid(&GridSpec::line(1.0, n), &TensorSpec::Isotropic(1.0)).unwrap();
        let l = assemble_diffusion(&g, &a).unwrap();
        let pairs = smallest_eigenpairs(&l, 2).unwrap();
        let mut dense: Vec<f64> = l.matrix().to_dense().symmetric_eigen().eigenvalues.iter().copied().collect();
        dense.sort_by(f64::total_cmp);
        assert!((pairs[1].value - dense[1]).abs() < 1e-8 * dense[1]);
        let pi2 = std::f64::consts::PI.powi(2);
        assert!((pairs[1].value - pi2).abs() / pi2 < 1e-2);
    }
}
