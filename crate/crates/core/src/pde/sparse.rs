//! Compressed sparse row storage and a Jacobi-preconditioned conjugate
//! gradient solver for the symmetric systems produced by the finite-volume
//! assembly.

use nalgebra::DMatrix;

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct CsrMatrix {
    n: usize,
    row_ptr: Vec<usize>,
    col_idx: Vec<usize>,
    values: Vec<f64>,
}

impl CsrMatrix {
    /// Builds an `n × n` matrix from `(row, col, value)` triplets; duplicate
    /// entries are summed.
    pub fn from_triplets(n: usize, mut triplets: Vec<(usize, usize, f64)>) -> Self {
        triplets.sort_by_key(|t| (t.0, t.1));
        let mut row_ptr = vec![0; n + 1];
        let mut col_idx = Vec::with_capacity(triplets.len());
        let mut values: Vec<f64> = Vec::with_capacity(triplets.len());
        let mut last: Option<(usize, usize)> = None;
        for (r, c, v) in triplets {
            assert!(r < n && c < n, "triplet ({r}, {c}) outside {n}x{n}");
            if last == Some((r, c)) {
                *values.last_mut().expect("entry exists") += v;
            } else {
                col_idx.push(c);
                values.push(v);
                row_ptr[r + 1] += 1;
                last = Some((r, c));
            }
        }
        for i in 0..n {
            row_ptr[i + 1] += row_ptr[i];
        }
        Self {
            n,
            row_ptr,
            col_idx,
            values,
        }
    }

    pub fn diagonal_matrix(diag: &[f64]) -> Self {
        Self::from_triplets(diag.len(), diag.iter().enumerate().map(|(i, &d)| (i, i, d)).collect())
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    /// Iterates over `(col, value)` of row `i`.
    pub fn row(&self, i: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        let range = self.row_ptr[i]..self.row_ptr[i + 1];
        self.col_idx[range.clone()].iter().copied().zip(self.values[range].iter().copied())
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.row(i).find(|&(c, _)| c == j).map_or(0.0, |(_, v)| v)
    }

    pub fn diagonal(&self) -> Vec<f64> {
        (0..self.n).map(|i| self.get(i, i)).collect()
    }

    pub fn mul_vec(&self, x: &[f64]) -> Vec<f64> {
        (0..self.n).map(|i| self.row(i).map(|(c, v)| v * x[c]).sum()).collect()
    }

    pub fn row_sums(&self) -> Vec<f64> {
        (0..self.n).map(|i| self.row(i).map(|(_, v)| v).sum()).collect()
    }

    /// `s·I + c·self`
    pub fn shifted(&self, s: f64, c: f64) -> Self {
        let mut t: Vec<_> = (0..self.n)
            .flat_map(|i| self.row(i).map(move |(j, v)| (i, j, c * v)))
            .collect();
        t.extend((0..self.n).map(|i| (i, i, s)));
        Self::from_triplets(self.n, t)
    }

    pub fn add(&self, other: &CsrMatrix) -> Self {
        assert_eq!(self.n, other.n);
        let mut t: Vec<_> = (0..self.n).flat_map(|i| self.row(i).map(move |(j, v)| (i, j, v))).collect();
        t.extend((0..other.n).flat_map(|i| other.row(i).map(move |(j, v)| (i, j, v))));
        Self::from_triplets(self.n, t)
    }

    pub fn is_symmetric(&self, tol: f64) -> bool {
        (0..self.n).all(|i| self.row(i).all(|(j, v)| (v - self.get(j, i)).abs() <= tol * (1.0 + v.abs())))
    }

    pub fn to_dense(&self) -> DMatrix<f64> {
        let mut m = DMatrix::zeros(self.n, self.n);
        for i in 0..self.n {
            for (j, v) in self.row(i) {
                m[(i, j)] += v;
            }
        }
        m
    }

    /// Off-diagonals nonpositive and diagonal positive.
    pub fn has_m_matrix_sign_pattern(&self) -> bool {
        (0..self.n).all(|i| self.row(i).all(|(j, v)| if i == j { v > 0.0 } else { v <= 0.0 }))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CgOutcome {
    pub x: Vec<f64>,
    pub iterations: usize,
    /// Final `‖b − A x‖₂`.
    pub residual: f64,
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Solves `A x = b` for symmetric positive definite `A` until the normwise
/// backward error meets `‖b − A x‖₂ ≤ tol · max(‖A‖_∞ ‖x‖₂ + ‖b‖₂, 1)`.
pub fn conjugate_gradient(a: &CsrMatrix, b: &[f64], x0: Option<&[f64]>, tol: f64) -> Result<CgOutcome> {
    let n = a.dim();
    if b.len() != n {
        return Err(Error::GridMismatch {
            expected: n,
            actual: b.len(),
        });
    }
    let inv_diag: Vec<f64> = a
        .diagonal()
        .iter()
        .map(|&d| if d > 0.0 { 1.0 / d } else { 1.0 })
        .collect();
    let a_norm = (0..n)
        .map(|i| a.row(i).map(|(_, v)| v.abs()).sum::<f64>())
        .fold(0.0, f64::max);
    let b_norm = dot(b, b).sqrt();
    let target = |x: &[f64]| tol * (a_norm * dot(x, x).sqrt() + b_norm).max(1.0);
    let true_residual = |x: &[f64]| -> Vec<f64> {
        let ax = a.mul_vec(x);
        b.iter().zip(&ax).map(|(b, ax)| b - ax).collect()
    };
    let mut x = x0.map_or_else(|| vec![0.0; n], <[f64]>::to_vec);
    let mut r = true_residual(&x);
    let mut res = dot(&r, &r).sqrt();
    if res <= target(&x) {
        return Ok(CgOutcome {
            x,
            iterations: 0,
            residual: res,
        });
    }
    let mut z: Vec<f64> = r.iter().zip(&inv_diag).map(|(r, d)| r * d).collect();
    let mut p = z.clone();
    let mut rz = dot(&r, &z);
    let max_iter = 20 * n + 200;
    for it in 1..=max_iter {
        let ap = a.mul_vec(&p);
        let pap = dot(&p, &ap);
        if !(pap > 0.0) {
            return Err(Error::SolverBreakdown(format!(
                "non-positive curvature p·Ap = {pap:e} at iteration {it}"
            )));
        }
        let step = rz / pap;
        for i in 0..n {
            x[i] += step * p[i];
            r[i] -= step * ap[i];
        }
        let mut restart = false;
        if it % 50 == 0 {
            r = true_residual(&x);
        }
        res = dot(&r, &r).sqrt();
        if res <= target(&x) {
            let tr = true_residual(&x);
            let true_res = dot(&tr, &tr).sqrt();
            if true_res <= target(&x) {
                return Ok(CgOutcome {
                    x,
                    iterations: it,
                    residual: true_res,
                });
            }
            r = tr;
            restart = true;
        }
        for i in 0..n {
            z[i] = r[i] * inv_diag[i];
        }
        let rz_new = dot(&r, &z);
        // A replaced residual restarts the search directions.
        let beta = if restart { 0.0 } else { rz_new / rz };
        rz = rz_new;
        for i in 0..n {
            p[i] = z[i] + beta * p[i];
        }
    }
    Err(Error::SolverBreakdown(format!(
        "conjugate gradient stalled at residual {res:e} after {max_iter} iterations"
    )))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn laplacian_1d(n: usize, shift: f64) -> CsrMatrix {
        let mut t = Vec::new();
        for i in 0..n {
            t.push((i, i, 2.0 + shift));
            if i > 0 {
                t.push((i, i - 1, -1.0));
            }
            if i + 1 < n {
                t.push((i, i + 1, -1.0));
            }
        }
        CsrMatrix::from_triplets(n, t)
    }

    #[test]
    fn triplets_sum_duplicates() {
        let m = CsrMatrix::from_triplets(2, vec![(0, 0, 1.0), (0, 0, 2.0), (1, 0, -1.0)]);
        assert_eq!(m.get(0, 0), 3.0);
        assert_eq!(m.get(1, 0), -1.0);
        assert_eq!(m.get(0, 1), 0.0);
        assert_eq!(m.nnz(), 2);
    }

    #[test]
    fn cg_matches_dense_solve() {
        let a = laplacian_1d(30, 0.1);
        let b: Vec<f64> = (0..30).map(|i| (i as f64 * 0.3).sin()).collect();
        let out = conjugate_gradient(&a, &b, None, 1e-13).unwrap();
        let dense = a.to_dense().lu().solve(&nalgebra::DVector::from_vec(b)).unwrap();
        for i in 0..30 {
            assert!((out.x[i] - dense[i]).abs() < 1e-10);
        }
        assert!(a.is_symmetric(1e-15));
        assert!(a.has_m_matrix_sign_pattern());
    }

    #[test]
    fn cg_detects_indefinite() {
        let a = CsrMatrix::diagonal_matrix(&[1.0, -1.0]);
        // Jacobi scaling uses |d| only for positive d; the curvature check trips.
        let r = conjugate_gradient(&a, &[1.0, 1.0], None, 1e-12);
        assert!(r.is_err());
    }
}
