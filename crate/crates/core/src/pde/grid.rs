//! Uniform cell-centered grids on intervals and rectangles, and the
//! per-cell diffusion tensors living on them.

use std::fmt;
use std::sync::Arc;

use crate::error::{Error, Result};

/// A 2×2 tensor; one-dimensional grids use only the `[0][0]` entry.
pub type Tensor = [[f64; 2]; 2];

#[derive(Debug, Clone, PartialEq)]
pub struct GridSpec {
    /// Physical length per axis.
    pub extents: Vec<f64>,
    /// Cells per axis.
    pub resolution: Vec<usize>,
}

impl GridSpec {
    pub fn line(length: f64, cells: usize) -> Self {
        Self {
            extents: vec![length],
            resolution: vec![cells],
        }
    }

    pub fn rectangle(lx: f64, ly: f64, nx: usize, ny: usize) -> Self {
        Self {
            extents: vec![lx, ly],
            resolution: vec![nx, ny],
        }
    }
}

/// Interior face between two neighboring cells.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Face {
    pub left: usize,
    pub right: usize,
    pub axis: usize,
    pub area: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SpatialGrid {
    dim: usize,
    extents: Vec<f64>,
    resolution: Vec<usize>,
    spacing: Vec<f64>,
    cell_volume: f64,
    faces: Vec<Face>,
}

impl SpatialGrid {
    pub fn new(spec: &GridSpec) -> Result<Self> {
        let dim = spec.extents.len();
        if !(dim == 1 || dim == 2) || spec.resolution.len() != dim {
            return Err(Error::param("grid", "dimension must be 1 or 2 with one resolution per axis"));
        }
        if spec.extents.iter().any(|&l| !(l > 0.0) || !l.is_finite()) {
            return Err(Error::param("grid.extents", "lengths must be positive"));
        }
        if spec.resolution.contains(&0) {
            return Err(Error::param("grid.resolution", "each axis needs at least one cell"));
        }
        let spacing: Vec<f64> = spec.extents.iter().zip(&spec.resolution).map(|(l, &n)| l / n as f64).collect();
        let cell_volume = spacing.iter().product();
        let mut grid = Self {
            dim,
            extents: spec.extents.clone(),
            resolution: spec.resolution.clone(),
            spacing,
            cell_volume,
            faces: Vec::new(),
        };
        grid.faces = grid.build_faces();
        Ok(grid)
    }

    fn build_faces(&self) -> Vec<Face> {
        let nx = self.resolution[0];
        let ny = if self.dim == 2 { self.resolution[1] } else { 1 };
        let mut faces = Vec::new();
        for iy in 0..ny {
            for ix in 0..nx {
                let c = ix + nx * iy;
                if ix + 1 < nx {
                    faces.push(Face {
                        left: c,
                        right: c + 1,
                        axis: 0,
                        area: self.cell_volume / self.spacing[0],
                    });
                }
                if self.dim == 2 && iy + 1 < ny {
                    faces.push(Face {
                        left: c,
                        right: c + nx,
                        axis: 1,
                        area: self.cell_volume / self.spacing[1],
                    });
                }
            }
        }
        faces
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn extents(&self) -> &[f64] {
        &self.extents
    }

    pub fn resolution(&self) -> &[usize] {
        &self.resolution
    }

    pub fn spacing(&self) -> &[f64] {
        &self.spacing
    }

    pub fn cell_volume(&self) -> f64 {
        self.cell_volume
    }

    /// Measure of the whole domain.
    pub fn volume(&self) -> f64 {
        self.extents.iter().product()
    }

    pub fn faces(&self) -> &[Face] {
        &self.faces
    }

    pub fn cell_count(&self) -> usize {
        self.resolution.iter().product()
    }

    pub fn center(&self, cell: usize) -> Vec<f64> {
        let nx = self.resolution[0];
        let idx = [cell % nx, cell / nx];
        (0..self.dim).map(|k| (idx[k] as f64 + 0.5) * self.spacing[k]).collect()
    }

    pub fn centers(&self) -> Vec<Vec<f64>> {
        (0..self.cell_count()).map(|c| self.center(c)).collect()
    }
}

/// Tensor as a function of cell center.
pub type TensorFn = Arc<dyn Fn(&[f64]) -> Tensor + Send + Sync>;

/// How the diffusion tensor is specified.
#[derive(Clone)]
pub enum TensorSpec {
    Isotropic(f64),
    Diagonal(Vec<f64>),
    Full(Tensor),
    PerCell(Vec<Tensor>),
    Function(TensorFn),
}

impl fmt::Debug for TensorSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            TensorSpec::Isotropic(a) => write!(f, "Isotropic({a})"),
            TensorSpec::Diagonal(d) => write!(f, "Diagonal({d:?})"),
            TensorSpec::Full(t) => write!(f, "Full({t:?})"),
            TensorSpec::PerCell(v) => write!(f, "PerCell({} cells)", v.len()),
            TensorSpec::Function(_) => f.write_str("Function(<fn>)"),
        }
    }
}

/// Per-cell symmetric positive-definite diffusion tensors.
#[derive(Debug, Clone, PartialEq)]
pub struct DiffusionField {
    dim: usize,
    tensors: Vec<Tensor>,
    coercivity: f64,
}

fn smallest_eigenvalue(t: &Tensor, dim: usize) -> f64 {
    if dim == 1 {
        return t[0][0];
    }
    let tr = t[0][0] + t[1][1];
    let det = t[0][0] * t[1][1] - t[0][1] * t[1][0];
    let disc = (0.25 * tr * tr - det).max(0.0).sqrt();
    0.5 * tr - disc
}

impl DiffusionField {
    pub fn new(dim: usize, tensors: Vec<Tensor>) -> Result<Self> {
        let mut coercivity = f64::INFINITY;
        for (i, t) in tensors.iter().enumerate() {
            if t.iter().flatten().take(if dim == 1 { 1 } else { 4 }).any(|v| !v.is_finite()) {
                return Err(Error::param("diffusion", format!("non-finite tensor at cell {i}")));
            }
            if dim == 2 && (t[0][1] - t[1][0]).abs() > 1e-12 * (1.0 + t[0][1].abs()) {
                return Err(Error::param("diffusion", format!("tensor at cell {i} is not symmetric")));
            }
            let lam = smallest_eigenvalue(t, dim);
            if !(lam > 0.0) {
                return Err(Error::param(
                    "diffusion",
                    format!("tensor at cell {i} is not positive definite (smallest eigenvalue {lam})"),
                ));
            }
            coercivity = coercivity.min(lam);
        }
        Ok(Self {
            dim,
            tensors,
            coercivity,
        })
    }

    pub fn tensors(&self) -> &[Tensor] {
        &self.tensors
    }

    /// The constant `C` with `⟨v, A v⟩ ≥ C ⟨v, v⟩` on every cell.
    pub fn coercivity(&self) -> f64 {
        self.coercivity
    }

    /// Face diffusivities: harmonic mean of the neighboring tensors
    /// projected on the face normal.
    pub fn face_diffusivities(&self, grid: &SpatialGrid) -> Vec<f64> {
        grid.faces()
            .iter()
            .map(|f| {
                let a = self.tensors[f.left][f.axis][f.axis];
                let b = self.tensors[f.right][f.axis][f.axis];
                2.0 * a * b / (a + b)
            })
            .collect()
    }

    pub fn is_dim(&self, dim: usize) -> bool {
        self.dim == dim
    }
}

/// Builds the grid and evaluates the diffusion tensor on its cells.
pub fn build_grid(spec: &GridSpec, a_spec: &TensorSpec) -> Result<(SpatialGrid, DiffusionField)> {
    let grid = SpatialGrid::new(spec)?;
    let n = grid.cell_count();
    let dim = grid.dim();
    let tensors: Vec<Tensor> = match a_spec {
        TensorSpec::Isotropic(a) => vec![[[*a, 0.0], [0.0, *a]]; n],
        TensorSpec::Diagonal(d) => {
            if d.len() != dim {
                return Err(Error::param("diffusion", format!("need {dim} diagonal entries, got {}", d.len())));
            }
            let d1 = if dim == 2 { d[1] } else { d[0] };
            vec![[[d[0], 0.0], [0.0, d1]]; n]
        }
        TensorSpec::Full(t) => vec![*t; n],
        TensorSpec::PerCell(v) => {
            if v.len() != n {
                return Err(Error::GridMismatch {
                    expected: n,
                    actual: v.len(),
                });
            }
            v.clone()
        }
        TensorSpec::Function(f) => (0..n).map(|c| f(&grid.center(c))).collect(),
    };
    let field = DiffusionField::new(dim, tensors)?;
    Ok((grid, field))
}
