//! Uniform cell-centered mesh on a square domain with zero-flux boundaries.
//!
//! Cells are indexed row-major with `j` (the y index) outer and `i` inner, so
//! cell `(i, j)` lives at `j * nx + i`. Every value of a [`Field`] is a cell
//! average.

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GridError {
    #[error("grid must have at least one cell per axis (got nx = {0})")]
    EmptyGrid(usize),
    #[error("domain length must be positive and finite (got {0})")]
    BadLength(f64),
    #[error("grid mismatch: expected {expected:?}, found {found:?}")]
    Mismatch { expected: GridSpec, found: GridSpec },
    #[error("field needs {expected} values, got {found}")]
    WrongLength { expected: usize, found: usize },
    #[error("non-finite value {value} at cell {index}")]
    NonFinite { index: usize, value: f64 },
    #[error("fine grid ({fine}) is not an integer multiple of coarse grid ({coarse})")]
    NotDivisible { fine: usize, coarse: usize },
    #[error("fine and coarse grids cover different domains ({fine} vs {coarse})")]
    DomainMismatch { fine: f64, coarse: f64 },
}

/// Square `nx × nx` mesh of side `length`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridSpec {
    nx: usize,
    length: f64,
}

impl GridSpec {
    pub fn new(nx: usize, length: f64) -> Result<Self, GridError> {
        if nx == 0 {
            return Err(GridError::EmptyGrid(nx));
        }
        if !(length.is_finite() && length > 0.0) {
            return Err(GridError::BadLength(length));
        }
        Ok(Self { nx, length })
    }

    /// Mesh on the unit square.
    pub fn unit(nx: usize) -> Result<Self, GridError> {
        Self::new(nx, 1.0)
    }

    pub fn nx(&self) -> usize {
        self.nx
    }

    pub fn length(&self) -> f64 {
        self.length
    }

    /// Cell width.
    pub fn h(&self) -> f64 {
        self.length / self.nx as f64
    }

    pub fn cell_count(&self) -> usize {
        self.nx * self.nx
    }

    /// Area of the whole domain.
    pub fn area(&self) -> f64 {
        self.length * self.length
    }

    #[inline]
    pub fn index(&self, i: usize, j: usize) -> usize {
        j * self.nx + i
    }

    pub fn center(&self, i: usize, j: usize) -> (f64, f64) {
        let h = self.h();
        ((i as f64 + 0.5) * h, (j as f64 + 0.5) * h)
    }

    pub(crate) fn ensure_same(&self, other: &GridSpec) -> Result<(), GridError> {
        if self == other {
            Ok(())
        } else {
            Err(GridError::Mismatch {
                expected: *self,
                found: *other,
            })
        }
    }
}

/// Piecewise-constant scalar field: one cell average per cell.
#[derive(Debug, Clone, PartialEq)]
pub struct Field {
    grid: GridSpec,
    values: Vec<f64>,
}

impl Field {
    /// Wraps `values`, rejecting wrong lengths and non-finite entries.
    pub fn new(grid: GridSpec, values: Vec<f64>) -> Result<Self, GridError> {
        if values.len() != grid.cell_count() {
            return Err(GridError::WrongLength {
                expected: grid.cell_count(),
                found: values.len(),
            });
        }
        if let Some((index, &value)) = values.iter().enumerate().find(|(_, v)| !v.is_finite()) {
            return Err(GridError::NonFinite { index, value });
        }
        Ok(Self { grid, values })
    }

    /// Length is checked; finiteness is the caller's responsibility.
    pub(crate) fn from_raw(grid: GridSpec, values: Vec<f64>) -> Self {
        debug_assert_eq!(values.len(), grid.cell_count());
        Self { grid, values }
    }

    pub fn constant(grid: GridSpec, value: f64) -> Self {
        Self::from_raw(grid, vec![value; grid.cell_count()])
    }

    pub fn zeros(grid: GridSpec) -> Self {
        Self::constant(grid, 0.0)
    }

    /// Samples `f` at cell centers.
    pub fn from_fn(grid: GridSpec, mut f: impl FnMut(f64, f64) -> f64) -> Self {
        let mut values = Vec::with_capacity(grid.cell_count());
        for j in 0..grid.nx {
            for i in 0..grid.nx {
                let (x, y) = grid.center(i, j);
                values.push(f(x, y));
            }
        }
        Self::from_raw(grid, values)
    }

    pub fn grid(&self) -> &GridSpec {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.values[self.grid.index(i, j)]
    }

    /// First non-finite cell, if any.
    pub fn first_non_finite(&self) -> Option<(usize, f64)> {
        self.values.iter().copied().enumerate().find(|(_, v)| !v.is_finite())
    }

    pub fn min(&self) -> f64 {
        self.values.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn max(&self) -> f64 {
        self.values.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    /// Volume-weighted mean over the domain.
    pub fn mean(&self) -> f64 {
        self.values.iter().sum::<f64>() / self.values.len() as f64
    }

    /// Sample variance of the cell values.
    pub fn variance(&self) -> f64 {
        let mean = self.mean();
        self.values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / self.values.len() as f64
    }

    /// `self - other`, cellwise.
    pub fn sub(&self, other: &Field) -> Result<Field, GridError> {
        self.grid.ensure_same(&other.grid)?;
        let values = self.values.iter().zip(&other.values).map(|(a, b)| a - b).collect();
        Ok(Field::from_raw(self.grid, values))
    }

    /// `self + other`, cellwise.
    pub fn add(&self, other: &Field) -> Result<Field, GridError> {
        self.grid.ensure_same(&other.grid)?;
        let values = self.values.iter().zip(&other.values).map(|(a, b)| a + b).collect();
        Ok(Field::from_raw(self.grid, values))
    }
}

/// Discrete L2 inner product `h² Σ a_K b_K`.
pub fn inner_product(a: &Field, b: &Field) -> Result<f64, GridError> {
    a.grid.ensure_same(&b.grid)?;
    let h = a.grid.h();
    Ok(h * h * dot(&a.values, &b.values))
}

/// Discrete L2 norm induced by [`inner_product`].
pub fn l2_norm(a: &Field) -> f64 {
    let h = a.grid.h();
    (h * h * dot(&a.values, &a.values)).sqrt()
}

/// Sum over interior faces of `(a_K - a_L)²`. Transmissibilities are all one
/// on a uniform square mesh, and boundary faces carry no flux.
pub fn discrete_h1_seminorm_sq(a: &Field) -> f64 {
    let nx = a.grid.nx;
    let v = &a.values;
    let mut sum = 0.0;
    for j in 0..nx {
        let row = j * nx;
        for i in 0..nx {
            let k = row + i;
            if i + 1 < nx {
                sum += (v[k] - v[k + 1]).powi(2);
            }
            if j + 1 < nx {
                sum += (v[k] - v[k + nx]).powi(2);
            }
        }
    }
    sum
}

/// Two-point flux stencil `Σ_faces (a_L - a_K)` per cell, without the `1/h²`
/// factor. Zero row sums; symmetric negative semidefinite.
pub fn apply_neumann_laplacian(a: &Field) -> Field {
    let mut out = vec![0.0; a.values.len()];
    neumann_stencil(a.grid.nx, &a.values, &mut out);
    Field::from_raw(a.grid, out)
}

/// Slice form of [`apply_neumann_laplacian`], used by the solver.
pub(crate) fn neumann_stencil(nx: usize, src: &[f64], dst: &mut [f64]) {
    debug_assert_eq!(src.len(), nx * nx);
    debug_assert_eq!(dst.len(), nx * nx);
    for j in 0..nx {
        let row = j * nx;
        for i in 0..nx {
            let k = row + i;
            let c = src[k];
            let mut acc = 0.0;
            if i > 0 {
                acc += src[k - 1] - c;
            }
            if i + 1 < nx {
                acc += src[k + 1] - c;
            }
            if j > 0 {
                acc += src[k - nx] - c;
            }
            if j + 1 < nx {
                acc += src[k + nx] - c;
            }
            dst[k] = acc;
        }
    }
}

/// Number of interior neighbors of cell `(i, j)`.
pub(crate) fn neighbor_count(nx: usize, i: usize, j: usize) -> usize {
    usize::from(i > 0) + usize::from(i + 1 < nx) + usize::from(j > 0) + usize::from(j + 1 < nx)
}

/// Index-ordered dot product; the fixed order keeps reductions reproducible.
#[inline]
pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}
