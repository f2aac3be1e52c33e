//! Implicit diffusion solves: `(I - α L) x = b` with `α = Δt·d/h²` and `L`
//! the zero-flux five-point stencil, solved by preconditioned conjugate
//! gradients.
//!
//! The operator is matrix-free; only the diagonal is stored, for the Jacobi
//! preconditioner.

use thiserror::Error;

use crate::grid::{dot, neighbor_count, neumann_stencil, Field, GridError, GridSpec};

pub const DEFAULT_TOL: f64 = 1e-10;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SolveError {
    #[error("diffusion coefficient must be non-negative and finite (got {0})")]
    BadDiffusion(f64),
    #[error("time step must be positive and finite (got {0})")]
    BadTimeStep(f64),
    #[error("tolerance must be positive (got {0})")]
    BadTolerance(f64),
    #[error("right-hand side has non-finite value at cell {0}")]
    NonFiniteRhs(usize),
    #[error(transparent)]
    Grid(#[from] GridError),
}

/// `A = I - α L` on a fixed grid.
#[derive(Debug, Clone, PartialEq)]
pub struct SparseOperator {
    grid: GridSpec,
    alpha: f64,
    diag: Vec<f64>,
}

impl SparseOperator {
    pub fn grid(&self) -> &GridSpec {
        &self.grid
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn diag(&self) -> &[f64] {
        &self.diag
    }

    /// `y = A x` on raw slices.
    pub fn apply_slice(&self, x: &[f64], y: &mut [f64]) {
        neumann_stencil(self.grid.nx(), x, y);
        let alpha = self.alpha;
        for (yk, &xk) in y.iter_mut().zip(x) {
            *yk = xk - alpha * *yk;
        }
    }
}

/// Builds the operator for one species' implicit diffusion step.
pub fn assemble(grid: GridSpec, diffusion: f64, dt: f64) -> Result<SparseOperator, SolveError> {
    if !(diffusion.is_finite() && diffusion >= 0.0) {
        return Err(SolveError::BadDiffusion(diffusion));
    }
    if !(dt.is_finite() && dt > 0.0) {
        return Err(SolveError::BadTimeStep(dt));
    }
    let h = grid.h();
    let alpha = dt * diffusion / (h * h);
    Ok(from_alpha(grid, alpha))
}

/// Operator with the scaled coefficient given directly.
pub fn from_alpha(grid: GridSpec, alpha: f64) -> SparseOperator {
    let nx = grid.nx();
    let mut diag = Vec::with_capacity(grid.cell_count());
    for j in 0..nx {
        for i in 0..nx {
            diag.push(1.0 + alpha * neighbor_count(nx, i, j) as f64);
        }
    }
    SparseOperator { grid, alpha, diag }
}

pub fn apply(op: &SparseOperator, x: &Field) -> Result<Field, SolveError> {
    op.grid.ensure_same(x.grid())?;
    let mut y = vec![0.0; op.grid.cell_count()];
    op.apply_slice(x.values(), &mut y);
    Ok(Field::new(op.grid, y)?)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Preconditioner {
    #[default]
    Jacobi,
    Identity,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolverSettings {
    /// Relative residual target `‖b - Ax‖₂ ≤ tol·‖b‖₂`.
    pub tol: f64,
    /// Iteration cap; `None` means `10·nx²`.
    pub max_iter: Option<usize>,
    pub preconditioner: Preconditioner,
}

impl Default for SolverSettings {
    fn default() -> Self {
        Self {
            tol: DEFAULT_TOL,
            max_iter: None,
            preconditioner: Preconditioner::Jacobi,
        }
    }
}

impl SolverSettings {
    pub fn max_iter_for(&self, grid: &GridSpec) -> usize {
        self.max_iter.unwrap_or(10 * grid.cell_count())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolveReport {
    pub iterations: usize,
    /// `‖b - Ax‖₂ / ‖b‖₂`, recomputed from the returned iterate.
    pub final_residual_norm: f64,
    pub converged: bool,
}

/// Scratch vectors for repeated solves on one grid.
#[derive(Debug, Clone, Default)]
pub struct CgWorkspace {
    r: Vec<f64>,
    z: Vec<f64>,
    p: Vec<f64>,
    q: Vec<f64>,
}

impl CgWorkspace {
    pub fn new(n: usize) -> Self {
        Self {
            r: vec![0.0; n],
            z: vec![0.0; n],
            p: vec![0.0; n],
            q: vec![0.0; n],
        }
    }

    fn resize(&mut self, n: usize) {
        for v in [&mut self.r, &mut self.z, &mut self.p, &mut self.q] {
            v.resize(n, 0.0);
        }
    }
}

/// Solves `A x = b` starting from `x = b`.
pub fn pcg_solve(
    op: &SparseOperator,
    b: &Field,
    tol: f64,
    max_iter: usize,
) -> Result<(Field, SolveReport), SolveError> {
    op.grid.ensure_same(b.grid())?;
    let settings = SolverSettings {
        tol,
        max_iter: Some(max_iter),
        preconditioner: Preconditioner::Jacobi,
    };
    let mut x = b.values().to_vec();
    let mut ws = CgWorkspace::new(x.len());
    let report = solve_in_place(op, b.values(), &mut x, &settings, &mut ws)?;
    Ok((Field::from_raw(op.grid, x), report))
}

/// Preconditioned CG on slices; `x` holds the initial guess on entry and the
/// solution on exit.
///
/// Convergence is declared only after the residual is recomputed from `x`
/// directly. If the recurrence residual has drifted below the true one, the
/// iteration restarts from the true residual.
pub fn solve_in_place(
    op: &SparseOperator,
    b: &[f64],
    x: &mut [f64],
    settings: &SolverSettings,
    ws: &mut CgWorkspace,
) -> Result<SolveReport, SolveError> {
    #[allow(clippy::neg_cmp_op_on_partial_ord)] // rejects NaN too
    if !(settings.tol > 0.0) {
        return Err(SolveError::BadTolerance(settings.tol));
    }
    if let Some(k) = b.iter().position(|v| !v.is_finite()) {
        return Err(SolveError::NonFiniteRhs(k));
    }
    let n = op.grid.cell_count();
    debug_assert_eq!(b.len(), n);
    debug_assert_eq!(x.len(), n);
    ws.resize(n);

    let b_norm = dot(b, b).sqrt();
    if b_norm == 0.0 {
        x.fill(0.0);
        return Ok(SolveReport {
            iterations: 0,
            final_residual_norm: 0.0,
            converged: true,
        });
    }
    let target = settings.tol * b_norm;
    let max_iter = settings.max_iter_for(&op.grid);
    let CgWorkspace { r, z, p, q } = ws;

    let true_residual = |x: &[f64], r: &mut [f64]| {
        op.apply_slice(x, r);
        for (rk, bk) in r.iter_mut().zip(b) {
            *rk = bk - *rk;
        }
        dot(r, r).sqrt()
    };

    let mut iterations = 0;
    let mut r_norm = true_residual(x, r);
    loop {
        if r_norm <= target {
            return Ok(SolveReport {
                iterations,
                final_residual_norm: r_norm / b_norm,
                converged: true,
            });
        }
        if iterations >= max_iter {
            return Ok(SolveReport {
                iterations,
                final_residual_norm: r_norm / b_norm,
                converged: false,
            });
        }

        // (Re)start: fresh search direction from the current residual.
        let start = iterations;
        precondition(op, settings.preconditioner, r, z);
        p.copy_from_slice(z);
        let mut rz = dot(r, z);
        loop {
            op.apply_slice(p, q);
            let pq = dot(p, q);
            #[allow(clippy::neg_cmp_op_on_partial_ord)] // breakdown, including NaN
            if !(pq > 0.0) {
                break;
            }
            let step = rz / pq;
            for k in 0..n {
                x[k] += step * p[k];
                r[k] -= step * q[k];
            }
            iterations += 1;
            let recurrence_norm = dot(r, r).sqrt();
            if recurrence_norm <= target || iterations >= max_iter {
                break;
            }
            precondition(op, settings.preconditioner, r, z);
            let rz_next = dot(r, z);
            let beta = rz_next / rz;
            rz = rz_next;
            for k in 0..n {
                p[k] = z[k] + beta * p[k];
            }
        }
        r_norm = true_residual(x, r);
        if iterations == start && r_norm > target {
            // breakdown before any progress
            return Ok(SolveReport {
                iterations,
                final_residual_norm: r_norm / b_norm,
                converged: false,
            });
        }
    }
}

fn precondition(op: &SparseOperator, kind: Preconditioner, r: &[f64], z: &mut [f64]) {
    match kind {
        Preconditioner::Jacobi => {
            for ((zk, rk), dk) in z.iter_mut().zip(r).zip(&op.diag) {
                *zk = rk / dk;
            }
        }
        Preconditioner::Identity => z.copy_from_slice(r),
    }
}
