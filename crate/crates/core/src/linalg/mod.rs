//! Sparse systems on the cell stencil of a periodic mesh.
//!
//! Rows are stored divided by the cell volume, so `M * phi` reproduces the
//! explicit operators of [`crate::fvops`] entry by entry. Symmetric systems
//! are solved with ILU(0)-preconditioned conjugate gradients, non-symmetric
//! ones with ILU(0)-preconditioned BiCGStab.

mod krylov;
mod sparse;
mod tensor;

use alloc::vec::Vec;

pub use krylov::KrylovOutcome;
pub use sparse::{CsrMatrix, Ilu0};
pub use tensor::{tensor_laplacian_solve, TensorOperator, TensorSolveReport};

use crate::error::{Error, Result};
use crate::mesh::Mesh;
use krylov::Preconditioner;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LinSolveConfig {
    pub abs_tol: f64,
    pub rel_tol: f64,
    pub max_iterations: usize,
    /// Deferred-correction sweeps of the tensor solve.
    pub correctors: usize,
}

impl Default for LinSolveConfig {
    fn default() -> Self {
        LinSolveConfig { abs_tol: 1e-12, rel_tol: 1e-8, max_iterations: 5000, correctors: 3 }
    }
}

impl LinSolveConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.abs_tol > 0.0 && self.rel_tol > 0.0) {
            return Err(Error::InvalidConfig("linear solver tolerances must be positive"));
        }
        if self.correctors == 0 {
            return Err(Error::InvalidConfig("at least one corrector sweep is required"));
        }
        if self.max_iterations == 0 {
            return Err(Error::InvalidConfig("linear solver needs at least one iteration"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Pin {
    pub cell: usize,
    pub value: f64,
}

#[derive(Debug, Clone, PartialEq)]
struct Elimination {
    pin: Pin,
    diagonal: f64,
    column: Vec<(usize, f64)>,
}

/// `M x = b` with an optional pinned reference cell.
#[derive(Debug, Clone, PartialEq)]
pub struct SparseSystem {
    pub matrix: CsrMatrix,
    pub rhs: Vec<f64>,
    elimination: Option<Elimination>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Solution {
    pub x: Vec<f64>,
    pub iterations: usize,
    pub residual: f64,
}

impl SparseSystem {
    pub fn new(matrix: CsrMatrix) -> SparseSystem {
        let rhs = alloc::vec![0.0; matrix.n()];
        SparseSystem { matrix, rhs, elimination: None }
    }

    pub fn pin(&self) -> Option<Pin> {
        self.elimination.as_ref().map(|e| e.pin)
    }

    /// Right-hand side with the pinned row and column folded in.
    pub fn effective_rhs(&self) -> Vec<f64> {
        let mut b = self.rhs.clone();
        if let Some(e) = &self.elimination {
            for &(row, a) in &e.column {
                b[row] -= a * e.pin.value;
            }
            b[e.pin.cell] = e.diagonal * e.pin.value;
        }
        b
    }

    /// `M x` including the pinned identity row.
    pub fn apply(&self, x: &[f64]) -> Vec<f64> {
        let mut y = self.matrix.mul_vec(x);
        if let Some(e) = &self.elimination {
            // restore the eliminated column for an honest product
            for &(row, a) in &e.column {
                y[row] += a * x[e.pin.cell];
            }
        }
        y
    }
}

/// `coeff * laplacian` as a matrix; rows sum to zero.
pub fn assemble_poisson(m: &Mesh, coeff: f64) -> SparseSystem {
    let (mut matrix, slots) = CsrMatrix::with_mesh_pattern(m);
    let vols = m.volumes();
    {
        let vals = matrix.values_mut();
        for (face, s) in m.faces().iter().zip(&slots) {
            let k = coeff * face.area.norm() / face.delta.norm();
            let (vo, vn) = (vols[face.owner], vols[face.neighbour]);
            vals[s[0]] -= k / vo;
            vals[s[1]] += k / vo;
            vals[s[2]] += k / vn;
            vals[s[3]] -= k / vn;
        }
    }
    SparseSystem::new(matrix)
}

/// `I - gamma * laplacian`; maps constants to themselves.
pub fn assemble_helmholtz(m: &Mesh, gamma: f64) -> SparseSystem {
    let mut sys = assemble_poisson(m, -gamma);
    sys.matrix.add_diagonal(&alloc::vec![1.0; m.n_cells()]);
    sys
}

/// Replaces row `cell` by a (diagonally scaled) identity row with value
/// `value`. The matching column is eliminated too, so symmetric systems stay
/// symmetric.
pub fn pin_reference(mut sys: SparseSystem, cell: usize, value: f64) -> Result<SparseSystem> {
    let n = sys.matrix.n();
    if cell >= n {
        return Err(Error::InvalidIndex { index: cell, len: n });
    }
    if let Some(e) = sys.elimination.as_mut() {
        if e.pin.cell != cell {
            return Err(Error::InvalidConfig("a system can only be pinned at one cell"));
        }
        e.pin.value = value;
        return Ok(sys);
    }
    let (diagonal, column) = sys.matrix.pin_row_and_column(cell);
    sys.elimination = Some(Elimination { pin: Pin { cell, value }, diagonal, column });
    Ok(sys)
}

/// Solves to `|M x - b| <= max(abs_tol, rel_tol * |M x0 - b|)` starting from `guess`.
/// The target is raised to the round-off level of `M x - b` when that is larger.
pub fn solve(sys: &SparseSystem, cfg: &LinSolveConfig, guess: &[f64]) -> Result<Solution> {
    let n = sys.matrix.n();
    if guess.len() != n {
        return Err(Error::LengthMismatch { expected: n, found: guess.len() });
    }
    let b = sys.effective_rhs();
    let mut x = guess.to_vec();
    if let Some(e) = &sys.elimination {
        x[e.pin.cell] = e.pin.value;
    }
    let pc = Preconditioner::for_matrix(&sys.matrix);
    let outcome = if sys.matrix.is_symmetric(1e-12) {
        krylov::pcg(&sys.matrix, &b, &mut x, &pc, cfg.abs_tol, cfg.rel_tol, cfg.max_iterations)?
    } else {
        krylov::bicgstab(&sys.matrix, &b, &mut x, &pc, cfg.abs_tol, cfg.rel_tol, cfg.max_iterations)?
    };
    if x.iter().any(|v| !v.is_finite()) {
        return Err(Error::SolverBreakdown { iterations: outcome.iterations, residual: f64::NAN });
    }
    Ok(Solution { x, iterations: outcome.iterations, residual: outcome.residual })
}
