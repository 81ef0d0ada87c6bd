use alloc::vec::Vec;
use core::fmt;

pub type Result<T> = core::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq)]
pub enum Error {
    /// Mesh construction rejected (fewer than 3 cells per side, ...).
    InvalidMesh(&'static str),
    /// A cell or corner index outside the mesh.
    InvalidIndex { index: usize, len: usize },
    /// Field length does not match the mesh it is applied to.
    LengthMismatch { expected: usize, found: usize },
    /// The least-squares normal matrix of a cell is singular.
    SingularGeometry { cell: usize },
    /// A face diffusion coefficient is not positive.
    EllipticityLost { face: usize, coefficient: f64 },
    /// The Krylov solver did not reach its tolerance.
    SolverStall { iterations: usize, residual_history: Vec<f64> },
    /// Krylov breakdown (zero denominator) before convergence.
    SolverBreakdown { iterations: usize, residual: f64 },
    /// The physical mesh has an inverted cell.
    Tangled { cell: usize, min_triangle_area: f64 },
    /// A parameter outside its admissible range.
    InvalidConfig(&'static str),
}

impl fmt::Display for Error {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Error::InvalidMesh(why) => write!(f, "invalid mesh: {why}"),
            Error::InvalidIndex { index, len } => {
                write!(f, "index {index} out of range for {len} entries")
            }
            Error::LengthMismatch { expected, found } => {
                write!(f, "field length {found} does not match mesh size {expected}")
            }
            Error::SingularGeometry { cell } => {
                write!(f, "degenerate neighbourhood around cell {cell}: singular least-squares matrix")
            }
            Error::EllipticityLost { face, coefficient } => {
                write!(f, "ellipticity lost: face {face} has diffusion coefficient {coefficient:e}")
            }
            Error::SolverStall { iterations, residual_history } => write!(
                f,
                "linear solver stalled after {iterations} iterations (last residual {:e})",
                residual_history.last().copied().unwrap_or(f64::NAN)
            ),
            Error::SolverBreakdown { iterations, residual } => {
                write!(f, "linear solver breakdown at iteration {iterations} (residual {residual:e})")
            }
            Error::Tangled { cell, min_triangle_area } => write!(
                f,
                "catastrophic mesh tangling: cell {cell} has triangle area {min_triangle_area:e}"
            ),
            Error::InvalidConfig(why) => write!(f, "invalid configuration: {why}"),
        }
    }
}

impl core::error::Error for Error {}
