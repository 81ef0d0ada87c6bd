//! Mesh redistribution by optimal transport on a doubly periodic square.
//!
//! A uniform `N x N` quadrilateral grid on `[-1/2, 1/2]^2` is moved to
//! `x = xi + grad(phi)` where the potential `phi` solves the Monge-Ampere
//! equation `m(xi + grad phi) det(I + H(phi)) = c`. Four outer iterations are
//! provided ([`Algorithm::Fp`], [`Algorithm::Afp`], [`Algorithm::Newton`],
//! [`Algorithm::Pma`]), all sharing one finite-volume discretisation.
//!
//! The crate is `no_std` and only needs `alloc`; file formats and the command
//! line driver live in the `ma-mesh` crate.

#![no_std]
#![deny(rust_2018_idioms)]
// `!(x > 0.0)` is used on purpose throughout: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

extern crate alloc;
#[cfg(test)]
extern crate std;

pub mod error;
pub mod fvops;
pub mod geom;
pub mod linalg;
pub mod mesh;
pub mod monitor;
pub mod solvers;

pub use error::{Error, Result};
pub use fvops::{Location, ScalarField, TensorField, VectorField};
pub use geom::{Mat2, Vec2};
pub use mesh::{Mesh, MeshPair, TangleReport};
pub use monitor::MonitorSpec;
pub use solvers::{
    run, run_observed, Algorithm, ConvergenceRecord, RunOutcome, SolverConfig, SolverState,
    Termination,
};
