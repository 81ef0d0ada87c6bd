//! Finite-volume fields and discrete differential operators.
//!
//! Every operator works face by face: a face flux is computed once and added
//! to the owner and subtracted from the neighbour, so periodic telescoping
//! (`sum_i V_i div(F)_i = 0`) holds to round-off on any mesh.

use alloc::vec::Vec;
use core::ops::{Deref, DerefMut};

use crate::error::{Error, Result};
use crate::geom::{Mat2, Vec2};
use crate::mesh::Mesh;

/// One value per cell.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct ScalarField(pub Vec<f64>);

impl ScalarField {
    pub fn zeros(len: usize) -> Self {
        ScalarField(alloc::vec![0.0; len])
    }

    pub fn constant(len: usize, value: f64) -> Self {
        ScalarField(alloc::vec![value; len])
    }

    /// Samples `f` at the cell centres of `mesh`.
    pub fn from_fn(mesh: &Mesh, f: impl Fn(Vec2) -> f64) -> Self {
        ScalarField(mesh.centres().iter().map(|&x| f(x)).collect())
    }

    pub fn is_finite(&self) -> bool {
        self.0.iter().all(|v| v.is_finite())
    }

    /// `sum_i V_i v_i / sum_i V_i`.
    pub fn weighted_mean(&self, volumes: &[f64]) -> f64 {
        let (s, v) = self
            .0
            .iter()
            .zip(volumes)
            .fold((0.0, 0.0), |(s, v), (&x, &w)| (s + w * x, v + w));
        s / v
    }

    pub fn max_abs(&self) -> f64 {
        self.0.iter().fold(0.0, |m, v| m.max(v.abs()))
    }
}

impl Deref for ScalarField {
    type Target = [f64];
    fn deref(&self) -> &[f64] {
        &self.0
    }
}

impl DerefMut for ScalarField {
    fn deref_mut(&mut self) -> &mut [f64] {
        &mut self.0
    }
}

impl From<Vec<f64>> for ScalarField {
    fn from(v: Vec<f64>) -> Self {
        ScalarField(v)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Location {
    Cell,
    Face,
    Corner,
}

#[derive(Debug, Clone, PartialEq)]
pub struct VectorField {
    pub location: Location,
    pub values: Vec<Vec2>,
}

impl VectorField {
    pub fn zeros(location: Location, len: usize) -> Self {
        VectorField { location, values: alloc::vec![Vec2::ZERO; len] }
    }

    pub fn is_finite(&self) -> bool {
        self.values.iter().all(|v| v.is_finite())
    }
}

impl Deref for VectorField {
    type Target = [Vec2];
    fn deref(&self) -> &[Vec2] {
        &self.values
    }
}

/// One 2x2 matrix per cell.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct TensorField(pub Vec<Mat2>);

impl TensorField {
    pub fn constant(len: usize, value: Mat2) -> Self {
        TensorField(alloc::vec![value; len])
    }

    pub fn is_symmetric(&self) -> bool {
        self.0.iter().all(|m| m.xy == m.yx)
    }
}

impl Deref for TensorField {
    type Target = [Mat2];
    fn deref(&self) -> &[Mat2] {
        &self.0
    }
}

impl DerefMut for TensorField {
    fn deref_mut(&mut self) -> &mut [Mat2] {
        &mut self.0
    }
}

#[inline]
fn check_cells(phi: &[f64], m: &Mesh) {
    assert_eq!(phi.len(), m.n_cells(), "field does not live on this mesh");
}

/// `(1/V_i) sum_f |S_f| (phi_N - phi_i) / |d_f|`.
pub fn laplacian(phi: &[f64], m: &Mesh) -> ScalarField {
    check_cells(phi, m);
    let mut out = alloc::vec![0.0; m.n_cells()];
    for face in m.faces() {
        let flux = face.area.norm() * (phi[face.neighbour] - phi[face.owner]) / face.delta.norm();
        out[face.owner] += flux;
        out[face.neighbour] -= flux;
    }
    for (o, v) in out.iter_mut().zip(m.volumes()) {
        *o /= v;
    }
    ScalarField(out)
}

/// Divergence-theorem gradient at cell centres with linearly interpolated face values.
pub fn cell_gradient(phi: &[f64], m: &Mesh) -> VectorField {
    check_cells(phi, m);
    let mut out = alloc::vec![Vec2::ZERO; m.n_cells()];
    for face in m.faces() {
        let phi_f = face.interpolate(phi[face.owner], phi[face.neighbour]);
        let flux = face.area * phi_f;
        out[face.owner] += flux;
        out[face.neighbour] -= flux;
    }
    for (o, &v) in out.iter_mut().zip(m.volumes()) {
        *o = *o / v;
    }
    VectorField { location: Location::Cell, values: out }
}

/// Two-point gradient `(phi_N - phi_P) / |d_f|` per face, owner to neighbour.
pub fn face_normal_gradient(phi: &[f64], m: &Mesh) -> Vec<f64> {
    check_cells(phi, m);
    m.faces()
        .iter()
        .map(|f| (phi[f.neighbour] - phi[f.owner]) / f.delta.norm())
        .collect()
}

/// Full face gradient: interpolated cell gradient with its normal component
/// replaced by the compact two-point gradient.
pub fn corrected_face_gradient(phi: &[f64], m: &Mesh) -> VectorField {
    let grad = cell_gradient(phi, m);
    corrected_face_gradient_with(phi, &grad, m)
}

pub(crate) fn corrected_face_gradient_with(phi: &[f64], grad: &[Vec2], m: &Mesh) -> VectorField {
    let values = m
        .faces()
        .iter()
        .map(|f| {
            let g = f.interpolate(grad[f.owner], grad[f.neighbour]);
            let s = f.unit_normal();
            let normal = (phi[f.neighbour] - phi[f.owner]) / f.delta.norm();
            g + s * (normal - g.dot(s))
        })
        .collect();
    VectorField { location: Location::Face, values }
}

/// Symmetrised FV Hessian `(1/V_i) sum_f (grad_f phi) S_f^T`.
pub fn hessian(phi: &[f64], m: &Mesh) -> TensorField {
    let gf = corrected_face_gradient(phi, m);
    let mut out = alloc::vec![Mat2::ZERO; m.n_cells()];
    for (face, &g) in m.faces().iter().zip(gf.iter()) {
        let flux = g.outer(face.area);
        out[face.owner] += flux;
        out[face.neighbour] = out[face.neighbour] - flux;
    }
    for (o, &v) in out.iter_mut().zip(m.volumes()) {
        *o = (*o * (1.0 / v)).symmetrised();
    }
    TensorField(out)
}

/// `(1/V_i) sum_f S_f . (B_f grad_f psi)` with `B_f` the arithmetic mean of the
/// two adjacent cell tensors and `grad_f` the corrected face gradient.
pub fn tensor_divergence(b: &[Mat2], psi: &[f64], m: &Mesh) -> ScalarField {
    check_cells(psi, m);
    let gf = corrected_face_gradient(psi, m);
    let mut out = alloc::vec![0.0; m.n_cells()];
    for (face, &g) in m.faces().iter().zip(gf.iter()) {
        let bf = (b[face.owner] + b[face.neighbour]) * 0.5;
        let flux = face.area.dot(bf.mul_vec(g));
        out[face.owner] += flux;
        out[face.neighbour] -= flux;
    }
    for (o, v) in out.iter_mut().zip(m.volumes()) {
        *o /= v;
    }
    ScalarField(out)
}

/// Gradient at every corner from the two-point gradients of the four faces
/// meeting there: `(sum n n^T)^-1 sum n g_n`, which on the uniform grid is the
/// mean of the two east-face gradients in x and of the two north-face
/// gradients in y.
pub fn corner_gradient(phi: &[f64], m: &Mesh) -> VectorField {
    let gn = face_normal_gradient(phi, m);
    let faces = m.faces();
    let values = (0..m.n_corners())
        .map(|k| {
            let mut nn = Mat2::ZERO;
            let mut rhs = Vec2::ZERO;
            for f in m.corner_faces(k) {
                let s = faces[f].unit_normal();
                nn += s.outer(s);
                rhs += s * gn[f];
            }
            // the four normals of a valid quad neighbourhood always span the plane
            nn.inverse().map(|inv| inv.mul_vec(rhs)).unwrap_or(Vec2::ZERO)
        })
        .collect();
    VectorField { location: Location::Corner, values }
}

/// Least-squares gradient over centre-to-centre displacements on a (moved) mesh:
/// `(sum_f d_f d_f^T)^-1 sum_f d_f (g_N - g_i)`.
pub fn physical_gradient_ls(g: &[f64], pm: &Mesh) -> Result<VectorField> {
    if g.len() != pm.n_cells() {
        return Err(Error::LengthMismatch { expected: pm.n_cells(), found: g.len() });
    }
    let mut normal = alloc::vec![Mat2::ZERO; pm.n_cells()];
    let mut rhs = alloc::vec![Vec2::ZERO; pm.n_cells()];
    for face in pm.faces() {
        let d = face.delta;
        let dd = d.outer(d);
        let dg = g[face.neighbour] - g[face.owner];
        // seen from the neighbour, d and the difference both flip sign
        normal[face.owner] += dd;
        normal[face.neighbour] += dd;
        rhs[face.owner] += d * dg;
        rhs[face.neighbour] += d * dg;
    }
    let mut values = Vec::with_capacity(pm.n_cells());
    for (c, (nm, r)) in normal.iter().zip(&rhs).enumerate() {
        let inv = nm.inverse().ok_or(Error::SingularGeometry { cell: c })?;
        values.push(inv.mul_vec(*r));
    }
    Ok(VectorField { location: Location::Cell, values })
}
