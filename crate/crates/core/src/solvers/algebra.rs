//! Pointwise algebra shared by the outer iterations.

use alloc::vec::Vec;

use crate::fvops::{hessian, TensorField};
use crate::geom::Mat2;
use crate::mesh::Mesh;

/// `det(I + H)` per cell.
pub fn jacobian_det(h: &[Mat2]) -> Vec<f64> {
    h.iter().map(|h| (Mat2::IDENTITY + *h).det()).collect()
}

/// The constant making `c/m - det(I+H)` volume-weighted mean-zero:
/// `c = sum V det / sum V/m`.
pub fn compute_c(volumes: &[f64], det: &[f64], m: &[f64]) -> f64 {
    let mass: f64 = volumes.iter().zip(det).map(|(v, d)| v * d).sum();
    let inv: f64 = volumes.iter().zip(m).map(|(v, m)| v / m).sum();
    mass / inv
}

/// Coefficient of variation of `m det` over cells (population, unweighted).
/// Infinite when the mean is not positive, i.e. the map has folded over.
pub fn equidistribution(m: &[f64], det: &[f64]) -> f64 {
    let n = m.len() as f64;
    let mean = m.iter().zip(det).map(|(a, b)| a * b).sum::<f64>() / n;
    if !(mean > 0.0) {
        return f64::INFINITY;
    }
    let var = m
        .iter()
        .zip(det)
        .map(|(a, b)| {
            let e = a * b - mean;
            e * e
        })
        .sum::<f64>()
        / n;
    libm::sqrt(var) / mean
}

/// Cofactor matrix of `I + H`: `[[1 + Hyy, -Hxy], [-Hxy, 1 + Hxx]]`.
pub fn cofactor2d(h: &[Mat2]) -> TensorField {
    TensorField(
        h.iter()
            .map(|h| Mat2::new(1.0 + h.yy, -h.xy, -h.yx, 1.0 + h.xx))
            .collect(),
    )
}

/// Shifts each cell tensor by `gamma I` so its smallest eigenvalue is at least
/// `shift_epsilon`; `gamma = 0` where the tensor is already positive definite.
pub fn regularise(a: &[Mat2], shift_epsilon: f64) -> (TensorField, Vec<f64>) {
    let mut gamma = Vec::with_capacity(a.len());
    let b = a
        .iter()
        .map(|a| {
            let (lmin, _) = a.sym_eigenvalues();
            let g = if lmin > 0.0 { 0.0 } else { shift_epsilon - lmin };
            gamma.push(g);
            *a + Mat2::IDENTITY * g
        })
        .collect();
    (TensorField(b), gamma)
}

/// Derivative of `det(I + H(phi))` in the direction `psi`: `A : H(psi)`.
///
/// Because the discrete Hessian is linear in `phi`, this is exact:
/// `det(I+H(phi+t psi)) = det(I+H(phi)) + t A:H(psi) + t^2 det H(psi)`.
pub fn det_linearisation(a: &[Mat2], psi: &[f64], m: &Mesh) -> Vec<f64> {
    hessian(psi, m)
        .iter()
        .zip(a)
        .map(|(h, a)| a.contract(h))
        .collect()
}
