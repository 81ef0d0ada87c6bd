//! Tensor-coefficient diffusion (plus optional advection and shift) with the
//! face flux split into an implicit normal part and an explicit tangential
//! part, iterated by deferred correction.
//!
//! The operator is
//!
//! ```text
//! L(psi) = shift * psi + sign * div(B grad psi) + [div(u psi) - psi div(u)]
//! ```
//!
//! with `B_f` the arithmetic mean of the two cell tensors. The normal flux
//! `|S_f| (n.B_f n) (psi_N - psi_P) / |d_f|` goes into the matrix; the
//! tangential remainder `S_f . B_f (g_f - (g_f.n) n)`, with `g_f` the
//! interpolated cell gradient, is lagged to the right-hand side.

use alloc::vec::Vec;

use super::{pin_reference, solve, LinSolveConfig, SparseSystem};
use crate::error::{Error, Result};
use crate::fvops::{cell_gradient, tensor_divergence, ScalarField};
use crate::geom::{Mat2, Vec2};
use crate::linalg::sparse::CsrMatrix;
use crate::mesh::Mesh;

#[derive(Debug, Clone, Copy)]
pub struct TensorOperator<'a> {
    pub mesh: &'a Mesh,
    pub tensor: &'a [Mat2],
    /// `+1` for `div(B grad)`, `-1` for `-div(B grad)`.
    pub diffusion_sign: f64,
    pub shift: f64,
    /// Cell-centred advection velocity.
    pub advection: Option<&'a [Vec2]>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TensorSolveReport {
    pub solution: ScalarField,
    /// Krylov iterations summed over all sweeps.
    pub inner_iterations: usize,
    /// `|sum_i V_i rhs_i|` removed from an incompatible right-hand side (0 if none).
    pub projection: f64,
}

/// Volume sums above this are projected out of a pure-diffusion right-hand side.
pub const COMPATIBILITY_TOL: f64 = 1e-10;

impl<'a> TensorOperator<'a> {
    pub fn diffusion(mesh: &'a Mesh, tensor: &'a [Mat2]) -> Self {
        TensorOperator { mesh, tensor, diffusion_sign: 1.0, shift: 0.0, advection: None }
    }

    fn is_pure_diffusion(&self) -> bool {
        self.shift == 0.0 && self.advection.is_none()
    }

    /// Implicit (normal-flux) part as a sparse system.
    pub fn assemble_implicit(&self) -> Result<SparseSystem> {
        let m = self.mesh;
        assert_eq!(self.tensor.len(), m.n_cells(), "tensor field does not live on this mesh");
        let (mut matrix, slots) = CsrMatrix::with_mesh_pattern(m);
        let vols = m.volumes();
        {
            let vals = matrix.values_mut();
            for (f, (face, s)) in m.faces().iter().zip(&slots).enumerate() {
                let (o, nb) = (face.owner, face.neighbour);
                let (vo, vn) = (vols[o], vols[nb]);
                let bf = (self.tensor[o] + self.tensor[nb]) * 0.5;
                let n = face.unit_normal();
                let kn = n.dot(bf.mul_vec(n));
                if !(kn > 0.0) {
                    return Err(Error::EllipticityLost { face: f, coefficient: kn });
                }
                let k = self.diffusion_sign * kn * face.area.norm() / face.delta.norm();
                vals[s[0]] -= k / vo;
                vals[s[1]] += k / vo;
                vals[s[2]] += k / vn;
                vals[s[3]] -= k / vn;
                if let Some(u) = self.advection {
                    let flux = face.interpolate(u[o], u[nb]).dot(face.area);
                    let w = face.owner_weight;
                    let a = flux * (1.0 - w) / vo;
                    let b = flux * w / vn;
                    vals[s[0]] -= a;
                    vals[s[1]] += a;
                    vals[s[2]] -= b;
                    vals[s[3]] += b;
                }
            }
        }
        if self.shift != 0.0 {
            matrix.add_diagonal(&alloc::vec![self.shift; m.n_cells()]);
        }
        Ok(SparseSystem::new(matrix))
    }

    /// Lagged tangential contribution `sign * (1/V) sum_f S_f . B_f t_f`.
    pub fn explicit_tangential(&self, psi: &[f64]) -> Vec<f64> {
        let m = self.mesh;
        let grad = cell_gradient(psi, m);
        let mut out = alloc::vec![0.0; m.n_cells()];
        for face in m.faces() {
            let (o, nb) = (face.owner, face.neighbour);
            let g = face.interpolate(grad[o], grad[nb]);
            let n = face.unit_normal();
            let t = g - n * g.dot(n);
            let bf = (self.tensor[o] + self.tensor[nb]) * 0.5;
            let flux = self.diffusion_sign * face.area.dot(bf.mul_vec(t));
            out[o] += flux;
            out[nb] -= flux;
        }
        for (v, vol) in out.iter_mut().zip(m.volumes()) {
            *v /= vol;
        }
        out
    }

    /// The complete operator `L(psi)` with the corrected face gradient.
    pub fn apply_full(&self, psi: &[f64]) -> Vec<f64> {
        let m = self.mesh;
        let mut out = tensor_divergence(self.tensor, psi, m).0;
        for v in out.iter_mut() {
            *v *= self.diffusion_sign;
        }
        if let Some(u) = self.advection {
            let vols = m.volumes();
            for face in m.faces() {
                let (o, nb) = (face.owner, face.neighbour);
                let flux = face.interpolate(u[o], u[nb]).dot(face.area);
                let jump = psi[nb] - psi[o];
                out[o] += flux * (1.0 - face.owner_weight) * jump / vols[o];
                out[nb] += flux * face.owner_weight * jump / vols[nb];
            }
        }
        for (v, p) in out.iter_mut().zip(psi) {
            *v += self.shift * p;
        }
        out
    }

    /// Solves `L(psi) = rhs` with `cfg.correctors` deferred-correction sweeps.
    /// `guess` warm-starts the first inner Krylov solve.
    ///
    /// Pure diffusion is singular: its right-hand side is projected to zero
    /// volume-weighted mean when needed and `pin` fixes the free constant.
    pub fn solve(
        &self,
        rhs: &[f64],
        cfg: &LinSolveConfig,
        pin: Option<(usize, f64)>,
        guess: Option<&[f64]>,
    ) -> Result<TensorSolveReport> {
        cfg.validate()?;
        let m = self.mesh;
        let nc = m.n_cells();
        if rhs.len() != nc {
            return Err(Error::LengthMismatch { expected: nc, found: rhs.len() });
        }
        let mut rhs = rhs.to_vec();
        let mut projection = 0.0;
        if self.is_pure_diffusion() {
            let vols = m.volumes();
            let total: f64 = rhs.iter().zip(vols).map(|(r, v)| r * v).sum();
            if total.abs() > COMPATIBILITY_TOL {
                let mean = total / m.total_volume();
                rhs.iter_mut().for_each(|r| *r -= mean);
                projection = total.abs();
            }
        }
        let mut sys = self.assemble_implicit()?;
        if let Some((cell, value)) = pin {
            sys = pin_reference(sys, cell, value)?;
        }
        let mut psi = match guess {
            Some(g) if g.len() == nc => g.to_vec(),
            Some(g) => return Err(Error::LengthMismatch { expected: nc, found: g.len() }),
            None => alloc::vec![0.0; nc],
        };
        let mut inner = 0;
        for sweep in 0..cfg.correctors {
            // the lag starts from zero: the guess only seeds the Krylov solve,
            // since an old update is a poor estimate of the slow tangential modes
            let lagged = if sweep == 0 {
                alloc::vec![0.0; nc]
            } else {
                self.explicit_tangential(&psi)
            };
            sys.rhs = rhs.iter().zip(&lagged).map(|(r, t)| r - t).collect();
            let sol = solve(&sys, cfg, &psi)?;
            inner += sol.iterations;
            psi = sol.x;
        }
        Ok(TensorSolveReport { solution: ScalarField(psi), inner_iterations: inner, projection })
    }
}

/// `div(B grad psi) = rhs` with the reference cell pinned.
pub fn tensor_laplacian_solve(
    b: &[Mat2],
    rhs: &[f64],
    m: &Mesh,
    cfg: &LinSolveConfig,
    pin: (usize, f64),
) -> Result<TensorSolveReport> {
    TensorOperator::diffusion(m, b).solve(rhs, cfg, Some(pin), None)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fvops::TensorField;
    use crate::linalg::assemble_poisson;
    use core::f64::consts::PI;

    fn field(m: &Mesh, f: impl Fn(f64, f64) -> f64) -> ScalarField {
        ScalarField::from_fn(m, |p| f(p.x, p.y))
    }

    #[test]
    fn identity_tensor_reduces_to_poisson() {
        let m = Mesh::uniform(20).unwrap();
        let b = TensorField::constant(m.n_cells(), Mat2::IDENTITY);
        let rhs = field(&m, |x, y| libm::cos(2.0 * PI * x) * libm::sin(4.0 * PI * y));
        let cfg = LinSolveConfig { abs_tol: 1e-14, rel_tol: 1e-13, ..Default::default() };
        let t = tensor_laplacian_solve(&b, &rhs, &m, &cfg, (0, 0.0)).unwrap();
        let mut sys = pin_reference(assemble_poisson(&m, 1.0), 0, 0.0).unwrap();
        sys.rhs = rhs.0.clone();
        let p = solve(&sys, &cfg, &alloc::vec![0.0; m.n_cells()]).unwrap();
        for (a, b) in t.solution.iter().zip(&p.x) {
            assert!((a - b).abs() < 1e-10);
        }
    }

    #[test]
    fn identity_tensor_has_no_tangential_part() {
        let m = Mesh::uniform(10).unwrap();
        let b = TensorField::constant(m.n_cells(), Mat2::IDENTITY);
        let psi = field(&m, |x, y| libm::sin(2.0 * PI * x) * libm::sin(2.0 * PI * y));
        let op = TensorOperator::diffusion(&m, &b);
        assert!(op.explicit_tangential(&psi).iter().all(|v| v.abs() < 1e-9));
    }

    #[test]
    fn implicit_plus_explicit_is_full_operator() {
        let m = Mesh::uniform(12).unwrap();
        let b: Vec<Mat2> = m
            .centres()
            .iter()
            .map(|p| Mat2::new(2.0 + p.x, 0.3 * p.y, 0.3 * p.y, 1.5))
            .collect();
        let u: Vec<Vec2> = m.centres().iter().map(|p| Vec2::new(p.y, -0.5 * p.x)).collect();
        let op = TensorOperator { mesh: &m, tensor: &b, diffusion_sign: -1.0, shift: 0.4, advection: Some(&u) };
        let psi = field(&m, |x, y| libm::sin(2.0 * PI * x) + libm::cos(2.0 * PI * (x - y)));
        let sys = op.assemble_implicit().unwrap();
        let implicit = sys.apply(&psi);
        let lagged = op.explicit_tangential(&psi);
        let full = op.apply_full(&psi);
        for i in 0..m.n_cells() {
            assert!((implicit[i] + lagged[i] - full[i]).abs() < 1e-9 * full[i].abs().max(1.0));
        }
    }

    #[test]
    fn indefinite_tensor_is_rejected() {
        let m = Mesh::uniform(6).unwrap();
        let b = TensorField::constant(m.n_cells(), Mat2::diag(-1.0, 1.0));
        let rhs = ScalarField::zeros(m.n_cells());
        let r = tensor_laplacian_solve(&b, &rhs, &m, &LinSolveConfig::default(), (0, 0.0));
        assert!(matches!(r, Err(Error::EllipticityLost { .. })));
    }

    #[test]
    fn incompatible_rhs_is_projected() {
        let m = Mesh::uniform(8).unwrap();
        let b = TensorField::constant(m.n_cells(), Mat2::IDENTITY);
        let rhs = ScalarField::constant(m.n_cells(), 0.25);
        let r = tensor_laplacian_solve(&b, &rhs, &m, &LinSolveConfig::default(), (0, 0.0)).unwrap();
        assert!((r.projection - 0.25).abs() < 1e-12);
        assert!(r.solution.max_abs() < 1e-10);
    }

    #[test]
    fn sweeps_converge_to_full_operator() {
        let m = Mesh::uniform(24).unwrap();
        let b: Vec<Mat2> = m
            .centres()
            .iter()
            .map(|p| {
                let s = 0.4 * libm::sin(2.0 * PI * p.x) * libm::cos(2.0 * PI * p.y);
                Mat2::new(1.5, s, s, 1.0)
            })
            .collect();
        let rhs = field(&m, |x, y| libm::sin(2.0 * PI * (x + y)) + libm::cos(4.0 * PI * x));
        let cfg = LinSolveConfig { correctors: 40, ..Default::default() };
        let op = TensorOperator::diffusion(&m, &b);
        let r = op.solve(&rhs, &cfg, Some((0, 0.0)), None).unwrap();
        let full = op.apply_full(&r.solution);
        let res: f64 = full
            .iter()
            .zip(rhs.iter())
            .enumerate()
            .filter(|(i, _)| *i != 0)
            .map(|(_, (a, b))| (a - b) * (a - b))
            .sum::<f64>()
            .sqrt();
        let rhs_norm = rhs.iter().map(|v| v * v).sum::<f64>().sqrt();
        assert!(res <= 10.0 * cfg.rel_tol * rhs_norm, "residual {res}");
    }
}
