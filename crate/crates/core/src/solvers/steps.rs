use alloc::vec::Vec;

use super::algebra::{cofactor2d, regularise};
use super::{Residual, SolverConfig, SolverState};
use crate::error::Result;
use crate::fvops::{physical_gradient_ls, ScalarField};
use crate::geom::Vec2;
use crate::linalg::{assemble_helmholtz, assemble_poisson, pin_reference, solve, TensorOperator};
use crate::monitor::MonitorSpec;

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct StepReport {
    pub gamma_max: f64,
    pub inner_iters: usize,
}

fn max_of(v: &[f64]) -> f64 {
    v.iter().copied().fold(0.0, f64::max)
}

/// Under-relaxed fixed point: `gamma lap(dphi) = c/m - det(I+H)`.
pub fn fp_step(state: &mut SolverState, cfg: &SolverConfig, res: &Residual) -> Result<StepReport> {
    let comp = state.computational();
    let mut sys = pin_reference(assemble_poisson(comp, cfg.fp_gamma), cfg.pin_cell, 0.0)?;
    sys.rhs = res.source().0;
    let sol = solve(&sys, &cfg.lin, &state.last_update)?;
    state.advance(ScalarField(sol.x))?;
    Ok(StepReport { gamma_max: 0.0, inner_iters: sol.iterations })
}

/// Adaptive fixed point: `div(B grad dphi) = c/m - det(I+H)` with `B` the
/// eigenvalue-shifted cofactor matrix of `I + H`.
pub fn afp_step(state: &mut SolverState, cfg: &SolverConfig, res: &Residual) -> Result<StepReport> {
    let a = cofactor2d(&res.hessian);
    let (b, gamma) = regularise(&a, cfg.shift_epsilon);
    let op = TensorOperator::diffusion(state.computational(), &b);
    let rep = op.solve(&res.source(), &cfg.lin, Some((cfg.pin_cell, 0.0)), Some(&state.last_update))?;
    state.advance(rep.solution)?;
    Ok(StepReport { gamma_max: max_of(&gamma), inner_iters: rep.inner_iterations })
}

/// `grad_x(c/m)` at the physical cell centres.
pub fn advection_velocity(
    state: &SolverState,
    monitor: &MonitorSpec,
    res: &Residual,
    analytic: bool,
) -> Result<Vec<Vec2>> {
    let phys = state.physical();
    if analytic {
        Ok(phys
            .centres()
            .iter()
            .zip(res.m.iter())
            .map(|(&x, &m)| monitor.grad_periodic(x) * (-res.c / (m * m)))
            .collect())
    } else {
        let g: Vec<f64> = res.m.iter().map(|m| res.c / m).collect();
        Ok(physical_gradient_ls(&g, phys)?.values)
    }
}

/// Newton: `delta dphi + div(B grad dphi) - u . grad dphi = c/m - det(I+H)`,
/// with the advection term in conservative form
/// `div(u dphi) - dphi div(u)` and `u = grad_x(c/m)`.
pub fn newton_step(
    state: &mut SolverState,
    cfg: &SolverConfig,
    monitor: &MonitorSpec,
    res: &Residual,
) -> Result<StepReport> {
    let u: Vec<Vec2> = advection_velocity(state, monitor, res, cfg.analytic_gradient)?
        .into_iter()
        .map(|v| -v)
        .collect();
    let a = cofactor2d(&res.hessian);
    let (b, gamma) = regularise(&a, cfg.shift_epsilon);
    let comp = state.computational();
    let op = TensorOperator {
        mesh: comp,
        tensor: &b,
        diffusion_sign: 1.0,
        shift: cfg.newton_delta_scale / comp.min_volume(),
        advection: Some(&u),
    };
    let rep = op.solve(&res.source(), &cfg.lin, None, Some(&state.last_update))?;
    state.advance(rep.solution)?;
    Ok(StepReport { gamma_max: max_of(&gamma), inner_iters: rep.inner_iterations })
}

/// Parabolic relaxation: `(I - gamma lap) dphi = q - mean(q)` with
/// `q = dt sqrt(m det(I+H))`.
///
/// The root is taken sign-preserving so a locally folded iterate still
/// yields a finite update.
pub fn pma_step(state: &mut SolverState, cfg: &SolverConfig, res: &Residual) -> Result<StepReport> {
    let comp = state.computational();
    let q = ScalarField(
        res.m
            .iter()
            .zip(res.det.iter())
            .map(|(m, d)| {
                let v = m * d;
                cfg.pma_dt * libm::copysign(libm::sqrt(v.abs()), v)
            })
            .collect(),
    );
    let mean = q.weighted_mean(comp.volumes());
    let mut sys = assemble_helmholtz(comp, cfg.pma_gamma);
    sys.rhs = q.iter().map(|v| v - mean).collect();
    let sol = solve(&sys, &cfg.lin, &state.last_update)?;
    state.advance(ScalarField(sol.x))?;
    Ok(StepReport { gamma_max: 0.0, inner_iters: sol.iterations })
}
