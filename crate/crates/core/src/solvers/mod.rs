//! Outer iterations for `m(xi + grad phi) det(I + H(phi)) = c`.
//!
//! Every scheme solves for an increment `dphi` with `phi <- phi + dphi`:
//!
//! | scheme | operator on `dphi`                         | right-hand side            |
//! |--------|--------------------------------------------|----------------------------|
//! | FP     | `gamma lap`                                | `c/m - det(I+H)`           |
//! | AFP    | `div(B grad)`                              | `c/m - det(I+H)`           |
//! | Newton | `delta + div(B grad) - div(u .) + . div u` | `c/m - det(I+H)`           |
//! | PMA    | `I - gamma lap`                            | `q - mean(q)`              |
//!
//! with `B` the regularised cofactor matrix, `u = grad_x(c/m)` on the physical
//! mesh and `q = dt sqrt(m det(I+H))`.

mod algebra;
mod steps;

use alloc::string::String;
use alloc::vec::Vec;
use core::fmt;

pub use algebra::{
    cofactor2d, compute_c, det_linearisation, equidistribution, jacobian_det, regularise,
};
pub use steps::{afp_step, fp_step, newton_step, pma_step, StepReport};

use crate::error::{Error, Result};
use crate::fvops::{corner_gradient, hessian, ScalarField, TensorField};
use crate::linalg::LinSolveConfig;
use crate::mesh::{Mesh, MeshPair};
use crate::monitor::MonitorSpec;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Algorithm {
    Fp,
    Afp,
    Newton,
    Pma,
}

impl Algorithm {
    pub const ALL: [Algorithm; 4] = [Algorithm::Fp, Algorithm::Afp, Algorithm::Newton, Algorithm::Pma];

    pub fn name(self) -> &'static str {
        match self {
            Algorithm::Fp => "fp",
            Algorithm::Afp => "afp",
            Algorithm::Newton => "newton",
            Algorithm::Pma => "pma",
        }
    }

    pub fn from_name(s: &str) -> Option<Algorithm> {
        Algorithm::ALL.into_iter().find(|a| a.name() == s)
    }
}

impl fmt::Display for Algorithm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolverConfig {
    pub algorithm: Algorithm,
    /// FP under-relaxation.
    pub fp_gamma: f64,
    /// PMA smoothing coefficient.
    pub pma_gamma: f64,
    /// PMA pseudo-time step.
    pub pma_dt: f64,
    /// Newton's `delta = newton_delta_scale / min V`.
    pub newton_delta_scale: f64,
    /// Floor on the cofactor eigenvalues after regularisation.
    pub shift_epsilon: f64,
    pub equi_tol: f64,
    pub max_outer: usize,
    /// A run fails once the equidistribution exceeds this multiple of its
    /// initial value.
    pub divergence_factor: f64,
    /// Consecutive iterates with a folded physical mesh that a run may pass
    /// through before it is declared tangled. Full Newton steps from the
    /// uniform mesh typically fold a few cells once before recovering.
    pub tangle_tolerance: usize,
    pub lin: LinSolveConfig,
    pub pin_cell: usize,
    /// Value of the potential at the pinned cell; also the initial constant potential.
    pub pin_value: f64,
    /// Newton: use the analytic monitor gradient for the advection velocity.
    pub analytic_gradient: bool,
}

impl Default for SolverConfig {
    fn default() -> Self {
        SolverConfig {
            algorithm: Algorithm::Afp,
            fp_gamma: 1.0,
            pma_gamma: 0.7,
            pma_dt: 0.2,
            newton_delta_scale: 1e-4,
            shift_epsilon: 1e-5,
            equi_tol: 1e-8,
            max_outer: 2000,
            divergence_factor: 1e3,
            tangle_tolerance: 3,
            lin: LinSolveConfig::default(),
            pin_cell: 0,
            pin_value: 0.0,
            analytic_gradient: false,
        }
    }
}

impl SolverConfig {
    pub fn with_algorithm(algorithm: Algorithm) -> Self {
        SolverConfig { algorithm, ..Default::default() }
    }

    pub fn validate(&self) -> Result<()> {
        self.lin.validate()?;
        let positive = |v: f64| v.is_finite() && v > 0.0;
        if !positive(self.fp_gamma) {
            return Err(Error::InvalidConfig("fp_gamma must be positive"));
        }
        if !positive(self.pma_gamma) || !positive(self.pma_dt) {
            return Err(Error::InvalidConfig("pma_gamma and pma_dt must be positive"));
        }
        if !(self.newton_delta_scale.is_finite() && self.newton_delta_scale >= 0.0) {
            return Err(Error::InvalidConfig("newton_delta_scale must be non-negative"));
        }
        if !positive(self.shift_epsilon) {
            return Err(Error::InvalidConfig("shift_epsilon must be positive"));
        }
        if !positive(self.equi_tol) {
            return Err(Error::InvalidConfig("equi_tol must be positive"));
        }
        if !(self.divergence_factor > 1.0) {
            return Err(Error::InvalidConfig("divergence_factor must exceed 1"));
        }
        if !self.pin_value.is_finite() {
            return Err(Error::InvalidConfig("pin_value must be finite"));
        }
        Ok(())
    }

    /// Free parameters of the selected scheme, e.g. `gamma=2.8`.
    pub fn params(&self) -> String {
        match self.algorithm {
            Algorithm::Fp => alloc::format!("gamma={}", self.fp_gamma),
            Algorithm::Afp => String::new(),
            Algorithm::Newton => alloc::format!("delta_scale={}", self.newton_delta_scale),
            Algorithm::Pma => alloc::format!("gamma={};dt={}", self.pma_gamma, self.pma_dt),
        }
    }
}

/// One row of the convergence history.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConvergenceRecord {
    pub iteration: usize,
    /// Equidistribution measure of the iterate entering this iteration.
    pub equi: f64,
    /// `max |m det(I+H) - c|`.
    pub max_residual: f64,
    pub min_vol: f64,
    /// Smallest eigenvalue of `I + H` (equal to that of its cofactor matrix).
    pub min_eig: f64,
    /// Largest regularisation shift applied by this iteration's step (0 if none).
    pub gamma_max: f64,
    /// Krylov iterations spent by this iteration's step.
    pub inner_iters: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolverState {
    pub phi: ScalarField,
    pub mesh_pair: MeshPair,
    pub iteration: usize,
    pub history: Vec<ConvergenceRecord>,
    /// Last increment; warm start for the next inner solve.
    pub last_update: ScalarField,
}

impl SolverState {
    pub fn new(n: usize, pin_value: f64) -> Result<SolverState> {
        let mesh = Mesh::uniform(n)?;
        let nc = mesh.n_cells();
        Ok(SolverState {
            phi: ScalarField::constant(nc, pin_value),
            mesh_pair: MeshPair::new(mesh),
            iteration: 0,
            history: Vec::new(),
            last_update: ScalarField::zeros(nc),
        })
    }

    pub fn computational(&self) -> &Mesh {
        &self.mesh_pair.computational
    }

    pub fn physical(&self) -> &Mesh {
        &self.mesh_pair.physical
    }

    /// Applies `phi <- phi + dphi` and moves the physical mesh to match.
    pub fn advance(&mut self, dphi: ScalarField) -> Result<()> {
        for (p, d) in self.phi.iter_mut().zip(dphi.iter()) {
            *p += d;
        }
        let grad = corner_gradient(&self.phi, &self.mesh_pair.computational);
        self.mesh_pair.update_physical(&grad)?;
        self.last_update = dphi;
        self.iteration += 1;
        Ok(())
    }

    /// Monitor, Hessian and misfit of the current iterate.
    pub fn evaluate(&self, monitor: &MonitorSpec) -> Residual {
        let comp = self.computational();
        let m: Vec<f64> = self.physical().centres().iter().map(|&x| monitor.eval_periodic(x)).collect();
        let h = hessian(&self.phi, comp);
        let det = jacobian_det(&h);
        let c = compute_c(comp.volumes(), &det, &m);
        let equi = equidistribution(&m, &det);
        let max_residual = m.iter().zip(&det).map(|(m, d)| (m * d - c).abs()).fold(0.0, f64::max);
        let min_eig = h
            .iter()
            .map(|h| (crate::geom::Mat2::IDENTITY + *h).sym_eigenvalues().0)
            .fold(f64::INFINITY, f64::min);
        Residual { m: ScalarField(m), hessian: h, det: ScalarField(det), c, equi, max_residual, min_eig }
    }
}

/// Misfit of the Monge-Ampere equation at one iterate.
#[derive(Debug, Clone, PartialEq)]
pub struct Residual {
    /// Monitor at the physical cell centres.
    pub m: ScalarField,
    pub hessian: TensorField,
    pub det: ScalarField,
    pub c: f64,
    pub equi: f64,
    pub max_residual: f64,
    pub min_eig: f64,
}

impl Residual {
    /// `c/m - det(I+H)`; volume-weighted mean-zero by the choice of `c`.
    pub fn source(&self) -> ScalarField {
        ScalarField(self.m.iter().zip(self.det.iter()).map(|(m, d)| self.c / m - d).collect())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Termination {
    Converged,
    MaxIterations,
    /// Equidistribution grew past the divergence threshold or became non-finite.
    Diverged,
    Tangled { cell: usize, min_triangle_area: f64 },
    SolverFailure(Error),
}

impl Termination {
    pub fn converged(&self) -> bool {
        matches!(self, Termination::Converged)
    }
}

impl fmt::Display for Termination {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Termination::Converged => f.write_str("converged"),
            Termination::MaxIterations => f.write_str("maximum outer iterations reached"),
            Termination::Diverged => f.write_str("diverged"),
            Termination::Tangled { cell, min_triangle_area } => {
                write!(f, "mesh tangled at cell {cell} (triangle area {min_triangle_area:e})")
            }
            Termination::SolverFailure(e) => write!(f, "solver failure: {e}"),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunOutcome {
    pub algorithm: Algorithm,
    pub state: SolverState,
    pub termination: Termination,
}

impl RunOutcome {
    pub fn converged(&self) -> bool {
        self.termination.converged()
    }

    /// Outer steps taken.
    pub fn iterations(&self) -> usize {
        self.state.iteration
    }

    pub fn history(&self) -> &[ConvergenceRecord] {
        &self.state.history
    }

    pub fn final_equi(&self) -> f64 {
        self.state.history.last().map_or(f64::NAN, |r| r.equi)
    }

    pub fn mesh_pair(&self) -> &MeshPair {
        &self.state.mesh_pair
    }
}

/// Iterates `cfg.algorithm` from `phi = pin_value` on an `n x n` mesh until
/// the equidistribution drops below `cfg.equi_tol`.
pub fn run(cfg: &SolverConfig, monitor: &MonitorSpec, n: usize) -> Result<RunOutcome> {
    run_observed(cfg, monitor, n, |_| {})
}

/// [`run`] calling `observer` with each record as it is produced.
pub fn run_observed(
    cfg: &SolverConfig,
    monitor: &MonitorSpec,
    n: usize,
    mut observer: impl FnMut(&ConvergenceRecord),
) -> Result<RunOutcome> {
    cfg.validate()?;
    monitor.validate()?;
    let state = SolverState::new(n, cfg.pin_value)?;
    if cfg.pin_cell >= state.computational().n_cells() {
        return Err(Error::InvalidIndex { index: cfg.pin_cell, len: state.computational().n_cells() });
    }
    let mut state = state;
    let mut initial_equi = None;
    let mut tangled_run = 0;
    let termination = loop {
        let res = state.evaluate(monitor);
        let mut record = ConvergenceRecord {
            iteration: state.iteration,
            equi: res.equi,
            max_residual: res.max_residual,
            min_vol: state.physical().min_volume(),
            min_eig: res.min_eig,
            gamma_max: 0.0,
            inner_iters: 0,
        };
        let tangle = state.physical().tangling_check();
        tangled_run = if tangle.tangled { tangled_run + 1 } else { 0 };
        let e0 = *initial_equi.get_or_insert(res.equi);
        let verdict = if !res.equi.is_finite() || res.equi > cfg.divergence_factor * e0 {
            Some(Termination::Diverged)
        } else if tangled_run > cfg.tangle_tolerance {
            Some(Termination::Tangled { cell: tangle.worst_cell, min_triangle_area: tangle.min_triangle_area })
        } else if res.equi < cfg.equi_tol && !tangle.tangled {
            Some(Termination::Converged)
        } else if state.iteration >= cfg.max_outer {
            Some(Termination::MaxIterations)
        } else {
            None
        };
        if let Some(t) = verdict {
            observer(&record);
            state.history.push(record);
            break t;
        }
        let step = match cfg.algorithm {
            Algorithm::Fp => fp_step(&mut state, cfg, &res),
            Algorithm::Afp => afp_step(&mut state, cfg, &res),
            Algorithm::Newton => newton_step(&mut state, cfg, monitor, &res),
            Algorithm::Pma => pma_step(&mut state, cfg, &res),
        };
        match step {
            Ok(report) => {
                record.gamma_max = report.gamma_max;
                record.inner_iters = report.inner_iters;
                observer(&record);
                state.history.push(record);
            }
            Err(e) => {
                observer(&record);
                state.history.push(record);
                break match e {
                    Error::Tangled { cell, min_triangle_area } => Termination::Tangled { cell, min_triangle_area },
                    e => Termination::SolverFailure(e),
                };
            }
        }
    };
    Ok(RunOutcome { algorithm: cfg.algorithm, state, termination })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn names_round_trip() {
        for a in Algorithm::ALL {
            assert_eq!(Algorithm::from_name(a.name()), Some(a));
        }
        assert_eq!(Algorithm::from_name("gauss"), None);
    }

    #[test]
    fn bad_config_is_rejected() {
        let cfg = SolverConfig { fp_gamma: 0.0, ..Default::default() };
        assert!(run(&cfg, &MonitorSpec::RING, 8).is_err());
        let cfg = SolverConfig { pin_cell: 64, ..Default::default() };
        assert!(matches!(run(&cfg, &MonitorSpec::RING, 8), Err(Error::InvalidIndex { .. })));
    }

    #[test]
    fn uniform_monitor_is_converged_at_start() {
        for a in Algorithm::ALL {
            let out = run(&SolverConfig::with_algorithm(a), &MonitorSpec::UNIFORM, 10).unwrap();
            assert!(out.converged());
            assert_eq!(out.iterations(), 0);
            assert_eq!(out.final_equi(), 0.0);
        }
    }

    #[test]
    fn initial_record_is_the_monitor_variation() {
        let cfg = SolverConfig { max_outer: 0, ..Default::default() };
        let out = run(&cfg, &MonitorSpec::RING, 12).unwrap();
        assert_eq!(out.termination, Termination::MaxIterations);
        let mesh = Mesh::uniform(12).unwrap();
        let m = MonitorSpec::RING.eval_all(mesh.centres());
        let expect = equidistribution(&m, &alloc::vec![1.0; 144]);
        assert_eq!(out.history().len(), 1);
        assert!((out.final_equi() - expect).abs() < 1e-14);
    }

    #[test]
    fn history_has_one_record_per_iteration() {
        let cfg = SolverConfig { max_outer: 3, ..Default::default() };
        let out = run(&cfg, &MonitorSpec::BELL, 16).unwrap();
        assert_eq!(out.iterations(), 3);
        assert_eq!(out.history().len(), 4);
        for (k, r) in out.history().iter().enumerate() {
            assert_eq!(r.iteration, k);
        }
    }

    #[test]
    fn afp_reduces_misfit() {
        let cfg = SolverConfig { max_outer: 4, ..Default::default() };
        let out = run(&cfg, &MonitorSpec::RING, 24).unwrap();
        let h = out.history();
        assert!(h[4].equi < 0.5 * h[0].equi, "{:?}", h);
    }
}
