//! Properties of the linear and nonlinear solvers on small end-to-end problems.

use std::f64::consts::PI;

use ma_mesh_core::fvops::cell_gradient;
use ma_mesh_core::linalg::{assemble_poisson, pin_reference, solve, LinSolveConfig, TensorOperator};
use ma_mesh_core::{run, Algorithm, Mat2, Mesh, MonitorSpec, ScalarField, SolverConfig, SolverState, Vec2};

// Monitor variation on the uniform 60 x 60 grid, computed independently with
// numpy from the closed form at the cell centres.
const RING_EQUI_60: f64 = 1.0619565138517773;
const BELL_EQUI_60: f64 = 2.7475769215325716;

#[test]
fn initial_equidistribution_matches_reference() {
    for (spec, expect) in [(MonitorSpec::RING, RING_EQUI_60), (MonitorSpec::BELL, BELL_EQUI_60)] {
        let s = SolverState::new(60, 0.0).unwrap();
        let e = s.evaluate(&spec).equi;
        assert!((e - expect).abs() <= 1e-12 * expect, "{e} vs {expect}");
    }
}

#[test]
fn pin_choice_does_not_change_the_gradient() {
    let n = 40;
    let m = Mesh::uniform(n).unwrap();
    let rhs = ScalarField::from_fn(&m, |p| (2.0 * PI * p.x).sin() * (4.0 * PI * p.y).cos() + (2.0 * PI * p.y).sin());
    // tight solves, so only the discrete problem is compared and not solver error
    let cfg = LinSolveConfig { abs_tol: 1e-14, rel_tol: 1e-13, ..Default::default() };
    let grads: Vec<_> = [(0usize, 0.0), (n * n / 2 + 7, 2.5), (n * n - 1, -40.0)]
        .iter()
        .map(|&(cell, value)| {
            let mut sys = pin_reference(assemble_poisson(&m, 1.0), cell, value).unwrap();
            sys.rhs = rhs.0.clone();
            let x = solve(&sys, &cfg, &vec![0.0; n * n]).unwrap().x;
            assert!((x[cell] - value).abs() < 1e-12);
            cell_gradient(&x, &m)
        })
        .collect();
    for g in &grads[1..] {
        let d = g.iter().zip(grads[0].iter()).map(|(a, b)| (*a - *b).norm()).fold(0.0, f64::max);
        assert!(d <= 1e-8, "{d}");
    }
}

#[test]
fn conservative_advection_approaches_advective_form() {
    let k = 2.0 * PI;
    let mut errs = Vec::new();
    for n in [16usize, 32, 64] {
        let m = Mesh::uniform(n).unwrap();
        let u: Vec<Vec2> = m.centres().iter().map(|p| Vec2::new((k * p.y).sin(), 0.5 * (k * p.x).cos())).collect();
        let psi = ScalarField::from_fn(&m, |p| (k * p.x).sin() * (k * p.y).cos());
        let zero = vec![Mat2::ZERO; n * n];
        let op = TensorOperator { mesh: &m, tensor: &zero, diffusion_sign: 0.0, shift: 0.0, advection: Some(&u) };
        let got = op.apply_full(&psi);
        let e = m
            .centres()
            .iter()
            .zip(&u)
            .zip(&got)
            .map(|((p, u), g)| {
                let grad = Vec2::new(k * (k * p.x).cos() * (k * p.y).cos(), -k * (k * p.x).sin() * (k * p.y).sin());
                (g - u.dot(grad)).abs()
            })
            .fold(0.0, f64::max);
        errs.push(e);
    }
    assert!(errs[1] < errs[0] / 3.0 && errs[2] < errs[1] / 3.0, "{errs:?}");
}

#[test]
fn more_corrector_sweeps_barely_change_afp() {
    let base = SolverConfig::with_algorithm(Algorithm::Afp);
    let mut more = base;
    more.lin.correctors = 5;
    let a = run(&base, &MonitorSpec::RING, 60).unwrap();
    let b = run(&more, &MonitorSpec::RING, 60).unwrap();
    assert!(a.converged() && b.converged());
    assert!(a.iterations().abs_diff(b.iterations()) <= 1, "{} vs {}", a.iterations(), b.iterations());
}

#[test]
fn equidistribution_stays_positive_until_convergence() {
    for alg in Algorithm::ALL {
        let out = run(&SolverConfig::with_algorithm(alg), &MonitorSpec::RING, 30).unwrap();
        assert!(out.converged(), "{alg}: {}", out.termination);
        let hist = out.history();
        let (last, before) = hist.split_last().unwrap();
        assert!(before.iter().all(|r| r.equi > 0.0 && r.equi.is_finite()));
        assert!(last.equi < 1e-8);
        assert_eq!(hist.len(), out.iterations() + 1);
    }
}

#[test]
fn reruns_are_bit_identical() {
    let cfg = SolverConfig::with_algorithm(Algorithm::Newton);
    let a = run(&cfg, &MonitorSpec::BELL, 24).unwrap();
    let b = run(&cfg, &MonitorSpec::BELL, 24).unwrap();
    assert_eq!(a.history(), b.history());
    assert_eq!(a.mesh_pair(), b.mesh_pair());
}
