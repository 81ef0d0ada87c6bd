//! Preconditioned conjugate gradients and BiCGStab.

use alloc::vec::Vec;

use super::sparse::{CsrMatrix, Ilu0};
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct KrylovOutcome {
    pub iterations: usize,
    pub initial_residual: f64,
    pub residual: f64,
}

pub(crate) enum Preconditioner {
    Ilu(Ilu0),
    Jacobi(Vec<f64>),
}

impl Preconditioner {
    pub(crate) fn for_matrix(a: &CsrMatrix) -> Preconditioner {
        match Ilu0::new(a) {
            Some(ilu) => Preconditioner::Ilu(ilu),
            None => Preconditioner::Jacobi(
                (0..a.n())
                    .map(|r| match a.diagonal(r) {
                        d if d != 0.0 => 1.0 / d,
                        _ => 1.0,
                    })
                    .collect(),
            ),
        }
    }

    fn apply(&self, r: &[f64], z: &mut [f64]) {
        match self {
            Preconditioner::Ilu(ilu) => {
                z.copy_from_slice(r);
                ilu.apply(z);
            }
            Preconditioner::Jacobi(inv) => {
                for ((zi, ri), di) in z.iter_mut().zip(r).zip(inv) {
                    *zi = ri * di;
                }
            }
        }
    }
}

#[inline]
fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

#[inline]
fn norm(a: &[f64]) -> f64 {
    libm::sqrt(dot(a, a))
}

fn residual(a: &CsrMatrix, x: &[f64], b: &[f64], r: &mut [f64]) {
    a.mul_vec_into(x, r);
    for (ri, bi) in r.iter_mut().zip(b) {
        *ri = bi - *ri;
    }
}

/// Stopping target `max(abs_tol, rel_tol * |r0|)`, raised to the level that
/// round-off in `A x - b` permits: `8 eps (|A|_inf |x0| + |b|)`. Warm-started
/// solves whose initial residual is already tiny would otherwise chase noise.
fn target(a: &CsrMatrix, x0: &[f64], b: &[f64], r0: f64, abs_tol: f64, rel_tol: f64) -> f64 {
    let a_inf = (0..a.n())
        .map(|r| a.row(r).1.iter().map(|v| v.abs()).sum::<f64>())
        .fold(0.0, f64::max);
    let floor = 8.0 * f64::EPSILON * (a_inf * norm(x0) + norm(b));
    abs_tol.max(rel_tol * r0).max(floor)
}

pub(crate) fn pcg(
    a: &CsrMatrix,
    b: &[f64],
    x: &mut [f64],
    pc: &Preconditioner,
    abs_tol: f64,
    rel_tol: f64,
    max_iter: usize,
) -> Result<KrylovOutcome> {
    let n = a.n();
    let mut r = alloc::vec![0.0; n];
    residual(a, x, b, &mut r);
    let r0 = norm(&r);
    let goal = target(a, x, b, r0, abs_tol, rel_tol);
    let mut history = Vec::new();
    history.push(r0);
    if r0 <= goal {
        return Ok(KrylovOutcome { iterations: 0, initial_residual: r0, residual: r0 });
    }
    let mut z = alloc::vec![0.0; n];
    pc.apply(&r, &mut z);
    let mut p = z.clone();
    let mut ap = alloc::vec![0.0; n];
    let mut rz = dot(&r, &z);
    for it in 1..=max_iter {
        a.mul_vec_into(&p, &mut ap);
        let pap = dot(&p, &ap);
        if pap == 0.0 || !pap.is_finite() {
            return Err(Error::SolverBreakdown { iterations: it, residual: norm(&r) });
        }
        let alpha = rz / pap;
        for i in 0..n {
            x[i] += alpha * p[i];
            r[i] -= alpha * ap[i];
        }
        let rn = norm(&r);
        history.push(rn);
        if !rn.is_finite() {
            return Err(Error::SolverBreakdown { iterations: it, residual: rn });
        }
        if rn <= goal {
            // the recursive residual drifts; only the true one may stop the solve
            residual(a, x, b, &mut r);
            let true_rn = norm(&r);
            if true_rn <= goal {
                return Ok(KrylovOutcome { iterations: it, initial_residual: r0, residual: true_rn });
            }
        }
        pc.apply(&r, &mut z);
        let rz_new = dot(&r, &z);
        let beta = rz_new / rz;
        rz = rz_new;
        for i in 0..n {
            p[i] = z[i] + beta * p[i];
        }
    }
    Err(Error::SolverStall { iterations: max_iter, residual_history: history })
}

pub(crate) fn bicgstab(
    a: &CsrMatrix,
    b: &[f64],
    x: &mut [f64],
    pc: &Preconditioner,
    abs_tol: f64,
    rel_tol: f64,
    max_iter: usize,
) -> Result<KrylovOutcome> {
    let n = a.n();
    let mut r = alloc::vec![0.0; n];
    residual(a, x, b, &mut r);
    let r0 = norm(&r);
    let goal = target(a, x, b, r0, abs_tol, rel_tol);
    let mut history = Vec::new();
    history.push(r0);
    if r0 <= goal {
        return Ok(KrylovOutcome { iterations: 0, initial_residual: r0, residual: r0 });
    }
    let mut r_hat = r.clone();
    let (mut rho, mut alpha, mut omega) = (1.0, 1.0, 1.0);
    let mut v = alloc::vec![0.0; n];
    let mut p = alloc::vec![0.0; n];
    let mut p_hat = alloc::vec![0.0; n];
    let mut s = alloc::vec![0.0; n];
    let mut s_hat = alloc::vec![0.0; n];
    let mut t = alloc::vec![0.0; n];
    let mut restarts = 0;
    let mut it = 0;
    while it < max_iter {
        it += 1;
        let rho_new = dot(&r_hat, &r);
        if rho_new == 0.0 || omega == 0.0 || !rho_new.is_finite() {
            if restarts >= 5 {
                return Err(Error::SolverBreakdown { iterations: it, residual: norm(&r) });
            }
            restarts += 1;
            residual(a, x, b, &mut r);
            r_hat.copy_from_slice(&r);
            rho = 1.0;
            alpha = 1.0;
            omega = 1.0;
            v.iter_mut().for_each(|e| *e = 0.0);
            p.iter_mut().for_each(|e| *e = 0.0);
            continue;
        }
        let beta = (rho_new / rho) * (alpha / omega);
        rho = rho_new;
        for i in 0..n {
            p[i] = r[i] + beta * (p[i] - omega * v[i]);
        }
        pc.apply(&p, &mut p_hat);
        a.mul_vec_into(&p_hat, &mut v);
        let rv = dot(&r_hat, &v);
        if rv == 0.0 || !rv.is_finite() {
            omega = 0.0;
            continue;
        }
        alpha = rho / rv;
        for i in 0..n {
            s[i] = r[i] - alpha * v[i];
        }
        let sn = norm(&s);
        if sn <= goal {
            for i in 0..n {
                x[i] += alpha * p_hat[i];
            }
            residual(a, x, b, &mut r);
            let rn = norm(&r);
            history.push(rn);
            if rn <= goal {
                return Ok(KrylovOutcome { iterations: it, initial_residual: r0, residual: rn });
            }
            // recursion lost accuracy: restart from the true residual
            omega = 0.0;
            continue;
        }
        pc.apply(&s, &mut s_hat);
        a.mul_vec_into(&s_hat, &mut t);
        let tt = dot(&t, &t);
        omega = if tt > 0.0 { dot(&t, &s) / tt } else { 0.0 };
        for i in 0..n {
            x[i] += alpha * p_hat[i] + omega * s_hat[i];
            r[i] = s[i] - omega * t[i];
        }
        let rn = norm(&r);
        history.push(rn);
        if !rn.is_finite() {
            return Err(Error::SolverBreakdown { iterations: it, residual: rn });
        }
        if rn <= goal {
            residual(a, x, b, &mut r);
            let true_rn = norm(&r);
            if true_rn <= goal {
                return Ok(KrylovOutcome { iterations: it, initial_residual: r0, residual: true_rn });
            }
        }
    }
    Err(Error::SolverStall { iterations: max_iter, residual_history: history })
}
