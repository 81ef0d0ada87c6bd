//! End-to-end acceptance suite. Prints one `criterion N: PASS|FAIL` line per
//! criterion and exits non-zero if any fails.

use std::collections::HashMap;
use std::f64::consts::PI;
use std::sync::Arc;
use std::time::Instant;

use ma_mesh_core::fvops::{cell_gradient, hessian, laplacian, tensor_divergence};
use ma_mesh_core::solvers::{cofactor2d, det_linearisation, jacobian_det};
use ma_mesh_core::{run, Algorithm, Mesh, MonitorSpec, RunOutcome, ScalarField, SolverConfig, Vec2};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

#[derive(Default)]
struct Runs {
    cache: HashMap<String, Arc<RunOutcome>>,
}

impl Runs {
    fn get(&mut self, cfg: &SolverConfig, monitor: &MonitorSpec, n: usize) -> Arc<RunOutcome> {
        let key = format!("{cfg:?}|{monitor:?}|{n}");
        self.cache
            .entry(key)
            .or_insert_with(|| Arc::new(run(cfg, monitor, n).expect("valid configuration")))
            .clone()
    }

    fn afp(&mut self, monitor: &MonitorSpec, n: usize) -> Arc<RunOutcome> {
        self.get(&SolverConfig::with_algorithm(Algorithm::Afp), monitor, n)
    }

    fn fp(&mut self, monitor: &MonitorSpec, n: usize, gamma: f64) -> Arc<RunOutcome> {
        let cfg = SolverConfig { fp_gamma: gamma, ..SolverConfig::with_algorithm(Algorithm::Fp) };
        self.get(&cfg, monitor, n)
    }

    fn pma(&mut self, monitor: &MonitorSpec, n: usize, gamma: f64, dt: f64) -> Arc<RunOutcome> {
        let cfg = SolverConfig { pma_gamma: gamma, pma_dt: dt, ..SolverConfig::with_algorithm(Algorithm::Pma) };
        self.get(&cfg, monitor, n)
    }

    fn newton(&mut self, monitor: &MonitorSpec, n: usize) -> Arc<RunOutcome> {
        self.get(&SolverConfig::with_algorithm(Algorithm::Newton), monitor, n)
    }
}

struct Verdict {
    pass: bool,
    detail: String,
}

fn verdict(pass: bool, detail: String) -> Verdict {
    Verdict { pass, detail }
}

fn describe(o: &RunOutcome) -> String {
    format!("{} iters, {}", o.iterations(), o.termination)
}

fn max_corner_distance(a: &Mesh, b: &Mesh) -> f64 {
    a.corners()
        .iter()
        .zip(b.corners())
        .map(|(&p, &q)| (p - q).min_image(1.0).norm())
        .fold(0.0, f64::max)
}

fn orders(errs: &[f64]) -> Vec<f64> {
    errs.windows(2).map(|w| (w[0] / w[1]).log2()).collect()
}

fn criterion_1() -> Verdict {
    let start = Instant::now();
    let (mut el, mut eg, mut eh) = (Vec::new(), Vec::new(), Vec::new());
    for n in [32usize, 64, 128] {
        let m = Mesh::uniform(n).unwrap();
        let k = 2.0 * PI;
        let phi = ScalarField::from_fn(&m, |p| (k * p.x).sin() * (k * p.y).sin());
        let lap = laplacian(&phi, &m);
        let grad = cell_gradient(&phi, &m);
        let hes = hessian(&phi, &m);
        let (mut a, mut b, mut c) = (0.0f64, 0.0f64, 0.0f64);
        for (i, p) in m.centres().iter().enumerate() {
            let (sx, cx, sy, cy) = ((k * p.x).sin(), (k * p.x).cos(), (k * p.y).sin(), (k * p.y).cos());
            a = a.max((lap[i] + 2.0 * k * k * sx * sy).abs());
            b = b.max((grad[i] - Vec2::new(k * cx * sy, k * sx * cy)).norm());
            let h = hes[i];
            let exact = [-k * k * sx * sy, k * k * cx * cy, k * k * cx * cy, -k * k * sx * sy];
            let got = [h.xx, h.xy, h.yx, h.yy];
            c = c.max(got.iter().zip(exact).map(|(g, e)| (g - e).abs()).fold(0.0, f64::max));
        }
        el.push(a);
        eg.push(b);
        eh.push(c);
    }
    let secs = start.elapsed().as_secs_f64();
    let (ol, og, oh) = (orders(&el), orders(&eg), orders(&eh));
    let pass = ol.iter().chain(&og).chain(&oh).all(|&o| o >= 1.8) && secs < 10.0;
    verdict(
        pass,
        format!("orders laplacian {ol:.3?} gradient {og:.3?} hessian {oh:.3?}; {secs:.2}s (< 10s)"),
    )
}

fn random_field(m: &Mesh, rng: &mut ChaCha8Rng, amp: f64) -> ScalarField {
    let modes: Vec<(f64, f64, f64, f64)> = (0..4)
        .map(|_| {
            (
                rng.gen_range(-1.0..1.0),
                rng.gen_range(0..3) as f64,
                rng.gen_range(-2..3) as f64,
                rng.gen_range(0.0..2.0 * PI),
            )
        })
        .collect();
    ScalarField::from_fn(m, |p| {
        modes
            .iter()
            .map(|&(a, kx, ky, ph)| {
                let k = 2.0 * PI * (kx * kx + ky * ky).sqrt().max(1.0);
                amp * a / (k * k) * (2.0 * PI * (kx * p.x + ky * p.y) + ph).cos()
            })
            .sum()
    })
}

fn criterion_2() -> Verdict {
    let start = Instant::now();
    let m = Mesh::uniform(32).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(0x5eed);
    let ts = [1e-2, 1e-3, 1e-4];
    let (mut worst_lo, mut worst_hi) = (f64::INFINITY, 0.0f64);
    let (mut flux_lo, mut flux_hi) = (f64::INFINITY, 0.0f64);
    for _ in 0..20 {
        let phi = random_field(&m, &mut rng, 0.5);
        let psi = random_field(&m, &mut rng, 1.0);
        let h = hessian(&phi, &m);
        let a = cofactor2d(&h);
        let det0 = jacobian_det(&h);
        let lin = det_linearisation(&a, &psi, &m);
        let flux = tensor_divergence(&a, &psi, &m);
        let residual = |t: f64, l: &[f64]| {
            let moved: Vec<f64> = phi.iter().zip(psi.iter()).map(|(p, q)| p + t * q).collect();
            let det1 = jacobian_det(&hessian(&moved, &m));
            (0..m.n_cells()).map(|i| (det1[i] - det0[i] - t * l[i]).abs()).fold(0.0, f64::max)
        };
        let r: Vec<f64> = ts.iter().map(|&t| residual(t, &lin)).collect();
        for w in r.windows(2) {
            let ratio = w[0] / w[1];
            worst_lo = worst_lo.min(ratio);
            worst_hi = worst_hi.max(ratio);
        }
        let rf: Vec<f64> = ts.iter().map(|&t| residual(t, &flux)).collect();
        for w in rf.windows(2) {
            flux_lo = flux_lo.min(w[0] / w[1]);
            flux_hi = flux_hi.max(w[0] / w[1]);
        }
    }
    let secs = start.elapsed().as_secs_f64();
    let pass = worst_lo >= 100.0 / 1.5 && worst_hi <= 150.0 && secs < 30.0;
    verdict(
        pass,
        format!(
            "A:H(psi) decade ratios in [{worst_lo:.2}, {worst_hi:.2}] (need [66.67, 150]); \
             face-flux div(A grad psi) ratios in [{flux_lo:.2}, {flux_hi:.2}] for reference; {secs:.2}s (< 30s)"
        ),
    )
}

fn criterion_3(runs: &mut Runs) -> Verdict {
    let start = Instant::now();
    let mut pass = true;
    let mut parts = Vec::new();
    for (name, mon) in [("ring", MonitorSpec::RING), ("bell", MonitorSpec::BELL)] {
        let counts: Vec<(usize, bool)> = [60usize, 100, 150]
            .iter()
            .map(|&n| {
                let o = runs.afp(&mon, n);
                (o.iterations(), o.converged() && o.final_equi() < 1e-8)
            })
            .collect();
        let base = counts[0].0 as f64;
        let ok = counts.iter().all(|&(k, c)| c && (k as f64) <= 3.0 * base && (k as f64) >= base / 3.0);
        pass &= ok;
        parts.push(format!("{name} {:?}", counts.iter().map(|c| c.0).collect::<Vec<_>>()));
    }
    let secs = start.elapsed().as_secs_f64();
    pass &= secs < 600.0;
    verdict(pass, format!("AFP iterations for N=60,100,150: {}; {secs:.1}s (< 600s)", parts.join(", ")))
}

fn criterion_4(runs: &mut Runs) -> Verdict {
    let fp_ring = runs.fp(&MonitorSpec::RING, 60, 1.0);
    let fp_bell_28 = runs.fp(&MonitorSpec::BELL, 60, 2.8);
    let fp_bell_1 = runs.fp(&MonitorSpec::BELL, 60, 1.0);
    let afp_ring = runs.afp(&MonitorSpec::RING, 60);
    let afp_bell = runs.afp(&MonitorSpec::BELL, 60);
    let convergent: Vec<usize> =
        [&fp_ring, &fp_bell_28, &fp_bell_1].iter().filter(|o| o.converged()).map(|o| o.iterations()).collect();
    let afp_max = afp_ring.iterations().max(afp_bell.iterations());
    let pass = fp_ring.converged()
        && fp_bell_28.converged()
        && !fp_bell_1.converged()
        && afp_ring.converged()
        && afp_bell.converged()
        && convergent.iter().all(|&k| afp_max < k);
    verdict(
        pass,
        format!(
            "FP ring g=1: {}; FP bell g=2.8: {}; FP bell g=1: {}; AFP ring {} / bell {} iters",
            describe(&fp_ring),
            describe(&fp_bell_28),
            describe(&fp_bell_1),
            afp_ring.iterations(),
            afp_bell.iterations()
        ),
    )
}

fn criterion_5(runs: &mut Runs) -> Verdict {
    let a = runs.pma(&MonitorSpec::RING, 60, 0.7, 0.2);
    let b = runs.pma(&MonitorSpec::RING, 120, 0.7, 0.2);
    let bad = runs.pma(&MonitorSpec::RING, 60, 0.5, 0.3);
    let (ka, kb) = (a.iterations() as f64, b.iterations() as f64);
    let pass = a.converged() && b.converged() && ka.max(kb) <= 1.5 * ka.min(kb) && !bad.converged();
    verdict(
        pass,
        format!(
            "PMA(0.7,0.2) ring N=60: {}; N=120: {}; PMA(0.5,0.3) ring N=60: {}",
            describe(&a),
            describe(&b),
            describe(&bad)
        ),
    )
}

fn criterion_6(runs: &mut Runs) -> Verdict {
    let newton = runs.newton(&MonitorSpec::RING, 60);
    let newton_bell = runs.newton(&MonitorSpec::BELL, 60);
    let afp = runs.afp(&MonitorSpec::RING, 60);
    let e3 = |o: &RunOutcome| o.history().get(3).map_or(f64::NAN, |r| r.equi);
    let (en, ea) = (e3(&newton), e3(&afp));
    let mut late = Vec::new();
    for o in [&newton, &newton_bell] {
        if o.converged() {
            late.extend(o.history().iter().filter(|r| r.gamma_max > 0.0 && r.iteration >= 5).map(|r| r.iteration));
        }
    }
    let mut afp_shifted = 0;
    for mon in [MonitorSpec::RING, MonitorSpec::BELL] {
        for n in [60usize, 100, 150] {
            afp_shifted += runs.afp(&mon, n).history().iter().filter(|r| r.gamma_max != 0.0).count();
        }
    }
    let shifted: Vec<usize> =
        newton.history().iter().filter(|r| r.gamma_max > 0.0).map(|r| r.iteration).collect();
    let pass = newton.converged() && en < ea && late.is_empty() && afp_shifted == 0;
    verdict(
        pass,
        format!(
            "Newton ring N=60: {}; equi after 3 iterations Newton {en:.3e} vs AFP {ea:.3e}; \
             Newton shifts at iterations {shifted:?}, late shifts {late:?}; AFP shifted records {afp_shifted}",
            describe(&newton)
        ),
    )
}

fn criterion_7(runs: &mut Runs) -> Verdict {
    let outs = [
        ("AFP", runs.afp(&MonitorSpec::BELL, 60)),
        ("FP(2.8)", runs.fp(&MonitorSpec::BELL, 60, 2.8)),
        ("PMA(0.7,0.2)", runs.pma(&MonitorSpec::BELL, 60, 0.7, 0.2)),
    ];
    let mut pass = outs.iter().all(|(_, o)| o.converged());
    let mut parts = Vec::new();
    for i in 0..3 {
        for j in i + 1..3 {
            let d = max_corner_distance(&outs[i].1.mesh_pair().physical, &outs[j].1.mesh_pair().physical);
            pass &= d <= 1e-6;
            parts.push(format!("{}-{} {d:.2e}", outs[i].0, outs[j].0));
        }
    }
    let moved = max_corner_distance(&outs[0].1.mesh_pair().physical, &outs[0].1.mesh_pair().computational);
    verdict(pass, format!("bell N=60 max corner distances {} (<= 1e-6); AFP moved {moved:.3e}", parts.join(", ")))
}

fn criterion_8(runs: &Runs) -> Verdict {
    let mut checked = 0;
    let mut failures = Vec::new();
    let (mut worst_vol, mut worst_eig) = (0.0f64, f64::INFINITY);
    for (key, o) in &runs.cache {
        if !o.converged() {
            continue;
        }
        checked += 1;
        let phys = &o.mesh_pair().physical;
        let tangle = phys.tangling_check();
        let vol_err = (phys.total_volume() - 1.0).abs();
        let eig = o.history().last().unwrap().min_eig;
        worst_vol = worst_vol.max(vol_err);
        worst_eig = worst_eig.min(eig);
        if tangle.tangled || vol_err > 1e-10 || !(eig > 0.0) {
            failures.push(key.split('|').next().unwrap_or("").chars().take(60).collect::<String>());
        }
    }
    verdict(
        failures.is_empty() && checked > 0,
        format!(
            "{checked} converged meshes; worst |volume - 1| {worst_vol:.2e}, smallest eig(I+H) {worst_eig:.3e}; \
             {} invalid",
            failures.len()
        ),
    )
}

fn criterion_9(runs: &mut Runs) -> Verdict {
    let mut pass = true;
    let mut parts = Vec::new();
    for (name, mon) in [("ring", MonitorSpec::RING), ("bell", MonitorSpec::BELL)] {
        let base = runs.afp(&mon, 60);
        let cfg = SolverConfig { pin_cell: 60 * 30 + 17, pin_value: 5.0, ..SolverConfig::with_algorithm(Algorithm::Afp) };
        let moved = runs.get(&cfg, &mon, 60);
        let d = max_corner_distance(&base.mesh_pair().physical, &moved.mesh_pair().physical);
        pass &= base.converged() && moved.converged() && d <= 1e-8;
        parts.push(format!("{name} {d:.2e}"));
    }
    verdict(pass, format!("AFP N=60 pin (0, 0) vs (1817, 5): max corner distance {} (<= 1e-8)", parts.join(", ")))
}

fn criterion_10(runs: &mut Runs) -> Verdict {
    let mut pass = true;
    let mut parts = Vec::new();
    for alg in Algorithm::ALL {
        let o = runs.get(&SolverConfig::with_algorithm(alg), &MonitorSpec::UNIFORM, 60);
        let e = o.final_equi();
        pass &= o.converged() && o.iterations() <= 1 && e.abs() <= 1e-14;
        parts.push(format!("{alg} {} iters eps {e:.1e}", o.iterations()));
    }
    verdict(pass, format!("m = 1: {}", parts.join(", ")))
}

fn main() {
    let total = Instant::now();
    let mut runs = Runs::default();
    let mut results: Vec<(usize, Verdict)> = Vec::new();
    let mut emit = |id: usize, v: Verdict| {
        println!("criterion {id}: {} {}", if v.pass { "PASS" } else { "FAIL" }, v.detail);
        results.push((id, v));
    };
    emit(1, criterion_1());
    emit(2, criterion_2());
    emit(3, criterion_3(&mut runs));
    emit(4, criterion_4(&mut runs));
    emit(5, criterion_5(&mut runs));
    emit(6, criterion_6(&mut runs));
    emit(7, criterion_7(&mut runs));
    emit(9, criterion_9(&mut runs));
    emit(10, criterion_10(&mut runs));
    emit(8, criterion_8(&runs));
    let failed: Vec<usize> = results.iter().filter(|(_, v)| !v.pass).map(|(id, _)| *id).collect();
    println!(
        "acceptance: {} of {} criteria passed in {:.1}s",
        results.len() - failed.len(),
        results.len(),
        total.elapsed().as_secs_f64()
    );
    if !failed.is_empty() {
        println!("acceptance: failed criteria {failed:?}");
        std::process::exit(1);
    }
}
