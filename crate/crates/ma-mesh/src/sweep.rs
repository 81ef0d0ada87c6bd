//! Runs every entry of an experiment, possibly on several threads, and writes
//! the per-run files and `summary.csv`.

use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;
use std::time::Instant;

use log::{debug, info, warn};
use ma_mesh_core::{run_observed, MonitorSpec};

use crate::config::{ExperimentConfig, Format, RunSpec};
use crate::error::{CliError, CliResult};
use crate::output::{self, SummaryRow};

/// Solves one entry and writes its files. Solver failures become a
/// non-converged row; only IO errors propagate.
fn run_one(exp: &ExperimentConfig, spec: &RunSpec, out: &Path) -> CliResult<SummaryRow> {
    let stem = spec.stem(&exp.name);
    let start = Instant::now();
    let monitor: MonitorSpec = exp.monitor;
    let result = catch_unwind(AssertUnwindSafe(|| {
        run_observed(&spec.solver, &monitor, spec.n, |r| {
            debug!("{stem}: iter {} equi {:.6e} min_eig {:.4e} inner {}", r.iteration, r.equi, r.min_eig, r.inner_iters)
        })
    }));
    let wall_seconds = start.elapsed().as_secs_f64();
    let mut row = SummaryRow {
        algorithm: spec.solver.algorithm.to_string(),
        params: spec.solver.params(),
        n: spec.n,
        converged: false,
        iterations: 0,
        final_equi: f64::NAN,
        wall_seconds,
    };
    match result {
        Ok(Ok(outcome)) => {
            row.converged = outcome.converged();
            row.iterations = outcome.iterations();
            row.final_equi = outcome.final_equi();
            if row.converged {
                info!("{stem}: converged in {} iterations ({wall_seconds:.2}s)", row.iterations);
            } else {
                warn!("{stem}: {} after {} iterations", outcome.termination, row.iterations);
            }
            let physical = &outcome.mesh_pair().physical;
            output::write(&out.join(format!("{stem}_equi.csv")), &output::equi_csv(outcome.history()))?;
            if exp.formats.contains(&Format::Csv) {
                output::write(&out.join(format!("{stem}_mesh.csv")), &output::mesh_csv(physical))?;
            }
            if exp.formats.contains(&Format::Vtk) {
                output::write(&out.join(format!("{stem}.vtk")), &output::mesh_vtk(physical, &stem))?;
            }
        }
        Ok(Err(e)) => warn!("{stem}: {e}"),
        Err(_) => warn!("{stem}: solver panicked"),
    }
    Ok(row)
}

/// Runs the whole sweep with up to `jobs` threads. Rows come back in sweep
/// order whatever the scheduling.
pub fn run_experiment(exp: &ExperimentConfig, out: &Path, jobs: usize) -> CliResult<Vec<SummaryRow>> {
    std::fs::create_dir_all(out).map_err(|e| CliError::io(out, e))?;
    let slots: Mutex<Vec<Option<CliResult<SummaryRow>>>> = Mutex::new((0..exp.runs.len()).map(|_| None).collect());
    let next = AtomicUsize::new(0);
    std::thread::scope(|scope| {
        for _ in 0..jobs.clamp(1, exp.runs.len().max(1)) {
            scope.spawn(|| loop {
                let k = next.fetch_add(1, Ordering::Relaxed);
                let Some(spec) = exp.runs.get(k) else { break };
                let row = run_one(exp, spec, out);
                slots.lock().unwrap_or_else(|p| p.into_inner())[k] = Some(row);
            });
        }
    });
    let rows = slots
        .into_inner()
        .unwrap_or_else(|p| p.into_inner())
        .into_iter()
        .map(|r| r.expect("every entry was run"))
        .collect::<CliResult<Vec<_>>>()?;
    output::write(&out.join("summary.csv"), &output::summary_csv(&rows))?;
    Ok(rows)
}
