//! File formats, experiment configs and the sweep driver behind the `ma-mesh`
//! binary. The numerics live in `ma-mesh-core`.

pub mod config;
pub mod error;
pub mod output;
pub mod sweep;

pub use config::{ExperimentConfig, Format, RunSpec};
pub use error::{CliError, CliResult};
pub use output::{max_corner_distance, read_mesh_csv, SummaryRow};
pub use sweep::run_experiment;

/// Exit status of a finished sweep: 0 if every run converged, 1 otherwise.
pub fn sweep_status(rows: &[SummaryRow]) -> u8 {
    u8::from(!rows.iter().all(|r| r.converged))
}
