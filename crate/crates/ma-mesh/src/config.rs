//! Experiment configuration: one JSON document per experiment.
//!
//! ```json
//! {
//!   "monitor": "bell",
//!   "algorithm": ["fp", "afp"],
//!   "n": [60, 120],
//!   "fp_gamma": [1.0, 2.8],
//!   "formats": ["csv", "vtk"]
//! }
//! ```
//!
//! `algorithm`, `fp_gamma`, `pma_gamma` and `pma_dt` take a single value or a
//! list; the sweep is their product with `n`. FP needs `fp_gamma` and PMA
//! needs both `pma_gamma` and `pma_dt`. Every other solver key is optional and
//! falls back to the library default.

use std::path::{Path, PathBuf};

use ma_mesh_core::{Algorithm, MonitorSpec, SolverConfig};
use serde::Deserialize;

use crate::error::{CliError, CliResult};

#[derive(Debug, Clone, Deserialize)]
#[serde(untagged)]
pub enum OneOrMany<T> {
    One(T),
    Many(Vec<T>),
}

impl<T: Clone> OneOrMany<T> {
    pub fn to_vec(&self) -> Vec<T> {
        match self {
            OneOrMany::One(v) => vec![v.clone()],
            OneOrMany::Many(v) => v.clone(),
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(untagged)]
pub enum MonitorChoice {
    Preset(String),
    Explicit(ExplicitMonitor),
}

#[derive(Debug, Clone, Copy, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExplicitMonitor {
    pub alpha1: f64,
    pub alpha2: f64,
    pub alpha3: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Csv,
    Vtk,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum AlgorithmName {
    Fp,
    Afp,
    Newton,
    Pma,
}

impl From<AlgorithmName> for Algorithm {
    fn from(a: AlgorithmName) -> Self {
        match a {
            AlgorithmName::Fp => Algorithm::Fp,
            AlgorithmName::Afp => Algorithm::Afp,
            AlgorithmName::Newton => Algorithm::Newton,
            AlgorithmName::Pma => Algorithm::Pma,
        }
    }
}

/// The document as written.
#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RawConfig {
    pub name: Option<String>,
    pub monitor: MonitorChoice,
    pub algorithm: OneOrMany<AlgorithmName>,
    pub n: OneOrMany<usize>,
    pub fp_gamma: Option<OneOrMany<f64>>,
    pub pma_gamma: Option<OneOrMany<f64>>,
    pub pma_dt: Option<OneOrMany<f64>>,
    pub newton_delta_scale: Option<f64>,
    pub shift_epsilon: Option<f64>,
    pub equi_tol: Option<f64>,
    pub max_outer: Option<usize>,
    pub divergence_factor: Option<f64>,
    pub tangle_tolerance: Option<usize>,
    pub lin_abs_tol: Option<f64>,
    pub lin_rel_tol: Option<f64>,
    pub lin_max_iterations: Option<usize>,
    pub correctors: Option<usize>,
    pub pin_cell: Option<usize>,
    pub pin_value: Option<f64>,
    pub analytic_gradient: Option<bool>,
    pub out_dir: Option<PathBuf>,
    pub formats: Option<Vec<Format>>,
}

/// One entry of the sweep.
#[derive(Debug, Clone)]
pub struct RunSpec {
    pub solver: SolverConfig,
    pub n: usize,
}

impl RunSpec {
    /// File stem, e.g. `bell_pma_gamma0.7_dt0.2_n60`.
    pub fn stem(&self, experiment: &str) -> String {
        let params: String = self
            .solver
            .params()
            .chars()
            .filter_map(|c| match c {
                '=' => None,
                ';' => Some('_'),
                c => Some(c),
            })
            .collect();
        let mut s = format!("{experiment}_{}", self.solver.algorithm);
        if !params.is_empty() {
            s.push('_');
            s.push_str(&params);
        }
        s.push_str(&format!("_n{}", self.n));
        s
    }
}

#[derive(Debug, Clone)]
pub struct ExperimentConfig {
    pub name: String,
    pub monitor: MonitorSpec,
    pub runs: Vec<RunSpec>,
    pub out_dir: PathBuf,
    pub formats: Vec<Format>,
}

/// 1-based line of the first `"key":` in `src`, or line 1.
fn key_line(src: &str, key: &str) -> (usize, usize) {
    let quoted = format!("\"{key}\"");
    for (i, line) in src.lines().enumerate() {
        if let Some(col) = line.find(&quoted) {
            if line[col + quoted.len()..].trim_start().starts_with(':') {
                return (i + 1, col + 1);
            }
        }
    }
    (1, 1)
}

impl ExperimentConfig {
    pub fn load(path: &Path) -> CliResult<Self> {
        let src = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
        let default_name = path.file_stem().and_then(|s| s.to_str()).unwrap_or("run");
        Self::parse(&src, path, default_name)
    }

    /// Parses and validates `src`; `path` only labels error messages.
    pub fn parse(src: &str, path: &Path, default_name: &str) -> CliResult<Self> {
        let raw: RawConfig = serde_json::from_str(src).map_err(|e| CliError::Config {
            path: path.to_path_buf(),
            line: e.line(),
            column: e.column(),
            message: e.to_string().split(" at line ").next().unwrap_or_default().to_string(),
        })?;
        let fail = |key: &str, message: String| {
            let (line, column) = key_line(src, key);
            CliError::Config { path: path.to_path_buf(), line, column, message }
        };

        let monitor = match &raw.monitor {
            MonitorChoice::Preset(p) => MonitorSpec::preset(p)
                .ok_or_else(|| fail("monitor", format!("unknown monitor `{p}`, expected \"ring\", \"bell\" or \"uniform\"")))?,
            MonitorChoice::Explicit(m) => MonitorSpec::new(m.alpha1, m.alpha2, m.alpha3)
                .map_err(|e| fail("monitor", format!("invalid monitor: {e}")))?,
        };

        let sizes = raw.n.to_vec();
        if sizes.is_empty() {
            return Err(fail("n", "`n` needs at least one mesh size".into()));
        }
        if let Some(&bad) = sizes.iter().find(|&&n| n < 3) {
            return Err(fail("n", format!("mesh size {bad} is below the minimum of 3")));
        }

        let mut base = SolverConfig::default();
        macro_rules! set {
            ($($key:ident => $($field:ident).+),* $(,)?) => {
                $(if let Some(v) = raw.$key { base.$($field).+ = v; })*
            };
        }
        set!(
            newton_delta_scale => newton_delta_scale,
            shift_epsilon => shift_epsilon,
            equi_tol => equi_tol,
            max_outer => max_outer,
            divergence_factor => divergence_factor,
            tangle_tolerance => tangle_tolerance,
            lin_abs_tol => lin.abs_tol,
            lin_rel_tol => lin.rel_tol,
            lin_max_iterations => lin.max_iterations,
            correctors => lin.correctors,
            pin_cell => pin_cell,
            pin_value => pin_value,
            analytic_gradient => analytic_gradient,
        );
        if let Some(&n) = sizes.iter().find(|&&n| base.pin_cell >= n * n) {
            return Err(fail("pin_cell", format!("pin_cell {} is outside the {n} x {n} mesh", base.pin_cell)));
        }

        let algorithms = raw.algorithm.to_vec();
        if algorithms.is_empty() {
            return Err(fail("algorithm", "`algorithm` needs at least one entry".into()));
        }
        let required = |key: &str, v: &Option<OneOrMany<f64>>, alg: &str| -> CliResult<Vec<f64>> {
            let vals = v
                .as_ref()
                .ok_or_else(|| fail("algorithm", format!("missing key `{key}` required by algorithm `{alg}`")))?
                .to_vec();
            if vals.is_empty() {
                return Err(fail(key, format!("`{key}` needs at least one value")));
            }
            Ok(vals)
        };

        let mut solvers = Vec::new();
        for alg in &algorithms {
            let mut cfg = base;
            cfg.algorithm = (*alg).into();
            match alg {
                AlgorithmName::Fp => {
                    for g in required("fp_gamma", &raw.fp_gamma, "fp")? {
                        solvers.push(SolverConfig { fp_gamma: g, ..cfg });
                    }
                }
                AlgorithmName::Pma => {
                    let gammas = required("pma_gamma", &raw.pma_gamma, "pma")?;
                    let dts = required("pma_dt", &raw.pma_dt, "pma")?;
                    for &g in &gammas {
                        for &dt in &dts {
                            solvers.push(SolverConfig { pma_gamma: g, pma_dt: dt, ..cfg });
                        }
                    }
                }
                _ => solvers.push(cfg),
            }
        }
        for s in &solvers {
            s.validate().map_err(|e| {
                let msg = e.to_string();
                fail(offending_key(&msg), msg)
            })?;
        }

        let runs = solvers
            .into_iter()
            .flat_map(|solver| sizes.iter().map(move |&n| RunSpec { solver, n }))
            .collect();
        Ok(ExperimentConfig {
            name: raw.name.unwrap_or_else(|| default_name.to_string()),
            monitor,
            runs,
            out_dir: raw.out_dir.unwrap_or_else(|| PathBuf::from(".")),
            formats: raw.formats.unwrap_or_else(|| vec![Format::Csv]),
        })
    }
}

/// The config key a core validation message is about.
fn offending_key(msg: &str) -> &'static str {
    const KEYS: [&str; 8] =
        ["fp_gamma", "pma_gamma", "pma_dt", "newton_delta_scale", "shift_epsilon", "equi_tol", "divergence_factor", "pin_value"];
    if let Some(k) = msg.split_whitespace().find_map(|w| KEYS.iter().find(|&&k| k == w)) {
        return k;
    }
    if msg.contains("tolerances") {
        "lin_abs_tol"
    } else if msg.contains("corrector") {
        "correctors"
    } else if msg.contains("iteration") {
        "lin_max_iterations"
    } else {
        "algorithm"
    }
}
