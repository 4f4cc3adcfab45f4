// Copyright 2026 EEQT Contributors
// SPDX-License-Identifier: Apache-2.0

//! Command orchestration behind the `eeqt` binary.
//!
//! Exit codes: 0 success, 1 validation or parse error, 2 numerical failure,
//! 3 a verification or comparison check failed.

use std::io::Write as _;
use std::path::{Path, PathBuf};

use serde_json::json;

use crate::ensemble::EnsembleEstimate;
use crate::error::{Error, Result};
use crate::flow::uniform_grid;
use crate::io::{load_model, load_state, AnyModel, StateFile};
use crate::model::{embed_pure_state, ExactPropagator, Lindbladian};
use crate::numerics::ToleranceConfig;
use crate::pdp::{self, SimulationConfig};
use crate::unravel::{self, DiffusionConfig, JumpPhaseChoice};
use crate::verify;

pub const EXIT_OK: i32 = 0;
pub const EXIT_VALIDATION: i32 = 1;
pub const EXIT_NUMERICAL: i32 = 2;
pub const EXIT_CHECK_FAILED: i32 = 3;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Command {
    Validate,
    Exact,
    Simulate,
    Verify,
    Compare,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Method {
    Pdp,
    Qsd,
    Mcwf,
}

impl Method {
    pub fn name(self) -> &'static str {
        match self {
            Method::Pdp => "pdp",
            Method::Qsd => "qsd",
            Method::Mcwf => "mcwf",
        }
    }
}

impl std::str::FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "pdp" => Ok(Method::Pdp),
            "qsd" => Ok(Method::Qsd),
            "mcwf" => Ok(Method::Mcwf),
            other => Err(Error::InvalidConfig(format!("unknown method {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum GridSpec {
    /// Evenly spaced points on `[0, horizon]`.
    Count(usize),
    Times(Vec<f64>),
}

impl Default for GridSpec {
    fn default() -> Self {
        GridSpec::Count(9)
    }
}

impl std::str::FromStr for GridSpec {
    type Err = Error;

    /// `"9"` is a point count; `"0,0.5,1"` or `"1.5"` are explicit times.
    /// A bare `"0"` means the single time 0.
    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        if !s.contains(',') && !s.contains('.') && !s.contains('e') {
            if let Ok(n) = s.parse::<usize>() {
                if n > 0 {
                    return Ok(GridSpec::Count(n));
                }
            }
        }
        let times = s
            .split(',')
            .map(|t| {
                t.trim()
                    .parse::<f64>()
                    .map_err(|_| Error::InvalidConfig(format!("bad grid time {t:?}")))
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(GridSpec::Times(times))
    }
}

impl GridSpec {
    /// Horizon implied when none is given: the last explicit time, else 1.
    pub fn default_horizon(&self) -> f64 {
        match self {
            GridSpec::Times(t) => t.iter().copied().fold(0.0, f64::max),
            GridSpec::Count(_) => 1.0,
        }
    }

    pub fn times(&self, horizon: f64) -> Vec<f64> {
        match self {
            GridSpec::Count(n) => uniform_grid(horizon, *n),
            GridSpec::Times(t) => t.clone(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunManifest {
    pub command: Command,
    pub model_path: Option<PathBuf>,
    pub state_path: Option<PathBuf>,
    /// Model used for the exact reference in `compare`; defaults to `model_path`.
    pub oracle_path: Option<PathBuf>,
    pub method: Option<Method>,
    pub horizon: f64,
    pub grid: GridSpec,
    pub dt: Option<f64>,
    pub n_trajectories: usize,
    pub seed: u64,
    pub workers: usize,
    pub out: Option<PathBuf>,
    pub events: Option<PathBuf>,
}

impl RunManifest {
    pub fn new(command: Command) -> Self {
        Self {
            command,
            model_path: None,
            state_path: None,
            oracle_path: None,
            method: None,
            horizon: 1.0,
            grid: GridSpec::default(),
            dt: None,
            n_trajectories: 1000,
            seed: 0,
            workers: 1,
            out: None,
            events: None,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let needs_method = matches!(self.command, Command::Simulate | Command::Compare);
        match (needs_method, self.method) {
            (true, None) => {
                return Err(Error::InvalidConfig("--method is required".into()));
            }
            (false, Some(_)) => {
                return Err(Error::InvalidConfig(
                    "--method only applies to simulate and compare".into(),
                ));
            }
            _ => {}
        }
        if self.method == Some(Method::Qsd) && self.dt.is_none() {
            return Err(Error::InvalidConfig("--dt is required for qsd".into()));
        }
        if let Some(dt) = self.dt {
            if !(dt > 0.0 && dt.is_finite()) {
                return Err(Error::InvalidConfig(format!(
                    "--dt must be positive, got {dt}"
                )));
            }
        }
        if needs_method && self.n_trajectories < 2 {
            return Err(Error::InvalidConfig(format!(
                "--n must be at least 2, got {}",
                self.n_trajectories
            )));
        }
        if self.workers == 0 {
            return Err(Error::InvalidConfig("--workers must be at least 1".into()));
        }
        if !(self.horizon >= 0.0 && self.horizon.is_finite()) {
            return Err(Error::InvalidConfig(format!(
                "bad horizon {}",
                self.horizon
            )));
        }
        let needs_model = !matches!(self.command, Command::Verify);
        if needs_model && self.model_path.is_none() {
            return Err(Error::InvalidConfig("--model is required".into()));
        }
        let needs_state = matches!(
            self.command,
            Command::Exact | Command::Simulate | Command::Compare
        );
        if needs_state && self.state_path.is_none() {
            return Err(Error::InvalidConfig("--state is required".into()));
        }
        Ok(())
    }
}

/// A failed run: exit code plus a message for the JSON error line.
#[derive(Debug, Clone, PartialEq)]
pub struct RunError {
    pub code: i32,
    pub error: Error,
}

impl RunError {
    pub fn to_json(&self) -> String {
        let kind = if self.code == EXIT_VALIDATION {
            "validation"
        } else {
            "numerical"
        };
        json!({"error": kind, "exit_code": self.code, "message": self.error.to_string()})
            .to_string()
    }
}

impl From<Error> for RunError {
    fn from(error: Error) -> Self {
        let code = if error.is_validation() {
            EXIT_VALIDATION
        } else {
            EXIT_NUMERICAL
        };
        Self { code, error }
    }
}

fn numerical(error: Error) -> RunError {
    RunError {
        code: EXIT_NUMERICAL,
        error,
    }
}

/// Executes a manifest; `Ok` carries 0 or 3, `Err` carries 1 or 2.
pub fn run(manifest: &RunManifest) -> std::result::Result<i32, RunError> {
    manifest.validate()?;
    let tol = ToleranceConfig::from_env()?;
    match manifest.command {
        Command::Validate => run_validate(manifest, &tol),
        Command::Exact => run_exact(manifest, &tol),
        Command::Simulate => run_simulate(manifest, &tol),
        Command::Verify => run_verify(manifest, &tol),
        Command::Compare => run_compare(manifest, &tol),
    }
}

fn model_of(manifest: &RunManifest, tol: &ToleranceConfig) -> Result<AnyModel> {
    load_model(manifest.model_path.as_deref().expect("validated"), tol)
}

fn state_of(manifest: &RunManifest) -> Result<StateFile> {
    load_state(manifest.state_path.as_deref().expect("validated"))
}

fn grid_of(manifest: &RunManifest) -> Result<Vec<f64>> {
    let grid = manifest.grid.times(manifest.horizon);
    crate::flow::check_grid(&grid, manifest.horizon)?;
    Ok(grid)
}

fn run_validate(
    manifest: &RunManifest,
    tol: &ToleranceConfig,
) -> std::result::Result<i32, RunError> {
    let model = model_of(manifest, tol)?;
    let kind = match model {
        AnyModel::Hybrid(_) => "hybrid",
        AnyModel::Pure(_) => "pure",
    };
    let report = json!({"valid": true, "kind": kind, "dims": model.dims()});
    emit(manifest.out.as_deref(), &(report.to_string() + "\n"))?;
    Ok(EXIT_OK)
}

fn run_exact(manifest: &RunManifest, tol: &ToleranceConfig) -> std::result::Result<i32, RunError> {
    let model = model_of(manifest, tol)?;
    let rho0 = state_of(manifest)?.density(model.dims(), tol)?;
    let grid = grid_of(manifest)?;
    let prop = ExactPropagator::new(&model).map_err(numerical)?;
    let states = grid
        .iter()
        .map(|&t| prop.propagate(&rho0, t))
        .collect::<Result<Vec<_>>>()
        .map_err(numerical)?;
    let est = EnsembleEstimate::exact(grid, states);
    emit(manifest.out.as_deref(), &est.to_csv())?;
    Ok(EXIT_OK)
}

/// Ensemble estimate plus optional JSONL trajectory dump for `simulate`
/// and `compare`.
struct SimulationOutput {
    estimate: EnsembleEstimate,
    bias: Vec<f64>,
    events: Option<String>,
}

fn simulate(
    manifest: &RunManifest,
    model: &AnyModel,
    state: &StateFile,
    tol: &ToleranceConfig,
    with_bias: bool,
) -> std::result::Result<SimulationOutput, RunError> {
    let method = manifest.method.expect("validated");
    let grid = grid_of(manifest)?;
    let x0 = state.pure_state(model.dims(), tol)?;
    let want_events = manifest.events.is_some();
    let header = json!({
        "method": method.name(),
        "n_trajectories": manifest.n_trajectories,
        "seed": manifest.seed,
    })
    .to_string()
        + "\n";
    let flow_step = manifest.dt.unwrap_or(tol.ode_step);
    match (method, model) {
        (Method::Pdp, AnyModel::Hybrid(m)) => {
            let cfg = SimulationConfig::new(
                manifest.horizon,
                grid,
                flow_step,
                manifest.seed,
                manifest.n_trajectories,
            )?;
            let records =
                pdp::simulate_ensemble(m, &x0, &cfg, manifest.workers).map_err(numerical)?;
            let estimate = pdp::estimate_from_records(m.dims(), &cfg.grid, &records)?;
            let events = want_events.then(|| {
                header.clone() + &records.iter().map(|r| r.to_jsonl()).collect::<String>()
            });
            Ok(SimulationOutput {
                estimate,
                bias: Vec::new(),
                events,
            })
        }
        (Method::Mcwf, AnyModel::Pure(m)) => {
            let cfg = SimulationConfig::new(
                manifest.horizon,
                grid,
                flow_step,
                manifest.seed,
                manifest.n_trajectories,
            )?;
            let trajectories =
                unravel::mcwf_ensemble(m, &x0.psi, &cfg, JumpPhaseChoice::Zero, manifest.workers)
                    .map_err(numerical)?;
            let estimate = unravel::estimate_from_states(
                m.dim(),
                &cfg.grid,
                trajectories.iter().map(|t| t.grid_states.as_slice()),
            )?;
            let events = want_events.then(|| {
                header.clone()
                    + &trajectories
                        .iter()
                        .map(|t| t.to_jsonl())
                        .collect::<String>()
            });
            Ok(SimulationOutput {
                estimate,
                bias: Vec::new(),
                events,
            })
        }
        (Method::Qsd, AnyModel::Pure(m)) => {
            let cfg = DiffusionConfig::new(
                manifest.dt.expect("validated"),
                manifest.horizon,
                grid,
                manifest.seed,
                manifest.n_trajectories,
            )?;
            if with_bias {
                let mut levels =
                    unravel::qsd_ensemble_levels(m, &x0.psi, &cfg, 2, manifest.workers)
                        .map_err(numerical)?;
                let fine = levels.pop().expect("two levels");
                let coarse = levels.pop().expect("two levels");
                let bias = verify::halving_bias_allowance(&coarse, &fine)?;
                Ok(SimulationOutput {
                    estimate: coarse,
                    bias,
                    events: None,
                })
            } else {
                let trajectories =
                    unravel::qsd_ensemble(m, &x0.psi, &cfg, manifest.workers).map_err(numerical)?;
                let estimate = unravel::estimate_from_states(
                    m.dim(),
                    &cfg.grid,
                    trajectories.iter().map(|t| t.grid_states.as_slice()),
                )?;
                let events = want_events.then(|| {
                    header.clone()
                        + &trajectories
                            .iter()
                            .map(|t| t.to_jsonl())
                            .collect::<String>()
                });
                Ok(SimulationOutput {
                    estimate,
                    bias: Vec::new(),
                    events,
                })
            }
        }
        (Method::Pdp, AnyModel::Pure(_)) => Err(Error::InvalidConfig(
            "method pdp needs a hybrid model; use mcwf or qsd for pure models".into(),
        )
        .into()),
        (_, AnyModel::Hybrid(_)) => {
            Err(Error::InvalidConfig(format!("method {} needs a pure model", method.name())).into())
        }
    }
}

/// Loads the manifest's model and state and runs its trajectory ensemble.
///
/// Trajectory `k` always uses stream `(seed, k)` and the reduction runs in
/// index order, so the estimate does not depend on `workers`.
pub fn parallel_ensemble(
    manifest: &RunManifest,
) -> std::result::Result<EnsembleEstimate, RunError> {
    manifest.validate()?;
    if manifest.method.is_none() {
        return Err(Error::InvalidConfig("--method is required".into()).into());
    }
    let tol = ToleranceConfig::from_env()?;
    let model = model_of(manifest, &tol)?;
    let state = state_of(manifest)?;
    Ok(simulate(manifest, &model, &state, &tol, false)?.estimate)
}

fn run_simulate(
    manifest: &RunManifest,
    tol: &ToleranceConfig,
) -> std::result::Result<i32, RunError> {
    let model = model_of(manifest, tol)?;
    let state = state_of(manifest)?;
    let output = simulate(manifest, &model, &state, tol, false)?;
    if let (Some(path), Some(text)) = (manifest.events.as_deref(), output.events.as_deref()) {
        write_atomic(path, text)?;
    }
    emit(manifest.out.as_deref(), &output.estimate.to_csv())?;
    Ok(EXIT_OK)
}

fn run_compare(
    manifest: &RunManifest,
    tol: &ToleranceConfig,
) -> std::result::Result<i32, RunError> {
    let model = model_of(manifest, tol)?;
    let oracle = match &manifest.oracle_path {
        Some(p) => load_model(p, tol)?,
        None => model.clone(),
    };
    if oracle.dims() != model.dims() {
        return Err(Error::Dimension("oracle and model dimensions differ".into()).into());
    }
    let state = state_of(manifest)?;
    let output = simulate(manifest, &model, &state, tol, true)?;
    if let (Some(path), Some(text)) = (manifest.events.as_deref(), output.events.as_deref()) {
        write_atomic(path, text)?;
    }
    let rho0 = embed_pure_state(&state.pure_state(model.dims(), tol)?, model.dims())?;
    let report = verify::compare_ensemble_to_oracle(&oracle, &rho0, &output.estimate, &output.bias)
        .map_err(numerical)?;
    let doc = json!({
        "method": manifest.method.expect("validated").name(),
        "n_trajectories": output.estimate.n,
        "grid": report.grid,
        "trace_distances": report.trace_distances,
        "stat_tolerance": report.stat_tolerance,
        "bias_allowance": output.bias,
        "pass": report.pass,
    });
    emit(
        manifest.out.as_deref(),
        &(serde_json::to_string_pretty(&doc).map_err(Error::from)? + "\n"),
    )?;
    Ok(if report.pass {
        EXIT_OK
    } else {
        EXIT_CHECK_FAILED
    })
}

fn run_verify(manifest: &RunManifest, tol: &ToleranceConfig) -> std::result::Result<i32, RunError> {
    let mut checks = verify::verification_suite(manifest.seed).map_err(numerical)?;
    if manifest.model_path.is_some() {
        if let AnyModel::Hybrid(m) = model_of(manifest, tol)? {
            let mut rng = crate::numerics::RngStream::new(manifest.seed, 100);
            let mut worst = 0.0f64;
            for _ in 0..100 {
                let x = verify::random_pure_state(&mut rng, m.dims());
                let a = verify::random_block_observable(&mut rng, m.dims());
                worst = worst.max(verify::check_theorem4(&m, &x, &a).map_err(numerical)?);
            }
            checks.push(verify::CheckResult {
                name: "model_generator_identity".into(),
                samples: 100,
                max_defect: worst,
                threshold: 1e-8,
                pass: worst < 1e-8,
            });
        }
    }
    let pass = checks.iter().all(|c| c.pass);
    let doc = json!({"checks": checks, "pass": pass});
    emit(
        manifest.out.as_deref(),
        &(serde_json::to_string_pretty(&doc).map_err(Error::from)? + "\n"),
    )?;
    Ok(if pass { EXIT_OK } else { EXIT_CHECK_FAILED })
}

fn emit(out: Option<&Path>, text: &str) -> Result<()> {
    match out {
        Some(path) => write_atomic(path, text),
        None => {
            std::io::stdout().write_all(text.as_bytes())?;
            Ok(())
        }
    }
}

/// Writes to a temporary file in the target directory, then renames it.
pub fn write_atomic(path: &Path, text: &str) -> Result<()> {
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p,
        _ => Path::new("."),
    };
    let mut tmp = tempfile::NamedTempFile::new_in(dir)?;
    tmp.write_all(text.as_bytes())?;
    tmp.flush()?;
    tmp.persist(path).map_err(|e| Error::Io(e.to_string()))?;
    Ok(())
}
