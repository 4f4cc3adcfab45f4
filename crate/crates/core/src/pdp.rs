// Copyright 2026 EEQT Contributors
// SPDX-License-Identifier: Apache-2.0

//! The hybrid event process: a piecewise-deterministic Markov process on
//! pairs (sector α, unit ψ).
//!
//! In sector α the state flows under `exp((-iH_α - ½Λ_α) t)` and is
//! renormalized when emitted. Events fire with intensity
//! `λ(ψ, α) = ⟨ψ|Λ_α|ψ⟩ = Σ_β ‖g_βα ψ‖²`; the event α → β is chosen with
//! probability `‖g_βα ψ‖² / λ` and maps ψ to `g_βα ψ / ‖g_βα ψ‖`.

use serde_json::json;

use crate::ensemble::{run_indexed, EnsembleAccumulator, EnsembleEstimate};
use crate::error::{Error, Result};
use crate::flow::{self, FlowCache, FlowOutcome, JumpDynamics, JumpOutcome};
use crate::model::{HybridModel, HybridPureState, Lindbladian};
use crate::numerics::{check_normalized, matexp, CMatrix, CVector, RngStream, ToleranceConfig};

pub const DEFAULT_MAX_FLOW_STEP: f64 = 0.01;

#[derive(Debug, Clone, PartialEq)]
pub struct SimulationConfig {
    pub horizon: f64,
    pub grid: Vec<f64>,
    pub max_flow_step: f64,
    pub seed: u64,
    pub n_trajectories: usize,
}

impl SimulationConfig {
    pub fn new(
        horizon: f64,
        grid: Vec<f64>,
        max_flow_step: f64,
        seed: u64,
        n_trajectories: usize,
    ) -> Result<Self> {
        let cfg = Self {
            horizon,
            grid,
            max_flow_step,
            seed,
            n_trajectories,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    /// `grid_points` uniform samples on `[0, horizon]` and the default flow step.
    pub fn uniform(
        horizon: f64,
        grid_points: usize,
        seed: u64,
        n_trajectories: usize,
    ) -> Result<Self> {
        Self::new(
            horizon,
            flow::uniform_grid(horizon, grid_points),
            DEFAULT_MAX_FLOW_STEP,
            seed,
            n_trajectories,
        )
    }

    pub fn validate(&self) -> Result<()> {
        flow::check_grid(&self.grid, self.horizon)?;
        if !(self.max_flow_step > 0.0 && self.max_flow_step.is_finite()) {
            return Err(Error::InvalidConfig(format!(
                "max_flow_step must be positive, got {}",
                self.max_flow_step
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct JumpEvent {
    pub time: f64,
    pub from: usize,
    pub to: usize,
    pub psi: CVector,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrajectoryRecord {
    pub initial: HybridPureState,
    pub events: Vec<JumpEvent>,
    pub grid_states: Vec<(f64, HybridPureState)>,
    pub horizon: f64,
    pub stream_index: u64,
}

impl TrajectoryRecord {
    /// Number of events up to and including time `t`.
    pub fn count_until(&self, t: f64) -> usize {
        self.events.iter().take_while(|e| e.time <= t).count()
    }

    /// Checks ordering, sector chaining and that no event keeps its sector.
    pub fn check_invariants(&self) -> Result<()> {
        let mut sector = self.initial.sector;
        let mut last = 0.0f64;
        for (k, e) in self.events.iter().enumerate() {
            let bad = (k > 0 && e.time <= last)
                || e.time > self.horizon
                || e.from != sector
                || e.from == e.to;
            if bad {
                return Err(Error::InvalidConfig(format!(
                    "illegal event {k} in trajectory {}: {:?}",
                    self.stream_index, e
                )));
            }
            last = e.time;
            sector = e.to;
        }
        Ok(())
    }

    /// One JSON object per line: jumps and grid samples merged in time order.
    pub fn to_jsonl(&self) -> String {
        let mut lines: Vec<(f64, u8, serde_json::Value)> = Vec::new();
        for e in &self.events {
            lines.push((
                e.time,
                0,
                json!({
                    "trajectory": self.stream_index,
                    "t": e.time,
                    "event": "jump",
                    "from": e.from,
                    "to": e.to,
                    "psi": crate::io::vector_to_json(&e.psi),
                }),
            ));
        }
        for (t, x) in &self.grid_states {
            lines.push((
                *t,
                1,
                json!({
                    "trajectory": self.stream_index,
                    "t": t,
                    "event": "sample",
                    "sector": x.sector,
                    "psi": crate::io::vector_to_json(&x.psi),
                }),
            ));
        }
        lines.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
        let mut out = String::new();
        for (_, _, v) in lines {
            out.push_str(&v.to_string());
            out.push('\n');
        }
        out
    }
}

/// `exp((-iH_α - ½Λ_α) dt) ψ`, unnormalized.
pub fn effective_flow(
    model: &HybridModel,
    alpha: usize,
    psi: &CVector,
    dt: f64,
) -> Result<CVector> {
    if dt < 0.0 {
        return Err(Error::NegativeTime(dt));
    }
    let k = model.no_jump_generator(alpha)?;
    check_len(model, alpha, psi)?;
    Ok(matexp(&k.scale(dt))? * psi)
}

fn check_len(model: &HybridModel, alpha: usize, psi: &CVector) -> Result<()> {
    let n = *model.dims().get(alpha).ok_or(Error::InvalidSector(alpha))?;
    if psi.len() != n {
        return Err(Error::Dimension(format!(
            "state of length {} in sector {alpha} of dimension {n}",
            psi.len()
        )));
    }
    Ok(())
}

/// `‖g_βα ψ‖²` for every outgoing coupling, ascending in β.
pub fn channel_rates(
    model: &HybridModel,
    alpha: usize,
    psi: &CVector,
) -> Result<Vec<(usize, f64)>> {
    check_len(model, alpha, psi)?;
    Ok(model
        .outgoing(alpha)
        .map(|c| (c.to, (&c.matrix * psi).norm_squared()))
        .collect())
}

/// `λ(ψ, α) = Σ_β ‖g_βα ψ‖²` for a unit ψ.
pub fn jump_intensity(model: &HybridModel, alpha: usize, psi: &CVector) -> Result<f64> {
    check_normalized(psi, ToleranceConfig::default().normalization)?;
    Ok(channel_rates(model, alpha, psi)?
        .iter()
        .map(|(_, r)| r)
        .sum())
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum WaitingTime {
    JumpAt(f64),
    SurvivesHorizon,
}

/// Smallest `t ≤ horizon` with `‖exp((-iH_α-½Λ_α)t)ψ‖² = r`.
pub fn sample_waiting_time(
    model: &HybridModel,
    alpha: usize,
    psi: &CVector,
    r: f64,
    horizon: f64,
) -> Result<WaitingTime> {
    sample_waiting_time_with_step(model, alpha, psi, r, horizon, DEFAULT_MAX_FLOW_STEP)
}

pub fn sample_waiting_time_with_step(
    model: &HybridModel,
    alpha: usize,
    psi: &CVector,
    r: f64,
    horizon: f64,
    step: f64,
) -> Result<WaitingTime> {
    if !(r > 0.0 && r < 1.0) {
        return Err(Error::InvalidConfig(format!("clock draw {r} not in (0,1)")));
    }
    check_len(model, alpha, psi)?;
    let k = model.no_jump_generator(alpha)?;
    let cached = matexp(&k.scale(step))?;
    Ok(
        match flow::first_passage(k, Some(&cached), step, psi, horizon, r)? {
            FlowOutcome::Jumped { time, .. } => WaitingTime::JumpAt(time),
            FlowOutcome::Reached(_) => WaitingTime::SurvivesHorizon,
        },
    )
}

/// Picks β by cumulative scan of `‖g_βα ψ‖² / λ` in ascending β and returns
/// `(β, g_βα ψ / ‖g_βα ψ‖)`.
pub fn sample_jump_target(
    model: &HybridModel,
    alpha: usize,
    psi: &CVector,
    u: f64,
) -> Result<(usize, CVector)> {
    let rates = channel_rates(model, alpha, psi)?;
    let total: f64 = rates.iter().map(|(_, r)| r).sum();
    if total.is_nan() || total <= 0.0 {
        return Err(Error::ZeroIntensity { sector: alpha });
    }
    let target = u * total;
    let mut acc = 0.0;
    let mut chosen = None;
    for &(beta, r) in &rates {
        if r <= 0.0 {
            continue;
        }
        chosen = Some(beta);
        acc += r;
        if target < acc {
            break;
        }
    }
    // some rate is positive because total > 0
    let beta = chosen.ok_or(Error::ZeroIntensity { sector: alpha })?;
    let g = model
        .coupling(beta, alpha)
        .ok_or(Error::ZeroIntensity { sector: alpha })?;
    let image = g * psi;
    let norm = image.norm();
    Ok((beta, image.unscale(norm)))
}

impl JumpDynamics for HybridModel {
    fn sector_dims(&self) -> &[usize] {
        self.dims()
    }

    fn no_jump_generator(&self, sector: usize) -> Result<&CMatrix> {
        HybridModel::no_jump_generator(self, sector)
    }

    fn jump(&self, sector: usize, psi: &CVector, u: f64) -> Result<JumpOutcome> {
        let (to, psi) = sample_jump_target(self, sector, psi, u)?;
        Ok(JumpOutcome {
            to,
            channel: to,
            psi,
        })
    }
}

/// One sample history of the event process.
pub fn simulate_trajectory(
    model: &HybridModel,
    x0: &HybridPureState,
    config: &SimulationConfig,
    stream: &mut RngStream,
) -> Result<TrajectoryRecord> {
    config.validate()?;
    let cache = FlowCache::new(model, config.max_flow_step)?;
    simulate_with_cache(model, &cache, x0, config, stream)
}

fn simulate_with_cache(
    model: &HybridModel,
    cache: &FlowCache,
    x0: &HybridPureState,
    config: &SimulationConfig,
    stream: &mut RngStream,
) -> Result<TrajectoryRecord> {
    x0.check_against(model.dims())?;
    let path = flow::simulate_path(
        model,
        cache,
        x0.sector,
        &x0.psi,
        &config.grid,
        config.horizon,
        stream,
    )?;
    Ok(TrajectoryRecord {
        initial: x0.clone(),
        events: path
            .events
            .into_iter()
            .map(|e| JumpEvent {
                time: e.time,
                from: e.from,
                to: e.to,
                psi: e.psi,
            })
            .collect(),
        grid_states: path
            .samples
            .into_iter()
            .map(|s| {
                (
                    s.time,
                    HybridPureState {
                        sector: s.sector,
                        psi: s.psi,
                    },
                )
            })
            .collect(),
        horizon: config.horizon,
        stream_index: stream.stream_index(),
    })
}

/// Trajectories `0..n` with streams `(config.seed, k)`, in index order.
pub fn simulate_ensemble(
    model: &HybridModel,
    x0: &HybridPureState,
    config: &SimulationConfig,
    workers: usize,
) -> Result<Vec<TrajectoryRecord>> {
    config.validate()?;
    x0.check_against(model.dims())?;
    let cache = FlowCache::new(model, config.max_flow_step)?;
    run_indexed(config.n_trajectories, workers, |k| {
        let mut stream = RngStream::new(config.seed, k);
        simulate_with_cache(model, &cache, x0, config, &mut stream)
    })
}

/// Mean of the embedded grid states over the ensemble.
pub fn ensemble_density(
    model: &HybridModel,
    x0: &HybridPureState,
    config: &SimulationConfig,
    workers: usize,
) -> Result<EnsembleEstimate> {
    let records = simulate_ensemble(model, x0, config, workers)?;
    estimate_from_records(model.dims(), &config.grid, &records)
}

pub fn estimate_from_records(
    dims: &[usize],
    grid: &[f64],
    records: &[TrajectoryRecord],
) -> Result<EnsembleEstimate> {
    let mut acc = EnsembleAccumulator::new(grid, dims);
    for r in records {
        acc.push_pure(r.grid_states.iter().map(|(_, x)| (x.sector, &x.psi)))?;
    }
    acc.finish()
}
