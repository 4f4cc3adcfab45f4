// Copyright 2026 EEQT Contributors
// SPDX-License-Identifier: Apache-2.0

//! Two unravelings of one Lindblad equation on a single Hilbert space:
//! quantum state diffusion (Brownian, continuous paths) and Monte Carlo
//! wavefunction jumps (point process). Both average to the same density
//! matrix while their sample paths look nothing alike.
//!
//! For a jump operator `a` and normalized expectations `⟨·⟩`, the diffusion
//! is `dψ = f(ψ) dB + g(ψ) dt` with
//!
//! ```text
//! f(ψ) = aψ - ⟨a⟩ψ
//! g(ψ) = (⟨a*⟩a - ½a*a)ψ - ½⟨a*⟩⟨a⟩ψ
//! ```
//!
//! and `B` a real Brownian motion (one per jump operator).

use num_complex::Complex64;

use crate::ensemble::{run_indexed, EnsembleAccumulator, EnsembleEstimate};
use crate::error::{Error, Result};
use crate::flow::{self, FlowCache, JumpDynamics, JumpOutcome};
use crate::model::{Lindbladian, PureLindbladModel};
use crate::numerics::{
    c64, check_normalized, expectation, normalized, outer, CMatrix, CVector, RngStream,
    ToleranceConfig,
};
use crate::pdp::SimulationConfig;

#[derive(Debug, Clone, PartialEq)]
pub struct DiffusionConfig {
    pub dt: f64,
    pub horizon: f64,
    pub grid: Vec<f64>,
    pub seed: u64,
    pub n_trajectories: usize,
    pub renormalize_each_step: bool,
}

impl DiffusionConfig {
    pub fn new(
        dt: f64,
        horizon: f64,
        grid: Vec<f64>,
        seed: u64,
        n_trajectories: usize,
    ) -> Result<Self> {
        let cfg = Self {
            dt,
            horizon,
            grid,
            seed,
            n_trajectories,
            renormalize_each_step: true,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.dt > 0.0 && self.dt.is_finite()) {
            return Err(Error::InvalidConfig(format!(
                "dt must be positive, got {}",
                self.dt
            )));
        }
        flow::check_grid(&self.grid, self.horizon)
    }
}

/// Global phase `e^{ih}` applied to the post-jump state.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum JumpPhaseChoice {
    /// `h = 0`: the phase is fixed so the first largest-modulus component
    /// of the post-jump vector is real and positive.
    #[default]
    Zero,
    /// The compact image `aψ / ‖aψ‖`. For the decay operator this is the
    /// choice `e^{ih} = ψ₂ / |ψ₂|`.
    Literal,
}

fn require_nonzero(psi: &CVector) -> Result<()> {
    if psi.norm_squared() == 0.0 || !psi.norm_squared().is_finite() {
        return Err(Error::ZeroVector);
    }
    Ok(())
}

pub fn qsd_drift(a: &CMatrix, psi: &CVector) -> Result<CVector> {
    require_nonzero(psi)?;
    let mean_a = expectation(a, psi)?;
    let mean_ad = mean_a.conj();
    let a_psi = a * psi;
    let ada_psi = a.adjoint() * &a_psi;
    Ok(a_psi * mean_ad - ada_psi.scale(0.5) - psi * (mean_ad * mean_a * 0.5))
}

pub fn qsd_diffusion(a: &CMatrix, psi: &CVector) -> Result<CVector> {
    require_nonzero(psi)?;
    let mean_a = expectation(a, psi)?;
    Ok(a * psi - psi * mean_a)
}

#[derive(Debug, Clone, PartialEq)]
pub struct DiffusionTrajectory {
    pub grid_states: Vec<(f64, CVector)>,
    pub stream_index: u64,
}

fn qsd_total_drift(model: &PureLindbladModel, psi: &CVector) -> Result<CVector> {
    let mut g = (model.hamiltonian() * psi) * c64(0.0, -1.0);
    for a in model.lindblad_ops() {
        g += qsd_drift(a, psi)?;
    }
    Ok(g)
}

/// Euler–Maruyama integration of the diffusion, renormalizing after every
/// step unless disabled. Each step draws one standard normal per Lindblad
/// operator, in operator order.
pub fn qsd_simulate(
    model: &PureLindbladModel,
    psi0: &CVector,
    config: &DiffusionConfig,
    stream: &mut RngStream,
) -> Result<DiffusionTrajectory> {
    Ok(qsd_simulate_levels(model, psi0, config, stream, 1)?.remove(0))
}

/// Simulates the same Brownian path at step sizes `dt, dt/2, …, dt/2^(levels-1)`.
///
/// Normals are drawn at the finest level; coarser increments are sums of the
/// finer ones, so differences between levels isolate the discretization
/// error. With `levels = 1` this is exactly [`qsd_simulate`].
pub fn qsd_simulate_levels(
    model: &PureLindbladModel,
    psi0: &CVector,
    config: &DiffusionConfig,
    stream: &mut RngStream,
    levels: usize,
) -> Result<Vec<DiffusionTrajectory>> {
    config.validate()?;
    if levels == 0 || levels > 16 {
        return Err(Error::InvalidConfig(format!(
            "unsupported level count {levels}"
        )));
    }
    check_normalized(psi0, ToleranceConfig::default().normalization)?;
    if psi0.len() != model.dim() {
        return Err(Error::Dimension(format!(
            "state of length {} for a model of dimension {}",
            psi0.len(),
            model.dim()
        )));
    }

    let n_ops = model.lindblad_ops().len();
    let fine_per_coarse = 1usize << (levels - 1);
    let mut states: Vec<CVector> = vec![psi0.clone(); levels];
    let mut out: Vec<Vec<(f64, CVector)>> = vec![Vec::with_capacity(config.grid.len()); levels];
    let mut t = 0.0f64;
    let mut fine_increments = vec![0.0f64; fine_per_coarse * n_ops];
    let mut increments = vec![0.0f64; n_ops];

    for &stop in &config.grid {
        let span = stop - t;
        let coarse_steps = if span <= 0.0 {
            0
        } else {
            ((span / config.dt) - 1e-9).ceil().max(1.0) as usize
        };
        if coarse_steps > 0 {
            let h_coarse = span / coarse_steps as f64;
            let h_fine = h_coarse / fine_per_coarse as f64;
            let sqrt_fine = h_fine.sqrt();
            for step in 0..coarse_steps {
                for z in fine_increments.iter_mut() {
                    *z = stream.standard_normal() * sqrt_fine;
                }
                for (level, psi) in states.iter_mut().enumerate() {
                    // level l takes sub-steps covering 2^(levels-1-l) fine increments
                    let group = fine_per_coarse >> level;
                    let h = h_fine * group as f64;
                    let time = t + (step as f64 + 1.0) * h_coarse;
                    for sub in 0..(fine_per_coarse / group) {
                        for (k, inc) in increments.iter_mut().enumerate() {
                            *inc = (0..group)
                                .map(|j| fine_increments[(sub * group + j) * n_ops + k])
                                .sum();
                        }
                        *psi = euler_step(
                            model,
                            psi,
                            h,
                            &increments,
                            config.renormalize_each_step,
                            time,
                        )?;
                    }
                }
            }
        }
        t = stop;
        for (level, psi) in states.iter().enumerate() {
            out[level].push((
                stop,
                normalized(psi).map_err(|_| Error::StepCollapse { time: stop })?,
            ));
        }
    }
    Ok(out
        .into_iter()
        .map(|grid_states| DiffusionTrajectory {
            grid_states,
            stream_index: stream.stream_index(),
        })
        .collect())
}

fn euler_step(
    model: &PureLindbladModel,
    psi: &CVector,
    h: f64,
    increments: &[f64],
    renormalize: bool,
    time: f64,
) -> Result<CVector> {
    let mut next = psi + qsd_total_drift(model, psi)? * c64(h, 0.0);
    for (a, &db) in model.lindblad_ops().iter().zip(increments) {
        next += qsd_diffusion(a, psi)? * c64(db, 0.0);
    }
    let n2 = next.norm_squared();
    if n2 == 0.0 || !n2.is_finite() {
        return Err(Error::StepCollapse { time });
    }
    if renormalize {
        next.unscale_mut(n2.sqrt());
    }
    Ok(next)
}

/// `⟨a*a⟩_ψ`.
pub fn mcwf_rate(a: &CMatrix, psi: &CVector) -> Result<f64> {
    require_nonzero(psi)?;
    Ok((a * psi).norm_squared() / psi.norm_squared())
}

/// `½(-a*a + ⟨a*a⟩)ψ`, the no-jump drift of the normalized state.
pub fn mcwf_deterministic_drift(a: &CMatrix, psi: &CVector) -> Result<CVector> {
    let rate = mcwf_rate(a, psi)?;
    let ada_psi = a.adjoint() * (a * psi);
    Ok((psi.scale(rate) - ada_psi).scale(0.5))
}

/// `e^{ih} aψ / ‖aψ‖`.
pub fn mcwf_jump(a: &CMatrix, psi: &CVector, phase: JumpPhaseChoice) -> Result<CVector> {
    let image = a * psi;
    let norm = image.norm();
    if norm == 0.0 {
        return Err(Error::DarkState);
    }
    let unit = image.unscale(norm);
    Ok(match phase {
        JumpPhaseChoice::Literal => unit,
        JumpPhaseChoice::Zero => remove_global_phase(unit),
    })
}

fn remove_global_phase(v: CVector) -> CVector {
    let max = v.iter().map(|z| z.norm()).fold(0.0, f64::max);
    let pivot = v
        .iter()
        .find(|z| z.norm() >= max * (1.0 - 1e-12))
        .copied()
        .unwrap_or(Complex64::new(1.0, 0.0));
    let rot = pivot.conj() / pivot.norm();
    v * rot
}

struct McwfDynamics<'a> {
    model: &'a PureLindbladModel,
    phase: JumpPhaseChoice,
}

impl JumpDynamics for McwfDynamics<'_> {
    fn sector_dims(&self) -> &[usize] {
        self.model.dims()
    }

    fn no_jump_generator(&self, sector: usize) -> Result<&CMatrix> {
        if sector != 0 {
            return Err(Error::InvalidSector(sector));
        }
        Ok(self.model.no_jump_generator())
    }

    fn jump(&self, _sector: usize, psi: &CVector, u: f64) -> Result<JumpOutcome> {
        let rates: Vec<f64> = self
            .model
            .lindblad_ops()
            .iter()
            .map(|a| (a * psi).norm_squared())
            .collect();
        let total: f64 = rates.iter().sum();
        if total.is_nan() || total <= 0.0 {
            return Err(Error::DarkState);
        }
        let target = u * total;
        let mut acc = 0.0;
        let mut channel = None;
        for (k, &r) in rates.iter().enumerate() {
            if r <= 0.0 {
                continue;
            }
            channel = Some(k);
            acc += r;
            if target < acc {
                break;
            }
        }
        let channel = channel.ok_or(Error::DarkState)?;
        let psi = mcwf_jump(&self.model.lindblad_ops()[channel], psi, self.phase)?;
        Ok(JumpOutcome {
            to: 0,
            channel,
            psi,
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct McwfJump {
    pub time: f64,
    /// Index of the Lindblad operator that fired.
    pub channel: usize,
    /// Normalized post-jump state.
    pub psi: CVector,
}

#[derive(Debug, Clone, PartialEq)]
pub struct JumpTrajectory {
    pub grid_states: Vec<(f64, CVector)>,
    pub jumps: Vec<McwfJump>,
    pub horizon: f64,
    pub stream_index: u64,
}

impl JumpTrajectory {
    pub fn jumps_until(&self, t: f64) -> usize {
        self.jumps.iter().take_while(|j| j.time <= t).count()
    }

    /// Waiting times between consecutive jumps, starting from `t = 0`.
    pub fn waiting_times(&self) -> Vec<f64> {
        let mut last = 0.0;
        self.jumps
            .iter()
            .map(|j| {
                let w = j.time - last;
                last = j.time;
                w
            })
            .collect()
    }
}

impl JumpTrajectory {
    /// JSON lines in time order; jumps carry `"channel"` and keep sector 0.
    pub fn to_jsonl(&self) -> String {
        let mut lines: Vec<(f64, u8, serde_json::Value)> = self
            .jumps
            .iter()
            .map(|j| {
                (
                    j.time,
                    0,
                    serde_json::json!({
                        "trajectory": self.stream_index,
                        "t": j.time,
                        "event": "jump",
                        "from": 0,
                        "to": 0,
                        "channel": j.channel,
                        "psi": crate::io::vector_to_json(&j.psi),
                    }),
                )
            })
            .collect();
        lines.extend(
            self.grid_states
                .iter()
                .map(|(t, psi)| (*t, 1, sample_line(self.stream_index, *t, psi))),
        );
        lines.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
        lines
            .into_iter()
            .map(|(_, _, v)| v.to_string() + "\n")
            .collect()
    }
}

impl DiffusionTrajectory {
    pub fn to_jsonl(&self) -> String {
        self.grid_states
            .iter()
            .map(|(t, psi)| sample_line(self.stream_index, *t, psi).to_string() + "\n")
            .collect()
    }
}

fn sample_line(trajectory: u64, t: f64, psi: &CVector) -> serde_json::Value {
    serde_json::json!({
        "trajectory": trajectory,
        "t": t,
        "event": "sample",
        "sector": 0,
        "psi": crate::io::vector_to_json(psi),
    })
}

/// Jump unraveling: no-jump flow under `exp((-iH - ½Σ a_k* a_k) t)` with the
/// same waiting-time sampler as the hybrid process.
pub fn mcwf_simulate(
    model: &PureLindbladModel,
    psi0: &CVector,
    config: &SimulationConfig,
    phase: JumpPhaseChoice,
    stream: &mut RngStream,
) -> Result<JumpTrajectory> {
    config.validate()?;
    let dynamics = McwfDynamics { model, phase };
    let cache = FlowCache::new(&dynamics, config.max_flow_step)?;
    mcwf_with_cache(&dynamics, &cache, psi0, config, stream)
}

fn mcwf_with_cache(
    dynamics: &McwfDynamics<'_>,
    cache: &FlowCache,
    psi0: &CVector,
    config: &SimulationConfig,
    stream: &mut RngStream,
) -> Result<JumpTrajectory> {
    check_normalized(psi0, ToleranceConfig::default().normalization)?;
    if psi0.len() != dynamics.model.dim() {
        return Err(Error::Dimension(format!(
            "state of length {} for a model of dimension {}",
            psi0.len(),
            dynamics.model.dim()
        )));
    }
    let path = flow::simulate_path(
        dynamics,
        cache,
        0,
        psi0,
        &config.grid,
        config.horizon,
        stream,
    )?;
    Ok(JumpTrajectory {
        grid_states: path.samples.into_iter().map(|s| (s.time, s.psi)).collect(),
        jumps: path
            .events
            .into_iter()
            .map(|e| McwfJump {
                time: e.time,
                channel: e.channel,
                psi: e.psi,
            })
            .collect(),
        horizon: config.horizon,
        stream_index: stream.stream_index(),
    })
}

pub fn mcwf_ensemble(
    model: &PureLindbladModel,
    psi0: &CVector,
    config: &SimulationConfig,
    phase: JumpPhaseChoice,
    workers: usize,
) -> Result<Vec<JumpTrajectory>> {
    config.validate()?;
    let dynamics = McwfDynamics { model, phase };
    let cache = FlowCache::new(&dynamics, config.max_flow_step)?;
    run_indexed(config.n_trajectories, workers, |k| {
        let mut stream = RngStream::new(config.seed, k);
        mcwf_with_cache(&dynamics, &cache, psi0, config, &mut stream)
    })
}

pub fn qsd_ensemble(
    model: &PureLindbladModel,
    psi0: &CVector,
    config: &DiffusionConfig,
    workers: usize,
) -> Result<Vec<DiffusionTrajectory>> {
    run_indexed(config.n_trajectories, workers, |k| {
        let mut stream = RngStream::new(config.seed, k);
        qsd_simulate(model, psi0, config, &mut stream)
    })
}

/// Ensembles at `dt, dt/2, …` driven by shared Brownian paths.
pub fn qsd_ensemble_levels(
    model: &PureLindbladModel,
    psi0: &CVector,
    config: &DiffusionConfig,
    levels: usize,
    workers: usize,
) -> Result<Vec<EnsembleEstimate>> {
    let runs = run_indexed(config.n_trajectories, workers, |k| {
        let mut stream = RngStream::new(config.seed, k);
        qsd_simulate_levels(model, psi0, config, &mut stream, levels)
    })?;
    (0..levels)
        .map(|level| {
            estimate_from_states(
                model.dim(),
                &config.grid,
                runs.iter().map(|r| r[level].grid_states.as_slice()),
            )
        })
        .collect()
}

/// Mean projector over trajectories given as grid-state lists.
pub fn estimate_from_states<'a, I>(
    dim: usize,
    grid: &[f64],
    trajectories: I,
) -> Result<EnsembleEstimate>
where
    I: IntoIterator<Item = &'a [(f64, CVector)]>,
{
    let mut acc = EnsembleAccumulator::new(grid, &[dim]);
    for states in trajectories {
        acc.push_pure(states.iter().map(|(_, psi)| (0usize, psi)))?;
    }
    acc.finish()
}

/// σₓ model solution: `|ψ0⟩⟨ψ0|` after an even number of flips, the
/// swapped state `(z₂, z₁)` after an odd number.
pub fn sigma_x_closed_form(psi0: &CVector, jump_count: usize) -> Result<CMatrix> {
    check_normalized(psi0, ToleranceConfig::default().normalization)?;
    if psi0.len() != 2 {
        return Err(Error::Dimension("the σx closed form is for qubits".into()));
    }
    if jump_count.is_multiple_of(2) {
        Ok(outer(psi0))
    } else {
        let flipped = CVector::from_vec(vec![psi0[1], psi0[0]]);
        Ok(outer(&flipped))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::{max_abs_diff, pauli, projector, random, real_matrix, real_vector};

    fn tol() -> ToleranceConfig {
        ToleranceConfig::default()
    }

    fn plus() -> CVector {
        let s = 1.0 / 2f64.sqrt();
        real_vector(&[s, s])
    }

    fn model_with(a: CMatrix) -> PureLindbladModel {
        PureLindbladModel::new(CMatrix::zeros(2, 2), vec![a], &tol()).unwrap()
    }

    #[test]
    fn drift_and_diffusion_examples() {
        let up = real_vector(&[1.0, 0.0]);
        assert_eq!(
            qsd_drift(&pauli::x(), &up).unwrap(),
            real_vector(&[-0.5, 0.0])
        );
        assert!(qsd_drift(&pauli::x(), &plus()).unwrap().camax() < 1e-15);
        assert_eq!(
            qsd_drift(&CMatrix::zeros(2, 2), &up).unwrap(),
            CVector::zeros(2)
        );

        assert_eq!(
            qsd_diffusion(&pauli::x(), &up).unwrap(),
            real_vector(&[0.0, 1.0])
        );
        assert!(qsd_diffusion(&pauli::x(), &plus()).unwrap().camax() < 1e-15);
        let v = random::unit_vector(&mut RngStream::new(3, 0), 2);
        assert!(qsd_diffusion(&CMatrix::identity(2, 2), &v).unwrap().camax() < 1e-15);

        assert_eq!(
            qsd_drift(&pauli::x(), &CVector::zeros(2)).unwrap_err(),
            Error::ZeroVector
        );
    }

    #[test]
    fn qsd_norm_identities() {
        let mut rng = RngStream::new(21, 0);
        for _ in 0..500 {
            let n = 2 + (rng.uniform01() * 3.0) as usize;
            let a = random::complex_matrix(&mut rng, n, n, 1.0);
            let psi = random::unit_vector(&mut rng, n);
            let f = qsd_diffusion(&a, &psi).unwrap();
            let g = qsd_drift(&a, &psi).unwrap();
            assert!(psi.dotc(&f).re.abs() < 1e-12);
            assert!((2.0 * psi.dotc(&g).re + f.norm_squared()).abs() < 1e-12);
        }
    }

    #[test]
    fn qsd_fixed_points() {
        let cfg = DiffusionConfig::new(1e-3, 1.0, vec![0.0, 0.5, 1.0], 1, 1).unwrap();
        let free = PureLindbladModel::new(CMatrix::zeros(2, 2), vec![CMatrix::zeros(2, 2)], &tol())
            .unwrap();
        let up = real_vector(&[1.0, 0.0]);
        let tr = qsd_simulate(&free, &up, &cfg, &mut RngStream::new(1, 0)).unwrap();
        assert!(tr.grid_states.iter().all(|(_, v)| v == &up));

        let sx = model_with(pauli::x());
        let tr = qsd_simulate(&sx, &plus(), &cfg, &mut RngStream::new(1, 0)).unwrap();
        assert!(tr
            .grid_states
            .iter()
            .all(|(_, v)| (v - plus()).camax() < 1e-15));
    }

    #[test]
    fn qsd_levels_share_path() {
        let sx = model_with(pauli::x());
        let cfg = DiffusionConfig::new(0.01, 1.0, vec![0.0, 0.5, 1.0], 5, 1).unwrap();
        let up = real_vector(&[1.0, 0.0]);
        let single = qsd_simulate(&sx, &up, &cfg, &mut RngStream::new(5, 3)).unwrap();
        let again = qsd_simulate_levels(&sx, &up, &cfg, &mut RngStream::new(5, 3), 1).unwrap();
        assert_eq!(single, again[0]);
        let multi = qsd_simulate_levels(&sx, &up, &cfg, &mut RngStream::new(5, 3), 3).unwrap();
        // levels follow the same Brownian path, so they stay close pathwise
        let p0 = projector(&multi[0].grid_states[2].1).unwrap();
        let p2 = projector(&multi[2].grid_states[2].1).unwrap();
        assert!(max_abs_diff(&p0, &p2) < 0.2);
    }

    #[test]
    fn mcwf_rate_examples() {
        let v = random::unit_vector(&mut RngStream::new(4, 0), 2);
        assert!((mcwf_rate(&pauli::x(), &v).unwrap() - 1.0).abs() < 1e-14);
        assert_eq!(
            mcwf_rate(&pauli::lowering(), &real_vector(&[0.0, 1.0])).unwrap(),
            1.0
        );
        assert_eq!(
            mcwf_rate(&pauli::lowering(), &real_vector(&[1.0, 0.0])).unwrap(),
            0.0
        );
    }

    #[test]
    fn mcwf_drift_examples() {
        let v = random::unit_vector(&mut RngStream::new(4, 1), 2);
        assert!(mcwf_deterministic_drift(&pauli::x(), &v).unwrap().camax() < 1e-15);
        assert_eq!(
            mcwf_deterministic_drift(&pauli::lowering(), &real_vector(&[0.0, 1.0])).unwrap(),
            CVector::zeros(2)
        );
        let g = mcwf_deterministic_drift(&pauli::lowering(), &plus()).unwrap();
        let s = 0.25 / 2f64.sqrt();
        assert!((g - real_vector(&[s, -s])).camax() < 1e-15);
        let w = random::unit_vector(&mut RngStream::new(4, 2), 3);
        let a = random::complex_matrix(&mut RngStream::new(4, 3), 3, 3, 1.0);
        assert!(w.dotc(&mcwf_deterministic_drift(&a, &w).unwrap()).re.abs() < 1e-14);
    }

    #[test]
    fn mcwf_jump_examples() {
        let v = random::unit_vector(&mut RngStream::new(6, 0), 2);
        let out = mcwf_jump(&pauli::x(), &v, JumpPhaseChoice::Literal).unwrap();
        assert!((out - CVector::from_vec(vec![v[1], v[0]])).camax() < 1e-15);

        let d = mcwf_jump(
            &pauli::lowering(),
            &real_vector(&[0.0, 1.0]),
            JumpPhaseChoice::Zero,
        )
        .unwrap();
        assert_eq!(d, real_vector(&[1.0, 0.0]));

        let mut rng = RngStream::new(6, 1);
        for _ in 0..100 {
            let a = random::complex_matrix(&mut rng, 3, 3, 1.0);
            let psi = random::unit_vector(&mut rng, 3);
            let z = mcwf_jump(&a, &psi, JumpPhaseChoice::Zero).unwrap();
            let p = mcwf_jump(&a, &psi, JumpPhaseChoice::Literal).unwrap();
            assert!(max_abs_diff(&outer(&z), &outer(&p)) < 1e-12);
        }

        assert_eq!(
            mcwf_jump(
                &pauli::lowering(),
                &real_vector(&[1.0, 0.0]),
                JumpPhaseChoice::Zero
            )
            .unwrap_err(),
            Error::DarkState
        );
    }

    #[test]
    fn mcwf_flow_norm_decay_matches_rate() {
        let mut rng = RngStream::new(8, 0);
        for _ in 0..50 {
            let h = random::hermitian(&mut rng, 3, 1.0);
            let a = random::complex_matrix(&mut rng, 3, 3, 1.0);
            let psi = random::unit_vector(&mut rng, 3);
            let m = PureLindbladModel::new(h, vec![a.clone()], &tol()).unwrap();
            let dt = 1e-5;
            let k = m.no_jump_generator();
            let fwd = crate::numerics::matexp(&k.scale(dt)).unwrap() * &psi;
            let back = crate::numerics::matexp(&k.scale(-dt)).unwrap() * &psi;
            let decay = (back.norm_squared() - fwd.norm_squared()) / (2.0 * dt);
            assert!((decay - mcwf_rate(&a, &psi).unwrap()).abs() < 1e-6);
        }
    }

    #[test]
    fn decay_model_single_jump_then_dark() {
        let m = model_with(pauli::lowering());
        let cfg = SimulationConfig::uniform(20.0, 5, 3, 200).unwrap();
        let trs = mcwf_ensemble(
            &m,
            &real_vector(&[0.0, 1.0]),
            &cfg,
            JumpPhaseChoice::Zero,
            2,
        )
        .unwrap();
        for t in &trs {
            assert!(t.jumps.len() <= 1);
            assert_eq!(t.grid_states.last().unwrap().1, real_vector(&[1.0, 0.0]));
        }
        assert!(trs.iter().filter(|t| t.jumps.len() == 1).count() > 190);
    }

    #[test]
    fn no_operators_means_hamiltonian_flow() {
        let m = PureLindbladModel::new(pauli::z(), vec![], &tol()).unwrap();
        let cfg = SimulationConfig::uniform(1.0, 3, 1, 1).unwrap();
        let tr = mcwf_simulate(
            &m,
            &plus(),
            &cfg,
            JumpPhaseChoice::Zero,
            &mut RngStream::new(1, 0),
        )
        .unwrap();
        assert!(tr.jumps.is_empty());
        let last = &tr.grid_states[2].1;
        let expected = CVector::from_vec(vec![c64(0.0, -1.0).exp(), c64(0.0, 1.0).exp()])
            / c64(2f64.sqrt(), 0.0);
        assert!((last - expected).camax() < 1e-12);
    }

    #[test]
    fn closed_form_examples() {
        let up = real_vector(&[1.0, 0.0]);
        assert_eq!(sigma_x_closed_form(&up, 0).unwrap(), outer(&up));
        assert_eq!(
            sigma_x_closed_form(&up, 1).unwrap(),
            real_matrix(2, 2, &[0.0, 0.0, 0.0, 1.0])
        );
        assert_eq!(sigma_x_closed_form(&up, 2).unwrap(), outer(&up));
    }

    #[test]
    fn phase_choice_is_pathwise_invisible() {
        let m = model_with(pauli::x());
        let cfg = SimulationConfig::uniform(3.0, 13, 9, 1).unwrap();
        let psi0 = random::unit_vector(&mut RngStream::new(10, 0), 2);
        for k in 0..50 {
            let a = mcwf_simulate(
                &m,
                &psi0,
                &cfg,
                JumpPhaseChoice::Zero,
                &mut RngStream::new(9, k),
            )
            .unwrap();
            let b = mcwf_simulate(
                &m,
                &psi0,
                &cfg,
                JumpPhaseChoice::Literal,
                &mut RngStream::new(9, k),
            )
            .unwrap();
            assert_eq!(a.jumps.len(), b.jumps.len());
            for (x, y) in a.jumps.iter().zip(&b.jumps) {
                assert!((x.time - y.time).abs() < 1e-9 && x.channel == y.channel);
            }
            for ((_, x), (_, y)) in a.grid_states.iter().zip(&b.grid_states) {
                assert!(max_abs_diff(&outer(x), &outer(y)) < 1e-12);
            }
        }
    }
}
