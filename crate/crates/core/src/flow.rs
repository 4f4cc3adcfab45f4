// Copyright 2026 EEQT Contributors
// SPDX-License-Identifier: Apache-2.0

//! Piecewise-deterministic trajectory engine shared by the hybrid event
//! process and the Monte Carlo wavefunction unraveling.
//!
//! Between jumps the unnormalized vector follows `φ' = Kφ` with
//! `K = -iH - ½Λ`; its squared norm is the survival probability since the
//! last jump. A jump fires when the squared norm first falls to a fresh
//! uniform draw `r`: the flow is stepped with a cached `exp(K·Δt)`, and the
//! bracketing step is bisected.

use crate::error::{Error, Result};
use crate::numerics::{matexp, normalized, CMatrix, CVector, RngStream};

/// Bisection stops once the bracket is narrower than this.
pub const WAITING_TIME_RESOLUTION: f64 = 1e-11;

const TIME_EPS: f64 = 1e-13;

/// Result of a jump: target sector, which channel fired, and the
/// normalized post-jump state.
#[derive(Debug, Clone, PartialEq)]
pub struct JumpOutcome {
    pub to: usize,
    pub channel: usize,
    pub psi: CVector,
}

/// Dynamics that can be unravelled into a piecewise-deterministic process.
pub trait JumpDynamics: Sync {
    fn sector_dims(&self) -> &[usize];

    /// `K = -iH - ½Λ` for `sector`.
    fn no_jump_generator(&self, sector: usize) -> Result<&CMatrix>;

    /// Applies a jump to the unit state `psi` using the uniform variate `u`.
    fn jump(&self, sector: usize, psi: &CVector, u: f64) -> Result<JumpOutcome>;
}

#[derive(Debug, Clone, PartialEq)]
pub enum FlowOutcome {
    /// Reached the stop time without a jump; carries the raw flowed vector.
    Reached(CVector),
    /// Survival hit the threshold at `time`; `psi` is the raw vector there.
    Jumped { time: f64, psi: CVector },
}

/// Evolves `phi` under `exp(K s)` for `s` up to `span`, stopping at the
/// smallest `s` where `‖exp(K s) phi‖² <= threshold`. Jump times in the
/// outcome are relative to the start of the span.
pub fn first_passage(
    generator: &CMatrix,
    step_propagator: Option<&CMatrix>,
    step: f64,
    phi: &CVector,
    span: f64,
    threshold: f64,
) -> Result<FlowOutcome> {
    let mut t = 0.0;
    let mut current = phi.clone();
    while span - t > TIME_EPS {
        let h = step.min(span - t);
        let next = match step_propagator {
            Some(u) if h == step => u * &current,
            _ => matexp(&generator.scale(h))? * &current,
        };
        if next.norm_squared() <= threshold {
            let (s, psi) = bisect(generator, &current, h, threshold)?;
            return Ok(FlowOutcome::Jumped { time: t + s, psi });
        }
        current = next;
        t += h;
    }
    Ok(FlowOutcome::Reached(current))
}

fn bisect(generator: &CMatrix, phi: &CVector, h: f64, threshold: f64) -> Result<(f64, CVector)> {
    let (mut lo, mut hi) = (0.0f64, h);
    let mut at_hi: Option<CVector> = None;
    while hi - lo > WAITING_TIME_RESOLUTION {
        let mid = 0.5 * (lo + hi);
        let v = matexp(&generator.scale(mid))? * phi;
        if v.norm_squared() <= threshold {
            hi = mid;
            at_hi = Some(v);
        } else {
            lo = mid;
        }
    }
    let psi = match at_hi {
        Some(v) => v,
        None => matexp(&generator.scale(hi))? * phi,
    };
    Ok((hi, psi))
}

/// Per-sector `exp(K·Δt)` cache for one simulation run.
#[derive(Debug, Clone)]
pub struct FlowCache {
    step: f64,
    propagators: Vec<CMatrix>,
}

impl FlowCache {
    pub fn new<D: JumpDynamics + ?Sized>(dynamics: &D, step: f64) -> Result<Self> {
        if !(step > 0.0 && step.is_finite()) {
            return Err(Error::InvalidConfig(format!(
                "max flow step must be positive, got {step}"
            )));
        }
        let propagators = (0..dynamics.sector_dims().len())
            .map(|s| matexp(&dynamics.no_jump_generator(s)?.scale(step)))
            .collect::<Result<Vec<_>>>()?;
        Ok(Self { step, propagators })
    }

    pub fn step(&self) -> f64 {
        self.step
    }

    fn advance<D: JumpDynamics + ?Sized>(
        &self,
        dynamics: &D,
        sector: usize,
        phi: &CVector,
        span: f64,
        threshold: f64,
    ) -> Result<FlowOutcome> {
        let k = dynamics.no_jump_generator(sector)?;
        first_passage(
            k,
            Some(&self.propagators[sector]),
            self.step,
            phi,
            span,
            threshold,
        )
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PathEvent {
    pub time: f64,
    pub from: usize,
    pub to: usize,
    pub channel: usize,
    /// Normalized post-jump state.
    pub psi: CVector,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PathSample {
    pub time: f64,
    pub sector: usize,
    /// Normalized state at `time`.
    pub psi: CVector,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Path {
    pub events: Vec<PathEvent>,
    pub samples: Vec<PathSample>,
}

/// Simulates one trajectory from the unit state `psi0` in `sector0`,
/// sampling at each `grid` time (sorted, within `[0, horizon]`).
///
/// Draw order on `stream`: one open-uniform clock per inter-jump segment,
/// then one uniform per jump for the target choice.
pub fn simulate_path<D: JumpDynamics + ?Sized>(
    dynamics: &D,
    cache: &FlowCache,
    sector0: usize,
    psi0: &CVector,
    grid: &[f64],
    horizon: f64,
    stream: &mut RngStream,
) -> Result<Path> {
    let mut sector = sector0;
    let mut phi = psi0.clone();
    let mut t = 0.0;
    let mut threshold = stream.uniform_open01();
    let mut events = Vec::new();
    let mut samples = Vec::with_capacity(grid.len());

    let stops = grid
        .iter()
        .map(|&g| (g, true))
        .chain(std::iter::once((horizon, false)));
    for (stop, is_sample) in stops {
        loop {
            match cache.advance(dynamics, sector, &phi, stop - t, threshold)? {
                FlowOutcome::Reached(v) => {
                    phi = v;
                    t = t.max(stop);
                    if is_sample {
                        samples.push(PathSample {
                            time: stop,
                            sector,
                            psi: normalized(&phi)?,
                        });
                    }
                    break;
                }
                FlowOutcome::Jumped { time, psi } => {
                    let at = t + time;
                    let unit = normalized(&psi)?;
                    let u = stream.uniform01();
                    let outcome = dynamics.jump(sector, &unit, u)?;
                    events.push(PathEvent {
                        time: at,
                        from: sector,
                        to: outcome.to,
                        channel: outcome.channel,
                        psi: outcome.psi.clone(),
                    });
                    sector = outcome.to;
                    phi = outcome.psi;
                    t = at;
                    threshold = stream.uniform_open01();
                }
            }
        }
    }
    Ok(Path { events, samples })
}

/// Checks `grid` is sorted and inside `[0, horizon]`.
pub fn check_grid(grid: &[f64], horizon: f64) -> Result<()> {
    if !(horizon >= 0.0 && horizon.is_finite()) {
        return Err(Error::InvalidConfig(format!("bad horizon {horizon}")));
    }
    if grid.iter().any(|&g| !(0.0..=horizon).contains(&g)) {
        return Err(Error::InvalidConfig(format!(
            "grid times must lie in [0, {horizon}]"
        )));
    }
    if grid.windows(2).any(|w| w[1] < w[0]) {
        return Err(Error::InvalidConfig("grid times must be sorted".into()));
    }
    Ok(())
}

/// `count` evenly spaced times on `[0, horizon]` (just `[0]` for one point).
pub fn uniform_grid(horizon: f64, count: usize) -> Vec<f64> {
    match count {
        0 => Vec::new(),
        1 => vec![0.0],
        _ => (0..count)
            .map(|k| {
                if k + 1 == count {
                    horizon
                } else {
                    horizon * k as f64 / (count - 1) as f64
                }
            })
            .collect(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::{c64, real_vector};

    #[test]
    fn first_passage_constant_rate() {
        // K = -I: survival e^{-2s}
        let k = CMatrix::identity(2, 2) * c64(-1.0, 0.0);
        let phi = real_vector(&[1.0, 0.0]);
        match first_passage(&k, None, 0.01, &phi, 10.0, 0.5).unwrap() {
            FlowOutcome::Jumped { time, psi } => {
                assert!((time - 2f64.ln() / 2.0).abs() < 1e-10);
                assert!((psi.norm_squared() - 0.5).abs() < 1e-10);
            }
            other => panic!("expected a jump, got {other:?}"),
        }
        match first_passage(&k, None, 0.01, &phi, 0.1, 0.5).unwrap() {
            FlowOutcome::Reached(v) => assert!((v.norm_squared() - (-0.2f64).exp()).abs() < 1e-12),
            other => panic!("expected no jump, got {other:?}"),
        }
    }

    #[test]
    fn grid_helpers() {
        assert_eq!(uniform_grid(2.0, 9)[8], 2.0);
        assert_eq!(uniform_grid(2.0, 9)[2], 0.5);
        assert!(check_grid(&[0.0, 1.0], 2.0).is_ok());
        assert!(check_grid(&[1.0, 0.5], 2.0).is_err());
        assert!(check_grid(&[3.0], 2.0).is_err());
    }
}
