// Copyright 2026 EEQT Contributors
// SPDX-License-Identifier: Apache-2.0

//! Ensemble averaging of per-trajectory projectors and the worker pool that
//! produces them.
//!
//! Trajectory `k` always uses stream index `k`, and results are reduced in
//! ascending `k` regardless of which worker finished first, so an estimate
//! depends only on `(model, state, config)` and never on the worker count.

use std::fmt::Write as _;

use nalgebra::DMatrix;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::model::BlockMatrix;
use crate::numerics::{c64, outer, CVector};

/// Empirical mean of `P_{x_t}` over trajectories, per grid time.
#[derive(Debug, Clone, PartialEq)]
pub struct EnsembleEstimate {
    pub grid: Vec<f64>,
    pub mean_blocks: Vec<BlockMatrix>,
    /// Standard error of each complex entry, `sqrt(E|X - mean|² / (n (n-1)))`.
    pub stderr: Vec<Vec<DMatrix<f64>>>,
    /// Estimated probability of each sector (`Tr ρ_α`) per grid time.
    pub sector_probability: Vec<Vec<f64>>,
    pub sector_stderr: Vec<Vec<f64>>,
    pub n: usize,
}

impl EnsembleEstimate {
    /// Root-sum-square of all per-entry standard errors at grid index `k`.
    pub fn aggregate_stderr(&self, k: usize) -> f64 {
        self.stderr[k]
            .iter()
            .flat_map(|b| b.iter())
            .map(|s| s * s)
            .sum::<f64>()
            .sqrt()
    }

    pub fn max_aggregate_stderr(&self) -> f64 {
        (0..self.grid.len())
            .map(|k| self.aggregate_stderr(k))
            .fold(0.0, f64::max)
    }

    /// An estimate with zero error bars, e.g. the exact propagation on a grid.
    pub fn exact(grid: Vec<f64>, states: Vec<BlockMatrix>) -> Self {
        let stderr = states
            .iter()
            .map(|s| {
                s.blocks
                    .iter()
                    .map(|b| DMatrix::zeros(b.nrows(), b.ncols()))
                    .collect()
            })
            .collect();
        let sector_probability: Vec<Vec<f64>> = states
            .iter()
            .map(|s| s.blocks.iter().map(|b| b.trace().re).collect())
            .collect();
        let sector_stderr = sector_probability
            .iter()
            .map(|p| vec![0.0; p.len()])
            .collect();
        Self {
            grid,
            mean_blocks: states,
            stderr,
            sector_probability,
            sector_stderr,
            n: 0,
        }
    }

    /// CSV with header `t,block,row,col,re,im,stderr`, one row per entry.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("t,block,row,col,re,im,stderr\n");
        for (k, t) in self.grid.iter().enumerate() {
            for (b, block) in self.mean_blocks[k].blocks.iter().enumerate() {
                let se = &self.stderr[k][b];
                for i in 0..block.nrows() {
                    for j in 0..block.ncols() {
                        let z = block[(i, j)];
                        let _ = writeln!(out, "{t},{b},{i},{j},{},{},{}", z.re, z.im, se[(i, j)]);
                    }
                }
            }
        }
        out
    }
}

/// Welford accumulator over trajectories, one slot per grid time.
#[derive(Debug, Clone)]
pub struct EnsembleAccumulator {
    grid: Vec<f64>,
    count: usize,
    mean: Vec<BlockMatrix>,
    m2: Vec<Vec<DMatrix<f64>>>,
    p_mean: Vec<Vec<f64>>,
    p_m2: Vec<Vec<f64>>,
}

impl EnsembleAccumulator {
    pub fn new(grid: &[f64], dims: &[usize]) -> Self {
        let k = grid.len();
        Self {
            grid: grid.to_vec(),
            count: 0,
            mean: vec![BlockMatrix::zeros(dims); k],
            m2: vec![dims.iter().map(|&n| DMatrix::zeros(n, n)).collect(); k],
            p_mean: vec![vec![0.0; dims.len()]; k],
            p_m2: vec![vec![0.0; dims.len()]; k],
        }
    }

    /// Adds one trajectory, given as a pure state `(sector, unit ψ)` per
    /// grid time.
    pub fn push_pure<'a, I>(&mut self, samples: I) -> Result<()>
    where
        I: IntoIterator<Item = (usize, &'a CVector)>,
    {
        self.count += 1;
        let n = self.count as f64;
        let mut seen = 0;
        for (k, (sector, psi)) in samples.into_iter().enumerate() {
            if k >= self.grid.len() {
                return Err(Error::Dimension("more samples than grid points".into()));
            }
            seen += 1;
            let proj = outer(psi);
            let zero = c64(0.0, 0.0);
            for (b, mean) in self.mean[k].blocks.iter_mut().enumerate() {
                let m2 = &mut self.m2[k][b];
                for i in 0..mean.nrows() {
                    for j in 0..mean.ncols() {
                        let x = if b == sector { proj[(i, j)] } else { zero };
                        let old = mean[(i, j)];
                        let new = old + (x - old) / n;
                        mean[(i, j)] = new;
                        m2[(i, j)] += ((x - old) * (x - new).conj()).re;
                    }
                }
                let x = if b == sector { 1.0 } else { 0.0 };
                let old = self.p_mean[k][b];
                let new = old + (x - old) / n;
                self.p_mean[k][b] = new;
                self.p_m2[k][b] += (x - old) * (x - new);
            }
        }
        if seen != self.grid.len() {
            return Err(Error::Dimension(format!(
                "trajectory has {seen} samples for {} grid points",
                self.grid.len()
            )));
        }
        Ok(())
    }

    pub fn finish(self) -> Result<EnsembleEstimate> {
        if self.count < 2 {
            return Err(Error::InvalidConfig(
                "an ensemble needs at least 2 trajectories".into(),
            ));
        }
        let n = self.count as f64;
        let denom = n * (n - 1.0);
        let stderr = self
            .m2
            .iter()
            .map(|blocks| {
                blocks
                    .iter()
                    .map(|m| m.map(|v| (v.max(0.0) / denom).sqrt()))
                    .collect()
            })
            .collect();
        let sector_stderr = self
            .p_m2
            .iter()
            .map(|row| row.iter().map(|v| (v.max(0.0) / denom).sqrt()).collect())
            .collect();
        Ok(EnsembleEstimate {
            grid: self.grid,
            mean_blocks: self.mean,
            stderr,
            sector_probability: self.p_mean,
            sector_stderr,
            n: self.count,
        })
    }
}

/// Runs `job(k)` for `k in 0..n` on `workers` threads and returns the
/// results in index order.
pub fn run_indexed<T, F>(n: usize, workers: usize, job: F) -> Result<Vec<T>>
where
    T: Send,
    F: Fn(u64) -> Result<T> + Sync + Send,
{
    if workers == 0 {
        return Err(Error::InvalidConfig("workers must be at least 1".into()));
    }
    if workers == 1 {
        return (0..n as u64).map(job).collect();
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .map_err(|e| Error::InvalidConfig(e.to_string()))?;
    pool.install(|| (0..n as u64).into_par_iter().map(&job).collect())
}
