// Copyright 2026 EEQT Contributors
// SPDX-License-Identifier: Apache-2.0

//! Reproducible random streams.
//!
//! A stream is a ChaCha8 generator keyed by the master seed (expanded with
//! `SeedableRng::seed_from_u64`) and positioned on ChaCha stream number
//! `stream_index`. Ensembles give trajectory `k` the stream index `k`, so
//! every trajectory draws from its own non-overlapping sequence no matter
//! which worker runs it.

use rand::distr::{Distribution, Open01, StandardUniform};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DrawKind {
    Uniform01,
    StandardNormal,
}

#[derive(Debug, Clone)]
pub struct RngStream {
    master_seed: u64,
    stream_index: u64,
    rng: ChaCha8Rng,
}

impl RngStream {
    pub fn new(master_seed: u64, stream_index: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(master_seed);
        rng.set_stream(stream_index);
        Self {
            master_seed,
            stream_index,
            rng,
        }
    }

    pub fn master_seed(&self) -> u64 {
        self.master_seed
    }

    pub fn stream_index(&self) -> u64 {
        self.stream_index
    }

    pub fn draw(&mut self, kind: DrawKind) -> f64 {
        match kind {
            DrawKind::Uniform01 => self.uniform01(),
            DrawKind::StandardNormal => self.standard_normal(),
        }
    }

    /// Uniform on `[0, 1)`.
    pub fn uniform01(&mut self) -> f64 {
        StandardUniform.sample(&mut self.rng)
    }

    /// Uniform on the open interval `(0, 1)`; used for jump clocks.
    pub fn uniform_open01(&mut self) -> f64 {
        self.rng.sample(Open01)
    }

    pub fn standard_normal(&mut self) -> f64 {
        StandardNormal.sample(&mut self.rng)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn identical_streams_are_bitwise_equal() {
        let mut a = RngStream::new(1, 0);
        let mut b = RngStream::new(1, 0);
        for _ in 0..1000 {
            assert_eq!(a.uniform01().to_bits(), b.uniform01().to_bits());
            assert_eq!(a.standard_normal().to_bits(), b.standard_normal().to_bits());
        }
    }

    #[test]
    fn distinct_indices_differ() {
        let mut a = RngStream::new(1, 0);
        let mut b = RngStream::new(1, 1);
        let xs: Vec<f64> = (0..8).map(|_| a.uniform01()).collect();
        let ys: Vec<f64> = (0..8).map(|_| b.uniform01()).collect();
        assert_ne!(xs, ys);
    }

    #[test]
    fn uniform_mean() {
        let n = 1_000_000;
        let mut s = RngStream::new(1, 0);
        let mut sum = 0.0;
        for _ in 0..n {
            let u = s.draw(DrawKind::Uniform01);
            assert!((0.0..1.0).contains(&u));
            sum += u;
        }
        // 3 sigma of the sample mean: 3 / (2 sqrt(3N)) ~ 8.7e-4
        assert!((sum / n as f64 - 0.5).abs() < 0.002);
    }

    #[test]
    fn normal_moments() {
        let n = 1_000_000;
        let mut s = RngStream::new(1, 0);
        let xs: Vec<f64> = (0..n).map(|_| s.draw(DrawKind::StandardNormal)).collect();
        let mean = xs.iter().sum::<f64>() / n as f64;
        let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
        assert!(mean.abs() < 0.005);
        // sd of the sample variance is sqrt(2/N) ~ 1.4e-3
        assert!((var - 1.0).abs() < 0.005);
    }

    #[test]
    fn open_uniform_never_hits_endpoints() {
        let mut s = RngStream::new(9, 3);
        for _ in 0..100_000 {
            let u = s.uniform_open01();
            assert!(u > 0.0 && u < 1.0);
        }
    }
}
