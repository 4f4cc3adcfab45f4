// Copyright 2026 EEQT Contributors
// SPDX-License-Identifier: Apache-2.0

//! Crate-wide error type.

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("matrix is not Hermitian (max deviation {deviation:.3e})")]
    NotHermitian { deviation: f64 },

    #[error("sector {0}: Hamiltonian is not Hermitian")]
    NonHermitian(usize),

    #[error("sector {0}: diagonal coupling g_aa is present and nonzero")]
    DiagonalCouplingPresent(usize),

    #[error("coupling to sector {to} from sector {from} has the wrong shape")]
    ShapeMismatch { to: usize, from: usize },

    #[error("coupling to sector {to} from sector {from} given more than once")]
    DuplicateCoupling { to: usize, from: usize },

    #[error("invalid sector index {0}")]
    InvalidSector(usize),

    #[error("vector is not normalized (squared norm {norm_sq})")]
    NotNormalized { norm_sq: f64 },

    #[error("zero state vector")]
    ZeroVector,

    #[error(
        "density block {block} is not positive semidefinite (min eigenvalue {min_eigenvalue:.3e})"
    )]
    NotPositive { block: usize, min_eigenvalue: f64 },

    #[error("density trace is {trace}, expected 1")]
    BadTrace { trace: f64 },

    #[error("jump requested in sector {sector} with zero total intensity")]
    ZeroIntensity { sector: usize },

    #[error("jump requested on a dark state (zero rate)")]
    DarkState,

    #[error("negative time {0}")]
    NegativeTime(f64),

    #[error("diffusion step collapsed to the zero vector at t = {time}")]
    StepCollapse { time: f64 },

    #[error("states are not orthogonal (overlap {overlap:.3e})")]
    NonOrthogonal { overlap: f64 },

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("parse error: {0}")]
    Parse(String),

    #[error("i/o error: {0}")]
    Io(String),
}

impl Error {
    /// True for errors caused by bad input (files, flags, model invariants)
    /// as opposed to failures during a numerical run.
    pub fn is_validation(&self) -> bool {
        !matches!(
            self,
            Error::ZeroIntensity { .. }
                | Error::DarkState
                | Error::StepCollapse { .. }
                | Error::Io(_)
        )
    }
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

impl From<serde_json::Error> for Error {
    fn from(e: serde_json::Error) -> Self {
        Error::Parse(e.to_string())
    }
}
