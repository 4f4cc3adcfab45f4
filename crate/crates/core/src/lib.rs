// Copyright 2026 EEQT Contributors
// SPDX-License-Identifier: Apache-2.0

//! Open-quantum-system dynamics computed three ways: exact Lindblad
//! propagation, quantum state diffusion, and jump unravelings, including the
//! piecewise-deterministic event process of a quantum system coupled to
//! classical sectors.

pub mod ensemble;
pub mod error;
pub mod flow;
pub mod io;
pub mod model;
pub mod numerics;
pub mod pdp;
pub mod run;
pub mod stats;
pub mod unravel;
pub mod verify;

pub use error::{Error, Result};
pub use model::{
    build_superoperator, embed_pure_state, propagate_exact, BlockDensity, BlockMatrix, Coupling,
    ExactPropagator, HybridModel, HybridPureState, Lindbladian, PureLindbladModel,
};
pub use numerics::{CMatrix, CVector, RngStream, ToleranceConfig};
