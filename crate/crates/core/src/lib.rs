//! Simulation library for a three-qubit entanglement conversion protocol.
//!
//! The pipeline prepares the WW-bar superposition state with a short gate
//! sequence ([`circuit`]), converts it to the GHZ state by measurement-based
//! local filtration ([`filtration`]), reads it out with an NMR-style
//! tomography scheme ([`tomography`]), and independently rebuilds the global
//! state from two-party reduced density matrices ([`marginals`]).
//! Supporting numerics live in [`linalg`], [`state`], [`gate`], [`metrics`]
//! and [`rng`].
//!
//! Conventions used throughout:
//! * Qubit 1 is the leftmost ket label and the most significant bit of a
//!   basis index.
//! * Randomness is always drawn from [`rng::stream`], keyed by a user seed, a
//!   purpose label, and a stream index, so every simulation is reproducible.

pub mod circuit;
pub mod error;
pub mod filtration;
pub mod gate;
pub mod linalg;
pub mod marginals;
pub mod metrics;
pub mod rng;
pub mod state;
pub mod tomography;

pub use error::{Error, Result};
pub use state::{DensityMatrix, StateVector};
