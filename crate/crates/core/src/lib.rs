//! Core numerics for calibrating stochastic agent-based neuron growth models.
//!
//! The crate is `no_std` (it needs `alloc`) and contains only pure
//! computation:
//!
//! - [`growth`]: the agent discretization and the two resource-driven growth
//!   models,
//! - [`morphometrics`]: reduction of a morphology to a quantity-of-interest
//!   (QoI) vector,
//! - [`distances`]: statistical distances between QoI point clouds,
//! - [`smcabc`]: the adaptive SMC-ABC sampler with the r-hit move kernel,
//!   posterior KDEs, predictive checks and nearest-neighbour pairing,
//! - [`sensitivity`]: Saltelli sampling and Sobol indices.
//!
//! File formats, the command line and thread pools live in the `neurocal`
//! crate.
#![no_std]
#![forbid(unsafe_code)]

extern crate alloc;

pub mod distances;
pub mod error;
pub mod exec;
pub mod growth;
pub mod linalg;
pub mod morphometrics;
pub mod rng;
pub mod sensitivity;
pub mod simulator;
pub mod smcabc;
pub mod stats;
pub mod study;
pub mod vec3;

pub use error::{Error, Result};
pub use vec3::Vec3;
