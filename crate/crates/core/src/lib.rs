//! Concurrent pump scheduling and storage-level optimization.
//!
//! The pipeline has four stages, each its own module:
//!
//! 1. [`network`]: domain types for the water system, decision variables
//!    (status/settings matrices plus initial tank levels) and the
//!    normalization layer.
//! 2. [`simulator`]: a simplified extended-period mass-balance simulator
//!    acting as ground truth, plus training-data generation.
//! 3. [`metamodel`]: per-output feed-forward sub-ANNs replicating one
//!    simulator snapshot per call; chained over the horizon they replace
//!    the simulator inside the optimization loop.
//! 4. [`fitness`] + [`optimizer`]: the penalized energy-cost objective
//!    and the hybrid genetic algorithm searching mixed binary/real
//!    decision variables.
//!
//! [`scenario`] bundles the toy system the CLI ships with.

pub mod error;
pub mod fitness;
pub mod matrix;
pub mod metamodel;
pub mod network;
pub mod optimizer;
pub mod scenario;
pub mod simulator;

pub use error::{Error, Result};
pub use matrix::Matrix;
pub use network::{NetworkModel, Schedule, ScheduleLayout};
