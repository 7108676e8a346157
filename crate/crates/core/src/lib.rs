//! Measure transport for driven (input-forced) dynamical systems.
//!
//! The crate works with finite-support probability measures throughout:
//! every continuous law enters through sampling, after which the Foias
//! operator of a driven system `g(u, x)` can be applied exactly, its
//! Wasserstein-1 contraction can be checked, and its unique invariant measure
//! can be found by Banach iteration.
//!
//! Module map:
//!
//! - [`metrics`]: ground metrics, including the weighted sup metric on
//!   truncated sequence windows.
//! - [`measures`]: [`EmpiricalMeasure`], input distributions and stationary
//!   input processes.
//! - [`transport`]: exact and entropic W₁ solvers and dual certificates.
//! - [`systems`]: the [`DrivenSystem`] trait, the model zoo (ESN, linear,
//!   VARMA, GARCH, the `u·x` product system) and trajectory utilities.
//! - [`foias`]: push-forwards and the Foias operator.
//! - [`contraction`]: estimates and analytic certificates of stochastic
//!   contractivity.
//! - [`invariant`]: the fixed-point solver and continuity sweeps.
//! - [`seqspace`]: the sequence-space extension on truncated windows.
//!
//! The crate is `no_std` and only needs `alloc`.

#![no_std]
#![forbid(unsafe_code)]

extern crate alloc;

pub mod contraction;
pub mod error;
pub mod foias;
pub mod invariant;
pub mod linalg;
pub mod measures;
pub mod metrics;
pub mod rng;
pub mod seqspace;
pub mod systems;
pub mod transport;

pub use error::{Error, Result};
pub use measures::{DistributionSpec, EmpiricalMeasure, Family, ProcessSpec};
pub use metrics::Metric;
pub use systems::DrivenSystem;
pub use transport::TransportPlan;
