//! Sparse actuator schedules for discrete-time linear systems.
//!
//! Given `x(k+1) = A x(k) + B u(k)`, the crate builds schedules that switch
//! (and optionally rescale) a small number of inputs per time step while
//! keeping the controllability Gramian close to the fully actuated one.
//!
//! * [`system`]: systems, controllability matrices, (scheduled) Gramians.
//! * [`metrics`]: the six systemic controllability metrics.
//! * [`dualset`]: deterministic dual-set spectral sparsification.
//! * [`weighted`] / [`unweighted`]: deterministic schedulers built on it,
//!   plus exhaustive oracles for tiny instances.
//! * [`leverage`]: leverage scores and the randomized sampler.
//! * [`greedy`]: greedy static and time-varying baselines.
//! * [`models`]: benchmark systems (fixed 8-state example, consensus
//!   networks, swing-equation power models).
//!
//! The crate is `no_std` and only needs `alloc`.

#![no_std]
// `!(x <= tol)` is used on purpose so NaN takes the failure branch.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

extern crate alloc;

#[cfg(test)]
extern crate std;

pub mod dualset;
mod error;
pub mod greedy;
pub mod leverage;
pub mod linalg;
pub mod metrics;
pub mod models;
pub mod system;
pub mod unweighted;
pub mod weighted;

pub use error::{Error, Result};
pub use metrics::{DesignPool, MetricKind};
pub use system::{ControllabilityMatrix, Gramian, Horizon, LtiSystem, Schedule};

/// Relative eigenvalue threshold below which a Gramian is treated as singular.
///
/// A Gramian `W` counts as positive definite iff
/// `lambda_min(W) > CONTROLLABILITY_RTOL * lambda_max(W)`.
pub const CONTROLLABILITY_RTOL: f64 = 1e-13;
