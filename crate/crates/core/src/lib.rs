//! Fixed-time stable gradient flows and the tooling around them.
//!
//! The crate is organized bottom-up:
//!
//! * [`problems`]: the objective contract, bundled test problems, gradient and
//!   PL-modulus checks.
//! * [`flows`]: the fixed-time stable vector fields (plain and with momentum)
//!   and their forward-Euler steps.
//! * [`baselines`]: gradient descent, heavy-ball momentum, Nesterov and Adam.
//! * [`optim`]: a single discrete run loop over all of the above.
//! * [`continuum`]: RK4 integration, disturbances, regret and settling.
//! * [`certificates`]: closed-form Lyapunov constants and bounds.
//! * [`harness`]: declarative configs, experiment runners and check suites.
//! * [`fixtures`]: stored reference values and the oracles that regenerate them.

// `!(x > 0.0)` is used on purpose so that NaN fails validation.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod baselines;
pub mod certificates;
pub mod continuum;
pub mod error;
pub mod fixtures;
pub mod flows;
pub mod harness;
pub mod optim;
pub mod problems;

pub use error::{Error, Result};
pub use problems::{Objective, Vector};
