//! Fixed-time stable vector fields and their forward-Euler steps.

mod fxts;
mod momentum;

use crate::Vector;

pub use fxts::{fxts_field, fxts_step, FxtsField, FxtsParams};
pub use momentum::{
    fxts_momentum_field, fxts_momentum_step, fxts_momentum_step_with, g_decreasing_on_grid, g_turning_point,
    g_scaling, h_switch, MomentumParams, MomentumScheme,
};

/// Gradient norms at or below this are treated as exactly zero.
pub const GRAD_FLOOR: f64 = 1e-12;

/// Iterate of a discrete flow.
#[derive(Debug, Clone, PartialEq)]
pub struct StepState {
    pub x: Vector,
    /// Velocity, present for momentum flows only.
    pub v: Option<Vector>,
    pub k: u64,
    pub eta: f64,
}

impl StepState {
    pub fn new(x: Vector, eta: f64) -> Self {
        Self { x, v: None, k: 0, eta }
    }

    pub fn with_velocity(x: Vector, v: Vector, eta: f64) -> Self {
        Self { x, v: Some(v), k: 0, eta }
    }
}

#[inline]
pub(crate) fn pow_via_log(base: f64, exponent: f64) -> f64 {
    (exponent * base.ln()).exp()
}
