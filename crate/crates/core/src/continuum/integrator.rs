use serde::{Deserialize, Serialize};

use super::systems::Flow;
use super::trajectory::{TimeBase, Trajectory};
use crate::{Error, Result, Vector};

fn default_step() -> f64 {
    1e-3
}

fn default_substep_tol() -> f64 {
    1e-3
}

fn default_max_depth() -> u32 {
    30
}

/// Fixed-grid RK4 with dyadic substeps on stiff stretches.
///
/// Each grid step of length `step` may be split into `2^d` substeps, `d <= max_depth`.
/// A substep `s` is halved while `s * L > substep_tol`, where `L` is the local
/// Lipschitz estimate `|k2 - k1| / (s/2 |k1|)`; it is doubled again once
/// `s * L < substep_tol / 4`. `max_depth = 0` gives classical fixed-step RK4.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IntegratorConfig {
    #[serde(default = "default_step")]
    pub step: f64,
    pub horizon: f64,
    #[serde(default = "default_substep_tol")]
    pub substep_tol: f64,
    #[serde(default = "default_max_depth")]
    pub max_depth: u32,
}

impl IntegratorConfig {
    pub fn new(step: f64, horizon: f64) -> Self {
        Self {
            step,
            horizon,
            substep_tol: default_substep_tol(),
            max_depth: default_max_depth(),
        }
    }

    /// Plain RK4 on the grid, no substeps.
    pub fn fixed(step: f64, horizon: f64) -> Self {
        Self {
            max_depth: 0,
            ..Self::new(step, horizon)
        }
    }

    pub fn validate(&self) -> Result<()> {
        let mut problems = Vec::new();
        if !(self.step > 0.0 && self.step.is_finite()) {
            problems.push(format!("step must be positive, got {}", self.step));
        }
        if !(self.horizon > 0.0 && self.horizon.is_finite()) {
            problems.push(format!("horizon must be positive, got {}", self.horizon));
        }
        if !(self.substep_tol > 0.0) {
            problems.push(format!("substep_tol must be positive, got {}", self.substep_tol));
        }
        if self.max_depth > 40 {
            problems.push(format!("max_depth must be at most 40, got {}", self.max_depth));
        }
        if problems.is_empty() {
            Ok(())
        } else {
            Err(Error::InvalidParams(problems.join("; ")))
        }
    }
}

/// A recorded point of a run, handed to monitors.
#[derive(Debug, Clone, Copy)]
pub struct Sample<'a> {
    pub t: f64,
    pub x: &'a Vector,
    pub f_gap: f64,
    pub grad_norm: f64,
}

/// Observer evaluated at every recorded sample. Returning `true` stops the run.
pub trait Monitor {
    fn observe(&mut self, sample: &Sample<'_>) -> bool;
}

/// Stops a run once `f - f*` drops to `threshold`.
#[derive(Debug, Clone, Copy)]
pub struct StopBelow {
    pub threshold: f64,
}

impl Monitor for StopBelow {
    fn observe(&mut self, sample: &Sample<'_>) -> bool {
        sample.f_gap <= self.threshold
    }
}

fn notify(traj: &Trajectory, monitors: &mut [&mut dyn Monitor]) -> bool {
    let i = traj.len() - 1;
    let sample = Sample {
        t: traj.times[i],
        x: &traj.states[i],
        f_gap: traj.values[i],
        grad_norm: traj.grad_norms[i],
    };
    let mut stop = false;
    for m in monitors.iter_mut() {
        stop |= m.observe(&sample);
    }
    stop
}

fn diverged(t: f64, last: &Vector) -> Error {
    Error::Diverged {
        t,
        last: last.iter().copied().collect(),
    }
}

/// Integrate `flow` from `x0` over `[0, horizon]`, recording every accepted (sub)step.
///
/// The run ends early when a monitor asks to stop or the state reaches the
/// gradient floor; in the latter case the state is frozen there and
/// `stopped_at_floor` is set.
pub fn integrate_flow(
    flow: &dyn Flow,
    x0: &Vector,
    config: &IntegratorConfig,
    monitors: &mut [&mut dyn Monitor],
) -> Result<Trajectory> {
    config.validate()?;
    let obj = flow.objective();
    if x0.len() != obj.dim() {
        return Err(Error::InvalidParams(format!(
            "x0 has dimension {}, objective has {}",
            x0.len(),
            obj.dim()
        )));
    }
    let mut traj = Trajectory::for_objective(TimeBase::Continuous, obj)?;
    let mut y = flow.initial_state(x0);
    if y.iter().any(|c| !c.is_finite()) {
        return Err(diverged(0.0, x0));
    }
    traj.record(obj, 0.0, flow.position(&y))?;
    if flow.is_at_rest(&y) {
        traj.stopped_at_floor = true;
        notify(&traj, monitors);
        return Ok(traj);
    }
    if notify(&traj, monitors) {
        return Ok(traj);
    }

    let h = config.step;
    let depth_max = config.max_depth;
    let n_steps = (config.horizon / h - 1e-9).ceil().max(1.0) as u64;
    let ticks_per_step = 1u64 << depth_max;
    let total = n_steps * ticks_per_step;
    let tick = h / ticks_per_step as f64;
    let tol = config.substep_tol;

    let mut pos = 0u64;
    let mut depth = 0u32;
    while pos < total {
        let t = pos as f64 * tick;
        let k1 = flow.rhs(&y).map_err(|_| diverged(t, &flow.position(&y)))?;
        let k1_norm = k1.norm();
        let (sub, k2, lip) = loop {
            let sub = h / (1u64 << depth) as f64;
            let k2 = flow
                .rhs(&(&y + &k1 * (0.5 * sub)))
                .map_err(|_| diverged(t, &flow.position(&y)))?;
            let lip = if k1_norm > 0.0 {
                (&k2 - &k1).norm() / (0.5 * sub * k1_norm)
            } else {
                0.0
            };
            if depth < depth_max && !(sub * lip <= tol) {
                depth += 1;
                continue;
            }
            break (sub, k2, lip);
        };
        let k3 = flow
            .rhs(&(&y + &k2 * (0.5 * sub)))
            .map_err(|_| diverged(t, &flow.position(&y)))?;
        let k4 = flow
            .rhs(&(&y + &k3 * sub))
            .map_err(|_| diverged(t, &flow.position(&y)))?;
        let next = &y + (k1 + k2 * 2.0 + k3 * 2.0 + k4) * (sub / 6.0);
        pos += ticks_per_step >> depth;
        let t_next = pos as f64 * tick;
        if next.iter().any(|c| !c.is_finite()) {
            return Err(diverged(t_next, &flow.position(&y)));
        }
        y = next;
        traj.record(obj, t_next, flow.position(&y))?;
        if flow.is_at_rest(&y) {
            traj.stopped_at_floor = true;
            notify(&traj, monitors);
            break;
        }
        if notify(&traj, monitors) {
            break;
        }
        if depth > 0 && sub * lip < 0.25 * tol && pos.is_multiple_of(ticks_per_step >> (depth - 1)) {
            depth -= 1;
        }
    }
    Ok(traj)
}

#[cfg(test)]
mod tests {
    use std::sync::Arc;

    use super::*;
    use crate::continuum::{FxtsFlow, GradientFlow};
    use crate::flows::FxtsParams;
    use crate::problems::{quadratic, QuadraticSpec};

    fn identity(dim: usize) -> Arc<crate::problems::Quadratic> {
        Arc::new(quadratic(&QuadraticSpec::identity(dim), Vector::zeros(dim)).unwrap())
    }

    #[test]
    fn exponential_decay_matches_closed_form() {
        let flow = GradientFlow::new(identity(1));
        let cfg = IntegratorConfig::fixed(0.01, 1.0);
        let tr = integrate_flow(&flow, &Vector::from_vec(vec![1.0]), &cfg, &mut []).unwrap();
        assert_eq!(tr.final_time(), Some(1.0));
        assert!((tr.final_state().unwrap()[0] - (-1f64).exp()).abs() < 1e-9);
        assert_eq!(tr.len(), 101);
    }

    #[test]
    fn start_at_rest_is_constant() {
        let flow = GradientFlow::new(identity(2));
        let tr = integrate_flow(&flow, &Vector::zeros(2), &IntegratorConfig::new(1e-3, 1.0), &mut []).unwrap();
        assert!(tr.stopped_at_floor);
        assert_eq!(tr.len(), 1);
    }

    #[test]
    fn fxts_run_reaches_floor_in_finite_time() {
        let flow = FxtsFlow::new(identity(2), FxtsParams::new(1.0, 1.0, 4.0, 1.5).unwrap()).unwrap();
        let x0 = Vector::from_vec(vec![3.0, 4.0]);
        let tr = integrate_flow(&flow, &x0, &IntegratorConfig::new(1e-3, 5.0), &mut []).unwrap();
        assert!(tr.stopped_at_floor);
        assert!(tr.final_time().unwrap() < 2.6);
        assert!(tr.times.windows(2).all(|w| w[1] > w[0]));
    }

    #[test]
    fn substeps_keep_far_starts_stable() {
        let flow = FxtsFlow::new(identity(1), FxtsParams::new(1.0, 1.0, 4.0, 1.5).unwrap()).unwrap();
        let x0 = Vector::from_vec(vec![1e6]);
        assert!(integrate_flow(&flow, &x0, &IntegratorConfig::fixed(1e-3, 1.0), &mut []).is_err());
        let tr = integrate_flow(&flow, &x0, &IntegratorConfig::new(1e-3, 5.0), &mut []).unwrap();
        assert!(tr.stopped_at_floor);
    }

    #[test]
    fn monitor_stops_run() {
        let flow = GradientFlow::new(identity(1));
        let mut stop = StopBelow { threshold: 0.01 };
        let tr = integrate_flow(&flow, &Vector::from_vec(vec![1.0]), &IntegratorConfig::new(1e-3, 10.0), &mut [&mut stop])
            .unwrap();
        assert!(*tr.values.last().unwrap() <= 0.01);
        assert!(tr.final_time().unwrap() < 2.0);
    }

    #[test]
    fn rejects_bad_config() {
        let flow = GradientFlow::new(identity(1));
        let x0 = Vector::from_vec(vec![1.0]);
        assert!(integrate_flow(&flow, &x0, &IntegratorConfig::new(0.0, 1.0), &mut []).is_err());
        assert!(integrate_flow(&flow, &x0, &IntegratorConfig::new(1e-3, -1.0), &mut []).is_err());
    }
}
