use serde::{Deserialize, Serialize};

use super::integrator::{Monitor, Sample};
use super::trajectory::Trajectory;

/// First time `f - f*` reached a threshold, with an optional theoretical bound.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SettlingRecord {
    pub threshold: f64,
    pub settle_time: Option<f64>,
    pub bound: Option<f64>,
}

impl SettlingRecord {
    pub fn with_bound(mut self, bound: f64) -> Self {
        self.bound = Some(bound);
        self
    }

    /// Settled, and not later than the bound when one is attached.
    pub fn within_bound(&self) -> bool {
        match (self.settle_time, self.bound) {
            (Some(t), Some(b)) => t <= b,
            (Some(_), None) => true,
            (None, _) => false,
        }
    }
}

fn crossing(t0: f64, v0: f64, t1: f64, v1: f64, threshold: f64) -> f64 {
    if v0 == v1 {
        return t1;
    }
    t0 + (v0 - threshold) / (v0 - v1) * (t1 - t0)
}

/// First crossing of `f - f* <= threshold`, linearly interpolated between samples.
pub fn detect_settling(traj: &Trajectory, threshold: f64) -> SettlingRecord {
    let settle_time = traj.values.iter().position(|&v| v <= threshold).map(|i| {
        if i == 0 {
            traj.times[0]
        } else {
            crossing(traj.times[i - 1], traj.values[i - 1], traj.times[i], traj.values[i], threshold)
        }
    });
    SettlingRecord {
        threshold,
        settle_time,
        bound: None,
    }
}

/// Online version of [`detect_settling`]; optionally stops the run at the crossing.
#[derive(Debug, Clone)]
pub struct SettlingDetector {
    threshold: f64,
    stop: bool,
    prev: Option<(f64, f64)>,
    settle_time: Option<f64>,
}

impl SettlingDetector {
    pub fn new(threshold: f64) -> Self {
        Self {
            threshold,
            stop: false,
            prev: None,
            settle_time: None,
        }
    }

    pub fn stopping(mut self) -> Self {
        self.stop = true;
        self
    }

    pub fn record(&self) -> SettlingRecord {
        SettlingRecord {
            threshold: self.threshold,
            settle_time: self.settle_time,
            bound: None,
        }
    }
}

impl Monitor for SettlingDetector {
    fn observe(&mut self, s: &Sample<'_>) -> bool {
        if self.settle_time.is_none() && s.f_gap <= self.threshold {
            self.settle_time = Some(match self.prev {
                None => s.t,
                Some((t0, v0)) => crossing(t0, v0, s.t, s.f_gap, self.threshold),
            });
        }
        self.prev = Some((s.t, s.f_gap));
        self.stop && self.settle_time.is_some()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::continuum::TimeBase;
    use crate::Vector;

    fn exp_decay(step: f64, horizon: f64, scale: f64) -> Trajectory {
        let mut tr = Trajectory::new(TimeBase::Continuous, false);
        let n = (horizon / step).round() as usize;
        for i in 0..=n {
            let t = i as f64 * step;
            tr.push(t, Vector::zeros(1), scale * (-t).exp(), 0.0, None);
        }
        tr
    }

    #[test]
    fn crossing_of_exponential() {
        let tr = exp_decay(0.01, 5.0, 1.0);
        let rec = detect_settling(&tr, (-2f64).exp());
        assert!((rec.settle_time.unwrap() - 2.0).abs() < 0.01);
        let mut det = SettlingDetector::new((-2f64).exp());
        for i in 0..tr.len() {
            det.observe(&Sample { t: tr.times[i], x: &tr.states[i], f_gap: tr.values[i], grad_norm: 0.0 });
        }
        assert_eq!(det.record(), rec);
    }

    #[test]
    fn starts_below() {
        let tr = exp_decay(0.1, 1.0, 1e-12);
        assert_eq!(detect_settling(&tr, 1e-9).settle_time, Some(0.0));
    }

    #[test]
    fn never_reached() {
        let tr = exp_decay(0.1, 1.0, 1.0);
        let rec = detect_settling(&tr, 1e-9).with_bound(3.0);
        assert_eq!(rec.settle_time, None);
        assert!(!rec.within_bound());
    }
}
