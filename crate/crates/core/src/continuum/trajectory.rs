use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::{Error, Objective, Result, Vector};

/// How the time axis of a trajectory was produced.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum TimeBase {
    /// Samples of an integrated ODE, times in flow time.
    Continuous,
    /// Iterates of a discrete method with step `eta`; times are iteration indices.
    Discrete { eta: f64 },
}

/// Sampled run of a flow or an iterative method.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub time_base: TimeBase,
    pub times: Vec<f64>,
    pub states: Vec<Vector>,
    /// `f(x) - f*`.
    pub values: Vec<f64>,
    pub grad_norms: Vec<f64>,
    pub dist_to_opt: Option<Vec<f64>>,
    /// Running regret up to each sample.
    pub regret: Vec<f64>,
    /// The run stopped because the gradient floor was reached.
    pub stopped_at_floor: bool,
}

impl Trajectory {
    pub fn new(time_base: TimeBase, track_distance: bool) -> Self {
        Self {
            time_base,
            times: Vec::new(),
            states: Vec::new(),
            values: Vec::new(),
            grad_norms: Vec::new(),
            dist_to_opt: track_distance.then(Vec::new),
            regret: Vec::new(),
            stopped_at_floor: false,
        }
    }

    /// Empty trajectory for `obj`, tracking distance when `x*` is known.
    pub fn for_objective(time_base: TimeBase, obj: &dyn Objective) -> Result<Self> {
        if obj.f_star().is_none() {
            return Err(Error::MissingMetadata("f_star"));
        }
        Ok(Self::new(time_base, obj.x_star().is_some()))
    }

    /// Append the sample `(t, x)`, evaluating the objective and extending the regret.
    pub fn record(&mut self, obj: &dyn Objective, t: f64, x: Vector) -> Result<()> {
        let f_star = obj.f_star().ok_or(Error::MissingMetadata("f_star"))?;
        let gap = obj.value(&x) - f_star;
        let grad_norm = obj.gradient(&x).norm();
        let dist = obj.x_star().map(|xs| (&x - xs).norm());
        self.push(t, x, gap, grad_norm, dist);
        Ok(())
    }

    pub fn push(&mut self, t: f64, x: Vector, gap: f64, grad_norm: f64, dist: Option<f64>) {
        let clamped = gap.max(0.0);
        let prev = self.regret.last().copied();
        let increment = match (self.time_base, prev) {
            (TimeBase::Discrete { eta }, _) => eta * clamped,
            (TimeBase::Continuous, None) => 0.0,
            (TimeBase::Continuous, Some(_)) => {
                let dt = t - self.times[self.times.len() - 1];
                0.5 * dt * (self.values[self.values.len() - 1].max(0.0) + clamped)
            }
        };
        self.regret.push(prev.unwrap_or(0.0) + increment);
        self.times.push(t);
        self.states.push(x);
        self.values.push(gap);
        self.grad_norms.push(grad_norm);
        if let (Some(d), Some(list)) = (dist, self.dist_to_opt.as_mut()) {
            list.push(d);
        }
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn final_state(&self) -> Option<&Vector> {
        self.states.last()
    }

    pub fn final_time(&self) -> Option<f64> {
        self.times.last().copied()
    }

    pub fn total_regret(&self) -> f64 {
        self.regret.last().copied().unwrap_or(0.0)
    }

    /// Write `t,x_0..x_{n-1},f_gap,grad_norm,dist_opt,regret`, keeping every
    /// `stride`-th row plus the last one.
    pub fn write_csv<W: Write>(&self, out: W, stride: usize) -> Result<()> {
        let stride = stride.max(1);
        let dim = self.states.first().map_or(0, |s| s.len());
        let mut w = csv::Writer::from_writer(out);
        let mut header = vec!["t".to_string()];
        header.extend((0..dim).map(|i| format!("x_{i}")));
        header.extend(["f_gap", "grad_norm", "dist_opt", "regret"].map(String::from));
        w.write_record(&header)?;
        let last = self.len().saturating_sub(1);
        for i in (0..self.len()).filter(|&i| i % stride == 0 || i == last) {
            let mut row = vec![self.times[i].to_string()];
            row.extend(self.states[i].iter().map(|v| v.to_string()));
            row.push(self.values[i].to_string());
            row.push(self.grad_norms[i].to_string());
            row.push(
                self.dist_to_opt
                    .as_ref()
                    .map_or(String::new(), |d| d[i].to_string()),
            );
            row.push(self.regret[i].to_string());
            w.write_record(&row)?;
        }
        w.flush()?;
        Ok(())
    }
}

/// Regret of a whole trajectory: trapezoidal integral of `f - f*` for continuous
/// runs, `eta` times the sum of the gaps for discrete runs. Negative gaps count as zero.
pub fn accumulate_regret(traj: &Trajectory) -> f64 {
    let v = &traj.values;
    match traj.time_base {
        TimeBase::Discrete { eta } => eta * v.iter().map(|g| g.max(0.0)).sum::<f64>(),
        TimeBase::Continuous => traj
            .times
            .windows(2)
            .zip(v.windows(2))
            .map(|(t, g)| 0.5 * (t[1] - t[0]) * (g[0].max(0.0) + g[1].max(0.0)))
            .sum(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn exp_decay(step: f64, horizon: f64) -> Trajectory {
        let mut tr = Trajectory::new(TimeBase::Continuous, false);
        let n = (horizon / step).round() as usize;
        for i in 0..=n {
            let t = i as f64 * step;
            tr.push(t, Vector::from_vec(vec![t]), (-t).exp(), 0.0, None);
        }
        tr
    }

    #[test]
    fn zero_trajectory_has_no_regret() {
        let mut tr = Trajectory::new(TimeBase::Continuous, false);
        for i in 0..10 {
            tr.push(i as f64, Vector::zeros(1), 0.0, 0.0, None);
        }
        assert_eq!(accumulate_regret(&tr), 0.0);
    }

    #[test]
    fn exponential_integral() {
        let tr = exp_decay(1e-3, 10.0);
        let exact = 1.0 - (-10f64).exp();
        assert!((accumulate_regret(&tr) - exact).abs() < 1e-6);
        assert!((tr.total_regret() - accumulate_regret(&tr)).abs() < 1e-12);
        assert!(tr.regret.windows(2).all(|w| w[1] >= w[0]));
    }

    #[test]
    fn discrete_regret_is_eta_weighted_sum() {
        let mut tr = Trajectory::new(TimeBase::Discrete { eta: 0.5 }, false);
        for (k, g) in [4.0, 2.0, 1.0].into_iter().enumerate() {
            tr.push(k as f64, Vector::zeros(1), g, 0.0, None);
        }
        assert_eq!(accumulate_regret(&tr), 3.5);
        assert_eq!(tr.total_regret(), 3.5);
    }

    #[test]
    fn csv_layout_and_stride() {
        let tr = exp_decay(0.5, 2.0);
        let mut buf = Vec::new();
        tr.write_csv(&mut buf, 3).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let lines: Vec<_> = text.lines().collect();
        assert_eq!(lines[0], "t,x_0,f_gap,grad_norm,dist_opt,regret");
        // rows 0, 3 and the last (4)
        assert_eq!(lines.len(), 4);
        assert!(lines[3].starts_with("2,"));
    }
}
