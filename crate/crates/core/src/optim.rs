//! Discrete run loop shared by the fixed-time methods and the baselines.

use serde::{Deserialize, Serialize};

use crate::baselines::{Baseline, BaselineConfig, Method};
use crate::continuum::{TimeBase, Trajectory};
use crate::flows::{
    fxts_momentum_step_with, FxtsField, FxtsParams, MomentumParams, MomentumScheme, StepState,
};
use crate::{Error, Objective, Result, Vector};

fn default_beta1() -> f64 {
    0.9
}

fn default_beta2() -> f64 {
    0.999
}

fn default_eps() -> f64 {
    1e-8
}

/// Optimizer selection as it appears in run configs, tagged by `name`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "name", rename_all = "snake_case")]
pub enum OptimizerKind {
    Fxts {
        c1: f64,
        c2: f64,
        p1: f64,
        p2: f64,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        p2_term_cap: Option<f64>,
    },
    FxtsMomentum {
        p: f64,
        q: f64,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        lambda: Option<f64>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        momentum: Option<f64>,
        /// Step size used to derive `lambda`; defaults to the run step size.
        #[serde(default, skip_serializing_if = "Option::is_none")]
        lr: Option<f64>,
        #[serde(default)]
        scheme: MomentumScheme,
    },
    Gd,
    Momentum {
        momentum: f64,
    },
    Nag {
        momentum: f64,
    },
    Adam {
        #[serde(default = "default_beta1")]
        adam_beta1: f64,
        #[serde(default = "default_beta2")]
        adam_beta2: f64,
        #[serde(default = "default_eps")]
        adam_eps: f64,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OptimizerSpec {
    #[serde(flatten)]
    pub kind: OptimizerKind,
    /// Display name in reports; defaults to the optimizer name.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub label: Option<String>,
}

impl OptimizerSpec {
    pub fn new(kind: OptimizerKind) -> Self {
        Self { kind, label: None }
    }

    pub fn labeled(mut self, label: impl Into<String>) -> Self {
        self.label = Some(label.into());
        self
    }

    pub fn fxts(params: FxtsParams) -> Self {
        Self::new(OptimizerKind::Fxts {
            c1: params.c1,
            c2: params.c2,
            p1: params.p1,
            p2: params.p2,
            p2_term_cap: None,
        })
    }

    pub fn name(&self) -> &'static str {
        match self.kind {
            OptimizerKind::Fxts { .. } => "fxts",
            OptimizerKind::FxtsMomentum { .. } => "fxts_momentum",
            OptimizerKind::Gd => "gd",
            OptimizerKind::Momentum { .. } => "momentum",
            OptimizerKind::Nag { .. } => "nag",
            OptimizerKind::Adam { .. } => "adam",
        }
    }

    pub fn label(&self) -> String {
        self.label.clone().unwrap_or_else(|| self.name().to_string())
    }

    pub fn fxts_params(&self) -> Option<FxtsParams> {
        match self.kind {
            OptimizerKind::Fxts { c1, c2, p1, p2, .. } => Some(FxtsParams { c1, c2, p1, p2 }),
            _ => None,
        }
    }

    pub fn fxts_field(&self) -> Result<Option<FxtsField>> {
        match self.kind {
            OptimizerKind::Fxts { c1, c2, p1, p2, p2_term_cap } => Ok(Some(
                FxtsField::new(FxtsParams::new(c1, c2, p1, p2)?)?.with_p2_term_cap(p2_term_cap),
            )),
            _ => Ok(None),
        }
    }

    /// Momentum-flow parameters, deriving `lambda = (1 - momentum) / lr` when needed.
    pub fn momentum_params(&self, step: f64) -> Result<Option<(MomentumParams, MomentumScheme)>> {
        let OptimizerKind::FxtsMomentum { p, q, lambda, momentum, lr, scheme } = self.kind else {
            return Ok(None);
        };
        let params = match (lambda, momentum) {
            (Some(l), None) => MomentumParams::new(p, q, l)?,
            (None, Some(beta)) => MomentumParams::from_momentum(p, q, beta, lr.unwrap_or(step))?,
            (Some(l), Some(beta)) => {
                let mut m = MomentumParams::from_momentum(p, q, beta, lr.unwrap_or(step))?;
                m.lambda = l;
                m.validate()?;
                m
            }
            (None, None) => {
                return Err(Error::InvalidParams(
                    "fxts_momentum needs `lambda` or `momentum`".into(),
                ))
            }
        };
        Ok(Some((params, scheme)))
    }

    pub fn baseline_config(&self, lr: f64) -> Option<BaselineConfig> {
        let c = match self.kind {
            OptimizerKind::Gd => BaselineConfig::new(Method::Gd, lr),
            OptimizerKind::Momentum { momentum } => BaselineConfig::new(Method::Momentum, lr).with_momentum(momentum),
            OptimizerKind::Nag { momentum } => BaselineConfig::new(Method::Nag, lr).with_momentum(momentum),
            OptimizerKind::Adam { adam_beta1, adam_beta2, adam_eps } => BaselineConfig {
                adam_beta1,
                adam_beta2,
                adam_eps,
                ..BaselineConfig::new(Method::Adam, lr)
            },
            _ => return None,
        };
        Some(c)
    }

    /// Check parameters against a step size, listing every problem found.
    pub fn validate(&self, step: f64) -> Result<()> {
        if let Some(c) = self.baseline_config(step) {
            return c.validate();
        }
        self.fxts_field()?;
        self.momentum_params(step)?;
        Ok(())
    }
}

/// Stateful single-step driver for any supported optimizer.
#[derive(Debug, Clone)]
pub enum Stepper {
    Fxts(FxtsField),
    Momentum {
        params: MomentumParams,
        scheme: MomentumScheme,
        v: Vector,
    },
    Baseline(Baseline),
}

impl Stepper {
    pub fn new(spec: &OptimizerSpec, step: f64, dim: usize) -> Result<Self> {
        if let Some(field) = spec.fxts_field()? {
            return Ok(Stepper::Fxts(field));
        }
        if let Some((params, scheme)) = spec.momentum_params(step)? {
            return Ok(Stepper::Momentum {
                params,
                scheme,
                v: Vector::zeros(dim),
            });
        }
        let config = spec.baseline_config(step).expect("every optimizer kind is covered");
        Ok(Stepper::Baseline(Baseline::new(config, dim)?))
    }

    pub fn step(&mut self, obj: &dyn Objective, x: &Vector, eta: f64) -> Result<Vector> {
        match self {
            Stepper::Fxts(field) => Ok(field.step(obj, &StepState::new(x.clone(), eta))?.x),
            Stepper::Momentum { params, scheme, v } => {
                let state = StepState::with_velocity(x.clone(), v.clone(), eta);
                let next = fxts_momentum_step_with(obj, &state, params, *scheme)?;
                *v = next.v.expect("momentum step returns a velocity");
                Ok(next.x)
            }
            Stepper::Baseline(b) => b.step(obj, x),
        }
    }

    /// True when the optimizer state cannot move any more.
    fn is_stalled(&self) -> bool {
        match self {
            Stepper::Momentum { v, .. } => v.iter().all(|c| *c == 0.0),
            _ => true,
        }
    }
}

/// Convergence test for iterations-to-threshold.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "tol", rename_all = "snake_case")]
pub enum Threshold {
    /// `|x - x*| <= tol`.
    Distance(f64),
    /// `f - f* <= tol`.
    Gap(f64),
}

impl Threshold {
    /// Distance `1e-4` when the minimizer is known, else gap `1e-8`.
    pub fn default_for(obj: &dyn Objective) -> Self {
        if obj.x_star().is_some() {
            Threshold::Distance(1e-4)
        } else {
            Threshold::Gap(1e-8)
        }
    }

    pub fn met(&self, traj: &Trajectory, i: usize) -> bool {
        match *self {
            Threshold::Distance(tol) => traj.dist_to_opt.as_ref().is_some_and(|d| d[i] <= tol),
            Threshold::Gap(tol) => traj.values[i] <= tol,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DiscreteOptions {
    pub eta: f64,
    pub max_iters: u64,
    pub threshold: Threshold,
    /// Stop as soon as the threshold is met.
    pub stop_at_threshold: bool,
}

#[derive(Debug, Clone)]
pub struct DiscreteRun {
    pub trajectory: Trajectory,
    /// First iteration meeting the threshold.
    pub iters_to_threshold: Option<u64>,
    pub iterations: u64,
    /// Set when an iterate became non-finite; the trajectory ends at the last finite one.
    pub diverged: bool,
}

/// Iterate `spec` from `x0` until the threshold, a fixed point or the budget.
pub fn run_discrete(obj: &dyn Objective, spec: &OptimizerSpec, x0: &Vector, opts: &DiscreteOptions) -> Result<DiscreteRun> {
    if x0.len() != obj.dim() {
        return Err(Error::InvalidParams(format!(
            "x0 has dimension {}, objective has {}",
            x0.len(),
            obj.dim()
        )));
    }
    if matches!(opts.threshold, Threshold::Distance(_)) && obj.x_star().is_none() {
        return Err(Error::MissingMetadata("x_star"));
    }
    let mut stepper = Stepper::new(spec, opts.eta, obj.dim())?;
    let mut traj = Trajectory::for_objective(TimeBase::Discrete { eta: opts.eta }, obj)?;
    let mut x = x0.clone();
    traj.record(obj, 0.0, x.clone())?;
    let mut hit = opts.threshold.met(&traj, 0).then_some(0);
    let mut diverged = false;
    let mut k = 0u64;
    while k < opts.max_iters && !(opts.stop_at_threshold && hit.is_some()) {
        let next = match stepper.step(obj, &x, opts.eta) {
            Ok(next) if next.iter().all(|c| c.is_finite()) && obj.value(&next).is_finite() => next,
            Ok(_) | Err(Error::NonFinite { .. }) => {
                diverged = true;
                break;
            }
            Err(e) => return Err(e),
        };
        k += 1;
        let fixed = next == x && stepper.is_stalled();
        x = next;
        traj.record(obj, k as f64, x.clone())?;
        if hit.is_none() && opts.threshold.met(&traj, traj.len() - 1) {
            hit = Some(k);
        }
        if fixed {
            break;
        }
    }
    Ok(DiscreteRun {
        trajectory: traj,
        iters_to_threshold: hit,
        iterations: k,
        diverged,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::problems::{quadratic, rosenbrock, QuadraticSpec};

    fn opts(eta: f64, max_iters: u64) -> DiscreteOptions {
        DiscreteOptions {
            eta,
            max_iters,
            threshold: Threshold::Distance(1e-4),
            stop_at_threshold: true,
        }
    }

    #[test]
    fn spec_round_trip() {
        let text = r#"{"name":"fxts_momentum","p":20,"q":1.98,"momentum":0.18,"label":"fxts-m"}"#;
        let spec: OptimizerSpec = serde_json::from_str(text).unwrap();
        assert_eq!(spec.label(), "fxts-m");
        let (m, scheme) = spec.momentum_params(1e-3).unwrap().unwrap();
        assert!((m.lambda - 820.0).abs() < 1e-9);
        assert_eq!(scheme, MomentumScheme::SemiImplicit);
        let back: OptimizerSpec = serde_json::from_str(&serde_json::to_string(&spec).unwrap()).unwrap();
        assert_eq!(back, spec);
        let adam: OptimizerSpec = serde_json::from_str(r#"{"name":"adam"}"#).unwrap();
        assert_eq!(adam.baseline_config(1e-3).unwrap().adam_beta2, 0.999);
        assert!(serde_json::from_str::<OptimizerSpec>(r#"{"name":"lbfgs"}"#).is_err());
    }

    #[test]
    fn start_at_optimum_needs_no_iterations() {
        let f = rosenbrock();
        let run = run_discrete(&f, &OptimizerSpec::new(OptimizerKind::Gd), &Vector::from_vec(vec![1.0, 1.0]), &opts(1e-3, 10)).unwrap();
        assert_eq!(run.iters_to_threshold, Some(0));
        assert_eq!(run.iterations, 0);
    }

    #[test]
    fn gd_halving_gap_sequence() {
        let f = quadratic(&QuadraticSpec::identity(2), Vector::zeros(2)).unwrap();
        let o = DiscreteOptions { threshold: Threshold::Gap(0.0), ..opts(0.5, 5) };
        let run = run_discrete(&f, &OptimizerSpec::new(OptimizerKind::Gd), &Vector::from_vec(vec![1.0, 0.0]), &o).unwrap();
        let expected = [0.5, 0.125, 0.03125, 0.0078125];
        for (got, want) in run.trajectory.values.iter().zip(expected) {
            assert!((got - want).abs() < 1e-15);
        }
    }

    #[test]
    fn divergence_is_reported() {
        let f = quadratic(&QuadraticSpec::identity(1), Vector::zeros(1)).unwrap();
        let run = run_discrete(&f, &OptimizerSpec::new(OptimizerKind::Gd), &Vector::from_vec(vec![1.0]), &opts(1e160, 100)).unwrap();
        assert!(run.diverged);
        assert!(run.trajectory.values.iter().all(|v| v.is_finite()));
    }

    #[test]
    fn fxts_reaches_quadratic_optimum() {
        let f = quadratic(&QuadraticSpec::identity(2), Vector::zeros(2)).unwrap();
        let spec = OptimizerSpec::fxts(FxtsParams::new(1.0, 1.0, 2.5, 1.75).unwrap());
        let run = run_discrete(&f, &spec, &Vector::from_vec(vec![30.0, -40.0]), &opts(0.01, 5000)).unwrap();
        assert!(run.iters_to_threshold.is_some());
    }
}
