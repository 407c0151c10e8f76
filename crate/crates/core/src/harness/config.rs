use std::path::{Path, PathBuf};
use std::sync::Arc;

use nalgebra::DMatrix;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::continuum::{IntegratorConfig, NoiseSpec};
use crate::optim::{OptimizerKind, OptimizerSpec, Threshold};
use crate::problems::{
    load_dataset_csv, logistic_regression, pl_least_squares, quadratic, rosenbrock, synthetic_dataset,
    QuadraticSpec, BUNDLED_LOGREG_SEED,
};
use crate::{Error, Objective, Result, Vector};

pub const CONFIG_VERSION: u32 = 1;

/// Environment variable that replaces `output_dir`.
pub const OUTPUT_DIR_ENV: &str = "FXTS_OUTPUT_DIR";

fn default_logreg_samples() -> usize {
    40
}

fn default_logreg_features() -> usize {
    3
}

fn default_logreg_seed() -> u64 {
    BUNDLED_LOGREG_SEED
}

fn default_logreg_reg() -> f64 {
    0.01
}

fn default_eigenvalues() -> Vec<f64> {
    vec![1.0, 1.0]
}

/// Problem selection, tagged by `name`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "name", deny_unknown_fields)]
pub enum ProblemSpec {
    #[serde(rename = "rosenbrock")]
    Rosenbrock,
    #[serde(rename = "quadratic")]
    Quadratic {
        #[serde(default = "default_eigenvalues")]
        eigenvalues: Vec<f64>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        rotation_seed: Option<u64>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        center: Option<Vec<f64>>,
    },
    #[serde(rename = "pl-lsq")]
    PlLeastSquares {
        /// Rows of `A`; the bundled system when absent.
        #[serde(default, skip_serializing_if = "Option::is_none")]
        a: Option<Vec<Vec<f64>>>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        b: Option<Vec<f64>>,
    },
    #[serde(rename = "logreg")]
    Logreg {
        #[serde(default = "default_logreg_samples")]
        samples: usize,
        #[serde(default = "default_logreg_features")]
        features: usize,
        #[serde(default = "default_logreg_seed")]
        seed: u64,
        #[serde(default = "default_logreg_reg")]
        reg: f64,
        /// Dataset file with header `feature_0,...,label`, replacing the synthetic one.
        #[serde(default, skip_serializing_if = "Option::is_none")]
        csv: Option<PathBuf>,
    },
}

impl ProblemSpec {
    pub fn name(&self) -> &'static str {
        match self {
            ProblemSpec::Rosenbrock => "rosenbrock",
            ProblemSpec::Quadratic { .. } => "quadratic",
            ProblemSpec::PlLeastSquares { .. } => "pl-lsq",
            ProblemSpec::Logreg { .. } => "logreg",
        }
    }

    pub fn identity_quadratic(dim: usize) -> Self {
        ProblemSpec::Quadratic {
            eigenvalues: vec![1.0; dim],
            rotation_seed: None,
            center: None,
        }
    }

    pub fn build(&self) -> Result<Arc<dyn Objective>> {
        Ok(match self {
            ProblemSpec::Rosenbrock => Arc::new(rosenbrock()),
            ProblemSpec::Quadratic { eigenvalues, rotation_seed, center } => {
                let spec = QuadraticSpec {
                    eigenvalues: eigenvalues.clone(),
                    rotation_seed: *rotation_seed,
                };
                let center = match center {
                    Some(c) => Vector::from_vec(c.clone()),
                    None => Vector::zeros(eigenvalues.len()),
                };
                Arc::new(quadratic(&spec, center)?)
            }
            ProblemSpec::PlLeastSquares { a, b } => {
                let (a, b) = match (a, b) {
                    (None, None) => (
                        DMatrix::from_row_slice(3, 2, &[1.0, 0.0, 0.0, 0.5, 1.0, 0.5]),
                        Vector::from_vec(vec![1.0, -1.0, 2.0]),
                    ),
                    (Some(rows), Some(b)) => {
                        let cols = rows.first().map_or(0, Vec::len);
                        if rows.iter().any(|r| r.len() != cols) || cols == 0 {
                            return Err(Error::InvalidProblem("rows of `a` must be non-empty and equally long".into()));
                        }
                        let flat: Vec<f64> = rows.iter().flatten().copied().collect();
                        (DMatrix::from_row_slice(rows.len(), cols, &flat), Vector::from_vec(b.clone()))
                    }
                    _ => return Err(Error::InvalidProblem("`a` and `b` must be given together".into())),
                };
                Arc::new(pl_least_squares(a, b)?)
            }
            ProblemSpec::Logreg { samples, features, seed, reg, csv } => {
                let (x, y) = match csv {
                    Some(path) => load_dataset_csv(path)?,
                    None => synthetic_dataset(*samples, *features, *seed),
                };
                Arc::new(logistic_regression(x, y, *reg)?)
            }
        })
    }
}

/// Starting point: explicit coordinates or a seeded random direction.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum X0Spec {
    Point(Vec<f64>),
    /// `x* + magnitude u` with `u` uniform on the sphere (origin when `x*` is unknown).
    Random {
        magnitude: f64,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        seed: Option<u64>,
    },
}

impl X0Spec {
    pub fn resolve(&self, obj: &dyn Objective, default_seed: u64) -> Result<Vector> {
        match self {
            X0Spec::Point(p) => Ok(Vector::from_vec(p.clone())),
            X0Spec::Random { magnitude, seed } => {
                let dim = obj.dim();
                let mut rng = ChaCha8Rng::seed_from_u64(seed.unwrap_or(default_seed));
                let u = loop {
                    let v = Vector::from_iterator(dim, (0..dim).map(|_| StandardNormal.sample(&mut rng)));
                    if v.norm() > 1e-8 {
                        break v.normalize();
                    }
                };
                let center = obj.x_star().cloned().unwrap_or_else(|| Vector::zeros(dim));
                Ok(center + u * *magnitude)
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Mode {
    #[default]
    Discrete,
    Continuous,
    ContinuousNoisy,
}

fn default_settle() -> f64 {
    1e-9
}

fn default_dist() -> f64 {
    1e-4
}

fn default_gap() -> f64 {
    1e-8
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Thresholds {
    /// Settling level on `f - f*` for continuous runs.
    #[serde(default = "default_settle")]
    pub settle: f64,
    /// `|x - x*|` level for iterations-to-threshold when `x*` is known.
    #[serde(default = "default_dist")]
    pub dist: f64,
    /// `f - f*` level for iterations-to-threshold otherwise.
    #[serde(default = "default_gap")]
    pub gap: f64,
}

impl Default for Thresholds {
    fn default() -> Self {
        Self {
            settle: default_settle(),
            dist: default_dist(),
            gap: default_gap(),
        }
    }
}

impl Thresholds {
    pub fn discrete(&self, obj: &dyn Objective) -> Threshold {
        if obj.x_star().is_some() {
            Threshold::Distance(self.dist)
        } else {
            Threshold::Gap(self.gap)
        }
    }
}

fn default_substep_tol() -> f64 {
    1e-3
}

fn default_max_depth() -> u32 {
    30
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SubstepSettings {
    #[serde(default = "default_substep_tol")]
    pub substep_tol: f64,
    #[serde(default = "default_max_depth")]
    pub max_depth: u32,
}

impl Default for SubstepSettings {
    fn default() -> Self {
        Self {
            substep_tol: default_substep_tol(),
            max_depth: default_max_depth(),
        }
    }
}

fn default_version() -> u32 {
    CONFIG_VERSION
}

fn default_max_iters() -> u64 {
    100_000
}

fn default_horizon() -> f64 {
    10.0
}

fn default_output_dir() -> PathBuf {
    PathBuf::from("fxts-out")
}

fn default_stride() -> usize {
    1
}

fn default_true() -> bool {
    true
}

/// One experiment, or a roster of optimizers for `compare`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(default = "default_version")]
    pub version: u32,
    pub problem: ProblemSpec,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub optimizer: Option<OptimizerSpec>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub optimizers: Vec<OptimizerSpec>,
    #[serde(default)]
    pub mode: Mode,
    pub x0: X0Spec,
    /// Step size: `eta` for the fixed-time methods and RK4, `lr` for the baselines.
    #[serde(alias = "eta", alias = "lr")]
    pub eta_or_lr: f64,
    #[serde(default = "default_max_iters")]
    pub max_iters: u64,
    #[serde(default = "default_horizon")]
    pub horizon: f64,
    #[serde(default)]
    pub thresholds: Thresholds,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub noise: Option<NoiseSpec>,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_output_dir")]
    pub output_dir: PathBuf,
    /// Keep every `stride`-th trajectory row in CSV output.
    #[serde(default = "default_stride")]
    pub stride: usize,
    /// Stop discrete runs once the threshold is met.
    #[serde(default = "default_true")]
    pub stop_at_threshold: bool,
    #[serde(default)]
    pub integrator: SubstepSettings,
    /// Pairs `[a, b]`: `a` must reach the threshold in strictly fewer iterations than `b`.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub expect_order: Vec<[String; 2]>,
}

impl RunConfig {
    pub fn new(problem: ProblemSpec, optimizer: OptimizerSpec, x0: X0Spec, eta_or_lr: f64) -> Self {
        Self {
            version: CONFIG_VERSION,
            problem,
            optimizer: Some(optimizer),
            optimizers: Vec::new(),
            mode: Mode::Discrete,
            x0,
            eta_or_lr,
            max_iters: default_max_iters(),
            horizon: default_horizon(),
            thresholds: Thresholds::default(),
            noise: None,
            seed: 0,
            output_dir: default_output_dir(),
            stride: 1,
            stop_at_threshold: true,
            integrator: SubstepSettings::default(),
            expect_order: Vec::new(),
        }
    }

    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::Config(vec![e.to_string()]))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(vec![format!("cannot read {}: {e}", path.display())]))?;
        Self::from_json(&text)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes")
    }

    /// Output directory, replaced by `FXTS_OUTPUT_DIR` when set.
    pub fn resolved_output_dir(&self) -> PathBuf {
        match std::env::var_os(OUTPUT_DIR_ENV) {
            Some(dir) if !dir.is_empty() => PathBuf::from(dir),
            _ => self.output_dir.clone(),
        }
    }

    pub fn integrator_config(&self) -> IntegratorConfig {
        IntegratorConfig {
            step: self.eta_or_lr,
            horizon: self.horizon,
            substep_tol: self.integrator.substep_tol,
            max_depth: self.integrator.max_depth,
        }
    }

    /// Every optimizer named in the config, single-run entry first.
    pub fn roster(&self) -> Vec<OptimizerSpec> {
        self.optimizer.iter().chain(self.optimizers.iter()).cloned().collect()
    }

    /// Check the whole config, collecting every violated constraint.
    pub fn validate(&self) -> Result<()> {
        let mut errs = Vec::new();
        if self.version != CONFIG_VERSION {
            errs.push(format!("version must be {CONFIG_VERSION}, got {}", self.version));
        }
        if !(self.eta_or_lr > 0.0 && self.eta_or_lr.is_finite()) {
            errs.push(format!("eta_or_lr must be positive, got {}", self.eta_or_lr));
        }
        if self.max_iters == 0 {
            errs.push("max_iters must be positive".into());
        }
        if !(self.horizon > 0.0 && self.horizon.is_finite()) {
            errs.push(format!("horizon must be positive, got {}", self.horizon));
        }
        if self.stride == 0 {
            errs.push("stride must be at least 1".into());
        }
        let t = &self.thresholds;
        for (name, v) in [("settle", t.settle), ("dist", t.dist), ("gap", t.gap)] {
            if !(v >= 0.0) {
                errs.push(format!("thresholds.{name} must be nonnegative, got {v}"));
            }
        }
        if !(self.integrator.substep_tol > 0.0) {
            errs.push("integrator.substep_tol must be positive".into());
        }
        if self.integrator.max_depth > 40 {
            errs.push("integrator.max_depth must be at most 40".into());
        }
        let obj = match self.problem.build() {
            Ok(obj) => Some(obj),
            Err(e) => {
                errs.push(format!("problem: {e}"));
                None
            }
        };
        if let Some(obj) = &obj {
            match self.x0.resolve(obj.as_ref(), self.seed) {
                Ok(x0) if x0.len() != obj.dim() => errs.push(format!(
                    "x0 has dimension {}, problem `{}` has {}",
                    x0.len(),
                    self.problem.name(),
                    obj.dim()
                )),
                Ok(x0) if x0.iter().any(|c| !c.is_finite()) => errs.push("x0 must be finite".into()),
                Ok(_) => {}
                Err(e) => errs.push(format!("x0: {e}")),
            }
            if obj.f_star().is_none() {
                errs.push(format!("problem `{}` has no known optimal value", self.problem.name()));
            }
            if self.mode == Mode::ContinuousNoisy && obj.x_star().is_none() {
                errs.push("continuous_noisy mode needs a problem with a known minimizer".into());
            }
        }
        let roster = self.roster();
        if roster.is_empty() {
            errs.push("config names no optimizer (`optimizer` or `optimizers`)".into());
        }
        let mut labels = Vec::new();
        for spec in &roster {
            let label = spec.label();
            if labels.contains(&label) {
                errs.push(format!("duplicate optimizer label `{label}`"));
            }
            if let Err(e) = spec.validate(self.eta_or_lr) {
                errs.push(format!("optimizer `{label}`: {e}"));
            }
            if self.mode != Mode::Discrete
                && !matches!(
                    spec.kind,
                    OptimizerKind::Fxts { .. } | OptimizerKind::FxtsMomentum { .. } | OptimizerKind::Gd
                )
            {
                errs.push(format!(
                    "optimizer `{label}` has no continuous-time form (use fxts, fxts_momentum or gd)"
                ));
            }
            labels.push(label);
        }
        match (self.mode, &self.noise) {
            (Mode::ContinuousNoisy, None) => errs.push("continuous_noisy mode needs `noise`".into()),
            (Mode::ContinuousNoisy, Some(n)) if !(n.level >= 0.0) => {
                errs.push(format!("noise.level must be nonnegative, got {}", n.level))
            }
            (Mode::Discrete | Mode::Continuous, Some(_)) => {
                errs.push("`noise` is only used in continuous_noisy mode".into())
            }
            _ => {}
        }
        for [a, b] in &self.expect_order {
            for l in [a, b] {
                if !labels.contains(l) {
                    errs.push(format!("expect_order names unknown optimizer `{l}`"));
                }
            }
        }
        if errs.is_empty() {
            Ok(())
        } else {
            Err(Error::Config(errs))
        }
    }
}
