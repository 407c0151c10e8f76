//! Objective contract and the bundled test problems.

mod checks;
mod least_squares;
mod logistic;
mod quadratic;
mod rosenbrock;

use std::sync::Arc;

use nalgebra::DVector;
use rand::Rng;

use crate::{Error, Result};

pub use checks::{
    check_gradient, pl_violations, quadratic_growth_violation, verify_pl_modulus, PlSampleCheck, DEFAULT_FD_STEP,
};
pub use least_squares::{pl_least_squares, PlLeastSquares};
pub use logistic::{load_dataset_csv, logistic_regression, synthetic_dataset, LogisticRegression};
pub use quadratic::{quadratic, Quadratic, QuadraticSpec};
pub use rosenbrock::{rosenbrock, Rosenbrock};

pub type Vector = DVector<f64>;

/// Axis-aligned box `[lower, upper]` used for region-restricted claims and sampling.
#[derive(Debug, Clone, PartialEq)]
pub struct BoxDomain {
    pub lower: Vector,
    pub upper: Vector,
}

impl BoxDomain {
    pub fn new(lower: Vector, upper: Vector) -> Result<Self> {
        if lower.len() != upper.len() || lower.iter().zip(upper.iter()).any(|(l, u)| !(l <= u)) {
            return Err(Error::InvalidProblem(format!(
                "box bounds are inconsistent: lower {lower:?}, upper {upper:?}"
            )));
        }
        Ok(Self { lower, upper })
    }

    pub fn around(center: &Vector, half_width: f64) -> Self {
        Self {
            lower: center.map(|c| c - half_width),
            upper: center.map(|c| c + half_width),
        }
    }

    pub fn dim(&self) -> usize {
        self.lower.len()
    }

    pub fn contains(&self, x: &Vector) -> bool {
        x.len() == self.dim()
            && x.iter()
                .zip(self.lower.iter().zip(self.upper.iter()))
                .all(|(v, (l, u))| *l <= *v && *v <= *u)
    }

    /// Uniform sample from the box.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> Vector {
        Vector::from_iterator(
            self.dim(),
            self.lower
                .iter()
                .zip(self.upper.iter())
                .map(|(l, u)| l + (u - l) * rng.gen::<f64>()),
        )
    }
}

/// Optional facts known about an objective.
#[derive(Debug, Clone, Default)]
pub struct Metadata {
    pub f_star: Option<f64>,
    pub x_star: Option<Vector>,
    /// PL modulus `mu` in `0.5 |grad f|^2 >= mu (f - f*)`.
    pub pl_modulus: Option<f64>,
    /// Lipschitz constant of the gradient.
    pub lip_grad: Option<f64>,
    /// Region in which the metadata claims are made.
    pub domain_box: Option<BoxDomain>,
}

/// A smooth objective with a hand-coded gradient.
///
/// Implementations are immutable after construction, so evaluation can be
/// shared freely across threads.
pub trait Objective: Send + Sync {
    fn dim(&self) -> usize;

    fn value(&self, x: &Vector) -> f64;

    fn gradient(&self, x: &Vector) -> Vector;

    fn metadata(&self) -> &Metadata;

    fn f_star(&self) -> Option<f64> {
        self.metadata().f_star
    }

    fn x_star(&self) -> Option<&Vector> {
        self.metadata().x_star.as_ref()
    }

    fn pl_modulus(&self) -> Option<f64> {
        self.metadata().pl_modulus
    }
}

/// A named objective with a list of starting points.
#[derive(Clone)]
pub struct ProblemInstance {
    pub objective: Arc<dyn Objective>,
    pub name: String,
    pub init_points: Vec<Vector>,
    pub notes: String,
}

impl std::fmt::Debug for ProblemInstance {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("ProblemInstance")
            .field("name", &self.name)
            .field("dim", &self.objective.dim())
            .field("init_points", &self.init_points)
            .finish()
    }
}

impl ProblemInstance {
    pub fn new(
        objective: Arc<dyn Objective>,
        name: impl Into<String>,
        init_points: Vec<Vector>,
        notes: impl Into<String>,
    ) -> Result<Self> {
        let dim = objective.dim();
        if let Some(bad) = init_points.iter().find(|p| p.len() != dim) {
            return Err(Error::InvalidProblem(format!(
                "initial point of length {} for a {dim}-dimensional objective",
                bad.len()
            )));
        }
        Ok(Self {
            objective,
            name: name.into(),
            init_points,
            notes: notes.into(),
        })
    }
}

/// Names accepted by [`bundled`].
pub const BUNDLED_NAMES: [&str; 4] = ["rosenbrock", "quadratic", "pl-lsq", "logreg"];

/// Seed used for the bundled synthetic logistic-regression dataset.
pub const BUNDLED_LOGREG_SEED: u64 = 7;

/// The bundled problem suite, addressable by name.
pub fn bundled(name: &str) -> Result<ProblemInstance> {
    match name {
        "rosenbrock" => ProblemInstance::new(
            Arc::new(rosenbrock()),
            name,
            vec![Vector::from_vec(vec![0.3, 0.8])],
            "two-dimensional Rosenbrock valley; PL claim restricted to [-1,1]^2",
        ),
        "quadratic" => {
            let q = quadratic(&QuadraticSpec::identity(2), Vector::zeros(2))?;
            ProblemInstance::new(
                Arc::new(q),
                name,
                vec![Vector::from_vec(vec![3.0, 4.0])],
                "identity quadratic 0.5 |x|^2",
            )
        }
        "pl-lsq" => {
            let a = nalgebra::DMatrix::from_row_slice(3, 2, &[1.0, 0.0, 0.0, 0.5, 1.0, 0.5]);
            let b = Vector::from_vec(vec![1.0, -1.0, 2.0]);
            ProblemInstance::new(
                Arc::new(pl_least_squares(a, b)?),
                name,
                vec![Vector::from_vec(vec![2.0, -2.0])],
                "overdetermined least squares with a nonzero residual",
            )
        }
        "logreg" => {
            let (features, labels) = synthetic_dataset(40, 3, BUNDLED_LOGREG_SEED);
            ProblemInstance::new(
                Arc::new(logistic_regression(features, labels, 0.01)?),
                name,
                vec![Vector::zeros(3)],
                "synthetic l2-regularized logistic regression, 40 samples",
            )
        }
        other => Err(Error::InvalidProblem(format!(
            "unknown problem `{other}` (expected one of {BUNDLED_NAMES:?})"
        ))),
    }
}
