use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal, Uniform};
use serde::{Deserialize, Serialize};

use super::systems::Flow;
use crate::{Error, Objective, Result, Vector};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NoiseMode {
    /// One seeded random unit direction.
    FixedUnit,
    /// Unit vector turning in a seeded plane with angle `theta0 + |x - x*|`.
    Rotating,
    /// Outward direction `(x - x*) / |x - x*|`.
    #[default]
    Radial,
}

/// Additive disturbance of norm `level * |x - x*|^2`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NoiseSpec {
    pub level: f64,
    #[serde(default)]
    pub direction_mode: NoiseMode,
    #[serde(default)]
    pub seed: u64,
}

impl NoiseSpec {
    pub fn radial(level: f64) -> Self {
        Self {
            level,
            direction_mode: NoiseMode::Radial,
            seed: 0,
        }
    }
}

/// A concrete disturbance `eps(x)` bound to an optimum.
#[derive(Debug, Clone, PartialEq)]
pub struct Disturbance {
    level: f64,
    x_star: Vector,
    mode: NoiseMode,
    e1: Vector,
    e2: Option<Vector>,
    theta0: f64,
}

fn unit_gaussian(rng: &mut ChaCha8Rng, dim: usize) -> Vector {
    loop {
        let v = Vector::from_iterator(dim, (0..dim).map(|_| StandardNormal.sample(rng)));
        let n = v.norm();
        if n > 1e-8 {
            return v / n;
        }
    }
}

impl Disturbance {
    pub fn new(spec: &NoiseSpec, x_star: Vector) -> Result<Self> {
        if !(spec.level >= 0.0 && spec.level.is_finite()) {
            return Err(Error::InvalidParams(format!("noise level must be nonnegative, got {}", spec.level)));
        }
        let dim = x_star.len();
        let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
        let e1 = unit_gaussian(&mut rng, dim);
        let mut e2 = None;
        let mut mode = spec.direction_mode;
        if mode == NoiseMode::Rotating {
            if dim < 2 {
                mode = NoiseMode::FixedUnit;
            } else {
                loop {
                    let w = unit_gaussian(&mut rng, dim);
                    let w = &w - &e1 * e1.dot(&w);
                    let n = w.norm();
                    if n > 1e-6 {
                        e2 = Some(w / n);
                        break;
                    }
                }
            }
        }
        let theta0 = Uniform::new(0.0, std::f64::consts::TAU).sample(&mut rng);
        Ok(Self {
            level: spec.level,
            x_star,
            mode,
            e1,
            e2,
            theta0,
        })
    }

    pub fn level(&self) -> f64 {
        self.level
    }

    pub fn mode(&self) -> NoiseMode {
        self.mode
    }

    pub fn eval(&self, x: &Vector) -> Vector {
        let d = x - &self.x_star;
        let r = d.norm();
        if r == 0.0 || self.level == 0.0 {
            return Vector::zeros(x.len());
        }
        let u = match (self.mode, &self.e2) {
            (NoiseMode::Radial, _) => d / r,
            (NoiseMode::Rotating, Some(e2)) => {
                let th = self.theta0 + r;
                &self.e1 * th.cos() + e2 * th.sin()
            }
            _ => self.e1.clone(),
        };
        u * (self.level * r * r)
    }
}

/// A flow with `eps(x)` added to its position equation.
pub struct PerturbedFlow<F> {
    base: F,
    noise: Disturbance,
}

impl<F: Flow> PerturbedFlow<F> {
    pub fn disturbance(&self) -> &Disturbance {
        &self.noise
    }

    pub fn base(&self) -> &F {
        &self.base
    }
}

/// Wrap `base` with the disturbance described by `spec`; needs a known `x*`.
pub fn perturbed_field<F: Flow>(base: F, spec: &NoiseSpec) -> Result<PerturbedFlow<F>> {
    let x_star = base
        .objective()
        .x_star()
        .cloned()
        .ok_or(Error::MissingMetadata("x_star"))?;
    Ok(PerturbedFlow {
        noise: Disturbance::new(spec, x_star)?,
        base,
    })
}

impl<F: Flow> Flow for PerturbedFlow<F> {
    fn objective(&self) -> &dyn Objective {
        self.base.objective()
    }

    fn state_dim(&self) -> usize {
        self.base.state_dim()
    }

    fn initial_state(&self, x0: &Vector) -> Vector {
        self.base.initial_state(x0)
    }

    fn rhs(&self, y: &Vector) -> Result<Vector> {
        let mut out = self.base.rhs(y)?;
        let eps = self.noise.eval(&self.base.position(y));
        let n = eps.len();
        let mut head = out.rows_mut(0, n);
        head += eps;
        Ok(out)
    }

    fn position(&self, y: &Vector) -> Vector {
        self.base.position(y)
    }

    fn is_at_rest(&self, y: &Vector) -> bool {
        self.base.is_at_rest(y) && self.noise.eval(&self.base.position(y)).norm() <= crate::flows::GRAD_FLOOR
    }
}

#[cfg(test)]
mod tests {
    use std::sync::Arc;

    use super::*;
    use crate::continuum::GradientFlow;
    use crate::problems::{quadratic, rosenbrock, QuadraticSpec};

    fn center() -> Vector {
        Vector::from_vec(vec![1.0, -1.0, 0.5])
    }

    #[test]
    fn norm_matches_level_times_squared_distance() {
        for mode in [NoiseMode::FixedUnit, NoiseMode::Rotating, NoiseMode::Radial] {
            let spec = NoiseSpec { level: 0.1, direction_mode: mode, seed: 3 };
            let d = Disturbance::new(&spec, center()).unwrap();
            assert_eq!(d.eval(&center()), Vector::zeros(3));
            let x = center() + Vector::from_vec(vec![2.0, 0.0, 0.0]);
            assert!((d.eval(&x).norm() - 0.4).abs() < 1e-12, "{mode:?}");
        }
    }

    #[test]
    fn radial_points_outward() {
        let d = Disturbance::new(&NoiseSpec::radial(1.0), center()).unwrap();
        let x = center() + Vector::from_vec(vec![0.0, 3.0, 4.0]);
        let e = d.eval(&x);
        assert!((e.dot(&(x - center())) - 125.0).abs() < 1e-9);
    }

    #[test]
    fn rotating_falls_back_in_one_dimension() {
        let spec = NoiseSpec { level: 1.0, direction_mode: NoiseMode::Rotating, seed: 0 };
        let d = Disturbance::new(&spec, Vector::zeros(1)).unwrap();
        assert_eq!(d.mode(), NoiseMode::FixedUnit);
    }

    #[test]
    fn seeds_reproduce() {
        let spec = NoiseSpec { level: 1.0, direction_mode: NoiseMode::Rotating, seed: 11 };
        let a = Disturbance::new(&spec, center()).unwrap();
        let b = Disturbance::new(&spec, center()).unwrap();
        let x = Vector::from_vec(vec![0.3, 0.2, 0.1]);
        assert_eq!(a.eval(&x), b.eval(&x));
    }

    #[test]
    fn wraps_the_position_equation() {
        let q = Arc::new(quadratic(&QuadraticSpec::identity(1), Vector::zeros(1)).unwrap());
        let f = perturbed_field(GradientFlow::new(q), &NoiseSpec::radial(0.5)).unwrap();
        // -x + 0.5 x^2 at x = 2
        assert!((f.rhs(&Vector::from_vec(vec![2.0])).unwrap()[0] - 0.0).abs() < 1e-15);
        assert!((f.rhs(&Vector::from_vec(vec![1.0])).unwrap()[0] + 0.5).abs() < 1e-15);
    }

    #[test]
    fn needs_optimum() {
        struct NoStar(crate::problems::Metadata);
        impl Objective for NoStar {
            fn dim(&self) -> usize {
                1
            }
            fn value(&self, x: &Vector) -> f64 {
                x[0] * x[0]
            }
            fn gradient(&self, x: &Vector) -> Vector {
                x * 2.0
            }
            fn metadata(&self) -> &crate::problems::Metadata {
                &self.0
            }
        }
        let err = perturbed_field(GradientFlow::new(Arc::new(NoStar(Default::default()))), &NoiseSpec::radial(0.1));
        assert!(matches!(err, Err(Error::MissingMetadata("x_star"))));
        assert!(perturbed_field(GradientFlow::new(Arc::new(rosenbrock())), &NoiseSpec::radial(0.1)).is_ok());
    }
}
