//! Reference first-order optimizers: gradient descent, heavy-ball momentum,
//! Nesterov look-ahead and Adam.

use serde::{Deserialize, Serialize};

use crate::error::non_finite;
use crate::{Error, Objective, Result, Vector};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    Gd,
    Momentum,
    Nag,
    Adam,
}

impl Method {
    pub fn name(self) -> &'static str {
        match self {
            Method::Gd => "gd",
            Method::Momentum => "momentum",
            Method::Nag => "nag",
            Method::Adam => "adam",
        }
    }
}

fn default_beta1() -> f64 {
    0.9
}

fn default_beta2() -> f64 {
    0.999
}

fn default_eps() -> f64 {
    1e-8
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BaselineConfig {
    pub method: Method,
    pub lr: f64,
    #[serde(rename = "momentum", default)]
    pub momentum_beta: f64,
    #[serde(default = "default_beta1")]
    pub adam_beta1: f64,
    #[serde(default = "default_beta2")]
    pub adam_beta2: f64,
    #[serde(default = "default_eps")]
    pub adam_eps: f64,
}

impl BaselineConfig {
    pub fn new(method: Method, lr: f64) -> Self {
        Self {
            method,
            lr,
            momentum_beta: 0.0,
            adam_beta1: default_beta1(),
            adam_beta2: default_beta2(),
            adam_eps: default_eps(),
        }
    }

    pub fn with_momentum(mut self, beta: f64) -> Self {
        self.momentum_beta = beta;
        self
    }

    pub fn validate(&self) -> Result<()> {
        let mut problems = Vec::new();
        if !(self.lr > 0.0 && self.lr.is_finite()) {
            problems.push(format!("lr must be positive, got {}", self.lr));
        }
        for (name, b) in [
            ("momentum", self.momentum_beta),
            ("adam_beta1", self.adam_beta1),
            ("adam_beta2", self.adam_beta2),
        ] {
            if !(0.0..1.0).contains(&b) {
                problems.push(format!("{name} must lie in [0, 1), got {b}"));
            }
        }
        if !(self.adam_eps > 0.0) {
            problems.push(format!("adam_eps must be positive, got {}", self.adam_eps));
        }
        if problems.is_empty() {
            Ok(())
        } else {
            Err(Error::InvalidParams(problems.join("; ")))
        }
    }

    /// Continuous-time momentum rate `(1 - beta) / lr` matching this heavy-ball config.
    pub fn implied_lambda(&self) -> f64 {
        (1.0 - self.momentum_beta) / self.lr
    }
}

fn gradient(obj: &dyn Objective, x: &Vector) -> Result<Vector> {
    let g = obj.gradient(x);
    if g.iter().any(|c| !c.is_finite()) {
        return Err(non_finite(x));
    }
    Ok(g)
}

fn check_lr(lr: f64) -> Result<()> {
    if lr > 0.0 && lr.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidParams(format!("lr must be positive, got {lr}")))
    }
}

pub fn gd_step(obj: &dyn Objective, x: &Vector, lr: f64) -> Result<Vector> {
    check_lr(lr)?;
    let g = gradient(obj, x)?;
    Ok(x - g * lr)
}

/// `v = beta v + (1 - beta) grad f(x)`, then `x - lr v`.
pub fn momentum_step(obj: &dyn Objective, x: &Vector, v: &Vector, lr: f64, beta: f64) -> Result<(Vector, Vector)> {
    check_lr(lr)?;
    let g = gradient(obj, x)?;
    let v_next = if beta == 0.0 { g } else { v * beta + g * (1.0 - beta) };
    Ok((x - &v_next * lr, v_next))
}

/// Look-ahead form: `v = beta v - lr grad f(x + beta v)`, then `x + v`.
pub fn nag_step(obj: &dyn Objective, x: &Vector, v: &Vector, lr: f64, beta: f64) -> Result<(Vector, Vector)> {
    check_lr(lr)?;
    if beta == 0.0 {
        let g = gradient(obj, x)?;
        let v_next = -(g * lr);
        return Ok((x + &v_next, v_next));
    }
    let ahead = x + v * beta;
    let g = gradient(obj, &ahead)?;
    let v_next = v * beta - g * lr;
    Ok((x + &v_next, v_next))
}

/// First and second moment estimates of Adam.
#[derive(Debug, Clone, PartialEq)]
pub struct AdamMoments {
    pub m: Vector,
    pub v: Vector,
}

impl AdamMoments {
    pub fn zeros(dim: usize) -> Self {
        Self {
            m: Vector::zeros(dim),
            v: Vector::zeros(dim),
        }
    }
}

/// Bias-corrected Adam update for iteration `t >= 1`.
pub fn adam_step(
    obj: &dyn Objective,
    x: &Vector,
    moments: &AdamMoments,
    lr: f64,
    betas: (f64, f64),
    eps: f64,
    t: u64,
) -> Result<(Vector, AdamMoments)> {
    check_lr(lr)?;
    if t == 0 {
        return Err(Error::InvalidParams("adam iteration counter starts at 1".into()));
    }
    let (b1, b2) = betas;
    let g = gradient(obj, x)?;
    let m = &moments.m * b1 + &g * (1.0 - b1);
    let v = &moments.v * b2 + g.component_mul(&g) * (1.0 - b2);
    let c1 = 1.0 - b1.powi(t as i32);
    let c2 = 1.0 - b2.powi(t as i32);
    let step = m.zip_map(&v, |mi, vi| lr * (mi / c1) / ((vi / c2).sqrt() + eps));
    Ok((x - step, AdamMoments { m, v }))
}

/// Stateful wrapper that owns the velocity or moments of one baseline run.
#[derive(Debug, Clone)]
pub struct Baseline {
    config: BaselineConfig,
    velocity: Vector,
    moments: AdamMoments,
    t: u64,
}

impl Baseline {
    pub fn new(config: BaselineConfig, dim: usize) -> Result<Self> {
        config.validate()?;
        Ok(Self {
            config,
            velocity: Vector::zeros(dim),
            moments: AdamMoments::zeros(dim),
            t: 0,
        })
    }

    pub fn config(&self) -> &BaselineConfig {
        &self.config
    }

    pub fn step(&mut self, obj: &dyn Objective, x: &Vector) -> Result<Vector> {
        let c = &self.config;
        self.t += 1;
        match c.method {
            Method::Gd => gd_step(obj, x, c.lr),
            Method::Momentum => {
                let (x, v) = momentum_step(obj, x, &self.velocity, c.lr, c.momentum_beta)?;
                self.velocity = v;
                Ok(x)
            }
            Method::Nag => {
                let (x, v) = nag_step(obj, x, &self.velocity, c.lr, c.momentum_beta)?;
                self.velocity = v;
                Ok(x)
            }
            Method::Adam => {
                let betas = (c.adam_beta1, c.adam_beta2);
                let (x, m) = adam_step(obj, x, &self.moments, c.lr, betas, c.adam_eps, self.t)?;
                self.moments = m;
                Ok(x)
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::problems::{quadratic, rosenbrock, QuadraticSpec};

    fn v(xs: &[f64]) -> Vector {
        Vector::from_column_slice(xs)
    }

    fn identity(dim: usize) -> crate::problems::Quadratic {
        quadratic(&QuadraticSpec::identity(dim), Vector::zeros(dim)).unwrap()
    }

    #[test]
    fn gd_examples() {
        let f = identity(1);
        assert!((gd_step(&f, &v(&[1.0]), 0.1).unwrap()[0] - 0.9).abs() < 1e-15);
        assert_eq!(gd_step(&f, &v(&[0.0]), 0.1).unwrap(), v(&[0.0]));
        let f = identity(3);
        assert_eq!(gd_step(&f, &v(&[3.0, -2.0, 7.5]), 1.0).unwrap(), v(&[0.0, 0.0, 0.0]));
        assert!(gd_step(&f, &v(&[1.0, 1.0, 1.0]), 0.0).is_err());
    }

    #[test]
    fn momentum_examples() {
        let f = identity(2);
        let (x, vel) = momentum_step(&f, &v(&[2.0, 0.0]), &v(&[0.0, 0.0]), 0.1, 0.5).unwrap();
        assert_eq!(vel, v(&[1.0, 0.0]));
        assert!((x[0] - 1.9).abs() < 1e-15 && x[1] == 0.0);
        let (x, vel) = momentum_step(&f, &v(&[0.0, 0.0]), &v(&[0.0, 0.0]), 0.1, 0.5).unwrap();
        assert_eq!((x, vel), (v(&[0.0, 0.0]), v(&[0.0, 0.0])));
    }

    #[test]
    fn nag_example() {
        let f = identity(1);
        let (x, vel) = nag_step(&f, &v(&[1.0]), &v(&[0.0]), 0.1, 0.5).unwrap();
        assert!((vel[0] + 0.1).abs() < 1e-15);
        assert!((x[0] - 0.9).abs() < 1e-15);
    }

    #[test]
    fn zero_beta_matches_gd_bitwise() {
        let f = rosenbrock();
        let mut xg = v(&[-0.4, 0.9]);
        let mut xm = xg.clone();
        let mut xn = xg.clone();
        let mut vm = Vector::zeros(2);
        let mut vn = Vector::zeros(2);
        for _ in 0..500 {
            xg = gd_step(&f, &xg, 1e-3).unwrap();
            (xm, vm) = momentum_step(&f, &xm, &vm, 1e-3, 0.0).unwrap();
            (xn, vn) = nag_step(&f, &xn, &vn, 1e-3, 0.0).unwrap();
            assert_eq!(xg, xm);
            assert_eq!(xg, xn);
        }
    }

    #[test]
    fn adam_first_step_moves_by_lr() {
        let f = identity(2);
        let x0 = v(&[3.0, -0.5]);
        let (x1, m) = adam_step(&f, &x0, &AdamMoments::zeros(2), 0.01, (0.9, 0.999), 1e-8, 1).unwrap();
        for i in 0..2 {
            let moved = (x1[i] - x0[i]).abs();
            assert!((moved - 0.01).abs() < 1e-8, "{moved}");
        }
        let (x2, _) = adam_step(&f, &x1, &m, 0.01, (0.9, 0.999), 1e-8, 2).unwrap();
        assert!(adam_step(&f, &x0, &m, 0.01, (0.9, 0.999), 1e-8, 0).is_err());
        assert!((x2 - &x1).norm() > 0.0);
    }

    #[test]
    fn adam_flat_slope_keeps_full_steps() {
        // linear objective: constant gradient
        struct Slope(crate::problems::Metadata);
        impl Objective for Slope {
            fn dim(&self) -> usize {
                2
            }
            fn value(&self, x: &Vector) -> f64 {
                2.0 * x[0] - 3.0 * x[1]
            }
            fn gradient(&self, _: &Vector) -> Vector {
                Vector::from_vec(vec![2.0, -3.0])
            }
            fn metadata(&self) -> &crate::problems::Metadata {
                &self.0
            }
        }
        let f = Slope(Default::default());
        let lr = 1e-2;
        let mut x = Vector::zeros(2);
        let mut m = AdamMoments::zeros(2);
        for t in 1..=2 {
            let (next, mm) = adam_step(&f, &x, &m, lr, (0.9, 0.999), 1e-8, t).unwrap();
            for i in 0..2 {
                assert!((next[i] - x[i]).abs() >= lr * (1.0 - 1e-3));
            }
            x = next;
            m = mm;
        }
        let (same, _) = adam_step(&identity(2), &Vector::zeros(2), &AdamMoments::zeros(2), lr, (0.9, 0.999), 1e-8, 1).unwrap();
        assert_eq!(same, Vector::zeros(2));
    }

    #[test]
    fn gd_contracts_identity_quadratic() {
        let f = identity(3);
        let x0 = v(&[1.0, -2.0, 0.5]);
        let lr = 0.07;
        let mut x = x0.clone();
        for k in 1..=200 {
            x = gd_step(&f, &x, lr).unwrap();
            let expected = (1.0 - lr).powi(k) * x0.norm();
            assert!((x.norm() - expected).abs() <= 1e-12 * expected);
        }
    }

    #[test]
    fn config_keys() {
        let c: BaselineConfig = serde_json::from_str(r#"{"method":"momentum","lr":0.001,"momentum":0.5}"#).unwrap();
        assert!((c.implied_lambda() - 500.0).abs() < 1e-9);
        let c: BaselineConfig = serde_json::from_str(
            r#"{"method":"adam","lr":0.001,"adam_beta1":0.9,"adam_beta2":0.999,"adam_eps":1e-8}"#,
        )
        .unwrap();
        assert_eq!(c.method, Method::Adam);
        let bad: BaselineConfig = serde_json::from_str(r#"{"method":"nag","lr":-1}"#).unwrap();
        assert!(bad.validate().is_err());
        assert!(serde_json::from_str::<BaselineConfig>(r#"{"method":"sgd","lr":1}"#).is_err());
    }
}
