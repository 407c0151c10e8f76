use serde::{Deserialize, Serialize};

use super::{pow_via_log, StepState, GRAD_FLOOR};
use crate::error::non_finite;
use crate::{Error, Objective, Result, Vector};

/// Parameters of the fixed-time stable momentum flow
///
/// `dx/dt = -v h(x, v)`, `dv/dt = lambda (grad f - v) g_{p,q}(|grad f - v|)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawMomentum")]
pub struct MomentumParams {
    pub p: f64,
    pub q: f64,
    pub lambda: f64,
    #[serde(rename = "momentum", skip_serializing_if = "Option::is_none")]
    pub momentum_beta: Option<f64>,
    #[serde(rename = "lr", skip_serializing_if = "Option::is_none")]
    pub step_alpha: Option<f64>,
    /// Whether `g_{p,q}` decreased across the whole check grid.
    pub g_decreasing: bool,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawMomentum {
    p: f64,
    q: f64,
    lambda: Option<f64>,
    momentum: Option<f64>,
    lr: Option<f64>,
    // accepted and recomputed
    #[allow(dead_code)]
    g_decreasing: Option<bool>,
}

impl TryFrom<RawMomentum> for MomentumParams {
    type Error = Error;

    fn try_from(raw: RawMomentum) -> Result<Self> {
        match (raw.lambda, raw.momentum, raw.lr) {
            (Some(lambda), None, None) => MomentumParams::new(raw.p, raw.q, lambda),
            (None, Some(beta), Some(lr)) => MomentumParams::from_momentum(raw.p, raw.q, beta, lr),
            (Some(lambda), Some(beta), Some(lr)) => {
                let mut params = MomentumParams::from_momentum(raw.p, raw.q, beta, lr)?;
                params.lambda = lambda;
                params.validate()?;
                Ok(params)
            }
            _ => Err(Error::InvalidParams(
                "momentum flow needs `lambda` or both `momentum` and `lr`".into(),
            )),
        }
    }
}

impl MomentumParams {
    pub fn new(p: f64, q: f64, lambda: f64) -> Result<Self> {
        let params = Self {
            p,
            q,
            lambda,
            momentum_beta: None,
            step_alpha: None,
            g_decreasing: false,
        };
        params.validate()?;
        Ok(Self {
            g_decreasing: g_decreasing_on_grid(p, q),
            ..params
        })
    }

    /// Derive `lambda = (1 - beta) / alpha` from a heavy-ball momentum and step size.
    pub fn from_momentum(p: f64, q: f64, beta: f64, alpha: f64) -> Result<Self> {
        if !(0.0..1.0).contains(&beta) {
            return Err(Error::InvalidParams(format!("momentum must lie in [0, 1), got {beta}")));
        }
        if !(alpha > 0.0 && alpha.is_finite()) {
            return Err(Error::InvalidParams(format!("step size must be positive, got {alpha}")));
        }
        let mut params = Self::new(p, q, (1.0 - beta) / alpha)?;
        params.momentum_beta = Some(beta);
        params.step_alpha = Some(alpha);
        Ok(params)
    }

    pub fn validate(&self) -> Result<()> {
        let mut problems = Vec::new();
        if !(self.p > 2.0 && self.p.is_finite()) {
            problems.push(format!("p must exceed 2, got {}", self.p));
        }
        if !(self.q > 1.0 && self.q < 2.0) {
            problems.push(format!("q must lie in (1, 2), got {}", self.q));
        }
        if !(self.lambda > 0.0 && self.lambda.is_finite()) {
            problems.push(format!("lambda must be positive, got {}", self.lambda));
        }
        if problems.is_empty() {
            Ok(())
        } else {
            Err(Error::InvalidParams(problems.join("; ")))
        }
    }

    fn exponents(&self) -> (f64, f64) {
        (-(self.p - 2.0) / (self.p - 1.0), -(self.q - 2.0) / (self.q - 1.0))
    }

    fn g(&self, s: f64) -> f64 {
        let (a, b) = self.exponents();
        pow_via_log(s, a) + pow_via_log(s, b)
    }
}

/// `g_{p,q}(s) = s^(-(p-2)/(p-1)) + s^(-(q-2)/(q-1))`.
pub fn g_scaling(s: f64, p: f64, q: f64) -> Result<f64> {
    if !(s > 0.0) {
        return Err(Error::Domain(format!("g_{{p,q}} needs s > 0, got {s}")));
    }
    Ok(s.powf(-(p - 2.0) / (p - 1.0)) + s.powf(-(q - 2.0) / (q - 1.0)))
}

/// Check that `g_{p,q}` strictly decreases on 1601 log-spaced points over `[1e-8, 1e8]`.
///
/// The `q` term has a positive exponent, so the check fails once `s` passes the
/// turning point `((p-2)(q-1) / ((2-q)(p-1)))^((p-1)(q-1)/(p-q))`.
pub fn g_decreasing_on_grid(p: f64, q: f64) -> bool {
    const POINTS: usize = 1601;
    let mut prev = f64::INFINITY;
    for i in 0..POINTS {
        let s = 10f64.powf(-8.0 + 16.0 * i as f64 / (POINTS - 1) as f64);
        let g = match g_scaling(s, p, q) {
            Ok(g) => g,
            Err(_) => return false,
        };
        if g >= prev {
            return false;
        }
        prev = g;
    }
    true
}

/// Minimizer of `g_{p,q}` on `(0, inf)` when `p > 2 > q > 1`, the point past which `g` grows.
pub fn g_turning_point(p: f64, q: f64) -> Option<f64> {
    if !(p > 2.0 && q > 1.0 && q < 2.0) {
        return None;
    }
    let base = (p - 2.0) * (q - 1.0) / ((2.0 - q) * (p - 1.0));
    Some(base.powf((p - 1.0) * (q - 1.0) / (p - q)))
}

/// Position speed multiplier `h(x, v)`.
///
/// `g_{p,q}(|grad f|)` when `|grad f| > |grad f - v|` and `|grad f|` exceeds the floor, else 1.
pub fn h_switch(obj: &dyn Objective, x: &Vector, v: &Vector, params: &MomentumParams) -> f64 {
    let grad = obj.gradient(x);
    h_from_gradient(&grad, v, params)
}

fn h_from_gradient(grad: &Vector, v: &Vector, params: &MomentumParams) -> f64 {
    let gn = grad.norm();
    let rn = (grad - v).norm();
    if gn > rn && gn > GRAD_FLOOR {
        params.g(gn)
    } else {
        1.0
    }
}

fn check_finite(x: &Vector, v: &Vector, grad: &Vector) -> Result<()> {
    if x.iter().chain(v.iter()).chain(grad.iter()).any(|c| !c.is_finite()) {
        return Err(non_finite(x));
    }
    Ok(())
}

fn v_dot(grad: &Vector, v: &Vector, params: &MomentumParams) -> Vector {
    let r = grad - v;
    let rn = r.norm();
    if rn <= GRAD_FLOOR {
        return Vector::zeros(v.len());
    }
    r * (params.lambda * params.g(rn))
}

/// Right-hand side `(dx/dt, dv/dt)` of the momentum flow.
pub fn fxts_momentum_field(
    obj: &dyn Objective,
    x: &Vector,
    v: &Vector,
    params: &MomentumParams,
) -> Result<(Vector, Vector)> {
    let grad = obj.gradient(x);
    check_finite(x, v, &grad)?;
    let h = h_from_gradient(&grad, v, params);
    Ok((v * (-h), v_dot(&grad, v, params)))
}

/// Order of the velocity and position updates in the discrete momentum step.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MomentumScheme {
    /// Update `v`, then move `x` with the new velocity.
    #[default]
    SemiImplicit,
    /// Move `x` with the old velocity, then update `v`.
    Explicit,
}

/// Semi-implicit Euler step of the momentum flow.
pub fn fxts_momentum_step(
    obj: &dyn Objective,
    state: &StepState,
    params: &MomentumParams,
) -> Result<StepState> {
    fxts_momentum_step_with(obj, state, params, MomentumScheme::SemiImplicit)
}

pub fn fxts_momentum_step_with(
    obj: &dyn Objective,
    state: &StepState,
    params: &MomentumParams,
    scheme: MomentumScheme,
) -> Result<StepState> {
    let eta = state.eta;
    if !(eta > 0.0) {
        return Err(Error::InvalidParams(format!("step size must be positive, got {eta}")));
    }
    let v = state
        .v
        .as_ref()
        .ok_or_else(|| Error::InvalidParams("momentum step needs a velocity".into()))?;
    let grad = obj.gradient(&state.x);
    check_finite(&state.x, v, &grad)?;
    let v_next = v + v_dot(&grad, v, params) * eta;
    let x_next = match scheme {
        MomentumScheme::SemiImplicit => {
            let h = h_from_gradient(&grad, &v_next, params);
            &state.x - &v_next * (eta * h)
        }
        MomentumScheme::Explicit => {
            let h = h_from_gradient(&grad, v, params);
            &state.x - v * (eta * h)
        }
    };
    Ok(StepState {
        x: x_next,
        v: Some(v_next),
        k: state.k + 1,
        eta,
    })
}

#[cfg(test)]
mod tests {
    #[test]
    fn turning_point_is_minimum() {
        let (p, q) = (2.1, 1.98);
        let s = g_turning_point(p, q).unwrap();
        let g = |s: f64| g_scaling(s, p, q).unwrap();
        assert!(g(s) < g(0.99 * s) && g(s) < g(1.01 * s));
        assert!(!g_decreasing_on_grid(p, q));
        assert_eq!(g_turning_point(1.9, 1.5), None);
    }

    use super::*;
    use crate::problems::{quadratic, QuadraticSpec};

    fn half_square() -> crate::problems::Quadratic {
        quadratic(&QuadraticSpec::identity(1), Vector::zeros(1)).unwrap()
    }

    fn v1(x: f64) -> Vector {
        Vector::from_vec(vec![x])
    }

    #[test]
    fn g_values() {
        for (p, q) in [(3.0, 1.5), (2.1, 1.98), (20.0, 1.01)] {
            assert_eq!(g_scaling(1.0, p, q).unwrap(), 2.0);
        }
        assert!((g_scaling(4.0, 3.0, 1.5).unwrap() - 4.5).abs() < 1e-12);
        assert!(matches!(g_scaling(0.0, 3.0, 1.5), Err(Error::Domain(_))));
        assert!(matches!(g_scaling(-1.0, 3.0, 1.5), Err(Error::Domain(_))));
    }

    #[test]
    fn g_not_monotone_for_small_gap_pair() {
        // g falls until s near 6.7e5 and rises afterwards
        assert!(!g_decreasing_on_grid(2.1, 1.98));
        let at = |s: f64| g_scaling(s, 2.1, 1.98).unwrap();
        assert!(at(1e5) < at(1e-3));
        assert!(at(1e8) > at(1e6));
        assert!(!MomentumParams::new(2.1, 1.98, 1.0).unwrap().g_decreasing);
    }

    #[test]
    fn h_cases() {
        let f = half_square();
        let p = MomentumParams::new(3.0, 1.5, 1.0).unwrap();
        assert_eq!(h_switch(&f, &v1(1.0), &v1(1.0), &p), 2.0);
        assert_eq!(h_switch(&f, &v1(1.0), &v1(0.0), &p), 1.0);
        assert!((h_switch(&f, &v1(4.0), &v1(3.0), &p) - 4.5).abs() < 1e-12);
        assert_eq!(h_switch(&f, &v1(0.0), &v1(0.0), &p), 1.0);
    }

    #[test]
    fn field_cases() {
        let f = half_square();
        let p = MomentumParams::new(3.0, 1.5, 2.0).unwrap();
        let (xd, vd) = fxts_momentum_field(&f, &v1(0.0), &v1(0.0), &p).unwrap();
        assert_eq!((xd, vd), (v1(0.0), v1(0.0)));
        let (xd, vd) = fxts_momentum_field(&f, &v1(1.0), &v1(1.0), &p).unwrap();
        assert!((xd[0] + 2.0).abs() < 1e-15);
        assert_eq!(vd, v1(0.0));
        let p = MomentumParams::new(3.0, 1.5, 1.0).unwrap();
        let (xd, vd) = fxts_momentum_field(&f, &v1(-1.0), &v1(0.0), &p).unwrap();
        assert_eq!(xd, v1(0.0));
        assert!((vd[0] + 2.0).abs() < 1e-15);
    }

    #[test]
    fn semi_implicit_trace() {
        let f = half_square();
        let p = MomentumParams::new(3.0, 1.5, 1.0).unwrap();
        let s = fxts_momentum_step(&f, &StepState::with_velocity(v1(1.0), v1(0.0), 0.1), &p).unwrap();
        assert!((s.v.as_ref().unwrap()[0] - 0.2).abs() < 1e-15);
        assert!((s.x[0] - 0.96).abs() < 1e-15);
        let rest = StepState::with_velocity(v1(0.0), v1(0.0), 0.1);
        let s = fxts_momentum_step(&f, &rest, &p).unwrap();
        assert_eq!((s.x, s.v), (rest.x, rest.v));
    }

    #[test]
    fn explicit_scheme_moves_with_old_velocity() {
        let f = half_square();
        let p = MomentumParams::new(3.0, 1.5, 1.0).unwrap();
        let s0 = StepState::with_velocity(v1(1.0), v1(0.0), 0.1);
        let s = fxts_momentum_step_with(&f, &s0, &p, MomentumScheme::Explicit).unwrap();
        assert_eq!(s.x, v1(1.0));
        assert!((s.v.unwrap()[0] - 0.2).abs() < 1e-15);
    }

    #[test]
    fn lambda_derivation_and_config() {
        let p = MomentumParams::from_momentum(3.0, 1.5, 0.5, 0.001).unwrap();
        assert!((p.lambda - 500.0).abs() < 1e-9);
        let p: MomentumParams = serde_json::from_str(r#"{"p":3,"q":1.5,"momentum":0.5,"lr":0.001}"#).unwrap();
        assert!((p.lambda - 500.0).abs() < 1e-9);
        let p: MomentumParams = serde_json::from_str(r#"{"p":3,"q":1.5,"lambda":7}"#).unwrap();
        assert_eq!(p.lambda, 7.0);
        assert!(serde_json::from_str::<MomentumParams>(r#"{"p":3,"q":1.5}"#).is_err());
        assert!(serde_json::from_str::<MomentumParams>(r#"{"p":3,"q":1.5,"lambda":-1}"#).is_err());
        let back: MomentumParams = serde_json::from_str(&serde_json::to_string(&p).unwrap()).unwrap();
        assert_eq!(back, p);
    }

    #[test]
    fn missing_velocity_is_an_error() {
        let f = half_square();
        let p = MomentumParams::new(3.0, 1.5, 1.0).unwrap();
        assert!(fxts_momentum_step(&f, &StepState::new(v1(1.0), 0.1), &p).is_err());
    }
}
