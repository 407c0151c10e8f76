use serde::{Deserialize, Serialize};

use super::{pow_via_log, StepState, GRAD_FLOOR};
use crate::error::non_finite;
use crate::{Error, Objective, Result, Vector};

/// Gains and exponents of the fixed-time stable gradient flow
///
/// `dx/dt = -c1 g / |g|^((p1-2)/(p1-1)) - c2 g / |g|^((p2-2)/(p2-1))`, `g = grad f(x)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FxtsParams {
    pub c1: f64,
    pub c2: f64,
    pub p1: f64,
    pub p2: f64,
}

impl FxtsParams {
    pub fn new(c1: f64, c2: f64, p1: f64, p2: f64) -> Result<Self> {
        let params = Self { c1, c2, p1, p2 };
        params.validate()?;
        Ok(params)
    }

    pub fn validate(&self) -> Result<()> {
        let mut problems = Vec::new();
        if !(self.c1 > 0.0 && self.c1.is_finite()) {
            problems.push(format!("c1 must be positive, got {}", self.c1));
        }
        if !(self.c2 > 0.0 && self.c2.is_finite()) {
            problems.push(format!("c2 must be positive, got {}", self.c2));
        }
        if !(self.p1 > 2.0 && self.p1.is_finite()) {
            problems.push(format!("p1 must exceed 2, got {}", self.p1));
        }
        if !(self.p2 > 1.0 && self.p2 < 2.0) {
            problems.push(format!("p2 must lie in (1, 2), got {}", self.p2));
        }
        if problems.is_empty() {
            Ok(())
        } else {
            Err(Error::InvalidParams(problems.join("; ")))
        }
    }

    /// Exponents `1/(p1-1)` and `1/(p2-1)` of the field magnitude in `|grad f|`.
    pub fn magnitude_exponents(&self) -> (f64, f64) {
        (1.0 / (self.p1 - 1.0), 1.0 / (self.p2 - 1.0))
    }

    /// Scale both gains by `s`.
    pub fn scaled(&self, s: f64) -> Self {
        Self {
            c1: self.c1 * s,
            c2: self.c2 * s,
            ..*self
        }
    }
}

/// Evaluator for the fixed-time stable field with its exponents precomputed.
#[derive(Debug, Clone, PartialEq)]
pub struct FxtsField {
    params: FxtsParams,
    // magnitude exponents minus one: the field is -(c1 g^e1 + c2 g^e2) * grad / g
    e1: f64,
    e2: f64,
    grad_floor: f64,
    p2_term_cap: Option<f64>,
}

impl FxtsField {
    pub fn new(params: FxtsParams) -> Result<Self> {
        params.validate()?;
        let (m1, m2) = params.magnitude_exponents();
        Ok(Self {
            params,
            e1: m1 - 1.0,
            e2: m2 - 1.0,
            grad_floor: GRAD_FLOOR,
            p2_term_cap: None,
        })
    }

    pub fn with_grad_floor(mut self, floor: f64) -> Self {
        self.grad_floor = floor;
        self
    }

    /// Cap the magnitude of the `p2` term, which grows like `|grad f|^(1/(p2-1))`.
    pub fn with_p2_term_cap(mut self, cap: Option<f64>) -> Self {
        self.p2_term_cap = cap;
        self
    }

    pub fn params(&self) -> &FxtsParams {
        &self.params
    }

    pub fn grad_floor(&self) -> f64 {
        self.grad_floor
    }

    /// Field magnitude `c1 g^(1/(p1-1)) + c2 g^(1/(p2-1))` for gradient norm `g`
    /// (zero at or below the floor).
    pub fn magnitude(&self, grad_norm: f64) -> f64 {
        if grad_norm <= self.grad_floor {
            return 0.0;
        }
        grad_norm * self.ratio(grad_norm)
    }

    fn ratio(&self, g: f64) -> f64 {
        let first = self.params.c1 * pow_via_log(g, self.e1);
        let mut second = self.params.c2 * pow_via_log(g, self.e2);
        if let Some(cap) = self.p2_term_cap {
            // second * g is the p2-term magnitude
            second = second.min(cap / g);
        }
        first + second
    }

    /// Field value for a precomputed gradient.
    pub fn velocity_from_gradient(&self, grad: &Vector) -> Vector {
        let g = grad.norm();
        if g <= self.grad_floor {
            return Vector::zeros(grad.len());
        }
        grad * (-self.ratio(g))
    }

    pub fn velocity(&self, obj: &dyn Objective, x: &Vector) -> Result<Vector> {
        let grad = obj.gradient(x);
        if grad.iter().any(|v| !v.is_finite()) {
            return Err(non_finite(x));
        }
        Ok(self.velocity_from_gradient(&grad))
    }

    /// One forward-Euler step `x + eta * field(x)`.
    pub fn step(&self, obj: &dyn Objective, state: &StepState) -> Result<StepState> {
        if !(state.eta > 0.0) {
            return Err(Error::InvalidParams(format!("step size must be positive, got {}", state.eta)));
        }
        let vel = self.velocity(obj, &state.x)?;
        Ok(StepState {
            x: &state.x + vel * state.eta,
            v: state.v.clone(),
            k: state.k + 1,
            eta: state.eta,
        })
    }
}

/// Fixed-time stable field at `x` with the default gradient floor.
pub fn fxts_field(obj: &dyn Objective, x: &Vector, params: &FxtsParams) -> Result<Vector> {
    FxtsField::new(*params)?.velocity(obj, x)
}

/// Euler step `x_{k+1} = x_k + eta * field(x_k)`.
pub fn fxts_step(obj: &dyn Objective, state: &StepState, params: &FxtsParams) -> Result<StepState> {
    FxtsField::new(*params)?.step(obj, state)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::problems::{quadratic, QuadraticSpec};

    fn half_square() -> crate::problems::Quadratic {
        quadratic(&QuadraticSpec::identity(1), Vector::zeros(1)).unwrap()
    }

    fn v1(x: f64) -> Vector {
        Vector::from_vec(vec![x])
    }

    #[test]
    fn validation() {
        assert!(FxtsParams::new(1.0, 1.0, 3.0, 1.5).is_ok());
        for bad in [
            FxtsParams { c1: 0.0, c2: 1.0, p1: 3.0, p2: 1.5 },
            FxtsParams { c1: 1.0, c2: -1.0, p1: 3.0, p2: 1.5 },
            FxtsParams { c1: 1.0, c2: 1.0, p1: 2.0, p2: 1.5 },
            FxtsParams { c1: 1.0, c2: 1.0, p1: 3.0, p2: 2.0 },
            FxtsParams { c1: 1.0, c2: 1.0, p1: 3.0, p2: 1.0 },
        ] {
            assert!(matches!(bad.validate(), Err(Error::InvalidParams(_))), "{bad:?}");
        }
    }

    #[test]
    fn zero_gradient_gives_zero_field() {
        let p = FxtsParams::new(1.0, 1.0, 3.0, 1.5).unwrap();
        assert_eq!(fxts_field(&half_square(), &v1(0.0), &p).unwrap(), v1(0.0));
    }

    #[test]
    fn unit_gradient() {
        for (p1, p2) in [(3.0, 1.5), (20.0, 1.98), (2.5, 1.75)] {
            let p = FxtsParams::new(1.0, 1.0, p1, p2).unwrap();
            let v = fxts_field(&half_square(), &v1(1.0), &p).unwrap();
            assert!((v[0] + 2.0).abs() < 1e-15, "{v}");
        }
    }

    #[test]
    fn field_at_four() {
        let p = FxtsParams::new(1.0, 1.0, 3.0, 1.5).unwrap();
        let v = fxts_field(&half_square(), &v1(4.0), &p).unwrap();
        assert!((v[0] + 18.0).abs() < 1e-12, "{v}");
    }

    #[test]
    fn euler_steps() {
        let f = half_square();
        let p = FxtsParams::new(1.0, 1.0, 3.0, 1.5).unwrap();
        let s = fxts_step(&f, &StepState::new(v1(1.0), 0.1), &p).unwrap();
        assert!((s.x[0] - 0.8).abs() < 1e-15);
        assert_eq!(s.k, 1);
        let s = fxts_step(&f, &StepState::new(v1(4.0), 0.01), &p).unwrap();
        assert!((s.x[0] - 3.82).abs() < 1e-12);
        let s = fxts_step(&f, &StepState::new(v1(0.0), 0.01), &p).unwrap();
        assert_eq!(s.x, v1(0.0));
    }

    #[test]
    fn rejects_bad_eta_and_non_finite() {
        let f = half_square();
        let p = FxtsParams::new(1.0, 1.0, 3.0, 1.5).unwrap();
        assert!(fxts_step(&f, &StepState::new(v1(1.0), 0.0), &p).is_err());
        let err = fxts_field(&f, &v1(f64::NAN), &p).unwrap_err();
        assert!(matches!(err, Error::NonFinite { .. }));
    }

    #[test]
    fn p2_cap_limits_far_field() {
        let p = FxtsParams::new(1.0, 1.0, 3.0, 1.5).unwrap();
        let field = FxtsField::new(p).unwrap().with_p2_term_cap(Some(5.0));
        // p1 term 4^(1/2) = 2, p2 term min(16, 5)
        assert!((field.magnitude(4.0) - 7.0).abs() < 1e-12);
        assert!((field.magnitude(1.0) - 2.0).abs() < 1e-15);
    }
}
