use std::sync::Arc;

use crate::error::non_finite;
use crate::flows::{fxts_momentum_field, FxtsField, FxtsParams, MomentumParams, GRAD_FLOOR};
use crate::{Objective, Result, Vector};

/// An autonomous ODE `dy/dt = rhs(y)` whose state contains a point of an objective.
pub trait Flow: Send + Sync {
    fn objective(&self) -> &dyn Objective;

    fn state_dim(&self) -> usize;

    fn initial_state(&self, x0: &Vector) -> Vector;

    fn rhs(&self, y: &Vector) -> Result<Vector>;

    /// The point `x` inside the state.
    fn position(&self, y: &Vector) -> Vector;

    /// True once the state sits on the gradient floor, where the field vanishes.
    fn is_at_rest(&self, y: &Vector) -> bool;
}

fn finite_gradient(obj: &dyn Objective, x: &Vector) -> Result<Vector> {
    let g = obj.gradient(x);
    if g.iter().any(|c| !c.is_finite()) {
        return Err(non_finite(x));
    }
    Ok(g)
}

/// Plain gradient flow `dx/dt = -grad f(x)`.
#[derive(Clone)]
pub struct GradientFlow {
    obj: Arc<dyn Objective>,
}

impl GradientFlow {
    pub fn new(obj: Arc<dyn Objective>) -> Self {
        Self { obj }
    }
}

impl Flow for GradientFlow {
    fn objective(&self) -> &dyn Objective {
        self.obj.as_ref()
    }

    fn state_dim(&self) -> usize {
        self.obj.dim()
    }

    fn initial_state(&self, x0: &Vector) -> Vector {
        x0.clone()
    }

    fn rhs(&self, y: &Vector) -> Result<Vector> {
        Ok(-finite_gradient(self.obj.as_ref(), y)?)
    }

    fn position(&self, y: &Vector) -> Vector {
        y.clone()
    }

    fn is_at_rest(&self, y: &Vector) -> bool {
        self.obj.gradient(y).norm() <= GRAD_FLOOR
    }
}

/// Fixed-time stable gradient flow.
#[derive(Clone)]
pub struct FxtsFlow {
    obj: Arc<dyn Objective>,
    field: FxtsField,
}

impl FxtsFlow {
    pub fn new(obj: Arc<dyn Objective>, params: FxtsParams) -> Result<Self> {
        Ok(Self {
            obj,
            field: FxtsField::new(params)?,
        })
    }

    pub fn from_field(obj: Arc<dyn Objective>, field: FxtsField) -> Self {
        Self { obj, field }
    }

    pub fn field(&self) -> &FxtsField {
        &self.field
    }
}

impl Flow for FxtsFlow {
    fn objective(&self) -> &dyn Objective {
        self.obj.as_ref()
    }

    fn state_dim(&self) -> usize {
        self.obj.dim()
    }

    fn initial_state(&self, x0: &Vector) -> Vector {
        x0.clone()
    }

    fn rhs(&self, y: &Vector) -> Result<Vector> {
        self.field.velocity(self.obj.as_ref(), y)
    }

    fn position(&self, y: &Vector) -> Vector {
        y.clone()
    }

    fn is_at_rest(&self, y: &Vector) -> bool {
        self.obj.gradient(y).norm() <= self.field.grad_floor()
    }
}

/// Fixed-time stable momentum flow on the stacked state `(x, v)`.
#[derive(Clone)]
pub struct MomentumFlow {
    obj: Arc<dyn Objective>,
    params: MomentumParams,
    v0: Option<Vector>,
}

impl MomentumFlow {
    pub fn new(obj: Arc<dyn Objective>, params: MomentumParams) -> Result<Self> {
        params.validate()?;
        Ok(Self { obj, params, v0: None })
    }

    /// Start from velocity `v0` instead of zero.
    pub fn with_initial_velocity(mut self, v0: Vector) -> Self {
        self.v0 = Some(v0);
        self
    }

    pub fn velocity(&self, y: &Vector) -> Vector {
        let n = self.obj.dim();
        y.rows(n, n).into_owned()
    }
}

impl Flow for MomentumFlow {
    fn objective(&self) -> &dyn Objective {
        self.obj.as_ref()
    }

    fn state_dim(&self) -> usize {
        2 * self.obj.dim()
    }

    fn initial_state(&self, x0: &Vector) -> Vector {
        let n = self.obj.dim();
        let mut y = Vector::zeros(2 * n);
        y.rows_mut(0, n).copy_from(x0);
        if let Some(v0) = &self.v0 {
            y.rows_mut(n, n).copy_from(v0);
        }
        y
    }

    fn rhs(&self, y: &Vector) -> Result<Vector> {
        let n = self.obj.dim();
        let (xd, vd) = fxts_momentum_field(self.obj.as_ref(), &self.position(y), &self.velocity(y), &self.params)?;
        let mut out = Vector::zeros(2 * n);
        out.rows_mut(0, n).copy_from(&xd);
        out.rows_mut(n, n).copy_from(&vd);
        Ok(out)
    }

    fn position(&self, y: &Vector) -> Vector {
        y.rows(0, self.obj.dim()).into_owned()
    }

    fn is_at_rest(&self, y: &Vector) -> bool {
        self.obj.gradient(&self.position(y)).norm() <= GRAD_FLOOR && self.velocity(y).norm() <= GRAD_FLOOR
    }
}
