use nalgebra::DMatrix;

use super::{BoxDomain, Metadata, Objective, Vector};
use crate::{Error, Result};

/// `f(x) = 0.5 |A x - b|^2`.
///
/// When `A` is rank-deficient the objective is PL but not strongly convex and
/// its minimizers form an affine set. The minimum-norm solution is always
/// available through [`PlLeastSquares::min_norm_solution`], but it is only
/// recorded as `x_star` when `A` has full column rank.
#[derive(Debug, Clone)]
pub struct PlLeastSquares {
    a: DMatrix<f64>,
    b: Vector,
    min_norm: Vector,
    rank: usize,
    meta: Metadata,
}

pub fn pl_least_squares(a: DMatrix<f64>, b: Vector) -> Result<PlLeastSquares> {
    if a.nrows() != b.len() {
        return Err(Error::InvalidProblem(format!(
            "A is {}x{} but b has length {}",
            a.nrows(),
            a.ncols(),
            b.len()
        )));
    }
    if a.ncols() == 0 || a.nrows() == 0 {
        return Err(Error::InvalidProblem("A must be non-empty".into()));
    }
    let svd = a.clone().svd(true, true);
    let sigma_max = svd.singular_values.max();
    let tol = a.nrows().max(a.ncols()) as f64 * sigma_max * f64::EPSILON;
    let nonzero: Vec<f64> = svd
        .singular_values
        .iter()
        .copied()
        .filter(|&s| s > tol)
        .collect();
    let Some(sigma_min) = nonzero.iter().copied().reduce(f64::min) else {
        return Err(Error::InvalidProblem("A has no nonzero singular value".into()));
    };
    let min_norm = svd
        .solve(&b, tol)
        .map_err(|e| Error::InvalidProblem(format!("pseudo-inverse failed: {e}")))?;
    let residual = &a * &min_norm - &b;
    let f_star = 0.5 * residual.norm_squared();
    let rank = nonzero.len();
    let x_star = (rank == a.ncols()).then(|| min_norm.clone());
    Ok(PlLeastSquares {
        meta: Metadata {
            f_star: Some(f_star),
            x_star,
            pl_modulus: Some(sigma_min * sigma_min),
            lip_grad: Some(sigma_max * sigma_max),
            domain_box: Some(BoxDomain::around(&min_norm, 2.0)),
        },
        a,
        b,
        min_norm,
        rank,
    })
}

impl PlLeastSquares {
    pub fn min_norm_solution(&self) -> &Vector {
        &self.min_norm
    }

    pub fn rank(&self) -> usize {
        self.rank
    }
}

impl Objective for PlLeastSquares {
    fn dim(&self) -> usize {
        self.a.ncols()
    }

    fn value(&self, x: &Vector) -> f64 {
        0.5 * (&self.a * x - &self.b).norm_squared()
    }

    fn gradient(&self, x: &Vector) -> Vector {
        self.a.tr_mul(&(&self.a * x - &self.b))
    }

    fn metadata(&self) -> &Metadata {
        &self.meta
    }
}
