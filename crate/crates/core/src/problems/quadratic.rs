use nalgebra::DMatrix;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use super::{BoxDomain, Metadata, Objective, Vector};
use crate::{Error, Result};

/// Spectrum of a symmetric positive definite matrix plus an optional random rotation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QuadraticSpec {
    pub eigenvalues: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rotation_seed: Option<u64>,
}

impl QuadraticSpec {
    pub fn identity(dim: usize) -> Self {
        Self::diagonal(vec![1.0; dim])
    }

    pub fn diagonal(eigenvalues: Vec<f64>) -> Self {
        Self {
            eigenvalues,
            rotation_seed: None,
        }
    }

    fn matrix(&self) -> DMatrix<f64> {
        let n = self.eigenvalues.len();
        let lambda = DMatrix::from_diagonal(&Vector::from_column_slice(&self.eigenvalues));
        match self.rotation_seed {
            None => lambda,
            Some(seed) => {
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                let g: DMatrix<f64> = DMatrix::from_fn(n, n, |_, _| StandardNormal.sample(&mut rng));
                let q = g.qr().q();
                let a: DMatrix<f64> = &q * lambda * q.transpose();
                // symmetrize away rounding noise
                (&a + a.transpose()) * 0.5
            }
        }
    }
}

/// `f(x) = 0.5 (x - c)^T A (x - c)`.
#[derive(Debug, Clone)]
pub struct Quadratic {
    matrix: DMatrix<f64>,
    center: Vector,
    meta: Metadata,
}

pub fn quadratic(spec: &QuadraticSpec, center: Vector) -> Result<Quadratic> {
    if spec.eigenvalues.is_empty() {
        return Err(Error::InvalidProblem("quadratic needs at least one eigenvalue".into()));
    }
    if let Some(bad) = spec.eigenvalues.iter().find(|&&l| !(l > 0.0 && l.is_finite())) {
        return Err(Error::InvalidProblem(format!(
            "eigenvalue {bad} is not positive; the matrix must be positive definite"
        )));
    }
    if center.len() != spec.eigenvalues.len() {
        return Err(Error::InvalidProblem(format!(
            "center has length {} but the matrix is {}x{}",
            center.len(),
            spec.eigenvalues.len(),
            spec.eigenvalues.len()
        )));
    }
    let lo = spec.eigenvalues.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = spec.eigenvalues.iter().copied().fold(0.0, f64::max);
    Ok(Quadratic {
        matrix: spec.matrix(),
        meta: Metadata {
            f_star: Some(0.0),
            x_star: Some(center.clone()),
            pl_modulus: Some(lo),
            lip_grad: Some(hi),
            domain_box: Some(BoxDomain::around(&center, 2.0)),
        },
        center,
    })
}

impl Quadratic {
    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.matrix
    }
}

impl Objective for Quadratic {
    fn dim(&self) -> usize {
        self.center.len()
    }

    fn value(&self, x: &Vector) -> f64 {
        let d = x - &self.center;
        0.5 * d.dot(&(&self.matrix * &d))
    }

    fn gradient(&self, x: &Vector) -> Vector {
        &self.matrix * (x - &self.center)
    }

    fn metadata(&self) -> &Metadata {
        &self.meta
    }
}
