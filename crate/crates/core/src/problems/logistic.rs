use std::path::Path;

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use super::{BoxDomain, Metadata, Objective, Vector};
use crate::{Error, Result};

/// Mean cross-entropy of a linear classifier plus `0.5 * reg * |w|^2`.
///
/// The optimum has no closed form. It is computed once at construction by a
/// damped Newton run driven to gradient norm 1e-12 and kept with the objective.
#[derive(Debug, Clone)]
pub struct LogisticRegression {
    features: DMatrix<f64>,
    labels: Vector,
    reg: f64,
    meta: Metadata,
}

fn softplus(z: f64) -> f64 {
    if z > 0.0 {
        z + (-z).exp().ln_1p()
    } else {
        z.exp().ln_1p()
    }
}

fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

pub fn logistic_regression(
    features: DMatrix<f64>,
    labels: Vec<f64>,
    reg_coeff: f64,
) -> Result<LogisticRegression> {
    if features.nrows() == 0 || labels.is_empty() {
        return Err(Error::InvalidProblem("empty dataset".into()));
    }
    if features.nrows() != labels.len() {
        return Err(Error::InvalidProblem(format!(
            "{} feature rows but {} labels",
            features.nrows(),
            labels.len()
        )));
    }
    if !(reg_coeff > 0.0) {
        return Err(Error::InvalidProblem(format!(
            "regularization coefficient must be positive, got {reg_coeff}"
        )));
    }
    if let Some(bad) = labels.iter().find(|&&y| y != 0.0 && y != 1.0) {
        return Err(Error::InvalidProblem(format!("label {bad} is not in {{0, 1}}")));
    }
    let m = features.nrows() as f64;
    let gram_max = (features.transpose() * &features)
        .symmetric_eigenvalues()
        .max();
    let mut obj = LogisticRegression {
        labels: Vector::from_vec(labels),
        reg: reg_coeff,
        meta: Metadata {
            pl_modulus: Some(reg_coeff),
            lip_grad: Some(gram_max / (4.0 * m) + reg_coeff),
            ..Metadata::default()
        },
        features,
    };
    let w = obj.reference_optimum();
    obj.meta.f_star = Some(obj.value(&w));
    obj.meta.domain_box = Some(BoxDomain::around(&w, 1.0));
    obj.meta.x_star = Some(w);
    Ok(obj)
}

impl LogisticRegression {
    pub fn reg_coeff(&self) -> f64 {
        self.reg
    }

    fn hessian(&self, w: &Vector) -> DMatrix<f64> {
        let m = self.features.nrows() as f64;
        let z = &self.features * w;
        let d = z.map(|z| {
            let s = sigmoid(z);
            s * (1.0 - s) / m
        });
        let n = self.features.ncols();
        let scaled = DMatrix::from_fn(self.features.nrows(), n, |i, j| self.features[(i, j)] * d[i]);
        self.features.transpose() * scaled + DMatrix::identity(n, n) * self.reg
    }

    fn reference_optimum(&self) -> Vector {
        let mut w = Vector::zeros(self.features.ncols());
        for _ in 0..100 {
            let g = self.gradient(&w);
            if g.norm() <= 1e-12 {
                break;
            }
            let Some(chol) = self.hessian(&w).cholesky() else {
                break;
            };
            let dir = -chol.solve(&g);
            let f0 = self.value(&w);
            let slope = g.dot(&dir);
            let mut t = 1.0;
            while t > 1e-12 {
                let trial = &w + &dir * t;
                if self.value(&trial) <= f0 + 1e-4 * t * slope {
                    break;
                }
                t *= 0.5;
            }
            let next = &w + &dir * t;
            if next == w {
                break;
            }
            w = next;
        }
        w
    }
}

impl Objective for LogisticRegression {
    fn dim(&self) -> usize {
        self.features.ncols()
    }

    fn value(&self, w: &Vector) -> f64 {
        let m = self.features.nrows() as f64;
        let z = &self.features * w;
        let loss: f64 = z
            .iter()
            .zip(self.labels.iter())
            .map(|(&z, &y)| softplus(z) - y * z)
            .sum();
        loss / m + 0.5 * self.reg * w.norm_squared()
    }

    fn gradient(&self, w: &Vector) -> Vector {
        let m = self.features.nrows() as f64;
        let z = &self.features * w;
        let r = Vector::from_iterator(
            z.len(),
            z.iter().zip(self.labels.iter()).map(|(&z, &y)| sigmoid(z) - y),
        );
        self.features.tr_mul(&r) / m + w * self.reg
    }

    fn metadata(&self) -> &Metadata {
        &self.meta
    }
}

/// Seeded two-class dataset from a random linear separator with label noise.
pub fn synthetic_dataset(samples: usize, features: usize, seed: u64) -> (DMatrix<f64>, Vec<f64>) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let truth: Vec<f64> = (0..features).map(|_| StandardNormal.sample(&mut rng)).collect();
    let x = DMatrix::from_fn(samples, features, |_, _| StandardNormal.sample(&mut rng));
    let labels = (0..samples)
        .map(|i| {
            let z: f64 = (0..features).map(|j| x[(i, j)] * truth[j]).sum();
            if rng.gen::<f64>() < sigmoid(2.0 * z) {
                1.0
            } else {
                0.0
            }
        })
        .collect();
    (x, labels)
}

/// Load `feature_0,...,feature_{n-1},label` rows.
pub fn load_dataset_csv(path: &Path) -> Result<(DMatrix<f64>, Vec<f64>)> {
    let mut reader = csv::Reader::from_path(path)?;
    let headers = reader.headers()?.clone();
    let n = headers.len();
    if n < 2 || headers.get(n - 1) != Some("label") {
        return Err(Error::InvalidProblem(format!(
            "{}: expected header feature_0,...,label",
            path.display()
        )));
    }
    for (j, h) in headers.iter().take(n - 1).enumerate() {
        if h != format!("feature_{j}") {
            return Err(Error::InvalidProblem(format!(
                "{}: column {j} is `{h}`, expected `feature_{j}`",
                path.display()
            )));
        }
    }
    let mut values = Vec::new();
    let mut labels = Vec::new();
    for (row, record) in reader.records().enumerate() {
        let record = record?;
        let parsed: std::result::Result<Vec<f64>, _> =
            record.iter().map(|s| s.trim().parse::<f64>()).collect();
        let parsed = parsed.map_err(|e| {
            Error::InvalidProblem(format!("{}: row {}: {e}", path.display(), row + 1))
        })?;
        labels.push(parsed[n - 1]);
        values.extend_from_slice(&parsed[..n - 1]);
    }
    let m = labels.len();
    Ok((DMatrix::from_row_slice(m, n - 1, &values), labels))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn balanced_labels_at_zero() {
        let x = DMatrix::from_row_slice(2, 1, &[1.0, -2.0]);
        let f = logistic_regression(x, vec![0.0, 1.0], 0.5).unwrap();
        assert!((f.value(&Vector::zeros(1)) - std::f64::consts::LN_2).abs() < 1e-15);
    }

    #[test]
    fn single_sample_gradient() {
        let x = DMatrix::from_row_slice(1, 1, &[1.0]);
        let f = logistic_regression(x, vec![1.0], 0.01).unwrap();
        assert_eq!(f.gradient(&Vector::zeros(1))[0], -0.5);
    }

    #[test]
    fn penalty_gradient_contribution() {
        let (x, y) = synthetic_dataset(10, 2, 1);
        let a = logistic_regression(x.clone(), y.clone(), 0.01).unwrap();
        let b = logistic_regression(x, y, 0.21).unwrap();
        let w = Vector::from_vec(vec![0.3, -1.2]);
        let diff = b.gradient(&w) - a.gradient(&w);
        assert!((diff - &w * 0.2).norm() < 1e-14);
    }

    #[test]
    fn reference_optimum_is_stationary() {
        let (x, y) = synthetic_dataset(50, 4, 3);
        let f = logistic_regression(x, y, 0.01).unwrap();
        let w = f.x_star().unwrap();
        assert!(f.gradient(w).norm() <= 1e-12);
    }

    #[test]
    fn invalid_inputs() {
        let empty = DMatrix::<f64>::zeros(0, 2);
        assert!(matches!(
            logistic_regression(empty, vec![], 0.1),
            Err(Error::InvalidProblem(_))
        ));
        let x = DMatrix::from_row_slice(1, 1, &[1.0]);
        assert!(logistic_regression(x.clone(), vec![2.0], 0.1).is_err());
        assert!(logistic_regression(x, vec![1.0], 0.0).is_err());
    }

    #[test]
    fn csv_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("data.csv");
        std::fs::write(&path, "feature_0,feature_1,label\n1.0,2.0,1\n-1.5,0.5,0\n").unwrap();
        let (x, y) = load_dataset_csv(&path).unwrap();
        assert_eq!(x.nrows(), 2);
        assert_eq!(x[(1, 0)], -1.5);
        assert_eq!(y, vec![1.0, 0.0]);

        std::fs::write(&path, "a,b,label\n1,2,1\n").unwrap();
        assert!(load_dataset_csv(&path).is_err());
    }
}
