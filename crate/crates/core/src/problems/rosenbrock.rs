use super::{BoxDomain, Metadata, Objective, Vector};

/// `f(x1, x2) = (1 - x1)^2 + 100 (x2 - x1^2)^2`.
#[derive(Debug, Clone)]
pub struct Rosenbrock {
    meta: Metadata,
}

/// Rosenbrock's function with its PL claim: modulus 0.1 on `[-1, 1]^2`.
pub fn rosenbrock() -> Rosenbrock {
    Rosenbrock {
        meta: Metadata {
            f_star: Some(0.0),
            x_star: Some(Vector::from_vec(vec![1.0, 1.0])),
            pl_modulus: Some(0.1),
            lip_grad: None,
            domain_box: Some(BoxDomain::around(&Vector::zeros(2), 1.0)),
        },
    }
}

impl Objective for Rosenbrock {
    fn dim(&self) -> usize {
        2
    }

    fn value(&self, x: &Vector) -> f64 {
        let (a, b) = (1.0 - x[0], x[1] - x[0] * x[0]);
        a * a + 100.0 * b * b
    }

    fn gradient(&self, x: &Vector) -> Vector {
        let b = x[1] - x[0] * x[0];
        Vector::from_vec(vec![
            -2.0 * (1.0 - x[0]) - 400.0 * x[0] * b,
            200.0 * b,
        ])
    }

    fn metadata(&self) -> &Metadata {
        &self.meta
    }
}
