use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::{Objective, Vector};
use crate::{Error, Result};

/// Central-difference step that balances truncation against rounding in f64.
pub const DEFAULT_FD_STEP: f64 = 1e-6;

/// Points with `f - f*` below this are skipped when sampling the PL ratio.
const PL_GAP_FLOOR: f64 = 1e-12;

/// Largest componentwise error `|g_i - d_i| / (1 + |d_i|)` between the analytic
/// gradient `g` and the central difference `d`.
pub fn check_gradient(obj: &dyn Objective, x: &Vector, step: f64) -> Result<f64> {
    if !(step > 0.0) {
        return Err(Error::Domain(format!("finite-difference step must be positive, got {step}")));
    }
    let analytic = obj.gradient(x);
    let mut probe = x.clone();
    let mut worst: f64 = 0.0;
    for i in 0..x.len() {
        let xi = x[i];
        probe[i] = xi + step;
        let up = obj.value(&probe);
        probe[i] = xi - step;
        let down = obj.value(&probe);
        probe[i] = xi;
        let numeric = (up - down) / (2.0 * step);
        let err = (analytic[i] - numeric).abs() / (1.0 + numeric.abs());
        worst = worst.max(err);
    }
    Ok(worst)
}

/// Infimum of `0.5 |grad f|^2 / (f - f*)` over uniform samples from the
/// objective's domain box. Deterministic for a fixed seed; returns `+inf` when
/// every sample lies within 1e-12 of the optimal value.
pub fn verify_pl_modulus(obj: &dyn Objective, sample_count: usize, seed: u64) -> Result<f64> {
    let meta = obj.metadata();
    let f_star = meta.f_star.ok_or(Error::MissingMetadata("f_star"))?;
    let domain = meta.domain_box.as_ref().ok_or(Error::MissingMetadata("domain_box"))?;
    if sample_count == 0 {
        return Err(Error::Domain("sample_count must be at least 1".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut inf = f64::INFINITY;
    for _ in 0..sample_count {
        let x = domain.sample(&mut rng);
        let gap = obj.value(&x) - f_star;
        if gap < PL_GAP_FLOOR {
            continue;
        }
        let ratio = 0.5 * obj.gradient(&x).norm_squared() / gap;
        inf = inf.min(ratio);
    }
    Ok(inf)
}

/// Outcome of sampling the PL inequality for a claimed modulus.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PlSampleCheck {
    pub samples: usize,
    /// Samples with `0.5 |grad f|^2 - mu (f - f*) < -tol`.
    pub violations: usize,
    /// Smallest observed `0.5 |grad f|^2 - mu (f - f*)`.
    pub worst_margin: f64,
}

/// Count violations of `0.5 |grad f|^2 >= mu (f - f*)` over uniform samples from the box.
pub fn pl_violations(obj: &dyn Objective, mu: f64, sample_count: usize, seed: u64, tol: f64) -> Result<PlSampleCheck> {
    let meta = obj.metadata();
    let f_star = meta.f_star.ok_or(Error::MissingMetadata("f_star"))?;
    let domain = meta.domain_box.as_ref().ok_or(Error::MissingMetadata("domain_box"))?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut check = PlSampleCheck {
        samples: sample_count,
        violations: 0,
        worst_margin: f64::INFINITY,
    };
    for _ in 0..sample_count {
        let x = domain.sample(&mut rng);
        let margin = 0.5 * obj.gradient(&x).norm_squared() - mu * (obj.value(&x) - f_star);
        check.worst_margin = check.worst_margin.min(margin);
        if margin < -tol {
            check.violations += 1;
        }
    }
    Ok(check)
}

/// Largest observed violation of quadratic growth
/// `f(x) - f* >= (mu / 2) |x - x*|^2` over samples from the domain box
/// (non-positive when the property holds everywhere sampled).
pub fn quadratic_growth_violation(obj: &dyn Objective, sample_count: usize, seed: u64) -> Result<f64> {
    let meta = obj.metadata();
    let f_star = meta.f_star.ok_or(Error::MissingMetadata("f_star"))?;
    let x_star = meta.x_star.as_ref().ok_or(Error::MissingMetadata("x_star"))?;
    let mu = meta.pl_modulus.ok_or(Error::MissingMetadata("pl_modulus"))?;
    let domain = meta.domain_box.as_ref().ok_or(Error::MissingMetadata("domain_box"))?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut worst = f64::NEG_INFINITY;
    for _ in 0..sample_count {
        let x = domain.sample(&mut rng);
        let lhs = obj.value(&x) - f_star;
        let rhs = 0.5 * mu * (&x - x_star).norm_squared();
        worst = worst.max(rhs - lhs);
    }
    Ok(worst)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::problems::{quadratic, rosenbrock, QuadraticSpec, Metadata};

    struct NoMeta;
    impl Objective for NoMeta {
        fn dim(&self) -> usize {
            1
        }
        fn value(&self, x: &Vector) -> f64 {
            x[0] * x[0]
        }
        fn gradient(&self, x: &Vector) -> Vector {
            x * 2.0
        }
        fn metadata(&self) -> &Metadata {
            static META: std::sync::OnceLock<Metadata> = std::sync::OnceLock::new();
            META.get_or_init(Metadata::default)
        }
    }

    #[test]
    fn quadratic_gradient_exact() {
        let q = quadratic(&QuadraticSpec::identity(2), Vector::zeros(2)).unwrap();
        let err = check_gradient(&q, &Vector::from_vec(vec![3.0, 4.0]), 1e-5).unwrap();
        assert!(err < 1e-8, "{err}");
    }

    #[test]
    fn rosenbrock_gradient_matches() {
        let err = check_gradient(&rosenbrock(), &Vector::from_vec(vec![0.3, 0.8]), 1e-6).unwrap();
        assert!(err < 1e-6, "{err}");
    }

    #[test]
    fn gradient_at_optimum() {
        let r = rosenbrock();
        let x = r.x_star().unwrap().clone();
        assert_eq!(r.gradient(&x).norm(), 0.0);
        assert!(check_gradient(&r, &x, 1e-6).unwrap() < 1e-6);
    }

    #[test]
    fn bad_step() {
        let r = rosenbrock();
        assert!(matches!(
            check_gradient(&r, &Vector::zeros(2), 0.0),
            Err(Error::Domain(_))
        ));
    }

    #[test]
    fn pl_requires_metadata() {
        assert!(matches!(
            verify_pl_modulus(&NoMeta, 10, 0),
            Err(Error::MissingMetadata("f_star"))
        ));
    }

    #[test]
    fn pl_identity_is_one() {
        let q = quadratic(&QuadraticSpec::identity(3), Vector::zeros(3)).unwrap();
        let mu = verify_pl_modulus(&q, 500, 9).unwrap();
        assert!((mu - 1.0).abs() <= 1e-9, "{mu}");
    }

    #[test]
    fn pl_sampling_is_deterministic() {
        let r = rosenbrock();
        assert_eq!(
            verify_pl_modulus(&r, 200, 5).unwrap(),
            verify_pl_modulus(&r, 200, 5).unwrap()
        );
    }
}
