use fxts::certificates::{consistency_pair, lyapunov_constants, settling_bound};
use fxts::continuum::{accumulate_regret, TimeBase, Trajectory};
use fxts::flows::{g_scaling, FxtsField, FxtsParams, GRAD_FLOOR};
use fxts::harness::{ProblemSpec, RunConfig, X0Spec};
use fxts::optim::{OptimizerKind, OptimizerSpec};
use fxts::problems::{quadratic, rosenbrock, QuadraticSpec};
use fxts::{Objective, Vector};
use proptest::prelude::*;

fn params() -> impl Strategy<Value = FxtsParams> {
    (0.1f64..5.0, 0.1f64..5.0, 2.05f64..30.0, 1.05f64..1.95).prop_map(|(c1, c2, p1, p2)| FxtsParams { c1, c2, p1, p2 })
}

fn point() -> impl Strategy<Value = Vector> {
    prop::collection::vec(-50.0f64..50.0, 2).prop_map(Vector::from_vec)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn field_magnitude_is_sum_of_powers(p in params(), x in point()) {
        let obj = quadratic(&QuadraticSpec::diagonal(vec![1.0, 3.0]), Vector::zeros(2)).unwrap();
        let g = obj.gradient(&x).norm();
        prop_assume!(g > GRAD_FLOOR);
        let field = FxtsField::new(p).unwrap();
        let v = field.velocity(&obj, &x).unwrap();
        let (a, b) = p.magnitude_exponents();
        let expected = p.c1 * g.powf(a) + p.c2 * g.powf(b);
        prop_assert!((v.norm() - expected).abs() <= 1e-10 * expected.max(1.0));
    }

    #[test]
    fn field_is_descent_direction(p in params(), x in prop::collection::vec(-2.0f64..2.0, 2)) {
        let obj = rosenbrock();
        let x = Vector::from_vec(x);
        let grad = obj.gradient(&x);
        prop_assume!(grad.norm() > 1e-6);
        let v = FxtsField::new(p).unwrap().velocity(&obj, &x).unwrap();
        prop_assert!(grad.dot(&v) < 0.0);
    }

    #[test]
    fn g_at_one_is_two(pp in 2.01f64..40.0, q in 1.01f64..1.99) {
        prop_assert!((g_scaling(1.0, pp, q).unwrap() - 2.0).abs() < 1e-14);
    }

    #[test]
    fn consistency_pair_round_trip(p2 in 1.501f64..1.999) {
        let (p1, xi) = consistency_pair(p2).unwrap();
        let rhs = 1.0 / (2.0 - p2);
        prop_assert!((2.0 + 1.0 / (p1 - 2.0) - rhs).abs() <= 1e-9 * rhs);
        prop_assert!((2.0 + 2.0 / (p1 - 2.0) - xi).abs() <= 1e-9 * xi);
    }

    #[test]
    fn regret_never_decreases(gaps in prop::collection::vec(-1.0f64..10.0, 2..60), dt in 1e-4f64..0.5) {
        let mut tr = Trajectory::new(TimeBase::Continuous, false);
        for (i, g) in gaps.iter().enumerate() {
            tr.push(i as f64 * dt, Vector::zeros(1), *g, 0.0, None);
        }
        prop_assert!(tr.regret.windows(2).all(|w| w[1] >= w[0]));
        prop_assert!((tr.total_regret() - accumulate_regret(&tr)).abs() <= 1e-9 * (1.0 + tr.total_regret()));
    }

    #[test]
    fn bound_scales_inversely_with_gains(p in params(), s in 0.1f64..10.0, mu in 0.05f64..5.0) {
        let base = settling_bound(&lyapunov_constants(&p, mu).unwrap());
        let scaled = settling_bound(&lyapunov_constants(&p.scaled(s), mu).unwrap());
        prop_assert!((scaled * s - base).abs() <= 1e-9 * base);
    }

    #[test]
    fn run_config_round_trips(eta in 1e-5f64..1.0, iters in 1u64..1_000_000, seed in any::<u64>(), c in 0.1f64..5.0) {
        let mut cfg = RunConfig::new(
            ProblemSpec::Rosenbrock,
            OptimizerSpec::fxts(FxtsParams { c1: c, c2: c, p1: 20.0, p2: 1.98 }),
            X0Spec::Random { magnitude: 1.0, seed: Some(seed) },
            eta,
        );
        cfg.max_iters = iters;
        cfg.optimizers.push(OptimizerSpec::new(OptimizerKind::Nag { momentum: 0.5 }).labeled("nag"));
        let back = RunConfig::from_json(&cfg.to_json()).unwrap();
        prop_assert_eq!(back, cfg);
    }
}
