//! Acceptance criteria, one PASS/FAIL line each. Exits nonzero when any criterion fails.
//!
//! Tolerances are pinned here rather than taken from `VerifyOptions::default()`
//! so that changing a default cannot silently relax a criterion.

use std::process::ExitCode;

use fxts::harness::{verify, CheckResult, Suite, VerifyOptions};

fn pinned() -> VerifyOptions {
    VerifyOptions {
        seed: 0,
        fd_points: 100,
        fd_tol: 1e-6,
        pl_samples: 10_000,
        pl_tol: 1e-9,
        step: 1e-3,
        settle_threshold: 1e-9,
        magnitudes: vec![1.0, 1e2, 1e4, 1e6],
        stated_bound: 5.0,
        max_spread: 2.0,
        gf_min_growth: 10.0,
        envelope_runs: 20,
        envelope_radius: (2.0, 1e4),
        envelope_slack: 1e-6,
        regret_slack: 1e-6,
        robustness_seeds: 10,
        robustness_p2: 1.4,
        robustness_fraction: 0.5,
        robustness_threshold: 1e-6,
        robustness_radius: (0.5, 50.0),
        robustness_horizon: 20.0,
        disc_eta: 0.01,
        disc_eps: 1e-3,
        disc_grid: vec![0.2, 0.1, 0.05, 0.02, 0.01],
        disc_runs: 50,
        rosenbrock_max_iters: 100_000,
        sweep_draws: 10,
        sweep_max_spread: 3.0,
    }
}

struct Criterion {
    number: u32,
    title: &'static str,
    suite: Suite,
    /// Restrict to these check names; empty means every check of the suite.
    only: &'static [&'static str],
}

const CRITERIA: [Criterion; 10] = [
    Criterion { number: 1, title: "gradient correctness", suite: Suite::Gradients, only: &[] },
    Criterion { number: 2, title: "PL modulus 0.1 on Rosenbrock over [-1,1]^2", suite: Suite::Pl, only: &["rosenbrock"] },
    Criterion { number: 3, title: "fixed-time settling on the identity quadratic", suite: Suite::Settling, only: &[] },
    Criterion { number: 4, title: "Lyapunov value envelopes", suite: Suite::Envelopes, only: &[] },
    Criterion { number: 5, title: "regret bounded by l1 + l2", suite: Suite::Regret, only: &[] },
    Criterion { number: 6, title: "robustness to vanishing radial noise", suite: Suite::Robustness, only: &[] },
    Criterion { number: 7, title: "consistent discretization", suite: Suite::Discretization, only: &[] },
    Criterion { number: 8, title: "Rosenbrock ordering against Adam and NAG", suite: Suite::Rosenbrock, only: &[] },
    Criterion { number: 9, title: "iterations independent of initialization", suite: Suite::Sweep, only: &[] },
    Criterion { number: 10, title: "byte-identical repeated runs", suite: Suite::Determinism, only: &[] },
];

fn evaluate(c: &Criterion, opts: &VerifyOptions) -> Result<Vec<CheckResult>, String> {
    let report = verify(c.suite, opts).map_err(|e| e.to_string())?;
    Ok(report
        .checks
        .into_iter()
        .filter(|r| c.only.is_empty() || c.only.contains(&r.name.as_str()))
        .collect())
}

fn main() -> ExitCode {
    let opts = pinned();
    let mut failed = 0;
    for c in &CRITERIA {
        let started = std::time::Instant::now();
        let outcome = evaluate(c, &opts);
        let secs = started.elapsed().as_secs_f64();
        let pass = matches!(&outcome, Ok(checks) if !checks.is_empty() && checks.iter().all(|r| r.passed));
        if !pass {
            failed += 1;
        }
        println!(
            "{} criterion {:>2}: {} ({secs:.1}s)",
            if pass { "PASS" } else { "FAIL" },
            c.number,
            c.title
        );
        match outcome {
            Ok(checks) => {
                for r in checks {
                    println!(
                        "       {} {}/{} measured={} bound={} {}",
                        if r.passed { "ok  " } else { "FAIL" },
                        r.suite,
                        r.name,
                        r.measured.map_or("-".into(), |v| format!("{v:.6e}")),
                        r.bound.map_or("-".into(), |v| format!("{v:.6e}")),
                        r.detail
                    );
                }
            }
            Err(e) => println!("       error: {e}"),
        }
    }
    println!("acceptance: {} of {} criteria passed", CRITERIA.len() - failed, CRITERIA.len());
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
