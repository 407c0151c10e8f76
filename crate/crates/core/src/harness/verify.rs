use std::fmt::Write as _;
use std::str::FromStr;
use std::sync::Arc;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal, Uniform};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::config::{ProblemSpec, RunConfig, X0Spec};
use super::runner::{compare_runs, execute, run};
use crate::certificates::{
    check_envelope_run, consistency_pair, discretization_cert, envelope_starts, find_eta_star_with,
    lyapunov_constants, regret_bound, robust_constants, settling_bound, value_envelope, EtaSearch,
    RobustnessConditions,
};
use crate::continuum::{
    accumulate_regret, detect_settling, integrate_flow, perturbed_field, FxtsFlow, GradientFlow, IntegratorConfig,
    NoiseSpec, StopBelow, Trajectory,
};
use crate::flows::FxtsParams;
use crate::optim::{OptimizerKind, OptimizerSpec};
use crate::problems::{bundled, check_gradient, pl_violations, quadratic, QuadraticSpec, BUNDLED_NAMES, DEFAULT_FD_STEP};
use crate::{Error, Objective, Result, Vector};

/// One invariant with its measured value and the bound it was held to.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckResult {
    pub suite: String,
    pub name: String,
    pub passed: bool,
    pub measured: Option<f64>,
    pub bound: Option<f64>,
    pub detail: String,
}

impl CheckResult {
    fn new(suite: Suite, name: &str, passed: bool, measured: Option<f64>, bound: Option<f64>, detail: String) -> Self {
        Self {
            suite: suite.name().to_string(),
            name: name.to_string(),
            passed,
            measured,
            bound,
            detail,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VerifyReport {
    pub suite: String,
    pub checks: Vec<CheckResult>,
}

fn fmt_opt(v: Option<f64>) -> String {
    v.map_or("-".to_string(), |v| format!("{v:.6e}"))
}

impl VerifyReport {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    pub fn failures(&self) -> impl Iterator<Item = &CheckResult> {
        self.checks.iter().filter(|c| !c.passed)
    }

    /// Aligned plain-text table, one line per check.
    pub fn to_text(&self) -> String {
        let width = self.checks.iter().map(|c| c.suite.len() + c.name.len() + 1).max().unwrap_or(0);
        let mut out = String::new();
        for c in &self.checks {
            let id = format!("{}/{}", c.suite, c.name);
            let _ = writeln!(
                out,
                "{}  {id:width$}  measured={}  bound={}  {}",
                if c.passed { "PASS" } else { "FAIL" },
                fmt_opt(c.measured),
                fmt_opt(c.bound),
                c.detail,
            );
        }
        let failed = self.failures().count();
        let _ = writeln!(out, "{} checks, {failed} failed", self.checks.len());
        out
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Suite {
    Gradients,
    Pl,
    Settling,
    Envelopes,
    Regret,
    Robustness,
    Discretization,
    Rosenbrock,
    Sweep,
    Determinism,
    All,
}

impl Suite {
    pub const EACH: [Suite; 10] = [
        Suite::Gradients,
        Suite::Pl,
        Suite::Settling,
        Suite::Envelopes,
        Suite::Regret,
        Suite::Robustness,
        Suite::Discretization,
        Suite::Rosenbrock,
        Suite::Sweep,
        Suite::Determinism,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Suite::Gradients => "gradients",
            Suite::Pl => "pl",
            Suite::Settling => "settling",
            Suite::Envelopes => "envelopes",
            Suite::Regret => "regret",
            Suite::Robustness => "robustness",
            Suite::Discretization => "discretization",
            Suite::Rosenbrock => "rosenbrock",
            Suite::Sweep => "sweep",
            Suite::Determinism => "determinism",
            Suite::All => "all",
        }
    }
}

impl FromStr for Suite {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Suite::EACH
            .into_iter()
            .chain([Suite::All])
            .find(|suite| suite.name() == s)
            .ok_or_else(|| {
                let names: Vec<_> = Suite::EACH.iter().map(|s| s.name()).collect();
                Error::Config(vec![format!("unknown suite `{s}` (expected one of {names:?} or all)")])
            })
    }
}

fn default_seed() -> u64 {
    0
}

/// Tunables of the verification suites; every field may be overridden from JSON.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct VerifyOptions {
    #[serde(default = "default_seed")]
    pub seed: u64,
    pub fd_points: usize,
    pub fd_tol: f64,
    pub pl_samples: usize,
    pub pl_tol: f64,
    /// RK4 grid step.
    pub step: f64,
    pub settle_threshold: f64,
    pub magnitudes: Vec<f64>,
    /// Settling deadline stated for the fixed-time quadratic runs.
    pub stated_bound: f64,
    pub max_spread: f64,
    pub gf_min_growth: f64,
    pub envelope_runs: usize,
    pub envelope_radius: (f64, f64),
    pub envelope_slack: f64,
    pub regret_slack: f64,
    pub robustness_seeds: usize,
    pub robustness_p2: f64,
    /// Noise level as a fraction of `4 mu^2 min(c1, c2)`.
    pub robustness_fraction: f64,
    pub robustness_threshold: f64,
    pub robustness_radius: (f64, f64),
    pub robustness_horizon: f64,
    pub disc_eta: f64,
    pub disc_eps: f64,
    pub disc_grid: Vec<f64>,
    pub disc_runs: usize,
    pub rosenbrock_max_iters: u64,
    pub sweep_draws: usize,
    pub sweep_max_spread: f64,
}

impl Default for VerifyOptions {
    fn default() -> Self {
        Self {
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
}

/// Run one suite (or all of them) and collect the checks.
pub fn verify(suite: Suite, opts: &VerifyOptions) -> Result<VerifyReport> {
    let checks = match suite {
        Suite::All => {
            let mut all = Vec::new();
            for s in Suite::EACH {
                all.extend(verify(s, opts)?.checks);
            }
            all
        }
        Suite::Gradients => gradients(opts)?,
        Suite::Pl => pl(opts)?,
        Suite::Settling => settling(opts)?,
        Suite::Envelopes => envelopes(opts)?,
        Suite::Regret => regret(opts)?,
        Suite::Robustness => robustness(opts)?,
        Suite::Discretization => discretization(opts)?,
        Suite::Rosenbrock => rosenbrock_order(opts)?,
        Suite::Sweep => sweep_spread(opts)?,
        Suite::Determinism => determinism(opts)?,
    };
    Ok(VerifyReport {
        suite: suite.name().to_string(),
        checks,
    })
}

fn gradients(opts: &VerifyOptions) -> Result<Vec<CheckResult>> {
    BUNDLED_NAMES
        .iter()
        .map(|name| {
            let inst = bundled(name)?;
            let obj = inst.objective.as_ref();
            let domain = obj.metadata().domain_box.clone().ok_or(Error::MissingMetadata("domain_box"))?;
            let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
            let mut worst: f64 = 0.0;
            for _ in 0..opts.fd_points {
                worst = worst.max(check_gradient(obj, &domain.sample(&mut rng), DEFAULT_FD_STEP)?);
            }
            Ok(CheckResult::new(
                Suite::Gradients,
                name,
                worst < opts.fd_tol,
                Some(worst),
                Some(opts.fd_tol),
                format!("{} points, central differences", opts.fd_points),
            ))
        })
        .collect()
}

fn pl(opts: &VerifyOptions) -> Result<Vec<CheckResult>> {
    BUNDLED_NAMES
        .iter()
        .map(|name| {
            let inst = bundled(name)?;
            let obj = inst.objective.as_ref();
            let mu = obj.pl_modulus().ok_or(Error::MissingMetadata("pl_modulus"))?;
            let check = pl_violations(obj, mu, opts.pl_samples, opts.seed, opts.pl_tol)?;
            Ok(CheckResult::new(
                Suite::Pl,
                name,
                check.violations == 0,
                Some(check.violations as f64),
                Some(0.0),
                format!(
                    "mu = {mu}, {} samples, worst margin {:.3e}, tolerance {:e}",
                    check.samples, check.worst_margin, opts.pl_tol
                ),
            ))
        })
        .collect()
}

/// Identity quadratic in two dimensions.
fn identity_problem() -> Arc<dyn Objective> {
    Arc::new(quadratic(&QuadraticSpec::identity(2), Vector::zeros(2)).expect("identity quadratic is valid"))
}

/// Fixed-time gains and exponents for the quadratic settling runs.
pub fn settling_params() -> FxtsParams {
    FxtsParams {
        c1: 1.0,
        c2: 1.0,
        p1: 4.0,
        p2: 1.5,
    }
}

fn unit_direction(rng: &mut ChaCha8Rng, dim: usize) -> Vector {
    loop {
        let v = Vector::from_iterator(dim, (0..dim).map(|_| StandardNormal.sample(rng)));
        if v.norm() > 1e-8 {
            return v.normalize();
        }
    }
}

/// Seeded starting points with the given distances from the origin.
fn starts_at(magnitudes: &[f64], seed: u64) -> Vec<Vector> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    magnitudes.iter().map(|m| unit_direction(&mut rng, 2) * *m).collect()
}

/// Seeded starting points with log-uniform radius.
fn log_uniform_starts(count: usize, range: (f64, f64), seed: u64) -> Vec<Vector> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let log_r = Uniform::new_inclusive(range.0.ln(), range.1.ln());
    (0..count)
        .map(|_| {
            let u = unit_direction(&mut rng, 2);
            u * log_r.sample(&mut rng).exp()
        })
        .collect()
}

fn fxts_runs(opts: &VerifyOptions, starts: &[Vector], horizon: f64) -> Result<Vec<Trajectory>> {
    let obj = identity_problem();
    let flow = FxtsFlow::new(obj, settling_params())?;
    let cfg = IntegratorConfig::new(opts.step, horizon);
    starts.par_iter().map(|x0| integrate_flow(&flow, x0, &cfg, &mut [])).collect()
}

fn spread(times: &[Option<f64>]) -> f64 {
    let known: Vec<f64> = times.iter().flatten().copied().collect();
    if known.len() < times.len() || known.is_empty() {
        return f64::INFINITY;
    }
    let max = known.iter().copied().fold(f64::MIN, f64::max);
    let min = known.iter().copied().fold(f64::MAX, f64::min);
    max / min
}

fn list(times: &[Option<f64>]) -> String {
    times
        .iter()
        .map(|t| t.map_or("never".to_string(), |t| format!("{t:.4}")))
        .collect::<Vec<_>>()
        .join(", ")
}

fn settling(opts: &VerifyOptions) -> Result<Vec<CheckResult>> {
    let obj = identity_problem();
    let mu = obj.pl_modulus().expect("quadratic has a modulus");
    let bound = settling_bound(&lyapunov_constants(&settling_params(), mu)?);
    let starts = starts_at(&opts.magnitudes, opts.seed);
    let horizon = opts.stated_bound.max(bound) * 1.5;
    let fx: Vec<Option<f64>> = fxts_runs(opts, &starts, horizon)?
        .iter()
        .map(|t| detect_settling(t, opts.settle_threshold).settle_time)
        .collect();
    let gf_flow = GradientFlow::new(obj.clone());
    let gf: Vec<Option<f64>> = starts
        .par_iter()
        .map(|x0| {
            // exponential decay needs about ln(V0 / threshold) / 2 time units
            let v0 = 0.5 * x0.norm_squared();
            let horizon = (0.5 * (v0 / opts.settle_threshold).ln()).max(1.0) * 1.5;
            let mut stop = StopBelow {
                threshold: opts.settle_threshold,
            };
            let traj = integrate_flow(&gf_flow, x0, &IntegratorConfig::new(opts.step, horizon), &mut [&mut stop])?;
            Ok(detect_settling(&traj, opts.settle_threshold).settle_time)
        })
        .collect::<Result<_>>()?;
    let worst = fx.iter().map(|t| t.unwrap_or(f64::INFINITY)).fold(0.0, f64::max);
    let fx_spread = spread(&fx);
    let gf_growth = spread(&gf);
    let mags = format!("|x0| = {:?}", opts.magnitudes);
    Ok(vec![
        CheckResult::new(
            Suite::Settling,
            "fxts_before_stated_deadline",
            worst <= opts.stated_bound,
            Some(worst),
            Some(opts.stated_bound),
            format!("{mags}; settle times {}", list(&fx)),
        ),
        CheckResult::new(
            Suite::Settling,
            "fxts_within_fixed_time_bound",
            worst <= bound,
            Some(worst),
            Some(bound),
            format!("bound 1/(p(1-alpha)) + 1/(q(beta-1)) at mu = {mu}"),
        ),
        CheckResult::new(
            Suite::Settling,
            "fxts_settle_spread",
            fx_spread < opts.max_spread,
            Some(fx_spread),
            Some(opts.max_spread),
            "max/min settle time, must stay below the bound".into(),
        ),
        CheckResult::new(
            Suite::Settling,
            "gradient_flow_settle_growth",
            gf_growth > opts.gf_min_growth,
            Some(gf_growth),
            Some(opts.gf_min_growth),
            format!("max/min settle time must exceed the bound; settle times {}", list(&gf)),
        ),
    ])
}

fn envelopes(opts: &VerifyOptions) -> Result<Vec<CheckResult>> {
    let obj = identity_problem();
    let c = lyapunov_constants(&settling_params(), obj.pl_modulus().expect("modulus"))?;
    let (t1, t2) = (c.t1(), c.t2());
    let starts = log_uniform_starts(opts.envelope_runs, opts.envelope_radius, opts.seed);
    let runs = fxts_runs(opts, &starts, 1.5 * (t1 + t2))?;
    let mut first: f64 = f64::NEG_INFINITY;
    let mut second: f64 = f64::NEG_INFINITY;
    let mut samples = (0usize, 0usize);
    for traj in &runs {
        let v0 = traj.values[0];
        for (t, v) in traj.times.iter().zip(&traj.values) {
            let Some(env) = value_envelope(&c, v0, *t) else { continue };
            if *t <= t2 {
                first = first.max(v - env);
                samples.0 += 1;
            }
            if *t >= t2 && *t <= t1 + t2 {
                second = second.max(v - env);
                samples.1 += 1;
            }
        }
    }
    let slack = opts.envelope_slack;
    Ok(vec![
        CheckResult::new(
            Suite::Envelopes,
            "decay_before_t2",
            first <= slack,
            Some(first),
            Some(slack),
            format!(
                "max V(t) - V0/(1 + q V0^(beta-1) (beta-1) t)^(1/(beta-1)) over {} samples of {} runs, T2 = {t2:.4}",
                samples.0,
                runs.len()
            ),
        ),
        CheckResult::new(
            Suite::Envelopes,
            "decay_after_t2",
            second <= slack,
            Some(second),
            Some(slack),
            format!(
                "max V(t) - (1 - p(1-alpha)(t-T2))^(1/(1-alpha)) over {} samples on [T2, T1+T2], T1 = {t1:.4}",
                samples.1
            ),
        ),
    ])
}

fn regret(opts: &VerifyOptions) -> Result<Vec<CheckResult>> {
    let obj = identity_problem();
    let c = lyapunov_constants(&settling_params(), obj.pl_modulus().expect("modulus"))?;
    let horizon = 1.5 * settling_bound(&c);
    let mut starts = starts_at(&opts.magnitudes, opts.seed);
    starts.extend(log_uniform_starts(opts.envelope_runs, opts.envelope_radius, opts.seed));
    let runs = fxts_runs(opts, &starts, horizon)?;
    let mut worst_total = f64::NEG_INFINITY;
    let mut worst_small = f64::NEG_INFINITY;
    let mut small_runs = 0;
    let mut unfinished = 0;
    for traj in &runs {
        let v0 = traj.values[0];
        let b = regret_bound(&c, v0)?;
        let r = accumulate_regret(traj);
        if !traj.stopped_at_floor {
            unfinished += 1;
        }
        worst_total = worst_total.max(r - b.total());
        if v0 <= 1.0 {
            small_runs += 1;
            worst_small = worst_small.max(r - b.l1);
        }
    }
    let slack = opts.regret_slack;
    Ok(vec![
        CheckResult::new(
            Suite::Regret,
            "regret_below_l1_plus_l2",
            worst_total <= slack && unfinished == 0,
            Some(worst_total),
            Some(slack),
            format!("max regret - (l1 + l2) over {} runs; {unfinished} runs did not reach the floor", runs.len()),
        ),
        CheckResult::new(
            Suite::Regret,
            "regret_below_l1_when_v0_at_most_1",
            small_runs > 0 && worst_small <= slack,
            Some(worst_small),
            Some(slack),
            format!("max regret - l1 over {small_runs} runs with V(0) <= 1"),
        ),
    ])
}

fn robustness(opts: &VerifyOptions) -> Result<Vec<CheckResult>> {
    let obj = identity_problem();
    let mu = obj.pl_modulus().expect("modulus");
    let params = FxtsParams {
        p2: opts.robustness_p2,
        ..settling_params()
    };
    params.validate()?;
    let level = opts.robustness_fraction * 4.0 * mu * mu * params.c1.min(params.c2);
    let cond = RobustnessConditions::new(&params, mu, level);
    let adjusted = robust_constants(&params, mu, level);
    let bound = adjusted.as_ref().ok().map(settling_bound);
    let seeds: Vec<u64> = (0..opts.robustness_seeds as u64).map(|s| opts.seed + s).collect();
    let times: Vec<Option<f64>> = seeds
        .par_iter()
        .map(|&seed| {
            let x0 = log_uniform_starts(1, opts.robustness_radius, seed).remove(0);
            let noise = NoiseSpec::radial(level);
            let flow = perturbed_field(FxtsFlow::new(obj.clone(), params)?, &NoiseSpec { seed, ..noise })?;
            let mut stop = StopBelow {
                threshold: opts.robustness_threshold,
            };
            let cfg = IntegratorConfig::new(opts.step, opts.robustness_horizon);
            match integrate_flow(&flow, &x0, &cfg, &mut [&mut stop]) {
                Ok(traj) => Ok(detect_settling(&traj, opts.robustness_threshold).settle_time),
                Err(Error::Diverged { .. }) => Ok(None),
                Err(e) => Err(e),
            }
        })
        .collect::<Result<_>>()?;
    let worst = times.iter().map(|t| t.unwrap_or(f64::INFINITY)).fold(0.0, f64::max);
    let admissible_detail = match &adjusted {
        Ok(c) => format!("l = {level}, l_bar = {}, adjusted p = {:.4}, q = {:.4}", cond.l_bar, c.p, c.q),
        Err(e) => format!("l = {level}, l_bar = {}: {e}", cond.l_bar),
    };
    Ok(vec![
        CheckResult::new(
            Suite::Robustness,
            "noise_level_admissible",
            adjusted.is_ok(),
            Some(level),
            Some(4.0 * mu * mu * params.c1.min(params.c2)),
            format!(
                "{admissible_detail}; 4mu^2 min c > l: {}, c - l_bar > 0: {}, 1 < p2 <= 3/2: {}",
                cond.gain_margin, cond.reduced_gains_positive, cond.exponent_in_range
            ),
        ),
        CheckResult::new(
            Suite::Robustness,
            "perturbed_runs_settle_within_adjusted_bound",
            bound.is_some_and(|b| worst <= b),
            Some(worst),
            bound,
            format!(
                "radial noise, {} seeds, threshold {:e}, horizon {}; settle times {}",
                seeds.len(),
                opts.robustness_threshold,
                opts.robustness_horizon,
                list(&times)
            ),
        ),
    ])
}

/// Exponent pair and problem of the discretization check: `mu = 1/2` and unit gains give `p = q = 1`.
pub fn discretization_setup() -> (FxtsParams, Arc<dyn Objective>) {
    let params = FxtsParams {
        c1: 1.0,
        c2: 1.0,
        p1: 2.5,
        p2: 1.75,
    };
    let obj = quadratic(&QuadraticSpec::diagonal(vec![0.5, 0.5]), Vector::zeros(2)).expect("valid quadratic");
    (params, Arc::new(obj))
}

fn discretization(opts: &VerifyOptions) -> Result<Vec<CheckResult>> {
    let (params, obj) = discretization_setup();
    let mu = obj.pl_modulus().expect("modulus");
    let (p1, xi) = consistency_pair(params.p2)?;
    let cert = discretization_cert(&params, mu, opts.disc_eta, opts.disc_eps)?;
    let search = EtaSearch {
        runs: opts.disc_runs,
        seed: opts.seed,
        ..EtaSearch::default()
    };
    let found = find_eta_star_with(obj.as_ref(), &params, opts.disc_eps, &opts.disc_grid, &search);
    let eta_star = found.as_ref().ok().map(|r| r.eta_star);
    let starts = envelope_starts(obj.x_star().expect("x*"), &search);
    let runs = starts
        .par_iter()
        .map(|x0| check_envelope_run(obj.as_ref(), &params, &cert, x0))
        .collect::<Result<Vec<_>>>()?;
    let env_violations: u64 = runs.iter().map(|r| r.envelope_violations).sum();
    let worst_terminal = runs.iter().map(|r| r.worst_terminal_distance).fold(0.0, f64::max);
    let trials = match &found {
        Ok(r) => r
            .trials
            .iter()
            .map(|t| format!("{}: {} failed", t.eta, t.failed_runs))
            .collect::<Vec<_>>()
            .join(", "),
        Err(e) => e.to_string(),
    };
    Ok(vec![
        CheckResult::new(
            Suite::Discretization,
            "consistent_exponents",
            (p1 - params.p1).abs() <= 1e-12 && (xi - cert.xi).abs() <= 1e-12,
            Some(cert.xi),
            Some(xi),
            format!("p2 = {} pairs with p1 = {p1}", params.p2),
        ),
        CheckResult::new(
            Suite::Discretization,
            "k_star",
            cert.k_star == (xi * std::f64::consts::PI / (2.0 * opts.disc_eta * (cert.p * cert.q).sqrt())).ceil() as u64,
            Some(cert.k_star as f64),
            None,
            format!(
                "p = {}, q = {}, eta = {}; alternate constants give k* = {}",
                cert.p, cert.q, opts.disc_eta, cert.alternate.k_star
            ),
        ),
        CheckResult::new(
            Suite::Discretization,
            "eta_within_validated_range",
            eta_star.is_some_and(|e| opts.disc_eta <= e),
            Some(opts.disc_eta),
            eta_star,
            format!("grid search: {trials}"),
        ),
        CheckResult::new(
            Suite::Discretization,
            "envelope_holds_up_to_k_star",
            env_violations == 0,
            Some(env_violations as f64),
            Some(0.0),
            format!("{} seeded starts, radius log-uniform in [0.1, 100]", runs.len()),
        ),
        CheckResult::new(
            Suite::Discretization,
            "terminal_error_after_k_star",
            worst_terminal <= opts.disc_eps,
            Some(worst_terminal),
            Some(opts.disc_eps),
            "max |x_k - x*| for k* < k <= 2k*".into(),
        ),
    ])
}

/// Roster and settings of the Rosenbrock ordering experiment.
pub fn rosenbrock_roster_config(max_iters: u64) -> RunConfig {
    let mut cfg = RunConfig::new(
        ProblemSpec::Rosenbrock,
        OptimizerSpec::new(OptimizerKind::Adam {
            adam_beta1: 0.9,
            adam_beta2: 0.999,
            adam_eps: 1e-8,
        })
        .labeled("adam"),
        X0Spec::Point(vec![0.3, 0.8]),
        1e-3,
    );
    cfg.optimizers = vec![
        OptimizerSpec::new(OptimizerKind::Nag { momentum: 0.5 }).labeled("nag"),
        OptimizerSpec::new(OptimizerKind::Fxts {
            c1: 1.25,
            c2: 1.25,
            p1: 20.0,
            p2: 1.98,
            p2_term_cap: None,
        })
        .labeled("fxts"),
        OptimizerSpec::new(OptimizerKind::FxtsMomentum {
            p: 20.0,
            q: 1.98,
            lambda: None,
            momentum: Some(0.18),
            lr: None,
            scheme: Default::default(),
        })
        .labeled("fxts_momentum"),
    ];
    cfg.max_iters = max_iters;
    cfg.output_dir = "fxts-out/rosenbrock".into();
    cfg.expect_order = [
        ["fxts", "adam"],
        ["fxts", "nag"],
        ["fxts_momentum", "adam"],
        ["fxts_momentum", "nag"],
    ]
    .map(|[a, b]| [a.to_string(), b.to_string()])
    .to_vec();
    cfg
}

fn iters_text(v: Option<u64>) -> String {
    v.map_or("never".into(), |v| v.to_string())
}

fn rosenbrock_order(opts: &VerifyOptions) -> Result<Vec<CheckResult>> {
    let cfg = rosenbrock_roster_config(opts.rosenbrock_max_iters);
    let cmp = compare_runs(&cfg)?;
    let report = &cmp.report;
    let finals: Vec<String> = report
        .entries
        .iter()
        .map(|e| {
            let dist = e.summary.as_ref().and_then(|s| s.final_dist);
            format!("{} final dist {}", e.label, fmt_opt(dist))
        })
        .collect();
    Ok(report
        .checks
        .iter()
        .map(|c| {
            CheckResult::new(
                Suite::Rosenbrock,
                &format!("{}_before_{}", c.faster, c.slower),
                c.holds,
                c.faster_iters.map(|v| v as f64),
                c.slower_iters.map(|v| v as f64),
                format!(
                    "iterations to |x - (1,1)| <= 1e-4: {} = {}, {} = {} (budget {}); {}",
                    c.faster,
                    iters_text(c.faster_iters),
                    c.slower,
                    iters_text(c.slower_iters),
                    opts.rosenbrock_max_iters,
                    finals.join(", ")
                ),
            )
        })
        .collect())
}

/// Seeded starting points uniform in `[-1, 1]^2`.
pub fn sweep_starts(count: usize, seed: u64) -> Vec<Vector> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let u = Uniform::new_inclusive(-1.0, 1.0);
    (0..count)
        .map(|_| Vector::from_vec(vec![u.sample(&mut rng), u.sample(&mut rng)]))
        .collect()
}

fn iteration_spread(iters: &[Option<u64>]) -> f64 {
    spread(&iters.iter().map(|i| i.map(|v| v as f64)).collect::<Vec<_>>())
}

fn sweep_spread(opts: &VerifyOptions) -> Result<Vec<CheckResult>> {
    let base = rosenbrock_roster_config(opts.rosenbrock_max_iters);
    let fxm = base.optimizers[2].clone();
    let gd = OptimizerSpec::new(OptimizerKind::Gd).labeled("gd");
    let starts = sweep_starts(opts.sweep_draws, opts.seed);
    let iters = |spec: &OptimizerSpec| -> Result<Vec<Option<u64>>> {
        starts
            .par_iter()
            .map(|x0| Ok(execute(&base, spec, x0)?.summary.iters_to_threshold))
            .collect()
    };
    let fx = iters(&fxm)?;
    let g = iters(&gd)?;
    let show = |v: &[Option<u64>]| v.iter().map(|i| iters_text(*i)).collect::<Vec<_>>().join(", ");
    Ok(vec![
        CheckResult::new(
            Suite::Sweep,
            "fxts_momentum_iteration_spread",
            iteration_spread(&fx) < opts.sweep_max_spread,
            Some(iteration_spread(&fx)),
            Some(opts.sweep_max_spread),
            format!("{} draws in [-1,1]^2; iterations {}", starts.len(), show(&fx)),
        ),
        CheckResult::new(
            Suite::Sweep,
            "gd_iteration_spread",
            iteration_spread(&g) > opts.sweep_max_spread,
            Some(iteration_spread(&g)),
            Some(opts.sweep_max_spread),
            format!("must exceed the bound; iterations {}", show(&g)),
        ),
    ])
}

fn run_csv_twice(cfg: &RunConfig) -> Result<(bool, usize)> {
    let mut outputs = Vec::new();
    for _ in 0..2 {
        let dir = tempfile::tempdir()?;
        let mut c = cfg.clone();
        c.output_dir = dir.path().to_path_buf();
        let art = run(&c)?;
        let path = art.csv.ok_or_else(|| Error::Config(vec!["run produced no trajectory".into()]))?;
        outputs.push(std::fs::read(path)?);
    }
    Ok((outputs[0] == outputs[1], outputs[0].len()))
}

fn determinism(opts: &VerifyOptions) -> Result<Vec<CheckResult>> {
    let mut continuous = RunConfig::new(
        ProblemSpec::identity_quadratic(2),
        OptimizerSpec::fxts(settling_params()),
        X0Spec::Random {
            magnitude: 100.0,
            seed: Some(opts.seed),
        },
        opts.step,
    );
    continuous.mode = super::config::Mode::Continuous;
    continuous.horizon = 4.0;
    let mut discrete = rosenbrock_roster_config(opts.rosenbrock_max_iters);
    discrete.optimizers.clear();
    discrete.expect_order.clear();
    discrete.optimizer = Some(OptimizerSpec::new(OptimizerKind::FxtsMomentum {
        p: 20.0,
        q: 1.98,
        lambda: None,
        momentum: Some(0.18),
        lr: None,
        scheme: Default::default(),
    }));
    discrete.max_iters = 20_000;
    let mut checks = Vec::new();
    for (name, cfg) in [("continuous_fxts_csv", continuous), ("discrete_fxts_momentum_csv", discrete)] {
        let (same, bytes) = run_csv_twice(&cfg)?;
        checks.push(CheckResult::new(
            Suite::Determinism,
            name,
            same,
            Some(bytes as f64),
            None,
            "two runs of one config, byte comparison of the trajectory CSV".into(),
        ));
    }
    Ok(checks)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn suites_parse_by_name() {
        for s in Suite::EACH {
            assert_eq!(s.name().parse::<Suite>().unwrap(), s);
        }
        assert_eq!("all".parse::<Suite>().unwrap(), Suite::All);
        assert!(matches!("fast".parse::<Suite>(), Err(Error::Config(_))));
    }

    #[test]
    fn spread_needs_every_run() {
        assert_eq!(spread(&[Some(1.0), Some(3.0)]), 3.0);
        assert_eq!(spread(&[Some(1.0), None]), f64::INFINITY);
        assert_eq!(spread(&[]), f64::INFINITY);
    }

    #[test]
    fn options_override_partially() {
        let opts: VerifyOptions = serde_json::from_str(r#"{"fd_points": 5}"#).unwrap();
        assert_eq!(opts.fd_points, 5);
        assert_eq!(opts.pl_samples, VerifyOptions::default().pl_samples);
        assert!(serde_json::from_str::<VerifyOptions>(r#"{"fd_point": 5}"#).is_err());
    }

    #[test]
    fn text_report_marks_failures() {
        let report = VerifyReport {
            suite: "x".into(),
            checks: vec![
                CheckResult::new(Suite::Pl, "a", true, Some(1.0), None, String::new()),
                CheckResult::new(Suite::Pl, "b", false, None, Some(2.0), "why".into()),
            ],
        };
        let text = report.to_text();
        assert!(text.contains("PASS  pl/a") && text.contains("FAIL  pl/b"));
        assert!(text.ends_with("2 checks, 1 failed\n"));
        assert!(!report.passed());
    }

    #[test]
    fn gradient_suite_passes_small() {
        let opts = VerifyOptions {
            fd_points: 10,
            ..VerifyOptions::default()
        };
        assert!(verify(Suite::Gradients, &opts).unwrap().passed());
    }
}
