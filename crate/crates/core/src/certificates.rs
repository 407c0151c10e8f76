//! Closed-form constants and bounds for the fixed-time stable flow: Lyapunov
//! constants, settling time, regret, noise robustness and the Euler
//! discretization envelope.

use std::f64::consts::{FRAC_PI_2, PI};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal, Uniform};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::flows::{FxtsField, FxtsParams, StepState};
use crate::{Error, Objective, Result, Vector};

/// Constants of `dV/dt <= -p V^alpha - q V^beta` for `V = f - f*`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LyapunovConstants {
    pub p: f64,
    pub q: f64,
    pub alpha: f64,
    pub beta: f64,
}

impl LyapunovConstants {
    /// `1/(p(1-alpha))`, the time spent below `V = 1`.
    pub fn t1(&self) -> f64 {
        1.0 / (self.p * (1.0 - self.alpha))
    }

    /// `1/(q(beta-1))`, the time needed to reach `V = 1` from anywhere.
    pub fn t2(&self) -> f64 {
        1.0 / (self.q * (self.beta - 1.0))
    }
}

fn check_mu(mu: f64) -> Result<()> {
    if mu > 0.0 && mu.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidParams(format!("PL modulus must be positive, got {mu}")))
    }
}

fn constants_with_gains(params: &FxtsParams, mu: f64, g1: f64, g2: f64) -> LyapunovConstants {
    let alpha = params.p1 / (2.0 * (params.p1 - 1.0));
    let beta = params.p2 / (2.0 * (params.p2 - 1.0));
    LyapunovConstants {
        p: g1 * (2.0 * mu).powf(alpha),
        q: g2 * (2.0 * mu).powf(beta),
        alpha,
        beta,
    }
}

/// `p = c1 (2 mu)^alpha`, `q = c2 (2 mu)^beta`, `alpha = p1/(2(p1-1))`, `beta = p2/(2(p2-1))`.
pub fn lyapunov_constants(params: &FxtsParams, mu: f64) -> Result<LyapunovConstants> {
    params.validate()?;
    check_mu(mu)?;
    Ok(constants_with_gains(params, mu, params.c1, params.c2))
}

/// Fixed-time settling bound `T1 + T2`.
pub fn settling_bound(c: &LyapunovConstants) -> f64 {
    c.t1() + c.t2()
}

/// Which robustness conditions a noise level satisfies.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RobustnessConditions {
    /// `l / mu^2`.
    pub l_bar: f64,
    /// `4 mu^2 min(c1, c2) > l`.
    pub gain_margin: bool,
    /// `c1 - l_bar > 0` and `c2 - l_bar > 0`.
    pub reduced_gains_positive: bool,
    /// `1 < p2 <= 3/2`.
    pub exponent_in_range: bool,
}

impl RobustnessConditions {
    pub fn new(params: &FxtsParams, mu: f64, level: f64) -> Self {
        let l_bar = level / (mu * mu);
        Self {
            l_bar,
            gain_margin: 4.0 * mu * mu * params.c1.min(params.c2) > level,
            reduced_gains_positive: params.c1 - l_bar > 0.0 && params.c2 - l_bar > 0.0,
            exponent_in_range: params.p2 > 1.0 && params.p2 <= 1.5,
        }
    }

    pub fn all_hold(&self) -> bool {
        self.gain_margin && self.reduced_gains_positive && self.exponent_in_range
    }
}

/// Constants of the disturbed flow, with gains `c_i - l/mu^2`.
pub fn robust_constants(params: &FxtsParams, mu: f64, level: f64) -> Result<LyapunovConstants> {
    params.validate()?;
    check_mu(mu)?;
    if !(level >= 0.0 && level.is_finite()) {
        return Err(Error::InvalidParams(format!("noise level must be nonnegative, got {level}")));
    }
    let cond = RobustnessConditions::new(params, mu, level);
    if !cond.gain_margin {
        return Err(Error::InadmissibleNoise(format!(
            "4 mu^2 min(c1, c2) > l fails: {} <= {level}",
            4.0 * mu * mu * params.c1.min(params.c2)
        )));
    }
    if !cond.reduced_gains_positive {
        return Err(Error::InadmissibleNoise(format!(
            "c_i - l/mu^2 > 0 fails: c1 - l_bar = {}, c2 - l_bar = {}",
            params.c1 - cond.l_bar,
            params.c2 - cond.l_bar
        )));
    }
    if !cond.exponent_in_range {
        return Err(Error::ExponentRange(format!("1 < p2 <= 3/2 required, got p2 = {}", params.p2)));
    }
    Ok(constants_with_gains(params, mu, params.c1 - cond.l_bar, params.c2 - cond.l_bar))
}

/// Constant regret bound `l1 + l2` and the pieces it is built from.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RegretBound {
    pub l1: f64,
    pub l2: f64,
    pub t1: f64,
    pub t2: f64,
    pub v0: f64,
    /// `l2` came from the logarithmic limit at `beta = 2`.
    pub beta_two_limit: bool,
}

impl RegretBound {
    pub fn total(&self) -> f64 {
        self.l1 + self.l2
    }

    /// Step-function reading: `l1` when `v0 <= 1` or `T <= T1`, else `l1 + l2`.
    ///
    /// Only an upper bound for horizons past `T1`; runs starting far away can
    /// exceed `l1` well before `T1`.
    pub fn step_bound(&self, horizon: f64) -> f64 {
        if self.v0 <= 1.0 || horizon <= self.t1 {
            self.l1
        } else {
            self.total()
        }
    }
}

const BETA_TWO_TOL: f64 = 1e-12;

pub fn regret_bound(c: &LyapunovConstants, v0: f64) -> Result<RegretBound> {
    if !(v0 >= 0.0 && v0.is_finite()) {
        return Err(Error::Domain(format!("V(0) must be finite and nonnegative, got {v0}")));
    }
    let (alpha, beta, p, q) = (c.alpha, c.beta, c.p, c.q);
    let l1 = 1.0 / (p * (2.0 - alpha));
    let beta_two = (beta - 2.0).abs() < BETA_TWO_TOL;
    let l2 = if v0 <= 1.0 {
        0.0
    } else if beta_two {
        (1.0 + v0.powf(beta - 1.0)).ln() / (q * (beta - 1.0) * v0.powf(beta - 2.0))
    } else {
        let inner = (1.0 + v0.powf(beta - 1.0)).powf((beta - 2.0) / (beta - 1.0)) - 1.0;
        inner / (q * v0.powf(beta - 2.0) * (beta - 2.0))
    };
    Ok(RegretBound {
        l1,
        l2,
        t1: c.t1(),
        t2: c.t2(),
        v0,
        beta_two_limit: beta_two && v0 > 1.0,
    })
}

/// Upper envelope on `V(t)` for a run with `V(0) = v0 > 1`.
///
/// `v0 / (1 + q v0^(beta-1) (beta-1) t)^(1/(beta-1))` up to `T2`, then
/// `(1 - p(1-alpha)(t - T2))^(1/(1-alpha))` until `T1 + T2`, zero afterwards.
/// `None` when `v0 <= 1`, where only the second piece applies from `t = 0`.
pub fn value_envelope(c: &LyapunovConstants, v0: f64, t: f64) -> Option<f64> {
    if v0 <= 1.0 {
        return None;
    }
    let t2 = c.t2();
    let env = if t <= t2 {
        v0 / (1.0 + c.q * v0.powf(c.beta - 1.0) * (c.beta - 1.0) * t).powf(1.0 / (c.beta - 1.0))
    } else {
        (1.0 - c.p * (1.0 - c.alpha) * (t - t2)).max(0.0).powf(1.0 / (1.0 - c.alpha))
    };
    Some(env)
}

/// Exponent `p1` paired with `p2` so that `2 + 1/(p1-2) = 1/(2-p2)`, and the
/// shared `xi = (2p1-2)/(p1-2) = -(2p2-2)/(p2-2)`.
pub fn consistency_pair(p2: f64) -> Result<(f64, f64)> {
    if !(p2 > 1.5 && p2 < 2.0) {
        return Err(Error::Domain(format!("p2 must lie in (3/2, 2), got {p2}")));
    }
    let gap = (2.0 - p2) / (2.0 * p2 - 3.0);
    let p1 = 2.0 + gap;
    // (2p1-2)/(p1-2) with p1-2 kept exact
    let xi1 = 2.0 + 2.0 / gap;
    let xi2 = -(2.0 * p2 - 2.0) / (p2 - 2.0);
    let tol = 1e-12 * xi2.abs().max(1.0);
    if (xi1 - xi2).abs() > tol {
        return Err(Error::Inconsistent { lhs: xi1, rhs: xi2 });
    }
    Ok((p1, xi2))
}

const CONSISTENCY_TOL: f64 = 1e-9;

/// `xi` for a consistent pair, or the two sides of the consistency equation.
pub fn consistent_xi(params: &FxtsParams) -> Result<f64> {
    let lhs = 2.0 + 1.0 / (params.p1 - 2.0);
    let rhs = 1.0 / (2.0 - params.p2);
    if (lhs - rhs).abs() > CONSISTENCY_TOL * rhs.abs().max(1.0) {
        return Err(Error::Inconsistent { lhs, rhs });
    }
    Ok(-(2.0 * params.p2 - 2.0) / (params.p2 - 2.0))
}

/// Envelope constants in the alternative printed form: prefactor `1/(sqrt(2) mu)`,
/// exponent `mu`, and `k* = ceil(mu pi / (sqrt(pq) eta))`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AlternateEnvelope {
    pub prefactor: f64,
    pub exponent: f64,
    pub k_star: u64,
}

/// Distance envelope for the Euler iteration of the fixed-time flow.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DiscretizationCert {
    pub xi: f64,
    pub eta: f64,
    /// Largest validated step size, when a search was run.
    pub eta_star: Option<f64>,
    pub k_star: u64,
    pub eps: f64,
    /// `m` in `f - f* >= m |x - x*|^2`.
    pub growth_m: f64,
    pub p: f64,
    pub q: f64,
    pub alternate: AlternateEnvelope,
}

impl DiscretizationCert {
    /// `(1/sqrt(m)) (sqrt(p/q) tan(pi/2 - sqrt(pq) eta k / xi))^(xi/2) + eps` for `k <= k*`,
    /// infinite at `k = 0` and `eps` past `k*`.
    pub fn envelope(&self, k: u64) -> f64 {
        if k == 0 {
            return f64::INFINITY;
        }
        if k > self.k_star {
            return self.eps;
        }
        let arg = (FRAC_PI_2 - (self.p * self.q).sqrt() * self.eta * k as f64 / self.xi).max(0.0);
        ((self.p / self.q).sqrt() * arg.tan()).powf(self.xi / 2.0) / self.growth_m.sqrt() + self.eps
    }

    /// Envelope under the alternative constants.
    pub fn alternate_envelope(&self, k: u64) -> f64 {
        let alt = &self.alternate;
        if k == 0 {
            return f64::INFINITY;
        }
        if k > alt.k_star {
            return self.eps;
        }
        let arg = (FRAC_PI_2 - (self.p * self.q).sqrt() * self.eta * k as f64 / alt.exponent / 2.0).max(0.0);
        alt.prefactor * ((self.p / self.q).sqrt() * arg.tan()).powf(alt.exponent) + self.eps
    }
}

pub fn discretization_cert(params: &FxtsParams, mu: f64, eta: f64, eps: f64) -> Result<DiscretizationCert> {
    params.validate()?;
    let xi = consistent_xi(params)?;
    if !(eta > 0.0) || !(eps > 0.0) {
        return Err(Error::InvalidParams(format!("eta and eps must be positive, got {eta} and {eps}")));
    }
    let c = lyapunov_constants(params, mu)?;
    let root = (c.p * c.q).sqrt();
    Ok(DiscretizationCert {
        xi,
        eta,
        eta_star: None,
        k_star: (xi * PI / (2.0 * eta * root)).ceil() as u64,
        eps,
        growth_m: mu / 2.0,
        p: c.p,
        q: c.q,
        alternate: AlternateEnvelope {
            prefactor: 1.0 / (2f64.sqrt() * mu),
            exponent: mu,
            k_star: (mu * PI / (root * eta)).ceil() as u64,
        },
    })
}

/// Outcome of one Euler run checked against the envelope.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EnvelopeRun {
    /// Iterations `1..=k*` where `|x_k - x*|` reached the envelope.
    pub envelope_violations: u64,
    /// Iterations in `k* < k <= 2k*` farther than `eps` from the optimum.
    pub terminal_violations: u64,
    pub worst_terminal_distance: f64,
}

impl EnvelopeRun {
    pub fn passed(&self) -> bool {
        self.envelope_violations == 0 && self.terminal_violations == 0
    }
}

/// Run the Euler iteration for `2k*` steps from `x0` and compare with the envelope.
pub fn check_envelope_run(
    obj: &dyn Objective,
    params: &FxtsParams,
    cert: &DiscretizationCert,
    x0: &Vector,
) -> Result<EnvelopeRun> {
    let x_star = obj.x_star().ok_or(Error::MissingMetadata("x_star"))?;
    let field = FxtsField::new(*params)?;
    let mut state = StepState::new(x0.clone(), cert.eta);
    let mut run = EnvelopeRun {
        envelope_violations: 0,
        terminal_violations: 0,
        worst_terminal_distance: 0.0,
    };
    for k in 0..=2 * cert.k_star {
        let dist = (&state.x - x_star).norm();
        if !dist.is_finite() {
            run.envelope_violations += u64::from(k <= cert.k_star);
            run.terminal_violations += 2 * cert.k_star - cert.k_star.max(k);
            run.worst_terminal_distance = f64::INFINITY;
            break;
        }
        if k <= cert.k_star {
            if dist >= cert.envelope(k) {
                run.envelope_violations += 1;
            }
        } else {
            run.worst_terminal_distance = run.worst_terminal_distance.max(dist);
            if dist > cert.eps {
                run.terminal_violations += 1;
            }
        }
        match field.step(obj, &state) {
            Ok(next) => state = next,
            Err(Error::NonFinite { .. }) => state.x = Vector::from_element(x0.len(), f64::NAN),
            Err(e) => return Err(e),
        }
    }
    Ok(run)
}

/// Settings of the step-size search.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EtaSearch {
    pub runs: usize,
    pub seed: u64,
    /// Start radii are log-uniform in this range around `x*`.
    pub radius_range: (f64, f64),
}

impl Default for EtaSearch {
    fn default() -> Self {
        Self {
            runs: 50,
            seed: 0,
            radius_range: (0.1, 100.0),
        }
    }
}

/// Per-step-size outcome of the search.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EtaTrial {
    pub eta: f64,
    pub k_star: u64,
    pub failed_runs: usize,
    pub worst_terminal_distance: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EtaSearchReport {
    pub eta_star: f64,
    /// Trials sorted by decreasing step size.
    pub trials: Vec<EtaTrial>,
}

/// Seeded start points `x* + r u`, `u` uniform on the sphere, `log r` uniform.
pub fn envelope_starts(x_star: &Vector, search: &EtaSearch) -> Vec<Vector> {
    let mut rng = ChaCha8Rng::seed_from_u64(search.seed);
    let (lo, hi) = search.radius_range;
    let log_r = Uniform::new_inclusive(lo.ln(), hi.ln());
    let dim = x_star.len();
    (0..search.runs)
        .map(|_| {
            let u = loop {
                let v = Vector::from_iterator(dim, (0..dim).map(|_| StandardNormal.sample(&mut rng)));
                if v.norm() > 1e-8 {
                    break v.normalize();
                }
            };
            x_star + u * log_r.sample(&mut rng).exp()
        })
        .collect()
}

/// Largest grid step size that, together with every smaller grid value, keeps all
/// seeded runs inside the envelope and within `eps` after `k*`.
pub fn find_eta_star(obj: &dyn Objective, params: &FxtsParams, eps: f64, grid: &[f64]) -> Result<f64> {
    find_eta_star_with(obj, params, eps, grid, &EtaSearch::default()).map(|r| r.eta_star)
}

pub fn find_eta_star_with(
    obj: &dyn Objective,
    params: &FxtsParams,
    eps: f64,
    grid: &[f64],
    search: &EtaSearch,
) -> Result<EtaSearchReport> {
    let mu = obj.pl_modulus().ok_or(Error::MissingMetadata("pl_modulus"))?;
    let x_star = obj.x_star().ok_or(Error::MissingMetadata("x_star"))?;
    consistent_xi(params)?;
    let mut etas: Vec<f64> = grid.to_vec();
    if etas.is_empty() || etas.iter().any(|e| !(*e > 0.0)) {
        return Err(Error::InvalidParams("step-size grid must be non-empty and positive".into()));
    }
    etas.sort_by(|a, b| b.total_cmp(a));
    etas.dedup();
    let starts = envelope_starts(x_star, search);
    let trials = etas
        .iter()
        .map(|&eta| {
            let cert = discretization_cert(params, mu, eta, eps)?;
            let runs = starts
                .par_iter()
                .map(|x0| check_envelope_run(obj, params, &cert, x0))
                .collect::<Result<Vec<_>>>()?;
            Ok(EtaTrial {
                eta,
                k_star: cert.k_star,
                failed_runs: runs.iter().filter(|r| !r.passed()).count(),
                worst_terminal_distance: runs.iter().map(|r| r.worst_terminal_distance).fold(0.0, f64::max),
            })
        })
        .collect::<Result<Vec<_>>>()?;
    // the answer must pass together with everything below it
    let mut eta_star = None;
    for trial in trials.iter().rev() {
        if trial.failed_runs > 0 {
            break;
        }
        eta_star = Some(trial.eta);
    }
    Ok(EtaSearchReport {
        eta_star: eta_star.ok_or(Error::SearchFailed)?,
        trials,
    })
}
