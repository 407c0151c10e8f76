use std::path::PathBuf;
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::config::{Mode, RunConfig};
use super::output::{file_stem, write_atomic, write_json};
use crate::certificates::{lyapunov_constants, regret_bound, robust_constants, settling_bound};
use crate::continuum::{
    accumulate_regret, detect_settling, integrate_flow, perturbed_field, Flow, FxtsFlow, GradientFlow, MomentumFlow,
    SettlingRecord, Trajectory,
};
use crate::optim::{run_discrete, DiscreteOptions, OptimizerKind, OptimizerSpec, Threshold};
use crate::{Error, Objective, Result, Vector};

/// Outcome of one run, as written to `<label>.summary.json`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunSummary {
    pub label: String,
    pub optimizer: String,
    pub problem: String,
    pub mode: Mode,
    pub x0: Vec<f64>,
    /// Iterations performed (discrete) or samples recorded minus one (continuous).
    pub iterations: u64,
    pub threshold: Threshold,
    pub iters_to_threshold: Option<u64>,
    pub settling: Option<SettlingRecord>,
    pub final_time: Option<f64>,
    pub final_f_gap: Option<f64>,
    pub final_dist: Option<f64>,
    pub final_grad_norm: Option<f64>,
    pub regret: Option<f64>,
    pub regret_bound: Option<f64>,
    pub stopped_at_floor: bool,
    pub converged: bool,
    pub diverged: bool,
    pub error: Option<String>,
    pub notes: Vec<String>,
    pub wall_time_s: f64,
}

/// Trajectory and summary of one optimizer.
#[derive(Debug, Clone)]
pub struct RunOutput {
    pub summary: RunSummary,
    pub trajectory: Option<Trajectory>,
}

fn empty_summary(config: &RunConfig, spec: &OptimizerSpec, x0: &Vector, threshold: Threshold) -> RunSummary {
    RunSummary {
        label: spec.label(),
        optimizer: spec.name().to_string(),
        problem: config.problem.name().to_string(),
        mode: config.mode,
        x0: x0.iter().copied().collect(),
        iterations: 0,
        threshold,
        iters_to_threshold: None,
        settling: None,
        final_time: None,
        final_f_gap: None,
        final_dist: None,
        final_grad_norm: None,
        regret: None,
        regret_bound: None,
        stopped_at_floor: false,
        converged: false,
        diverged: false,
        error: None,
        notes: Vec::new(),
        wall_time_s: 0.0,
    }
}

fn fill_final(summary: &mut RunSummary, traj: &Trajectory) {
    let last = traj.len() - 1;
    summary.final_time = traj.final_time();
    summary.final_f_gap = Some(traj.values[last]);
    summary.final_grad_norm = Some(traj.grad_norms[last]);
    summary.final_dist = traj.dist_to_opt.as_ref().map(|d| d[last]);
    summary.regret = Some(accumulate_regret(traj));
    summary.stopped_at_floor = traj.stopped_at_floor;
}

fn build_flow(config: &RunConfig, spec: &OptimizerSpec, obj: std::sync::Arc<dyn Objective>) -> Result<Box<dyn Flow>> {
    match &spec.kind {
        OptimizerKind::Fxts { .. } => {
            let field = spec.fxts_field()?.expect("fxts kind has a field");
            wrap_noise(config, FxtsFlow::from_field(obj, field))
        }
        OptimizerKind::FxtsMomentum { .. } => {
            let (params, _) = spec.momentum_params(config.eta_or_lr)?.expect("momentum kind has parameters");
            wrap_noise(config, MomentumFlow::new(obj, params)?)
        }
        OptimizerKind::Gd => wrap_noise(config, GradientFlow::new(obj)),
        _ => Err(Error::Config(vec![format!(
            "optimizer `{}` has no continuous-time form",
            spec.label()
        )])),
    }
}

fn wrap_noise<F: Flow + 'static>(config: &RunConfig, flow: F) -> Result<Box<dyn Flow>> {
    match (config.mode, &config.noise) {
        (Mode::ContinuousNoisy, Some(noise)) => Ok(Box::new(perturbed_field(flow, noise)?)),
        _ => Ok(Box::new(flow)),
    }
}

/// Closed-form settling and regret bounds for a continuous fixed-time run, with notes
/// explaining any bound that cannot be formed.
fn continuous_bounds(config: &RunConfig, spec: &OptimizerSpec, obj: &dyn Objective, v0: f64) -> (Option<f64>, Option<f64>, Vec<String>) {
    let mut notes = Vec::new();
    let Some(params) = spec.fxts_params() else {
        return (None, None, notes);
    };
    let Some(mu) = obj.pl_modulus() else {
        notes.push("objective has no PL modulus; no bounds".into());
        return (None, None, notes);
    };
    let constants = match (config.mode, &config.noise) {
        (Mode::ContinuousNoisy, Some(noise)) => robust_constants(&params, mu, noise.level),
        _ => lyapunov_constants(&params, mu),
    };
    match constants {
        Ok(c) => {
            let regret = regret_bound(&c, v0).ok().map(|b| b.total());
            if config.mode == Mode::ContinuousNoisy {
                (Some(settling_bound(&c)), None, notes)
            } else {
                (Some(settling_bound(&c)), regret, notes)
            }
        }
        Err(e) => {
            notes.push(format!("no settling bound: {e}"));
            (None, None, notes)
        }
    }
}

/// Run one optimizer of `config` from `x0` without writing anything.
pub fn execute(config: &RunConfig, spec: &OptimizerSpec, x0: &Vector) -> Result<RunOutput> {
    let obj = config.problem.build()?;
    let threshold = config.thresholds.discrete(obj.as_ref());
    let mut summary = empty_summary(config, spec, x0, threshold);
    let start = Instant::now();
    let trajectory = match config.mode {
        Mode::Discrete => {
            let opts = DiscreteOptions {
                eta: config.eta_or_lr,
                max_iters: config.max_iters,
                threshold,
                stop_at_threshold: config.stop_at_threshold,
            };
            let run = run_discrete(obj.as_ref(), spec, x0, &opts)?;
            summary.iterations = run.iterations;
            summary.iters_to_threshold = run.iters_to_threshold;
            summary.diverged = run.diverged;
            summary.converged = run.iters_to_threshold.is_some() && !run.diverged;
            fill_final(&mut summary, &run.trajectory);
            Some(run.trajectory)
        }
        Mode::Continuous | Mode::ContinuousNoisy => {
            let flow = build_flow(config, spec, obj.clone())?;
            let v0 = obj.value(x0) - obj.f_star().unwrap_or(0.0);
            let (settle_bound, regret_b, notes) = continuous_bounds(config, spec, obj.as_ref(), v0);
            summary.notes.extend(notes);
            summary.regret_bound = regret_b;
            match integrate_flow(flow.as_ref(), x0, &config.integrator_config(), &mut []) {
                Ok(traj) => {
                    let mut record = detect_settling(&traj, config.thresholds.settle);
                    record.bound = settle_bound;
                    summary.iterations = traj.len() as u64 - 1;
                    summary.iters_to_threshold = (0..traj.len())
                        .find(|&i| threshold.met(&traj, i))
                        .map(|i| i as u64);
                    summary.converged = record.settle_time.is_some();
                    summary.settling = Some(record);
                    fill_final(&mut summary, &traj);
                    Some(traj)
                }
                Err(Error::Diverged { t, last }) => {
                    summary.diverged = true;
                    summary.error = Some(format!("diverged at t = {t}, last finite state {last:?}"));
                    None
                }
                Err(e) => return Err(e),
            }
        }
    };
    summary.wall_time_s = start.elapsed().as_secs_f64();
    Ok(RunOutput { summary, trajectory })
}

/// Summary JSON with the resolved config attached.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SummaryFile {
    pub summary: RunSummary,
    pub config: RunConfig,
}

fn trajectory_csv(traj: &Trajectory, stride: usize) -> Result<Vec<u8>> {
    let mut buf = Vec::new();
    traj.write_csv(&mut buf, stride)?;
    Ok(buf)
}

/// Files written by [`run`].
#[derive(Debug, Clone)]
pub struct RunArtifacts {
    pub output: RunOutput,
    pub csv: Option<PathBuf>,
    pub summary_path: PathBuf,
}

/// Validate, execute and write `<label>.csv` and `<label>.summary.json`.
pub fn run(config: &RunConfig) -> Result<RunArtifacts> {
    config.validate()?;
    let spec = config
        .optimizer
        .clone()
        .or_else(|| config.optimizers.first().cloned())
        .ok_or_else(|| Error::Config(vec!["config names no optimizer".into()]))?;
    let obj = config.problem.build()?;
    let x0 = config.x0.resolve(obj.as_ref(), config.seed)?;
    let output = execute(config, &spec, &x0)?;
    let dir = config.resolved_output_dir();
    let stem = file_stem(&output.summary.label);
    let csv = match &output.trajectory {
        Some(traj) => {
            let path = dir.join(format!("{stem}.csv"));
            write_atomic(&path, &trajectory_csv(traj, config.stride)?)?;
            Some(path)
        }
        None => None,
    };
    let summary_path = dir.join(format!("{stem}.summary.json"));
    write_json(
        &summary_path,
        &SummaryFile {
            summary: output.summary.clone(),
            config: config.clone(),
        },
    )?;
    Ok(RunArtifacts {
        output,
        csv,
        summary_path,
    })
}

/// One ordering expectation and whether it held.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OrderCheck {
    pub faster: String,
    pub slower: String,
    pub faster_iters: Option<u64>,
    pub slower_iters: Option<u64>,
    pub holds: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CompareEntry {
    pub label: String,
    pub summary: Option<RunSummary>,
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComparisonReport {
    pub problem: String,
    pub x0: Vec<f64>,
    pub entries: Vec<CompareEntry>,
    /// Labels by increasing iterations-to-threshold; runs that never got there come last.
    pub ordering: Vec<String>,
    pub checks: Vec<OrderCheck>,
}

impl ComparisonReport {
    pub fn iters(&self, label: &str) -> Option<u64> {
        self.entries
            .iter()
            .find(|e| e.label == label)
            .and_then(|e| e.summary.as_ref())
            .and_then(|s| s.iters_to_threshold)
    }

    pub fn passed(&self) -> bool {
        self.entries.iter().all(|e| e.error.is_none()) && self.checks.iter().all(|c| c.holds)
    }
}

/// `a` strictly before `b`; a run that never reached the threshold counts as infinitely slow.
fn strictly_faster(a: Option<u64>, b: Option<u64>) -> bool {
    match (a, b) {
        (Some(a), Some(b)) => a < b,
        (Some(_), None) => true,
        (None, _) => false,
    }
}

/// Runs of every optimizer from one shared starting point.
#[derive(Debug, Clone)]
pub struct Comparison {
    pub report: ComparisonReport,
    pub trajectories: Vec<(String, Option<Trajectory>)>,
}

/// Run the roster in parallel without writing anything.
pub fn compare_runs(config: &RunConfig) -> Result<Comparison> {
    config.validate()?;
    if config.mode != Mode::Discrete {
        return Err(Error::Config(vec!["compare supports discrete mode only".into()]));
    }
    let roster = config.roster();
    if roster.len() < 2 {
        return Err(Error::Config(vec!["compare needs at least two optimizers".into()]));
    }
    let obj = config.problem.build()?;
    let x0 = config.x0.resolve(obj.as_ref(), config.seed)?;
    let results: Vec<(String, Result<RunOutput>)> = roster
        .par_iter()
        .map(|spec| (spec.label(), execute(config, spec, &x0)))
        .collect();
    let mut entries = Vec::new();
    let mut trajectories = Vec::new();
    for (label, res) in results {
        match res {
            Ok(out) => {
                entries.push(CompareEntry {
                    label: label.clone(),
                    summary: Some(out.summary),
                    error: None,
                });
                trajectories.push((label, out.trajectory));
            }
            Err(e) => {
                entries.push(CompareEntry {
                    label: label.clone(),
                    summary: None,
                    error: Some(e.to_string()),
                });
                trajectories.push((label, None));
            }
        }
    }
    let mut report = ComparisonReport {
        problem: config.problem.name().to_string(),
        x0: x0.iter().copied().collect(),
        entries,
        ordering: Vec::new(),
        checks: Vec::new(),
    };
    let mut order: Vec<(Option<u64>, String)> = report
        .entries
        .iter()
        .map(|e| (report.iters(&e.label), e.label.clone()))
        .collect();
    order.sort_by_key(|(it, label)| (it.is_none(), it.unwrap_or(0), label.clone()));
    report.ordering = order.into_iter().map(|(_, l)| l).collect();
    report.checks = config
        .expect_order
        .iter()
        .map(|[a, b]| {
            let (fa, fb) = (report.iters(a), report.iters(b));
            OrderCheck {
                faster: a.clone(),
                slower: b.clone(),
                faster_iters: fa,
                slower_iters: fb,
                holds: strictly_faster(fa, fb),
            }
        })
        .collect();
    Ok(Comparison { report, trajectories })
}

/// Wide CSV keyed by iteration: `iter,<label>_f_gap,<label>_dist_opt,...`.
pub fn merged_csv(trajectories: &[(String, Option<Trajectory>)], stride: usize) -> Result<Vec<u8>> {
    let stride = stride.max(1);
    let mut w = csv::Writer::from_writer(Vec::new());
    let mut header = vec!["iter".to_string()];
    for (label, _) in trajectories {
        header.push(format!("{label}_f_gap"));
        header.push(format!("{label}_dist_opt"));
    }
    w.write_record(&header)?;
    let rows = trajectories
        .iter()
        .filter_map(|(_, t)| t.as_ref().map(Trajectory::len))
        .max()
        .unwrap_or(0);
    for i in (0..rows).filter(|i| i % stride == 0 || i + 1 == rows) {
        let mut row = vec![i.to_string()];
        for (_, traj) in trajectories {
            match traj {
                Some(t) if i < t.len() => {
                    row.push(t.values[i].to_string());
                    row.push(t.dist_to_opt.as_ref().map_or(String::new(), |d| d[i].to_string()));
                }
                _ => {
                    row.push(String::new());
                    row.push(String::new());
                }
            }
        }
        w.write_record(&row)?;
    }
    w.into_inner().map_err(|e| Error::Io(e.into_error()))
}

/// Run the roster, write per-optimizer CSVs, `compare.csv` and `comparison.json`.
pub fn compare(config: &RunConfig) -> Result<ComparisonReport> {
    let cmp = compare_runs(config)?;
    let dir = config.resolved_output_dir();
    for (label, traj) in &cmp.trajectories {
        if let Some(t) = traj {
            write_atomic(&dir.join(format!("{}.csv", file_stem(label))), &trajectory_csv(t, config.stride)?)?;
        }
    }
    write_atomic(&dir.join("compare.csv"), &merged_csv(&cmp.trajectories, config.stride)?)?;
    write_json(
        &dir.join("comparison.json"),
        &serde_json::json!({ "report": &cmp.report, "config": config }),
    )?;
    Ok(cmp.report)
}
