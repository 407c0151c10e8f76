use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use serde_json::Value;

use super::config::RunConfig;
use super::output::{write_atomic, write_json};
use super::runner::{execute, RunOutput, RunSummary};
use crate::{Error, Result};

/// Top-level config keys that name the same field.
const ALIASES: &[&str] = &["eta_or_lr", "eta", "lr"];

/// Set `value` at a dotted `path` inside a JSON document, creating objects as needed.
///
/// Setting any spelling of the step size replaces whichever spelling the document used.
pub fn set_path(doc: &mut Value, path: &str, value: Value) -> Result<()> {
    if ALIASES.contains(&path) {
        if let Some(obj) = doc.as_object_mut() {
            for alias in ALIASES {
                obj.remove(*alias);
            }
        }
    }
    let parts: Vec<&str> = path.split('.').collect();
    if parts.iter().any(|p| p.is_empty()) {
        return Err(Error::Config(vec![format!("invalid axis `{path}`")]));
    }
    let mut cur = doc;
    for part in &parts[..parts.len() - 1] {
        if !cur.is_object() {
            return Err(Error::Config(vec![format!("axis `{path}` passes through a non-object at `{part}`")]));
        }
        cur = cur
            .as_object_mut()
            .expect("checked above")
            .entry(part.to_string())
            .or_insert_with(|| Value::Object(Default::default()));
    }
    match cur.as_object_mut() {
        Some(obj) => {
            obj.insert(parts[parts.len() - 1].to_string(), value);
            Ok(())
        }
        None => Err(Error::Config(vec![format!("axis `{path}` does not end in an object field")])),
    }
}

/// Parse a command-line value as JSON, falling back to a string.
pub fn parse_value(text: &str) -> Value {
    serde_json::from_str(text).unwrap_or_else(|_| Value::String(text.to_string()))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepPoint {
    pub value: Value,
    pub summary: Option<RunSummary>,
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepReport {
    pub axis: String,
    pub points: Vec<SweepPoint>,
}

/// One run per axis value, in parallel; per-value failures are recorded and the sweep goes on.
pub fn sweep_runs(template: &Value, axis: &str, values: &[Value]) -> Result<(SweepReport, Vec<Option<RunOutput>>)> {
    if values.is_empty() {
        return Err(Error::Config(vec!["sweep needs at least one value".into()]));
    }
    let results: Vec<(SweepPoint, Option<RunOutput>)> = values
        .par_iter()
        .map(|v| {
            let outcome = (|| {
                let mut doc = template.clone();
                set_path(&mut doc, axis, v.clone())?;
                let config: RunConfig =
                    serde_json::from_value(doc).map_err(|e| Error::Config(vec![e.to_string()]))?;
                config.validate()?;
                let spec = config.roster().into_iter().next().expect("validated roster is non-empty");
                let obj = config.problem.build()?;
                let x0 = config.x0.resolve(obj.as_ref(), config.seed)?;
                execute(&config, &spec, &x0)
            })();
            match outcome {
                Ok(out) => (
                    SweepPoint {
                        value: v.clone(),
                        summary: Some(out.summary.clone()),
                        error: None,
                    },
                    Some(out),
                ),
                Err(e) => (
                    SweepPoint {
                        value: v.clone(),
                        summary: None,
                        error: Some(e.to_string()),
                    },
                    None,
                ),
            }
        })
        .collect();
    let (points, outputs) = results.into_iter().unzip();
    Ok((
        SweepReport {
            axis: axis.to_string(),
            points,
        },
        outputs,
    ))
}

fn value_text(v: &Value) -> String {
    match v {
        Value::String(s) => s.clone(),
        other => other.to_string(),
    }
}

/// Long CSV `axis_value,iter,f_gap,grad_norm,dist_opt`; `iter` is the iteration
/// index for discrete runs and flow time for continuous ones.
pub fn sweep_csv(report: &SweepReport, outputs: &[Option<RunOutput>], stride: usize) -> Result<Vec<u8>> {
    let stride = stride.max(1);
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["axis_value", "iter", "f_gap", "grad_norm", "dist_opt"])?;
    for (point, out) in report.points.iter().zip(outputs) {
        let Some(traj) = out.as_ref().and_then(|o| o.trajectory.as_ref()) else {
            continue;
        };
        let last = traj.len() - 1;
        for i in (0..traj.len()).filter(|i| i % stride == 0 || *i == last) {
            w.write_record([
                value_text(&point.value),
                traj.times[i].to_string(),
                traj.values[i].to_string(),
                traj.grad_norms[i].to_string(),
                traj.dist_to_opt.as_ref().map_or(String::new(), |d| d[i].to_string()),
            ])?;
        }
    }
    w.into_inner().map_err(|e| Error::Io(e.into_error()))
}

/// Run the sweep and write `sweep.csv` and `sweep.json` to the template's output directory.
pub fn sweep(template: &Value, axis: &str, values: &[Value]) -> Result<SweepReport> {
    let base: RunConfig =
        serde_json::from_value(template.clone()).map_err(|e| Error::Config(vec![e.to_string()]))?;
    let (report, outputs) = sweep_runs(template, axis, values)?;
    let dir = base.resolved_output_dir();
    write_atomic(&dir.join("sweep.csv"), &sweep_csv(&report, &outputs, base.stride)?)?;
    write_json(&dir.join("sweep.json"), &report)?;
    Ok(report)
}
