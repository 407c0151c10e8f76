use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

use fxts::fixtures;
use fxts::harness::{self, parse_value, RunConfig, Suite, VerifyOptions};
use fxts::Error;

/// Fixed-time stable optimization flows: runs, comparisons, sweeps and checks.
#[derive(Debug, Parser)]
#[command(name = "fxts", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Run the single optimizer of a config and write `<label>.csv` and `<label>.summary.json`.
    Run {
        #[arg(short, long)]
        config: PathBuf,
    },
    /// Run every optimizer of a discrete config from one start and rank them.
    Compare {
        #[arg(short, long)]
        config: PathBuf,
    },
    /// Run one verification suite, or `all`.
    Verify {
        suite: String,
        /// JSON file overriding suite options.
        #[arg(short, long)]
        config: Option<PathBuf>,
        #[arg(long, value_enum, default_value_t = Format::Text)]
        format: Format,
        /// Also write the JSON report here.
        #[arg(long)]
        report: Option<PathBuf>,
    },
    /// Repeat a run over the values of one dotted config field.
    Sweep {
        #[arg(short, long)]
        config: PathBuf,
        #[arg(long)]
        axis: String,
        /// Comma-separated values, each parsed as JSON (bare words become strings).
        #[arg(long, value_delimiter = ',', required = true)]
        values: Vec<String>,
    },
    /// Check the stored reference values, or regenerate them for review.
    Fixtures {
        #[arg(value_enum)]
        action: FixtureAction,
        /// Stored fixture file; the bundled one by default.
        #[arg(long)]
        path: Option<PathBuf>,
        /// With `regen`, write the recomputed fixtures here. The stored file is never overwritten implicitly.
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum Format {
    Text,
    Json,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum FixtureAction {
    Check,
    Regen,
}

/// Outcome of a subcommand that ran to completion.
enum Outcome {
    Ok,
    Failed,
}

fn load_template(path: &Path) -> Result<serde_json::Value, Error> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| Error::Config(vec![format!("cannot read {}: {e}", path.display())]))?;
    serde_json::from_str(&text).map_err(|e| Error::Config(vec![e.to_string()]))
}

fn load_options(path: Option<&Path>) -> Result<VerifyOptions, Error> {
    match path {
        None => Ok(VerifyOptions::default()),
        Some(p) => serde_json::from_value(load_template(p)?).map_err(|e| Error::Config(vec![e.to_string()])),
    }
}

fn dispatch(cli: Cli) -> Result<Outcome, Error> {
    match cli.command {
        Command::Run { config } => {
            let cfg = RunConfig::load(&config)?;
            let art = harness::run(&cfg)?;
            let s = &art.output.summary;
            println!("{}", serde_json::to_string_pretty(s)?);
            if let Some(csv) = &art.csv {
                eprintln!("wrote {}", csv.display());
            }
            eprintln!("wrote {}", art.summary_path.display());
            Ok(if s.error.is_some() || s.diverged { Outcome::Failed } else { Outcome::Ok })
        }
        Command::Compare { config } => {
            let cfg = RunConfig::load(&config)?;
            let report = harness::compare(&cfg)?;
            for e in &report.entries {
                let iters = e.summary.as_ref().and_then(|s| s.iters_to_threshold);
                match (&e.error, iters) {
                    (Some(err), _) => println!("{:>16}  error: {err}", e.label),
                    (None, Some(k)) => println!("{:>16}  {k} iterations", e.label),
                    (None, None) => println!("{:>16}  threshold not reached", e.label),
                }
            }
            println!("ordering: {}", report.ordering.join(" < "));
            for c in &report.checks {
                println!(
                    "{}  {} before {}",
                    if c.holds { "PASS" } else { "FAIL" },
                    c.faster,
                    c.slower
                );
            }
            Ok(if report.passed() { Outcome::Ok } else { Outcome::Failed })
        }
        Command::Verify {
            suite,
            config,
            format,
            report,
        } => {
            let suite: Suite = suite.parse()?;
            let opts = load_options(config.as_deref())?;
            let rep = harness::verify(suite, &opts)?;
            match format {
                Format::Text => print!("{}", rep.to_text()),
                Format::Json => println!("{}", serde_json::to_string_pretty(&rep)?),
            }
            if let Some(path) = report {
                harness::write_json(&path, &rep)?;
            }
            Ok(if rep.passed() { Outcome::Ok } else { Outcome::Failed })
        }
        Command::Sweep { config, axis, values } => {
            let template = load_template(&config)?;
            let values: Vec<_> = values.iter().map(|v| parse_value(v)).collect();
            let rep = harness::sweep(&template, &axis, &values)?;
            let mut failed = false;
            for p in &rep.points {
                match (&p.error, &p.summary) {
                    (Some(err), _) => {
                        failed = true;
                        println!("{axis} = {}: error: {err}", p.value)
                    }
                    (None, Some(s)) => println!(
                        "{axis} = {}: iters_to_threshold {:?}, final f_gap {:?}",
                        p.value, s.iters_to_threshold, s.final_f_gap
                    ),
                    (None, None) => {}
                }
            }
            Ok(if failed { Outcome::Failed } else { Outcome::Ok })
        }
        Command::Fixtures { action, path, out } => {
            let path = path.unwrap_or_else(fixtures::default_path);
            let (fresh, bad) = match action {
                FixtureAction::Check => (None, fixtures::check(&fixtures::load(&path)?)?),
                FixtureAction::Regen => {
                    let (fresh, bad) = fixtures::regenerate(&path)?;
                    (Some(fresh), bad)
                }
            };
            for m in &bad {
                println!(
                    "MISMATCH {}: stored {:?}, recomputed {:?} (tolerance {:e})",
                    m.id, m.stored, m.computed, m.tolerance
                );
            }
            println!("{} mismatched against {}", bad.len(), path.display());
            if let (Some(fresh), Some(out)) = (fresh, out) {
                fixtures::write(&out, &fresh)?;
                println!("wrote {} recomputed fixtures to {}", fresh.fixtures.len(), out.display());
            }
            Ok(if bad.is_empty() { Outcome::Ok } else { Outcome::Failed })
        }
    }
}

fn main() -> ExitCode {
    match dispatch(Cli::parse()) {
        Ok(Outcome::Ok) => ExitCode::SUCCESS,
        Ok(Outcome::Failed) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e}");
            match e {
                Error::Config(_) | Error::InvalidParams(_) | Error::InvalidProblem(_) | Error::Json(_) => {
                    ExitCode::from(2)
                }
                _ => ExitCode::from(1),
            }
        }
    }
}
