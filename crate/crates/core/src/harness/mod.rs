//! Experiment driver: declarative run configs, single runs, comparisons,
//! parameter sweeps and the verification suites behind `fxts verify`.

mod config;
mod output;
mod runner;
mod sweep;
mod verify;

pub use config::{Mode, ProblemSpec, RunConfig, SubstepSettings, Thresholds, X0Spec, CONFIG_VERSION, OUTPUT_DIR_ENV};
pub use output::{write_atomic, write_json};
pub use runner::{
    compare, compare_runs, execute, merged_csv, run, CompareEntry, Comparison, ComparisonReport, OrderCheck,
    RunArtifacts, RunOutput, RunSummary, SummaryFile,
};
pub use sweep::{parse_value, set_path, sweep, sweep_csv, sweep_runs, SweepPoint, SweepReport};
pub use verify::{
    discretization_setup, rosenbrock_roster_config, settling_params, sweep_starts, verify, CheckResult, Suite,
    VerifyOptions, VerifyReport,
};
