//! Continuous-time runs: vector fields as ODE systems, RK4 integration,
//! settling detection, regret and admissible disturbances.

mod integrator;
mod noise;
mod settling;
mod systems;
mod trajectory;

pub use integrator::{integrate_flow, IntegratorConfig, Monitor, Sample, StopBelow};
pub use noise::{perturbed_field, Disturbance, NoiseMode, NoiseSpec, PerturbedFlow};
pub use settling::{detect_settling, SettlingDetector, SettlingRecord};
pub use systems::{Flow, FxtsFlow, GradientFlow, MomentumFlow};
pub use trajectory::{accumulate_regret, TimeBase, Trajectory};
