//! Swarm flocking simulation with DPD-style ambient forces and navigational
//! feedback toward a virtual leader, plus the analytic bounds and parameter
//! sweeps built on top of it.

// `!(x > 0.0)` is used on purpose: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod engine;
pub mod error;
pub mod leader;
pub mod metrics;
pub mod model;
pub mod sweep;
pub mod theory;

pub use engine::{run, run_from, sample_initial, verlet_step, InitSpec, RunAbort, RunConfig, TrajectoryRecord};
pub use error::{Error, Result};
pub use leader::{build_mission, LeaderState, LeaderTrajectory, MissionPath, MissionSpec, Segment};
pub use metrics::{classify_flocking, task_functionals, FlockLevel, FlockVerdict, TaskFunctionals};
pub use model::{ControlParams, GeneratingFunctionSpec, GeneratingKind, ModelParams, SwarmState, VecD, WeightKind};
pub use sweep::{GridSpec, SweepRecord, SweepStatus};
