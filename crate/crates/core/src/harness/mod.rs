//! Mission simulation: configuration, kinematic motion, the
//! perception-planning-execution loop and its logs.

mod config;
mod logs;
mod motion;
mod run;

pub use config::{CameraSettings, ConfigError, MotionLimits, PlannerKind, RunConfig, KEYS};
pub use logs::{
    parse_metrics, LogError, RunLogs, GAINS_HEADER, METRICS_HEADER, ROUNDS_HEADER, TRAJECTORY_HEADER,
};
pub use motion::{advance_motion, MotionState, YAW_TOLERANCE};
pub use run::{run, run_to_dir, HarnessError, RoundSummary, RunOutcome, StopReason};

/// Run configurations shipped next to the bundled scenes.
pub mod bundled {
    pub const COLLAPSED_ROOM: &str = include_str!("../../scenes/collapsed_room.cfg");
    pub const TWO_TARGETS: &str = include_str!("../../scenes/two_targets.cfg");
}
