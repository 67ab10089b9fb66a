//! Closed-loop reduced-order simulation with push disturbances.

pub mod metrics;
pub mod run;
pub mod scenario;
pub mod sweep;

pub use metrics::{recovery_metrics, step_deviations, RecoveryMetrics, Thresholds};
pub use run::{run_scenario, ImpactRecord, LogSample, SolveRecord, StepRecord, TrajectoryLog};
pub use scenario::{Push, Scenario};
pub use sweep::{push_envelope_sweep, Envelope, SweepCell, SweepTable};
