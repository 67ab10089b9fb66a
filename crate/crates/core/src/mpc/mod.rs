//! Step-to-step predictive planner over foot placement, domain durations and
//! ZMP motion.

pub mod config;
pub mod layout;
pub mod problem;
pub mod solution;

pub use config::{AblationMode, MpcConfig, MpcNow, MpcWeights};
pub use layout::Layout;
pub use problem::{build_problem, MpcProblem};
pub use solution::{shift_warm_start, solve, InitialGuess, MpcDiagnostics, MpcSolution, MpcStatus, NowInputs};
