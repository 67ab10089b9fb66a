//! Dense optimisation routines used by the planner.

pub mod qp;
pub mod sqp;
