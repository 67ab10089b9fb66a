//! Reduced-order walking model with step timing, foot placement and ZMP
//! control, plus a step-to-step predictive planner and a closed-loop
//! simulator.

pub mod error;
pub mod gait;
pub mod model;
pub mod mpc;
pub mod optim;
pub mod orbit;
pub mod sim;
pub mod support;

pub use error::{Error, Result};
