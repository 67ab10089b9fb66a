use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::ModelParams;
use crate::mpc::{AblationMode, MpcConfig};
use crate::orbit::GaitCommand;

/// Constant force on the pelvis over a time window.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Push {
    pub start: f64,
    pub duration: f64,
    /// World-frame force `[x, y]` in newtons.
    pub force: [f64; 2],
}

impl Push {
    pub fn end(&self) -> f64 {
        self.start + self.duration
    }

    pub fn active(&self, t: f64) -> bool {
        t >= self.start && t < self.end()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    pub command: GaitCommand,
    pub params: ModelParams,
    #[serde(default)]
    pub pushes: Vec<Push>,
    #[serde(default)]
    pub mpc: MpcConfig,
    #[serde(default = "default_ablation")]
    pub ablation: AblationMode,
    /// Simulated time [s].
    pub duration: f64,
    #[serde(default = "default_replan_rate")]
    pub replan_rate: f64,
    #[serde(default = "default_log_rate")]
    pub log_rate: f64,
    /// Unused by the deterministic harness; kept for reproducible extensions.
    #[serde(default)]
    pub seed: u64,
}

fn default_ablation() -> AblationMode {
    AblationMode::Full
}

fn default_replan_rate() -> f64 {
    50.0
}

fn default_log_rate() -> f64 {
    100.0
}

impl Scenario {
    pub fn new(command: GaitCommand, params: ModelParams, duration: f64) -> Self {
        Scenario {
            command,
            params,
            pushes: Vec::new(),
            mpc: MpcConfig::default(),
            ablation: AblationMode::Full,
            duration,
            replan_rate: default_replan_rate(),
            log_rate: default_log_rate(),
            seed: 0,
        }
    }

    pub fn with_push(mut self, start: f64, duration: f64, force: [f64; 2]) -> Self {
        self.pushes.push(Push { start, duration, force });
        self
    }

    pub fn with_ablation(mut self, ablation: AblationMode) -> Self {
        self.ablation = ablation;
        self
    }

    pub fn validate(&self) -> Result<()> {
        self.command.validate()?;
        self.params.validate()?;
        self.mpc.validate()?;
        if !(self.duration.is_finite() && self.duration > 0.0) {
            return Err(Error::Scenario(format!("duration must be > 0, got {}", self.duration)));
        }
        if !(self.replan_rate.is_finite() && self.replan_rate > 0.0) {
            return Err(Error::Scenario(format!("replan rate must be > 0, got {}", self.replan_rate)));
        }
        if !(self.log_rate.is_finite() && self.log_rate > 0.0) {
            return Err(Error::Scenario(format!("log rate must be > 0, got {}", self.log_rate)));
        }
        for (i, p) in self.pushes.iter().enumerate() {
            let ok = p.start.is_finite()
                && p.duration.is_finite()
                && p.start >= 0.0
                && p.duration >= 0.0
                && p.end() <= self.duration + 1e-12
                && p.force.iter().all(|f| f.is_finite());
            if !ok {
                return Err(Error::Scenario(format!(
                    "push {i} must be finite and lie within [0, {}] s",
                    self.duration
                )));
            }
        }
        Ok(())
    }

    /// Disturbance acceleration at time `t`.
    pub fn disturbance(&self, t: f64) -> [f64; 2] {
        let mut a = [0.0; 2];
        for p in self.pushes.iter().filter(|p| p.active(t)) {
            a[0] += p.force[0] / self.params.mass;
            a[1] += p.force[1] / self.params.mass;
        }
        a
    }

    /// Start of the first push, if any.
    pub fn first_push(&self) -> Option<f64> {
        self.pushes.iter().map(|p| p.start).min_by(f64::total_cmp)
    }
}
