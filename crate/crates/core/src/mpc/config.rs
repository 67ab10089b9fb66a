use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{DomainId, PlanarState};
use crate::optim::sqp::SqpOptions;
use crate::orbit::{StanceSide, MIN_SWING_TIME};

/// Diagonal weights of the planner cost.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct MpcWeights {
    /// On `(p, L, p_zmp)` of the end-of-UA states, both axes.
    pub w_x: [f64; 3],
    pub w_sw: f64,
    pub w_t: f64,
    /// Time-to-impact of the current domain.
    pub w_ti: f64,
    pub w_delta: f64,
    pub w_rate: f64,
}

impl Default for MpcWeights {
    fn default() -> Self {
        MpcWeights {
            w_x: [100.0, 10.0, 1.0],
            w_sw: 1.0,
            w_t: 10.0,
            w_ti: 10.0,
            w_delta: 100.0,
            w_rate: 0.1,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct MpcConfig {
    /// Number of future steps after the current one.
    pub n_preview: usize,
    pub weights: MpcWeights,
    pub t_min_swing: f64,
    /// Bound on `|u_sw,x|`.
    pub max_reach_x: f64,
    /// Lateral placement magnitude range, sign set by the new stance side.
    pub lateral_min: f64,
    pub lateral_max: f64,
    /// Durations and time-to-impact are bounded by this multiple of nominal.
    pub duration_factor: f64,
    /// Half width of the placement box used by the no-foot-placement ablation.
    pub foot_relaxation: f64,
    pub solver: SqpOptions,
}

impl Default for MpcConfig {
    fn default() -> Self {
        MpcConfig {
            n_preview: 2,
            weights: MpcWeights::default(),
            t_min_swing: MIN_SWING_TIME,
            max_reach_x: 0.6,
            lateral_min: 0.08,
            lateral_max: 0.6,
            duration_factor: 2.0,
            foot_relaxation: 0.05,
            solver: SqpOptions::default(),
        }
    }
}

impl MpcConfig {
    pub fn validate(&self) -> Result<()> {
        let w = &self.weights;
        let all = [w.w_x[0], w.w_x[1], w.w_x[2], w.w_sw, w.w_t, w.w_ti, w.w_delta, w.w_rate];
        if all.iter().any(|v| !(v.is_finite() && *v >= 0.0)) {
            return Err(Error::Parameter("MPC weights must be finite and >= 0".into()));
        }
        if w.w_x[0] <= 0.0 || w.w_x[1] <= 0.0 {
            return Err(Error::Parameter("state weights on p and L must be positive".into()));
        }
        if self.n_preview < 1 {
            return Err(Error::Parameter("n_preview must be >= 1".into()));
        }
        if !(self.max_reach_x > 0.0 && self.lateral_min >= 0.0 && self.lateral_max > self.lateral_min) {
            return Err(Error::Parameter("foot placement bounds are degenerate".into()));
        }
        if !(self.duration_factor >= 1.0 && self.t_min_swing >= 0.0 && self.foot_relaxation >= 0.0) {
            return Err(Error::Parameter("timing bounds are degenerate".into()));
        }
        if self.solver.max_iter == 0 || !(self.solver.feas_tol > 0.0 && self.solver.opt_tol > 0.0) {
            return Err(Error::Parameter("solver tolerances must be positive".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum AblationMode {
    Full,
    NoZmp,
    NoStepTime,
    NoFootPlacement,
}

impl AblationMode {
    pub const ALL: [AblationMode; 4] = [
        AblationMode::Full,
        AblationMode::NoZmp,
        AblationMode::NoStepTime,
        AblationMode::NoFootPlacement,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            AblationMode::Full => "full",
            AblationMode::NoZmp => "no-zmp",
            AblationMode::NoStepTime => "no-step-time",
            AblationMode::NoFootPlacement => "no-foot-placement",
        }
    }
}

impl std::fmt::Display for AblationMode {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

impl std::str::FromStr for AblationMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        AblationMode::ALL
            .into_iter()
            .find(|m| m.as_str() == s)
            .ok_or_else(|| Error::Usage(format!("unknown ablation mode '{s}'")))
    }
}

/// Measured state handed to the planner at a replan instant.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MpcNow {
    /// Only `p` and `L` of each axis are used; the ZMP comes from `p_zmp_now`.
    pub x_now: PlanarState,
    pub domain_now: DomainId,
    /// Time already spent in the current domain.
    pub t_passed: f64,
    /// Foot under the current pivot.
    pub stance_side: StanceSide,
    /// Placement of the front foot, required in OA.
    #[serde(default)]
    pub u_sw_current: Option<[f64; 2]>,
    pub p_zmp_now: [f64; 2],
    /// Time since the start of the current FA phase (single-support time
    /// already used in this step). Ignored in OA.
    #[serde(default)]
    pub step_elapsed: f64,
}

impl MpcNow {
    /// Planner input from a full state, with the ZMP taken from the state.
    pub fn from_state(x: PlanarState, domain: DomainId, t_passed: f64, stance: StanceSide) -> Self {
        MpcNow {
            x_now: x,
            domain_now: domain,
            t_passed,
            stance_side: stance,
            u_sw_current: None,
            p_zmp_now: [x.sagittal.p_zmp, x.coronal.p_zmp],
            step_elapsed: t_passed,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.t_passed.is_finite() && self.t_passed >= 0.0) {
            return Err(Error::Usage(format!("t_passed must be >= 0, got {}", self.t_passed)));
        }
        if !(self.step_elapsed.is_finite() && self.step_elapsed >= 0.0) {
            return Err(Error::Usage("step_elapsed must be >= 0".into()));
        }
        let finite = self.x_now.sagittal.is_finite()
            && self.x_now.coronal.is_finite()
            && self.p_zmp_now.iter().all(|v| v.is_finite());
        if !finite {
            return Err(Error::Usage("current state must be finite".into()));
        }
        match (self.domain_now, self.u_sw_current) {
            (DomainId::Oa, None) => Err(Error::Usage("OA requires the current foot placement".into())),
            (DomainId::Oa, Some(u)) if !u.iter().all(|v| v.is_finite()) => {
                Err(Error::Usage("current foot placement must be finite".into()))
            }
            (DomainId::Fa | DomainId::Ua, Some(_)) => {
                Err(Error::Usage("current foot placement is only meaningful in OA".into()))
            }
            _ => Ok(()),
        }
    }
}
