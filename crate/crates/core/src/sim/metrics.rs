use serde::{Deserialize, Serialize};

use crate::sim::run::TrajectoryLog;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Thresholds {
    /// Allowed deviation of the per-step mean velocity from the reference.
    pub velocity_tol: f64,
    /// Number of final steps that must be within tolerance.
    pub final_steps: usize,
    /// Distance of the ZMP from its support region still counted as inside.
    pub hull_tol: f64,
}

impl Default for Thresholds {
    fn default() -> Self {
        Thresholds { velocity_tol: 0.05, final_steps: 3, hull_tol: 1e-6 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RecoveryMetrics {
    pub success: bool,
    /// Steps, counted from the first push, until the velocity stays within
    /// tolerance for good. Equals the number of evaluated steps when it
    /// never settles.
    pub settling_steps: usize,
    pub peak_velocity_deviation: f64,
    /// ZMP samples outside the support region plus placement bound
    /// violations.
    pub constraint_violations: usize,
    pub max_u_sw: f64,
    pub peak_coronal_speed: f64,
    pub peak_sagittal_speed: f64,
    pub steps_evaluated: usize,
    pub aborted: Option<String>,
    pub thresholds: Thresholds,
}

/// Deviation of each complete step's mean velocity from its reference.
pub fn step_deviations(log: &TrajectoryLog) -> Vec<(f64, f64)> {
    log.steps
        .iter()
        .filter_map(|s| {
            s.velocity.map(|v| (s.t, (v[0] - s.reference[0]).hypot(v[1] - s.reference[1])))
        })
        .collect()
}

pub fn recovery_metrics(log: &TrajectoryLog, thr: &Thresholds) -> RecoveryMetrics {
    let onset = log.scenario.first_push().unwrap_or(0.0);
    let devs: Vec<f64> = step_deviations(log)
        .into_iter()
        .filter(|(t, _)| *t > onset)
        .map(|(_, d)| d)
        .collect();
    let settling_steps = devs.iter().rposition(|d| *d >= thr.velocity_tol).map_or(0, |i| i + 1);
    let peak = devs.iter().copied().fold(0.0, f64::max);
    let hull = log.samples.iter().filter(|s| !(s.zmp_hull_distance <= thr.hull_tol)).count();
    let constraint_violations = hull + log.bound_violations;
    let max_u_sw = log
        .impacts
        .iter()
        .filter_map(|i| i.u_sw)
        .map(|u| u[0].hypot(u[1]))
        .fold(0.0, f64::max);
    let peak_speed = |axis: usize| {
        log.samples.iter().map(|s| s.com_velocity[axis].abs()).fold(0.0, f64::max)
    };
    let k = thr.final_steps;
    let tail_ok = devs.len() >= k && devs[devs.len() - k..].iter().all(|d| *d < thr.velocity_tol);
    RecoveryMetrics {
        success: log.aborted.is_none() && tail_ok && constraint_violations == 0,
        settling_steps,
        peak_velocity_deviation: peak,
        constraint_violations,
        max_u_sw,
        peak_coronal_speed: peak_speed(1),
        peak_sagittal_speed: peak_speed(0),
        steps_evaluated: devs.len(),
        aborted: log.aborted.clone(),
        thresholds: *thr,
    }
}
