use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::mpc::AblationMode;
use crate::sim::metrics::{recovery_metrics, Thresholds};
use crate::sim::run::run_scenario;
use crate::sim::scenario::{Push, Scenario};

/// Push timing used when the base scenario has none.
pub const DEFAULT_PUSH_START: f64 = 1.0;
pub const DEFAULT_PUSH_DURATION: f64 = 0.1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepCell {
    pub magnitude: f64,
    pub mode: AblationMode,
    pub success: bool,
    pub peak_velocity_deviation: f64,
    pub settling_steps: usize,
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Envelope {
    pub mode: AblationMode,
    /// Largest magnitude that was recovered.
    pub max_recovered: Option<f64>,
    /// Largest magnitude below which every cell was recovered.
    pub monotone_boundary: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepTable {
    pub direction: [f64; 2],
    pub push_start: f64,
    pub push_duration: f64,
    pub magnitudes: Vec<f64>,
    pub cells: Vec<SweepCell>,
    pub envelopes: Vec<Envelope>,
}

impl SweepTable {
    pub fn cell(&self, magnitude: f64, mode: AblationMode) -> Option<&SweepCell> {
        self.cells.iter().find(|c| c.magnitude == magnitude && c.mode == mode)
    }

    pub fn envelope(&self, mode: AblationMode) -> Option<&Envelope> {
        self.envelopes.iter().find(|e| e.mode == mode)
    }
}

/// Runs every magnitude under every mode. The push replaces those of the
/// base scenario and reuses the timing of its first push.
pub fn push_envelope_sweep(
    base: &Scenario,
    direction: [f64; 2],
    magnitudes: &[f64],
    modes: &[AblationMode],
    thr: &Thresholds,
) -> Result<SweepTable> {
    if magnitudes.is_empty() || modes.is_empty() {
        return Err(Error::Scenario("sweep grid is empty".into()));
    }
    let norm = direction[0].hypot(direction[1]);
    if !(norm.is_finite() && norm > 0.0) {
        return Err(Error::Scenario("sweep direction must be a nonzero vector".into()));
    }
    if magnitudes.iter().any(|m| !(m.is_finite() && *m >= 0.0)) {
        return Err(Error::Scenario("sweep magnitudes must be finite and >= 0".into()));
    }
    let dir = [direction[0] / norm, direction[1] / norm];
    let (push_start, push_duration) = base
        .pushes
        .first()
        .map_or((DEFAULT_PUSH_START, DEFAULT_PUSH_DURATION), |p| (p.start, p.duration));

    let jobs: Vec<(f64, AblationMode)> = magnitudes
        .iter()
        .flat_map(|&m| modes.iter().map(move |&mode| (m, mode)))
        .collect();
    let cells: Vec<SweepCell> = jobs
        .par_iter()
        .map(|&(magnitude, mode)| {
            let mut sc = base.clone().with_ablation(mode);
            sc.pushes = vec![Push {
                start: push_start,
                duration: push_duration,
                force: [magnitude * dir[0], magnitude * dir[1]],
            }];
            match run_scenario(&sc) {
                Ok(log) => {
                    let m = recovery_metrics(&log, thr);
                    SweepCell {
                        magnitude,
                        mode,
                        success: m.success,
                        peak_velocity_deviation: m.peak_velocity_deviation,
                        settling_steps: m.settling_steps,
                        error: m.aborted,
                    }
                }
                Err(e) => SweepCell {
                    magnitude,
                    mode,
                    success: false,
                    peak_velocity_deviation: f64::NAN,
                    settling_steps: 0,
                    error: Some(e.to_string()),
                },
            }
        })
        .collect();

    let mut sorted = magnitudes.to_vec();
    sorted.sort_by(f64::total_cmp);
    let envelopes = modes
        .iter()
        .map(|&mode| {
            let ok = |m: f64| cells.iter().any(|c| c.mode == mode && c.magnitude == m && c.success);
            let max_recovered = sorted.iter().rev().copied().find(|&m| ok(m));
            let monotone_boundary = sorted.iter().copied().take_while(|&m| ok(m)).last();
            Envelope { mode, max_recovered, monotone_boundary }
        })
        .collect();
    Ok(SweepTable {
        direction: dir,
        push_start,
        push_duration,
        magnitudes: magnitudes.to_vec(),
        cells,
        envelopes,
    })
}
