//! Continuous references built from step-level plans: phasing variables that
//! survive retiming, Bézier CoM curves that hit planned boundary states, and
//! swing-foot paths.

use nalgebra::DVector;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::DomainId;

/// Ground penetration at touchdown, so the foot is pressed into contact.
pub const SWING_TOUCHDOWN_Z: f64 = -0.01;
pub const DEFAULT_SWING_APEX: f64 = 0.08;
pub const COM_BEZIER_DEGREE: usize = 5;

/// Phase that runs linearly from an anchor `(t_anchor, s_anchor)` to 1 at
/// `duration`. Times are measured from the start of the phase's interval.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PhaseState {
    pub s_anchor: f64,
    pub t_anchor: f64,
    pub duration: f64,
}

impl PhaseState {
    pub fn new(duration: f64) -> Result<Self> {
        if !(duration.is_finite() && duration > 0.0) {
            return Err(Error::Timing(format!("phase duration must be > 0, got {duration}")));
        }
        Ok(PhaseState { s_anchor: 0.0, t_anchor: 0.0, duration })
    }

    /// ds/dt of the current segment.
    pub fn rate(&self) -> f64 {
        (1.0 - self.s_anchor) / (self.duration - self.t_anchor)
    }

    pub fn phase(&self, t: f64) -> f64 {
        self.s_anchor + (t - self.t_anchor) * self.rate()
    }
}

/// Re-anchors the phase at `t_now` so that it reaches 1 at `new_t` while
/// staying continuous.
pub fn rescale_domain_phase(ps: &PhaseState, new_t: f64, t_now: f64) -> Result<PhaseState> {
    if !(new_t.is_finite() && t_now.is_finite()) || new_t <= t_now {
        return Err(Error::Timing(format!(
            "new end time {new_t} is not after the update time {t_now}"
        )));
    }
    let s_now = ps.phase(t_now);
    if !(0.0..1.0).contains(&s_now) {
        return Err(Error::Timing(format!("phase {s_now} at the update is outside [0, 1)")));
    }
    Ok(PhaseState { s_anchor: s_now, t_anchor: t_now, duration: new_t })
}

/// Step phasing variable: 0 at the start of FA, 1 at the end of UA, and
/// beyond 1 through OA.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StepPhase {
    /// Absolute time of the FA start.
    pub start: f64,
    pub domain: DomainId,
    single_support: PhaseState,
    fa_passed: Option<f64>,
    ss_passed: Option<f64>,
}

impl StepPhase {
    pub fn new(start: f64, t_fa: f64, t_ua: f64) -> Result<Self> {
        Ok(StepPhase {
            start,
            domain: DomainId::Fa,
            single_support: PhaseState::new(t_fa + t_ua)?,
            fa_passed: None,
            ss_passed: None,
        })
    }

    fn local(&self, t: f64) -> Result<f64> {
        if !(t >= self.start) {
            return Err(Error::Usage(format!("time {t} is before the step start {}", self.start)));
        }
        Ok(t - self.start)
    }

    /// Applies new planned durations at absolute time `t`. In FA `t_fa` is
    /// the total FA duration of this step; in UA it is ignored and the FA
    /// time actually spent is used. OA needs no retiming.
    pub fn retime(&mut self, t: f64, t_fa: f64, t_ua: f64) -> Result<()> {
        let tau = self.local(t)?;
        let total = match self.domain {
            DomainId::Fa => t_fa + t_ua,
            DomainId::Ua => self.fa_passed.unwrap_or(tau) + t_ua,
            DomainId::Oa => return Ok(()),
        };
        self.single_support = rescale_domain_phase(&self.single_support, total, tau)?;
        Ok(())
    }

    /// Records a domain switch at absolute time `t`.
    pub fn enter(&mut self, domain: DomainId, t: f64) -> Result<()> {
        let tau = self.local(t)?;
        match domain {
            DomainId::Ua => self.fa_passed = Some(tau),
            DomainId::Oa => self.ss_passed = Some(tau),
            DomainId::Fa => return Err(Error::Usage("a new step needs a new StepPhase".into())),
        }
        self.domain = domain;
        Ok(())
    }

    pub fn phase(&self, t: f64) -> Result<f64> {
        let tau = self.local(t)?;
        Ok(match self.ss_passed {
            Some(ss) => tau / ss,
            None => self.single_support.phase(tau),
        })
    }

    /// ds/dt at the current segment.
    pub fn rate(&self) -> f64 {
        match self.ss_passed {
            Some(ss) => 1.0 / ss,
            None => self.single_support.rate(),
        }
    }
}

fn binomial(n: usize, k: usize) -> f64 {
    (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
}

/// Bernstein basis row of degree `n` at `s`.
pub fn bernstein_row(n: usize, s: f64) -> DVector<f64> {
    DVector::from_fn(n + 1, |k, _| binomial(n, k) * s.powi(k as i32) * (1.0 - s).powi((n - k) as i32))
}

/// d/ds of the Bernstein basis row.
pub fn bernstein_derivative_row(n: usize, s: f64) -> DVector<f64> {
    let lower = bernstein_row(n - 1, s);
    DVector::from_fn(n + 1, |k, _| {
        let left = if k >= 1 { lower[k - 1] } else { 0.0 };
        let right = if k < n { lower[k] } else { 0.0 };
        n as f64 * (left - right)
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BezierCurve {
    pub coeffs: Vec<f64>,
}

impl BezierCurve {
    pub fn new(coeffs: Vec<f64>) -> Result<Self> {
        if coeffs.len() < 4 {
            return Err(Error::Parameter("Bézier degree must be >= 3".into()));
        }
        if coeffs.iter().any(|c| !c.is_finite()) {
            return Err(Error::Parameter("Bézier coefficients must be finite".into()));
        }
        Ok(BezierCurve { coeffs })
    }

    /// Constant curve of the default degree.
    pub fn constant(value: f64) -> Self {
        BezierCurve { coeffs: vec![value; COM_BEZIER_DEGREE + 1] }
    }

    pub fn degree(&self) -> usize {
        self.coeffs.len() - 1
    }

    fn vector(&self) -> DVector<f64> {
        DVector::from_column_slice(&self.coeffs)
    }

    pub fn eval(&self, s: f64) -> f64 {
        bernstein_row(self.degree(), s).dot(&self.vector())
    }

    pub fn derivative(&self, s: f64) -> f64 {
        bernstein_derivative_row(self.degree(), s).dot(&self.vector())
    }
}

/// Smallest coefficient change that makes the curve pass through
/// `p_actual` at `s_now`, end at `p_target`, and end with time derivative
/// `l_target / z0` given the phase rate `ds_dt`.
pub fn update_com_coefficients(
    curve: &BezierCurve,
    s_now: f64,
    ds_dt: f64,
    p_actual: f64,
    p_target: f64,
    l_target: f64,
    z0: f64,
) -> Result<BezierCurve> {
    let n = curve.degree();
    if n < 3 {
        return Err(Error::Parameter("Bézier degree must be >= 3".into()));
    }
    if !(0.0..1.0).contains(&s_now) || 1.0 - s_now < 1e-9 {
        return Err(Error::DegeneratePhase(format!("phase {s_now} leaves no room before the end")));
    }
    if !(ds_dt.is_finite() && ds_dt > 0.0 && z0 > 0.0) {
        return Err(Error::DegeneratePhase(format!("phase rate {ds_dt} must be positive")));
    }
    // The end conditions fix the last two coefficients outright, so only the
    // constraint at `s_now` is left for a rank-one minimum-norm correction.
    // This avoids the normal equations, which lose accuracy as s_now -> 1.
    let mut coeffs = curve.coeffs.clone();
    coeffs[n] = p_target;
    coeffs[n - 1] = p_target - l_target / (z0 * ds_dt * n as f64);
    let row = bernstein_row(n, s_now);
    let head = row.rows(0, n - 1);
    let norm2 = head.norm_squared();
    if !(norm2 > f64::MIN_POSITIVE) {
        return Err(Error::DegeneratePhase(format!("constraints are rank deficient at s = {s_now}")));
    }
    let value: f64 = row.iter().zip(&coeffs).map(|(b, a)| b * a).sum();
    let step = (p_actual - value) / norm2;
    for (a, b) in coeffs.iter_mut().zip(head.iter()) {
        *a += step * b;
    }
    Ok(BezierCurve { coeffs })
}

/// Swing-foot path over the single-support phase. Horizontal motion is a
/// quintic with zero end velocity; the vertical profile has its mid-phase
/// height at the apex and ends slightly below ground.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SwingTrajectory {
    /// Phase at which the horizontal curve was last re-anchored.
    pub s_start: f64,
    pub control: [[f64; 2]; 6],
    pub apex_z: f64,
}

impl SwingTrajectory {
    pub fn new(u_start: [f64; 2], u_target: [f64; 2], apex_z: f64) -> Self {
        let (a, b) = (u_start, u_target);
        SwingTrajectory { s_start: 0.0, control: [a, a, a, b, b, b], apex_z }
    }

    fn local(&self, s: f64) -> f64 {
        if self.s_start >= 1.0 {
            return 1.0;
        }
        ((s - self.s_start) / (1.0 - self.s_start)).clamp(0.0, 1.0)
    }

    fn horizontal(&self, s: f64) -> [f64; 2] {
        let row = bernstein_row(5, self.local(s));
        let mut out = [0.0; 2];
        for (k, p) in self.control.iter().enumerate() {
            out[0] += row[k] * p[0];
            out[1] += row[k] * p[1];
        }
        out
    }

    /// d/ds of the horizontal position.
    fn horizontal_rate(&self, s: f64) -> [f64; 2] {
        let row = bernstein_derivative_row(5, self.local(s));
        let scale = 1.0 / (1.0 - self.s_start);
        let mut out = [0.0; 2];
        for (k, p) in self.control.iter().enumerate() {
            out[0] += row[k] * p[0] * scale;
            out[1] += row[k] * p[1] * scale;
        }
        out
    }

    fn vertical(&self, s: f64) -> f64 {
        // z(0.5) = c * 20/32 + SWING_TOUCHDOWN_Z * 6/32 = apex
        let c = (32.0 * self.apex_z - 6.0 * SWING_TOUCHDOWN_Z) / 20.0;
        let pts = [0.0, 0.0, c, c, SWING_TOUCHDOWN_Z, SWING_TOUCHDOWN_Z];
        let row = bernstein_row(5, s.clamp(0.0, 1.0));
        pts.iter().zip(row.iter()).map(|(p, b)| p * b).sum()
    }

    pub fn position(&self, s: f64) -> [f64; 3] {
        let h = self.horizontal(s);
        [h[0], h[1], self.vertical(s)]
    }

    /// Moves the landing target at phase `s_now`, keeping position and
    /// velocity continuous there.
    pub fn retarget(&mut self, s_now: f64, u_target: [f64; 2]) {
        if s_now >= 1.0 {
            return;
        }
        let q = self.horizontal(s_now);
        let v = self.horizontal_rate(s_now);
        let span = 1.0 - s_now;
        let q1 = [q[0] + v[0] * span / 5.0, q[1] + v[1] * span / 5.0];
        let b = u_target;
        self.control = [q, q1, q1, b, b, b];
        self.s_start = s_now;
    }
}

/// One-shot swing position for a fixed start and target.
pub fn swing_trajectory(u_start: [f64; 2], u_target: [f64; 2], apex_z: f64, s: f64) -> [f64; 3] {
    SwingTrajectory::new(u_start, u_target, apex_z).position(s)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn rescale_with_same_duration_is_identity() {
        let ps = PhaseState::new(0.3).unwrap();
        let r = rescale_domain_phase(&ps, 0.3, 0.17).unwrap();
        for t in [0.17, 0.2, 0.25, 0.3] {
            assert!((r.phase(t) - t / 0.3).abs() < 1e-14);
        }
    }

    #[test]
    fn rescale_hits_one_at_new_end() {
        let ps = PhaseState { s_anchor: 0.0, t_anchor: 0.0, duration: 0.3 };
        // s = 0.4 at t = 0.12 on a 0.3 s domain
        let r = rescale_domain_phase(&ps, 0.2, 0.12).unwrap();
        assert!((r.phase(0.12) - 0.4).abs() < 1e-14);
        assert!((r.phase(0.2) - 1.0).abs() < 1e-14);
    }

    #[test]
    fn rescale_rejects_past_end() {
        let ps = PhaseState::new(0.3).unwrap();
        assert!(matches!(rescale_domain_phase(&ps, 0.1, 0.1), Err(Error::Timing(_))));
        assert!(matches!(rescale_domain_phase(&ps, 0.1, 0.15), Err(Error::Timing(_))));
    }

    #[test]
    fn step_phase_constant_timing() {
        let sp = StepPhase::new(2.0, 0.2, 0.2).unwrap();
        for t in [2.0, 2.1, 2.3, 2.4] {
            assert!((sp.phase(t).unwrap() - (t - 2.0) / 0.4).abs() < 1e-12);
        }
        assert!(matches!(sp.phase(1.9), Err(Error::Usage(_))));
    }

    #[test]
    fn step_phase_ua_shortened_mid_ua() {
        let mut sp = StepPhase::new(0.0, 0.2, 0.2).unwrap();
        sp.retime(0.1, 0.15, 0.2).unwrap();
        sp.enter(DomainId::Ua, 0.15).unwrap();
        sp.retime(0.2, 0.0, 0.1).unwrap();
        // UA now ends at 0.15 + 0.1
        assert!((sp.phase(0.25).unwrap() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn step_phase_over_double_support() {
        let mut sp = StepPhase::new(0.0, 0.2, 0.2).unwrap();
        sp.enter(DomainId::Ua, 0.2).unwrap();
        sp.enter(DomainId::Oa, 0.4).unwrap();
        assert!((sp.phase(0.4).unwrap() - 1.0).abs() < 1e-14);
        assert!((sp.phase(0.5).unwrap() - 1.25).abs() < 1e-14);
    }

    #[test]
    fn bernstein_derivative_matches_difference() {
        for s in [0.0f64, 0.3, 0.77, 1.0] {
            let h = 1e-6;
            let fd = (bernstein_row(5, (s + h).min(1.0)) - bernstein_row(5, (s - h).max(0.0)))
                / ((s + h).min(1.0) - (s - h).max(0.0));
            assert!((bernstein_derivative_row(5, s) - fd).amax() < 1e-4);
        }
    }

    #[test]
    fn consistent_targets_leave_curve_unchanged() {
        let curve = BezierCurve::new(vec![0.0, 0.02, 0.05, 0.09, 0.1, 0.12]).unwrap();
        let (s, rate, z0) = (0.35, 2.5, 0.8);
        let l = curve.derivative(1.0) * rate * z0;
        let new = update_com_coefficients(&curve, s, rate, curve.eval(s), curve.eval(1.0), l, z0).unwrap();
        for (a, b) in curve.coeffs.iter().zip(&new.coeffs) {
            assert!((a - b).abs() < 1e-14);
        }
    }

    #[test]
    fn degenerate_at_phase_end() {
        let curve = BezierCurve::constant(0.0);
        let r = update_com_coefficients(&curve, 1.0, 1.0, 0.0, 0.1, 0.0, 0.8);
        assert!(matches!(r, Err(Error::DegeneratePhase(_))));
        assert!(BezierCurve::new(vec![0.0; 3]).is_err());
    }

    #[test]
    fn swing_boundaries() {
        let (a, b) = ([0.0, 0.1], [0.3, -0.2]);
        assert_eq!(swing_trajectory(a, b, 0.08, 0.0), [0.0, 0.1, 0.0]);
        let end = swing_trajectory(a, b, 0.08, 1.0);
        assert!((end[0] - 0.3).abs() < 1e-15 && (end[1] + 0.2).abs() < 1e-15);
        assert!((end[2] + 0.01).abs() < 1e-15);
        assert!((swing_trajectory(a, b, 0.08, 0.5)[2] - 0.08).abs() < 1e-14);
    }

    proptest! {
        #[test]
        fn phase_updates_are_continuous(
            updates in prop::collection::vec((0.05f64..0.95, 0.02f64..0.5), 1..8)
        ) {
            let mut ps = PhaseState::new(0.4).unwrap();
            let mut t = 0.0;
            for (frac, extra) in updates {
                let t_now = t + frac * (ps.duration - t);
                let before = ps.phase(t_now);
                let next = rescale_domain_phase(&ps, t_now + extra, t_now).unwrap();
                prop_assert!((next.phase(t_now) - before).abs() < 1e-12);
                prop_assert!(next.rate() > 0.0);
                prop_assert!((next.phase(next.duration) - 1.0).abs() < 1e-9);
                ps = next;
                t = t_now;
            }
        }

        #[test]
        fn bezier_update_meets_constraints(
            coeffs in prop::collection::vec(-1.0f64..1.0, 6),
            s in 0.0f64..0.95,
            rate in 0.5f64..10.0,
            p in -1.0f64..1.0,
            target in -1.0f64..1.0,
            l in -2.0f64..2.0,
        ) {
            let z0 = 0.8;
            let curve = BezierCurve::new(coeffs).unwrap();
            let new = update_com_coefficients(&curve, s, rate, p, target, l, z0).unwrap();
            prop_assert!((new.eval(s) - p).abs() < 1e-9);
            prop_assert!((new.eval(1.0) - target).abs() < 1e-9);
            prop_assert!((new.derivative(1.0) * rate - l / z0).abs() < 1e-9);
        }

        #[test]
        fn retarget_keeps_path_continuous(
            s in 0.0f64..0.99,
            tx in -0.5f64..0.5,
            ty in -0.5f64..0.5,
        ) {
            let mut sw = SwingTrajectory::new([0.0, 0.0], [0.3, 0.25], DEFAULT_SWING_APEX);
            let before = sw.position(s);
            sw.retarget(s, [tx, ty]);
            let after = sw.position(s);
            for k in 0..3 {
                prop_assert!((before[k] - after[k]).abs() < 1e-9);
            }
            let end = sw.position(1.0);
            prop_assert!((end[0] - tx).abs() < 1e-12 && (end[1] - ty).abs() < 1e-12);
        }
    }
}
