//! Periodic reference orbits and the nominal input schedule.
//!
//! Reference states are taken at the end of UA (the pre-impact state of the
//! UA to OA edge) so that one cycle of the domain graph is one footstep.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{
    step_map_from, DomainId, DomainInputs, ModelParams, PlanarState, StepInputs, WalkMode, ZlipState,
};
use crate::support::{nominal_alpha, zmp_constraint_set};

/// Minimum single-support time left for the swing foot.
pub const MIN_SWING_TIME: f64 = 0.2;

const ORBIT_TOL: f64 = 1e-8;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum StanceSide {
    Left,
    Right,
}

impl StanceSide {
    pub fn flip(self) -> StanceSide {
        match self {
            StanceSide::Left => StanceSide::Right,
            StanceSide::Right => StanceSide::Left,
        }
    }

    /// Sign of the lateral offset of this foot relative to the other one.
    pub fn lateral_sign(self) -> f64 {
        match self {
            StanceSide::Left => 1.0,
            StanceSide::Right => -1.0,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            StanceSide::Left => "left",
            StanceSide::Right => "right",
        }
    }
}

/// Desired walking velocity, foot spacing and nominal domain durations.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GaitCommand {
    pub v_ref_x: f64,
    pub v_ref_y: f64,
    pub step_width: f64,
    pub t_fa: f64,
    pub t_ua: f64,
    pub t_oa: f64,
    pub mode: WalkMode,
}

impl Default for GaitCommand {
    fn default() -> Self {
        GaitCommand::flat_footed(0.3, 0.1)
    }
}

impl GaitCommand {
    pub fn flat_footed(t_fa: f64, t_oa: f64) -> Self {
        GaitCommand {
            v_ref_x: 0.0,
            v_ref_y: 0.0,
            step_width: 0.25,
            t_fa,
            t_ua: 0.0,
            t_oa,
            mode: WalkMode::FlatFooted,
        }
    }

    /// Multi-domain gait with the single-support time split evenly between
    /// FA and UA.
    pub fn multi_domain(t_ss: f64, t_oa: f64) -> Self {
        GaitCommand {
            v_ref_x: 0.0,
            v_ref_y: 0.0,
            step_width: 0.25,
            t_fa: 0.5 * t_ss,
            t_ua: 0.5 * t_ss,
            t_oa,
            mode: WalkMode::MultiDomain,
        }
    }

    pub fn with_velocity(mut self, v_x: f64, v_y: f64) -> Self {
        self.v_ref_x = v_x;
        self.v_ref_y = v_y;
        self
    }

    pub fn step_duration(&self) -> f64 {
        self.t_fa + self.t_ua + self.t_oa
    }

    /// Nominal durations in block order (OA, FA, UA).
    pub fn durations(&self) -> [f64; 3] {
        [self.t_oa, self.t_fa, self.t_ua]
    }

    pub fn duration(&self, d: DomainId) -> f64 {
        self.durations()[d.block_index()]
    }

    pub fn validate(&self) -> Result<()> {
        for (name, t) in [("t_fa", self.t_fa), ("t_ua", self.t_ua), ("t_oa", self.t_oa)] {
            if !(t.is_finite() && t >= 0.0) {
                return Err(Error::Command(format!("{name} must be >= 0, got {t}")));
            }
        }
        if self.t_fa + self.t_ua < MIN_SWING_TIME - 1e-12 {
            return Err(Error::Command(format!(
                "t_fa + t_ua must be >= {MIN_SWING_TIME} s, got {}",
                self.t_fa + self.t_ua
            )));
        }
        if !(self.step_width.is_finite() && self.step_width > 0.0) {
            return Err(Error::Command(format!("step_width must be > 0, got {}", self.step_width)));
        }
        if !(self.v_ref_x.is_finite() && self.v_ref_y.is_finite()) {
            return Err(Error::Command("reference velocities must be finite".into()));
        }
        if self.mode == WalkMode::FlatFooted && self.t_ua != 0.0 {
            return Err(Error::Command("flat-footed walking requires t_ua = 0".into()));
        }
        Ok(())
    }

    /// Nominal placement of the swing foot that becomes the `new_stance` foot,
    /// relative to the current stance pivot.
    pub fn nominal_placement(&self, new_stance: StanceSide, params: &ModelParams) -> [f64; 2] {
        let t = self.step_duration();
        [
            self.v_ref_x * t - self.mode.fa_travel(params),
            new_stance.lateral_sign() * self.step_width + self.v_ref_y * t,
        ]
    }
}

/// Nominal inputs of one block (OA, FA, UA) whose single-support leg is
/// `stance`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NominalStep {
    pub stance: StanceSide,
    pub inputs: StepInputs,
    /// `(a_foot+, a_step+, a_foot-, a_step-)` per domain, block order.
    pub alpha: [[f64; 4]; 3],
    /// ZMP right after entering and right before leaving each domain,
    /// in that domain's pivot frame.
    pub zmp_post: [[f64; 2]; 3],
    pub zmp_pre: [[f64; 2]; 3],
}

impl NominalStep {
    pub fn delta_into(&self, d: DomainId) -> [f64; 2] {
        self.inputs.delta_into(d)
    }

    pub fn rate(&self, d: DomainId) -> [f64; 2] {
        self.inputs.domain(d).zmp_rate
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NominalInputs {
    pub durations: [f64; 3],
    pub left: NominalStep,
    pub right: NominalStep,
}

impl NominalInputs {
    pub fn step(&self, stance: StanceSide) -> &NominalStep {
        match stance {
            StanceSide::Left => &self.left,
            StanceSide::Right => &self.right,
        }
    }
}

fn nominal_step(cmd: &GaitCommand, params: &ModelParams, stance: StanceSide) -> Result<NominalStep> {
    let u = cmd.nominal_placement(stance, params);
    let l = cmd.mode.fa_travel(params);
    let mut alpha = [[0.0; 4]; 3];
    let mut zmp_post = [[0.0; 2]; 3];
    let mut zmp_pre = [[0.0; 2]; 3];
    for d in DomainId::BLOCK_ORDER {
        let i = d.block_index();
        let a = nominal_alpha(d, cmd.mode);
        let set = zmp_constraint_set(d, cmd.mode, params);
        alpha[i] = a;
        zmp_post[i] = set.point(a[0], a[1], u);
        zmp_pre[i] = set.point(a[2], a[3], u);
    }

    let mut domain_inputs = [DomainInputs::default(); 3];
    for d in DomainId::BLOCK_ORDER {
        let i = d.block_index();
        let t = cmd.duration(d);
        let mut rate = [0.0; 2];
        for ax in 0..2 {
            let travel = zmp_pre[i][ax] - zmp_post[i][ax];
            if t > 0.0 {
                rate[ax] = travel / t;
            } else if travel.abs() > 1e-12 {
                return Err(Error::Command(format!(
                    "{d} has zero duration but the nominal ZMP must travel {travel:.4} m"
                )));
            }
        }
        domain_inputs[i] = DomainInputs {
            zmp_rate: rate,
            duration: t,
        };
    }

    // ZMP just before each entering edge, expressed in the frame after it.
    let ua = DomainId::Ua.block_index();
    let oa = DomainId::Oa.block_index();
    let fa = DomainId::Fa.block_index();
    let before_oa = zmp_pre[ua];
    let before_fa = [zmp_pre[oa][0] - u[0] - l, zmp_pre[oa][1] - u[1]];
    let before_ua = zmp_pre[fa];
    let diff = |a: [f64; 2], b: [f64; 2]| [a[0] - b[0], a[1] - b[1]];

    Ok(NominalStep {
        stance,
        inputs: StepInputs {
            oa: domain_inputs[oa],
            fa: domain_inputs[fa],
            ua: domain_inputs[ua],
            delta_ua_oa: diff(zmp_post[oa], before_oa),
            delta_oa_fa: diff(zmp_post[fa], before_fa),
            delta_fa_ua: diff(zmp_post[ua], before_ua),
            u_sw: u,
        },
        alpha,
        zmp_post,
        zmp_pre,
    })
}

/// Nominal durations, ZMP rates, ZMP shifts and placements for both stance
/// sides. The ZMP follows the nominal support weights of each domain, so the
/// rates and shifts reproduce a path that is continuous in the world frame
/// except where the support itself jumps.
pub fn nominal_inputs(cmd: &GaitCommand, params: &ModelParams) -> Result<NominalInputs> {
    params.validate()?;
    cmd.validate()?;
    Ok(NominalInputs {
        durations: cmd.durations(),
        left: nominal_step(cmd, params, StanceSide::Left)?,
        right: nominal_step(cmd, params, StanceSide::Right)?,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Period1Orbit {
    pub xi_star: ZlipState,
    pub u_sw_x: f64,
    pub residual: f64,
    pub iterations: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Period2Orbit {
    pub xi_star_left: ZlipState,
    pub xi_star_right: ZlipState,
    /// Lateral placement of a step whose new stance is left / right.
    pub u_sw_y: [f64; 2],
    pub residual: f64,
    pub iterations: usize,
}

/// Newton iteration on `(p, L)` with a central-difference Jacobian. The ZMP
/// component is pinned by the schedule and is not an unknown.
fn newton_fixed_point<F>(guess: [f64; 2], map: F) -> Result<([f64; 2], usize)>
where
    F: Fn([f64; 2]) -> Result<[f64; 2]>,
{
    let residual = |z: [f64; 2]| -> Result<[f64; 2]> {
        let m = map(z)?;
        Ok([m[0] - z[0], m[1] - z[1]])
    };
    let norm = |r: [f64; 2]| r[0].abs().max(r[1].abs());
    let mut z = guess;
    let mut r = residual(z)?;
    let mut iterations = 0;
    while norm(r) > 1e-13 && iterations < 20 {
        iterations += 1;
        let h = 1e-6;
        let mut jac = [[0.0; 2]; 2];
        for j in 0..2 {
            let mut zp = z;
            let mut zm = z;
            zp[j] += h;
            zm[j] -= h;
            let rp = residual(zp)?;
            let rm = residual(zm)?;
            for i in 0..2 {
                jac[i][j] = (rp[i] - rm[i]) / (2.0 * h);
            }
        }
        let det = jac[0][0] * jac[1][1] - jac[0][1] * jac[1][0];
        if !det.is_finite() || det.abs() < 1e-300 {
            return Err(Error::Orbit {
                residual: norm(r),
                iterations,
            });
        }
        let dz = [
            (jac[1][1] * r[0] - jac[0][1] * r[1]) / det,
            (-jac[1][0] * r[0] + jac[0][0] * r[1]) / det,
        ];
        let candidate = [z[0] - dz[0], z[1] - dz[1]];
        let rc = residual(candidate)?;
        if norm(rc) >= norm(r) {
            break;
        }
        z = candidate;
        r = rc;
    }
    Ok((z, iterations))
}

fn state_residual(a: &ZlipState, b: &ZlipState) -> f64 {
    (a.p - b.p).abs().max((a.l - b.l).abs()).max((a.p_zmp - b.p_zmp).abs())
}

/// Sagittal period-1 orbit: the UA pre-impact state reproduced by one step.
pub fn find_period1_orbit(cmd: &GaitCommand, params: &ModelParams) -> Result<Period1Orbit> {
    let nominal = nominal_inputs(cmd, params)?;
    let step = nominal.left;
    let zmp_anchor = step.zmp_pre[DomainId::Ua.block_index()][0];
    let map = |z: [f64; 2]| -> Result<ZlipState> {
        let x = PlanarState::new(ZlipState::new(z[0], z[1], zmp_anchor), ZlipState::default());
        Ok(step_map_from(DomainId::Ua, &x, &step.inputs, params, cmd.mode)?.sagittal)
    };

    // Classic LIP orbit with instantaneous double support as the guess.
    let w = params.omega();
    let half = 0.5 * cmd.v_ref_x * cmd.step_duration();
    let tanh = (0.5 * w * cmd.step_duration()).tanh();
    let l_guess = if half == 0.0 { 0.0 } else { params.z0 * w * half / tanh };
    let (z, iterations) = newton_fixed_point([zmp_anchor + half, l_guess], |z| {
        let m = map(z)?;
        Ok([m.p, m.l])
    })?;

    let xi_star = ZlipState::new(z[0], z[1], zmp_anchor);
    let residual = state_residual(&map(z)?, &xi_star);
    if !(residual < ORBIT_TOL) {
        return Err(Error::Orbit { residual, iterations });
    }
    Ok(Period1Orbit {
        xi_star,
        u_sw_x: step.inputs.u_sw[0],
        residual,
        iterations,
    })
}

/// Coronal period-2 orbit: left-stance state, right-stance state and back.
pub fn find_period2_orbit(cmd: &GaitCommand, params: &ModelParams) -> Result<Period2Orbit> {
    let nominal = nominal_inputs(cmd, params)?;
    let zmp_anchor = nominal.left.zmp_pre[DomainId::Ua.block_index()][1];
    let one_step = |xi: ZlipState, block: &NominalStep| -> Result<ZlipState> {
        let x = PlanarState::new(ZlipState::default(), xi);
        Ok(step_map_from(DomainId::Ua, &x, &block.inputs, params, cmd.mode)?.coronal)
    };
    let two_steps = |z: [f64; 2]| -> Result<(ZlipState, ZlipState)> {
        let left = ZlipState::new(z[0], z[1], zmp_anchor);
        let right = one_step(left, &nominal.right)?;
        Ok((right, one_step(right, &nominal.left)?))
    };

    let (z, iterations) = newton_fixed_point([zmp_anchor, 0.0], |z| {
        let (_, back) = two_steps(z)?;
        Ok([back.p, back.l])
    })?;
    let xi_star_left = ZlipState::new(z[0], z[1], zmp_anchor);
    let (xi_star_right, back) = two_steps(z)?;
    let residual = state_residual(&back, &xi_star_left);
    if !(residual < ORBIT_TOL) {
        return Err(Error::Orbit { residual, iterations });
    }
    Ok(Period2Orbit {
        xi_star_left,
        xi_star_right,
        u_sw_y: [nominal.left.inputs.u_sw[1], nominal.right.inputs.u_sw[1]],
        residual,
        iterations,
    })
}

/// Pre- and post-impact states of every domain of one nominal block, each in
/// its own pivot frame, block order.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BlockStates {
    pub post: [PlanarState; 3],
    pub pre: [PlanarState; 3],
}

/// Both nominal orbits together with the schedule that generates them.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReferenceOrbit {
    pub command: GaitCommand,
    pub params: ModelParams,
    pub xi_star: ZlipState,
    pub xi_star_left: ZlipState,
    pub xi_star_right: ZlipState,
    pub nominal: NominalInputs,
    pub residual_sagittal: f64,
    pub residual_coronal: f64,
    /// Mean world-frame CoM velocity over a step ending in left / right
    /// stance.
    pub step_velocity_left: [f64; 2],
    pub step_velocity_right: [f64; 2],
    pub block_left: BlockStates,
    pub block_right: BlockStates,
}

impl ReferenceOrbit {
    pub fn compute(cmd: &GaitCommand, params: &ModelParams) -> Result<ReferenceOrbit> {
        let p1 = find_period1_orbit(cmd, params)?;
        let p2 = find_period2_orbit(cmd, params)?;
        let nominal = nominal_inputs(cmd, params)?;
        let mut orbit = ReferenceOrbit {
            command: *cmd,
            params: *params,
            xi_star: p1.xi_star,
            xi_star_left: p2.xi_star_left,
            xi_star_right: p2.xi_star_right,
            nominal,
            residual_sagittal: p1.residual,
            residual_coronal: p2.residual,
            step_velocity_left: [0.0; 2],
            step_velocity_right: [0.0; 2],
            block_left: BlockStates {
                post: [PlanarState::default(); 3],
                pre: [PlanarState::default(); 3],
            },
            block_right: BlockStates {
                post: [PlanarState::default(); 3],
                pre: [PlanarState::default(); 3],
            },
        };
        orbit.block_left = orbit.simulate_block(StanceSide::Left)?;
        orbit.block_right = orbit.simulate_block(StanceSide::Right)?;
        orbit.step_velocity_left = orbit.world_step_velocity(StanceSide::Left);
        orbit.step_velocity_right = orbit.world_step_velocity(StanceSide::Right);
        Ok(orbit)
    }

    pub fn mode(&self) -> WalkMode {
        self.command.mode
    }

    pub fn coronal(&self, stance: StanceSide) -> ZlipState {
        match stance {
            StanceSide::Left => self.xi_star_left,
            StanceSide::Right => self.xi_star_right,
        }
    }

    pub fn block(&self, stance: StanceSide) -> &BlockStates {
        match stance {
            StanceSide::Left => &self.block_left,
            StanceSide::Right => &self.block_right,
        }
    }

    pub fn step_velocity(&self, stance: StanceSide) -> [f64; 2] {
        match stance {
            StanceSide::Left => self.step_velocity_left,
            StanceSide::Right => self.step_velocity_right,
        }
    }

    fn simulate_block(&self, stance: StanceSide) -> Result<BlockStates> {
        let step = self.nominal.step(stance);
        let mut x = reference_state(self, stance.flip());
        let mut post = [PlanarState::default(); 3];
        let mut pre = [PlanarState::default(); 3];
        let mut domain = DomainId::Ua;
        for _ in 0..3 {
            let previous = domain;
            domain = domain.successor();
            // a one-domain "cycle" through step_map_from is not available, so
            // enter and propagate by hand
            let foot = (domain == DomainId::Fa).then_some(crate::model::FootShift {
                u_sw: step.inputs.u_sw,
                l: self.command.mode.fa_travel(&self.params),
            });
            let edge = crate::model::Edge::between(previous, domain)?;
            x = crate::model::apply_impact(
                edge,
                &x,
                &crate::model::ImpactInputs {
                    delta_zmp: step.delta_into(domain),
                    foot,
                },
            )?;
            post[domain.block_index()] = x;
            x = crate::model::propagate_planar(&x, step.inputs.domain(domain), [0.0; 2], &self.params)?;
            pre[domain.block_index()] = x;
        }
        Ok(BlockStates { post, pre })
    }

    /// World displacement of the CoM over the block with the given stance,
    /// divided by the step time.
    fn world_step_velocity(&self, stance: StanceSide) -> [f64; 2] {
        let start = reference_state(self, stance.flip());
        let end = reference_state(self, stance);
        let u = self.nominal.step(stance).inputs.u_sw;
        let l = self.command.mode.fa_travel(&self.params);
        let t = self.command.step_duration();
        [
            (end.sagittal.p - start.sagittal.p + u[0] + l) / t,
            (end.coronal.p - start.coronal.p + u[1]) / t,
        ]
    }
}

/// Stacks the sagittal fixed point with the coronal state of `stance`.
pub fn reference_state(orbit: &ReferenceOrbit, stance: StanceSide) -> PlanarState {
    PlanarState::new(orbit.xi_star, orbit.coronal(stance))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::step_map;

    fn params() -> ModelParams {
        ModelParams::default()
    }

    #[test]
    fn flat_footed_rates_are_zero_and_shift_is_pivot_jump() {
        let cmd = GaitCommand::flat_footed(0.3, 0.1).with_velocity(0.4, 0.0);
        let nom = nominal_inputs(&cmd, &params()).unwrap();
        for step in [nom.left, nom.right] {
            for d in DomainId::BLOCK_ORDER {
                assert_eq!(step.rate(d), [0.0, 0.0]);
            }
            assert_eq!(step.delta_into(DomainId::Fa), step.inputs.u_sw);
            assert_eq!(step.delta_into(DomainId::Oa), [0.0, 0.0]);
        }
    }

    #[test]
    fn multi_domain_fa_rate() {
        let cmd = GaitCommand::multi_domain(0.4, 0.1);
        let nom = nominal_inputs(&cmd, &params()).unwrap();
        assert!((nom.left.rate(DomainId::Fa)[0] - 0.8).abs() < 1e-12);
        assert_eq!(nom.left.rate(DomainId::Ua), [0.0, 0.0]);
    }

    #[test]
    fn multi_domain_zmp_path_is_continuous() {
        let p = params();
        let cmd = GaitCommand::multi_domain(0.4, 0.1).with_velocity(0.3, 0.0);
        let step = nominal_inputs(&cmd, &p).unwrap().left;
        // integrate the ZMP along the block from the back toe
        let mut zmp = [0.0, 0.0];
        for d in DomainId::BLOCK_ORDER {
            let delta = step.delta_into(d);
            if d == DomainId::Fa {
                zmp[0] -= step.inputs.u_sw[0] + p.rho;
                zmp[1] -= step.inputs.u_sw[1];
            }
            assert_eq!(delta, [0.0, 0.0], "{d}");
            let i = d.block_index();
            assert!((zmp[0] - step.zmp_post[i][0]).abs() < 1e-12);
            let r = step.rate(d);
            let t = cmd.duration(d);
            zmp = [zmp[0] + r[0] * t, zmp[1] + r[1] * t];
            assert!((zmp[0] - step.zmp_pre[i][0]).abs() < 1e-12);
            assert!((zmp[1] - step.zmp_pre[i][1]).abs() < 1e-12);
        }
        // OA ends at the front heel
        let oa = DomainId::Oa.block_index();
        assert!((step.zmp_pre[oa][0] - step.inputs.u_sw[0]).abs() < 1e-12);
    }

    #[test]
    fn zero_duration_with_travel_is_rejected() {
        let mut cmd = GaitCommand::multi_domain(0.4, 0.0);
        cmd.v_ref_x = 0.3;
        assert!(matches!(nominal_inputs(&cmd, &params()), Err(Error::Command(_))));
    }

    #[test]
    fn flat_in_place_orbit_is_zero() {
        let o = find_period1_orbit(&GaitCommand::flat_footed(0.3, 0.1), &params()).unwrap();
        assert_eq!(o.u_sw_x, 0.0);
        assert!(o.xi_star.p.abs() < 1e-12 && o.xi_star.l.abs() < 1e-12 && o.xi_star.p_zmp == 0.0);
    }

    #[test]
    fn orbit_grid_fixed_points() {
        let p = params();
        for base in [GaitCommand::flat_footed(0.3, 0.1), GaitCommand::multi_domain(0.4, 0.1)] {
            for v in [0.0, 0.25, 0.5] {
                let cmd = base.with_velocity(v, 0.0);
                let orbit = ReferenceOrbit::compute(&cmd, &p).unwrap();
                for side in [StanceSide::Left, StanceSide::Right] {
                    let step = orbit.nominal.step(side.flip());
                    let start = reference_state(&orbit, side);
                    let next = step_map_from(DomainId::Ua, &start, &step.inputs, &p, cmd.mode).unwrap();
                    let expect = reference_state(&orbit, side.flip());
                    assert!(state_residual(&next.sagittal, &expect.sagittal) < 1e-8);
                    assert!(state_residual(&next.coronal, &expect.coronal) < 1e-8);
                }
                assert!((orbit.step_velocity_left[0] - v).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn oa_pre_impact_states_are_periodic_too() {
        let p = params();
        let cmd = GaitCommand::multi_domain(0.4, 0.1).with_velocity(0.3, 0.0);
        let orbit = ReferenceOrbit::compute(&cmd, &p).unwrap();
        let oa = DomainId::Oa.block_index();
        let x = orbit.block_left.pre[oa];
        let next = step_map(&x, &orbit.nominal.right.inputs, &p, cmd.mode).unwrap();
        // step_map consumes the left block's placement on the first impact
        let mut inputs = orbit.nominal.right.inputs;
        inputs.u_sw = orbit.nominal.left.inputs.u_sw;
        let next_exact = step_map(&x, &inputs, &p, cmd.mode).unwrap();
        let target = orbit.block_right.pre[oa];
        assert!(state_residual(&next_exact.sagittal, &target.sagittal) < 1e-9);
        assert!(state_residual(&next_exact.coronal, &target.coronal) < 1e-9);
        assert!(next.sagittal.is_finite());
    }

    #[test]
    fn multi_domain_in_place_has_zero_world_displacement() {
        let p = params();
        let orbit = ReferenceOrbit::compute(&GaitCommand::multi_domain(0.4, 0.1), &p).unwrap();
        let u = orbit.nominal.left.inputs.u_sw[0];
        assert!((u + p.rho).abs() < 1e-15);
        for side in [StanceSide::Left, StanceSide::Right] {
            assert!(orbit.step_velocity(side)[0].abs() < 1e-12);
        }
    }

    #[test]
    fn coronal_orbit_is_mirror_symmetric() {
        let p = params();
        for cmd in [GaitCommand::flat_footed(0.3, 0.1), GaitCommand::multi_domain(0.4, 0.1)] {
            let mut cmd = cmd;
            cmd.step_width = 0.3;
            let o = find_period2_orbit(&cmd, &p).unwrap();
            let m = o.xi_star_right.mirrored();
            assert!(state_residual(&o.xi_star_left, &m) < 1e-10, "{o:?}");
            assert!(o.residual < 1e-8);
            assert!(o.xi_star_left.p.abs() > 1e-3);
        }
    }

    #[test]
    fn zero_step_width_is_rejected() {
        let mut cmd = GaitCommand::flat_footed(0.3, 0.1);
        cmd.step_width = 0.0;
        assert!(matches!(find_period2_orbit(&cmd, &params()), Err(Error::Command(_))));
    }

    #[test]
    fn orbit_depends_continuously_on_velocity() {
        let p = params();
        let cmd = GaitCommand::flat_footed(0.3, 0.1).with_velocity(0.3, 0.0);
        let a = find_period1_orbit(&cmd, &p).unwrap().xi_star;
        let b = find_period1_orbit(&cmd.with_velocity(0.3 + 1e-6, 0.0), &p).unwrap().xi_star;
        let d = state_residual(&a, &b);
        assert!(d > 0.0 && d < 1e-5, "{d}");
    }

    #[test]
    fn command_validation() {
        let mut cmd = GaitCommand::flat_footed(0.15, 0.1);
        assert!(cmd.validate().is_err());
        cmd.t_fa = 0.3;
        cmd.t_ua = 0.1;
        assert!(cmd.validate().is_err());
    }
}
