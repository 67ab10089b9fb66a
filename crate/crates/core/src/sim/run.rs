//! Closed-loop execution: replan at a fixed rate, propagate exactly between
//! events and execute impacts on the planned schedule.

use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::gait::{rescale_domain_phase, PhaseState, StepPhase};
use crate::model::{apply_impact, propagate_planar, DomainId, DomainInputs, Edge, FootShift, ImpactInputs, PlanarState};
use crate::mpc::{build_problem, shift_warm_start, solve, MpcNow, MpcSolution, MpcStatus};
use crate::orbit::{ReferenceOrbit, StanceSide};
use crate::sim::scenario::Scenario;
use crate::support::{convex_hull, hull_distance, zmp_constraint_set};

/// CoM offset from the pivot beyond which the walker is considered fallen.
pub const FALL_DISTANCE: f64 = 1.0;
/// Largest constraint violation of a non-optimal solve that is still used.
pub const ACCEPT_VIOLATION: f64 = 1e-6;
const EPS: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LogSample {
    pub t: f64,
    pub domain: DomainId,
    /// Foot under the pivot.
    pub stance: StanceSide,
    pub pivot_world: [f64; 2],
    pub com_world: [f64; 2],
    pub com_velocity: [f64; 2],
    /// Pivot-frame state.
    pub state: PlanarState,
    pub zmp_world: [f64; 2],
    /// Placement vector spanning the support region (only used in OA).
    pub support_u: [f64; 2],
    pub zmp_hull_distance: f64,
    pub domain_phase: f64,
    pub step_phase: f64,
    pub disturbance: [f64; 2],
    /// True while a failed solve left the previous plan in charge.
    pub plan_held: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolveRecord {
    pub t: f64,
    pub domain: DomainId,
    pub status: MpcStatus,
    pub accepted: bool,
    pub iterations: usize,
    pub wall_time_s: f64,
    pub cost: f64,
    pub violation: f64,
    pub t2imp: f64,
    /// Time already spent in the current domain.
    pub t_passed: f64,
    /// Planner input, for replaying the solve.
    pub now: MpcNow,
    /// Planned durations per block (OA, FA, UA).
    pub durations: Vec<[f64; 3]>,
    pub u_sw: Vec<[f64; 2]>,
    pub message: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ImpactRecord {
    pub t: f64,
    pub from: DomainId,
    pub to: DomainId,
    /// Realized duration of `from`.
    pub duration: f64,
    /// Duration of `from` as last commanded.
    pub commanded: f64,
    /// Placement used on OA to FA.
    pub u_sw: Option<[f64; 2]>,
}

/// Emitted at every UA to OA switch.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StepRecord {
    pub t: f64,
    /// Stance of the single-support phase that just ended.
    pub stance: StanceSide,
    pub com_world: [f64; 2],
    /// Mean CoM velocity since the previous record.
    pub velocity: Option<[f64; 2]>,
    pub reference: [f64; 2],
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrajectoryLog {
    pub scenario: Scenario,
    pub samples: Vec<LogSample>,
    pub impacts: Vec<ImpactRecord>,
    pub steps: Vec<StepRecord>,
    pub solves: Vec<SolveRecord>,
    /// Kinematic bound violations of executed placements.
    pub bound_violations: usize,
    pub aborted: Option<String>,
}

struct Plan {
    solution: MpcSolution,
    /// Domains entered since the plan was made.
    executed: usize,
    solved_at: f64,
}

struct Sim<'a> {
    sc: &'a Scenario,
    orbit: ReferenceOrbit,
    t: f64,
    domain: DomainId,
    stance: StanceSide,
    pivot: [f64; 2],
    x: PlanarState,
    domain_start: f64,
    step_start: f64,
    u_current: Option<[f64; 2]>,
    rate: [f64; 2],
    impact_at: f64,
    commanded: f64,
    plan: Option<Plan>,
    failing_since: Option<f64>,
    domain_phase: Option<PhaseState>,
    step_phase: StepPhase,
    log: TrajectoryLog,
}

impl<'a> Sim<'a> {
    fn block_side(&self, domain: DomainId) -> StanceSide {
        match domain {
            DomainId::Oa => self.stance.flip(),
            _ => self.stance,
        }
    }

    /// Duration, rate and entering shift of the domain after the current
    /// one, plus the placement of its block.
    fn next_inputs(&self, next: DomainId, side: StanceSide) -> (f64, [f64; 2], [f64; 2], [f64; 2]) {
        if let Some(plan) = &self.plan {
            let sol = &plan.solution;
            let node = sol.current_node + plan.executed + 1;
            if node < 3 * sol.u_sw.len() {
                let (t, r, d) = sol.node_inputs(node);
                return (t, r, d, sol.u_sw[node / 3]);
            }
        }
        let step = self.orbit.nominal.step(side);
        (self.orbit.command.duration(next), step.rate(next), step.delta_into(next), step.inputs.u_sw)
    }

    fn impact(&mut self) -> Result<()> {
        let from = self.domain;
        let to = from.successor();
        // block side of the domain being entered
        let side = if to == DomainId::Fa { self.stance.flip() } else { self.block_side(to) };
        let (t_next, rate, delta, u_block) = self.next_inputs(to, side);
        let mode = self.orbit.mode();
        let foot = if to == DomainId::Fa {
            let u = self.u_current.unwrap_or(u_block);
            Some(FootShift { u_sw: u, l: mode.fa_travel(&self.orbit.params) })
        } else {
            None
        };
        self.x = apply_impact(Edge::between(from, to)?, &self.x, &ImpactInputs { delta_zmp: delta, foot })?;
        self.log.impacts.push(ImpactRecord {
            t: self.t,
            from,
            to,
            duration: self.t - self.domain_start,
            commanded: self.commanded,
            u_sw: foot.map(|f| f.u_sw),
        });
        match to {
            DomainId::Fa => {
                let f = foot.expect("placement on OA to FA");
                self.pivot[0] += f.u_sw[0] + f.l;
                self.pivot[1] += f.u_sw[1];
                self.stance = self.stance.flip();
                self.step_start = self.t;
                self.u_current = None;
                let t_ua = self.peek_ua_duration();
                self.step_phase = StepPhase::new(self.t, t_next.max(EPS), t_ua)?;
            }
            DomainId::Ua => {
                self.step_phase.enter(DomainId::Ua, self.t)?;
            }
            DomainId::Oa => {
                self.step_phase.enter(DomainId::Oa, self.t)?;
                self.u_current = Some(u_block);
                self.check_placement(u_block, side);
                self.record_step();
            }
        }
        self.domain = to;
        self.domain_start = self.t;
        self.rate = rate;
        self.impact_at = self.t + t_next;
        self.commanded = t_next;
        self.domain_phase = PhaseState::new(t_next).ok();
        if let Some(plan) = &mut self.plan {
            plan.executed += 1;
        }
        Ok(())
    }

    /// Planned UA duration following the FA being entered.
    fn peek_ua_duration(&self) -> f64 {
        if let Some(plan) = &self.plan {
            let sol = &plan.solution;
            let node = sol.current_node + plan.executed + 2;
            if node < 3 * sol.u_sw.len() {
                return sol.node_inputs(node).0;
            }
        }
        self.orbit.command.t_ua
    }

    fn check_placement(&mut self, u: [f64; 2], new_stance: StanceSide) {
        let cfg = &self.sc.mpc;
        let lateral = new_stance.lateral_sign() * u[1];
        let ok = u[0].abs() <= cfg.max_reach_x + EPS
            && lateral >= cfg.lateral_min - EPS
            && lateral <= cfg.lateral_max + EPS;
        if !ok {
            self.log.bound_violations += 1;
        }
    }

    fn record_step(&mut self) {
        let com = self.com_world();
        let velocity = self.log.steps.last().map(|prev| {
            let dt = self.t - prev.t;
            [(com[0] - prev.com_world[0]) / dt, (com[1] - prev.com_world[1]) / dt]
        });
        self.log.steps.push(StepRecord {
            t: self.t,
            stance: self.stance,
            com_world: com,
            velocity,
            reference: self.orbit.step_velocity(self.stance),
        });
    }

    fn com_world(&self) -> [f64; 2] {
        [self.pivot[0] + self.x.sagittal.p, self.pivot[1] + self.x.coronal.p]
    }

    fn replan(&mut self) {
        let t_passed = self.t - self.domain_start;
        let now = MpcNow {
            x_now: self.x,
            domain_now: self.domain,
            t_passed,
            stance_side: self.stance,
            u_sw_current: if self.domain == DomainId::Oa { self.u_current } else { None },
            p_zmp_now: [self.x.sagittal.p_zmp, self.x.coronal.p_zmp],
            step_elapsed: if self.domain == DomainId::Oa { 0.0 } else { self.t - self.step_start },
        };
        let problem = match build_problem(&now, &self.orbit, &self.sc.mpc) {
            Ok(p) => p.apply_ablation(self.sc.ablation),
            Err(e) => {
                self.reject(format!("problem construction failed: {e}"));
                return;
            }
        };
        let guess = self
            .plan
            .as_ref()
            .filter(|p| p.executed < 3)
            .map(|p| shift_warm_start(&p.solution, self.t - p.solved_at, self.domain));
        let sol = solve(&problem, guess.as_ref());
        let accepted = sol.status == MpcStatus::Optimal
            || (sol.status == MpcStatus::MaxIter && sol.diagnostics.violation <= ACCEPT_VIOLATION);
        self.log.solves.push(SolveRecord {
            t: self.t,
            domain: self.domain,
            status: sol.status,
            accepted,
            iterations: sol.diagnostics.iterations,
            wall_time_s: sol.diagnostics.wall_time_s,
            cost: sol.diagnostics.cost,
            violation: sol.diagnostics.violation,
            t2imp: sol.now.t2imp,
            t_passed,
            now,
            durations: sol.durations.clone(),
            u_sw: sol.u_sw.clone(),
            message: sol.diagnostics.message.clone(),
        });
        if !accepted {
            self.reject(sol.diagnostics.message.clone());
            return;
        }
        self.failing_since = None;
        self.x.sagittal.p_zmp += sol.now.delta_zmp[0];
        self.x.coronal.p_zmp += sol.now.delta_zmp[1];
        self.rate = sol.now.zmp_rate;
        self.impact_at = self.t + sol.now.t2imp;
        self.commanded = t_passed + sol.now.t2imp;
        if sol.now.t2imp > EPS {
            if let Some(ps) = &self.domain_phase {
                if let Ok(next) = rescale_domain_phase(ps, self.commanded, t_passed) {
                    self.domain_phase = Some(next);
                }
            }
            let _ = match self.domain {
                DomainId::Fa => {
                    let t_ua = sol.node_inputs(sol.current_node + 1).0;
                    self.step_phase.retime(self.t, self.commanded, t_ua)
                }
                DomainId::Ua => self.step_phase.retime(self.t, 0.0, self.commanded),
                DomainId::Oa => Ok(()),
            };
        }
        self.plan = Some(Plan { solution: sol, executed: 0, solved_at: self.t });
    }

    fn reject(&mut self, message: String) {
        let since = *self.failing_since.get_or_insert(self.t);
        if self.t - since > self.orbit.command.step_duration() + EPS && self.log.aborted.is_none() {
            self.log.aborted = Some(format!("planner failed for more than one step: {message}"));
        }
    }

    fn sample(&mut self) {
        let mode = self.orbit.mode();
        let u = if self.domain == DomainId::Oa { self.u_current.unwrap_or([0.0; 2]) } else { [0.0; 2] };
        let set = zmp_constraint_set(self.domain, mode, &self.orbit.params);
        let zmp = [self.x.sagittal.p_zmp, self.x.coronal.p_zmp];
        let dist = hull_distance(&convex_hull(&set.vertices(u)), zmp);
        let tau = self.t - self.domain_start;
        let z0 = self.orbit.params.z0;
        self.log.samples.push(LogSample {
            t: self.t,
            domain: self.domain,
            stance: self.stance,
            pivot_world: self.pivot,
            com_world: self.com_world(),
            com_velocity: [self.x.sagittal.l / z0, self.x.coronal.l / z0],
            state: self.x,
            zmp_world: [self.pivot[0] + zmp[0], self.pivot[1] + zmp[1]],
            support_u: u,
            zmp_hull_distance: dist,
            domain_phase: self.domain_phase.map_or(1.0, |p| p.phase(tau).min(1.0)),
            step_phase: self.step_phase.phase(self.t).unwrap_or(0.0),
            disturbance: self.sc.disturbance(self.t),
            plan_held: self.failing_since.is_some(),
        });
    }

    fn next_event(&self, replan_at: f64, log_at: f64) -> f64 {
        let mut t = replan_at.min(log_at).min(self.impact_at).min(self.sc.duration);
        for p in &self.sc.pushes {
            for edge in [p.start, p.end()] {
                if edge > self.t + EPS {
                    t = t.min(edge);
                }
            }
        }
        t
    }
}

/// Runs a closed-loop scenario. The planner only sees the measured state; the
/// pushes act on the plant alone.
pub fn run_scenario(sc: &Scenario) -> Result<TrajectoryLog> {
    sc.validate()?;
    let orbit = ReferenceOrbit::compute(&sc.command, &sc.params)?;
    let cmd = orbit.command;
    let stance = StanceSide::Left;
    let fa = DomainId::Fa;
    let start = orbit.block(stance).post[fa.block_index()];
    let step = orbit.nominal.step(stance);
    let mut sim = Sim {
        sc,
        t: 0.0,
        domain: fa,
        stance,
        pivot: [0.0, 0.0],
        x: start,
        domain_start: 0.0,
        step_start: 0.0,
        u_current: None,
        rate: step.rate(fa),
        impact_at: cmd.t_fa,
        commanded: cmd.t_fa,
        plan: None,
        failing_since: None,
        domain_phase: PhaseState::new(cmd.t_fa).ok(),
        step_phase: StepPhase::new(0.0, cmd.t_fa, cmd.t_ua)?,
        log: TrajectoryLog {
            scenario: sc.clone(),
            samples: Vec::new(),
            impacts: Vec::new(),
            steps: Vec::new(),
            solves: Vec::new(),
            bound_violations: 0,
            aborted: None,
        },
        orbit,
    };

    let replan_dt = 1.0 / sc.replan_rate;
    let log_dt = 1.0 / sc.log_rate;
    let (mut replan_idx, mut log_idx) = (0u64, 0u64);
    loop {
        while sim.impact_at <= sim.t + EPS {
            sim.impact()?;
        }
        let replan_at = replan_idx as f64 * replan_dt;
        if sim.t >= replan_at - EPS {
            sim.replan();
            replan_idx += 1;
            while sim.impact_at <= sim.t + EPS {
                sim.impact()?;
            }
        }
        if sim.log.aborted.is_some() {
            sim.sample();
            break;
        }
        let log_at = log_idx as f64 * log_dt;
        if sim.t >= log_at - EPS {
            sim.sample();
            log_idx += 1;
        }
        if sim.t >= sc.duration - EPS {
            break;
        }
        let t_next = sim.next_event(replan_idx as f64 * replan_dt, log_idx as f64 * log_dt);
        let dt = t_next - sim.t;
        if dt > 0.0 {
            let accel = sc.disturbance(sim.t);
            sim.x = propagate_planar(
                &sim.x,
                &DomainInputs { zmp_rate: sim.rate, duration: dt },
                accel,
                &sim.orbit.params,
            )?;
        }
        sim.t = t_next;
        let fallen = !(sim.x.sagittal.is_finite() && sim.x.coronal.is_finite())
            || sim.x.sagittal.p.abs() > FALL_DISTANCE
            || sim.x.coronal.p.abs() > FALL_DISTANCE;
        if fallen {
            sim.log.aborted = Some(format!("fell at t = {:.3} s", sim.t));
            sim.sample();
            break;
        }
    }
    Ok(sim.log)
}
