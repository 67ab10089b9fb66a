use std::time::Instant;

use serde::{Deserialize, Serialize};

use super::layout::{Layout, BLOCK_LEN};
use super::problem::MpcProblem;
use crate::model::{DomainId, PlanarState, ZlipState};
use crate::optim::sqp::{solve_sqp, Nlp, SqpStatus};
use crate::orbit::StanceSide;

pub type MpcStatus = SqpStatus;

/// Inputs of the domain that is executing at the replan instant.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NowInputs {
    pub t2imp: f64,
    pub delta_zmp: [f64; 2],
    pub zmp_rate: [f64; 2],
    pub alpha: [f64; 4],
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MpcDiagnostics {
    pub cost: f64,
    pub violation: f64,
    pub stationarity: f64,
    pub iterations: usize,
    pub wall_time_s: f64,
    pub message: String,
}

/// Optimised preview. Per-block arrays are indexed by block, then by domain
/// in block order (OA, FA, UA). Slots before `current_node` in block 0 are
/// inactive and hold nominal values.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MpcSolution {
    pub status: MpcStatus,
    pub domain_now: DomainId,
    pub current_node: usize,
    pub sides: Vec<StanceSide>,
    pub states: Vec<[PlanarState; 3]>,
    pub u_sw: Vec<[f64; 2]>,
    pub durations: Vec<[f64; 3]>,
    pub zmp_rates: Vec<[[f64; 2]; 3]>,
    pub zmp_shifts: Vec<[[f64; 2]; 3]>,
    pub alphas: Vec<[[f64; 4]; 3]>,
    pub now: NowInputs,
    pub diagnostics: MpcDiagnostics,
    /// Raw decision vector and its nominal counterpart, kept for warm starts.
    pub variables: Vec<f64>,
    pub reference: Vec<f64>,
}

/// Primal starting point for [`solve`].
#[derive(Debug, Clone, PartialEq)]
pub struct InitialGuess {
    pub variables: Vec<f64>,
    pub domain_now: DomainId,
}

impl MpcSolution {
    pub fn layout(&self) -> Layout {
        Layout { n_blocks: self.u_sw.len() }
    }

    pub fn as_guess(&self) -> InitialGuess {
        InitialGuess {
            variables: self.variables.clone(),
            domain_now: self.domain_now,
        }
    }

    /// Duration, rates and entering shift of the node `node`, as planned.
    pub fn node_inputs(&self, node: usize) -> (f64, [f64; 2], [f64; 2]) {
        let (k, i) = (node / 3, node % 3);
        (self.durations[k][i], self.zmp_rates[k][i], self.zmp_shifts[k][i])
    }

    fn from_variables(problem: &MpcProblem, x: Vec<f64>, status: MpcStatus, diagnostics: MpcDiagnostics) -> Self {
        let l = problem.layout;
        let mut states = Vec::with_capacity(l.n_blocks);
        let mut u_sw = Vec::new();
        let mut durations = Vec::new();
        let mut zmp_rates = Vec::new();
        let mut zmp_shifts = Vec::new();
        let mut alphas = Vec::new();
        for k in 0..l.n_blocks {
            u_sw.push([x[l.u_sw(k, 0)], x[l.u_sw(k, 1)]]);
            let mut st = [PlanarState::default(); 3];
            let mut t = [0.0; 3];
            let mut r = [[0.0; 2]; 3];
            let mut dl = [[0.0; 2]; 3];
            let mut al = [[0.0; 4]; 3];
            for d in DomainId::BLOCK_ORDER {
                let node = l.node(k, d);
                let i = d.block_index();
                let axis = |a: usize| {
                    ZlipState::new(x[l.state(node, a, 0)], x[l.state(node, a, 1)], x[l.state(node, a, 2)])
                };
                st[i] = PlanarState::new(axis(0), axis(1));
                t[i] = x[l.duration(node)];
                for a in 0..2 {
                    r[i][a] = x[l.rate(node, a)];
                    dl[i][a] = x[l.delta(node, a)];
                }
                for j in 0..4 {
                    al[i][j] = x[l.alpha(node, j)];
                }
            }
            states.push(st);
            durations.push(t);
            zmp_rates.push(r);
            zmp_shifts.push(dl);
            alphas.push(al);
        }
        let now = NowInputs {
            t2imp: x[l.t2imp()],
            delta_zmp: [x[l.delta_now(0)], x[l.delta_now(1)]],
            zmp_rate: [x[l.rate_now(0)], x[l.rate_now(1)]],
            alpha: [0, 1, 2, 3].map(|j| x[l.alpha_now(j)]),
        };
        MpcSolution {
            status,
            domain_now: problem.now.domain_now,
            current_node: problem.current_node,
            sides: problem.sides.clone(),
            states,
            u_sw,
            durations,
            zmp_rates,
            zmp_shifts,
            alphas,
            now,
            diagnostics,
            variables: x,
            reference: problem.reference.clone(),
        }
    }
}

/// Solves the planner NLP, optionally from a warm start. States in the guess
/// are replaced by a roll-out of its inputs so the start is dynamically
/// consistent.
pub fn solve(problem: &MpcProblem, warm_start: Option<&InitialGuess>) -> MpcSolution {
    let started = Instant::now();
    let n = problem.n();
    let mut x = match warm_start {
        Some(g) if g.variables.len() == n => g.variables.clone(),
        _ => problem.reference.clone(),
    };
    for (i, v) in x.iter_mut().enumerate() {
        if !v.is_finite() {
            *v = problem.reference[i];
        }
        *v = v.clamp(problem.lower[i], problem.upper[i]);
    }
    problem.roll_out(&mut x);
    let result = solve_sqp(problem, &x, &problem.cfg.solver);
    let diagnostics = MpcDiagnostics {
        cost: result.objective,
        violation: result.violation,
        stationarity: result.stationarity,
        iterations: result.iterations,
        wall_time_s: started.elapsed().as_secs_f64(),
        message: result.message,
    };
    MpcSolution::from_variables(problem, result.x, result.status, diagnostics)
}

/// Moves the now-inputs to the slot of the next domain; on the UA to OA
/// rollover the blocks move forward by one and the last block is refilled
/// from the nominal values of the block with the same stance side.
fn advance(vars: &mut [f64], reference: &[f64], layout: Layout, current: DomainId) -> DomainId {
    let next = current.successor();
    if next == DomainId::Oa {
        let nb = layout.n_blocks;
        vars.copy_within(BLOCK_LEN..nb * BLOCK_LEN, 0);
        let src = (nb - 2) * BLOCK_LEN;
        let dst = (nb - 1) * BLOCK_LEN;
        vars[dst..dst + BLOCK_LEN].copy_from_slice(&reference[src..src + BLOCK_LEN]);
    }
    let node = layout.node(0, next);
    vars[layout.t2imp()] = vars[layout.duration(node)];
    for a in 0..2 {
        vars[layout.rate_now(a)] = vars[layout.rate(node, a)];
        vars[layout.delta_now(a)] = 0.0;
    }
    for j in 0..4 {
        vars[layout.alpha_now(j)] = vars[layout.alpha(node, j)];
    }
    next
}

/// Initial guess for the next replan: time-to-impact reduced by `elapsed`
/// (never below zero) and the preview rolled forward across any domain
/// changes that happened meanwhile.
pub fn shift_warm_start(prev: &MpcSolution, elapsed: f64, new_domain: DomainId) -> InitialGuess {
    let layout = prev.layout();
    let mut vars = prev.variables.clone();
    // reference blocks alternate sides, so a rollover also flips them
    let mut reference = prev.reference.clone();
    let mut domain = prev.domain_now;
    let mut remaining = elapsed.max(0.0);
    let mut guard = 0;
    while domain != new_domain && guard < 3 {
        remaining = (remaining - vars[layout.t2imp()]).max(0.0);
        let next = advance(&mut vars, &reference, layout, domain);
        if next == DomainId::Oa {
            let nb = layout.n_blocks;
            let shifted: Vec<f64> = reference[BLOCK_LEN..nb * BLOCK_LEN].to_vec();
            let src = (nb - 2) * BLOCK_LEN;
            let tail: Vec<f64> = reference[src..src + BLOCK_LEN].to_vec();
            reference[..(nb - 1) * BLOCK_LEN].copy_from_slice(&shifted);
            reference[(nb - 1) * BLOCK_LEN..nb * BLOCK_LEN].copy_from_slice(&tail);
        }
        domain = next;
        guard += 1;
    }
    let t2 = layout.t2imp();
    vars[t2] = (vars[t2] - remaining).max(0.0);
    InitialGuess {
        variables: vars,
        domain_now: new_domain,
    }
}
