//! Construction of the step-to-step NLP and its derivatives.

use nalgebra::DMatrix;

use super::config::{AblationMode, MpcConfig, MpcNow};
use super::layout::Layout;
use crate::error::{Error, Result};
use crate::model::{transition_sensitivity, DomainId, ModelParams, WalkMode};
use crate::optim::sqp::Nlp;
use crate::orbit::{GaitCommand, ReferenceOrbit, StanceSide};
use crate::support::zmp_constraint_set;

const AXIS_NAME: [&str; 2] = ["sagittal", "coronal"];
const COMP_NAME: [&str; 3] = ["p", "L", "p_zmp"];

#[derive(Debug, Clone, PartialEq)]
pub(crate) struct Affine {
    pub c: f64,
    pub terms: Vec<(usize, f64)>,
}

impl Affine {
    fn constant(c: f64) -> Self {
        Affine { c, terms: Vec::new() }
    }

    fn var(i: usize) -> Self {
        Affine {
            c: 0.0,
            terms: vec![(i, 1.0)],
        }
    }

    fn plus(mut self, i: usize, k: f64) -> Self {
        self.terms.push((i, k));
        self
    }

    fn shift(mut self, c: f64) -> Self {
        self.c += c;
        self
    }

    pub fn eval(&self, x: &[f64]) -> f64 {
        self.terms.iter().fold(self.c, |s, &(i, k)| s + k * x[i])
    }
}

#[derive(Debug, Clone, PartialEq)]
pub(crate) enum EqBlock {
    /// `x[out] = A(T) post + B(T) rate`, three rows.
    Dynamics {
        out: [usize; 3],
        post: [Affine; 3],
        t: usize,
        rate: usize,
    },
    /// `z = origin + a_foot * foot + a_step * u`, one row.
    Hull {
        z: Affine,
        origin: f64,
        foot: f64,
        a_foot: usize,
        a_step: usize,
        u: Option<usize>,
    },
}

impl EqBlock {
    fn rows(&self) -> usize {
        match self {
            EqBlock::Dynamics { .. } => 3,
            EqBlock::Hull { .. } => 1,
        }
    }
}

/// The planner NLP for one replan instant.
#[derive(Debug, Clone)]
pub struct MpcProblem {
    pub layout: Layout,
    pub now: MpcNow,
    pub command: GaitCommand,
    pub params: ModelParams,
    pub cfg: MpcConfig,
    pub ablation: AblationMode,
    /// Node of the executing domain in block 0.
    pub current_node: usize,
    /// Single-support foot of each block.
    pub sides: Vec<StanceSide>,
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
    /// Nominal value of every variable, also the cold-start guess.
    pub reference: Vec<f64>,
    pub(crate) cost: Vec<(usize, f64, f64)>,
    pub(crate) eq: Vec<EqBlock>,
    eq_rows: usize,
    eq_names: Vec<String>,
    pub(crate) ineq: Vec<Affine>,
    ineq_names: Vec<String>,
}

fn node_label(layout: &Layout, node: usize) -> String {
    format!("{}^{}", layout.node_domain(node), layout.node_block(node))
}

/// Assembles the planner NLP: dynamics chained from the measured state through
/// the current domain and the preview, support-region and timing constraints,
/// placement bounds and the tracking cost.
pub fn build_problem(now: &MpcNow, orbit: &ReferenceOrbit, cfg: &MpcConfig) -> Result<MpcProblem> {
    now.validate()?;
    cfg.validate()?;
    let cmd = orbit.command;
    let params = orbit.params;
    let mode = cmd.mode;
    if mode == WalkMode::FlatFooted && now.domain_now == DomainId::Ua {
        return Err(Error::Usage("flat-footed walking never rests in UA".into()));
    }
    let layout = Layout::new(cfg.n_preview);
    let n = layout.n_vars();
    let c = now.domain_now.block_index();
    let side0 = match now.domain_now {
        DomainId::Oa => now.stance_side.flip(),
        _ => now.stance_side,
    };
    let sides: Vec<StanceSide> = (0..layout.n_blocks)
        .map(|k| if k % 2 == 0 { side0 } else { side0.flip() })
        .collect();

    // nominal values of every slot
    let mut reference = vec![0.0; n];
    for (k, &side) in sides.iter().enumerate() {
        let step = orbit.nominal.step(side);
        let block = orbit.block(side);
        for a in 0..2 {
            reference[layout.u_sw(k, a)] = step.inputs.u_sw[a];
        }
        for d in DomainId::BLOCK_ORDER {
            let node = layout.node(k, d);
            let bi = d.block_index();
            let pre = block.pre[bi].to_array();
            for a in 0..2 {
                for comp in 0..3 {
                    reference[layout.state(node, a, comp)] = pre[3 * a + comp];
                }
                reference[layout.rate(node, a)] = step.rate(d)[a];
                reference[layout.delta(node, a)] = step.delta_into(d)[a];
            }
            reference[layout.duration(node)] = cmd.duration(d);
            for i in 0..4 {
                reference[layout.alpha(node, i)] = step.alpha[bi][i];
            }
        }
    }
    if let Some(u) = now.u_sw_current {
        reference[layout.u_sw(0, 0)] = u[0];
        reference[layout.u_sw(0, 1)] = u[1];
    }
    let t_nom = cmd.duration(now.domain_now);
    let step0 = orbit.nominal.step(side0);
    reference[layout.t2imp()] = (t_nom - now.t_passed).max(0.0);
    let frac = if t_nom > 0.0 { (now.t_passed / t_nom).min(1.0) } else { 0.0 };
    let a_nom = step0.alpha[c];
    for a in 0..2 {
        reference[layout.rate_now(a)] = step0.rate(now.domain_now)[a];
    }
    for i in 0..2 {
        reference[layout.alpha_now(i)] = a_nom[i] + (a_nom[i + 2] - a_nom[i]) * frac;
        reference[layout.alpha_now(i + 2)] = a_nom[i + 2];
    }

    let mut lower = vec![f64::NEG_INFINITY; n];
    let mut upper = vec![f64::INFINITY; n];
    let pin = |i: usize, v: f64, lower: &mut Vec<f64>, upper: &mut Vec<f64>| {
        lower[i] = v;
        upper[i] = v;
    };

    // placements
    for a in 0..2 {
        let i = layout.u_sw(0, a);
        pin(i, reference[i], &mut lower, &mut upper);
    }
    for (k, &side) in sides.iter().enumerate().skip(1) {
        let ix = layout.u_sw(k, 0);
        let iy = layout.u_sw(k, 1);
        lower[ix] = -cfg.max_reach_x;
        upper[ix] = cfg.max_reach_x;
        let (lo, hi) = match side {
            StanceSide::Left => (cfg.lateral_min, cfg.lateral_max),
            StanceSide::Right => (-cfg.lateral_max, -cfg.lateral_min),
        };
        lower[iy] = lo;
        upper[iy] = hi;
    }

    let slot_inputs = |node: usize| -> Vec<usize> {
        let mut v = vec![layout.duration(node)];
        for a in 0..2 {
            v.push(layout.rate(node, a));
            v.push(layout.delta(node, a));
        }
        for i in 0..4 {
            v.push(layout.alpha(node, i));
        }
        v
    };
    let alpha_bounds = |d: DomainId, idx: &dyn Fn(usize) -> usize, lower: &mut Vec<f64>, upper: &mut Vec<f64>| {
        let set = zmp_constraint_set(d, mode, &params);
        for (i, free) in [(0, set.foot_free), (1, set.step_free), (2, set.foot_free), (3, set.step_free)] {
            let v = idx(i);
            if free {
                lower[v] = 0.0;
                upper[v] = 1.0;
            } else {
                lower[v] = 0.0;
                upper[v] = 0.0;
            }
        }
    };

    for node in 0..layout.n_nodes() {
        let d = layout.node_domain(node);
        if node < c {
            // already executed in this step
            for comp in 0..3 {
                for a in 0..2 {
                    let i = layout.state(node, a, comp);
                    pin(i, reference[i], &mut lower, &mut upper);
                }
            }
            for i in slot_inputs(node) {
                pin(i, reference[i], &mut lower, &mut upper);
            }
            continue;
        }
        if node == c {
            for i in slot_inputs(node) {
                pin(i, reference[i], &mut lower, &mut upper);
            }
            continue;
        }
        let ordinal = node - c;
        let frozen = ordinal >= 3;
        let flat_ua = mode == WalkMode::FlatFooted && d == DomainId::Ua;
        let t = layout.duration(node);
        if flat_ua {
            pin(t, 0.0, &mut lower, &mut upper);
        } else if frozen {
            pin(t, reference[t], &mut lower, &mut upper);
        } else {
            lower[t] = 0.0;
            upper[t] = cfg.duration_factor * reference[t];
        }
        if flat_ua {
            for a in 0..2 {
                pin(layout.rate(node, a), 0.0, &mut lower, &mut upper);
                pin(layout.delta(node, a), 0.0, &mut lower, &mut upper);
            }
        }
        if frozen || flat_ua {
            for i in 0..4 {
                let v = layout.alpha(node, i);
                pin(v, reference[v], &mut lower, &mut upper);
            }
        } else {
            alpha_bounds(d, &|i| layout.alpha(node, i), &mut lower, &mut upper);
        }
    }
    let t2 = layout.t2imp();
    lower[t2] = 0.0;
    upper[t2] = (cfg.duration_factor * t_nom - now.t_passed).max(0.0);
    alpha_bounds(now.domain_now, &|i| layout.alpha_now(i), &mut lower, &mut upper);

    // cost
    let w = &cfg.weights;
    let mut cost = Vec::new();
    for k in 0..layout.n_blocks {
        let node = layout.node(k, DomainId::Ua);
        for a in 0..2 {
            for comp in 0..3 {
                let i = layout.state(node, a, comp);
                cost.push((i, w.w_x[comp], reference[i]));
            }
        }
        if k >= 1 {
            for a in 0..2 {
                let i = layout.u_sw(k, a);
                cost.push((i, w.w_sw, reference[i]));
            }
        }
    }
    for node in c + 1..layout.n_nodes() {
        let i = layout.duration(node);
        cost.push((i, w.w_t, reference[i]));
        for a in 0..2 {
            let r = layout.rate(node, a);
            let dl = layout.delta(node, a);
            cost.push((r, w.w_rate, reference[r]));
            cost.push((dl, w.w_delta, reference[dl]));
        }
    }
    cost.push((t2, w.w_ti, t_nom - now.t_passed));
    for a in 0..2 {
        cost.push((layout.delta_now(a), w.w_delta, 0.0));
        let r = layout.rate_now(a);
        cost.push((r, w.w_rate, reference[r]));
    }

    // equality constraints, in node order so the dynamics blocks can also
    // be used to roll states forward
    let mut eq = Vec::new();
    let mut eq_names = Vec::new();
    let x_now = now.x_now.to_array();
    let l = mode.fa_travel(&params);
    for node in c..layout.n_nodes() {
        let d = layout.node_domain(node);
        let k = layout.node_block(node);
        let label = node_label(&layout, node);
        let current = node == c;
        let alpha_idx = |i: usize| if current { layout.alpha_now(i) } else { layout.alpha(node, i) };
        let mut posts = Vec::with_capacity(2);
        for a in 0..2 {
            let post: [Affine; 3] = if current {
                [
                    Affine::constant(x_now[3 * a]),
                    Affine::constant(x_now[3 * a + 1]),
                    Affine::constant(now.p_zmp_now[a]).plus(layout.delta_now(a), 1.0),
                ]
            } else {
                let prev = node - 1;
                let mut p = Affine::var(layout.state(prev, a, 0));
                let lv = Affine::var(layout.state(prev, a, 1));
                let mut z = Affine::var(layout.state(prev, a, 2)).plus(layout.delta(node, a), 1.0);
                if d == DomainId::Fa {
                    let shift = if a == 0 { l } else { 0.0 };
                    p = p.plus(layout.u_sw(k, a), -1.0).shift(-shift);
                    z = z.plus(layout.u_sw(k, a), -1.0).shift(-shift);
                }
                [p, lv, z]
            };
            let (t, rate) = if current {
                (layout.t2imp(), layout.rate_now(a))
            } else {
                (layout.duration(node), layout.rate(node, a))
            };
            posts.push(post[2].clone());
            eq.push(EqBlock::Dynamics {
                out: [layout.state(node, a, 0), layout.state(node, a, 1), layout.state(node, a, 2)],
                post,
                t,
                rate,
            });
            for comp in COMP_NAME {
                eq_names.push(format!("dynamics {label} {} {comp}", AXIS_NAME[a]));
            }
        }
        if mode == WalkMode::FlatFooted && d == DomainId::Ua {
            continue;
        }
        let set = zmp_constraint_set(d, mode, &params);
        for (a, post_z) in posts.into_iter().enumerate() {
            let u = set.step_free.then(|| layout.u_sw(k, a));
            for (end, z, af, as_) in [
                ("post", post_z, alpha_idx(0), alpha_idx(1)),
                ("pre", Affine::var(layout.state(node, a, 2)), alpha_idx(2), alpha_idx(3)),
            ] {
                eq.push(EqBlock::Hull {
                    z,
                    origin: set.origin[a],
                    foot: set.foot[a],
                    a_foot: af,
                    a_step: as_,
                    u,
                });
                eq_names.push(format!("support {label} {end} {}", AXIS_NAME[a]));
            }
        }
    }
    let eq_rows = eq.iter().map(EqBlock::rows).sum();

    // swing-time inequalities
    let mut ineq = Vec::new();
    let mut ineq_names = Vec::new();
    for k in 0..layout.n_blocks {
        let jf = layout.node(k, DomainId::Fa);
        let ju = layout.node(k, DomainId::Ua);
        let expr = if jf > c {
            Affine::var(layout.duration(jf)).plus(layout.duration(ju), 1.0)
        } else if jf == c {
            Affine::var(layout.t2imp()).plus(layout.duration(ju), 1.0).shift(now.step_elapsed)
        } else if ju == c {
            Affine::var(layout.t2imp()).shift(now.step_elapsed)
        } else {
            continue;
        };
        ineq.push(expr.shift(-cfg.t_min_swing));
        ineq_names.push(format!("swing time of step {k}"));
    }

    let problem = MpcProblem {
        layout,
        now: *now,
        command: cmd,
        params,
        cfg: *cfg,
        ablation: AblationMode::Full,
        current_node: c,
        sides,
        lower,
        upper,
        reference,
        cost,
        eq,
        eq_rows,
        eq_names,
        ineq,
        ineq_names,
    };
    Ok(problem)
}

impl MpcProblem {
    fn pin(&mut self, i: usize, v: f64) {
        self.lower[i] = v;
        self.upper[i] = v;
    }

    pub fn is_fixed(&self, i: usize) -> bool {
        self.lower[i] == self.upper[i]
    }

    /// Restricts the problem to one of the ablated controllers.
    ///
    /// `NoZmp` fixes every support weight to its nominal value except the one
    /// describing the measured ZMP, and forbids an immediate ZMP shift.
    /// `NoStepTime` fixes every duration and the time-to-impact. With
    /// `NoFootPlacement` the placements stay within a small box around
    /// nominal.
    pub fn apply_ablation(mut self, mode: AblationMode) -> MpcProblem {
        let layout = self.layout;
        let c = self.current_node;
        match mode {
            AblationMode::Full => {}
            AblationMode::NoZmp => {
                for node in c + 1..layout.n_nodes() {
                    for i in 0..4 {
                        let v = layout.alpha(node, i);
                        if !self.is_fixed(v) {
                            self.pin(v, self.reference[v]);
                        }
                    }
                }
                for i in 2..4 {
                    let v = layout.alpha_now(i);
                    if !self.is_fixed(v) {
                        self.pin(v, self.reference[v]);
                    }
                }
                for a in 0..2 {
                    self.pin(layout.delta_now(a), 0.0);
                }
            }
            AblationMode::NoStepTime => {
                for node in c + 1..layout.n_nodes() {
                    let t = layout.duration(node);
                    if !self.is_fixed(t) {
                        self.pin(t, self.reference[t]);
                    }
                }
                let t2 = layout.t2imp();
                self.pin(t2, self.reference[t2]);
            }
            AblationMode::NoFootPlacement => {
                for k in 1..layout.n_blocks {
                    for a in 0..2 {
                        let i = layout.u_sw(k, a);
                        let r = self.reference[i];
                        self.lower[i] = self.lower[i].max(r - self.cfg.foot_relaxation);
                        self.upper[i] = self.upper[i].min(r + self.cfg.foot_relaxation);
                    }
                }
            }
        }
        self.ablation = mode;
        self
    }

    /// Overwrites the states of every active node by rolling the dynamics
    /// forward with the inputs stored in `x`.
    pub fn roll_out(&self, x: &mut [f64]) {
        for block in &self.eq {
            if let EqBlock::Dynamics { out, post, t, rate } = block {
                let s = transition_sensitivity(x[*t].max(0.0), &self.params).value;
                let xi = [post[0].eval(x), post[1].eval(x), post[2].eval(x)];
                for i in 0..3 {
                    x[out[i]] = (0..3).map(|j| s.a[(i, j)] * xi[j]).sum::<f64>() + s.b[i] * x[*rate];
                }
            }
        }
    }

    pub fn n_equalities(&self) -> usize {
        self.eq_rows
    }
}

impl Nlp for MpcProblem {
    fn n(&self) -> usize {
        self.layout.n_vars()
    }

    fn n_eq(&self) -> usize {
        self.eq_rows
    }

    fn n_ineq(&self) -> usize {
        self.ineq.len()
    }

    fn lower(&self) -> &[f64] {
        &self.lower
    }

    fn upper(&self) -> &[f64] {
        &self.upper
    }

    fn objective(&self, x: &[f64]) -> f64 {
        self.cost.iter().map(|&(i, w, r)| w * (x[i] - r).powi(2)).sum()
    }

    fn gradient(&self, x: &[f64], g: &mut [f64]) {
        g.fill(0.0);
        for &(i, w, r) in &self.cost {
            g[i] += 2.0 * w * (x[i] - r);
        }
    }

    fn constraints(&self, x: &[f64], c_eq: &mut [f64], c_in: &mut [f64]) {
        let mut row = 0;
        for block in &self.eq {
            match block {
                EqBlock::Dynamics { out, post, t, rate } => {
                    let s = transition_sensitivity(x[*t], &self.params).value;
                    let xi = [post[0].eval(x), post[1].eval(x), post[2].eval(x)];
                    for i in 0..3 {
                        let pred = (0..3).map(|j| s.a[(i, j)] * xi[j]).sum::<f64>() + s.b[i] * x[*rate];
                        c_eq[row + i] = x[out[i]] - pred;
                    }
                }
                EqBlock::Hull { z, origin, foot, a_foot, a_step, u } => {
                    let step = u.map_or(0.0, |u| x[*a_step] * x[u]);
                    c_eq[row] = z.eval(x) - (origin + x[*a_foot] * foot + step);
                }
            }
            row += block.rows();
        }
        for (r, expr) in self.ineq.iter().enumerate() {
            c_in[r] = expr.eval(x);
        }
    }

    fn jacobian(&self, x: &[f64], j_eq: &mut DMatrix<f64>, j_in: &mut DMatrix<f64>) {
        let mut row = 0;
        for block in &self.eq {
            match block {
                EqBlock::Dynamics { out, post, t, rate } => {
                    let s = transition_sensitivity(x[*t], &self.params);
                    let xi = [post[0].eval(x), post[1].eval(x), post[2].eval(x)];
                    for i in 0..3 {
                        let r = row + i;
                        j_eq[(r, out[i])] += 1.0;
                        for (j, expr) in post.iter().enumerate() {
                            for &(v, k) in &expr.terms {
                                j_eq[(r, v)] -= s.value.a[(i, j)] * k;
                            }
                        }
                        let dt = (0..3).map(|j| s.d1.a[(i, j)] * xi[j]).sum::<f64>() + s.d1.b[i] * x[*rate];
                        j_eq[(r, *t)] -= dt;
                        j_eq[(r, *rate)] -= s.value.b[i];
                    }
                }
                EqBlock::Hull { z, foot, a_foot, a_step, u, .. } => {
                    for &(v, k) in &z.terms {
                        j_eq[(row, v)] += k;
                    }
                    j_eq[(row, *a_foot)] -= foot;
                    if let Some(u) = u {
                        j_eq[(row, *a_step)] -= x[*u];
                        j_eq[(row, *u)] -= x[*a_step];
                    }
                }
            }
            row += block.rows();
        }
        for (r, expr) in self.ineq.iter().enumerate() {
            for &(v, k) in &expr.terms {
                j_in[(r, v)] += k;
            }
        }
    }

    fn lagrangian_hessian(&self, x: &[f64], y: &[f64], _z: &[f64], h: &mut DMatrix<f64>) {
        for &(i, w, _) in &self.cost {
            h[(i, i)] += 2.0 * w;
        }
        let mut row = 0;
        for block in &self.eq {
            match block {
                EqBlock::Dynamics { post, t, rate, .. } => {
                    let s = transition_sensitivity(x[*t], &self.params);
                    let xi = [post[0].eval(x), post[1].eval(x), post[2].eval(x)];
                    for i in 0..3 {
                        let yi = y[row + i];
                        if yi == 0.0 {
                            continue;
                        }
                        // -y * d2c, with c = out - A(T) post - B(T) rate
                        let dtt = (0..3).map(|j| s.d2.a[(i, j)] * xi[j]).sum::<f64>() + s.d2.b[i] * x[*rate];
                        h[(*t, *t)] += yi * dtt;
                        for (j, expr) in post.iter().enumerate() {
                            for &(v, k) in &expr.terms {
                                let e = yi * s.d1.a[(i, j)] * k;
                                h[(*t, v)] += e;
                                h[(v, *t)] += e;
                            }
                        }
                        let e = yi * s.d1.b[i];
                        h[(*t, *rate)] += e;
                        h[(*rate, *t)] += e;
                    }
                }
                EqBlock::Hull { a_step, u: Some(u), .. } => {
                    let yi = y[row];
                    h[(*a_step, *u)] += yi;
                    h[(*u, *a_step)] += yi;
                }
                EqBlock::Hull { .. } => {}
            }
            row += block.rows();
        }
    }

    fn constraint_name(&self, eq: bool, index: usize) -> String {
        let names = if eq { &self.eq_names } else { &self.ineq_names };
        names.get(index).cloned().unwrap_or_else(|| format!("#{index}"))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::orbit::reference_state;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn orbit(mode: WalkMode) -> ReferenceOrbit {
        let cmd = match mode {
            WalkMode::FlatFooted => GaitCommand::flat_footed(0.3, 0.1),
            WalkMode::MultiDomain => GaitCommand::multi_domain(0.4, 0.1),
        }
        .with_velocity(0.3, 0.0);
        ReferenceOrbit::compute(&cmd, &ModelParams::default()).unwrap()
    }

    fn now_at(orbit: &ReferenceOrbit, d: DomainId, t_passed: f64) -> MpcNow {
        let side = StanceSide::Left;
        let block_side = if d == DomainId::Oa { side.flip() } else { side };
        let mut x = orbit.block(block_side).post[d.block_index()];
        let rate = orbit.nominal.step(block_side).rate(d);
        x = crate::model::propagate_planar(
            &x,
            &crate::model::DomainInputs { zmp_rate: rate, duration: t_passed },
            [0.0; 2],
            &orbit.params,
        )
        .unwrap();
        let mut now = MpcNow::from_state(x, d, t_passed, side);
        if d == DomainId::Oa {
            now.u_sw_current = Some(orbit.nominal.step(block_side).inputs.u_sw);
        }
        if d == DomainId::Ua {
            now.step_elapsed = orbit.command.t_fa + t_passed;
        }
        now
    }

    #[test]
    fn reference_is_feasible_on_the_orbit() {
        for mode in [WalkMode::FlatFooted, WalkMode::MultiDomain] {
            let o = orbit(mode);
            let domains: &[DomainId] = match mode {
                WalkMode::FlatFooted => &[DomainId::Fa, DomainId::Oa],
                WalkMode::MultiDomain => &DomainId::BLOCK_ORDER,
            };
            for &d in domains {
                let now = now_at(&o, d, 0.4 * o.command.duration(d));
                let p = build_problem(&now, &o, &MpcConfig::default()).unwrap();
                let mut x = p.reference.clone();
                p.roll_out(&mut x);
                let mut ce = vec![0.0; p.n_eq()];
                let mut ci = vec![0.0; p.n_ineq()];
                p.constraints(&x, &mut ce, &mut ci);
                let worst = ce.iter().fold(0.0f64, |m, v| m.max(v.abs()));
                assert!(worst < 1e-10, "{mode:?} {d}: {worst}");
                assert!(ci.iter().all(|&v| v >= -1e-12));
                assert!((0..p.n()).all(|i| x[i] >= p.lower[i] - 1e-12 && x[i] <= p.upper[i] + 1e-12));
                assert!(p.objective(&x) < 1e-20, "{}", p.objective(&x));
            }
        }
    }

    #[test]
    fn flat_footed_pins_ua_time() {
        let o = orbit(WalkMode::FlatFooted);
        let p = build_problem(&now_at(&o, DomainId::Fa, 0.1), &o, &MpcConfig::default()).unwrap();
        for k in 0..p.layout.n_blocks {
            let t = p.layout.duration(p.layout.node(k, DomainId::Ua));
            assert_eq!((p.lower[t], p.upper[t]), (0.0, 0.0));
        }
    }

    #[test]
    fn nodes_before_the_current_domain_are_inactive() {
        let o = orbit(WalkMode::MultiDomain);
        let p = build_problem(&now_at(&o, DomainId::Fa, 0.05), &o, &MpcConfig::default()).unwrap();
        let oa0 = p.layout.node(0, DomainId::Oa);
        for a in 0..2 {
            for comp in 0..3 {
                assert!(p.is_fixed(p.layout.state(oa0, a, comp)));
            }
        }
        // the first dynamics block starts from the measured state
        match &p.eq[0] {
            EqBlock::Dynamics { out, post, t, .. } => {
                assert_eq!(out[0], p.layout.state(p.layout.node(0, DomainId::Fa), 0, 0));
                assert!(post[0].terms.is_empty());
                assert_eq!(*t, p.layout.t2imp());
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn oa_requires_current_placement() {
        let o = orbit(WalkMode::FlatFooted);
        let mut now = now_at(&o, DomainId::Oa, 0.02);
        now.u_sw_current = None;
        assert!(matches!(build_problem(&now, &o, &MpcConfig::default()), Err(Error::Usage(_))));
    }

    #[test]
    fn no_foot_placement_box() {
        let o = orbit(WalkMode::FlatFooted);
        let p = build_problem(&now_at(&o, DomainId::Fa, 0.1), &o, &MpcConfig::default())
            .unwrap()
            .apply_ablation(AblationMode::NoFootPlacement);
        for k in 1..p.layout.n_blocks {
            for a in 0..2 {
                let i = p.layout.u_sw(k, a);
                assert!((p.upper[i] - p.reference[i] - 0.05).abs() < 1e-15);
                assert!((p.reference[i] - p.lower[i] - 0.05).abs() < 1e-15);
            }
        }
    }

    #[test]
    fn full_ablation_is_identity() {
        let o = orbit(WalkMode::MultiDomain);
        let p = build_problem(&now_at(&o, DomainId::Ua, 0.05), &o, &MpcConfig::default()).unwrap();
        let q = p.clone().apply_ablation(AblationMode::Full);
        assert_eq!(p.lower, q.lower);
        assert_eq!(p.upper, q.upper);
    }

    // Analytic first and second derivatives against central differences.
    #[test]
    fn derivatives_match_finite_differences() {
        let o = orbit(WalkMode::MultiDomain);
        let p = build_problem(&now_at(&o, DomainId::Fa, 0.05), &o, &MpcConfig::default()).unwrap();
        let n = p.n();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let mut x = p.reference.clone();
        for v in x.iter_mut() {
            *v += rng.random_range(-0.05..0.05);
        }
        for i in 0..n {
            if p.lower[i] > f64::NEG_INFINITY {
                x[i] = x[i].max(p.lower[i] + 0.01).min(p.upper[i].max(p.lower[i] + 0.02));
            }
        }
        let (me, mi) = (p.n_eq(), p.n_ineq());
        let mut j_eq = DMatrix::zeros(me, n);
        let mut j_in = DMatrix::zeros(mi, n);
        p.jacobian(&x, &mut j_eq, &mut j_in);
        let h = 1e-6;
        let eval = |x: &[f64]| {
            let mut ce = vec![0.0; me];
            let mut ci = vec![0.0; mi];
            p.constraints(x, &mut ce, &mut ci);
            ce
        };
        for v in 0..n {
            let mut xp = x.clone();
            let mut xm = x.clone();
            xp[v] += h;
            xm[v] -= h;
            let (cp, cm) = (eval(&xp), eval(&xm));
            for r in 0..me {
                let fd = (cp[r] - cm[r]) / (2.0 * h);
                assert!((fd - j_eq[(r, v)]).abs() < 1e-6, "row {} var {v}: {fd} vs {}", p.constraint_name(true, r), j_eq[(r, v)]);
            }
        }
        // Lagrangian Hessian with random multipliers
        let y: Vec<f64> = (0..me).map(|_| rng.random_range(-1.0..1.0)).collect();
        let mut hess = DMatrix::zeros(n, n);
        p.lagrangian_hessian(&x, &y, &vec![0.0; mi], &mut hess);
        let lag_grad = |x: &[f64]| {
            let mut g = vec![0.0; n];
            p.gradient(x, &mut g);
            let mut je = DMatrix::zeros(me, n);
            let mut ji = DMatrix::zeros(mi, n);
            p.jacobian(x, &mut je, &mut ji);
            for v in 0..n {
                for r in 0..me {
                    g[v] -= y[r] * je[(r, v)];
                }
            }
            g
        };
        for v in 0..n {
            let mut xp = x.clone();
            let mut xm = x.clone();
            xp[v] += h;
            xm[v] -= h;
            let (gp, gm) = (lag_grad(&xp), lag_grad(&xm));
            for u in 0..n {
                let fd = (gp[u] - gm[u]) / (2.0 * h);
                assert!((fd - hess[(u, v)]).abs() < 1e-5, "H[{u},{v}]: {fd} vs {}", hess[(u, v)]);
            }
        }
    }

    #[test]
    fn cost_references_the_orbit() {
        let o = orbit(WalkMode::FlatFooted);
        let now = now_at(&o, DomainId::Fa, 0.0);
        let p = build_problem(&now, &o, &MpcConfig::default()).unwrap();
        let ua0 = p.layout.node(0, DomainId::Ua);
        let r = reference_state(&o, StanceSide::Left).to_array();
        for a in 0..2 {
            for comp in 0..3 {
                assert!((p.reference[p.layout.state(ua0, a, comp)] - r[3 * a + comp]).abs() < 1e-14);
            }
        }
    }
}
