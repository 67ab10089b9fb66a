//! Line-search SQP for small dense NLPs with an exact Lagrangian Hessian.
//!
//! Problem form: `min f(x)  s.t.  c_eq(x) = 0,  c_in(x) >= 0,  lb <= x <= ub`.
//! Variables with `lb == ub` are fixed and removed from the subproblems.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use super::qp::{solve_qp, QpError, QpProblem};

pub trait Nlp {
    fn n(&self) -> usize;
    fn n_eq(&self) -> usize;
    fn n_ineq(&self) -> usize;
    fn lower(&self) -> &[f64];
    fn upper(&self) -> &[f64];
    fn objective(&self, x: &[f64]) -> f64;
    fn gradient(&self, x: &[f64], g: &mut [f64]);
    fn constraints(&self, x: &[f64], c_eq: &mut [f64], c_in: &mut [f64]);
    /// Dense Jacobians, rows are constraints.
    fn jacobian(&self, x: &[f64], j_eq: &mut DMatrix<f64>, j_in: &mut DMatrix<f64>);
    /// Hessian of `f - y'c_eq - z'c_in`, accumulated into `h` (zeroed by the
    /// caller).
    fn lagrangian_hessian(&self, x: &[f64], y: &[f64], z: &[f64], h: &mut DMatrix<f64>);
    fn constraint_name(&self, _eq: bool, index: usize) -> String {
        format!("#{index}")
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SqpOptions {
    pub max_iter: usize,
    pub feas_tol: f64,
    pub opt_tol: f64,
    /// Smallest diagonal shift added to the reduced Hessian.
    pub min_regularization: f64,
}

impl Default for SqpOptions {
    fn default() -> Self {
        SqpOptions {
            max_iter: 50,
            feas_tol: 1e-9,
            opt_tol: 1e-6,
            min_regularization: 1e-7,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SqpStatus {
    Optimal,
    MaxIter,
    Infeasible,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SqpResult {
    pub x: Vec<f64>,
    pub status: SqpStatus,
    pub objective: f64,
    pub violation: f64,
    pub stationarity: f64,
    pub iterations: usize,
    pub message: String,
}

struct Work {
    free: Vec<usize>,
    c_eq: Vec<f64>,
    c_in: Vec<f64>,
    grad: Vec<f64>,
    j_eq: DMatrix<f64>,
    j_in: DMatrix<f64>,
}

fn violation(c_eq: &[f64], c_in: &[f64]) -> f64 {
    let e = c_eq.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    c_in.iter().fold(e, |m, v| m.max(-v))
}

fn l1_violation(c_eq: &[f64], c_in: &[f64]) -> f64 {
    c_eq.iter().map(|v| v.abs()).sum::<f64>() + c_in.iter().map(|v| (-v).max(0.0)).sum::<f64>()
}

/// Most violated constraint of the current iterate, for reports.
fn worst_constraint<P: Nlp>(nlp: &P, c_eq: &[f64], c_in: &[f64]) -> String {
    let mut best = (0.0, String::from("none"));
    for (i, v) in c_eq.iter().enumerate() {
        if v.abs() > best.0 {
            best = (v.abs(), nlp.constraint_name(true, i));
        }
    }
    for (i, v) in c_in.iter().enumerate() {
        if -v > best.0 {
            best = (-v, nlp.constraint_name(false, i));
        }
    }
    format!("{} (violation {:.3e})", best.1, best.0)
}

/// Builds and solves the QP subproblem in the free variables. `shift_eq` and
/// `shift_in` replace the constraint values (used by the second-order
/// correction).
fn qp_step<P: Nlp>(
    nlp: &P,
    x: &[f64],
    w: &Work,
    h_free: &DMatrix<f64>,
    c_eq: &[f64],
    c_in: &[f64],
    with_cost: bool,
) -> Result<(DVector<f64>, DVector<f64>, DVector<f64>), (QpError, String)> {
    let nf = w.free.len();
    let lb = nlp.lower();
    let ub = nlp.upper();
    let g = if with_cost {
        DVector::from_iterator(nf, w.free.iter().map(|&i| w.grad[i]))
    } else {
        DVector::zeros(nf)
    };

    // Rows with no free entries are either satisfied or hopeless.
    let mut eq_rows = Vec::new();
    for (r, &c) in c_eq.iter().enumerate() {
        if w.free.iter().any(|&i| w.j_eq[(r, i)] != 0.0) {
            eq_rows.push(r);
        } else if c.abs() > 1e-9 {
            return Err((QpError::InfeasibleEquality(r), nlp.constraint_name(true, r)));
        }
    }
    let mut in_rows = Vec::new();
    for (r, &c) in c_in.iter().enumerate() {
        if w.free.iter().any(|&i| w.j_in[(r, i)] != 0.0) {
            in_rows.push(r);
        } else if c < -1e-9 {
            return Err((QpError::InfeasibleInequality(r), nlp.constraint_name(false, r)));
        }
    }
    let mut bound_rows: Vec<(usize, f64, f64)> = Vec::new(); // (free idx, sign, rhs)
    for (k, &i) in w.free.iter().enumerate() {
        if lb[i].is_finite() {
            bound_rows.push((k, 1.0, lb[i] - x[i]));
        }
        if ub[i].is_finite() {
            bound_rows.push((k, -1.0, x[i] - ub[i]));
        }
    }

    let a_eq = DMatrix::from_fn(eq_rows.len(), nf, |r, k| w.j_eq[(eq_rows[r], w.free[k])]);
    let b_eq = DVector::from_iterator(eq_rows.len(), eq_rows.iter().map(|&r| -c_eq[r]));
    let mi = in_rows.len() + bound_rows.len();
    let mut a_in = DMatrix::zeros(mi, nf);
    let mut b_in = DVector::zeros(mi);
    for (row, &r) in in_rows.iter().enumerate() {
        for k in 0..nf {
            a_in[(row, k)] = w.j_in[(r, w.free[k])];
        }
        b_in[row] = -c_in[r];
    }
    for (row, &(k, sign, rhs)) in bound_rows.iter().enumerate() {
        a_in[(in_rows.len() + row, k)] = sign;
        b_in[in_rows.len() + row] = rhs;
    }

    let qp = QpProblem {
        h: h_free.clone(),
        g,
        a_eq,
        b_eq,
        a_in,
        b_in,
    };
    match solve_qp(&qp) {
        Ok(sol) => {
            let mut y = DVector::zeros(c_eq.len());
            for (row, &r) in eq_rows.iter().enumerate() {
                y[r] = sol.y_eq[row];
            }
            let mut z = DVector::zeros(c_in.len());
            for (row, &r) in in_rows.iter().enumerate() {
                z[r] = sol.z_in[row];
            }
            Ok((sol.x, y, z))
        }
        Err(e) => {
            let name = match e {
                QpError::InfeasibleEquality(row) => nlp.constraint_name(true, eq_rows[row]),
                QpError::InfeasibleInequality(row) if row < in_rows.len() => {
                    nlp.constraint_name(false, in_rows[row])
                }
                QpError::InfeasibleInequality(row) => {
                    format!("bound of variable {}", w.free[bound_rows[row - in_rows.len()].0])
                }
                _ => String::new(),
            };
            Err((e, name))
        }
    }
}

/// Returns a positive definite model Hessian and the augmentation weight.
fn convexify(h_reg: &DMatrix<f64>, w: &Work, scale: f64) -> (DMatrix<f64>, f64) {
    if h_reg.clone().cholesky().is_some() {
        return (h_reg.clone(), 0.0);
    }
    let nf = h_reg.nrows();
    let j = DMatrix::from_fn(w.j_eq.nrows(), nf, |r, k| w.j_eq[(r, w.free[k])]);
    let jtj = j.transpose() * &j;
    let jscale = (0..nf).fold(0.0f64, |m, k| m.max(jtj[(k, k)]));
    if jscale > 0.0 {
        let mut rho = scale / jscale;
        for _ in 0..10 {
            let h = h_reg + &jtj * rho;
            if h.clone().cholesky().is_some() {
                return (h, rho);
            }
            rho *= 10.0;
        }
    }
    // indefinite on the tangent space as well: fall back to a diagonal shift
    let mut delta = 1e-4 * scale;
    loop {
        let mut h = h_reg.clone();
        for k in 0..nf {
            h[(k, k)] += delta;
        }
        if h.clone().cholesky().is_some() {
            return (h, 0.0);
        }
        delta *= 10.0;
    }
}

/// Minimum-norm Newton projections onto the constraints, used to hand back a
/// consistent iterate when the iteration limit is hit. Returns the final
/// violation; `x` only changes when the violation drops.
fn restore_feasibility<P: Nlp>(nlp: &P, x: &mut Vec<f64>, w: &mut Work, mut viol: f64, tol: f64) -> f64 {
    let (lb, ub) = (nlp.lower(), nlp.upper());
    let eye = DMatrix::identity(w.free.len(), w.free.len());
    for _ in 0..5 {
        if viol <= tol {
            break;
        }
        let Ok((d, _, _)) = qp_step(nlp, x, w, &eye, &w.c_eq, &w.c_in, false) else { break };
        let mut xt = x.clone();
        for (k, &i) in w.free.iter().enumerate() {
            xt[i] = (xt[i] + d[k]).clamp(lb[i], ub[i]);
        }
        let mut ce = vec![0.0; w.c_eq.len()];
        let mut ci = vec![0.0; w.c_in.len()];
        nlp.constraints(&xt, &mut ce, &mut ci);
        let v = violation(&ce, &ci);
        if v >= viol {
            break;
        }
        *x = xt;
        viol = v;
        evaluate(nlp, x, w);
    }
    viol
}

fn evaluate<P: Nlp>(nlp: &P, x: &[f64], w: &mut Work) {
    nlp.constraints(x, &mut w.c_eq, &mut w.c_in);
    nlp.gradient(x, &mut w.grad);
    w.j_eq.fill(0.0);
    w.j_in.fill(0.0);
    nlp.jacobian(x, &mut w.j_eq, &mut w.j_in);
}

/// Runs SQP from `x0` (projected onto the bounds).
pub fn solve_sqp<P: Nlp>(nlp: &P, x0: &[f64], opts: &SqpOptions) -> SqpResult {
    let n = nlp.n();
    let (me, mi) = (nlp.n_eq(), nlp.n_ineq());
    let lb = nlp.lower();
    let ub = nlp.upper();
    let mut x: Vec<f64> = (0..n).map(|i| x0[i].clamp(lb[i], ub[i])).collect();
    let free: Vec<usize> = (0..n).filter(|&i| lb[i] < ub[i]).collect();
    let mut w = Work {
        free,
        c_eq: vec![0.0; me],
        c_in: vec![0.0; mi],
        grad: vec![0.0; n],
        j_eq: DMatrix::zeros(me, n),
        j_in: DMatrix::zeros(mi, n),
    };
    let nf = w.free.len();
    let mut y = vec![0.0; me];
    let mut z = vec![0.0; mi];
    let mut nu = 1.0;
    let mut h_full = DMatrix::zeros(n, n);
    let mut iterations = 0;
    let mut stationarity = f64::INFINITY;

    evaluate(nlp, &x, &mut w);
    loop {
        let viol = violation(&w.c_eq, &w.c_in);
        if iterations >= opts.max_iter {
            let viol = restore_feasibility(nlp, &mut x, &mut w, viol, opts.feas_tol);
            return SqpResult {
                objective: nlp.objective(&x),
                x,
                status: SqpStatus::MaxIter,
                violation: viol,
                stationarity,
                iterations,
                message: format!("iteration limit; worst constraint {}", worst_constraint(nlp, &w.c_eq, &w.c_in)),
            };
        }
        iterations += 1;

        h_full.fill(0.0);
        nlp.lagrangian_hessian(&x, &y, &z, &mut h_full);
        let base = DMatrix::from_fn(nf, nf, |a, b| h_full[(w.free[a], w.free[b])]);
        let scale = (0..nf).fold(1.0f64, |m, k| m.max(base[(k, k)].abs()));
        let delta = opts.min_regularization * scale;
        let mut h_reg = base;
        for k in 0..nf {
            h_reg[(k, k)] += delta;
        }
        // The Lagrangian Hessian is usually indefinite in the full space but
        // positive on the tangent space of the equalities. Adding rho J'J
        // leaves the QP step unchanged and only shifts the multipliers by
        // rho c, so it is preferred over a large diagonal shift.
        let (h_free, rho) = convexify(&h_reg, &w, scale);
        let (d, y_qp, z_qp) = match qp_step(nlp, &x, &w, &h_free, &w.c_eq, &w.c_in, true) {
            Ok(s) => s,
            Err((e, name)) => {
                return SqpResult {
                    objective: nlp.objective(&x),
                    x,
                    status: SqpStatus::Infeasible,
                    violation: viol,
                    stationarity,
                    iterations,
                    message: format!("{e}: {name}"),
                };
            }
        };
        stationarity = (&h_reg * &d).amax();
        let step_norm = d.amax();

        let merit = |f: f64, ce: &[f64], ci: &[f64], nu: f64| f + nu * l1_violation(ce, ci);
        let y_true = y_qp.iter().zip(&w.c_eq).fold(0.0f64, |m, (v, c)| m.max((v + rho * c).abs()));
        let max_mult = y_true.max(z_qp.amax());
        if nu < 1.1 * max_mult {
            nu = 1.1 * max_mult + 1e-3;
        }
        let f0 = nlp.objective(&x);
        let phi0 = merit(f0, &w.c_eq, &w.c_in, nu);
        let gd: f64 = w.free.iter().enumerate().map(|(k, &i)| w.grad[i] * d[k]).sum();
        let dphi = gd - nu * l1_violation(&w.c_eq, &w.c_in);

        let trial = |alpha: f64, dir: &DVector<f64>, base: &[f64]| {
            let mut xt = base.to_vec();
            for (k, &i) in w.free.iter().enumerate() {
                xt[i] = (xt[i] + alpha * dir[k]).clamp(lb[i], ub[i]);
            }
            xt
        };
        let mut ce = vec![0.0; me];
        let mut ci = vec![0.0; mi];

        let converged = viol <= opts.feas_tol && stationarity <= opts.opt_tol;
        let mut accepted = None;
        let mut alpha = 1.0;
        while alpha > 1e-10 {
            let xt = trial(alpha, &d, &x);
            nlp.constraints(&xt, &mut ce, &mut ci);
            let phit = merit(nlp.objective(&xt), &ce, &ci, nu);
            if phit <= phi0 + 1e-4 * alpha * dphi.min(0.0) + 1e-14 * phi0.abs().max(1.0) {
                accepted = Some(xt);
                break;
            }
            if alpha == 1.0 && !converged {
                // second-order correction for the curvature of the constraints
                let mut ce_soc = ce.clone();
                let mut ci_soc = ci.clone();
                for r in 0..me {
                    let jd: f64 = w.free.iter().enumerate().map(|(k, &i)| w.j_eq[(r, i)] * d[k]).sum();
                    ce_soc[r] -= jd;
                }
                for r in 0..mi {
                    let jd: f64 = w.free.iter().enumerate().map(|(k, &i)| w.j_in[(r, i)] * d[k]).sum();
                    ci_soc[r] -= jd;
                }
                if let Ok((d_soc, _, _)) = qp_step(nlp, &x, &w, &h_free, &ce_soc, &ci_soc, true) {
                    let xs = trial(1.0, &d_soc, &x);
                    let mut ce2 = vec![0.0; me];
                    let mut ci2 = vec![0.0; mi];
                    nlp.constraints(&xs, &mut ce2, &mut ci2);
                    let phis = merit(nlp.objective(&xs), &ce2, &ci2, nu);
                    if phis <= phi0 + 1e-4 * dphi.min(0.0) {
                        accepted = Some(xs);
                        break;
                    }
                }
            }
            alpha *= 0.5;
        }

        y = y_qp.iter().zip(&w.c_eq).map(|(v, c)| v + rho * c).collect();
        z = z_qp.iter().copied().collect();
        match accepted {
            Some(xt) => x = xt,
            None if converged => {}
            None => {
                evaluate(nlp, &x, &mut w);
                return SqpResult {
                    objective: nlp.objective(&x),
                    violation: violation(&w.c_eq, &w.c_in),
                    x,
                    status: SqpStatus::MaxIter,
                    stationarity,
                    iterations,
                    message: "line search failed".into(),
                };
            }
        }
        evaluate(nlp, &x, &mut w);
        let viol_new = violation(&w.c_eq, &w.c_in);
        if converged || (viol_new <= opts.feas_tol && step_norm <= 1e-12) {
            return SqpResult {
                objective: nlp.objective(&x),
                x,
                status: SqpStatus::Optimal,
                violation: viol_new,
                stationarity,
                iterations,
                message: String::new(),
            };
        }
    }
}
