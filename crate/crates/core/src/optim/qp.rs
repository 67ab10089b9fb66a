//! Dense strictly convex QP solver (dual active-set method of Goldfarb and
//! Idnani).
//!
//! Solves `min 1/2 x'Hx + g'x  s.t.  A_eq x = b_eq,  A_in x >= b_in` for a
//! positive definite `H`. Multipliers follow the convention
//! `Hx + g = A_eq' y + A_in' z` with `z >= 0`.

use nalgebra::{DMatrix, DVector};
use thiserror::Error;

#[derive(Debug, Clone)]
pub struct QpProblem {
    pub h: DMatrix<f64>,
    pub g: DVector<f64>,
    pub a_eq: DMatrix<f64>,
    pub b_eq: DVector<f64>,
    pub a_in: DMatrix<f64>,
    pub b_in: DVector<f64>,
}

#[derive(Debug, Clone)]
pub struct QpSolution {
    pub x: DVector<f64>,
    pub y_eq: DVector<f64>,
    pub z_in: DVector<f64>,
    pub objective: f64,
    pub iterations: usize,
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum QpError {
    #[error("QP Hessian is not positive definite")]
    NotPositiveDefinite,
    #[error("QP is infeasible (equality constraint {0})")]
    InfeasibleEquality(usize),
    #[error("QP is infeasible (inequality constraint {0})")]
    InfeasibleInequality(usize),
    #[error("QP iteration limit reached")]
    MaxIterations,
    #[error("QP dimensions are inconsistent")]
    Dimension,
}

const EPS: f64 = 1e-14;

/// Active-set state: `J` with `J J' = H^-1` and the triangular factor `R` of
/// the active constraint normals expressed in the `J` basis.
struct Factor {
    n: usize,
    j: DMatrix<f64>,
    r: DMatrix<f64>,
    iq: usize,
    r_norm: f64,
}

impl Factor {
    /// `d = J' np`, `z = J2 d2`, `r = R^-1 d1`.
    fn step_direction(&self, np: &DVector<f64>) -> (DVector<f64>, DVector<f64>, DVector<f64>) {
        let d = self.j.tr_mul(np);
        let mut z = DVector::zeros(self.n);
        for col in self.iq..self.n {
            if d[col] != 0.0 {
                z.axpy(d[col], &self.j.column(col), 1.0);
            }
        }
        let mut r = DVector::zeros(self.iq);
        for i in (0..self.iq).rev() {
            let mut s = d[i];
            for k in i + 1..self.iq {
                s -= self.r[(i, k)] * r[k];
            }
            r[i] = s / self.r[(i, i)];
        }
        (d, z, r)
    }

    fn add(&mut self, d: &mut DVector<f64>) -> bool {
        let n = self.n;
        let iq = self.iq;
        for jj in (iq + 1..n).rev() {
            let mut cc = d[jj - 1];
            let mut ss = d[jj];
            let h = cc.hypot(ss);
            if h == 0.0 {
                continue;
            }
            d[jj] = 0.0;
            ss /= h;
            cc /= h;
            if cc < 0.0 {
                cc = -cc;
                ss = -ss;
                d[jj - 1] = -h;
            } else {
                d[jj - 1] = h;
            }
            let xny = ss / (1.0 + cc);
            for k in 0..n {
                let t1 = self.j[(k, jj - 1)];
                let t2 = self.j[(k, jj)];
                let v = t1 * cc + t2 * ss;
                self.j[(k, jj - 1)] = v;
                self.j[(k, jj)] = xny * (t1 + v) - t2;
            }
        }
        self.iq += 1;
        for i in 0..self.iq {
            self.r[(i, self.iq - 1)] = d[i];
        }
        let diag = d[self.iq - 1].abs();
        if diag <= EPS * self.r_norm.max(1.0) {
            // linearly dependent on the active set
            self.iq -= 1;
            for i in 0..=self.iq {
                self.r[(i, self.iq)] = 0.0;
            }
            return false;
        }
        self.r_norm = self.r_norm.max(diag);
        true
    }

    fn remove(&mut self, qq: usize) {
        let n = self.n;
        for i in qq..self.iq - 1 {
            for k in 0..n {
                self.r[(k, i)] = self.r[(k, i + 1)];
            }
        }
        for k in 0..n {
            self.r[(k, self.iq - 1)] = 0.0;
        }
        self.iq -= 1;
        for jj in qq..self.iq {
            let mut cc = self.r[(jj, jj)];
            let mut ss = self.r[(jj + 1, jj)];
            let h = cc.hypot(ss);
            if h == 0.0 {
                continue;
            }
            cc /= h;
            ss /= h;
            self.r[(jj + 1, jj)] = 0.0;
            if cc < 0.0 {
                self.r[(jj, jj)] = -h;
                cc = -cc;
                ss = -ss;
            } else {
                self.r[(jj, jj)] = h;
            }
            let xny = ss / (1.0 + cc);
            for k in jj + 1..self.iq {
                let t1 = self.r[(jj, k)];
                let t2 = self.r[(jj + 1, k)];
                let v = t1 * cc + t2 * ss;
                self.r[(jj, k)] = v;
                self.r[(jj + 1, k)] = xny * (t1 + v) - t2;
            }
            for k in 0..n {
                let t1 = self.j[(k, jj)];
                let t2 = self.j[(k, jj + 1)];
                let v = t1 * cc + t2 * ss;
                self.j[(k, jj)] = v;
                self.j[(k, jj + 1)] = xny * (v + t1) - t2;
            }
        }
    }
}

pub fn solve_qp(p: &QpProblem) -> Result<QpSolution, QpError> {
    let n = p.h.nrows();
    let me = p.a_eq.nrows();
    let mi = p.a_in.nrows();
    if p.h.ncols() != n
        || p.g.len() != n
        || (me > 0 && p.a_eq.ncols() != n)
        || (mi > 0 && p.a_in.ncols() != n)
        || p.b_eq.len() != me
        || p.b_in.len() != mi
    {
        return Err(QpError::Dimension);
    }

    let chol = p.h.clone().cholesky().ok_or(QpError::NotPositiveDefinite)?;
    let l_inv = chol
        .l()
        .solve_lower_triangular(&DMatrix::identity(n, n))
        .ok_or(QpError::NotPositiveDefinite)?;
    let mut f = Factor {
        n,
        j: l_inv.transpose(),
        r: DMatrix::zeros(n, n),
        iq: 0,
        r_norm: 1.0,
    };

    // Row scaling so that violations are comparable across constraints.
    let scale_rows = |a: &DMatrix<f64>, b: &DVector<f64>| {
        let mut a = a.clone();
        let mut b = b.clone();
        let mut s = DVector::from_element(a.nrows(), 1.0);
        for i in 0..a.nrows() {
            let norm = a.row(i).norm();
            if norm > 0.0 {
                s[i] = norm;
                a.row_mut(i).scale_mut(1.0 / norm);
                b[i] /= norm;
            }
        }
        (a, b, s)
    };
    let (a_eq, b_eq, s_eq) = scale_rows(&p.a_eq, &p.b_eq);
    let (a_in, b_in, s_in) = scale_rows(&p.a_in, &p.b_in);
    let scale_b = p.b_eq.amax().max(p.b_in.amax()).max(1.0);
    let feas_tol = 1e-11 * scale_b;

    let mut x = -chol.solve(&p.g);
    // active[k] = constraint id: eq i -> i, ineq i -> me + i
    let mut active: Vec<usize> = Vec::with_capacity(n);
    let mut u: Vec<f64> = Vec::with_capacity(n);
    let mut is_active = vec![false; mi];
    let mut iterations = 0;

    for i in 0..me {
        let np: DVector<f64> = a_eq.row(i).transpose();
        if np.norm() == 0.0 {
            if b_eq[i].abs() > feas_tol {
                return Err(QpError::InfeasibleEquality(i));
            }
            continue;
        }
        let (mut d, z, r) = f.step_direction(&np);
        let viol = np.dot(&x) - b_eq[i];
        let zn = z.dot(&np);
        if z.amax() <= 1e-12 || zn.abs() <= 1e-14 {
            // dependent on the equalities already in the active set
            if viol.abs() > 1e-8 * scale_b {
                return Err(QpError::InfeasibleEquality(i));
            }
            continue;
        }
        let t = -viol / zn;
        x.axpy(t, &z, 1.0);
        for k in 0..f.iq {
            u[k] -= t * r[k];
        }
        if f.add(&mut d) {
            active.push(i);
            u.push(t);
        } else if viol.abs() > 1e-8 * scale_b {
            return Err(QpError::InfeasibleEquality(i));
        }
    }
    let n_eq_active = active.len();

    let max_iter = 50 * (n + mi + 10);
    loop {
        iterations += 1;
        if iterations > max_iter {
            return Err(QpError::MaxIterations);
        }
        // most violated inactive inequality
        let mut chosen = None;
        let mut worst = -feas_tol;
        for i in 0..mi {
            if is_active[i] {
                continue;
            }
            let s = a_in.row(i).transpose().dot(&x) - b_in[i];
            if s < worst {
                worst = s;
                chosen = Some(i);
            }
        }
        let Some(ip) = chosen else { break };
        let np: DVector<f64> = a_in.row(ip).transpose();
        let mut u_new = 0.0;

        loop {
            iterations += 1;
            if iterations > max_iter {
                return Err(QpError::MaxIterations);
            }
            let (mut d, z, r) = f.step_direction(&np);
            let s_p = np.dot(&x) - b_in[ip];

            // dual step that keeps active inequality multipliers >= 0
            let mut t1 = f64::INFINITY;
            let mut drop = None;
            for k in n_eq_active..f.iq {
                if r[k] > 0.0 {
                    let ratio = u[k] / r[k];
                    if ratio < t1 {
                        t1 = ratio;
                        drop = Some(k);
                    }
                }
            }
            let zn = z.dot(&np);
            let t2 = if z.amax() > 1e-12 && zn > 1e-14 {
                -s_p / zn
            } else {
                f64::INFINITY
            };
            let t = t1.min(t2);

            if !t.is_finite() {
                return Err(QpError::InfeasibleInequality(ip));
            }
            if !t2.is_finite() {
                // dual step only
                for k in 0..f.iq {
                    u[k] -= t * r[k];
                }
                u_new += t;
                let k = drop.expect("finite t1 has a blocking constraint");
                remove_active(&mut f, &mut active, &mut u, &mut is_active, k, me);
                continue;
            }

            x.axpy(t, &z, 1.0);
            for k in 0..f.iq {
                u[k] -= t * r[k];
            }
            u_new += t;

            if t == t2 {
                if !f.add(&mut d) {
                    return Err(QpError::InfeasibleInequality(ip));
                }
                active.push(me + ip);
                u.push(u_new);
                is_active[ip] = true;
                break;
            }
            let k = drop.expect("partial step has a blocking constraint");
            remove_active(&mut f, &mut active, &mut u, &mut is_active, k, me);
        }
    }

    let mut y_eq = DVector::zeros(me);
    let mut z_in = DVector::zeros(mi);
    for (k, &id) in active.iter().enumerate() {
        if id < me {
            y_eq[id] = u[k] / s_eq[id];
        } else {
            z_in[id - me] = u[k] / s_in[id - me];
        }
    }
    let objective = 0.5 * x.dot(&(&p.h * &x)) + p.g.dot(&x);
    Ok(QpSolution {
        x,
        y_eq,
        z_in,
        objective,
        iterations,
    })
}

fn remove_active(
    f: &mut Factor,
    active: &mut Vec<usize>,
    u: &mut Vec<f64>,
    is_active: &mut [bool],
    k: usize,
    me: usize,
) {
    is_active[active[k] - me] = false;
    active.remove(k);
    u.remove(k);
    f.remove(k);
}
