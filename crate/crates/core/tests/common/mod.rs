//! Independent oracles and scenario builders shared by the integration tests.
#![allow(dead_code)]

use nalgebra::{DMatrix, Matrix3, Vector3};
use zlip_core::model::{DomainId, ModelParams, WalkMode};
use zlip_core::orbit::GaitCommand;
use zlip_core::sim::{LogSample, Scenario};

/// Matrix exponential by scaling and squaring of a truncated Taylor series.
pub fn expm(m: &DMatrix<f64>) -> DMatrix<f64> {
    let n = m.nrows();
    let norm = m.iter().map(|v| v.abs()).fold(0.0, f64::max) * n as f64;
    let squarings = if norm > 0.5 { (norm / 0.5).log2().ceil() as u32 } else { 0 };
    let a = m / 2f64.powi(squarings as i32);
    let mut term = DMatrix::<f64>::identity(n, n);
    let mut sum = term.clone();
    for k in 1..40 {
        term = &term * &a / k as f64;
        sum += &term;
    }
    for _ in 0..squarings {
        sum = &sum * &sum;
    }
    sum
}

/// `[[A_ct, e_zmp, d], [0, 0, 0]]` so that its exponential carries the state
/// transition, the ZMP-rate response and the disturbance response.
pub fn augmented_generator(p: &ModelParams, t: f64) -> DMatrix<f64> {
    let mut m = DMatrix::<f64>::zeros(5, 5);
    m[(0, 1)] = 1.0 / p.z0;
    m[(1, 0)] = p.g;
    m[(1, 2)] = -p.g;
    m[(2, 3)] = 1.0;
    m[(1, 4)] = p.z0;
    m * t
}

pub struct OracleTransition {
    pub a: Matrix3<f64>,
    pub b: Vector3<f64>,
    pub bd: Vector3<f64>,
}

pub fn expm_transition(p: &ModelParams, t: f64) -> OracleTransition {
    let e = expm(&augmented_generator(p, t));
    OracleTransition {
        a: Matrix3::from_fn(|i, j| e[(i, j)]),
        b: Vector3::from_fn(|i, _| e[(i, 3)]),
        bd: Vector3::from_fn(|i, _| e[(i, 4)]),
    }
}

/// `B` and `B_d` by composite Gauss-Legendre quadrature of `exp(A s) v`.
pub fn quadrature_inputs(p: &ModelParams, t: f64) -> (Vector3<f64>, Vector3<f64>) {
    const NODES: [(f64, f64); 5] = [
        (0.0, 0.568_888_888_888_888_9),
        (-0.538_469_310_105_683_1, 0.478_628_670_499_366_47),
        (0.538_469_310_105_683_1, 0.478_628_670_499_366_47),
        (-0.906_179_845_938_664, 0.236_926_885_056_189_08),
        (0.906_179_845_938_664, 0.236_926_885_056_189_08),
    ];
    let mut a = DMatrix::<f64>::zeros(3, 3);
    a[(0, 1)] = 1.0 / p.z0;
    a[(1, 0)] = p.g;
    a[(1, 2)] = -p.g;
    let panels = 32;
    let h = t / panels as f64;
    let mut b = Vector3::zeros();
    let mut bd = Vector3::zeros();
    for k in 0..panels {
        let mid = (k as f64 + 0.5) * h;
        for (x, w) in NODES {
            let s = mid + 0.5 * h * x;
            let e = expm(&(&a * s));
            let weight = 0.5 * h * w;
            for i in 0..3 {
                b[i] += weight * e[(i, 2)];
                bd[i] += weight * e[(i, 1)] * p.z0;
            }
        }
    }
    (b, bd)
}

/// Classical RK4 on the per-axis ODE with constant ZMP rate and disturbance.
pub fn rk4(p: &ModelParams, x0: [f64; 3], rate: f64, dist: f64, t: f64, dt: f64) -> [f64; 3] {
    let f = |x: [f64; 3]| [x[1] / p.z0, p.g * (x[0] - x[2]) + p.z0 * dist, rate];
    let n = (t / dt).ceil().max(1.0) as usize;
    let h = t / n as f64;
    let mut x = x0;
    for _ in 0..n {
        let add = |x: [f64; 3], k: [f64; 3], s: f64| [x[0] + s * k[0], x[1] + s * k[1], x[2] + s * k[2]];
        let k1 = f(x);
        let k2 = f(add(x, k1, 0.5 * h));
        let k3 = f(add(x, k2, 0.5 * h));
        let k4 = f(add(x, k3, h));
        for i in 0..3 {
            x[i] += h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
        }
    }
    x
}

/// Support region membership written directly from the foot geometry: the
/// ZMP must be a convex combination of the contact points. Returns the
/// residual of the best representation, zero when inside.
pub fn support_residual(domain: DomainId, mode: WalkMode, rho: f64, zmp: [f64; 2], u: [f64; 2]) -> f64 {
    let seg = |a: [f64; 2], b: [f64; 2]| {
        let d = [b[0] - a[0], b[1] - a[1]];
        let len2 = d[0] * d[0] + d[1] * d[1];
        let s = if len2 == 0.0 {
            0.0
        } else {
            (((zmp[0] - a[0]) * d[0] + (zmp[1] - a[1]) * d[1]) / len2).clamp(0.0, 1.0)
        };
        (zmp[0] - a[0] - s * d[0]).hypot(zmp[1] - a[1] - s * d[1])
    };
    let (heel, toe) = match mode {
        // toe pivot
        WalkMode::MultiDomain => ([-rho, 0.0], [0.0, 0.0]),
        // ankle pivot at the foot midpoint
        WalkMode::FlatFooted => ([-0.5 * rho, 0.0], [0.5 * rho, 0.0]),
    };
    match (mode, domain) {
        (WalkMode::MultiDomain, DomainId::Fa) | (WalkMode::FlatFooted, DomainId::Fa | DomainId::Ua) => {
            seg(heel, toe)
        }
        (WalkMode::MultiDomain, DomainId::Ua) => zmp[0].hypot(zmp[1]),
        (WalkMode::MultiDomain, DomainId::Oa) => seg([0.0, 0.0], u),
        (WalkMode::FlatFooted, DomainId::Oa) => {
            // parallelogram heel + a*(toe-heel) + b*u; solve the 2x2 system
            let f = [toe[0] - heel[0], toe[1] - heel[1]];
            let r = [zmp[0] - heel[0], zmp[1] - heel[1]];
            let det = f[0] * u[1] - f[1] * u[0];
            if det.abs() > 1e-12 {
                let a = (r[0] * u[1] - r[1] * u[0]) / det;
                let b = (f[0] * r[1] - f[1] * r[0]) / det;
                let inside = (-1e-12..=1.0 + 1e-12).contains(&a) && (-1e-12..=1.0 + 1e-12).contains(&b);
                if inside {
                    return 0.0;
                }
            }
            let moved = |p: [f64; 2]| [p[0] + u[0], p[1] + u[1]];
            [
                seg(heel, toe),
                seg(moved(heel), moved(toe)),
                seg(heel, moved(heel)),
                seg(toe, moved(toe)),
            ]
            .into_iter()
            .fold(f64::INFINITY, f64::min)
        }
    }
}

pub fn sample_residual(s: &LogSample, mode: WalkMode, rho: f64) -> f64 {
    let zmp = [s.state.sagittal.p_zmp, s.state.coronal.p_zmp];
    support_residual(s.domain, mode, rho, zmp, s.support_u)
}

pub fn flat_push_scenario() -> Scenario {
    Scenario::new(GaitCommand::flat_footed(0.3, 0.1), ModelParams::default(), 10.0)
        .with_push(1.0, 0.5, [130.0, 0.0])
}

pub fn lateral_push_scenario() -> Scenario {
    Scenario::new(GaitCommand::flat_footed(0.3, 0.1), ModelParams::default(), 10.0)
        .with_push(1.0, 0.1, [0.0, 300.0])
}

pub fn multi_push_scenario() -> Scenario {
    Scenario::new(GaitCommand::multi_domain(0.4, 0.1), ModelParams::default(), 10.0)
        .with_push(1.0, 0.5, [100.0, 0.0])
}

pub fn median(mut v: Vec<f64>) -> f64 {
    v.sort_by(f64::total_cmp);
    if v.is_empty() {
        return f64::NAN;
    }
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}
