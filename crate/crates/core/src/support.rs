//! Support regions and their convex-combination parameterisation.
//!
//! The ZMP is written as `origin + a_foot * foot + a_step * u_sw` with both
//! weights in `[0, 1]`. Depending on the domain a weight may be pinned to zero,
//! which collapses the region to a segment or a point.

use serde::{Deserialize, Serialize};

use crate::model::{DomainId, ModelParams, WalkMode};

/// Admissible ZMP set of one domain, in that domain's stance-pivot frame.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ZmpParameterization {
    pub origin: [f64; 2],
    pub foot: [f64; 2],
    /// `a_foot` may range over `[0, 1]`; otherwise it is pinned to zero.
    pub foot_free: bool,
    /// `a_step` may range over `[0, 1]` along the placement vector; otherwise
    /// it is pinned to zero.
    pub step_free: bool,
}

impl ZmpParameterization {
    pub fn point(&self, alpha_foot: f64, alpha_step: f64, u_sw: [f64; 2]) -> [f64; 2] {
        [
            self.origin[0] + alpha_foot * self.foot[0] + alpha_step * u_sw[0],
            self.origin[1] + alpha_foot * self.foot[1] + alpha_step * u_sw[1],
        ]
    }

    /// Corner points of the region for a given placement vector.
    pub fn vertices(&self, u_sw: [f64; 2]) -> Vec<[f64; 2]> {
        let foot_range: &[f64] = if self.foot_free { &[0.0, 1.0] } else { &[0.0] };
        let step_range: &[f64] = if self.step_free { &[0.0, 1.0] } else { &[0.0] };
        let mut out = Vec::with_capacity(4);
        for &a in foot_range {
            for &b in step_range {
                out.push(self.point(a, b, u_sw));
            }
        }
        out
    }
}

/// Per-domain ZMP restriction.
///
/// Multi-domain walking uses the stance toe as pivot: FA spans heel to toe,
/// UA is the toe point and OA the segment from the back toe to the front
/// heel. Flat-footed walking pivots at the foot midpoint: FA (and the empty
/// UA phase) spans the foot, OA is the parallelogram spanned by the foot and
/// the placement vector.
pub fn zmp_constraint_set(domain: DomainId, mode: WalkMode, params: &ModelParams) -> ZmpParameterization {
    let rho = params.rho;
    match (mode, domain) {
        (WalkMode::MultiDomain, DomainId::Fa) => ZmpParameterization {
            origin: [-rho, 0.0],
            foot: [rho, 0.0],
            foot_free: true,
            step_free: false,
        },
        (WalkMode::MultiDomain, DomainId::Ua) => ZmpParameterization {
            origin: [0.0, 0.0],
            foot: [rho, 0.0],
            foot_free: false,
            step_free: false,
        },
        (WalkMode::MultiDomain, DomainId::Oa) => ZmpParameterization {
            origin: [0.0, 0.0],
            foot: [rho, 0.0],
            foot_free: false,
            step_free: true,
        },
        (WalkMode::FlatFooted, DomainId::Fa | DomainId::Ua) => ZmpParameterization {
            origin: [-0.5 * rho, 0.0],
            foot: [rho, 0.0],
            foot_free: true,
            step_free: false,
        },
        (WalkMode::FlatFooted, DomainId::Oa) => ZmpParameterization {
            origin: [-0.5 * rho, 0.0],
            foot: [rho, 0.0],
            foot_free: true,
            step_free: true,
        },
    }
}

/// Nominal `(a_foot+, a_step+, a_foot-, a_step-)` of each domain: the ZMP
/// rolls heel to toe in multi-domain FA and moves from the back toe to the
/// front heel in OA; flat-footed walking keeps it under the stance ankle.
pub fn nominal_alpha(domain: DomainId, mode: WalkMode) -> [f64; 4] {
    match (mode, domain) {
        (WalkMode::MultiDomain, DomainId::Fa) => [0.0, 0.0, 1.0, 0.0],
        (WalkMode::MultiDomain, DomainId::Ua) => [0.0; 4],
        (WalkMode::MultiDomain, DomainId::Oa) => [0.0, 0.0, 0.0, 1.0],
        (WalkMode::FlatFooted, _) => [0.5, 0.0, 0.5, 0.0],
    }
}

fn cross(o: [f64; 2], a: [f64; 2], b: [f64; 2]) -> f64 {
    (a[0] - o[0]) * (b[1] - o[1]) - (a[1] - o[1]) * (b[0] - o[0])
}

fn segment_distance(p: [f64; 2], a: [f64; 2], b: [f64; 2]) -> f64 {
    let ab = [b[0] - a[0], b[1] - a[1]];
    let len2 = ab[0] * ab[0] + ab[1] * ab[1];
    let t = if len2 > 0.0 {
        (((p[0] - a[0]) * ab[0] + (p[1] - a[1]) * ab[1]) / len2).clamp(0.0, 1.0)
    } else {
        0.0
    };
    let q = [a[0] + t * ab[0], a[1] + t * ab[1]];
    ((p[0] - q[0]).powi(2) + (p[1] - q[1]).powi(2)).sqrt()
}

/// Monotone-chain convex hull, counter-clockwise, without collinear points.
pub fn convex_hull(points: &[[f64; 2]]) -> Vec<[f64; 2]> {
    let mut pts = points.to_vec();
    pts.sort_by(|a, b| a[0].total_cmp(&b[0]).then(a[1].total_cmp(&b[1])));
    pts.dedup();
    if pts.len() < 3 {
        return pts;
    }
    let mut hull: Vec<[f64; 2]> = Vec::with_capacity(2 * pts.len());
    for pass in 0..2 {
        let start = hull.len();
        let iter: Box<dyn Iterator<Item = &[f64; 2]>> = if pass == 0 {
            Box::new(pts.iter())
        } else {
            Box::new(pts.iter().rev())
        };
        for &p in iter {
            while hull.len() >= start + 2 && cross(hull[hull.len() - 2], hull[hull.len() - 1], p) <= 0.0 {
                hull.pop();
            }
            hull.push(p);
        }
        hull.pop();
    }
    hull
}

/// Euclidean distance from `p` to the convex hull of `vertices` (zero inside).
pub fn hull_distance(vertices: &[[f64; 2]], p: [f64; 2]) -> f64 {
    let hull = convex_hull(vertices);
    match hull.len() {
        0 => f64::INFINITY,
        1 => segment_distance(p, hull[0], hull[0]),
        2 => segment_distance(p, hull[0], hull[1]),
        n => {
            let inside = (0..n).all(|i| cross(hull[i], hull[(i + 1) % n], p) >= 0.0);
            if inside {
                0.0
            } else {
                (0..n)
                    .map(|i| segment_distance(p, hull[i], hull[(i + 1) % n]))
                    .fold(f64::INFINITY, f64::min)
            }
        }
    }
}

pub fn hull_contains(vertices: &[[f64; 2]], p: [f64; 2], tol: f64) -> bool {
    hull_distance(vertices, p) <= tol
}
