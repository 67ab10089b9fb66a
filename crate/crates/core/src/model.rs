//! Exact dynamics of the ZMP-augmented linear inverted pendulum.
//!
//! Per horizontal axis the state is `(p, L, p_zmp)`: CoM position, mass-normalised
//! angular momentum about the stance pivot, and ZMP position, all measured from
//! the stance pivot. Within a domain the ZMP moves at a constant rate and the
//! state is propagated in closed form; domain switches are instantaneous maps
//! that may shift the ZMP and, on double support to single support, move the
//! coordinate origin to the new stance pivot.

use nalgebra::{Matrix3, Vector3};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Physical constants of the reduced-order model.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ModelParams {
    /// CoM height above the stance pivot [m].
    pub z0: f64,
    /// Gravitational acceleration [m/s^2].
    pub g: f64,
    /// Foot curve length [m].
    pub rho: f64,
    /// Robot mass [kg]; only used to turn disturbance forces into accelerations.
    pub mass: f64,
}

impl Default for ModelParams {
    fn default() -> Self {
        Self {
            z0: 0.8,
            g: 9.81,
            rho: 0.16,
            mass: 31.0,
        }
    }
}

impl ModelParams {
    pub fn validate(&self) -> Result<()> {
        let check = |ok: bool, msg: &str| {
            if ok {
                Ok(())
            } else {
                Err(Error::Parameter(msg.to_string()))
            }
        };
        check(self.z0.is_finite() && self.z0 > 0.0, "z0 must be positive")?;
        check(self.g.is_finite() && self.g > 0.0, "g must be positive")?;
        check(self.rho.is_finite() && self.rho >= 0.0, "rho must be non-negative")?;
        check(self.mass.is_finite() && self.mass > 0.0, "mass must be positive")
    }

    /// Natural frequency `sqrt(g / z0)` [1/s].
    pub fn omega(&self) -> f64 {
        (self.g / self.z0).sqrt()
    }

    /// Continuous-time system matrix acting on `(p, L, p_zmp)`.
    pub fn continuous_matrix(&self) -> Matrix3<f64> {
        Matrix3::new(
            0.0,
            1.0 / self.z0,
            0.0,
            self.g,
            0.0,
            -self.g,
            0.0,
            0.0,
            0.0,
        )
    }
}

/// Walking domains of the hybrid gait cycle.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum DomainId {
    /// Fully actuated: flat stance foot.
    #[serde(rename = "FA")]
    Fa,
    /// Under-actuated: stance toe only.
    #[serde(rename = "UA")]
    Ua,
    /// Over-actuated: double support.
    #[serde(rename = "OA")]
    Oa,
}

impl DomainId {
    /// Domains in the order they appear inside one preview block.
    pub const BLOCK_ORDER: [DomainId; 3] = [DomainId::Oa, DomainId::Fa, DomainId::Ua];

    pub fn successor(self) -> DomainId {
        match self {
            DomainId::Fa => DomainId::Ua,
            DomainId::Ua => DomainId::Oa,
            DomainId::Oa => DomainId::Fa,
        }
    }

    pub fn predecessor(self) -> DomainId {
        match self {
            DomainId::Fa => DomainId::Oa,
            DomainId::Ua => DomainId::Fa,
            DomainId::Oa => DomainId::Ua,
        }
    }

    /// Position inside a preview block (`OA`, `FA`, `UA`).
    pub fn block_index(self) -> usize {
        match self {
            DomainId::Oa => 0,
            DomainId::Fa => 1,
            DomainId::Ua => 2,
        }
    }

    /// The impact edge that enters this domain.
    pub fn entering_edge(self) -> Edge {
        match self {
            DomainId::Oa => Edge::UaToOa,
            DomainId::Fa => Edge::OaToFa,
            DomainId::Ua => Edge::FaToUa,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            DomainId::Fa => "FA",
            DomainId::Ua => "UA",
            DomainId::Oa => "OA",
        }
    }
}

impl std::fmt::Display for DomainId {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

impl std::str::FromStr for DomainId {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_uppercase().as_str() {
            "FA" => Ok(DomainId::Fa),
            "UA" => Ok(DomainId::Ua),
            "OA" => Ok(DomainId::Oa),
            other => Err(Error::Usage(format!("unknown domain '{other}'"))),
        }
    }
}

/// Flat-footed walking is the special case with no toe phase and no ZMP
/// travel in single support.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum WalkMode {
    FlatFooted,
    MultiDomain,
}

impl WalkMode {
    /// ZMP travel during FA, measured along the sagittal axis.
    pub fn fa_travel(self, params: &ModelParams) -> f64 {
        match self {
            WalkMode::FlatFooted => 0.0,
            WalkMode::MultiDomain => params.rho,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Axis {
    Sagittal = 0,
    Coronal = 1,
}

impl Axis {
    pub const BOTH: [Axis; 2] = [Axis::Sagittal, Axis::Coronal];
}

/// Per-axis state relative to the stance pivot.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct ZlipState {
    pub p: f64,
    #[serde(rename = "L")]
    pub l: f64,
    pub p_zmp: f64,
}

impl ZlipState {
    pub fn new(p: f64, l: f64, p_zmp: f64) -> Self {
        Self { p, l, p_zmp }
    }

    pub fn to_vector(self) -> Vector3<f64> {
        Vector3::new(self.p, self.l, self.p_zmp)
    }

    pub fn from_vector(v: &Vector3<f64>) -> Self {
        Self::new(v[0], v[1], v[2])
    }

    pub fn is_finite(&self) -> bool {
        self.p.is_finite() && self.l.is_finite() && self.p_zmp.is_finite()
    }

    /// Reflection through the pivot (used for left/right symmetry).
    pub fn mirrored(self) -> Self {
        Self::new(-self.p, -self.l, -self.p_zmp)
    }
}

/// Sagittal and coronal states stacked.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct PlanarState {
    pub sagittal: ZlipState,
    pub coronal: ZlipState,
}

impl PlanarState {
    pub fn new(sagittal: ZlipState, coronal: ZlipState) -> Self {
        Self { sagittal, coronal }
    }

    pub fn axis(&self, axis: Axis) -> &ZlipState {
        match axis {
            Axis::Sagittal => &self.sagittal,
            Axis::Coronal => &self.coronal,
        }
    }

    pub fn axis_mut(&mut self, axis: Axis) -> &mut ZlipState {
        match axis {
            Axis::Sagittal => &mut self.sagittal,
            Axis::Coronal => &mut self.coronal,
        }
    }

    pub fn to_array(&self) -> [f64; 6] {
        let (s, c) = (self.sagittal, self.coronal);
        [s.p, s.l, s.p_zmp, c.p, c.l, c.p_zmp]
    }

    pub fn from_array(v: &[f64]) -> Self {
        Self::new(ZlipState::new(v[0], v[1], v[2]), ZlipState::new(v[3], v[4], v[5]))
    }
}

/// Continuous inputs of one domain.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct DomainInputs {
    /// ZMP velocity per axis [m/s].
    pub zmp_rate: [f64; 2],
    /// Domain duration [s].
    pub duration: f64,
}

/// Stance switch data carried by the OA to FA transition.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct FootShift {
    /// Swing-foot placement relative to the stance pivot [m].
    pub u_sw: [f64; 2],
    /// ZMP travel of the following FA phase (sagittal only) [m].
    pub l: f64,
}

/// Discrete inputs of one domain transition.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct ImpactInputs {
    pub delta_zmp: [f64; 2],
    pub foot: Option<FootShift>,
}

/// Edges of the cyclic domain graph.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Edge {
    UaToOa,
    OaToFa,
    FaToUa,
}

impl Edge {
    pub fn between(from: DomainId, to: DomainId) -> Result<Edge> {
        if from.successor() != to {
            return Err(Error::Usage(format!("no transition {from} -> {to}")));
        }
        Ok(to.entering_edge())
    }

    pub fn target(self) -> DomainId {
        match self {
            Edge::UaToOa => DomainId::Oa,
            Edge::OaToFa => DomainId::Fa,
            Edge::FaToUa => DomainId::Ua,
        }
    }

    pub fn source(self) -> DomainId {
        self.target().predecessor()
    }
}

/// Closed-form `exp(A_ct T)` together with the input and disturbance
/// convolution vectors.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Transition {
    pub a: Matrix3<f64>,
    /// Response to a unit ZMP rate.
    pub b: Vector3<f64>,
    /// Response to a unit horizontal CoM acceleration.
    pub bd: Vector3<f64>,
}

// x - sinh(x), accurate for small |x|
fn x_minus_sinh(x: f64) -> f64 {
    if x.abs() < 0.5 {
        let x2 = x * x;
        let mut term = x * x2 / 6.0;
        let mut sum: f64 = 0.0;
        let mut k = 3.0;
        while term.abs() > 1e-18 * sum.abs().max(f64::MIN_POSITIVE) {
            sum += term;
            term *= x2 / ((k + 1.0) * (k + 2.0));
            k += 2.0;
        }
        -sum
    } else {
        x - x.sinh()
    }
}

// cosh(x) - 1 without cancellation
fn cosh_minus_one(x: f64) -> f64 {
    let h = (0.5 * x).sinh();
    2.0 * h * h
}

/// `A(T)`, `B(T)` and the disturbance vector `B_d(T)` for a domain of length `t`.
pub fn domain_transition_matrices(t: f64, params: &ModelParams) -> Result<Transition> {
    params.validate()?;
    if !(t.is_finite() && t >= 0.0) {
        return Err(Error::Parameter(format!("domain duration must be >= 0, got {t}")));
    }
    Ok(transition_unchecked(t, params))
}

pub(crate) fn transition_unchecked(t: f64, params: &ModelParams) -> Transition {
    let z0 = params.z0;
    let w = params.omega();
    let x = w * t;
    let c = x.cosh();
    let s = x.sinh();
    let cm1 = cosh_minus_one(x);
    let a = Matrix3::new(
        c,
        s / (z0 * w),
        -cm1,
        z0 * w * s,
        c,
        -z0 * w * s,
        0.0,
        0.0,
        1.0,
    );
    let b = Vector3::new(x_minus_sinh(x) / w, -z0 * cm1, t);
    let bd = Vector3::new(cm1 / (w * w), z0 * s / w, 0.0);
    Transition { a, b, bd }
}

/// First and second derivatives of [`Transition`] with respect to the
/// duration.
#[derive(Debug, Clone, Copy)]
pub struct TransitionSensitivity {
    pub value: Transition,
    pub d1: Transition,
    pub d2: Transition,
}

pub(crate) fn transition_sensitivity(t: f64, params: &ModelParams) -> TransitionSensitivity {
    let value = transition_unchecked(t, params);
    let act = params.continuous_matrix();
    let z0 = params.z0;
    let w = params.omega();
    let x = w * t;
    let (c, s) = (x.cosh(), x.sinh());
    let cm1 = cosh_minus_one(x);
    let d1 = Transition {
        a: act * value.a,
        b: Vector3::new(-cm1, -z0 * w * s, 1.0),
        bd: Vector3::new(s / w, z0 * c, 0.0),
    };
    let d2 = Transition {
        a: act * act * value.a,
        b: Vector3::new(-w * s, -params.g * c, 0.0),
        bd: Vector3::new(c, z0 * w * s, 0.0),
    };
    TransitionSensitivity { value, d1, d2 }
}

/// End-of-domain state for one axis under a constant ZMP rate and a constant
/// horizontal disturbance acceleration.
pub fn propagate(
    xi: ZlipState,
    zmp_rate: f64,
    duration: f64,
    dist_accel: f64,
    params: &ModelParams,
) -> Result<ZlipState> {
    let tr = domain_transition_matrices(duration, params)?;
    Ok(ZlipState::from_vector(
        &(tr.a * xi.to_vector() + tr.b * zmp_rate + tr.bd * dist_accel),
    ))
}

/// [`propagate`] applied to both axes.
pub fn propagate_planar(
    x: &PlanarState,
    inputs: &DomainInputs,
    dist_accel: [f64; 2],
    params: &ModelParams,
) -> Result<PlanarState> {
    Ok(PlanarState::new(
        propagate(x.sagittal, inputs.zmp_rate[0], inputs.duration, dist_accel[0], params)?,
        propagate(x.coronal, inputs.zmp_rate[1], inputs.duration, dist_accel[1], params)?,
    ))
}

/// Applies a domain transition to both axes. Only the OA to FA edge moves the
/// origin; `l` acts on the sagittal axis only.
pub fn apply_impact(edge: Edge, x: &PlanarState, inputs: &ImpactInputs) -> Result<PlanarState> {
    let mut out = *x;
    match (edge, inputs.foot) {
        (Edge::OaToFa, Some(foot)) => {
            if !(foot.l.is_finite() && foot.l >= 0.0) {
                return Err(Error::Usage(format!("ZMP travel l must be >= 0, got {}", foot.l)));
            }
            for axis in Axis::BOTH {
                let i = axis as usize;
                let l = if axis == Axis::Sagittal { foot.l } else { 0.0 };
                let st = out.axis_mut(axis);
                st.p -= foot.u_sw[i] + l;
                st.p_zmp -= foot.u_sw[i] + l;
            }
        }
        (Edge::OaToFa, None) => {
            return Err(Error::Usage("OA -> FA transition needs a foot placement".into()));
        }
        (_, Some(_)) => {
            return Err(Error::Usage(format!(
                "foot placement is only valid on OA -> FA, not {edge:?}"
            )));
        }
        (_, None) => {}
    }
    out.sagittal.p_zmp += inputs.delta_zmp[0];
    out.coronal.p_zmp += inputs.delta_zmp[1];
    Ok(out)
}

/// Every input of one step: continuous inputs per domain plus the ZMP shift of
/// each entering edge and the foot placement used on OA to FA.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct StepInputs {
    pub oa: DomainInputs,
    pub fa: DomainInputs,
    pub ua: DomainInputs,
    pub delta_ua_oa: [f64; 2],
    pub delta_oa_fa: [f64; 2],
    pub delta_fa_ua: [f64; 2],
    pub u_sw: [f64; 2],
}

impl StepInputs {
    pub fn domain(&self, d: DomainId) -> &DomainInputs {
        match d {
            DomainId::Oa => &self.oa,
            DomainId::Fa => &self.fa,
            DomainId::Ua => &self.ua,
        }
    }

    /// ZMP shift of the edge entering `d`.
    pub fn delta_into(&self, d: DomainId) -> [f64; 2] {
        match d {
            DomainId::Oa => self.delta_ua_oa,
            DomainId::Fa => self.delta_oa_fa,
            DomainId::Ua => self.delta_fa_ua,
        }
    }
}

/// Step-to-step map from an OA pre-impact state to the next OA pre-impact state.
pub fn step_map(
    x: &PlanarState,
    inputs: &StepInputs,
    params: &ModelParams,
    mode: WalkMode,
) -> Result<PlanarState> {
    step_map_from(DomainId::Oa, x, inputs, params, mode)
}

/// One full cycle of the domain graph starting from the pre-impact state of
/// `start`.
pub fn step_map_from(
    start: DomainId,
    x: &PlanarState,
    inputs: &StepInputs,
    params: &ModelParams,
    mode: WalkMode,
) -> Result<PlanarState> {
    check_step_inputs(inputs, mode)?;
    let mut state = *x;
    let mut domain = start;
    for _ in 0..3 {
        domain = domain.successor();
        state = enter_domain(domain, &state, inputs, params, mode)?;
        state = propagate_planar(&state, inputs.domain(domain), [0.0; 2], params)?;
    }
    Ok(state)
}

pub(crate) fn check_step_inputs(inputs: &StepInputs, mode: WalkMode) -> Result<()> {
    for d in DomainId::BLOCK_ORDER {
        let t = inputs.domain(d).duration;
        if !(t.is_finite() && t >= 0.0) {
            return Err(Error::Usage(format!("{d} duration must be >= 0, got {t}")));
        }
    }
    if mode == WalkMode::FlatFooted && inputs.ua.duration != 0.0 {
        return Err(Error::Usage("flat-footed walking has no UA phase (T_UA must be 0)".into()));
    }
    Ok(())
}

fn enter_domain(
    domain: DomainId,
    x: &PlanarState,
    inputs: &StepInputs,
    params: &ModelParams,
    mode: WalkMode,
) -> Result<PlanarState> {
    let foot = (domain == DomainId::Fa).then_some(FootShift {
        u_sw: inputs.u_sw,
        l: mode.fa_travel(params),
    });
    apply_impact(
        domain.entering_edge(),
        x,
        &ImpactInputs {
            delta_zmp: inputs.delta_into(domain),
            foot,
        },
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn params() -> ModelParams {
        ModelParams::default()
    }

    #[test]
    fn zero_duration_is_identity() {
        let tr = domain_transition_matrices(0.0, &params()).unwrap();
        assert_eq!(tr.a, Matrix3::identity());
        assert_eq!(tr.b, Vector3::zeros());
        assert_eq!(tr.bd, Vector3::zeros());
    }

    #[test]
    fn zmp_row_integrates_only_its_rate() {
        for &t in &[0.01, 0.2, 0.7, 1.3] {
            let tr = domain_transition_matrices(t, &params()).unwrap();
            assert_eq!(tr.a.row(2).clone_owned(), Vector3::new(0.0, 0.0, 1.0).transpose());
            assert_eq!(tr.b[2], t);
            assert_eq!(tr.bd[2], 0.0);
        }
    }

    #[test]
    fn rejects_bad_parameters() {
        let mut p = params();
        p.z0 = 0.0;
        assert!(matches!(domain_transition_matrices(0.3, &p), Err(Error::Parameter(_))));
        assert!(domain_transition_matrices(-0.1, &params()).is_err());
    }

    #[test]
    fn equilibria_are_preserved() {
        let p = params();
        let zero = propagate(ZlipState::default(), 0.0, 0.37, 0.0, &p).unwrap();
        assert_eq!(zero, ZlipState::default());
        let over = ZlipState::new(0.12, 0.0, 0.12);
        let out = propagate(over, 0.0, 0.5, 0.0, &p).unwrap();
        assert_relative_eq!(out.p, 0.12, epsilon = 1e-15);
        assert_relative_eq!(out.l, 0.0, epsilon = 1e-15);
        assert_eq!(out.p_zmp, 0.12);
    }

    #[test]
    fn derivatives_match_finite_differences() {
        let p = params();
        let t = 0.27;
        let h = 1e-5;
        let sens = transition_sensitivity(t, &p);
        let plus = transition_unchecked(t + h, &p);
        let minus = transition_unchecked(t - h, &p);
        let fd_a = (plus.a - minus.a) / (2.0 * h);
        let fd_b = (plus.b - minus.b) / (2.0 * h);
        let fd_bd = (plus.bd - minus.bd) / (2.0 * h);
        assert!((fd_a - sens.d1.a).amax() < 1e-7);
        assert!((fd_b - sens.d1.b).amax() < 1e-7);
        assert!((fd_bd - sens.d1.bd).amax() < 1e-7);
        let s_plus = transition_sensitivity(t + h, &p);
        let s_minus = transition_sensitivity(t - h, &p);
        assert!(((s_plus.d1.a - s_minus.d1.a) / (2.0 * h) - sens.d2.a).amax() < 1e-6);
        assert!(((s_plus.d1.b - s_minus.d1.b) / (2.0 * h) - sens.d2.b).amax() < 1e-6);
        assert!(((s_plus.d1.bd - s_minus.d1.bd) / (2.0 * h) - sens.d2.bd).amax() < 1e-6);
    }

    #[test]
    fn impact_examples() {
        let foot = |u: f64, l: f64| ImpactInputs {
            delta_zmp: [0.0; 2],
            foot: Some(FootShift { u_sw: [u, 0.0], l }),
        };
        let x = PlanarState::new(ZlipState::new(0.1, 0.2, 0.1), ZlipState::default());
        assert_eq!(apply_impact(Edge::OaToFa, &x, &foot(0.0, 0.0)).unwrap(), x);
        let out = apply_impact(Edge::OaToFa, &x, &foot(0.1, 0.0)).unwrap();
        assert_relative_eq!(out.sagittal.p, 0.0);
        assert_relative_eq!(out.sagittal.l, 0.2);
        assert_relative_eq!(out.sagittal.p_zmp, 0.0);

        let x = PlanarState::new(ZlipState::new(0.3, 0.0, 0.2), ZlipState::default());
        let out = apply_impact(Edge::OaToFa, &x, &foot(0.2, 0.16)).unwrap();
        assert_relative_eq!(out.sagittal.p, -0.06, epsilon = 1e-15);
        assert_relative_eq!(out.sagittal.l, 0.0);
        assert_relative_eq!(out.sagittal.p_zmp, -0.16, epsilon = 1e-15);
        // l never reaches the coronal axis
        assert_eq!(out.coronal, ZlipState::default());
    }

    #[test]
    fn foot_placement_only_on_stance_switch() {
        let x = PlanarState::default();
        let bad = ImpactInputs {
            delta_zmp: [0.0; 2],
            foot: Some(FootShift::default()),
        };
        assert!(matches!(apply_impact(Edge::FaToUa, &x, &bad), Err(Error::Usage(_))));
        assert!(matches!(apply_impact(Edge::UaToOa, &x, &bad), Err(Error::Usage(_))));
        assert!(apply_impact(Edge::OaToFa, &x, &ImpactInputs::default()).is_err());
    }

    #[test]
    fn impacts_never_change_momentum() {
        let x = PlanarState::new(ZlipState::new(0.3, 0.7, 0.1), ZlipState::new(-0.1, -0.4, 0.0));
        let inputs = ImpactInputs {
            delta_zmp: [0.05, -0.02],
            foot: Some(FootShift { u_sw: [0.3, -0.25], l: 0.16 }),
        };
        for edge in [Edge::UaToOa, Edge::OaToFa, Edge::FaToUa] {
            let inp = if edge == Edge::OaToFa {
                inputs
            } else {
                ImpactInputs { foot: None, ..inputs }
            };
            let out = apply_impact(edge, &x, &inp).unwrap();
            assert_eq!(out.sagittal.l, x.sagittal.l);
            assert_eq!(out.coronal.l, x.coronal.l);
        }
    }

    #[test]
    fn unforced_zero_state_is_fixed() {
        let inputs = StepInputs {
            oa: DomainInputs { zmp_rate: [0.0; 2], duration: 0.1 },
            fa: DomainInputs { zmp_rate: [0.0; 2], duration: 0.3 },
            ..Default::default()
        };
        let out = step_map(&PlanarState::default(), &inputs, &params(), WalkMode::FlatFooted).unwrap();
        assert_eq!(out, PlanarState::default());
    }

    #[test]
    fn flat_footed_rejects_ua_time() {
        let inputs = StepInputs {
            ua: DomainInputs { zmp_rate: [0.0; 2], duration: 0.1 },
            ..Default::default()
        };
        assert!(step_map(&PlanarState::default(), &inputs, &params(), WalkMode::FlatFooted).is_err());
    }

    #[test]
    fn successor_cycle() {
        let mut d = DomainId::Fa;
        let mut seen = vec![];
        for _ in 0..3 {
            seen.push(d);
            d = d.successor();
        }
        assert_eq!(seen, vec![DomainId::Fa, DomainId::Ua, DomainId::Oa]);
        assert_eq!(d, DomainId::Fa);
        assert_eq!(Edge::between(DomainId::Oa, DomainId::Fa).unwrap(), Edge::OaToFa);
        assert!(Edge::between(DomainId::Fa, DomainId::Oa).is_err());
    }
}
