//! Discrete-time Ackermann kinematics, motion primitives and body footprints.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geometry::{normalize_angle, OrientedRect, Vec2};

/// Slack used when validating controls against the vehicle limits.
pub const LIMIT_EPS: f64 = 1e-9;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ModelError {
    #[error("non-finite input to {0}")]
    NonFinite(&'static str),
    #[error("control out of bounds: v = {v}, omega = {omega}")]
    ControlOutOfBounds { v: f64, omega: f64 },
    #[error("invalid agent spec: {0}")]
    InvalidSpec(String),
}

/// Planar pose of the rear-axle centre. Yaw in `[-π, π)`.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Pose {
    pub x: f64,
    pub y: f64,
    pub yaw: f64,
}

impl Pose {
    pub fn new(x: f64, y: f64, yaw: f64) -> Self {
        Self { x, y, yaw: normalize_angle(yaw) }
    }

    pub fn position(&self) -> Vec2 {
        Vec2::new(self.x, self.y)
    }

    pub fn distance(&self, other: &Pose) -> f64 {
        (self.x - other.x).hypot(self.y - other.y)
    }
}

/// Search atom: a pose at an integer sample index (one tick = `T_s`).
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct AgentState {
    pub x: f64,
    pub y: f64,
    pub yaw: f64,
    pub t: u32,
}

impl AgentState {
    pub fn new(x: f64, y: f64, yaw: f64, t: u32) -> Self {
        Self { x, y, yaw: normalize_angle(yaw), t }
    }

    pub fn at(pose: Pose, t: u32) -> Self {
        Self { x: pose.x, y: pose.y, yaw: pose.yaw, t }
    }

    pub fn pose(&self) -> Pose {
        Pose { x: self.x, y: self.y, yaw: self.yaw }
    }

    pub fn same_pose(&self, other: &AgentState) -> bool {
        self.x == other.x && self.y == other.y && self.yaw == other.yaw
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct ControlInput {
    pub v: f64,
    pub omega: f64,
}

impl ControlInput {
    pub const ZERO: ControlInput = ControlInput { v: 0.0, omega: 0.0 };
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct AgentSpecParams {
    wheelbase: f64,
    front_length: f64,
    rear_length: f64,
    width: f64,
    v_forward_max: f64,
    v_backward_max: f64,
    phi_max: f64,
    sample_time: f64,
}

/// Body geometry and kinematic limits of one vehicle type.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "AgentSpecParams", into = "AgentSpecParams")]
pub struct AgentSpec {
    /// Wheelbase `L`.
    pub wheelbase: f64,
    /// Rear axle to front edge, `L_f`.
    pub front_length: f64,
    /// Rear axle to rear edge, `L_b`.
    pub rear_length: f64,
    pub width: f64,
    pub v_forward_max: f64,
    /// Negative.
    pub v_backward_max: f64,
    pub phi_max: f64,
    /// Sample time `T_s` in seconds.
    pub sample_time: f64,
    min_turn_radius: f64,
}

impl From<AgentSpec> for AgentSpecParams {
    fn from(s: AgentSpec) -> Self {
        Self {
            wheelbase: s.wheelbase,
            front_length: s.front_length,
            rear_length: s.rear_length,
            width: s.width,
            v_forward_max: s.v_forward_max,
            v_backward_max: s.v_backward_max,
            phi_max: s.phi_max,
            sample_time: s.sample_time,
        }
    }
}

impl TryFrom<AgentSpecParams> for AgentSpec {
    type Error = ModelError;
    fn try_from(p: AgentSpecParams) -> Result<Self, ModelError> {
        AgentSpec::new(
            p.wheelbase,
            p.front_length,
            p.rear_length,
            p.width,
            p.v_forward_max,
            p.v_backward_max,
            p.phi_max,
            p.sample_time,
        )
    }
}

impl AgentSpec {
    #[allow(clippy::too_many_arguments)]
    pub fn new(
        wheelbase: f64,
        front_length: f64,
        rear_length: f64,
        width: f64,
        v_forward_max: f64,
        v_backward_max: f64,
        phi_max: f64,
        sample_time: f64,
    ) -> Result<Self, ModelError> {
        let all = [
            wheelbase,
            front_length,
            rear_length,
            width,
            v_forward_max,
            v_backward_max,
            phi_max,
            sample_time,
        ];
        if all.iter().any(|v| !v.is_finite()) {
            return Err(ModelError::NonFinite("AgentSpec"));
        }
        let fail = |m: &str| Err(ModelError::InvalidSpec(m.to_string()));
        if wheelbase <= 0.0 {
            return fail("wheelbase must be positive");
        }
        if front_length + rear_length <= 0.0 || width <= 0.0 {
            return fail("body length and width must be positive");
        }
        if !(v_backward_max < 0.0 && v_forward_max > 0.0) {
            return fail("speed bounds must satisfy v_backward_max < 0 < v_forward_max");
        }
        if !(phi_max > 0.0 && phi_max < std::f64::consts::FRAC_PI_2) {
            return fail("phi_max must lie in (0, pi/2)");
        }
        if sample_time <= 0.0 {
            return fail("sample_time must be positive");
        }
        Ok(Self {
            wheelbase,
            front_length,
            rear_length,
            width,
            v_forward_max,
            v_backward_max,
            phi_max,
            sample_time,
            min_turn_radius: wheelbase / phi_max.tan(),
        })
    }

    /// Benchmark vehicle: 3 m x 2 m body, `L_f` = 2 m, `L_b` = 1 m,
    /// 2.5 m/s top speed both ways and a 3.5 m minimum turning radius.
    pub fn benchmark() -> Self {
        let wheelbase = 2.0;
        let phi_max = (wheelbase / 3.5f64).atan();
        Self::new(wheelbase, 2.0, 1.0, 2.0, 2.5, -2.5, phi_max, 0.1)
            .expect("benchmark spec is valid")
    }

    /// `L / tan(phi_max)`.
    pub fn min_turn_radius(&self) -> f64 {
        self.min_turn_radius
    }

    pub fn length(&self) -> f64 {
        self.front_length + self.rear_length
    }

    pub fn max_speed(&self) -> f64 {
        self.v_forward_max.max(-self.v_backward_max)
    }

    /// Largest admissible `|omega|` at speed `v`.
    pub fn max_yaw_rate(&self, v: f64) -> f64 {
        v.abs() * self.phi_max.tan() / self.wheelbase
    }

    pub fn check_control(&self, u: ControlInput) -> Result<(), ModelError> {
        if !u.v.is_finite() || !u.omega.is_finite() {
            return Err(ModelError::NonFinite("control"));
        }
        let in_speed = u.v <= self.v_forward_max + LIMIT_EPS && u.v >= self.v_backward_max - LIMIT_EPS;
        let in_turn = u.omega.abs() <= self.max_yaw_rate(u.v) + LIMIT_EPS;
        if in_speed && in_turn {
            Ok(())
        } else {
            Err(ModelError::ControlOutOfBounds { v: u.v, omega: u.omega })
        }
    }
}

/// `omega = (v / L) * tan(phi)`.
pub fn yaw_rate(v: f64, phi: f64, wheelbase: f64) -> Result<f64, ModelError> {
    if !v.is_finite() || !phi.is_finite() || !wheelbase.is_finite() {
        return Err(ModelError::NonFinite("yaw_rate"));
    }
    if wheelbase <= 0.0 || phi.abs() >= std::f64::consts::FRAC_PI_2 {
        return Err(ModelError::InvalidSpec(
            "yaw_rate needs L > 0 and |phi| < pi/2".into(),
        ));
    }
    Ok(v / wheelbase * phi.tan())
}

/// One explicit Euler step of the kinematic model:
/// `z_t = z_{t-1} + T_s [v cos(yaw), v sin(yaw), omega]`.
pub fn step(state: &AgentState, u: ControlInput, spec: &AgentSpec) -> Result<AgentState, ModelError> {
    spec.check_control(u)?;
    Ok(step_unchecked(state, u, spec.sample_time))
}

pub(crate) fn step_unchecked(state: &AgentState, u: ControlInput, dt: f64) -> AgentState {
    let (s, c) = state.yaw.sin_cos();
    AgentState {
        x: state.x + dt * u.v * c,
        y: state.y + dt * u.v * s,
        yaw: normalize_angle(state.yaw + dt * u.omega),
        t: state.t + 1,
    }
}

/// Pose between two consecutive samples: position is linear, yaw follows
/// the shorter arc. `alpha` in `[0, 1]`.
pub fn interpolate(a: &AgentState, b: &AgentState, alpha: f64) -> Pose {
    if alpha == 0.0 {
        return a.pose();
    }
    Pose {
        x: a.x + alpha * (b.x - a.x),
        y: a.y + alpha * (b.y - a.y),
        yaw: normalize_angle(a.yaw + alpha * normalize_angle(b.yaw - a.yaw)),
    }
}

/// Rectangle occupied by the body, rear axle at the pose, long axis along yaw.
pub fn footprint(pose: &Pose, spec: &AgentSpec) -> OrientedRect {
    footprint_inflated(pose, spec, 0.0)
}

pub fn footprint_inflated(pose: &Pose, spec: &AgentSpec, margin: f64) -> OrientedRect {
    let hw = 0.5 * spec.width + margin;
    let front = spec.front_length + margin;
    let rear = spec.rear_length + margin;
    let local = [
        Vec2::new(-rear, -hw),
        Vec2::new(front, -hw),
        Vec2::new(front, hw),
        Vec2::new(-rear, hw),
    ];
    let origin = pose.position();
    OrientedRect {
        corners: local.map(|p| origin + p.rotate(pose.yaw)),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Direction {
    Forward,
    Backward,
    Wait,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MotionPrimitive {
    pub direction: Direction,
    /// Front-wheel angle: `-phi_max`, `0` or `+phi_max`.
    pub steering: f64,
    /// Path length covered by the primitive; zero for wait.
    pub arc_length: f64,
}

impl MotionPrimitive {
    pub fn is_wait(&self) -> bool {
        self.direction == Direction::Wait
    }

    /// Constant control that realises the primitive over its sub-steps.
    pub fn control(&self, spec: &AgentSpec) -> ControlInput {
        let v = match self.direction {
            Direction::Forward => spec.v_forward_max,
            Direction::Backward => spec.v_backward_max,
            Direction::Wait => return ControlInput::ZERO,
        };
        ControlInput {
            v,
            omega: v / spec.wheelbase * self.steering.tan(),
        }
    }
}

/// The seven successors of a search node, integrated at `T_s` granularity.
#[derive(Debug, Clone, PartialEq)]
pub struct PrimitiveSet {
    pub primitives: [MotionPrimitive; 7],
    /// Samples of `T_s` per primitive.
    pub substeps: u32,
}

impl PrimitiveSet {
    /// `search_step` is the duration of one primitive in seconds and must be
    /// an integer multiple of the spec's sample time.
    pub fn new(spec: &AgentSpec, search_step: f64) -> Result<Self, ModelError> {
        if !search_step.is_finite() || search_step <= 0.0 {
            return Err(ModelError::InvalidSpec("search_step must be positive".into()));
        }
        let ratio = search_step / spec.sample_time;
        let substeps = ratio.round();
        if substeps < 1.0 || (ratio - substeps).abs() > 1e-9 {
            return Err(ModelError::InvalidSpec(format!(
                "search_step {search_step} is not a multiple of sample_time {}",
                spec.sample_time
            )));
        }
        let substeps = substeps as u32;
        let duration = substeps as f64 * spec.sample_time;
        let fwd = spec.v_forward_max * duration;
        let bwd = -spec.v_backward_max * duration;
        let p = spec.phi_max;
        let mk = |direction, steering, arc_length| MotionPrimitive { direction, steering, arc_length };
        Ok(Self {
            primitives: [
                mk(Direction::Forward, p, fwd),
                mk(Direction::Forward, 0.0, fwd),
                mk(Direction::Forward, -p, fwd),
                mk(Direction::Backward, p, bwd),
                mk(Direction::Backward, 0.0, bwd),
                mk(Direction::Backward, -p, bwd),
                mk(Direction::Wait, 0.0, 0.0),
            ],
            substeps,
        })
    }

    pub fn wait(&self) -> MotionPrimitive {
        self.primitives[6]
    }

    pub fn forward_arc(&self) -> f64 {
        self.primitives[1].arc_length
    }
}

/// Integrates one primitive; returns the `substeps` states after `state`.
pub fn rollout(
    state: &AgentState,
    primitive: &MotionPrimitive,
    spec: &AgentSpec,
    substeps: u32,
) -> (Vec<AgentState>, ControlInput) {
    let u = primitive.control(spec);
    let mut out = Vec::with_capacity(substeps as usize);
    let mut s = *state;
    for _ in 0..substeps {
        s = step_unchecked(&s, u, spec.sample_time);
        out.push(s);
    }
    (out, u)
}

/// All seven children of `state` (final pose of each primitive).
pub fn expand_primitives(
    state: &AgentState,
    spec: &AgentSpec,
    set: &PrimitiveSet,
) -> Vec<(MotionPrimitive, AgentState)> {
    set.primitives
        .iter()
        .map(|p| {
            let (states, _) = rollout(state, p, spec, set.substeps);
            (*p, *states.last().expect("substeps >= 1"))
        })
        .collect()
}
