//! Independent feasibility audit of a finished plan.
//!
//! Uses only the world and vehicle model: static collisions and body
//! overlaps are sampled five times per tick, every transition is re-derived
//! from the Euler kinematics, and controls are held to the speed and
//! turning-radius limits.

use std::fmt;

use serde::Serialize;

use crate::geometry::normalize_angle;
use crate::model::{footprint, interpolate, AgentSpec, AgentState, Pose};
use crate::scenario::Scenario;
use crate::trajectory::Trajectory;
use crate::world::bodies_overlap;

/// Sub-samples per tick for collision checks (interval `T_s / 5`).
pub const AUDIT_SAMPLES: u32 = 5;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AuditTolerance {
    /// Allowed mismatch between a recorded state and the kinematic step.
    pub dynamics: f64,
    /// Allowed shortfall below the minimum turning radius.
    pub turning_radius: f64,
    /// Rounding half-step of stored values; zero for in-memory plans.
    pub quantum: f64,
}

impl AuditTolerance {
    pub const EXACT: AuditTolerance = AuditTolerance { dynamics: 1e-6, turning_radius: 1e-6, quantum: 0.0 };

    /// For plans read back from six-decimal files.
    pub const FILE: AuditTolerance = AuditTolerance { dynamics: 1e-6, turning_radius: 1e-6, quantum: 5e-7 };
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Violation {
    AgentCount { expected: usize, found: usize },
    StartMismatch { agent: usize },
    StageEnds { reason: String },
    GoalMissed { agent: usize, stage: usize, distance: f64 },
    StaticCollision { agent: usize, tick: u32, fraction: f64 },
    BodyConflict { agent_a: usize, agent_b: usize, tick: u32, fraction: f64 },
    Dynamics { agent: usize, tick: u32, error: f64 },
    SpeedLimit { agent: usize, tick: u32, v: f64 },
    TurningRadius { agent: usize, tick: u32, v: f64, omega: f64 },
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::AgentCount { expected, found } => {
                write!(f, "agent count: expected {expected}, found {found}")
            }
            Violation::StartMismatch { agent } => write!(f, "start mismatch: agent {agent}"),
            Violation::StageEnds { reason } => write!(f, "stage ends: {reason}"),
            Violation::GoalMissed { agent, stage, distance } => {
                write!(f, "goal missed: agent {agent} ends stage {stage} {distance:.3} m from its goal")
            }
            Violation::StaticCollision { agent, tick, fraction } => {
                write!(f, "static collision: agent {agent} at tick {tick}+{fraction}")
            }
            Violation::BodyConflict { agent_a, agent_b, tick, fraction } => {
                write!(f, "body conflict: agents {agent_a} and {agent_b} at tick {tick}+{fraction}")
            }
            Violation::Dynamics { agent, tick, error } => {
                write!(f, "dynamics: agent {agent}, step {tick} -> {} off by {error:.3e}", tick + 1)
            }
            Violation::SpeedLimit { agent, tick, v } => write!(f, "speed limit: agent {agent} at tick {tick}, v = {v}"),
            Violation::TurningRadius { agent, tick, v, omega } => {
                write!(f, "turning radius: agent {agent} at tick {tick}, v = {v}, omega = {omega}")
            }
        }
    }
}

fn check_kinematics(agent: usize, traj: &Trajectory, spec: &AgentSpec, tol: &AuditTolerance, out: &mut Vec<Violation>) {
    let dt = spec.sample_time;
    let q = tol.quantum;
    let r_min = spec.min_turn_radius();
    for (k, (w, u)) in traj.states().windows(2).zip(traj.controls()).enumerate() {
        let (a, b) = (&w[0], &w[1]);
        let tick = traj.start_tick() + k as u32;
        if u.v > spec.v_forward_max + tol.dynamics + q || u.v < spec.v_backward_max - tol.dynamics - q {
            out.push(Violation::SpeedLimit { agent, tick, v: u.v });
        }
        if u.omega.abs() * (r_min - tol.turning_radius) > u.v.abs() + q * (1.0 + r_min) {
            out.push(Violation::TurningRadius { agent, tick, v: u.v, omega: u.omega });
        }
        let x = a.x + dt * u.v * a.yaw.cos();
        let y = a.y + dt * u.v * a.yaw.sin();
        let yaw = a.yaw + dt * u.omega;
        let pos_err = (x - b.x).hypot(y - b.y);
        let yaw_err = normalize_angle(yaw - b.yaw).abs();
        let allowed = tol.dynamics + q * (2.0 + dt * (1.0 + u.v.abs()));
        let error = pos_err.max(yaw_err);
        if error.is_nan() || error > allowed {
            out.push(Violation::Dynamics { agent, tick, error });
        }
    }
}

fn sample(traj: &Trajectory, tick: u32, k: u32) -> Pose {
    let a = traj.state_at(tick);
    if k == 0 || tick >= traj.end_tick() {
        return a.pose();
    }
    let b: AgentState = traj.state_at(tick + 1);
    interpolate(&a, &b, k as f64 / AUDIT_SAMPLES as f64)
}

/// Every violation found, in a fixed order. Empty means the plan is
/// feasible.
pub fn audit(scenario: &Scenario, trajs: &[Trajectory], stage_ends: &[u32], tol: &AuditTolerance) -> Vec<Violation> {
    let mut out = Vec::new();
    let spec = &scenario.spec;
    let n = scenario.num_agents();
    if trajs.len() != n {
        out.push(Violation::AgentCount { expected: n, found: trajs.len() });
        return out;
    }
    for (agent, (t, start)) in trajs.iter().zip(&scenario.starts).enumerate() {
        let s = t.first();
        if t.start_tick() != 0 || (s.x - start.x).hypot(s.y - start.y) > tol.dynamics + tol.quantum
            || normalize_angle(s.yaw - start.yaw).abs() > tol.dynamics + tol.quantum
        {
            out.push(Violation::StartMismatch { agent });
        }
    }
    if stage_ends.len() != scenario.stages.len() {
        out.push(Violation::StageEnds {
            reason: format!("{} stage ends for {} stages", stage_ends.len(), scenario.stages.len()),
        });
    } else if stage_ends.windows(2).any(|w| w[1] < w[0]) {
        out.push(Violation::StageEnds { reason: "stage ends decrease".into() });
    } else {
        let pos_tol = scenario.config.goal_position_tolerance + tol.quantum;
        let yaw_tol = scenario.config.goal_yaw_tolerance + tol.quantum;
        for (stage, (st, &end)) in scenario.stages.iter().zip(stage_ends).enumerate() {
            for (agent, t) in trajs.iter().enumerate() {
                let s = t.state_at(end);
                let goal = &st.goals[agent];
                let distance = (s.x - goal.x).hypot(s.y - goal.y);
                if distance > pos_tol || normalize_angle(s.yaw - goal.yaw).abs() > yaw_tol {
                    out.push(Violation::GoalMissed { agent, stage, distance });
                }
            }
        }
    }
    for (agent, t) in trajs.iter().enumerate() {
        check_kinematics(agent, t, spec, tol, &mut out);
    }

    let horizon = trajs.iter().map(Trajectory::end_tick).max().unwrap_or(0);
    let mut static_hit = vec![false; n];
    let mut pair_hit = vec![false; n * n];
    for tick in 0..=horizon {
        let subs = if tick == horizon { 1 } else { AUDIT_SAMPLES };
        for k in 0..subs {
            let fraction = k as f64 / AUDIT_SAMPLES as f64;
            let poses: Vec<Pose> = trajs.iter().map(|t| sample(t, tick, k)).collect();
            for (agent, p) in poses.iter().enumerate() {
                if !static_hit[agent] && scenario.world.collides_static(&footprint(p, spec)) {
                    static_hit[agent] = true;
                    out.push(Violation::StaticCollision { agent, tick, fraction });
                }
            }
            for a in 0..n {
                for b in a + 1..n {
                    if !pair_hit[a * n + b] && bodies_overlap(&poses[a], spec, &poses[b], spec) {
                        pair_hit[a * n + b] = true;
                        out.push(Violation::BodyConflict { agent_a: a, agent_b: b, tick, fraction });
                    }
                }
            }
        }
    }
    out
}
