//! Best-first search machinery shared by the single-agent and group planners.

use std::cmp::Reverse;
use std::collections::{BinaryHeap, HashMap, HashSet};
use std::sync::Arc;

use ordered_float::OrderedFloat;

use super::constraints::ConstraintTable;
use super::heuristic::{heuristic, GridField};
use super::{DiscreteKey, PlanContext};
use crate::geometry::angle_distance;
use crate::model::{
    footprint, footprint_inflated, interpolate, rollout, step_unchecked, AgentState, ControlInput, Direction,
    MotionPrimitive, Pose,
};
use crate::reeds_shepp::shortest_path;
use crate::trajectory::Trajectory;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SearchNode {
    pub state: AgentState,
    pub g: f64,
    pub h: f64,
    pub f: f64,
    pub parent: Option<u32>,
    /// Primitive that produced this node from its parent.
    pub primitive: Option<MotionPrimitive>,
}

/// A feasible successor not yet inserted into the open list.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Child {
    pub primitive: MotionPrimitive,
    pub state: AgentState,
    pub g: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
struct OpenEntry {
    f: OrderedFloat<f64>,
    h: OrderedFloat<f64>,
    seq: u64,
    node: u32,
    /// Bypasses the closed-set filter (gating waits).
    forced: bool,
}

/// Whether the motion from `from` through `subs` (one state per tick) stays
/// clear of obstacles and of every active blocker at all sub-samples.
pub(crate) fn motion_free(
    ctx: &PlanContext,
    table: &ConstraintTable,
    from: &AgentState,
    subs: &[AgentState],
    check_static: bool,
) -> bool {
    let t0 = from.t as f64;
    let constrained = table.any_active(t0, t0 + subs.len() as f64);
    if !check_static && !constrained {
        return true;
    }
    let inflation = ctx.config.inflation;
    let mut prev = *from;
    for s in subs {
        for i in 1..=ctx.samples {
            let alpha = i as f64 / ctx.samples as f64;
            let pose = interpolate(&prev, s, alpha);
            let body = footprint(&pose, &ctx.spec);
            if check_static {
                let hit = if inflation > 0.0 {
                    ctx.world.collides_static(&footprint_inflated(&pose, &ctx.spec, inflation))
                } else {
                    ctx.world.collides_static(&body)
                };
                if hit {
                    return false;
                }
            }
            if constrained && table.violates(&body, prev.t as f64 + alpha) {
                return false;
            }
        }
        prev = *s;
    }
    true
}

pub(crate) fn within_goal(ctx: &PlanContext, pose: &Pose, goal: &Pose) -> bool {
    pose.distance(goal) <= ctx.config.goal_position_tolerance
        && angle_distance(pose.yaw, goal.yaw) <= ctx.config.goal_yaw_tolerance
}

/// Per-tick controls approximating a Reeds-Shepp curve at full speed, with a
/// slower final tick per segment to match its length.
fn curve_controls(ctx: &PlanContext, from: &Pose, goal: &Pose) -> Option<Vec<ControlInput>> {
    let spec = &ctx.spec;
    let path = shortest_path(from, goal, spec.min_turn_radius())?;
    let dt = spec.sample_time;
    let mut out = Vec::new();
    for seg in &path.segments {
        let len = seg.length.abs();
        if len < 1e-9 {
            continue;
        }
        let (sign, speed) = if seg.length > 0.0 { (1.0, spec.v_forward_max) } else { (-1.0, -spec.v_backward_max) };
        let curvature = seg.steer.sign() / path.radius;
        let per_tick = speed * dt;
        let full = (len / per_tick + 1e-9).floor();
        let rest = len - full * per_tick;
        for _ in 0..full as usize {
            let v = sign * speed;
            out.push(ControlInput { v, omega: v * curvature });
        }
        if rest > 1e-9 {
            let v = sign * rest / dt;
            out.push(ControlInput { v, omega: v * curvature });
        }
    }
    Some(out)
}

/// Tries to reach `goal` from `state` along the shortest obstacle-free
/// Reeds-Shepp curve. Returns the control/state sequence after `state`.
pub fn analytic_expand(
    ctx: &PlanContext,
    state: &AgentState,
    goal: &Pose,
    table: &ConstraintTable,
) -> Option<Vec<(ControlInput, AgentState)>> {
    let controls = curve_controls(ctx, &state.pose(), goal)?;
    let mut states = Vec::with_capacity(controls.len());
    let mut s = *state;
    for u in &controls {
        s = step_unchecked(&s, *u, ctx.spec.sample_time);
        states.push(s);
    }
    let last = states.last().copied().unwrap_or(*state);
    if !within_goal(ctx, &last.pose(), goal) {
        return None;
    }
    if !motion_free(ctx, table, state, &states, true) {
        return None;
    }
    if table.violates_parked(&footprint(&last.pose(), &ctx.spec), last.t as f64) {
        return None;
    }
    Some(controls.into_iter().zip(states).collect())
}

pub(crate) struct Engine<'c> {
    ctx: &'c PlanContext,
    goal: Pose,
    pub(crate) table: ConstraintTable,
    field: Arc<GridField>,
    nodes: Vec<SearchNode>,
    open: BinaryHeap<Reverse<OpenEntry>>,
    best_g: HashMap<DiscreteKey, f64>,
    closed: HashSet<DiscreteKey>,
    seq: u64,
    pub(crate) expansions: u64,
    analytic_countdown: u32,
}

impl<'c> Engine<'c> {
    pub(crate) fn new(ctx: &'c PlanContext, start: AgentState, goal: Pose, table: ConstraintTable) -> Self {
        let field = ctx.heuristic_field(goal.position());
        let mut e = Self {
            ctx,
            goal,
            table,
            field,
            nodes: Vec::new(),
            open: BinaryHeap::new(),
            best_g: HashMap::new(),
            closed: HashSet::new(),
            seq: 0,
            expansions: 0,
            analytic_countdown: 1,
        };
        let h = e.heuristic(&start);
        e.push_node(SearchNode { state: start, g: 0.0, h, f: h, parent: None, primitive: None }, false);
        e.best_g.insert(e.key(&start), 0.0);
        e
    }

    pub(crate) fn node(&self, idx: u32) -> &SearchNode {
        &self.nodes[idx as usize]
    }

    pub(crate) fn heuristic(&self, s: &AgentState) -> f64 {
        heuristic(&s.pose(), &self.goal, self.ctx.spec.min_turn_radius(), &self.field)
    }

    pub(crate) fn key(&self, s: &AgentState) -> DiscreteKey {
        let substeps = self.ctx.primitives.substeps;
        let cap = self.table.horizon().div_ceil(substeps) + 1;
        DiscreteKey::new(s, &self.ctx.config, substeps, cap)
    }

    fn push_node(&mut self, node: SearchNode, forced: bool) -> u32 {
        let idx = self.nodes.len() as u32;
        self.open.push(Reverse(OpenEntry {
            f: OrderedFloat(node.f),
            h: OrderedFloat(node.h),
            seq: self.seq,
            node: idx,
            forced,
        }));
        self.seq += 1;
        self.nodes.push(node);
        idx
    }

    /// Removes and closes the best open node.
    pub(crate) fn pop(&mut self) -> Option<u32> {
        while let Some(Reverse(e)) = self.open.pop() {
            let key = self.key(&self.nodes[e.node as usize].state);
            if !self.closed.insert(key) && !e.forced {
                continue;
            }
            return Some(e.node);
        }
        None
    }

    /// Best open node without removing it.
    pub(crate) fn peek(&mut self) -> Option<u32> {
        while let Some(Reverse(e)) = self.open.peek().copied() {
            if !e.forced && self.closed.contains(&self.key(&self.nodes[e.node as usize].state)) {
                self.open.pop();
                continue;
            }
            return Some(e.node);
        }
        None
    }

    fn step_cost(&self, p: &MotionPrimitive, prev: Option<&MotionPrimitive>) -> f64 {
        if p.is_wait() {
            return self.ctx.primitives.forward_arc();
        }
        let mut c = p.arc_length.abs();
        if p.direction == Direction::Backward {
            c *= self.ctx.config.reverse_penalty;
        }
        if let Some(q) = prev {
            if !q.is_wait() && q.steering != p.steering {
                c *= self.ctx.config.steer_change_penalty;
            }
        }
        c
    }

    /// Feasible children of `idx` in primitive order. Every generated
    /// successor counts as one expansion.
    pub(crate) fn successors(&mut self, idx: u32, wait_only: bool) -> Vec<Child> {
        let parent = self.nodes[idx as usize];
        let set = &self.ctx.primitives;
        let prims: Vec<MotionPrimitive> =
            if wait_only { vec![set.wait()] } else { set.primitives.to_vec() };
        let mut out = Vec::with_capacity(prims.len());
        for p in prims {
            self.expansions += 1;
            let (subs, _) = rollout(&parent.state, &p, &self.ctx.spec, set.substeps);
            if !motion_free(self.ctx, &self.table, &parent.state, &subs, !p.is_wait()) {
                continue;
            }
            let g = parent.g + self.step_cost(&p, parent.primitive.as_ref());
            out.push(Child { primitive: p, state: *subs.last().expect("substeps >= 1"), g });
        }
        out
    }

    /// Inserts a child. `forced_f` pushes it regardless of duplicates, with
    /// that priority. Returns the child's priority if it entered the open list.
    pub(crate) fn insert(&mut self, parent: u32, child: Child, forced_f: Option<f64>) -> Option<f64> {
        let key = self.key(&child.state);
        if forced_f.is_none() {
            if self.closed.contains(&key) {
                return None;
            }
            if self.best_g.get(&key).is_some_and(|&g| g <= child.g) {
                return None;
            }
        }
        let h = self.heuristic(&child.state);
        if !h.is_finite() {
            return None;
        }
        let f = forced_f.unwrap_or(child.g + h);
        let best = self.best_g.entry(key).or_insert(child.g);
        *best = best.min(child.g);
        let node = SearchNode { state: child.state, g: child.g, h, f, parent: Some(parent), primitive: Some(child.primitive) };
        self.push_node(node, forced_f.is_some());
        Some(f)
    }

    pub(crate) fn insert_all(&mut self, parent: u32, children: Vec<Child>) {
        for c in children {
            self.insert(parent, c, None);
        }
    }

    /// Finishes at `idx` if it is already at the goal, or via a scheduled
    /// analytic expansion.
    pub(crate) fn try_finish(&mut self, idx: u32) -> Option<Trajectory> {
        let node = self.nodes[idx as usize];
        let parked_ok =
            |e: &Self, s: &AgentState| !e.table.violates_parked(&footprint(&s.pose(), &e.ctx.spec), s.t as f64);
        if within_goal(self.ctx, &node.state.pose(), &self.goal) && parked_ok(self, &node.state) {
            return Some(self.reconstruct(idx, &[]));
        }
        self.analytic_countdown -= 1;
        if self.analytic_countdown > 0 {
            return None;
        }
        let step_len = self.ctx.primitives.forward_arc();
        let max = self.ctx.config.analytic_interval_max;
        self.analytic_countdown = ((node.h / step_len).round() as u32).clamp(1, max);
        let tail = analytic_expand(self.ctx, &node.state, &self.goal, &self.table)?;
        Some(self.reconstruct(idx, &tail))
    }

    pub(crate) fn reconstruct(&self, idx: u32, tail: &[(ControlInput, AgentState)]) -> Trajectory {
        let mut chain = vec![idx];
        while let Some(p) = self.nodes[*chain.last().expect("non-empty") as usize].parent {
            chain.push(p);
        }
        chain.reverse();
        let root = self.nodes[chain[0] as usize].state;
        let mut traj = Trajectory::stationary(root);
        for &i in &chain[1..] {
            let prim = self.nodes[i as usize].primitive.expect("non-root has primitive");
            let (subs, u) = rollout(traj.last(), &prim, &self.ctx.spec, self.ctx.primitives.substeps);
            for s in subs {
                traj.push(u, s);
            }
        }
        for (u, s) in tail {
            traj.push(*u, *s);
        }
        traj
    }
}
