//! Cooperative hybrid A* for a formation group.
//!
//! Each member runs its own best-first search. Searches advance in batches:
//! the member closest to its goal leads, the ideal formation poses follow the
//! leader's best open node, and each other member's child closest to its ideal
//! pose gets a discounted cost.

use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::geometry::{angle_distance, Vec2};
use crate::model::{AgentState, MotionPrimitive, Pose};
use crate::search_single::{AvoidConstraint, Child, Engine, PlanContext, SearchError, SearchLimits, SearchOutcome};
use crate::trajectory::Trajectory;

/// Formation shape: each member's planar offset from member 0.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RelativeStates {
    offsets: Vec<Vec2>,
}

impl RelativeStates {
    /// Takes reference positions in any frame; they are re-based so that
    /// member 0 sits at the origin.
    pub fn new(positions: Vec<Vec2>) -> Self {
        let base = positions.first().copied().unwrap_or_default();
        Self { offsets: positions.into_iter().map(|p| p - base).collect() }
    }

    pub fn from_poses(poses: &[Pose]) -> Self {
        Self::new(poses.iter().map(Pose::position).collect())
    }

    pub fn len(&self) -> usize {
        self.offsets.len()
    }

    pub fn is_empty(&self) -> bool {
        self.offsets.is_empty()
    }

    pub fn offsets(&self) -> &[Vec2] {
        &self.offsets
    }

    /// Largest distance between two members.
    pub fn diameter(&self) -> f64 {
        let p = &self.offsets;
        let mut d: f64 = 0.0;
        for i in 0..p.len() {
            for j in i + 1..p.len() {
                d = d.max(p[i].distance(p[j]));
            }
        }
        d
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CshaConfig {
    pub angle_weight: f64,
    pub reward: f64,
    pub remote_threshold: f64,
}

impl CshaConfig {
    pub fn from_context(ctx: &PlanContext) -> Self {
        Self {
            angle_weight: ctx.config.angle_weight_d,
            reward: ctx.config.closest_reward_r,
            remote_threshold: ctx.config.remote_threshold.unwrap_or(2.0 * ctx.primitives.forward_arc()),
        }
    }
}

/// The unfinished member whose latest state is nearest its goal; ties go to
/// the lower index.
pub fn first_agent_cal(latest: &[AgentState], goals: &[Pose], finished: &[bool]) -> Option<usize> {
    let mut best: Option<(usize, f64)> = None;
    for (i, (s, g)) in latest.iter().zip(goals).enumerate() {
        if finished[i] {
            continue;
        }
        let d = s.pose().distance(g);
        if best.is_none_or(|(_, bd)| d < bd) {
            best = Some((i, d));
        }
    }
    best.map(|(i, _)| i)
}

/// Formation poses implied by placing member `first` at `anchor`; every
/// member takes the anchor's heading.
pub fn ideal_states_cal(shape: &RelativeStates, anchor: &Pose, first: usize) -> Vec<Pose> {
    let delta = anchor.position() - shape.offsets[first];
    shape
        .offsets
        .iter()
        .enumerate()
        .map(|(j, r)| {
            if j == first {
                return *anchor;
            }
            let p = *r + delta;
            Pose::new(p.x, p.y, anchor.yaw)
        })
        .collect()
}

/// Squared position error plus weighted heading error.
pub fn shape_distance(pose: &Pose, ideal: &Pose, angle_weight: f64) -> f64 {
    let dx = pose.x - ideal.x;
    let dy = pose.y - ideal.y;
    dx * dx + dy * dy + angle_weight * angle_distance(pose.yaw, ideal.yaw)
}

/// Whether the group has drifted apart: some member is farther than the
/// threshold from its previous ideal pose, or farther from the leader than
/// the formation diameter plus the threshold.
pub fn remote_dis(
    latest: &[AgentState],
    prev_ideal: &[Pose],
    first: usize,
    shape: &RelativeStates,
    threshold: f64,
) -> bool {
    let lead = latest[first].pose();
    let limit = shape.diameter() + threshold;
    latest.iter().enumerate().filter(|(j, _)| *j != first).any(|(j, s)| {
        let p = s.pose();
        p.distance(&prev_ideal[j]) > threshold || p.distance(&lead) > limit
    })
}

/// Index of the child nearest `ideal`; ties go to the earlier child.
pub fn closest_child(children: &[Child], ideal: &Pose, angle_weight: f64) -> Option<usize> {
    let mut best: Option<(usize, f64)> = None;
    for (i, c) in children.iter().enumerate() {
        let d = shape_distance(&c.state.pose(), ideal, angle_weight);
        if best.is_none_or(|(_, bd)| d < bd) {
            best = Some((i, d));
        }
    }
    best.map(|(i, _)| i)
}

/// What happened in one batch, for inspection and tests.
#[derive(Debug, Clone, PartialEq)]
pub struct BatchRecord {
    pub first_agent: usize,
    /// The leader only generated a zero-priority wait.
    pub waited: bool,
    /// Children the leader inserted, with their priorities.
    pub first_children: Vec<(MotionPrimitive, f64)>,
    pub ideal: Vec<Pose>,
    /// Primitive whose child received the reward, per member.
    pub rewarded: Vec<Option<MotionPrimitive>>,
    pub finished: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq)]
pub enum BatchStatus {
    Continue,
    Done,
    Failed(SearchError),
}

/// A steppable group search.
pub struct GroupSearch<'c> {
    ctx: &'c PlanContext,
    shape: RelativeStates,
    config: CshaConfig,
    goals: Vec<Pose>,
    members: Vec<Engine<'c>>,
    latest: Vec<AgentState>,
    ideal: Vec<Pose>,
    finished: Vec<Option<Trajectory>>,
    limits: SearchLimits,
    budget: u64,
}

impl<'c> GroupSearch<'c> {
    /// `constraints[j]` applies to member `j` only.
    pub fn new(
        ctx: &'c PlanContext,
        starts: &[AgentState],
        goals: &[Pose],
        shape: RelativeStates,
        constraints: &[Vec<AvoidConstraint>],
        limits: SearchLimits,
    ) -> Result<Self, SearchError> {
        let n = starts.len();
        if n == 0 || goals.len() != n || shape.len() != n || constraints.len() != n {
            return Err(SearchError::InvalidInput("group inputs must have one entry per member".into()));
        }
        for (s, g) in starts.iter().zip(goals) {
            ctx.check_endpoints(s, g)?;
        }
        let members = starts
            .iter()
            .zip(goals)
            .zip(constraints)
            .map(|((s, g), c)| Engine::new(ctx, *s, *g, ctx.constraint_table(c)))
            .collect();
        let latest = starts.to_vec();
        let finished = vec![false; n];
        let first = first_agent_cal(&latest, goals, &finished).expect("non-empty group");
        let ideal = ideal_states_cal(&shape, &starts[first].pose(), first);
        Ok(Self {
            ctx,
            config: CshaConfig::from_context(ctx),
            shape,
            goals: goals.to_vec(),
            members,
            latest,
            ideal,
            finished: vec![None; n],
            budget: limits.node_budget.saturating_mul(n as u64),
            limits,
        })
    }

    pub fn expansions(&self) -> u64 {
        self.members.iter().map(|m| m.expansions).sum()
    }

    pub fn ideal(&self) -> &[Pose] {
        &self.ideal
    }

    pub fn latest(&self) -> &[AgentState] {
        &self.latest
    }

    fn finished_flags(&self) -> Vec<bool> {
        self.finished.iter().map(Option::is_some).collect()
    }

    fn finish(&mut self, j: usize, traj: Trajectory) {
        let arrival = traj.arrival_tick();
        let pose = traj.last().pose();
        for (m, engine) in self.members.iter_mut().enumerate() {
            if m != j && self.finished[m].is_none() {
                engine.table.add_parked(&pose, &self.ctx.spec, arrival);
            }
        }
        self.latest[j] = *traj.last();
        self.finished[j] = Some(traj);
    }

    /// Runs one batch: the leader first, then every other unfinished member
    /// in index order.
    pub fn step_batch(&mut self) -> (BatchStatus, Option<BatchRecord>) {
        let flags = self.finished_flags();
        let Some(first) = first_agent_cal(&self.latest, &self.goals, &flags) else {
            return (BatchStatus::Done, None);
        };
        if self.expansions() >= self.budget {
            return (BatchStatus::Failed(SearchError::NodeBudget), None);
        }
        if self.limits.deadline.is_some_and(|d| Instant::now() >= d) {
            return (BatchStatus::Failed(SearchError::Timeout), None);
        }
        let n = self.members.len();
        let mut record = BatchRecord {
            first_agent: first,
            waited: false,
            first_children: Vec::new(),
            ideal: Vec::new(),
            rewarded: vec![None; n],
            finished: Vec::new(),
        };

        let Some(idx) = self.members[first].pop() else {
            return (BatchStatus::Failed(SearchError::Exhausted), Some(record));
        };
        self.latest[first] = self.members[first].node(idx).state;
        if let Some(traj) = self.members[first].try_finish(idx) {
            let end = traj.last().pose();
            self.finish(first, traj);
            record.finished.push(first);
            self.ideal = ideal_states_cal(&self.shape, &end, first);
        } else {
            let none_finished = flags.iter().all(|f| !f);
            let wait = none_finished
                && remote_dis(&self.latest, &self.ideal, first, &self.shape, self.config.remote_threshold);
            let engine = &mut self.members[first];
            let children = engine.successors(idx, wait);
            record.waited = wait;
            for c in children {
                let forced = wait.then_some(0.0);
                if let Some(f) = engine.insert(idx, c, forced) {
                    record.first_children.push((c.primitive, f));
                }
            }
            let Some(top) = engine.peek() else {
                return (BatchStatus::Failed(SearchError::Exhausted), Some(record));
            };
            let anchor = engine.node(top).state.pose();
            self.ideal = ideal_states_cal(&self.shape, &anchor, first);
        }

        for j in 0..n {
            if j == first || self.finished[j].is_some() {
                continue;
            }
            let engine = &mut self.members[j];
            let Some(idx) = engine.pop() else {
                record.ideal = self.ideal.clone();
                return (BatchStatus::Failed(SearchError::Exhausted), Some(record));
            };
            self.latest[j] = engine.node(idx).state;
            if let Some(traj) = engine.try_finish(idx) {
                self.finish(j, traj);
                record.finished.push(j);
                continue;
            }
            let mut children = engine.successors(idx, false);
            if let Some(best) = closest_child(&children, &self.ideal[j], self.config.angle_weight) {
                children[best].g *= self.config.reward;
                record.rewarded[j] = Some(children[best].primitive);
            }
            engine.insert_all(idx, children);
        }
        record.ideal = self.ideal.clone();
        let status = if self.finished.iter().all(Option::is_some) { BatchStatus::Done } else { BatchStatus::Continue };
        (status, Some(record))
    }

    /// Steps until every member arrives or the search fails.
    pub fn run(mut self) -> SearchOutcome<Vec<Trajectory>> {
        loop {
            match self.step_batch().0 {
                BatchStatus::Continue => {}
                BatchStatus::Done => {
                    let expansions = self.expansions();
                    let trajs = self.finished.into_iter().map(|t| t.expect("all finished")).collect();
                    return SearchOutcome { result: Ok(trajs), expansions };
                }
                BatchStatus::Failed(e) => return SearchOutcome { result: Err(e), expansions: self.expansions() },
            }
        }
    }
}

/// Plans a whole group. Member `j` starts at `starts[j]`, ends near
/// `goals[j]` and obeys `constraints[j]`.
pub fn plan_group(
    ctx: &PlanContext,
    starts: &[AgentState],
    goals: &[Pose],
    shape: &RelativeStates,
    constraints: &[Vec<AvoidConstraint>],
    limits: &SearchLimits,
) -> SearchOutcome<Vec<Trajectory>> {
    match GroupSearch::new(ctx, starts, goals, shape.clone(), constraints, *limits) {
        Ok(search) => search.run(),
        Err(e) => SearchOutcome { result: Err(e), expansions: 0 },
    }
}
