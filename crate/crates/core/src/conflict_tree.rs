//! Conflict-tree search over per-agent plans, with cooperative groups
//! replanned as a whole, and chaining of formation stages.

use std::borrow::Borrow;
use std::cmp::Reverse;
use std::collections::BinaryHeap;
use std::sync::Arc;
use std::time::{Duration, Instant};

use log::{debug, info};
use ordered_float::OrderedFloat;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geometry::rects_overlap;
use crate::model::{footprint, AgentSpec, AgentState, Pose};
use crate::scenario::{Scenario, Stage};
use crate::search_coop::plan_group;
use crate::search_single::{plan_single, AvoidConstraint, PlanContext, SearchError, SearchLimits};
use crate::trajectory::Trajectory;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum PlanError {
    #[error("low-level plan for agents {agents:?} failed: {source}")]
    LowLevel { agents: Vec<usize>, source: SearchError },
    #[error("conflict tree exhausted")]
    Exhausted,
    #[error("time limit exceeded")]
    Timeout,
    #[error("conflict-tree node limit exceeded")]
    HighLevelBudget,
    #[error("stage {stage}: {source}")]
    Stage { stage: usize, source: Box<PlanError> },
    #[error("invalid input: {0}")]
    InvalidInput(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BodyConflict {
    pub agent_i: usize,
    pub agent_j: usize,
    /// Tick at or just before the overlap.
    pub t: u32,
    /// Fraction of the tick at which the overlap was sampled.
    pub alpha: f64,
    pub states: [AgentState; 2],
}

#[derive(Debug, Clone, PartialEq)]
pub struct CtNode {
    pub constraints: Vec<Vec<AvoidConstraint>>,
    /// Shared with the parent for agents that were not replanned.
    pub solution: Vec<Arc<Trajectory>>,
    pub cost: f64,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct PlanStats {
    /// Conflict-tree nodes generated: two per processed conflict.
    pub high_level_nodes: u64,
    /// Successors generated by all low-level searches.
    pub low_level_nodes: u64,
    /// Whether the initial unconstrained plans were already conflict-free.
    pub root_conflict_free: bool,
    pub runtime_s: f64,
}

impl PlanStats {
    fn absorb(&mut self, other: &PlanStats) {
        self.high_level_nodes += other.high_level_nodes;
        self.low_level_nodes += other.low_level_nodes;
        self.runtime_s += other.runtime_s;
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PlanLimits {
    pub time_limit: Option<Duration>,
    pub node_budget: u64,
}

impl PlanLimits {
    pub fn new(time_limit: Option<Duration>, node_budget: u64) -> Self {
        Self { time_limit, node_budget }
    }
}

/// Sum over agents of the time from first state to arrival, in seconds.
pub fn cost_sum<T: Borrow<Trajectory>>(solution: &[T], spec: &AgentSpec) -> f64 {
    solution.iter().map(|t| t.borrow().flowtime(spec)).sum()
}

/// Earliest body overlap between two agents, sampling each tick at
/// `samples` fractions. Trajectories are treated as parked after their end.
pub fn find_first_body_conflict<T: Borrow<Trajectory>>(
    solution: &[T],
    spec: &AgentSpec,
    samples: u32,
) -> Option<BodyConflict> {
    if solution.len() < 2 {
        return None;
    }
    let solution: Vec<&Trajectory> = solution.iter().map(Borrow::borrow).collect();
    let start = solution.iter().map(|t| t.start_tick()).min()?;
    let horizon = solution.iter().map(|t| t.end_tick()).max()?;
    // Largest reference-point separation at which two bodies can touch.
    let corner = spec.front_length.max(spec.rear_length).hypot(0.5 * spec.width);
    let reach = 2.0 * corner + 1e-9;
    for t in start..=horizon {
        let subs = if t == horizon { 1 } else { samples };
        for k in 0..subs {
            let alpha = k as f64 / samples as f64;
            let poses: Vec<Pose> = solution.iter().map(|tr| tr.pose_at(t, alpha)).collect();
            for i in 0..poses.len() {
                for j in i + 1..poses.len() {
                    if poses[i].distance(&poses[j]) > reach {
                        continue;
                    }
                    if rects_overlap(&footprint(&poses[i], spec), &footprint(&poses[j], spec)) {
                        return Some(BodyConflict {
                            agent_i: i,
                            agent_j: j,
                            t,
                            alpha,
                            states: [AgentState::at(poses[i], t), AgentState::at(poses[j], t)],
                        });
                    }
                }
            }
        }
    }
    None
}

/// Low-level planning for one stage.
pub struct StagePlanner<'a> {
    ctx: &'a PlanContext,
    stage: &'a Stage,
    starts: Vec<AgentState>,
    limits: SearchLimits,
}

impl<'a> StagePlanner<'a> {
    pub fn new(ctx: &'a PlanContext, stage: &'a Stage, starts: Vec<AgentState>, limits: SearchLimits) -> Self {
        Self { ctx, stage, starts, limits }
    }

    /// Replans `agent` (or its whole group) under `constraints`, writing the
    /// new trajectories into `solution`. Returns the successors generated.
    fn replan(
        &self,
        agent: usize,
        constraints: &[Vec<AvoidConstraint>],
        solution: &mut [Arc<Trajectory>],
    ) -> (Result<(), PlanError>, u64) {
        match self.stage.group_of(agent) {
            None => {
                let out = plan_single(
                    self.ctx,
                    self.starts[agent],
                    &self.stage.goals[agent],
                    &constraints[agent],
                    &self.limits,
                );
                match out.result {
                    Ok(t) => {
                        solution[agent] = Arc::new(t);
                        (Ok(()), out.expansions)
                    }
                    Err(source) => (Err(PlanError::LowLevel { agents: vec![agent], source }), out.expansions),
                }
            }
            Some(g) => {
                let group = &self.stage.groups[g];
                // Every member sees the constraints of all members, except
                // those that refer to itself.
                let union: Vec<AvoidConstraint> =
                    group.members.iter().flat_map(|&m| constraints[m].iter().copied()).collect();
                let per_member: Vec<Vec<AvoidConstraint>> = group
                    .members
                    .iter()
                    .map(|&m| union.iter().filter(|c| c.other_agent != m).copied().collect())
                    .collect();
                let starts: Vec<AgentState> = group.members.iter().map(|&m| self.starts[m]).collect();
                let goals: Vec<Pose> = group.members.iter().map(|&m| self.stage.goals[m]).collect();
                let out = plan_group(self.ctx, &starts, &goals, &group.shape, &per_member, &self.limits);
                match out.result {
                    Ok(trajs) => {
                        for (&m, t) in group.members.iter().zip(trajs) {
                            solution[m] = Arc::new(t);
                        }
                        (Ok(()), out.expansions)
                    }
                    Err(source) => {
                        (Err(PlanError::LowLevel { agents: group.members.clone(), source }), out.expansions)
                    }
                }
            }
        }
    }

    /// Unconstrained plans: outliers first, then groups.
    pub fn root(&self) -> (Result<CtNode, PlanError>, u64) {
        let n = self.starts.len();
        let constraints = vec![Vec::new(); n];
        let mut solution: Vec<Arc<Trajectory>> =
            self.starts.iter().map(|s| Arc::new(Trajectory::stationary(*s))).collect();
        let mut expansions = 0;
        let leaders = self.stage.outliers.iter().copied().chain(self.stage.groups.iter().map(|g| g.members[0]));
        for agent in leaders {
            let (res, e) = self.replan(agent, &constraints, &mut solution);
            expansions += e;
            if let Err(err) = res {
                return (Err(err), expansions);
            }
        }
        let cost = cost_sum(&solution, &self.ctx.spec);
        (Ok(CtNode { constraints, solution, cost }), expansions)
    }

    fn child(&self, node: &CtNode, me: usize, other: usize, other_state: AgentState) -> (Option<CtNode>, u64) {
        let mut constraints = node.constraints.clone();
        let open_ended = other_state.t >= node.solution[other].arrival_tick();
        constraints[me].push(AvoidConstraint { other_agent: other, state: other_state, open_ended });
        let mut solution = node.solution.clone();
        let (res, e) = self.replan(me, &constraints, &mut solution);
        if res.is_err() {
            return (None, e);
        }
        let cost = cost_sum(&solution, &self.ctx.spec);
        (Some(CtNode { constraints, solution, cost }), e)
    }

    /// The two children of `node` for `conflict`, constraining agent i then
    /// agent j. Children whose replan fails are dropped.
    pub fn branch(&self, node: &CtNode, conflict: &BodyConflict, parallel: bool) -> (Vec<CtNode>, u64) {
        let (i, j) = (conflict.agent_i, conflict.agent_j);
        let (a, b) = if parallel {
            std::thread::scope(|s| {
                let h = s.spawn(|| self.child(node, j, i, conflict.states[0]));
                let a = self.child(node, i, j, conflict.states[1]);
                (a, h.join().expect("branch thread panicked"))
            })
        } else {
            (self.child(node, i, j, conflict.states[1]), self.child(node, j, i, conflict.states[0]))
        };
        let expansions = a.1 + b.1;
        (a.0.into_iter().chain(b.0).collect(), expansions)
    }
}

/// Best-first conflict-tree search for one stage. Every trajectory starts
/// at `starts[agent]`.
pub fn plan_stage(
    ctx: &PlanContext,
    stage: &Stage,
    starts: &[AgentState],
    limits: &PlanLimits,
    deadline: Option<Instant>,
) -> (Result<Vec<Trajectory>, PlanError>, PlanStats) {
    let clock = Instant::now();
    let mut stats = PlanStats::default();
    let low = SearchLimits { node_budget: limits.node_budget, deadline };
    let planner = StagePlanner::new(ctx, stage, starts.to_vec(), low);
    let finish = |mut stats: PlanStats, r| {
        stats.runtime_s = clock.elapsed().as_secs_f64();
        (r, stats)
    };

    let (root, e) = planner.root();
    stats.low_level_nodes += e;
    let root = match root {
        Ok(r) => r,
        Err(err) => return finish(stats, Err(err)),
    };
    let mut nodes = vec![Some(root)];
    let mut open = BinaryHeap::new();
    open.push(Reverse((OrderedFloat(nodes[0].as_ref().expect("root").cost), 0usize)));
    let mut first = true;
    while let Some(Reverse((_, idx))) = open.pop() {
        if deadline.is_some_and(|d| Instant::now() >= d) {
            return finish(stats, Err(PlanError::Timeout));
        }
        let node = nodes[idx].take().expect("each node is popped once");
        let Some(conflict) = find_first_body_conflict(&node.solution, &ctx.spec, ctx.samples) else {
            stats.root_conflict_free = first;
            info!("conflict-free solution, cost {:.3}", node.cost);
            let solution = node.solution.into_iter().map(Arc::unwrap_or_clone).collect();
            return finish(stats, Ok(solution));
        };
        first = false;
        if stats.high_level_nodes >= ctx.config.max_high_level_nodes {
            return finish(stats, Err(PlanError::HighLevelBudget));
        }
        stats.high_level_nodes += 2;
        debug!(
            "conflict agents {} and {} at tick {} (+{:.2}), cost {:.3}",
            conflict.agent_i, conflict.agent_j, conflict.t, conflict.alpha, node.cost
        );
        let (children, e) = planner.branch(&node, &conflict, ctx.config.parallel_branches);
        stats.low_level_nodes += e;
        for child in children {
            open.push(Reverse((OrderedFloat(child.cost), nodes.len())));
            nodes.push(Some(child));
        }
    }
    finish(stats, Err(PlanError::Exhausted))
}

/// Result of planning every stage of a scenario.
#[derive(Debug, Clone, PartialEq)]
pub struct MultiStagePlan {
    /// Per-agent trajectories over all stages, padded to a common end.
    pub trajectories: Vec<Trajectory>,
    /// Last tick of each stage.
    pub stage_ends: Vec<u32>,
    pub stats: PlanStats,
    pub stage_stats: Vec<PlanStats>,
}

/// Plans every stage in order. Each stage starts where the previous one
/// ended, after all agents have arrived.
pub fn plan_stages(scenario: &Scenario, limits: &PlanLimits) -> Result<MultiStagePlan, (PlanError, PlanStats)> {
    let ctx = PlanContext::new(scenario.world.clone(), scenario.spec, scenario.config.clone())
        .map_err(|e| (PlanError::InvalidInput(e.to_string()), PlanStats::default()))?;
    plan_stages_with(&ctx, scenario, limits)
}

pub fn plan_stages_with(
    ctx: &PlanContext,
    scenario: &Scenario,
    limits: &PlanLimits,
) -> Result<MultiStagePlan, (PlanError, PlanStats)> {
    let deadline = limits.time_limit.map(|d| Instant::now() + d);
    let mut starts: Vec<AgentState> = scenario.starts.iter().map(|p| AgentState::at(*p, 0)).collect();
    let mut combined: Vec<Trajectory> = starts.iter().map(|s| Trajectory::stationary(*s)).collect();
    let mut stats = PlanStats::default();
    let mut stage_stats = Vec::new();
    let mut stage_ends = Vec::new();
    let mut offset = 0;
    for (index, stage) in scenario.stages.iter().enumerate() {
        let (res, st) = plan_stage(ctx, stage, &starts, limits, deadline);
        stats.absorb(&st);
        if index == 0 {
            stats.root_conflict_free = st.root_conflict_free;
        } else {
            stats.root_conflict_free &= st.root_conflict_free;
        }
        stage_stats.push(st);
        let mut trajs = match res {
            Ok(t) => t,
            Err(e) => return Err((PlanError::Stage { stage: index, source: Box::new(e) }, stats)),
        };
        let horizon = trajs.iter().map(Trajectory::end_tick).max().unwrap_or(0);
        for (agent, t) in trajs.iter_mut().enumerate() {
            t.pad_to(horizon);
            combined[agent].extend_with(&t.shifted(offset));
        }
        offset += horizon;
        stage_ends.push(offset);
        starts = trajs.iter().map(|t| AgentState { t: 0, ..*t.last() }).collect();
    }
    Ok(MultiStagePlan { trajectories: combined, stage_ends, stats, stage_stats })
}
