//! Spatiotemporal hybrid A* for one agent under avoid constraints.

mod constraints;
mod engine;
mod heuristic;

use std::f64::consts::{PI, TAU};
use std::sync::Arc;
use std::time::Instant;

use thiserror::Error;

pub use constraints::{AvoidConstraint, ConstraintTable};
pub use engine::{analytic_expand, Child, SearchNode};
pub(crate) use engine::Engine;
pub use heuristic::{heuristic, GridField, HeuristicCache};

use crate::config::PlannerConfig;
use crate::geometry::Vec2;
use crate::model::{AgentSpec, AgentState, ModelError, Pose, PrimitiveSet};
use crate::trajectory::Trajectory;
use crate::world::{samples_per_tick, World};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SearchError {
    #[error("invalid input: {0}")]
    InvalidInput(String),
    #[error("open list exhausted without reaching the goal")]
    Exhausted,
    #[error("node budget exceeded")]
    NodeBudget,
    #[error("time limit exceeded")]
    Timeout,
}

impl From<ModelError> for SearchError {
    fn from(e: ModelError) -> Self {
        SearchError::InvalidInput(e.to_string())
    }
}

/// Discretised search state used for duplicate detection. The time index is
/// capped at the step after which constraints stop changing.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct DiscreteKey {
    pub xi: i64,
    pub yi: i64,
    pub yawi: u32,
    pub t: u32,
}

impl DiscreteKey {
    pub fn new(s: &AgentState, config: &PlannerConfig, substeps: u32, step_cap: u32) -> Self {
        let res = config.xy_resolution;
        let bins = config.yaw_bins;
        let yawi = (((s.yaw + PI) / (TAU / bins as f64)).floor() as i64).rem_euclid(bins as i64) as u32;
        Self {
            xi: (s.x / res).floor() as i64,
            yi: (s.y / res).floor() as i64,
            yawi,
            t: (s.t / substeps).min(step_cap),
        }
    }
}

/// Everything a low-level query needs about the problem, shared across
/// queries and threads.
#[derive(Debug)]
pub struct PlanContext {
    pub world: World,
    pub spec: AgentSpec,
    pub config: PlannerConfig,
    pub primitives: PrimitiveSet,
    /// Interpolation samples per tick for continuous checks.
    pub samples: u32,
    cache: HeuristicCache,
}

impl PlanContext {
    pub fn new(world: World, spec: AgentSpec, config: PlannerConfig) -> Result<Self, SearchError> {
        config.validate().map_err(SearchError::InvalidInput)?;
        let primitives = PrimitiveSet::new(&spec, config.search_step)?;
        let samples = samples_per_tick(&spec);
        Ok(Self { world, spec, config, primitives, samples, cache: HeuristicCache::default() })
    }

    pub fn heuristic_field(&self, goal: Vec2) -> Arc<GridField> {
        self.cache.field(&self.world, goal, self.config.heuristic_grid_resolution)
    }

    /// Half-width of avoid-constraint windows in ticks.
    pub fn window_ticks(&self) -> u32 {
        self.config.constraint_window * self.primitives.substeps
    }

    pub fn constraint_table(&self, constraints: &[AvoidConstraint]) -> ConstraintTable {
        ConstraintTable::new(constraints, &self.spec, self.window_ticks())
    }

    pub(crate) fn check_endpoints(&self, start: &AgentState, goal: &Pose) -> Result<(), SearchError> {
        if self.world.pose_collides(&start.pose(), &self.spec, self.config.inflation) {
            return Err(SearchError::InvalidInput("start pose is in collision".into()));
        }
        if self.world.pose_collides(goal, &self.spec, self.config.inflation) {
            return Err(SearchError::InvalidInput("goal pose is in collision".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SearchLimits {
    pub node_budget: u64,
    pub deadline: Option<Instant>,
}

impl SearchLimits {
    pub fn from_config(config: &PlannerConfig) -> Self {
        Self { node_budget: config.node_budget, deadline: None }
    }

    pub(crate) fn timed_out(&self) -> bool {
        self.deadline.is_some_and(|d| Instant::now() >= d)
    }
}

/// A search result together with the number of successors generated.
#[derive(Debug, Clone, PartialEq)]
pub struct SearchOutcome<T> {
    pub result: Result<T, SearchError>,
    pub expansions: u64,
}

/// Plans from `start` to `goal` honouring `constraints`. The returned
/// trajectory begins at `start` and ends within goal tolerance.
pub fn plan_single(
    ctx: &PlanContext,
    start: AgentState,
    goal: &Pose,
    constraints: &[AvoidConstraint],
    limits: &SearchLimits,
) -> SearchOutcome<Trajectory> {
    if let Err(e) = ctx.check_endpoints(&start, goal) {
        return SearchOutcome { result: Err(e), expansions: 0 };
    }
    let mut engine = Engine::new(ctx, start, *goal, ctx.constraint_table(constraints));
    let mut pops = 0u64;
    let result = loop {
        if engine.expansions >= limits.node_budget {
            break Err(SearchError::NodeBudget);
        }
        pops += 1;
        if pops.is_multiple_of(256) && limits.timed_out() {
            break Err(SearchError::Timeout);
        }
        let Some(idx) = engine.pop() else {
            break Err(SearchError::Exhausted);
        };
        if let Some(traj) = engine.try_finish(idx) {
            break Ok(traj);
        }
        let children = engine.successors(idx, false);
        engine.insert_all(idx, children);
    };
    SearchOutcome { result, expansions: engine.expansions }
}
