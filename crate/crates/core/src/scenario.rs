//! Problem description: workspace, vehicle, agents and formation stages.

use thiserror::Error;

use crate::config::PlannerConfig;
use crate::model::{AgentSpec, Pose};
use crate::search_coop::RelativeStates;
use crate::world::{bodies_overlap, World};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ScenarioError {
    #[error("scenario has no stages")]
    NoStages,
    #[error("stage {stage}: expected {expected} goals, found {found}")]
    GoalCount { stage: usize, expected: usize, found: usize },
    #[error("stage {stage}: agent {agent} {problem}")]
    Membership { stage: usize, agent: usize, problem: &'static str },
    #[error("stage {stage}, group {group}: shape has {shape} entries for {members} members")]
    ShapeLength { stage: usize, group: usize, shape: usize, members: usize },
    #[error("agent {agent}: start pose is in collision")]
    StartCollision { agent: usize },
    #[error("stage {stage}, agent {agent}: goal pose is in collision")]
    GoalCollision { stage: usize, agent: usize },
    #[error("agents {a} and {b}: start poses overlap")]
    StartOverlap { a: usize, b: usize },
    #[error("stage {stage}, agents {a} and {b}: goal poses overlap")]
    GoalOverlap { stage: usize, a: usize, b: usize },
    #[error("invalid config: {0}")]
    Config(String),
}

/// Agents moving together in a formation.
#[derive(Debug, Clone, PartialEq)]
pub struct Group {
    /// Agent ids; member `k` uses `shape.offsets()[k]`.
    pub members: Vec<usize>,
    pub shape: RelativeStates,
}

/// One reconfiguration: every agent gets a goal and is either in exactly one
/// group or an outlier.
#[derive(Debug, Clone, PartialEq)]
pub struct Stage {
    /// Goal per agent id.
    pub goals: Vec<Pose>,
    pub groups: Vec<Group>,
    pub outliers: Vec<usize>,
}

impl Stage {
    /// Group index of `agent`, if it belongs to one.
    pub fn group_of(&self, agent: usize) -> Option<usize> {
        self.groups.iter().position(|g| g.members.contains(&agent))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    pub world: World,
    pub spec: AgentSpec,
    pub config: PlannerConfig,
    pub starts: Vec<Pose>,
    pub stages: Vec<Stage>,
}

impl Scenario {
    pub fn new(
        world: World,
        spec: AgentSpec,
        config: PlannerConfig,
        starts: Vec<Pose>,
        stages: Vec<Stage>,
    ) -> Result<Self, ScenarioError> {
        let s = Self { world, spec, config, starts, stages };
        s.validate()?;
        Ok(s)
    }

    pub fn num_agents(&self) -> usize {
        self.starts.len()
    }

    pub fn validate(&self) -> Result<(), ScenarioError> {
        self.config.validate().map_err(ScenarioError::Config)?;
        if self.stages.is_empty() {
            return Err(ScenarioError::NoStages);
        }
        let n = self.num_agents();
        let inflation = self.config.inflation;
        for (agent, p) in self.starts.iter().enumerate() {
            if self.world.pose_collides(p, &self.spec, inflation) {
                return Err(ScenarioError::StartCollision { agent });
            }
        }
        if let Some((a, b)) = first_overlap(&self.starts, &self.spec) {
            return Err(ScenarioError::StartOverlap { a, b });
        }
        for (stage, st) in self.stages.iter().enumerate() {
            if st.goals.len() != n {
                return Err(ScenarioError::GoalCount { stage, expected: n, found: st.goals.len() });
            }
            let mut seen = vec![false; n];
            let ids = st.groups.iter().flat_map(|g| g.members.iter()).chain(st.outliers.iter());
            for &agent in ids {
                if agent >= n {
                    return Err(ScenarioError::Membership { stage, agent, problem: "does not exist" });
                }
                if std::mem::replace(&mut seen[agent], true) {
                    return Err(ScenarioError::Membership { stage, agent, problem: "is listed twice" });
                }
            }
            if let Some(agent) = seen.iter().position(|s| !s) {
                return Err(ScenarioError::Membership { stage, agent, problem: "is in no group and not an outlier" });
            }
            for (group, g) in st.groups.iter().enumerate() {
                if g.shape.len() != g.members.len() {
                    return Err(ScenarioError::ShapeLength {
                        stage,
                        group,
                        shape: g.shape.len(),
                        members: g.members.len(),
                    });
                }
            }
            for (agent, p) in st.goals.iter().enumerate() {
                if self.world.pose_collides(p, &self.spec, inflation) {
                    return Err(ScenarioError::GoalCollision { stage, agent });
                }
            }
            if let Some((a, b)) = first_overlap(&st.goals, &self.spec) {
                return Err(ScenarioError::GoalOverlap { stage, a, b });
            }
        }
        Ok(())
    }
}

fn first_overlap(poses: &[Pose], spec: &AgentSpec) -> Option<(usize, usize)> {
    for a in 0..poses.len() {
        for b in a + 1..poses.len() {
            if bodies_overlap(&poses[a], spec, &poses[b], spec) {
                return Some((a, b));
            }
        }
    }
    None
}
