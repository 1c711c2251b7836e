//! Formation-quality and run metrics.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::conflict_tree::{cost_sum, MultiStagePlan, PlanStats};
use crate::geometry::normalize_angle;
use crate::model::AgentSpec;
use crate::scenario::Scenario;
use crate::search_coop::{ideal_states_cal, RelativeStates};
use crate::trajectory::Trajectory;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum MetricsError {
    #[error("empty evaluation window")]
    EmptyWindow,
    #[error("group has {members} trajectories but the shape has {shape} entries")]
    ShapeMismatch { members: usize, shape: usize },
}

/// Formation window `[first, last]` in ticks: from the first tick at which
/// every member has left its start pose to the tick before the first member
/// arrives. Falls back to the whole span when that is empty.
pub fn formation_window(trajs: &[Trajectory]) -> (u32, u32) {
    let start = trajs.iter().map(Trajectory::start_tick).min().unwrap_or(0);
    let end = trajs.iter().map(Trajectory::end_tick).max().unwrap_or(0);
    let departed = trajs.iter().map(|t| {
        let first = t.first();
        t.states().iter().find(|s| !s.same_pose(first)).map(|s| s.t)
    });
    let departed: Option<Vec<u32>> = departed.collect();
    let first_arrival = trajs.iter().map(Trajectory::arrival_tick).min().unwrap_or(end);
    match departed.and_then(|d| d.into_iter().max()) {
        Some(s) if first_arrival >= 1 && s < first_arrival => (s, first_arrival - 1),
        _ => (start, end),
    }
}

fn check_window(window: (u32, u32)) -> Result<(), MetricsError> {
    if window.0 > window.1 {
        return Err(MetricsError::EmptyWindow);
    }
    Ok(())
}

/// Mean absolute heading deviation from the group's mean heading, in
/// `[0, π]`, averaged over the window.
pub fn angle_deviation(trajs: &[Trajectory], window: (u32, u32)) -> Result<f64, MetricsError> {
    check_window(window)?;
    if trajs.is_empty() {
        return Err(MetricsError::EmptyWindow);
    }
    let n = trajs.len() as f64;
    let mut total = 0.0;
    for t in window.0..=window.1 {
        let yaws: Vec<f64> = trajs.iter().map(|tr| tr.state_at(t).yaw).collect();
        // Mean on the circle, unwrapped around the first member.
        let base = yaws[0];
        let mean = base + yaws.iter().map(|y| normalize_angle(y - base)).sum::<f64>() / n;
        total += yaws.iter().map(|y| normalize_angle(y - mean).abs()).sum::<f64>() / n;
    }
    Ok(total / (window.1 - window.0 + 1) as f64)
}

/// Mean distance of members from the formation anchored at each member in
/// turn, averaged over the window.
pub fn coordinate_deviation(
    trajs: &[Trajectory],
    shape: &RelativeStates,
    window: (u32, u32),
) -> Result<f64, MetricsError> {
    check_window(window)?;
    if trajs.len() != shape.len() {
        return Err(MetricsError::ShapeMismatch { members: trajs.len(), shape: shape.len() });
    }
    if trajs.is_empty() {
        return Err(MetricsError::EmptyWindow);
    }
    let n = trajs.len() as f64;
    let mut total = 0.0;
    for t in window.0..=window.1 {
        let poses: Vec<_> = trajs.iter().map(|tr| tr.state_at(t).pose()).collect();
        let mut per_step = 0.0;
        for (i, anchor) in poses.iter().enumerate() {
            let ideal = ideal_states_cal(shape, anchor, i);
            per_step += poses.iter().zip(&ideal).map(|(p, q)| p.position().distance(q.position())).sum::<f64>() / n;
        }
        total += per_step / n;
    }
    Ok(total / (window.1 - window.0 + 1) as f64)
}

/// Mean arrival time over agents, in seconds.
pub fn avg_flowtime(solution: &[Trajectory], spec: &AgentSpec) -> f64 {
    if solution.is_empty() {
        return 0.0;
    }
    cost_sum(solution, spec) / solution.len() as f64
}

/// Formation metrics for one group in one stage.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GroupMetrics {
    pub stage: usize,
    pub group: usize,
    pub ad_rad: f64,
    pub cd_m: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunMetrics {
    pub success: bool,
    pub runtime_s: f64,
    pub avg_flowtime_s: f64,
    pub low_level_nodes: u64,
    pub high_level_nodes: u64,
    /// Mean over groups; absent when the scenario has no groups.
    pub ad_rad: Option<f64>,
    pub cd_m: Option<f64>,
}

impl RunMetrics {
    pub fn failure(stats: &PlanStats) -> Self {
        Self {
            success: false,
            runtime_s: stats.runtime_s,
            avg_flowtime_s: 0.0,
            low_level_nodes: stats.low_level_nodes,
            high_level_nodes: stats.high_level_nodes,
            ad_rad: None,
            cd_m: None,
        }
    }
}

/// Per-group metrics for every stage of a finished plan.
pub fn group_metrics(scenario: &Scenario, plan: &MultiStagePlan) -> Vec<GroupMetrics> {
    let mut out = Vec::new();
    let mut stage_start = 0;
    for (s, stage) in scenario.stages.iter().enumerate() {
        let stage_end = plan.stage_ends[s];
        for (g, group) in stage.groups.iter().enumerate() {
            let trajs: Vec<Trajectory> = group
                .members
                .iter()
                .map(|&m| plan.trajectories[m].window(stage_start, stage_end))
                .collect();
            let window = formation_window(&trajs);
            let ad = angle_deviation(&trajs, window).expect("window is non-empty");
            let cd = coordinate_deviation(&trajs, &group.shape, window).expect("shape matches members");
            out.push(GroupMetrics { stage: s, group: g, ad_rad: ad, cd_m: cd });
        }
        stage_start = stage_end;
    }
    out
}

/// Mean arrival time within each stage, summed over stages.
fn stage_flowtime(scenario: &Scenario, plan: &MultiStagePlan) -> f64 {
    let mut stage_start = 0;
    let mut total = 0.0;
    for &end in &plan.stage_ends {
        let slices: Vec<Trajectory> = plan.trajectories.iter().map(|t| t.window(stage_start, end)).collect();
        total += avg_flowtime(&slices, &scenario.spec);
        stage_start = end;
    }
    total
}

pub fn run_metrics(scenario: &Scenario, plan: &MultiStagePlan) -> (RunMetrics, Vec<GroupMetrics>) {
    let groups = group_metrics(scenario, plan);
    let mean = |f: fn(&GroupMetrics) -> f64| {
        (!groups.is_empty()).then(|| groups.iter().map(f).sum::<f64>() / groups.len() as f64)
    };
    let metrics = RunMetrics {
        success: true,
        runtime_s: plan.stats.runtime_s,
        avg_flowtime_s: stage_flowtime(scenario, plan),
        low_level_nodes: plan.stats.low_level_nodes,
        high_level_nodes: plan.stats.high_level_nodes,
        ad_rad: mean(|g| g.ad_rad),
        cd_m: mean(|g| g.cd_m),
    };
    (metrics, groups)
}
