//! Seeded benchmark scenarios and suite execution.

use std::time::Duration;

use log::info;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::config::PlannerConfig;
use crate::conflict_tree::{plan_stages, PlanLimits};
use crate::geometry::Vec2;
use crate::metrics::{run_metrics, RunMetrics};
use crate::model::{AgentSpec, Pose};
use crate::scenario::{Group, Scenario, ScenarioError, Stage};
use crate::search_coop::RelativeStates;
use crate::world::{Obstacle, World, WorldError};

/// Distance between neighbouring start or goal slots.
pub const SLOT_SPACING: f64 = 10.0;

#[derive(Debug, Error)]
pub enum BenchError {
    #[error("map of width {width} has no room for a group of {size}")]
    GroupTooWide { width: f64, size: usize },
    #[error("could not place {count} obstacles without overlap")]
    ObstaclePlacement { count: usize },
    #[error("map must be at least {SLOT_SPACING} m wide")]
    MapTooSmall,
    #[error(transparent)]
    World(#[from] WorldError),
    #[error(transparent)]
    Scenario(#[from] ScenarioError),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BenchParams {
    pub width: f64,
    pub height: f64,
    pub obstacle_count: usize,
    pub obstacle_radius: f64,
    /// Size of each formation group (line formations).
    pub groups: Vec<usize>,
    pub outliers: usize,
    #[serde(default)]
    pub goal_layout: GoalLayout,
}

/// How goals are placed in the top band.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GoalLayout {
    /// Every agent keeps its start slot, moved up into the goal band.
    #[default]
    Translated,
    /// Group blocks in shuffled row order with random column offsets;
    /// outliers take the remaining slots in random order.
    Shuffled,
}

impl BenchParams {
    pub fn agent_count(&self) -> usize {
        self.groups.iter().sum::<usize>() + self.outliers
    }
}

/// Slot-grid bookkeeping: `cols` slots per row, rows stacked away from the
/// core map.
struct Layout {
    cols: usize,
    rows: usize,
}

impl Layout {
    fn new(params: &BenchParams) -> Result<Self, BenchError> {
        let cols = (params.width / SLOT_SPACING).floor() as usize;
        if cols == 0 {
            return Err(BenchError::MapTooSmall);
        }
        let mut rows = 0;
        for &size in &params.groups {
            if size == 0 {
                continue;
            }
            rows += size.div_ceil(cols);
        }
        let used_in_group_rows: usize = params.groups.iter().map(|&s| s.div_ceil(cols) * cols - s).sum();
        let spare = params.outliers.saturating_sub(used_in_group_rows);
        rows += spare.div_ceil(cols);
        Ok(Self { cols, rows: rows.max(1) })
    }

    fn band(&self) -> f64 {
        self.rows as f64 * SLOT_SPACING
    }

    fn start_slot(&self, row: usize, col: usize) -> Pose {
        Pose::new(5.0 + SLOT_SPACING * col as f64, -5.0 - SLOT_SPACING * row as f64, std::f64::consts::FRAC_PI_2)
    }

    fn goal_slot(&self, height: f64, row: usize, col: usize) -> Pose {
        let top = height + self.band();
        Pose::new(5.0 + SLOT_SPACING * col as f64, top - 5.0 - SLOT_SPACING * row as f64, std::f64::consts::FRAC_PI_2)
    }
}

/// Block of slots `(row, col)` for a group of `size` starting at `row`,
/// filled row by row from column `col0`.
fn group_block(size: usize, cols: usize, row: usize, col0: usize) -> Vec<(usize, usize)> {
    (0..size).map(|k| (row + k / cols, col0 + k % cols)).collect()
}

fn place_obstacles(params: &BenchParams, rng: &mut ChaCha8Rng) -> Result<Vec<Obstacle>, BenchError> {
    let r = params.obstacle_radius;
    let mut centers: Vec<Vec2> = Vec::with_capacity(params.obstacle_count);
    let max_tries = 1000 * params.obstacle_count.max(1);
    let mut tries = 0;
    while centers.len() < params.obstacle_count {
        tries += 1;
        if tries > max_tries || params.width < 2.0 * r || params.height < 2.0 * r {
            return Err(BenchError::ObstaclePlacement { count: params.obstacle_count });
        }
        let c = Vec2::new(rng.gen_range(r..=params.width - r), rng.gen_range(r..=params.height - r));
        if centers.iter().all(|o| o.distance(c) > 2.0 * r) {
            centers.push(c);
        }
    }
    Ok(centers.into_iter().map(|center| Obstacle::Circle { center, radius: r }).collect())
}

/// Builds a scenario: obstacles scattered over the core map, starts in the
/// band below it and goals in the band above, all facing up. Groups are
/// line formations on the slot grid keeping the same shape at both ends.
pub fn generate_benchmark(params: &BenchParams, spec: &AgentSpec, seed: u64) -> Result<Scenario, BenchError> {
    let layout = Layout::new(params)?;
    let cols = layout.cols;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let obstacles = place_obstacles(params, &mut rng)?;
    let world = World::new(params.width, params.height, layout.band(), obstacles)?;

    let n = params.agent_count();
    let mut starts = vec![Pose::default(); n];
    let mut goals = vec![Pose::default(); n];
    let mut start_used = vec![vec![false; cols]; layout.rows];
    let mut goal_used = vec![vec![false; cols]; layout.rows];
    let mut groups = Vec::new();
    let mut next_agent = 0;
    let mut row = 0;
    // Rows occupied by each group at the start side.
    let mut group_rows = Vec::new();
    for &size in &params.groups {
        if size == 0 {
            continue;
        }
        let members: Vec<usize> = (next_agent..next_agent + size).collect();
        next_agent += size;
        let block = group_block(size, cols, row, 0);
        for (&m, &(r, c)) in members.iter().zip(&block) {
            starts[m] = layout.start_slot(r, c);
            start_used[r][c] = true;
        }
        let shape = RelativeStates::from_poses(&members.iter().map(|&m| starts[m]).collect::<Vec<_>>());
        group_rows.push((row, size.div_ceil(cols)));
        groups.push(Group { members, shape });
        row += size.div_ceil(cols);
    }

    let shuffled = params.goal_layout == GoalLayout::Shuffled;
    let mut order: Vec<usize> = (0..groups.len()).collect();
    if shuffled {
        order.shuffle(&mut rng);
    }
    let mut goal_row = 0;
    for &g in &order {
        let size = groups[g].members.len();
        let span = group_rows[g].1;
        let col0 = if shuffled && size < cols { rng.gen_range(0..=cols - size) } else { 0 };
        let block = group_block(size, cols, goal_row, col0);
        for (&m, &(r, c)) in groups[g].members.iter().zip(&block) {
            goals[m] = layout.goal_slot(params.height, r, c);
            goal_used[r][c] = true;
        }
        goal_row += span;
    }

    let free = |used: &Vec<Vec<bool>>| -> Vec<(usize, usize)> {
        let mut out = Vec::new();
        for (r, row) in used.iter().enumerate() {
            for (c, taken) in row.iter().enumerate() {
                if !taken {
                    out.push((r, c));
                }
            }
        }
        out
    };
    let outliers: Vec<usize> = (next_agent..n).collect();
    let start_slots = free(&start_used);
    let mut goal_slots = free(&goal_used);
    if shuffled {
        goal_slots.shuffle(&mut rng);
    }
    for (k, &a) in outliers.iter().enumerate() {
        let (r, c) = start_slots[k];
        starts[a] = layout.start_slot(r, c);
        let (r, c) = goal_slots[k];
        goals[a] = layout.goal_slot(params.height, r, c);
    }

    let config = PlannerConfig { seed, ..PlannerConfig::default() };
    let stage = Stage { goals, groups, outliers };
    Ok(Scenario::new(world, *spec, config, starts, vec![stage])?)
}

/// Outcome of one suite scenario.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SuiteRun {
    pub index: usize,
    pub metrics: RunMetrics,
    /// Solved by the initial per-group and per-outlier plans alone.
    pub single_shot: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SuiteReport {
    pub runs: Vec<SuiteRun>,
    pub success_rate: f64,
    pub single_shot_rate: f64,
    /// Over successful runs only.
    pub mean_runtime_s: Option<f64>,
    pub mean_flowtime_s: Option<f64>,
    pub mean_low_level_nodes: f64,
    pub mean_high_level_nodes: f64,
    pub mean_ad_rad: Option<f64>,
    pub mean_cd_m: Option<f64>,
}

fn mean(values: impl Iterator<Item = f64>) -> Option<f64> {
    let (sum, count) = values.fold((0.0, 0usize), |(s, c), v| (s + v, c + 1));
    (count > 0).then(|| sum / count as f64)
}

fn run_one(index: usize, scenario: &Scenario, time_limit: Duration) -> SuiteRun {
    let limits = PlanLimits::new(Some(time_limit), scenario.config.node_budget);
    match plan_stages(scenario, &limits) {
        Ok(plan) => {
            let (metrics, _) = run_metrics(scenario, &plan);
            SuiteRun { index, metrics, single_shot: plan.stats.root_conflict_free }
        }
        Err((err, stats)) => {
            info!("scenario {index} failed: {err}");
            SuiteRun { index, metrics: RunMetrics::failure(&stats), single_shot: false }
        }
    }
}

/// Plans every scenario under a wall-clock cap each and aggregates.
pub fn run_suite(scenarios: &[Scenario], time_limit: Duration, parallel: bool) -> SuiteReport {
    let runs: Vec<SuiteRun> = if parallel {
        scenarios.par_iter().enumerate().map(|(i, s)| run_one(i, s, time_limit)).collect()
    } else {
        scenarios.iter().enumerate().map(|(i, s)| run_one(i, s, time_limit)).collect()
    };
    summarize(runs)
}

pub fn summarize(runs: Vec<SuiteRun>) -> SuiteReport {
    let total = runs.len().max(1) as f64;
    let ok: Vec<&SuiteRun> = runs.iter().filter(|r| r.metrics.success).collect();
    SuiteReport {
        success_rate: ok.len() as f64 / total,
        single_shot_rate: runs.iter().filter(|r| r.single_shot).count() as f64 / total,
        mean_runtime_s: mean(ok.iter().map(|r| r.metrics.runtime_s)),
        mean_flowtime_s: mean(ok.iter().map(|r| r.metrics.avg_flowtime_s)),
        mean_low_level_nodes: runs.iter().map(|r| r.metrics.low_level_nodes as f64).sum::<f64>() / total,
        mean_high_level_nodes: runs.iter().map(|r| r.metrics.high_level_nodes as f64).sum::<f64>() / total,
        mean_ad_rad: mean(ok.iter().filter_map(|r| r.metrics.ad_rad)),
        mean_cd_m: mean(ok.iter().filter_map(|r| r.metrics.cd_m)),
        runs,
    }
}
