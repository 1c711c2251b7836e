//! Scenario and solution files (JSON).
//!
//! Field names and order are fixed. Trajectory records are written with six
//! decimals so identical plans produce identical bytes.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use serde::de::DeserializeOwned;
use serde::{Deserialize, Deserializer, Serialize, Serializer};
use serde_json::value::RawValue;
use thiserror::Error;

use crate::bench::{BenchParams, SuiteReport};
use crate::config::PlannerConfig;
use crate::conflict_tree::MultiStagePlan;
use crate::geometry::Vec2;
use crate::metrics::{GroupMetrics, RunMetrics};
use crate::model::{AgentSpec, AgentState, ControlInput, Pose};
use crate::scenario::{Group, Scenario, ScenarioError, Stage};
use crate::search_coop::RelativeStates;
use crate::trajectory::Trajectory;
use crate::world::{Obstacle, World, WorldError};

pub const FORMAT_VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Debug, Error)]
pub enum IoError {
    #[error("{path}: {reason}")]
    Io { path: PathBuf, reason: std::io::Error },
    #[error("{origin}:{line}:{column}: at `{field}`: {message}")]
    Parse { origin: String, line: usize, column: usize, field: String, message: String },
    #[error("invalid map: {0}")]
    World(#[from] WorldError),
    #[error("invalid scenario: {0}")]
    Scenario(#[from] ScenarioError),
    #[error("invalid solution: {0}")]
    Solution(String),
}

fn parse<T: DeserializeOwned>(text: &str, origin: &str) -> Result<T, IoError> {
    let de = &mut serde_json::Deserializer::from_str(text);
    let value: T = serde_path_to_error::deserialize(de).map_err(|e| {
        let field = e.path().to_string();
        let inner = e.into_inner();
        IoError::Parse {
            origin: origin.to_string(),
            line: inner.line(),
            column: inner.column(),
            field,
            message: inner.to_string(),
        }
    })?;
    Ok(value)
}

fn read(path: &Path) -> Result<String, IoError> {
    fs::read_to_string(path).map_err(|reason| IoError::Io { path: path.to_path_buf(), reason })
}

fn write(path: &Path, text: &str) -> Result<(), IoError> {
    fs::write(path, text).map_err(|reason| IoError::Io { path: path.to_path_buf(), reason })
}

fn to_json<T: Serialize>(value: &T) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("file types serialize");
    s.push('\n');
    s
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MapSpec {
    pub width: f64,
    pub height: f64,
    #[serde(default)]
    pub band_expansion: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GroupEntry {
    pub members: Vec<usize>,
    /// Formation offsets, one per member, in any common frame.
    pub offsets: Vec<Vec2>,
    /// Goal of each member in this stage.
    pub goals: Vec<Pose>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutlierEntry {
    pub agent: usize,
    pub goal: Pose,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StageEntry {
    #[serde(default)]
    pub groups: Vec<GroupEntry>,
    #[serde(default)]
    pub outliers: Vec<OutlierEntry>,
}

/// On-disk scenario. Agent ids are indices into `starts`; each stage lists
/// every agent exactly once, in a group or as an outlier.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioFile {
    pub map: MapSpec,
    #[serde(default)]
    pub obstacles: Vec<Obstacle>,
    pub agent_spec: AgentSpec,
    pub starts: Vec<Pose>,
    pub stages: Vec<StageEntry>,
    #[serde(default)]
    pub config: PlannerConfig,
}

fn normalized(p: Pose) -> Pose {
    Pose::new(p.x, p.y, p.yaw)
}

impl ScenarioFile {
    pub fn from_scenario(s: &Scenario) -> Self {
        let stages = s
            .stages
            .iter()
            .map(|st| StageEntry {
                groups: st
                    .groups
                    .iter()
                    .map(|g| GroupEntry {
                        members: g.members.clone(),
                        offsets: g.shape.offsets().to_vec(),
                        goals: g.members.iter().map(|&m| st.goals[m]).collect(),
                    })
                    .collect(),
                outliers: st.outliers.iter().map(|&a| OutlierEntry { agent: a, goal: st.goals[a] }).collect(),
            })
            .collect();
        Self {
            map: MapSpec { width: s.world.width(), height: s.world.height(), band_expansion: s.world.band() },
            obstacles: s.world.obstacles().to_vec(),
            agent_spec: s.spec,
            starts: s.starts.clone(),
            stages,
            config: s.config.clone(),
        }
    }

    pub fn into_scenario(self) -> Result<Scenario, IoError> {
        let world = World::new(self.map.width, self.map.height, self.map.band_expansion, self.obstacles)?;
        let n = self.starts.len();
        let mut stages = Vec::with_capacity(self.stages.len());
        for (index, entry) in self.stages.into_iter().enumerate() {
            // Goals stay NaN for unlisted agents; validation reports them.
            let mut goals = vec![Pose { x: f64::NAN, y: f64::NAN, yaw: 0.0 }; n];
            let mut set_goal = |agent: usize, goal: Pose| {
                if let Some(slot) = goals.get_mut(agent) {
                    *slot = normalized(goal);
                }
            };
            let mut groups = Vec::with_capacity(entry.groups.len());
            for (gi, g) in entry.groups.into_iter().enumerate() {
                if g.goals.len() != g.members.len() {
                    return Err(ScenarioError::GoalCount { stage: index, expected: g.members.len(), found: g.goals.len() }
                        .into());
                }
                if g.offsets.len() != g.members.len() {
                    return Err(ScenarioError::ShapeLength {
                        stage: index,
                        group: gi,
                        shape: g.offsets.len(),
                        members: g.members.len(),
                    }
                    .into());
                }
                for (&m, &goal) in g.members.iter().zip(&g.goals) {
                    set_goal(m, goal);
                }
                groups.push(Group { members: g.members, shape: RelativeStates::new(g.offsets) });
            }
            let mut outliers = Vec::with_capacity(entry.outliers.len());
            for o in entry.outliers {
                set_goal(o.agent, o.goal);
                outliers.push(o.agent);
            }
            stages.push(Stage { goals, groups, outliers });
        }
        let starts = self.starts.into_iter().map(normalized).collect();
        Ok(Scenario::new(world, self.agent_spec, self.config, starts, stages)?)
    }
}

pub fn scenario_from_str(text: &str, origin: &str) -> Result<Scenario, IoError> {
    parse::<ScenarioFile>(text, origin)?.into_scenario()
}

pub fn scenario_to_string(scenario: &Scenario) -> String {
    to_json(&ScenarioFile::from_scenario(scenario))
}

pub fn load_scenario(path: &Path) -> Result<Scenario, IoError> {
    scenario_from_str(&read(path)?, &path.display().to_string())
}

pub fn write_scenario(scenario: &Scenario, path: &Path) -> Result<(), IoError> {
    write(path, &scenario_to_string(scenario))
}

/// Formats with six decimals, avoiding a negative zero.
pub fn fixed6(v: f64) -> String {
    let s = format!("{v:.6}");
    if s == "-0.000000" {
        "0.000000".to_string()
    } else {
        s
    }
}

/// One trajectory sample: time, pose, and the control applied until the
/// next sample (zero on the last).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Record {
    pub t: f64,
    pub x: f64,
    pub y: f64,
    pub yaw: f64,
    pub v: f64,
    pub omega: f64,
}

impl Serialize for Record {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        let mut text = String::from("[");
        for (i, v) in [self.t, self.x, self.y, self.yaw, self.v, self.omega].into_iter().enumerate() {
            if i > 0 {
                text.push_str(", ");
            }
            let _ = write!(text, "{}", fixed6(v));
        }
        text.push(']');
        let raw = RawValue::from_string(text).map_err(serde::ser::Error::custom)?;
        raw.serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for Record {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let [t, x, y, yaw, v, omega] = <[f64; 6]>::deserialize(deserializer)?;
        Ok(Self { t, x, y, yaw, v, omega })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AgentRecords {
    pub agent: usize,
    pub records: Vec<Record>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StageMembership {
    pub groups: Vec<Vec<usize>>,
    pub outliers: Vec<usize>,
}

/// Run metrics as written to disk; the wall-clock runtime is optional so
/// that repeated runs can be compared byte for byte.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MetricsRecord {
    pub success: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub runtime_s: Option<f64>,
    pub avg_flowtime_s: f64,
    pub low_level_nodes: u64,
    pub high_level_nodes: u64,
    pub root_conflict_free: bool,
    pub ad_rad: Option<f64>,
    pub cd_m: Option<f64>,
}

impl MetricsRecord {
    pub fn new(m: &RunMetrics, root_conflict_free: bool, include_runtime: bool) -> Self {
        Self {
            success: m.success,
            runtime_s: include_runtime.then_some(m.runtime_s),
            avg_flowtime_s: m.avg_flowtime_s,
            low_level_nodes: m.low_level_nodes,
            high_level_nodes: m.high_level_nodes,
            root_conflict_free,
            ad_rad: m.ad_rad,
            cd_m: m.cd_m,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolutionFile {
    pub version: String,
    pub seed: u64,
    pub config: PlannerConfig,
    pub sample_time: f64,
    pub metrics: MetricsRecord,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
    pub group_metrics: Vec<GroupMetrics>,
    /// Last tick of each stage.
    pub stage_ends: Vec<u32>,
    pub stages: Vec<StageMembership>,
    pub agents: Vec<AgentRecords>,
}

fn membership(scenario: &Scenario) -> Vec<StageMembership> {
    scenario
        .stages
        .iter()
        .map(|st| StageMembership {
            groups: st.groups.iter().map(|g| g.members.clone()).collect(),
            outliers: st.outliers.clone(),
        })
        .collect()
}

pub fn records_of(traj: &Trajectory, spec: &AgentSpec) -> Vec<Record> {
    let controls = traj.controls();
    traj.states()
        .iter()
        .enumerate()
        .map(|(i, s)| {
            let u = controls.get(i).copied().unwrap_or(ControlInput::ZERO);
            Record { t: s.t as f64 * spec.sample_time, x: s.x, y: s.y, yaw: s.yaw, v: u.v, omega: u.omega }
        })
        .collect()
}

impl SolutionFile {
    pub fn success(
        scenario: &Scenario,
        plan: &MultiStagePlan,
        metrics: &RunMetrics,
        groups: &[GroupMetrics],
        include_runtime: bool,
    ) -> Self {
        Self {
            version: FORMAT_VERSION.to_string(),
            seed: scenario.config.seed,
            config: scenario.config.clone(),
            sample_time: scenario.spec.sample_time,
            metrics: MetricsRecord::new(metrics, plan.stats.root_conflict_free, include_runtime),
            error: None,
            group_metrics: groups.to_vec(),
            stage_ends: plan.stage_ends.clone(),
            stages: membership(scenario),
            agents: plan
                .trajectories
                .iter()
                .enumerate()
                .map(|(agent, t)| AgentRecords { agent, records: records_of(t, &scenario.spec) })
                .collect(),
        }
    }

    /// Metrics-only file for a failed run.
    pub fn failure(scenario: &Scenario, metrics: &RunMetrics, error: &str, include_runtime: bool) -> Self {
        Self {
            version: FORMAT_VERSION.to_string(),
            seed: scenario.config.seed,
            config: scenario.config.clone(),
            sample_time: scenario.spec.sample_time,
            metrics: MetricsRecord::new(metrics, false, include_runtime),
            error: Some(error.to_string()),
            group_metrics: Vec::new(),
            stage_ends: Vec::new(),
            stages: membership(scenario),
            agents: Vec::new(),
        }
    }

    /// Rebuilds per-agent trajectories. Record times must fall on
    /// consecutive ticks.
    pub fn trajectories(&self) -> Result<Vec<Trajectory>, IoError> {
        let dt = self.sample_time;
        if !(dt > 0.0 && dt.is_finite()) {
            return Err(IoError::Solution("sample_time must be positive".into()));
        }
        let mut out = Vec::with_capacity(self.agents.len());
        for (index, a) in self.agents.iter().enumerate() {
            if a.agent != index {
                return Err(IoError::Solution(format!("agent entry {index} is labelled {}", a.agent)));
            }
            if a.records.is_empty() {
                return Err(IoError::Solution(format!("agent {index} has no records")));
            }
            let mut states = Vec::with_capacity(a.records.len());
            let mut controls = Vec::with_capacity(a.records.len());
            for (k, r) in a.records.iter().enumerate() {
                let tick = (r.t / dt).round();
                if !(tick >= 0.0 && (r.t - tick * dt).abs() <= 1e-6 && tick <= u32::MAX as f64) {
                    return Err(IoError::Solution(format!("agent {index}, record {k}: time {} is off the tick grid", r.t)));
                }
                let tick = tick as u32;
                if let Some(prev) = states.last().map(|s: &AgentState| s.t) {
                    if tick != prev + 1 {
                        return Err(IoError::Solution(format!(
                            "agent {index}, record {k}: times must increase by one sample"
                        )));
                    }
                }
                states.push(AgentState { x: r.x, y: r.y, yaw: r.yaw, t: tick });
                if k + 1 < a.records.len() {
                    controls.push(ControlInput { v: r.v, omega: r.omega });
                }
            }
            out.push(Trajectory::from_parts(states, controls));
        }
        Ok(out)
    }
}

pub fn solution_from_str(text: &str, origin: &str) -> Result<SolutionFile, IoError> {
    parse(text, origin)
}

pub fn solution_to_string(solution: &SolutionFile) -> String {
    to_json(solution)
}

pub fn load_solution(path: &Path) -> Result<SolutionFile, IoError> {
    solution_from_str(&read(path)?, &path.display().to_string())
}

pub fn write_solution(solution: &SolutionFile, path: &Path) -> Result<(), IoError> {
    write(path, &solution_to_string(solution))
}

pub fn write_text(path: &Path, text: &str) -> Result<(), IoError> {
    write(path, text)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BenchRun {
    pub index: usize,
    pub seed: u64,
    pub metrics: MetricsRecord,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BenchSummary {
    pub scenarios: usize,
    pub success_rate: f64,
    pub single_shot_rate: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mean_runtime_s: Option<f64>,
    pub mean_flowtime_s: Option<f64>,
    pub mean_low_level_nodes: f64,
    pub mean_high_level_nodes: f64,
    pub mean_ad_rad: Option<f64>,
    pub mean_cd_m: Option<f64>,
}

/// Machine-readable suite report. Scenario `index` uses seed
/// `first_seed + index`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BenchReportFile {
    pub version: String,
    pub params: BenchParams,
    pub first_seed: u64,
    pub time_limit_s: f64,
    pub summary: BenchSummary,
    pub runs: Vec<BenchRun>,
}

impl BenchReportFile {
    pub fn new(params: &BenchParams, first_seed: u64, time_limit_s: f64, report: &SuiteReport, include_runtime: bool) -> Self {
        let summary = BenchSummary {
            scenarios: report.runs.len(),
            success_rate: report.success_rate,
            single_shot_rate: report.single_shot_rate,
            mean_runtime_s: if include_runtime { report.mean_runtime_s } else { None },
            mean_flowtime_s: report.mean_flowtime_s,
            mean_low_level_nodes: report.mean_low_level_nodes,
            mean_high_level_nodes: report.mean_high_level_nodes,
            mean_ad_rad: report.mean_ad_rad,
            mean_cd_m: report.mean_cd_m,
        };
        let runs = report
            .runs
            .iter()
            .map(|r| BenchRun {
                index: r.index,
                seed: first_seed + r.index as u64,
                metrics: MetricsRecord::new(&r.metrics, r.single_shot, include_runtime),
            })
            .collect();
        Self {
            version: FORMAT_VERSION.to_string(),
            params: params.clone(),
            first_seed,
            time_limit_s,
            summary,
            runs,
        }
    }
}

pub fn bench_report_to_string(report: &BenchReportFile) -> String {
    to_json(report)
}

pub fn bench_report_from_str(text: &str, origin: &str) -> Result<BenchReportFile, IoError> {
    parse(text, origin)
}
