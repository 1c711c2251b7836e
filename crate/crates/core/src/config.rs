use serde::{Deserialize, Serialize};

/// Tunables for both search levels. Every field has a default, so partial
/// config blocks in scenario files are accepted.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PlannerConfig {
    /// Duration of one motion primitive in seconds.
    pub search_step: f64,
    pub reverse_penalty: f64,
    pub steer_change_penalty: f64,
    pub goal_position_tolerance: f64,
    pub goal_yaw_tolerance: f64,
    pub xy_resolution: f64,
    pub yaw_bins: u32,
    /// Half-width of an avoid-constraint's time window, in search steps.
    pub constraint_window: u32,
    /// Successor budget per low-level query.
    pub node_budget: u64,
    /// Longest gap between analytic-expansion attempts, in expansions.
    pub analytic_interval_max: u32,
    pub heuristic_grid_resolution: f64,
    /// Extra margin around footprints for static checks.
    pub inflation: f64,
    pub angle_weight_d: f64,
    pub closest_reward_r: f64,
    /// Wait-gating distance; `None` means twice the forward primitive length.
    pub remote_threshold: Option<f64>,
    pub max_high_level_nodes: u64,
    /// Evaluate both children of a conflict on separate threads.
    pub parallel_branches: bool,
    pub seed: u64,
}

impl Default for PlannerConfig {
    fn default() -> Self {
        Self {
            search_step: 1.0,
            reverse_penalty: 2.0,
            steer_change_penalty: 1.5,
            goal_position_tolerance: 0.5,
            goal_yaw_tolerance: 10f64.to_radians(),
            xy_resolution: 0.7,
            yaw_bins: 36,
            constraint_window: 1,
            node_budget: 200_000,
            analytic_interval_max: 10,
            heuristic_grid_resolution: 1.0,
            inflation: 0.0,
            angle_weight_d: 1.0,
            closest_reward_r: 0.3,
            remote_threshold: None,
            max_high_level_nodes: 20_000,
            parallel_branches: false,
            seed: 0,
        }
    }
}

impl PlannerConfig {
    pub fn validate(&self) -> Result<(), String> {
        let positive = [
            ("search_step", self.search_step),
            ("goal_position_tolerance", self.goal_position_tolerance),
            ("goal_yaw_tolerance", self.goal_yaw_tolerance),
            ("xy_resolution", self.xy_resolution),
            ("heuristic_grid_resolution", self.heuristic_grid_resolution),
        ];
        for (name, v) in positive {
            if !(v.is_finite() && v > 0.0) {
                return Err(format!("{name} must be positive"));
            }
        }
        if !(self.reverse_penalty >= 1.0 && self.steer_change_penalty >= 1.0) {
            return Err("motion penalties must be >= 1".into());
        }
        if !(self.inflation >= 0.0 && self.inflation.is_finite()) {
            return Err("inflation must be non-negative".into());
        }
        if self.yaw_bins == 0 || self.node_budget == 0 || self.analytic_interval_max == 0 {
            return Err("yaw_bins, node_budget and analytic_interval_max must be positive".into());
        }
        if !(self.closest_reward_r > 0.0 && self.closest_reward_r < 1.0) {
            return Err("closest_reward_r must lie in (0, 1)".into());
        }
        if !(self.angle_weight_d >= 0.0 && self.angle_weight_d.is_finite()) {
            return Err("angle_weight_d must be non-negative".into());
        }
        if let Some(r) = self.remote_threshold {
            if !(r > 0.0 && r.is_finite()) {
                return Err("remote_threshold must be positive".into());
            }
        }
        Ok(())
    }
}
