//! Static SVG plot of a plan.

use std::fmt::Write as _;

use crate::geometry::Vec2;
use crate::io::fixed6;
use crate::model::footprint;
use crate::scenario::Scenario;
use crate::trajectory::Trajectory;
use crate::world::Obstacle;

const PALETTE: [&str; 8] = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b", "#e377c2", "#17becf"];
const OUTLIER_COLOR: &str = "#555555";

#[derive(Debug, Clone, PartialEq)]
pub struct RenderOptions {
    /// Absolute ticks at which footprints are drawn.
    pub snapshots: Vec<u32>,
    /// Pixels per metre.
    pub scale: f64,
}

impl Default for RenderOptions {
    fn default() -> Self {
        Self { snapshots: Vec::new(), scale: 4.0 }
    }
}

/// Start, middle and end tick of a plan.
pub fn default_snapshots(trajs: &[Trajectory]) -> Vec<u32> {
    let end = trajs.iter().map(Trajectory::end_tick).max().unwrap_or(0);
    let mut v = vec![0, end / 2, end];
    v.dedup();
    v
}

fn class_of(scenario: &Scenario, stage: usize, agent: usize) -> String {
    match scenario.stages[stage].group_of(agent) {
        Some(g) => format!("group-{g}"),
        None => "outlier".to_string(),
    }
}

fn points(pts: impl Iterator<Item = Vec2>) -> String {
    let mut s = String::new();
    for (i, p) in pts.enumerate() {
        if i > 0 {
            s.push(' ');
        }
        let _ = write!(s, "{},{}", fixed6(p.x), fixed6(-p.y));
    }
    s
}

/// SVG document with obstacles, one path polyline per agent and stage
/// (classed by that stage's group), and footprints at the snapshot ticks.
/// World `y` points up; the image is flipped accordingly.
pub fn render_svg(scenario: &Scenario, trajs: &[Trajectory], stage_ends: &[u32], opts: &RenderOptions) -> String {
    let b = scenario.world.bounds();
    let (w, h) = (b.max.x - b.min.x, b.max.y - b.min.y);
    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{}" height="{}" viewBox="{} {} {} {}">"#,
        fixed6(w * opts.scale),
        fixed6(h * opts.scale),
        fixed6(b.min.x),
        fixed6(-b.max.y),
        fixed6(w),
        fixed6(h)
    );
    s.push_str("<style>\n");
    s.push_str(".obstacle { fill: #999999; stroke: none; }\n");
    s.push_str(".path { fill: none; stroke-width: 0.3; }\n");
    s.push_str(".footprint { fill-opacity: 0.35; stroke-width: 0.1; }\n");
    s.push_str(".map { fill: #ffffff; stroke: #000000; stroke-width: 0.2; }\n");
    let groups = scenario.stages.iter().map(|st| st.groups.len()).max().unwrap_or(0);
    for g in 0..groups {
        let c = PALETTE[g % PALETTE.len()];
        let _ = writeln!(s, ".group-{g} {{ stroke: {c}; }} .footprint.group-{g} {{ fill: {c}; }}");
    }
    let _ = writeln!(s, ".outlier {{ stroke: {OUTLIER_COLOR}; }} .footprint.outlier {{ fill: {OUTLIER_COLOR}; }}");
    s.push_str("</style>\n");
    let _ = writeln!(
        s,
        r#"<rect class="map" x="{}" y="{}" width="{}" height="{}"/>"#,
        fixed6(b.min.x),
        fixed6(-b.max.y),
        fixed6(w),
        fixed6(h)
    );
    for o in scenario.world.obstacles() {
        match o {
            Obstacle::Circle { center, radius } => {
                let _ = writeln!(
                    s,
                    r#"<circle class="obstacle" cx="{}" cy="{}" r="{}"/>"#,
                    fixed6(center.x),
                    fixed6(-center.y),
                    fixed6(*radius)
                );
            }
            Obstacle::Rectangle { corners } => {
                let _ = writeln!(s, r#"<polygon class="obstacle" points="{}"/>"#, points(corners.iter().copied()));
            }
        }
    }

    let last = trajs.iter().map(Trajectory::end_tick).max().unwrap_or(0);
    for (agent, t) in trajs.iter().enumerate() {
        let mut from = 0;
        for stage in 0..scenario.stages.len() {
            let to = stage_ends.get(stage).copied().unwrap_or(last);
            let class = class_of(scenario, stage, agent);
            let pts = (from..=to).map(|tick| t.state_at(tick).pose().position());
            let _ = writeln!(
                s,
                r#"<polyline class="path {class}" data-agent="{agent}" data-stage="{stage}" points="{}"/>"#,
                points(pts)
            );
            from = to;
        }
        for &tick in &opts.snapshots {
            let stage = stage_ends.iter().position(|&e| tick <= e).unwrap_or(scenario.stages.len() - 1);
            let class = class_of(scenario, stage, agent);
            let fp = footprint(&t.state_at(tick).pose(), &scenario.spec);
            let _ = writeln!(
                s,
                r#"<polygon class="footprint {class}" data-agent="{agent}" data-tick="{tick}" points="{}"/>"#,
                points(fp.corners.iter().copied())
            );
        }
    }
    s.push_str("</svg>\n");
    s
}
