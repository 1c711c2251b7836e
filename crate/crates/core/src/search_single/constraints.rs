use serde::{Deserialize, Serialize};

use crate::geometry::{rects_overlap, OrientedRect};
use crate::model::{footprint, AgentSpec, AgentState, Pose};

/// Forbids the constrained agent's body from overlapping `other_agent`'s body
/// at `state` around time `state.t`.
///
/// `state.t` is the tick at (or just before) the sampled conflict; the pose
/// may be an interpolated one. `open_ended` marks a pose the other agent keeps
/// forever (it has arrived), so the window never closes.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AvoidConstraint {
    pub other_agent: usize,
    pub state: AgentState,
    #[serde(default)]
    pub open_ended: bool,
}

#[derive(Debug, Clone)]
struct Blocker {
    rect: OrientedRect,
    from: f64,
    to: f64,
}

/// Time-windowed body blockers checked by the low-level searches.
#[derive(Debug, Clone, Default)]
pub struct ConstraintTable {
    blockers: Vec<Blocker>,
    horizon: u32,
}

impl ConstraintTable {
    /// `window` is the half-width in ticks.
    pub fn new(constraints: &[AvoidConstraint], spec: &AgentSpec, window: u32) -> Self {
        let mut table = Self::default();
        for c in constraints {
            let from = c.state.t.saturating_sub(window);
            let rect = footprint(&c.state.pose(), spec);
            if c.open_ended {
                table.push(rect, from as f64, f64::INFINITY, from);
            } else {
                let to = c.state.t + 1 + window;
                table.push(rect, from as f64, to as f64, to);
            }
        }
        table
    }

    fn push(&mut self, rect: OrientedRect, from: f64, to: f64, horizon: u32) {
        self.blockers.push(Blocker { rect, from, to });
        self.horizon = self.horizon.max(horizon);
    }

    /// A body parked at `pose` from `from_tick` onwards.
    pub fn add_parked(&mut self, pose: &Pose, spec: &AgentSpec, from_tick: u32) {
        self.push(footprint(pose, spec), from_tick as f64, f64::INFINITY, from_tick);
    }

    pub fn is_empty(&self) -> bool {
        self.blockers.is_empty()
    }

    pub fn len(&self) -> usize {
        self.blockers.len()
    }

    /// Tick after which the table no longer changes over time.
    pub fn horizon(&self) -> u32 {
        self.horizon
    }

    /// Whether any blocker is active somewhere in `[from, to]`.
    pub fn any_active(&self, from: f64, to: f64) -> bool {
        self.blockers.iter().any(|b| b.from <= to && b.to >= from)
    }

    pub fn violates(&self, body: &OrientedRect, time: f64) -> bool {
        self.blockers
            .iter()
            .any(|b| b.from <= time && time <= b.to && rects_overlap(&b.rect, body))
    }

    /// Whether staying at `body` forever from `time` hits a blocker.
    pub fn violates_parked(&self, body: &OrientedRect, time: f64) -> bool {
        self.blockers.iter().any(|b| b.to >= time && rects_overlap(&b.rect, body))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn windowed_constraint() {
        let spec = AgentSpec::benchmark();
        let c = AvoidConstraint { other_agent: 1, state: AgentState::new(10.0, 10.0, 0.0, 20), open_ended: false };
        let table = ConstraintTable::new(&[c], &spec, 10);
        let body = footprint(&Pose::new(10.5, 10.0, 0.0), &spec);
        assert!(table.violates(&body, 10.0));
        assert!(table.violates(&body, 31.0));
        assert!(!table.violates(&body, 9.9));
        assert!(!table.violates(&body, 31.5));
        assert!(table.violates_parked(&body, 25.0));
        assert!(!table.violates_parked(&body, 32.0));
        assert_eq!(table.horizon(), 31);
        let far = footprint(&Pose::new(30.0, 10.0, 0.0), &spec);
        assert!(!table.violates(&far, 20.0));
    }

    #[test]
    fn open_ended_never_expires() {
        let spec = AgentSpec::benchmark();
        let c = AvoidConstraint { other_agent: 0, state: AgentState::new(0.0, 0.0, 0.0, 5), open_ended: true };
        let table = ConstraintTable::new(&[c], &spec, 2);
        let body = footprint(&Pose::new(0.0, 0.0, 0.0), &spec);
        assert!(table.violates(&body, 1e6));
        assert!(!table.violates(&body, 2.0));
    }
}
