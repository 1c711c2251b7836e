use crate::model::{interpolate, AgentSpec, AgentState, ControlInput, Pose};

/// Time-indexed states of one agent with the control applied between each
/// consecutive pair. States carry consecutive tick indices. Past its last
/// state an agent is parked there (goal padding).
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    states: Vec<AgentState>,
    controls: Vec<ControlInput>,
}

impl Trajectory {
    pub fn stationary(state: AgentState) -> Self {
        Self { states: vec![state], controls: Vec::new() }
    }

    /// Panics if the lengths disagree or ticks are not consecutive.
    pub fn from_parts(states: Vec<AgentState>, controls: Vec<ControlInput>) -> Self {
        assert!(!states.is_empty(), "trajectory needs at least one state");
        assert_eq!(states.len(), controls.len() + 1, "one control per transition");
        debug_assert!(states.windows(2).all(|w| w[1].t == w[0].t + 1));
        Self { states, controls }
    }

    pub fn states(&self) -> &[AgentState] {
        &self.states
    }

    pub fn controls(&self) -> &[ControlInput] {
        &self.controls
    }

    pub fn first(&self) -> &AgentState {
        &self.states[0]
    }

    pub fn last(&self) -> &AgentState {
        self.states.last().expect("non-empty")
    }

    pub fn start_tick(&self) -> u32 {
        self.states[0].t
    }

    pub fn end_tick(&self) -> u32 {
        self.last().t
    }

    pub fn push(&mut self, u: ControlInput, s: AgentState) {
        debug_assert_eq!(s.t, self.end_tick() + 1);
        self.controls.push(u);
        self.states.push(s);
    }

    /// State at `tick`, clamped to the stored range.
    pub fn state_at(&self, tick: u32) -> AgentState {
        let i = tick.saturating_sub(self.start_tick()) as usize;
        let mut s = self.states[i.min(self.states.len() - 1)];
        s.t = tick.max(self.start_tick());
        s
    }

    /// Pose at `tick + alpha`, alpha in `[0, 1)`.
    pub fn pose_at(&self, tick: u32, alpha: f64) -> Pose {
        let a = self.state_at(tick);
        if alpha == 0.0 || tick >= self.end_tick() {
            return a.pose();
        }
        let b = self.state_at(tick + 1);
        interpolate(&a, &b, alpha)
    }

    /// First tick from which the agent stays at its final pose.
    pub fn arrival_tick(&self) -> u32 {
        let last = self.last();
        let mut i = self.states.len() - 1;
        while i > 0 && self.states[i - 1].same_pose(last) {
            i -= 1;
        }
        self.states[i].t
    }

    /// Arrival time relative to the first state, in seconds.
    pub fn flowtime(&self, spec: &AgentSpec) -> f64 {
        (self.arrival_tick() - self.start_tick()) as f64 * spec.sample_time
    }

    /// Extends with zero-control copies of the final state up to `tick`.
    pub fn pad_to(&mut self, tick: u32) {
        while self.end_tick() < tick {
            let mut s = *self.last();
            s.t += 1;
            self.push(ControlInput::ZERO, s);
        }
    }

    /// Appends `next`, which must start at this trajectory's final pose and tick.
    pub fn extend_with(&mut self, next: &Trajectory) {
        assert_eq!(next.start_tick(), self.end_tick());
        assert!(next.first().same_pose(self.last()), "stage boundary must be continuous");
        self.controls.extend_from_slice(&next.controls);
        self.states.extend_from_slice(&next.states[1..]);
    }

    /// Copy with every tick shifted by `offset`.
    pub fn shifted(&self, offset: u32) -> Trajectory {
        let states = self.states.iter().map(|s| AgentState { t: s.t + offset, ..*s }).collect();
        Trajectory { states, controls: self.controls.clone() }
    }

    /// Sub-trajectory covering ticks `from..=to`, padded if it ends early.
    pub fn window(&self, from: u32, to: u32) -> Trajectory {
        let mut out = Trajectory::stationary(self.state_at(from));
        for tick in from + 1..=to {
            let u = if tick > self.start_tick() && tick <= self.end_tick() {
                self.controls[(tick - 1 - self.start_tick()) as usize]
            } else {
                ControlInput::ZERO
            };
            out.push(u, self.state_at(tick));
        }
        out
    }

    pub fn len(&self) -> usize {
        self.states.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Path length actually driven.
    pub fn path_length(&self) -> f64 {
        self.states.windows(2).map(|w| w[0].pose().distance(&w[1].pose())).sum()
    }
}
