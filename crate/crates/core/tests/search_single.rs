use scmp_core::config::PlannerConfig;
use scmp_core::geometry::{rects_overlap, Vec2};
use scmp_core::model::{footprint, AgentSpec, AgentState, Pose};
use scmp_core::search_single::{
    heuristic, plan_single, AvoidConstraint, PlanContext, SearchError, SearchLimits,
};
use scmp_core::trajectory::Trajectory;
use scmp_core::world::{Obstacle, World};

fn ctx(world: World) -> PlanContext {
    PlanContext::new(world, AgentSpec::benchmark(), PlannerConfig::default()).unwrap()
}

fn limits() -> SearchLimits {
    SearchLimits::from_config(&PlannerConfig::default())
}

/// Re-integrates every recorded control with a hand-written Euler step.
fn assert_reproducible(traj: &Trajectory, spec: &AgentSpec) {
    for (w, u) in traj.states().windows(2).zip(traj.controls()) {
        let (a, b) = (w[0], w[1]);
        let dt = spec.sample_time;
        let x = a.x + dt * u.v * a.yaw.cos();
        let y = a.y + dt * u.v * a.yaw.sin();
        let mut yaw = a.yaw + dt * u.omega;
        let mut dyaw = yaw - b.yaw;
        while dyaw > std::f64::consts::PI {
            dyaw -= std::f64::consts::TAU;
            yaw -= std::f64::consts::TAU;
        }
        while dyaw < -std::f64::consts::PI {
            dyaw += std::f64::consts::TAU;
            yaw += std::f64::consts::TAU;
        }
        assert!((x - b.x).abs() < 1e-9 && (y - b.y).abs() < 1e-9 && (yaw - b.yaw).abs() < 1e-9);
        assert!(u.v <= spec.v_forward_max + 1e-9 && u.v >= spec.v_backward_max - 1e-9);
        let max_rate = u.v.abs() * spec.phi_max.tan() / spec.wheelbase;
        assert!(u.omega.abs() <= max_rate + 1e-9);
        assert_eq!(b.t, a.t + 1);
    }
}

fn ends_at_goal(traj: &Trajectory, goal: &Pose) -> bool {
    let last = traj.last().pose();
    let dyaw = (last.yaw - goal.yaw).sin().abs();
    last.distance(goal) <= 0.5 + 1e-9 && dyaw <= 10f64.to_radians().sin() + 1e-9
}

#[test]
fn start_equal_to_goal_is_immediate() {
    let c = ctx(World::empty(50.0, 50.0));
    let start = AgentState::new(20.0, 20.0, 0.4, 0);
    let out = plan_single(&c, start, &start.pose(), &[], &limits());
    let traj = out.result.unwrap();
    assert_eq!(traj.len(), 1);
    assert_eq!(out.expansions, 0);
}

#[test]
fn straight_gap_is_nearly_straight() {
    let c = ctx(World::empty(50.0, 50.0));
    let start = AgentState::new(10.0, 25.0, 0.0, 0);
    let goal = Pose::new(30.0, 25.0, 0.0);
    let traj = plan_single(&c, start, &goal, &[], &limits()).result.unwrap();
    assert!(ends_at_goal(&traj, &goal));
    assert!(traj.path_length() <= 20.0 * 1.05, "length {}", traj.path_length());
    assert_reproducible(&traj, &c.spec);
}

#[test]
fn goal_behind_a_wall() {
    let wall = Obstacle::Rectangle {
        corners: [Vec2::new(24.0, 0.0), Vec2::new(26.0, 0.0), Vec2::new(26.0, 35.0), Vec2::new(24.0, 35.0)],
    };
    let c = ctx(World::new(50.0, 50.0, 0.0, vec![wall]).unwrap());
    let start = AgentState::new(10.0, 10.0, 0.0, 0);
    let goal = Pose::new(40.0, 10.0, 0.0);
    let traj = plan_single(&c, start, &goal, &[], &limits()).result.unwrap();
    assert!(ends_at_goal(&traj, &goal));
    assert_reproducible(&traj, &c.spec);
    for s in traj.states() {
        assert!(!c.world.collides_static(&footprint(&s.pose(), &c.spec)));
    }
    // Heuristic sees the wall yet stays below the driven length.
    let field = c.heuristic_field(goal.position());
    let h = heuristic(&start.pose(), &goal, c.spec.min_turn_radius(), &field);
    assert!(h > start.pose().distance(&goal) + 10.0);
    assert!(h <= traj.path_length());
}

#[test]
fn avoid_constraint_is_respected() {
    let c = ctx(World::empty(50.0, 50.0));
    let start = AgentState::new(10.0, 25.0, 0.0, 0);
    let goal = Pose::new(30.0, 25.0, 0.0);
    let free = plan_single(&c, start, &goal, &[], &limits()).result.unwrap();
    // Block the midpoint of the unconstrained plan at the time it passes there.
    let mid = free.states()[free.len() / 2];
    let constraint = AvoidConstraint { other_agent: 1, state: mid, open_ended: false };
    let out = plan_single(&c, start, &goal, &[constraint], &limits());
    let traj = out.result.unwrap();
    assert!(ends_at_goal(&traj, &goal));
    let blocker = footprint(&mid.pose(), &c.spec);
    let window = c.window_ticks();
    let lo = mid.t.saturating_sub(window);
    let hi = mid.t + 1 + window;
    for t in lo..hi {
        for k in 0..5 {
            let p = traj.pose_at(t, k as f64 / 5.0);
            assert!(!rects_overlap(&footprint(&p, &c.spec), &blocker), "overlap at {t}+{k}/5");
        }
    }
    assert!(!rects_overlap(&footprint(&traj.state_at(hi).pose(), &c.spec), &blocker) || traj.end_tick() > hi);
}

#[test]
fn parked_constraint_on_goal_blocks_arrival() {
    let c = ctx(World::empty(50.0, 50.0));
    let start = AgentState::new(10.0, 25.0, 0.0, 0);
    let goal = Pose::new(20.0, 25.0, 0.0);
    let constraint = AvoidConstraint { other_agent: 1, state: AgentState::at(goal, 0), open_ended: true };
    let mut lim = limits();
    lim.node_budget = 5_000;
    let out = plan_single(&c, start, &goal, &[constraint], &lim);
    assert!(matches!(out.result, Err(SearchError::NodeBudget) | Err(SearchError::Exhausted)));
}

#[test]
fn start_in_collision_is_rejected() {
    let obstacle = Obstacle::Circle { center: Vec2::new(10.0, 10.0), radius: 2.0 };
    let c = ctx(World::new(50.0, 50.0, 0.0, vec![obstacle]).unwrap());
    let out = plan_single(&c, AgentState::new(10.0, 10.0, 0.0, 0), &Pose::new(30.0, 30.0, 0.0), &[], &limits());
    assert!(matches!(out.result, Err(SearchError::InvalidInput(_))));
}

#[test]
fn planning_is_deterministic() {
    let obstacles = vec![
        Obstacle::Circle { center: Vec2::new(20.0, 20.0), radius: 3.0 },
        Obstacle::Circle { center: Vec2::new(30.0, 12.0), radius: 2.0 },
    ];
    let c = ctx(World::new(50.0, 50.0, 0.0, obstacles).unwrap());
    let start = AgentState::new(8.0, 8.0, 0.5, 0);
    let goal = Pose::new(40.0, 35.0, 1.2);
    let a = plan_single(&c, start, &goal, &[], &limits());
    let b = plan_single(&c, start, &goal, &[], &limits());
    assert_eq!(a, b);
    assert!(a.result.is_ok());
}

#[test]
fn node_budget_is_enforced() {
    let c = ctx(World::empty(50.0, 50.0));
    let lim = SearchLimits { node_budget: 10, deadline: None };
    let out = plan_single(&c, AgentState::new(5.0, 5.0, 0.0, 0), &Pose::new(45.0, 45.0, 3.0), &[], &lim);
    assert!(out.expansions <= 10 + 7);
}
