use std::f64::consts::PI;

use approx::assert_abs_diff_eq;
use scmp_core::config::PlannerConfig;
use scmp_core::geometry::Vec2;
use scmp_core::model::{AgentSpec, AgentState, Direction, Pose};
use scmp_core::search_coop::{
    first_agent_cal, ideal_states_cal, plan_group, remote_dis, shape_distance, BatchStatus, GroupSearch,
    RelativeStates,
};
use scmp_core::search_single::{plan_single, PlanContext, SearchLimits};
use scmp_core::world::{bodies_overlap, Obstacle, World};

fn ctx() -> PlanContext {
    PlanContext::new(World::empty(60.0, 60.0), AgentSpec::benchmark(), PlannerConfig::default()).unwrap()
}

fn column() -> RelativeStates {
    RelativeStates::new(vec![Vec2::new(0.0, 0.0), Vec2::new(0.0, -5.0), Vec2::new(0.0, -10.0)])
}

#[test]
fn ideal_states_follow_the_leader() {
    let ideal = ideal_states_cal(&column(), &Pose::new(10.0, 20.0, 0.5), 1);
    let expected = [(10.0, 25.0), (10.0, 20.0), (10.0, 15.0)];
    for (p, (x, y)) in ideal.iter().zip(expected) {
        assert_abs_diff_eq!(p.x, x, epsilon = 1e-12);
        assert_abs_diff_eq!(p.y, y, epsilon = 1e-12);
        assert_abs_diff_eq!(p.yaw, 0.5, epsilon = 1e-12);
    }
}

#[test]
fn shape_distance_values() {
    let d = shape_distance(&Pose::new(1.0, 2.0, 0.1), &Pose::new(0.0, 0.0, -0.2), 1.0);
    assert_abs_diff_eq!(d, 5.3, epsilon = 1e-9);
    // Heading error wraps around the circle.
    let wrapped = shape_distance(&Pose::new(0.0, 0.0, 3.1), &Pose::new(0.0, 0.0, -3.1), 2.0);
    assert_abs_diff_eq!(wrapped, 2.0 * (2.0 * PI - 6.2), epsilon = 1e-9);
    assert_eq!(shape_distance(&Pose::new(3.0, 4.0, 1.0), &Pose::new(3.0, 4.0, 1.0), 1.0), 0.0);
}

#[test]
fn first_agent_prefers_nearest_then_lowest_index() {
    let goals = [Pose::new(10.0, 0.0, 0.0), Pose::new(10.0, 5.0, 0.0), Pose::new(0.0, 0.0, 0.0)];
    let latest = [AgentState::new(7.0, 0.0, 0.0, 0), AgentState::new(7.0, 5.0, 0.0, 0), AgentState::new(0.0, 4.0, 0.0, 0)];
    assert_eq!(first_agent_cal(&latest, &goals, &[false, false, false]), Some(0));
    assert_eq!(first_agent_cal(&latest, &goals, &[true, false, false]), Some(1));
    assert_eq!(first_agent_cal(&latest, &goals, &[true, true, true]), None);
}

#[test]
fn remote_predicate() {
    let shape = column();
    let ideal = ideal_states_cal(&shape, &Pose::new(10.0, 20.0, 0.0), 0);
    let mut latest: Vec<AgentState> = ideal.iter().map(|p| AgentState::at(*p, 0)).collect();
    assert!(!remote_dis(&latest, &ideal, 0, &shape, 5.0));
    latest[2].x += 5.0;
    assert!(!remote_dis(&latest, &ideal, 0, &shape, 5.0), "threshold is strict");
    latest[2].x += 0.01;
    assert!(remote_dis(&latest, &ideal, 0, &shape, 5.0));
}

#[test]
fn group_of_one_matches_single_agent() {
    let c = ctx();
    let start = AgentState::new(10.0, 10.0, 0.3, 0);
    let goal = Pose::new(40.0, 35.0, 1.4);
    let limits = SearchLimits::from_config(&c.config);
    let single = plan_single(&c, start, &goal, &[], &limits);
    let shape = RelativeStates::from_poses(&[goal]);
    let group = plan_group(&c, &[start], &[goal], &shape, &[vec![]], &limits);
    assert_eq!(single.expansions, group.expansions);
    assert_eq!(single.result.unwrap(), group.result.unwrap()[0]);
}

#[test]
fn leader_waits_for_a_straggler() {
    // Obstacles keep both members from finishing with a direct curve.
    let obstacle = Obstacle::Circle { center: Vec2::new(22.0, 30.0), radius: 2.0 };
    let wall = Obstacle::Rectangle {
        corners: [Vec2::new(18.0, 2.0), Vec2::new(20.0, 2.0), Vec2::new(20.0, 24.0), Vec2::new(18.0, 24.0)],
    };
    let world = World::new(60.0, 60.0, 0.0, vec![obstacle, wall]).unwrap();
    let c = PlanContext::new(world, AgentSpec::benchmark(), PlannerConfig::default()).unwrap();
    let goals = [Pose::new(32.0, 30.0, 0.0), Pose::new(32.0, 25.0, 0.0)];
    let starts = [AgentState::new(12.0, 30.0, 0.0, 0), AgentState::new(5.0, 8.0, 0.0, 0)];
    let shape = RelativeStates::from_poses(&goals);
    let limits = SearchLimits::from_config(&c.config);
    let mut search = GroupSearch::new(&c, &starts, &goals, shape, &[vec![], vec![]], limits).unwrap();
    let (status, record) = search.step_batch();
    assert_eq!(status, BatchStatus::Continue);
    let record = record.unwrap();
    assert_eq!(record.first_agent, 0);
    assert!(record.waited);
    assert_eq!(record.first_children.len(), 1);
    assert_eq!(record.first_children[0].0.direction, Direction::Wait);
    assert_eq!(record.first_children[0].1, 0.0);
    // The straggler still advanced and had its closest child rewarded.
    assert!(record.rewarded[1].is_some());
    // The next batch pops the wait node: same pose, one search step later.
    search.step_batch();
    let lead = search.latest()[0];
    assert_eq!(lead.t, c.primitives.substeps);
    assert!(lead.same_pose(&starts[0]));
}

#[test]
fn formation_of_three_reaches_goals() {
    let c = ctx();
    let goals = [Pose::new(40.0, 45.0, 0.0), Pose::new(40.0, 40.0, 0.0), Pose::new(40.0, 35.0, 0.0)];
    let starts = [AgentState::new(10.0, 25.0, 0.0, 0), AgentState::new(10.0, 20.0, 0.0, 0), AgentState::new(10.0, 15.0, 0.0, 0)];
    let shape = RelativeStates::from_poses(&goals);
    let limits = SearchLimits::from_config(&c.config);
    let out = plan_group(&c, &starts, &goals, &shape, &[vec![], vec![], vec![]], &limits);
    let trajs = out.result.unwrap();
    for (t, g) in trajs.iter().zip(&goals) {
        assert!(t.last().pose().distance(g) <= c.config.goal_position_tolerance + 1e-9);
    }
    // Members should broadly keep their spacing on the way.
    let horizon = trajs.iter().map(|t| t.end_tick()).max().unwrap();
    let mut collisions = 0;
    for tick in 0..=horizon {
        let poses: Vec<Pose> = trajs.iter().map(|t| t.state_at(tick).pose()).collect();
        for i in 0..3 {
            for j in i + 1..3 {
                if bodies_overlap(&poses[i], &c.spec, &poses[j], &c.spec) {
                    collisions += 1;
                }
            }
        }
    }
    eprintln!("intra-group overlaps: {collisions}, expansions {}", out.expansions);
}

#[test]
fn ideal_states_reference_examples() {
    let shape = RelativeStates::new(vec![Vec2::new(0.0, 0.0), Vec2::new(-5.0, 0.0), Vec2::new(5.0, 0.0)]);
    let zero = ideal_states_cal(&shape, &Pose::new(0.0, 0.0, 0.0), 0);
    assert_eq!(zero, vec![Pose::new(0.0, 0.0, 0.0), Pose::new(-5.0, 0.0, 0.0), Pose::new(5.0, 0.0, 0.0)]);
    let theta = 0.7;
    let anchor = Pose::new(10.0, 10.0, theta);
    let ideal = ideal_states_cal(&shape, &anchor, 1);
    let expected = [(15.0, 10.0), (10.0, 10.0), (20.0, 10.0)];
    for (p, (x, y)) in ideal.iter().zip(expected) {
        assert_abs_diff_eq!(p.x, x, epsilon = 1e-9);
        assert_abs_diff_eq!(p.y, y, epsilon = 1e-9);
        assert_eq!(p.yaw, theta);
    }
    for k in 0..3 {
        assert_eq!(ideal_states_cal(&shape, &anchor, k)[k], anchor);
    }
}

#[test]
fn shape_distance_reference_examples() {
    assert_abs_diff_eq!(shape_distance(&Pose::new(1.0, 1.0, 0.0), &Pose::new(0.0, 0.0, 0.0), 1.0), 2.0, epsilon = 1e-9);
    assert_abs_diff_eq!(
        shape_distance(&Pose::new(0.0, 0.0, PI / 2.0), &Pose::new(0.0, 0.0, 0.0), 2.0),
        PI,
        epsilon = 1e-9
    );
}

#[test]
fn first_agent_reference_examples() {
    let goals = [Pose::new(0.0, 0.0, 0.0); 3];
    let at = |d: f64| AgentState::new(d, 0.0, 0.0, 0);
    assert_eq!(first_agent_cal(&[at(5.0), at(3.0), at(7.0)], &goals, &[false; 3]), Some(1));
    assert_eq!(first_agent_cal(&[at(4.0), at(4.0)], &goals[..2], &[false; 2]), Some(0));
    assert_eq!(first_agent_cal(&[at(1.0), at(9.0), at(2.0)], &goals, &[true, false, false]), Some(2));
}

#[test]
fn remote_when_far_behind() {
    let shape = column();
    let ideal = ideal_states_cal(&shape, &Pose::new(10.0, 20.0, 0.0), 0);
    let mut latest: Vec<AgentState> = ideal.iter().map(|p| AgentState::at(*p, 0)).collect();
    latest[1].y -= 50.0;
    assert!(remote_dis(&latest, &ideal, 0, &shape, 5.0));
}
