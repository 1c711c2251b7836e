use std::f64::consts::{FRAC_PI_2, FRAC_PI_4, PI};

use approx::assert_abs_diff_eq;
use proptest::prelude::*;
use scmp_core::bench::{generate_benchmark, summarize, BenchParams, GoalLayout, SuiteRun};
use scmp_core::conflict_tree::{cost_sum, PlanStats};
use scmp_core::geometry::Vec2;
use scmp_core::metrics::{angle_deviation, avg_flowtime, coordinate_deviation, formation_window, RunMetrics};
use scmp_core::model::{AgentSpec, AgentState, ControlInput};
use scmp_core::search_coop::RelativeStates;
use scmp_core::trajectory::Trajectory;
use scmp_core::world::Obstacle;

fn traj(points: &[(f64, f64, f64)]) -> Trajectory {
    let states = points.iter().enumerate().map(|(t, &(x, y, yaw))| AgentState { x, y, yaw, t: t as u32 }).collect();
    Trajectory::from_parts(states, vec![ControlInput::ZERO; points.len() - 1])
}

fn stopped_after(moving: u32, total: u32) -> Trajectory {
    let pts: Vec<_> = (0..=total).map(|t| (t.min(moving) as f64, 0.0, 0.0)).collect();
    traj(&pts)
}

#[test]
fn angle_deviation_two_members() {
    let a = traj(&[(0.0, 0.0, 0.0)]);
    let b = traj(&[(5.0, 0.0, FRAC_PI_2)]);
    assert_abs_diff_eq!(angle_deviation(&[a, b], (0, 0)).unwrap(), FRAC_PI_4, epsilon = 1e-12);
}

#[test]
fn angle_deviation_across_the_seam() {
    let a = traj(&[(0.0, 0.0, PI - 0.1)]);
    let b = traj(&[(5.0, 0.0, -PI + 0.1)]);
    assert_abs_diff_eq!(angle_deviation(&[a, b], (0, 0)).unwrap(), 0.1, epsilon = 1e-12);
}

#[test]
fn coordinate_deviation_stretched_pair() {
    let shape = RelativeStates::new(vec![Vec2::new(0.0, 0.0), Vec2::new(5.0, 0.0)]);
    let a = traj(&[(0.0, 0.0, 0.0)]);
    let b = traj(&[(7.0, 0.0, 0.0)]);
    assert_abs_diff_eq!(coordinate_deviation(&[a, b], &shape, (0, 0)).unwrap(), 1.0, epsilon = 1e-12);
}

#[test]
fn exact_formation_scores_zero() {
    let shape = RelativeStates::new(vec![Vec2::new(0.0, 0.0), Vec2::new(10.0, 0.0), Vec2::new(5.0, 8.0)]);
    let path = |dx: f64, dy: f64| traj(&(0..6).map(|t| (dx + t as f64, dy + 0.5 * t as f64, 0.3)).collect::<Vec<_>>());
    let group = [path(0.0, 0.0), path(10.0, 0.0), path(5.0, 8.0)];
    assert_eq!(angle_deviation(&group, (0, 5)).unwrap(), 0.0);
    assert!(coordinate_deviation(&group, &shape, (0, 5)).unwrap() < 1e-12);
}

#[test]
fn empty_window_is_an_error() {
    let a = traj(&[(0.0, 0.0, 0.0), (1.0, 0.0, 0.0)]);
    assert!(angle_deviation(std::slice::from_ref(&a), (1, 0)).is_err());
}

#[test]
fn window_spans_departure_to_first_arrival() {
    // Member 0 leaves at tick 1, member 1 waits two ticks; member 0 stops at 4.
    let a = stopped_after(4, 10);
    let b = traj(&(0..=10).map(|t| ((t.max(2) - 2) as f64, 5.0, 0.0)).collect::<Vec<_>>());
    assert_eq!(formation_window(&[a, b]), (3, 3));
    // Nobody moves: fall back to the whole span.
    let still = traj(&[(0.0, 0.0, 0.0); 4]);
    assert_eq!(formation_window(&[still.clone(), still]), (0, 3));
}

#[test]
fn flowtime_examples() {
    let spec = AgentSpec::new(2.0, 2.0, 1.0, 2.0, 2.5, -2.5, 0.5, 1.0).unwrap();
    assert_abs_diff_eq!(avg_flowtime(&[stopped_after(10, 12)], &spec), 10.0);
    assert_abs_diff_eq!(avg_flowtime(&[stopped_after(10, 25), stopped_after(20, 25)], &spec), 15.0);
}

#[test]
fn suite_rates() {
    let ok = RunMetrics {
        success: true,
        runtime_s: 1.0,
        avg_flowtime_s: 20.0,
        low_level_nodes: 10,
        high_level_nodes: 0,
        ad_rad: Some(0.1),
        cd_m: Some(1.0),
    };
    let mut runs: Vec<SuiteRun> = (0..10).map(|index| SuiteRun { index, metrics: ok.clone(), single_shot: true }).collect();
    runs[3].metrics = RunMetrics::failure(&PlanStats { runtime_s: 90.0, ..Default::default() });
    runs[3].single_shot = false;
    let r = summarize(runs);
    assert_abs_diff_eq!(r.success_rate, 0.9);
    assert_abs_diff_eq!(r.single_shot_rate, 0.9);
    assert_abs_diff_eq!(r.mean_runtime_s.unwrap(), 1.0);
    assert_abs_diff_eq!(r.mean_flowtime_s.unwrap(), 20.0);
}

fn row1() -> BenchParams {
    BenchParams {
        width: 300.0,
        height: 300.0,
        obstacle_count: 100,
        obstacle_radius: 2.0,
        groups: vec![10, 5],
        outliers: 15,
        goal_layout: GoalLayout::Translated,
    }
}

#[test]
fn large_benchmark_layout() {
    let spec = AgentSpec::benchmark();
    let s = generate_benchmark(&row1(), &spec, 3).unwrap();
    assert_eq!(s.num_agents(), 30);
    assert_eq!(s.world.obstacles().len(), 100);
    let stage = &s.stages[0];
    for o in s.world.obstacles() {
        let Obstacle::Circle { center, radius } = o else { panic!("circles only") };
        assert_eq!(*radius, 2.0);
        assert!(center.x >= 2.0 && center.x <= 298.0 && center.y >= 2.0 && center.y <= 298.0);
    }
    for (a, (start, goal)) in s.starts.iter().zip(&stage.goals).enumerate() {
        assert!(start.y < 0.0, "agent {a} starts in the bottom band");
        assert!(goal.y > 300.0, "agent {a} ends in the top band");
        assert!(goal.y > start.y);
    }
    // Neighbouring slots are 10 m apart.
    let mut min_gap = f64::INFINITY;
    for i in 0..30 {
        for j in i + 1..30 {
            min_gap = min_gap.min(s.starts[i].distance(&s.starts[j]));
        }
    }
    assert_abs_diff_eq!(min_gap, 10.0, epsilon = 1e-9);
    // Group shapes are the same at both ends.
    for g in &stage.groups {
        let at_goal = RelativeStates::from_poses(&g.members.iter().map(|&m| stage.goals[m]).collect::<Vec<_>>());
        for (p, q) in g.shape.offsets().iter().zip(at_goal.offsets()) {
            assert!(p.distance(*q) < 1e-9);
        }
    }
}

#[test]
fn generator_is_a_function_of_params_and_seed() {
    let spec = AgentSpec::benchmark();
    let small = BenchParams {
        width: 50.0,
        height: 50.0,
        obstacle_count: 0,
        obstacle_radius: 0.8,
        groups: vec![4],
        outliers: 0,
        goal_layout: GoalLayout::Shuffled,
    };
    assert_eq!(generate_benchmark(&small, &spec, 5).unwrap(), generate_benchmark(&small, &spec, 5).unwrap());

    let a = generate_benchmark(&row1(), &spec, 1).unwrap();
    let b = generate_benchmark(&row1(), &spec, 2).unwrap();
    assert_ne!(a.world.obstacles(), b.world.obstacles());
    assert_eq!(a.world.width(), b.world.width());
    assert_eq!(a.world.height(), b.world.height());
    assert_eq!(a.world.band(), b.world.band());
    assert_eq!(a.starts, b.starts);
    assert_eq!(a.stages[0].goals, b.stages[0].goals);
}

#[test]
fn oversized_group_is_rejected() {
    let p = BenchParams { width: 5.0, ..row1() };
    assert!(generate_benchmark(&p, &AgentSpec::benchmark(), 0).is_err());
}

fn naive_ad(yaws: &[Vec<f64>]) -> f64 {
    let steps = yaws[0].len();
    let mut total = 0.0;
    for t in 0..steps {
        let mean = yaws.iter().map(|y| y[t]).sum::<f64>() / yaws.len() as f64;
        total += yaws.iter().map(|y| (y[t] - mean).abs()).sum::<f64>() / yaws.len() as f64;
    }
    total / steps as f64
}

#[allow(clippy::needless_range_loop)]
fn naive_cd(pos: &[Vec<(f64, f64)>], offsets: &[(f64, f64)]) -> f64 {
    let n = pos.len();
    let steps = pos[0].len();
    let mut total = 0.0;
    for t in 0..steps {
        let mut per_t = 0.0;
        for i in 0..n {
            let mut per_i = 0.0;
            for j in 0..n {
                let ix = pos[i][t].0 + offsets[j].0 - offsets[i].0;
                let iy = pos[i][t].1 + offsets[j].1 - offsets[i].1;
                per_i += (pos[j][t].0 - ix).hypot(pos[j][t].1 - iy);
            }
            per_t += per_i / n as f64;
        }
        total += per_t / n as f64;
    }
    total / steps as f64
}

proptest! {
    #[test]
    fn ad_matches_direct_formula_and_is_rotation_invariant(
        yaws in prop::collection::vec(prop::collection::vec(-1.0f64..1.0, 4), 2..5),
        shift in -10.0f64..10.0,
    ) {
        let trajs: Vec<Trajectory> =
            yaws.iter().map(|ys| traj(&ys.iter().map(|&y| (0.0, 0.0, y)).collect::<Vec<_>>())).collect();
        let ad = angle_deviation(&trajs, (0, 3)).unwrap();
        prop_assert!((ad - naive_ad(&yaws)).abs() < 1e-9);
        let shifted: Vec<Trajectory> = yaws
            .iter()
            .map(|ys| traj(&ys.iter().map(|&y| (0.0, 0.0, scmp_core::geometry::normalize_angle(y + shift))).collect::<Vec<_>>()))
            .collect();
        prop_assert!((angle_deviation(&shifted, (0, 3)).unwrap() - ad).abs() < 1e-9);
        prop_assert!((0.0..=PI).contains(&ad));
    }

    #[test]
    fn cd_matches_direct_formula_and_is_translation_invariant(
        pos in prop::collection::vec(prop::collection::vec((-20.0f64..20.0, -20.0f64..20.0), 3), 2..5),
        offsets_seed in prop::collection::vec((-15.0f64..15.0, -15.0f64..15.0), 5),
        dx in -100.0f64..100.0,
        dy in -100.0f64..100.0,
    ) {
        let n = pos.len();
        let offsets = &offsets_seed[..n];
        let shape = RelativeStates::new(offsets.iter().map(|&(x, y)| Vec2::new(x, y)).collect());
        let build = |dx: f64, dy: f64| -> Vec<Trajectory> {
            pos.iter().map(|ps| traj(&ps.iter().map(|&(x, y)| (x + dx, y + dy, 0.0)).collect::<Vec<_>>())).collect()
        };
        let cd = coordinate_deviation(&build(0.0, 0.0), &shape, (0, 2)).unwrap();
        prop_assert!((cd - naive_cd(&pos, offsets)).abs() < 1e-9);
        let moved = coordinate_deviation(&build(dx, dy), &shape, (0, 2)).unwrap();
        prop_assert!((moved - cd).abs() < 1e-9);
    }

    #[test]
    fn flowtime_is_mean_cost(arrivals in prop::collection::vec(0u32..60, 1..8)) {
        let spec = AgentSpec::benchmark();
        let sol: Vec<Trajectory> = arrivals.iter().map(|&a| stopped_after(a, 70)).collect();
        let expected = cost_sum(&sol, &spec) / sol.len() as f64;
        prop_assert!((avg_flowtime(&sol, &spec) - expected).abs() < 1e-12);
        let direct = arrivals.iter().map(|&a| a as f64 * spec.sample_time).sum::<f64>() / arrivals.len() as f64;
        prop_assert!((avg_flowtime(&sol, &spec) - direct).abs() < 1e-9);
    }
}
