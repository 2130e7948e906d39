use beliefreach::belief::Belief;
use beliefreach::grid::{make_ball_field, Grid, LevelSetField, ReachTube};
use beliefreach::human::HumanState;
use beliefreach::nav::{plan, run_closed_loop, HumanScript, Plan, PlannerConfig, RobotSpec, RobotState};
use beliefreach::predict::{predict_ba_frs, predict_naive, PredictionTube, PredictorKind, PredictorSpec, TubeMeta};
use beliefreach::scenario::Scenario;
use proptest::prelude::*;

fn robot(start: RobotState, goal: [f64; 2]) -> RobotSpec {
    RobotSpec { start, goal, v_max: 1.0, omega_max: 1.0, r_safe: 0.3, goal_tolerance: 0.2, workspace: [-5.0, -5.0, 5.0, 5.0] }
}

fn planner() -> PlannerConfig {
    PlannerConfig { turn_rates: 7, speed_fractions: vec![0.0, 0.5, 1.0], depth: 3, horizon: 1.5, sample_dt: 0.05 }
}

fn tube_of(slices: Vec<LevelSetField>, dt: f64) -> PredictionTube {
    let sets = ReachTube::new(slices, dt).unwrap();
    PredictionTube {
        kind: PredictorKind::Naive,
        meta: TubeMeta { scenario_hash: String::new(), horizon: dt * (sets.len() - 1) as f64, snapshot_dt: dt, grid: sets.grid().clone() },
        sets,
        occupancy: None,
        joint: None,
    }
}

/// Tube of moving discs: slice `k` holds a disc of `radius` at `center(k dt)`.
fn moving_disc(center: impl Fn(f64) -> [f64; 2], radius: f64, horizon: f64, dt: f64) -> PredictionTube {
    let g = Grid::square(-3.0, 3.0, 61).unwrap();
    let n = (horizon / dt).round() as usize;
    let slices = (0..=n)
        .map(|k| {
            let t = k as f64 * dt;
            make_ball_field(&g, &center(t), radius).unwrap().with_time(t)
        })
        .collect();
    tube_of(slices, dt)
}

fn state_at(start: &RobotState, p: &Plan, t: f64) -> RobotState {
    let mut s = *start;
    let mut t0 = 0.0;
    for u in &p.controls {
        if t <= t0 + p.stage {
            return s.advance(*u, t - t0);
        }
        s = s.advance(*u, p.stage);
        t0 += p.stage;
    }
    s
}

/// Brute-force clearance: distance to every occupied node of the slices
/// bracketing `t`.
fn oracle_clearance(tube: &PredictionTube, t: f64, q: [f64; 2]) -> f64 {
    let dt = tube.sets.dt();
    let last = tube.len() - 1;
    let f = t / dt;
    let ks = [(f.floor() as usize).min(last), (f.ceil() as usize).min(last)];
    let g = tube.sets.grid();
    let mut best = f64::INFINITY;
    for k in ks {
        let s = tube.slice(k);
        for i in 0..g.len() {
            if s.is_inside_node(i) {
                let c = g.node_point(i);
                best = best.min((c[0] - q[0]).hypot(c[1] - q[1]));
            }
        }
    }
    best
}

fn dense_min_clearance(tube: &PredictionTube, start: &RobotState, p: &Plan, cfg: &PlannerConfig) -> f64 {
    let h = cfg.sample_dt / 5.0;
    let n = (cfg.horizon / h).round() as usize;
    (1..=n)
        .map(|j| {
            let t = j as f64 * h;
            oracle_clearance(tube, t, state_at(start, p, t).position())
        })
        .fold(f64::INFINITY, f64::min)
}

#[test]
fn empty_tube_goes_straight_to_the_goal() {
    let g = Grid::square(-3.0, 3.0, 31).unwrap();
    let empty = LevelSetField::from_fn(g, 0.0, |_| 1.0).unwrap();
    let slices = (0..=15).map(|k| empty.clone().with_time(k as f64 * 0.1)).collect();
    let tube = tube_of(slices, 0.1);
    let start = RobotState::new(0.0, 0.0, 0.0).unwrap();
    let p = plan(&start, &robot(start, [4.0, 0.0]), &tube, &planner()).unwrap();
    assert!(!p.fallback);
    assert!(p.controls.iter().all(|u| u.omega == 0.0 && u.v == 1.0), "{p:?}");
}

#[test]
fn covered_workspace_falls_back_to_a_stop() {
    let g = Grid::square(-3.0, 3.0, 31).unwrap();
    let full = LevelSetField::from_fn(g, 0.0, |_| -1.0).unwrap();
    let slices = (0..=15).map(|k| full.clone().with_time(k as f64 * 0.1)).collect();
    let tube = tube_of(slices, 0.1);
    let start = RobotState::new(0.0, 0.0, 0.0).unwrap();
    let p = plan(&start, &robot(start, [4.0, 0.0]), &tube, &planner()).unwrap();
    assert!(p.fallback);
    assert!(p.controls.iter().all(|u| u.v == 0.0 && u.omega == 0.0));
}

#[test]
fn mismatched_horizon_is_rejected() {
    let tube = moving_disc(|_| [0.0, 0.0], 0.3, 1.0, 0.1);
    let start = RobotState::new(-2.0, 0.0, 0.0).unwrap();
    assert!(plan(&start, &robot(start, [2.0, 0.0]), &tube, &planner()).is_err());
}

#[test]
fn blocked_corridor_plan_is_safe_under_dense_sampling() {
    // a disc sweeping across the straight line to the goal
    let tube = moving_disc(|t| [0.8, 1.2 - 1.2 * t], 0.4, 1.5, 0.1);
    let start = RobotState::new(-1.0, 0.0, 0.0).unwrap();
    let spec = robot(start, [2.5, 0.0]);
    let cfg = planner();
    let p = plan(&start, &spec, &tube, &cfg).unwrap();
    assert!(!p.fallback);
    let m = dense_min_clearance(&tube, &start, &p, &cfg);
    assert!(m >= spec.r_safe, "dense clearance {m}");
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn plans_are_safe_for_their_tube(
        cx in -1.5f64..1.5, cy in -1.5f64..1.5, vx in -1.0f64..1.0, vy in -1.0f64..1.0,
        radius in 0.1f64..0.6, phi in -3.0f64..3.0,
    ) {
        let tube = moving_disc(|t| [cx + vx * t, cy + vy * t], radius, 1.5, 0.1);
        let start = RobotState::new(-2.0, -2.0, phi).unwrap();
        let spec = robot(start, [2.0, 2.0]);
        let cfg = planner();
        let p = plan(&start, &spec, &tube, &cfg).unwrap();
        if !p.fallback {
            let m = dense_min_clearance(&tube, &start, &p, &cfg);
            prop_assert!(m >= spec.r_safe, "dense clearance {}", m);
        }
    }
}

fn closed_loop_scenario() -> Scenario {
    let path = std::path::Path::new(env!("CARGO_MANIFEST_DIR")).join("fixtures/misspecified_goal.json");
    Scenario::load(&path).unwrap()
}

#[test]
fn stationary_distant_human_lets_the_robot_through() {
    let sc = closed_loop_scenario();
    let mut cfg = sc.closed_loop(Some(PredictorSpec::Naive)).unwrap();
    cfg.human = HumanScript::Stationary;
    cfg.human_start = HumanState::new(-4.0, 4.0);
    cfg.problem.start = cfg.human_start;
    let log = run_closed_loop(&cfg).unwrap();
    assert!(!log.metrics.collision);
    assert!(log.metrics.time_to_goal.is_some(), "{:?}", log.metrics);
    assert_eq!(log.metrics.fallback_count, 0);
}

#[test]
fn sim_log_is_consistent_and_reproducible() {
    let sc = closed_loop_scenario();
    let cfg = sc.closed_loop(Some(PredictorSpec::Bayes { mass: 0.95 })).unwrap();
    let a = run_closed_loop(&cfg).unwrap();
    let b = run_closed_loop(&cfg).unwrap();
    assert_eq!(a, b);
    assert_eq!(a.metrics.min_distance, a.recomputed_min_distance());
    assert_eq!(a.metrics.collision, a.recomputed_min_distance() < a.r_safe);
    for w in a.records.windows(2) {
        assert!((w[1].time - w[0].time - cfg.dt).abs() < 1e-9);
    }
    assert!(a.metrics.replan_count >= 1);
}

#[test]
fn naive_safe_plans_are_safe_for_ba_frs() {
    let sc = closed_loop_scenario();
    let mut pb = sc.problem().unwrap();
    pb.human_grid = Grid::square(-2.0, 2.0, 41).unwrap();
    pb.start = HumanState::new(-1.0, 0.0);
    pb.prior = Belief::binary(0.5).unwrap();
    let naive = predict_naive(&pb).unwrap();
    let ba = predict_ba_frs(&pb, 0.1).unwrap();
    let cfg = PlannerConfig { horizon: 2.0, ..planner() };
    for (x, y, phi) in [(0.5, -1.9, 1.2), (1.5, -1.5, 2.0), (-1.9, 1.9, -0.5)] {
        let start = RobotState::new(x, y, phi).unwrap();
        let spec = RobotSpec { v_max: 0.5, ..robot(start, [1.9, 1.9]) };
        let p = plan(&start, &spec, &naive, &cfg).unwrap();
        if !p.fallback {
            let m = dense_min_clearance(&ba, &start, &p, &cfg);
            assert!(m >= spec.r_safe, "clearance against BA-FRS {m}");
        }
    }
}
