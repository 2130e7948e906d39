//! Dubins-car robot that plans around predicted human sets, and the
//! closed-loop simulation against a scripted human.

use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::belief::{bayes_update, Belief};
use crate::error::{Error, Result};
use crate::grid::{Grid, ReachTube};
use crate::human::{wrap_angle, HumanAction, HumanState, ARRIVAL_EPS};
use crate::predict::{PredictionProblem, PredictionTube, PredictorSpec};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RobotState {
    pub x: f64,
    pub y: f64,
    pub phi: f64,
}

impl RobotState {
    pub fn new(x: f64, y: f64, phi: f64) -> Result<Self> {
        if !(x.is_finite() && y.is_finite() && phi.is_finite()) {
            return Err(Error::input("robot state must be finite"));
        }
        Ok(RobotState { x, y, phi: wrap_angle(phi) })
    }

    pub fn position(&self) -> [f64; 2] {
        [self.x, self.y]
    }

    /// Exact Dubins motion under a constant control for time `t`.
    pub fn advance(&self, u: RobotControl, t: f64) -> RobotState {
        let (x, y, phi) = if u.omega.abs() < 1e-12 {
            (self.x + u.v * t * self.phi.cos(), self.y + u.v * t * self.phi.sin(), self.phi)
        } else {
            let phi = self.phi + u.omega * t;
            let r = u.v / u.omega;
            (self.x + r * (phi.sin() - self.phi.sin()), self.y - r * (phi.cos() - self.phi.cos()), phi)
        };
        RobotState { x, y, phi: wrap_angle(phi) }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RobotControl {
    pub v: f64,
    pub omega: f64,
}

impl RobotControl {
    pub const STOP: RobotControl = RobotControl { v: 0.0, omega: 0.0 };
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RobotSpec {
    pub start: RobotState,
    pub goal: [f64; 2],
    pub v_max: f64,
    pub omega_max: f64,
    pub r_safe: f64,
    /// Arrival radius around the goal.
    #[serde(default = "default_goal_tolerance")]
    pub goal_tolerance: f64,
    /// Axis-aligned box the robot must stay in: `[xmin, ymin, xmax, ymax]`.
    pub workspace: [f64; 4],
}

fn default_goal_tolerance() -> f64 {
    0.2
}

impl RobotSpec {
    pub fn validate(&self) -> Result<()> {
        if !(self.v_max > 0.0 && self.omega_max > 0.0 && self.r_safe > 0.0 && self.goal_tolerance > 0.0) {
            return Err(Error::config("robot bounds, safety radius and goal tolerance must be positive"));
        }
        let [a, b, c, d] = self.workspace;
        if !(a < c && b < d) {
            return Err(Error::config("robot workspace is empty"));
        }
        Ok(())
    }

    fn in_workspace(&self, p: [f64; 2]) -> bool {
        let [a, b, c, d] = self.workspace;
        p[0] >= a && p[0] <= c && p[1] >= b && p[1] <= d
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PlannerConfig {
    #[serde(default = "default_turn_rates")]
    pub turn_rates: usize,
    /// Speeds as fractions of `v_max`.
    #[serde(default = "default_speed_fractions")]
    pub speed_fractions: Vec<f64>,
    #[serde(default = "default_depth")]
    pub depth: usize,
    /// Planning horizon; must not exceed the prediction horizon.
    pub horizon: f64,
    /// Safety sampling interval along candidate trajectories.
    pub sample_dt: f64,
}

fn default_turn_rates() -> usize {
    7
}

fn default_speed_fractions() -> Vec<f64> {
    vec![0.0, 0.5, 1.0]
}

fn default_depth() -> usize {
    3
}

impl PlannerConfig {
    pub fn validate(&self) -> Result<()> {
        if self.turn_rates == 0 || self.depth == 0 || self.speed_fractions.is_empty() {
            return Err(Error::config("planner needs at least one turn rate, speed and stage"));
        }
        if self.speed_fractions.iter().any(|f| !(0.0..=1.0).contains(f)) {
            return Err(Error::config("speed fractions must lie in [0, 1]"));
        }
        if !(self.horizon > 0.0 && self.sample_dt > 0.0 && self.sample_dt <= self.horizon) {
            return Err(Error::config("planner horizon and sample interval must be positive"));
        }
        Ok(())
    }

    fn primitives(&self, robot: &RobotSpec) -> Vec<RobotControl> {
        let n = self.turn_rates;
        let mut out = Vec::with_capacity(n * self.speed_fractions.len());
        for &f in &self.speed_fractions {
            for i in 0..n {
                let omega = if n == 1 {
                    0.0
                } else {
                    robot.omega_max * (2.0 * i as f64 / (n - 1) as f64 - 1.0)
                };
                out.push(RobotControl { v: f * robot.v_max, omega });
            }
        }
        out
    }
}

/// Lower bounds on distance to each predicted slice.
///
/// Distances are exact at grid nodes; off-node queries subtract the offset to
/// the nearest node, which is valid because distance is 1-Lipschitz.
#[derive(Debug, Clone)]
pub struct Clearance {
    grid: Grid,
    dt: f64,
    /// Per slice, per node: distance to the nearest occupied node.
    dist: Vec<Vec<f64>>,
}

impl Clearance {
    pub fn new(tube: &ReachTube) -> Result<Self> {
        let grid = tube.grid().clone();
        if grid.ndim() != 2 {
            return Err(Error::input("clearance needs a 2-D tube"));
        }
        let pts: Vec<Vec<f64>> = (0..grid.len()).map(|i| grid.node_point(i)).collect();
        let dist = tube
            .slices()
            .iter()
            .map(|s| {
                let occ: Vec<&Vec<f64>> = s.inside_mask().iter().zip(&pts).filter(|(m, _)| **m).map(|(_, p)| p).collect();
                pts.iter()
                    .map(|p| occ.iter().map(|q| (p[0] - q[0]).hypot(p[1] - q[1])).fold(f64::INFINITY, f64::min))
                    .collect()
            })
            .collect();
        Ok(Clearance { grid, dt: tube.dt(), dist })
    }

    /// Lower bound on the distance from `p` to the slices bracketing time `t`
    /// after the tube start. Past the horizon the last slice is used.
    ///
    /// Outside the grid, `p` is projected onto the grid box; every occupied
    /// node lies in the box, so the offset adds in quadrature.
    pub fn at(&self, t: f64, p: [f64; 2]) -> f64 {
        let last = self.dist.len() - 1;
        let f = (t / self.dt).max(0.0);
        let k0 = (f.floor() as usize).min(last);
        let k1 = (f.ceil() as usize).min(last);
        let q = [
            p[0].clamp(self.grid.mins()[0], self.grid.maxs()[0]),
            p[1].clamp(self.grid.mins()[1], self.grid.maxs()[1]),
        ];
        let n = self.grid.nearest_node_clamped(&q);
        let c = self.grid.node_point(n);
        let inner = (self.dist[k0][n].min(self.dist[k1][n]) - (q[0] - c[0]).hypot(q[1] - c[1])).max(0.0);
        let outer = (p[0] - q[0]).hypot(p[1] - q[1]);
        if outer == 0.0 {
            self.dist[k0][n].min(self.dist[k1][n]) - (q[0] - c[0]).hypot(q[1] - c[1])
        } else {
            outer.hypot(inner)
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Plan {
    /// One control per stage, each held for `stage`.
    pub controls: Vec<RobotControl>,
    pub stage: f64,
    /// No candidate was safe; the robot stops.
    pub fallback: bool,
    /// Smallest sampled clearance of the chosen trajectory, less `r_safe`.
    pub margin: f64,
}

impl Plan {
    pub fn control_at(&self, t: f64) -> RobotControl {
        let k = ((t / self.stage + 1e-9).floor() as usize).min(self.controls.len() - 1);
        self.controls[k]
    }
}

/// Clearance margin over one stage and the first sampled time inside the
/// goal region, or `None` once the margin drops below zero.
///
/// Each sample must clear `r_safe` plus the distance travelled in one sample
/// step, so the bound also holds between samples: clearance is 1-Lipschitz
/// in position and constant in time between slice boundaries.
fn stage_margin(
    start: &RobotState,
    u: RobotControl,
    t0: f64,
    stage: f64,
    sample: f64,
    clear: &Clearance,
    robot: &RobotSpec,
) -> Option<(f64, Option<f64>)> {
    let n = (stage / sample).ceil().max(1.0) as usize;
    let mut m = f64::INFINITY;
    let mut arrival = None;
    for j in 1..=n {
        let s = stage * j as f64 / n as f64;
        let p = start.advance(u, s).position();
        if !robot.in_workspace(p) {
            return None;
        }
        let c = clear.at(t0 + s, p) - robot.r_safe - u.v.abs() * stage / n as f64;
        if c < 0.0 {
            return None;
        }
        m = m.min(c);
        if arrival.is_none() && (p[0] - robot.goal[0]).hypot(p[1] - robot.goal[1]) <= robot.goal_tolerance {
            arrival = Some(t0 + s);
        }
    }
    Some((m, arrival))
}

/// Best safe primitive sequence from `state` toward `robot.goal`.
///
/// Candidates must keep clearance at least `r_safe` at every sampled time
/// against the time-matched slice of `tube`. Among them the smallest
/// terminal distance wins, where entering the goal region counts as distance
/// zero and earlier entry wins; remaining ties go to the smaller summed
/// `|omega|`, then the smaller summed `v`.
pub fn plan(state: &RobotState, robot: &RobotSpec, tube: &PredictionTube, cfg: &PlannerConfig) -> Result<Plan> {
    robot.validate()?;
    cfg.validate()?;
    let horizon = tube.sets.times().last().copied().unwrap_or(0.0) - tube.sets.slices()[0].time();
    if cfg.horizon > horizon + 1e-9 {
        return Err(Error::input(format!(
            "planning horizon {} exceeds the prediction horizon {horizon}",
            cfg.horizon
        )));
    }
    let clear = Clearance::new(&tube.sets)?;
    plan_with_clearance(state, robot, &clear, cfg)
}

pub fn plan_with_clearance(state: &RobotState, robot: &RobotSpec, clear: &Clearance, cfg: &PlannerConfig) -> Result<Plan> {
    let prims = cfg.primitives(robot);
    let stage = cfg.horizon / cfg.depth as f64;
    let sample = cfg.sample_dt.min(stage);
    let mut best: Best = None;
    let mut path = Vec::with_capacity(cfg.depth);
    search(
        state,
        0,
        (f64::INFINITY, None),
        &mut path,
        &mut best,
        &prims,
        stage,
        sample,
        clear,
        robot,
        cfg.depth,
    );
    Ok(match best {
        Some((_, controls, margin)) => Plan { controls, stage, fallback: false, margin },
        None => Plan {
            controls: vec![RobotControl::STOP; cfg.depth],
            stage,
            fallback: true,
            margin: f64::NEG_INFINITY,
        },
    })
}

type Best = Option<([f64; 4], Vec<RobotControl>, f64)>;

#[allow(clippy::too_many_arguments)]
fn search(
    state: &RobotState,
    level: usize,
    (margin, arrival): (f64, Option<f64>),
    path: &mut Vec<RobotControl>,
    best: &mut Best,
    prims: &[RobotControl],
    stage: f64,
    sample: f64,
    clear: &Clearance,
    robot: &RobotSpec,
    depth: usize,
) {
    if level == depth {
        let d = (state.x - robot.goal[0]).hypot(state.y - robot.goal[1]);
        let w: f64 = path.iter().map(|u| u.omega.abs()).sum();
        let v: f64 = path.iter().map(|u| u.v).sum();
        let key = match arrival {
            Some(t) => [0.0, t, w, v],
            None => [d, 0.0, w, v],
        };
        let better = match best {
            None => true,
            Some((k, _, _)) => key
                .iter()
                .zip(k.iter())
                .find(|(a, b)| (*a - *b).abs() > 1e-9)
                .is_some_and(|(a, b)| a < b),
        };
        if better {
            *best = Some((key, path.clone(), margin));
        }
        return;
    }
    let t0 = level as f64 * stage;
    for &u in prims {
        if let Some((m, a)) = stage_margin(state, u, t0, stage, sample, clear, robot) {
            path.push(u);
            let next = (margin.min(m), arrival.or(a));
            search(&state.advance(u, stage), level + 1, next, path, best, prims, stage, sample, clear, robot, depth);
            path.pop();
        }
    }
}

/// Scripted human behaviour.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum HumanScript {
    /// Walk straight at the model speed toward `goal`, then stand still there.
    TowardGoal { goal: [f64; 2] },
    Stationary,
}

impl HumanScript {
    /// Heading and speed at `x` for a step of length `dt`; the last step
    /// lands on the goal.
    fn action(&self, x: &HumanState, speed: f64, dt: f64) -> (HumanAction, f64) {
        match self {
            HumanScript::TowardGoal { goal } => {
                let (dx, dy) = (goal[0] - x.x, goal[1] - x.y);
                let d = dx.hypot(dy);
                if d <= ARRIVAL_EPS {
                    (HumanAction::new(0.0), 0.0)
                } else {
                    (HumanAction::new(dy.atan2(dx)), speed.min(d / dt))
                }
            }
            HumanScript::Stationary => (HumanAction::new(0.0), 0.0),
        }
    }
}

#[derive(Debug, Clone)]
pub struct ClosedLoopConfig {
    /// Prediction template; start and prior are replaced at every replan.
    pub problem: PredictionProblem,
    /// Prediction window half-width around the human.
    pub window: f64,
    pub predictor: PredictorSpec,
    pub robot: RobotSpec,
    pub planner: PlannerConfig,
    pub human: HumanScript,
    pub human_start: HumanState,
    pub prior: Belief,
    pub dt: f64,
    pub replan_period: f64,
    pub timeout: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimRecord {
    pub time: f64,
    pub human: HumanState,
    pub human_action: f64,
    pub robot: RobotState,
    pub control: RobotControl,
    pub belief: Vec<f64>,
    pub tube_id: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimMetrics {
    pub min_distance: f64,
    pub collision: bool,
    pub time_to_goal: Option<f64>,
    pub timed_out: bool,
    pub replan_count: usize,
    pub fallback_count: usize,
    /// An error aborted the run; records end at the failure.
    pub incomplete: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimLog {
    pub records: Vec<SimRecord>,
    pub metrics: SimMetrics,
    pub r_safe: f64,
}

impl SimLog {
    /// Recompute distance metrics from the records.
    pub fn recomputed_min_distance(&self) -> f64 {
        self.records
            .iter()
            .map(|r| (r.human.x - r.robot.x).hypot(r.human.y - r.robot.y))
            .fold(f64::INFINITY, f64::min)
    }

    pub fn to_csv(&self) -> String {
        let mut s = String::from("time,human_x,human_y,human_action,robot_x,robot_y,robot_phi,v,omega,p1,tube_id\n");
        for r in &self.records {
            s.push_str(&format!(
                "{},{},{},{},{},{},{},{},{},{},{}\n",
                r.time,
                r.human.x,
                r.human.y,
                r.human_action,
                r.robot.x,
                r.robot.y,
                r.robot.phi,
                r.control.v,
                r.control.omega,
                r.belief[0],
                r.tube_id
            ));
        }
        s
    }

    /// Writes `records.csv` and `metrics.json` into `dir`.
    pub fn save(&self, dir: &Path) -> Result<()> {
        std::fs::create_dir_all(dir)?;
        std::fs::write(dir.join("records.csv"), self.to_csv())?;
        let mut f = std::fs::File::create(dir.join("metrics.json"))?;
        serde_json::to_writer_pretty(&mut f, &self.metrics)?;
        f.write_all(b"\n")?;
        Ok(())
    }
}

/// Square window around the human at the template's finest spacing.
fn window_grid(template: &Grid, center: &HumanState, half: f64) -> Result<Grid> {
    let h = template.spacing()[0].min(template.spacing()[1]);
    let n = (2.0 * half / h).round() as usize + 1;
    Grid::new(
        vec![center.x - half, center.y - half],
        vec![center.x + half, center.y + half],
        vec![n, n],
    )
}

/// Tube for the current human state and belief, on a window centred on the
/// human.
pub fn predict_now(cfg: &ClosedLoopConfig, x: &HumanState, belief: &Belief) -> Result<PredictionTube> {
    let mut pb = cfg.problem.clone();
    pb.start = *x;
    pb.prior = belief.clone();
    pb.human_grid = window_grid(&cfg.problem.human_grid, x, cfg.window)?;
    cfg.predictor.run(&pb)
}

/// Replanning loop: observe the human, update the belief, predict, plan, and
/// execute one replan period. Stops at goal arrival, collision or timeout.
pub fn run_closed_loop(cfg: &ClosedLoopConfig) -> Result<SimLog> {
    cfg.robot.validate()?;
    cfg.planner.validate()?;
    if !(cfg.dt > 0.0 && cfg.replan_period >= cfg.dt && cfg.timeout > 0.0) {
        return Err(Error::config("simulation needs dt > 0, replan period >= dt and a positive timeout"));
    }
    let per_replan = (cfg.replan_period / cfg.dt).round() as usize;
    if ((per_replan as f64) * cfg.dt - cfg.replan_period).abs() > 1e-9 {
        return Err(Error::config("replan period must be a multiple of dt"));
    }
    let steps = (cfg.timeout / cfg.dt).round() as usize;
    let speed = cfg.problem.model.speed();
    let mut x = cfg.human_start;
    let mut b = cfg.prior.clone();
    let mut r = cfg.robot.start;
    let mut records = Vec::with_capacity(steps);
    let mut metrics = SimMetrics {
        min_distance: (x.x - r.x).hypot(x.y - r.y),
        collision: false,
        time_to_goal: None,
        timed_out: false,
        replan_count: 0,
        fallback_count: 0,
        incomplete: None,
    };
    let mut current = Plan { controls: vec![RobotControl::STOP], stage: cfg.replan_period, fallback: true, margin: 0.0 };
    let mut plan_time = 0.0;
    for k in 0..steps {
        let t = k as f64 * cfg.dt;
        if k % per_replan == 0 {
            let planned = predict_now(cfg, &x, &b).and_then(|tube| plan(&r, &cfg.robot, &tube, &cfg.planner));
            match planned {
                Ok(p) => {
                    metrics.replan_count += 1;
                    if p.fallback {
                        metrics.fallback_count += 1;
                    }
                    current = p;
                    plan_time = t;
                }
                Err(e) => {
                    metrics.incomplete = Some(e.to_string());
                    break;
                }
            }
        }
        let u = current.control_at(t - plan_time);
        let (a, s) = cfg.human.action(&x, speed, cfg.dt);
        records.push(SimRecord {
            time: t,
            human: x,
            human_action: a.theta(),
            robot: r,
            control: u,
            belief: b.probs().to_vec(),
            tube_id: metrics.replan_count.saturating_sub(1),
        });
        if s > 0.0 {
            b = bayes_update(&b, &x, a, &cfg.problem.model)?;
        }
        let (sn, cs) = a.theta().sin_cos();
        x = HumanState::new(x.x + cfg.dt * s * cs, x.y + cfg.dt * s * sn);
        r = r.advance(u, cfg.dt);
        let d = (x.x - r.x).hypot(x.y - r.y);
        metrics.min_distance = metrics.min_distance.min(d);
        let t_next = (k + 1) as f64 * cfg.dt;
        if d < cfg.robot.r_safe {
            metrics.collision = true;
        }
        let reached = (r.x - cfg.robot.goal[0]).hypot(r.y - cfg.robot.goal[1]) <= cfg.robot.goal_tolerance;
        if reached {
            metrics.time_to_goal = Some(t_next);
        }
        if metrics.collision || reached {
            records.push(SimRecord {
                time: t_next,
                human: x,
                human_action: a.theta(),
                robot: r,
                control: u,
                belief: b.probs().to_vec(),
                tube_id: metrics.replan_count.saturating_sub(1),
            });
            break;
        }
        if k + 1 == steps {
            metrics.timed_out = true;
        }
    }
    Ok(SimLog { records, metrics, r_safe: cfg.robot.r_safe })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn arcs_close_after_a_full_turn() {
        let s = RobotState::new(1.0, 2.0, 0.3).unwrap();
        let u = RobotControl { v: 0.5, omega: std::f64::consts::TAU };
        let e = s.advance(u, 1.0);
        assert!((e.x - s.x).abs() < 1e-12 && (e.y - s.y).abs() < 1e-12);
        let h = s.advance(u, 0.5);
        // half a turn of radius v / omega lands a diameter away
        let r = 0.5 / std::f64::consts::TAU;
        assert!(((h.x - s.x).hypot(h.y - s.y) - 2.0 * r).abs() < 1e-12);
        let straight = s.advance(RobotControl { v: 2.0, omega: 0.0 }, 1.5);
        assert!((straight.x - (1.0 + 3.0 * 0.3f64.cos())).abs() < 1e-12);
    }

    #[test]
    fn primitives_span_the_turn_box() {
        let robot = RobotSpec {
            start: RobotState::new(0.0, 0.0, 0.0).unwrap(),
            goal: [1.0, 0.0],
            v_max: 1.0,
            omega_max: 1.0,
            r_safe: 0.3,
            goal_tolerance: 0.2,
            workspace: [-5.0, -5.0, 5.0, 5.0],
        };
        let cfg = PlannerConfig {
            turn_rates: 7,
            speed_fractions: vec![0.0, 0.5, 1.0],
            depth: 3,
            horizon: 1.5,
            sample_dt: 0.02,
        };
        let p = cfg.primitives(&robot);
        assert_eq!(p.len(), 21);
        assert_eq!(p[0].omega, -1.0);
        assert_eq!(p[6].omega, 1.0);
        assert_eq!(p[3].omega, 0.0);
        assert_eq!(p[20].v, 1.0);
    }
}
