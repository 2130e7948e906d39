//! Human-motion predictors: the naive reachable set over all headings, the
//! belief-augmented reachable set with a density threshold, and a particle
//! approximation of the full Bayesian predictor.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::belief::{posterior_from_likelihoods, Belief, BeliefParams};
use crate::error::{Error, Result};
use crate::grid::{make_ball_field, project_to_human_space, Grid, LevelSetField, OccupancySlice, ReachTube};
use crate::human::{ControlGrid, HumanState, PolicyModel};
use crate::joint::{allowable_controls_belief, joint_initial_set, Admissible, JointHamiltonian, JointState, Mode};
use crate::solver::{evolve, step_plan, PlanarHamiltonian, SolverConfig};

/// Everything a predictor needs, already validated.
#[derive(Debug, Clone)]
pub struct PredictionProblem {
    pub model: PolicyModel,
    pub controls: ControlGrid,
    pub params: BeliefParams,
    pub start: HumanState,
    pub prior: Belief,
    /// 2-D human-space grid shared by every predictor's output.
    pub human_grid: Grid,
    /// Nodes on the belief axis; the joint grid is `human_grid` times this axis.
    pub belief_axis: Option<BeliefAxis>,
    pub solver: SolverConfig,
    /// Radius of the initial disc; `None` selects two grid cells.
    pub initial_radius: Option<f64>,
    pub particles: ParticleConfig,
    /// Hash of the originating scenario, echoed in tube metadata.
    pub scenario_hash: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BeliefAxis {
    pub min: f64,
    pub max: f64,
    pub count: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ParticleConfig {
    pub count: usize,
    /// Interval between sampled actions and discrete belief updates.
    pub step: f64,
    pub seed: u64,
}

impl PredictionProblem {
    pub fn joint_grid(&self) -> Result<Grid> {
        let a = self
            .belief_axis
            .ok_or_else(|| Error::input("problem has no belief axis"))?;
        self.human_grid.extend(a.min, a.max, a.count)
    }

    pub fn initial_radius(&self) -> f64 {
        self.initial_radius.unwrap_or(2.0 * self.human_grid.max_spacing())
    }

    /// Internal solver step shared by all predictors of this problem.
    pub fn shared_step(&self) -> Result<Option<f64>> {
        if self.belief_axis.is_none() || self.model.support_len() != 2 {
            return Ok(None);
        }
        let ham = JointHamiltonian::new(
            &self.joint_grid()?,
            &self.model,
            &self.params,
            &self.controls,
            Admissible::Belief { delta: 0.0 },
            Mode::Max,
        )?;
        let (dt, _) = step_plan(ham.grid(), &ham, &self.solver)?;
        Ok(Some(self.solver.max_step.map_or(dt, |s| s.min(dt))))
    }

    fn meta(&self) -> TubeMeta {
        TubeMeta {
            scenario_hash: self.scenario_hash.clone(),
            horizon: self.solver.horizon,
            snapshot_dt: self.solver.snapshot_dt,
            grid: self.human_grid.clone(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum PredictorKind {
    Naive,
    BaFrs { delta: f64 },
    /// Per-slice thresholds chosen to hold `mass` of the occupancy.
    Bayes { mass: f64, epsilons: Vec<f64> },
}

impl PredictorKind {
    /// Short label used for export directories.
    pub fn label(&self) -> String {
        match self {
            PredictorKind::Naive => "naive".into(),
            PredictorKind::BaFrs { delta } => format!("ba_frs_delta_{delta}"),
            PredictorKind::Bayes { mass, .. } => format!("bayes_mass_{mass}"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TubeMeta {
    pub scenario_hash: String,
    pub horizon: f64,
    pub snapshot_dt: f64,
    pub grid: Grid,
}

#[derive(Debug, Clone)]
pub struct PredictionTube {
    pub kind: PredictorKind,
    /// Human-space sets; a node is occupied iff its value is `<= 0`.
    pub sets: ReachTube,
    pub occupancy: Option<Vec<OccupancySlice>>,
    pub joint: Option<ReachTube>,
    pub meta: TubeMeta,
}

impl PredictionTube {
    pub fn len(&self) -> usize {
        self.sets.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sets.is_empty()
    }

    pub fn slice(&self, k: usize) -> &LevelSetField {
        &self.sets.slices()[k]
    }

    /// Occupied node masks per slice.
    pub fn masks(&self) -> Vec<Vec<bool>> {
        self.sets.slices().iter().map(|s| s.inside_mask()).collect()
    }
}

/// Which predictor to run, with its threshold.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum PredictorSpec {
    Naive,
    BaFrs { delta: f64 },
    Bayes { mass: f64 },
}

impl PredictorSpec {
    pub fn run(&self, problem: &PredictionProblem) -> Result<PredictionTube> {
        match *self {
            PredictorSpec::Naive => predict_naive(problem),
            PredictorSpec::BaFrs { delta } => predict_ba_frs(problem, delta),
            PredictorSpec::Bayes { mass } => predict_bayes(problem, mass),
        }
    }
}

/// Reachable set of the planar human under every control-grid heading.
pub fn predict_naive(problem: &PredictionProblem) -> Result<PredictionTube> {
    let r0 = problem.initial_radius();
    let init = make_ball_field(&problem.human_grid, &problem.start.as_array(), r0)?;
    let ham = PlanarHamiltonian::new(&problem.human_grid, problem.model.speed(), problem.controls.angles())?.with_isotropic_dissipation();
    let mut cfg = problem.solver;
    if let Some(s) = problem.shared_step()? {
        cfg.max_step = Some(s);
    }
    let sets = evolve(&init, &ham, &cfg)?;
    Ok(PredictionTube {
        kind: PredictorKind::Naive,
        sets,
        occupancy: None,
        joint: None,
        meta: problem.meta(),
    })
}

/// Joint-space reachable set under controls with mixture density `>= delta`,
/// projected onto human space.
pub fn predict_ba_frs(problem: &PredictionProblem, delta: f64) -> Result<PredictionTube> {
    let grid = problem.joint_grid()?;
    let z0 = JointState::new(problem.start, problem.prior.clone());
    allowable_controls_belief(&z0, delta, &problem.model, &problem.controls)?;
    let ham = JointHamiltonian::new(
        &grid,
        &problem.model,
        &problem.params,
        &problem.controls,
        Admissible::Belief { delta },
        Mode::Max,
    )?;
    let p0 = z0.p1().clamp(grid.mins()[2], grid.maxs()[2]);
    let init = joint_initial_set(
        &grid,
        problem.start.as_array(),
        problem.initial_radius(),
        p0,
        2.0 * grid.spacing()[2],
    )?;
    let mut cfg = problem.solver;
    if let Some(s) = problem.shared_step()? {
        cfg.max_step = Some(s);
    }
    let joint = evolve(&init, &ham, &cfg)?;
    let sets = project_to_human_space(&joint, &[0, 1])?;
    Ok(PredictionTube {
        kind: PredictorKind::BaFrs { delta },
        sets,
        occupancy: None,
        joint: Some(joint),
        meta: problem.meta(),
    })
}

/// Smallest threshold whose strict superlevel set holds at least `q` of the
/// mass. Ties at the cutoff are included.
pub fn epsilon_from_mass(occ: &OccupancySlice, q: f64) -> Result<f64> {
    if !(q > 0.0 && q < 1.0) {
        return Err(Error::input(format!("mass fraction must lie in (0, 1), got {q}")));
    }
    let mut m: Vec<f64> = occ.mass().iter().copied().filter(|&x| x > 0.0).collect();
    m.sort_unstable_by(|a, b| b.total_cmp(a));
    let total: f64 = m.iter().sum();
    let mut acc = 0.0;
    let mut cutoff = m.last().copied().unwrap_or(0.0);
    for &x in &m {
        acc += x;
        if acc >= q * total * (1.0 - 1e-12) {
            cutoff = x;
            break;
        }
    }
    Ok(m.iter().copied().find(|&x| x < cutoff).unwrap_or(0.0))
}

/// Simulates `n` particles carrying `(x, b)`; returns one occupancy slice per snapshot.
pub fn particle_occupancy(problem: &PredictionProblem) -> Result<Vec<OccupancySlice>> {
    let pc = problem.particles;
    let cfg = &problem.solver;
    cfg.validate()?;
    if pc.count == 0 {
        return Err(Error::input("particle count must be positive"));
    }
    if !(pc.step > 0.0) {
        return Err(Error::input("particle step must be positive"));
    }
    let per_snap = (cfg.snapshot_dt / pc.step).round();
    if per_snap < 1.0 || (per_snap * pc.step - cfg.snapshot_dt).abs() > 1e-9 {
        return Err(Error::input(format!(
            "snapshot_dt {} is not a multiple of the particle step {}",
            cfg.snapshot_dt, pc.step
        )));
    }
    let per_snap = per_snap as usize;
    let n_snap = cfg.snapshot_count();
    let grid = &problem.human_grid;
    let model = &problem.model;
    let k = model.support_len();
    let mut counts = vec![vec![0u64; grid.len()]; n_snap + 1];
    let mut lik = vec![0.0; k];
    let mut post = vec![0.0; k];
    for i in 0..pc.count {
        let mut rng = ChaCha8Rng::seed_from_u64(pc.seed);
        rng.set_stream(i as u64);
        let mut x = problem.start;
        let mut b = problem.prior.probs().to_vec();
        counts[0][grid.nearest_node_clamped(&x.as_array())] += 1;
        for cnt in counts.iter_mut().skip(1) {
            for _ in 0..per_snap {
                let r: f64 = rng.random();
                let mut lam = k - 1;
                let mut acc = 0.0;
                for (l, p) in b.iter().enumerate() {
                    acc += p;
                    if r < acc {
                        lam = l;
                        break;
                    }
                }
                let u = model.sample_unchecked(&x, lam, &mut rng);
                for (l, li) in lik.iter_mut().enumerate() {
                    *li = model.likelihood_unchecked(&x, u.theta(), l);
                }
                posterior_from_likelihoods(&b, &lik, &mut post);
                std::mem::swap(&mut b, &mut post);
                let (s, c) = u.theta().sin_cos();
                x = HumanState::new(x.x + pc.step * model.speed() * c, x.y + pc.step * model.speed() * s);
            }
            cnt[grid.nearest_node_clamped(&x.as_array())] += 1;
        }
    }
    let n = pc.count as f64;
    counts
        .into_iter()
        .enumerate()
        .map(|(s, c)| {
            let mass = c.into_iter().map(|v| v as f64 / n).collect();
            OccupancySlice::new(grid.clone(), mass, s as f64 * cfg.snapshot_dt)
        })
        .collect()
}

/// Particle Bayesian predictor with per-slice `mass`-fraction superlevel sets.
pub fn predict_bayes(problem: &PredictionProblem, mass: f64) -> Result<PredictionTube> {
    let occ = particle_occupancy(problem)?;
    let mut eps = Vec::with_capacity(occ.len());
    let mut fields = Vec::with_capacity(occ.len());
    for o in &occ {
        let e = epsilon_from_mass(o, mass)?;
        fields.push(o.superlevel_field(e));
        eps.push(e);
    }
    let sets = ReachTube::new(fields, problem.solver.snapshot_dt)?;
    Ok(PredictionTube {
        kind: PredictorKind::Bayes { mass, epsilons: eps },
        sets,
        occupancy: Some(occ),
        joint: None,
        meta: problem.meta(),
    })
}
