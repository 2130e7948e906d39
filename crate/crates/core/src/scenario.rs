//! Scenario documents: one JSON file carries every numeric choice of an
//! experiment. Parsing rejects unknown keys and reports the offending path.

use std::fmt::Write as _;
use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::belief::{Belief, BeliefParams};
use crate::error::{Error, Result};
use crate::grid::{Grid, GridSpec};
use crate::human::{ControlGrid, HumanState, PolicyModel, PolicyVariant};
use crate::nav::{ClosedLoopConfig, HumanScript, PlannerConfig, RobotSpec};
use crate::predict::{BeliefAxis, ParticleConfig, PredictionProblem, PredictorSpec};
use crate::solver::SolverConfig;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ModelKind {
    /// One Gaussian heading kernel per goal.
    GaussianGoal,
    /// Intent 0 walks along heading 0, intent 1 picks headings uniformly.
    StraightOrRandom,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HumanSection {
    pub model: ModelKind,
    #[serde(default)]
    pub goals: Vec<[f64; 2]>,
    /// One entry per goal, or a single entry for `straight_or_random`.
    pub sigmas: Vec<f64>,
    pub speed: f64,
    pub start: [f64; 2],
    #[serde(default = "default_headings")]
    pub headings: usize,
}

fn default_headings() -> usize {
    72
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSection {
    pub human: GridSpec,
    /// Belief axis of the joint grid; absent for naive-only scenarios.
    #[serde(default)]
    pub belief: Option<BeliefAxis>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ParticleSection {
    #[serde(default = "default_particle_count")]
    pub count: usize,
    #[serde(default = "default_particle_step")]
    pub step: f64,
}

fn default_particle_count() -> usize {
    100_000
}

fn default_particle_step() -> f64 {
    0.1
}

impl Default for ParticleSection {
    fn default() -> Self {
        ParticleSection {
            count: default_particle_count(),
            step: default_particle_step(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PredictSection {
    #[serde(default = "default_deltas")]
    pub deltas: Vec<f64>,
    #[serde(default = "default_epsilon_mass")]
    pub epsilon_mass: f64,
    #[serde(default)]
    pub particles: ParticleSection,
    /// Radius of the initial disc; two grid cells when absent.
    #[serde(default)]
    pub initial_radius: Option<f64>,
}

fn default_deltas() -> Vec<f64> {
    vec![0.1]
}

fn default_epsilon_mass() -> f64 {
    0.95
}

impl Default for PredictSection {
    fn default() -> Self {
        PredictSection {
            deltas: default_deltas(),
            epsilon_mass: default_epsilon_mass(),
            particles: ParticleSection::default(),
            initial_radius: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AnalysisSection {
    /// Intent indices analysed as the true one.
    #[serde(default = "default_hypotheses")]
    pub hypotheses: Vec<usize>,
    pub belief_target: f64,
    pub delta: f64,
}

fn default_hypotheses() -> Vec<usize> {
    vec![0, 1]
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimulationSection {
    pub predictor: PredictorSpec,
    /// Prediction window half-width around the human.
    pub window: f64,
    pub human_script: HumanScript,
    pub robot: RobotSpec,
    pub planner: PlannerConfig,
    pub dt: f64,
    pub replan_period: f64,
    pub timeout: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    /// Name of the experiment this scenario emulates.
    pub fixture: String,
    pub seed: u64,
    pub human: HumanSection,
    pub prior: Vec<f64>,
    pub belief: BeliefParams,
    pub grid: GridSection,
    #[serde(default)]
    pub solver: SolverConfig,
    #[serde(default)]
    pub predict: PredictSection,
    #[serde(default)]
    pub analysis: Option<AnalysisSection>,
    #[serde(default)]
    pub simulation: Option<SimulationSection>,
}

fn at(path: &str, message: impl Into<String>) -> Error {
    Error::Scenario {
        path: path.into(),
        message: message.into(),
    }
}

/// Re-labels a component error with the scenario path it came from.
fn under<T>(path: &str, r: Result<T>) -> Result<T> {
    r.map_err(|e| at(path, e.to_string()))
}

fn positive(path: &str, v: f64) -> Result<()> {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(at(path, format!("must be positive and finite, got {v}")))
    }
}

/// Parses and validates a scenario document.
pub fn parse_scenario(text: &str) -> Result<Scenario> {
    let de = &mut serde_json::Deserializer::from_str(text);
    let sc: Scenario = serde_path_to_error::deserialize(de).map_err(|e| {
        let path = e.path().to_string();
        at(if path.is_empty() { "." } else { &path }, e.into_inner().to_string())
    })?;
    sc.validate()?;
    Ok(sc)
}

impl Scenario {
    pub fn load(path: &Path) -> Result<Scenario> {
        parse_scenario(&std::fs::read_to_string(path)?)
    }

    pub fn to_json(&self) -> Result<String> {
        let mut s = serde_json::to_string_pretty(self)?;
        s.push('\n');
        Ok(s)
    }

    /// Hex SHA-256 of the compact serialization.
    pub fn hash(&self) -> String {
        let bytes = serde_json::to_vec(self).expect("scenario serializes");
        Sha256::digest(&bytes).iter().fold(String::with_capacity(64), |mut s, b| {
            let _ = write!(s, "{b:02x}");
            s
        })
    }

    pub fn validate(&self) -> Result<()> {
        let h = &self.human;
        for (i, s) in h.sigmas.iter().enumerate() {
            positive(&format!("human.sigmas[{i}]"), *s)?;
        }
        match h.model {
            ModelKind::GaussianGoal => {
                if h.goals.len() < 2 {
                    return Err(at("human.goals", "needs at least two goals"));
                }
                if h.sigmas.len() != h.goals.len() {
                    return Err(at("human.sigmas", "needs one entry per goal"));
                }
            }
            ModelKind::StraightOrRandom => {
                if h.sigmas.len() != 1 {
                    return Err(at("human.sigmas", "straight_or_random takes exactly one sigma"));
                }
                if !h.goals.is_empty() {
                    return Err(at("human.goals", "straight_or_random takes no goals"));
                }
            }
        }
        if !(h.speed >= 0.0 && h.speed.is_finite()) {
            return Err(at("human.speed", format!("must be nonnegative, got {}", h.speed)));
        }
        under("human.headings", ControlGrid::new(h.headings))?;
        let model = self.model()?;
        if self.prior.len() != model.support_len() {
            return Err(at(
                "prior",
                format!("needs {} entries, got {}", model.support_len(), self.prior.len()),
            ));
        }
        under("prior", Belief::new(self.prior.clone()))?;
        under("belief.gamma", BeliefParams::new(self.belief.gamma))?;
        let grid = under("grid.human", Grid::try_from(self.grid.human.clone()))?;
        if grid.ndim() != 2 {
            return Err(at("grid.human", "human grid must be 2-D"));
        }
        if !grid.contains(&h.start) {
            return Err(at("human.start", "outside the human grid"));
        }
        if let Some(a) = &self.grid.belief {
            under("grid.belief", grid.extend(a.min, a.max, a.count))?;
            if !(a.min > 0.0 && a.max < 1.0) {
                return Err(at("grid.belief", "belief axis must lie inside (0, 1)"));
            }
        }
        under("solver", self.solver.validate())?;
        let p = &self.predict;
        for (i, d) in p.deltas.iter().enumerate() {
            if !(*d >= 0.0 && d.is_finite()) {
                return Err(at(&format!("predict.deltas[{i}]"), format!("must be nonnegative, got {d}")));
            }
        }
        if !(p.epsilon_mass > 0.0 && p.epsilon_mass <= 1.0) {
            return Err(at("predict.epsilon_mass", format!("must lie in (0, 1], got {}", p.epsilon_mass)));
        }
        if p.particles.count == 0 {
            return Err(at("predict.particles.count", "must be positive"));
        }
        positive("predict.particles.step", p.particles.step)?;
        if let Some(r) = p.initial_radius {
            positive("predict.initial_radius", r)?;
        }
        if let Some(a) = &self.analysis {
            if self.grid.belief.is_none() {
                return Err(at("grid.belief", "analysis needs a belief axis"));
            }
            for (i, l) in a.hypotheses.iter().enumerate() {
                if *l >= model.support_len() {
                    return Err(at(&format!("analysis.hypotheses[{i}]"), format!("intent {l} outside the support")));
                }
            }
            if !(a.belief_target > 0.5 && a.belief_target < 1.0) {
                return Err(at("analysis.belief_target", "must lie in (0.5, 1)"));
            }
            if !(a.delta >= 0.0 && a.delta.is_finite()) {
                return Err(at("analysis.delta", "must be nonnegative"));
            }
        }
        if let Some(s) = &self.simulation {
            under("simulation.robot", s.robot.validate())?;
            under("simulation.planner", s.planner.validate())?;
            if s.planner.horizon > self.solver.horizon + 1e-9 {
                return Err(at("simulation.planner.horizon", "exceeds the prediction horizon"));
            }
            positive("simulation.window", s.window)?;
            positive("simulation.dt", s.dt)?;
            if !(s.replan_period >= s.dt && s.replan_period.is_finite()) {
                return Err(at("simulation.replan_period", "must be at least dt"));
            }
            positive("simulation.timeout", s.timeout)?;
            if !matches!(s.predictor, PredictorSpec::Naive) && self.grid.belief.is_none() {
                return Err(at("grid.belief", "belief predictors need a belief axis"));
            }
        }
        Ok(())
    }

    pub fn controls(&self) -> Result<ControlGrid> {
        ControlGrid::new(self.human.headings)
    }

    pub fn model(&self) -> Result<PolicyModel> {
        let h = &self.human;
        let variant = match h.model {
            ModelKind::GaussianGoal => PolicyVariant::GaussianGoal {
                goals: h.goals.clone(),
                sigmas: h.sigmas.clone(),
            },
            ModelKind::StraightOrRandom => PolicyVariant::StraightOrRandom { sigma: h.sigmas[0] },
        };
        under("human", PolicyModel::new(variant, h.speed, &self.controls()?))
    }

    /// Prediction inputs with the scenario seed driving the particles.
    pub fn problem(&self) -> Result<PredictionProblem> {
        Ok(PredictionProblem {
            model: self.model()?,
            controls: self.controls()?,
            params: self.belief,
            start: HumanState::new(self.human.start[0], self.human.start[1]),
            prior: Belief::new(self.prior.clone())?,
            human_grid: Grid::try_from(self.grid.human.clone())?,
            belief_axis: self.grid.belief,
            solver: self.solver,
            initial_radius: self.predict.initial_radius,
            particles: ParticleConfig {
                count: self.predict.particles.count,
                step: self.predict.particles.step,
                seed: self.seed,
            },
            scenario_hash: self.hash(),
        })
    }

    /// Closed-loop configuration, optionally with another predictor.
    pub fn closed_loop(&self, predictor: Option<PredictorSpec>) -> Result<ClosedLoopConfig> {
        let s = self
            .simulation
            .as_ref()
            .ok_or_else(|| at("simulation", "scenario has no simulation section"))?;
        let problem = self.problem()?;
        Ok(ClosedLoopConfig {
            human_start: problem.start,
            prior: problem.prior.clone(),
            problem,
            window: s.window,
            predictor: predictor.unwrap_or(s.predictor),
            robot: s.robot.clone(),
            planner: s.planner.clone(),
            human: s.human_script.clone(),
            dt: s.dt,
            replan_period: s.replan_period,
            timeout: s.timeout,
        })
    }
}
