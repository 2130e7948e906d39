//! Confidence-time analysis: how fast a hypothesised true intent can be
//! recognised, under the most and the least informative admissible actions.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{LevelSetField, ReachTube};
use crate::human::{HumanAction, HumanState};
use crate::joint::{
    allowable_controls_truth, belief_halfspace, hamiltonian, joint_rate, Admissible, JointHamiltonian, JointState,
    Mode, P_MIN,
};
use crate::predict::PredictionProblem;
use crate::solver::{evolve, first_hitting_index, step_plan};

/// Hitting time of the confidence target under one Hamiltonian mode.
#[derive(Debug, Clone)]
pub struct ConfidenceTime {
    pub mode: Mode,
    pub time: Option<f64>,
    /// Snapshot index of the first hit.
    pub hit_index: Option<usize>,
    pub tube: ReachTube,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnalysisResult {
    pub lambda_star: usize,
    pub delta: f64,
    pub belief_target: f64,
    /// Fastest recognition time, from the maximizing Hamiltonian.
    pub t_min: Option<f64>,
    /// Slowest recognition time, from the minimizing Hamiltonian.
    pub t_max: Option<f64>,
    /// Least informative actions, one per solver step up to `t_max`.
    pub control_seq_min: Vec<HumanAction>,
    /// Most informative actions, one per solver step up to `t_min`.
    pub control_seq_max: Vec<HumanAction>,
    pub step: f64,
}

/// Belief in `lambda_star` carried by the first coordinate.
fn belief_in(lambda_star: usize, p1: f64) -> f64 {
    if lambda_star == 0 {
        p1
    } else {
        1.0 - p1
    }
}

fn check(problem: &PredictionProblem, lambda_star: usize, p_star: f64) -> Result<()> {
    if problem.model.support_len() != 2 {
        return Err(Error::input("confidence analysis needs a two-point intent support"));
    }
    if lambda_star >= 2 {
        return Err(Error::input(format!("lambda_star = {lambda_star} outside the support")));
    }
    if !(p_star > 0.5 && p_star < 1.0) {
        return Err(Error::input(format!("belief target must lie in (0.5, 1), got {p_star}")));
    }
    Ok(())
}

/// Earliest time the belief in `lambda_star` can reach `p_star` for some
/// human position, when the human only takes actions with density at least
/// `delta` under `lambda_star`.
///
/// The initial set is every state whose belief in `lambda_star` is at most the
/// prior's, so the tube front is the extreme belief trajectory over all
/// positions.
pub fn time_to_confidence(
    problem: &PredictionProblem,
    lambda_star: usize,
    p_star: f64,
    delta: f64,
    mode: Mode,
) -> Result<ConfidenceTime> {
    check(problem, lambda_star, p_star)?;
    allowable_controls_truth(&problem.start, lambda_star, delta, &problem.model, &problem.controls)?;
    let grid = problem.joint_grid()?;
    let ham = JointHamiltonian::new(
        &grid,
        &problem.model,
        &problem.params,
        &problem.controls,
        Admissible::Truth { lambda: lambda_star, delta },
        mode,
    )?
    .with_linear_belief();
    let p0 = problem.prior.p1().clamp(P_MIN, 1.0 - P_MIN);
    let init = belief_halfspace(&grid, p0, lambda_star == 1)?;
    let tube = evolve(&init, &ham, &problem.solver)?;
    let np = grid.counts()[2];
    let target = |node: usize| belief_in(lambda_star, grid.coord(2, node % np)) >= p_star - 1e-12;
    let hit_index = if belief_in(lambda_star, p0) >= p_star {
        Some(0)
    } else {
        first_hitting_index(&tube, target)
    };
    Ok(ConfidenceTime {
        mode,
        time: hit_index.map(|k| tube.slices()[k].time()),
        hit_index,
        tube,
    })
}

fn central_gradient(field: &LevelSetField, z: &[f64; 3]) -> [f64; 3] {
    let g = field.grid();
    let mut grad = [0.0; 3];
    for (d, out) in grad.iter_mut().enumerate() {
        let h = g.spacing()[d];
        let (mut a, mut b) = (*z, *z);
        a[d] = (z[d] + h).min(g.maxs()[d]);
        b[d] = (z[d] - h).max(g.mins()[d]);
        if a[d] > b[d] {
            *out = (g.interpolate_clamped(field.values(), &a) - g.interpolate_clamped(field.values(), &b)) / (a[d] - b[d]);
        }
    }
    grad
}

/// Extremal action sequence reaching the first hitting node of `ct`.
///
/// Traces back from the hitting node: at each solver step the arg-extremal
/// admissible action for the gradient of the later snapshot is recorded and the
/// joint state is stepped backwards with explicit Euler. The returned
/// sequence is in forward time.
pub fn extract_optimal_controls(
    ct: &ConfidenceTime,
    problem: &PredictionProblem,
    lambda_star: usize,
    p_star: f64,
    delta: f64,
) -> Result<Vec<HumanAction>> {
    let k_hit = ct
        .hit_index
        .ok_or_else(|| Error::NoTrajectory("the confidence target is never reached".into()))?;
    if k_hit == 0 {
        return Ok(Vec::new());
    }
    let grid = ct.tube.grid();
    let np = grid.counts()[2];
    let slice = &ct.tube.slices()[k_hit];
    let node = (0..grid.len())
        .find(|&n| slice.values()[n] <= 0.0 && belief_in(lambda_star, grid.coord(2, n % np)) >= p_star - 1e-12)
        .ok_or_else(|| Error::NoTrajectory("hitting slice has no target node".into()))?;
    let c = grid.node_point(node);
    let mut z = [c[0], c[1], c[2]];
    let ham = JointHamiltonian::new(
        grid,
        &problem.model,
        &problem.params,
        &problem.controls,
        Admissible::Truth { lambda: lambda_star, delta },
        ct.mode,
    )?;
    let (dt, sub) = step_plan(grid, &ham, &problem.solver)?;
    let mut seq = Vec::with_capacity(k_hit * sub);
    for k in (1..=k_hit).rev() {
        let (early, late) = (&ct.tube.slices()[k - 1], &ct.tube.slices()[k]);
        for j in (0..sub).rev() {
            let state = JointState::binary(HumanState::new(z[0], z[1]), z[2].clamp(P_MIN, 1.0 - P_MIN))?;
            let cs = allowable_controls_truth(&state.x, lambda_star, delta, &problem.model, &problem.controls)?;
            // gradient at the end of this step, blended between the bracketing snapshots
            let w = (j + 1) as f64 / sub as f64;
            let (ge, gl) = (central_gradient(early, &z), central_gradient(late, &z));
            let mut grad: Vec<f64> = ge.iter().zip(&gl).map(|(a, b)| (1.0 - w) * a + w * b).collect();
            // round-off components must not break ties between symmetric actions
            let scale = grad.iter().fold(0.0f64, |m, g| m.max(g.abs()));
            grad.iter_mut().filter(|g| g.abs() <= 1e-9 * scale).for_each(|g| *g = 0.0);
            let (_, i) = hamiltonian(&state, &grad, &cs, ct.mode, &problem.model, &problem.params, &problem.controls)?;
            let f = joint_rate(&state, problem.controls.action(i), &problem.model, &problem.params)?;
            for d in 0..3 {
                z[d] = (z[d] - dt * f[d]).clamp(grid.mins()[d], grid.maxs()[d]);
            }
            seq.push(problem.controls.action(i));
        }
    }
    seq.reverse();
    Ok(seq)
}

/// Both confidence times and their extremal action sequences for one
/// hypothesised intent.
pub fn analyze(problem: &PredictionProblem, lambda_star: usize, p_star: f64, delta: f64) -> Result<AnalysisResult> {
    let fast = time_to_confidence(problem, lambda_star, p_star, delta, Mode::Max)?;
    let slow = time_to_confidence(problem, lambda_star, p_star, delta, Mode::Min)?;
    let seq = |ct: &ConfidenceTime| -> Result<Vec<HumanAction>> {
        match ct.hit_index {
            Some(_) => extract_optimal_controls(ct, problem, lambda_star, p_star, delta),
            None => Ok(Vec::new()),
        }
    };
    let grid = problem.joint_grid()?;
    let ham = JointHamiltonian::new(
        &grid,
        &problem.model,
        &problem.params,
        &problem.controls,
        Admissible::Truth { lambda: lambda_star, delta },
        Mode::Max,
    )?;
    let (step, _) = step_plan(&grid, &ham, &problem.solver)?;
    Ok(AnalysisResult {
        lambda_star,
        delta,
        belief_target: p_star,
        t_min: fast.time,
        t_max: slow.time,
        control_seq_max: seq(&fast)?,
        control_seq_min: seq(&slow)?,
        step,
    })
}

/// Combined confidence times over hypotheses: the smallest finite value of
/// each, `None` when no hypothesis has one.
pub fn combine_hypotheses(results: &[(Option<f64>, Option<f64>)]) -> (Option<f64>, Option<f64>) {
    let min_of = |it: &mut dyn Iterator<Item = Option<f64>>| it.flatten().fold(None, |a: Option<f64>, b| Some(a.map_or(b, |a| a.min(b))));
    (
        min_of(&mut results.iter().map(|r| r.0)),
        min_of(&mut results.iter().map(|r| r.1)),
    )
}
