//! Joint human/belief state, its dynamics, and thresholded control sets.
//!
//! For a two-point support the joint state is `z = (h_x, h_y, p1)` and the
//! belief coordinate is kept inside `[P_MIN, 1 - P_MIN]`.

use std::sync::OnceLock;

use serde::{Deserialize, Serialize};

use crate::belief::{bayes_update, belief_departure, binary_rate, Belief, BeliefParams};
use crate::error::{Error, Result};
use crate::grid::{Grid, LevelSetField};
use crate::human::{human_velocity, ControlGrid, HumanAction, HumanState, PolicyModel};
use crate::solver::{semi_lagrangian_by_departures, upwind_term, Hamiltonian};

pub const P_MIN: f64 = 1e-3;

pub use crate::solver::Mode;

#[derive(Debug, Clone, PartialEq)]
pub struct JointState {
    pub x: HumanState,
    b: Belief,
}

impl JointState {
    /// For two-point beliefs `p1` is clamped to `[P_MIN, 1 - P_MIN]`.
    pub fn new(x: HumanState, b: Belief) -> Self {
        let b = if b.len() == 2 {
            let p = b.p1().clamp(P_MIN, 1.0 - P_MIN);
            Belief::binary(p).expect("clamped value is a valid belief")
        } else {
            b
        };
        JointState { x, b }
    }

    pub fn binary(x: HumanState, p1: f64) -> Result<Self> {
        Ok(JointState::new(x, Belief::binary(p1.clamp(0.0, 1.0))?))
    }

    pub fn belief(&self) -> &Belief {
        &self.b
    }

    pub fn p1(&self) -> f64 {
        self.b.p1()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ControlSet {
    members: Vec<usize>,
    delta: f64,
}

impl ControlSet {
    pub fn full(cg: &ControlGrid) -> Self {
        ControlSet {
            members: (0..cg.len()).collect(),
            delta: 0.0,
        }
    }

    /// Indices into a [`ControlGrid`], sorted and deduplicated.
    pub fn from_members(mut members: Vec<usize>, delta: f64) -> Self {
        members.sort_unstable();
        members.dedup();
        ControlSet { members, delta }
    }

    pub fn members(&self) -> &[usize] {
        &self.members
    }

    pub fn delta(&self) -> f64 {
        self.delta
    }

    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }

    pub fn contains(&self, i: usize) -> bool {
        self.members.binary_search(&i).is_ok()
    }

    pub fn is_subset_of(&self, other: &ControlSet) -> bool {
        self.members.iter().all(|&i| other.contains(i))
    }
}

pub fn mixture_likelihood(z: &JointState, u: HumanAction, model: &PolicyModel) -> f64 {
    z.b.probs()
        .iter()
        .enumerate()
        .map(|(l, p)| p * model.likelihood_unchecked(&z.x, u.theta(), l))
        .sum()
}

#[inline]
fn clamp_belief_rate(p1: f64, rate: f64) -> f64 {
    if (p1 <= P_MIN && rate < 0.0) || (p1 >= 1.0 - P_MIN && rate > 0.0) {
        0.0
    } else {
        rate
    }
}

/// `(v_x, v_y, dp_1, ..., dp_{K-1})`; the last belief entry is implied.
pub fn joint_rate(z: &JointState, u: HumanAction, model: &PolicyModel, params: &BeliefParams) -> Result<Vec<f64>> {
    let v = human_velocity(&z.x, u, model);
    let rate = crate::belief::belief_rate(&z.b, &z.x, u, model, params)?;
    let mut out = Vec::with_capacity(1 + rate.len());
    out.extend_from_slice(&v);
    let k = rate.len();
    for (i, r) in rate.into_iter().take(k - 1).enumerate() {
        let r = if k == 2 && i == 0 { clamp_belief_rate(z.p1(), r) } else { r };
        out.push(r);
    }
    Ok(out)
}

fn threshold_set(dens: impl Iterator<Item = f64>, delta: f64) -> Result<ControlSet> {
    if !(delta >= 0.0 && delta.is_finite()) {
        return Err(Error::input(format!("delta must be finite and nonnegative, got {delta}")));
    }
    let mut peak = 0.0f64;
    let mut members = Vec::new();
    for (i, d) in dens.enumerate() {
        peak = peak.max(d);
        if d >= delta {
            members.push(i);
        }
    }
    if members.is_empty() {
        return Err(Error::InfeasibleThreshold { delta, peak });
    }
    Ok(ControlSet { members, delta })
}

/// `{u in cg : P(u | z) >= delta}`.
pub fn allowable_controls_belief(
    z: &JointState,
    delta: f64,
    model: &PolicyModel,
    cg: &ControlGrid,
) -> Result<ControlSet> {
    threshold_set(
        (0..cg.len()).map(|i| mixture_likelihood(z, cg.action(i), model)),
        delta,
    )
}

/// `{u in cg : P(u | x, lambda_star) >= delta}`.
pub fn allowable_controls_truth(
    x: &HumanState,
    lambda_star: usize,
    delta: f64,
    model: &PolicyModel,
    cg: &ControlGrid,
) -> Result<ControlSet> {
    let row = model.likelihood_row(x, lambda_star, cg)?;
    threshold_set(row.into_iter(), delta)
}

/// Extremum of `grad . f(z, u)` over `cs`, with the extremizing grid index.
pub fn hamiltonian(
    z: &JointState,
    grad: &[f64],
    cs: &ControlSet,
    mode: Mode,
    model: &PolicyModel,
    params: &BeliefParams,
    cg: &ControlGrid,
) -> Result<(f64, usize)> {
    if cs.is_empty() {
        return Err(Error::input("hamiltonian over an empty control set"));
    }
    let mut best: Option<(f64, usize)> = None;
    for &i in cs.members() {
        let f = joint_rate(z, cg.action(i), model, params)?;
        if f.len() != grad.len() {
            return Err(Error::input(format!(
                "gradient has {} components, dynamics have {}",
                grad.len(),
                f.len()
            )));
        }
        let h: f64 = f.iter().zip(grad).map(|(a, b)| a * b).sum();
        match best {
            Some((b, _)) if !mode.better(h, b) => {}
            _ => best = Some((h, i)),
        }
    }
    Ok(best.expect("nonempty set"))
}

/// Rule selecting admissible controls at each joint grid node.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Admissible {
    /// Mixture density under the node's belief at least `delta`.
    Belief { delta: f64 },
    /// Density under the fixed intent `lambda` at least `delta`.
    Truth { lambda: usize, delta: f64 },
}

/// Grid-level joint Hamiltonian for a two-point support on a 3-D grid
/// `(h_x, h_y, p1)`.
///
/// Dissipation bounds are taken over the full control grid so that every
/// threshold shares the same numerical viscosity; this keeps reachable sets
/// nested in the threshold.
#[derive(Debug, Clone)]
pub struct JointHamiltonian {
    grid: Grid,
    speed: f64,
    gamma: f64,
    mode: Mode,
    rule: Admissible,
    cos: Vec<f64>,
    sin: Vec<f64>,
    /// Per column: `m` likelihoods of intent 0 then `m` of intent 1.
    lik: Vec<f64>,
    per_column: bool,
    alpha_p: Vec<f64>,
    /// Per-node admissible index lists (CSR) with belief rates.
    offsets: Vec<u32>,
    ctrl: Vec<u8>,
    rates: Vec<f64>,
    /// Snap departure beliefs to the bracketing nodes instead of
    /// interpolating. Snapping keeps thin belief sheets from eroding.
    snap_belief: bool,
    /// Semi-Lagrangian lookup table for the step it was built with.
    sl_table: OnceLock<SlTable>,
}

/// Unused slot in [`SlTable::layers`].
const NO_LAYER: u16 = u16::MAX;

/// Precomputed semi-Lagrangian stencils. Departure beliefs are snapped to the
/// bracketing belief nodes, so each lookup is bilinear in position only.
#[derive(Debug, Clone)]
struct SlTable {
    dt: f64,
    /// Per column and control: lower-left xy node and the four bilinear weights.
    xy: Vec<(u32, [f64; 4])>,
    /// Per admissible node-control pair: belief layers to visit.
    layers: Vec<[u16; 3]>,
}

impl JointHamiltonian {
    pub fn new(
        grid: &Grid,
        model: &PolicyModel,
        params: &BeliefParams,
        cg: &ControlGrid,
        rule: Admissible,
        mode: Mode,
    ) -> Result<Self> {
        if grid.ndim() != 3 {
            return Err(Error::input("joint grid must have axes (h_x, h_y, p1)"));
        }
        if model.support_len() != 2 {
            return Err(Error::input("joint reachability supports a two-point intent support"));
        }
        if cg.len() > u8::MAX as usize + 1 {
            return Err(Error::input("control grid too large for the joint table"));
        }
        let (pmin, pmax) = (grid.mins()[2], grid.maxs()[2]);
        if pmin < P_MIN - 1e-12 || pmax > 1.0 - P_MIN + 1e-12 {
            return Err(Error::input(format!(
                "belief axis [{pmin}, {pmax}] must lie inside [{P_MIN}, {}]",
                1.0 - P_MIN
            )));
        }
        if !params.k.is_zero() {
            return Err(Error::input("joint table only supports the zero intrinsic change"));
        }
        let delta = match rule {
            Admissible::Belief { delta } | Admissible::Truth { delta, .. } => delta,
        };
        if !(delta >= 0.0 && delta.is_finite()) {
            return Err(Error::input(format!("delta must be finite and nonnegative, got {delta}")));
        }
        if let Admissible::Truth { lambda, .. } = rule {
            if lambda >= 2 {
                return Err(Error::input(format!("lambda {lambda} outside support of size 2")));
            }
        }
        let m = cg.len();
        let [nx, ny, np] = [grid.counts()[0], grid.counts()[1], grid.counts()[2]];
        let per_column = model.is_position_dependent();
        let ncol = if per_column { nx * ny } else { 1 };
        let mut lik = Vec::with_capacity(ncol * 2 * m);
        for c in 0..ncol {
            let x = HumanState::new(grid.coord(0, c / ny), grid.coord(1, c % ny));
            for l in 0..2 {
                lik.extend(model.likelihood_row(&x, l, cg)?);
            }
        }

        let mut alpha_p = Vec::with_capacity(grid.len());
        let mut offsets = Vec::with_capacity(grid.len() + 1);
        let mut ctrl = Vec::new();
        let mut rates = Vec::new();
        offsets.push(0u32);
        for node in 0..grid.len() {
            let col = if per_column { node / np } else { 0 };
            let p = grid.coord(2, node % np);
            let (l1, l2) = (&lik[col * 2 * m..col * 2 * m + m], &lik[col * 2 * m + m..(col + 1) * 2 * m]);
            let mut amax = 0.0f64;
            for i in 0..m {
                let r = clamp_belief_rate(p, binary_rate(p, l1[i], l2[i], params.gamma));
                amax = amax.max(r.abs());
                let ok = match rule {
                    Admissible::Belief { delta } => p * l1[i] + (1.0 - p) * l2[i] >= delta,
                    Admissible::Truth { lambda, delta } => [l1[i], l2[i]][lambda] >= delta,
                };
                if ok {
                    ctrl.push(i as u8);
                    rates.push(r);
                }
            }
            alpha_p.push(amax);
            if ctrl.len() > u32::MAX as usize {
                return Err(Error::input("joint table too large"));
            }
            offsets.push(ctrl.len() as u32);
        }
        Ok(JointHamiltonian {
            grid: grid.clone(),
            speed: model.speed(),
            gamma: params.gamma,
            mode,
            rule,
            cos: cg.cos().to_vec(),
            sin: cg.sin().to_vec(),
            lik,
            per_column,
            alpha_p,
            offsets,
            ctrl,
            rates,
            snap_belief: true,
            sl_table: OnceLock::new(),
        })
    }

    /// Interpolate linearly along the belief axis in semi-Lagrangian steps.
    /// Exact for fields affine in the belief, such as half-spaces.
    pub fn with_linear_belief(mut self) -> Self {
        self.snap_belief = false;
        self
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn mode(&self) -> Mode {
        self.mode
    }

    pub fn rule(&self) -> Admissible {
        self.rule
    }

    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    /// Admissible control indices at a node.
    pub fn admissible(&self, node: usize) -> &[u8] {
        &self.ctrl[self.offsets[node] as usize..self.offsets[node + 1] as usize]
    }

    /// Likelihoods `(l1, l2)` of grid control `i` at the column of `node`.
    pub fn likelihoods(&self, node: usize, i: usize) -> (f64, f64) {
        let m = self.cos.len();
        let col = if self.per_column { node / self.grid.counts()[2] } else { 0 };
        (self.lik[col * 2 * m + i], self.lik[col * 2 * m + m + i])
    }

    /// Belief layers reached by the departure of pair `k` at `node`: the two
    /// nodes bracketing the exact departure belief, plus the node itself when
    /// the clamp holds an edge belief in place.
    fn departure_layers(&self, node: usize, k: usize, dt: f64) -> [u16; 3] {
        let np = self.grid.counts()[2];
        let jp = node % np;
        let pd = self.departure_belief(node, k, dt);
        let held_at_edge = self.held_at_edge(node, k, pd);
        let f = ((pd - self.grid.mins()[2]) / self.grid.spacing()[2]).clamp(0.0, (np - 1) as f64);
        let j0 = f.floor() as usize;
        let j1 = if f - j0 as f64 > 1e-9 { (j0 + 1).min(np - 1) } else { j0 };
        let mut out = [j0 as u16, NO_LAYER, NO_LAYER];
        if j1 != j0 {
            out[1] = j1 as u16;
        }
        if held_at_edge && jp != j0 && jp != j1 {
            out[2] = jp as u16;
        }
        out
    }

    fn departure_belief(&self, node: usize, k: usize, dt: f64) -> f64 {
        let p = self.grid.coord(2, node % self.grid.counts()[2]);
        let (l1, l2) = self.likelihoods(node, self.ctrl[k] as usize);
        belief_departure(p, l1, l2, self.gamma, dt)
    }

    /// Whether the clamp holds an edge belief in place against the flow.
    fn held_at_edge(&self, node: usize, k: usize, pd: f64) -> bool {
        let p = self.grid.coord(2, node % self.grid.counts()[2]);
        self.rates[k] == 0.0 && ((p <= P_MIN + 1e-12 && pd > p) || (p >= 1.0 - P_MIN - 1e-12 && pd < p))
    }

    fn xy_departure(&self, node: usize, i: usize, dt: f64) -> [f64; 2] {
        let np = self.grid.counts()[2];
        let ny = self.grid.counts()[1];
        let col = node / np;
        let (x, y) = (self.grid.coord(0, col / ny), self.grid.coord(1, col % ny));
        [x - dt * self.speed * self.cos[i], y - dt * self.speed * self.sin[i]]
    }

    fn sl_table(&self, dt: f64) -> Option<&SlTable> {
        let t = self.sl_table.get_or_init(|| {
            let (nx, ny, np) = (self.grid.counts()[0], self.grid.counts()[1], self.grid.counts()[2]);
            let m = self.cos.len();
            let mut xy = Vec::with_capacity(nx * ny * m);
            for col in 0..nx * ny {
                for i in 0..m {
                    let d = self.xy_departure(col * np, i, dt);
                    let mut base = [0usize; 2];
                    let mut frac = [0.0; 2];
                    for a in 0..2 {
                        let n = self.grid.counts()[a];
                        let t = ((d[a] - self.grid.mins()[a]) / self.grid.spacing()[a]).clamp(0.0, (n - 1) as f64);
                        base[a] = (t.floor() as usize).min(n - 2);
                        frac[a] = t - base[a] as f64;
                    }
                    let (fx, fy) = (frac[0], frac[1]);
                    let w = [(1.0 - fx) * (1.0 - fy), fx * (1.0 - fy), (1.0 - fx) * fy, fx * fy];
                    xy.push(((base[0] * ny + base[1]) as u32, w));
                }
            }
            let layers = (0..self.grid.len())
                .flat_map(|node| {
                    (self.offsets[node] as usize..self.offsets[node + 1] as usize)
                        .map(move |k| self.departure_layers(node, k, dt))
                })
                .collect();
            SlTable { dt, xy, layers }
        });
        (t.dt == dt).then_some(t)
    }

    /// Extremal value and control index at a node; `None` when no control is
    /// admissible there.
    pub fn extremum(&self, node: usize, grad: &[f64]) -> Option<(f64, usize)> {
        let lo = self.offsets[node] as usize;
        let hi = self.offsets[node + 1] as usize;
        let (gx, gy, gp) = (grad[0] * self.speed, grad[1] * self.speed, grad[2]);
        let mut best: Option<(f64, usize)> = None;
        for k in lo..hi {
            let i = self.ctrl[k] as usize;
            let h = gx * self.cos[i] + gy * self.sin[i] + gp * self.rates[k];
            match best {
                Some((b, _)) if !self.mode.better(h, b) => {}
                _ => best = Some((h, i)),
            }
        }
        best
    }
}

impl Hamiltonian for JointHamiltonian {
    fn ndim(&self) -> usize {
        3
    }

    fn value(&self, node: usize, grad: &[f64]) -> f64 {
        self.extremum(node, grad).map_or(0.0, |(h, _)| h)
    }

    fn dissipation(&self, node: usize, out: &mut [f64]) {
        out[0] = self.speed;
        out[1] = self.speed;
        out[2] = self.alpha_p[node];
    }

    fn mode(&self) -> Mode {
        self.mode
    }

    fn departures(&self, node: usize, dt: f64, visit: &mut dyn FnMut(&[f64])) -> Option<()> {
        for k in self.offsets[node] as usize..self.offsets[node + 1] as usize {
            let [xd, yd] = self.xy_departure(node, self.ctrl[k] as usize, dt);
            if !self.snap_belief {
                let pd = self.departure_belief(node, k, dt);
                visit(&[xd, yd, pd]);
                if self.held_at_edge(node, k, pd) {
                    visit(&[xd, yd, self.grid.coord(2, node % self.grid.counts()[2])]);
                }
                continue;
            }
            for j in self.departure_layers(node, k, dt) {
                if j != NO_LAYER {
                    visit(&[xd, yd, self.grid.coord(2, j as usize)]);
                }
            }
        }
        Some(())
    }

    fn semi_lagrangian(&self, grid: &Grid, node: usize, dt: f64, values: &[f64]) -> Option<f64> {
        let Some(t) = self.snap_belief.then(|| self.sl_table(dt)).flatten() else {
            return semi_lagrangian_by_departures(self, grid, node, dt, values);
        };
        let (ny, np) = (self.grid.counts()[1], self.grid.counts()[2]);
        let m = self.cos.len();
        let col = node / np;
        let mut best: Option<f64> = None;
        for k in self.offsets[node] as usize..self.offsets[node + 1] as usize {
            let (b, w) = t.xy[col * m + self.ctrl[k] as usize];
            let c = [b as usize, b as usize + ny, b as usize + 1, b as usize + ny + 1];
            for j in t.layers[k] {
                if j == NO_LAYER {
                    continue;
                }
                let j = j as usize;
                let val: f64 = (0..4).map(|q| w[q] * values[c[q] * np + j]).sum();
                if best.is_none_or(|b| self.mode.better(b, val)) {
                    best = Some(val);
                }
            }
        }
        best
    }

    fn upwind(&self, node: usize, dm: &[f64], dp: &[f64]) -> Option<f64> {
        let lo = self.offsets[node] as usize;
        let hi = self.offsets[node + 1] as usize;
        if lo == hi {
            return Some(0.0);
        }
        let mut best = match self.mode {
            Mode::Max => f64::NEG_INFINITY,
            Mode::Min => f64::INFINITY,
        };
        for k in lo..hi {
            let i = self.ctrl[k] as usize;
            let h = upwind_term(self.speed * self.cos[i], dm[0], dp[0])
                + upwind_term(self.speed * self.sin[i], dm[1], dp[1])
                + upwind_term(self.rates[k], dm[2], dp[2]);
            if self.mode.better(h, best) {
                best = h;
            }
        }
        Some(best)
    }
}

/// `max(|x - c| - r0, |p1 - p0| - w)`: a disc in position times a belief
/// interval around `p0`.
pub fn joint_initial_set(grid: &Grid, center: [f64; 2], r0: f64, p0: f64, half_width: f64) -> Result<LevelSetField> {
    if grid.ndim() != 3 {
        return Err(Error::input("joint grid must be 3-D"));
    }
    if !grid.contains(&[center[0], center[1], p0]) {
        return Err(Error::input(format!("initial state ({}, {}, {p0}) outside the joint grid", center[0], center[1])));
    }
    if r0 <= 0.0 || half_width < 0.0 {
        return Err(Error::input("initial radius must be positive"));
    }
    LevelSetField::from_fn(grid.clone(), 0.0, |z| {
        let d = (z[0] - center[0]).hypot(z[1] - center[1]) - r0;
        d.max((z[2] - p0).abs() - half_width)
    })
}

/// Belief half-space `p1 - p0 <= 0` (or `p0 - p1 <= 0` when `upper`), free in position.
pub fn belief_halfspace(grid: &Grid, p0: f64, upper: bool) -> Result<LevelSetField> {
    if grid.ndim() != 3 {
        return Err(Error::input("joint grid must be 3-D"));
    }
    LevelSetField::from_fn(grid.clone(), 0.0, |z| if upper { p0 - z[2] } else { z[2] - p0 })
}

/// Propagates a joint state by one explicit Euler step under grid control `i`.
pub fn euler_step(
    z: &JointState,
    i: usize,
    dt: f64,
    model: &PolicyModel,
    params: &BeliefParams,
    cg: &ControlGrid,
) -> Result<JointState> {
    let f = joint_rate(z, cg.action(i), model, params)?;
    let x = HumanState::new(z.x.x + dt * f[0], z.x.y + dt * f[1]);
    let p = (z.p1() + dt * f[2]).clamp(P_MIN, 1.0 - P_MIN);
    JointState::binary(x, p)
}

/// Discrete posterior after observing grid control `i` at `z`.
pub fn observe(z: &JointState, i: usize, model: &PolicyModel, cg: &ControlGrid) -> Result<Belief> {
    bayes_update(z.belief(), &z.x, cg.action(i), model)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::human::PolicyVariant;
    use std::f64::consts::{FRAC_PI_4, PI, TAU};

    fn straight(v: f64) -> PolicyModel {
        PolicyModel::new(PolicyVariant::StraightOrRandom { sigma: 0.1 }, v, &ControlGrid::default()).unwrap()
    }

    fn running() -> PolicyModel {
        PolicyModel::new(
            PolicyVariant::GaussianGoal {
                goals: vec![[2.0, 2.0], [2.0, -2.0]],
                sigmas: vec![FRAC_PI_4, FRAC_PI_4],
            },
            0.6,
            &ControlGrid::default(),
        )
        .unwrap()
    }

    #[test]
    fn degenerate_mixtures() {
        let m = running();
        let x = HumanState::new(0.2, -0.1);
        let z = JointState::new(x, Belief::new(vec![1.0, 0.0]).unwrap());
        let u = HumanAction::new(0.4);
        // clamped to 1 - P_MIN
        let l1 = m.likelihood(&x, u, 0).unwrap();
        let l2 = m.likelihood(&x, u, 1).unwrap();
        let want = (1.0 - P_MIN) * l1 + P_MIN * l2;
        assert!((mixture_likelihood(&z, u, &m) - want).abs() < 1e-15);
        let same = PolicyModel::new(
            PolicyVariant::GaussianGoal {
                goals: vec![[2.0, 2.0], [2.0, 2.0]],
                sigmas: vec![0.5, 0.5],
            },
            0.6,
            &ControlGrid::default(),
        )
        .unwrap();
        let z = JointState::binary(x, 0.5).unwrap();
        assert!((mixture_likelihood(&z, u, &same) - same.likelihood(&x, u, 0).unwrap()).abs() < 1e-15);
    }

    #[test]
    fn rate_examples() {
        let m = straight(1.0);
        let z = JointState::binary(HumanState::new(0.0, 0.0), 0.3).unwrap();
        let f = joint_rate(&z, HumanAction::new(0.0), &m, &BeliefParams::new(0.0).unwrap()).unwrap();
        assert_eq!(f, vec![1.0, 0.0, 0.0]);
        let f = joint_rate(&z, HumanAction::new(PI / 3.0), &m.clone().with_speed(0.5), &BeliefParams::new(0.0).unwrap()).unwrap();
        assert!((f[0] - 0.25).abs() < 1e-15 && (f[1] - 0.5 * (PI / 3.0).sin()).abs() < 1e-15 && f[2] == 0.0);
    }

    #[test]
    fn threshold_examples() {
        let cg = ControlGrid::default();
        let m = straight(1.0);
        let z = JointState::binary(HumanState::new(0.0, 0.0), 0.0).unwrap();
        assert_eq!(allowable_controls_belief(&z, 0.0, &m, &cg).unwrap().len(), 72);
        // p1 clamps to P_MIN, the mixture stays above the uniform level times 1 - P_MIN
        let below = (1.0 - P_MIN) / TAU;
        assert_eq!(allowable_controls_belief(&z, below, &m, &cg).unwrap().len(), 72);
        let x = HumanState::new(0.0, 0.0);
        assert_eq!(allowable_controls_truth(&x, 1, 1.0 / TAU, &m, &cg).unwrap().len(), 72);
        match allowable_controls_truth(&x, 1, 0.3, &m, &cg) {
            Err(Error::InfeasibleThreshold { peak, .. }) => assert!((peak - 1.0 / TAU).abs() < 1e-12),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn narrow_band_edge_is_ten_degrees() {
        let cg = ControlGrid::default();
        let m = straight(1.0);
        let cs = allowable_controls_truth(&HumanState::new(0.0, 0.0), 0, 0.3, &m, &cg).unwrap();
        let edge = cs.members().iter().map(|&i| cg.angle(i).abs()).fold(0.0, f64::max);
        assert!((edge.to_degrees() - 10.0).abs() < 1e-9, "{}", edge.to_degrees());
        assert_eq!(cs.len(), 5);
    }

    #[test]
    fn hamiltonian_examples() {
        let cg = ControlGrid::default();
        let m = straight(1.0);
        let p = BeliefParams::new(0.0).unwrap();
        let z = JointState::binary(HumanState::new(0.0, 0.0), 0.5).unwrap();
        let full = ControlSet::full(&cg);
        let (h, i) = hamiltonian(&z, &[1.0, 0.0, 0.0], &full, Mode::Max, &m, &p, &cg).unwrap();
        assert!((h - 1.0).abs() < 1e-15 && cg.angle(i) == 0.0);
        let (h, i) = hamiltonian(&z, &[1.0, 0.0, 0.0], &full, Mode::Min, &m, &p, &cg).unwrap();
        assert!((h + 1.0).abs() < 1e-15 && cg.angle(i) == PI);
    }

    #[test]
    fn table_matches_pointwise_hamiltonian() {
        let cg = ControlGrid::default();
        let m = running();
        let params = BeliefParams::new(4.0).unwrap();
        let grid = Grid::new(vec![-1.0, -1.0, 0.05], vec![1.0, 1.0, 0.95], vec![5, 5, 7]).unwrap();
        for mode in [Mode::Max, Mode::Min] {
            let table = JointHamiltonian::new(&grid, &m, &params, &cg, Admissible::Belief { delta: 0.2 }, mode).unwrap();
            for node in (0..grid.len()).step_by(7) {
                let c = grid.node_point(node);
                let z = JointState::binary(HumanState::new(c[0], c[1]), c[2]).unwrap();
                let grad = [0.3, -1.1, 2.5];
                let cs = allowable_controls_belief(&z, 0.2, &m, &cg).unwrap();
                let (h, i) = hamiltonian(&z, &grad, &cs, mode, &m, &params, &cg).unwrap();
                let (ht, it) = table.extremum(node, &grad).unwrap();
                assert!((h - ht).abs() < 1e-12, "{h} vs {ht}");
                assert_eq!(i, it);
            }
        }
    }

    #[test]
    fn semi_lagrangian_table_matches_departures() {
        let cg = ControlGrid::default();
        let m = running();
        let params = BeliefParams::new(10.0).unwrap();
        let grid = Grid::new(vec![-1.0, -1.0, P_MIN], vec![1.0, 1.0, 1.0 - P_MIN], vec![9, 9, 11]).unwrap();
        let values: Vec<f64> = (0..grid.len()).map(|n| ((n * 37) % 101) as f64 / 50.0 - 1.0).collect();
        for mode in [Mode::Max, Mode::Min] {
            let h = JointHamiltonian::new(&grid, &m, &params, &cg, Admissible::Belief { delta: 0.1 }, mode).unwrap();
            for node in 0..grid.len() {
                let fast = h.semi_lagrangian(&grid, node, 0.1, &values);
                let slow = semi_lagrangian_by_departures(&h, &grid, node, 0.1, &values);
                match (fast, slow) {
                    (Some(a), Some(b)) => assert!((a - b).abs() < 1e-12, "{node}: {a} vs {b}"),
                    (a, b) => assert_eq!(a, b),
                }
            }
        }
    }

    #[test]
    fn edge_belief_is_held_by_the_clamp() {
        let cg = ControlGrid::default();
        let m = running();
        let params = BeliefParams::new(10.0).unwrap();
        let grid = Grid::new(vec![-1.0, -1.0, P_MIN], vec![1.0, 1.0, 1.0 - P_MIN], vec![5, 5, 11]).unwrap();
        let h = JointHamiltonian::new(&grid, &m, &params, &cg, Admissible::Belief { delta: 0.0 }, Mode::Max).unwrap();
        // bottom edge node at the center column
        let node = (2 * 5 + 2) * 11;
        let mut layers = Vec::new();
        h.departures(node, 0.1, &mut |p| layers.push(p[2])).unwrap();
        assert!(layers.contains(&P_MIN));
    }
}
