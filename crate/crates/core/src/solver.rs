//! Explicit Lax-Friedrichs solver for `D_t V + H(z, grad V) = 0`.
//!
//! Each step evaluates one-sided differences `p-` and `p+` per axis, forms
//! `H((p- + p+)/2) - sum_d alpha_d (p+_d - p-_d) / 2` and advances with forward
//! Euler or TVD-RK2. Grid faces use linear extrapolation of `V`.
//!
//! Hamiltonians that are an extremum of linear dynamics over a finite control
//! set may also use the upwind flux `ext_u sum_d (f+_d p-_d + f-_d p+_d)`,
//! which is monotone with first-order differences and forward Euler.
//!
//! The semi-Lagrangian method instead sets `V(t + dt, z)` to the extremum over
//! controls of `V(t, .)` interpolated at the departure point of the
//! characteristic ending at `z`. It is monotone for any step.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{Grid, LevelSetField, ReachTube, MAX_DIMS};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Mode {
    Max,
    Min,
}

impl Mode {
    /// Whether `a` strictly improves on `b` under this mode.
    #[inline]
    pub fn better(self, a: f64, b: f64) -> bool {
        match self {
            Mode::Max => a > b,
            Mode::Min => a < b,
        }
    }
}

/// Per-node Hamiltonian evaluated at a centered gradient.
pub trait Hamiltonian {
    fn ndim(&self) -> usize;

    fn value(&self, node: usize, grad: &[f64]) -> f64;

    /// Bounds `alpha_d >= |dH/dp_d|` at `node`.
    fn dissipation(&self, node: usize, out: &mut [f64]);

    /// Upwind numerical Hamiltonian from one-sided differences, if supported.
    fn upwind(&self, _node: usize, _dm: &[f64], _dp: &[f64]) -> Option<f64> {
        None
    }

    /// Whether the Hamiltonian maximizes or minimizes over controls.
    fn mode(&self) -> Mode {
        Mode::Max
    }

    /// Visits departure points of characteristics reaching `node` after `dt`,
    /// one per admissible control. `None` if unsupported.
    fn departures(&self, _node: usize, _dt: f64, _visit: &mut dyn FnMut(&[f64])) -> Option<()> {
        None
    }

    /// Semi-Lagrangian update of `node` from the previous `values`; `None`
    /// keeps the old value (no admissible control).
    fn semi_lagrangian(&self, grid: &Grid, node: usize, dt: f64, values: &[f64]) -> Option<f64> {
        semi_lagrangian_by_departures(self, grid, node, dt, values)
    }
}

/// Extremum of interpolated upstream values over the departure points. A
/// maximizing Hamiltonian pulls in the smallest value.
pub fn semi_lagrangian_by_departures<H: Hamiltonian + ?Sized>(
    ham: &H,
    grid: &Grid,
    node: usize,
    dt: f64,
    values: &[f64],
) -> Option<f64> {
    let mode = ham.mode();
    let mut best: Option<f64> = None;
    ham.departures(node, dt, &mut |p| {
        let w = grid.interpolate_clamped(values, p);
        if best.is_none_or(|b| mode.better(b, w)) {
            best = Some(w);
        }
    })?;
    best
}

#[inline]
pub(crate) fn upwind_term(f: f64, dm: f64, dp: f64) -> f64 {
    if f > 0.0 {
        f * dm
    } else {
        f * dp
    }
}

/// Hamiltonian built from closures, for ad hoc dynamics.
pub struct FnHamiltonian<H, A> {
    ndim: usize,
    value: H,
    alpha: A,
}

impl<H, A> FnHamiltonian<H, A>
where
    H: Fn(usize, &[f64]) -> f64,
    A: Fn(usize, &mut [f64]),
{
    pub fn new(ndim: usize, value: H, alpha: A) -> Self {
        FnHamiltonian { ndim, value, alpha }
    }
}

impl<H, A> Hamiltonian for FnHamiltonian<H, A>
where
    H: Fn(usize, &[f64]) -> f64,
    A: Fn(usize, &mut [f64]),
{
    fn ndim(&self) -> usize {
        self.ndim
    }

    fn value(&self, node: usize, grad: &[f64]) -> f64 {
        (self.value)(node, grad)
    }

    fn dissipation(&self, node: usize, out: &mut [f64]) {
        (self.alpha)(node, out)
    }
}

/// Planar constant-speed motion over a fixed set of headings:
/// `H = max_theta v (g_x cos theta + g_y sin theta)`.
#[derive(Debug, Clone)]
pub struct PlanarHamiltonian {
    grid: Grid,
    speed: f64,
    cos: Vec<f64>,
    sin: Vec<f64>,
    alpha: [f64; 2],
}

impl PlanarHamiltonian {
    pub fn new(grid: &Grid, speed: f64, headings: &[f64]) -> Result<Self> {
        if grid.ndim() != 2 {
            return Err(Error::input("planar hamiltonian needs a 2-D grid"));
        }
        if headings.is_empty() {
            return Err(Error::input("planar hamiltonian needs at least one heading"));
        }
        let cos: Vec<f64> = headings.iter().map(|h| h.cos()).collect();
        let sin: Vec<f64> = headings.iter().map(|h| h.sin()).collect();
        let ax = speed * cos.iter().fold(0.0f64, |a, c| a.max(c.abs()));
        let ay = speed * sin.iter().fold(0.0f64, |a, s| a.max(s.abs()));
        Ok(PlanarHamiltonian {
            grid: grid.clone(),
            speed,
            cos,
            sin,
            alpha: [ax, ay],
        })
    }

    /// Same headings but dissipation `speed` on both axes.
    pub fn with_isotropic_dissipation(mut self) -> Self {
        self.alpha = [self.speed; 2];
        self
    }
}

impl Hamiltonian for PlanarHamiltonian {
    fn ndim(&self) -> usize {
        2
    }

    fn value(&self, _node: usize, grad: &[f64]) -> f64 {
        let (gx, gy) = (grad[0] * self.speed, grad[1] * self.speed);
        self.cos
            .iter()
            .zip(&self.sin)
            .map(|(c, s)| gx * c + gy * s)
            .fold(f64::NEG_INFINITY, f64::max)
    }

    fn dissipation(&self, _node: usize, out: &mut [f64]) {
        out[..2].copy_from_slice(&self.alpha);
    }

    fn departures(&self, node: usize, dt: f64, visit: &mut dyn FnMut(&[f64])) -> Option<()> {
        let z = self.grid.node_point(node);
        for (c, s) in self.cos.iter().zip(&self.sin) {
            visit(&[z[0] - dt * self.speed * c, z[1] - dt * self.speed * s]);
        }
        Some(())
    }

    fn upwind(&self, _node: usize, dm: &[f64], dp: &[f64]) -> Option<f64> {
        let mut best = f64::NEG_INFINITY;
        for (c, s) in self.cos.iter().zip(&self.sin) {
            let h = upwind_term(self.speed * c, dm[0], dp[0]) + upwind_term(self.speed * s, dm[1], dp[1]);
            best = best.max(h);
        }
        Some(best)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Integrator {
    Euler,
    Rk2,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Flux {
    LaxFriedrichs,
    Upwind,
    SemiLagrangian,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Dissipation {
    /// Per-node bounds.
    Local,
    /// Per-axis maximum of the node bounds.
    Global,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SolverConfig {
    pub cfl: f64,
    /// Spatial order: 1 upwind, 2 ENO.
    pub scheme: u8,
    pub integrator: Integrator,
    pub dissipation: Dissipation,
    pub flux: Flux,
    pub horizon: f64,
    pub snapshot_dt: f64,
    /// Optional cap on the internal step, used to share steps across solves.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub max_step: Option<f64>,
}

impl Default for SolverConfig {
    fn default() -> Self {
        SolverConfig {
            cfl: 0.5,
            scheme: 1,
            integrator: Integrator::Euler,
            dissipation: Dissipation::Local,
            flux: Flux::LaxFriedrichs,
            horizon: 2.0,
            snapshot_dt: 0.1,
            max_step: None,
        }
    }
}

impl SolverConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.cfl > 0.0 && self.cfl <= 1.0) {
            return Err(Error::config(format!("cfl must lie in (0, 1], got {}", self.cfl)));
        }
        if !(self.scheme == 1 || self.scheme == 2) {
            return Err(Error::config(format!("scheme must be 1 or 2, got {}", self.scheme)));
        }
        if !(self.snapshot_dt > 0.0 && self.snapshot_dt.is_finite()) {
            return Err(Error::config(format!("snapshot_dt must be positive, got {}", self.snapshot_dt)));
        }
        if !(self.horizon >= 0.0 && self.horizon.is_finite()) {
            return Err(Error::config(format!("horizon must be nonnegative, got {}", self.horizon)));
        }
        let n = (self.horizon / self.snapshot_dt).round();
        if (n * self.snapshot_dt - self.horizon).abs() > 1e-9 * self.horizon.max(1.0) {
            return Err(Error::config(format!(
                "horizon {} is not a multiple of snapshot_dt {}",
                self.horizon, self.snapshot_dt
            )));
        }
        if self.flux != Flux::LaxFriedrichs && (self.scheme != 1 || self.integrator != Integrator::Euler) {
            return Err(Error::config("upwind and semi-lagrangian steps require scheme 1 with euler steps"));
        }
        if let Some(s) = self.max_step {
            if !(s > 0.0 && s.is_finite()) {
                return Err(Error::config(format!("max_step must be positive, got {s}")));
            }
        }
        Ok(())
    }

    pub fn snapshot_count(&self) -> usize {
        (self.horizon / self.snapshot_dt).round() as usize
    }
}

struct Stencil {
    counts: Vec<usize>,
    strides: Vec<usize>,
    inv: Vec<f64>,
    spacing: Vec<f64>,
    scheme: u8,
}

impl Stencil {
    fn new(grid: &Grid, scheme: u8) -> Self {
        Stencil {
            counts: grid.counts().to_vec(),
            strides: grid.strides().to_vec(),
            inv: grid.spacing().iter().map(|h| 1.0 / h).collect(),
            spacing: grid.spacing().to_vec(),
            scheme,
        }
    }

    /// Value at offset `k` along axis `d` with linear extrapolation past the faces.
    #[inline]
    fn at(&self, v: &[f64], node: usize, pos: usize, d: usize, k: isize) -> f64 {
        let n = self.counts[d] as isize;
        let s = self.strides[d] as isize;
        let j = pos as isize + k;
        if j >= 0 && j < n {
            return v[(node as isize + k * s) as usize];
        }
        let (b0, b1, e) = if j < 0 {
            let base = node as isize - pos as isize * s;
            (base, base + s, -j)
        } else {
            let base = node as isize + (n - 1 - pos as isize) * s;
            (base, base - s, j - (n - 1))
        };
        let v0 = v[b0 as usize];
        let v1 = v[b1 as usize];
        v0 + e as f64 * (v0 - v1)
    }

    /// One-sided derivatives `(p-, p+)` along axis `d`.
    #[inline]
    fn one_sided(&self, v: &[f64], node: usize, pos: usize, d: usize) -> (f64, f64) {
        let c = v[node];
        let l = self.at(v, node, pos, d, -1);
        let r = self.at(v, node, pos, d, 1);
        let mut dm = (c - l) * self.inv[d];
        let mut dp = (r - c) * self.inv[d];
        if self.scheme == 2 {
            let l2 = self.at(v, node, pos, d, -2);
            let r2 = self.at(v, node, pos, d, 2);
            let h = self.spacing[d];
            let i2 = self.inv[d] * self.inv[d];
            let d2l = (c - 2.0 * l + l2) * i2;
            let d2c = (r - 2.0 * c + l) * i2;
            let d2r = (r2 - 2.0 * r + c) * i2;
            let pick = |a: f64, b: f64| if a.abs() <= b.abs() { a } else { b };
            dm += 0.5 * h * pick(d2l, d2c);
            dp -= 0.5 * h * pick(d2c, d2r);
        }
        (dm, dp)
    }
}

struct Workspace {
    alpha: Vec<f64>,
    ndim: usize,
    flux: Flux,
}

fn rhs<H: Hamiltonian + ?Sized>(st: &Stencil, ham: &H, ws: &Workspace, v: &[f64], out: &mut [f64]) {
    let nd = ws.ndim;
    let mut pos = [0usize; MAX_DIMS];
    let mut grad = [0.0f64; MAX_DIMS];
    let mut dms = [0.0f64; MAX_DIMS];
    let mut dps = [0.0f64; MAX_DIMS];
    for node in 0..v.len() {
        if ws.flux == Flux::Upwind {
            for d in 0..nd {
                (dms[d], dps[d]) = st.one_sided(v, node, pos[d], d);
            }
            out[node] = -ham.upwind(node, &dms[..nd], &dps[..nd]).unwrap_or(f64::NAN);
        } else {
            let mut diss = 0.0;
            let a = &ws.alpha[node * nd..(node + 1) * nd];
            for d in 0..nd {
                let (dm, dp) = st.one_sided(v, node, pos[d], d);
                grad[d] = 0.5 * (dm + dp);
                diss += a[d] * 0.5 * (dp - dm);
            }
            out[node] = -(ham.value(node, &grad[..nd]) - diss);
        }
        // advance the row-major counter, last axis fastest
        for d in (0..nd).rev() {
            pos[d] += 1;
            if pos[d] < st.counts[d] {
                break;
            }
            pos[d] = 0;
        }
    }
}

/// Internal step and substeps per snapshot for a Hamiltonian on a grid.
pub fn step_plan<H: Hamiltonian + ?Sized>(grid: &Grid, ham: &H, config: &SolverConfig) -> Result<(f64, usize)> {
    config.validate()?;
    if config.flux == Flux::SemiLagrangian {
        let dt = config.max_step.map_or(config.snapshot_dt, |s| s.min(config.snapshot_dt));
        let sub = ((config.snapshot_dt / dt) * (1.0 - 1e-12)).ceil().max(1.0) as usize;
        return Ok((config.snapshot_dt / sub as f64, sub));
    }
    let nd = grid.ndim();
    let mut a = vec![0.0; nd];
    let mut rate = 0.0f64;
    for node in 0..grid.len() {
        ham.dissipation(node, &mut a);
        let r: f64 = a.iter().zip(grid.spacing()).map(|(a, h)| a / h).sum();
        rate = rate.max(r);
    }
    let mut dt = if rate > 0.0 { config.cfl / rate } else { config.snapshot_dt };
    if let Some(s) = config.max_step {
        dt = dt.min(s);
    }
    let sub = ((config.snapshot_dt / dt) * (1.0 - 1e-12)).ceil().max(1.0) as usize;
    Ok((config.snapshot_dt / sub as f64, sub))
}

/// Evolves `init` and returns snapshots at multiples of `snapshot_dt` up to the horizon.
pub fn evolve<H: Hamiltonian + ?Sized>(init: &LevelSetField, ham: &H, config: &SolverConfig) -> Result<ReachTube> {
    config.validate()?;
    let grid = init.grid();
    if ham.ndim() != grid.ndim() {
        return Err(Error::input(format!(
            "hamiltonian has {} axes, grid has {}",
            ham.ndim(),
            grid.ndim()
        )));
    }
    let nd = grid.ndim();
    let mut alpha = vec![0.0; grid.len() * nd];
    for node in 0..grid.len() {
        ham.dissipation(node, &mut alpha[node * nd..(node + 1) * nd]);
    }
    if config.dissipation == Dissipation::Global {
        let mut m = vec![0.0f64; nd];
        for chunk in alpha.chunks(nd) {
            for d in 0..nd {
                m[d] = m[d].max(chunk[d]);
            }
        }
        for chunk in alpha.chunks_mut(nd) {
            chunk.copy_from_slice(&m);
        }
    }
    if alpha.iter().any(|a| !(a.is_finite() && *a >= 0.0)) {
        return Err(Error::input("dissipation bounds must be finite and nonnegative"));
    }
    if config.flux == Flux::SemiLagrangian {
        return evolve_semi_lagrangian(init, ham, config);
    }
    if config.flux == Flux::Upwind && ham.upwind(0, &vec![0.0; nd], &vec![0.0; nd]).is_none() {
        return Err(Error::config("hamiltonian does not provide an upwind flux"));
    }
    let ws = Workspace {
        alpha,
        ndim: nd,
        flux: config.flux,
    };
    let (dt, sub) = step_plan(grid, ham, config)?;
    let st = Stencil::new(grid, config.scheme);

    let t0 = init.time();
    let n_snap = config.snapshot_count();
    let mut slices = Vec::with_capacity(n_snap + 1);
    slices.push(init.clone());
    let mut v = init.values().to_vec();
    let mut k1 = vec![0.0; v.len()];
    let mut stage = vec![0.0; v.len()];
    let mut step = 0usize;
    for s in 1..=n_snap {
        for _ in 0..sub {
            step += 1;
            rhs(&st, ham, &ws, &v, &mut k1);
            match config.integrator {
                Integrator::Euler => {
                    for (vi, ki) in v.iter_mut().zip(&k1) {
                        *vi += dt * ki;
                    }
                }
                Integrator::Rk2 => {
                    for ((si, vi), ki) in stage.iter_mut().zip(&v).zip(&k1) {
                        *si = vi + dt * ki;
                    }
                    rhs(&st, ham, &ws, &stage, &mut k1);
                    for ((vi, si), ki) in v.iter_mut().zip(&stage).zip(&k1) {
                        *vi = 0.5 * (*vi + si + dt * ki);
                    }
                }
            }
            if v.iter().any(|x| !x.is_finite()) {
                return Err(Error::NumericalBlowup { step });
            }
        }
        slices.push(LevelSetField::from_parts(grid.clone(), v.clone(), t0 + s as f64 * config.snapshot_dt));
    }
    ReachTube::new(slices, config.snapshot_dt)
}

fn evolve_semi_lagrangian<H: Hamiltonian + ?Sized>(
    init: &LevelSetField,
    ham: &H,
    config: &SolverConfig,
) -> Result<ReachTube> {
    let grid = init.grid();
    let (dt, sub) = step_plan(grid, ham, config)?;
    if ham.departures(0, dt, &mut |_| {}).is_none() {
        return Err(Error::config("hamiltonian does not provide departure points"));
    }
    let t0 = init.time();
    let n_snap = config.snapshot_count();
    let mut slices = Vec::with_capacity(n_snap + 1);
    slices.push(init.clone());
    let mut v = init.values().to_vec();
    let mut next = vec![0.0; v.len()];
    let mut step = 0usize;
    for s in 1..=n_snap {
        for _ in 0..sub {
            step += 1;
            for (node, out) in next.iter_mut().enumerate() {
                *out = ham.semi_lagrangian(grid, node, dt, &v).unwrap_or(v[node]);
            }
            std::mem::swap(&mut v, &mut next);
            if v.iter().any(|x| !x.is_finite()) {
                return Err(Error::NumericalBlowup { step });
            }
        }
        slices.push(LevelSetField::from_parts(grid.clone(), v.clone(), t0 + s as f64 * config.snapshot_dt));
    }
    ReachTube::new(slices, config.snapshot_dt)
}

/// Earliest snapshot time whose sub-zero set meets a target node.
pub fn first_hitting_time(tube: &ReachTube, target: impl Fn(usize) -> bool) -> Option<f64> {
    first_hitting_index(tube, target).map(|k| tube.slices()[k].time())
}

pub fn first_hitting_index(tube: &ReachTube, target: impl Fn(usize) -> bool) -> Option<usize> {
    tube.slices()
        .iter()
        .position(|s| s.values().iter().enumerate().any(|(i, v)| *v <= 0.0 && target(i)))
}
