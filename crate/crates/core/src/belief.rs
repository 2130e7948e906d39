//! Bayesian belief over the discrete intent support, in discrete and
//! continuous time.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::human::{HumanAction, HumanState, PolicyModel};

/// Tolerance on the simplex sum accepted by [`Belief::new`].
pub const SIMPLEX_TOL: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<f64>", into = "Vec<f64>")]
pub struct Belief {
    probs: Vec<f64>,
}

impl Belief {
    pub fn new(probs: Vec<f64>) -> Result<Self> {
        if probs.len() < 2 {
            return Err(Error::input("belief needs at least two entries"));
        }
        for (i, p) in probs.iter().enumerate() {
            if !(0.0..=1.0).contains(p) {
                return Err(Error::input(format!("belief[{i}] = {p} outside [0, 1]")));
            }
        }
        let s: f64 = probs.iter().sum();
        if (s - 1.0).abs() > SIMPLEX_TOL {
            return Err(Error::input(format!("belief sums to {s}, not 1")));
        }
        Ok(Belief { probs })
    }

    /// Two-point belief `(p1, 1 - p1)`.
    pub fn binary(p1: f64) -> Result<Self> {
        Belief::new(vec![p1, 1.0 - p1])
    }

    pub fn uniform(k: usize) -> Result<Self> {
        if k < 2 {
            return Err(Error::input("belief needs at least two entries"));
        }
        Belief::new(vec![1.0 / k as f64; k])
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    pub fn len(&self) -> usize {
        self.probs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.probs.is_empty()
    }

    pub fn p1(&self) -> f64 {
        self.probs[0]
    }
}

impl TryFrom<Vec<f64>> for Belief {
    type Error = Error;
    fn try_from(v: Vec<f64>) -> Result<Self> {
        Belief::new(v)
    }
}

impl From<Belief> for Vec<f64> {
    fn from(b: Belief) -> Self {
        b.probs
    }
}

/// Intrinsic belief drift `k(P)`.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum IntrinsicChange {
    #[default]
    Zero,
}

impl IntrinsicChange {
    pub fn apply(&self, _b: &[f64], out: &mut [f64]) {
        match self {
            IntrinsicChange::Zero => out.iter_mut().for_each(|o| *o = 0.0),
        }
    }

    pub fn is_zero(&self) -> bool {
        matches!(self, IntrinsicChange::Zero)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BeliefParams {
    pub gamma: f64,
    #[serde(default)]
    pub k: IntrinsicChange,
}

impl BeliefParams {
    pub fn new(gamma: f64) -> Result<Self> {
        if !(gamma.is_finite() && gamma >= 0.0) {
            return Err(Error::input(format!("gamma must be finite and nonnegative, got {gamma}")));
        }
        Ok(BeliefParams {
            gamma,
            k: IntrinsicChange::Zero,
        })
    }
}

/// Posterior from per-intent likelihoods. Returns the prior when every
/// likelihood-weighted term vanishes.
pub fn posterior_from_likelihoods(prior: &[f64], lik: &[f64], out: &mut [f64]) {
    let mut z = 0.0;
    for ((o, p), l) in out.iter_mut().zip(prior).zip(lik) {
        *o = p * l;
        z += *o;
    }
    if z > 0.0 && z.is_finite() {
        out.iter_mut().for_each(|o| *o /= z);
    } else {
        out.copy_from_slice(prior);
    }
}

pub fn bayes_update(prior: &Belief, x: &HumanState, u: HumanAction, model: &PolicyModel) -> Result<Belief> {
    if prior.len() != model.support_len() {
        return Err(Error::input(format!(
            "belief has {} entries but the policy support has {}",
            prior.len(),
            model.support_len()
        )));
    }
    let lik: Vec<f64> = (0..prior.len())
        .map(|l| model.likelihood_unchecked(x, u.theta(), l))
        .collect();
    let mut post = vec![0.0; prior.len()];
    posterior_from_likelihoods(&prior.probs, &lik, &mut post);
    Ok(Belief { probs: post })
}

/// `gamma (posterior - prior) + k(prior)`.
pub fn belief_rate(
    b: &Belief,
    x: &HumanState,
    u: HumanAction,
    model: &PolicyModel,
    params: &BeliefParams,
) -> Result<Vec<f64>> {
    let post = bayes_update(b, x, u, model)?;
    let mut k = vec![0.0; b.len()];
    params.k.apply(&b.probs, &mut k);
    Ok(post
        .probs
        .iter()
        .zip(&b.probs)
        .zip(&k)
        .map(|((q, p), ki)| params.gamma * (q - p) + ki)
        .collect())
}

/// Rate of `p1` for a two-point belief given the two likelihoods.
pub(crate) fn binary_rate(p1: f64, l1: f64, l2: f64, gamma: f64) -> f64 {
    let z = p1 * l1 + (1.0 - p1) * l2;
    if z > 0.0 && z.is_finite() {
        gamma * (p1 * l1 / z - p1)
    } else {
        0.0
    }
}

/// Belief `p1` that the continuous flow with frozen likelihoods `(l1, l2)`
/// carries to `p` after time `dt`.
///
/// Along the flow `l2 ln(p1) - l1 ln(1 - p1)` grows at rate `gamma (l1 - l2)`,
/// so the departure point solves a scalar monotone equation in log-odds.
pub fn belief_departure(p: f64, l1: f64, l2: f64, gamma: f64, dt: f64) -> f64 {
    if l1 == l2 || gamma == 0.0 || dt == 0.0 || !(l1 + l2 > 0.0) || p <= 0.0 || p >= 1.0 {
        return p;
    }
    // g(s) = l1 ln(1 + e^s) - l2 ln(1 + e^-s), g'(s) = p l1 + (1 - p) l2
    let softplus = |x: f64| if x > 30.0 { x } else { x.exp().ln_1p() };
    let g = |s: f64| l1 * softplus(s) - l2 * softplus(-s);
    let s0 = (p / (1.0 - p)).ln();
    let target = g(s0) - gamma * (l1 - l2) * dt;
    // g is increasing, convex when l1 > l2 and concave otherwise; either way
    // Newton from s0 approaches the root monotonically from the far side.
    let mut s = s0;
    for _ in 0..100 {
        let q = 1.0 / (1.0 + (-s).exp());
        let step = (g(s) - target) / (q * l1 + (1.0 - q) * l2);
        s -= step;
        if !s.is_finite() {
            return if l1 > l2 { 0.0 } else { 1.0 };
        }
        if step.abs() <= 1e-13 * (1.0 + s.abs()) {
            break;
        }
    }
    1.0 / (1.0 + (-s).exp())
}
