//! Planar human kinematics and parameterized stochastic heading policies.
//!
//! The human moves at constant speed `v_H` along heading `theta`:
//! `x_dot = [v_H cos(theta), v_H sin(theta)]`. A policy assigns a density over
//! headings for each intent value `lambda`, where `lambda` is an index into
//! the model's support.
//!
//! Gaussian headings are wrapped normals on `(-pi, pi]`, renormalized so that
//! their quadrature over the [`ControlGrid`] is one.

use std::f64::consts::{PI, TAU};

use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Distance below which a human is considered to have arrived at a goal.
pub const ARRIVAL_EPS: f64 = 1e-9;

/// Wraps an angle into `(-pi, pi]`.
pub fn wrap_angle(theta: f64) -> f64 {
    let mut a = theta.rem_euclid(TAU);
    if a > PI {
        a -= TAU;
    }
    // rem_euclid maps -pi to pi already; guard the other edge
    if a <= -PI {
        a += TAU;
    }
    a
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HumanState {
    pub x: f64,
    pub y: f64,
}

impl HumanState {
    pub fn new(x: f64, y: f64) -> Self {
        HumanState { x, y }
    }

    pub fn as_array(&self) -> [f64; 2] {
        [self.x, self.y]
    }

    pub fn distance_to(&self, p: [f64; 2]) -> f64 {
        (self.x - p[0]).hypot(self.y - p[1])
    }
}

/// Heading angle, always wrapped to `(-pi, pi]`.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Serialize, Deserialize)]
#[serde(transparent)]
pub struct HumanAction(f64);

impl HumanAction {
    pub fn new(theta: f64) -> Self {
        HumanAction(wrap_angle(theta))
    }

    pub fn theta(self) -> f64 {
        self.0
    }
}

/// `M` uniformly spaced headings covering `(-pi, pi]`.
#[derive(Debug, Clone, PartialEq)]
pub struct ControlGrid {
    angles: Vec<f64>,
    cos: Vec<f64>,
    sin: Vec<f64>,
}

impl ControlGrid {
    pub fn new(m: usize) -> Result<Self> {
        if m < 8 {
            return Err(Error::input(format!("control grid needs at least 8 headings, got {m}")));
        }
        let h = TAU / m as f64;
        let angles: Vec<f64> = (0..m)
            .map(|i| if i + 1 == m { PI } else { -PI + (i + 1) as f64 * h })
            .collect();
        let cos = angles.iter().map(|a| a.cos()).collect();
        let sin = angles.iter().map(|a| a.sin()).collect();
        Ok(ControlGrid { angles, cos, sin })
    }

    pub fn len(&self) -> usize {
        self.angles.len()
    }

    pub fn is_empty(&self) -> bool {
        self.angles.is_empty()
    }

    pub fn spacing(&self) -> f64 {
        TAU / self.angles.len() as f64
    }

    pub fn angles(&self) -> &[f64] {
        &self.angles
    }

    pub fn angle(&self, i: usize) -> f64 {
        self.angles[i]
    }

    pub fn cos(&self) -> &[f64] {
        &self.cos
    }

    pub fn sin(&self) -> &[f64] {
        &self.sin
    }

    pub fn action(&self, i: usize) -> HumanAction {
        HumanAction(self.angles[i])
    }

    /// Index of the grid heading nearest to `theta`.
    pub fn nearest(&self, theta: f64) -> usize {
        let m = self.len();
        let h = self.spacing();
        let k = ((wrap_angle(theta) + PI) / h).round() as i64 - 1;
        k.rem_euclid(m as i64) as usize
    }
}

impl Default for ControlGrid {
    fn default() -> Self {
        ControlGrid::new(72).expect("72 headings is valid")
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum PolicyVariant {
    /// `lambda = i`: heading ~ N(angle to `goals[i]`, `sigmas[i]^2`).
    GaussianGoal { goals: Vec<[f64; 2]>, sigmas: Vec<f64> },
    /// `lambda = 0`: heading ~ N(0, sigma^2); `lambda = 1`: uniform heading.
    StraightOrRandom { sigma: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq)]
struct WrappedNormal {
    sigma: f64,
    terms: i32,
    norm: f64,
}

impl WrappedNormal {
    fn new(sigma: f64, cg: &ControlGrid) -> Self {
        let terms = (4.0 * sigma / PI).ceil() as i32 + 1;
        let mut w = WrappedNormal { sigma, terms, norm: 1.0 };
        let h = cg.spacing();
        let total: f64 = cg.angles().iter().map(|&a| w.raw(a) * h).sum();
        w.norm = total;
        w
    }

    fn raw(&self, offset: f64) -> f64 {
        let d = wrap_angle(offset);
        let c = 1.0 / (self.sigma * (TAU).sqrt());
        let inv = 1.0 / (2.0 * self.sigma * self.sigma);
        (-self.terms..=self.terms)
            .map(|k| {
                let e = d + TAU * k as f64;
                c * (-e * e * inv).exp()
            })
            .sum()
    }

    fn density(&self, offset: f64) -> f64 {
        self.raw(offset) / self.norm
    }
}

/// Stochastic heading policy `P(u_H | x_H; lambda)` together with the speed.
#[derive(Debug, Clone, PartialEq)]
pub struct PolicyModel {
    variant: PolicyVariant,
    speed: f64,
    kernels: Vec<Option<WrappedNormal>>,
}

impl PolicyModel {
    pub fn new(variant: PolicyVariant, speed: f64, cg: &ControlGrid) -> Result<Self> {
        if !(speed.is_finite() && speed >= 0.0) {
            return Err(Error::input(format!("speed must be finite and nonnegative, got {speed}")));
        }
        let kernels = match &variant {
            PolicyVariant::GaussianGoal { goals, sigmas } => {
                if goals.is_empty() {
                    return Err(Error::input("gaussian-goal policy needs at least one goal"));
                }
                if goals.len() != sigmas.len() {
                    return Err(Error::input("goals and sigmas differ in length"));
                }
                if goals.len() < 2 {
                    return Err(Error::input("policy support needs at least two intent values"));
                }
                for (i, s) in sigmas.iter().enumerate() {
                    if !(*s > 0.0 && s.is_finite()) {
                        return Err(Error::input(format!("sigmas[{i}] must be positive, got {s}")));
                    }
                }
                sigmas.iter().map(|&s| Some(WrappedNormal::new(s, cg))).collect()
            }
            PolicyVariant::StraightOrRandom { sigma } => {
                if !(*sigma > 0.0 && sigma.is_finite()) {
                    return Err(Error::input(format!("sigma must be positive, got {sigma}")));
                }
                vec![Some(WrappedNormal::new(*sigma, cg)), None]
            }
        };
        Ok(PolicyModel {
            variant,
            speed,
            kernels,
        })
    }

    pub fn variant(&self) -> &PolicyVariant {
        &self.variant
    }

    pub fn speed(&self) -> f64 {
        self.speed
    }

    pub fn with_speed(mut self, speed: f64) -> Self {
        self.speed = speed;
        self
    }

    /// Number of intent values K.
    pub fn support_len(&self) -> usize {
        self.kernels.len()
    }

    /// Whether the heading densities depend on the human position.
    pub fn is_position_dependent(&self) -> bool {
        matches!(self.variant, PolicyVariant::GaussianGoal { .. })
    }

    fn check_lambda(&self, lambda: usize) -> Result<()> {
        if lambda >= self.support_len() {
            return Err(Error::input(format!(
                "lambda {lambda} outside support of size {}",
                self.support_len()
            )));
        }
        Ok(())
    }

    /// Mean heading of intent `lambda` at `x`; `None` if the heading is uniform.
    fn mean(&self, x: &HumanState, lambda: usize) -> Option<f64> {
        match &self.variant {
            PolicyVariant::GaussianGoal { goals, .. } => policy_mean_angle(x, goals[lambda]).ok(),
            PolicyVariant::StraightOrRandom { .. } => (lambda == 0).then_some(0.0),
        }
    }

    /// Heading density for intent `lambda`, in 1/radian.
    pub fn likelihood(&self, x: &HumanState, u: HumanAction, lambda: usize) -> Result<f64> {
        self.check_lambda(lambda)?;
        Ok(self.likelihood_unchecked(x, u.theta(), lambda))
    }

    pub(crate) fn likelihood_unchecked(&self, x: &HumanState, theta: f64, lambda: usize) -> f64 {
        match (self.kernels[lambda], self.mean(x, lambda)) {
            (Some(k), Some(mu)) => k.density(theta - mu),
            _ => 1.0 / TAU,
        }
    }

    /// Densities of intent `lambda` at every heading of `cg`.
    pub fn likelihood_row(&self, x: &HumanState, lambda: usize, cg: &ControlGrid) -> Result<Vec<f64>> {
        self.check_lambda(lambda)?;
        Ok(cg
            .angles()
            .iter()
            .map(|&a| self.likelihood_unchecked(x, a, lambda))
            .collect())
    }

    /// Draws a heading from intent `lambda`'s policy.
    pub fn sample<R: Rng + ?Sized>(&self, x: &HumanState, lambda: usize, rng: &mut R) -> Result<HumanAction> {
        self.check_lambda(lambda)?;
        Ok(self.sample_unchecked(x, lambda, rng))
    }

    pub(crate) fn sample_unchecked<R: Rng + ?Sized>(&self, x: &HumanState, lambda: usize, rng: &mut R) -> HumanAction {
        match (self.kernels[lambda], self.mean(x, lambda)) {
            (Some(k), Some(mu)) => {
                let z: f64 = rng.sample(StandardNormal);
                HumanAction::new(mu + k.sigma * z)
            }
            _ => HumanAction::new(rng.random_range(-PI..PI)),
        }
    }
}

/// `[v_H cos(theta), v_H sin(theta)]`.
pub fn human_velocity(_x: &HumanState, u: HumanAction, model: &PolicyModel) -> [f64; 2] {
    let (s, c) = u.theta().sin_cos();
    [model.speed() * c, model.speed() * s]
}

/// Heading from `x` toward `goal` (four-quadrant arctangent).
pub fn policy_mean_angle(x: &HumanState, goal: [f64; 2]) -> Result<f64> {
    let dx = goal[0] - x.x;
    let dy = goal[1] - x.y;
    if dx.hypot(dy) < ARRIVAL_EPS {
        return Err(Error::DegenerateGoal { goal });
    }
    Ok(dy.atan2(dx))
}

pub fn action_likelihood(model: &PolicyModel, x: &HumanState, u: HumanAction, lambda: usize) -> Result<f64> {
    model.likelihood(x, u, lambda)
}

pub fn sample_action<R: Rng + ?Sized>(
    model: &PolicyModel,
    x: &HumanState,
    lambda: usize,
    rng: &mut R,
) -> Result<HumanAction> {
    model.sample(x, lambda, rng)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use std::f64::consts::FRAC_PI_4;

    fn goal_model() -> PolicyModel {
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

    fn straight_model(sigma: f64) -> PolicyModel {
        PolicyModel::new(PolicyVariant::StraightOrRandom { sigma }, 1.0, &ControlGrid::default()).unwrap()
    }

    #[test]
    fn wrap_angle_range() {
        assert_eq!(wrap_angle(PI), PI);
        assert_eq!(wrap_angle(-PI), PI);
        assert!((wrap_angle(3.0 * PI) - PI).abs() < 1e-12);
        assert!((wrap_angle(-0.5) + 0.5).abs() < 1e-15);
        assert!((wrap_angle(TAU + 0.25) - 0.25).abs() < 1e-12);
    }

    #[test]
    fn velocity_examples() {
        let m = straight_model(0.1);
        let x = HumanState::new(0.0, 0.0);
        let v = human_velocity(&x, HumanAction::new(0.0), &m);
        assert_eq!(v, [1.0, 0.0]);
        let v = human_velocity(&x, HumanAction::new(PI / 2.0), &m);
        assert!(v[0].abs() < 1e-15 && (v[1] - 1.0).abs() < 1e-15);
        let m = m.with_speed(0.6);
        let v = human_velocity(&x, HumanAction::new(FRAC_PI_4), &m);
        let e = 0.6 / 2f64.sqrt();
        assert!((v[0] - e).abs() < 1e-15 && (v[1] - e).abs() < 1e-15);
    }

    #[test]
    fn mean_angle_examples() {
        let o = HumanState::new(0.0, 0.0);
        assert!((policy_mean_angle(&o, [1.0, 1.0]).unwrap() - FRAC_PI_4).abs() < 1e-15);
        assert!((policy_mean_angle(&o, [-1.0, 0.0]).unwrap() - PI).abs() < 1e-15);
        let x = HumanState::new(2.0, 1.0);
        assert!((policy_mean_angle(&x, [2.0, 5.0]).unwrap() - PI / 2.0).abs() < 1e-15);
        assert!(matches!(
            policy_mean_angle(&x, [2.0, 1.0]),
            Err(Error::DegenerateGoal { .. })
        ));
    }

    #[test]
    fn uniform_density_value() {
        let m = straight_model(0.1);
        let x = HumanState::new(0.3, -1.0);
        for th in [-3.0, 0.0, 1.0, PI] {
            let l = action_likelihood(&m, &x, HumanAction::new(th), 1).unwrap();
            assert!((l - 1.0 / TAU).abs() < 1e-15);
        }
        assert!(action_likelihood(&m, &x, HumanAction::new(0.0), 2).is_err());
    }

    #[test]
    fn gaussian_peak_matches_quadrature_normalized_oracle() {
        // independent oracle: plain normal pdf summed over images, normalized by grid quadrature
        let m = goal_model();
        let cg = ControlGrid::default();
        let x = HumanState::new(0.0, 0.0);
        let mu = FRAC_PI_4;
        let s = FRAC_PI_4;
        let pdf = |d: f64| (-(d * d) / (2.0 * s * s)).exp() / (s * (2.0 * PI).sqrt());
        let unnorm = |th: f64| (-10..=10).map(|k| pdf(th - mu + TAU * k as f64)).sum::<f64>();
        let z: f64 = cg.angles().iter().map(|&a| unnorm(a)).sum::<f64>() * cg.spacing();
        let expected = unnorm(mu) / z;
        let got = action_likelihood(&m, &x, HumanAction::new(mu), 0).unwrap();
        assert!((got - expected).abs() < 1e-9, "{got} vs {expected}");
        assert!((got - 1.0 / (s * (2.0 * PI).sqrt())).abs() < 1e-3);
    }

    #[test]
    fn densities_normalize_on_the_grid() {
        let cg = ControlGrid::default();
        let m = goal_model();
        for x in [HumanState::new(0.0, 0.0), HumanState::new(1.3, -0.4), HumanState::new(-2.0, 2.5)] {
            for lam in 0..2 {
                let row = m.likelihood_row(&x, lam, &cg).unwrap();
                let q: f64 = row.iter().sum::<f64>() * cg.spacing();
                assert!((q - 1.0).abs() < 1e-6, "{q}");
            }
        }
        let m = straight_model(0.1);
        for lam in 0..2 {
            let row = m.likelihood_row(&HumanState::new(0.0, 0.0), lam, &cg).unwrap();
            assert!((row.iter().sum::<f64>() * cg.spacing() - 1.0).abs() < 1e-6);
        }
    }

    #[test]
    fn arrival_makes_policy_uniform() {
        let m = goal_model();
        let at_goal = HumanState::new(2.0, 2.0);
        let l = m.likelihood(&at_goal, HumanAction::new(0.3), 0).unwrap();
        assert!((l - 1.0 / TAU).abs() < 1e-15);
    }

    #[test]
    fn uniform_samples_have_zero_mean_cosine() {
        let m = straight_model(0.1);
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let x = HumanState::new(0.0, 0.0);
        let n = 100_000;
        let mean: f64 = (0..n).map(|_| m.sample(&x, 1, &mut rng).unwrap().theta().cos()).sum::<f64>() / n as f64;
        assert!(mean.abs() < 0.02, "{mean}");
    }

    #[test]
    fn narrow_gaussian_sample_std() {
        let m = straight_model(0.1);
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let x = HumanState::new(0.0, 0.0);
        let n = 100_000;
        let xs: Vec<f64> = (0..n).map(|_| m.sample(&x, 0, &mut rng).unwrap().theta()).collect();
        let mean = xs.iter().sum::<f64>() / n as f64;
        let var = xs.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n - 1) as f64;
        assert!((var.sqrt() - 0.1).abs() < 0.005, "{}", var.sqrt());
    }

    #[test]
    fn sampling_is_deterministic_per_seed() {
        let m = goal_model();
        let x = HumanState::new(0.5, 0.5);
        let draw = |seed| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            (0..50).map(|_| m.sample(&x, 1, &mut rng).unwrap().theta()).collect::<Vec<_>>()
        };
        assert_eq!(draw(3), draw(3));
        assert_ne!(draw(3), draw(4));
    }

    #[test]
    fn control_grid_layout() {
        let cg = ControlGrid::default();
        assert_eq!(cg.len(), 72);
        assert_eq!(cg.angle(71), PI);
        assert!((cg.angle(35)).abs() < 1e-12);
        assert_eq!(cg.nearest(0.0), 35);
        assert_eq!(cg.nearest(PI), 71);
        assert_eq!(cg.nearest(-PI), 71);
        assert!(ControlGrid::new(7).is_err());
    }
}
