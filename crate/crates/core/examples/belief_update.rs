//! One observed heading moves the two-goal belief; the continuous rate points
//! the same way.
use beliefreach::belief::{bayes_update, belief_rate, Belief, BeliefParams};
use beliefreach::human::{ControlGrid, HumanAction, HumanState, PolicyModel, PolicyVariant};
use std::f64::consts::FRAC_PI_4;

fn main() -> beliefreach::error::Result<()> {
    let cg = ControlGrid::new(72)?;
    let variant = PolicyVariant::GaussianGoal { goals: vec![[2.0, 2.0], [2.0, -2.0]], sigmas: vec![FRAC_PI_4; 2] };
    let model = PolicyModel::new(variant, 0.6, &cg)?;
    let x = HumanState::new(0.0, 0.0);
    let prior = Belief::binary(0.5)?;
    let params = BeliefParams::new(10.0)?;
    for deg in [45.0, 0.0, -45.0, 180.0] {
        let u = HumanAction::new(f64::to_radians(deg));
        let post = bayes_update(&prior, &x, u, &model)?;
        let rate = belief_rate(&prior, &x, u, &model, &params)?;
        println!("heading {deg:>6.1} deg  posterior {:.3}  rate {:+.3}/s", post.p1(), rate[0]);
    }
    Ok(())
}
