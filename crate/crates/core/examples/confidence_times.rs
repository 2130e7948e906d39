//! How soon, and how late, an observer can become 90% sure that a human is
//! the straight-walking type when they only take 0.3-likely actions.
use beliefreach::analysis::analyze;
use beliefreach::scenario::Scenario;
use std::path::Path;

fn main() -> beliefreach::error::Result<()> {
    let path = Path::new(env!("CARGO_MANIFEST_DIR")).join("fixtures/irrational_human.json");
    let sc = Scenario::load(&path)?;
    let a = sc.analysis.clone().expect("fixture has an analysis section");
    let r = analyze(&sc.problem()?, 0, a.belief_target, a.delta)?;
    println!("t_min {:?} s, t_max {:?} s", r.t_min, r.t_max);
    let deg = |s: &[beliefreach::human::HumanAction]| s.iter().map(|u| u.theta().to_degrees().round()).collect::<Vec<_>>();
    println!("most informative headings (deg): {:?}", deg(&r.control_seq_max));
    println!("least informative headings (deg): {:?}", deg(&r.control_seq_min));
    Ok(())
}
