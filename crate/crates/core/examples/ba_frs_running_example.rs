//! Belief-augmented sets of the two-goal running example for several
//! density thresholds. Larger thresholds give nested, smaller sets.
use beliefreach::predict::{predict_ba_frs, predict_naive};
use beliefreach::scenario::Scenario;
use std::path::Path;

fn main() -> beliefreach::error::Result<()> {
    let path = Path::new(env!("CARGO_MANIFEST_DIR")).join("fixtures/running_example.json");
    let sc = Scenario::load(&path)?;
    let pb = sc.problem()?;
    let naive = predict_naive(&pb)?;
    let last = naive.len() - 1;
    println!("naive: {} cells at T", naive.slice(last).inside_count());
    for &delta in &sc.predict.deltas {
        let ba = predict_ba_frs(&pb, delta)?;
        println!("delta {delta:.2}: {} cells at T", ba.slice(last).inside_count());
    }
    Ok(())
}
