//! Particle occupancy of the running example and the threshold chosen to hold
//! 95% of its mass in each slice.
use beliefreach::predict::{epsilon_from_mass, particle_occupancy};
use beliefreach::scenario::Scenario;
use std::path::Path;

fn main() -> beliefreach::error::Result<()> {
    let path = Path::new(env!("CARGO_MANIFEST_DIR")).join("fixtures/running_example.json");
    let pb = Scenario::load(&path)?.problem()?;
    for occ in particle_occupancy(&pb)?.iter().step_by(5) {
        let eps = epsilon_from_mass(occ, 0.95)?;
        let cells = occ.superlevel_field(eps).inside_count();
        println!("t = {:.1} s  mass {:.6}  epsilon {eps:.2e}  cells {cells}", occ.time(), occ.total());
    }
    Ok(())
}
