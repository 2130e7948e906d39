//! Naive forward reachable set of a unit-speed human from a small disc, and
//! its distance to the analytic disc of radius r0 + v t.
use beliefreach::predict::predict_naive;
use beliefreach::scenario::Scenario;
use std::path::Path;

fn main() -> beliefreach::error::Result<()> {
    let path = Path::new(env!("CARGO_MANIFEST_DIR")).join("fixtures/naive_disc.json");
    let pb = Scenario::load(&path)?.problem()?;
    let tube = predict_naive(&pb)?;
    let g = tube.sets.grid();
    let (r0, v) = (pb.initial_radius(), pb.model.speed());
    for k in (0..tube.len()).step_by(5) {
        let s = tube.slice(k);
        // outermost inside node along +x approximates the front radius
        let front = (0..g.len())
            .filter(|&i| s.is_inside_node(i))
            .map(|i| g.node_point(i)[0].hypot(g.node_point(i)[1]))
            .fold(0.0f64, f64::max);
        println!("t = {:.1} s  front {:.3} m  analytic {:.3} m", s.time(), front, r0 + v * s.time());
    }
    Ok(())
}
