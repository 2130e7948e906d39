//! A human heads for a goal the model does not know about. The robot plans
//! around BA-FRS and bayes predictions in turn.
use beliefreach::nav::run_closed_loop;
use beliefreach::predict::PredictorSpec;
use beliefreach::scenario::Scenario;
use std::path::Path;

fn main() -> beliefreach::error::Result<()> {
    let path = Path::new(env!("CARGO_MANIFEST_DIR")).join("fixtures/misspecified_goal.json");
    let sc = Scenario::load(&path)?;
    for spec in [PredictorSpec::BaFrs { delta: 0.1 }, PredictorSpec::Bayes { mass: 0.95 }] {
        let log = run_closed_loop(&sc.closed_loop(Some(spec))?)?;
        let m = &log.metrics;
        println!(
            "{spec:?}: min distance {:.3} m, collision {}, goal at {:?} s",
            m.min_distance, m.collision, m.time_to_goal
        );
    }
    Ok(())
}
