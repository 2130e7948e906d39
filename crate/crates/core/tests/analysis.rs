use beliefreach::analysis::analyze;
use beliefreach::belief::{bayes_update, Belief};
use beliefreach::error::Error;
use beliefreach::predict::PredictionProblem;
use beliefreach::scenario::Scenario;
use std::path::Path;

fn irrational() -> PredictionProblem {
    let p = Path::new(env!("CARGO_MANIFEST_DIR")).join("fixtures/irrational_human.json");
    Scenario::load(&p).unwrap().problem().unwrap()
}

#[test]
fn fastest_recognition_precedes_slowest() {
    let pb = irrational();
    let r = analyze(&pb, 0, 0.9, 0.3).unwrap();
    assert!(r.t_min.unwrap() <= r.t_max.unwrap());
    let dt = pb.solver.snapshot_dt;
    for t in [r.t_min.unwrap(), r.t_max.unwrap()] {
        assert!((t / dt - (t / dt).round()).abs() < 1e-9, "times land on snapshots");
    }
}

#[test]
fn larger_delta_narrows_the_time_band() {
    let pb = irrational();
    let mut prev: Option<(f64, f64)> = None;
    for delta in [0.1, 0.3, 0.6, 1.0] {
        let r = analyze(&pb, 0, 0.9, delta).unwrap();
        // an unreached target counts as infinitely slow
        let cur = (r.t_min.unwrap(), r.t_max.unwrap_or(f64::INFINITY));
        if let Some((lo, hi)) = prev {
            assert!(cur.0 >= lo - 1e-9 && cur.1 <= hi, "delta {delta}: {cur:?} vs {prev:?}");
        }
        prev = Some(cur);
    }
}

#[test]
fn higher_targets_take_longer() {
    let pb = irrational();
    let mut prev = (0.0, 0.0);
    for p_star in [0.6, 0.8, 0.9, 0.95] {
        let r = analyze(&pb, 0, p_star, 0.3).unwrap();
        let cur = (r.t_min.unwrap(), r.t_max.unwrap_or(f64::INFINITY));
        assert!(cur.0 >= prev.0 && cur.1 >= prev.1, "p* {p_star}: {cur:?} vs {prev:?}");
        prev = cur;
    }
}

#[test]
fn most_informative_sequence_replays_to_the_target() {
    let pb = irrational();
    let r = analyze(&pb, 0, 0.9, 0.3).unwrap();
    let t_min = r.t_min.unwrap();
    // one discrete observation per 1/gamma of continuous time
    let obs = 1.0 / pb.params.gamma;
    let per_obs = (obs / r.step).round() as usize;
    let mut b: Belief = pb.prior.clone();
    let mut hit = None;
    for (k, u) in r.control_seq_max.iter().enumerate().step_by(per_obs) {
        b = bayes_update(&b, &pb.start, *u, &pb.model).unwrap();
        if b.probs()[0] >= 0.9 {
            hit = Some((k + per_obs) as f64 * r.step);
            break;
        }
    }
    let hit = hit.expect("replayed belief reaches the target");
    assert!((hit - t_min).abs() <= pb.solver.snapshot_dt + 1e-9, "replay {hit} vs t_min {t_min}");
}

#[test]
fn random_hypothesis_has_no_dense_actions() {
    // the uniform heading density 1/(2 pi) never reaches 0.3
    let pb = irrational();
    match analyze(&pb, 1, 0.9, 0.3) {
        Err(Error::InfeasibleThreshold { delta, peak }) => {
            assert_eq!(delta, 0.3);
            assert!((peak - 1.0 / std::f64::consts::TAU).abs() < 1e-9);
        }
        other => panic!("expected an infeasible threshold, got {other:?}"),
    }
}

#[test]
fn analysis_rejects_bad_targets() {
    let pb = irrational();
    assert!(analyze(&pb, 0, 0.4, 0.3).is_err());
    assert!(analyze(&pb, 0, 1.0, 0.3).is_err());
    assert!(analyze(&pb, 2, 0.9, 0.3).is_err());
}
