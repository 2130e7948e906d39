//! Predicts a coarse running example and renders its snapshots as SVG.
//! Usage: render_svg [OUT_DIR]
use beliefreach::cli::{run_predict, run_render, RenderArgs, RunArgs};
use std::path::{Path, PathBuf};

fn main() -> beliefreach::error::Result<()> {
    let out = std::env::args().nth(1).map(PathBuf::from).unwrap_or_else(|| std::env::temp_dir().join("beliefreach_render"));
    let args = RunArgs {
        scenario: Path::new(env!("CARGO_MANIFEST_DIR")).join("fixtures/running_example.json"),
        out: out.join("predict"),
        seed: None,
        delta: vec![],
        epsilon_mass: None,
        predictor: None,
    };
    let manifest = run_predict(&args)?;
    let files = run_render(&RenderArgs { input: args.out.clone(), out: out.join("svg") })?;
    println!("{} tubes, {} snapshots -> {}", manifest.tubes.len(), files.len(), out.join("svg").display());
    Ok(())
}
