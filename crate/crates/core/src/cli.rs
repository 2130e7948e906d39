//! Command-line orchestration. Every command writes a deterministic artifact
//! set under `--out`; `render` only reads what the other commands exported.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};

use crate::analysis::{analyze, combine_hypotheses, AnalysisResult};
use crate::contour::zero_contours;
use crate::error::{Error, Result};
use crate::grid::LevelSetField;
use crate::nav::run_closed_loop;
use crate::predict::{predict_ba_frs, predict_bayes, predict_naive, PredictionTube, PredictorKind, PredictorSpec};
use crate::scenario::Scenario;

#[derive(Debug, Parser)]
#[command(name = "beliefreach", version, about = "Belief-augmented reachability for human motion prediction")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Export naive, belief-augmented and particle prediction tubes.
    Predict(RunArgs),
    /// Confidence times for each intent hypothesis.
    Analyze(RunArgs),
    /// Closed-loop navigation against a scripted human.
    Simulate(RunArgs),
    /// SVG drawings of a predict or simulate output directory.
    Render(RenderArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum PredictorArg {
    Naive,
    BaFrs,
    Bayes,
}

#[derive(Debug, Args)]
pub struct RunArgs {
    #[arg(long)]
    pub scenario: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
    /// Replaces the scenario seed.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Replaces the delta list (comma separated).
    #[arg(long, value_delimiter = ',', num_args = 1..)]
    pub delta: Vec<f64>,
    #[arg(long)]
    pub epsilon_mass: Option<f64>,
    /// Restricts `predict` to one predictor, or picks the `simulate` predictor.
    #[arg(long, value_enum)]
    pub predictor: Option<PredictorArg>,
}

#[derive(Debug, Args)]
pub struct RenderArgs {
    /// Output directory of a previous `predict` or `simulate` run.
    #[arg(long)]
    pub input: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
}

/// Index of an exported tube set.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub fixture: String,
    pub scenario_hash: String,
    pub seed: u64,
    pub snapshot_dt: f64,
    pub snapshots: usize,
    pub tubes: Vec<TubeEntry>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TubeEntry {
    pub label: String,
    pub kind: PredictorKind,
    /// Directory relative to the manifest.
    pub dir: String,
    pub inside_counts: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HypothesisReport {
    pub lambda_star: usize,
    pub result: Option<AnalysisResult>,
    /// Why the hypothesis could not be analysed.
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnalysisReport {
    pub fixture: String,
    pub scenario_hash: String,
    pub belief_target: f64,
    pub delta: f64,
    pub hypotheses: Vec<HypothesisReport>,
    pub combined_t_min: Option<f64>,
    pub combined_t_max: Option<f64>,
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut s = serde_json::to_string_pretty(value)?;
    s.push('\n');
    fs::write(path, s)?;
    Ok(())
}

fn read_json<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<T> {
    Ok(serde_json::from_str(&fs::read_to_string(path)?)?)
}

/// Loads the scenario and applies the command-line overrides.
pub fn load_scenario(args: &RunArgs) -> Result<Scenario> {
    let mut sc = Scenario::load(&args.scenario)?;
    if let Some(seed) = args.seed {
        sc.seed = seed;
    }
    if !args.delta.is_empty() {
        sc.predict.deltas = args.delta.clone();
        if let Some(a) = sc.analysis.as_mut() {
            a.delta = args.delta[0];
        }
    }
    if let Some(m) = args.epsilon_mass {
        sc.predict.epsilon_mass = m;
    }
    if let (Some(p), Some(sim)) = (args.predictor, sc.simulation.as_mut()) {
        sim.predictor = match p {
            PredictorArg::Naive => PredictorSpec::Naive,
            PredictorArg::BaFrs => PredictorSpec::BaFrs {
                delta: sc.predict.deltas.first().copied().unwrap_or(0.1),
            },
            PredictorArg::Bayes => PredictorSpec::Bayes {
                mass: sc.predict.epsilon_mass,
            },
        };
    }
    sc.validate()?;
    Ok(sc)
}

fn prepare_out(out: &Path, sc: &Scenario) -> Result<()> {
    fs::create_dir_all(out)?;
    fs::write(out.join("scenario.json"), sc.to_json()?)?;
    Ok(())
}

fn save_tube(out: &Path, tube: &PredictionTube) -> Result<TubeEntry> {
    let label = tube.kind.label();
    let dir = out.join(&label);
    fs::create_dir_all(&dir)?;
    for (k, s) in tube.sets.slices().iter().enumerate() {
        s.save(&dir.join(format!("slice_{k:03}")))?;
    }
    write_json(&dir.join("meta.json"), &tube.meta)?;
    Ok(TubeEntry {
        label: label.clone(),
        kind: tube.kind.clone(),
        dir: label,
        inside_counts: tube.sets.slices().iter().map(|s| s.inside_count()).collect(),
    })
}

pub fn run_predict(args: &RunArgs) -> Result<Manifest> {
    let sc = load_scenario(args)?;
    let problem = sc.problem()?;
    let want = |p: PredictorArg| args.predictor.is_none_or(|q| q == p);
    let mut tubes = Vec::new();
    if want(PredictorArg::Naive) {
        tubes.push(predict_naive(&problem)?);
    }
    if want(PredictorArg::BaFrs) {
        for &d in &sc.predict.deltas {
            tubes.push(predict_ba_frs(&problem, d)?);
        }
    }
    if want(PredictorArg::Bayes) && sc.grid.belief.is_some() {
        tubes.push(predict_bayes(&problem, sc.predict.epsilon_mass)?);
    }
    prepare_out(&args.out, &sc)?;
    let entries = tubes.iter().map(|t| save_tube(&args.out, t)).collect::<Result<Vec<_>>>()?;
    let manifest = Manifest {
        fixture: sc.fixture.clone(),
        scenario_hash: sc.hash(),
        seed: sc.seed,
        snapshot_dt: sc.solver.snapshot_dt,
        snapshots: sc.solver.snapshot_count() + 1,
        tubes: entries,
    };
    write_json(&args.out.join("manifest.json"), &manifest)?;
    Ok(manifest)
}

pub fn run_analyze(args: &RunArgs) -> Result<AnalysisReport> {
    let sc = load_scenario(args)?;
    let a = sc
        .analysis
        .clone()
        .ok_or_else(|| Error::Scenario { path: "analysis".into(), message: "scenario has no analysis section".into() })?;
    let problem = sc.problem()?;
    let mut hypotheses = Vec::new();
    for &l in &a.hypotheses {
        // an infeasible threshold rules out one hypothesis, not the report
        match analyze(&problem, l, a.belief_target, a.delta) {
            Ok(r) => hypotheses.push(HypothesisReport { lambda_star: l, result: Some(r), error: None }),
            Err(e @ Error::InfeasibleThreshold { .. }) => {
                hypotheses.push(HypothesisReport { lambda_star: l, result: None, error: Some(e.to_string()) })
            }
            Err(e) => return Err(e),
        }
    }
    let times: Vec<_> = hypotheses
        .iter()
        .filter_map(|h| h.result.as_ref().map(|r| (r.t_min, r.t_max)))
        .collect();
    let (combined_t_min, combined_t_max) = combine_hypotheses(&times);
    let report = AnalysisReport {
        fixture: sc.fixture.clone(),
        scenario_hash: sc.hash(),
        belief_target: a.belief_target,
        delta: a.delta,
        hypotheses,
        combined_t_min,
        combined_t_max,
    };
    prepare_out(&args.out, &sc)?;
    write_json(&args.out.join("analysis.json"), &report)?;
    Ok(report)
}

pub fn run_simulate(args: &RunArgs) -> Result<crate::nav::SimMetrics> {
    let sc = load_scenario(args)?;
    let cfg = sc.closed_loop(None)?;
    let log = run_closed_loop(&cfg)?;
    prepare_out(&args.out, &sc)?;
    log.save(&args.out)?;
    Ok(log.metrics)
}

const NAIVE_COLOR: &str = "#808080";
const BA_COLOR: &str = "#d000d0";
const BAYES_COLOR: &str = "#008080";

fn color_of(kind: &PredictorKind) -> &'static str {
    match kind {
        PredictorKind::Naive => NAIVE_COLOR,
        PredictorKind::BaFrs { .. } => BA_COLOR,
        PredictorKind::Bayes { .. } => BAYES_COLOR,
    }
}

/// SVG document over the world box `[x0, y0, x1, y1]` with y pointing up.
fn svg_open(bbox: [f64; 4], title: &str) -> String {
    let [x0, y0, x1, y1] = bbox;
    let (w, h) = (x1 - x0, y1 - y0);
    let px = 600.0 / w.max(h);
    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{:.0}" height="{:.0}" viewBox="{x0:.4} {:.4} {w:.4} {h:.4}">"#,
        w * px,
        h * px,
        -y1,
    );
    let _ = writeln!(s, "<title>{title}</title>");
    let _ = writeln!(
        s,
        r#"<rect x="{x0:.4}" y="{:.4}" width="{w:.4}" height="{h:.4}" fill="white"/>"#,
        -y1
    );
    let _ = writeln!(s, r#"<g transform="scale(1,-1)" fill="none" stroke-width="{:.4}">"#, 2.0 / px);
    s
}

fn svg_close(mut s: String) -> String {
    s.push_str("</g>\n</svg>\n");
    s
}

fn polyline(s: &mut String, pts: &[[f64; 2]], color: &str, extra: &str) {
    let _ = write!(s, r#"<polyline stroke="{color}"{extra} points=""#);
    for (i, p) in pts.iter().enumerate() {
        let sep = if i == 0 { "" } else { " " };
        let _ = write!(s, "{sep}{:.4},{:.4}", p[0], p[1]);
    }
    s.push_str("\"/>\n");
}

fn render_tubes(input: &Path, out: &Path) -> Result<Vec<PathBuf>> {
    let manifest: Manifest = read_json(&input.join("manifest.json"))?;
    let mut written = Vec::new();
    for k in 0..manifest.snapshots {
        let mut doc = None;
        let mut title = String::new();
        for (j, t) in manifest.tubes.iter().enumerate() {
            let field = LevelSetField::load(&input.join(&t.dir).join(format!("slice_{k:03}")))?;
            let s = doc.get_or_insert_with(|| {
                let g = field.grid();
                title = format!("{} t={:.2}", manifest.fixture, field.time());
                svg_open([g.mins()[0], g.mins()[1], g.maxs()[0], g.maxs()[1]], &title)
            });
            // BA-FRS tubes share a colour; dashes tell the deltas apart
            let extra = match t.kind {
                PredictorKind::BaFrs { .. } if j % 2 == 0 => r#" stroke-dasharray="0.04 0.02""#,
                _ => "",
            };
            let _ = writeln!(s, "<!-- {} -->", t.label);
            for line in zero_contours(&field)? {
                polyline(s, &line, color_of(&t.kind), extra);
            }
        }
        if let Some(s) = doc {
            let path = out.join(format!("snapshot_{k:03}.svg"));
            fs::write(&path, svg_close(s))?;
            written.push(path);
        }
    }
    Ok(written)
}

fn render_trajectories(input: &Path, out: &Path) -> Result<Vec<PathBuf>> {
    let sc = Scenario::load(&input.join("scenario.json"))?;
    let sim = sc
        .simulation
        .ok_or_else(|| Error::input("simulate output without a simulation section"))?;
    let text = fs::read_to_string(input.join("records.csv"))?;
    let (mut human, mut robot) = (Vec::new(), Vec::new());
    for (n, line) in text.lines().enumerate().skip(1) {
        let cols: Vec<f64> = line
            .split(',')
            .map(|c| c.trim().parse::<f64>())
            .collect::<std::result::Result<_, _>>()
            .map_err(|e| Error::input(format!("records.csv line {}: {e}", n + 1)))?;
        if cols.len() < 6 {
            return Err(Error::input(format!("records.csv line {}: too few columns", n + 1)));
        }
        human.push([cols[1], cols[2]]);
        robot.push([cols[4], cols[5]]);
    }
    let ws = sim.robot.workspace;
    let mut s = svg_open(ws, &format!("{} closed loop", sc.fixture));
    polyline(&mut s, &human, "#000000", "");
    polyline(&mut s, &robot, "#1060d0", "");
    for (c, color) in [(sim.robot.goal, "#1060d0")].into_iter().chain(sc.human.goals.iter().map(|g| (*g, NAIVE_COLOR))) {
        let _ = writeln!(
            s,
            r#"<circle cx="{:.4}" cy="{:.4}" r="{:.4}" stroke="{color}"/>"#,
            c[0], c[1], sim.robot.goal_tolerance
        );
    }
    if let Some(p) = robot.last() {
        let _ = writeln!(
            s,
            r#"<circle cx="{:.4}" cy="{:.4}" r="{:.4}" stroke="{BAYES_COLOR}"/>"#,
            p[0], p[1], sim.robot.r_safe
        );
    }
    let path = out.join("trajectory.svg");
    fs::write(&path, svg_close(s))?;
    Ok(vec![path])
}

/// Draws a `predict` output as one SVG per snapshot, or a `simulate` output
/// as one trajectory SVG.
pub fn run_render(args: &RenderArgs) -> Result<Vec<PathBuf>> {
    fs::create_dir_all(&args.out)?;
    if args.input.join("manifest.json").exists() {
        render_tubes(&args.input, &args.out)
    } else if args.input.join("records.csv").exists() {
        render_trajectories(&args.input, &args.out)
    } else {
        Err(Error::input(format!(
            "{} holds neither a manifest.json nor a records.csv",
            args.input.display()
        )))
    }
}

/// Runs one command and prints its JSON summary.
pub fn run(cli: &Cli) -> Result<String> {
    let summary = match &cli.command {
        Command::Predict(a) => serde_json::to_string_pretty(&run_predict(a)?)?,
        Command::Analyze(a) => serde_json::to_string_pretty(&run_analyze(a)?)?,
        Command::Simulate(a) => serde_json::to_string_pretty(&run_simulate(a)?)?,
        Command::Render(a) => serde_json::to_string_pretty(&run_render(a)?)?,
    };
    Ok(summary)
}

/// Machine-readable error report.
pub fn error_json(e: &Error) -> String {
    let mut v = serde_json::json!({ "error": { "kind": e.kind(), "message": e.to_string() } });
    if let Error::Scenario { path, .. } = e {
        v["error"]["path"] = serde_json::Value::String(path.clone());
    }
    v.to_string()
}

/// Entry point of the binary; returns the process exit code.
pub fn main_from_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = e.exit_code();
            let _ = e.print();
            return code;
        }
    };
    match run(&cli) {
        Ok(summary) => {
            println!("{summary}");
            0
        }
        Err(e) => {
            eprintln!("{}", error_json(&e));
            1
        }
    }
}
