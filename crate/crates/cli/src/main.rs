use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use scangrasp::geometry::{ShapeKind, ShapeModel};
use scangrasp::harness::{
    rows_to_csv, run_experiment, run_trajectory_suite, ApproachModel, ExperimentSpec, ObjectSource, SuiteSpec,
};
use scangrasp::metrics::{orientation_error_deg, size_error_mm};
use scangrasp::reconstruct::{reconstruct, Classification, Outcome, ReconConfig};
use scangrasp::scan_sim::ScanMode;
use scangrasp::scene::{protocol_objects, Scene};
use scangrasp::trial::{lateral_approach, overshoot_scenario, run_trial, TrajectoryFrame, TrialConfig};

/// Shape reconstruction from laser scan lines: single frames, closed-loop
/// trials and seeded sweeps.
///
/// Every flag can also be set through an environment variable named
/// SCANGRASP_ plus the flag in upper snake case, e.g. SCANGRASP_NOISE_SIGMA.
#[derive(Parser)]
#[command(name = "scangrasp", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Reconstruct one frame of a scene.
    Recon(ReconArgs),
    /// Replay an aiming trajectory through feedback and the grasp controller.
    Trial(TrialArgs),
    /// Run a seeded batch and report accuracy, size, orientation and latency.
    Sweep(SweepArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum Mode {
    Analytic,
    Cloud,
}

impl From<Mode> for ScanMode {
    fn from(m: Mode) -> Self {
        match m {
            Mode::Analytic => ScanMode::Analytic,
            Mode::Cloud => ScanMode::Cloud,
        }
    }
}

#[derive(Clone, Copy, PartialEq, ValueEnum)]
enum Format {
    Csv,
    Json,
}

#[derive(Args)]
struct Common {
    /// Number of scan lines of the rig: 1, 2 or 4.
    #[arg(long, env = "SCANGRASP_N_LINES", default_value_t = 4)]
    n_lines: usize,
    /// Gaussian noise in mm; overrides the scene's own value.
    #[arg(long, env = "SCANGRASP_NOISE_SIGMA")]
    noise_sigma: Option<f64>,
    #[arg(long, env = "SCANGRASP_SEED", default_value_t = 0)]
    seed: u64,
    #[arg(long, env = "SCANGRASP_MODE", value_enum, default_value_t = Mode::Analytic)]
    mode: Mode,
    /// Directory for output files; stdout only when omitted.
    #[arg(long, env = "SCANGRASP_OUT")]
    out: Option<PathBuf>,
    #[arg(long, env = "SCANGRASP_FORMAT", value_enum, default_value_t = Format::Json)]
    format: Format,
    /// Record wall-clock latency. Outputs are then no longer reproducible.
    #[arg(long, env = "SCANGRASP_TIMING")]
    timing: bool,
}

#[derive(Args)]
struct ReconArgs {
    /// Scene file (JSON). Defaults to a protocol object.
    #[arg(long, env = "SCANGRASP_SCENE")]
    scene: Option<PathBuf>,
    /// Index into the ten protocol objects when no scene file is given.
    #[arg(long, default_value_t = 0)]
    object: usize,
    #[command(flatten)]
    common: Common,
}

#[derive(Args)]
struct TrialArgs {
    /// Scene file (JSON). Defaults to the three-frame overshoot scenario.
    #[arg(long, env = "SCANGRASP_SCENE")]
    scene: Option<PathBuf>,
    /// Trajectory file: JSON list of {"t", "pose"} frames.
    #[arg(long)]
    trajectory: Option<PathBuf>,
    /// Start a straight approach this many mm to the side instead.
    #[arg(long)]
    approach_mm: Option<f64>,
    #[arg(long, default_value_t = 5.0)]
    speed_mm: f64,
    #[arg(long, default_value_t = 60)]
    frames: usize,
    #[arg(long, default_value_t = 1.0 / 7.0)]
    period_s: f64,
    #[command(flatten)]
    common: Common,
}

#[derive(Clone, Copy, ValueEnum)]
enum Objects {
    Protocol,
    Random,
}

#[derive(Args)]
struct SweepArgs {
    /// Full experiment spec (JSON); overrides the object flags below.
    #[arg(long)]
    spec: Option<PathBuf>,
    /// Scene files to sweep over; may be repeated.
    #[arg(long, env = "SCANGRASP_SCENE", value_delimiter = ',')]
    scene: Vec<PathBuf>,
    #[arg(long, value_enum, default_value_t = Objects::Protocol)]
    objects: Objects,
    /// Shapes of random objects.
    #[arg(long, value_delimiter = ',', default_value = "sphere,cylinder,cuboid")]
    shapes: Vec<String>,
    #[arg(long, default_value_t = 20)]
    per_shape: usize,
    #[arg(long, default_value_t = 0.0)]
    tilt_min_deg: f64,
    #[arg(long, default_value_t = 0.0)]
    tilt_max_deg: f64,
    #[arg(long, env = "SCANGRASP_REPS", default_value_t = 1)]
    reps: usize,
    /// Run closed-loop approach trials instead of single reconstructions.
    #[arg(long)]
    trials: bool,
    #[arg(long, default_value_t = 40.0)]
    approach_mm: f64,
    #[arg(long, default_value_t = 0.0)]
    bias_mm: f64,
    #[arg(long, default_value_t = 5.0)]
    speed_mm: f64,
    #[arg(long, default_value_t = 60)]
    frames: usize,
    #[command(flatten)]
    common: Common,
}

fn parse_shape(s: &str) -> Result<ShapeKind> {
    ShapeKind::ALL
        .into_iter()
        .find(|k| k.name() == s.trim())
        .with_context(|| format!("unknown shape {s:?}; expected sphere, cylinder or cuboid"))
}

fn load_scene(path: &Path) -> Result<Scene> {
    Ok(Scene::load(path)?)
}

/// Writes `text` to `<out>/<name>` when an output directory is set.
fn write_out(out: &Option<PathBuf>, name: &str, text: &str) -> Result<()> {
    if let Some(dir) = out {
        fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
        let path = dir.join(name);
        fs::write(&path, text).with_context(|| format!("writing {}", path.display()))?;
        eprintln!("wrote {}", path.display());
    }
    Ok(())
}

#[derive(Serialize)]
struct ScanSummary {
    plane_deg: f64,
    points: usize,
    label: Option<&'static str>,
    fit_percentage: Option<f64>,
}

#[derive(Serialize)]
struct ReconSummary {
    outcome: Outcome,
    truth: ShapeModel,
    size_error_mm: Option<f64>,
    orientation_error_deg: Option<f64>,
    classification: Option<Classification>,
    scans: Vec<ScanSummary>,
    elapsed_ms: f64,
}

fn recon(args: ReconArgs) -> Result<()> {
    let c = &args.common;
    let mut scene = match &args.scene {
        Some(p) => load_scene(p)?,
        None => {
            let objs = protocol_objects();
            let o = *objs.get(args.object).with_context(|| format!("--object must be below {}", objs.len()))?;
            Scene::single(o)
        }
    };
    if let Some(s) = c.noise_sigma {
        scene.noise_sigma = s;
    }
    scene.seed = c.seed;
    let scans = ScanMode::from(c.mode).scan(&scene, c.n_lines)?;
    let mut cfg = ReconConfig::default();
    cfg.sac.rng_seed = c.seed;
    let report = reconstruct(&scans, &cfg);
    let target = scene.objects.first().context("scene has no objects")?;
    let truth = target.truth(&scene.sensor);
    let model = report.model().filter(|m| m.kind() == target.shape);
    let summary = ReconSummary {
        outcome: report.outcome.clone(),
        truth,
        size_error_mm: model.map(|m| size_error_mm(m, target.grasp_size())),
        orientation_error_deg: model.and_then(|m| orientation_error_deg(m, &truth)),
        classification: report.classification.clone(),
        scans: report
            .scans
            .iter()
            .map(|s| ScanSummary {
                plane_deg: s.plane.dihedral_deg,
                points: s.points.len(),
                label: s.label().map(|k| k.name()),
                fit_percentage: s.chosen.as_ref().map(|p| p.fit.fit_percentage),
            })
            .collect(),
        elapsed_ms: if c.timing { report.elapsed_ms } else { 0.0 },
    };
    let text = match c.format {
        Format::Json => serde_json::to_string_pretty(&summary)? + "\n",
        Format::Csv => {
            let mut s = String::from("plane_deg,points,label,fit_percentage\n");
            for r in &summary.scans {
                s += &format!(
                    "{},{},{},{}\n",
                    r.plane_deg,
                    r.points,
                    r.label.unwrap_or(""),
                    r.fit_percentage.map_or(String::new(), |v| v.to_string())
                );
            }
            s
        }
    };
    print!("{text}");
    let ext = if c.format == Format::Csv { "csv" } else { "json" };
    write_out(&c.out, &format!("recon.{ext}"), &text)
}

fn trial(args: TrialArgs) -> Result<()> {
    let c = &args.common;
    let (default_scene, default_traj) = overshoot_scenario();
    let mut scene = match &args.scene {
        Some(p) => load_scene(p)?,
        None => default_scene,
    };
    if let Some(s) = c.noise_sigma {
        scene.noise_sigma = s;
    }
    scene.seed = c.seed;
    let traj: Vec<TrajectoryFrame> = match (&args.trajectory, args.approach_mm) {
        (Some(p), _) => {
            let text = fs::read_to_string(p).with_context(|| format!("reading {}", p.display()))?;
            serde_json::from_str(&text).with_context(|| format!("parsing {}", p.display()))?
        }
        (None, Some(start)) => lateral_approach(start, 0.0, args.speed_mm, args.frames, args.period_s),
        (None, None) => default_traj,
    };
    let mut cfg = TrialConfig { n_lines: c.n_lines, mode: c.mode.into(), ..TrialConfig::default() };
    cfg.recon.sac.rng_seed = c.seed;
    let trace = run_trial(&scene, &traj, &cfg)?;
    let text = match c.format {
        Format::Csv => trace.to_csv(c.timing),
        Format::Json => {
            let mut t = trace.clone();
            if !c.timing {
                t.frames.iter_mut().for_each(|f| f.elapsed_ms = 0.0);
            }
            serde_json::to_string_pretty(&t)? + "\n"
        }
    };
    print!("{text}");
    eprintln!("verdict: {} (frames to lock: {:?})", trace.verdict.name(), trace.frames_to_lock);
    let ext = if c.format == Format::Csv { "csv" } else { "json" };
    write_out(&c.out, &format!("trace.{ext}"), &text)
}

fn sweep(args: SweepArgs) -> Result<()> {
    let c = &args.common;
    let mut spec = match &args.spec {
        Some(p) => {
            let text = fs::read_to_string(p).with_context(|| format!("reading {}", p.display()))?;
            serde_json::from_str::<ExperimentSpec>(&text).with_context(|| format!("parsing {}", p.display()))?
        }
        None => {
            let objects = if !args.scene.is_empty() {
                let scenes = args.scene.iter().map(|p| load_scene(p)).collect::<Result<Vec<_>>>()?;
                ObjectSource::Scenes { scenes }
            } else {
                match args.objects {
                    Objects::Protocol => ObjectSource::Protocol,
                    Objects::Random => ObjectSource::Random {
                        shapes: args.shapes.iter().map(|s| parse_shape(s)).collect::<Result<_>>()?,
                        per_shape: args.per_shape,
                        tilt_min_deg: args.tilt_min_deg,
                        tilt_max_deg: args.tilt_max_deg,
                        jitter_mm: 0.0,
                    },
                }
            };
            ExperimentSpec {
                noise_sigma: c.noise_sigma,
                reps: args.reps,
                seed: c.seed,
                n_lines: c.n_lines,
                mode: c.mode.into(),
                timing: c.timing,
                ..ExperimentSpec::new(objects)
            }
        }
    };
    if args.spec.is_some() && c.timing {
        spec.timing = true;
    }
    if args.trials {
        let suite_spec = SuiteSpec {
            experiment: spec,
            approach: ApproachModel {
                start_mm: args.approach_mm,
                bias_mm: args.bias_mm,
                speed_mm: args.speed_mm,
                max_frames: args.frames,
                ..ApproachModel::default()
            },
        };
        let suite = run_trajectory_suite(&suite_spec)?;
        let csv = rows_to_csv(&suite.spec_sha256, &suite.rows)?;
        let json = serde_json::to_string_pretty(&suite.summary)? + "\n";
        write_out(&c.out, "trials.csv", &csv)?;
        write_out(&c.out, "summary.json", &json)?;
        print!("{}", if c.format == Format::Csv { &csv } else { &json });
        return Ok(());
    }
    let exp = run_experiment(&spec)?;
    let csv = exp.to_csv()?;
    let json = exp.report.to_json() + "\n";
    write_out(&c.out, "trials.csv", &csv)?;
    write_out(&c.out, "report.json", &json)?;
    print!("{}", if c.format == Format::Csv { &csv } else { &json });
    Ok(())
}

fn main() -> Result<()> {
    match Cli::parse().command {
        Command::Recon(a) => recon(a),
        Command::Trial(a) => trial(a),
        Command::Sweep(a) => sweep(a),
    }
}
