//! Batch experiments: many seeded scenes through the pipeline, one CSV row
//! per trial, and an aggregate report folded from those rows.

use std::collections::BTreeMap;

use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::geometry::ShapeKind;
use crate::metrics::{mean, median, orientation_error_deg, percentile, size_error_mm, std_dev};
use crate::reconstruct::{reconstruct, FailureKind, Outcome, ReconConfig, ReconstructionReport};
use crate::scan_sim::{volume_margin, ScanMode, SCAN_TOLERANCE};
use crate::scene::{protocol_objects, random_object, Scene, SceneError};
use crate::trial::{lateral_approach, run_trial, TrialConfig, TrialTrace, Verdict};

#[derive(Debug, thiserror::Error)]
pub enum HarnessError {
    #[error("invalid experiment spec: {}", .0.join("; "))]
    Invalid(Vec<String>),
    #[error(transparent)]
    Scene(#[from] SceneError),
    #[error(transparent)]
    Pipeline(#[from] crate::Error),
    #[error("csv: {0}")]
    Csv(String),
}

impl From<csv::Error> for HarnessError {
    fn from(e: csv::Error) -> Self {
        HarnessError::Csv(e.to_string())
    }
}

/// Where the trial scenes come from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "source", rename_all = "snake_case")]
pub enum ObjectSource {
    /// The ten fixed test objects.
    Protocol,
    /// `per_shape` random objects of each listed shape, tilted by
    /// ±[tilt_min_deg, tilt_max_deg] from vertical.
    Random {
        shapes: Vec<ShapeKind>,
        per_shape: usize,
        tilt_min_deg: f64,
        tilt_max_deg: f64,
        #[serde(default)]
        jitter_mm: f64,
    },
    /// Explicit scenes; the first object of each is the one judged.
    Scenes { scenes: Vec<Scene> },
}

impl ObjectSource {
    pub fn slots(&self) -> usize {
        match self {
            ObjectSource::Protocol => protocol_objects().len(),
            ObjectSource::Random { shapes, per_shape, .. } => shapes.len() * per_shape,
            ObjectSource::Scenes { scenes } => scenes.len(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentSpec {
    pub objects: ObjectSource,
    /// Overrides the scenes' own noise when set.
    #[serde(default)]
    pub noise_sigma: Option<f64>,
    pub reps: usize,
    pub seed: u64,
    pub n_lines: usize,
    pub mode: ScanMode,
    #[serde(default)]
    pub recon: ReconConfig,
    /// Record wall-clock latency. Off by default so outputs are reproducible.
    #[serde(default)]
    pub timing: bool,
    /// Per-trial seed replacements, by trial id.
    #[serde(default)]
    pub seed_overrides: BTreeMap<usize, u64>,
}

impl ExperimentSpec {
    pub fn new(objects: ObjectSource) -> Self {
        Self {
            objects,
            noise_sigma: None,
            reps: 1,
            seed: 0,
            n_lines: 4,
            mode: ScanMode::Analytic,
            recon: ReconConfig::default(),
            timing: false,
            seed_overrides: BTreeMap::new(),
        }
    }

    pub fn validate(&self) -> Result<(), HarnessError> {
        let mut errs = Vec::new();
        if self.reps == 0 {
            errs.push("reps: must be at least 1".to_string());
        }
        if ![1, 2, 4].contains(&self.n_lines) {
            errs.push(format!("n_lines: must be 1, 2 or 4, got {}", self.n_lines));
        }
        if let Some(s) = self.noise_sigma {
            if !(s >= 0.0 && s.is_finite()) {
                errs.push(format!("noise_sigma: must be a finite non-negative number, got {s}"));
            }
        }
        match &self.objects {
            ObjectSource::Protocol => {}
            ObjectSource::Random { shapes, per_shape, tilt_min_deg, tilt_max_deg, jitter_mm } => {
                if shapes.is_empty() || *per_shape == 0 {
                    errs.push("objects: random source needs at least one shape and per_shape >= 1".into());
                }
                if !(tilt_min_deg <= tilt_max_deg) || tilt_min_deg.is_nan() {
                    errs.push("objects: tilt_min_deg must not exceed tilt_max_deg".into());
                }
                if !(*jitter_mm >= 0.0) {
                    errs.push("objects: jitter_mm must be non-negative".into());
                }
            }
            ObjectSource::Scenes { scenes } => {
                if scenes.is_empty() {
                    errs.push("objects: no scenes given".into());
                }
                for (i, s) in scenes.iter().enumerate() {
                    if let Err(SceneError::Invalid(list)) = s.validate() {
                        errs.extend(list.into_iter().map(|m| format!("scenes[{i}]: {m}")));
                    }
                }
            }
        }
        if let Err(e) = self.recon.sac.validate() {
            errs.push(format!("recon.sac: {e}"));
        }
        if errs.is_empty() {
            Ok(())
        } else {
            Err(HarnessError::Invalid(errs))
        }
    }

    /// Hex SHA-256 of the spec's JSON form.
    pub fn sha256(&self) -> String {
        let json = serde_json::to_string(self).expect("spec serialises");
        hex::encode(Sha256::digest(json.as_bytes()))
    }

    pub fn trial_count(&self) -> usize {
        self.reps * self.objects.slots()
    }

    /// Seed of one trial; depends only on the base seed and the trial id.
    pub fn trial_seed(&self, trial: usize) -> u64 {
        if let Some(s) = self.seed_overrides.get(&trial) {
            return *s;
        }
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        rng.set_stream(trial as u64);
        rng.next_u64()
    }

    /// The scene of one trial.
    pub fn trial_scene(&self, trial: usize) -> Scene {
        let seed = self.trial_seed(trial);
        let slot = trial % self.objects.slots();
        let mut scene = match &self.objects {
            ObjectSource::Protocol => Scene::single(protocol_objects()[slot]),
            ObjectSource::Random { shapes, per_shape, tilt_min_deg, tilt_max_deg, jitter_mm } => {
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                rng.set_stream(1);
                Scene::single(random_object(&mut rng, shapes[slot / per_shape], (*tilt_min_deg, *tilt_max_deg), *jitter_mm))
            }
            ObjectSource::Scenes { scenes } => scenes[slot].clone(),
        };
        scene.seed = seed;
        if let Some(s) = self.noise_sigma {
            scene.noise_sigma = s;
        }
        scene
    }
}

/// Diagnostic bucket of a trial without a correct model.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FailureCause {
    NoObject,
    /// Some scan reached the capture-volume boundary.
    Clipped,
    FitFailure,
    Ambiguity,
}

impl FailureCause {
    pub fn name(self) -> &'static str {
        match self {
            FailureCause::NoObject => "no_object",
            FailureCause::Clipped => "clipped",
            FailureCause::FitFailure => "fit_failure",
            FailureCause::Ambiguity => "ambiguity",
        }
    }
}

/// First matching cause: no points, clipping, fit failure, then ambiguity
/// (which also covers a wrong shape).
pub fn attribute_failure(report: &ReconstructionReport) -> FailureCause {
    if report.scans.iter().all(|s| s.points.is_empty()) {
        return FailureCause::NoObject;
    }
    let clipped = report.scans.iter().flat_map(|s| &s.points).any(|p| volume_margin(p) <= SCAN_TOLERANCE);
    if clipped {
        return FailureCause::Clipped;
    }
    match &report.outcome {
        Outcome::NotReconstructed { cause: FailureKind::FitFailure | FailureKind::NoObject, .. } => FailureCause::FitFailure,
        _ => FailureCause::Ambiguity,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialRow {
    pub trial: usize,
    pub seed: u64,
    pub shape: ShapeKind,
    pub orientation: String,
    pub true_size_mm: f64,
    pub n_lines: usize,
    pub mode: ScanMode,
    pub noise_sigma: f64,
    pub estimated_shape: Option<ShapeKind>,
    pub correct: bool,
    pub size_error_mm: Option<f64>,
    pub size_error_pct: Option<f64>,
    pub orientation_error_deg: Option<f64>,
    pub failure: Option<FailureCause>,
    pub elapsed_ms: f64,
}

/// Runs one trial of an experiment.
pub fn run_recon_trial(spec: &ExperimentSpec, trial: usize) -> Result<TrialRow, HarnessError> {
    let scene = spec.trial_scene(trial);
    let target = scene.objects.first().ok_or_else(|| HarnessError::Invalid(vec![format!("trial {trial}: empty scene")]))?;
    let scans = spec.mode.scan(&scene, spec.n_lines)?;
    let mut recon = spec.recon;
    recon.sac.rng_seed = scene.seed;
    if !spec.timing {
        recon.parallel = false;
    }
    let report = reconstruct(&scans, &recon);
    let truth = target.truth(&scene.sensor);
    let true_size = target.grasp_size();
    let model = report.model();
    let correct = model.is_some_and(|m| m.kind() == target.shape);
    let (size_err, size_pct, ori_err) = match model.filter(|_| correct) {
        Some(m) => {
            let e = size_error_mm(m, true_size);
            (Some(e), Some(100.0 * e / true_size), orientation_error_deg(m, &truth))
        }
        None => (None, None, None),
    };
    Ok(TrialRow {
        trial,
        seed: scene.seed,
        shape: target.shape,
        orientation: target.orientation.label(),
        true_size_mm: true_size,
        n_lines: spec.n_lines,
        mode: spec.mode,
        noise_sigma: scene.noise_sigma,
        estimated_shape: model.map(|m| m.kind()),
        correct,
        size_error_mm: size_err,
        size_error_pct: size_pct,
        orientation_error_deg: ori_err,
        failure: (!correct).then(|| attribute_failure(&report)),
        elapsed_ms: if spec.timing { report.elapsed_ms } else { 0.0 },
    })
}

/// Maps `f` over trial ids, in parallel when allowed; results come back
/// in id order.
fn map_trials<T: Send>(n: usize, parallel: bool, f: impl Fn(usize) -> T + Sync) -> Vec<T> {
    #[cfg(not(target_arch = "wasm32"))]
    if parallel && n > 1 {
        let workers = std::thread::available_parallelism().map_or(1, |p| p.get()).min(n);
        let f = &f;
        let mut out: Vec<(usize, T)> = std::thread::scope(|s| {
            let handles: Vec<_> = (0..workers)
                .map(|w| s.spawn(move || (w..n).step_by(workers).map(|i| (i, f(i))).collect::<Vec<_>>()))
                .collect();
            handles.into_iter().flat_map(|h| h.join().expect("trial worker panicked")).collect()
        });
        out.sort_by_key(|(i, _)| *i);
        return out.into_iter().map(|(_, t)| t).collect();
    }
    let _ = parallel;
    (0..n).map(f).collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ShapeMetrics {
    pub shape: ShapeKind,
    pub attempts: usize,
    pub correct: usize,
    pub success_rate_pct: f64,
    pub size_mae_mm: Option<f64>,
    pub size_sd_mm: Option<f64>,
    pub size_mae_pct: Option<f64>,
    pub orientation_mae_deg: Option<f64>,
    pub orientation_sd_deg: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LatencySummary {
    pub mean_ms: f64,
    pub median_ms: f64,
    pub p90_ms: f64,
    pub p99_ms: f64,
    pub max_ms: f64,
}

/// Aggregate of an experiment. Error means are over correct-shape trials only.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    pub spec_sha256: String,
    pub trials: usize,
    pub success_rate_pct: f64,
    pub per_shape: Vec<ShapeMetrics>,
    pub latency: Option<LatencySummary>,
    pub failures: BTreeMap<FailureCause, usize>,
}

fn finite(v: f64) -> Option<f64> {
    v.is_finite().then_some(v)
}

impl MetricsReport {
    /// Folds rows (taken in trial order) into the report.
    pub fn from_rows(spec_sha256: &str, rows: &[TrialRow], timing: bool) -> Self {
        let mut rows: Vec<&TrialRow> = rows.iter().collect();
        rows.sort_by_key(|r| r.trial);
        let per_shape = ShapeKind::ALL
            .iter()
            .filter_map(|&shape| {
                let of: Vec<&&TrialRow> = rows.iter().filter(|r| r.shape == shape).collect();
                if of.is_empty() {
                    return None;
                }
                let ok: Vec<&&TrialRow> = of.iter().copied().filter(|r| r.correct).collect();
                let size: Vec<f64> = ok.iter().filter_map(|r| r.size_error_mm).collect();
                let pct: Vec<f64> = ok.iter().filter_map(|r| r.size_error_pct).collect();
                let ori: Vec<f64> = ok.iter().filter_map(|r| r.orientation_error_deg).collect();
                Some(ShapeMetrics {
                    shape,
                    attempts: of.len(),
                    correct: ok.len(),
                    success_rate_pct: 100.0 * ok.len() as f64 / of.len() as f64,
                    size_mae_mm: finite(mean(&size)),
                    size_sd_mm: finite(std_dev(&size)),
                    size_mae_pct: finite(mean(&pct)),
                    orientation_mae_deg: finite(mean(&ori)),
                    orientation_sd_deg: finite(std_dev(&ori)),
                })
            })
            .collect();
        let latency = (timing && !rows.is_empty()).then(|| {
            let t: Vec<f64> = rows.iter().map(|r| r.elapsed_ms).collect();
            LatencySummary {
                mean_ms: mean(&t),
                median_ms: median(&t),
                p90_ms: percentile(&t, 90.0),
                p99_ms: percentile(&t, 99.0),
                max_ms: t.iter().copied().fold(f64::NEG_INFINITY, f64::max),
            }
        });
        let mut failures = BTreeMap::new();
        for f in rows.iter().filter_map(|r| r.failure) {
            *failures.entry(f).or_insert(0) += 1;
        }
        let correct = rows.iter().filter(|r| r.correct).count();
        MetricsReport {
            spec_sha256: spec_sha256.to_string(),
            trials: rows.len(),
            success_rate_pct: if rows.is_empty() { 0.0 } else { 100.0 * correct as f64 / rows.len() as f64 },
            per_shape,
            latency,
            failures,
        }
    }

    pub fn shape(&self, shape: ShapeKind) -> Option<&ShapeMetrics> {
        self.per_shape.iter().find(|m| m.shape == shape)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serialises")
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Experiment {
    pub spec_sha256: String,
    pub rows: Vec<TrialRow>,
    pub report: MetricsReport,
}

impl Experiment {
    pub fn to_csv(&self) -> Result<String, HarnessError> {
        rows_to_csv(&self.spec_sha256, &self.rows)
    }
}

pub fn run_experiment(spec: &ExperimentSpec) -> Result<Experiment, HarnessError> {
    spec.validate()?;
    let hash = spec.sha256();
    // Timed runs go one trial at a time so latencies are not inflated by
    // neighbours competing for cores.
    let rows = map_trials(spec.trial_count(), !spec.timing, |i| run_recon_trial(spec, i))
        .into_iter()
        .collect::<Result<Vec<_>, _>>()?;
    let report = MetricsReport::from_rows(&hash, &rows, spec.timing);
    Ok(Experiment { spec_sha256: hash, rows, report })
}

pub const SPEC_HASH_PREFIX: &str = "# spec_sha256=";

pub fn rows_to_csv<T: Serialize>(spec_sha256: &str, rows: &[T]) -> Result<String, HarnessError> {
    let mut w = csv::Writer::from_writer(Vec::new());
    for r in rows {
        w.serialize(r)?;
    }
    let body = String::from_utf8(w.into_inner().map_err(|e| HarnessError::Csv(e.to_string()))?)
        .map_err(|e| HarnessError::Csv(e.to_string()))?;
    Ok(format!("{SPEC_HASH_PREFIX}{spec_sha256}\n{body}"))
}

/// Reads back a CSV written by [`rows_to_csv`]: the spec hash and the rows.
pub fn rows_from_csv<T: serde::de::DeserializeOwned>(text: &str) -> Result<(String, Vec<T>), HarnessError> {
    let (first, body) = text.split_once('\n').unwrap_or((text, ""));
    let hash = first
        .strip_prefix(SPEC_HASH_PREFIX)
        .ok_or_else(|| HarnessError::Csv("missing spec hash line".into()))?
        .to_string();
    let mut r = csv::Reader::from_reader(body.as_bytes());
    let rows = r.deserialize().collect::<Result<Vec<T>, _>>()?;
    Ok((hash, rows))
}

/// Simulated aiming behaviour of a suite: the aim starts `start_mm + bias_mm`
/// off the object and closes in at `speed_mm` per frame.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ApproachModel {
    pub start_mm: f64,
    #[serde(default)]
    pub bias_mm: f64,
    pub speed_mm: f64,
    pub max_frames: usize,
    pub period_s: f64,
    /// Fixed time to carry the object once grasped.
    pub transport_s: f64,
    /// Draw the approach direction per trial instead of coming from the right.
    #[serde(default)]
    pub random_direction: bool,
}

impl Default for ApproachModel {
    fn default() -> Self {
        Self { start_mm: 40.0, bias_mm: 0.0, speed_mm: 5.0, max_frames: 60, period_s: 1.0 / 7.0, transport_s: 3.0, random_direction: false }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SuiteSpec {
    pub experiment: ExperimentSpec,
    pub approach: ApproachModel,
}

impl SuiteSpec {
    pub fn sha256(&self) -> String {
        let json = serde_json::to_string(self).expect("spec serialises");
        hex::encode(Sha256::digest(json.as_bytes()))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SuiteRow {
    pub trial: usize,
    pub seed: u64,
    pub shape: ShapeKind,
    pub approach_deg: f64,
    pub verdict: Verdict,
    pub frames_to_lock: Option<usize>,
    pub completion_s: Option<f64>,
    pub estimated_shape: Option<ShapeKind>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SuiteSummary {
    pub spec_sha256: String,
    pub trials: usize,
    pub success_rate_pct: f64,
    pub timeout_rate_pct: f64,
    pub frames_to_lock_median: Option<f64>,
    pub frames_to_lock_p90: Option<f64>,
    pub completion_s_median: Option<f64>,
    pub completion_s_p10: Option<f64>,
    pub completion_s_p90: Option<f64>,
}

impl SuiteSummary {
    pub fn from_rows(spec_sha256: &str, rows: &[SuiteRow]) -> Self {
        let n = rows.len().max(1) as f64;
        let frames: Vec<f64> = rows.iter().filter_map(|r| r.frames_to_lock.map(|f| f as f64)).collect();
        let done: Vec<f64> = rows.iter().filter_map(|r| r.completion_s).collect();
        let count = |v: Verdict| rows.iter().filter(|r| r.verdict == v).count() as f64;
        SuiteSummary {
            spec_sha256: spec_sha256.to_string(),
            trials: rows.len(),
            success_rate_pct: 100.0 * count(Verdict::Success) / n,
            timeout_rate_pct: 100.0 * count(Verdict::Timeout) / n,
            frames_to_lock_median: finite(median(&frames)),
            frames_to_lock_p90: finite(percentile(&frames, 90.0)),
            completion_s_median: finite(median(&done)),
            completion_s_p10: finite(percentile(&done, 10.0)),
            completion_s_p90: finite(percentile(&done, 90.0)),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Suite {
    pub spec_sha256: String,
    pub rows: Vec<SuiteRow>,
    pub traces: Vec<TrialTrace>,
    pub summary: SuiteSummary,
}

pub fn run_trajectory_suite(spec: &SuiteSpec) -> Result<Suite, HarnessError> {
    let exp = &spec.experiment;
    exp.validate()?;
    let a = spec.approach;
    if !(a.speed_mm >= 0.0 && a.period_s > 0.0 && a.max_frames > 0) {
        return Err(HarnessError::Invalid(vec!["approach: needs speed_mm >= 0, period_s > 0, max_frames >= 1".into()]));
    }
    let hash = spec.sha256();
    let results = map_trials(exp.trial_count(), !exp.timing, |i| -> Result<(SuiteRow, TrialTrace), HarnessError> {
        let scene = exp.trial_scene(i);
        let seed = scene.seed;
        let dir = if a.random_direction {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(2);
            (rng.next_u64() >> 11) as f64 / (1u64 << 53) as f64 * 360.0
        } else {
            0.0
        };
        let traj = lateral_approach(a.start_mm + a.bias_mm, dir, a.speed_mm, a.max_frames, a.period_s);
        let mut recon = exp.recon;
        recon.sac.rng_seed = seed;
        recon.parallel = exp.timing;
        let cfg = TrialConfig { n_lines: exp.n_lines, mode: exp.mode, recon, ..TrialConfig::default() };
        let mut trace = run_trial(&scene, &traj, &cfg)?;
        if !exp.timing {
            trace.frames.iter_mut().for_each(|f| f.elapsed_ms = 0.0);
        }
        let row = SuiteRow {
            trial: i,
            seed,
            shape: scene.objects[0].shape,
            approach_deg: dir,
            verdict: trace.verdict,
            frames_to_lock: trace.frames_to_lock,
            completion_s: trace.frames_to_lock.map(|f| f as f64 * a.period_s + a.transport_s),
            estimated_shape: trace.frames.last().and_then(|f| f.shape),
        };
        Ok((row, trace))
    });
    let (rows, traces): (Vec<_>, Vec<_>) = results.into_iter().collect::<Result<Vec<_>, _>>()?.into_iter().unzip();
    let summary = SuiteSummary::from_rows(&hash, &rows);
    Ok(Suite { spec_sha256: hash, rows, traces, summary })
}
