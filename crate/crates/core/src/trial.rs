//! Closed-loop replay of an aiming trajectory: every frame is scanned,
//! reconstructed and turned into tactor cues, and the controller preshapes
//! the hand as soon as the lock holds.

use serde::{Deserialize, Serialize};

use crate::control::{frontal_angle_deg, grasp_config, grasp_fits, transition, ControlState, GraspParams, ProsthesisConfig, UserEvent};
use crate::error::{Error, Result};
use crate::feedback::{aim_cue, FeedbackConfig, FeedbackState};
use crate::geometry::{ShapeKind, ShapeModel};
use crate::reconstruct::{reconstruct, ReconConfig};
use crate::scan_sim::ScanMode;
use crate::scene::{Orientation, Scene, SceneObject, SensorPose, PROTOCOL_FRONT_Z};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrajectoryFrame {
    pub t: f64,
    pub pose: SensorPose,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrialConfig {
    pub n_lines: usize,
    pub mode: ScanMode,
    pub recon: ReconConfig,
    pub feedback: FeedbackConfig,
    pub grasp: GraspParams,
    /// Object whose grasp is judged.
    pub target: usize,
}

impl Default for TrialConfig {
    fn default() -> Self {
        Self {
            n_lines: 4,
            mode: ScanMode::Analytic,
            recon: ReconConfig::default(),
            feedback: FeedbackConfig::default(),
            grasp: GraspParams::default(),
            target: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FrameRecord {
    pub t: f64,
    pub state: ControlState,
    pub feedback: FeedbackState,
    pub amplitudes: [f64; 4],
    pub shape: Option<ShapeKind>,
    pub size_mm: Option<f64>,
    /// Frontal-plane angle of the reconstructed principal axis.
    pub orientation_deg: Option<f64>,
    pub elapsed_ms: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EventRecord {
    pub frame: usize,
    pub event: UserEvent,
    pub from: ControlState,
    pub to: ControlState,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    Success,
    Failure,
    Timeout,
}

impl Verdict {
    pub fn name(self) -> &'static str {
        match self {
            Verdict::Success => "success",
            Verdict::Failure => "failure",
            Verdict::Timeout => "timeout",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialTrace {
    pub frames: Vec<FrameRecord>,
    pub events: Vec<EventRecord>,
    pub verdict: Verdict,
    pub config: Option<ProsthesisConfig>,
    /// 1-based frame at which the preshape was triggered.
    pub frames_to_lock: Option<usize>,
}

pub const TRACE_CSV_HEADER: &str = "t,state,amp_up,amp_right,amp_down,amp_left,shape,size_mm,orientation_deg,elapsed_ms";

fn opt(v: Option<f64>) -> String {
    v.map_or(String::new(), |x| x.to_string())
}

impl TrialTrace {
    /// One line per frame. Timing is written as 0 unless asked for, so
    /// reruns compare byte for byte.
    pub fn to_csv(&self, with_timing: bool) -> String {
        let mut out = String::from(TRACE_CSV_HEADER);
        out.push('\n');
        for f in &self.frames {
            let a = f.amplitudes;
            out.push_str(&format!(
                "{},{},{},{},{},{},{},{},{},{}\n",
                f.t,
                f.state.name(),
                a[0],
                a[1],
                a[2],
                a[3],
                f.shape.map_or("", ShapeKind::name),
                opt(f.size_mm),
                opt(f.orientation_deg),
                if with_timing { f.elapsed_ms } else { 0.0 }
            ));
        }
        out
    }
}

fn frame_seed(base: u64, frame: usize) -> u64 {
    base ^ (frame as u64 + 1).wrapping_mul(0x9e37_79b9_7f4a_7c15)
}

fn model_orientation(m: &ShapeModel) -> Option<f64> {
    match m {
        ShapeModel::Sphere { .. } => None,
        _ => m.principal_axis().map(|a| frontal_angle_deg(&a)),
    }
}

/// Replays `trajectory` against `scene`. The simulated user triggers the
/// preshape on the first locked frame; a trajectory that never locks ends
/// in `Verdict::Timeout`.
pub fn run_trial(scene: &Scene, trajectory: &[TrajectoryFrame], cfg: &TrialConfig) -> Result<TrialTrace> {
    if cfg.target >= scene.objects.len() {
        return Err(Error::ContractViolation("target index outside the scene"));
    }
    let mut state = ControlState::Idle;
    let mut frames = Vec::with_capacity(trajectory.len());
    let mut events = Vec::new();
    let mut apply = |state: &mut ControlState, frame: usize, event: UserEvent| {
        let to = transition(*state, event);
        events.push(EventRecord { frame, event, from: *state, to });
        *state = to;
    };
    for (k, step) in trajectory.iter().enumerate() {
        let frame_scene = Scene { sensor: step.pose, seed: frame_seed(scene.seed, k), ..scene.clone() };
        let scans = cfg.mode.scan(&frame_scene, cfg.n_lines)?;
        let mut recon_cfg = cfg.recon;
        recon_cfg.sac.rng_seed = frame_seed(cfg.recon.sac.rng_seed, k);
        let report = reconstruct(&scans, &recon_cfg);
        let cue = aim_cue(&scans, report.is_ok(), &cfg.feedback);
        let locked = cue.state == FeedbackState::Locked;
        match state {
            ControlState::Idle | ControlState::Preshaped if locked => apply(&mut state, k, UserEvent::LockAcquired),
            ControlState::Locked if !locked => apply(&mut state, k, UserEvent::LockLost),
            _ => {}
        }
        let model = report.model().copied();
        let mut done = None;
        if state == ControlState::Locked {
            apply(&mut state, k, UserEvent::TriggerPreshape);
            let model = model.expect("lock implies a model");
            let config = grasp_config(&model, &cfg.grasp);
            let truth = scene.objects[cfg.target].truth(&step.pose);
            let verdict = if grasp_fits(&config, &truth, &cfg.grasp) { Verdict::Success } else { Verdict::Failure };
            done = Some((config, verdict));
        }
        frames.push(FrameRecord {
            t: step.t,
            state,
            feedback: cue.state,
            amplitudes: cue.state.amplitudes(&cfg.feedback),
            shape: model.map(|m| m.kind()),
            size_mm: model.map(|m| m.grasp_size()),
            orientation_deg: model.as_ref().and_then(model_orientation),
            elapsed_ms: report.elapsed_ms,
        });
        if let Some((config, verdict)) = done {
            return Ok(TrialTrace { frames, events, verdict, config: Some(config), frames_to_lock: Some(k + 1) });
        }
    }
    Ok(TrialTrace { frames, events, verdict: Verdict::Timeout, config: None, frames_to_lock: None })
}

/// Sensor translated sideways by (dx, dy) mm, looking straight ahead, so
/// that an object on the world axis appears at (-dx, -dy).
pub fn lateral_pose(dx: f64, dy: f64) -> SensorPose {
    SensorPose { position: [dx, dy, 0.0], rotation_deg: [0.0; 3] }
}

/// Aim that starts `start_mm` to the side (along `direction_deg` in the
/// frontal plane) and closes in at `speed_mm` per frame until centred.
pub fn lateral_approach(start_mm: f64, direction_deg: f64, speed_mm: f64, n_frames: usize, period_s: f64) -> Vec<TrajectoryFrame> {
    let (s, c) = direction_deg.to_radians().sin_cos();
    (0..n_frames)
        .map(|k| {
            let r = (start_mm - speed_mm * k as f64).max(0.0);
            TrajectoryFrame { t: k as f64 * period_s, pose: lateral_pose(r * c, r * s) }
        })
        .collect()
}

/// Aim that stays `offset_mm` to the side for every frame.
pub fn stuck_aim(offset_mm: f64, n_frames: usize, period_s: f64) -> Vec<TrajectoryFrame> {
    lateral_approach(offset_mm, 0.0, 0.0, n_frames, period_s)
}

/// The three-frame overshoot scenario: a slim upright cylinder first seen
/// far to the right, then passed by so it sits just left of the axis, then
/// pierced.
pub fn overshoot_scenario() -> (Scene, Vec<TrajectoryFrame>) {
    let d = 35.0;
    let target = SceneObject::cylinder(d, 120.0, [0.0, 0.0, PROTOCOL_FRONT_Z + d / 2.0], Orientation::tilted(0.0));
    let frames = [(0.0, -55.0), (1.0, 25.0), (2.0, 0.0)]
        .map(|(t, dx)| TrajectoryFrame { t, pose: lateral_pose(dx, 0.0) })
        .to_vec();
    (Scene::single(target), frames)
}
