//! Semi-autonomous grasp controller: aim until locked, preshape on a wrist
//! flexion, hand over to direct control on an extension, idle on release.

use serde::{Deserialize, Serialize};

use crate::geometry::{ShapeModel, Vec3};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ControlState {
    Idle,
    Locked,
    Preshaped,
    DirectControl,
}

impl ControlState {
    pub const ALL: [ControlState; 4] =
        [ControlState::Idle, ControlState::Locked, ControlState::Preshaped, ControlState::DirectControl];

    pub fn name(self) -> &'static str {
        match self {
            ControlState::Idle => "idle",
            ControlState::Locked => "locked",
            ControlState::Preshaped => "preshaped",
            ControlState::DirectControl => "direct_control",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "event", rename_all = "snake_case")]
pub enum UserEvent {
    LockAcquired,
    LockLost,
    /// Quick wrist flexion.
    TriggerPreshape,
    /// Quick wrist extension.
    TakeOver,
    ObjectReleased,
    /// Proportional open/close velocity in [-1, 1].
    ProportionalCommand { value: f64 },
}

impl UserEvent {
    /// One representative of each event kind.
    pub const KINDS: [UserEvent; 6] = [
        UserEvent::LockAcquired,
        UserEvent::LockLost,
        UserEvent::TriggerPreshape,
        UserEvent::TakeOver,
        UserEvent::ObjectReleased,
        UserEvent::ProportionalCommand { value: 0.0 },
    ];

    pub fn name(&self) -> &'static str {
        match self {
            UserEvent::LockAcquired => "lock_acquired",
            UserEvent::LockLost => "lock_lost",
            UserEvent::TriggerPreshape => "trigger_preshape",
            UserEvent::TakeOver => "take_over",
            UserEvent::ObjectReleased => "object_released",
            UserEvent::ProportionalCommand { .. } => "proportional_command",
        }
    }
}

/// Next state, or `None` when the pair is not part of the flow.
pub fn try_transition(state: ControlState, event: UserEvent) -> Option<ControlState> {
    use ControlState::*;
    match (state, event) {
        (Idle, UserEvent::LockAcquired) => Some(Locked),
        (Locked, UserEvent::LockLost) => Some(Idle),
        (Locked, UserEvent::TriggerPreshape) => Some(Preshaped),
        // Re-aiming after a preshape the user was not happy with.
        (Preshaped, UserEvent::LockAcquired) => Some(Locked),
        (Preshaped, UserEvent::TakeOver) => Some(DirectControl),
        (DirectControl, UserEvent::ProportionalCommand { value }) if (-1.0..=1.0).contains(&value) => Some(DirectControl),
        (DirectControl, UserEvent::ObjectReleased) => Some(Idle),
        _ => None,
    }
}

/// Total transition function; undefined pairs leave the state unchanged.
pub fn transition(state: ControlState, event: UserEvent) -> ControlState {
    try_transition(state, event).unwrap_or(state)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GraspParams {
    pub margin_mm: f64,
    pub aperture_max_mm: f64,
    /// Largest wrist error still counted as a good grasp.
    pub wrist_tolerance_deg: f64,
}

impl Default for GraspParams {
    fn default() -> Self {
        Self { margin_mm: 15.0, aperture_max_mm: 100.0, wrist_tolerance_deg: 15.0 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ProsthesisConfig {
    /// Roll of the hand about the optical axis, counter-clockwise seen from
    /// behind the sensor, zero with the fingers closing horizontally.
    pub wrist_rotation_deg: f64,
    pub aperture_mm: f64,
    pub grasp_axis: Vec3,
    pub object_too_large: bool,
}

/// Folds an angle in degrees into (-90, 90].
pub fn fold_half_turn(deg: f64) -> f64 {
    let r = deg.rem_euclid(180.0);
    if r > 90.0 {
        r - 180.0
    } else {
        r
    }
}

/// Frontal-plane angle of a direction measured from +y toward -x, folded
/// into (-90, 90]. Directions along the optical axis read as 0.
pub fn frontal_angle_deg(dir: &Vec3) -> f64 {
    if dir.x.hypot(dir.y) < 1e-9 {
        return 0.0;
    }
    fold_half_turn((-dir.x).atan2(dir.y).to_degrees())
}

/// Difference of two half-turn-periodic angles, in [0, 90].
pub fn half_turn_gap_deg(a: f64, b: f64) -> f64 {
    fold_half_turn(a - b).abs()
}

/// Wrist rotation and aperture for a reconstructed object.
pub fn grasp_config(model: &ShapeModel, params: &GraspParams) -> ProsthesisConfig {
    let (wrist, span, axis) = match *model {
        ShapeModel::Sphere { radius, .. } => (0.0, 2.0 * radius, Vec3::y()),
        ShapeModel::Cylinder { axis, radius, .. } => (frontal_angle_deg(&axis), 2.0 * radius, axis),
        ShapeModel::Cuboid { principal_u, principal_v, extent_u, extent_v, .. } => {
            // Close across the narrower face extent, so the hand lines up with the wider one.
            let (long, short) = if extent_u >= extent_v { (principal_u, extent_v) } else { (principal_v, extent_u) };
            (frontal_angle_deg(&long), short, long)
        }
    };
    // The clamp eats into the margin first; only an object wider than the
    // fully open hand is out of reach.
    ProsthesisConfig {
        wrist_rotation_deg: wrist,
        aperture_mm: (span + params.margin_mm).clamp(0.0, params.aperture_max_mm),
        grasp_axis: axis,
        object_too_large: span > params.aperture_max_mm,
    }
}

/// Whether a preshaped hand fits the real object: the aperture spans the
/// true grasp dimension and the wrist is within tolerance of a grasp
/// orientation that dimension allows.
pub fn grasp_fits(config: &ProsthesisConfig, truth: &ShapeModel, params: &GraspParams) -> bool {
    if config.object_too_large {
        return false;
    }
    let ok = |angle: f64, span: f64| {
        config.aperture_mm >= span && half_turn_gap_deg(config.wrist_rotation_deg, angle) <= params.wrist_tolerance_deg
    };
    match *truth {
        ShapeModel::Sphere { radius, .. } => config.aperture_mm >= 2.0 * radius,
        ShapeModel::Cylinder { axis, radius, .. } => ok(frontal_angle_deg(&axis), 2.0 * radius),
        ShapeModel::Cuboid { principal_u, principal_v, extent_u, extent_v, .. } => {
            ok(frontal_angle_deg(&principal_u), extent_v) || ok(frontal_angle_deg(&principal_v), extent_u)
        }
    }
}
