//! Ground-truth scenes: the JSON scene file, the sensor pose and the
//! conversion of scene objects into sensor-frame solids.

use std::path::Path;

use nalgebra::Rotation3;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::geometry::{try_normalize, ShapeKind, ShapeModel, Vec3};
use crate::scan_sim::Solid;

#[derive(Debug, thiserror::Error)]
pub enum SceneError {
    #[error("{path}: {source}")]
    Io { path: String, source: std::io::Error },
    #[error("{path}:{line}:{column}: {message}")]
    Parse { path: String, line: usize, column: usize, message: String },
    #[error("invalid scene: {}", .0.join("; "))]
    Invalid(Vec<String>),
}

/// Rigid placement of the sensor in the world. The sensor looks along its
/// own +z with +y up; `rotation_deg` are roll, pitch, yaw about the world
/// x, y, z axes applied in that order.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct SensorPose {
    pub position: [f64; 3],
    pub rotation_deg: [f64; 3],
}

impl SensorPose {
    pub fn rotation(&self) -> Rotation3<f64> {
        let [r, p, y] = self.rotation_deg.map(f64::to_radians);
        Rotation3::from_euler_angles(r, p, y)
    }

    pub fn point_to_sensor(&self, p: &Vec3) -> Vec3 {
        self.rotation().inverse() * (p - Vec3::from(self.position))
    }

    pub fn dir_to_sensor(&self, v: &Vec3) -> Vec3 {
        self.rotation().inverse() * v
    }

    pub fn point_to_world(&self, p: &Vec3) -> Vec3 {
        self.rotation() * p + Vec3::from(self.position)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NamedOrientation {
    Upright,
    Laying,
    TiltedLeft,
    TiltedRight,
}

/// Tilt of the named `tilted_*` orientations away from vertical.
pub const NAMED_TILT_DEG: f64 = 30.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Orientation {
    Named(NamedOrientation),
    Axis { axis: [f64; 3] },
}

impl Default for Orientation {
    fn default() -> Self {
        Orientation::Named(NamedOrientation::Upright)
    }
}

impl Orientation {
    /// Tilt from vertical about the z axis, positive toward +x.
    pub fn tilted(deg: f64) -> Self {
        let t = deg.to_radians();
        Orientation::Axis { axis: [t.sin(), t.cos(), 0.0] }
    }

    /// World-frame longitudinal axis (unnormalised for explicit axes).
    pub fn axis(&self) -> Vec3 {
        let s = NAMED_TILT_DEG.to_radians().sin();
        let c = NAMED_TILT_DEG.to_radians().cos();
        match *self {
            Orientation::Named(NamedOrientation::Upright) => Vec3::y(),
            Orientation::Named(NamedOrientation::Laying) => Vec3::x(),
            Orientation::Named(NamedOrientation::TiltedLeft) => Vec3::new(-s, c, 0.0),
            Orientation::Named(NamedOrientation::TiltedRight) => Vec3::new(s, c, 0.0),
            Orientation::Axis { axis } => Vec3::from(axis),
        }
    }

    pub fn label(&self) -> String {
        match self {
            Orientation::Named(NamedOrientation::Upright) => "upright".into(),
            Orientation::Named(NamedOrientation::Laying) => "laying".into(),
            Orientation::Named(NamedOrientation::TiltedLeft) => "tilted_left".into(),
            Orientation::Named(NamedOrientation::TiltedRight) => "tilted_right".into(),
            Orientation::Axis { axis } => format!("axis({:.3},{:.3},{:.3})", axis[0], axis[1], axis[2]),
        }
    }
}

/// One object of a scene, in world coordinates.
///
/// `size_mm` is the grasp dimension: diameter of spheres and cylinders, the
/// narrow face extent of cuboids. `length_mm` is the extent along the
/// orientation axis, `depth_mm` the cuboid extent away from the sensor.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SceneObject {
    pub shape: ShapeKind,
    pub size_mm: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub length_mm: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub depth_mm: Option<f64>,
    pub position: [f64; 3],
    #[serde(default)]
    pub orientation: Orientation,
}

impl SceneObject {
    pub fn sphere(diameter: f64, position: [f64; 3]) -> Self {
        Self { shape: ShapeKind::Sphere, size_mm: diameter, length_mm: None, depth_mm: None, position, orientation: Orientation::default() }
    }

    pub fn cylinder(diameter: f64, length: f64, position: [f64; 3], orientation: Orientation) -> Self {
        Self { shape: ShapeKind::Cylinder, size_mm: diameter, length_mm: Some(length), depth_mm: None, position, orientation }
    }

    pub fn cuboid(width: f64, length: f64, depth: f64, position: [f64; 3], orientation: Orientation) -> Self {
        Self { shape: ShapeKind::Cuboid, size_mm: width, length_mm: Some(length), depth_mm: Some(depth), position, orientation }
    }

    pub fn length(&self) -> f64 {
        self.length_mm.unwrap_or(2.0 * self.size_mm)
    }

    pub fn depth(&self) -> f64 {
        self.depth_mm.unwrap_or(self.size_mm)
    }

    fn validate(&self, i: usize, errs: &mut Vec<String>) {
        let finite = |v: f64| v.is_finite();
        if !(self.size_mm > 0.0 && finite(self.size_mm)) {
            errs.push(format!("objects[{i}].size_mm must be positive"));
        }
        if let Some(l) = self.length_mm {
            if !(l > 0.0 && finite(l)) {
                errs.push(format!("objects[{i}].length_mm must be positive"));
            }
        }
        if let Some(d) = self.depth_mm {
            if !(d > 0.0 && finite(d)) {
                errs.push(format!("objects[{i}].depth_mm must be positive"));
            }
        }
        if !self.position.iter().all(|v| finite(*v)) {
            errs.push(format!("objects[{i}].position must be finite"));
        }
        if try_normalize(&self.orientation.axis()).is_none() {
            errs.push(format!("objects[{i}].orientation axis must be non-zero"));
        }
    }

    /// The solid in the sensor frame.
    pub fn solid(&self, pose: &SensorPose) -> Solid {
        let center = pose.point_to_sensor(&Vec3::from(self.position));
        let axis = pose.dir_to_sensor(&try_normalize(&self.orientation.axis()).unwrap_or_else(Vec3::y));
        match self.shape {
            ShapeKind::Sphere => Solid::Sphere { center, radius: self.size_mm / 2.0 },
            ShapeKind::Cylinder => Solid::Cylinder { center, axis, radius: self.size_mm / 2.0, length: self.length() },
            ShapeKind::Cuboid => {
                let (e_len, e_w, e_d) = cuboid_frame(&axis);
                Solid::Cuboid {
                    center,
                    axes: [e_len, e_w, e_d],
                    half: [self.length() / 2.0, self.size_mm / 2.0, self.depth() / 2.0],
                }
            }
        }
    }

    /// Ground-truth model in the sensor frame, in the same form the
    /// reconstruction reports.
    pub fn truth(&self, pose: &SensorPose) -> ShapeModel {
        match self.solid(pose) {
            Solid::Sphere { center, radius } => ShapeModel::Sphere { center, radius },
            Solid::Cylinder { center, axis, radius, length } => ShapeModel::Cylinder { center, axis, radius, length },
            Solid::Cuboid { center, axes, half } => {
                // Report the face turned toward the sensor.
                let e_d = if axes[2].dot(&center) > 0.0 { -axes[2] } else { axes[2] };
                ShapeModel::Cuboid {
                    face_center: center + e_d * half[2],
                    face_normal: e_d,
                    principal_u: axes[0],
                    principal_v: axes[1],
                    extent_u: 2.0 * half[0],
                    extent_v: 2.0 * half[1],
                }
            }
        }
    }

    pub fn grasp_size(&self) -> f64 {
        match self.shape {
            ShapeKind::Cuboid => self.size_mm.min(self.length()),
            _ => self.size_mm,
        }
    }
}

/// Orthonormal frame of a cuboid with longitudinal axis `axis`: the width
/// direction is kept in the sensor's frontal plane where possible.
pub fn cuboid_frame(axis: &Vec3) -> (Vec3, Vec3, Vec3) {
    let e_len = try_normalize(axis).unwrap_or_else(Vec3::y);
    let e_w = try_normalize(&Vec3::z().cross(&e_len)).unwrap_or_else(Vec3::x);
    let e_d = e_len.cross(&e_w);
    (e_len, e_w, e_d)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Scene {
    #[serde(default)]
    pub sensor: SensorPose,
    #[serde(default)]
    pub noise_sigma: f64,
    #[serde(default)]
    pub seed: u64,
    pub objects: Vec<SceneObject>,
}

impl Scene {
    pub fn single(object: SceneObject) -> Self {
        Self { sensor: SensorPose::default(), noise_sigma: 0.0, seed: 0, objects: vec![object] }
    }

    pub fn solids(&self) -> Vec<Solid> {
        self.objects.iter().map(|o| o.solid(&self.sensor)).collect()
    }

    /// Checks field ranges and that no two objects overlap. Overlap is
    /// tested on a dense surface sampling of each object.
    pub fn validate(&self) -> Result<(), SceneError> {
        let mut errs = Vec::new();
        if !(self.noise_sigma >= 0.0 && self.noise_sigma.is_finite()) {
            errs.push("noise_sigma must be a finite value >= 0".to_string());
        }
        if !self.sensor.position.iter().chain(&self.sensor.rotation_deg).all(|v| v.is_finite()) {
            errs.push("sensor pose must be finite".to_string());
        }
        for (i, o) in self.objects.iter().enumerate() {
            o.validate(i, &mut errs);
        }
        if errs.is_empty() {
            let solids = self.solids();
            for i in 0..solids.len() {
                for j in i + 1..solids.len() {
                    if solids[i].overlaps(&solids[j]) {
                        errs.push(format!("objects[{i}] and objects[{j}] intersect"));
                    }
                }
            }
        }
        if errs.is_empty() {
            Ok(())
        } else {
            Err(SceneError::Invalid(errs))
        }
    }

    pub fn from_json(text: &str, path: &str) -> Result<Self, SceneError> {
        let scene: Scene = serde_json::from_str(text).map_err(|e| SceneError::Parse {
            path: path.to_string(),
            line: e.line(),
            column: e.column(),
            message: e.to_string(),
        })?;
        scene.validate()?;
        Ok(scene)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("scene serialises")
    }

    pub fn load(path: &Path) -> Result<Self, SceneError> {
        let shown = path.display().to_string();
        let text = std::fs::read_to_string(path).map_err(|source| SceneError::Io { path: shown.clone(), source })?;
        Self::from_json(&text, &shown)
    }
}

/// Depth of the sensor-facing surface used by the protocol scenes.
pub const PROTOCOL_FRONT_Z: f64 = 170.0;

fn front_placed(front_offset: f64) -> [f64; 3] {
    [0.0, 0.0, PROTOCOL_FRONT_Z + front_offset]
}

/// The ten test objects: two spheres, four cylinders, four cuboids with
/// grasp sizes 35 to 85 mm, each on the optical axis with its front
/// surface 170 mm from the sensor.
pub fn protocol_objects() -> Vec<SceneObject> {
    use NamedOrientation::*;
    let n = Orientation::Named;
    let cyl = |d: f64, len: f64, o| SceneObject::cylinder(d, len, front_placed(d / 2.0), n(o));
    let cub = |w: f64, len: f64, o| SceneObject::cuboid(w, len, 40.0, front_placed(20.0), n(o));
    vec![
        SceneObject::sphere(50.0, front_placed(25.0)),
        SceneObject::sphere(85.0, front_placed(42.5)),
        cyl(60.0, 120.0, Upright),
        cyl(80.0, 140.0, Laying),
        cyl(35.0, 120.0, TiltedLeft),
        cyl(45.0, 120.0, TiltedRight),
        cub(80.0, 120.0, Upright),
        cub(55.0, 120.0, Laying),
        cub(35.0, 90.0, TiltedLeft),
        cub(45.0, 100.0, TiltedRight),
    ]
}

/// Protocol scenes with a given noise level and seed.
pub fn protocol_scenes(noise_sigma: f64, seed: u64) -> Vec<Scene> {
    protocol_objects()
        .into_iter()
        .map(|o| Scene { noise_sigma, seed, ..Scene::single(o) })
        .collect()
}

/// A random object of the given kind for sweeps: grasp size in [35, 85] mm,
/// tilt from vertical drawn from ±`tilt_range_deg`, placed on the optical
/// axis with its front near 170 mm and a small lateral jitter.
pub fn random_object<R: Rng>(rng: &mut R, shape: ShapeKind, tilt_range_deg: (f64, f64), jitter_mm: f64) -> SceneObject {
    let size = rng.random_range(35.0..=85.0);
    let (lo, hi) = tilt_range_deg;
    let mut tilt = if hi > lo { rng.random_range(lo..hi) } else { lo };
    if rng.random_bool(0.5) {
        tilt = -tilt;
    }
    let jitter = |rng: &mut R| if jitter_mm > 0.0 { rng.random_range(-jitter_mm..jitter_mm) } else { 0.0 };
    let (dx, dy) = (jitter(rng), jitter(rng));
    let place = |front: f64| [dx, dy, PROTOCOL_FRONT_Z + front];
    match shape {
        ShapeKind::Sphere => SceneObject::sphere(size, place(size / 2.0)),
        ShapeKind::Cylinder => {
            let len = rng.random_range(100.0..=140.0);
            SceneObject::cylinder(size, len, place(size / 2.0), Orientation::tilted(tilt))
        }
        ShapeKind::Cuboid => {
            let width = size.min(60.0);
            let len = (width * rng.random_range(2.0..=2.8)).max(90.0);
            SceneObject::cuboid(width, len, 40.0, place(20.0), Orientation::tilted(tilt))
        }
    }
}
