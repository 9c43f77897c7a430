//! Synthetic laser scans.
//!
//! Two sources: analytic cuts (rays swept inside each scan plane, with the
//! ends of every visible curve located by bisection) and an emulated depth
//! camera whose cloud is truncated to the capture volume and split into
//! scan lines by plane distance.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::geometry::{Point3, ScanPlane, Vec3};
use crate::scene::Scene;
use crate::{Error, Result};

/// Capture volume: x, y in [-50, 50] mm and z in [150, 250] mm, closed.
pub const VOLUME_XY_HALF: f64 = 50.0;
pub const VOLUME_Z_MIN: f64 = 150.0;
pub const VOLUME_Z_MAX: f64 = 250.0;
pub const VOLUME_WIDTH: f64 = 2.0 * VOLUME_XY_HALF;

/// A point belongs to a scan when it lies within this distance of the plane.
pub const SCAN_TOLERANCE: f64 = 1.0;

/// Depth camera emulation constants.
pub const DEPTH_RESOLUTION: (usize, usize) = (424, 240);
pub const DEPTH_FOV_DEG: (f64, f64) = (87.0, 58.0);

/// Default spacing between analytic samples on a frontal surface at the far
/// end of the capture volume.
pub const DEFAULT_SPACING_MM: f64 = 0.5;

/// Widest in-plane ray angle that can still reach the capture volume.
const MAX_RAY_ANGLE: f64 = 0.46;

pub fn in_capture_volume(p: &Point3) -> bool {
    p.x.abs() <= VOLUME_XY_HALF && p.y.abs() <= VOLUME_XY_HALF && p.z >= VOLUME_Z_MIN && p.z <= VOLUME_Z_MAX
}

/// Distance from `p` to the nearest face of the capture volume, for points
/// inside it.
pub fn volume_margin(p: &Point3) -> f64 {
    (VOLUME_XY_HALF - p.x.abs())
        .min(VOLUME_XY_HALF - p.y.abs())
        .min(p.z - VOLUME_Z_MIN)
        .min(VOLUME_Z_MAX - p.z)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScanLine {
    pub plane: ScanPlane,
    pub points: Vec<Point3>,
}

/// Closed solids in the sensor frame.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Solid {
    Sphere { center: Point3, radius: f64 },
    /// Capped cylinder; `axis` is unit length.
    Cylinder { center: Point3, axis: Vec3, radius: f64, length: f64 },
    /// Box with unit `axes` and half extents along each.
    Cuboid { center: Point3, axes: [Vec3; 3], half: [f64; 3] },
}

/// First intersection of a ray with a solid: distance along the ray and the
/// id of the smooth surface patch that was hit.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Hit {
    pub t: f64,
    pub patch: u8,
}

impl Solid {
    /// Nearest intersection with `t > 0` of the ray `dir * t` from the
    /// sensor origin. `dir` must be unit length.
    pub fn raycast(&self, dir: &Vec3) -> Option<Hit> {
        match *self {
            Solid::Sphere { center, radius } => {
                let b = dir.dot(&center);
                let disc = b * b - (center.norm_squared() - radius * radius);
                if disc < 0.0 {
                    return None;
                }
                let s = disc.sqrt();
                [b - s, b + s].into_iter().find(|t| *t > 0.0).map(|t| Hit { t, patch: 0 })
            }
            Solid::Cylinder { center, axis, radius, length } => {
                let h = length / 2.0;
                let mut best: Option<Hit> = None;
                let mut consider = |t: f64, patch: u8| {
                    if t > 0.0 && best.is_none_or(|b| t < b.t) {
                        best = Some(Hit { t, patch });
                    }
                };
                // Side: |(p - c) - ((p - c).a) a| = r with p = t d.
                let oc = -center;
                let d_perp = dir - axis * dir.dot(&axis);
                let o_perp = oc - axis * oc.dot(&axis);
                let a = d_perp.norm_squared();
                let b = 2.0 * d_perp.dot(&o_perp);
                let c = o_perp.norm_squared() - radius * radius;
                if a > 1e-15 {
                    let disc = b * b - 4.0 * a * c;
                    if disc >= 0.0 {
                        let s = disc.sqrt();
                        for t in [(-b - s) / (2.0 * a), (-b + s) / (2.0 * a)] {
                            let axial = (dir * t - center).dot(&axis);
                            if axial.abs() <= h {
                                consider(t, 0);
                            }
                        }
                    }
                }
                let da = dir.dot(&axis);
                if da.abs() > 1e-15 {
                    for (sign, patch) in [(1.0, 1u8), (-1.0, 2u8)] {
                        let cap = center + axis * (sign * h);
                        let t = cap.dot(&axis) / da;
                        let p = dir * t;
                        if (p - cap).norm_squared() <= radius * radius {
                            consider(t, patch);
                        }
                    }
                }
                best
            }
            Solid::Cuboid { center, axes, half } => {
                let mut t_near = f64::NEG_INFINITY;
                let mut t_far = f64::INFINITY;
                let mut patch = 0u8;
                for k in 0..3 {
                    let da = dir.dot(&axes[k]);
                    let oa = -center.dot(&axes[k]);
                    if da.abs() < 1e-15 {
                        if oa.abs() > half[k] {
                            return None;
                        }
                        continue;
                    }
                    let t1 = (-half[k] - oa) / da;
                    let t2 = (half[k] - oa) / da;
                    let (lo, hi, lo_patch) = if t1 < t2 { (t1, t2, 2 * k as u8) } else { (t2, t1, 2 * k as u8 + 1) };
                    if lo > t_near {
                        t_near = lo;
                        patch = lo_patch;
                    }
                    t_far = t_far.min(hi);
                }
                (t_near <= t_far && t_near > 0.0).then_some(Hit { t: t_near, patch })
            }
        }
    }

    pub fn contains(&self, p: &Point3) -> bool {
        match *self {
            Solid::Sphere { center, radius } => (p - center).norm() <= radius,
            Solid::Cylinder { center, axis, radius, length } => {
                let q = p - center;
                let axial = q.dot(&axis);
                axial.abs() <= length / 2.0 && (q - axis * axial).norm() <= radius
            }
            Solid::Cuboid { center, axes, half } => (0..3).all(|k| (p - center).dot(&axes[k]).abs() <= half[k]),
        }
    }

    /// Unsigned distance from `p` to the surface.
    pub fn surface_distance(&self, p: &Point3) -> f64 {
        match *self {
            Solid::Sphere { center, radius } => ((p - center).norm() - radius).abs(),
            Solid::Cylinder { center, axis, radius, length } => {
                let q = p - center;
                let axial = q.dot(&axis);
                let radial = (q - axis * axial).norm();
                let dr = radial - radius;
                let da = axial.abs() - length / 2.0;
                if dr <= 0.0 && da <= 0.0 {
                    dr.abs().min(da.abs())
                } else {
                    Vec3::new(dr.max(0.0), da.max(0.0), 0.0).norm()
                }
            }
            Solid::Cuboid { center, axes, half } => {
                let d: Vec<f64> = (0..3).map(|k| (p - center).dot(&axes[k]).abs() - half[k]).collect();
                if d.iter().all(|v| *v <= 0.0) {
                    -d.iter().cloned().fold(f64::NEG_INFINITY, f64::max)
                } else {
                    d.iter().map(|v| v.max(0.0).powi(2)).sum::<f64>().sqrt()
                }
            }
        }
    }

    fn bounding_radius(&self) -> f64 {
        match *self {
            Solid::Sphere { radius, .. } => radius,
            Solid::Cylinder { radius, length, .. } => radius.hypot(length / 2.0),
            Solid::Cuboid { half, .. } => Vec3::from(half).norm(),
        }
    }

    fn center(&self) -> Point3 {
        match *self {
            Solid::Sphere { center, .. } | Solid::Cylinder { center, .. } | Solid::Cuboid { center, .. } => center,
        }
    }

    /// Surface sample on a regular parameter grid, spacing about `step` mm.
    pub fn surface_samples(&self, step: f64) -> Vec<Point3> {
        use std::f64::consts::{PI, TAU};
        let count = |len: f64| ((len / step).ceil() as usize).max(1);
        let mut out = Vec::new();
        match *self {
            Solid::Sphere { center, radius } => {
                let nl = count(PI * radius);
                for i in 0..=nl {
                    let lat = -PI / 2.0 + PI * i as f64 / nl as f64;
                    let nm = count(TAU * radius * lat.cos());
                    for j in 0..nm {
                        let lon = TAU * j as f64 / nm as f64;
                        out.push(center + Vec3::new(lat.cos() * lon.cos(), lat.sin(), lat.cos() * lon.sin()) * radius);
                    }
                }
            }
            Solid::Cylinder { center, axis, radius, length } => {
                let (x, y) = crate::geometry::orthonormal_basis(&axis);
                let nm = count(TAU * radius);
                let nl = count(length);
                let nr = count(radius);
                for j in 0..nm {
                    let a = TAU * j as f64 / nm as f64;
                    let rim = x * a.cos() + y * a.sin();
                    for i in 0..=nl {
                        out.push(center + axis * (-length / 2.0 + length * i as f64 / nl as f64) + rim * radius);
                    }
                    for s in [-1.0, 1.0] {
                        for i in 0..nr {
                            out.push(center + axis * (s * length / 2.0) + rim * (radius * i as f64 / nr as f64));
                        }
                    }
                }
            }
            Solid::Cuboid { center, axes, half } => {
                for k in 0..3 {
                    let (a, b) = ((k + 1) % 3, (k + 2) % 3);
                    let (na, nb) = (count(2.0 * half[a]), count(2.0 * half[b]));
                    for s in [-1.0, 1.0] {
                        for i in 0..=na {
                            for j in 0..=nb {
                                let u = -half[a] + 2.0 * half[a] * i as f64 / na as f64;
                                let v = -half[b] + 2.0 * half[b] * j as f64 / nb as f64;
                                out.push(center + axes[k] * (s * half[k]) + axes[a] * u + axes[b] * v);
                            }
                        }
                    }
                }
            }
        }
        out
    }

    /// Whether two solids share volume, judged on a 1 mm surface sampling.
    pub fn overlaps(&self, other: &Solid) -> bool {
        if (self.center() - other.center()).norm() > self.bounding_radius() + other.bounding_radius() {
            return false;
        }
        self.surface_samples(1.0).iter().any(|p| other.contains(p))
            || other.surface_samples(1.0).iter().any(|p| self.contains(p))
    }
}

/// First hit along a unit ray over all solids: distance, solid index and
/// surface patch.
pub fn raycast(solids: &[Solid], dir: &Vec3) -> Option<(f64, usize, u8)> {
    let mut best: Option<(f64, usize, u8)> = None;
    for (i, s) in solids.iter().enumerate() {
        if let Some(h) = s.raycast(dir) {
            if best.is_none_or(|b| h.t < b.0) {
                best = Some((h.t, i, h.patch));
            }
        }
    }
    best
}

/// Surface patch seen along the ray, or `None` for a miss or a hit outside
/// the capture volume.
type Label = Option<(usize, u8)>;

fn ray_dir(plane: &ScanPlane, phi: f64) -> Vec3 {
    Vec3::z() * phi.cos() + plane.in_plane_direction() * phi.sin()
}

fn probe(solids: &[Solid], plane: &ScanPlane, phi: f64) -> (Label, Option<Point3>) {
    let d = ray_dir(plane, phi);
    match raycast(solids, &d) {
        Some((t, i, patch)) => {
            let p = d * t;
            if in_capture_volume(&p) {
                (Some((i, patch)), Some(p))
            } else {
                (None, None)
            }
        }
        None => (None, None),
    }
}

/// Bisects toward the angle where the label seen at `keep` stops holding,
/// returning the last point still carrying that label.
fn refine_end(solids: &[Solid], plane: &ScanPlane, keep: f64, other: f64) -> Option<Point3> {
    let (label, mut best) = probe(solids, plane, keep);
    label?;
    let (mut a, mut b) = (keep, other);
    for _ in 0..64 {
        let m = 0.5 * (a + b);
        if m == a || m == b {
            break;
        }
        let (l, p) = probe(solids, plane, m);
        if l == label {
            a = m;
            best = p;
        } else {
            b = m;
        }
    }
    best
}

/// Inserts samples between two rays on the same patch until neighbours are
/// at most `spacing` apart, for surfaces seen at a grazing angle.
#[allow(clippy::too_many_arguments)]
fn subdivide(
    solids: &[Solid],
    plane: &ScanPlane,
    a: (f64, Point3),
    b: (f64, Point3),
    label: Label,
    spacing: f64,
    depth: u32,
    out: &mut Vec<Point3>,
) {
    if depth == 0 || (a.1 - b.1).norm() <= spacing {
        return;
    }
    let m = 0.5 * (a.0 + b.0);
    let (l, p) = probe(solids, plane, m);
    let Some(p) = p.filter(|_| l == label) else { return };
    subdivide(solids, plane, a, (m, p), label, spacing, depth - 1, out);
    out.push(p);
    subdivide(solids, plane, (m, p), b, label, spacing, depth - 1, out);
}

/// Noise-free cut of one scan plane with the visible surfaces, ordered by
/// ray angle. Curve ends are located to machine precision.
pub fn cut_plane(solids: &[Solid], plane: &ScanPlane, spacing_mm: f64) -> Vec<Point3> {
    let step = spacing_mm / VOLUME_Z_MAX;
    let n = (2.0 * MAX_RAY_ANGLE / step).ceil() as usize;
    let phi = |i: usize| -MAX_RAY_ANGLE + 2.0 * MAX_RAY_ANGLE * i as f64 / n as f64;
    let mut out = Vec::new();
    let mut prev: Option<(f64, Label)> = None;
    for i in 0..=n {
        let a = phi(i);
        let (label, p) = probe(solids, plane, a);
        if let Some((pa, pl)) = prev {
            if pl != label {
                if let Some(q) = refine_end(solids, plane, pa, a) {
                    out.push(q);
                }
                if let Some(q) = refine_end(solids, plane, a, pa) {
                    out.push(q);
                }
            }
        }
        if let (Some((pa, pl)), Some(p)) = (prev, p) {
            if pl == label {
                if let Some(last) = out.last().copied() {
                    subdivide(solids, plane, (pa, last), (a, p), label, spacing_mm, 10, &mut out);
                }
            }
        }
        if let Some(p) = p {
            out.push(p);
        }
        prev = Some((a, label));
    }
    // Refinement can land on an already sampled point.
    out.dedup_by(|a, b| (*a - *b).norm() < 1e-12);
    out
}

/// Scans of the first `n_lines` planes. Points are exact first-hit surface
/// points when `scene.noise_sigma == 0`; otherwise isotropic Gaussian noise
/// is added and points leaving the 1 mm plane band or the capture volume
/// are dropped.
pub fn analytic_scan(scene: &Scene, n_lines: usize) -> Result<Vec<ScanLine>> {
    analytic_scan_with_spacing(scene, n_lines, DEFAULT_SPACING_MM)
}

pub fn analytic_scan_with_spacing(scene: &Scene, n_lines: usize, spacing_mm: f64) -> Result<Vec<ScanLine>> {
    if !(spacing_mm > 0.0) {
        return Err(Error::ContractViolation("spacing must be positive"));
    }
    let planes = ScanPlane::subset(n_lines)?;
    let solids = scene.solids();
    let mut rng = ChaCha8Rng::seed_from_u64(scene.seed);
    let noise = (scene.noise_sigma > 0.0).then(|| Normal::new(0.0, scene.noise_sigma).expect("finite sigma"));
    Ok(planes
        .into_iter()
        .map(|plane| {
            let mut points = cut_plane(&solids, &plane, spacing_mm);
            if let Some(noise) = &noise {
                points = points
                    .into_iter()
                    .map(|p| p + Vec3::new(noise.sample(&mut rng), noise.sample(&mut rng), noise.sample(&mut rng)))
                    .filter(|p| plane.distance(p) <= SCAN_TOLERANCE && in_capture_volume(p))
                    .collect();
            }
            ScanLine { plane, points }
        })
        .collect())
}

/// First-hit points of a pinhole camera at the sensor origin, with
/// `scene.noise_sigma` Gaussian noise along each ray.
pub fn emulate_depth_cloud(scene: &Scene, resolution: (usize, usize)) -> Result<Vec<Point3>> {
    emulate_depth_cloud_fov(scene, resolution, DEPTH_FOV_DEG)
}

pub fn emulate_depth_cloud_fov(scene: &Scene, resolution: (usize, usize), fov_deg: (f64, f64)) -> Result<Vec<Point3>> {
    let (w, h) = resolution;
    if w == 0 || h == 0 {
        return Err(Error::ContractViolation("resolution must be positive"));
    }
    let solids = scene.solids();
    let mut rng = ChaCha8Rng::seed_from_u64(scene.seed);
    let noise = (scene.noise_sigma > 0.0).then(|| Normal::new(0.0, scene.noise_sigma).expect("finite sigma"));
    let tx = (fov_deg.0.to_radians() / 2.0).tan();
    let ty = (fov_deg.1.to_radians() / 2.0).tan();
    let mut cloud = Vec::new();
    for j in 0..h {
        let y = ty * (1.0 - 2.0 * (j as f64 + 0.5) / h as f64);
        for i in 0..w {
            let x = tx * (2.0 * (i as f64 + 0.5) / w as f64 - 1.0);
            let d = Vec3::new(x, y, 1.0).normalize();
            if let Some((t, _, _)) = raycast(&solids, &d) {
                let t = noise.as_ref().map_or(t, |n| t + n.sample(&mut rng));
                cloud.push(d * t);
            }
        }
    }
    Ok(cloud)
}

/// Keeps the points inside the closed capture volume.
pub fn truncate_to_volume(cloud: &[Point3]) -> Vec<Point3> {
    cloud.iter().copied().filter(in_capture_volume).collect()
}

/// Splits a cloud into the four scan lines. A point within the tolerance
/// of two planes goes to both.
pub fn extract_scan_lines(cloud: &[Point3]) -> Vec<ScanLine> {
    extract_planes(cloud, &ScanPlane::all())
}

pub fn extract_planes(cloud: &[Point3], planes: &[ScanPlane]) -> Vec<ScanLine> {
    planes
        .iter()
        .map(|plane| ScanLine {
            plane: *plane,
            points: cloud.iter().copied().filter(|p| plane.distance(p) <= SCAN_TOLERANCE).collect(),
        })
        .collect()
}

/// Full emulated-camera path: cloud, truncation, extraction for the
/// planes of an `n_lines` rig.
pub fn cloud_scan(scene: &Scene, n_lines: usize) -> Result<Vec<ScanLine>> {
    let planes = ScanPlane::subset(n_lines)?;
    let cloud = truncate_to_volume(&emulate_depth_cloud(scene, DEPTH_RESOLUTION)?);
    Ok(extract_planes(&cloud, &planes))
}

/// How a frame's scan lines are produced.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ScanMode {
    /// Exact plane cuts with isotropic noise.
    #[default]
    Analytic,
    /// Emulated depth camera, truncated and sliced.
    Cloud,
}

impl ScanMode {
    pub fn scan(self, scene: &Scene, n_lines: usize) -> Result<Vec<ScanLine>> {
        match self {
            ScanMode::Analytic => analytic_scan(scene, n_lines),
            ScanMode::Cloud => cloud_scan(scene, n_lines),
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            ScanMode::Analytic => "analytic",
            ScanMode::Cloud => "cloud",
        }
    }
}
