//! Shape classification and 3-D model reconstruction from per-scan
//! primitive fits.

use serde::{Deserialize, Serialize};

use crate::geometry::{
    angle_between, axis_angle_between, fit_plane, sort_counter_clockwise, try_normalize, Circle3, Ellipse3, Line3,
    Plane, Point3, ScanPlane, ShapeKind, ShapeModel, Vec3,
};
use crate::sac::{fit_all_kinds, KindFits, PrimitiveFit, PrimitiveKind, PrimitiveParams, SacConfig};
use crate::scan_sim::ScanLine;
use crate::{Error, Result};

/// Seeds expected from a four-line rig: two extremes per scan.
pub const SEED_COUNT: usize = 8;
/// Largest turn angle accepted between consecutive seed edges.
pub const ALPHA_MAX_DEG: f64 = 10.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ReconConfig {
    pub sac: SacConfig,
    pub alpha_max_deg: f64,
    /// A simpler primitive is preferred while its fit percentage is within
    /// this many points of the best one.
    pub kind_margin_pct: f64,
    /// Ellipses rounder than this count as circles.
    pub circle_ratio_max: f64,
    /// Curve extremes whose tangent is within this angle of the viewing ray
    /// are treated as silhouette points.
    pub silhouette_max_deg: f64,
    /// Scans with fewer points are not fitted.
    pub min_scan_points: usize,
    /// Fit the scans on separate threads.
    pub parallel: bool,
}

impl Default for ReconConfig {
    fn default() -> Self {
        Self {
            sac: SacConfig::default(),
            alpha_max_deg: ALPHA_MAX_DEG,
            kind_margin_pct: 5.0,
            circle_ratio_max: 1.05,
            silhouette_max_deg: 25.0,
            min_scan_points: 10,
            parallel: cfg!(not(target_arch = "wasm32")),
        }
    }
}

/// A chosen primitive of one scan with its two extreme inliers.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScanPrimitive {
    pub plane: ScanPlane,
    pub fit: PrimitiveFit,
    pub extremes: [Point3; 2],
    /// The scan's ellipse fit, whichever primitive was chosen.
    pub ellipse: Option<Ellipse3>,
}

impl ScanPrimitive {
    pub fn kind(&self) -> PrimitiveKind {
        self.fit.kind()
    }
}

/// Everything learned from one scan line.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScanAnalysis {
    pub plane: ScanPlane,
    pub points: Vec<Point3>,
    pub fits: KindFits,
    pub chosen: Option<ScanPrimitive>,
}

impl ScanAnalysis {
    pub fn label(&self) -> Option<PrimitiveKind> {
        self.chosen.as_ref().map(ScanPrimitive::kind)
    }
}

/// The two inliers bounding the fitted curve: arc ends for circles and
/// ellipses (across the widest angular gap), segment ends for lines.
pub fn extreme_inliers(fit: &PrimitiveFit, points: &[Point3]) -> Result<(Point3, Point3)> {
    let idx = &fit.inlier_indices;
    if idx.len() < 2 {
        return Err(Error::InsufficientInput { needed: 2, got: idx.len() });
    }
    if let PrimitiveParams::Line(line) = &fit.params {
        let (mut lo, mut hi) = (idx[0], idx[0]);
        for &i in idx {
            let c = line.coordinate(&points[i]);
            if c < line.coordinate(&points[lo]) {
                lo = i;
            }
            if c > line.coordinate(&points[hi]) {
                hi = i;
            }
        }
        return Ok((points[lo], points[hi]));
    }
    let angle = |p: &Point3| match &fit.params {
        PrimitiveParams::Circle(c) => c.angle_of(p),
        PrimitiveParams::Ellipse(e) => ellipse_angle(e, p),
        PrimitiveParams::Line(_) => unreachable!(),
    };
    let mut keyed: Vec<(f64, usize)> = idx.iter().map(|&i| (angle(&points[i]), i)).collect();
    keyed.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
    let n = keyed.len();
    // Gap after element k, wrapping around at the end.
    let gap = |k: usize| {
        let next = if k + 1 == n { keyed[0].0 + std::f64::consts::TAU } else { keyed[k + 1].0 };
        next - keyed[k].0
    };
    let mut widest = n - 1;
    for k in 0..n {
        if gap(k) > gap(widest) {
            widest = k;
        }
    }
    let start = keyed[(widest + 1) % n].1;
    let end = keyed[widest].1;
    Ok((points[start], points[end]))
}

fn ellipse_angle(e: &Ellipse3, p: &Point3) -> f64 {
    let (u, v) = e.frame().to_local(p);
    (v / e.semi_minor).atan2(u / e.semi_major)
}

fn ellipse_tangent(e: &Ellipse3, p: &Point3) -> Vec3 {
    let t = ellipse_angle(e, p);
    e.local_x_axis * (-e.semi_major * t.sin()) + e.local_y_axis() * (e.semi_minor * t.cos())
}

/// Picks the primitive of a scan and returns it with its extremes.
///
/// A line wins while it is within the margin of the best fit. Between the
/// curves, a clearly elongated ellipse within the margin wins; partial
/// arcs of moderate eccentricity are fitted by circles almost as well, so
/// the inlier count alone cannot separate them. Near-round ellipses are
/// reported as circles.
pub fn choose_primitive(plane: ScanPlane, fits: &KindFits, points: &[Point3], cfg: &ReconConfig) -> Option<ScanPrimitive> {
    let best = PrimitiveKind::ALL.iter().map(|k| fits.percentage(*k)).fold(0.0, f64::max);
    if best <= 0.0 {
        return None;
    }
    let near_best = |k: PrimitiveKind| fits.get(k).is_some() && fits.percentage(k) >= best - cfg.kind_margin_pct;
    let elongated = |f: &PrimitiveFit| matches!(f.params, PrimitiveParams::Ellipse(e) if e.axis_ratio() >= cfg.circle_ratio_max);
    let fit = if near_best(PrimitiveKind::Line) {
        fits.line.clone()?
    } else if near_best(PrimitiveKind::Ellipse) && fits.ellipse.as_ref().is_some_and(elongated) {
        fits.ellipse.clone()?
    } else if near_best(PrimitiveKind::Circle) {
        fits.circle.clone()?
    } else {
        let ellipse = fits.ellipse.as_ref()?;
        let PrimitiveParams::Ellipse(e) = ellipse.params else { return None };
        if elongated(ellipse) {
            ellipse.clone()
        } else {
            let circle = Circle3 { center: e.center, radius: (e.semi_major * e.semi_minor).sqrt(), normal: e.plane_normal };
            PrimitiveFit::from_model(PrimitiveParams::Circle(circle), points, cfg.sac.distance_threshold)
        }
    };
    let (a, b) = extreme_inliers(&fit, points).ok()?;
    let ellipse = fits.ellipse.as_ref().and_then(|f| match f.params {
        PrimitiveParams::Ellipse(e) => Some(e),
        _ => None,
    });
    Some(ScanPrimitive { plane, fit, extremes: [a, b], ellipse })
}

/// Cylinder wins over sphere only when its aggregate fit percentage is
/// more than twice the sphere's.
pub fn twice_rule(cylinder_aggregate: f64, sphere_aggregate: f64) -> bool {
    cylinder_aggregate > 2.0 * sphere_aggregate
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Classification {
    pub kind: ShapeKind,
    pub pattern: Vec<PrimitiveKind>,
    /// Mean best fit percentage over labelled scans.
    pub cylinder_aggregate: f64,
    /// Mean percentage of scan points on the sphere implied by the circle
    /// fits, 0 when no such sphere exists.
    pub sphere_aggregate: f64,
}

fn pattern_string(pattern: &[PrimitiveKind]) -> String {
    pattern.iter().map(|k| k.name()).collect::<Vec<_>>().join(",")
}

/// Maps the per-scan labels to a shape.
///
/// All circles give a sphere, all lines a cuboid. All curves, or one line
/// with the rest curved, give a cylinder candidate that must also beat the
/// sphere hypothesis under [`twice_rule`].
pub fn classify(scans: &[ScanAnalysis], cfg: &ReconConfig) -> Result<Classification> {
    let labelled: Vec<&ScanAnalysis> = scans.iter().filter(|s| s.chosen.is_some()).collect();
    if labelled.len() < 2 {
        return Err(Error::InsufficientInput { needed: 2, got: labelled.len() });
    }
    let pattern: Vec<PrimitiveKind> = labelled.iter().filter_map(|s| s.label()).collect();
    let count = |k| pattern.iter().filter(|p| **p == k).count();
    let (lines, circles) = (count(PrimitiveKind::Line), count(PrimitiveKind::Circle));
    let n = pattern.len();
    let cylinder_aggregate = labelled
        .iter()
        .map(|s| PrimitiveKind::ALL.iter().map(|k| s.fits.percentage(*k)).fold(0.0, f64::max))
        .sum::<f64>()
        / n as f64;
    let sphere_aggregate = sphere_consistency(&labelled, cfg);
    let mut out = Classification { kind: ShapeKind::Sphere, pattern, cylinder_aggregate, sphere_aggregate };
    if circles == n {
        return Ok(out);
    }
    if lines == n {
        out.kind = ShapeKind::Cuboid;
        return Ok(out);
    }
    if lines <= 1 {
        if !twice_rule(cylinder_aggregate, sphere_aggregate) {
            return Ok(out);
        }
        out.kind = ShapeKind::Cylinder;
        return Ok(out);
    }
    Err(Error::AmbiguousShape(format!("pattern {} matches no shape rule", pattern_string(&out.pattern))))
}

/// Sphere implied by whichever scans have a circle fit, scored by the mean
/// share of scan points lying on it.
fn sphere_consistency(scans: &[&ScanAnalysis], cfg: &ReconConfig) -> f64 {
    let circles: Vec<(Circle3, [Point3; 2])> = scans
        .iter()
        .filter_map(|s| {
            let fit = s.fits.circle.as_ref()?;
            let PrimitiveParams::Circle(c) = fit.params else { return None };
            let (a, b) = extreme_inliers(fit, &s.points).ok()?;
            Some((c, [a, b]))
        })
        .collect();
    let Ok(ShapeModel::Sphere { center, radius }) = reconstruct_sphere(&circles) else { return 0.0 };
    let t = cfg.sac.distance_threshold;
    scans
        .iter()
        .map(|s| {
            let on = s.points.iter().filter(|p| ((*p - center).norm() - radius).abs() <= t).count();
            100.0 * on as f64 / s.points.len().max(1) as f64
        })
        .sum::<f64>()
        / scans.len() as f64
}

/// Sphere from two or more circle cuts: the center is the least-squares
/// meeting point of the lines through each circle center along its plane
/// normal; the radius is the mean center distance of the extreme points.
pub fn reconstruct_sphere(circles: &[(Circle3, [Point3; 2])]) -> Result<ShapeModel> {
    if circles.len() < 2 {
        return Err(Error::InsufficientInput { needed: 2, got: circles.len() });
    }
    let mut m = nalgebra::Matrix3::<f64>::zeros();
    let mut rhs = Vec3::zeros();
    for (c, _) in circles {
        let p = nalgebra::Matrix3::identity() - c.normal * c.normal.transpose();
        m += p;
        rhs += p * c.center;
    }
    let eig = m.symmetric_eigenvalues();
    if eig.min() < 1e-6 * eig.max() {
        return Err(Error::DegenerateGeometry("circle planes are parallel"));
    }
    let center = m.lu().solve(&rhs).ok_or(Error::DegenerateGeometry("circle planes are parallel"))?;
    let extremes: Vec<&Point3> = circles.iter().flat_map(|(_, e)| e.iter()).collect();
    let radius = extremes.iter().map(|e| (*e - center).norm()).sum::<f64>() / extremes.len() as f64;
    if !(radius > 0.0) {
        return Err(Error::DegenerateGeometry("zero sphere radius"));
    }
    Ok(ShapeModel::Sphere { center, radius })
}

/// Seed points: extremes projected onto a plane, counter-clockwise.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SeedPoints {
    pub points: Vec<Point3>,
    pub plane: Plane,
}

impl SeedPoints {
    pub fn new(extremes: &[Point3], plane: Plane) -> Result<Self> {
        let projected: Vec<Point3> = extremes.iter().map(|p| plane.project(p)).collect();
        Ok(Self { points: sort_counter_clockwise(&projected, &plane)?, plane })
    }
}

/// Scans the cyclic seed sequence for the first seed whose incoming and
/// outgoing edges turn by at most `alpha_max_deg`, and returns the unit
/// chord across it.
pub fn principal_direction(seeds: &[Point3], alpha_max_deg: f64) -> Result<Vec3> {
    let n = seeds.len();
    if n < 3 {
        return Err(Error::InsufficientInput { needed: 3, got: n });
    }
    let alpha = alpha_max_deg.to_radians();
    for i in 0..n {
        let prev = seeds[(i + n - 1) % n];
        let cur = seeds[i];
        let next = seeds[(i + 1) % n];
        let (a, b) = (cur - prev, next - cur);
        if a.norm() < 1e-9 || b.norm() < 1e-9 {
            continue;
        }
        if angle_between(&a, &b) <= alpha {
            if let Some(d) = try_normalize(&(next - prev)) {
                return Ok(d);
            }
        }
    }
    Err(Error::NoPrincipalDirection { alpha_max_deg })
}

fn spread(points: &[Point3], dir: &Vec3) -> f64 {
    let proj = points.iter().map(|p| p.dot(dir));
    let (lo, hi) = proj.fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| (lo.min(v), hi.max(v)));
    hi - lo
}

fn toward_sensor(n: Vec3, at: &Point3) -> Vec3 {
    if n.dot(at) > 0.0 {
        -n
    } else {
        n
    }
}

fn all_extremes(prims: &[ScanPrimitive]) -> Vec<Point3> {
    prims.iter().flat_map(|p| p.extremes).collect()
}

/// Cuboid face from line cuts: plane through the extremes, principal
/// direction from the seeds, extents from the seed spread.
pub fn reconstruct_cuboid(prims: &[ScanPrimitive], alpha_max_deg: f64) -> Result<(ShapeModel, SeedPoints)> {
    if prims.iter().any(|p| p.kind() != PrimitiveKind::Line) {
        return Err(Error::InternalInconsistency("cuboid reconstruction needs line fits only"));
    }
    let extremes = all_extremes(prims);
    let plane = fit_plane(&extremes).map_err(|_| Error::DegenerateGeometry("extreme points are collinear"))?;
    let seeds = SeedPoints::new(&extremes, plane)?;
    let u = principal_direction(&seeds.points, alpha_max_deg)?;
    let centroid = seeds.points.iter().sum::<Vec3>() / seeds.points.len() as f64;
    let normal = toward_sensor(plane.normal, &centroid);
    let v = normal.cross(&u).normalize();
    let model = ShapeModel::Cuboid {
        face_center: centroid,
        face_normal: normal,
        principal_u: u,
        principal_v: v,
        extent_u: spread(&seeds.points, &u),
        extent_v: spread(&seeds.points, &v),
    };
    Ok((model, seeds))
}

/// Cylinder from mixed cuts. The longitudinal plane passes through the
/// extremes of the curved fits, preferring those on the silhouette; the
/// axis comes from the seeds, the radius from the ellipse semi-minor
/// axes or else the circle fits.
pub fn reconstruct_cylinder(prims: &[ScanPrimitive], cfg: &ReconConfig) -> Result<(ShapeModel, SeedPoints)> {
    let curved: Vec<&ScanPrimitive> = prims.iter().filter(|p| p.kind() != PrimitiveKind::Line).collect();
    if curved.is_empty() {
        return Err(Error::InternalInconsistency("cylinder reconstruction reached with line fits only"));
    }
    let center = curved
        .iter()
        .map(|p| match p.fit.params {
            PrimitiveParams::Circle(c) => c.center,
            PrimitiveParams::Ellipse(e) => e.center,
            PrimitiveParams::Line(_) => unreachable!(),
        })
        .sum::<Vec3>()
        / curved.len() as f64;

    let max_graze = cfg.silhouette_max_deg.to_radians();
    let mut silhouette = Vec::new();
    let mut curved_extremes = Vec::new();
    for p in &curved {
        for e in p.extremes {
            curved_extremes.push(e);
            let tangent = match p.fit.params {
                PrimitiveParams::Circle(c) => c.tangent_at(&e),
                PrimitiveParams::Ellipse(el) => try_normalize(&ellipse_tangent(&el, &e)),
                PrimitiveParams::Line(_) => None,
            };
            if tangent.is_some_and(|t| axis_angle_between(&t, &e) <= max_graze) {
                silhouette.push(e);
            }
        }
    }
    let plane = fit_plane(&silhouette)
        .or_else(|_| fit_plane(&curved_extremes))
        .map_err(|_| Error::DegenerateGeometry("curve extremes are collinear"))?;
    // Curve ends cut off by a cap or by the capture volume are not on the
    // silhouette and can fake a straight run of seeds, so they are left out
    // while enough silhouette seeds remain.
    let all = all_extremes(prims);
    let mut trimmed: Vec<Point3> =
        prims.iter().filter(|p| p.kind() == PrimitiveKind::Line).flat_map(|p| p.extremes).collect();
    trimmed.extend(&silhouette);
    let attempt = |pts: &[Point3]| -> Result<(SeedPoints, Vec3)> {
        let seeds = SeedPoints::new(pts, plane)?;
        let axis = principal_direction(&seeds.points, cfg.alpha_max_deg)?;
        Ok((seeds, axis))
    };
    let (seeds, axis) = if silhouette.len() >= 4 && trimmed.len() < all.len() {
        attempt(&trimmed).or_else(|_| attempt(&all))?
    } else {
        attempt(&all)?
    };

    // Every planar cut through the side of a cylinder has semi-minor axis
    // equal to the radius, so the ellipse fit of each curved scan is used
    // even where the scan was labelled a circle.
    let minors: Vec<f64> = curved.iter().filter_map(|p| p.ellipse.map(|e| e.semi_minor)).collect();
    let radius = if minors.is_empty() {
        let radii: Vec<f64> = curved
            .iter()
            .filter_map(|p| match p.fit.params {
                PrimitiveParams::Circle(c) => Some(c.radius),
                _ => None,
            })
            .collect();
        radii.iter().sum::<f64>() / radii.len() as f64
    } else {
        minors.iter().sum::<f64>() / minors.len() as f64
    };
    let length = spread(&seeds.points, &axis);
    Ok((ShapeModel::Cylinder { center, axis, radius, length }, seeds))
}

/// Why a frame produced no model.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FailureKind {
    NoObject,
    FitFailure,
    Ambiguity,
}

impl FailureKind {
    pub fn of(err: &Error) -> Self {
        match err {
            Error::AmbiguousShape(_) | Error::NoPrincipalDirection { .. } => FailureKind::Ambiguity,
            _ => FailureKind::FitFailure,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            FailureKind::NoObject => "no_object",
            FailureKind::FitFailure => "fit_failure",
            FailureKind::Ambiguity => "ambiguity",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "status", rename_all = "snake_case")]
pub enum Outcome {
    Reconstructed { model: ShapeModel },
    NotReconstructed { cause: FailureKind, reason: String },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReconstructionReport {
    pub outcome: Outcome,
    pub scans: Vec<ScanAnalysis>,
    pub classification: Option<Classification>,
    pub seeds: Option<SeedPoints>,
    /// Mean fit percentage of the chosen primitives, as a fraction.
    pub shape_confidence: f64,
    pub elapsed_ms: f64,
}

impl ReconstructionReport {
    pub fn model(&self) -> Option<&ShapeModel> {
        match &self.outcome {
            Outcome::Reconstructed { model } => Some(model),
            Outcome::NotReconstructed { .. } => None,
        }
    }

    pub fn is_ok(&self) -> bool {
        self.model().is_some()
    }

    pub fn per_scan_fits(&self) -> Vec<Option<&PrimitiveFit>> {
        self.scans.iter().map(|s| s.chosen.as_ref().map(|c| &c.fit)).collect()
    }
}

fn scan_seed(base: u64, plane: &ScanPlane) -> u64 {
    base.wrapping_add((plane.index as u64 + 1).wrapping_mul(0x2545_f491_4f6c_dd1d))
}

fn analyse_scan(scan: &ScanLine, cfg: &ReconConfig) -> ScanAnalysis {
    let fits = if scan.points.len() >= cfg.min_scan_points {
        let sac = SacConfig { rng_seed: scan_seed(cfg.sac.rng_seed, &scan.plane), ..cfg.sac };
        fit_all_kinds(&scan.points, &sac)
    } else {
        KindFits::default()
    };
    let chosen = choose_primitive(scan.plane, &fits, &scan.points, cfg);
    ScanAnalysis { plane: scan.plane, points: scan.points.clone(), fits, chosen }
}

fn analyse_all(scans: &[ScanLine], cfg: &ReconConfig) -> Vec<ScanAnalysis> {
    #[cfg(not(target_arch = "wasm32"))]
    if cfg.parallel && scans.len() > 1 {
        return std::thread::scope(|s| {
            let handles: Vec<_> = scans.iter().map(|scan| s.spawn(move || analyse_scan(scan, cfg))).collect();
            handles.into_iter().map(|h| h.join().expect("scan worker panicked")).collect()
        });
    }
    scans.iter().map(|s| analyse_scan(s, cfg)).collect()
}

fn build_model(scans: &[ScanAnalysis], cfg: &ReconConfig) -> Result<(ShapeModel, Option<Classification>, Option<SeedPoints>)> {
    let prims: Vec<ScanPrimitive> = scans.iter().filter_map(|s| s.chosen.clone()).collect();
    // A single-line rig can only see a sphere, and only through its cut.
    if scans.len() == 1 {
        let p = prims.first().ok_or(Error::InsufficientInput { needed: 1, got: 0 })?;
        return match p.fit.params {
            PrimitiveParams::Circle(c) => Ok((ShapeModel::Sphere { center: c.center, radius: c.radius }, None, None)),
            _ => Err(Error::AmbiguousShape(format!("single {} cut fixes no 3-D shape", p.kind().name()))),
        };
    }
    let class = classify(scans, cfg)?;
    let (model, seeds) = match class.kind {
        ShapeKind::Sphere => {
            let circles: Vec<(Circle3, [Point3; 2])> = prims
                .iter()
                .filter_map(|p| match p.fit.params {
                    PrimitiveParams::Circle(c) => Some((c, p.extremes)),
                    _ => None,
                })
                .collect();
            let circles = if circles.len() >= 2 { circles } else { circle_fallback(scans) };
            (reconstruct_sphere(&circles)?, None)
        }
        ShapeKind::Cuboid => {
            let (m, s) = reconstruct_cuboid(&prims, cfg.alpha_max_deg)?;
            (m, Some(s))
        }
        ShapeKind::Cylinder => {
            let (m, s) = reconstruct_cylinder(&prims, cfg)?;
            (m, Some(s))
        }
    };
    Ok((model, Some(class), seeds))
}

/// Circle fits of every scan, for spheres chosen by the twice-rule whose
/// labels were not all circles.
fn circle_fallback(scans: &[ScanAnalysis]) -> Vec<(Circle3, [Point3; 2])> {
    scans
        .iter()
        .filter_map(|s| {
            let fit = s.fits.circle.as_ref()?;
            let PrimitiveParams::Circle(c) = fit.params else { return None };
            let (a, b) = extreme_inliers(fit, &s.points).ok()?;
            Some((c, [a, b]))
        })
        .collect()
}

/// Fits, classifies and reconstructs one frame of scans.
pub fn reconstruct(scans: &[ScanLine], cfg: &ReconConfig) -> ReconstructionReport {
    #[cfg(not(target_arch = "wasm32"))]
    let start = std::time::Instant::now();
    let analysed = analyse_all(scans, cfg);
    let chosen: Vec<f64> = analysed.iter().filter_map(|s| s.chosen.as_ref().map(|c| c.fit.fit_percentage)).collect();
    let shape_confidence = if chosen.is_empty() { 0.0 } else { chosen.iter().sum::<f64>() / chosen.len() as f64 / 100.0 };
    let (outcome, classification, seeds) = if analysed.iter().all(|s| s.points.is_empty()) {
        (Outcome::NotReconstructed { cause: FailureKind::NoObject, reason: "no scan points".into() }, None, None)
    } else {
        match build_model(&analysed, cfg) {
            Ok((model, class, seeds)) => (Outcome::Reconstructed { model }, class, seeds),
            Err(e) => {
                let class = classify(&analysed, cfg).ok();
                (Outcome::NotReconstructed { cause: FailureKind::of(&e), reason: e.to_string() }, class, None)
            }
        }
    };
    #[cfg(not(target_arch = "wasm32"))]
    let elapsed_ms = start.elapsed().as_secs_f64() * 1e3;
    #[cfg(target_arch = "wasm32")]
    let elapsed_ms = 0.0;
    ReconstructionReport { outcome, scans: analysed, classification, seeds, shape_confidence, elapsed_ms }
}

/// Line through two points, exposed for callers building line primitives.
pub fn line_through(a: &Point3, b: &Point3) -> Option<Line3> {
    Line3::through(a, b)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scan_sim::analytic_scan;
    use crate::scene::{protocol_objects, Orientation, Scene, SceneObject};

    fn rect_seeds(w: f64, h: f64, rot_deg: f64) -> Vec<Point3> {
        // Corners plus edge midpoints, CCW.
        let (s, c) = rot_deg.to_radians().sin_cos();
        [(w, -h), (w, 0.0), (w, h), (0.0, h), (-w, h), (-w, 0.0), (-w, -h), (0.0, -h)]
            .iter()
            .map(|(x, y)| Vec3::new(c * x - s * y, s * x + c * y, 200.0))
            .collect()
    }

    #[test]
    fn algorithm_constants() {
        assert_eq!(SEED_COUNT, 8);
        assert_eq!(ALPHA_MAX_DEG, 10.0);
        assert_eq!(ReconConfig::default().alpha_max_deg, 10.0);
    }

    #[test]
    fn principal_direction_axis_aligned_and_rotated() {
        let d = principal_direction(&rect_seeds(40.0, 20.0, 0.0), ALPHA_MAX_DEG).unwrap();
        assert!((d.y.abs() - 1.0).abs() < 1e-9);
        let d = principal_direction(&rect_seeds(40.0, 20.0, 25.0), ALPHA_MAX_DEG).unwrap();
        let want = Vec3::new(-25f64.to_radians().sin(), 25f64.to_radians().cos(), 0.0);
        assert!(axis_angle_between(&d, &want) < 1e-6);
    }

    #[test]
    fn principal_direction_fails_on_regular_octagon() {
        let seeds: Vec<Point3> = (0..8)
            .map(|i| {
                let t = i as f64 * std::f64::consts::FRAC_PI_4;
                Vec3::new(30.0 * t.cos(), 30.0 * t.sin(), 200.0)
            })
            .collect();
        assert!(matches!(principal_direction(&seeds, 10.0), Err(Error::NoPrincipalDirection { .. })));
        // A 45 deg turn passes a looser threshold.
        assert!(principal_direction(&seeds, 45.0).is_ok());
    }

    #[test]
    fn twice_rule_boundary() {
        assert!(!twice_rule(80.0, 45.0));
        assert!(!twice_rule(90.0, 45.0));
        assert!(twice_rule(90.1, 45.0));
    }

    #[test]
    fn extremes_of_segment_and_arc() {
        let pts: Vec<Point3> = (0..=60).map(|i| Vec3::new(i as f64, 0.0, 200.0)).collect();
        let fit = PrimitiveFit::from_model(PrimitiveParams::Line(Line3::through(&pts[0], &pts[60]).unwrap()), &pts, 1.0);
        let (a, b) = extreme_inliers(&fit, &pts).unwrap();
        assert_eq!((a.x.min(b.x), a.x.max(b.x)), (0.0, 60.0));

        let circle = Circle3 { center: Vec3::new(0.0, 0.0, 200.0), radius: 20.0, normal: Vec3::y() };
        let arc: Vec<Point3> = (0..=90)
            .map(|i| {
                let t = std::f64::consts::PI * i as f64 / 90.0;
                Vec3::new(20.0 * t.cos(), 0.0, 200.0 - 20.0 * t.sin())
            })
            .collect();
        let fit = PrimitiveFit::from_model(PrimitiveParams::Circle(circle), &arc, 1.0);
        let (a, b) = extreme_inliers(&fit, &arc).unwrap();
        let ends = [arc[0], arc[90]];
        assert!(ends.iter().any(|e| (e - a).norm() < 1e-9) && ends.iter().any(|e| (e - b).norm() < 1e-9));
        assert!((a - b).norm() > 1.0);
    }

    #[test]
    fn extremes_need_two_inliers() {
        let pts = [Vec3::new(0.0, 0.0, 200.0)];
        let fit = PrimitiveFit {
            params: PrimitiveParams::Line(Line3 { point: pts[0], direction: Vec3::x() }),
            inlier_indices: vec![0],
            n_points: 1,
            fit_percentage: 100.0,
        };
        assert!(matches!(extreme_inliers(&fit, &pts), Err(Error::InsufficientInput { .. })));
    }

    #[test]
    fn sphere_from_two_great_circles() {
        let c = Vec3::new(0.0, 0.0, 200.0);
        let circles = vec![
            (Circle3 { center: c, radius: 30.0, normal: Vec3::y() }, [c + Vec3::x() * 30.0, c - Vec3::x() * 30.0]),
            (Circle3 { center: c, radius: 30.0, normal: Vec3::x() }, [c + Vec3::y() * 30.0, c - Vec3::y() * 30.0]),
        ];
        let ShapeModel::Sphere { center, radius } = reconstruct_sphere(&circles).unwrap() else { panic!() };
        assert!((center - c).norm() < 1e-12 && (radius - 30.0).abs() < 1e-12);
        let parallel = vec![circles[0], circles[0]];
        assert!(matches!(reconstruct_sphere(&parallel), Err(Error::DegenerateGeometry(_))));
    }

    #[test]
    fn off_axis_sphere_is_recovered_exactly() {
        let scene = Scene::single(SceneObject::sphere(80.0, [5.0, -3.0, 180.0]));
        let report = reconstruct(&analytic_scan(&scene, 4).unwrap(), &ReconConfig::default());
        let Some(ShapeModel::Sphere { center, radius }) = report.model().copied() else { panic!("{:?}", report.outcome) };
        assert!((center - Vec3::new(5.0, -3.0, 180.0)).norm() < 1e-6, "{center:?}");
        assert!((radius - 40.0).abs() < 1e-6);
    }

    #[test]
    fn upright_cylinder_pattern_and_axis() {
        let scene = Scene::single(SceneObject::cylinder(50.0, 120.0, [0.0, 0.0, 195.0], Orientation::default()));
        let report = reconstruct(&analytic_scan(&scene, 4).unwrap(), &ReconConfig::default());
        let labels: Vec<_> = report.scans.iter().map(|s| s.label()).collect();
        assert_eq!(
            labels,
            vec![Some(PrimitiveKind::Circle), Some(PrimitiveKind::Ellipse), Some(PrimitiveKind::Line), Some(PrimitiveKind::Ellipse)]
        );
        let Some(ShapeModel::Cylinder { axis, radius, .. }) = report.model().copied() else { panic!("{:?}", report.outcome) };
        assert!(axis_angle_between(&axis, &Vec3::y()) < 1e-6);
        assert!((radius - 25.0).abs() < 1e-6);
    }

    #[test]
    fn tilted_cylinder_uses_curved_cuts() {
        let o = SceneObject::cylinder(50.0, 120.0, [0.0, 0.0, 195.0], Orientation::tilted(30.0));
        let scene = Scene::single(o);
        let report = reconstruct(&analytic_scan(&scene, 4).unwrap(), &ReconConfig::default());
        // The 135 deg cut is 75 deg off the axis and nearly round.
        let labels: Vec<_> = report.scans.iter().filter_map(|s| s.label()).collect();
        assert_eq!(labels, vec![PrimitiveKind::Ellipse, PrimitiveKind::Ellipse, PrimitiveKind::Ellipse, PrimitiveKind::Circle]);
        let Some(ShapeModel::Cylinder { axis, radius, .. }) = report.model().copied() else { panic!("{:?}", report.outcome) };
        assert!(axis_angle_between(&axis, &o.orientation.axis()) < 1e-6, "{axis:?}");
        assert!((radius - 25.0).abs() < 1e-6);
    }

    #[test]
    fn frontal_cuboid_face() {
        let scene = Scene::single(SceneObject::cuboid(60.0, 80.0, 30.0, [0.0, 0.0, 215.0], Orientation::default()));
        let report = reconstruct(&analytic_scan(&scene, 4).unwrap(), &ReconConfig::default());
        let Some(ShapeModel::Cuboid { face_normal, extent_u, extent_v, .. }) = report.model().copied() else {
            panic!("{:?}", report.outcome)
        };
        assert!(axis_angle_between(&face_normal, &Vec3::z()) < 1e-9);
        let (lo, hi) = (extent_u.min(extent_v), extent_u.max(extent_v));
        assert!((lo - 60.0).abs() < 1e-6 && (hi - 80.0).abs() < 1e-6, "{lo} {hi}");
    }

    #[test]
    fn protocol_set_noiseless() {
        for o in protocol_objects() {
            let scene = Scene::single(o);
            let report = reconstruct(&analytic_scan(&scene, 4).unwrap(), &ReconConfig::default());
            let model = report.model().unwrap_or_else(|| panic!("{:?} {:?}", o, report.outcome));
            assert_eq!(model.kind(), o.shape, "{o:?}");
        }
    }

    #[test]
    fn empty_scans_not_reconstructed() {
        let scans: Vec<ScanLine> = ScanPlane::all().iter().map(|p| ScanLine { plane: *p, points: vec![] }).collect();
        let report = reconstruct(&scans, &ReconConfig::default());
        assert!(matches!(report.outcome, Outcome::NotReconstructed { cause: FailureKind::NoObject, .. }));
    }

    #[test]
    fn parallel_matches_sequential() {
        let scene = Scene { noise_sigma: 1.0, seed: 4, ..Scene::single(protocol_objects()[4]) };
        let scans = analytic_scan(&scene, 4).unwrap();
        let a = reconstruct(&scans, &ReconConfig { parallel: true, ..Default::default() });
        let b = reconstruct(&scans, &ReconConfig { parallel: false, ..Default::default() });
        assert_eq!(a.outcome, b.outcome);
        assert_eq!(a.scans, b.scans);
    }
}
