//! Browser bindings. Each call takes plain numbers and hands back a JSON
//! string for the page to draw.

use serde::Serialize;
use wasm_bindgen::prelude::*;

use scangrasp::ellipse::{distance_to_ellipse, fit_ellipse3};
use scangrasp::feedback::{aim_cue, project_xy, quickhull, shortest_vector_to_hull, tactor_amplitudes, FeedbackConfig, Point2};
use scangrasp::geometry::{ShapeModel, Vec3};
use scangrasp::metrics::{orientation_error_deg, size_error_mm};
use scangrasp::reconstruct::{reconstruct, ReconConfig};
use scangrasp::scan_sim::analytic_scan;
use scangrasp::scan_sim::ScanLine;
use scangrasp::scene::{protocol_objects, Scene};
use scangrasp::trial::lateral_pose;

#[derive(Serialize)]
struct ScanView {
    plane_deg: f64,
    label: Option<&'static str>,
    fit_percentage: Option<f64>,
    points: Vec<Point2>,
}

#[derive(Serialize)]
struct FrameView {
    object: String,
    scans: Vec<ScanView>,
    model: Option<ShapeModel>,
    failure: Option<String>,
    truth: ShapeModel,
    size_error_mm: Option<f64>,
    orientation_error_deg: Option<f64>,
    cue: scangrasp::feedback::AimCue,
    amplitudes: [f64; 4],
}

fn scan_views(scans: &[ScanLine], labels: &[(Option<&'static str>, Option<f64>)]) -> Vec<ScanView> {
    scans
        .iter()
        .zip(labels)
        .map(|(s, (label, pct))| ScanView {
            plane_deg: s.plane.dihedral_deg,
            label: *label,
            fit_percentage: *pct,
            points: project_xy(&s.points),
        })
        .collect()
}

/// One frame of protocol object `index` seen with the aim shifted by
/// (aim_x, aim_y) mm.
pub fn frame_json(index: usize, aim_x: f64, aim_y: f64, noise_sigma: f64, seed: u64, n_lines: usize) -> Result<String, String> {
    let objects = protocol_objects();
    let object = *objects.get(index).ok_or_else(|| format!("object index must be below {}", objects.len()))?;
    let scene = Scene { sensor: lateral_pose(aim_x, aim_y), noise_sigma, seed, ..Scene::single(object) };
    let scans = analytic_scan(&scene, n_lines).map_err(|e| e.to_string())?;
    let mut cfg = ReconConfig::default();
    cfg.sac.rng_seed = seed;
    cfg.parallel = false;
    let report = reconstruct(&scans, &cfg);
    let fb = FeedbackConfig::default();
    let cue = aim_cue(&scans, report.is_ok(), &fb);
    let truth = object.truth(&scene.sensor);
    let model = report.model().copied();
    let same = model.filter(|m| m.kind() == object.shape);
    let labels: Vec<_> = report
        .scans
        .iter()
        .map(|s| (s.label().map(|k| k.name()), s.chosen.as_ref().map(|c| c.fit.fit_percentage)))
        .collect();
    let view = FrameView {
        object: format!("{} {} {} mm", object.orientation.label(), object.shape.name(), object.size_mm),
        scans: scan_views(&scans, &labels),
        model,
        failure: match &report.outcome {
            scangrasp::reconstruct::Outcome::NotReconstructed { reason, .. } => Some(reason.clone()),
            _ => None,
        },
        truth,
        size_error_mm: same.map(|m| size_error_mm(&m, object.grasp_size())),
        orientation_error_deg: same.and_then(|m| orientation_error_deg(&m, &truth)),
        amplitudes: cue.state.amplitudes(&fb),
        cue,
    };
    serde_json::to_string(&view).map_err(|e| e.to_string())
}

#[derive(Serialize)]
struct EllipseView {
    center: [f64; 2],
    semi_major: f64,
    semi_minor: f64,
    angle_deg: f64,
    rms_distance: f64,
}

/// Direct ellipse fit to clicked points given as [x0, y0, x1, y1, ...].
pub fn ellipse_json(xy: &[f64]) -> Result<String, String> {
    let pts: Vec<Vec3> = xy.chunks_exact(2).map(|p| Vec3::new(p[0], p[1], 0.0)).collect();
    let e = fit_ellipse3(&pts).map_err(|e| e.to_string())?;
    let rms = (pts.iter().map(|p| distance_to_ellipse(p, &e).powi(2)).sum::<f64>() / pts.len() as f64).sqrt();
    let ax = e.local_x_axis;
    let view = EllipseView {
        center: [e.center.x, e.center.y],
        semi_major: e.semi_major,
        semi_minor: e.semi_minor,
        angle_deg: ax.y.atan2(ax.x).to_degrees(),
        rms_distance: rms,
    };
    serde_json::to_string(&view).map_err(|e| e.to_string())
}

#[derive(Serialize)]
struct HullView {
    hull: Vec<Point2>,
    inside: bool,
    nearest: Point2,
    distance: f64,
    amplitudes: [f64; 4],
}

/// Hull of clicked points and the tactor cue for an aim at `(qx, qy)`.
pub fn hull_json(xy: &[f64], qx: f64, qy: f64) -> Result<String, String> {
    let pts: Vec<Point2> = xy.chunks_exact(2).map(|p| [p[0] - qx, p[1] - qy]).collect();
    let hull = quickhull(&pts).map_err(|e| e.to_string())?;
    let off = shortest_vector_to_hull(&hull, &[0.0, 0.0]).map_err(|e| e.to_string())?;
    let amplitudes = if off.distance > 0.0 {
        tactor_amplitudes(&off.vector, off.distance, &FeedbackConfig::default()).map_err(|e| e.to_string())?
    } else {
        [0.0; 4]
    };
    let view = HullView {
        hull: hull.vertices.iter().map(|v| [v[0] + qx, v[1] + qy]).collect(),
        inside: off.inside,
        nearest: [qx + off.vector[0], qy + off.vector[1]],
        distance: off.distance,
        amplitudes,
    };
    serde_json::to_string(&view).map_err(|e| e.to_string())
}

#[wasm_bindgen]
pub fn object_count() -> usize {
    protocol_objects().len()
}

#[wasm_bindgen]
pub fn frame(index: usize, aim_x: f64, aim_y: f64, noise_sigma: f64, seed: u32, n_lines: usize) -> Result<String, JsValue> {
    frame_json(index, aim_x, aim_y, noise_sigma, seed as u64, n_lines).map_err(|e| JsValue::from_str(&e))
}

#[wasm_bindgen]
pub fn fit_ellipse(xy: Vec<f64>) -> Result<String, JsValue> {
    ellipse_json(&xy).map_err(|e| JsValue::from_str(&e))
}

#[wasm_bindgen]
pub fn hull_cue(xy: Vec<f64>, qx: f64, qy: f64) -> Result<String, JsValue> {
    hull_json(&xy, qx, qy).map_err(|e| JsValue::from_str(&e))
}
