//! Aiming cues: the scan points are flattened onto the sensor's frontal
//! plane, wrapped in a convex hull, and the shortest vector from the optical
//! axis to that hull drives four vibration channels arranged in a cross.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::Point3;
use crate::scan_sim::{ScanLine, VOLUME_WIDTH};

pub type Point2 = [f64; 2];

/// Channel order of every amplitude vector.
pub const TACTORS: [&str; 4] = ["up", "right", "down", "left"];

pub fn project_xy(points: &[Point3]) -> Vec<Point2> {
    points.iter().map(|p| [p.x, p.y]).collect()
}

/// Twice the signed area of (o, a, b); positive when b is left of o→a.
fn cross(o: &Point2, a: &Point2, b: &Point2) -> f64 {
    (a[0] - o[0]) * (b[1] - o[1]) - (a[1] - o[1]) * (b[0] - o[0])
}

/// Convex polygon with counter-clockwise vertices and no collinear triples.
/// One vertex for coincident input, two for collinear input.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Hull2 {
    pub vertices: Vec<Point2>,
}

impl Hull2 {
    pub fn area(&self) -> f64 {
        let n = self.vertices.len();
        (0..n).map(|i| cross(&[0.0, 0.0], &self.vertices[i], &self.vertices[(i + 1) % n])).sum::<f64>() / 2.0
    }

    /// True when `q` lies strictly inside: boundary points are outside.
    pub fn strictly_contains(&self, q: &Point2) -> bool {
        let n = self.vertices.len();
        n >= 3 && (0..n).all(|i| cross(&self.vertices[i], &self.vertices[(i + 1) % n], q) > 0.0)
    }
}

/// Recursive QuickHull.
pub fn quickhull(points: &[Point2]) -> Result<Hull2> {
    let first = points.first().ok_or(Error::InsufficientInput { needed: 1, got: 0 })?;
    if points.iter().any(|p| !p[0].is_finite() || !p[1].is_finite()) {
        return Err(Error::DegenerateInput("non-finite point"));
    }
    let key = |p: &&Point2| (p[0], p[1]);
    let lo = *points.iter().min_by(|a, b| key(a).partial_cmp(&key(b)).unwrap()).unwrap_or(first);
    let hi = *points.iter().max_by(|a, b| key(a).partial_cmp(&key(b)).unwrap()).unwrap_or(first);
    if lo == hi {
        return Ok(Hull2 { vertices: vec![lo] });
    }
    let below: Vec<Point2> = points.iter().copied().filter(|p| cross(&lo, &hi, p) < 0.0).collect();
    let above: Vec<Point2> = points.iter().copied().filter(|p| cross(&lo, &hi, p) > 0.0).collect();
    let mut vertices = vec![lo];
    chain(&below, lo, hi, &mut vertices);
    vertices.push(hi);
    chain(&above, hi, lo, &mut vertices);
    Ok(Hull2 { vertices })
}

/// Appends the hull vertices strictly between `p` and `q`, taken from
/// `set`, all of which lie right of p→q.
fn chain(set: &[Point2], p: Point2, q: Point2, out: &mut Vec<Point2>) {
    // Among equally far points only the two ends of the run are vertices;
    // take the one nearest p along p→q.
    let along = |s: &Point2| (q[0] - p[0]) * (s[0] - p[0]) + (q[1] - p[1]) * (s[1] - p[1]);
    let Some(far) = set
        .iter()
        .copied()
        .min_by(|a, b| cross(&p, &q, a).total_cmp(&cross(&p, &q, b)).then(along(a).total_cmp(&along(b))))
    else {
        return;
    };
    let left: Vec<Point2> = set.iter().copied().filter(|s| cross(&p, &far, s) < 0.0).collect();
    let right: Vec<Point2> = set.iter().copied().filter(|s| cross(&far, &q, s) < 0.0).collect();
    chain(&left, p, far, out);
    out.push(far);
    chain(&right, far, q, out);
}

fn nearest_on_segment(a: &Point2, b: &Point2, q: &Point2) -> Point2 {
    let d = [b[0] - a[0], b[1] - a[1]];
    let len2 = d[0] * d[0] + d[1] * d[1];
    if len2 == 0.0 {
        return *a;
    }
    let t = (((q[0] - a[0]) * d[0] + (q[1] - a[1]) * d[1]) / len2).clamp(0.0, 1.0);
    [a[0] + t * d[0], a[1] + t * d[1]]
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HullOffset {
    pub inside: bool,
    /// From the query to the nearest hull point; zero when inside.
    pub vector: Point2,
    pub distance: f64,
}

pub fn shortest_vector_to_hull(hull: &Hull2, query: &Point2) -> Result<HullOffset> {
    let v = &hull.vertices;
    if v.is_empty() {
        return Err(Error::InsufficientInput { needed: 1, got: 0 });
    }
    if hull.strictly_contains(query) {
        return Ok(HullOffset { inside: true, vector: [0.0, 0.0], distance: 0.0 });
    }
    let n = v.len();
    let edges = if n <= 2 { n - 1 } else { n };
    let mut best = v[0];
    let mut best_d2 = f64::INFINITY;
    for i in 0..edges.max(1) {
        let c = nearest_on_segment(&v[i], &v[(i + 1) % n], query);
        let d2 = (c[0] - query[0]).powi(2) + (c[1] - query[1]).powi(2);
        if d2 < best_d2 {
            best_d2 = d2;
            best = c;
        }
    }
    let vector = [best[0] - query[0], best[1] - query[1]];
    Ok(HullOffset { inside: false, vector, distance: best_d2.sqrt() })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FeedbackConfig {
    pub volume_width: f64,
    /// Half-width of the band around a tactor axis served by that tactor alone.
    pub single_band_deg: f64,
    /// Steady amplitude on every channel while aimed inside but unfitted.
    pub holding_amplitude: f64,
}

impl Default for FeedbackConfig {
    fn default() -> Self {
        Self { volume_width: VOLUME_WIDTH, single_band_deg: 10.0, holding_amplitude: 0.2 }
    }
}

/// Channel amplitudes (up, right, down, left) for an aiming offset.
pub fn tactor_amplitudes(vector: &Point2, distance: f64, cfg: &FeedbackConfig) -> Result<[f64; 4]> {
    if !(distance > 0.0) {
        return Err(Error::ContractViolation("tactor amplitudes need a positive distance"));
    }
    let base = (1.0 - distance / cfg.volume_width).clamp(0.0, 1.0);
    let phi = vector[1].atan2(vector[0]);
    let mut amps = [0.0; 4];
    let band = cfg.single_band_deg.to_radians();
    // Axis angles of (up, right, down, left).
    let axes = [std::f64::consts::FRAC_PI_2, 0.0, -std::f64::consts::FRAC_PI_2, std::f64::consts::PI];
    for (i, ax) in axes.iter().enumerate() {
        let off = (phi - ax + std::f64::consts::PI).rem_euclid(std::f64::consts::TAU) - std::f64::consts::PI;
        if off.abs() <= band {
            amps[i] = base;
            return Ok(amps);
        }
    }
    let (s, c) = phi.sin_cos();
    amps[if c >= 0.0 { 1 } else { 3 }] = base * c.abs();
    amps[if s >= 0.0 { 0 } else { 2 }] = base * s.abs();
    Ok(amps)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "state", rename_all = "snake_case")]
pub enum FeedbackState {
    NoObject,
    Directional { amplitudes: [f64; 4] },
    /// Aimed inside the hull, but the frame did not reconstruct.
    Holding,
    Locked,
}

impl FeedbackState {
    /// Drive levels of the four channels; Locked pulses every channel at full scale.
    pub fn amplitudes(&self, cfg: &FeedbackConfig) -> [f64; 4] {
        match self {
            FeedbackState::NoObject => [0.0; 4],
            FeedbackState::Directional { amplitudes } => *amplitudes,
            FeedbackState::Holding => [cfg.holding_amplitude; 4],
            FeedbackState::Locked => [1.0; 4],
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            FeedbackState::NoObject => "no_object",
            FeedbackState::Directional { .. } => "directional",
            FeedbackState::Holding => "holding",
            FeedbackState::Locked => "locked",
        }
    }
}

/// Everything the aiming step derived from one frame.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AimCue {
    pub state: FeedbackState,
    pub hull: Option<Hull2>,
    pub offset: Option<HullOffset>,
}

pub fn aim_cue(scans: &[ScanLine], recon_ok: bool, cfg: &FeedbackConfig) -> AimCue {
    let pts: Vec<Point2> = scans.iter().flat_map(|s| project_xy(&s.points)).collect();
    let Ok(hull) = quickhull(&pts) else {
        return AimCue { state: FeedbackState::NoObject, hull: None, offset: None };
    };
    let offset = shortest_vector_to_hull(&hull, &[0.0, 0.0]).expect("hull is non-empty");
    let state = if offset.inside {
        if recon_ok {
            FeedbackState::Locked
        } else {
            FeedbackState::Holding
        }
    } else if offset.distance > 0.0 {
        let amplitudes = tactor_amplitudes(&offset.vector, offset.distance, cfg).expect("positive distance");
        FeedbackState::Directional { amplitudes }
    } else {
        // On the boundary: not pierced, no direction to give.
        FeedbackState::Holding
    };
    AimCue { state, hull: Some(hull), offset: Some(offset) }
}

pub fn feedback_step(scans: &[ScanLine], recon_ok: bool, cfg: &FeedbackConfig) -> FeedbackState {
    aim_cue(scans, recon_ok, cfg).state
}
