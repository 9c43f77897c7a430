//! Sample consensus over scan points with circle, line and ellipse models.
//!
//! Each iteration draws a minimal sample (3, 2 or 6 points), builds the
//! plane of the sample, fits the model inside it and counts points within
//! `distance_threshold` of the model curve in 3-D. The best consensus wins;
//! ties keep the earlier model.

use rand::{seq::index::sample, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::ellipse::{distance_to_ellipse, fit_ellipse3, EllipseProbe};
use crate::error::{Error, Result};
use crate::geometry::{Circle3, Ellipse3, Line3, Point3};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PrimitiveKind {
    Line,
    Circle,
    Ellipse,
}

impl PrimitiveKind {
    /// Ordered from the simplest model to the most flexible one.
    pub const ALL: [PrimitiveKind; 3] = [PrimitiveKind::Line, PrimitiveKind::Circle, PrimitiveKind::Ellipse];

    pub fn sample_size(self) -> usize {
        match self {
            PrimitiveKind::Line => 2,
            PrimitiveKind::Circle => 3,
            PrimitiveKind::Ellipse => 6,
        }
    }

    fn seed_tag(self) -> u64 {
        match self {
            PrimitiveKind::Line => 0x9e37_79b9_7f4a_7c15,
            PrimitiveKind::Circle => 0xbf58_476d_1ce4_e5b9,
            PrimitiveKind::Ellipse => 0x94d0_49bb_1331_11eb,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            PrimitiveKind::Line => "line",
            PrimitiveKind::Circle => "circle",
            PrimitiveKind::Ellipse => "ellipse",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SacConfig {
    /// Inlier distance, mm.
    pub distance_threshold: f64,
    /// Counted (non-degenerate) hypotheses per fit.
    pub max_iterations: usize,
    pub rng_seed: u64,
    /// Fits below this inlier fraction are reported as failures.
    pub min_inlier_fraction: f64,
    /// Admissible circle radius / ellipse semi-minor range, mm.
    pub min_radius: f64,
    pub max_radius: f64,
    /// Largest admissible ellipse semi-major axis, mm.
    pub max_semi_major: f64,
}

impl Default for SacConfig {
    fn default() -> Self {
        Self {
            distance_threshold: 1.5,
            max_iterations: 250,
            rng_seed: 0,
            min_inlier_fraction: 0.5,
            min_radius: 5.0,
            max_radius: 60.0,
            max_semi_major: 250.0,
        }
    }
}

impl SacConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.distance_threshold > 0.0) {
            return Err(Error::ContractViolation("distance_threshold must be positive"));
        }
        if self.max_iterations == 0 {
            return Err(Error::ContractViolation("max_iterations must be at least 1"));
        }
        if !(0.0..=1.0).contains(&self.min_inlier_fraction) {
            return Err(Error::ContractViolation("min_inlier_fraction must lie in [0, 1]"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum PrimitiveParams {
    Line(Line3),
    Circle(Circle3),
    Ellipse(Ellipse3),
}

impl PrimitiveParams {
    pub fn kind(&self) -> PrimitiveKind {
        match self {
            PrimitiveParams::Line(_) => PrimitiveKind::Line,
            PrimitiveParams::Circle(_) => PrimitiveKind::Circle,
            PrimitiveParams::Ellipse(_) => PrimitiveKind::Ellipse,
        }
    }

    pub fn distance(&self, p: &Point3) -> f64 {
        match self {
            PrimitiveParams::Line(l) => l.distance(p),
            PrimitiveParams::Circle(c) => c.distance(p),
            PrimitiveParams::Ellipse(e) => distance_to_ellipse(p, e),
        }
    }

    /// Same decision as `distance(p) <= threshold`.
    pub fn is_inlier(&self, p: &Point3, threshold: f64) -> bool {
        InlierTest::new(self).within(p, threshold)
    }

    pub fn inliers(&self, points: &[Point3], threshold: f64) -> Vec<usize> {
        let test = InlierTest::new(self);
        points
            .iter()
            .enumerate()
            .filter(|(_, p)| test.within(p, threshold))
            .map(|(i, _)| i)
            .collect()
    }
}

/// A model prepared for many inlier queries.
enum InlierTest {
    Line(Line3),
    Circle(Circle3),
    Ellipse(EllipseProbe),
}

impl InlierTest {
    fn new(params: &PrimitiveParams) -> Self {
        match params {
            PrimitiveParams::Line(l) => InlierTest::Line(*l),
            PrimitiveParams::Circle(c) => InlierTest::Circle(*c),
            PrimitiveParams::Ellipse(e) => InlierTest::Ellipse(EllipseProbe::new(e)),
        }
    }

    fn within(&self, p: &Point3, threshold: f64) -> bool {
        match self {
            InlierTest::Line(l) => l.distance(p) <= threshold,
            InlierTest::Circle(c) => c.distance(p) <= threshold,
            InlierTest::Ellipse(e) => e.within(p, threshold),
        }
    }
}

/// Result of fitting one 2-D primitive to one scan.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PrimitiveFit {
    pub params: PrimitiveParams,
    pub inlier_indices: Vec<usize>,
    pub n_points: usize,
    pub fit_percentage: f64,
}

impl PrimitiveFit {
    pub fn kind(&self) -> PrimitiveKind {
        self.params.kind()
    }

    pub fn from_model(params: PrimitiveParams, points: &[Point3], threshold: f64) -> Self {
        let inlier_indices = params.inliers(points, threshold);
        let fit_percentage = 100.0 * inlier_indices.len() as f64 / points.len() as f64;
        Self { params, inlier_indices, n_points: points.len(), fit_percentage }
    }
}

fn build_model(kind: PrimitiveKind, sample: &[Point3], cfg: &SacConfig) -> Option<PrimitiveParams> {
    match kind {
        PrimitiveKind::Line => Line3::through(&sample[0], &sample[1]).map(PrimitiveParams::Line),
        PrimitiveKind::Circle => {
            // Three points fix their own plane, so projection is the identity.
            let c = Circle3::through(&sample[0], &sample[1], &sample[2])?;
            (c.radius >= cfg.min_radius && c.radius <= cfg.max_radius).then_some(PrimitiveParams::Circle(c))
        }
        PrimitiveKind::Ellipse => {
            let e = fit_ellipse3(sample).ok()?;
            (e.semi_minor >= cfg.min_radius && e.semi_minor <= cfg.max_radius && e.semi_major <= cfg.max_semi_major)
                .then_some(PrimitiveParams::Ellipse(e))
        }
    }
}

/// Robustly fits one primitive kind to `points`.
///
/// Deterministic for a given `cfg.rng_seed`. Degenerate or implausible
/// minimal samples are redrawn without counting against
/// `max_iterations`, up to ten times that many draws in total.
pub fn ransac_fit(points: &[Point3], kind: PrimitiveKind, cfg: &SacConfig) -> Result<PrimitiveFit> {
    cfg.validate()?;
    let n = points.len();
    let k = kind.sample_size();
    if n < k {
        return Err(Error::InsufficientInput { needed: k, got: n });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.rng_seed ^ kind.seed_tag());
    let t = cfg.distance_threshold;
    let mut best: Option<(PrimitiveParams, usize)> = None;
    let mut counted = 0;
    let mut draws = 0;
    let mut buf = Vec::with_capacity(k);
    while counted < cfg.max_iterations && draws < 10 * cfg.max_iterations {
        draws += 1;
        buf.clear();
        buf.extend(sample(&mut rng, n, k).into_iter().map(|i| points[i]));
        let Some(model) = build_model(kind, &buf, cfg) else { continue };
        counted += 1;

        let best_count = best.as_ref().map_or(0, |b| b.1);
        let test = InlierTest::new(&model);
        let mut count = 0;
        for (i, p) in points.iter().enumerate() {
            // Cannot beat the incumbent any more.
            if count + (n - i) <= best_count {
                break;
            }
            if test.within(p, t) {
                count += 1;
            }
        }
        if count > best_count {
            best = Some((model, count));
            if count == n {
                break;
            }
        }
    }
    let (model, count) = best.ok_or_else(|| Error::FitFailure(format!("no valid {} hypothesis", kind.name())))?;
    if (count as f64) < cfg.min_inlier_fraction * n as f64 {
        return Err(Error::FitFailure(format!(
            "{} consensus {count}/{n} below minimum fraction",
            kind.name()
        )));
    }
    Ok(PrimitiveFit::from_model(model, points, t))
}

/// Per-scan results of fitting every primitive kind.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct KindFits {
    pub line: Option<PrimitiveFit>,
    pub circle: Option<PrimitiveFit>,
    pub ellipse: Option<PrimitiveFit>,
}

impl KindFits {
    pub fn get(&self, kind: PrimitiveKind) -> Option<&PrimitiveFit> {
        match kind {
            PrimitiveKind::Line => self.line.as_ref(),
            PrimitiveKind::Circle => self.circle.as_ref(),
            PrimitiveKind::Ellipse => self.ellipse.as_ref(),
        }
    }

    pub fn percentage(&self, kind: PrimitiveKind) -> f64 {
        self.get(kind).map_or(0.0, |f| f.fit_percentage)
    }

    pub fn is_empty(&self) -> bool {
        self.line.is_none() && self.circle.is_none() && self.ellipse.is_none()
    }
}

/// Fits circle, line and ellipse to the same scan. Kinds whose
/// precondition or consensus fails are left empty.
pub fn fit_all_kinds(points: &[Point3], cfg: &SacConfig) -> KindFits {
    let fit = |kind| ransac_fit(points, kind, cfg).ok();
    KindFits {
        line: fit(PrimitiveKind::Line),
        circle: fit(PrimitiveKind::Circle),
        ellipse: fit(PrimitiveKind::Ellipse),
    }
}
