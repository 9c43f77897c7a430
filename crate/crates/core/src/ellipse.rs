//! Direct least-squares ellipse fitting and point-to-ellipse distance.
//!
//! The conic fit is the constrained eigen-solve of Fitzgibbon, Pilu and
//! Fisher in the numerically stable 3x3 reduction of Halir and Flusser: the
//! scatter matrix is split into quadratic and linear blocks, the linear
//! block is eliminated, and the remaining 3x3 problem is solved against the
//! ellipse constraint `4ac - b^2 = 1`.
//!
//! Distances are exact Euclidean distances in 3-D. The in-plane part is
//! found with a golden-section search restricted to the quarter arc of the
//! quadrant the point falls in; the squared distance is unimodal there.

use nalgebra::{Matrix3, Vector3};

use crate::error::{Error, Result};
use crate::geometry::{fit_plane, Ellipse3, PlaneFrame, Point3, Vec3};

/// `a x^2 + b xy + c y^2 + d x + e y + f = 0` in a local 2-D frame.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Conic {
    pub a: f64,
    pub b: f64,
    pub c: f64,
    pub d: f64,
    pub e: f64,
    pub f: f64,
}

impl Conic {
    pub fn new(a: f64, b: f64, c: f64, d: f64, e: f64, f: f64) -> Self {
        Self { a, b, c, d, e, f }
    }

    pub fn eval(&self, x: f64, y: f64) -> f64 {
        self.a * x * x + self.b * x * y + self.c * y * y + self.d * x + self.e * y + self.f
    }

    /// `b^2 - 4ac`; negative for ellipses.
    pub fn discriminant(&self) -> f64 {
        self.b * self.b - 4.0 * self.a * self.c
    }

    pub fn coefficients(&self) -> [f64; 6] {
        [self.a, self.b, self.c, self.d, self.e, self.f]
    }

    fn scaled(&self, k: f64) -> Self {
        Self::new(self.a * k, self.b * k, self.c * k, self.d * k, self.e * k, self.f * k)
    }

    /// Rescales so that `4ac - b^2 = 1` and `a > 0`.
    pub fn normalized(&self) -> Result<Self> {
        let q = -self.discriminant();
        if !(q > 0.0) || !q.is_finite() {
            return Err(Error::NotAnEllipse);
        }
        let k = q.sqrt().recip();
        let k = if self.a + self.c < 0.0 { -k } else { k };
        Ok(self.scaled(k))
    }

    /// The conic of an ellipse given by center, semi axes and major-axis angle.
    pub fn from_parametric(cx: f64, cy: f64, semi_major: f64, semi_minor: f64, angle: f64) -> Self {
        let (s, c) = angle.sin_cos();
        let (a2, b2) = (semi_major * semi_major, semi_minor * semi_minor);
        let a = c * c / a2 + s * s / b2;
        let b = 2.0 * c * s * (1.0 / a2 - 1.0 / b2);
        let cc = s * s / a2 + c * c / b2;
        let d = -2.0 * a * cx - b * cy;
        let e = -b * cx - 2.0 * cc * cy;
        let f = a * cx * cx + b * cx * cy + cc * cy * cy - 1.0;
        Self::new(a, b, cc, d, e, f)
    }
}

/// Fits an ellipse conic to 2-D points by direct least squares.
///
/// Needs at least six points that are not all collinear.
pub fn fit_conic_direct(points: &[(f64, f64)]) -> Result<Conic> {
    let n = points.len();
    if n < 6 {
        return Err(Error::InsufficientInput { needed: 6, got: n });
    }
    // Center and scale for conditioning.
    let (mx, my) = points.iter().fold((0.0, 0.0), |acc, p| (acc.0 + p.0, acc.1 + p.1));
    let (mx, my) = (mx / n as f64, my / n as f64);
    let rms = (points.iter().map(|p| (p.0 - mx).powi(2) + (p.1 - my).powi(2)).sum::<f64>() / n as f64).sqrt();
    if !(rms > 1e-12) {
        return Err(Error::FitFailure("coincident points".into()));
    }
    let s = 1.0 / rms;

    let mut s1 = Matrix3::<f64>::zeros();
    let mut s2 = Matrix3::<f64>::zeros();
    let mut s3 = Matrix3::<f64>::zeros();
    for p in points {
        let (x, y) = ((p.0 - mx) * s, (p.1 - my) * s);
        let q = Vector3::new(x * x, x * y, y * y);
        let l = Vector3::new(x, y, 1.0);
        s1 += q * q.transpose();
        s2 += q * l.transpose();
        s3 += l * l.transpose();
    }
    // Collinear samples make the linear scatter block singular.
    let s3_inv = s3
        .try_inverse()
        .filter(|m| m.iter().all(|v| v.is_finite()) && s3.determinant().abs() > 1e-12 * (n as f64).powi(3))
        .ok_or_else(|| Error::FitFailure("degenerate point configuration".into()))?;
    let t = -s3_inv * s2.transpose();
    let m = s1 + s2 * t;
    // Premultiply by the inverse of the constraint block [[0,0,2],[0,-1,0],[2,0,0]].
    let reduced = Matrix3::from_rows(&[m.row(2) / 2.0, -m.row(1), m.row(0) / 2.0]);

    let mut best: Option<(f64, Vector3<f64>)> = None;
    for lambda in reduced.complex_eigenvalues().iter() {
        if lambda.im.abs() > 1e-9 * (1.0 + lambda.re.abs()) {
            continue;
        }
        let Some(v) = null_vector(&(reduced - Matrix3::identity() * lambda.re)) else { continue };
        let constraint = 4.0 * v[0] * v[2] - v[1] * v[1];
        if constraint <= 0.0 {
            continue;
        }
        // Generalised eigenvalue: cost per unit constraint, smallest wins.
        let cost = (v.transpose() * m * v)[0] / constraint;
        if best.as_ref().is_none_or(|(c, _)| cost < *c) {
            best = Some((cost, v));
        }
    }
    let (_, quad) = best.ok_or_else(|| Error::FitFailure("no elliptical eigenvector".into()))?;
    let lin = t * quad;
    let (a, b, c) = (quad[0], quad[1], quad[2]);
    let (d, e, f) = (lin[0], lin[1], lin[2]);

    // Undo the normalisation x' = s (x - mx).
    let s2_ = s * s;
    let conic = Conic::new(
        a * s2_,
        b * s2_,
        c * s2_,
        -2.0 * a * s2_ * mx - b * s2_ * my + d * s,
        -b * s2_ * mx - 2.0 * c * s2_ * my + e * s,
        a * s2_ * mx * mx + b * s2_ * mx * my + c * s2_ * my * my - d * s * mx - e * s * my + f,
    );
    conic.normalized().map_err(|_| Error::FitFailure("fit is not an ellipse".into()))
}

/// Unit null vector of a rank-2 3x3 matrix from the best-conditioned
/// cross product of two rows.
fn null_vector(m: &Matrix3<f64>) -> Option<Vector3<f64>> {
    let rows = [m.row(0).transpose(), m.row(1).transpose(), m.row(2).transpose()];
    let candidates = [rows[0].cross(&rows[1]), rows[0].cross(&rows[2]), rows[1].cross(&rows[2])];
    let v = candidates.iter().max_by(|a, b| a.norm_squared().total_cmp(&b.norm_squared()))?;
    let n = v.norm();
    (n > 0.0 && n.is_finite()).then(|| v / n)
}

/// Converts a conic in `frame` coordinates into the parametric 3-D ellipse.
///
/// The major axis direction is reported with its in-frame angle in
/// `(-90, 90]` degrees.
pub fn conic_to_parametric(conic: &Conic, frame: &PlaneFrame) -> Result<Ellipse3> {
    let Conic { a, b, c, d, e, f } = *conic;
    let det = 4.0 * a * c - b * b;
    if !(det > 0.0) || !det.is_finite() {
        return Err(Error::NotAnEllipse);
    }
    let x0 = (b * e - 2.0 * c * d) / det;
    let y0 = (b * d - 2.0 * a * e) / det;
    let f0 = f + 0.5 * (d * x0 + e * y0);

    // Eigenvalues of the quadratic form [[a, b/2], [b/2, c]].
    let mean = 0.5 * (a + c);
    let rad = (0.25 * (a - c) * (a - c) + 0.25 * b * b).sqrt();
    let (l_small, l_large) = if mean > 0.0 { (mean - rad, mean + rad) } else { (mean + rad, mean - rad) };
    let semi_major_sq = -f0 / l_small;
    let semi_minor_sq = -f0 / l_large;
    if !(semi_major_sq > 0.0 && semi_minor_sq > 0.0) || !semi_major_sq.is_finite() {
        return Err(Error::NotAnEllipse);
    }

    // Eigenvector of the smaller-magnitude eigenvalue is the major axis.
    let v1 = (0.5 * b, l_small - a);
    let v2 = (l_small - c, 0.5 * b);
    let (vx, vy) = if v1.0.hypot(v1.1) >= v2.0.hypot(v2.1) { v1 } else { v2 };
    let mut angle = if vx == 0.0 && vy == 0.0 {
        // Circle: any direction is a principal one.
        0.0
    } else {
        vy.atan2(vx)
    };
    if angle <= -std::f64::consts::FRAC_PI_2 {
        angle += std::f64::consts::PI;
    } else if angle > std::f64::consts::FRAC_PI_2 {
        angle -= std::f64::consts::PI;
    }
    let (s, co) = angle.sin_cos();
    Ok(Ellipse3 {
        center: frame.to_world(x0, y0),
        semi_major: semi_major_sq.sqrt(),
        semi_minor: semi_minor_sq.sqrt(),
        plane_normal: frame.normal,
        local_x_axis: frame.x_axis * co + frame.y_axis * s,
    })
}

/// Fits a 3-D ellipse: least-squares plane, projection, conic fit.
pub fn fit_ellipse3(points: &[Point3]) -> Result<Ellipse3> {
    if points.len() < 6 {
        return Err(Error::InsufficientInput { needed: 6, got: points.len() });
    }
    let plane = fit_plane(points)?;
    let frame = PlaneFrame::from_plane(&plane);
    let local: Vec<(f64, f64)> = points.iter().map(|p| frame.to_local(p)).collect();
    let conic = fit_conic_direct(&local)?;
    conic_to_parametric(&conic, &frame)
}

/// Quadrant (1..=4) of the projection of `point` in the ellipse frame.
///
/// Points on an axis belong to the lower-numbered of the two neighbouring
/// quadrants; the center belongs to quadrant 1.
pub fn quadrant_of(point: &Point3, e: &Ellipse3) -> u8 {
    let (u, v) = e.frame().to_local(point);
    quadrant_of_local(u, v)
}

fn quadrant_of_local(u: f64, v: f64) -> u8 {
    match (u, v) {
        (u, v) if u >= 0.0 && v >= 0.0 => 1,
        (u, v) if u < 0.0 && v >= 0.0 => 2,
        (u, _) if u <= 0.0 => 3,
        _ => 4,
    }
}

const INV_PHI: f64 = 0.618_033_988_749_894_8;
/// Golden-section stopping width on the ellipse parameter, radians.
pub const GOLDEN_TOL: f64 = 1e-9;

/// Euclidean distance from `point` to the ellipse curve.
pub fn distance_to_ellipse(point: &Point3, e: &Ellipse3) -> f64 {
    EllipseProbe::new(e).distance(point)
}

/// Rigorous bounds `(lower, upper)` on [`distance_to_ellipse`] that cost a
/// handful of flops.
pub fn distance_bounds(point: &Point3, e: &Ellipse3) -> (f64, f64) {
    EllipseProbe::new(e).bounds(point)
}

/// An ellipse with its frame unpacked, for repeated distance queries.
#[derive(Debug, Clone, Copy)]
pub struct EllipseProbe {
    center: Point3,
    normal: Vec3,
    x_axis: Vec3,
    y_axis: Vec3,
    a: f64,
    b: f64,
}

impl EllipseProbe {
    pub fn new(e: &Ellipse3) -> Self {
        Self {
            center: e.center,
            normal: e.plane_normal,
            x_axis: e.local_x_axis,
            y_axis: e.local_y_axis(),
            a: e.semi_major,
            b: e.semi_minor,
        }
    }

    fn local(&self, p: &Point3) -> (f64, f64, f64) {
        let d = p - self.center;
        (d.dot(&self.x_axis), d.dot(&self.y_axis), d.dot(&self.normal))
    }

    pub fn distance(&self, p: &Point3) -> f64 {
        let (u, v, h) = self.local(p);
        (h * h + in_plane_distance_sq(u, v, self.a, self.b, None)).sqrt()
    }

    /// In-plane bounds. Lower: mapping the ellipse to the unit circle
    /// stretches lengths by at most `1/b`; outside points are also
    /// separated by the supporting line normal to the gradient at the
    /// point. Upper: distance to the radial projection, which lies on the
    /// curve.
    fn in_plane_bounds(&self, u: f64, v: f64) -> (f64, f64) {
        let (a, b) = (self.a, self.b);
        let rho = ((u / a).powi(2) + (v / b).powi(2)).sqrt();
        if rho == 0.0 {
            return (b, b);
        }
        let mut lo = b * (rho - 1.0).abs();
        if rho > 1.0 {
            let (gx, gy) = (u / (a * a), v / (b * b));
            let g = gx.hypot(gy);
            let (nx, ny) = (gx / g, gy / g);
            let support = ((a * nx).powi(2) + (b * ny).powi(2)).sqrt();
            lo = lo.max(nx * u + ny * v - support);
        }
        let hi = u.hypot(v) * (1.0 - 1.0 / rho).abs();
        (lo, hi.max(lo))
    }

    pub fn bounds(&self, p: &Point3) -> (f64, f64) {
        let (u, v, h) = self.local(p);
        let (lo, hi) = self.in_plane_bounds(u, v);
        ((h * h + lo * lo).sqrt(), (h * h + hi * hi).sqrt())
    }

    /// `distance(p) <= threshold`, settled by the bounds where possible and
    /// otherwise by a line search that stops once a curve point within the
    /// threshold is found.
    pub fn within(&self, p: &Point3, threshold: f64) -> bool {
        let (u, v, h) = self.local(p);
        let budget = threshold * threshold - h * h;
        if budget < 0.0 {
            return false;
        }
        let (lo, hi) = self.in_plane_bounds(u, v);
        if lo * lo > budget {
            return false;
        }
        if hi * hi <= budget {
            return true;
        }
        in_plane_distance_sq(u, v, self.a, self.b, Some(budget)) <= budget
    }
}

/// Squared in-plane distance by golden-section search over the quarter arc
/// of the point's quadrant. With `accept`, returns as soon as a sample at
/// or below it is seen; the golden search keeps its best interior sample,
/// so the full search could only end lower.
fn in_plane_distance_sq(u: f64, v: f64, a: f64, b: f64, accept: Option<f64>) -> f64 {
    let q = quadrant_of_local(u, v);
    let lo = f64::from(q - 1) * std::f64::consts::FRAC_PI_2;
    let hi = lo + std::f64::consts::FRAC_PI_2;
    let f = |t: f64| {
        let (s, c) = t.sin_cos();
        (u - a * c).powi(2) + (v - b * s).powi(2)
    };
    let accept = accept.unwrap_or(f64::NEG_INFINITY);
    // Guard the quadrant seams.
    let ends = f(lo).min(f(hi));
    if ends <= accept {
        return ends;
    }
    let (mut x0, mut x3) = (lo, hi);
    let mut x1 = x3 - INV_PHI * (x3 - x0);
    let mut x2 = x0 + INV_PHI * (x3 - x0);
    let (mut f1, mut f2) = (f(x1), f(x2));
    while x3 - x0 > GOLDEN_TOL {
        if f1.min(f2) <= accept {
            break;
        }
        if f1 <= f2 {
            x3 = x2;
            x2 = x1;
            f2 = f1;
            x1 = x3 - INV_PHI * (x3 - x0);
            f1 = f(x1);
        } else {
            x0 = x1;
            x1 = x2;
            f1 = f2;
            x2 = x0 + INV_PHI * (x3 - x0);
            f2 = f(x2);
        }
    }
    f1.min(f2).min(ends)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::Vec3;
    use std::f64::consts::PI;

    fn xy_frame() -> PlaneFrame {
        PlaneFrame::new(Vec3::zeros(), Vec3::z(), Vec3::x()).unwrap()
    }

    fn sample(cx: f64, cy: f64, a: f64, b: f64, angle: f64, n: usize, arc: f64) -> Vec<(f64, f64)> {
        let (s, c) = angle.sin_cos();
        (0..n)
            .map(|i| {
                let t = arc * i as f64 / n as f64;
                let (x, y) = (a * t.cos(), b * t.sin());
                (cx + c * x - s * y, cy + s * x + c * y)
            })
            .collect()
    }

    #[test]
    fn unit_circle() {
        let pts = sample(0.0, 0.0, 1.0, 1.0, 0.0, 8, 2.0 * PI);
        let c = fit_conic_direct(&pts).unwrap();
        // x^2 + y^2 - 1 scaled to 4ac - b^2 = 1 is 0.5(x^2 + y^2 - 1).
        let expect = [0.5, 0.0, 0.5, 0.0, 0.0, -0.5];
        for (got, want) in c.coefficients().iter().zip(expect) {
            assert!((got - want).abs() < 1e-12, "{got} vs {want}");
        }
    }

    #[test]
    fn rotated_ellipse_exact() {
        let angle = 30f64.to_radians();
        let pts = sample(10.0, 5.0, 40.0, 20.0, angle, 12, 2.0 * PI);
        let conic = fit_conic_direct(&pts).unwrap();
        for p in &pts {
            assert!(conic.eval(p.0, p.1).abs() < 1e-9);
        }
        let truth = Conic::from_parametric(10.0, 5.0, 40.0, 20.0, angle).normalized().unwrap();
        for (g, w) in conic.coefficients().iter().zip(truth.coefficients()) {
            assert!((g - w).abs() <= 1e-6 * w.abs().max(1e-3), "{g} vs {w}");
        }
        let e = conic_to_parametric(&conic, &xy_frame()).unwrap();
        assert!((e.center - Vec3::new(10.0, 5.0, 0.0)).norm() < 1e-6);
        assert!((e.semi_major - 40.0).abs() < 1e-6 * 40.0);
        assert!((e.semi_minor - 20.0).abs() < 1e-6 * 20.0);
        assert!((e.local_x_axis.y.atan2(e.local_x_axis.x) - angle).abs() < 1e-6);
    }

    #[test]
    fn minimum_point_count() {
        let six = sample(1.0, -2.0, 7.0, 3.0, 0.4, 6, 2.0 * PI);
        let conic = fit_conic_direct(&six).unwrap();
        let e = conic_to_parametric(&conic, &xy_frame()).unwrap();
        assert!((e.semi_major - 7.0).abs() < 1e-9);
        assert!((e.semi_minor - 3.0).abs() < 1e-9);
        assert!(matches!(
            fit_conic_direct(&six[..5]),
            Err(Error::InsufficientInput { needed: 6, got: 5 })
        ));
    }

    #[test]
    fn collinear_and_coincident_fail() {
        let line: Vec<_> = (0..10).map(|i| (i as f64, 2.0 * i as f64 + 1.0)).collect();
        assert!(matches!(fit_conic_direct(&line), Err(Error::FitFailure(_))));
        let same = vec![(3.0, 3.0); 8];
        assert!(matches!(fit_conic_direct(&same), Err(Error::FitFailure(_))));
    }

    #[test]
    fn circle_conic_to_parametric() {
        let c = Conic::new(1.0, 0.0, 1.0, 0.0, 0.0, -100.0);
        let e = conic_to_parametric(&c, &xy_frame()).unwrap();
        assert!((e.semi_major - 10.0).abs() < 1e-12);
        assert!((e.semi_minor - 10.0).abs() < 1e-12);
        assert!(e.center.norm() < 1e-12);
    }

    #[test]
    fn swapped_axes_canonicalised() {
        // 20 x 40 at 30 degrees is the same curve as 40 x 20 at 120 degrees.
        let c1 = Conic::from_parametric(0.0, 0.0, 20.0, 40.0, 30f64.to_radians());
        let c2 = Conic::from_parametric(0.0, 0.0, 40.0, 20.0, 120f64.to_radians());
        let e1 = conic_to_parametric(&c1, &xy_frame()).unwrap();
        let e2 = conic_to_parametric(&c2, &xy_frame()).unwrap();
        assert!(e1.semi_major >= e1.semi_minor);
        assert!((e1.semi_major - 40.0).abs() < 1e-9 && (e1.semi_minor - 20.0).abs() < 1e-9);
        assert!((e1.local_x_axis - e2.local_x_axis).norm() < 1e-9);
        let ang = e1.local_x_axis.y.atan2(e1.local_x_axis.x).to_degrees();
        assert!((ang + 60.0).abs() < 1e-9, "{ang}");
    }

    #[test]
    fn hyperbola_rejected() {
        let c = Conic::new(1.0, 0.0, -1.0, 0.0, 0.0, -1.0);
        assert_eq!(conic_to_parametric(&c, &xy_frame()), Err(Error::NotAnEllipse));
        let imaginary = Conic::new(1.0, 0.0, 1.0, 0.0, 0.0, 1.0);
        assert_eq!(conic_to_parametric(&imaginary, &xy_frame()), Err(Error::NotAnEllipse));
    }

    #[test]
    fn resampled_parametric_lies_on_conic() {
        let conic = Conic::from_parametric(-3.0, 8.0, 25.0, 9.0, -1.1).normalized().unwrap();
        let e = conic_to_parametric(&conic, &xy_frame()).unwrap();
        for i in 0..64 {
            let p = e.point_at(i as f64 * PI / 32.0);
            assert!(conic.eval(p.x, p.y).abs() < 1e-9);
        }
    }

    fn axis_ellipse(a: f64, b: f64) -> Ellipse3 {
        Ellipse3 { center: Vec3::zeros(), semi_major: a, semi_minor: b, plane_normal: Vec3::z(), local_x_axis: Vec3::x() }
    }

    #[test]
    fn quadrants() {
        let e = axis_ellipse(40.0, 20.0);
        assert_eq!(quadrant_of(&Vec3::new(1.0, 1.0, 0.0), &e), 1);
        assert_eq!(quadrant_of(&Vec3::new(-1.0, 1.0, 0.0), &e), 2);
        assert_eq!(quadrant_of(&Vec3::new(-1.0, -1.0, 0.0), &e), 3);
        assert_eq!(quadrant_of(&Vec3::new(1.0, -1.0, 0.0), &e), 4);
        assert_eq!(quadrant_of(&Vec3::new(5.0, 0.0, 0.0), &e), 1);
        assert_eq!(quadrant_of(&Vec3::new(0.0, 5.0, 0.0), &e), 1);
        assert_eq!(quadrant_of(&Vec3::new(-5.0, 0.0, 0.0), &e), 2);
        assert_eq!(quadrant_of(&Vec3::new(0.0, -5.0, 0.0), &e), 3);
        assert_eq!(quadrant_of(&Vec3::zeros(), &e), 1);
    }

    fn dense_oracle(p: &Vec3, e: &Ellipse3, n: usize) -> f64 {
        (0..n)
            .map(|i| (e.point_at(2.0 * PI * i as f64 / n as f64) - p).norm())
            .fold(f64::INFINITY, f64::min)
    }

    #[test]
    fn distance_simple_cases() {
        let c = axis_ellipse(15.0, 15.0);
        assert!((distance_to_ellipse(&Vec3::zeros(), &c) - 15.0).abs() < 1e-12);
        let e = axis_ellipse(40.0, 20.0);
        for i in 0..50 {
            let p = e.point_at(i as f64 * 0.37);
            assert!(distance_to_ellipse(&p, &e) < 1e-6);
        }
        let p = Vec3::new(30.0, 15.0, 0.0);
        let want = dense_oracle(&p, &e, 100_000);
        assert!((distance_to_ellipse(&p, &e) - want).abs() < 1e-4);
        // Out of plane points use the full 3-D distance.
        let q = Vec3::new(40.0, 0.0, 3.0);
        assert!((distance_to_ellipse(&q, &e) - 3.0).abs() < 1e-9);
    }

    #[test]
    fn bounds_bracket_distance() {
        let e = axis_ellipse(33.0, 12.0);
        for i in 0..400 {
            let t = i as f64 * 0.173;
            let r = 0.05 * i as f64;
            let p = Vec3::new(r * t.cos(), r * t.sin(), (i % 7) as f64 - 3.0);
            let d = distance_to_ellipse(&p, &e);
            let (lo, hi) = distance_bounds(&p, &e);
            assert!(lo <= d + 1e-9 && d <= hi + 1e-9, "{lo} {d} {hi}");
        }
    }

    #[test]
    fn fast_inlier_test_matches_distance() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(21);
        for _ in 0..200 {
            let b = rng.random_range(5.0..40.0);
            let e = axis_ellipse(b * rng.random_range(1.0..5.0), b);
            let probe = EllipseProbe::new(&e);
            for _ in 0..50 {
                let p = Vec3::new(
                    rng.random_range(-1.3..1.3) * e.semi_major,
                    rng.random_range(-1.3..1.3) * e.semi_minor,
                    rng.random_range(-2.0..2.0),
                );
                let d = distance_to_ellipse(&p, &e);
                let (lo, hi) = probe.bounds(&p);
                assert!(lo <= d + 1e-9 && d <= hi + 1e-9, "{lo} {d} {hi}");
                for t in [0.5, 1.5, 3.0] {
                    assert_eq!(probe.within(&p, t), d <= t, "t {t} d {d}");
                }
            }
        }
    }
}
