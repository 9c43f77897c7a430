//! Shared geometric vocabulary for the pipeline.
//!
//! Everything lives in the sensor frame: right-handed, x to the right, y up,
//! z forward along the optical axis. Lengths are millimetres and the public
//! angles are degrees; trigonometry is done in radians internally.
//!
//! Plane normals follow one sign convention throughout: they point away from
//! the sensor, i.e. `normal · (p - origin) >= 0` for the surface point `p`
//! the plane was built from.

use nalgebra::Vector3;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub type Vec3 = Vector3<f64>;
/// Points and direction vectors share one representation.
pub type Point3 = Vec3;

/// Tolerance used for unit-norm checks on axes.
pub const UNIT_TOL: f64 = 1e-9;

/// Angular separation of neighbouring scan planes.
pub const SCAN_PLANE_STEP_DEG: f64 = 45.0;

/// Returns `v / |v|`, or `None` when `v` is (numerically) zero.
pub fn try_normalize(v: &Vec3) -> Option<Vec3> {
    let n = v.norm();
    if n > 1e-300 && n.is_finite() {
        Some(v / n)
    } else {
        None
    }
}

/// Angle between two directions in radians, robust near 0 and pi.
pub fn angle_between(a: &Vec3, b: &Vec3) -> f64 {
    a.cross(b).norm().atan2(a.dot(b))
}

/// Angle between two undirected axes, folded into `[0, pi/2]`.
pub fn axis_angle_between(a: &Vec3, b: &Vec3) -> f64 {
    let t = angle_between(a, b);
    t.min(std::f64::consts::PI - t)
}

/// Flips `v` so that it points away from the sensor origin as seen from `at`.
pub fn orient_away_from_origin(v: Vec3, at: &Point3) -> Vec3 {
    if v.dot(at) < 0.0 {
        -v
    } else {
        v
    }
}

/// A deterministic orthonormal pair spanning the plane orthogonal to `n`.
pub fn orthonormal_basis(n: &Vec3) -> (Vec3, Vec3) {
    let n = n.normalize();
    let helper = if n.x.abs() <= n.y.abs() && n.x.abs() <= n.z.abs() {
        Vec3::x()
    } else if n.y.abs() <= n.z.abs() {
        Vec3::y()
    } else {
        Vec3::z()
    };
    let x = (helper - n * n.dot(&helper)).normalize();
    let y = n.cross(&x);
    (x, y)
}

/// An infinite plane given by a point on it and a normal.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Plane {
    pub point: Point3,
    pub normal: Vec3,
}

impl Plane {
    /// Builds a plane, normalising `normal`.
    pub fn new(point: Point3, normal: Vec3) -> Result<Self> {
        let normal = try_normalize(&normal).ok_or(Error::DegenerateInput("zero plane normal"))?;
        Ok(Self { point, normal })
    }

    pub fn signed_distance(&self, p: &Point3) -> f64 {
        self.normal.dot(&(p - self.point))
    }

    pub fn distance(&self, p: &Point3) -> f64 {
        self.signed_distance(p).abs()
    }

    pub fn project(&self, p: &Point3) -> Point3 {
        p - self.normal * self.signed_distance(p)
    }
}

/// Orthogonal projection of `p` onto `plane`.
///
/// Accepts planes whose normal is not unit length; a zero normal is rejected.
pub fn project_onto_plane(p: &Point3, plane: &Plane) -> Result<Point3> {
    let nn = plane.normal.norm_squared();
    if !(nn > 1e-300) || !nn.is_finite() {
        return Err(Error::DegenerateInput("zero plane normal"));
    }
    let s = plane.normal.dot(&(p - plane.point)) / nn;
    Ok(p - plane.normal * s)
}

/// Plane through three points, normal from the cross product of two edges.
///
/// The normal is oriented away from the sensor origin.
pub fn plane_from_three_points(a: &Point3, b: &Point3, c: &Point3) -> Result<Plane> {
    let cross = (b - a).cross(&(c - a));
    // |cross| is twice the triangle area.
    if cross.norm() * 0.5 <= 1e-9 {
        return Err(Error::DegenerateInput("collinear points"));
    }
    let centroid = (a + b + c) / 3.0;
    let normal = orient_away_from_origin(cross.normalize(), &centroid);
    Ok(Plane { point: *a, normal })
}

/// Least-squares plane through a point set (smallest principal component).
pub fn fit_plane(points: &[Point3]) -> Result<Plane> {
    if points.len() < 3 {
        return Err(Error::InsufficientInput { needed: 3, got: points.len() });
    }
    let centroid = points.iter().sum::<Vec3>() / points.len() as f64;
    let mut cov = nalgebra::Matrix3::<f64>::zeros();
    for p in points {
        let d = p - centroid;
        cov += d * d.transpose();
    }
    let eig = nalgebra::SymmetricEigen::new(cov);
    let mut order = [0usize, 1, 2];
    order.sort_by(|&i, &j| eig.eigenvalues[i].total_cmp(&eig.eigenvalues[j]));
    // A vanishing middle eigenvalue means collinear (or coincident) points.
    let (mid, top) = (eig.eigenvalues[order[1]], eig.eigenvalues[order[2]]);
    if !(top > 0.0) || mid <= 1e-12 * top {
        return Err(Error::DegenerateInput("collinear points"));
    }
    let normal: Vec3 = eig.eigenvectors.column(order[0]).into_owned();
    let normal = orient_away_from_origin(normal.normalize(), &centroid);
    Ok(Plane { point: centroid, normal })
}

/// A plane with an explicit in-plane coordinate system.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PlaneFrame {
    pub origin: Point3,
    pub normal: Vec3,
    pub x_axis: Vec3,
    pub y_axis: Vec3,
}

impl PlaneFrame {
    /// Frame with a caller-chosen x axis; `x_axis` is re-orthogonalised
    /// against the normal.
    pub fn new(origin: Point3, normal: Vec3, x_axis: Vec3) -> Result<Self> {
        let normal = try_normalize(&normal).ok_or(Error::DegenerateInput("zero plane normal"))?;
        let x = x_axis - normal * normal.dot(&x_axis);
        let x_axis = try_normalize(&x).ok_or(Error::DegenerateInput("local x parallel to normal"))?;
        Ok(Self { origin, normal, x_axis, y_axis: normal.cross(&x_axis) })
    }

    pub fn from_plane(plane: &Plane) -> Self {
        let (x_axis, y_axis) = orthonormal_basis(&plane.normal);
        Self { origin: plane.point, normal: plane.normal, x_axis, y_axis }
    }

    pub fn plane(&self) -> Plane {
        Plane { point: self.origin, normal: self.normal }
    }

    /// In-plane coordinates of the orthogonal projection of `p`.
    pub fn to_local(&self, p: &Point3) -> (f64, f64) {
        let d = p - self.origin;
        (d.dot(&self.x_axis), d.dot(&self.y_axis))
    }

    pub fn to_world(&self, u: f64, v: f64) -> Point3 {
        self.origin + self.x_axis * u + self.y_axis * v
    }
}

/// Angle, from the sensor x axis projected into the plane, at which a
/// counter-clockwise cycle starts. It sits midway between two scan-plane
/// directions, where scan extremes rarely fall, so rounding cannot move a
/// seed across the start.
const CYCLE_START_RAD: f64 = -7.0 * std::f64::consts::PI / 8.0;

/// Sorts coplanar points counter-clockwise (right-handed about the plane
/// normal) around their centroid.
pub fn sort_counter_clockwise(points: &[Point3], plane: &Plane) -> Result<Vec<Point3>> {
    if points.len() < 3 {
        return Err(Error::InsufficientInput { needed: 3, got: points.len() });
    }
    let plane = Plane::new(plane.point, plane.normal)?;
    let reference = if plane.normal.x.abs() < 0.9 { Vec3::x() } else { Vec3::y() };
    let frame = PlaneFrame::new(plane.point, plane.normal, reference)?;
    if points.iter().any(|p| frame.plane().distance(p) > 1e-6) {
        return Err(Error::DegenerateInput("points not on plane"));
    }
    let centroid = points.iter().sum::<Vec3>() / points.len() as f64;
    let (cu, cv) = frame.to_local(&centroid);
    let mut keyed: Vec<(f64, usize)> = points
        .iter()
        .enumerate()
        .map(|(i, p)| {
            let (u, v) = frame.to_local(p);
            (((v - cv).atan2(u - cu) - CYCLE_START_RAD).rem_euclid(std::f64::consts::TAU), i)
        })
        .collect();
    keyed.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
    Ok(keyed.into_iter().map(|(_, i)| points[i]).collect())
}

/// One of the four laser planes. All contain the optical z-axis.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScanPlane {
    pub index: usize,
    pub dihedral_deg: f64,
    pub normal: Vec3,
}

impl ScanPlane {
    pub fn new(index: usize) -> Self {
        let dihedral_deg = index as f64 * SCAN_PLANE_STEP_DEG;
        let t = dihedral_deg.to_radians();
        Self { index, dihedral_deg, normal: Vec3::new(-t.sin(), t.cos(), 0.0) }
    }

    /// The four planes at 0, 45, 90 and 135 degrees.
    pub fn all() -> [ScanPlane; 4] {
        [Self::new(0), Self::new(1), Self::new(2), Self::new(3)]
    }

    /// Planes used by a rig with `n_lines` lasers: 1 keeps the horizontal
    /// plane, 2 the horizontal/vertical pair, 4 the full star.
    pub fn subset(n_lines: usize) -> Result<Vec<ScanPlane>> {
        match n_lines {
            1 => Ok(vec![Self::new(0)]),
            2 => Ok(vec![Self::new(0), Self::new(2)]),
            4 => Ok(Self::all().to_vec()),
            _ => Err(Error::ContractViolation("n_lines must be 1, 2 or 4")),
        }
    }

    /// Unit direction inside the plane, orthogonal to the optical axis.
    pub fn in_plane_direction(&self) -> Vec3 {
        let t = self.dihedral_deg.to_radians();
        Vec3::new(t.cos(), t.sin(), 0.0)
    }

    pub fn plane(&self) -> Plane {
        Plane { point: Vec3::zeros(), normal: self.normal }
    }

    pub fn distance(&self, p: &Point3) -> f64 {
        self.normal.dot(p).abs()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Circle3 {
    pub center: Point3,
    pub radius: f64,
    pub normal: Vec3,
}

impl Circle3 {
    /// Circumcircle of three points, `None` for (nearly) collinear input.
    pub fn through(a: &Point3, b: &Point3, c: &Point3) -> Option<Self> {
        let ab = b - a;
        let ac = c - a;
        let n = ab.cross(&ac);
        let nn = n.norm_squared();
        if nn.sqrt() * 0.5 <= 1e-9 {
            return None;
        }
        let offset = (n.cross(&ab) * ac.norm_squared() + ac.cross(&n) * ab.norm_squared()) / (2.0 * nn);
        let center = a + offset;
        let normal = orient_away_from_origin(n / nn.sqrt(), &center);
        Some(Self { center, radius: offset.norm(), normal })
    }

    /// Euclidean distance from `p` to the circle curve.
    pub fn distance(&self, p: &Point3) -> f64 {
        let d = p - self.center;
        let h = self.normal.dot(&d);
        let radial = (d - self.normal * h).norm();
        (h * h + (radial - self.radius).powi(2)).sqrt()
    }

    /// Polar angle of `p` around the circle in a fixed in-plane frame.
    pub fn angle_of(&self, p: &Point3) -> f64 {
        let (x, y) = orthonormal_basis(&self.normal);
        let d = p - self.center;
        d.dot(&y).atan2(d.dot(&x))
    }

    /// Unit tangent of the circle at the foot point of `p`.
    pub fn tangent_at(&self, p: &Point3) -> Option<Vec3> {
        let d = p - self.center;
        let radial = d - self.normal * self.normal.dot(&d);
        try_normalize(&self.normal.cross(&radial))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Line3 {
    pub point: Point3,
    pub direction: Vec3,
}

impl Line3 {
    pub fn through(a: &Point3, b: &Point3) -> Option<Self> {
        try_normalize(&(b - a)).map(|direction| Self { point: *a, direction })
    }

    pub fn distance(&self, p: &Point3) -> f64 {
        (p - self.point).cross(&self.direction).norm()
    }

    /// Signed coordinate of the foot point of `p` along the line.
    pub fn coordinate(&self, p: &Point3) -> f64 {
        (p - self.point).dot(&self.direction)
    }
}

/// Parametric ellipse embedded in 3-D: 3 + 1 + 1 + 3 + 3 = 11 scalars.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Ellipse3 {
    pub center: Point3,
    pub semi_major: f64,
    pub semi_minor: f64,
    pub plane_normal: Vec3,
    /// Direction of the major axis.
    pub local_x_axis: Vec3,
}

impl Ellipse3 {
    pub fn local_y_axis(&self) -> Vec3 {
        self.plane_normal.cross(&self.local_x_axis)
    }

    pub fn frame(&self) -> PlaneFrame {
        PlaneFrame {
            origin: self.center,
            normal: self.plane_normal,
            x_axis: self.local_x_axis,
            y_axis: self.local_y_axis(),
        }
    }

    pub fn point_at(&self, theta: f64) -> Point3 {
        let (s, c) = theta.sin_cos();
        self.center + self.local_x_axis * (self.semi_major * c) + self.local_y_axis() * (self.semi_minor * s)
    }

    /// The 11 scalars in a fixed order: center, semi axes, normal, local x.
    pub fn parameters(&self) -> [f64; 11] {
        let (c, n, x) = (self.center, self.plane_normal, self.local_x_axis);
        [c.x, c.y, c.z, self.semi_major, self.semi_minor, n.x, n.y, n.z, x.x, x.y, x.z]
    }

    pub fn axis_ratio(&self) -> f64 {
        self.semi_major / self.semi_minor
    }
}

/// A reconstructed object.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "shape", rename_all = "snake_case")]
pub enum ShapeModel {
    Sphere {
        center: Point3,
        radius: f64,
    },
    Cylinder {
        center: Point3,
        axis: Vec3,
        radius: f64,
        length: f64,
    },
    /// Only the face pierced by the optical axis is observable, so a cuboid
    /// carries that face and its two extents.
    Cuboid {
        face_center: Point3,
        face_normal: Vec3,
        principal_u: Vec3,
        principal_v: Vec3,
        extent_u: f64,
        extent_v: f64,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ShapeKind {
    Sphere,
    Cylinder,
    Cuboid,
}

impl ShapeKind {
    pub const ALL: [ShapeKind; 3] = [ShapeKind::Sphere, ShapeKind::Cylinder, ShapeKind::Cuboid];

    pub fn name(self) -> &'static str {
        match self {
            ShapeKind::Sphere => "sphere",
            ShapeKind::Cylinder => "cylinder",
            ShapeKind::Cuboid => "cuboid",
        }
    }
}

impl std::fmt::Display for ShapeKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

impl ShapeModel {
    pub fn kind(&self) -> ShapeKind {
        match self {
            ShapeModel::Sphere { .. } => ShapeKind::Sphere,
            ShapeModel::Cylinder { .. } => ShapeKind::Cylinder,
            ShapeModel::Cuboid { .. } => ShapeKind::Cuboid,
        }
    }

    /// Width the hand has to span: diameter for round objects, the smaller
    /// face extent for cuboids.
    pub fn grasp_size(&self) -> f64 {
        match *self {
            ShapeModel::Sphere { radius, .. } | ShapeModel::Cylinder { radius, .. } => 2.0 * radius,
            ShapeModel::Cuboid { extent_u, extent_v, .. } => extent_u.min(extent_v),
        }
    }

    /// The longitudinal direction: cylinder axis or the cuboid face direction
    /// of larger extent. Spheres have none.
    pub fn principal_axis(&self) -> Option<Vec3> {
        match *self {
            ShapeModel::Sphere { .. } => None,
            ShapeModel::Cylinder { axis, .. } => Some(axis),
            ShapeModel::Cuboid { principal_u, principal_v, extent_u, extent_v, .. } => {
                Some(if extent_u >= extent_v { principal_u } else { principal_v })
            }
        }
    }

    pub fn center(&self) -> Point3 {
        match *self {
            ShapeModel::Sphere { center, .. } | ShapeModel::Cylinder { center, .. } => center,
            ShapeModel::Cuboid { face_center, .. } => face_center,
        }
    }
}
