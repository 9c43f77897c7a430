//! Accuracy measures comparing a reconstruction with its ground truth.

use crate::geometry::{axis_angle_between, ShapeModel};

/// Angle in degrees between estimated and true longitudinal axes, folded to
/// [0, 90]. For cuboids the estimate is compared with the nearer of the two
/// true face directions. `None` for spheres or mismatched shapes.
pub fn orientation_error_deg(estimate: &ShapeModel, truth: &ShapeModel) -> Option<f64> {
    match (*estimate, *truth) {
        (ShapeModel::Cylinder { axis, .. }, ShapeModel::Cylinder { axis: true_axis, .. }) => {
            Some(axis_angle_between(&axis, &true_axis).to_degrees())
        }
        (ShapeModel::Cuboid { .. }, ShapeModel::Cuboid { principal_u, principal_v, .. }) => {
            let est = estimate.principal_axis()?;
            let a = axis_angle_between(&est, &principal_u).min(axis_angle_between(&est, &principal_v));
            Some(a.to_degrees())
        }
        _ => None,
    }
}

/// Absolute grasp-size error in mm against the true grasp dimension.
pub fn size_error_mm(estimate: &ShapeModel, true_grasp_size: f64) -> f64 {
    (estimate.grasp_size() - true_grasp_size).abs()
}

/// Median of a sample; `NaN` when empty.
pub fn median(values: &[f64]) -> f64 {
    percentile(values, 50.0)
}

/// Linear-interpolated percentile (0..=100); `NaN` when empty.
pub fn percentile(values: &[f64], pct: f64) -> f64 {
    if values.is_empty() {
        return f64::NAN;
    }
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let pos = (pct / 100.0).clamp(0.0, 1.0) * (v.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    v[lo] + (v[hi] - v[lo]) * (pos - lo as f64)
}

pub fn mean(values: &[f64]) -> f64 {
    if values.is_empty() {
        f64::NAN
    } else {
        values.iter().sum::<f64>() / values.len() as f64
    }
}

pub fn std_dev(values: &[f64]) -> f64 {
    if values.len() < 2 {
        return f64::NAN;
    }
    let m = mean(values);
    (values.iter().map(|v| (v - m).powi(2)).sum::<f64>() / (values.len() - 1) as f64).sqrt()
}
