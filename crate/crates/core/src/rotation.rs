//! Rotation helpers: axis-angle conversion and geodesic distance on SO(3).

use nalgebra::{Matrix3, Rotation3, Vector3};

/// Axis-angle 3-vector (radians) to a rotation matrix. The zero vector maps to identity.
pub fn axis_angle_to_matrix(v: &Vector3<f64>) -> Matrix3<f64> {
    Rotation3::from_scaled_axis(*v).into_inner()
}

/// Inverse of [`axis_angle_to_matrix`]; the returned angle lies in [0, π].
pub fn matrix_to_axis_angle(m: &Matrix3<f64>) -> Vector3<f64> {
    Rotation3::from_matrix_unchecked(*m).scaled_axis()
}

/// Rotation of `angle` radians about `axis` (need not be normalized).
pub fn rotation_about(axis: &Vector3<f64>, angle: f64) -> Matrix3<f64> {
    let n = axis.norm();
    if n == 0.0 {
        return Matrix3::identity();
    }
    axis_angle_to_matrix(&(axis * (angle / n)))
}

/// Angle of `r1ᵀ·r2` in degrees, in [0, 180].
///
/// Equal to `arccos(clamp((tr(r1ᵀr2) − 1) / 2, −1, 1))`, evaluated as
/// `atan2(sin, cos)` with the sine taken from the skew part so that small
/// angles keep full precision and identical inputs give exactly zero.
pub fn geodesic_angle(r1: &Matrix3<f64>, r2: &Matrix3<f64>) -> f64 {
    let m = r1.transpose() * r2;
    let cos = ((m.trace() - 1.0) / 2.0).clamp(-1.0, 1.0);
    let skew = Vector3::new(m[(2, 1)] - m[(1, 2)], m[(0, 2)] - m[(2, 0)], m[(1, 0)] - m[(0, 1)]);
    let sin = (skew.norm() / 2.0).min(1.0);
    sin.atan2(cos).to_degrees()
}

/// Largest absolute entry of `RᵀR − I`.
pub fn orthonormality_error(r: &Matrix3<f64>) -> f64 {
    (r.transpose() * r - Matrix3::identity()).amax()
}
