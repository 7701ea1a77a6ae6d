//! Rotation matrices and the intrinsic z-y-z Euler chart.
//!
//! The symmetry axis of every object is its body z axis, so in the z-y-z
//! chart `R = Rz(phi1) * Ry(phi2) * Rz(phi3)` a proper symmetry of the object
//! only ever changes `phi3`.

use std::f64::consts::TAU;
use std::ops::Mul;

use nalgebra::{Matrix3, Vector3};
use serde::{Deserialize, Serialize};

use super::SymmetryClass;
use crate::error::{Error, Result};

/// Tolerance on orthonormality and determinant of a [`RotationMatrix`].
pub const ROTATION_TOLERANCE: f64 = 1e-9;

/// `|sin phi2|` below which the z-y-z chart is treated as singular.
pub const GIMBAL_TOLERANCE: f64 = 1e-9;

/// An element of SO(3).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RotationMatrix(Matrix3<f64>);

impl RotationMatrix {
    pub fn identity() -> Self {
        Self(Matrix3::identity())
    }

    /// Validates `m` against the orthonormality and determinant invariants.
    pub fn new(m: Matrix3<f64>) -> Result<Self> {
        if m.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidRotation("non-finite entry".into()));
        }
        for i in 0..3 {
            let ci = m.column(i);
            if (ci.norm() - 1.0).abs() > ROTATION_TOLERANCE {
                return Err(Error::InvalidRotation(format!(
                    "column {i} has norm {}",
                    ci.norm()
                )));
            }
            for j in (i + 1)..3 {
                let dot = ci.dot(&m.column(j));
                if dot.abs() > ROTATION_TOLERANCE {
                    return Err(Error::InvalidRotation(format!(
                        "columns {i} and {j} are not orthogonal (dot = {dot})"
                    )));
                }
            }
        }
        let det = m.determinant();
        if (det - 1.0).abs() > ROTATION_TOLERANCE {
            return Err(Error::InvalidRotation(format!("determinant is {det}")));
        }
        Ok(Self(m))
    }

    /// Wraps `m` without checking. Callers guarantee `m` is a rotation.
    pub fn new_unchecked(m: Matrix3<f64>) -> Self {
        Self(m)
    }

    pub fn from_row_major(values: &[f64; 9]) -> Result<Self> {
        Self::new(Matrix3::from_row_slice(values))
    }

    pub fn to_row_major(&self) -> [f64; 9] {
        let m = &self.0;
        [
            m[(0, 0)],
            m[(0, 1)],
            m[(0, 2)],
            m[(1, 0)],
            m[(1, 1)],
            m[(1, 2)],
            m[(2, 0)],
            m[(2, 1)],
            m[(2, 2)],
        ]
    }

    pub fn rot_z(angle: f64) -> Self {
        let (s, c) = angle.sin_cos();
        Self(Matrix3::new(c, -s, 0.0, s, c, 0.0, 0.0, 0.0, 1.0))
    }

    pub fn rot_y(angle: f64) -> Self {
        let (s, c) = angle.sin_cos();
        Self(Matrix3::new(c, 0.0, s, 0.0, 1.0, 0.0, -s, 0.0, c))
    }

    pub fn rot_x(angle: f64) -> Self {
        let (s, c) = angle.sin_cos();
        Self(Matrix3::new(1.0, 0.0, 0.0, 0.0, c, -s, 0.0, s, c))
    }

    /// Rotation by `angle` about the unit vector `axis` (Rodrigues).
    pub fn from_axis_angle(axis: &Vector3<f64>, angle: f64) -> Self {
        let k = axis.normalize();
        let (s, c) = angle.sin_cos();
        let cross = Matrix3::new(0.0, -k.z, k.y, k.z, 0.0, -k.x, -k.y, k.x, 0.0);
        Self(Matrix3::identity() + cross * s + cross * cross * (1.0 - c))
    }

    /// Builds a rotation from a (not necessarily normalized) quaternion `w + xi + yj + zk`.
    pub fn from_quaternion(w: f64, x: f64, y: f64, z: f64) -> Self {
        let n = (w * w + x * x + y * y + z * z).sqrt();
        let (w, x, y, z) = (w / n, x / n, y / n, z / n);
        Self(Matrix3::new(
            1.0 - 2.0 * (y * y + z * z),
            2.0 * (x * y - z * w),
            2.0 * (x * z + y * w),
            2.0 * (x * y + z * w),
            1.0 - 2.0 * (x * x + z * z),
            2.0 * (y * z - x * w),
            2.0 * (x * z - y * w),
            2.0 * (y * z + x * w),
            1.0 - 2.0 * (x * x + y * y),
        ))
    }

    pub fn matrix(&self) -> &Matrix3<f64> {
        &self.0
    }

    /// Body axis `i` expressed in the reference frame.
    pub fn axis(&self, i: usize) -> Vector3<f64> {
        self.0.column(i).into_owned()
    }

    pub fn transpose(&self) -> Self {
        Self(self.0.transpose())
    }
}

impl Mul for RotationMatrix {
    type Output = RotationMatrix;

    fn mul(self, rhs: RotationMatrix) -> RotationMatrix {
        RotationMatrix(self.0 * rhs.0)
    }
}

impl Mul<Vector3<f64>> for RotationMatrix {
    type Output = Vector3<f64>;

    fn mul(self, rhs: Vector3<f64>) -> Vector3<f64> {
        self.0 * rhs
    }
}

/// Intrinsic z-y-z Euler angles in radians.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct EulerAngles {
    pub phi1: f64,
    pub phi2: f64,
    pub phi3: f64,
}

impl EulerAngles {
    pub fn new(phi1: f64, phi2: f64, phi3: f64) -> Self {
        Self { phi1, phi2, phi3 }
    }
}

/// `R = Rz(phi1) * Ry(phi2) * Rz(phi3)`.
pub fn euler_to_matrix(angles: EulerAngles) -> RotationMatrix {
    let (s1, c1) = angles.phi1.sin_cos();
    let (s2, c2) = angles.phi2.sin_cos();
    let (s3, c3) = angles.phi3.sin_cos();
    RotationMatrix(Matrix3::new(
        c1 * c2 * c3 - s1 * s3,
        -c1 * c2 * s3 - s1 * c3,
        c1 * s2,
        s1 * c2 * c3 + c1 * s3,
        -s1 * c2 * s3 + c1 * c3,
        s1 * s2,
        -s2 * c3,
        s2 * s3,
        c2,
    ))
}

/// Partial derivatives of [`euler_to_matrix`] with respect to `phi1`, `phi2`, `phi3`.
pub fn euler_partials(angles: EulerAngles) -> [Matrix3<f64>; 3] {
    let (s1, c1) = angles.phi1.sin_cos();
    let (s2, c2) = angles.phi2.sin_cos();
    let (s3, c3) = angles.phi3.sin_cos();
    let d1 = Matrix3::new(
        -s1 * c2 * c3 - c1 * s3,
        s1 * c2 * s3 - c1 * c3,
        -s1 * s2,
        c1 * c2 * c3 - s1 * s3,
        -c1 * c2 * s3 - s1 * c3,
        c1 * s2,
        0.0,
        0.0,
        0.0,
    );
    let d2 = Matrix3::new(
        -c1 * s2 * c3,
        c1 * s2 * s3,
        c1 * c2,
        -s1 * s2 * c3,
        s1 * s2 * s3,
        s1 * c2,
        -c2 * c3,
        c2 * s3,
        -s2,
    );
    let d3 = Matrix3::new(
        -c1 * c2 * s3 - s1 * c3,
        -c1 * c2 * c3 + s1 * s3,
        0.0,
        -s1 * c2 * s3 + c1 * c3,
        -s1 * c2 * c3 - c1 * s3,
        0.0,
        s2 * s3,
        s2 * c3,
        0.0,
    );
    [d1, d2, d3]
}

/// Reduces `angle` into `[0, range)`.
pub(crate) fn wrap(angle: f64, range: f64) -> f64 {
    let r = angle.rem_euclid(range);
    // rem_euclid can round up to `range` for tiny negative inputs
    if r >= range {
        0.0
    } else {
        r
    }
}

/// Inverse of [`euler_to_matrix`] modulo the proper symmetry group.
///
/// `phi1` is wrapped into `[0, 2pi)`, `phi2` lands in `[0, pi]`, and `phi3`
/// is reduced modulo `2pi/k` for cyclic objects. Revolution objects always
/// get `phi3 = 0` since the rotation about the axis is not observable.
///
/// When `|sin phi2| < GIMBAL_TOLERANCE` the chart is singular; `phi3` is set
/// to zero and `phi1` carries the whole rotation about z.
pub fn matrix_to_euler(rotation: &RotationMatrix, symmetry: SymmetryClass) -> EulerAngles {
    let m = rotation.matrix();
    let sin2 = m[(0, 2)].hypot(m[(1, 2)]);
    let phi2 = sin2.atan2(m[(2, 2)]);
    let (phi1, phi3) = if sin2 < GIMBAL_TOLERANCE {
        if m[(2, 2)] > 0.0 {
            // R = Rz(phi1)
            (m[(1, 0)].atan2(m[(1, 1)]), 0.0)
        } else {
            // R = Rz(phi1) * Ry(pi)
            ((-m[(0, 1)]).atan2(m[(1, 1)]), 0.0)
        }
    } else {
        (
            m[(1, 2)].atan2(m[(0, 2)]),
            m[(2, 1)].atan2(-m[(2, 0)]),
        )
    };
    let phi3 = match symmetry {
        SymmetryClass::Revolution => 0.0,
        other => wrap(phi3, other.phi3_range()),
    };
    EulerAngles {
        phi1: wrap(phi1, TAU),
        phi2,
        phi3,
    }
}
