use nalgebra::Vector3;

use super::RotationMatrix;
use crate::error::Result;

/// Rigid placement of an object's body frame in the camera frame. Meters.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Pose {
    pub rotation: RotationMatrix,
    pub translation: Vector3<f64>,
}

impl Pose {
    pub fn new(rotation: RotationMatrix, translation: Vector3<f64>) -> Self {
        Self {
            rotation,
            translation,
        }
    }

    pub fn identity() -> Self {
        Self::new(RotationMatrix::identity(), Vector3::zeros())
    }

    pub fn from_translation(translation: Vector3<f64>) -> Self {
        Self::new(RotationMatrix::identity(), translation)
    }

    /// Parses the 9 row-major rotation entries followed by the translation.
    pub fn from_parts(rotation: &[f64; 9], translation: &[f64; 3]) -> Result<Self> {
        Ok(Self::new(
            RotationMatrix::from_row_major(rotation)?,
            Vector3::from_column_slice(translation),
        ))
    }

    /// `self ∘ other`: `other` is expressed in this pose's body frame.
    pub fn compose(&self, other: &Pose) -> Pose {
        Pose {
            rotation: self.rotation * other.rotation,
            translation: self.translation + self.rotation * other.translation,
        }
    }

    /// Applies a body-frame rotation, e.g. a symmetry element.
    pub fn rotated_in_body(&self, rotation: RotationMatrix) -> Pose {
        Pose {
            rotation: self.rotation * rotation,
            translation: self.translation,
        }
    }

    pub fn translated(&self, offset: Vector3<f64>) -> Pose {
        Pose {
            rotation: self.rotation,
            translation: self.translation + offset,
        }
    }

    /// Maps a body-frame point into the camera frame.
    pub fn transform_point(&self, p: &Vector3<f64>) -> Vector3<f64> {
        self.rotation * *p + self.translation
    }
}
