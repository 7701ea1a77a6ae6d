use nalgebra::Vector3;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Pinhole depth camera. Pixel `(0, 0)` covers `[0, 1) x [0, 1)` in image
/// coordinates; its center is `(0.5, 0.5)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CameraModel {
    pub width: u32,
    pub height: u32,
    pub fx: f64,
    pub fy: f64,
    pub cx: f64,
    pub cy: f64,
    pub near: f64,
    pub far: f64,
}

/// Image position and depth of a projected point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Projection {
    pub u: f64,
    pub v: f64,
    pub depth: f64,
}

impl CameraModel {
    /// Camera with principal point at the image center.
    pub fn centered(width: u32, height: u32, focal: f64, near: f64, far: f64) -> Result<Self> {
        Self {
            width,
            height,
            fx: focal,
            fy: focal,
            cx: f64::from(width) / 2.0,
            cy: f64::from(height) / 2.0,
            near,
            far,
        }
        .validated()
    }

    pub fn validated(self) -> Result<Self> {
        if self.width == 0 || self.height == 0 {
            return Err(Error::InvalidConfig("camera image size must be positive".into()));
        }
        if !(self.near > 0.0 && self.near < self.far && self.far.is_finite()) {
            return Err(Error::InvalidConfig(format!(
                "camera clipping planes must satisfy 0 < near < far, got near={} far={}",
                self.near, self.far
            )));
        }
        if !(self.fx > 0.0 && self.fy > 0.0) {
            return Err(Error::InvalidConfig("focal lengths must be positive".into()));
        }
        Ok(self)
    }

    pub fn pixel_count(&self) -> usize {
        self.width as usize * self.height as usize
    }

    pub fn project(&self, point: &Vector3<f64>) -> Result<Projection> {
        let z = point.z;
        if z <= 0.0 || z.is_nan() {
            return Err(Error::BehindCamera { z });
        }
        Ok(Projection {
            u: self.fx * point.x / z + self.cx,
            v: self.fy * point.y / z + self.cy,
            depth: z,
        })
    }

    /// Camera-frame point at image position `(u, v)` and optical-axis depth `depth`.
    pub fn unproject(&self, u: f64, v: f64, depth: f64) -> Vector3<f64> {
        Vector3::new(
            (u - self.cx) * depth / self.fx,
            (v - self.cy) * depth / self.fy,
            depth,
        )
    }

    /// Maps metric depth to `[0, 1]` between the clipping planes.
    pub fn normalize_depth(&self, depth: f64) -> f64 {
        (depth - self.near) / (self.far - self.near)
    }

    pub fn denormalize_depth(&self, z: f64) -> f64 {
        self.near + z * (self.far - self.near)
    }
}
