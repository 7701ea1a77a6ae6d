//! Z-buffer rasterization of triangle meshes into depth and instance maps.
//!
//! Pixel `(x, y)` is sampled at its center `(x + 0.5, y + 0.5)`; there is no
//! anti-aliasing. Depth is the camera-frame z of the nearest surface,
//! interpolated perspective-correctly. Fragments outside `[near, far]` are
//! discarded, as are triangles with a vertex at or behind the camera plane.

use nalgebra::Vector3;

use super::{DepthImage, InstanceMap};
use crate::error::Result;
use crate::geometry::{Catalog, Pose, Triangle};
use crate::gridcodec::CameraModel;

/// An object instance placed in the camera frame.
#[derive(Debug, Clone, PartialEq)]
pub struct SceneInstance {
    pub object_id: String,
    pub pose: Pose,
}

impl SceneInstance {
    pub fn new(object_id: impl Into<String>, pose: Pose) -> Self {
        Self {
            object_id: object_id.into(),
            pose,
        }
    }
}

struct Target<'a> {
    camera: &'a CameraModel,
    depth: &'a mut DepthImage,
    labels: &'a mut InstanceMap,
}

impl Target<'_> {
    fn draw(&mut self, tri: &Triangle, label: u16) {
        let cam = self.camera;
        if tri.iter().any(|p| p.z <= 0.0) {
            return;
        }
        let proj: [(f64, f64, f64); 3] = tri.map(|p| {
            (
                cam.fx * p.x / p.z + cam.cx,
                cam.fy * p.y / p.z + cam.cy,
                1.0 / p.z,
            )
        });
        let [(x0, y0, iz0), (x1, y1, iz1), (x2, y2, iz2)] = proj;
        let area = (x1 - x0) * (y2 - y0) - (x2 - x0) * (y1 - y0);
        if area.abs() < 1e-12 {
            return;
        }
        let w = self.depth.width;
        let h = self.depth.height;
        let min_x = x0.min(x1).min(x2);
        let max_x = x0.max(x1).max(x2);
        let min_y = y0.min(y1).min(y2);
        let max_y = y0.max(y1).max(y2);
        // pixel centers c satisfy min <= c + 0.5 <= max
        let col_lo = (min_x - 0.5).ceil().max(0.0);
        let col_hi = (max_x - 0.5).floor().min(w as f64 - 1.0);
        let row_lo = (min_y - 0.5).ceil().max(0.0);
        let row_hi = (max_y - 0.5).floor().min(h as f64 - 1.0);
        if col_lo > col_hi || row_lo > row_hi {
            return;
        }
        let inv_area = 1.0 / area;
        for row in row_lo as usize..=row_hi as usize {
            let py = row as f64 + 0.5;
            for col in col_lo as usize..=col_hi as usize {
                let px = col as f64 + 0.5;
                let b0 = ((x1 - px) * (y2 - py) - (x2 - px) * (y1 - py)) * inv_area;
                let b1 = ((x2 - px) * (y0 - py) - (x0 - px) * (y2 - py)) * inv_area;
                let b2 = 1.0 - b0 - b1;
                if b0 < 0.0 || b1 < 0.0 || b2 < 0.0 {
                    continue;
                }
                let z = 1.0 / (b0 * iz0 + b1 * iz1 + b2 * iz2);
                if z < cam.near || z > cam.far {
                    continue;
                }
                let k = row * w + col;
                let current = self.depth.data[k];
                if current == 0.0 || z < current {
                    self.depth.data[k] = z;
                    self.labels.labels[k] = label;
                }
            }
        }
    }
}

fn transform(tri: &Triangle, pose: &Pose) -> Triangle {
    tri.map(|p| pose.transform_point(&p))
}

/// Renders `instances` over optional background triangles (camera frame,
/// label 0). Instance `n` is labelled `n + 1`.
pub fn render_with_background(
    instances: &[SceneInstance],
    background: &[Triangle],
    objects: &Catalog,
    camera: &CameraModel,
) -> Result<(DepthImage, InstanceMap)> {
    let mut depth = DepthImage::empty(camera);
    let mut labels = InstanceMap::empty(camera);
    let mut target = Target {
        camera,
        depth: &mut depth,
        labels: &mut labels,
    };
    for tri in background {
        target.draw(tri, 0);
    }
    for (index, inst) in instances.iter().enumerate() {
        let object = objects.get(&inst.object_id)?;
        let label = u16::try_from(index + 1).unwrap_or(u16::MAX);
        for tri in &object.mesh.triangles {
            target.draw(&transform(tri, &inst.pose), label);
        }
    }
    Ok((depth, labels))
}

/// Depth and instance maps of `instances` with an empty background.
pub fn render(
    instances: &[SceneInstance],
    objects: &Catalog,
    camera: &CameraModel,
) -> Result<(DepthImage, InstanceMap)> {
    render_with_background(instances, &[], objects, camera)
}

/// Pixels covered by instance `index` when it is rendered alone.
pub fn silhouette_pixels(
    instances: &[SceneInstance],
    objects: &Catalog,
    camera: &CameraModel,
    index: usize,
) -> Result<usize> {
    let (_, map) = render(std::slice::from_ref(&instances[index]), objects, camera)?;
    Ok(map.count(0))
}

/// Fraction of instance `index`'s unoccluded silhouette that stays visible in
/// the full scene; 0 for instances that cover no pixel on their own.
pub fn visibility(
    instances: &[SceneInstance],
    objects: &Catalog,
    camera: &CameraModel,
    index: usize,
) -> Result<f64> {
    let (_, full) = render(instances, objects, camera)?;
    let alone = silhouette_pixels(instances, objects, camera, index)?;
    Ok(ratio(full.count(index), alone))
}

/// Visibility of every instance given the full-scene instance map.
pub fn visibilities(
    instances: &[SceneInstance],
    full: &InstanceMap,
    objects: &Catalog,
    camera: &CameraModel,
) -> Result<Vec<f64>> {
    let mut counts = vec![0usize; instances.len()];
    for &l in &full.labels {
        if l > 0 && (l as usize) <= instances.len() {
            counts[l as usize - 1] += 1;
        }
    }
    (0..instances.len())
        .map(|i| Ok(ratio(counts[i], silhouette_pixels(instances, objects, camera, i)?)))
        .collect()
}

fn ratio(visible: usize, total: usize) -> f64 {
    if total == 0 {
        0.0
    } else {
        visible as f64 / total as f64
    }
}

/// Axis-aligned rectangle facing the camera at depth `z`, spanning
/// `[x0, x1] x [y0, y1]` in the camera frame.
pub fn fronto_parallel_rect(x0: f64, x1: f64, y0: f64, y1: f64, z: f64) -> [Triangle; 2] {
    let a = Vector3::new(x0, y0, z);
    let b = Vector3::new(x1, y0, z);
    let c = Vector3::new(x1, y1, z);
    let d = Vector3::new(x0, y1, z);
    [[a, b, c], [a, c, d]]
}
