//! Desk-scale scene sampling: instance poses drawn in a bin volume with a
//! minimum origin separation, optional background floor and distractor
//! planes, rendered with exact visibility annotations.

use nalgebra::Vector3;
use rand::Rng;
use serde::{Deserialize, Serialize};

use super::render::{fronto_parallel_rect, render_with_background, visibilities, SceneInstance};
use super::{DepthImage, InstanceMap};
use crate::error::{Error, Result};
use crate::geometry::{random_rotation, Catalog, ObjectModel, Pose, Triangle};
use crate::gridcodec::{CameraModel, GroundTruthInstance, SceneGroundTruth};

/// Candidate draws allowed per scene before giving up.
pub const REJECTION_BUDGET: usize = 10_000;

fn default_separation() -> f64 {
    0.5
}

fn default_true() -> bool {
    true
}

/// Scene sampling parameters. Bin corners bound the instance origins and are
/// given in the camera frame, meters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SceneConfig {
    pub object_id: String,
    pub min_instances: usize,
    pub max_instances: usize,
    pub bin_min: [f64; 3],
    pub bin_max: [f64; 3],
    /// Minimum origin distance as a fraction of the object diameter.
    #[serde(default = "default_separation")]
    pub min_separation: f64,
    /// Uniform shift of the whole bin per scene, meters per axis.
    #[serde(default)]
    pub bin_jitter: f64,
    /// Random planar distractors placed in the bin (rendered as background).
    #[serde(default)]
    pub distractors: usize,
    /// Fronto-parallel floor plane behind the bin.
    #[serde(default = "default_true")]
    pub floor: bool,
}

impl SceneConfig {
    pub fn validate(&self, camera: &CameraModel, object: &ObjectModel) -> Result<()> {
        if self.min_instances > self.max_instances {
            return Err(Error::InvalidConfig(format!(
                "instance count range {}..={} is empty",
                self.min_instances, self.max_instances
            )));
        }
        if self.max_instances >= u16::MAX as usize {
            return Err(Error::InvalidConfig("too many instances per scene".into()));
        }
        if self.min_separation < 0.0 || self.bin_jitter < 0.0 {
            return Err(Error::InvalidConfig(
                "separation and jitter must be non-negative".into(),
            ));
        }
        if self.object_id != object.id {
            return Err(Error::UnknownObject(self.object_id.clone()));
        }
        for a in 0..3 {
            if self.bin_min[a] > self.bin_max[a] {
                return Err(Error::InvalidConfig(format!("bin axis {a} has min > max")));
            }
        }
        let j = self.bin_jitter;
        let z_lo = self.bin_min[2] - j;
        let z_hi = self.bin_max[2] + j + self.floor_gap(object);
        if z_lo - object.diameter / 2.0 < camera.near || z_hi > camera.far {
            return Err(Error::InvalidConfig(format!(
                "bin depth range [{z_lo}, {z_hi}] does not fit between the clipping planes"
            )));
        }
        for &x in &[self.bin_min[0] - j, self.bin_max[0] + j] {
            for &y in &[self.bin_min[1] - j, self.bin_max[1] + j] {
                for &z in &[z_lo, self.bin_max[2] + j] {
                    let p = camera.project(&Vector3::new(x, y, z))?;
                    let inside = p.u >= 0.0
                        && p.u < f64::from(camera.width)
                        && p.v >= 0.0
                        && p.v < f64::from(camera.height);
                    if !inside {
                        return Err(Error::InvalidConfig(format!(
                            "bin corner ({x}, {y}, {z}) lies outside the view frustum"
                        )));
                    }
                }
            }
        }
        Ok(())
    }

    fn floor_gap(&self, object: &ObjectModel) -> f64 {
        if self.floor {
            0.6 * object.diameter
        } else {
            0.0
        }
    }
}

/// Samples instance poses inside the (jittered) bin.
///
/// Origins are rejection-sampled to stay at least `min_separation * diameter`
/// apart; the result is sorted by descending camera depth.
pub fn sample_scene<R: Rng + ?Sized>(
    config: &SceneConfig,
    object: &ObjectModel,
    rng: &mut R,
) -> Result<Vec<Pose>> {
    let count = rng.gen_range(config.min_instances..=config.max_instances);
    let shift = jitter(config, rng);
    sample_poses(config, object, count, shift, rng)
}

fn jitter<R: Rng + ?Sized>(config: &SceneConfig, rng: &mut R) -> Vector3<f64> {
    if config.bin_jitter > 0.0 {
        let j = config.bin_jitter;
        Vector3::new(
            rng.gen_range(-j..=j),
            rng.gen_range(-j..=j),
            rng.gen_range(-j..=j),
        )
    } else {
        Vector3::zeros()
    }
}

fn sample_poses<R: Rng + ?Sized>(
    config: &SceneConfig,
    object: &ObjectModel,
    count: usize,
    shift: Vector3<f64>,
    rng: &mut R,
) -> Result<Vec<Pose>> {
    let min_dist = config.min_separation * object.diameter;
    let mut poses: Vec<Pose> = Vec::with_capacity(count);
    let mut tries = 0;
    while poses.len() < count {
        if tries == REJECTION_BUDGET {
            return Err(Error::Congestion {
                placed: poses.len(),
                requested: count,
                tries,
            });
        }
        tries += 1;
        let mut origin = Vector3::zeros();
        for a in 0..3 {
            let (lo, hi) = (config.bin_min[a], config.bin_max[a]);
            origin[a] = if hi > lo { rng.gen_range(lo..hi) } else { lo } + shift[a];
        }
        if poses
            .iter()
            .all(|p| (p.translation - origin).norm() >= min_dist)
        {
            poses.push(Pose::new(random_rotation(rng), origin));
        }
    }
    poses.sort_by(|a, b| b.translation.z.total_cmp(&a.translation.z));
    Ok(poses)
}

/// A rendered, annotated scene.
#[derive(Debug, Clone, PartialEq)]
pub struct GeneratedScene {
    pub depth: DepthImage,
    pub instances: InstanceMap,
    pub ground_truth: SceneGroundTruth,
}

/// Samples, renders and annotates one scene.
pub fn generate_scene<R: Rng + ?Sized>(
    config: &SceneConfig,
    object: &ObjectModel,
    camera: &CameraModel,
    rng: &mut R,
) -> Result<GeneratedScene> {
    config.validate(camera, object)?;
    let count = rng.gen_range(config.min_instances..=config.max_instances);
    let shift = jitter(config, rng);
    let poses = sample_poses(config, object, count, shift, rng)?;
    let mut background = Vec::new();
    if config.floor {
        background.extend(floor(config, object, camera, shift));
    }
    for _ in 0..config.distractors {
        background.extend(distractor(config, object, shift, rng));
    }
    let instances: Vec<SceneInstance> = poses
        .iter()
        .map(|p| SceneInstance::new(object.id.clone(), *p))
        .collect();
    let catalog: Catalog = std::iter::once(object.clone()).collect();
    let (depth, map) = render_with_background(&instances, &background, &catalog, camera)?;
    let vis = visibilities(&instances, &map, &catalog, camera)?;
    let ground_truth = SceneGroundTruth {
        instances: poses
            .iter()
            .zip(vis)
            .map(|(pose, visibility)| GroundTruthInstance {
                object_id: object.id.clone(),
                pose: *pose,
                visibility,
            })
            .collect(),
    };
    Ok(GeneratedScene {
        depth,
        instances: map,
        ground_truth,
    })
}

fn floor(
    config: &SceneConfig,
    object: &ObjectModel,
    camera: &CameraModel,
    shift: Vector3<f64>,
) -> [Triangle; 2] {
    let z = config.bin_max[2] + shift.z + config.floor_gap(object);
    // generously cover the whole frustum at that depth
    let half_w = f64::from(camera.width).max(f64::from(camera.height)) / camera.fx.min(camera.fy) * z;
    fronto_parallel_rect(-half_w, half_w, -half_w, half_w, z)
}

fn distractor<R: Rng + ?Sized>(
    config: &SceneConfig,
    object: &ObjectModel,
    shift: Vector3<f64>,
    rng: &mut R,
) -> Vec<Triangle> {
    let mut center = Vector3::zeros();
    for a in 0..3 {
        let (lo, hi) = (config.bin_min[a], config.bin_max[a]);
        center[a] = if hi > lo { rng.gen_range(lo..hi) } else { lo } + shift[a];
    }
    let side = object.diameter * rng.gen_range(0.5..1.5);
    let pose = Pose::new(random_rotation(rng), center);
    crate::geometry::quad(side)
        .triangles
        .iter()
        .map(|t| t.map(|p| pose.transform_point(&p)))
        .collect()
}
