//! Scene ground-truth and prediction files (JSON).
//!
//! Both carry a `schema_version`; rotations are 9 row-major reals and
//! translations 3 reals in meters, camera frame.

use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{CameraModel, Cell, DetectionHypothesis, GroundTruthInstance, SceneGroundTruth};
use crate::error::{Error, Result};
use crate::geometry::Pose;

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct InstanceRecord {
    pub object_id: String,
    pub rotation: [f64; 9],
    pub translation: [f64; 3],
    pub visibility: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SceneFile {
    pub schema_version: u32,
    pub camera: CameraModel,
    pub instances: Vec<InstanceRecord>,
}

impl SceneFile {
    pub fn new(camera: CameraModel, scene: &SceneGroundTruth) -> Self {
        Self {
            schema_version: SCHEMA_VERSION,
            camera,
            instances: scene
                .instances
                .iter()
                .map(|inst| InstanceRecord {
                    object_id: inst.object_id.clone(),
                    rotation: inst.pose.rotation.to_row_major(),
                    translation: inst.pose.translation.into(),
                    visibility: inst.visibility,
                })
                .collect(),
        }
    }

    pub fn ground_truth(&self) -> Result<SceneGroundTruth> {
        let instances = self
            .instances
            .iter()
            .map(|r| {
                if !(0.0..=1.0).contains(&r.visibility) {
                    return Err(Error::Format(format!(
                        "visibility {} outside [0, 1]",
                        r.visibility
                    )));
                }
                Ok(GroundTruthInstance {
                    object_id: r.object_id.clone(),
                    pose: Pose::from_parts(&r.rotation, &r.translation)?,
                    visibility: r.visibility,
                })
            })
            .collect::<Result<_>>()?;
        Ok(SceneGroundTruth { instances })
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        write_json(path, self)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let file: SceneFile = read_json(path)?;
        check_version(file.schema_version)?;
        file.camera.validated()?;
        Ok(file)
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DetectionRecord {
    pub cell: [usize; 2],
    pub confidence: f64,
    pub visibility: f64,
    pub rotation: [f64; 9],
    pub translation: [f64; 3],
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PredictionFile {
    pub schema_version: u32,
    pub detections: Vec<DetectionRecord>,
}

impl PredictionFile {
    pub fn new(detections: &[DetectionHypothesis]) -> Self {
        Self {
            schema_version: SCHEMA_VERSION,
            detections: detections
                .iter()
                .map(|d| DetectionRecord {
                    cell: [d.cell.row, d.cell.col],
                    confidence: d.confidence,
                    visibility: d.visibility,
                    rotation: d.pose.rotation.to_row_major(),
                    translation: d.pose.translation.into(),
                })
                .collect(),
        }
    }

    pub fn hypotheses(&self) -> Result<Vec<DetectionHypothesis>> {
        self.detections
            .iter()
            .map(|r| {
                Ok(DetectionHypothesis {
                    pose: Pose::from_parts(&r.rotation, &r.translation)?,
                    confidence: r.confidence,
                    visibility: r.visibility,
                    cell: Cell::new(r.cell[0], r.cell[1]),
                })
            })
            .collect()
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        write_json(path, self)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let file: PredictionFile = read_json(path)?;
        check_version(file.schema_version)?;
        Ok(file)
    }
}

fn check_version(v: u32) -> Result<()> {
    if v != SCHEMA_VERSION {
        return Err(Error::Format(format!(
            "unsupported schema_version {v} (expected {SCHEMA_VERSION})"
        )));
    }
    Ok(())
}

pub(crate) fn write_json<T: Serialize>(path: impl AsRef<Path>, value: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    write_atomic(path.as_ref(), text.as_bytes())
}

pub(crate) fn read_json<T: for<'de> Deserialize<'de>>(path: impl AsRef<Path>) -> Result<T> {
    let text = std::fs::read_to_string(path)?;
    Ok(serde_json::from_str(&text)?)
}

/// Writes to a sibling temporary file and renames it into place.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let mut tmp = path.as_os_str().to_owned();
    tmp.push(".tmp");
    std::fs::write(&tmp, bytes)?;
    std::fs::rename(&tmp, path)?;
    Ok(())
}
