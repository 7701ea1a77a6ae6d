//! Greedy duplicate removal over decoded hypotheses.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::eval::ranking;
use crate::geometry::{origin_distance, pose_distance, ObjectModel};
use crate::gridcodec::DetectionHypothesis;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DedupMetric {
    /// Symmetry-aware pose-representative distance.
    #[default]
    Representative,
    /// Distance between object origins only.
    Origin,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DedupConfig {
    /// Suppression radius as a fraction of the object diameter.
    pub radius_factor: f64,
    #[serde(default)]
    pub metric: DedupMetric,
}

impl Default for DedupConfig {
    fn default() -> Self {
        Self {
            radius_factor: 0.1,
            metric: DedupMetric::Representative,
        }
    }
}

/// Keeps detections in descending confidence order, dropping any that lie
/// within `radius_factor * diameter` of an already kept detection.
pub fn remove_duplicates(
    detections: &[DetectionHypothesis],
    object: &ObjectModel,
    config: &DedupConfig,
) -> Result<Vec<DetectionHypothesis>> {
    if !(config.radius_factor > 0.0 && config.radius_factor.is_finite()) {
        return Err(Error::InvalidConfig(format!(
            "dedup radius factor must be positive, got {}",
            config.radius_factor
        )));
    }
    let radius = config.radius_factor * object.diameter;
    let distance = |a: &DetectionHypothesis, b: &DetectionHypothesis| match config.metric {
        DedupMetric::Representative => pose_distance(&a.pose, &b.pose, object),
        DedupMetric::Origin => origin_distance(&a.pose, &b.pose),
    };
    let mut kept: Vec<DetectionHypothesis> = Vec::new();
    for i in ranking(detections) {
        let candidate = &detections[i];
        if kept.iter().all(|k| distance(k, candidate) >= radius) {
            kept.push(candidate.clone());
        }
    }
    Ok(kept)
}
