//! Pose representatives and the symmetry-aware pose distance.
//!
//! A pose maps to a set of Euclidean vectors, one per element of the
//! object's proper symmetry group: `[t; λ r1; λ r2; λ r3]` for objects with
//! a finite group, and `[t; λ r3]` for revolution objects. The distance
//! between two poses is the smallest Euclidean distance between their
//! representative sets.

use super::{ObjectModel, Pose, RotationMatrix, SymmetryClass};

/// Hypotheses closer than this fraction of the object diameter are accepted.
pub const ACCEPT_FACTOR: f64 = 0.1;

/// One pose representative; 12 entries, or 6 for revolution objects.
#[derive(Debug, Clone, PartialEq)]
pub struct PoseRepresentative(pub Vec<f64>);

impl PoseRepresentative {
    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn distance(&self, other: &PoseRepresentative) -> f64 {
        squared_distance(&self.0, &other.0).sqrt()
    }
}

fn squared_distance(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

/// Orientation part `p_R` of the representatives of `rotation`, one entry per
/// symmetry element `R Rz(2pi j/k)`, `j = 0..k`.
pub fn rotation_representatives(
    rotation: &RotationMatrix,
    symmetry: SymmetryClass,
    scale: f64,
) -> Vec<Vec<f64>> {
    match symmetry {
        SymmetryClass::Revolution => {
            let r3 = rotation.axis(2) * scale;
            vec![r3.iter().copied().collect()]
        }
        _ => symmetry
            .group_elements()
            .into_iter()
            .map(|g| {
                let m = (*rotation * g).matrix() * scale;
                // column-major storage yields [r1; r2; r3]
                m.iter().copied().collect()
            })
            .collect(),
    }
}

/// Representative set of `pose` for `object`.
pub fn representatives(pose: &Pose, object: &ObjectModel) -> Vec<PoseRepresentative> {
    rotation_representatives(&pose.rotation, object.symmetry, object.representative_scale)
        .into_iter()
        .map(|rot| {
            let mut v = Vec::with_capacity(3 + rot.len());
            v.extend(pose.translation.iter());
            v.extend(rot);
            PoseRepresentative(v)
        })
        .collect()
}

/// Minimum Euclidean distance over all pairs of representatives, meters.
pub fn pose_distance(a: &Pose, b: &Pose, object: &ObjectModel) -> f64 {
    let ra = representatives(a, object);
    let rb = representatives(b, object);
    let mut best = f64::INFINITY;
    for x in &ra {
        for y in &rb {
            best = best.min(squared_distance(&x.0, &y.0));
        }
    }
    best.sqrt()
}

/// Distance between origins only.
pub fn origin_distance(a: &Pose, b: &Pose) -> f64 {
    (a.translation - b.translation).norm()
}

/// `true` iff `pose_distance(estimate, truth) < 0.1 * diameter`.
pub fn accept(estimate: &Pose, truth: &Pose, object: &ObjectModel) -> bool {
    pose_distance(estimate, truth, object) < ACCEPT_FACTOR * object.diameter
}
