//! Multi-task grid loss with analytic gradients.
//!
//! Per cell `i`:
//!
//! ```text
//! L_i = λ1 (p − p̂)² + p · [ λ2 (v − v̂)² + 8v³ (L_pos + λ4 L_ori) ]
//! ```
//!
//! `L_pos` is the squared distance of the normalized cell position. `L_ori`
//! is either the squared distance of the unit-scaled Euler angles
//! ([`OriLoss::Euler`]) or the unsquared distance between the predicted
//! orientation representative and the closest ground-truth representative
//! ([`OriLoss::Representative`]).

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{
    euler_partials, euler_to_matrix, rotation_representatives, ObjectModel, RotationMatrix,
    SymmetryClass,
};
use crate::gridcodec::{channel, unit_angle_scales, unit_to_angles, GridTensor};

/// Orientation loss variant.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum OriLoss {
    /// Squared distance of the bounded angles (`ori1`).
    #[serde(rename = "ori1")]
    Euler,
    /// Distance to the closest ground-truth orientation representative (`ori2`).
    #[serde(rename = "ori2")]
    Representative,
}

impl std::str::FromStr for OriLoss {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "ori1" => Ok(OriLoss::Euler),
            "ori2" => Ok(OriLoss::Representative),
            other => Err(Error::InvalidConfig(format!(
                "unknown orientation loss `{other}` (expected ori1 or ori2)"
            ))),
        }
    }
}

/// Constant loss weights. The pose weight `8v³` is derived per cell.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LossWeights {
    /// λ1, probability channel.
    pub prob: f64,
    /// λ2, visibility channel.
    pub vis: f64,
    /// λ4, orientation relative to position.
    pub ori: f64,
}

impl LossWeights {
    pub fn for_variant(variant: OriLoss) -> Self {
        Self {
            prob: 0.1,
            vis: 0.25,
            ori: match variant {
                OriLoss::Euler => 1.0,
                OriLoss::Representative => 0.5,
            },
        }
    }
}

/// λ3 as a function of ground-truth visibility.
pub fn pose_weight(visibility: f64) -> f64 {
    8.0 * visibility * visibility * visibility
}

/// Squared distance of the normalized positions of two cell vectors.
pub fn loss_pos(target: &[f64], pred: &[f64]) -> f64 {
    (channel::X..=channel::Z)
        .map(|c| (target[c] - pred[c]).powi(2))
        .sum()
}

/// Squared distance over the present angle channels.
pub fn loss_ori1(target: &[f64], pred: &[f64], symmetry: SymmetryClass) -> f64 {
    let n = symmetry.angle_channels();
    (channel::A1..channel::A1 + n)
        .map(|c| (target[c] - pred[c]).powi(2))
        .sum()
}

/// Orientation representative of the rotation decoded from unit angles.
fn predicted_representative(pred_angles: &[f64], object: &ObjectModel) -> Vec<f64> {
    let angles = unit_to_angles(pred_angles, object.symmetry);
    rotation_representatives(&euler_to_matrix(angles), object.symmetry, object.representative_scale)
        .swap_remove(0)
}

/// Index and distance of the closest ground-truth representative; lowest
/// index wins ties.
fn closest(truth: &[Vec<f64>], pred: &[f64]) -> (usize, f64) {
    let mut best = (0, f64::INFINITY);
    for (j, g) in truth.iter().enumerate() {
        let d2: f64 = g.iter().zip(pred).map(|(a, b)| (a - b).powi(2)).sum();
        if d2 < best.1 {
            best = (j, d2);
        }
    }
    (best.0, best.1.sqrt())
}

/// Distance between the predicted orientation representative and the closest
/// representative of `truth`. `pred` is a full cell vector.
pub fn loss_ori2(truth: &RotationMatrix, pred: &[f64], object: &ObjectModel) -> f64 {
    let n = object.symmetry.angle_channels();
    let p = predicted_representative(&pred[channel::A1..channel::A1 + n], object);
    let gt = rotation_representatives(truth, object.symmetry, object.representative_scale);
    closest(&gt, &p).1
}

/// Gradient of [`loss_ori2`] with respect to the unit angle channels.
fn loss_ori2_grad(truth: &[Vec<f64>], pred_angles: &[f64], object: &ObjectModel) -> (f64, [f64; 3]) {
    let symmetry = object.symmetry;
    let scale = object.representative_scale;
    let angles = unit_to_angles(pred_angles, symmetry);
    let rotation = euler_to_matrix(angles);
    let p = rotation_representatives(&rotation, symmetry, scale).swap_remove(0);
    let (j, d) = closest(truth, &p);
    let mut grad = [0.0; 3];
    if d == 0.0 {
        return (0.0, grad);
    }
    let g = &truth[j];
    let partials = euler_partials(angles);
    let scales = unit_angle_scales(symmetry);
    let revolution = symmetry == SymmetryClass::Revolution;
    for (k, dk) in partials.iter().enumerate().take(symmetry.angle_channels()) {
        // representative layout is column-major; revolution keeps only r3
        let entries: Vec<f64> = if revolution {
            dk.column(2).iter().copied().collect()
        } else {
            dk.iter().copied().collect()
        };
        let dot: f64 = entries
            .iter()
            .zip(p.iter().zip(g))
            .map(|(e, (pi, gi))| e * (pi - gi))
            .sum();
        grad[k] = dot * scale / d * scales[k];
    }
    (d, grad)
}

fn check_shapes(targets: &GridTensor, preds: &GridTensor, object: &ObjectModel) -> Result<()> {
    targets.ensure_same_shape(preds)?;
    if targets.channels() != object.channels() {
        return Err(Error::ShapeMismatch {
            expected: format!("{} channels for `{}`", object.channels(), object.id),
            found: format!("{} channels", targets.channels()),
        });
    }
    Ok(())
}

/// Total loss over all cells of one image.
pub fn total_loss(
    targets: &GridTensor,
    preds: &GridTensor,
    weights: &LossWeights,
    variant: OriLoss,
    object: &ObjectModel,
) -> Result<f64> {
    check_shapes(targets, preds, object)?;
    let n = object.symmetry.angle_channels();
    let mut total = 0.0;
    for k in 0..targets.cell_count() {
        let t = targets.cell_at(k);
        let q = preds.cell_at(k);
        let p = t[channel::PROB];
        total += weights.prob * (p - q[channel::PROB]).powi(2);
        if p == 0.0 {
            continue;
        }
        let v = t[channel::VIS];
        let ori = match variant {
            OriLoss::Euler => loss_ori1(t, q, object.symmetry),
            OriLoss::Representative => {
                let truth = euler_to_matrix(unit_to_angles(
                    &t[channel::A1..channel::A1 + n],
                    object.symmetry,
                ));
                loss_ori2(&truth, q, object)
            }
        };
        total += p
            * (weights.vis * (v - q[channel::VIS]).powi(2)
                + pose_weight(v) * (loss_pos(t, q) + weights.ori * ori));
    }
    Ok(total)
}

/// Total loss and its gradient with respect to every prediction channel.
///
/// Cells with `p = 0` only receive gradient on the probability channel. For
/// the representative loss, ties between equally close ground-truth
/// representatives resolve to the lowest symmetry index.
pub fn total_loss_grad(
    targets: &GridTensor,
    preds: &GridTensor,
    weights: &LossWeights,
    variant: OriLoss,
    object: &ObjectModel,
) -> Result<(f64, GridTensor)> {
    check_shapes(targets, preds, object)?;
    let n = object.symmetry.angle_channels();
    let mut grad = GridTensor::zeros(targets.size(), targets.channels());
    let mut total = 0.0;
    for k in 0..targets.cell_count() {
        let t = targets.cell_at(k);
        let q = preds.cell_at(k);
        let g = grad.cell_at_mut(k);
        let p = t[channel::PROB];
        let dp = q[channel::PROB] - p;
        total += weights.prob * dp * dp;
        g[channel::PROB] = 2.0 * weights.prob * dp;
        if p == 0.0 {
            continue;
        }
        let v = t[channel::VIS];
        let w3 = pose_weight(v);
        let dv = q[channel::VIS] - v;
        let mut cell_loss = weights.vis * dv * dv;
        g[channel::VIS] = p * 2.0 * weights.vis * dv;
        for c in channel::X..=channel::Z {
            let d = q[c] - t[c];
            cell_loss += w3 * d * d;
            g[c] = p * w3 * 2.0 * d;
        }
        match variant {
            OriLoss::Euler => {
                for c in channel::A1..channel::A1 + n {
                    let d = q[c] - t[c];
                    cell_loss += w3 * weights.ori * d * d;
                    g[c] = p * w3 * weights.ori * 2.0 * d;
                }
            }
            OriLoss::Representative => {
                let truth = euler_to_matrix(unit_to_angles(
                    &t[channel::A1..channel::A1 + n],
                    object.symmetry,
                ));
                let reps = rotation_representatives(
                    &truth,
                    object.symmetry,
                    object.representative_scale,
                );
                let (d, da) = loss_ori2_grad(&reps, &q[channel::A1..channel::A1 + n], object);
                cell_loss += w3 * weights.ori * d;
                for (i, c) in (channel::A1..channel::A1 + n).enumerate() {
                    g[c] = p * w3 * weights.ori * da[i];
                }
            }
        }
        total += p * cell_loss;
    }
    Ok((total, grad))
}
