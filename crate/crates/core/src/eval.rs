//! Benchmark protocol: detection-to-ground-truth matching, relevance
//! filtering by visibility, precision-recall curve and average precision.
//!
//! Detections are matched greedily in descending confidence order. Each one
//! claims the nearest still-unclaimed ground-truth instance whose pose
//! distance is below `0.1 * diameter`. Claims on instances with visibility
//! above 0.5 are true positives; claims on more occluded instances are
//! ignored, i.e. they count neither as true nor as false positives. Every
//! unclaimed detection is a false positive.

use std::cmp::Ordering;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::geometry::{pose_distance, ObjectModel, ACCEPT_FACTOR};
use crate::gridcodec::{write_atomic, DetectionHypothesis, SceneGroundTruth};

/// Instances with visibility above this value must be found.
pub const RELEVANCE_THRESHOLD: f64 = 0.5;

pub fn is_relevant(visibility: f64) -> bool {
    visibility > RELEVANCE_THRESHOLD
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum MatchLabel {
    TruePositive(usize),
    FalsePositive,
    Ignored(usize),
}

impl MatchLabel {
    /// Tie-break rank used when pooling equally confident detections.
    fn pessimistic_rank(&self) -> u8 {
        match self {
            MatchLabel::FalsePositive => 0,
            MatchLabel::Ignored(_) => 1,
            MatchLabel::TruePositive(_) => 2,
        }
    }
}

fn by_confidence(a: &DetectionHypothesis, b: &DetectionHypothesis) -> Ordering {
    b.confidence
        .total_cmp(&a.confidence)
        .then_with(|| a.cell.cmp(&b.cell))
}

/// Indices of `detections` in processing order: descending confidence, then
/// ascending cell index, then input order.
pub fn ranking(detections: &[DetectionHypothesis]) -> Vec<usize> {
    let mut order: Vec<usize> = (0..detections.len()).collect();
    order.sort_by(|&i, &j| by_confidence(&detections[i], &detections[j]));
    order
}

/// Labels every detection (in input order) against one scene's ground truth.
pub fn match_detections(
    detections: &[DetectionHypothesis],
    truth: &SceneGroundTruth,
    object: &ObjectModel,
) -> Vec<MatchLabel> {
    let threshold = ACCEPT_FACTOR * object.diameter;
    let mut claimed = vec![false; truth.instances.len()];
    let mut labels = vec![MatchLabel::FalsePositive; detections.len()];
    for i in ranking(detections) {
        let mut best: Option<(usize, f64)> = None;
        for (g, inst) in truth.instances.iter().enumerate() {
            if claimed[g] {
                continue;
            }
            let d = pose_distance(&detections[i].pose, &inst.pose, object);
            if d < threshold && best.map_or(true, |(_, bd)| d < bd) {
                best = Some((g, d));
            }
        }
        if let Some((g, _)) = best {
            claimed[g] = true;
            labels[i] = if is_relevant(truth.instances[g].visibility) {
                MatchLabel::TruePositive(g)
            } else {
                MatchLabel::Ignored(g)
            };
        }
    }
    labels
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PrPoint {
    pub recall: f64,
    pub precision: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PrCurve {
    pub points: Vec<PrPoint>,
    pub n_relevant: usize,
    pub false_positives: usize,
}

/// One point per non-ignored detection prefix of `ranked` (already sorted by
/// descending confidence). With no relevant instances recall is taken as 1.
pub fn pr_curve(ranked: &[MatchLabel], n_relevant: usize) -> PrCurve {
    let (mut tp, mut fp) = (0usize, 0usize);
    let mut points = Vec::new();
    for label in ranked {
        match label {
            MatchLabel::Ignored(_) => continue,
            MatchLabel::TruePositive(_) => tp += 1,
            MatchLabel::FalsePositive => fp += 1,
        }
        let recall = if n_relevant == 0 {
            1.0
        } else {
            tp as f64 / n_relevant as f64
        };
        points.push(PrPoint {
            recall,
            precision: tp as f64 / (tp + fp) as f64,
        });
    }
    PrCurve {
        points,
        n_relevant,
        false_positives: fp,
    }
}

/// All-points interpolated area under the precision envelope.
///
/// With no relevant instances the AP is 1 unless there is a false positive,
/// in which case it is 0.
pub fn average_precision(curve: &PrCurve) -> f64 {
    if curve.n_relevant == 0 {
        return if curve.false_positives > 0 { 0.0 } else { 1.0 };
    }
    let pts = &curve.points;
    let mut envelope = vec![0.0; pts.len()];
    let mut running = 0.0f64;
    for i in (0..pts.len()).rev() {
        running = running.max(pts[i].precision);
        envelope[i] = running;
    }
    // every recall step is exactly 1/n_relevant, so sum the envelope at the
    // steps (compensated) and divide once
    let (mut sum, mut carry) = (0.0f64, 0.0f64);
    let mut prev_recall = 0.0;
    for (p, &env) in pts.iter().zip(&envelope) {
        if p.recall > prev_recall {
            let t = sum + env;
            carry += if sum.abs() >= env.abs() { (sum - t) + env } else { (env - t) + sum };
            sum = t;
        }
        prev_recall = p.recall;
    }
    ((sum + carry) / curve.n_relevant as f64).clamp(0.0, 1.0)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub ap: f64,
    pub n_relevant: usize,
    pub true_positives: usize,
    pub false_positives: usize,
    pub ignored: usize,
    pub curve: Vec<PrPoint>,
    /// Per scene, per detection (input order).
    pub labels: Vec<Vec<MatchLabel>>,
}

impl EvalReport {
    pub fn write_json(&self, path: impl AsRef<Path>) -> Result<()> {
        let mut text = serde_json::to_string_pretty(self)?;
        text.push('\n');
        write_atomic(path.as_ref(), text.as_bytes())
    }

    pub fn curve_csv(&self) -> String {
        let mut out = String::from("recall,precision\n");
        for p in &self.curve {
            out.push_str(&format!("{},{}\n", p.recall, p.precision));
        }
        out
    }

    pub fn write_curve_csv(&self, path: impl AsRef<Path>) -> Result<()> {
        write_atomic(path.as_ref(), self.curve_csv().as_bytes())
    }
}

/// Pools detections of all scenes into one confidence-ranked list and
/// computes a single AP.
///
/// Equally confident detections from the same cell position are ordered
/// false positives first, which makes the result independent of scene order.
pub fn evaluate_dataset(
    scenes: &[(Vec<DetectionHypothesis>, SceneGroundTruth)],
    object: &ObjectModel,
) -> EvalReport {
    let mut pooled: Vec<(&DetectionHypothesis, MatchLabel)> = Vec::new();
    let mut labels = Vec::with_capacity(scenes.len());
    let mut n_relevant = 0;
    for (detections, truth) in scenes {
        let scene_labels = match_detections(detections, truth, object);
        pooled.extend(detections.iter().zip(scene_labels.iter().copied()));
        n_relevant += truth
            .instances
            .iter()
            .filter(|i| is_relevant(i.visibility))
            .count();
        labels.push(scene_labels);
    }
    pooled.sort_by(|a, b| {
        by_confidence(a.0, b.0).then_with(|| a.1.pessimistic_rank().cmp(&b.1.pessimistic_rank()))
    });
    let ranked: Vec<MatchLabel> = pooled.iter().map(|(_, l)| *l).collect();
    let curve = pr_curve(&ranked, n_relevant);
    let count = |f: fn(&MatchLabel) -> bool| ranked.iter().filter(|l| f(l)).count();
    EvalReport {
        ap: average_precision(&curve),
        n_relevant,
        true_positives: count(|l| matches!(l, MatchLabel::TruePositive(_))),
        false_positives: count(|l| matches!(l, MatchLabel::FalsePositive)),
        ignored: count(|l| matches!(l, MatchLabel::Ignored(_))),
        curve: curve.points,
        labels,
    }
}
