#![allow(dead_code)]

use nalgebra::Vector3;
use opnet_core::geometry::{
    random_rotation, Mesh, ObjectModel, Pose, Primitive, RotationMatrix, SymmetryClass,
};
use opnet_core::gridcodec::{
    channel, CameraModel, Cell, DetectionHypothesis, GridTensor, GroundTruthInstance, SceneGroundTruth,
};
use opnet_core::scenegen::SceneConfig;
use opnet_core::losses::{total_loss, total_loss_grad, LossWeights, OriLoss};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn classes() -> Vec<SymmetryClass> {
    vec![
        SymmetryClass::NoProper,
        SymmetryClass::Cyclic { order: 2 },
        SymmetryClass::Cyclic { order: 3 },
        SymmetryClass::Cyclic { order: 6 },
        SymmetryClass::Revolution,
    ]
}

/// Bare object of diameter 0.1 m with no mesh.
pub fn object(symmetry: SymmetryClass) -> ObjectModel {
    ObjectModel::new("part", 0.1, symmetry, None, Mesh::default()).unwrap()
}

pub fn cone() -> ObjectModel {
    let mesh = Primitive::Cone {
        radius: 0.025,
        height: 0.06,
        segments: 24,
    }
    .mesh();
    ObjectModel::from_mesh("cone", SymmetryClass::Revolution, mesh).unwrap()
}

pub fn random_pose<R: Rng>(rng: &mut R) -> Pose {
    let t = Vector3::new(
        rng.gen_range(-0.3..0.3),
        rng.gen_range(-0.3..0.3),
        rng.gen_range(0.3..1.5),
    );
    Pose::new(random_rotation(rng), t)
}

/// A random element of the proper symmetry group.
pub fn random_group_element<R: Rng>(rng: &mut R, symmetry: SymmetryClass) -> RotationMatrix {
    match symmetry {
        SymmetryClass::NoProper => RotationMatrix::identity(),
        SymmetryClass::Cyclic { order } => {
            let j = rng.gen_range(0..order);
            RotationMatrix::rot_z(std::f64::consts::TAU * f64::from(j) / f64::from(order))
        }
        SymmetryClass::Revolution => RotationMatrix::rot_z(rng.gen_range(0.0..std::f64::consts::TAU)),
    }
}

pub fn frobenius(a: &RotationMatrix, b: &RotationMatrix) -> f64 {
    (a.matrix() - b.matrix()).norm()
}

/// Random target/prediction pair on an `S x S` grid; roughly half the cells
/// are occupied. Predictions stay inside `(0.05, 0.95)` like sigmoid outputs.
pub fn random_loss_point<R: Rng>(rng: &mut R, size: usize, obj: &ObjectModel) -> (GridTensor, GridTensor) {
    let c = obj.channels();
    let mut target = GridTensor::zeros(size, c);
    let mut pred = GridTensor::zeros(size, c);
    for k in 0..size * size {
        let t = target.cell_at_mut(k);
        if rng.gen_bool(0.5) {
            t[channel::PROB] = 1.0;
            t[channel::VIS] = rng.gen_range(0.05..1.0);
            for v in t[channel::X..].iter_mut() {
                *v = rng.gen_range(0.0..1.0);
            }
        }
        for v in pred.cell_at_mut(k).iter_mut() {
            *v = rng.gen_range(0.05..0.95);
        }
    }
    (target, pred)
}

/// Largest per-entry relative error between the analytic gradient and central
/// differences with step `h`. Entries are compared relative to
/// `max(|analytic|, |numeric|, floor)`.
pub fn loss_gradient_error(
    target: &GridTensor,
    pred: &GridTensor,
    variant: OriLoss,
    obj: &ObjectModel,
    h: f64,
    floor: f64,
) -> f64 {
    let w = LossWeights::for_variant(variant);
    let (_, grad) = total_loss_grad(target, pred, &w, variant, obj).unwrap();
    let mut worst = 0.0f64;
    for i in 0..pred.as_slice().len() {
        let mut plus = pred.clone();
        plus.as_mut_slice()[i] += h;
        let mut minus = pred.clone();
        minus.as_mut_slice()[i] -= h;
        let numeric = (total_loss(target, &plus, &w, variant, obj).unwrap()
            - total_loss(target, &minus, &w, variant, obj).unwrap())
            / (2.0 * h);
        let analytic = grad.as_slice()[i];
        let scale = analytic.abs().max(numeric.abs()).max(floor);
        worst = worst.max((analytic - numeric).abs() / scale);
    }
    worst
}

/// 32x32 sensor looking into a bin of cones, the desk-scale experiment setup.
pub fn bin_camera() -> CameraModel {
    CameraModel::centered(32, 32, 64.0, 0.35, 0.65).unwrap()
}

pub fn bin_scene(object_id: &str, min_instances: usize, max_instances: usize) -> SceneConfig {
    SceneConfig {
        object_id: object_id.into(),
        min_instances,
        max_instances,
        bin_min: [-0.09, -0.09, 0.45],
        bin_max: [0.09, 0.09, 0.55],
        min_separation: 0.5,
        bin_jitter: 0.0,
        distractors: 0,
        floor: true,
    }
}

pub type EvalScene = (Vec<DetectionHypothesis>, SceneGroundTruth);

/// Random scenes with near-miss, duplicate and far detections. Confidences
/// are continuous so pooled ties do not occur.
pub fn random_eval_scenes(seed: u64, obj: &ObjectModel) -> Vec<EvalScene> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let d = obj.diameter;
    (0..rng.gen_range(1..5))
        .map(|_| {
            let truth: Vec<GroundTruthInstance> = (0..rng.gen_range(0..5))
                .map(|i| GroundTruthInstance {
                    object_id: "part".into(),
                    pose: Pose::new(random_rotation(&mut rng), Vector3::new(i as f64 * 3.0 * d, 0.0, 1.0)),
                    visibility: rng.gen_range(0.0..1.0),
                })
                .collect();
            let mut dets = Vec::new();
            for col in 0..rng.gen_range(0..8) {
                let pose = if !truth.is_empty() && rng.gen_bool(0.7) {
                    let g = &truth[rng.gen_range(0..truth.len())];
                    let r = rng.gen_range(0.0..0.15 * d);
                    g.pose.translated(Vector3::new(r, 0.0, 0.0))
                } else {
                    Pose::new(random_rotation(&mut rng), Vector3::new(rng.gen_range(-0.5..0.5), 0.3, 1.0))
                };
                dets.push(DetectionHypothesis {
                    pose,
                    confidence: rng.gen_range(0.0..1.0),
                    visibility: 1.0,
                    cell: Cell::new(0, col),
                });
            }
            (dets, SceneGroundTruth { instances: truth })
        })
        .collect()
}


/// Instances at random pixels and depths; a few project outside the image.
pub fn random_ground_truth<R: Rng>(rng: &mut R, cam: &CameraModel, count: usize) -> SceneGroundTruth {
    let instances = (0..count)
        .map(|_| {
            let u = rng.gen_range(-4.0..f64::from(cam.width) + 4.0);
            let v = rng.gen_range(-4.0..f64::from(cam.height) + 4.0);
            let depth = rng.gen_range(cam.near..=cam.far);
            GroundTruthInstance {
                object_id: "part".into(),
                pose: Pose::new(random_rotation(rng), cam.unproject(u, v, depth)),
                // a coarse grid of values makes exact visibility ties likely
                visibility: f64::from(rng.gen_range(0..=10u8)) / 10.0,
            }
        })
        .collect();
    SceneGroundTruth { instances }
}

pub fn gt(x: f64, visibility: f64) -> GroundTruthInstance {
    GroundTruthInstance {
        object_id: "part".into(),
        pose: Pose::from_translation(Vector3::new(x, 0.0, 1.0)),
        visibility,
    }
}

pub fn det(x: f64, confidence: f64, col: usize) -> DetectionHypothesis {
    DetectionHypothesis {
        pose: Pose::from_translation(Vector3::new(x, 0.0, 1.0)),
        confidence,
        visibility: 1.0,
        cell: Cell::new(0, col),
    }
}

pub fn scene(dets: Vec<DetectionHypothesis>, truth: Vec<GroundTruthInstance>) -> EvalScene {
    (dets, SceneGroundTruth { instances: truth })
}

/// Three scenes whose labels and AP were worked out by hand.
///
/// Pooled ranking: 0.95 TP, 0.90 FP (duplicate), 0.85 FP (far), 0.80 TP,
/// 0.70 TP, 0.60 ignored, 0.50 TP; five relevant instances, one never found.
/// Precision at the four hits: 1, 2/4, 3/5, 4/6; envelope 1, 2/3, 2/3, 2/3.
/// AP = (1 + 3 * 2/3) / 5 = 3/5.
pub fn hand_fixture() -> Vec<EvalScene> {
    vec![
        scene(
            vec![det(0.001, 0.95, 0), det(0.002, 0.90, 1), det(0.601, 0.60, 2), det(0.301, 0.50, 3)],
            vec![gt(0.0, 0.9), gt(0.3, 0.8), gt(0.6, 0.3)],
        ),
        scene(vec![det(0.5, 0.85, 0), det(0.0, 0.70, 1)], vec![gt(0.0, 1.0)]),
        scene(vec![det(0.0, 0.80, 0)], vec![gt(0.0, 0.7), gt(0.4, 0.55)]),
    ]
}
