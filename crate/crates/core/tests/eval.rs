mod common;

use common::{det, gt, hand_fixture, object, random_eval_scenes, scene, EvalScene as Scene};
use nalgebra::Vector3;
use opnet_core::eval::{average_precision, evaluate_dataset, match_detections, pr_curve, MatchLabel};
use opnet_core::geometry::{pose_distance, ObjectModel, Pose, SymmetryClass};
use opnet_core::gridcodec::{Cell, DetectionHypothesis};
use proptest::prelude::*;
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

#[test]
fn hand_fixture_labels_and_ap() {
    let obj = object(SymmetryClass::NoProper);
    let scenes = hand_fixture();
    let report = evaluate_dataset(&scenes, &obj);
    assert_eq!(
        report.labels[0],
        vec![
            MatchLabel::TruePositive(0),
            MatchLabel::FalsePositive,
            MatchLabel::Ignored(2),
            MatchLabel::TruePositive(1)
        ]
    );
    assert_eq!(report.labels[1], vec![MatchLabel::FalsePositive, MatchLabel::TruePositive(0)]);
    assert_eq!(report.labels[2], vec![MatchLabel::TruePositive(0)]);
    assert_eq!(report.n_relevant, 5);
    assert_eq!((report.true_positives, report.false_positives, report.ignored), (4, 2, 1));
    assert_eq!(report.ap, 3.0 / 5.0);
}

#[test]
fn duplicate_detection_is_a_false_positive() {
    let obj = object(SymmetryClass::NoProper);
    let s = scene(vec![det(0.0, 0.9, 0), det(0.0, 0.9, 1)], vec![gt(0.0, 1.0)]);
    let labels = match_detections(&s.0, &s.1, &obj);
    assert_eq!(labels, vec![MatchLabel::TruePositive(0), MatchLabel::FalsePositive]);
    // the duplicate ranks below the hit, so precision is 1 at full recall
    assert_eq!(evaluate_dataset(&[s], &obj).ap, 1.0);
}

#[test]
fn barely_visible_instance_is_ignored() {
    let obj = object(SymmetryClass::NoProper);
    let s = scene(vec![det(0.0, 0.9, 0)], vec![gt(0.0, 0.3)]);
    let report = evaluate_dataset(&[s], &obj);
    assert_eq!(report.labels[0], vec![MatchLabel::Ignored(0)]);
    assert_eq!(report.n_relevant, 0);
    assert_eq!(report.ap, 1.0);
}

#[test]
fn false_positive_ranked_first_halves_ap() {
    let curve = pr_curve(&[MatchLabel::FalsePositive, MatchLabel::TruePositive(0)], 1);
    assert_eq!(average_precision(&curve), 0.5);
}

#[test]
fn no_detections_scores_zero() {
    let obj = object(SymmetryClass::NoProper);
    let report = evaluate_dataset(&[scene(vec![], vec![gt(0.0, 0.9)])], &obj);
    assert_eq!(report.ap, 0.0);
}

// Independent oracle: per-scene greedy matching followed by the all-points
// formula AP = sum over hits of max precision at or after the hit / n_relevant.
fn oracle_ap(scenes: &[Scene], obj: &ObjectModel) -> f64 {
    let threshold = 0.1 * obj.diameter;
    let mut pooled: Vec<(f64, Option<bool>)> = Vec::new();
    let mut n_relevant = 0;
    for (dets, truth) in scenes {
        n_relevant += truth.instances.iter().filter(|g| g.visibility > 0.5).count();
        let mut order: Vec<usize> = (0..dets.len()).collect();
        order.sort_by(|&a, &b| {
            dets[b].confidence.partial_cmp(&dets[a].confidence).unwrap().then(dets[a].cell.cmp(&dets[b].cell))
        });
        let mut taken = vec![false; truth.instances.len()];
        for i in order {
            let best = truth
                .instances
                .iter()
                .enumerate()
                .filter(|(j, _)| !taken[*j])
                .map(|(j, g)| (j, pose_distance(&dets[i].pose, &g.pose, obj)))
                .filter(|(_, d)| *d < threshold)
                .min_by(|a, b| a.1.partial_cmp(&b.1).unwrap());
            match best {
                Some((j, _)) => {
                    taken[j] = true;
                    // None marks an ignored hit
                    let hit = truth.instances[j].visibility > 0.5;
                    pooled.push((dets[i].confidence, if hit { Some(true) } else { None }));
                }
                None => pooled.push((dets[i].confidence, Some(false))),
            }
        }
    }
    pooled.sort_by(|a, b| b.0.partial_cmp(&a.0).unwrap());
    let outcomes: Vec<bool> = pooled.iter().filter_map(|p| p.1).collect();
    if n_relevant == 0 {
        return if outcomes.iter().any(|&hit| !hit) { 0.0 } else { 1.0 };
    }
    let mut prec_at = vec![0.0; outcomes.len()];
    let mut hits = 0;
    for (k, &hit) in outcomes.iter().enumerate() {
        hits += hit as usize;
        prec_at[k] = hits as f64 / (k + 1) as f64;
    }
    (0..outcomes.len())
        .filter(|&k| outcomes[k])
        .map(|k| prec_at[k..].iter().cloned().fold(0.0, f64::max))
        .sum::<f64>()
        / n_relevant as f64
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(300))]

    #[test]
    fn ap_matches_brute_force_oracle(seed: u64) {
        let obj = object(SymmetryClass::NoProper);
        let scenes = random_eval_scenes(seed, &obj);
        let ap = evaluate_dataset(&scenes, &obj).ap;
        prop_assert!((0.0..=1.0).contains(&ap));
        prop_assert!((ap - oracle_ap(&scenes, &obj)).abs() < 1e-12);
    }

    #[test]
    fn trailing_false_positive_never_helps(seed: u64) {
        let obj = object(SymmetryClass::NoProper);
        let mut scenes = random_eval_scenes(seed, &obj);
        let before = evaluate_dataset(&scenes, &obj).ap;
        let far = Pose::from_translation(Vector3::new(10.0, 10.0, 1.0));
        scenes[0].0.push(DetectionHypothesis { pose: far, confidence: -1.0, visibility: 1.0, cell: Cell::new(9, 9) });
        prop_assert!(evaluate_dataset(&scenes, &obj).ap <= before);
    }

    #[test]
    fn removing_false_positives_never_hurts(seed: u64) {
        let obj = object(SymmetryClass::NoProper);
        let mut scenes = random_eval_scenes(seed, &obj);
        let report = evaluate_dataset(&scenes, &obj);
        for (s, labels) in scenes.iter_mut().zip(&report.labels) {
            let mut keep = labels.iter().map(|l| *l != MatchLabel::FalsePositive);
            s.0.retain(|_| keep.next().unwrap());
        }
        let after = evaluate_dataset(&scenes, &obj);
        prop_assert_eq!(after.false_positives, 0);
        prop_assert!(after.ap >= report.ap);
    }

    #[test]
    fn ignored_matches_do_not_affect_ap(seed: u64) {
        let obj = object(SymmetryClass::NoProper);
        let mut scenes = random_eval_scenes(seed, &obj);
        let report = evaluate_dataset(&scenes, &obj);
        // drop each ignored detection together with the instance it claimed
        for (s, labels) in scenes.iter_mut().zip(&report.labels) {
            let mut claimed: Vec<usize> = labels.iter().filter_map(|l| match l {
                MatchLabel::Ignored(j) => Some(*j),
                _ => None,
            }).collect();
            claimed.sort_unstable();
            for j in claimed.into_iter().rev() {
                s.1.instances.remove(j);
            }
            let mut keep = labels.iter().map(|l| !matches!(l, MatchLabel::Ignored(_)));
            s.0.retain(|_| keep.next().unwrap());
        }
        let after = evaluate_dataset(&scenes, &obj);
        prop_assert_eq!(after.ignored, 0);
        prop_assert!((after.ap - report.ap).abs() < 1e-12);
    }

    #[test]
    fn scene_order_is_irrelevant(seed: u64) {
        let obj = object(SymmetryClass::NoProper);
        let mut scenes = random_eval_scenes(seed, &obj);
        let before = evaluate_dataset(&scenes, &obj).ap;
        scenes.shuffle(&mut ChaCha8Rng::seed_from_u64(seed ^ 0x5eed));
        prop_assert_eq!(evaluate_dataset(&scenes, &obj).ap, before);
    }

    #[test]
    fn duplicating_the_dataset_keeps_ap(seed: u64) {
        let obj = object(SymmetryClass::NoProper);
        let scenes = random_eval_scenes(seed, &obj);
        let before = evaluate_dataset(&scenes, &obj).ap;
        let doubled: Vec<Scene> = scenes.iter().chain(&scenes).cloned().collect();
        prop_assert!((evaluate_dataset(&doubled, &obj).ap - before).abs() < 1e-12);
    }

    #[test]
    fn perfect_recall_without_false_positives_is_perfect(seed: u64) {
        let obj = object(SymmetryClass::NoProper);
        let scenes: Vec<Scene> = random_eval_scenes(seed, &obj)
            .into_iter()
            .map(|(_, truth)| {
                let dets = truth.instances.iter().enumerate().map(|(i, g)| DetectionHypothesis {
                    pose: g.pose,
                    confidence: 0.5 + 0.01 * i as f64,
                    visibility: g.visibility,
                    cell: Cell::new(0, i),
                }).collect();
                (dets, truth)
            })
            .collect();
        let report = evaluate_dataset(&scenes, &obj);
        prop_assert_eq!(report.ap, 1.0);
    }

    #[test]
    fn perfect_ap_means_everything_was_found(seed: u64) {
        let obj = object(SymmetryClass::NoProper);
        let scenes = random_eval_scenes(seed, &obj);
        let report = evaluate_dataset(&scenes, &obj);
        if report.ap == 1.0 {
            prop_assert_eq!(report.true_positives, report.n_relevant);
        }
    }
}

#[test]
fn single_scene_dataset_equals_scene_result() {
    let obj = object(SymmetryClass::NoProper);
    let s = hand_fixture().swap_remove(0);
    let labels = match_detections(&s.0, &s.1, &obj);
    let ranked: Vec<MatchLabel> = opnet_core::eval::ranking(&s.0).into_iter().map(|i| labels[i]).collect();
    let single = average_precision(&pr_curve(&ranked, 2));
    assert_eq!(evaluate_dataset(&[s], &obj).ap, single);
}
