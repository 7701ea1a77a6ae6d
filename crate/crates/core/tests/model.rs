mod common;

use common::{bin_camera, bin_scene, cone, object, random_loss_point};
use opnet_core::geometry::{ObjectModel, SymmetryClass};
use opnet_core::gridcodec::{channel, GridTensor};
use opnet_core::losses::{LossWeights, OriLoss};
use opnet_core::model::{
    forward, forward_trace, prepare_sample, sample_loss, sample_loss_grad, train, ModelConfig,
    ModelParams, PlateauScheduler, TrainConfig, TrainOutcome, TrainingSample,
};
use opnet_core::scenegen::{generate_scene, scene_rng};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn small_model(channels: usize) -> ModelConfig {
    ModelConfig {
        input_size: 16,
        grid_size: 4,
        stage_channels: vec![4, 8],
        convs_per_stage: 1,
        grid_channels: vec![],
        output_channels: channels,
        seed: 17,
    }
}

fn random_sample(rng: &mut ChaCha8Rng, model: &ModelConfig, obj: &ObjectModel) -> TrainingSample {
    let (target, _) = random_loss_point(rng, model.grid_size, obj);
    let n = model.input_size * model.input_size;
    TrainingSample {
        input: (0..n).map(|_| rng.gen_range(0.0..1.0)).collect(),
        target,
    }
}

#[test]
fn network_gradients_match_finite_differences() {
    let h = 1e-4;
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    for (sym, variant) in [
        (SymmetryClass::NoProper, OriLoss::Euler),
        (SymmetryClass::Cyclic { order: 3 }, OriLoss::Representative),
        (SymmetryClass::Revolution, OriLoss::Representative),
        (SymmetryClass::Revolution, OriLoss::Euler),
    ] {
        let obj = object(sym);
        let model = small_model(obj.channels());
        let params = ModelParams::init(&model).unwrap();
        assert!(params.values.len() >= 100);
        let sample = random_sample(&mut rng, &model, &obj);
        let w = LossWeights::for_variant(variant);
        let (_, grads) = sample_loss_grad(&sample, &params, &model, &w, variant, &obj).unwrap();
        let pattern = forward_trace(&sample.input, &params, &model).unwrap().activation_pattern();
        let (mut checked, mut worst) = (0, 0.0f64);
        for k in 0..params.values.len() {
            let mut plus = params.clone();
            plus.values[k] += h;
            let mut minus = params.clone();
            minus.values[k] -= h;
            let same_kink = |p: &ModelParams| {
                forward_trace(&sample.input, p, &model).unwrap().activation_pattern() == pattern
            };
            if !same_kink(&plus) || !same_kink(&minus) {
                continue;
            }
            let numeric = (sample_loss(&sample, &plus, &model, &w, variant, &obj).unwrap()
                - sample_loss(&sample, &minus, &model, &w, variant, &obj).unwrap())
                / (2.0 * h);
            let analytic = grads.values[k];
            let err = (numeric - analytic).abs() / numeric.abs().max(analytic.abs()).max(1e-6);
            worst = worst.max(err);
            checked += 1;
        }
        assert!(checked >= 100, "only {checked} parameters away from ReLU kinks");
        assert!(worst < 1e-3, "{sym:?}/{variant:?}: worst relative error {worst:e}");
    }
}

#[test]
fn matching_prediction_has_zero_gradient() {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    for sym in [SymmetryClass::NoProper, SymmetryClass::Revolution] {
        let obj = object(sym);
        let model = small_model(obj.channels());
        let params = ModelParams::init(&model).unwrap();
        let mut sample = random_sample(&mut rng, &model, &obj);
        sample.target = forward(&sample.input, &params, &model).unwrap();
        for variant in [OriLoss::Euler, OriLoss::Representative] {
            let w = LossWeights::for_variant(variant);
            let (loss, grads) = sample_loss_grad(&sample, &params, &model, &w, variant, &obj).unwrap();
            assert!(loss.abs() < 1e-12, "{loss}");
            assert!(grads.values.iter().all(|g| g.abs() < 1e-12));
        }
    }
}

#[test]
fn head_rows_for_masked_channels_get_no_gradient_from_empty_cells() {
    let obj = object(SymmetryClass::NoProper);
    let model = small_model(obj.channels());
    let params = ModelParams::init(&model).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let mut sample = random_sample(&mut rng, &model, &obj);
    sample.target = GridTensor::zeros(model.grid_size, obj.channels());
    let layers = model.layers();
    let head = *layers.last().unwrap();
    let offset: usize = layers[..layers.len() - 1].iter().map(|l| l.len()).sum();
    for variant in [OriLoss::Euler, OriLoss::Representative] {
        let w = LossWeights::for_variant(variant);
        let (loss, grads) = sample_loss_grad(&sample, &params, &model, &w, variant, &obj).unwrap();
        for c in 0..head.cout {
            let rows = (offset + c * head.cin..offset + (c + 1) * head.cin)
                .chain(std::iter::once(offset + head.weight_len() + c));
            for k in rows {
                if c != channel::PROB {
                    assert_eq!(grads.values[k], 0.0);
                    let mut moved = params.clone();
                    moved.values[k] += 0.5;
                    assert_eq!(sample_loss(&sample, &moved, &model, &w, variant, &obj).unwrap(), loss);
                }
            }
        }
        assert!(grads.values[offset + head.weight_len() + channel::PROB] > 0.0);
    }
}

fn cone_samples(count: usize, seed: u64, min: usize, max: usize, model: &ModelConfig) -> Vec<TrainingSample> {
    let (cam, obj) = (bin_camera(), cone());
    let cfg = bin_scene("cone", min, max);
    (0..count)
        .map(|i| {
            let s = generate_scene(&cfg, &obj, &cam, &mut scene_rng(seed, i as u64)).unwrap();
            prepare_sample(&s.depth, &s.ground_truth, &cam, &obj, model.grid_size).unwrap()
        })
        .collect()
}

fn overfit_one_scene() -> (ModelConfig, Vec<TrainingSample>, TrainOutcome) {
    let obj = cone();
    let model = ModelConfig::miniature(obj.channels(), 1);
    let samples = cone_samples(1, 5, 1, 1, &model);
    let config = TrainConfig {
        learning_rate: 0.003,
        patience: 20,
        epochs: 500,
        batch_size: 1,
        ..TrainConfig::default()
    };
    let out = train(&samples, &[], &model, &config, &obj, &mut ChaCha8Rng::seed_from_u64(0)).unwrap();
    (model, samples, out)
}

#[test]
fn single_scene_can_be_memorized() {
    let (_, _, out) = overfit_one_scene();
    let last = out.history.last().unwrap();
    assert!(last.train_loss < 1e-3, "final loss {}", last.train_loss);
}

#[test]
fn shifting_the_input_by_one_cell_moves_the_peak() {
    let (model, samples, out) = overfit_one_scene();
    let n = model.input_size;
    let step = n / model.grid_size;
    let input = &samples[0].input;
    // the background is a flat floor, so a shifted copy is padded with its depth
    let background = input[0];
    let mut shifted = vec![background; n * n];
    for y in 0..n {
        for x in step..n {
            shifted[y * n + x] = input[y * n + x - step];
        }
    }
    let peak = |t: &GridTensor| {
        // cells whose receptive field stays off the zero-padded border
        let interior = 1..model.grid_size - 1;
        let mut best = (0, 0, f64::NEG_INFINITY);
        for i in interior.clone() {
            for j in interior.clone() {
                if t.get(i, j, channel::PROB) > best.2 {
                    best = (i, j, t.get(i, j, channel::PROB));
                }
            }
        }
        best
    };
    let a = peak(&forward(input, &out.params, &model).unwrap());
    let b = peak(&forward(&shifted, &out.params, &model).unwrap());
    assert!(a.2 > 0.5);
    assert_eq!((b.0, b.1), (a.0, a.1 + 1));
    assert_eq!(a.2, b.2);
}

fn short_run(seed: u64) -> TrainOutcome {
    let obj = cone();
    let model = ModelConfig::miniature(obj.channels(), seed);
    let samples = cone_samples(4, 1, 1, 3, &model);
    let config = TrainConfig {
        epochs: 5,
        batch_size: 2,
        loss: OriLoss::Representative,
        ..TrainConfig::default()
    };
    train(&samples[..3], &samples[3..], &model, &config, &obj, &mut ChaCha8Rng::seed_from_u64(seed)).unwrap()
}

#[test]
fn fixed_seed_reproduces_the_history() {
    let a = short_run(3);
    let b = short_run(3);
    assert_eq!(a.history, b.history);
    assert_eq!(a.params, b.params);
    assert_ne!(short_run(4).history, a.history);
}

#[test]
fn learning_rate_follows_the_plateau_rule() {
    let obj = cone();
    let model = ModelConfig::miniature(obj.channels(), 2);
    let samples = cone_samples(2, 8, 1, 2, &model);
    let config = TrainConfig {
        learning_rate: 0.05,
        patience: 2,
        epochs: 40,
        batch_size: 2,
        ..TrainConfig::default()
    };
    let out = train(&samples, &[], &model, &config, &obj, &mut ChaCha8Rng::seed_from_u64(1)).unwrap();
    let mut replay = PlateauScheduler::new(config.learning_rate, config.patience, config.decay_factor);
    let mut drops = 0;
    for pair in out.history.windows(2) {
        let lr = replay.step(pair[0].train_loss);
        assert_eq!(pair[1].lr, lr);
        if pair[1].lr < pair[0].lr {
            assert!((pair[0].lr / pair[1].lr - 10.0).abs() < 1e-9);
            drops += 1;
        }
    }
    assert!(drops >= 1, "no plateau reached in {} epochs", out.history.len());
}

#[test]
fn training_on_eight_scenes_cuts_the_loss_by_ninety_percent() {
    let obj = cone();
    let model = ModelConfig::miniature(obj.channels(), 1);
    let samples = cone_samples(8, 12, 1, 4, &model);
    let config = TrainConfig {
        learning_rate: 0.003,
        patience: 10,
        epochs: 300,
        batch_size: 4,
        min_lr: Some(1e-6),
        ..TrainConfig::default()
    };
    let out = train(&samples, &[], &model, &config, &obj, &mut ChaCha8Rng::seed_from_u64(0)).unwrap();
    let first = out.history[0].train_loss;
    let last = out.history.last().unwrap().train_loss;
    assert!(last <= 0.1 * first, "loss {first} -> {last}");
}
