//! `opnet`: generate synthetic depth datasets, train the grid regressor,
//! predict, remove duplicates, evaluate and query pose distances.
//!
//! Exit codes: 0 on success, 1 on runtime failures, 2 on usage or
//! configuration errors.

mod config;
mod run;

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{anyhow, bail, Context};
use clap::{Args, Parser, Subcommand};
use opnet_core::eval::evaluate_dataset;
use opnet_core::geometry::{accept, pose_distance, ObjectModel, Pose, ACCEPT_FACTOR};
use opnet_core::gridcodec::{decode, PredictionFile, SceneFile};
use opnet_core::losses::OriLoss;
use opnet_core::model::{
    forward, history_csv, prepare_input, prepare_sample, train, Checkpoint, TrainOutcome,
};
use opnet_core::postprocess::{remove_duplicates, DedupConfig, DedupMetric};
use opnet_core::scenegen::{load_scene, write_dataset, DatasetManifest};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde_json::json;

use config::{object_path, read_toml, GenConfig, TrainFile};
use run::{sibling, Failure, Outcome, ResultExt, RunManifest};

#[derive(Parser)]
#[command(name = "opnet", version, about = "Grid-based 6D object pose estimation on depth images")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a synthetic dataset of depth scenes.
    Gen(GenArgs),
    /// Train the network on a generated dataset.
    Train(TrainArgs),
    /// Run a checkpoint on a dataset and write one prediction file per scene.
    Predict(PredictArgs),
    /// Evaluate predictions against ground truth and report average precision.
    Eval(EvalArgs),
    /// Distance between two poses and the acceptance verdict.
    Dist(DistArgs),
}

#[derive(Args)]
struct GenArgs {
    #[arg(long)]
    config: PathBuf,
    /// Output dataset directory.
    #[arg(long)]
    out: PathBuf,
    #[arg(long, default_value_t = 100)]
    count: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Object file; overrides `object` in the config.
    #[arg(long)]
    object: Option<PathBuf>,
}

#[derive(Args)]
struct TrainArgs {
    /// Dataset directory written by `gen`.
    #[arg(long)]
    data: PathBuf,
    #[arg(long)]
    config: Option<PathBuf>,
    /// Output checkpoint file.
    #[arg(long)]
    out: PathBuf,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, value_parser = parse_loss)]
    loss: Option<OriLoss>,
    #[arg(long)]
    object: Option<PathBuf>,
}

#[derive(Args)]
struct PredictArgs {
    #[arg(long)]
    checkpoint: PathBuf,
    #[arg(long)]
    data: PathBuf,
    #[arg(long)]
    object: PathBuf,
    /// Output directory for prediction files.
    #[arg(long)]
    out: PathBuf,
    #[arg(long, default_value_t = 0.5)]
    p_min: f64,
    #[arg(long, default_value_t = 0.5)]
    v_min: f64,
    /// Remove duplicate detections.
    #[arg(long)]
    dedup: bool,
    /// Duplicate radius as a fraction of the object diameter.
    #[arg(long, default_value_t = 0.1)]
    dedup_radius: f64,
    /// Compare origins only instead of full pose representatives.
    #[arg(long)]
    dedup_origin: bool,
}

#[derive(Args)]
struct EvalArgs {
    /// Directory of prediction files.
    #[arg(long)]
    pred: PathBuf,
    /// Dataset directory with the ground truth.
    #[arg(long)]
    gt: PathBuf,
    #[arg(long)]
    object: PathBuf,
    /// Report file (JSON); the PR curve is written next to it as CSV.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct DistArgs {
    /// Nine row-major rotation entries then three translation entries (meters),
    /// separated by commas or spaces.
    pose_a: String,
    pose_b: String,
    #[arg(long)]
    object: PathBuf,
}

fn parse_loss(s: &str) -> Result<OriLoss, String> {
    s.parse().map_err(|e: opnet_core::Error| e.to_string())
}

fn load_object(path: &Path) -> Outcome<ObjectModel> {
    ObjectModel::load(path)
        .with_context(|| format!("cannot load object {}", path.display()))
        .usage()
}

fn cmd_gen(args: GenArgs) -> Outcome<()> {
    let cfg: GenConfig = read_toml(&args.config).usage()?;
    let object = load_object(&object_path(args.object.as_deref(), cfg.object.as_deref(), Some(&args.config)).usage()?)?;
    let camera = cfg.camera.validated().usage()?;
    cfg.scene.validate(&camera, &object).usage()?;
    cfg.augment.validate().usage()?;
    let manifest = write_dataset(&args.out, &cfg.scene, &cfg.augment, &object, &camera, args.count, args.seed)
        .context("dataset generation failed")
        .runtime()?;
    RunManifest::new("gen", json!(cfg), Some(args.seed))
        .input(&args.config)
        .output(&args.out)
        .save(&args.out.join(run::RUN_FILE))
        .runtime()?;
    println!("wrote {} scenes to {}", manifest.scenes.len(), args.out.display());
    Ok(())
}

fn cmd_train(args: TrainArgs) -> Outcome<()> {
    let mut cfg: TrainFile = match &args.config {
        Some(p) => read_toml(p).usage()?,
        None => TrainFile::default(),
    };
    if let Some(loss) = args.loss {
        cfg.train.loss = loss;
    }
    let object = load_object(&object_path(args.object.as_deref(), cfg.object.as_deref(), args.config.as_deref()).usage()?)?;
    let model = cfg.model.resolve(object.channels(), args.seed);
    model.validate().usage()?;
    cfg.train.validate().usage()?;

    let manifest = DatasetManifest::load(&args.data)
        .with_context(|| format!("cannot read dataset {}", args.data.display()))
        .usage()?;
    if manifest.object_id != object.id {
        return Err(Failure::Usage(anyhow!(
            "dataset object `{}` does not match object `{}`",
            manifest.object_id,
            object.id
        )));
    }
    if cfg.validation_scenes >= manifest.scenes.len() {
        return Err(Failure::Usage(anyhow!(
            "{} validation scenes leave nothing to train on ({} scenes)",
            cfg.validation_scenes,
            manifest.scenes.len()
        )));
    }
    let mut samples = Vec::with_capacity(manifest.scenes.len());
    for entry in &manifest.scenes {
        let scene = load_scene(&args.data, entry).runtime()?;
        check_camera(&scene.scene, model.input_size)?;
        let truth = scene.scene.ground_truth().runtime()?;
        samples.push(
            prepare_sample(&scene.depth, &truth, &scene.scene.camera, &object, model.grid_size)
                .with_context(|| format!("scene {}", entry.name))
                .runtime()?,
        );
    }
    let val = samples.split_off(samples.len() - cfg.validation_scenes);
    let mut rng = ChaCha8Rng::seed_from_u64(args.seed);
    let TrainOutcome { params, history } =
        train(&samples, &val, &model, &cfg.train, &object, &mut rng).runtime()?;

    Checkpoint { config: model, params }.save(&args.out).runtime()?;
    let history_path = sibling(&args.out, "history.csv");
    opnet_core::gridcodec::write_atomic(&history_path, history_csv(&history).as_bytes()).runtime()?;
    RunManifest::new("train", json!(cfg), Some(args.seed))
        .input(&args.data)
        .inputs(args.config.iter())
        .output(&args.out)
        .output(&history_path)
        .save(&sibling(&args.out, "run.json"))
        .runtime()?;
    if let Some(last) = history.last() {
        println!("epochs {} final train loss {}", history.len(), last.train_loss);
    }
    Ok(())
}

fn check_camera(scene: &SceneFile, input_size: usize) -> Outcome<()> {
    let cam = &scene.camera;
    if cam.width as usize != input_size || cam.height as usize != input_size {
        return Err(Failure::Usage(anyhow!(
            "scene images are {}x{} but the model expects {input_size}x{input_size}",
            cam.width,
            cam.height
        )));
    }
    Ok(())
}

fn cmd_predict(args: PredictArgs) -> Outcome<()> {
    let checkpoint = Checkpoint::load(&args.checkpoint)
        .with_context(|| format!("cannot load checkpoint {}", args.checkpoint.display()))
        .usage()?;
    let object = load_object(&args.object)?;
    if checkpoint.config.output_channels != object.channels() {
        return Err(Failure::Usage(anyhow!(
            "checkpoint has {} output channels but object `{}` needs {}",
            checkpoint.config.output_channels,
            object.id,
            object.channels()
        )));
    }
    for (name, t) in [("--p-min", args.p_min), ("--v-min", args.v_min)] {
        if !(0.0..=1.0).contains(&t) {
            return Err(Failure::Usage(anyhow!("{name} must lie in [0, 1], got {t}")));
        }
    }
    let dedup = args.dedup.then_some(DedupConfig {
        radius_factor: args.dedup_radius,
        metric: if args.dedup_origin {
            DedupMetric::Origin
        } else {
            DedupMetric::Representative
        },
    });
    if let Some(d) = &dedup {
        remove_duplicates(&[], &object, d).usage()?;
    }
    let manifest = DatasetManifest::load(&args.data)
        .with_context(|| format!("cannot read dataset {}", args.data.display()))
        .usage()?;
    std::fs::create_dir_all(&args.out)
        .with_context(|| format!("cannot create {}", args.out.display()))
        .runtime()?;
    let mut total = 0;
    for entry in &manifest.scenes {
        let scene = load_scene(&args.data, entry).runtime()?;
        check_camera(&scene.scene, checkpoint.config.input_size)?;
        let input = prepare_input(&scene.depth).runtime()?;
        let output = forward(&input, &checkpoint.params, &checkpoint.config).runtime()?;
        let mut hyps = decode(&output, &scene.scene.camera, &object, args.p_min, args.v_min).runtime()?;
        if let Some(d) = &dedup {
            hyps = remove_duplicates(&hyps, &object, d).runtime()?;
        }
        total += hyps.len();
        PredictionFile::new(&hyps)
            .save(args.out.join(format!("{}.json", entry.name)))
            .runtime()?;
    }
    let resolved = json!({
        "p_min": args.p_min,
        "v_min": args.v_min,
        "dedup": dedup,
        "model": checkpoint.config,
    });
    RunManifest::new("predict", resolved, None)
        .input(&args.checkpoint)
        .input(&args.data)
        .input(&args.object)
        .output(&args.out)
        .save(&args.out.join(run::RUN_FILE))
        .runtime()?;
    println!("wrote {} detections for {} scenes", total, manifest.scenes.len());
    Ok(())
}

fn prediction_names(dir: &Path) -> anyhow::Result<Vec<String>> {
    let mut names = Vec::new();
    for entry in std::fs::read_dir(dir).with_context(|| format!("cannot read {}", dir.display()))? {
        let path = entry?.path();
        if path.extension().map_or(false, |e| e == "json") {
            let stem = path.file_stem().and_then(|s| s.to_str()).unwrap_or_default();
            if format!("{stem}.json") != run::RUN_FILE {
                names.push(stem.to_string());
            }
        }
    }
    names.sort();
    Ok(names)
}

fn cmd_eval(args: EvalArgs) -> Outcome<()> {
    let object = load_object(&args.object)?;
    let manifest = DatasetManifest::load(&args.gt)
        .with_context(|| format!("cannot read dataset {}", args.gt.display()))
        .usage()?;
    let mut expected: Vec<String> = manifest.scenes.iter().map(|e| e.name.clone()).collect();
    expected.sort();
    let found = prediction_names(&args.pred).usage()?;
    if found != expected {
        let missing: Vec<_> = expected.iter().filter(|n| !found.contains(n)).collect();
        let extra: Vec<_> = found.iter().filter(|n| !expected.contains(n)).collect();
        return Err(Failure::Usage(anyhow!(
            "prediction and ground-truth scenes differ (missing {missing:?}, unexpected {extra:?})"
        )));
    }
    let mut scenes = Vec::with_capacity(manifest.scenes.len());
    for entry in &manifest.scenes {
        let truth = SceneFile::load(args.gt.join(&entry.ground_truth))
            .and_then(|s| s.ground_truth())
            .runtime()?;
        let preds = PredictionFile::load(args.pred.join(format!("{}.json", entry.name)))
            .with_context(|| format!("predictions for {}", entry.name))
            .runtime()?;
        scenes.push((preds.hypotheses().runtime()?, truth));
    }
    let report = evaluate_dataset(&scenes, &object);
    report.write_json(&args.out).runtime()?;
    let csv = args.out.with_extension("csv");
    report.write_curve_csv(&csv).runtime()?;
    RunManifest::new("eval", json!({ "object": object.id }), None)
        .input(&args.pred)
        .input(&args.gt)
        .input(&args.object)
        .output(&args.out)
        .output(&csv)
        .save(&sibling(&args.out, "run.json"))
        .runtime()?;
    println!("AP {:.4}", report.ap);
    println!(
        "relevant {} true_positives {} false_positives {} ignored {}",
        report.n_relevant, report.true_positives, report.false_positives, report.ignored
    );
    Ok(())
}

fn parse_pose(text: &str) -> anyhow::Result<Pose> {
    let values: Vec<f64> = text
        .split(|c: char| c == ',' || c.is_whitespace())
        .filter(|s| !s.is_empty())
        .map(|s| s.parse::<f64>().with_context(|| format!("`{s}` is not a number")))
        .collect::<anyhow::Result<_>>()?;
    if values.len() != 12 {
        bail!("a pose needs 12 numbers (9 rotation, 3 translation), got {}", values.len());
    }
    let rotation: [f64; 9] = values[..9].try_into().expect("nine values");
    let translation: [f64; 3] = values[9..].try_into().expect("three values");
    Ok(Pose::from_parts(&rotation, &translation)?)
}

fn cmd_dist(args: DistArgs) -> Outcome<()> {
    let object = load_object(&args.object)?;
    let a = parse_pose(&args.pose_a).context("pose A").usage()?;
    let b = parse_pose(&args.pose_b).context("pose B").usage()?;
    let d = pose_distance(&a, &b, &object);
    println!("distance {d}");
    println!("threshold {}", ACCEPT_FACTOR * object.diameter);
    println!("{}", if accept(&a, &b, &object) { "accept" } else { "reject" });
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Gen(a) => cmd_gen(a),
        Command::Train(a) => cmd_train(a),
        Command::Predict(a) => cmd_predict(a),
        Command::Eval(a) => cmd_eval(a),
        Command::Dist(a) => cmd_dist(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(failure) => {
            eprintln!("error: {:#}", failure.error());
            ExitCode::from(failure.code())
        }
    }
}
