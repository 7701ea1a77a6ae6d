use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};
use std::time::Instant;

use tempfile::TempDir;

fn configs() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs")
}

fn cone() -> PathBuf {
    configs().join("cone.toml")
}

fn opnet(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_opnet")).args(args).output().expect("binary runs")
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("exit code")
}

fn stdout(out: &Output) -> String {
    String::from_utf8_lossy(&out.stdout).into_owned()
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn gen(dir: &Path, config: &Path, count: usize, seed: u64) -> Output {
    opnet(&["gen", "--config", s(config), "--out", s(dir), "--count", &count.to_string(), "--seed", &seed.to_string()])
}

/// Scene files only; the run manifest carries a timestamp.
fn scene_bytes(dir: &Path) -> Vec<(String, Vec<u8>)> {
    let mut files: Vec<_> = fs::read_dir(dir)
        .unwrap()
        .map(|e| e.unwrap().path())
        .filter(|p| p.file_name().unwrap() != "run.json")
        .map(|p| (p.file_name().unwrap().to_string_lossy().into_owned(), fs::read(&p).unwrap()))
        .collect();
    files.sort();
    files
}

fn ap_line(out: &Output) -> f64 {
    let text = stdout(out);
    let line = text.lines().find(|l| l.starts_with("AP ")).expect("AP printed");
    line[3..].trim().parse().unwrap()
}

#[test]
fn gen_with_zero_count_writes_an_empty_dataset() {
    let tmp = TempDir::new().unwrap();
    let out = gen(&tmp.path().join("d"), &configs().join("gen.toml"), 0, 1);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    assert_eq!(scene_bytes(&tmp.path().join("d")).len(), 1, "only the manifest");
}

#[test]
fn gen_is_byte_identical_for_a_seed() {
    let tmp = TempDir::new().unwrap();
    let (a, b, c) = (tmp.path().join("a"), tmp.path().join("b"), tmp.path().join("c"));
    let config = configs().join("gen.toml");
    for (dir, seed) in [(&a, 5), (&b, 5), (&c, 6)] {
        assert_eq!(code(&gen(dir, &config, 4, seed)), 0);
    }
    assert_eq!(scene_bytes(&a), scene_bytes(&b));
    assert_ne!(scene_bytes(&a), scene_bytes(&c));
}

#[test]
fn gen_writes_a_hundred_scenes_quickly() {
    let tmp = TempDir::new().unwrap();
    let start = Instant::now();
    let out = gen(&tmp.path().join("d"), &configs().join("gen.toml"), 100, 2);
    assert_eq!(code(&out), 0);
    assert!(start.elapsed().as_secs_f64() < 10.0, "{:?}", start.elapsed());
    assert!(stdout(&out).contains("wrote 100 scenes"));
}

#[test]
fn usage_errors_exit_with_two() {
    let tmp = TempDir::new().unwrap();
    let missing = tmp.path().join("missing.toml");
    assert_eq!(code(&gen(&tmp.path().join("d"), &missing, 1, 0)), 2);
    let object = cone();
    assert_eq!(code(&opnet(&["dist", "1 0 0", "1 0 0", "--object", s(&object)])), 2);
    assert_eq!(code(&opnet(&["no-such-command"])), 2);

    let bad = tmp.path().join("bad.toml");
    fs::write(&bad, "object = \"cone.toml\"\n[scene]\nmin_instances = 1\n").unwrap();
    assert_eq!(code(&gen(&tmp.path().join("d"), &bad, 1, 0)), 2);
}

#[test]
fn corrupt_scene_data_is_a_runtime_failure() {
    let tmp = TempDir::new().unwrap();
    let data = tmp.path().join("d");
    assert_eq!(code(&gen(&data, &configs().join("gen.toml"), 2, 0)), 0);
    fs::write(data.join("scene_00001.depth"), b"truncated").unwrap();
    let out = opnet(&[
        "train", "--data", s(&data), "--config", s(&configs().join("train.toml")),
        "--out", s(&tmp.path().join("ck.json")),
    ]);
    assert_eq!(code(&out), 1, "{}", String::from_utf8_lossy(&out.stderr));
}

#[test]
fn dist_reports_accept_and_reject() {
    let identity = "1 0 0 0 1 0 0 0 1 0 0 0.5";
    let out = opnet(&["dist", identity, identity, "--object", s(&cone())]);
    assert_eq!(code(&out), 0);
    let text = stdout(&out);
    assert!(text.contains("distance 0\n") && text.ends_with("accept\n"), "{text}");

    // 0.2 diameters along x
    let shifted = format!("1 0 0 0 1 0 0 0 1 {} 0 0.5", 0.2 * 0.0782);
    let text = stdout(&opnet(&["dist", identity, &shifted, "--object", s(&cone())]));
    assert!(text.ends_with("reject\n"), "{text}");

    // quarter turn about the cone axis
    let spun = "0 -1 0 1 0 0 0 0 1 0 0 0.5";
    let text = stdout(&opnet(&["dist", identity, spun, "--object", s(&cone())]));
    assert!(text.contains("distance 0\n") && text.ends_with("accept\n"), "{text}");
}

/// One single-instance scene and a checkpoint trained on it until it is memorized.
struct Overfit {
    tmp: TempDir,
    data: PathBuf,
    checkpoint: PathBuf,
}

fn overfit() -> Overfit {
    let tmp = TempDir::new().unwrap();
    let gen_cfg = fs::read_to_string(configs().join("gen.toml"))
        .unwrap()
        .replace("object = \"cone.toml\"", &format!("object = {:?}", s(&cone())))
        .replace("max_instances = 6", "max_instances = 1");
    let gen_path = tmp.path().join("gen.toml");
    fs::write(&gen_path, gen_cfg).unwrap();
    let data = tmp.path().join("d");
    assert_eq!(code(&gen(&data, &gen_path, 1, 5)), 0);

    let train_path = tmp.path().join("train.toml");
    let train_cfg = format!(
        "object = {:?}\n[train]\nlearning_rate = 0.003\npatience = 20\nepochs = 500\nbatch_size = 1\nloss = \"ori1\"\n",
        s(&cone())
    );
    fs::write(&train_path, train_cfg).unwrap();
    let checkpoint = tmp.path().join("ck.json");
    let out = opnet(&["train", "--data", s(&data), "--config", s(&train_path), "--out", s(&checkpoint)]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    Overfit { tmp, data, checkpoint }
}

fn predict(fx: &Overfit, name: &str, extra: &[&str]) -> PathBuf {
    let dir = fx.tmp.path().join(name);
    let object = cone();
    let mut args = vec![
        "predict", "--checkpoint", s(&fx.checkpoint), "--data", s(&fx.data),
        "--object", s(&object), "--out", s(&dir),
    ];
    args.extend_from_slice(extra);
    let out = opnet(&args);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    dir
}

fn detections(dir: &Path) -> usize {
    let text = fs::read_to_string(dir.join("scene_00000.json")).unwrap();
    let v: serde_json::Value = serde_json::from_str(&text).unwrap();
    v["detections"].as_array().expect("detections array").len()
}

fn eval(fx: &Overfit, pred: &Path) -> Output {
    let report = fx.tmp.path().join(format!("{}.report.json", pred.file_name().unwrap().to_string_lossy()));
    opnet(&["eval", "--pred", s(pred), "--gt", s(&fx.data), "--object", s(&cone()), "--out", s(&report)])
}

#[test]
fn predict_and_eval_on_the_memorized_scene() {
    let fx = overfit();

    let found = predict(&fx, "p", &[]);
    assert_eq!(detections(&found), 1);
    let out = eval(&fx, &found);
    assert_eq!(code(&out), 0);
    assert_eq!(ap_line(&out), 1.0);

    let none = predict(&fx, "none", &["--p-min", "1.0", "--v-min", "1.0"]);
    assert_eq!(detections(&none), 0);
    assert_eq!(ap_line(&eval(&fx, &none)), 0.0);

    // with no thresholds every cell is a detection; duplicates collapse
    let all = predict(&fx, "all", &["--p-min", "0", "--v-min", "0"]);
    let deduped = predict(&fx, "dedup", &["--p-min", "0", "--v-min", "0", "--dedup", "--dedup-radius", "100"]);
    assert_eq!(detections(&all), 64);
    assert_eq!(detections(&deduped), 1);

    fs::remove_file(found.join("scene_00000.json")).unwrap();
    assert_eq!(code(&eval(&fx, &found)), 2);
}
