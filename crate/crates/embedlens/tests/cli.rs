//! End-to-end checks of the `embedlens` binary: every subcommand, the
//! documented exit codes, and byte-identical sweep output across reruns
//! and job counts.

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use embedlens::harness::ExperimentConfig;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_embedlens"))
}

fn run(args: &[&str], dir: &Path) -> Output {
    bin()
        .args(args)
        .current_dir(dir)
        .output()
        .expect("binary runs")
}

fn assert_code(out: &Output, expected: i32, what: &str) {
    assert_eq!(
        out.status.code(),
        Some(expected),
        "{what}: expected exit {expected}, got {:?}\nstdout: {}\nstderr: {}",
        out.status.code(),
        String::from_utf8_lossy(&out.stdout),
        String::from_utf8_lossy(&out.stderr),
    );
}

fn temp_dir(tag: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("embedlens-cli-{tag}-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    dir
}

#[test]
fn generate_transform_evaluate_pipeline_works() {
    let dir = temp_dir("pipeline");

    let out = run(
        &[
            "generate",
            "--dataset",
            "blobs",
            "--n",
            "80",
            "--noise",
            "0.6",
            "--dim",
            "6",
            "--seed",
            "3",
            "--out",
            "x.csv",
        ],
        &dir,
    );
    assert_code(&out, 0, "generate");
    let header = std::fs::read_to_string(dir.join("x.csv")).unwrap();
    assert!(header.starts_with("f0,f1,f2,f3,f4,f5,label\n"));

    let out = run(
        &[
            "transform", "x.csv", "--method", "pca", "--d-out", "2", "--out", "z.csv",
        ],
        &dir,
    );
    assert_code(&out, 0, "transform");

    let out = run(&["evaluate", "x.csv", "z.csv", "--k", "5"], &dir);
    assert_code(&out, 0, "evaluate");
    let reports: serde_json::Value =
        serde_json::from_slice(&out.stdout).expect("evaluate emits JSON");
    let list = reports.as_array().expect("array of reports");
    // default metric set: the six comparison metrics
    assert_eq!(list.len(), 6);
    assert!(list.iter().all(|r| r["value"].as_f64().is_some()));

    // identity embedding: evaluating x against itself scores perfectly
    let out = run(
        &["evaluate", "x.csv", "x.csv", "--metric", "trustworthiness", "--metric", "mrr"],
        &dir,
    );
    assert_code(&out, 0, "evaluate identity");
    let reports: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    for r in reports.as_array().unwrap() {
        assert_eq!(r["value"].as_f64(), Some(1.0));
    }

    std::fs::remove_dir_all(&dir).ok();
}

#[test]
fn usage_and_config_errors_exit_one() {
    let dir = temp_dir("errors");

    let out = run(&["generate", "--dataset", "nonsense"], &dir);
    assert_code(&out, 1, "unknown dataset");

    // --dim is a blobs-only knob
    let out = run(
        &["generate", "--dataset", "moons", "--n", "50", "--dim", "7", "--out", "m.csv"],
        &dir,
    );
    assert_code(&out, 1, "dim on moons");

    let out = run(&["transform", "missing.csv", "--method", "pca"], &dir);
    assert_code(&out, 1, "missing input");

    std::fs::write(dir.join("bad.json"), "{\"datasets\": []}").unwrap();
    let out = run(&["sweep", "--config", "bad.json"], &dir);
    assert_code(&out, 1, "invalid config");

    // clap usage errors are fatal too, but --help is not an error
    let out = run(&["sweep"], &dir);
    assert_code(&out, 1, "missing --config");
    let out = run(&["--help"], &dir);
    assert_code(&out, 0, "--help");

    std::fs::remove_dir_all(&dir).ok();
}

fn small_sweep_config(dir: &Path) -> PathBuf {
    let config = serde_json::json!({
        "datasets": [
            { "kind": "blobs", "n_samples": 60, "noise": 0.0, "dim": 4, "seed": 0 }
        ],
        "noise_levels": [0.6, 1.5],
        "dims": [4],
        "transforms": [
            { "kind": "pca", "d_out": 2 },
            { "kind": "grp", "d_out": 2 }
        ],
        "metrics": [
            { "name": "accuracy" },
            { "name": "trustworthiness" },
            { "name": "idpe", "k": 5, "mode": "consistent" }
        ],
        "repetitions": 2,
        "base_seed": 7,
        "output_path": "small.csv"
    });
    let path = dir.join("small.json");
    std::fs::write(&path, serde_json::to_string_pretty(&config).unwrap()).unwrap();
    path
}

#[test]
fn sweep_output_is_stable_across_reruns_and_jobs() {
    let dir = temp_dir("sweep");
    small_sweep_config(&dir);

    let out = run(
        &["sweep", "--config", "small.json", "--jobs", "1", "--out", "a.csv"],
        &dir,
    );
    assert_code(&out, 0, "sweep jobs 1");
    let out = run(
        &["sweep", "--config", "small.json", "--jobs", "4", "--out", "b.csv"],
        &dir,
    );
    assert_code(&out, 0, "sweep jobs 4");
    let out = run(
        &["sweep", "--config", "small.json", "--jobs", "4", "--out", "c.csv"],
        &dir,
    );
    assert_code(&out, 0, "sweep rerun");

    let a = std::fs::read(dir.join("a.csv")).unwrap();
    let b = std::fs::read(dir.join("b.csv")).unwrap();
    let c = std::fs::read(dir.join("c.csv")).unwrap();
    assert_eq!(a, b, "jobs 1 vs jobs 4");
    assert_eq!(b, c, "rerun with jobs 4");

    // 2 noise x 2 transforms x 2 reps x 3 metrics = 24 rows + header
    assert_eq!(a.iter().filter(|&&byte| byte == b'\n').count(), 25);

    // summarize groups the 24 rows into 12 cells (2 reps each)
    let out = run(&["summarize", "a.csv"], &dir);
    assert_code(&out, 0, "summarize");
    let summary: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(summary["total_rows"].as_u64(), Some(24));
    assert_eq!(summary["failed_rows"].as_u64(), Some(0));
    assert_eq!(summary["cells"].as_array().map(Vec::len), Some(12));
    let first = &summary["cells"][0];
    assert_eq!(first["count"].as_u64(), Some(2));
    assert!(first["mean"].as_f64().is_some());

    std::fs::remove_dir_all(&dir).ok();
}

#[test]
fn sweep_with_failing_cells_exits_two_and_marks_rows() {
    let dir = temp_dir("failing");

    // 40 samples in 64 dims with an exact-only inversion policy: every
    // idpe row fails while trustworthiness rows still succeed
    let config = serde_json::json!({
        "datasets": [
            { "kind": "blobs", "n_samples": 40, "noise": 0.0, "dim": 64, "seed": 0 }
        ],
        "noise_levels": [0.6],
        "dims": [64],
        "transforms": [ { "kind": "pca", "d_out": 2 } ],
        "metrics": [
            { "name": "trustworthiness" },
            { "name": "idpe", "k": 5, "mode": "box1" }
        ],
        "repetitions": 1,
        "inversion_policy": "exact",
        "output_path": "failing.csv"
    });
    std::fs::write(
        dir.join("failing.json"),
        serde_json::to_string_pretty(&config).unwrap(),
    )
    .unwrap();

    let out = run(&["sweep", "--config", "failing.json", "--out", "f.csv"], &dir);
    assert_code(&out, 2, "sweep with failed cells");
    assert!(
        String::from_utf8_lossy(&out.stderr).contains("condition"),
        "stderr names the failure reason"
    );

    let text = std::fs::read_to_string(dir.join("f.csv")).unwrap();
    let idpe_row = text.lines().find(|l| l.contains(",idpe,")).unwrap();
    assert!(idpe_row.contains("NaN"), "failed cell value is NaN");
    assert!(idpe_row.contains(",error,"), "failed cell strategy is 'error'");
    let trust_row = text.lines().find(|l| l.contains(",trustworthiness,")).unwrap();
    assert!(!trust_row.contains("NaN"), "other metrics are unaffected");

    std::fs::remove_dir_all(&dir).ok();
}

#[test]
fn shipped_configs_load_and_match_the_builtin_suite() {
    let root = Path::new(env!("CARGO_MANIFEST_DIR")).join("../..");

    let blobs = ExperimentConfig::load(root.join("configs/blobs_suite.json")).unwrap();
    assert_eq!(blobs, ExperimentConfig::blobs_suite());
    assert_eq!(blobs.expected_rows(), 1890);

    let shapes = ExperimentConfig::load(root.join("configs/shapes_suite.json")).unwrap();
    assert_eq!(shapes.datasets.len(), 5);
    assert_eq!(shapes.noise_levels.len(), 5);
    // 1 blobs dim + 4 native shape dims = 5 dataset/dim combinations
    assert_eq!(shapes.expected_rows(), 5 * 5 * 3 * 10 * 5);
}

#[test]
fn json_format_round_trips_the_config() {
    let dir = temp_dir("json");
    small_sweep_config(&dir);

    let out = run(
        &[
            "sweep", "--config", "small.json", "--format", "json", "--out", "out.json",
        ],
        &dir,
    );
    assert_code(&out, 0, "sweep json");
    let doc: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.join("out.json")).unwrap()).unwrap();
    assert_eq!(doc["config"]["base_seed"].as_u64(), Some(7));
    assert_eq!(doc["rows"].as_array().map(Vec::len), Some(24));

    std::fs::remove_dir_all(&dir).ok();
}
