//! End-to-end runs of the `revsup` binary against temporary workspaces.

use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use rand::prelude::*;
use rand_chacha::ChaCha8Rng;
use serde_json::Value;
use tempfile::TempDir;

use revsup_core::acoustics::{simulate_scene, write_scene_dir};
use revsup_core::wav::{write_wav, SampleFormat};
use revsup_core::{AudioBuffer, SceneSampler, SourceKind};

fn revsup(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_revsup"))
        .args(args)
        .output()
        .expect("the revsup binary should launch")
}

fn stdout(output: &Output) -> String {
    String::from_utf8_lossy(&output.stdout).into_owned()
}

fn stderr(output: &Output) -> String {
    String::from_utf8_lossy(&output.stderr).into_owned()
}

fn white(seed: u64, len: usize) -> AudioBuffer {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let samples = (0..len).map(|_| rng.random_range(-1.0..1.0)).collect();
    AudioBuffer::new(samples, 8000).expect("white buffer is valid")
}

fn path_str(path: &Path) -> &str {
    path.to_str().expect("temp paths are utf-8")
}

/// Renders `count` sampled white-source scenes into `dir` without the CLI.
fn write_scene_batch(dir: &Path, seed: u64, count: usize, len: usize) {
    let mut sampler = SceneSampler::new(seed);
    for k in 0..count {
        let config = sampler.sample();
        let scene = simulate_scene(&config, &[SourceKind::White, SourceKind::White], len)
            .expect("sampled scene renders");
        write_scene_dir(&dir.join(format!("scene_{k:03}")), &config, &scene)
            .expect("scene batch writes");
    }
}

#[test]
fn simulate_then_oracle_covers_all_input_kinds() {
    let tmp = TempDir::new().unwrap();
    let config_path = tmp.path().join("scenes.json");
    let out_dir = tmp.path().join("batch");
    fs::write(
        &config_path,
        r#"{"length": 4000, "kinds": ["white", "white"], "seed": 11, "count": 2}"#,
    )
    .unwrap();

    let sim = revsup(&[
        "simulate",
        "--config",
        path_str(&config_path),
        "--out",
        path_str(&out_dir),
    ]);
    assert!(
        sim.status.success(),
        "simulate should succeed, stderr: {}",
        stderr(&sim)
    );
    assert!(stdout(&sim).contains("wrote 2 scenes"), "summary line names the count");
    for k in 0..2 {
        let scene_dir = out_dir.join(format!("scene_{k:03}"));
        assert!(scene_dir.join("scene.json").is_file(), "scene {k} keeps its config");
        assert!(scene_dir.join("mixture_L.wav").is_file(), "scene {k} keeps its mixture");
    }

    let report_path = tmp.path().join("oracle.json");
    let oracle = revsup(&[
        "oracle",
        "--scenes",
        path_str(&out_dir),
        "--taps",
        "96",
        "--nc-taps",
        "24",
        "--out",
        path_str(&report_path),
    ]);
    assert!(
        oracle.status.success(),
        "oracle should succeed, stderr: {}",
        stderr(&oracle)
    );
    let report: Value = serde_json::from_str(&fs::read_to_string(&report_path).unwrap()).unwrap();
    let rows = report["rows"].as_array().expect("report rows are a list");
    assert_eq!(rows.len(), 4, "one row per input kind");
    let mean = |kind: &str| {
        rows.iter()
            .find(|row| row["input_kind"] == kind)
            .unwrap_or_else(|| panic!("report covers {kind}"))["mean_sdr_db"]
            .as_f64()
            .expect("mean is numeric")
    };
    assert!(
        mean("reverberant_images") > mean("mixture"),
        "true images should predict the right mixture better than the left mixture, got {:.2} vs {:.2}",
        mean("reverberant_images"),
        mean("mixture")
    );
}

#[test]
fn select_keeps_informative_pairs_and_drops_copies() {
    let tmp = TempDir::new().unwrap();
    let fresh_l = white(1, 6000);
    let fresh_r = white(2, 6000);
    let mut copy = vec![0.0; 6000];
    copy[3..].copy_from_slice(&fresh_l.samples[..5997]);
    let copy_r = AudioBuffer::new(copy, 8000).unwrap();

    write_wav(&tmp.path().join("a_L.wav"), &fresh_l, SampleFormat::Float32).unwrap();
    write_wav(&tmp.path().join("a_R.wav"), &fresh_r, SampleFormat::Float32).unwrap();
    write_wav(&tmp.path().join("b_L.wav"), &fresh_l, SampleFormat::Float32).unwrap();
    write_wav(&tmp.path().join("b_R.wav"), &copy_r, SampleFormat::Float32).unwrap();

    let manifest_path = tmp.path().join("pairs.json");
    fs::write(
        &manifest_path,
        r#"[
            {"id": "fresh", "path_L": "a_L.wav", "path_R": "a_R.wav"},
            {"id": "copy", "path_L": "b_L.wav", "path_R": "b_R.wav"}
        ]"#,
    )
    .unwrap();

    let report_path = tmp.path().join("report.json");
    let run = revsup(&[
        "select",
        "--manifest",
        path_str(&manifest_path),
        "--threshold-db",
        "10",
        "--out",
        path_str(&report_path),
    ]);
    assert!(run.status.success(), "select should succeed, stderr: {}", stderr(&run));
    assert!(stdout(&run).contains("kept 1/2"), "summary counts kept pairs");

    let report: Value = serde_json::from_str(&fs::read_to_string(&report_path).unwrap()).unwrap();
    let items = report["items"].as_array().unwrap();
    assert_eq!(items.len(), 2, "every manifest pair is scored");
    for item in items {
        let keep = item["keep"].as_bool().unwrap();
        match item["id"].as_str().unwrap() {
            "fresh" => assert!(keep, "independent noise scores low and stays"),
            "copy" => assert!(!keep, "a delayed copy saturates the score and is dropped"),
            other => panic!("unexpected item id {other}"),
        }
    }
}

#[test]
fn metrics_agrees_that_a_lightly_perturbed_copy_scores_high() {
    let tmp = TempDir::new().unwrap();
    let reference = white(5, 4000);
    let noisy = AudioBuffer::new(
        reference
            .samples
            .iter()
            .zip(white(6, 4000).samples.iter())
            .map(|(a, b)| a + 1e-4 * b)
            .collect(),
        8000,
    )
    .unwrap();
    let ref_path = tmp.path().join("ref.wav");
    let est_path = tmp.path().join("est.wav");
    write_wav(&ref_path, &reference, SampleFormat::Float32).unwrap();
    write_wav(&est_path, &noisy, SampleFormat::Float32).unwrap();

    for kind in ["si_sdr", "snr", "projection_sdr"] {
        let run = revsup(&[
            "metrics",
            "--ref",
            path_str(&ref_path),
            "--est",
            path_str(&est_path),
            "--kind",
            kind,
        ]);
        assert!(run.status.success(), "{kind} should succeed, stderr: {}", stderr(&run));
        let value: f64 = stdout(&run).trim().parse().expect("metric prints a number");
        assert!(
            value > 40.0,
            "{kind} of a near-copy should be high, got {value:.2}"
        );
    }
}

#[test]
fn metrics_rejects_an_unknown_kind_with_a_validation_exit() {
    let tmp = TempDir::new().unwrap();
    let wav_path = tmp.path().join("x.wav");
    write_wav(&wav_path, &white(9, 1000), SampleFormat::Float32).unwrap();

    let run = revsup(&[
        "metrics",
        "--ref",
        path_str(&wav_path),
        "--est",
        path_str(&wav_path),
        "--kind",
        "loudness",
    ]);
    assert_eq!(run.status.code(), Some(2), "bad metric names are validation errors");
    assert!(stderr(&run).contains("unknown metric"), "stderr names the problem");
}

#[test]
fn missing_input_files_exit_with_runtime_failure() {
    let tmp = TempDir::new().unwrap();
    let missing = tmp.path().join("nope.wav");
    let run = revsup(&[
        "metrics",
        "--ref",
        path_str(&missing),
        "--est",
        path_str(&missing),
        "--kind",
        "snr",
    ]);
    assert_eq!(run.status.code(), Some(1), "io failures are runtime errors");
}

#[test]
fn simulate_rejects_an_ambiguous_config() {
    let tmp = TempDir::new().unwrap();
    let config = SceneSampler::new(3).sample();
    let mut spec = serde_json::json!({
        "length": 1000,
        "kinds": ["white", "white"],
        "seed": 1,
        "count": 1,
    });
    spec["scenes"] = serde_json::json!([config]);
    let config_path = tmp.path().join("scenes.json");
    fs::write(&config_path, serde_json::to_string(&spec).unwrap()).unwrap();

    let run = revsup(&[
        "simulate",
        "--config",
        path_str(&config_path),
        "--out",
        path_str(&tmp.path().join("batch")),
    ]);
    assert_eq!(
        run.status.code(),
        Some(2),
        "seed+count plus explicit scenes is ambiguous, stderr: {}",
        stderr(&run)
    );
    assert!(stderr(&run).contains("either seed and count"), "stderr explains the choice");
}

#[test]
fn optimize_writes_a_non_increasing_trace() {
    let tmp = TempDir::new().unwrap();
    let scene_dir = tmp.path().join("scene_000");
    write_scene_batch(tmp.path(), 21, 1, 2500);

    let trace_path = tmp.path().join("trace.csv");
    let run = revsup(&[
        "optimize",
        "--scene",
        path_str(&scene_dir),
        "--init",
        "leaky",
        "--iters",
        "5",
        "--lambda",
        "0.0",
        "--out",
        path_str(&trace_path),
    ]);
    assert!(run.status.success(), "optimize should succeed, stderr: {}", stderr(&run));
    assert!(stdout(&run).contains("accepted steps"), "summary reports the step count");

    let trace = fs::read_to_string(&trace_path).unwrap();
    let mut lines = trace.lines();
    assert!(
        lines.next().unwrap().starts_with("iteration,loss_db"),
        "trace header leads with iteration and loss"
    );
    let losses: Vec<f64> = lines
        .map(|line| line.split(',').nth(1).unwrap().parse().unwrap())
        .collect();
    assert!(losses.len() >= 2, "trace records the start and at least one step");
    for pair in losses.windows(2) {
        assert!(
            pair[1] <= pair[0] + 1e-12,
            "accepted loss must not rise, got {} then {}",
            pair[0],
            pair[1]
        );
    }
}

#[test]
fn grad_check_reports_a_passing_audit() {
    let tmp = TempDir::new().unwrap();
    let report_path = tmp.path().join("check.json");
    let run = revsup(&[
        "ras-grad-check",
        "--seed",
        "7",
        "--seeds-per-combo",
        "2",
        "--out",
        path_str(&report_path),
    ]);
    assert!(run.status.success(), "audit should pass, stderr: {}", stderr(&run));
    let report: Value = serde_json::from_str(&fs::read_to_string(&report_path).unwrap()).unwrap();
    assert_eq!(report["passed"], Value::Bool(true), "report agrees with the exit code");
    assert_eq!(report["fd_step"].as_f64(), Some(1e-5), "audit step is pinned");
    assert_eq!(report["cases"].as_array().map(Vec::len), Some(8), "2 seeds x 4 combos");
}

#[test]
fn ablate_compares_ingredient_flips_on_a_small_batch() {
    let tmp = TempDir::new().unwrap();
    let batch_dir = tmp.path().join("batch");
    fs::create_dir(&batch_dir).unwrap();
    write_scene_batch(&batch_dir, 33, 2, 2500);

    let report_path = tmp.path().join("ablation.json");
    let run = revsup(&[
        "ablate",
        "--scenes",
        path_str(&batch_dir),
        "--axes",
        "filter",
        "--iters",
        "3",
        "--threshold-db",
        "inf",
        "--out",
        path_str(&report_path),
    ]);
    assert!(run.status.success(), "ablate should succeed, stderr: {}", stderr(&run));

    let report: Value = serde_json::from_str(&fs::read_to_string(&report_path).unwrap()).unwrap();
    let names: Vec<&str> = report["rows"]
        .as_array()
        .unwrap()
        .iter()
        .map(|row| row["name"].as_str().unwrap())
        .collect();
    assert_eq!(
        names,
        ["baseline", "filter=joint"],
        "one baseline row plus the requested flip"
    );
}

#[test]
fn unknown_mode_names_are_validation_errors() {
    let tmp = TempDir::new().unwrap();
    let manifest_path = tmp.path().join("pairs.json");
    fs::write(&manifest_path, "[]").unwrap();

    let select = revsup(&[
        "select",
        "--manifest",
        path_str(&manifest_path),
        "--threshold-db",
        "10",
        "--direction",
        "sideways",
        "--out",
        path_str(&tmp.path().join("report.json")),
    ]);
    assert_eq!(select.status.code(), Some(2), "bad direction is a validation error");

    let optimize = revsup(&[
        "optimize",
        "--scene",
        path_str(&tmp.path().join("missing")),
        "--init",
        "oracle",
        "--iters",
        "1",
        "--out",
        path_str(&tmp.path().join("trace.csv")),
    ]);
    assert_eq!(optimize.status.code(), Some(2), "bad init name is a validation error");

    let ablate = revsup(&[
        "ablate",
        "--scenes",
        path_str(&tmp.path().join("missing")),
        "--axes",
        "filter,refit",
        "--out",
        path_str(&tmp.path().join("ablation.json")),
    ]);
    assert_eq!(ablate.status.code(), Some(2), "bad axis name is a validation error");
    assert!(stderr(&ablate).contains("unknown axis"), "stderr names the bad axis");
}
