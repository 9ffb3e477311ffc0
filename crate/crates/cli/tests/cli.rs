//! End-to-end runs of the `matchbench` binary.

use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use matchbench_core::dataset::{format_reconstruction, load_cameras, parse_bags, Reconstruction};

fn matchbench(dir: &Path, args: &[&str], env: &[(&str, &str)]) -> Output {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_matchbench"));
    cmd.current_dir(dir).args(args).env_remove("MATCHBENCH_JOBS");
    for (k, v) in env {
        cmd.env(k, v);
    }
    cmd.output().expect("binary runs")
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exited normally")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

/// A small scene under `dir/data/ring` and a run config `dir/run.toml`.
fn workspace() -> tempfile::TempDir {
    let dir = tempfile::tempdir().unwrap();
    fs::write(
        dir.path().join("spec.toml"),
        "name = \"ring\"\ncameras = 8\npoints = 600\nkeypoint-noise = 0.5\nseed = 11\n",
    )
    .unwrap();
    let o = matchbench(dir.path(), &["synth", "--spec", "spec.toml", "--out", "data"], &[]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    fs::write(
        dir.path().join("run.toml"),
        "data-root = \"data\"\nscenes = [\"ring\"]\nmethod = \"synthetic\"\nthreshold = 1.0\nrepeats = 1\noutput = \"out\"\n",
    )
    .unwrap();
    dir
}

#[test]
fn stereo_writes_reports_and_flags_override_the_file() {
    let ws = workspace();
    let o = matchbench(ws.path(), &["stereo", "--config", "run.toml", "--threshold", "2", "--repeats", "2"], &[]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    assert!(stdout(&o).contains("overall mAA"));
    let report: serde_json::Value =
        serde_json::from_slice(&fs::read(ws.path().join("out/report.json")).unwrap()).unwrap();
    let config = &report["metadata"]["config"];
    assert_eq!(config["threshold"], 2.0);
    assert_eq!(config["repeats"], 2);
    assert_eq!(config["method"], "synthetic");
    assert!(config.get("jobs").is_none());
    // 28 pairs plus one scene row and one overall row, after the header.
    let csv = fs::read_to_string(ws.path().join("out/pairs.csv")).unwrap();
    assert_eq!(csv.lines().count(), 1 + 28 + 2);
    let curves = fs::read_to_string(ws.path().join("out/curves.csv")).unwrap();
    assert_eq!(curves.lines().count(), 11);
}

#[test]
fn reports_do_not_depend_on_the_worker_count() {
    let ws = workspace();
    let mut reports = Vec::new();
    for jobs in ["1", "3"] {
        let out = format!("out{jobs}");
        let o = matchbench(ws.path(), &["stereo", "--config", "run.toml", "--output", &out], &[("MATCHBENCH_JOBS", jobs)]);
        assert_eq!(code(&o), 0);
        reports.push(fs::read(ws.path().join(out).join("report.json")).unwrap());
    }
    assert_eq!(reports[0], reports[1]);
}

#[test]
fn validation_errors_exit_with_one() {
    let ws = workspace();
    fs::write(ws.path().join("typo.toml"), "treshold = 1.0\n").unwrap();
    let cases: [&[&str]; 7] = [
        &["stereo", "--config", "run.toml", "--ratio", "1.5"],
        &["stereo", "--config", "run.toml", "--scenes", "missing"],
        &["stereo", "--config", "typo.toml"],
        &["stereo", "--config", "run.toml", "--variant", "magsac"],
        &["stereo", "--no-such-flag"],
        &["validate", "--config", "run.toml", "--split", "test"],
        &["synth", "--spec", "run.toml", "--out", "data"],
    ];
    for args in cases {
        let o = matchbench(ws.path(), args, &[]);
        assert_eq!(code(&o), 1, "{args:?}: {}", String::from_utf8_lossy(&o.stderr));
    }
    let o = matchbench(ws.path(), &["stereo", "--config", "run.toml"], &[("MATCHBENCH_JOBS", "many")]);
    assert_eq!(code(&o), 1);
}

#[test]
fn runtime_failures_exit_with_two() {
    let ws = workspace();
    fs::write(ws.path().join("blocker"), "").unwrap();
    let o = matchbench(ws.path(), &["stereo", "--config", "run.toml", "--output", "blocker/out"], &[]);
    assert_eq!(code(&o), 2, "{}", String::from_utf8_lossy(&o.stderr));
}

#[test]
fn help_exits_with_zero() {
    let ws = tempfile::tempdir().unwrap();
    let o = matchbench(ws.path(), &["--help"], &[]);
    assert_eq!(code(&o), 0);
    for sub in ["stereo", "multiview", "sweep", "calibrate", "synth", "validate"] {
        assert!(stdout(&o).contains(sub), "{sub}");
    }
}

#[test]
fn validate_parses_inputs() {
    let ws = workspace();
    let o = matchbench(ws.path(), &["validate", "--config", "run.toml"], &[]);
    assert_eq!(code(&o), 0);
    assert!(stdout(&o).contains("ring: 8 images, 28 pairs"));
    fs::write(ws.path().join("data/ring/keypoints/synthetic/img000.txt"), "1 2 oops\n").unwrap();
    let o = matchbench(ws.path(), &["validate", "--config", "run.toml"], &[]);
    assert_eq!(code(&o), 1);
    assert!(String::from_utf8_lossy(&o.stderr).contains("img000.txt"));
}

#[test]
fn sweep_ranks_the_grid() {
    let ws = workspace();
    fs::write(ws.path().join("grid.toml"), "threshold = [0.5, 1.0]\nratio = [0.8]\n").unwrap();
    let o = matchbench(
        ws.path(),
        &["sweep", "--config", "run.toml", "--grid", "grid.toml", "--grid-matching", "both,either"],
        &[],
    );
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let report: serde_json::Value =
        serde_json::from_slice(&fs::read(ws.path().join("out/sweep.json")).unwrap()).unwrap();
    assert_eq!(report["entries"].as_array().unwrap().len(), 4);
    let csv = fs::read_to_string(ws.path().join("out/sweep.csv")).unwrap();
    assert_eq!(csv.lines().count(), 5);
}

#[test]
fn calibrate_suggests_a_budget() {
    let ws = workspace();
    let o = matchbench(ws.path(), &["calibrate", "--config", "run.toml", "--target-seconds", "0.5", "--sample-pairs", "3"], &[]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let c: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(c["sample-pairs"], 3);
    let budget = c["suggested-max-iterations"].as_u64().unwrap();
    assert!((1000..=1_000_000).contains(&budget));
    assert_eq!(budget % 1000, 0);
}

#[test]
fn multiview_scores_ground_truth_reconstructions() {
    let ws = workspace();
    let bag_args = ["--bag-sizes", "3,5", "--bag-counts", "3,2", "--min-points", "20"];
    let mut args = vec!["multiview", "--config", "run.toml", "--write-bags"];
    args.extend(bag_args);
    let o = matchbench(ws.path(), &args, &[]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let bags = parse_bags(&fs::read(ws.path().join("out/ring/bags.txt")).unwrap()).unwrap();
    assert_eq!(bags.len(), 5);

    // Ground-truth reconstructions for all bags but the last.
    let cameras = load_cameras(&ws.path().join("data/ring")).unwrap();
    let recon = ws.path().join("recon/ring");
    fs::create_dir_all(&recon).unwrap();
    for bag in &bags[..bags.len() - 1] {
        let poses = bag.images.iter().map(|id| (id.clone(), cameras[id].pose())).collect();
        let r = Reconstruction { poses, stats: [("registered".to_string(), bag.size.to_string())].into() };
        fs::write(recon.join(format!("{}.txt", bag.name())), format_reconstruction(&r)).unwrap();
    }
    let mut args = vec!["multiview", "--config", "run.toml", "--recon-dir", "recon"];
    args.extend(bag_args);
    let o = matchbench(ws.path(), &args, &[]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let report: serde_json::Value =
        serde_json::from_slice(&fs::read(ws.path().join("out/ring/multiview.json")).unwrap()).unwrap();
    assert_eq!(report["flagged"], serde_json::json!([bags[4].name()]));
    assert_eq!(report["aggregate"]["per-size"]["3"], 1.0);
    assert_eq!(report["aggregate"]["per-size"]["5"], 0.5);
    assert_eq!(report["bags"][0]["stats"]["registered"], "3");

    let o = matchbench(ws.path(), &["multiview", "--config", "run.toml"], &[]);
    assert_eq!(code(&o), 1);
}
