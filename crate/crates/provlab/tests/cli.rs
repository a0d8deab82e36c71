//! End-to-end exercises of the `provlab` binary surface.

use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn provlab(args: &[&str], cwd: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_provlab"))
        .args(args)
        .current_dir(cwd)
        .env("PROVLAB_OUT", cwd.join("default-out"))
        .output()
        .expect("spawn provlab")
}

fn assert_ok(out: &Output) {
    assert!(
        out.status.success(),
        "exit {:?}\nstdout: {}\nstderr: {}",
        out.status.code(),
        String::from_utf8_lossy(&out.stdout),
        String::from_utf8_lossy(&out.stderr)
    );
}

#[test]
fn full_command_chain_over_one_scenario() {
    let dir = tempfile::tempdir().unwrap();
    let root = dir.path();

    // gen-traces
    let out = provlab(
        &[
            "gen-traces",
            "--seed",
            "42",
            "--train-days",
            "2",
            "--test-days",
            "1",
            "--attacks",
            "mining",
            "--scale",
            "2500",
            "--out",
            "traces",
        ],
        root,
    );
    assert_ok(&out);
    assert!(root.join("traces/train_01.jsonl").exists());
    assert!(root.join("traces/manifest.json").exists());

    // build-graph
    let out = provlab(
        &[
            "build-graph",
            "--trace",
            "traces/test_01.jsonl",
            "--idmap",
            "4",
            "--out",
            "graph",
        ],
        root,
    );
    assert_ok(&out);
    assert!(root.join("graph/nodes.csv").exists());
    assert!(root.join("graph/edges.csv").exists());
    assert!(root.join("graph/stats.json").exists());

    // detect
    let out = provlab(
        &[
            "detect",
            "--train",
            "traces/train_01.jsonl",
            "--train",
            "traces/train_02.jsonl",
            "--test",
            "traces/test_01.jsonl",
            "--threshold",
            "auto",
            "--out",
            "detect",
        ],
        root,
    );
    assert_ok(&out);
    assert!(root.join("detect/verdicts.csv").exists());
    assert!(root.join("detect/timing.csv").exists());

    // reduce-fp over the emitted verdicts
    let out = provlab(
        &[
            "reduce-fp",
            "--alerts",
            "detect/verdicts.csv",
            "--trace",
            "traces/test_01.jsonl",
            "--threshold",
            "20",
            "--knn",
            "10",
            "--out",
            "reduced",
        ],
        root,
    );
    assert_ok(&out);
    assert!(root.join("reduced/fp_communities.csv").exists());

    // evaluate
    let out = provlab(
        &[
            "evaluate",
            "--verdicts",
            "detect/verdicts.csv",
            "--out",
            "eval",
        ],
        root,
    );
    assert_ok(&out);
    let summary = fs::read_to_string(root.join("eval/summary.csv")).unwrap();
    assert!(summary.starts_with("Method,TPR,FPR,AUC,TP,TN,FN,FP"));

    // analyze-distance with unknown-behavior stats
    let out = provlab(
        &[
            "analyze-distance",
            "--train",
            "traces/train_01.jsonl",
            "--test",
            "traces/test_01.jsonl",
            "--unknown-stats",
            "--out",
            "analyze",
        ],
        root,
    );
    assert_ok(&out);
    assert!(root.join("analyze/distance.json").exists());
    assert!(root.join("analyze/unknown_stats.csv").exists());
    assert!(root.join("analyze/features_test.csv").exists());
    let stdout = String::from_utf8_lossy(&out.stdout);
    assert!(stdout.contains("distance ratio"), "{stdout}");
}

#[test]
fn run_and_sweep_from_config_file() {
    let dir = tempfile::tempdir().unwrap();
    let root = dir.path();
    fs::write(
        root.join("run.json"),
        serde_json::json!({
            "scenario": {"seed": 202, "train_days": 2, "days": 1,
                          "attacks": ["backdoor"], "scale": 2000},
            "idmap": "default",
            "threshold": "auto",
            "fp_reduction": {"enabled": true, "threshold": 20, "knn": 10},
            "export_graphs": false
        })
        .to_string(),
    )
    .unwrap();

    let out = provlab(&["run", "--config", "run.json", "--out", "run-out"], root);
    assert_ok(&out);
    assert!(root.join("run-out/report.json").exists());
    assert!(root.join("run-out/report_reduced.json").exists());

    let out = provlab(
        &["sweep-idmap", "--config", "run.json", "--out", "sweep-out"],
        root,
    );
    assert_ok(&out);
    let sweep = fs::read_to_string(root.join("sweep-out/sweep.csv")).unwrap();
    assert_eq!(sweep.lines().count(), 7); // header + six presets
}

#[test]
fn gzip_traces_are_accepted_end_to_end() {
    let dir = tempfile::tempdir().unwrap();
    let root = dir.path();
    let out = provlab(
        &[
            "gen-traces",
            "--seed",
            "7",
            "--scale",
            "1000",
            "--out",
            "traces",
        ],
        root,
    );
    assert_ok(&out);

    // Recompress one day and feed the .gz to build-graph.
    let text = fs::read(root.join("traces/test_01.jsonl")).unwrap();
    let gz = root.join("traces/test_01.jsonl.gz");
    let mut encoder =
        flate2::write::GzEncoder::new(fs::File::create(&gz).unwrap(), Default::default());
    use std::io::Write;
    encoder.write_all(&text).unwrap();
    encoder.finish().unwrap();

    let out = provlab(
        &[
            "build-graph",
            "--trace",
            "traces/test_01.jsonl.gz",
            "--out",
            "graph-gz",
        ],
        root,
    );
    assert_ok(&out);
    let plain = provlab(
        &[
            "build-graph",
            "--trace",
            "traces/test_01.jsonl",
            "--out",
            "graph-plain",
        ],
        root,
    );
    assert_ok(&plain);
    assert_eq!(
        fs::read(root.join("graph-gz/nodes.csv")).unwrap(),
        fs::read(root.join("graph-plain/nodes.csv")).unwrap()
    );
}

#[test]
fn stage_errors_exit_nonzero_with_stage_on_stderr() {
    let dir = tempfile::tempdir().unwrap();
    let root = dir.path();

    // Missing input file.
    let out = provlab(
        &[
            "detect",
            "--train",
            "no-such.jsonl",
            "--test",
            "also-missing.jsonl",
            "--out",
            "detect",
        ],
        root,
    );
    assert!(!out.status.success());
    let stderr = String::from_utf8_lossy(&out.stderr);
    assert!(stderr.contains("stage parse-train"), "{stderr}");

    // Malformed trace line.
    fs::write(root.join("bad.jsonl"), "{not json}\n").unwrap();
    let out = provlab(&["build-graph", "--trace", "bad.jsonl", "--out", "g"], root);
    assert!(!out.status.success());
    let stderr = String::from_utf8_lossy(&out.stderr);
    assert!(
        stderr.contains("stage parse") && stderr.contains("line 1"),
        "{stderr}"
    );

    // Unknown preset.
    let out = provlab(
        &[
            "build-graph",
            "--trace",
            "bad.jsonl",
            "--idmap",
            "idmap7",
            "--out",
            "g",
        ],
        root,
    );
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("idmap7"));
}

#[test]
fn correlate_pairs_mode_with_explicit_outlier_drop() {
    let dir = tempfile::tempdir().unwrap();
    let root = dir.path();
    fs::write(
        root.join("pairs.csv"),
        "x,y\n1.0,2.0\n2.0,4.1\n3.0,5.9\n4.0,8.2\n100.0,0.0\n",
    )
    .unwrap();

    let with_outlier = provlab(
        &["analyze-distance", "--pairs", "pairs.csv", "--out", "corr1"],
        root,
    );
    assert_ok(&with_outlier);

    let dropped = provlab(
        &[
            "analyze-distance",
            "--pairs",
            "pairs.csv",
            "--drop-outlier",
            "4",
            "--out",
            "corr2",
        ],
        root,
    );
    assert_ok(&dropped);
    let r1: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(root.join("corr1/correlation.json")).unwrap())
            .unwrap();
    let r2: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(root.join("corr2/correlation.json")).unwrap())
            .unwrap();
    assert!(r1["r"].as_f64().unwrap() < 0.0);
    assert!(r2["r"].as_f64().unwrap() > 0.99);
}
