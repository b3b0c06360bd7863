//! End-to-end checks against the built binary: exit codes, output files,
//! and determinism.

use std::path::Path;
use std::process::{Command, Output};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_spikes-track"))
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("binary runs")
}

fn stderr_of(out: &Output) -> String {
    String::from_utf8_lossy(&out.stderr).into_owned()
}

/// A small translate scenario specification in JSON form.
fn tiny_spec_json(frames: usize, seed: u64) -> String {
    format!(
        r#"{{
            "name": "tiny",
            "frames": {frames},
            "seed": {seed},
            "frame_size": [160, 120],
            "target_size": [40, 40],
            "target_texture": {{ "dark": [205, 120, 40], "light": [255, 190, 90], "grain": 4 }},
            "background": {{ "style": "noise", "texture": {{ "dark": [40, 60, 95], "light": [90, 115, 150], "grain": 8 }} }},
            "start": [20.0, 40.0],
            "motion": [3.0, 0.0],
            "kind": "translate"
        }}"#
    )
}

fn synth_tiny(dir: &Path, frames: usize) {
    let spec = dir.join("spec.json");
    std::fs::write(&spec, tiny_spec_json(frames, 5)).unwrap();
    let out = run(&[
        "synth",
        spec.to_str().unwrap(),
        "--output",
        dir.join("seq").to_str().unwrap(),
    ]);
    assert!(out.status.success(), "synth failed: {}", stderr_of(&out));
}

#[test]
fn malformed_config_exits_2_naming_field_and_bound() {
    let dir = tempfile::tempdir().unwrap();
    synth_tiny(dir.path(), 3);
    let config = dir.path().join("bad.conf");
    std::fs::write(&config, "color_threshold = 1.5\n").unwrap();
    let out = run(&[
        "track",
        dir.path().join("seq").to_str().unwrap(),
        "--config",
        config.to_str().unwrap(),
        "--output",
        dir.path().join("out").to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(2));
    let err = stderr_of(&out);
    assert!(err.contains("color_threshold"), "stderr: {err}");
    assert!(err.contains("(0, 1)"), "stderr: {err}");
}

#[test]
fn unknown_config_key_exits_2() {
    let dir = tempfile::tempdir().unwrap();
    synth_tiny(dir.path(), 3);
    let config = dir.path().join("bad.conf");
    std::fs::write(&config, "colour = 0.5\n").unwrap();
    let out = run(&[
        "track",
        dir.path().join("seq").to_str().unwrap(),
        "--config",
        config.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr_of(&out).contains("colour"));
}

#[test]
fn empty_sequence_list_exits_2() {
    let dir = tempfile::tempdir().unwrap();
    let list = dir.path().join("list.txt");
    std::fs::write(&list, "# nothing here\n\n").unwrap();
    let out = run(&["eval", list.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn invalid_scenario_kind_exits_2() {
    let dir = tempfile::tempdir().unwrap();
    let spec = dir.path().join("spec.json");
    std::fs::write(
        &spec,
        tiny_spec_json(4, 1).replace("\"kind\": \"translate\"", "\"kind\": \"warp\""),
    )
    .unwrap();
    let out = run(&[
        "synth",
        spec.to_str().unwrap(),
        "--output",
        dir.path().join("seq").to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn synth_is_byte_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    let spec = dir.path().join("spec.json");
    std::fs::write(&spec, tiny_spec_json(4, 9)).unwrap();
    for name in ["a", "b"] {
        let out = run(&[
            "synth",
            spec.to_str().unwrap(),
            "--output",
            dir.path().join(name).to_str().unwrap(),
        ]);
        assert!(out.status.success());
    }
    for name in ["0001.png", "0004.png", "groundtruth_rect.txt"] {
        let a = std::fs::read(dir.path().join("a").join(name)).unwrap();
        let b = std::fs::read(dir.path().join("b").join(name)).unwrap();
        assert_eq!(a, b, "{name} differs");
    }
}

#[test]
fn track_writes_one_row_per_frame_and_runs_without_groundtruth() {
    let dir = tempfile::tempdir().unwrap();
    synth_tiny(dir.path(), 5);
    let seq = dir.path().join("seq");

    // Remove the groundtruth: --init must be enough.
    let gt = std::fs::read_to_string(seq.join("groundtruth_rect.txt")).unwrap();
    let first_line = gt.lines().next().unwrap().to_string();
    std::fs::remove_file(seq.join("groundtruth_rect.txt")).unwrap();

    let out_dir = dir.path().join("out");
    let out = run(&[
        "track",
        seq.to_str().unwrap(),
        "--init",
        &first_line,
        "--output",
        out_dir.to_str().unwrap(),
        "--overlay",
    ]);
    assert!(out.status.success(), "track failed: {}", stderr_of(&out));

    let csv = std::fs::read_to_string(out_dir.join("boxes.csv")).unwrap();
    let lines: Vec<&str> = csv.lines().collect();
    assert_eq!(lines.len(), 1 + 5, "header plus one row per frame");
    assert_eq!(lines[0], "frame,x,y,w,h,occluded,n_matches");
    assert!(out_dir.join("overlay_0001.png").exists());
    assert!(out_dir.join("overlay_0005.png").exists());
}

#[test]
fn eval_oracle_reports_perfect_precision() {
    let dir = tempfile::tempdir().unwrap();
    synth_tiny(dir.path(), 4);
    let list = dir.path().join("list.txt");
    std::fs::write(&list, format!("{}\n", dir.path().join("seq").display())).unwrap();
    let out_dir = dir.path().join("eval");
    let out = run(&[
        "eval",
        list.to_str().unwrap(),
        "--oracle",
        "--svg",
        "--output",
        out_dir.to_str().unwrap(),
    ]);
    assert!(out.status.success(), "eval failed: {}", stderr_of(&out));

    let curves = std::fs::read_to_string(out_dir.join("curves.csv")).unwrap();
    assert_eq!(curves.lines().count(), 1 + 51 + 101);

    let summary = std::fs::read_to_string(out_dir.join("summary.csv")).unwrap();
    let seq_row = summary.lines().find(|l| l.starts_with("seq,")).unwrap();
    assert_eq!(seq_row.split(',').nth(1), Some("1"), "summary: {summary}");
    assert!(summary.lines().any(|l| l.starts_with("pooled,1,")));
    assert!(out_dir.join("precision.svg").exists());
    assert!(out_dir.join("success.svg").exists());
}

#[test]
fn inspect_frame_writes_diagnostics() {
    let dir = tempfile::tempdir().unwrap();
    synth_tiny(dir.path(), 3);
    let out_dir = dir.path().join("inspect");
    let out = run(&[
        "inspect",
        "--frame",
        dir.path().join("seq/0001.png").to_str().unwrap(),
        "--init",
        "20,40,40,40",
        "--output",
        out_dir.to_str().unwrap(),
    ]);
    assert!(out.status.success(), "inspect failed: {}", stderr_of(&out));
    for name in ["overlay.png", "labels.pgm", "spikes.jsonl", "keypoints.csv"] {
        assert!(out_dir.join(name).exists(), "{name} missing");
    }
    let jsonl = std::fs::read_to_string(out_dir.join("spikes.jsonl")).unwrap();
    let first: serde_json::Value = serde_json::from_str(jsonl.lines().next().unwrap()).unwrap();
    assert!(first.get("center").is_some());
}

#[test]
fn occluded_frames_freeze_the_snapshot_and_its_csv() {
    let dir = tempfile::tempdir().unwrap();
    synth_tiny(dir.path(), 3);
    let seq = dir.path().join("seq");

    // Replace frames 2 and 3 with a blank image: no matches, fallback
    // path, model frozen.
    let blank = image::RgbImage::from_pixel(160, 120, image::Rgb([15, 200, 15]));
    blank.save(seq.join("0002.png")).unwrap();
    blank.save(seq.join("0003.png")).unwrap();

    let out_dir = dir.path().join("out");
    let out = run(&[
        "track",
        seq.to_str().unwrap(),
        "--output",
        out_dir.to_str().unwrap(),
        "--snapshots",
    ]);
    assert!(out.status.success(), "track failed: {}", stderr_of(&out));

    let csv = std::fs::read_to_string(out_dir.join("boxes.csv")).unwrap();
    for line in csv.lines().skip(2) {
        assert_eq!(line.split(',').nth(5), Some("1"), "expected occluded: {line}");
    }

    // Snapshot files for the occluded frames are identical.
    let s2 = std::fs::read(out_dir.join("model_0002.json")).unwrap();
    let s3 = std::fs::read(out_dir.join("model_0003.json")).unwrap();
    assert_eq!(s2, s3);

    // And so are the inspect CSVs derived from them.
    for (snap, out_name) in [("model_0002.json", "i2"), ("model_0003.json", "i3")] {
        let out = run(&[
            "inspect",
            "--snapshot",
            out_dir.join(snap).to_str().unwrap(),
            "--output",
            dir.path().join(out_name).to_str().unwrap(),
        ]);
        assert!(out.status.success());
    }
    let c2 = std::fs::read(dir.path().join("i2/model.csv")).unwrap();
    let c3 = std::fs::read(dir.path().join("i3/model.csv")).unwrap();
    assert_eq!(c2, c3);
}

#[test]
fn inspect_requires_exactly_one_input() {
    let out = run(&["inspect"]);
    assert_eq!(out.status.code(), Some(2));
}
