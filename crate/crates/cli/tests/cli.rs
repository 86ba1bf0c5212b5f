use std::path::Path;
use std::process::{Command, Output};

use tsprobe_core::{compute_features, load_jsonl, stl_decompose, StlConfig};

fn tsprobe(args: &[&str], dir: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_tsprobe"))
        .args(args)
        .current_dir(dir)
        .output()
        .expect("binary runs")
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn synth(dir: &Path, name: &str) {
    let o = tsprobe(&["synth", "--n", "10", "--T", "96", "--sp", "24", "--seed", "7", "--out", name], dir);
    assert!(o.status.success(), "{}", stderr(&o));
}

#[test]
fn missing_input_exits_2_naming_the_path() {
    let dir = tempfile::tempdir().unwrap();
    let o = tsprobe(&["features", "--input", "missing.jsonl"], dir.path());
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("missing.jsonl"), "{}", stderr(&o));
}

#[test]
fn unknown_verb_exits_1_with_usage() {
    let dir = tempfile::tempdir().unwrap();
    let o = tsprobe(&["frobnicate"], dir.path());
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("Usage"), "{}", stderr(&o));
}

#[test]
fn every_verb_has_help() {
    let dir = tempfile::tempdir().unwrap();
    for verb in ["synth", "decompose", "features", "pca", "transform", "train", "evaluate", "experiment", "serve"] {
        let o = tsprobe(&[verb, "--help"], dir.path());
        assert_eq!(o.status.code(), Some(0), "{verb}");
        assert!(String::from_utf8_lossy(&o.stdout).contains("Usage"), "{verb}");
    }
}

#[test]
fn synth_is_byte_identical_across_runs() {
    let dir = tempfile::tempdir().unwrap();
    synth(dir.path(), "a.jsonl");
    synth(dir.path(), "b.jsonl");
    let stdout = tsprobe(&["synth", "--n", "10", "--T", "96", "--sp", "24", "--seed", "7"], dir.path());
    let a = std::fs::read(dir.path().join("a.jsonl")).unwrap();
    assert_eq!(a, std::fs::read(dir.path().join("b.jsonl")).unwrap());
    assert_eq!(a, stdout.stdout);
    assert_eq!(a.iter().filter(|&&b| b == b'\n').count(), 20);

    let other = tsprobe(&["synth", "--n", "10", "--T", "96", "--sp", "24", "--seed", "8"], dir.path());
    assert_ne!(a, other.stdout);
}

#[test]
fn features_csv_matches_library_values() {
    let dir = tempfile::tempdir().unwrap();
    synth(dir.path(), "ds.jsonl");
    let o = tsprobe(&["features", "--input", "ds.jsonl", "--out", "f.csv"], dir.path());
    assert!(o.status.success(), "{}", stderr(&o));

    let ds = load_jsonl(dir.path().join("ds.jsonl"), 1, 1, 24).unwrap();
    let text = std::fs::read_to_string(dir.path().join("f.csv")).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("id,split,F1,F2,F3,F4"));
    let rows: Vec<Vec<&str>> = lines.map(|l| l.split(',').collect()).collect();
    assert_eq!(rows.len(), 20);
    for ((split, s), row) in ds.iter_tagged().zip(&rows) {
        assert_eq!(row[0], s.id());
        assert_eq!(row[1], split.as_str());
        let want = compute_features(&stl_decompose(s, &StlConfig::default()).unwrap()).to_array();
        for (cell, w) in row[2..].iter().zip(want) {
            assert_eq!(cell.parse::<f64>().unwrap(), w, "{}", s.id());
        }
    }

    let o = tsprobe(&["pca", "--features", "f.csv", "--out", "space.json"], dir.path());
    assert!(o.status.success(), "{}", stderr(&o));
    let space: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(dir.path().join("space.json")).unwrap()).unwrap();
    assert_eq!(space["points"].as_array().unwrap().len(), 20);
    for key in ["means", "stds", "basis", "eigenvalues"] {
        assert!(space.get(key).is_some(), "{key}");
    }
}

#[test]
fn decompose_emits_components_that_sum_to_the_series() {
    let dir = tempfile::tempdir().unwrap();
    synth(dir.path(), "ds.jsonl");
    let o = tsprobe(&["decompose", "--input", "ds.jsonl", "--id", "t0003", "--out", "d.json"], dir.path());
    assert!(o.status.success(), "{}", stderr(&o));
    let d: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(dir.path().join("d.json")).unwrap()).unwrap();
    assert_eq!(d["split"], "test");
    let get = |k: &str| -> Vec<f64> { d[k].as_array().unwrap().iter().map(|v| v.as_f64().unwrap()).collect() };
    let (t, s, r) = (get("trend"), get("seasonal"), get("remainder"));
    let ds = load_jsonl(dir.path().join("ds.jsonl"), 1, 1, 24).unwrap();
    let x = ds.find(tsprobe_core::Split::Test, "t0003").unwrap().values();
    assert_eq!(t.len(), x.len());
    for i in 0..x.len() {
        let tol = f64::EPSILON * (t[i] + s[i]).abs().max(r[i].abs()).max(x[i].abs());
        assert!(((t[i] + s[i]) + r[i] - x[i]).abs() <= tol, "index {i}");
    }

    let o = tsprobe(&["decompose", "--input", "ds.jsonl", "--id", "nope"], dir.path());
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn transform_writes_generated_series_and_rejects_bad_intervals() {
    let dir = tempfile::tempdir().unwrap();
    synth(dir.path(), "ds.jsonl");
    std::fs::write(
        dir.path().join("p.json"),
        r#"[{"kind":"translate","params":{"c":5.0},"interval":[49,96]}]"#,
    )
    .unwrap();
    let o = tsprobe(&["transform", "--input", "ds.jsonl", "--pipeline", "p.json", "--out", "gen.jsonl"], dir.path());
    assert!(o.status.success(), "{}", stderr(&o));
    let before = load_jsonl(dir.path().join("ds.jsonl"), 1, 1, 24).unwrap();
    let after = load_jsonl(dir.path().join("gen.jsonl"), 1, 1, 24).unwrap();
    assert_eq!(after.train().len(), 10);
    for ((_, a), (_, b)) in before.iter_tagged().zip(after.iter_tagged()) {
        assert_eq!(a.id(), b.id());
        assert_eq!(a.values()[..48], b.values()[..48]);
        for (x, y) in a.values()[48..].iter().zip(&b.values()[48..]) {
            assert!((y - x - 5.0).abs() <= 1e-12 * x.abs().max(1.0));
        }
    }

    std::fs::write(
        dir.path().join("bad.json"),
        r#"[{"kind":"seasonal","params":{"k":2.0}},{"kind":"translate","params":{"c":1.0},"interval":[50,10]}]"#,
    )
    .unwrap();
    let o = tsprobe(&["transform", "--input", "ds.jsonl", "--pipeline", "bad.json", "--out", "gen2.jsonl"], dir.path());
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("step 1"), "{}", stderr(&o));
    assert!(!dir.path().join("gen2.jsonl").exists());
}

#[test]
fn noise_seed_flag_changes_noise_deterministically() {
    let dir = tempfile::tempdir().unwrap();
    synth(dir.path(), "ds.jsonl");
    std::fs::write(
        dir.path().join("p.json"),
        r#"[{"kind":"noise","params":{"p":0.5,"sigma_rel":0.2},"seed":1}]"#,
    )
    .unwrap();
    let run = |seed: &str, out: &str| {
        let o = tsprobe(
            &["transform", "--input", "ds.jsonl", "--pipeline", "p.json", "--seed", seed, "--out", out],
            dir.path(),
        );
        assert!(o.status.success(), "{}", stderr(&o));
        std::fs::read(dir.path().join(out)).unwrap()
    };
    assert_eq!(run("3", "a.jsonl"), run("3", "b.jsonl"));
    assert_ne!(run("3", "a.jsonl"), run("4", "c.jsonl"));
}

#[test]
fn seasonal_naive_checkpoint_evaluates() {
    let dir = tempfile::tempdir().unwrap();
    let o = tsprobe(
        &["synth", "--n", "4", "--T", "240", "--sp", "24", "--seed", "2", "--context", "168", "--out", "ds.jsonl"],
        dir.path(),
    );
    assert!(o.status.success(), "{}", stderr(&o));
    let o = tsprobe(&["train", "--dataset", "ds.jsonl", "--kind", "seasonal-naive", "--out", "sn.json"], dir.path());
    assert!(o.status.success(), "{}", stderr(&o));
    let o = tsprobe(
        &["evaluate", "--dataset", "ds.jsonl", "--model", "sn.json", "--metric", "smape", "--out", "e.json"],
        dir.path(),
    );
    assert!(o.status.success(), "{}", stderr(&o));
    let e: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(dir.path().join("e.json")).unwrap()).unwrap();
    assert_eq!(e["model"], "seasonal_naive");
    assert_eq!(e["metric"], "smape");
    assert_eq!(e["series"].as_array().unwrap().len(), 4);

    let o = tsprobe(&["evaluate", "--dataset", "ds.jsonl", "--model", "sn.json", "--metric", "rmse"], dir.path());
    assert_eq!(o.status.code(), Some(1));
}
