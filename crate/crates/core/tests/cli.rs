use std::path::Path;
use std::process::{Command, Output};

fn gpk(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_gpk")).args(args).output().expect("spawn gpk")
}

fn path_str(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn synth_into(dir: &Path, frames: &str) {
    let out = gpk(&["synth", "--frames", frames, "--objects", "6", "--seed", "2", "--out", path_str(dir)]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
}

fn dataset_args(root: &Path) -> Vec<String> {
    ["calib", "label", "denorm"]
        .iter()
        .zip(["--calib", "--labels", "--denorm"])
        .flat_map(|(dir, flag)| [flag.to_string(), root.join(dir).display().to_string()])
        .collect()
}

fn read_json(p: &Path) -> serde_json::Value {
    serde_json::from_slice(&std::fs::read(p).unwrap()).unwrap()
}

#[test]
fn synth_then_gen_maps_from_files() {
    let tmp = tempfile::tempdir().unwrap();
    let data = tmp.path().join("data");
    synth_into(&data, "3");
    let out = tmp.path().join("maps");
    let mut args = vec!["gen-maps".to_string()];
    args.extend(dataset_args(&data));
    args.extend(["--out".into(), out.display().to_string()]);
    let argv: Vec<&str> = args.iter().map(String::as_str).collect();
    let res = gpk(&argv);
    assert!(res.status.success(), "{}", String::from_utf8_lossy(&res.stderr));
    for kind in ["depth", "global", "refined"] {
        for id in ["000000", "000001", "000002"] {
            assert!(out.join(kind).join(format!("{id}.gpkm")).is_file());
        }
    }
    let m = read_json(&out.join("manifest.json"));
    assert_eq!(m["command"], "gen-maps");
    assert_eq!(m["counters"]["frames_processed"], 3);
    assert!(m["metrics"]["max_refined_vs_global_l1"].as_f64().unwrap() < 1e-9);
    assert_eq!(m["inputs"].as_array().unwrap().len(), 3);
}

#[test]
fn missing_inputs_exit_one() {
    let tmp = tempfile::tempdir().unwrap();
    let missing = tmp.path().join("nope");
    let m = path_str(&missing);
    let out = gpk(&["gen-maps", "--calib", m, "--labels", m, "--denorm", m, "--out", path_str(tmp.path())]);
    assert_eq!(out.status.code(), Some(1));
    assert!(!out.stderr.is_empty());
}

#[test]
fn malformed_label_exits_one_and_names_file() {
    let tmp = tempfile::tempdir().unwrap();
    let data = tmp.path().join("data");
    synth_into(&data, "2");
    std::fs::write(data.join("label").join("000001.txt"), "Car 0 0 0.1 1 2 3\n").unwrap();
    let mut args = vec!["stats".to_string()];
    args.extend(dataset_args(&data));
    args.extend(["--out".into(), tmp.path().join("s").display().to_string()]);
    let argv: Vec<&str> = args.iter().map(String::as_str).collect();
    let out = gpk(&argv);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("000001.txt"));
}

#[test]
fn degenerate_plane_exits_two() {
    let tmp = tempfile::tempdir().unwrap();
    let data = tmp.path().join("data");
    synth_into(&data, "1");
    std::fs::write(data.join("denorm").join("000000.txt"), "0 0 0 5\n").unwrap();
    let mut args = vec!["gen-maps".to_string()];
    args.extend(dataset_args(&data));
    args.extend(["--out".into(), tmp.path().join("m").display().to_string()]);
    let argv: Vec<&str> = args.iter().map(String::as_str).collect();
    assert_eq!(gpk(&argv).status.code(), Some(2));
}

#[test]
fn zero_sigma_leaves_scatter_unchanged() {
    let tmp = tempfile::tempdir().unwrap();
    let out = gpk(&["perturb", "--synthetic", "--frames", "4", "--sigma", "0", "--out", path_str(tmp.path())]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let csv = std::fs::read_to_string(tmp.path().join("overlap.csv")).unwrap();
    let rows: Vec<&str> = csv.lines().skip(1).collect();
    assert_eq!(rows.len(), 3);
    for row in rows {
        assert_eq!(row.rsplit(',').next(), Some("1"), "{row}");
    }
    let scatter = std::fs::read_to_string(tmp.path().join("scatter_depth_seed0.csv")).unwrap();
    let clean: Vec<&str> = scatter.lines().filter(|l| l.ends_with(",clean")).map(|l| l.trim_end_matches(",clean")).collect();
    let moved: Vec<&str> =
        scatter.lines().filter(|l| l.ends_with(",perturbed")).map(|l| l.trim_end_matches(",perturbed")).collect();
    assert_eq!(clean, moved);
}

#[test]
fn stats_reports_narrow_attitude() {
    let tmp = tempfile::tempdir().unwrap();
    let out = gpk(&["stats", "--synthetic", "--frames", "10", "--out", path_str(tmp.path())]);
    assert!(out.status.success());
    for q in ["depth", "roll", "pitch", "height"] {
        let csv = std::fs::read_to_string(tmp.path().join(format!("{q}_histogram.csv"))).unwrap();
        assert!(csv.starts_with("bin_lo,bin_hi,count\n"));
        assert!(tmp.path().join(format!("{q}_histogram.svg")).is_file());
    }
    let s = read_json(&tmp.path().join("stats.json"));
    assert!(s["depth_over_pitch_relative_support"].as_f64().unwrap() >= 10.0);
}

#[test]
fn runs_repeat_byte_for_byte() {
    let tmp = tempfile::tempdir().unwrap();
    let (a, b) = (tmp.path().join("a"), tmp.path().join("b"));
    for (dir, jobs) in [(&a, "1"), (&b, "3")] {
        let out = gpk(&["--jobs", jobs, "stats", "--synthetic", "--frames", "6", "--seed", "9", "--out", path_str(dir)]);
        assert!(out.status.success());
    }
    for name in ["depth_histogram.csv", "pitch_histogram.svg", "stats.json"] {
        assert_eq!(std::fs::read(a.join(name)).unwrap(), std::fs::read(b.join(name)).unwrap(), "{name}");
    }
    let (ma, mb) = (read_json(&a.join("manifest.json")), read_json(&b.join("manifest.json")));
    assert_eq!(ma["config_digest"], mb["config_digest"]);
    assert_eq!(ma["outputs"], mb["outputs"]);
}

#[test]
fn config_file_applies_and_flags_win() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = tmp.path().join("run.toml");
    std::fs::write(&cfg, "seed = 3\nframes = 2\nobjects = 4\n").unwrap();
    let out_dir = tmp.path().join("o");
    let out = gpk(&["--config", path_str(&cfg), "synth", "--frames", "3", "--out", path_str(&out_dir)]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let m = read_json(&out_dir.join("manifest.json"));
    assert_eq!(m["seed"], 3);
    assert_eq!(std::fs::read_dir(out_dir.join("label")).unwrap().count(), 3);
    let labels = std::fs::read_to_string(out_dir.join("label").join("000000.txt")).unwrap();
    assert_eq!(labels.lines().count(), 4);

    std::fs::write(&cfg, "sede = 3\n").unwrap();
    let out = gpk(&["--config", path_str(&cfg), "synth", "--out", path_str(&out_dir)]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("sede"));
}

#[test]
fn losses_of_identical_files_are_zero() {
    let tmp = tempfile::tempdir().unwrap();
    let data = tmp.path().join("data");
    synth_into(&data, "1");
    let label = data.join("label").join("000000.txt");
    let calib = data.join("calib").join("000000.txt");
    let out = gpk(&["losses", "--pred", path_str(&label), "--labels", path_str(&label), "--calib", path_str(&calib)]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let stdout = String::from_utf8(out.stdout).unwrap();
    let total = stdout.lines().find_map(|l| l.strip_prefix("total\t")).unwrap();
    assert_eq!(total.parse::<f64>().unwrap(), 0.0);
}

#[test]
fn check_attn_passes_and_fixture_round_trips() {
    let tmp = tempfile::tempdir().unwrap();
    let fixture = tmp.path().join("fixture.json");
    let out = gpk(&["check-attn", "--write-fixture", path_str(&fixture)]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    assert!(!String::from_utf8_lossy(&out.stdout).contains("FAIL"));
    let out = gpk(&["check-attn", "--fixture", path_str(&fixture)]);
    assert!(out.status.success());
    assert!(String::from_utf8_lossy(&out.stdout).contains("PASS fixture"));

    let text = std::fs::read_to_string(&fixture).unwrap();
    let mut v: serde_json::Value = serde_json::from_str(&text).unwrap();
    let digests = v["digests"].as_object_mut().unwrap();
    let key = digests.keys().next().unwrap().clone();
    digests.insert(key, serde_json::json!("0000000000000000"));
    std::fs::write(&fixture, serde_json::to_string(&v).unwrap()).unwrap();
    assert_eq!(gpk(&["check-attn", "--fixture", path_str(&fixture)]).status.code(), Some(1));
}

#[test]
fn unknown_subcommand_is_usage_error() {
    assert_ne!(gpk(&["frobnicate"]).status.code(), Some(0));
}
