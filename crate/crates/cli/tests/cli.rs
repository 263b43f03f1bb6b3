use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn rollfly(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_rollfly"))
        .args(args)
        .output()
        .expect("run rollfly")
}

fn arg(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn scenario(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../scenarios").join(name)
}

fn fixture(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures").join(name)
}

fn json(path: &Path) -> serde_json::Value {
    serde_json::from_str(&fs::read_to_string(path).unwrap()).unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

#[test]
fn range_curve_writes_csv_sidecar_and_manifest() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("roll.csv");
    let o = rollfly(&[
        "range-curve",
        "--mode",
        "roll",
        "--slope-deg",
        "0",
        "--crr",
        "0.01",
        "--points",
        "30",
        "--out",
        arg(&out),
    ]);
    assert!(o.status.success(), "{}", stderr(&o));

    let text = fs::read_to_string(&out).unwrap();
    let mut lines = text.lines();
    assert_eq!(
        lines.next().unwrap(),
        "v_mps,power_W,range_km,tilt_deg,torque_Nm,thrust_N,feasible"
    );
    assert_eq!(lines.count(), 30);

    let side = json(&dir.path().join("roll.json"));
    let v = side["v_opt_mps"].as_f64().unwrap();
    let r = side["range_opt_km"].as_f64().unwrap();
    assert!(v > 0.0 && r > 0.0);
    assert!(r >= side["grid_range_opt_km"].as_f64().unwrap());

    let m = json(&dir.path().join("roll.manifest.json"));
    assert_eq!(m["command"], "range-curve");
    assert_eq!(m["arguments"]["mode"], "roll");
    assert!(m["timestamp"].is_string() && m["tool_version"].is_string());
    assert!(m["resolved"]["setup"]["vehicle"]["mass"].is_number());
    let outputs = m["outputs"].as_array().unwrap();
    assert_eq!(outputs.len(), 2);
    for rec in outputs {
        assert_eq!(rec["sha256"].as_str().unwrap().len(), 64);
    }
}

#[test]
fn out_of_range_crr_exits_2() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("x.csv");
    let o = rollfly(&[
        "range-curve",
        "--mode",
        "roll",
        "--slope-deg",
        "0",
        "--crr",
        "1.5",
        "--out",
        arg(&out),
    ]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("C_rr out of range"), "{}", stderr(&o));
    assert!(!out.exists());
}

#[test]
fn usage_errors_exit_2() {
    assert_eq!(rollfly(&["range-curve", "--mode", "roll"]).status.code(), Some(2));
    assert_eq!(
        rollfly(&["range-curve", "--mode", "swim", "--slope-deg", "0", "--out", "x"])
            .status
            .code(),
        Some(2)
    );
    assert_eq!(rollfly(&["no-such-command"]).status.code(), Some(2));
    let o = rollfly(&[
        "range-curve",
        "--mode",
        "roll",
        "--slope-deg",
        "0",
        "--v-min",
        "2",
        "--v-max",
        "1",
        "--out",
        "x.csv",
    ]);
    assert_eq!(o.status.code(), Some(2));
    let o = rollfly(&[
        "range-curve",
        "--mode",
        "roll",
        "--slope-deg",
        "0",
        "--preset",
        "titan-table1-fly",
        "--out",
        "x.csv",
    ]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("8 rotors"));
}

#[test]
fn unwritable_output_exits_4() {
    let dir = tempfile::tempdir().unwrap();
    let blocker = dir.path().join("file");
    fs::write(&blocker, "x").unwrap();
    let out = blocker.join("curve.csv");
    let o = rollfly(&[
        "range-curve",
        "--mode",
        "fly",
        "--slope-deg",
        "0",
        "--points",
        "5",
        "--out",
        arg(&out),
    ]);
    assert_eq!(o.status.code(), Some(4), "{}", stderr(&o));
}

#[test]
fn advantage_map_shape() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("map.csv");
    let o = rollfly(&["advantage-map", "--resolution", "3", "--out", arg(&out)]);
    assert!(o.status.success(), "{}", stderr(&o));
    let text = fs::read_to_string(&out).unwrap();
    assert_eq!(text.lines().count(), 9 + 1);
    assert!(
        text.starts_with("slope_deg,crr,rolling_v_mps,rolling_range_km,flying_v_mps,flying_range_km,delta_range_km\n")
    );
    let first: Vec<f64> = text
        .lines()
        .nth(1)
        .unwrap()
        .split(',')
        .map(|x| x.parse().unwrap())
        .collect();
    assert_eq!((first[0], first[1]), (-0.5, 0.01));
    assert!(fs::read_to_string(dir.path().join("map_crossover.csv"))
        .unwrap()
        .starts_with("slope_deg,crr\n"));
}

#[test]
fn degenerate_map_has_one_cell_and_empty_crossover() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("one.csv");
    let o = rollfly(&["advantage-map", "--resolution", "1", "--out", arg(&out)]);
    assert!(o.status.success(), "{}", stderr(&o));
    assert_eq!(fs::read_to_string(&out).unwrap().lines().count(), 2);
    assert_eq!(
        fs::read_to_string(dir.path().join("one_crossover.csv")).unwrap(),
        "slope_deg,crr\n"
    );
}

#[test]
fn advantage_map_rejects_single_mode_preset() {
    let o = rollfly(&[
        "advantage-map",
        "--resolution",
        "2",
        "--preset",
        "titan-table1-roll",
        "--out",
        "m.csv",
    ]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn coverage_values() {
    for (range, area) in [("130", 13_273.228961416877), ("260", 53_092.915_845_667_5), ("0", 0.0)] {
        let o = rollfly(&["coverage", "--range-km", range]);
        assert!(o.status.success());
        let v: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
        assert!((v["area_km2"].as_f64().unwrap() - area).abs() < 1e-6, "{v}");
    }
    let o = rollfly(&["coverage", "--range-km", "-5"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("nonnegative"));
}

#[test]
fn simulate_flat_roll_matches_analysis() {
    let dir = tempfile::tempdir().unwrap();
    let o = rollfly(&[
        "simulate",
        "--config",
        arg(&scenario("flat_roll.json")),
        "--out",
        arg(dir.path()),
    ]);
    assert!(o.status.success(), "{}", stderr(&o));
    let audit = json(&dir.path().join("audit.json"));
    let err = audit["analytic_relative_error"].as_f64().unwrap();
    assert!(err.abs() < 0.02, "{err}");
    assert!(audit["closure_relative"].as_f64().unwrap().abs() < 5e-3);

    let log = fs::read_to_string(dir.path().join("log.csv")).unwrap();
    let header = log.lines().next().unwrap();
    assert!(header.starts_with("time_s,x_m,y_m,z_m,"));
    assert_eq!(header.split(',').count(), 39);

    let m = json(&dir.path().join("manifest.json"));
    assert_eq!(m["command"], "simulate");
    assert!(m["resolved"]["config_text"].as_str().unwrap().contains("flat"));
    assert_eq!(m["inputs"].as_array().unwrap().len(), 1);
}

#[test]
fn replay_reproduces_hashes() {
    let dir = tempfile::tempdir().unwrap();
    let run = dir.path().join("run");
    let o = rollfly(&[
        "simulate",
        "--config",
        arg(&scenario("hills_roll.json")),
        "--out",
        arg(&run),
    ]);
    assert!(o.status.success(), "{}", stderr(&o));
    let again = dir.path().join("again");
    let o = rollfly(&[
        "replay",
        "--manifest",
        arg(&run.join("manifest.json")),
        "--out-dir",
        arg(&again),
    ]);
    assert!(o.status.success(), "{}", stderr(&o));
    for name in ["log.csv", "audit.json"] {
        assert_eq!(
            fs::read(run.join(name)).unwrap(),
            fs::read(again.join(name)).unwrap(),
            "{name}"
        );
    }
    assert_eq!(String::from_utf8_lossy(&o.stdout).matches("match").count(), 2);
}

#[test]
fn replay_of_range_curve_and_tampered_manifest() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("fly.csv");
    let o = rollfly(&[
        "range-curve",
        "--mode",
        "fly",
        "--slope-deg",
        "1",
        "--points",
        "20",
        "--out",
        arg(&out),
    ]);
    assert!(o.status.success(), "{}", stderr(&o));
    let manifest = dir.path().join("fly.manifest.json");
    let o = rollfly(&[
        "replay",
        "--manifest",
        arg(&manifest),
        "--out-dir",
        arg(&dir.path().join("re")),
    ]);
    assert!(o.status.success(), "{}", stderr(&o));

    let mut m = json(&manifest);
    m["outputs"][0]["sha256"] = serde_json::Value::String("0".repeat(64));
    let tampered = dir.path().join("tampered.json");
    fs::write(&tampered, serde_json::to_string(&m).unwrap()).unwrap();
    let o = rollfly(&[
        "replay",
        "--manifest",
        arg(&tampered),
        "--out-dir",
        arg(&dir.path().join("re2")),
    ]);
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stdout).contains("MISMATCH fly.csv"));
}

#[test]
fn simulate_errors_map_to_exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("o");

    let o = rollfly(&[
        "simulate",
        "--config",
        arg(&fixture("fly_too_fast.json")),
        "--out",
        arg(&out),
    ]);
    assert_eq!(o.status.code(), Some(3), "{}", stderr(&o));
    assert!(stderr(&o).contains("tilt"));

    let base = fs::read_to_string(scenario("flat_roll.json")).unwrap();
    let zero = dir.path().join("zero.json");
    fs::write(&zero, base.replace("\"duration_s\": 600.0", "\"duration_s\": 0.0")).unwrap();
    let o = rollfly(&["simulate", "--config", arg(&zero), "--out", arg(&out)]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("duration_s"));

    let typo = dir.path().join("typo.json");
    fs::write(&typo, base.replace("\"speed_mps\": 0.14", "\"speed_mps\": \"fast\"")).unwrap();
    let o = rollfly(&["simulate", "--config", arg(&typo), "--out", arg(&out)]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("segments[0].speed_mps"), "{}", stderr(&o));

    let o = rollfly(&[
        "simulate",
        "--config",
        arg(&dir.path().join("missing.json")),
        "--out",
        arg(&out),
    ]);
    assert_eq!(o.status.code(), Some(4));
}

#[test]
fn calibrate_writes_residuals() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("cal.csv");
    let o = rollfly(&["calibrate", "--steps", "3", "--out", arg(&out)]);
    assert!(o.status.success(), "{}", stderr(&o));
    let text = fs::read_to_string(&out).unwrap();
    assert_eq!(text.lines().count(), 4);
    let summary = json(&dir.path().join("cal.json"));
    assert_eq!(summary["best_disk_radius_m"].as_f64().unwrap(), 0.05);
}
