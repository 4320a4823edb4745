//! End-to-end tests of the `pacekit` binary: command contracts, emitted file
//! schemas, exit codes, and byte-level determinism.

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn bin() -> &'static str {
    env!("CARGO_BIN_EXE_pacekit")
}

fn run(args: &[&str]) -> Output {
    Command::new(bin()).args(args).output().expect("binary runs")
}

fn write_config(dir: &Path, taylor_order: u32, compensator: &str, extra: &str) -> PathBuf {
    let path = dir.join("run.toml");
    let text = format!(
        r#"
[plant]
w_n_max_dollar_per_lambda_min = 13.52
w_n_min_dollar_per_lambda_min = 1.707
t_ps_s = 10.0
t_f_s = 1.5915494309189535
taylor_order = {taylor_order}

{compensator}

[sweep]
f_min_hz = 1e-6
f_max_hz = 5e-2
points = 600

[analysis]
f_traffic_max_hz = 9.3e-5

[sim]
daily_budget_dollar = 387.5
initial_lambda = 0.05
t_as_s = 0.87
noise_frac = 0.05
horizon_s = 86400.0
seed = 42
traffic_resolution_s = 60.0

{extra}
"#
    );
    std::fs::write(&path, text).unwrap();
    path
}

const PI_COMPENSATOR: &str = "[compensator]\nkind = \"pi\"\nk_p = 5e-4\nk_i = 5e-5\n";

#[test]
fn bode_emits_exact_row_count() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), 9, PI_COMPENSATOR, "");
    let out = dir.path().join("bode.csv");
    let r = run(&["bode", "--config", cfg.to_str().unwrap(), "--out", out.to_str().unwrap()]);
    assert!(r.status.success(), "{}", String::from_utf8_lossy(&r.stderr));
    let text = std::fs::read_to_string(&out).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next().unwrap(), "freq_hz,mag_db,phase_deg,aliased");
    let rows: Vec<&str> = lines.collect();
    assert_eq!(rows.len(), 600);
    // all emitted floats parse back losslessly
    for row in &rows {
        for field in row.split(',').take(3) {
            let v: f64 = field.parse().unwrap();
            assert_eq!(v.to_string(), *field);
        }
    }
    // sweep stays below Nyquist here, so nothing is flagged aliased
    assert!(rows.iter().all(|r| r.ends_with(",0")));

    // a sweep reaching past Nyquist flags the upper rows aliased
    let cfg2 = dir.path().join("wide.toml");
    let wide = std::fs::read_to_string(&cfg)
        .unwrap()
        .replace("f_max_hz = 5e-2", "f_max_hz = 2e-1");
    std::fs::write(&cfg2, wide).unwrap();
    let out_wide = dir.path().join("wide.csv");
    let r = run(&["bode", "--config", cfg2.to_str().unwrap(), "--out", out_wide.to_str().unwrap()]);
    assert!(r.status.success());
    let wide_text = std::fs::read_to_string(&out_wide).unwrap();
    let flags: Vec<bool> = wide_text
        .lines()
        .skip(1)
        .map(|l| {
            let f: Vec<&str> = l.split(',').collect();
            (f[0].parse::<f64>().unwrap() > 0.05, f[3] == "1")
        })
        .map(|(above, flagged)| above == flagged)
        .collect();
    assert!(flags.iter().all(|&ok| ok), "aliased flag must track f > Nyquist");

    // json format emits the same rows as objects
    let out_json = dir.path().join("bode.json");
    let r = run(&[
        "bode",
        "--config",
        cfg.to_str().unwrap(),
        "--out",
        out_json.to_str().unwrap(),
        "--format",
        "json",
    ]);
    assert!(r.status.success());
    let v: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(&out_json).unwrap()).unwrap();
    assert_eq!(v.as_array().unwrap().len(), 600);
}

#[test]
fn bode_uncompensated_plant_margins_negative() {
    // uncompensated plant with a fast sensing filter, no compensator section
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("plant.toml");
    std::fs::write(
        &path,
        r#"
[plant]
w_n_max_dollar_per_lambda_min = 13.52
w_n_min_dollar_per_lambda_min = 1.707
t_ps_s = 10.0
t_f_s = 0.3183098861837907
taylor_order = 20
"#,
    )
    .unwrap();
    let r = run(&["margins", "--config", path.to_str().unwrap()]);
    assert!(r.status.success());
    let v: serde_json::Value = serde_json::from_slice(&r.stdout).unwrap();
    assert!(v["gm_db"].as_f64().unwrap() < 0.0);
    assert!(v["pm_deg"].as_f64().unwrap() < 0.0);
}

#[test]
fn margins_match_grid_anchor_and_are_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), 9, PI_COMPENSATOR, "");
    let a = run(&["margins", "--config", cfg.to_str().unwrap()]);
    assert!(a.status.success());
    let v: serde_json::Value = serde_json::from_slice(&a.stdout).unwrap();
    let expected_keys = [
        "gm_db",
        "pm_deg",
        "cog_db",
        "clbw_hz",
        "gain_crossover_hz",
        "phase_crossover_hz",
        "nyquist_hz",
    ];
    assert_eq!(v.as_object().unwrap().len(), expected_keys.len());
    let raw = String::from_utf8(a.stdout.clone()).unwrap();
    let mut last = 0;
    for key in expected_keys {
        let pos = raw.find(&format!("\"{key}\"")).unwrap_or_else(|| panic!("missing key {key}"));
        assert!(pos > last, "key {key} out of order");
        last = pos;
    }
    assert!((v["gm_db"].as_f64().unwrap() - 37.33).abs() < 0.05);
    assert!((v["pm_deg"].as_f64().unwrap() - 91.32).abs() < 0.05);
    assert!((v["nyquist_hz"].as_f64().unwrap() - 0.05).abs() < 1e-12);
    let b = run(&["margins", "--config", cfg.to_str().unwrap()]);
    assert_eq!(a.stdout, b.stdout, "reruns must be byte-identical");
}

#[test]
fn gridsearch_emits_table_rows_and_feasibility() {
    let dir = tempfile::tempdir().unwrap();
    let grid = r#"
[gridsearch]
k_p_set = [5e-2, 5e-3, 5e-4]
k_i_set = [5e-3, 5e-4, 5e-5]

[[gridsearch.zero_pole]]
k_c = 1.0
zeros_rad_s = [1e-1]
poles_rad_s = [1e-4, 1e-3]

[[gridsearch.zero_pole]]
k_c = 1.0
zeros_rad_s = [1e-1]
poles_rad_s = [1e-4]

[[gridsearch.zero_pole]]
k_c = 1.0
zeros_rad_s = [1e-1]
poles_rad_s = [1e-3]
"#;
    let cfg = write_config(dir.path(), 9, PI_COMPENSATOR, grid);
    let out = dir.path().join("grid.csv");
    let r = run(&["gridsearch", "--config", cfg.to_str().unwrap(), "--out", out.to_str().unwrap()]);
    assert!(r.status.success(), "{}", String::from_utf8_lossy(&r.stderr));
    let text = std::fs::read_to_string(&out).unwrap();
    let rows: Vec<&str> = text.lines().skip(1).filter(|l| !l.is_empty()).collect();
    assert_eq!(rows.len(), 12, "9 PI cells + 3 zero-pole rows");
    for row in rows {
        let f: Vec<&str> = row.split(',').collect();
        let gm_max: f64 = f[6].parse().unwrap();
        let pm_max: f64 = f[7].parse().unwrap();
        let feasible: u8 = f[14].parse().unwrap();
        assert_eq!(feasible == 1, gm_max > 0.0 && pm_max > 0.0, "row {row}");
    }
}

#[test]
fn gridsearch_empty_ki_set_is_usage_error() {
    let dir = tempfile::tempdir().unwrap();
    let grid = "[gridsearch]\nk_p_set = [5e-2]\nk_i_set = []\n";
    let cfg = write_config(dir.path(), 9, PI_COMPENSATOR, grid);
    let out = dir.path().join("grid.csv");
    let r = run(&["gridsearch", "--config", cfg.to_str().unwrap(), "--out", out.to_str().unwrap()]);
    assert_eq!(r.status.code(), Some(2));
    assert!(!out.exists(), "no file may be written on usage error");
}

#[test]
fn simulate_trace_rows_and_byte_identical_reruns() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), 9, PI_COMPENSATOR, "");
    let out1 = dir.path().join("run1");
    let out2 = dir.path().join("run2");
    for out in [&out1, &out2] {
        let r = run(&["simulate", "--config", cfg.to_str().unwrap(), "--out", out.to_str().unwrap()]);
        assert!(r.status.success(), "{}", String::from_utf8_lossy(&r.stderr));
    }
    let t1 = std::fs::read(out1.join("trace.csv")).unwrap();
    let t2 = std::fs::read(out2.join("trace.csv")).unwrap();
    assert_eq!(t1, t2, "same seed, same bytes");
    assert_eq!(
        std::fs::read(out1.join("report.json")).unwrap(),
        std::fs::read(out2.join("report.json")).unwrap()
    );
    let text = String::from_utf8(t1).unwrap();
    let rows = text.lines().skip(1).count();
    assert_eq!(rows, 8640, "one row per pacing cycle over the day");
    // every emitted float parses back losslessly
    for row in text.lines().skip(1).take(50) {
        for field in row.split(',') {
            let v: f64 = field.parse().unwrap();
            assert_eq!(v.to_string(), field);
        }
    }
    let report: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(out1.join("report.json")).unwrap()).unwrap();
    assert!(report["pe"].as_f64().unwrap() >= 0.0);
    assert!(report["swpe"].as_f64().is_some());
    assert!(report["cohorts"].as_array().unwrap().len() == 1);
}

#[test]
fn simulate_seed_flag_changes_output() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), 9, PI_COMPENSATOR, "");
    let out1 = dir.path().join("a");
    let out2 = dir.path().join("b");
    run(&["simulate", "--config", cfg.to_str().unwrap(), "--out", out1.to_str().unwrap()]);
    run(&[
        "simulate",
        "--config",
        cfg.to_str().unwrap(),
        "--out",
        out2.to_str().unwrap(),
        "--seed",
        "7",
    ]);
    assert_ne!(
        std::fs::read(out1.join("trace.csv")).unwrap(),
        std::fs::read(out2.join("trace.csv")).unwrap()
    );
}

#[test]
fn simulate_compare_baseline_writes_both() {
    let dir = tempfile::tempdir().unwrap();
    let cohorts = r#"
[[sim.cohorts]]
daily_budget_dollar = 387.5
initial_lambda = 0.05

[[sim.cohorts]]
daily_budget_dollar = 250.0
initial_lambda = 0.2
"#;
    let cfg = write_config(dir.path(), 9, PI_COMPENSATOR, cohorts);
    let out = dir.path().join("cmp");
    let r = run(&[
        "simulate",
        "--config",
        cfg.to_str().unwrap(),
        "--out",
        out.to_str().unwrap(),
        "--compare-baseline",
    ]);
    assert!(r.status.success(), "{}", String::from_utf8_lossy(&r.stderr));
    for name in [
        "trace_cohort0.csv",
        "trace_cohort1.csv",
        "trace_baseline_cohort0.csv",
        "trace_baseline_cohort1.csv",
    ] {
        assert!(out.join(name).is_file(), "{name} missing");
    }
    let report: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(out.join("report.json")).unwrap()).unwrap();
    let comp = report["compensated"]["pe"].as_f64().unwrap();
    let base = report["baseline"]["pe"].as_f64().unwrap();
    assert!(comp < base, "compensated PE {comp} must beat baseline {base}");
    let weights: f64 = report["compensated"]["cohorts"]
        .as_array()
        .unwrap()
        .iter()
        .map(|c| c["weight"].as_f64().unwrap())
        .sum();
    assert!((weights - 1.0).abs() < 1e-9);
}

#[test]
fn fft_reports_spectral_ceiling() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), 9, PI_COMPENSATOR, "");
    let out = dir.path().join("spectrum.csv");
    let r = run(&["fft", "--config", cfg.to_str().unwrap(), "--out", out.to_str().unwrap()]);
    assert!(r.status.success(), "{}", String::from_utf8_lossy(&r.stderr));
    let stdout: serde_json::Value = serde_json::from_slice(&r.stdout).unwrap();
    let got = stdout["max_significant_hz"].as_f64().unwrap();
    assert!((got - 9.3e-5).abs() <= 1.0 / 86400.0);
    let text = std::fs::read_to_string(&out).unwrap();
    assert_eq!(text.lines().next().unwrap(), "freq_hz,magnitude");
    assert_eq!(text.lines().count() - 1, 720);
}

#[test]
fn fft_accepts_irregular_sample_stream() {
    let dir = tempfile::tempdir().unwrap();
    // 2000 samples, nominally 45 s apart with a jittered middle section
    let mut csv = String::from("timestamp_s,spend_velocity\n");
    let mut t = 0.0;
    for k in 0..2000 {
        let dt = if k % 7 == 3 { 52.0 } else { 45.0 };
        t += dt;
        let v = 2.0 + (2.0 * std::f64::consts::PI * t / 86400.0).sin();
        csv.push_str(&format!("{t},{v}\n"));
    }
    let stream = dir.path().join("stream.csv");
    std::fs::write(&stream, csv).unwrap();
    let out = dir.path().join("spec.csv");
    let r = run(&["fft", "--traffic", stream.to_str().unwrap(), "--out", out.to_str().unwrap()]);
    assert!(r.status.success(), "{}", String::from_utf8_lossy(&r.stderr));
    let stdout: serde_json::Value = serde_json::from_slice(&r.stdout).unwrap();
    assert!(stdout["max_significant_hz"].as_f64().unwrap() > 0.0);
}

#[test]
fn fft_rejects_non_uniform_traffic_schema() {
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.csv");
    std::fs::write(&bad, "time_s,intensity\n0,1\n60,1\n180,1\n240,1\n").unwrap();
    let out = dir.path().join("spec.csv");
    let r = run(&["fft", "--traffic", bad.to_str().unwrap(), "--out", out.to_str().unwrap()]);
    assert_eq!(r.status.code(), Some(3), "non-uniform curve is a numerical error");
}

#[test]
fn discretize_emits_coefficients_json() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), 9, PI_COMPENSATOR, "");
    let r = run(&["discretize", "--config", cfg.to_str().unwrap()]);
    assert!(r.status.success());
    let v: serde_json::Value = serde_json::from_slice(&r.stdout).unwrap();
    assert_eq!(v["t_z"].as_f64().unwrap(), 10.0);
    // PI via Tustin at T_z: y[k] = y[k-1] + (Kp + Ki*T/2) u[k] - (Kp - Ki*T/2) u[k-1]
    let a = v["a"].as_array().unwrap();
    let b = v["b"].as_array().unwrap();
    assert_eq!(a.len(), 1);
    assert!((a[0].as_f64().unwrap() - 1.0).abs() < 1e-12);
    assert!((b[0].as_f64().unwrap() - (5e-4 + 5e-5 * 5.0)).abs() < 1e-15);
    assert!((b[1].as_f64().unwrap() - (-(5e-4 - 5e-5 * 5.0))).abs() < 1e-15);
}

#[test]
fn margins_report_null_when_no_phase_crossover() {
    // the default-order hold approximation has no -180 crossing for this
    // loop, so the gain margin is absent (null = infinite margin)
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), 10, PI_COMPENSATOR, "");
    let r = run(&["margins", "--config", cfg.to_str().unwrap()]);
    assert!(r.status.success());
    let v: serde_json::Value = serde_json::from_slice(&r.stdout).unwrap();
    assert!(v["gm_db"].is_null());
    assert!(v["phase_crossover_hz"].is_null());
    assert!((v["pm_deg"].as_f64().unwrap() - 91.32).abs() < 0.05);
}

#[test]
fn discretize_rejects_derivative_action() {
    let dir = tempfile::tempdir().unwrap();
    let pid = "[compensator]\nkind = \"pi\"\nk_p = 5e-4\nk_i = 5e-5\nk_d = 1.0\n";
    let cfg = write_config(dir.path(), 9, pid, "");
    let r = run(&["discretize", "--config", cfg.to_str().unwrap()]);
    assert_eq!(r.status.code(), Some(3));
}

#[test]
fn missing_config_is_usage_error() {
    let r = run(&["margins"]);
    assert_eq!(r.status.code(), Some(2));
    let r = run(&["margins", "--config", "/nonexistent/x.toml"]);
    assert_eq!(r.status.code(), Some(2));
}

#[test]
fn config_referencing_missing_traffic_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let extra = "";
    let cfg = write_config(dir.path(), 9, PI_COMPENSATOR, extra);
    let mut text = std::fs::read_to_string(&cfg).unwrap();
    text = text.replace("traffic_resolution_s = 60.0", "traffic_resolution_s = 60.0\ntraffic_csv = \"missing.csv\"");
    std::fs::write(&cfg, text).unwrap();
    let out = dir.path().join("x");
    let r = run(&["simulate", "--config", cfg.to_str().unwrap(), "--out", out.to_str().unwrap()]);
    assert_eq!(r.status.code(), Some(2));
}
