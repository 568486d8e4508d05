use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn bin() -> Command {
    let mut c = Command::new(env!("CARGO_BIN_EXE_rfadapt"));
    c.env_remove("RFADAPT_DATA");
    c
}

fn core_data() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../core/data")
}

fn scenario(stem: &str) -> PathBuf {
    core_data().join("scenarios").join(format!("{stem}.json"))
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn error_json(o: &Output) -> serde_json::Value {
    let err = String::from_utf8_lossy(&o.stderr);
    serde_json::from_str(err.trim()).unwrap_or_else(|e| panic!("stderr is not JSON ({e}): {err}"))
}

#[test]
fn run_writes_trace_summary_and_manifest() {
    let d = tempfile::tempdir().unwrap();
    let o = bin().args(["run", "--scenario"]).arg(scenario("fig17a")).arg("--out").arg(d.path()).output().unwrap();
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    for f in ["fig17a.trace.csv", "fig17a.summary.json", "fig17a.manifest.json"] {
        assert!(d.path().join(f).exists(), "{f}");
    }
    let summary: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(d.path().join("fig17a.summary.json")).unwrap()).unwrap();
    let eps = summary["episodes"].as_array().unwrap();
    let appear: Vec<f64> = eps
        .iter()
        .filter(|e| e["kind"] == "Appearance")
        .map(|e| e["adaptation_time_us"].as_f64().unwrap())
        .collect();
    let mean = appear.iter().sum::<f64>() / appear.len() as f64;
    assert!((mean - 580.0).abs() <= 0.25 * 580.0, "mean appearance {mean}");
}

#[test]
fn same_seed_gives_identical_bytes() {
    let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    for d in [&a, &b] {
        let o = bin()
            .args(["run", "--seed", "7", "--scenario"])
            .arg(scenario("fig17b"))
            .arg("--out")
            .arg(d.path())
            .output()
            .unwrap();
        assert!(o.status.success());
    }
    for f in ["fig17b.trace.csv", "fig17b.summary.json", "fig17b.manifest.json"] {
        assert_eq!(std::fs::read(a.path().join(f)).unwrap(), std::fs::read(b.path().join(f)).unwrap(), "{f}");
    }
}

#[test]
fn missing_scenario_is_exit_2_with_error_json() {
    let o = bin().args(["run", "--scenario", "/definitely/not/here.json"]).output().unwrap();
    assert_eq!(o.status.code(), Some(2));
    assert_eq!(error_json(&o)["error"]["kind"], "IoError");
}

#[test]
fn missing_characterization_file_is_exit_2() {
    let d = tempfile::tempdir().unwrap();
    for f in ["ed1.csv", "ed2.csv", "coupler.csv"] {
        std::fs::copy(core_data().join(f), d.path().join(f)).unwrap();
    }
    let o = bin().arg("--data").arg(d.path()).args(["figs", "fig17a", "--out"]).arg(d.path()).output().unwrap();
    assert_eq!(o.status.code(), Some(2));
    let e = error_json(&o);
    assert_eq!(e["error"]["kind"], "IoError");
    assert!(e["error"]["message"].as_str().unwrap().contains("lna_3ghz.csv"));
}

#[test]
fn env_var_selects_data_dir() {
    let d = tempfile::tempdir().unwrap();
    let o = bin().env("RFADAPT_DATA", d.path()).args(["figs", "fig14", "--out"]).arg(d.path()).output().unwrap();
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn unknown_figure_is_a_parse_error() {
    let o = bin().args(["figs", "fig99"]).output().unwrap();
    assert_eq!(o.status.code(), Some(2));
    assert_eq!(error_json(&o)["error"]["kind"], "ParseError");
}

#[test]
fn fig14_and_fig15_emit_csv() {
    let d = tempfile::tempdir().unwrap();
    for id in ["fig14", "fig15"] {
        let o = bin().args(["figs", id, "--out"]).arg(d.path()).output().unwrap();
        assert!(o.status.success(), "{id}: {}", String::from_utf8_lossy(&o.stderr));
    }
    let k6 = std::fs::read_to_string(d.path().join("fig14_k0.6.csv")).unwrap();
    assert!(k6.starts_with("t_us,value\n"));
    let last: f64 = k6.lines().last().unwrap().split(',').nth(1).unwrap().parse().unwrap();
    assert!((last - 1.0).abs() < 0.02, "step response ends at {last}");
    let sweep = std::fs::read_to_string(d.path().join("fig15.csv")).unwrap();
    assert!(sweep.starts_with("ts_us,t_adapt_us,feasible\n"));
    let m: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(d.path().join("fig15.manifest.json")).unwrap()).unwrap();
    assert!(m["results"]["fit"]["r2"].as_f64().unwrap() > 0.99);
    assert_eq!(m["files"][0]["path"], "fig15.csv");
}

#[test]
fn figure_alias_writes_canonical_id() {
    let d = tempfile::tempdir().unwrap();
    let o = bin().args(["figs", "fig12", "--out"]).arg(d.path()).output().unwrap();
    assert!(o.status.success());
    assert!(d.path().join("fig19.csv").exists());
}

#[test]
fn validate_reports_named_failures_and_exits_zero() {
    let d = tempfile::tempdir().unwrap();
    let text = std::fs::read_to_string(core_data().join("lna_3ghz.csv")).unwrap();
    // Swap the P1dB of two biases so the column is no longer monotone.
    let mut lines: Vec<String> = text.lines().map(str::to_string).collect();
    let header: Vec<&str> = lines[0].split(',').collect();
    let col = header.iter().position(|h| h.trim() == "p1db_in_dbm").expect("p1db column");
    // Every drain-voltage row of a bias carries the same P1dB, so swap them all.
    let p1db = |vg: &str| {
        let l = lines.iter().find(|l| l.starts_with(&format!("3,{vg},"))).expect("3 GHz row");
        l.split(',').nth(col).unwrap().to_string()
    };
    let (lo, hi) = (p1db("-2.7"), p1db("-2.1"));
    for l in &mut lines {
        for (vg, v) in [("-2.7", &hi), ("-2.1", &lo)] {
            if l.starts_with(&format!("3,{vg},")) {
                let mut f: Vec<String> = l.split(',').map(str::to_string).collect();
                f[col] = v.clone();
                *l = f.join(",");
            }
        }
    }
    let tampered = d.path().join("lna_3ghz.csv");
    std::fs::write(&tampered, lines.join("\n") + "\n").unwrap();
    let empty = d.path().join("ed_empty.csv");
    std::fs::write(&empty, "").unwrap();

    let o = bin().arg("validate").arg(&tampered).arg(&empty).output().unwrap();
    assert_eq!(o.status.code(), Some(0));
    let out = stdout(&o);
    assert!(out.lines().any(|l| l.starts_with("FAIL") && l.contains("p1db") && l.contains("monoton")), "{out}");
    assert!(out.lines().any(|l| l.starts_with("FAIL") && l.contains("ed_empty.csv") && l.contains("ParseError")), "{out}");
}

#[test]
fn validate_bundled_data_passes() {
    let o = bin().arg("validate").output().unwrap();
    assert!(o.status.success());
    let out = stdout(&o);
    assert!(!out.lines().any(|l| l.starts_with("FAIL")), "{out}");
    assert!(out.trim_end().ends_with("0 failed"));
}

#[test]
fn sweep_writes_one_trace_per_point() {
    let d = tempfile::tempdir().unwrap();
    let o = bin().args(["sweep", "--method", "lut", "--powers=-12,-6,0", "--out"]).arg(d.path()).output().unwrap();
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let csv = std::fs::read_to_string(d.path().join("sweep.csv")).unwrap();
    assert_eq!(csv.lines().count(), 4);
    for l in csv.lines().skip(1) {
        let f: Vec<&str> = l.split(',').collect();
        assert_eq!(f[1], f[2], "LUT at the calibration frequency settles on the expected bias: {l}");
    }
    assert_eq!(std::fs::read_dir(d.path().join("points")).unwrap().count(), 3);
}

#[test]
fn loop_reports_settling() {
    let d = tempfile::tempdir().unwrap();
    let o = bin().args(["loop", "--k", "0.6", "--out"]).arg(d.path()).output().unwrap();
    assert!(o.status.success());
    let v: serde_json::Value = serde_json::from_str(stdout(&o).trim()).unwrap();
    let t = v["settling_time_us"].as_f64().unwrap();
    assert!((t - 436.0).abs() <= 0.2 * 436.0, "{t}");
    assert!(d.path().join("loop_sweep.csv").exists());
}
