use std::path::Path;
use std::process::{Command, Output};

const BIN: &str = env!("CARGO_BIN_EXE_abwave");

const SMALL: &str = r#"
name = "small"
mode = "path_integral_1d"

[flux]
alpha = 0.25

[beam]
kinetic_energy_ev = 60000.0
beta = 50e-9

[grid]
n = 2048
extent = 2e-6
target_n = 2001
target_half_angle = 100.0

[outputs]
display_half_angle = 4.0
"#;

fn abwave(args: &[&str]) -> Output {
    Command::new(BIN).args(args).output().expect("binary runs")
}

fn write(dir: &Path, name: &str, text: &str) -> String {
    let p = dir.join(name);
    std::fs::write(&p, text).unwrap();
    p.to_string_lossy().into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

#[test]
fn run_writes_csv_svg_and_manifest() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "small.toml", SMALL);
    let out = dir.path().join("out");
    let o = abwave(&["run", &cfg, "--out", out.to_str().unwrap()]);
    assert!(o.status.success(), "{}", stderr(&o));

    let csv = std::fs::read_to_string(out.join("small.csv")).unwrap();
    let header = csv.lines().next().unwrap();
    assert_eq!(header, "theta(rad),w_theta(1),I_analytic(peak=1),I_pathintegral(peak=1)");
    assert!(std::fs::read_to_string(out.join("small.svg")).unwrap().starts_with("<svg"));

    let manifest: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(out.join("small.json")).unwrap()).unwrap();
    assert_eq!(manifest["conventions"]["kernel_phase_factor"], "two_pi");
    assert_eq!(manifest["files"].as_array().unwrap().len(), 3);
    assert!(manifest["metrics"]["linf_vs_analytic_peak_normalized"].as_f64().unwrap() < 0.02);
}

#[test]
fn reruns_are_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "small.toml", SMALL);
    let mut csvs = Vec::new();
    for sub in ["a", "b"] {
        let out = dir.path().join(sub);
        assert!(abwave(&["run", &cfg, "--out", out.to_str().unwrap()]).status.success());
        csvs.push(std::fs::read(out.join("small.csv")).unwrap());
    }
    assert_eq!(csvs[0], csvs[1]);
}

#[test]
fn invalid_field_exits_2_with_its_line() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "bad.toml", &SMALL.replace("beta = 50e-9", "beta = -50e-9"));
    let o = abwave(&["run", &cfg]);
    assert_eq!(o.status.code(), Some(2));
    let e = stderr(&o);
    assert!(e.contains("bad.toml:10") && e.contains("beam.beta"), "{e}");
}

#[test]
fn unknown_key_exits_2() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "bad.toml", &SMALL.replace("alpha = 0.25", "alpah = 0.25"));
    assert_eq!(abwave(&["validate", &cfg]).status.code(), Some(2));
}

#[test]
fn missing_file_exits_4() {
    assert_eq!(abwave(&["run", "/nonexistent/scenario.toml"]).status.code(), Some(4));
}

#[test]
fn undersampled_source_exits_3() {
    let dir = tempfile::tempdir().unwrap();
    let text = SMALL.replace("n = 2048", "n = 16")
        .replace("[outputs]", "[geometry]\nroute = \"direct\"\n\n[outputs]");
    let cfg = write(dir.path(), "coarse.toml", &text);
    let o = abwave(&["run", &cfg, "--out", dir.path().to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(3), "{}", stderr(&o));
    assert!(stderr(&o).contains("alias"), "{}", stderr(&o));
}

#[test]
fn validate_reports_derived_quantities() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "small.toml", SMALL);
    let o = abwave(&["validate", &cfg]);
    assert!(o.status.success(), "{}", stderr(&o));
    let s = String::from_utf8_lossy(&o.stdout);
    for key in ["lambda_db_m", "fresnel_number", "aliasing_margin", "route", "gamma"] {
        assert!(s.contains(key), "missing {key} in {s}");
    }
}

#[test]
fn sweep_keeps_value_order() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "small.toml", SMALL);
    let out = dir.path().join("sw");
    let o = abwave(&["sweep", &cfg, "--param", "flux.alpha", "--values", "0.75,0.25,0.5", "--out", out.to_str().unwrap()]);
    assert!(o.status.success(), "{}", stderr(&o));
    let csv = std::fs::read_to_string(out.join("small_sweep_flux_alpha.csv")).unwrap();
    let values: Vec<f64> = csv.lines().skip(1).map(|l| l.split(',').next().unwrap().parse().unwrap()).collect();
    assert_eq!(values, vec![0.75, 0.25, 0.5]);
    let defl: Vec<f64> = csv.lines().skip(1).map(|l| l.split(',').nth(1).unwrap().parse().unwrap()).collect();
    assert!(defl[0] < 0.0 && defl[1] > 0.0 && defl[2].abs() < 1e-8);
}

#[test]
fn unknown_preset_exits_2() {
    assert_eq!(abwave(&["preset", "fig9"]).status.code(), Some(2));
}
