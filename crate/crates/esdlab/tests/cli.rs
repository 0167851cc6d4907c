//! Binary-level tests: subcommands, exit codes, and file formats.

use std::path::{Path, PathBuf};
use std::process::{Command, Output};
use std::time::Instant;

fn esdlab(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_esdlab"))
        .args(args)
        .output()
        .expect("binary should run")
}

fn stdout(out: &Output) -> String {
    String::from_utf8_lossy(&out.stdout).into_owned()
}

fn stderr(out: &Output) -> String {
    String::from_utf8_lossy(&out.stderr).into_owned()
}

fn read_csv(path: &Path) -> (Vec<String>, Vec<Vec<String>>) {
    let text = std::fs::read_to_string(path).unwrap();
    let mut lines = text.lines();
    let header: Vec<String> = lines.next().unwrap().split(',').map(String::from).collect();
    let rows = lines
        .map(|l| l.split(',').map(String::from).collect())
        .collect();
    (header, rows)
}

fn column(header: &[String], rows: &[Vec<String>], name: &str) -> Vec<f64> {
    let idx = header.iter().position(|h| h == name).unwrap();
    rows.iter().map(|r| r[idx].parse().unwrap()).collect()
}

fn tmpfile(dir: &tempfile::TempDir, name: &str) -> PathBuf {
    dir.path().join(name)
}

#[test]
fn evolve_werner_death_time() {
    let dir = tempfile::tempdir().unwrap();
    let out_path = tmpfile(&dir, "trace.csv");
    let out = esdlab(&[
        "evolve",
        "--family",
        "werner",
        "--f",
        "1",
        "--gamma",
        "1",
        "--omega_c",
        "5",
        "--model",
        "kinetic",
        "--t_max",
        "2",
        "--output",
        out_path.to_str().unwrap(),
    ]);
    assert!(out.status.success(), "{}", stderr(&out));
    let (header, rows) = read_csv(&out_path);
    assert_eq!(header[0], "t");
    assert_eq!(header[11], "concurrence");
    let t = column(&header, &rows, "t");
    let c = column(&header, &rows, "concurrence");
    let last = t
        .iter()
        .zip(&c)
        .rev()
        .find(|(_, c)| **c > 1e-6)
        .map(|(t, _)| *t)
        .unwrap();
    assert!((last - 0.84).abs() < 0.01, "last entangled t = {last}");
}

#[test]
fn evolve_balanced_eegg_is_never_entangled() {
    let dir = tempfile::tempdir().unwrap();
    let out_path = tmpfile(&dir, "trace.csv");
    let out = esdlab(&[
        "evolve",
        "--family",
        "eegg",
        "--s",
        "0.5",
        "--omega_c",
        "8",
        "--t_max",
        "3",
        "--output",
        out_path.to_str().unwrap(),
    ]);
    assert!(out.status.success(), "{}", stderr(&out));
    let (header, rows) = read_csv(&out_path);
    for c in column(&header, &rows, "concurrence") {
        assert_eq!(c, 0.0);
    }
}

#[test]
fn evolve_pure_rotation_concurrence() {
    let dir = tempfile::tempdir().unwrap();
    let out_path = tmpfile(&dir, "trace.csv");
    let out = esdlab(&[
        "evolve",
        "--family",
        "egge",
        "--p",
        "0",
        "--gamma",
        "0",
        "--omega_c",
        "1",
        "--model",
        "kinetic",
        "--t_max",
        "5",
        "--output",
        out_path.to_str().unwrap(),
    ]);
    assert!(out.status.success(), "{}", stderr(&out));
    let (header, rows) = read_csv(&out_path);
    let t = column(&header, &rows, "t");
    let c = column(&header, &rows, "concurrence");
    for (t, c) in t.iter().zip(&c) {
        let expected = (1.5 * t).sin().abs();
        assert!((c - expected).abs() < 1e-6, "t = {t}: {c} vs {expected}");
    }
}

#[test]
fn evolve_output_reparses_to_identical_values() {
    let dir = tempfile::tempdir().unwrap();
    let out_path = tmpfile(&dir, "trace.csv");
    let args = [
        "evolve",
        "--family",
        "ye",
        "--alpha",
        "0.8",
        "--omega_c",
        "5",
        "--t_max",
        "1",
        "--output",
        out_path.to_str().unwrap(),
    ];
    let out = esdlab(&args);
    assert!(out.status.success(), "{}", stderr(&out));
    let first = std::fs::read(&out_path).unwrap();
    // Identical configs give byte-identical files.
    let out = esdlab(&args);
    assert!(out.status.success());
    let second = std::fs::read(&out_path).unwrap();
    assert_eq!(first, second);
    // Every field round-trips through the shortest-decimal printer.
    let (_, rows) = read_csv(&out_path);
    for row in rows {
        for field in row {
            let v: f64 = field.parse().unwrap();
            assert_eq!(format!("{v}"), field);
        }
    }
}

#[test]
fn scan_degenerate_grid_round_trips() {
    let dir = tempfile::tempdir().unwrap();
    let out_path = tmpfile(&dir, "grid.csv");
    let start = Instant::now();
    let out = esdlab(&[
        "scan",
        "--family",
        "werner",
        "--param_min",
        "0.6",
        "--param_max",
        "1",
        "--param_steps",
        "2",
        "--omega_c_min",
        "0",
        "--omega_c_max",
        "5",
        "--omega_c_steps",
        "2",
        "--t_max",
        "3",
        "--output",
        out_path.to_str().unwrap(),
    ]);
    assert!(out.status.success(), "{}", stderr(&out));
    assert!(start.elapsed().as_secs_f64() < 1.0, "{:?}", start.elapsed());
    let (header, rows) = read_csv(&out_path);
    assert_eq!(header, ["param", "omega_c", "t_esd", "revivals", "status"]);
    assert_eq!(rows.len(), 4);
    // Parameter-major ordering and parsable numeric fields.
    assert_eq!(rows[0][0], rows[1][0]);
    assert_ne!(rows[0][0], rows[2][0]);
    for row in &rows {
        let _: f64 = row[0].parse().unwrap();
        let _: f64 = row[1].parse().unwrap();
        assert!(row[2] == "inf" || row[2].parse::<f64>().is_ok());
        let _: usize = row[3].parse().unwrap();
        assert!(["ok", "never_entangled", "positive_at_horizon"].contains(&row[4].as_str()));
    }
}

#[test]
fn scan_werner_rows_constant_across_coupling() {
    let dir = tempfile::tempdir().unwrap();
    let out_path = tmpfile(&dir, "grid.csv");
    let out = esdlab(&[
        "scan",
        "--family",
        "werner",
        "--param_min",
        "0.7",
        "--param_max",
        "1",
        "--param_steps",
        "3",
        "--omega_c_min",
        "0",
        "--omega_c_max",
        "10",
        "--omega_c_steps",
        "4",
        "--t_max",
        "5",
        "--output",
        out_path.to_str().unwrap(),
    ]);
    assert!(out.status.success(), "{}", stderr(&out));
    let (header, rows) = read_csv(&out_path);
    let params = column(&header, &rows, "param");
    let t_esd: Vec<&String> = {
        let idx = header.iter().position(|h| h == "t_esd").unwrap();
        rows.iter().map(|r| &r[idx]).collect()
    };
    for i in 0..rows.len() {
        if params[i] == params[0] {
            assert_eq!(t_esd[i], t_esd[0]);
        }
    }
}

#[test]
fn scan_eegg_revivals_at_strong_coupling() {
    let dir = tempfile::tempdir().unwrap();
    let out_path = tmpfile(&dir, "grid.csv");
    let out = esdlab(&[
        "scan",
        "--family",
        "eegg",
        "--param_min",
        "0.9",
        "--param_max",
        "1",
        "--param_steps",
        "2",
        "--omega_c_min",
        "12",
        "--omega_c_max",
        "13",
        "--omega_c_steps",
        "2",
        "--output",
        out_path.to_str().unwrap(),
    ]);
    assert!(out.status.success(), "{}", stderr(&out));
    let (header, rows) = read_csv(&out_path);
    let params = column(&header, &rows, "param");
    let omegas = column(&header, &rows, "omega_c");
    let revivals = column(&header, &rows, "revivals");
    let cell = params
        .iter()
        .zip(&omegas)
        .zip(&revivals)
        .find(|((p, w), _)| **p == 1.0 && **w == 13.0)
        .map(|(_, r)| *r)
        .unwrap();
    assert_eq!(cell, 2.0);
}

#[test]
fn scan_json_format() {
    let dir = tempfile::tempdir().unwrap();
    let out_path = tmpfile(&dir, "grid.json");
    let out = esdlab(&[
        "scan",
        "--family",
        "egge",
        "--param_steps",
        "2",
        "--omega_c_min",
        "0",
        "--omega_c_max",
        "2",
        "--omega_c_steps",
        "2",
        "--t_max",
        "2",
        "--format",
        "json",
        "--output",
        out_path.to_str().unwrap(),
    ]);
    assert!(out.status.success(), "{}", stderr(&out));
    let value: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(&out_path).unwrap()).unwrap();
    assert_eq!(value["family"], "egge");
    assert_eq!(value["cells"].as_array().unwrap().len(), 4);
}

#[test]
fn validate_passes_and_prints_checks() {
    let out = esdlab(&["validate"]);
    assert!(out.status.success(), "{}", stderr(&out));
    let text = stdout(&out);
    assert!(text.contains("PASS"), "{text}");
    assert!(!text.contains("FAIL"), "{text}");
    assert!(text.contains("all"), "{text}");
}

#[test]
fn families_lists_all_four() {
    let out = esdlab(&["families"]);
    assert!(out.status.success());
    let text = stdout(&out);
    for family in ["werner", "ye", "egge", "eegg"] {
        assert!(text.contains(family), "{text}");
    }
}

#[test]
fn config_errors_exit_2_and_name_the_key() {
    // Unknown key in the document.
    let dir = tempfile::tempdir().unwrap();
    let cfg = tmpfile(&dir, "run.json");
    std::fs::write(&cfg, r#"{"family":"werner","f":1,"turbo":true}"#).unwrap();
    let out = esdlab(&["evolve", "--config", cfg.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr(&out).contains("turbo"), "{}", stderr(&out));

    // Missing family.
    let out = esdlab(&["evolve", "--f", "1"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr(&out).contains("family"), "{}", stderr(&out));

    // Wrong family parameter key.
    let out = esdlab(&["evolve", "--family", "werner", "--p", "0.5"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr(&out).contains("\"p\""), "{}", stderr(&out));

    // Out-of-range family parameter.
    let out = esdlab(&["evolve", "--family", "werner", "--f", "0.1"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr(&out).contains("0.1"), "{}", stderr(&out));

    // Malformed JSON carries a line anchor.
    std::fs::write(&cfg, "{\n  \"family\": werner\n}").unwrap();
    let out = esdlab(&["evolve", "--config", cfg.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr(&out).contains(":2:"), "{}", stderr(&out));
}

#[test]
fn config_file_with_flag_override() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = tmpfile(&dir, "run.json");
    std::fs::write(
        &cfg,
        r#"{"family":"werner","f":1,"omega_c":5,"model":"kinetic","t_max":2}"#,
    )
    .unwrap();
    let out_path = tmpfile(&dir, "trace.csv");
    let out = esdlab(&[
        "evolve",
        "--config",
        cfg.to_str().unwrap(),
        "--t_max",
        "1",
        "--output",
        out_path.to_str().unwrap(),
    ]);
    assert!(out.status.success(), "{}", stderr(&out));
    let (header, rows) = read_csv(&out_path);
    let t = column(&header, &rows, "t");
    // Flag override shortened the horizon.
    assert!((t.last().unwrap() - 1.0).abs() < 1e-12);
}

#[test]
fn numeric_failure_exits_3() {
    // An unstable explicit step blows past the positivity tolerance.
    let out = esdlab(&[
        "evolve",
        "--family",
        "werner",
        "--f",
        "1",
        "--model",
        "rotating-frame",
        "--rabi",
        "25",
        "--omega_c",
        "5",
        "--dt",
        "0.5",
        "--t_max",
        "5",
    ]);
    assert_eq!(out.status.code(), Some(3), "{}", stderr(&out));
    assert!(stderr(&out).contains("numeric"), "{}", stderr(&out));
}

#[test]
fn thermal_model_via_cli() {
    let dir = tempfile::tempdir().unwrap();
    let out_path = tmpfile(&dir, "trace.csv");
    let out = esdlab(&[
        "evolve",
        "--family",
        "egge",
        "--p",
        "0",
        "--model",
        "thermal-undriven",
        "--nbar",
        "0.25",
        "--omega_c",
        "10",
        "--t_max",
        "3",
        "--output",
        out_path.to_str().unwrap(),
    ]);
    assert!(out.status.success(), "{}", stderr(&out));
    let (header, rows) = read_csv(&out_path);
    let c = column(&header, &rows, "concurrence");
    let max = c.iter().cloned().fold(0.0, f64::max);
    assert!(max > 0.01, "thermal run should entangle, max = {max}");
}
