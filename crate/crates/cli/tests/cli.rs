use std::process::{Command, Output};

fn symcdg(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_symcdg"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn stdout(out: &Output) -> String {
    String::from_utf8(out.stdout.clone()).unwrap()
}

#[test]
fn bad_modulus_is_usage_error() {
    for p in ["4", "1", "4294967297"] {
        let out = symcdg(&["evolve", "--p", p, "--n", "3"]);
        assert_eq!(out.status.code(), Some(2), "p = {p}");
    }
}

#[test]
fn evolve_csv_header_and_rows() {
    let out = symcdg(&["evolve", "--p", "5", "--n", "2", "--with-bound"]);
    assert!(out.status.success());
    let text = stdout(&out);
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], "n,tv,ub_bound");
    assert_eq!(lines.len(), 4);
    assert!(!text.contains('\r'));
    let tv0: f64 = lines[1].split(',').nth(1).unwrap().parse().unwrap();
    assert!((tv0 - 0.8).abs() < 1e-15);
}

#[test]
fn json_output_has_config_and_rows() {
    let out = symcdg(&["mixing-time", "--p", "101", "--format", "json"]);
    assert!(out.status.success());
    let v: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(v["rows"][0]["p"], 101);
    assert_eq!(v["rows"][0]["n_star"], 9);
    assert!(v["config"].is_object());
    assert!(v["metadata"]["version"].is_string());
}

#[test]
fn out_flag_writes_file() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("lb.csv");
    let out = symcdg(&["lower-bound", "--out", path.to_str().unwrap()]);
    assert!(out.status.success());
    let text = std::fs::read_to_string(&path).unwrap();
    assert!(text.starts_with("p,n,shift,half_width,interval_mass,tv_lower_bound,exact_tv\n"));
    assert!(text.lines().nth(1).unwrap().starts_with("10007,8,4,884,"));
}

#[test]
fn census_rejects_short_window() {
    let out = symcdg(&["census", "--p", "1009", "--length", "5"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn walk_laws_exact_column_is_rational() {
    let out = symcdg(&["walk-laws", "--j", "4", "--two-n", "4"]);
    assert!(out.status.success());
    let text = stdout(&out);
    assert!(text.lines().any(|l| l.starts_with("max,4,0,3/8,")), "{text}");
    assert!(text.lines().any(|l| l.starts_with("returns,4,0,3/8,")), "{text}");
}
