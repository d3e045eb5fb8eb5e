use std::path::PathBuf;
use std::process::{Command, Output};

fn bcheun(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_bcheun"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

/// Rows of a CSV table as header-keyed string maps.
fn csv_rows(text: &str) -> Vec<Vec<(String, String)>> {
    let mut lines = text.lines();
    let header: Vec<String> = lines.next().unwrap().split(',').map(String::from).collect();
    lines
        .map(|l| {
            header
                .iter()
                .cloned()
                .zip(l.split(',').map(String::from))
                .collect()
        })
        .collect()
}

fn field(row: &[(String, String)], name: &str) -> f64 {
    row.iter()
        .find(|(h, _)| h == name)
        .unwrap_or_else(|| panic!("no column {name}"))
        .1
        .parse()
        .unwrap()
}

fn scratch(name: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("bcheun-cli-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    dir.join(name)
}

#[test]
fn first_excited_family_at_zero_coulomb() {
    let o = bcheun(&[
        "spectrum", "--n", "1", "--l", "0", "--alpha", "0", "--k", "1",
    ]);
    assert!(o.status.success());
    let rows = csv_rows(&stdout(&o));
    assert_eq!(rows.len(), 2);
    let s2 = std::f64::consts::SQRT_2;
    assert!((field(&rows[0], "b") + s2).abs() < 1e-12);
    assert!((field(&rows[1], "b") - s2).abs() < 1e-12);
    for r in &rows {
        assert!((field(r, "epsilon") - 2.25).abs() < 1e-12);
        assert_eq!(field(r, "beta"), field(r, "b"));
    }
}

#[test]
fn ground_family_over_l_range() {
    let o = bcheun(&[
        "spectrum", "--n", "0", "--l", "0..2", "--alpha", "1", "--k", "1",
    ]);
    assert!(o.status.success());
    let rows = csv_rows(&stdout(&o));
    assert_eq!(rows.len(), 3);
    assert_eq!(field(&rows[0], "epsilon"), 1.375);
    for (i, r) in rows.iter().enumerate() {
        assert_eq!(field(r, "l"), i as f64);
    }
}

#[test]
fn oscillator_turning_points() {
    let o = bcheun(&[
        "turning-points",
        "--alpha",
        "0",
        "--beta",
        "0",
        "--k",
        "1",
        "--l",
        "0",
        "--epsilon",
        "2",
    ]);
    assert!(o.status.success());
    let rows = csv_rows(&stdout(&o));
    let re: Vec<f64> = rows.iter().map(|r| field(r, "re")).collect();
    assert_eq!(re, vec![-2.0, 0.0, 0.0, 2.0]);
    assert!(rows.iter().all(|r| field(r, "vieta_residual") < 1e-12));
    assert!(rows.iter().all(|r| field(r, "im") == 0.0));
}

#[test]
fn negative_beta_accepted_for_turning_points() {
    let o = bcheun(&[
        "turning-points",
        "--alpha",
        "1",
        "--beta",
        "-2.5",
        "--l",
        "1",
        "--epsilon",
        "0.5",
        "--verify",
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
}

#[test]
fn csv_is_deterministic_and_lossless() {
    let args = [
        "spectrum", "--n", "0..3", "--l", "0..2", "--alpha", "0.7", "--k", "2.5",
    ];
    let a = bcheun(&args);
    let b = bcheun(&args);
    assert_eq!(a.stdout, b.stdout);
    let text = stdout(&a);
    assert!(!text.contains('\r'));
    assert!(text.ends_with('\n'));
    let rows = csv_rows(&text);
    // deterministic (n, l, branch) ordering
    let keys: Vec<(u32, u32, u32)> = rows
        .iter()
        .map(|r| {
            (
                field(r, "n") as u32,
                field(r, "l") as u32,
                field(r, "branch") as u32,
            )
        })
        .collect();
    let mut sorted = keys.clone();
    sorted.sort();
    assert_eq!(keys, sorted);
    // 17 significant digits
    for r in &rows {
        let eps = &r.iter().find(|(h, _)| h == "epsilon").unwrap().1;
        let mantissa = eps.split('e').next().unwrap().replace(['-', '.'], "");
        assert_eq!(mantissa.len(), 17, "{eps}");
    }
}

#[test]
fn json_output_replays_as_config() {
    let first = bcheun(&[
        "spectrum", "--n", "0..2", "--l", "1", "--alpha", "2", "--k", "0.5", "--format", "json",
    ]);
    assert!(first.status.success());
    let doc: serde_json::Value = serde_json::from_slice(&first.stdout).unwrap();
    assert!(doc["results"].is_array());
    assert!(doc["diagnostics"]["note"].is_string());
    assert_eq!(doc["config"]["grid_points"], 6000);

    let path = scratch("replay.json");
    std::fs::write(&path, &first.stdout).unwrap();
    let second = bcheun(&["--config", path.to_str().unwrap()]);
    assert!(second.status.success());
    assert_eq!(first.stdout, second.stdout);
}

#[test]
fn flags_take_precedence_over_config_file() {
    let path = scratch("base.json");
    std::fs::write(
        &path,
        r#"{"command": "spectrum", "n": 0, "l": "0..1", "alpha": 3.0}"#,
    )
    .unwrap();
    let o = bcheun(&[
        "--config",
        path.to_str().unwrap(),
        "--alpha",
        "1",
        "--l",
        "0",
    ]);
    assert!(o.status.success());
    let rows = csv_rows(&stdout(&o));
    assert_eq!(rows.len(), 1);
    assert_eq!(field(&rows[0], "epsilon"), 1.375);
}

#[test]
fn out_flag_writes_file() {
    let path = scratch("spectrum.csv");
    let o = bcheun(&["spectrum", "--alpha", "1", "--out", path.to_str().unwrap()]);
    assert!(o.status.success());
    assert!(o.stdout.is_empty());
    let text = std::fs::read_to_string(&path).unwrap();
    assert!(text.starts_with("n,l,branch,b,beta,epsilon"));
}

#[test]
fn verified_spectrum_reports_small_gaps() {
    let o = bcheun(&[
        "spectrum", "--n", "1", "--l", "0..1", "--alpha", "1", "--verify",
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let rows = csv_rows(&stdout(&o));
    assert_eq!(rows.len(), 4);
    assert!(rows.iter().all(|r| field(r, "oracle_gap") < 1e-5));
}

#[test]
fn wavefunction_tracks_oracle() {
    let o = bcheun(&[
        "wavefunction",
        "--n",
        "2",
        "--l",
        "0",
        "--alpha",
        "1",
        "--branch",
        "0",
        "--grid-points",
        "3000",
        "--format",
        "json",
        "--verify",
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let doc: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    let rows = doc["results"].as_array().unwrap();
    assert_eq!(rows.len(), 2998);
    let peak = rows
        .iter()
        .map(|r| r["radial_polynomial"].as_f64().unwrap().abs())
        .fold(0.0, f64::max);
    let diff = doc["diagnostics"]["max_abs_difference"].as_f64().unwrap();
    assert!(diff < 1e-4 * peak, "{diff} vs peak {peak}");
}

#[test]
fn config_errors_exit_2() {
    for args in [
        vec!["spectrum", "--k", "0"],
        vec!["spectrum", "--l", "3..1"],
        vec!["spectrum", "--epsilon", "1"],
        vec!["turning-points", "--beta", "1"],
        vec!["wavefunction", "--n", "1", "--branch", "7"],
        vec!["spectrum", "--tol", "-1"],
        vec![],
    ] {
        let o = bcheun(&args);
        assert_eq!(o.status.code(), Some(2), "{args:?}");
        assert!(!o.stderr.is_empty());
    }
    let path = scratch("broken.json");
    std::fs::write(&path, "{ not json").unwrap();
    assert_eq!(
        bcheun(&["--config", path.to_str().unwrap()]).status.code(),
        Some(2)
    );
}

#[test]
fn solver_failure_exits_3() {
    // 14 unknowns cannot hold the 15 levels the oracle asks for
    let o = bcheun(&["spectrum", "--n", "12", "--grid-points", "16", "--verify"]);
    assert_eq!(o.status.code(), Some(3));
}

#[test]
fn verification_failure_exits_4_but_keeps_output() {
    let o = bcheun(&["spectrum", "--alpha", "1", "--verify", "--tol", "1e-12"]);
    assert_eq!(o.status.code(), Some(4));
    assert_eq!(csv_rows(&stdout(&o)).len(), 1);
    assert!(String::from_utf8_lossy(&o.stderr).contains("verification failed"));
}
