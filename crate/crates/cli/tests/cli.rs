use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use tempfile::TempDir;

fn scenario(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("scenarios").join(name)
}

fn phtrip(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_phtrip")).args(args).output().expect("binary runs")
}

fn run_to_file(sub: &str, name: &str, dir: &TempDir) -> (Output, PathBuf) {
    let out = dir.path().join(format!("{sub}-{name}.csv"));
    let output = phtrip(&[sub, "--scenario", scenario(name).to_str().unwrap(), "--out", out.to_str().unwrap()]);
    (output, out)
}

/// Parses a CSV with a header row into (header, columns).
fn read_csv(path: &Path) -> (Vec<String>, Vec<Vec<f64>>) {
    let text = fs::read_to_string(path).unwrap();
    let mut lines = text.lines();
    let header: Vec<String> = lines.next().unwrap().split(',').map(str::to_string).collect();
    let mut cols = vec![Vec::new(); header.len()];
    for line in lines {
        for (k, v) in line.split(',').enumerate() {
            cols[k].push(v.parse::<f64>().unwrap());
        }
    }
    (header, cols)
}

fn column<'a>(header: &[String], cols: &'a [Vec<f64>], name: &str) -> &'a [f64] {
    &cols[header.iter().position(|h| h == name).unwrap()]
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

#[test]
fn standing_wave_conserves_energy() {
    let dir = TempDir::new().unwrap();
    let (o, path) = run_to_file("simulate", "standing_wave.json", &dir);
    assert!(o.status.success(), "{}", stderr(&o));
    let (header, cols) = read_csv(&path);
    assert_eq!(
        header,
        ["t", "H", "H_p", "H_k", "u_1", "u_2", "y_1", "y_2", "balance_residual", "scattering_slack"]
    );
    assert_eq!(cols[0].len(), 501);
    let h = column(&header, &cols, "H");
    assert!(h[0] > 0.0);
    assert!(h.iter().all(|v| (v - h[0]).abs() <= 1e-10 * h[0]));
    // kinetic and potential parts actually exchange energy
    let hk = column(&header, &cols, "H_k");
    assert!(hk.iter().cloned().fold(0.0, f64::max) > 0.1 * h[0]);
}

#[test]
fn damped_energy_never_increases() {
    let dir = TempDir::new().unwrap();
    let (o, path) = run_to_file("simulate", "damped.json", &dir);
    assert!(o.status.success(), "{}", stderr(&o));
    let (header, cols) = read_csv(&path);
    let h = column(&header, &cols, "H");
    assert!(h.windows(2).all(|w| w[1] <= w[0]));
    assert!(h[h.len() - 1] < 0.9 * h[0]);
    let residual = column(&header, &cols, "balance_residual");
    assert!(residual.iter().all(|r| r.abs() <= 1e-10 * (1.0 + h[0])));
}

#[test]
fn expanding_parameter_is_a_numeric_failure() {
    let dir = TempDir::new().unwrap();
    let (o, path) = run_to_file("simulate", "contraction_violation.json", &dir);
    assert_eq!(o.status.code(), Some(3));
    assert!(stderr(&o).contains("NotAContraction"));
    assert!(!path.exists());
    assert_eq!(fs::read_dir(dir.path()).unwrap().count(), 0);
}

#[test]
fn green_suite_passes() {
    let o = phtrip(&["verify", "--suite", "green", "--scenario", scenario("standing_wave.json").to_str().unwrap()]);
    assert!(o.status.success(), "{}", stderr(&o));
    let line = stdout(&o).lines().find(|l| l.starts_with("green_identity ")).unwrap().to_string();
    assert!(line.ends_with("PASS"));
    let value: f64 = line.split_whitespace().nth(1).unwrap().parse().unwrap();
    assert!(value <= 1e-12);
}

#[test]
fn cayley_suite_reports_exact_involution() {
    let o = phtrip(&["verify", "--suite", "cayley", "--scenario", scenario("standing_wave.json").to_str().unwrap()]);
    assert!(o.status.success(), "{}", stderr(&o));
    let line = stdout(&o).lines().find(|l| l.starts_with("cayley_involution")).unwrap().to_string();
    let value: f64 = line.split_whitespace().nth(1).unwrap().parse().unwrap();
    assert!(value <= 1e-15);
}

#[test]
fn full_verification_of_every_valid_scenario() {
    for name in ["standing_wave.json", "damped.json", "jet_random.json", "zero.json"] {
        let o = phtrip(&["verify", "--scenario", scenario(name).to_str().unwrap()]);
        assert!(o.status.success(), "{name}: {}{}", stdout(&o), stderr(&o));
        assert!(!stdout(&o).contains("FAIL"));
    }
}

#[test]
fn corrupted_gamma1_fails_green_identity() {
    let o = phtrip(&[
        "verify",
        "--corrupt-gamma1",
        "--scenario",
        scenario("standing_wave.json").to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("green_identity"));
}

#[test]
fn jet_compare_standing_wave() {
    let dir = TempDir::new().unwrap();
    let (o, path) = run_to_file("jet-compare", "standing_wave.json", &dir);
    assert!(o.status.success(), "{}", stderr(&o));
    let (header, cols) = read_csv(&path);
    assert_eq!(header, ["t", "deviation", "ran_a_defect"]);
    assert!(cols[0].len() > 500);
    assert!(cols[1].iter().all(|&d| d <= 1e-9));
    assert!(cols[2].iter().all(|&d| d <= 1e-9));
}

#[test]
fn jet_compare_random_coefficients() {
    let dir = TempDir::new().unwrap();
    let (o, path) = run_to_file("jet-compare", "jet_random.json", &dir);
    assert!(o.status.success(), "{}", stderr(&o));
    let (_, cols) = read_csv(&path);
    assert!(cols[1].iter().all(|&d| d <= 1e-8));
}

#[test]
fn jet_compare_zero_is_identically_zero() {
    let dir = TempDir::new().unwrap();
    let (o, path) = run_to_file("jet-compare", "zero.json", &dir);
    assert!(o.status.success(), "{}", stderr(&o));
    let (_, cols) = read_csv(&path);
    assert!(cols[1].iter().chain(&cols[2]).all(|&v| v == 0.0));
}

#[test]
fn runs_are_byte_identical() {
    let dir = TempDir::new().unwrap();
    let a = dir.path().join("a.csv");
    let b = dir.path().join("b.csv");
    for out in [&a, &b] {
        let o = phtrip(&["simulate", "--scenario", scenario("jet_random.json").to_str().unwrap(), "--out", out.to_str().unwrap()]);
        assert!(o.status.success(), "{}", stderr(&o));
    }
    assert_eq!(fs::read(&a).unwrap(), fs::read(&b).unwrap());
}

#[test]
fn csv_goes_to_stdout_without_out() {
    let o = phtrip(&["simulate", "--scenario", scenario("zero.json").to_str().unwrap()]);
    assert!(o.status.success(), "{}", stderr(&o));
    let text = stdout(&o);
    assert!(text.starts_with("t,H,H_p,H_k,"));
    assert_eq!(text.lines().count(), 52);
}

#[test]
fn strain_formulation_matches_position_energy() {
    let dir = TempDir::new().unwrap();
    let base = fs::read_to_string(scenario("jet_random.json")).unwrap();
    let strain = base.replace("\"schema_version\": 1,", "\"schema_version\": 1, \"formulation\": \"strain-momentum\",");
    let path = dir.path().join("strain.json");
    fs::write(&path, strain).unwrap();
    let (pa, pb) = (dir.path().join("p.csv"), dir.path().join("s.csv"));
    let o1 = phtrip(&["simulate", "--scenario", scenario("jet_random.json").to_str().unwrap(), "--out", pa.to_str().unwrap()]);
    let o2 = phtrip(&["simulate", "--scenario", path.to_str().unwrap(), "--out", pb.to_str().unwrap()]);
    assert!(o1.status.success() && o2.status.success(), "{}{}", stderr(&o1), stderr(&o2));
    let (ha, ca) = read_csv(&pa);
    let (hb, cb) = read_csv(&pb);
    let (ea, eb) = (column(&ha, &ca, "H"), column(&hb, &cb, "H"));
    assert!(ea.iter().zip(eb).all(|(x, y)| (x - y).abs() <= 1e-10 * (1.0 + x)));
}

#[test]
fn cayley_prints_maps() {
    let o = phtrip(&["cayley", "--scenario", scenario("damped.json").to_str().unwrap()]);
    assert!(o.status.success(), "{}", stderr(&o));
    let text = stdout(&o);
    assert!(text.contains("Impedance -> Scattering"));
    assert!(text.contains("G' (2x"));
    assert!(text.contains("involution residual (beta = 1)"));
}

#[test]
fn schema_violations_exit_with_two() {
    let dir = TempDir::new().unwrap();
    let base = fs::read_to_string(scenario("zero.json")).unwrap();
    let cases = [
        base.replace("\"N\": 8,", "\"N\": 8, \"bogus\": true,"),
        base.replace("\"schema_version\": 1", "\"schema_version\": 7"),
        base.replace("\"flavor\": \"scattering\"", "\"flavor\": \"hybrid\""),
        "{ not json".to_string(),
    ];
    for (k, text) in cases.iter().enumerate() {
        let path = dir.path().join(format!("bad{k}.json"));
        fs::write(&path, text).unwrap();
        let o = phtrip(&["simulate", "--scenario", path.to_str().unwrap()]);
        assert_eq!(o.status.code(), Some(2), "case {k}: {}", stderr(&o));
    }
    let o = phtrip(&["simulate", "--scenario", dir.path().join("missing.json").to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn bad_time_grid_is_a_numeric_failure() {
    let dir = TempDir::new().unwrap();
    let text = fs::read_to_string(scenario("zero.json")).unwrap().replace("\"dt\": 0.01", "\"dt\": -0.01");
    let path = dir.path().join("grid.json");
    fs::write(&path, text).unwrap();
    let o = phtrip(&["simulate", "--scenario", path.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(3));
    assert!(stderr(&o).contains("InvalidTimeGrid"));
}
