use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use tempfile::TempDir;

fn wgqed(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_wgqed")).args(args).output().expect("binary runs")
}

fn write_config(dir: &Path, name: &str, body: &str) -> String {
    let path = dir.join(name);
    fs::write(&path, body).unwrap();
    path.to_str().unwrap().to_string()
}

const SINGLE_MODE: &str = r#"
geometry.a_over_b = 2.0
atom.omega.midband_between = [[1, 1], [3, 1]]
atom.z0.by_gamma_tau1 = { gamma_tau1 = 1.0, phase1 = 1.5707963267948966 }
solver.engine = "dde"
solver.t_max_gamma = 6.0
output.trace_name = "single"
"#;

fn check_schema(csv: &str) {
    let mut lines = csv.lines();
    assert_eq!(lines.next(), Some("t_gamma,re,im,abs,prob"));
    let mut last_t = f64::NEG_INFINITY;
    let mut rows = 0;
    for line in lines {
        let fields: Vec<f64> = line.split(',').map(|f| f.parse().unwrap()).collect();
        assert_eq!(fields.len(), 5, "{line}");
        assert!(fields[0] > last_t);
        last_t = fields[0];
        assert!((fields[4] - fields[3] * fields[3]).abs() <= 1e-15, "{line}");
        rows += 1;
    }
    assert!(rows > 1);
    assert!(csv.ends_with('\n') && !csv.contains('\r'));
}

#[test]
fn preset_writes_schema_valid_traces() {
    let dir = TempDir::new().unwrap();
    let out = wgqed(&["preset", "fig3a", "--out", dir.path().to_str().unwrap()]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    for name in ["fig3a_phi_half_pi", "fig3a_phi_pi", "fig3a_phi_0", "fig3a_no_mirror"] {
        check_schema(&fs::read_to_string(dir.path().join(format!("{name}.csv"))).unwrap());
        assert!(dir.path().join(format!("{name}.manifest.toml")).exists());
    }
}

#[test]
fn manifest_reproduces_csv_bytes() {
    let first = TempDir::new().unwrap();
    let second = TempDir::new().unwrap();
    let config = write_config(first.path(), "c.toml", SINGLE_MODE);
    assert!(wgqed(&["run", "--config", &config, "--out", first.path().to_str().unwrap()]).status.success());
    let manifest = first.path().join("single.manifest.toml");
    let out = wgqed(&["run", "--config", manifest.to_str().unwrap(), "--out", second.path().to_str().unwrap()]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let a = fs::read(first.path().join("single.csv")).unwrap();
    let b = fs::read(second.path().join("single.csv")).unwrap();
    assert_eq!(a, b);
    // only the output directory differs between the two manifests
    let ma = fs::read_to_string(&manifest).unwrap();
    let mb = fs::read_to_string(second.path().join("single.manifest.toml")).unwrap();
    let strip = |s: &str| s.lines().filter(|l| !l.starts_with("directory") && !l.starts_with("config_digest")).collect::<Vec<_>>().join("\n");
    assert_eq!(strip(&ma), strip(&mb));
}

#[test]
fn exit_codes_separate_config_and_engine_errors() {
    let dir = TempDir::new().unwrap();
    let bad = write_config(dir.path(), "bad.toml", &SINGLE_MODE.replace("\"dde\"", "\"euler\""));
    assert_eq!(wgqed(&["run", "--config", &bad]).status.code(), Some(2));
    assert_eq!(wgqed(&["run", "--config", "/nonexistent/c.toml"]).status.code(), Some(2));
    assert_eq!(wgqed(&["preset", "fig7"]).status.code(), Some(2));

    // two channels with a finite first delay have no closed-form series
    let two = SINGLE_MODE
        .replace("[[1, 1], [3, 1]]", "[[3, 1], [5, 1]]")
        .replace("\"dde\"", "\"series\"");
    let two = write_config(dir.path(), "two.toml", &two);
    let out = wgqed(&["run", "--config", &two, "--out", dir.path().to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(3), "{}", String::from_utf8_lossy(&out.stderr));
}

#[test]
fn compare_dde_and_series() {
    let dir = TempDir::new().unwrap();
    let config = write_config(dir.path(), "c.toml", SINGLE_MODE);
    let out = wgqed(&["compare", "--config", &config, "--engines", "dde,series,no_mirror", "--out", dir.path().to_str().unwrap()]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let table = fs::read_to_string(dir.path().join("single_compare.csv")).unwrap();
    let mut lines = table.lines();
    assert_eq!(lines.next(), Some("first,second,max_abs,mean_abs,max_modulus,mean_modulus"));
    let rows: Vec<Vec<String>> = lines.map(|l| l.split(',').map(String::from).collect()).collect();
    assert_eq!(rows.len(), 3);
    assert_eq!(rows[0][..2], ["dde".to_string(), "series".to_string()]);
    assert!(rows[0][2].parse::<f64>().unwrap() < 1e-8);
}

#[test]
fn markov_matches_dde_for_short_delay() {
    let dir = TempDir::new().unwrap();
    let body = SINGLE_MODE
        .replace("gamma_tau1 = 1.0, phase1 = 1.5707963267948966", "gamma_tau1 = 0.01, phase1 = 0.0")
        .replace("t_max_gamma = 6.0", "t_max_gamma = 3.0");
    let config = write_config(dir.path(), "c.toml", &body);
    let out = wgqed(&["compare", "--config", &config, "--engines", "markov,dde", "--out", dir.path().to_str().unwrap()]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let table = fs::read_to_string(dir.path().join("single_compare.csv")).unwrap();
    let max: f64 = table.lines().nth(1).unwrap().split(',').nth(2).unwrap().parse().unwrap();
    assert!(max < 5e-2, "max deviation {max}");
}

#[test]
fn z0_sweep_rate_falls_to_zero_at_quarter_wavelength() {
    let dir = TempDir::new().unwrap();
    let body = SINGLE_MODE
        .replace(
            "atom.z0.by_gamma_tau1 = { gamma_tau1 = 1.0, phase1 = 1.5707963267948966 }",
            "atom.z0.fraction_of_lambda1a = 0.0",
        )
        .replace("\"dde\"", "\"markov\"");
    let config = write_config(dir.path(), "c.toml", &body);
    let values: Vec<String> = (0..9).map(|i| format!("{}", 0.25 * i as f64 / 8.0)).collect();
    let out = wgqed(&[
        "sweep", "--config", &config, "--param", "z0", "--values", &values.join(","), "--out", dir.path().to_str().unwrap(),
    ]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let summary = fs::read_to_string(dir.path().join("summary.csv")).unwrap();
    let mut lines = summary.lines();
    assert_eq!(lines.next(), Some("value,golden_rule_rate_gamma,final_prob"));
    let rates: Vec<f64> = lines.map(|l| l.split(',').nth(1).unwrap().parse().unwrap()).collect();
    assert_eq!(rates.len(), 9);
    assert!((rates[0] - 4.0).abs() < 1e-9);
    for pair in rates.windows(2) {
        assert!(pair[1] < pair[0]);
    }
    assert!(rates[8].abs() < 1e-12);
    assert_eq!(fs::read_dir(dir.path()).unwrap().filter(|e| e.as_ref().unwrap().path().extension().is_some_and(|x| x == "csv")).count(), 10);
}

#[test]
fn empty_sweep_succeeds_with_header_only() {
    let dir = TempDir::new().unwrap();
    let config = write_config(dir.path(), "c.toml", SINGLE_MODE);
    let out = wgqed(&["sweep", "--config", &config, "--param", "gamma_tau1", "--values", "", "--out", dir.path().to_str().unwrap()]);
    assert!(out.status.success());
    assert_eq!(fs::read_to_string(dir.path().join("summary.csv")).unwrap(), "value,golden_rule_rate_gamma,final_prob\n");
}
