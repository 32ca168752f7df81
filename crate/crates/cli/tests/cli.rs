use std::path::Path;
use std::process::{Command, Output};

const TAU_WHITE: f64 = 1.420_774_257_784_079_4;

fn qbm(out: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_qbm"))
        .arg("--out")
        .arg(out)
        .args(args)
        .output()
        .expect("spawn qbm")
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exit code")
}

/// Data rows of a CSV with `#` header lines, as floats.
fn rows(path: &Path) -> (Vec<String>, Vec<Vec<f64>>) {
    let text = std::fs::read_to_string(path).unwrap();
    let mut lines = text.lines().filter(|l| !l.starts_with('#'));
    let cols = lines.next().unwrap().split(',').map(str::to_string).collect();
    let data = lines
        .map(|l| l.split(',').map(|v| v.parse::<f64>().unwrap()).collect())
        .collect();
    (cols, data)
}

fn value_at(data: &[Vec<f64>], col: usize, t: f64) -> f64 {
    data.iter().find(|r| (r[0] - t).abs() < 1e-9).map(|r| r[col]).unwrap()
}

fn json(path: &Path) -> serde_json::Value {
    serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap()
}

#[test]
fn green_ohmic_value_and_talbot_column() {
    let dir = tempfile::tempdir().unwrap();
    let args = [
        "green", "--p", "1", "--zeta", "2", "--omega-c", "200", "--beta", "1", "--tmax", "5", "--check", "talbot",
    ];
    let o = qbm(dir.path(), &args);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let (cols, data) = rows(&dir.path().join("green.csv"));
    assert_eq!(cols, ["t", "G", "Gdot", "Gddot", "G_talbot"]);
    // the cutoff shifts G(1) by about 1.4% from the strictly Ohmic 0.4323
    let g1 = value_at(&data, 1, 1.0);
    assert!((g1 - 0.4323).abs() / 0.4323 < 2e-2, "G(1) = {g1}");
    assert!((g1 - 0.438_240_007_781_272_5).abs() < 1e-4);
    for r in &data {
        assert!((r[1] - r[4]).abs() < 1e-4, "talbot disagrees at t = {}", r[0]);
    }
    let diag = json(&dir.path().join("green_residuals.json"));
    assert!(diag["relative_residual"].as_f64().unwrap() < 1e-6);
    assert!(diag["talbot"]["max_abs_diff"].as_f64().unwrap() < 1e-4);
    assert!(diag["header"][1].as_str().unwrap().contains("omega_c=200.0"));
}

#[test]
fn green_strictly_ohmic_matches_closed_form() {
    let dir = tempfile::tempdir().unwrap();
    let o = qbm(dir.path(), &["green", "--p", "1", "--zeta", "2", "--beta", "1", "--tmax", "5", "--cutoff", "none"]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let (_, data) = rows(&dir.path().join("green.csv"));
    assert!((value_at(&data, 1, 1.0) - 0.432_332_358_381_693_6).abs() < 1e-12);
}

#[test]
fn missing_required_flag_is_usage_error() {
    let dir = tempfile::tempdir().unwrap();
    let o = qbm(dir.path(), &["green", "--zeta", "2", "--beta", "1"]);
    assert_eq!(code(&o), 2);
    let err: serde_json::Value = serde_json::from_slice(&o.stderr).unwrap();
    assert_eq!(err["error"], "config");
    assert_eq!(err["exit_code"], 2);
    assert!(dir.path().join("error.json").exists());
    let o = qbm(dir.path(), &["green", "--p"]);
    assert_eq!(code(&o), 2);
    let o = qbm(dir.path(), &["frobnicate"]);
    assert_eq!(code(&o), 2);
}

#[test]
fn domain_errors_exit_4() {
    let dir = tempfile::tempdir().unwrap();
    let o = qbm(dir.path(), &["green", "--p", "2.5", "--zeta", "1", "--beta", "1"]);
    assert_eq!(code(&o), 4);
    let o = qbm(dir.path(), &["kernel", "--p", "1", "--zeta", "1", "--beta", "1", "--cutoff", "none"]);
    assert_eq!(code(&o), 4);
}

#[test]
fn unwritable_output_is_io_error() {
    let dir = tempfile::tempdir().unwrap();
    let blocker = dir.path().join("file");
    std::fs::write(&blocker, "x").unwrap();
    let o = qbm(&blocker.join("sub"), &["moments", "--p", "1", "--zeta", "1", "--beta", "1"]);
    assert_eq!(code(&o), 3);
}

#[test]
fn config_file_with_flag_override() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.toml");
    std::fs::write(&cfg, "# bath\np = 1\nzeta = 5\nbeta = 1\nomega_c = 200\ntmax = 5\n").unwrap();
    let o = qbm(dir.path(), &["--config", cfg.to_str().unwrap(), "green", "--zeta", "2"]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let text = std::fs::read_to_string(dir.path().join("green.csv")).unwrap();
    assert!(text.contains("zeta=2.0"));
    let (_, data) = rows(&dir.path().join("green.csv"));
    assert!((value_at(&data, 1, 1.0) - 0.438_240_007_781_272_5).abs() < 1e-4);

    std::fs::write(&cfg, "p = 1\nzeta = 1\nbeta = 1\nfoo = 3\n").unwrap();
    let o = qbm(dir.path(), &["--config", cfg.to_str().unwrap(), "green"]);
    assert_eq!(code(&o), 2);
    let o = qbm(dir.path(), &["--config", dir.path().join("absent.toml").to_str().unwrap(), "green"]);
    assert_eq!(code(&o), 3);
}

#[test]
fn kernel_tables_have_two_columns() {
    let dir = tempfile::tempdir().unwrap();
    let o = qbm(dir.path(), &["kernel", "--p", "0.5", "--zeta", "1", "--beta", "1", "--omega-c", "20", "--tmax", "4"]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let (cols, data) = rows(&dir.path().join("damping_kernel.csv"));
    assert_eq!(cols, ["t", "gamma"]);
    assert!(data.iter().all(|r| r.len() == 2));
    let (cols, data) = rows(&dir.path().join("noise_kernel.csv"));
    assert_eq!(cols, ["t", "K"]);
    assert!(data[0][1] > 0.0);
}

#[test]
fn tc_high_temperature_ohmic() {
    let dir = tempfile::tempdir().unwrap();
    let o = qbm(dir.path(), &["tc", "--p", "1", "--zeta", "0.1", "--beta", "0.001", "--omega-c", "20"]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let report = json(&dir.path().join("localization.json"));
    let tc = report["t_c"].as_f64().unwrap();
    let limit = TAU_WHITE / 0.1;
    // finite cutoff biases t_c by roughly 0.19ζ relative
    assert!((tc - limit).abs() / limit < 0.05, "t_c = {tc}, limit = {limit}");
    let basis = json(&dir.path().join("pointer_basis.json"));
    assert!(basis["b_inf"].as_f64().unwrap() > 100.0);
    assert!(basis.get("alpha_sq").is_some());
    let (cols, _) = rows(&dir.path().join("moments.csv"));
    assert_eq!(cols, ["t", "A", "B", "C"]);
}

#[test]
fn tc_subohmic_is_finite() {
    let dir = tempfile::tempdir().unwrap();
    let o = qbm(dir.path(), &["tc", "--p", "0.5", "--zeta", "1", "--beta", "1", "--omega-c", "20"]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let report = json(&dir.path().join("localization.json"));
    assert!(report["t_c"].as_f64().unwrap() > 0.0);
}

fn evolve_args<'a>(extra: &[&'a str]) -> Vec<&'a str> {
    let mut v = vec!["evolve", "--p", "1", "--zeta", "1", "--beta", "0.1", "--omega-c", "20", "--tmax", "6"];
    v.extend_from_slice(extra);
    v
}

#[test]
fn evolve_cat_pointer_weight_straddles_tc() {
    let dir = tempfile::tempdir().unwrap();
    let o = qbm(dir.path(), &["tc", "--p", "1", "--zeta", "1", "--beta", "0.1", "--omega-c", "20", "--tmax", "6"]);
    assert_eq!(code(&o), 0);
    let tc = json(&dir.path().join("localization.json"))["t_c"].as_f64().unwrap();
    let times = format!("0,{},{}", 0.5 * tc, 2.0 * tc);
    let args = evolve_args(&["--state", "cat", "--x0", "3", "--grid-n", "128", "--times", &times]);
    let o = qbm(dir.path(), &args);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let (cols, data) = rows(&dir.path().join("evolve_summary.csv"));
    assert_eq!(cols, ["t", "negativity_volume_W0", "min_W1"]);
    // before t_c the pointer weight is undefined, afterwards it is non-negative
    assert!(data[0][1] > 1e-3);
    assert!(data[0][2].is_nan() && data[1][2].is_nan());
    assert!(data[2][2] >= -1e-12);
    assert!(dir.path().join("wigner_001.bin").exists());
    assert!(dir.path().join("wigner_001.bin.json").exists());
    assert!(!dir.path().join("pointer_weight_001.bin").exists());
    assert!(dir.path().join("pointer_weight_002.bin").exists());
}

#[test]
fn evolve_gaussian_has_no_negativity() {
    let dir = tempfile::tempdir().unwrap();
    let args = evolve_args(&["--d", "1,-0.5", "--sigma", "1,0.2,0.8", "--grid-n", "64", "--times", "0,0.5,2,5"]);
    let o = qbm(dir.path(), &args);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let (_, data) = rows(&dir.path().join("evolve_summary.csv"));
    assert_eq!(data.len(), 4);
    for r in &data {
        assert!(r[1] < 1e-12, "negativity {} at t = {}", r[1], r[0]);
    }
}

#[test]
fn evolve_beyond_horizon_is_range_error() {
    let dir = tempfile::tempdir().unwrap();
    let o = qbm(dir.path(), &evolve_args(&["--grid-n", "64", "--times", "1,7"]));
    assert_eq!(code(&o), 4);
    let err: serde_json::Value = serde_json::from_slice(&o.stderr).unwrap();
    assert_eq!(err["error"], "out_of_range");
}

#[test]
fn figure1_slope_rows_and_monotonicity() {
    let dir = tempfile::tempdir().unwrap();
    let o = qbm(dir.path(), &["figure1"]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let stdout = String::from_utf8(o.stdout).unwrap();
    let slope: f64 = stdout
        .lines()
        .find_map(|l| l.strip_prefix("slope "))
        .unwrap()
        .parse()
        .unwrap();
    assert!((slope + 1.0).abs() < 1e-3);
    let (cols, data) = rows(&dir.path().join("figure1.csv"));
    assert_eq!(cols, ["zeta", "log10_zeta", "Tc", "log10_Tc"]);
    assert_eq!(data.len(), 17);
    assert!(data.windows(2).all(|w| w[1][2] < w[0][2]));
    let gp = std::fs::read_to_string(dir.path().join("figure1.gp")).unwrap();
    assert!(gp.starts_with("# qbm"));
    assert!(gp.contains("figure1.csv"));

    let o = qbm(dir.path(), &["figure1", "--zetas", "0.1,0.2,0.5,1,2,5,10"]);
    assert_eq!(code(&o), 4);
    let o = qbm(dir.path(), &["figure1", "--n-zeta", "9"]);
    assert_eq!(code(&o), 0);
    assert_eq!(rows(&dir.path().join("figure1.csv")).1.len(), 9);
}

#[test]
fn outputs_are_byte_identical_across_runs_and_thread_counts() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    let base = ["tc", "--p", "0.5", "--zeta", "1", "--beta", "1", "--omega-c", "20", "--tmax", "10"];
    assert_eq!(code(&qbm(a.path(), &base)), 0);
    let mut threaded = vec!["--threads", "3"];
    threaded.extend_from_slice(&base);
    assert_eq!(code(&qbm(b.path(), &threaded)), 0);
    for name in ["moments.csv", "pointer_basis.json", "localization.json"] {
        let x = std::fs::read(a.path().join(name)).unwrap();
        let y = std::fs::read(b.path().join(name)).unwrap();
        assert!(x == y, "{name} differs between runs");
    }
}

#[test]
fn every_output_carries_the_fingerprint() {
    let dir = tempfile::tempdir().unwrap();
    let o = qbm(dir.path(), &["moments", "--p", "1.5", "--zeta", "0.5", "--beta", "2", "--omega-c", "20", "--tmax", "8"]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let csv = std::fs::read_to_string(dir.path().join("moments.csv")).unwrap();
    let fp = csv.lines().nth(1).unwrap().to_string();
    assert!(fp.starts_with("# config "));
    for key in ["p=1.5", "zeta=0.5", "beta=2.0", "omega_c=20.0", "cutoff=exponential", "tmax=8.0", "step=", "decimation=8"] {
        assert!(fp.contains(key), "{key} missing from {fp}");
    }
    let basis = json(&dir.path().join("pointer_basis.json"));
    assert_eq!(format!("# {}", basis["header"][1].as_str().unwrap()), fp);
}
