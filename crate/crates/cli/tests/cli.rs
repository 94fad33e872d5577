use std::path::Path;
use std::process::{Command, Output};

use mnv_core::io::{read_field, write_field};
use mnv_core::{ComplexField, Grid};
use serde_json::Value;

const SMALL: [&str; 8] = ["--z-l", "6", "--z-n", "64", "--k-l", "5", "--k-n", "48"];

fn mnv(args: &[&str], out: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_mnv"))
        .args(args)
        .arg("--out")
        .arg(out)
        .arg("--threads")
        .arg("2")
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn report(dir: &Path, name: &str) -> Value {
    let text = std::fs::read_to_string(dir.join(format!("{name}.json"))).unwrap();
    serde_json::from_str(&text).unwrap()
}

fn with_small<'a>(args: &[&'a str]) -> Vec<&'a str> {
    let mut v = args.to_vec();
    v.extend_from_slice(&SMALL);
    v
}

#[test]
fn zero_field_has_zero_data() {
    let dir = tempfile::tempdir().unwrap();
    let input = dir.path().join("zero.mnvf");
    write_field(&ComplexField::zeros(Grid::new(6.0, 64).unwrap()), &input).unwrap();
    let o = mnv(&with_small(&["transform", "--direct", "--input", input.to_str().unwrap()]), dir.path());
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let r = read_field(dir.path().join("r.mnvf")).unwrap();
    assert_eq!(r.max_norm(), 0.0);
    assert!(dir.path().join("r.csv").exists());
    let rep = report(dir.path(), "transform");
    assert_eq!(rep["schema"], 1);
    assert_eq!(rep["direct"]["nodes"], 48 * 48);
}

#[test]
fn unreadable_input_exits_3() {
    let dir = tempfile::tempdir().unwrap();
    let o = mnv(&with_small(&["transform", "--direct", "--input", "/nonexistent/u.mnvf"]), dir.path());
    assert_eq!(o.status.code(), Some(3));
    let garbage = dir.path().join("bad.mnvf");
    std::fs::write(&garbage, b"not a field").unwrap();
    let o = mnv(&with_small(&["transform", "--direct", "--input", garbage.to_str().unwrap()]), dir.path());
    assert_eq!(o.status.code(), Some(3));
}

#[test]
fn usage_errors_exit_64() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(mnv(&["transform", "--bogus"], dir.path()).status.code(), Some(64));
    assert_eq!(mnv(&with_small(&["transform", "--direct"]), dir.path()).status.code(), Some(64));
    assert_eq!(mnv(&["verify", "--only", "nothing"], dir.path()).status.code(), Some(64));
    let o = mnv(&with_small(&["transform", "--direct", "--potential", "cosine:1,1,0"]), dir.path());
    assert_eq!(o.status.code(), Some(64));
}

#[test]
fn config_file_is_read_and_flags_override() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.cfg");
    std::fs::write(&cfg, "z_l = 6\nz_n = 32\nk_l = 5\nk_n = 24\nformats = csv\n").unwrap();
    let o = mnv(&["--config", cfg.to_str().unwrap(), "--k-n", "16", "transform", "--direct", "--amplitude", "0.1"], dir.path());
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let rep = report(dir.path(), "transform");
    assert_eq!(rep["config"]["z_grid"]["points"], 32);
    assert_eq!(rep["config"]["k_grid"]["points"], 16);
    assert!(dir.path().join("r.csv").exists());
    assert!(!dir.path().join("r.mnvf").exists());
}

#[test]
fn roundtrip_of_gaussian() {
    let dir = tempfile::tempdir().unwrap();
    let o = mnv(&with_small(&["transform", "--direct", "--inverse", "--amplitude", "0.5"]), dir.path());
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let err = report(dir.path(), "transform")["roundtrip_rel_error"].as_f64().unwrap();
    assert!(err < 1e-3, "roundtrip error {err}");
}

#[test]
fn outputs_are_deterministic() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    let args = ["--z-l", "6", "--z-n", "32", "--k-l", "5", "--k-n", "24", "transform", "--direct", "--potential", "gaussian:0.3,1,0.2-0.1i"];
    assert!(mnv(&args, a.path()).status.success());
    assert!(mnv(&args, b.path()).status.success());
    for f in ["r.mnvf", "r.csv"] {
        assert_eq!(std::fs::read(a.path().join(f)).unwrap(), std::fs::read(b.path().join(f)).unwrap());
    }
    let (mut ra, mut rb) = (report(a.path(), "transform"), report(b.path(), "transform"));
    ra.as_object_mut().unwrap().remove("created_unix");
    rb.as_object_mut().unwrap().remove("created_unix");
    ra["outputs_direct"] = Value::Null;
    rb["outputs_direct"] = Value::Null;
    assert_eq!(ra, rb);
}

#[test]
fn evolve_at_time_zero_and_conservation() {
    let dir = tempfile::tempdir().unwrap();
    let o = mnv(&with_small(&["evolve", "--phase", "ds", "--t", "0.1", "--amplitude", "0.3"]), dir.path());
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let rep = report(dir.path(), "evolve");
    let r = rep["r_norm"].as_f64().unwrap();
    assert!(rep["norm_drift"].as_f64().unwrap() <= 1e-14 * r);
    assert!(dir.path().join("u_t.mnvf").exists());
}

#[test]
fn small_amplitude_follows_linear_flow() {
    let dir = tempfile::tempdir().unwrap();
    let args = with_small(&["evolve", "--phase", "mnv", "--t", "0.1", "--amplitude", "0.01", "--linear-oracle"]);
    let o = mnv(&args, dir.path());
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let err = report(dir.path(), "evolve")["linear_oracle_rel_error"].as_f64().unwrap();
    assert!(err < 1e-2, "distance to linear flow {err}");
}

#[test]
fn residual_of_zero_field_and_threshold() {
    let dir = tempfile::tempdir().unwrap();
    let input = dir.path().join("zero.mnvf");
    write_field(&ComplexField::zeros(Grid::new(6.0, 32).unwrap()), &input).unwrap();
    let small = ["--k-l", "5", "--k-n", "24"];
    let mut args = vec!["residual", "--input", input.to_str().unwrap()];
    args.extend_from_slice(&small);
    let o = mnv(&args, dir.path());
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    assert_eq!(report(dir.path(), "residual")["ratio"], 0.0);

    let mut args = vec!["residual", "--amplitude", "0.3", "--tol", "1e-9", "--z-l", "6", "--z-n", "32"];
    args.extend_from_slice(&small);
    let o = mnv(&args, dir.path());
    assert_eq!(o.status.code(), Some(1));
    assert!(stdout(&o).starts_with("FAIL"));
}

#[test]
fn derive_check_golden() {
    let dir = tempfile::tempdir().unwrap();
    let o = mnv(&["derive", "--check-golden"], dir.path());
    assert_eq!(o.status.code(), Some(0), "{}", stdout(&o));
    let out = stdout(&o);
    assert!(out.contains("final equation: 4 terms, each with coefficient 3/4"));
    assert!(!out.contains("FAIL"));
    let rep = report(dir.path(), "derive");
    assert_eq!(rep["final_terms"], 4);
    assert_eq!(rep["pass"], true);
}

#[test]
fn derive_single_levels() {
    let dir = tempfile::tempdir().unwrap();
    let o = mnv(&["derive", "--level", "1", "--family", "plain"], dir.path());
    assert_eq!(o.status.code(), Some(0));
    let want = mnv_core::symbolic::parse("1/8*ub*dbi(u*ub) - 1/2*d(ub)").unwrap();
    let line = stdout(&o).lines().find(|l| l.starts_with("nu2_1 = ")).unwrap().to_string();
    assert_eq!(mnv_core::symbolic::parse(&line["nu2_1 = ".len()..]).unwrap(), want);

    let o = mnv(&["derive", "--family", "sharp", "--level", "0"], dir.path());
    let line = stdout(&o).lines().find(|l| l.starts_with("sharp_nu1_0 = ")).unwrap().to_string();
    let want = mnv_core::symbolic::parse("-1/4*dbi(u*ub)").unwrap();
    assert_eq!(mnv_core::symbolic::parse(&line["sharp_nu1_0 = ".len()..]).unwrap(), want);

    assert_eq!(mnv(&["derive", "--level", "4"], dir.path()).status.code(), Some(64));
}

#[test]
fn verify_residue_and_symmetry() {
    let dir = tempfile::tempdir().unwrap();
    let o = mnv(&["verify", "--only", "residue,symmetry,conservation"], dir.path());
    assert_eq!(o.status.code(), Some(0), "{}", stdout(&o));
    let out = stdout(&o);
    assert_eq!(out.lines().filter(|l| l.starts_with("PASS")).count(), 3);
    assert!(out.contains("|extracted - a^n|"));
    let rep = report(dir.path(), "verify");
    assert_eq!(rep["checks"][0]["values"]["errors"].as_array().unwrap().len(), 3);
}
