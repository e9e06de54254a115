use std::path::Path;
use std::process::Command;

use paracoh::harness::{io, Report};

fn paracoh(args: &[&str], out: &Path) -> (i32, String) {
    let o = Command::new(env!("CARGO_BIN_EXE_paracoh"))
        .args(args)
        .arg("--out")
        .arg(out)
        .env("PARACOH_THREADS", "2")
        .output()
        .unwrap();
    (o.status.code().unwrap(), String::from_utf8_lossy(&o.stderr).into_owned())
}

fn write_config(dir: &Path, json: &str) -> String {
    let p = dir.join("config.json");
    std::fs::write(&p, json).unwrap();
    p.display().to_string()
}

fn report(dir: &Path) -> Report {
    serde_json::from_str(&std::fs::read_to_string(dir.join("report.json")).unwrap()).unwrap()
}

const SMALL: &str = r#"{"components":[
  {"label":"a","factors":[{"kind":"principal","nu_im":1.0},{"kind":"complementary","nu":0.5}]},
  {"label":"b","factors":[{"kind":"discrete","n":2},{"kind":"principal","nu_im":0.0}]}],
  "k_per_axis": 8, "samples": 3}"#;

#[test]
fn verify_invariants_default_grid_passes() {
    let dir = tempfile::tempdir().unwrap();
    let (code, err) = paracoh(&["verify-invariants", "--k-per-axis", "6"], dir.path());
    assert_eq!(code, 0, "{err}");
    let r = report(dir.path());
    assert!(r.checks.iter().all(|c| c.passed));
    assert!(r.checks.iter().any(|c| c.name == "invariance_minus"));
}

#[test]
fn solve_top_reports_and_is_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), SMALL);
    let (code, err) = paracoh(&["solve-top", "--config", &cfg, "--seed", "42", "--t", "1,2"], dir.path());
    assert_eq!(code, 0, "{err}");
    let first = std::fs::read_to_string(dir.path().join("report.json")).unwrap();
    paracoh(&["solve-top", "--config", &cfg, "--seed", "42", "--t", "1,2"], dir.path());
    let second = std::fs::read_to_string(dir.path().join("report.json")).unwrap();
    assert_eq!(first, second);
    let r = report(dir.path());
    assert_eq!(r.components.len(), 2);
    assert!(r.summary["max_relative_residual"] <= 1e-6);
}

#[test]
fn obstructed_input_exits_with_3() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), SMALL);
    let mp = paracoh::tensor::MultiParam::with_default_gates(vec![
        paracoh::repn::SeriesParam::principal(1.0).unwrap(),
        paracoh::repn::SeriesParam::complementary(0.5).unwrap(),
    ])
    .unwrap();
    let phi = paracoh::tensor::phi_product(&mp, &paracoh::tensor::MultiTag::all_plus(2)).unwrap();
    let input = dir.path().join("phi.tensor.json");
    io::save_tensor(&input, &phi).unwrap();
    let (code, _) = paracoh(&["solve-top", "--config", &cfg, "--input", input.to_str().unwrap()], dir.path());
    assert_eq!(code, 3);
    assert!(report(dir.path()).components[0].status.contains("kernel"));
}

#[test]
fn gen_then_solve_form() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), SMALL);
    let (code, err) = paracoh(&["gen", "--config", &cfg, "--degree", "1"], dir.path());
    assert_eq!(code, 0, "{err}");
    let input = dir.path().join("b.form.json");
    assert!(input.exists());
    let (code, err) = paracoh(&["solve-form", "--config", &cfg, "--degree", "1", "--input", input.to_str().unwrap()], dir.path());
    assert_eq!(code, 0, "{err}");
}

#[test]
fn sweep_writes_csv() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), SMALL);
    let (code, err) = paracoh(&["sweep-bounds", "--config", &cfg], dir.path());
    assert_eq!(code, 0, "{err}");
    let csv = std::fs::read_to_string(dir.path().join("sweep.csv")).unwrap();
    assert!(csv.starts_with("param,value,bound,ratio\n"));
    let fit = &report(dir.path()).fits[0];
    assert!((fit.slope - fit.expected).abs() < 0.1);
}

#[test]
fn configuration_errors_exit_with_1() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), r#"{"components":[]}"#);
    assert_eq!(paracoh(&["solve-top", "--config", &cfg], dir.path()).0, 1);
    assert_eq!(paracoh(&["solve-top", "--t", "1,x"], dir.path()).0, 1);
    assert_eq!(paracoh(&["no-such-command"], dir.path()).0, 1);
    let gated = write_config(dir.path(), r#"{"components":[{"label":"g","factors":[{"kind":"complementary","nu":0.01}]}]}"#);
    assert_eq!(paracoh(&["solve-top", "--config", &gated], dir.path()).0, 1);
}

#[test]
fn top_degree_form_request_is_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), SMALL);
    assert_eq!(paracoh(&["solve-form", "--config", &cfg, "--degree", "2"], dir.path()).0, 1);
}
