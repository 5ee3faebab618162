use std::path::{Path, PathBuf};
use std::process::{Command, Output};

const TINY: &str = "[model]
n_x = 2
n_y = 2
n_z = 2
spacing_a = 1.0
v0 = -235.0
hbar_c = 197.327
nucleon_mass = 938.92

[qpe]
w = 2
alpha = 1
steps_k0 = 2
q_half = 0, 0, 1

[noise]
p = 0, 1e-3
trajectories = 3

[run]
seed = 5
";

fn dir(name: &str) -> PathBuf {
    let d = Path::new(env!("CARGO_TARGET_TMPDIR")).join("cli").join(name);
    let _ = std::fs::remove_dir_all(&d);
    std::fs::create_dir_all(&d).unwrap();
    d
}

fn nucresp(out: &Path, config: Option<&str>, args: &[&str]) -> Output {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_nucresp"));
    cmd.arg("--out-dir").arg(out);
    if let Some(text) = config {
        let p = out.join("run.conf");
        std::fs::write(&p, text).unwrap();
        cmd.arg("--config").arg(p);
    }
    cmd.args(args).output().unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn manifest(out: &Path, command: &str) -> serde_json::Value {
    let text = std::fs::read_to_string(out.join(format!("{command}.manifest.json"))).unwrap();
    serde_json::from_str(&text).unwrap()
}

#[test]
fn model_on_tiny_lattice() {
    let d = dir("model");
    let o = nucresp(&d, Some(TINY), &["model"]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    assert!(stdout(&o).contains("n_qubits = 3"));
    let spectrum = std::fs::read_to_string(d.join("spectrum.csv")).unwrap();
    assert_eq!(spectrum.lines().count(), 9);
    assert!(spectrum.starts_with("index,energy_mev"));
    let m = manifest(&d, "model");
    assert_eq!(m["command"], "model");
    assert_eq!(m["seed"], 5);
    assert_eq!(m["input_hash"].as_str().unwrap().len(), 64);
    assert!(m["outputs"].as_array().unwrap().iter().any(|v| v == "hamiltonian.pauli"));
}

#[test]
fn synth_reports_counts() {
    let d = dir("synth");
    let o = nucresp(&d, None, &["synth", "--target", "potential", "--variant", "gray_code"]);
    assert_eq!(o.status.code(), Some(0));
    let counts = std::fs::read_to_string(d.join("counts.csv")).unwrap();
    assert!(counts.lines().any(|l| l == "cnot,510"), "{counts}");
    let o = nucresp(&d, None, &["synth", "--target", "potential", "--variant", "mcu_feedforward", "--qubits", "12"]);
    assert_eq!(o.status.code(), Some(0));
    let counts = std::fs::read_to_string(d.join("counts.csv")).unwrap();
    assert!(counts.lines().any(|l| l == "cnot,32") && counts.lines().any(|l| l == "t,40"), "{counts}");
    let o = nucresp(&d, None, &["synth", "--target", "step", "--steps", "0"]);
    assert_eq!(o.status.code(), Some(0));
}

#[test]
fn response_and_noise_sweep() {
    let d = dir("response");
    let o = nucresp(&d, Some(TINY), &["response"]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let csv = std::fs::read_to_string(d.join("response.csv")).unwrap();
    let total: f64 = csv.lines().skip(1).map(|l| l.split(',').nth(3).unwrap().parse::<f64>().unwrap()).sum();
    assert!((total - 1.0).abs() < 1e-5, "{csv}");
    assert_eq!(csv.lines().count(), 5);
    let o = nucresp(&d, Some(TINY), &["noise-sweep", "--threads", "1"]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let summary = std::fs::read_to_string(d.join("noise_summary.csv")).unwrap();
    assert_eq!(summary.lines().count(), 3);
    let first = std::fs::read_to_string(d.join("noise_bins.csv")).unwrap();
    nucresp(&d, Some(TINY), &["noise-sweep", "--threads", "1"]);
    assert_eq!(first, std::fs::read_to_string(d.join("noise_bins.csv")).unwrap());
    let o = nucresp(&d, Some(TINY), &["--mode", "shots", "--shots", "200", "response"]);
    assert_eq!(o.status.code(), Some(0));
}

#[test]
fn configuration_errors_exit_2() {
    let d = dir("errors");
    let o = nucresp(&d, Some(&TINY.replace("n_y = 2\n", "")), &["model"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("model.n_y"));
    let o = nucresp(&d, Some(TINY), &["noise-sweep", "--p", ""]);
    assert_eq!(o.status.code(), Some(2));
    let o = nucresp(&d, Some(&TINY.replace("p = 0, 1e-3", "p =")), &["noise-sweep"]);
    assert_eq!(o.status.code(), Some(2));
    let o = nucresp(&d, Some(TINY), &["synth", "--target", "nonsense"]);
    assert_eq!(o.status.code(), Some(2));
    let o = nucresp(&d, None, &["--mode", "shots", "response"]);
    assert_eq!(o.status.code(), Some(2));
    let o = nucresp(&d, None, &["frobnicate"]);
    assert_eq!(o.status.code(), Some(2));
    let o = nucresp(&d, Some("[model]\nn_x = 2\n[mystery]\nk = 1\n"), &["model"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn verify_passes_and_flags_bad_tables() {
    let d = dir("verify");
    let o = nucresp(&d, None, &["verify"]);
    assert_eq!(o.status.code(), Some(0), "{}", stdout(&o));
    assert!(stdout(&o).lines().all(|l| l.starts_with("PASS ")));
    assert!(d.join("verify.csv").exists());
    let bad = d.join("bad.csv");
    std::fs::write(&bad, "case,cnot,rz,conditioned_cz,t\nkinetic_nq9,17,18,0,0\n").unwrap();
    let o = nucresp(&d, None, &["verify", "--table", bad.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stdout(&o).contains("FAIL counts.kinetic_nq9"));
    let o = nucresp(&d, None, &["verify", "--table", d.join("missing.csv").to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1));
}
