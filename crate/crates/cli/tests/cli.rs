use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_gpgd"))
}

fn repo() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../..")
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("gpgd runs")
}

fn json(out: &Output) -> Value {
    serde_json::from_slice(&out.stdout).unwrap_or_else(|e| {
        panic!("stdout is not JSON ({e}): {}\nstderr: {}", String::from_utf8_lossy(&out.stdout), String::from_utf8_lossy(&out.stderr))
    })
}

fn recover(config: &Path, out_dir: &Path) -> Output {
    bin().arg("recover").arg(config).arg("--out-dir").arg(out_dir).output().expect("gpgd runs")
}

fn write_config(dir: &Path, name: &str, text: &str) -> PathBuf {
    let p = dir.join(name);
    std::fs::write(&p, text).unwrap();
    p
}

const SMALL: &str = r#"
[model]
kind = "sparse"
n = 16
k = 2

[operator]
kind = "dense-gaussian"
m = 12
seed = 4

[solver]
algorithm = "gpgd"
mu = 1.0
max_iters = 400

[projection]
kind = "orth"

[target]
kind = "sampled"
seed = 3

[outputs]
trace = "trace.csv"
diagnostics_csv = "diag.csv"
diagnostics_json = "diag.json"
"#;

#[test]
fn bundled_sparse_config_converges() {
    let dir = tempfile::tempdir().unwrap();
    let out = recover(&repo().join("configs/sparse-iht-small.toml"), dir.path());
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let s = json(&out);
    assert!(s["fitted_rate"].as_f64().unwrap() < 1.0);
    assert_eq!(s["rate_bounded"], Value::Bool(true));
    let base = dir.path().join("out/sparse-iht-small");
    for f in ["trace.csv", "diagnostics.csv", "diagnostics.json"] {
        assert!(base.join(f).is_file(), "{f} missing");
    }
    let trace = std::fs::read_to_string(base.join("trace.csv")).unwrap();
    assert!(trace.starts_with("n,error,objective,step\n"));
    let diag: Value = serde_json::from_slice(&std::fs::read(base.join("diagnostics.json")).unwrap()).unwrap();
    assert!(diag["fit"]["r"].as_f64().unwrap() < 1.0);
}

#[test]
fn heavier_blur_is_not_faster() {
    let dir = tempfile::tempdir().unwrap();
    let rate = |name: &str| {
        let out = recover(&repo().join(format!("configs/{name}.toml")), dir.path());
        assert_eq!(out.status.code(), Some(0), "{name}: {}", String::from_utf8_lossy(&out.stderr));
        json(&out)["fitted_rate"].as_f64().unwrap()
    };
    let r1 = rate("pnp-haar-blur1");
    let r3 = rate("pnp-haar-blur3");
    assert!(r1 < 1.0 && r3 < 1.0, "{r1} {r3}");
    assert!(r3 >= r1, "blur 3.0 rate {r3} < blur 1.0 rate {r1}");
    let mask = rate("pnp-haar-mask");
    assert!(mask < 1.0);
}

#[test]
fn outputs_are_deterministic_and_match_golden() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    let cfg = repo().join("configs/sparse-iht-small.toml");
    assert_eq!(recover(&cfg, a.path()).status.code(), Some(0));
    assert_eq!(recover(&cfg, b.path()).status.code(), Some(0));
    for f in ["trace.csv", "diagnostics.csv", "diagnostics.json"] {
        let x = std::fs::read(a.path().join("out/sparse-iht-small").join(f)).unwrap();
        let y = std::fs::read(b.path().join("out/sparse-iht-small").join(f)).unwrap();
        assert_eq!(x, y, "{f} differs between runs");
    }
    let golden = std::fs::read(Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/golden/sparse-iht-small.diagnostics.csv")).unwrap();
    let got = std::fs::read(a.path().join("out/sparse-iht-small/diagnostics.csv")).unwrap();
    assert!(got == golden, "diagnostics CSV differs from the stored golden file");
}

#[test]
fn malformed_config_reports_line() {
    let dir = tempfile::tempdir().unwrap();
    let p = write_config(dir.path(), "bad.toml", &SMALL.replace("m = 12", "m = = 12"));
    let out = recover(&p, dir.path());
    assert_eq!(out.status.code(), Some(2));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("line 9,"), "{err}");
}

#[test]
fn unknown_key_is_a_config_error() {
    let dir = tempfile::tempdir().unwrap();
    let p = write_config(dir.path(), "bad.toml", &SMALL.replace("max_iters = 400", "max_iters = 400\nmomentum = 0.9"));
    let out = recover(&p, dir.path());
    assert_eq!(out.status.code(), Some(2));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("momentum") && err.contains("line 16,"), "{err}");
    assert!(!dir.path().join("trace.csv").exists());
}

#[test]
fn missing_config_is_a_usage_error() {
    let out = run(&["recover", "/nonexistent/config.toml"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn json_config_is_accepted() {
    let dir = tempfile::tempdir().unwrap();
    let text = r#"{
        "model": {"kind": "sparse", "N": 16, "k": 2},
        "operator": {"kind": "dense-gaussian", "m": 12, "N": 16, "seed": 4},
        "solver": {"algorithm": "gpgd", "mu": 1.0, "max_iters": 400},
        "projection": {"kind": "orth"},
        "target": {"kind": "sampled", "seed": 3},
        "outputs": {"trace": "trace.csv"}
    }"#;
    let p = write_config(dir.path(), "small.json", text);
    let out = recover(&p, dir.path());
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let t = write_config(dir.path(), "small.toml", SMALL);
    let other = tempfile::tempdir().unwrap();
    assert_eq!(recover(&t, other.path()).status.code(), Some(0));
    assert_eq!(std::fs::read(dir.path().join("trace.csv")).unwrap(), std::fs::read(other.path().join("trace.csv")).unwrap());
}

#[test]
fn divergence_exits_3_with_partial_outputs() {
    let dir = tempfile::tempdir().unwrap();
    let text = SMALL.replace("algorithm = \"gpgd\"\nmu = 1.0", "algorithm = \"landweber\"\nmu = 20.0");
    let p = write_config(dir.path(), "diverge.toml", &text);
    let out = recover(&p, dir.path());
    assert_eq!(out.status.code(), Some(3), "{}", String::from_utf8_lossy(&out.stderr));
    assert!(json(&out)["diverged"].as_bool().unwrap());
    let trace = std::fs::read_to_string(dir.path().join("trace.csv")).unwrap();
    assert!(trace.lines().count() > 2);
}

#[test]
fn file_target_roundtrips_through_gpim() {
    let dir = tempfile::tempdir().unwrap();
    // piecewise-constant 4x8 image: two Haar coefficients
    let mut bytes = b"GPIM".to_vec();
    bytes.extend_from_slice(&4u32.to_le_bytes());
    bytes.extend_from_slice(&8u32.to_le_bytes());
    for i in 0..32 {
        let v: f64 = if i < 16 { 0.75 } else { 0.25 };
        bytes.extend_from_slice(&v.to_le_bytes());
    }
    std::fs::write(dir.path().join("target.gpim"), &bytes).unwrap();
    let text = r#"
[model]
kind = "haar-sparse"
n = 32
k = 2

[operator]
kind = "blur"
sigma = 0.7

[solver]
algorithm = "pnp-pgm"
mu = 1.0
max_iters = 2000

[projection]
kind = "haar-ht"
k = 2

[target]
kind = "file"
path = "target.gpim"

[outputs]
estimate = "estimate.gpim"
"#;
    let p = write_config(dir.path(), "img.toml", text);
    let out = recover(&p, dir.path());
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    assert!(json(&out)["final_error"].as_f64().unwrap() < 1e-8);
    let est = std::fs::read(dir.path().join("estimate.gpim")).unwrap();
    assert_eq!(est.len(), bytes.len());
    assert_eq!(&est[..12], &bytes[..12]);
}

#[test]
fn external_projection_matches_builtin() {
    let dir = tempfile::tempdir().unwrap();
    let plugin = repo().join("plugins/haar_ht.py");
    let base = std::fs::read_to_string(repo().join("configs/pnp-haar-blur1.toml")).unwrap();
    let ext = base.replace(
        "kind = \"haar-ht\"\nk = 8",
        &format!("kind = \"external\"\ncommand = [\"python3\", {:?}, \"8\"]", plugin.display().to_string()),
    );
    assert_ne!(ext, base);
    let p = write_config(dir.path(), "ext.toml", &ext);
    let a = json(&recover(&p, dir.path()));
    let b = json(&recover(&repo().join("configs/pnp-haar-blur1.toml"), dir.path()));
    assert_eq!(a["iterations"], b["iterations"]);
    let (ea, eb) = (a["final_error"].as_f64().unwrap(), b["final_error"].as_f64().unwrap());
    assert!((ea - eb).abs() <= 1e-9, "{ea} vs {eb}");
}

#[test]
fn certify_subspace_is_nonexpansive() {
    let out = run(&["certify", "--model", "subspace", "--N", "6", "--dim", "2", "--trials", "5000"]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let b = json(&out)["beta_lower"].as_f64().unwrap();
    assert!(b <= 1.0 + 1e-9, "{b}");
}

#[test]
fn certify_eps_lines_approaches_two() {
    let out = run(&["certify", "--model", "eps-lines", "--eps", "0.01", "--trials", "20000"]);
    assert_eq!(out.status.code(), Some(0));
    let b = json(&out)["beta_lower"].as_f64().unwrap();
    assert!(b >= 1.9999 - 1e-4 && b <= 2.0 + 1e-9, "{b}");
}

#[test]
fn certify_sparse_stays_below_golden_ratio() {
    let out = run(&["certify", "--model", "sparse", "--N", "12", "--k", "3", "--trials", "20000", "--upper"]);
    assert_eq!(out.status.code(), Some(0));
    let v = json(&out);
    let b = v["beta_lower"].as_f64().unwrap();
    assert!(b <= 1.6181, "{b}");
    let upper = v["beta_upper"].as_f64().unwrap();
    assert!(upper + 1e-9 >= b, "{upper} < {b}");
    assert!(!v["witnesses"].as_array().unwrap().is_empty());
}

#[test]
fn certify_unknown_tag_is_a_usage_error() {
    assert_eq!(run(&["certify", "--model", "banana"]).status.code(), Some(2));
    assert_eq!(run(&["certify", "--projection", "banana"]).status.code(), Some(2));
}

#[test]
fn verify_suites_pass() {
    for suite in ["lemmas-q-r", "orth-props", "rip", "contraction", "ht-constants", "fk-identities"] {
        let out = run(&["verify", suite]);
        assert_eq!(out.status.code(), Some(0), "{suite}: {}", String::from_utf8_lossy(&out.stdout));
        let v = json(&out);
        assert_eq!(v["passed"], Value::Bool(true));
        assert!(v["checks"].as_u64().unwrap() > 0);
        assert!(v["failures"].as_array().unwrap().is_empty());
    }
}

#[test]
fn verify_unknown_suite_exits_2() {
    let out = run(&["verify", "no-such-suite"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("lemmas-q-r"));
}

#[test]
fn ric_identity_is_exact() {
    let out = run(&["ric", "--operator", "identity", "--N", "8", "--k", "1"]);
    assert_eq!(out.status.code(), Some(0));
    let v = json(&out);
    assert_eq!(v["delta"].as_f64().unwrap(), 0.0);
    assert!((v["optimal"]["mu"].as_f64().unwrap() - 1.0).abs() < 1e-6);
    assert!(v["optimal"]["delta"].as_f64().unwrap() < 1e-6);
}

#[test]
fn ric_gaussian_matches_golden() {
    let golden: Value =
        serde_json::from_slice(&std::fs::read(Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/golden/ric_gaussian_m6_n8_k1.json")).unwrap())
            .unwrap();
    let out = run(&["ric", "--operator", "gaussian", "--m", "6", "--N", "8", "--k", "1"]);
    assert_eq!(out.status.code(), Some(0));
    let v = json(&out);
    let close = |a: &Value, b: &Value| (a.as_f64().unwrap() - b.as_f64().unwrap()).abs() <= 1e-9;
    assert!(close(&v["delta"], &golden["delta_at_mu_1"]), "{} vs {}", v["delta"], golden["delta_at_mu_1"]);
    assert!(close(&v["optimal"]["closed_form_mu"], &golden["closed_form_mu"]));
    assert!(close(&v["optimal"]["delta"], &golden["optimal_delta"]), "{} vs {}", v["optimal"]["delta"], golden["optimal_delta"]);
}

#[test]
fn ric_monte_carlo_is_below_exact() {
    let args = ["ric", "--operator", "gaussian", "--m", "6", "--N", "8", "--k", "1", "--mu", "0.4"];
    let exact = json(&run(&args))["delta"].as_f64().unwrap();
    let mut mc_args = args.to_vec();
    mc_args.extend(["--monte-carlo", "--trials", "5000"]);
    let out = run(&mc_args);
    assert_eq!(out.status.code(), Some(0));
    let v = json(&out);
    assert_eq!(v["mode"], Value::String("monte-carlo-lower".into()));
    let mc = v["delta"].as_f64().unwrap();
    assert!(mc <= exact + 1e-12, "{mc} > {exact}");
}

#[test]
fn ric_budget_needs_monte_carlo() {
    let args = ["ric", "--operator", "gaussian", "--m", "20", "--N", "40", "--k", "4"];
    let out = run(&args);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("--monte-carlo"));
    let mut mc = args.to_vec();
    mc.extend(["--monte-carlo", "--trials", "2000"]);
    assert_eq!(run(&mc).status.code(), Some(0));
}
