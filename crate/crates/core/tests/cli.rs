use std::fs;
use std::path::{Path, PathBuf};

use teamsearch::cli::{run, EXIT_CONFIG, EXIT_OK};

const THREE: &str = r#"
[scope_bounds]
lo = 0.1
hi = 10.0

[well_ordered]
betas = [1.0, 1.2, 2.0]
cost = { family = "scaled_exponential", b = 1.0 }

[sim]
n_paths = 4000
dt = 0.001
seed = 7
"#;

fn invoke(args: &[&str]) -> (i32, String, String) {
    let mut out = Vec::new();
    let mut err = Vec::new();
    let argv = std::iter::once("teamsearch").chain(args.iter().copied());
    let code = run(argv, &mut out, &mut err);
    (code, String::from_utf8(out).unwrap(), String::from_utf8(err).unwrap())
}

fn scenario(dir: &Path, name: &str, text: &str) -> PathBuf {
    let p = dir.join(name);
    fs::write(&p, text).unwrap();
    p
}

fn rows(csv: &str) -> Vec<Vec<String>> {
    csv.lines()
        .map(|l| l.split(',').map(str::to_string).collect())
        .collect()
}

#[test]
fn validate_echoes_normalized_config() {
    let dir = tempfile::tempdir().unwrap();
    let p = scenario(dir.path(), "three.toml", THREE);
    let (code, out, _) = invoke(&["validate", p.to_str().unwrap()]);
    assert_eq!(code, EXIT_OK);
    let again = scenario(dir.path(), "echo.toml", &out);
    let (code2, out2, _) = invoke(&["validate", again.to_str().unwrap()]);
    assert_eq!(code2, EXIT_OK);
    assert_eq!(out, out2);
}

#[test]
fn config_errors_exit_with_two() {
    let dir = tempfile::tempdir().unwrap();
    let cases = [
        THREE.replace("lo = 0.1\nhi = 10.0\n", "lo = 5.0\nhi = 1.0\n"),
        THREE.replace("[1.0, 1.2, 2.0]", "[1.0, 2.0, 1.2]"),
        format!("{THREE}\nunknown_key = 1\n"),
        "not toml at all [".to_string(),
        THREE.replace("[scope_bounds]\nlo = 0.1\nhi = 10.0\n", ""),
    ];
    for (i, text) in cases.iter().enumerate() {
        let p = scenario(dir.path(), &format!("bad{i}.toml"), text);
        let (code, _, err) = invoke(&["solve", p.to_str().unwrap()]);
        assert_eq!(code, EXIT_CONFIG, "case {i}: {err}");
        assert!(!err.is_empty());
    }
    let (code, _, _) = invoke(&["solve", "/nonexistent/scenario.toml"]);
    assert_eq!(code, EXIT_CONFIG);
    let (code, _, _) = invoke(&["frobnicate"]);
    assert_eq!(code, EXIT_CONFIG);
}

#[test]
fn solve_reports_symmetric_corner() {
    let dir = tempfile::tempdir().unwrap();
    let p = scenario(dir.path(), "three.toml", THREE);
    let (code, out, _) = invoke(&["solve", p.to_str().unwrap()]);
    assert_eq!(code, EXIT_OK);
    let t = rows(&out);
    assert_eq!(t[0], ["agent", "sigma", "cost_rate", "drawdown"]);
    assert_eq!(t.len(), 4);
    let total: f64 = t[1..].iter().map(|r| r[1].parse::<f64>().unwrap()).sum();
    assert!((total - 2.0).abs() < 1e-6);

    let (code, sp, _) = invoke(&["solve", p.to_str().unwrap(), "--mode", "sp"]);
    assert_eq!(code, EXIT_OK);
    assert_ne!(out, sp);
}

#[test]
fn schedule_writes_file_and_lists_trace() {
    let dir = tempfile::tempdir().unwrap();
    let p = scenario(dir.path(), "three.toml", THREE);
    let dest = dir.path().join("schedule.csv");
    let (code, stdout, _) = invoke(&["schedule", p.to_str().unwrap(), "--out", dest.to_str().unwrap()]);
    assert_eq!(code, EXIT_OK);
    assert!(stdout.is_empty());
    let eq = fs::read_to_string(&dest).unwrap();
    assert!(eq.starts_with("wave,exiting,alliance,total_scope,drawdown"));
    assert!(eq.contains("{1,2,3}"));
    assert!(eq.contains("total"));

    let (code, sp, _) = invoke(&["schedule", p.to_str().unwrap(), "--mode", "sp"]);
    assert_eq!(code, EXIT_OK);
    assert!(sp.contains("L1"), "{sp}");
}

#[test]
fn simulate_agrees_and_is_reproducible() {
    let dir = tempfile::tempdir().unwrap();
    let p = scenario(dir.path(), "three.toml", THREE);
    let samples = dir.path().join("samples.csv");
    let args = [
        "simulate",
        p.to_str().unwrap(),
        "--dump-samples",
        samples.to_str().unwrap(),
    ];
    let (code, first, err) = invoke(&args);
    assert_eq!(code, EXIT_OK, "{err}");
    assert!(first.starts_with("quantity,analytic,monte_carlo,std_error,agreement"));
    assert!(!first.contains("FAIL"), "{first}");
    let dumped = fs::read_to_string(&samples).unwrap();
    assert!(dumped.lines().count() > 4000);
    let (_, second, _) = invoke(&args);
    assert_eq!(first, second);
    let (_, other, _) = invoke(&["simulate", p.to_str().unwrap(), "--seed", "8"]);
    assert_ne!(first, other);
}

#[test]
fn simulate_penalty_mode() {
    let dir = tempfile::tempdir().unwrap();
    let text = THREE
        .replace("[1.0, 1.2, 2.0]", "[1.0, 20.0]")
        .replace("n_paths = 4000", "n_paths = 3000")
        + "\n[penalty]\nalpha = 0.5\n";
    let p = scenario(dir.path(), "pair.toml", &text);
    let (code, out, err) = invoke(&["simulate", p.to_str().unwrap(), "--mode", "penalty"]);
    assert_eq!(code, EXIT_OK, "{err}");
    assert!(out.contains("continuation_freq"));
    assert!(out.contains("threshold"));

    let missing = scenario(
        dir.path(),
        "no_alpha.toml",
        &THREE.replace("[1.0, 1.2, 2.0]", "[1.0, 20.0]"),
    );
    let (code, _, _) = invoke(&["simulate", missing.to_str().unwrap(), "--mode", "penalty"]);
    assert_eq!(code, EXIT_CONFIG);
}

#[test]
fn scan_emits_grid_and_svg() {
    let dir = tempfile::tempdir().unwrap();
    let text = format!("{THREE}\n[scan]\nbeta2_range = [1.0, 3.0]\nbeta3_range = [1.0, 9.0]\nsteps = 8\n");
    let p = scenario(dir.path(), "scan.toml", &text);
    let svg = dir.path().join("scan.svg");
    let (code, out, err) = invoke(&["scan", p.to_str().unwrap(), "--svg", svg.to_str().unwrap()]);
    assert_eq!(code, EXIT_OK, "{err}");
    let t = rows(&out);
    assert_eq!(t[0], ["beta2", "beta3", "eq_label", "sp_label"]);
    assert_eq!(t.len(), 65);
    assert!(fs::read_to_string(&svg).unwrap().starts_with("<svg"));

    let pair = scenario(dir.path(), "pair.toml", &text.replace("[1.0, 1.2, 2.0]", "[1.0, 2.0]"));
    let (code, _, _) = invoke(&["scan", pair.to_str().unwrap()]);
    assert_eq!(code, EXIT_CONFIG);
}
