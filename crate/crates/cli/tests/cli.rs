use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;
use tempfile::TempDir;
use twomode::closedform::{self, RootChoice};
use twomode::verify;
use twomode::{ModelParams, State};
use twomode_cli::commands::replay_coefficients;

const FIXTURE_PARAMS: &str =
    r#""params": {"alpha1": {"re": 0}, "alpha2": {"re": 0}, "beta1": {"re": 1}, "beta2": {"re": -1}}"#;
const FIXTURE_X0: &str = r#""x0": {"x1": {"re": 2}, "x2": {"re": 1}}"#;

struct Run {
    dir: TempDir,
}

impl Run {
    fn new(config: &str) -> Self {
        let dir = tempfile::tempdir().unwrap();
        std::fs::write(dir.path().join("config.json"), config).unwrap();
        Self { dir }
    }

    fn out(&self) -> PathBuf {
        self.dir.path().join("out")
    }

    fn exec(&self, command: &str, extra: &[&str]) -> Output {
        Command::new(env!("CARGO_BIN_EXE_twomode"))
            .arg(command)
            .arg("--config")
            .arg(self.dir.path().join("config.json"))
            .arg("--out")
            .arg(self.out())
            .args(extra)
            .output()
            .unwrap()
    }

    fn json(&self, name: &str) -> Value {
        serde_json::from_str(&std::fs::read_to_string(self.out().join(name)).unwrap()).unwrap()
    }

    fn text(&self, name: &str) -> String {
        std::fs::read_to_string(self.out().join(name)).unwrap()
    }
}

fn fixture(extra: &str) -> String {
    let mut s = format!("{{{FIXTURE_PARAMS}, {FIXTURE_X0}");
    if !extra.is_empty() {
        s.push_str(", ");
        s.push_str(extra);
    }
    s.push('}');
    s
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn re(v: &Value) -> f64 {
    v["re"].as_f64().unwrap()
}

fn last_row(csv: &str) -> Vec<f64> {
    csv.lines().last().unwrap().split(',').map(|x| x.parse().unwrap()).collect()
}

#[test]
fn solve_exact_fixture() {
    let run = Run::new(&fixture(r#""grid": {"t_end": 4, "num_samples": 5}"#));
    let o = run.exec("solve-exact", &[]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let c = run.json("coefficients.json");
    let gamma: Vec<f64> = (0..2).flat_map(|n| (0..2).map(move |m| (n, m))).map(|(n, m)| re(&c["gamma"][n][m])).collect();
    for (got, want) in gamma.iter().zip([0.5, 1.5, -0.5, 1.5]) {
        assert!((got - want).abs() < 1e-14, "{gamma:?}");
    }
    assert!((re(&c["k"][0]) - 2.0).abs() < 1e-14);
    assert!((re(&c["k"][1]) - 2.0 / 9.0).abs() < 1e-14);

    let row = last_row(&run.text("trajectory.csv"));
    let s17 = 17f64.sqrt();
    assert_eq!(row[0], 4.0);
    assert!((row[1] - (1.5 + 0.5 * s17)).abs() < 1e-12);
    assert!((row[3] - (-1.5 + 0.5 * s17)).abs() < 1e-12);
    assert_eq!(run.json("status.json")["status"], "completed");
}

#[test]
fn zero_state_is_degenerate() {
    let run = Run::new(&format!("{{{FIXTURE_PARAMS}, \"x0\": {{\"x1\": {{\"re\": 0}}, \"x2\": {{\"re\": 0}}}}}}"));
    let o = run.exec("solve-exact", &[]);
    assert_eq!(o.status.code(), Some(3));
    assert!(stderr(&o).contains("DegenerateInitialState"), "{}", stderr(&o));
    assert_eq!(run.json("status.json")["exit_code"], 3);
}

#[test]
fn missing_field_names_it() {
    let run = Run::new(
        r#"{"params": {"alpha1": {"re": 0}, "alpha2": {"re": 0}, "beta1": {"re": 1}},
            "x0": {"x1": {"re": 2}, "x2": {"re": 1}}}"#,
    );
    let o = run.exec("solve-exact", &[]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("beta2"), "{}", stderr(&o));
}

#[test]
fn confluent_parameters_are_rejected() {
    // alpha1 = 2, alpha2 = 0, beta = (1, 1) makes r vanish
    let run = Run::new(
        r#"{"params": {"alpha1": {"re": 2}, "alpha2": {"re": 0}, "beta1": {"re": 1}, "beta2": {"re": 1}},
            "x0": {"x1": {"re": 1}, "x2": {"re": 1}}}"#,
    );
    let o = run.exec("integrate", &[]);
    // the integrator itself does not need r, so this draw integrates fine
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let o = run.exec("solve-exact", &[]);
    assert_eq!(o.status.code(), Some(3));
    assert!(stderr(&o).contains("DegenerateParameters"), "{}", stderr(&o));
}

#[test]
fn integrate_matches_closed_form() {
    let run = Run::new(&fixture(r#""grid": {"t_end": 4, "num_samples": 81}"#));
    let o = run.exec("integrate", &[]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let row = last_row(&run.text("trajectory.csv"));
    let s17 = 17f64.sqrt();
    assert_eq!(row[0], 4.0);
    assert!((row[1] - (1.5 + 0.5 * s17)).abs() < 1e-7 * 3.6);
    assert!((row[3] - (-1.5 + 0.5 * s17)).abs() < 1e-7 * 3.6);
}

#[test]
fn integrate_reports_singularity() {
    let run = Run::new(
        r#"{"params": {"alpha1": {"re": 0}, "alpha2": {"re": 0}, "beta1": {"re": -1}, "beta2": {"re": 1}},
            "x0": {"x1": {"re": 2}, "x2": {"re": 1}}, "grid": {"t_end": 1}}"#,
    );
    let o = run.exec("integrate", &[]);
    assert_eq!(o.status.code(), Some(2));
    let status = run.json("status.json");
    assert_eq!(status["status"], "hit_singularity");
    let t = status["t_star"].as_f64().unwrap();
    assert!((t - 0.5).abs() < 1e-6, "{t}");
    let rows = run.text("trajectory.csv").lines().count() - 1;
    assert!(rows > 1 && rows < 401, "{rows}");
}

#[test]
fn zero_span_gives_one_row() {
    let run = Run::new(&fixture(r#""grid": {"t_end": 0}"#));
    let o = run.exec("integrate", &[]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let csv = run.text("trajectory.csv");
    assert_eq!(csv.lines().count(), 2);
    assert_eq!(csv.lines().nth(1), Some("0.0,2.0,0.0,1.0,0.0,3.0"));
}

#[test]
fn json_format() {
    let run = Run::new(&fixture(r#""grid": {"times": [0, 1]}"#));
    let o = run.exec("integrate", &["--format", "json"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let rows = run.json("trajectory.json");
    assert_eq!(rows.as_array().unwrap().len(), 2);
    assert_eq!(rows[0]["q_abs"], 3.0);
}

#[test]
fn verify_fixture_passes() {
    let run = Run::new(&fixture(r#""grid": {"t_end": 4}"#));
    let o = run.exec("verify", &[]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let report = run.json("report.json");
    assert_eq!(report["all_passed"], true);
    let names: Vec<&str> = report["checks"].as_array().unwrap().iter().map(|c| c["name"].as_str().unwrap()).collect();
    assert!(names.contains(&"conserved_product"));
    assert!(!names.contains(&"isochrony"));
}

#[test]
fn corrupted_gamma_fails_residual() {
    let run = Run::new(&fixture(r#""grid": {"t_end": 4}"#));
    let o = run.exec("verify", &["--corrupt-gamma", "1.01"]);
    assert_eq!(o.status.code(), Some(4));
    assert!(stderr(&o).contains("residual"), "{}", stderr(&o));
    let report = run.json("report.json");
    assert_eq!(report["checks"][0]["status"], "fail");
}

#[test]
fn verify_with_omega_checks_isochrony() {
    let run = Run::new(&fixture(r#""omega": 1.0, "grid": {"t_end": 4}"#));
    let o = run.exec("verify", &[]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let report = run.json("report.json");
    let iso = report["checks"].as_array().unwrap().iter().find(|c| c["name"] == "isochrony").unwrap();
    assert_eq!(iso["status"], "pass");
    assert!(iso["value"].as_f64().unwrap() < 1e-6);
    assert_eq!(report["isochrony"].as_array().unwrap().len(), 2);
}

#[test]
fn sweep_is_reproducible() {
    let run = Run::new(r#"{"seed": 5, "sweep": {"draws": 30}}"#);
    let read = |o: &Path| std::fs::read(o.join("sweep.csv")).unwrap();
    assert_eq!(run.exec("sweep", &[]).status.code(), Some(0));
    let first = read(&run.out());
    assert_eq!(run.exec("sweep", &[]).status.code(), Some(0));
    assert_eq!(first, read(&run.out()));
    assert_eq!(run.exec("sweep", &["--seed", "6"]).status.code(), Some(0));
    assert_ne!(first, read(&run.out()));
}

#[test]
fn sweep_records_degenerate_draws() {
    let run = Run::new(
        r#"{"sweep": {"draws": 5, "ranges": {
            "alpha1": {"re": [2, 2]}, "alpha2": {"re": [0, 0]},
            "beta1": {"re": [1, 1]}, "beta2": {"re": [1, 1]}}}}"#,
    );
    assert_eq!(run.exec("sweep", &[]).status.code(), Some(0));
    let csv = run.text("sweep.csv");
    let rows: Vec<&str> = csv.lines().skip(1).collect();
    assert_eq!(rows.len(), 5);
    assert!(rows.iter().all(|r| r.contains("DegenerateParameters")), "{csv}");
}

#[test]
fn sweep_period_classes() {
    // Both observed classes occur; see the ledger on the 4T class.
    let run = Run::new(r#"{"omega": 1.0, "seed": 5, "sweep": {"draws": 200}}"#);
    assert_eq!(run.exec("sweep", &[]).status.code(), Some(0));
    let mut reader = csv::Reader::from_path(run.out().join("sweep.csv")).unwrap();
    let headers = reader.headers().unwrap().clone();
    let col = headers.iter().position(|h| h == "iso_class").unwrap();
    let classes: Vec<String> = reader.records().map(|r| r.unwrap()[col].to_string()).collect();
    assert_eq!(classes.len(), 200);
    assert!(classes.iter().any(|c| c == "period_2T"));
    assert!(classes.iter().any(|c| c == "period_T"));
    assert!(classes.iter().all(|c| c != "inconclusive"));
}

#[test]
fn coefficients_round_trip() {
    let run = Run::new(&fixture(r#""omega": 0.7, "grid": {"t_end": 6, "num_samples": 97}"#));
    assert_eq!(run.exec("solve-exact", &[]).status.code(), Some(0));
    let times = verify::uniform_grid(6.0, 97);
    let replayed = replay_coefficients(&run.out().join("coefficients.json"), &times).unwrap();
    assert_eq!(replayed, run.text("trajectory.csv"));
}

#[test]
fn coefficients_match_library() {
    let run = Run::new(
        r#"{"params": {"alpha1": {"re": 0.3, "im": -0.2}, "alpha2": {"re": -1.1}, "beta1": {"re": 0.8, "im": 0.5}, "beta2": {"re": 1.4}},
            "x0": {"x1": {"re": 1, "im": 1}, "x2": {"re": -0.5}}}"#,
    );
    assert_eq!(run.exec("solve-exact", &[]).status.code(), Some(0));
    let c = run.json("coefficients.json");
    let p = ModelParams::new(
        num_complex::Complex64::new(0.3, -0.2),
        num_complex::Complex64::new(-1.1, 0.0),
        num_complex::Complex64::new(0.8, 0.5),
        num_complex::Complex64::new(1.4, 0.0),
    )
    .unwrap();
    let x0 = State::new(num_complex::Complex64::new(1.0, 1.0), num_complex::Complex64::new(-0.5, 0.0));
    let sol = closedform::solve_ivp_with(&p, x0, RootChoice::Principal).unwrap();
    assert_eq!(c["k"][0]["re"].as_f64().unwrap(), sol.rates[0].re);
    assert_eq!(c["k"][1]["im"].as_f64().unwrap(), sol.rates[1].im);
}
