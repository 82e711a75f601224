//! File formats written by the commands.
//!
//! Trajectory CSV files have the header `t,x1_re,x1_im,x2_re,x2_im,q_abs`,
//! where `q_abs = |Q(x)|` tracks how close a sample is to a singularity.
//! Floats use Rust's shortest round-trip representation, so re-reading a
//! file recovers every value exactly.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use twomode::closedform::ClosedFormSolution;
use twomode::model::quadratic_form;
use twomode::{CoefficientDiagnostics, ModelParams, Trajectory};

use crate::config::{ComplexValue, ParamsConfig, StateConfig};
use crate::{CliError, Format};

pub const TRAJECTORY_HEADER: &str = "t,x1_re,x1_im,x2_re,x2_im,q_abs";

/// Shortest representation that parses back to the same `f64`.
pub fn fmt_f64(x: f64) -> String {
    format!("{x:?}")
}

pub fn trajectory_csv(traj: &Trajectory, params: &ModelParams) -> String {
    let mut out = String::with_capacity(64 * (traj.len() + 1));
    out.push_str(TRAJECTORY_HEADER);
    out.push('\n');
    for (t, s) in traj.times.iter().zip(&traj.states) {
        let q = quadratic_form(params, s).norm();
        let _ = writeln!(
            out,
            "{},{},{},{},{},{}",
            fmt_f64(*t),
            fmt_f64(s.x1.re),
            fmt_f64(s.x1.im),
            fmt_f64(s.x2.re),
            fmt_f64(s.x2.im),
            fmt_f64(q)
        );
    }
    out
}

#[derive(Debug, Serialize)]
struct TrajectoryRow {
    t: f64,
    x1_re: f64,
    x1_im: f64,
    x2_re: f64,
    x2_im: f64,
    q_abs: f64,
}

pub fn trajectory_json(traj: &Trajectory, params: &ModelParams) -> String {
    let rows: Vec<TrajectoryRow> = traj
        .times
        .iter()
        .zip(&traj.states)
        .map(|(t, s)| TrajectoryRow {
            t: *t,
            x1_re: s.x1.re,
            x1_im: s.x1.im,
            x2_re: s.x2.re,
            x2_im: s.x2.im,
            q_abs: quadratic_form(params, s).norm(),
        })
        .collect();
    serde_json::to_string_pretty(&rows).expect("rows serialize")
}

pub fn write_trajectory(
    dir: &Path,
    traj: &Trajectory,
    params: &ModelParams,
    format: Format,
) -> Result<PathBuf, CliError> {
    let (name, body) = match format {
        Format::Csv => ("trajectory.csv", trajectory_csv(traj, params)),
        Format::Json => ("trajectory.json", trajectory_json(traj, params)),
    };
    let path = dir.join(name);
    fs::write(&path, body)?;
    Ok(path)
}

pub fn write_json<T: Serialize>(dir: &Path, name: &str, value: &T) -> Result<PathBuf, CliError> {
    let path = dir.join(name);
    let mut body = serde_json::to_string_pretty(value).expect("value serializes");
    body.push('\n');
    fs::write(&path, body)?;
    Ok(path)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DiagnosticsFile {
    pub a1: ComplexValue,
    pub a2: ComplexValue,
    pub b1: ComplexValue,
    pub b2: ComplexValue,
    pub r: ComplexValue,
    pub eta: ComplexValue,
    pub eta1: ComplexValue,
    pub eta2: ComplexValue,
}

/// `coefficients.json`: everything needed to re-evaluate the solution.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CoefficientsFile {
    pub params: ParamsConfig,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub omega: Option<f64>,
    pub x0: StateConfig,
    /// `gamma[n][m]`: weight of mode `m` in variable `n`.
    pub gamma: [[ComplexValue; 2]; 2],
    /// Mode rates `k_m = 1 / t_m`.
    pub k: [ComplexValue; 2],
    pub diagnostics: DiagnosticsFile,
    /// Positive real times where a mode radicand vanishes.
    pub singular_times: Vec<f64>,
}

impl CoefficientsFile {
    pub fn new(sol: &ClosedFormSolution, omega: Option<f64>) -> Self {
        let d = &sol.diagnostics;
        Self {
            params: ParamsConfig::from(&sol.params),
            omega,
            x0: StateConfig::from(&sol.initial_state),
            gamma: sol.gamma.map(|row| row.map(ComplexValue::from)),
            k: sol.rates.map(ComplexValue::from),
            diagnostics: DiagnosticsFile {
                a1: d.a1.into(),
                a2: d.a2.into(),
                b1: d.b1.into(),
                b2: d.b2.into(),
                r: d.r.into(),
                eta: d.eta.into(),
                eta1: d.eta1.into(),
                eta2: d.eta2.into(),
            },
            singular_times: sol.singularity_times(),
        }
    }

    pub fn to_solution(&self) -> Result<ClosedFormSolution, CliError> {
        let d = &self.diagnostics;
        Ok(ClosedFormSolution {
            params: self.params.to_model()?,
            initial_state: self.x0.into(),
            gamma: self.gamma.map(|row| row.map(Into::into)),
            rates: self.k.map(Into::into),
            diagnostics: CoefficientDiagnostics {
                a1: d.a1.into(),
                a2: d.a2.into(),
                b1: d.b1.into(),
                b2: d.b2.into(),
                r: d.r.into(),
                eta: d.eta.into(),
                eta1: d.eta1.into(),
                eta2: d.eta2.into(),
            },
        })
    }

    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = fs::read_to_string(path)?;
        serde_json::from_str(&text).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))
    }
}

/// `status.json`, written by every command.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StatusFile {
    pub command: String,
    pub status: String,
    pub exit_code: i32,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub t_star: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub error: Option<String>,
}

#[cfg(test)]
mod tests {
    use super::*;
    use twomode::{closedform, State};

    #[test]
    fn csv_layout() {
        let p = ModelParams::real(0.0, 0.0, 1.0, -1.0).unwrap();
        let sol = closedform::solve_ivp(&p, State::real(2.0, 1.0)).unwrap();
        let traj = sol.eval_path(&[0.0, 0.5]).unwrap();
        let csv = trajectory_csv(&traj, &p);
        let mut lines = csv.lines();
        assert_eq!(lines.next(), Some(TRAJECTORY_HEADER));
        assert_eq!(lines.next(), Some("0.0,2.0,0.0,1.0,0.0,3.0"));
        assert_eq!(lines.count(), 1);
    }

    #[test]
    fn shortest_round_trip() {
        for x in [0.1, 2.0 / 9.0, 1e-300, -5e20, 3.5615528128088303] {
            assert_eq!(fmt_f64(x).parse::<f64>().unwrap(), x);
        }
    }
}
