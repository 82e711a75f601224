use std::fs;
use std::path::{Path, PathBuf};

use num_complex::Complex64;
use serde::Serialize;
use twomode::closedform::{self, BranchState, IsochronousSolution, RootChoice};
use twomode::integrator::{integrate as integrate_field, Field};
use twomode::verify::{self, IsochronyMethod, IsochronyReport, PeriodClass};
use twomode::{ClosedFormSolution, IsochronousParams, ModelParams, State};

use crate::output::{self, CoefficientsFile, StatusFile};
use crate::{CliError, Format, Outcome, RunConfig};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Command {
    SolveExact,
    Integrate,
    Verify,
    Sweep,
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::SolveExact => "solve-exact",
            Command::Integrate => "integrate",
            Command::Verify => "verify",
            Command::Sweep => "sweep",
        }
    }
}

/// Resolved command-line context.
#[derive(Debug, Clone)]
pub struct Invocation {
    pub config: RunConfig,
    pub out_dir: PathBuf,
    pub format: Format,
    /// Test hook: scale `gamma[0][0]` by this factor before verifying.
    pub corrupt_gamma: Option<f64>,
}

impl Invocation {
    pub fn new(config: RunConfig, out_dir: Option<PathBuf>, format: Option<Format>, seed: Option<u64>) -> Self {
        let mut config = config;
        if let Some(seed) = seed {
            config.seed = seed;
        }
        let out_dir = out_dir
            .or_else(|| config.output.dir.clone())
            .unwrap_or_else(|| PathBuf::from("out"));
        let format = format.or(config.output.format).unwrap_or_default();
        Self {
            config,
            out_dir,
            format,
            corrupt_gamma: None,
        }
    }
}

/// Runs `command`, writes `status.json` next to its other outputs, and
/// returns the process exit code.
pub fn execute(command: Command, inv: &Invocation) -> i32 {
    if let Err(e) = fs::create_dir_all(&inv.out_dir) {
        eprintln!("error: cannot create {}: {e}", inv.out_dir.display());
        return 1;
    }
    let result = match command {
        Command::SolveExact => solve_exact(inv),
        Command::Integrate => integrate(inv),
        Command::Verify => verify_config(inv),
        Command::Sweep => crate::sweep::cmd_sweep(inv),
    };
    let (code, status) = match &result {
        Ok(outcome) => {
            let (name, t_star, error) = match outcome {
                Outcome::Completed => ("completed", None, None),
                Outcome::HitSingularity { t_star } => ("hit_singularity", Some(*t_star), None),
                Outcome::StepLimit { t } => ("step_limit", Some(*t), None),
                Outcome::VerificationFailed { check } => {
                    ("verification_failed", None, Some(format!("check failed: {check}")))
                }
            };
            (outcome.exit_code(), StatusFile {
                command: command.name().into(),
                status: name.into(),
                exit_code: outcome.exit_code(),
                t_star,
                error,
            })
        }
        Err(e) => {
            let t_star = match e {
                CliError::Solver(twomode::Error::SingularTime { time }) => Some(time.re),
                _ => None,
            };
            let name = match e.exit_code() {
                1 => "config_error",
                2 => "hit_singularity",
                3 => "degenerate",
                _ => "error",
            };
            (e.exit_code(), StatusFile {
                command: command.name().into(),
                status: name.into(),
                exit_code: e.exit_code(),
                t_star,
                error: Some(e.to_string()),
            })
        }
    };
    if let Err(e) = output::write_json(&inv.out_dir, "status.json", &status) {
        eprintln!("error: {e}");
        return 1;
    }
    match (&result, &status.error) {
        (Err(_), Some(msg)) => eprintln!("error: {msg}"),
        (Ok(Outcome::VerificationFailed { check }), _) => eprintln!("verification failed: {check}"),
        (Ok(Outcome::HitSingularity { t_star }), _) => eprintln!("hit singularity near t = {t_star}"),
        _ => {}
    }
    code
}

/// Closed-form coefficients and trajectory.
pub fn solve_exact(inv: &Invocation) -> Result<Outcome, CliError> {
    let cfg = &inv.config;
    let params = cfg.model()?;
    cfg.isochronous()?;
    let x0 = cfg.initial_state()?;
    let times = cfg.grid.times()?;

    let sol = closedform::solve_ivp(&params, x0)?;
    output::write_json(&inv.out_dir, "coefficients.json", &CoefficientsFile::new(&sol, cfg.omega))?;
    let traj = evaluate(&sol, cfg.omega, &times)?;
    output::write_trajectory(&inv.out_dir, &traj, &params, inv.format)?;
    Ok(traj.status.into())
}

/// Evaluates a (possibly re-read) solution on `times`; with `omega` the
/// isochronous orbit is produced.
pub fn evaluate(sol: &ClosedFormSolution, omega: Option<f64>, times: &[f64]) -> Result<twomode::Trajectory, CliError> {
    Ok(match omega {
        Some(omega) => IsochronousSolution { base: *sol, omega }.eval_path(times)?,
        None => sol.eval_path(times)?,
    })
}

/// Numerical trajectory from the adaptive integrator.
pub fn integrate(inv: &Invocation) -> Result<Outcome, CliError> {
    let cfg = &inv.config;
    let params = cfg.model()?;
    let field = match cfg.isochronous()? {
        Some(iso) => Field::Isochronous(iso),
        None => Field::Plain(params),
    };
    let x0 = cfg.initial_state()?;
    let times = cfg.grid.times()?;
    let integrator = cfg.integrator.apply()?;
    let t_end = *times.last().expect("grid is nonempty");
    let traj = integrate_field(&field, x0, t_end, &times, &integrator)?;
    output::write_trajectory(&inv.out_dir, &traj, &params, inv.format)?;
    Ok(traj.status.into())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum CheckStatus {
    Pass,
    Fail,
    Skipped,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CheckResult {
    pub name: String,
    pub status: CheckStatus,
    /// Measured maximum; absent when the check could not run.
    pub value: Option<f64>,
    pub tolerance: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub note: Option<String>,
}

impl CheckResult {
    fn measured(name: &str, value: f64, tolerance: f64) -> Self {
        let status = if value <= tolerance { CheckStatus::Pass } else { CheckStatus::Fail };
        Self {
            name: name.into(),
            status,
            value: Some(value),
            tolerance,
            note: None,
        }
    }

    fn from_result(name: &str, r: twomode::Result<f64>, tolerance: f64) -> Self {
        match r {
            Ok(v) => Self::measured(name, v, tolerance),
            Err(e) => Self {
                name: name.into(),
                status: CheckStatus::Fail,
                value: None,
                tolerance,
                note: Some(e.to_string()),
            },
        }
    }

    fn skipped(name: &str, tolerance: f64, note: impl Into<String>) -> Self {
        Self {
            name: name.into(),
            status: CheckStatus::Skipped,
            value: None,
            tolerance,
            note: Some(note.into()),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct IsochronySummary {
    pub method: &'static str,
    pub omega: f64,
    pub base_period: f64,
    pub dev_t: f64,
    pub dev_2t: f64,
    pub dev_4t: f64,
    pub classification: &'static str,
    pub samples: usize,
    pub branch_point_enclosed: [bool; 2],
    pub branch_point_clearance: f64,
}

impl IsochronySummary {
    fn new(method: &'static str, r: &IsochronyReport) -> Self {
        Self {
            method,
            omega: r.omega,
            base_period: r.base_period,
            dev_t: r.dev_t,
            dev_2t: r.dev_2t,
            dev_4t: r.dev_4t,
            classification: r.classification.name(),
            samples: r.samples,
            branch_point_enclosed: r.branch_point_enclosed,
            branch_point_clearance: r.branch_point_clearance,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct VerifyReport {
    /// Checks run on `[0, horizon]`, which stops at half the first
    /// singular time when there is one.
    pub horizon: f64,
    pub checks: Vec<CheckResult>,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub isochrony: Vec<IsochronySummary>,
    pub all_passed: bool,
}

pub const RESIDUAL_TOL: f64 = 1e-9;
pub const IDENTITY_TOL: f64 = 1e-12;
pub const NUMERIC_TOL: f64 = 1e-6;
pub const SCALING_TOL: f64 = 1e-9;
pub const MODE_TOL: f64 = 1e-9;
pub const ROOT_SIGN_TOL: f64 = 1e-9;
pub const PRODUCT_TOL: f64 = 1e-9;

fn r_sign_deviation(params: &ModelParams, x0: State, times: &[f64]) -> twomode::Result<f64> {
    let plus = closedform::solve_ivp_with(params, x0, RootChoice::Principal)?.eval_path(times)?;
    let minus = closedform::solve_ivp_with(params, x0, RootChoice::Negated)?.eval_path(times)?;
    Ok(plus
        .states
        .iter()
        .zip(&minus.states)
        .map(|(a, b)| (*a - *b).norm() / (a.norm() + verify::FLOOR_REL * x0.norm()))
        .fold(0.0, f64::max))
}

fn isochrony_checks(iso: &IsochronousParams, x0: State, out: &mut VerifyReport) {
    let name = "isochrony";
    let tol = verify::ISOCHRONY_PASS_TOL;
    let exact = verify::classify_isochrony(iso, x0, IsochronyMethod::ClosedForm, tol);
    let numeric = verify::classify_isochrony(iso, x0, IsochronyMethod::Numeric, tol);
    let check = match (&exact, &numeric) {
        (Ok(e), _) if e.classification == PeriodClass::Singular => {
            CheckResult::skipped(name, tol, "orbit reaches a singular time")
        }
        (Ok(e), Ok(n)) => {
            let periodic = matches!(
                e.classification,
                PeriodClass::PeriodT | PeriodClass::Period2T | PeriodClass::Period4T
            );
            let worst = e.dev_4t.max(n.dev_4t);
            let mut c = CheckResult::measured(name, if worst.is_nan() { f64::INFINITY } else { worst }, tol);
            if !periodic || e.classification != n.classification {
                c.status = CheckStatus::Fail;
            }
            c.note = Some(format!(
                "closed form: {}, numeric: {}",
                e.classification.name(),
                n.classification.name()
            ));
            c
        }
        (Err(e), _) | (_, Err(e)) => CheckResult::from_result(name, Err(e.clone()), tol),
    };
    out.checks.push(check);
    if let Ok(e) = &exact {
        out.isochrony.push(IsochronySummary::new("closed_form", e));
    }
    if let Ok(n) = &numeric {
        out.isochrony.push(IsochronySummary::new("numeric", n));
    }
}

/// Runs every check that applies to the config's inputs.
pub fn build_report(
    params: &ModelParams,
    x0: State,
    omega: Option<f64>,
    times: &[f64],
    integrator: &twomode::IntegratorConfig,
    corrupt_gamma: Option<f64>,
) -> Result<VerifyReport, CliError> {
    let mut sol = closedform::solve_ivp(params, x0)?;
    if let Some(f) = corrupt_gamma {
        sol.gamma[0][0] *= f;
    }
    let t_last = times.last().copied().unwrap_or(0.0);
    let horizon = match sol.singularity_times().first() {
        Some(t) => t_last.min(0.5 * t),
        None => t_last,
    };
    let grid: Vec<f64> = times.iter().copied().filter(|t| *t <= horizon).collect();

    let mut report = VerifyReport {
        horizon,
        checks: Vec::new(),
        isochrony: Vec::new(),
        all_passed: false,
    };
    let checks = &mut report.checks;
    checks.push(CheckResult::from_result("residual", verify::residual_of(&sol, &grid), RESIDUAL_TOL));

    let identity = sol
        .eval(Complex64::new(0.0, 0.0), &BranchState::fresh())
        .map(|(x, _)| (x - x0).norm() / x0.norm());
    checks.push(CheckResult::from_result("t0_identity", identity, IDENTITY_TOL));

    let numeric = verify::check_exact_vs_numeric(params, x0, horizon, integrator).map(|c| {
        if c.both_completed() {
            c.max_deviation
        } else {
            f64::INFINITY
        }
    });
    checks.push(CheckResult::from_result("exact_vs_numeric", numeric, NUMERIC_TOL));

    let real_scaling = verify::check_scaling(params, x0, Complex64::new(2.0, 0.0), 0.25 * horizon);
    checks.push(CheckResult::from_result("scaling_real", real_scaling, SCALING_TOL));
    let unit = Complex64::from_polar(1.0, std::f64::consts::FRAC_PI_3);
    let complex_scaling = verify::check_scaling(params, x0, unit, horizon);
    checks.push(CheckResult::from_result("scaling_complex", complex_scaling, SCALING_TOL));

    checks.push(CheckResult::from_result(
        "mode_linearity",
        verify::check_mode_linearity(params, x0, &grid),
        MODE_TOL,
    ));

    match r_sign_deviation(params, x0, &grid) {
        Err(twomode::Error::DegenerateParameters { reason }) => checks.push(CheckResult::skipped(
            "r_sign_independence",
            ROOT_SIGN_TOL,
            format!("negated root is degenerate: {reason}"),
        )),
        r => checks.push(CheckResult::from_result("r_sign_independence", r, ROOT_SIGN_TOL)),
    }

    let zero = Complex64::new(0.0, 0.0);
    if params.alpha1 == zero && params.alpha2 == zero {
        checks.push(CheckResult::from_result(
            "conserved_product",
            verify::check_conserved_product(params, x0, &grid),
            PRODUCT_TOL,
        ));
    }

    if let Some(omega) = omega {
        let iso = IsochronousParams::new(*params, omega)?;
        isochrony_checks(&iso, x0, &mut report);
    }

    report.all_passed = report.checks.iter().all(|c| c.status != CheckStatus::Fail);
    Ok(report)
}

pub fn verify_config(inv: &Invocation) -> Result<Outcome, CliError> {
    let cfg = &inv.config;
    let params = cfg.model()?;
    cfg.isochronous()?;
    let x0 = cfg.initial_state()?;
    let times = cfg.grid.times()?;
    let integrator = cfg.integrator.apply()?;
    let report = build_report(&params, x0, cfg.omega, &times, &integrator, inv.corrupt_gamma)?;
    output::write_json(&inv.out_dir, "report.json", &report)?;
    match report.checks.iter().find(|c| c.status == CheckStatus::Fail) {
        Some(c) => Ok(Outcome::VerificationFailed { check: c.name.clone() }),
        None => Ok(Outcome::Completed),
    }
}

/// Re-evaluates a `coefficients.json` on `times` and renders the trajectory
/// CSV, as `solve-exact` would have written it.
pub fn replay_coefficients(path: &Path, times: &[f64]) -> Result<String, CliError> {
    let file = CoefficientsFile::load(path)?;
    let sol = file.to_solution()?;
    let traj = evaluate(&sol, file.omega, times)?;
    Ok(output::trajectory_csv(&traj, &sol.params))
}
