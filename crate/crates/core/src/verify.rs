//! Named numerical checks of the closed-form solution, and seeded sampling
//! of the inputs they run on.
//!
//! All deviations are relative, with a floor of `1e-14` times the natural
//! scale of the compared quantity so that exact zeros do not divide by zero.

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::closedform::{self, ClosedFormSolution, CoefficientDiagnostics, IsochronousSolution, PathSample};
use crate::integrator::{integrate, Field, IntegratorConfig};
use crate::model::{degeneracy_report, quadratic_form, rhs, IsochronousParams, ModelParams, State};
use crate::{Error, Result, Status, Trajectory};

/// Relative floor used in every deviation.
pub const FLOOR_REL: f64 = 1e-14;

/// Default pass tolerance of [`classify_isochrony`].
pub const ISOCHRONY_PASS_TOL: f64 = 1e-6;

/// Phase samples per base period used by [`classify_isochrony`].
pub const ISOCHRONY_SAMPLES_PER_PERIOD: usize = 32;

fn relative(diff: f64, scale: f64, natural: f64) -> f64 {
    diff / (scale + FLOOR_REL * natural)
}

/// `u1 = b1 x1 + a2 x2`, `u2 = a1 x1 + b2 x2`. Each isolates one mode:
/// `u_m(t) = u_m(0) w_m(t)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ModeAmplitudes {
    pub u1: Complex64,
    pub u2: Complex64,
}

impl ModeAmplitudes {
    pub fn of(state: &State, d: &CoefficientDiagnostics) -> Self {
        Self {
            u1: d.b1 * state.x1 + d.a2 * state.x2,
            u2: d.a1 * state.x1 + d.b2 * state.x2,
        }
    }
}

fn completed_walk(sol: &ClosedFormSolution, times: &[f64]) -> Result<Vec<PathSample>> {
    let walk = sol.walk_real(times)?;
    match walk.singular_at {
        None => Ok(walk.samples),
        Some(t) => Err(Error::SingularTime {
            time: Complex64::new(t, 0.0),
        }),
    }
}

/// Largest relative mismatch between the closed-form derivative and the
/// vector field evaluated on the closed-form state.
pub fn check_residual(params: &ModelParams, x0: State, sample_times: &[f64]) -> Result<f64> {
    let sol = closedform::solve_ivp(params, x0)?;
    residual_of(&sol, sample_times)
}

/// [`check_residual`] for an already computed (possibly altered) solution.
pub fn residual_of(sol: &ClosedFormSolution, sample_times: &[f64]) -> Result<f64> {
    let natural = rhs(&sol.params, &sol.initial_state)?.norm();
    let mut worst = 0.0f64;
    for s in completed_walk(sol, sample_times)? {
        let exact = sol.derivative_at(&s.branch)?;
        let field = rhs(&sol.params, &s.state)?;
        worst = worst.max(relative((exact - field).norm(), field.norm(), natural));
    }
    Ok(worst)
}

/// Outcome of comparing the closed form with the integrator.
#[derive(Debug, Clone, PartialEq)]
pub struct Comparison {
    /// Largest relative deviation over the samples both sides reached.
    pub max_deviation: f64,
    pub closed_form: Status,
    pub numeric: Status,
}

impl Comparison {
    pub fn both_completed(&self) -> bool {
        self.closed_form.is_completed() && self.numeric.is_completed()
    }
}

/// Default sample count for [`check_exact_vs_numeric`].
pub const COMPARISON_SAMPLES: usize = 51;

pub fn uniform_grid(t_end: f64, count: usize) -> Vec<f64> {
    if count <= 1 || t_end == 0.0 {
        return vec![0.0];
    }
    let n = (count - 1) as f64;
    (0..count).map(|i| t_end * i as f64 / n).collect()
}

fn max_state_deviation(a: &Trajectory, b: &Trajectory, natural: f64) -> f64 {
    a.states
        .iter()
        .zip(&b.states)
        .map(|(x, y)| relative((*x - *y).norm(), x.norm(), natural))
        .fold(0.0, f64::max)
}

/// Runs both the closed form and the integrator on a uniform grid over
/// `[0, t_end]`.
pub fn check_exact_vs_numeric(
    params: &ModelParams,
    x0: State,
    t_end: f64,
    config: &IntegratorConfig,
) -> Result<Comparison> {
    let times = uniform_grid(t_end, COMPARISON_SAMPLES);
    let sol = closedform::solve_ivp(params, x0)?;
    let exact = sol.eval_path(&times)?;
    let numeric = integrate(&Field::Plain(*params), x0, t_end, &times, config)?;
    Ok(Comparison {
        max_deviation: max_state_deviation(&exact, &numeric, x0.norm()),
        closed_form: exact.status,
        numeric: numeric.status,
    })
}

/// Compares `λ x(t; x0)` with `x(λ² t; λ x0)`. For complex `λ` the second
/// solution is continued along the straight path from 0 to `λ² t`.
pub fn check_scaling(params: &ModelParams, x0: State, lambda: Complex64, t: f64) -> Result<f64> {
    if lambda.norm() == 0.0 || !lambda.is_finite() {
        return Err(Error::InvalidInput("lambda must be finite and nonzero".into()));
    }
    let original = closedform::solve_ivp(params, x0)?;
    let scaled = closedform::solve_ivp(params, x0 * lambda)?;
    let a = completed_walk(&original, &[t])?[0].state * lambda;
    let l2 = lambda * lambda;
    let walk = scaled.walk(|u| l2 * u, &[t], f64::INFINITY)?;
    let b = match walk.singular_at {
        None => walk.samples[0].state,
        Some(u) => {
            return Err(Error::SingularTime {
                time: l2 * u,
            })
        }
    };
    Ok(relative((a - b).norm(), a.norm(), (x0 * lambda).norm()))
}

/// Largest `|u_m(t)² - u_m(0)² (1 + k_m t)| / |u_m(0)|²` over samples and modes.
pub fn check_mode_linearity(params: &ModelParams, x0: State, sample_times: &[f64]) -> Result<f64> {
    let sol = closedform::solve_ivp(params, x0)?;
    let d = &sol.diagnostics;
    let u0 = ModeAmplitudes::of(&x0, d);
    let u0 = [u0.u1, u0.u2];
    let natural = u0[0].norm_sqr().max(u0[1].norm_sqr());
    let mut worst = 0.0f64;
    for s in completed_walk(&sol, sample_times)? {
        let u = ModeAmplitudes::of(&s.state, d);
        for (m, ut) in [u.u1, u.u2].into_iter().enumerate() {
            let t = Complex64::new(s.param, 0.0);
            let defect = ut * ut - u0[m] * u0[m] * (1.0 + sol.rates[m] * t);
            worst = worst.max(relative(defect.norm(), u0[m].norm_sqr(), natural));
        }
    }
    Ok(worst)
}

/// Drift of `x1 x2` along the closed form; only defined for `α1 = α2 = 0`.
pub fn check_conserved_product(params: &ModelParams, x0: State, sample_times: &[f64]) -> Result<f64> {
    let zero = Complex64::new(0.0, 0.0);
    if params.alpha1 != zero || params.alpha2 != zero {
        return Err(Error::InvalidInput(
            "the product x1 x2 is conserved only when alpha1 = alpha2 = 0".into(),
        ));
    }
    let sol = closedform::solve_ivp(params, x0)?;
    let p0 = x0.x1 * x0.x2;
    let natural = x0.norm().powi(2);
    let mut worst = 0.0f64;
    for s in completed_walk(&sol, sample_times)? {
        let p = s.state.x1 * s.state.x2;
        worst = worst.max(relative((p - p0).norm(), p0.norm(), natural));
    }
    Ok(worst)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum IsochronyMethod {
    ClosedForm,
    Numeric,
}

/// Smallest tested shift under which the orbit repeats.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PeriodClass {
    /// Repeats after `T` already.
    PeriodT,
    Period2T,
    Period4T,
    /// The orbit reaches a singular time within the tested window.
    Singular,
    /// None of the tested shifts reproduces the orbit.
    Inconclusive,
}

impl PeriodClass {
    pub fn name(&self) -> &'static str {
        match self {
            PeriodClass::PeriodT => "period_T",
            PeriodClass::Period2T => "period_2T",
            PeriodClass::Period4T => "period_4T",
            PeriodClass::Singular => "singular",
            PeriodClass::Inconclusive => "inconclusive",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct IsochronyReport {
    pub omega: f64,
    /// `T = π / |ω|`.
    pub base_period: f64,
    /// Largest relative deviation under a shift by `T`, `2T`, `4T`.
    pub dev_t: f64,
    pub dev_2t: f64,
    pub dev_4t: f64,
    pub classification: PeriodClass,
    pub samples: usize,
    /// Whether the `τ` circle encloses each mode's branch point `-1/k_m`.
    pub branch_point_enclosed: [bool; 2],
    /// Distance from the `τ` circle to the nearest branch point, in units
    /// of the circle radius.
    pub branch_point_clearance: f64,
}

fn shift_deviation(states: &[State], shift: usize, phases: usize, natural: f64) -> f64 {
    (0..=phases)
        .filter(|j| j + shift < states.len())
        .map(|j| relative((states[j + shift] - states[j]).norm(), states[j].norm(), natural))
        .fold(0.0, f64::max)
}

/// Measures the periodicity of an isochronous orbit from `x0`.
///
/// The orbit is sampled at `32` phases per base period over `[0, 8T]`;
/// `dev_kT` is the largest relative change of the state between each phase
/// in `[0, 4T]` and the same phase shifted by `kT`.
pub fn classify_isochrony(
    params: &IsochronousParams,
    x0: State,
    method: IsochronyMethod,
    pass_tol: f64,
) -> Result<IsochronyReport> {
    let sol = IsochronousSolution::new(params, x0)?;
    let period = params.base_period();
    let per = ISOCHRONY_SAMPLES_PER_PERIOD;
    let total = 8 * per;
    let times: Vec<f64> = (0..=total).map(|j| j as f64 * period / per as f64).collect();

    let traj = match method {
        IsochronyMethod::ClosedForm => sol.eval_path(&times)?,
        IsochronyMethod::Numeric => integrate(
            &Field::Isochronous(*params),
            x0,
            times[total],
            &times,
            &IntegratorConfig::default(),
        )?,
    };

    let (enclosed, clearance) = branch_point_geometry(&sol);
    let mut report = IsochronyReport {
        omega: params.omega,
        base_period: period,
        dev_t: f64::NAN,
        dev_2t: f64::NAN,
        dev_4t: f64::NAN,
        classification: PeriodClass::Inconclusive,
        samples: 4 * per + 1,
        branch_point_enclosed: enclosed,
        branch_point_clearance: clearance,
    };
    match traj.status {
        Status::Completed => {}
        Status::HitSingularity { .. } => {
            report.classification = PeriodClass::Singular;
            return Ok(report);
        }
        Status::StepLimit { .. } => return Ok(report),
    }

    let natural = x0.norm();
    let phases = 4 * per;
    report.dev_t = shift_deviation(&traj.states, per, phases, natural);
    report.dev_2t = shift_deviation(&traj.states, 2 * per, phases, natural);
    report.dev_4t = shift_deviation(&traj.states, 4 * per, phases, natural);
    report.classification = if report.dev_t < pass_tol {
        PeriodClass::PeriodT
    } else if report.dev_2t < pass_tol {
        PeriodClass::Period2T
    } else if report.dev_4t < pass_tol {
        PeriodClass::Period4T
    } else {
        PeriodClass::Inconclusive
    };
    Ok(report)
}

fn branch_point_geometry(sol: &IsochronousSolution) -> ([bool; 2], f64) {
    let radius = 0.5 / sol.omega.abs();
    let center = Complex64::new(0.0, -0.5 / sol.omega);
    let mut enclosed = [false; 2];
    let mut clearance = f64::INFINITY;
    for (m, k) in sol.base.rates.iter().enumerate() {
        if k.norm() == 0.0 {
            continue;
        }
        let d = (-k.inv() - center).norm();
        enclosed[m] = d < radius;
        clearance = clearance.min((d - radius).abs() / radius);
    }
    (enclosed, clearance)
}

/// One sampled input of an ensemble check.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Draw {
    pub params: ModelParams,
    pub x0: State,
}

/// Uniform point of the disc `|z| <= radius`.
pub fn sample_disc<R: Rng + ?Sized>(rng: &mut R, radius: f64) -> Complex64 {
    loop {
        let z = Complex64::new(rng.gen_range(-radius..=radius), rng.gen_range(-radius..=radius));
        if z.norm() <= radius {
            return z;
        }
    }
}

/// Radius of the sampling disc for every component.
pub const DRAW_RADIUS: f64 = 2.0;

/// Parameters and initial state drawn from the disc, without rejection.
pub fn raw_draw<R: Rng + ?Sized>(rng: &mut R) -> Option<Draw> {
    let mut z = || sample_disc(rng, DRAW_RADIUS);
    let (a1, a2, b1, b2) = (z(), z(), z(), z());
    let x0 = State::new(z(), z());
    let params = ModelParams::new(a1, a2, b1, b2).ok()?;
    Some(Draw { params, x0 })
}

/// Whether a draw is safely away from every degenerate locus.
pub fn is_well_conditioned(draw: &Draw) -> bool {
    let flags = degeneracy_report(&draw.params);
    let b_scale = flags.b[0].norm() * flags.b[1].norm() + flags.a[0].norm() * flags.a[1].norm();
    if flags.denominator.norm() <= 1e-6 * b_scale {
        return false;
    }
    let s = draw.params.cross();
    let r_scale = (s.norm_sqr() + 4.0 * draw.params.beta1.norm() * draw.params.beta2.norm()).sqrt();
    if flags.r.norm() <= 1e-6 * r_scale {
        return false;
    }
    let q = quadratic_form(&draw.params, &draw.x0).norm();
    if q <= 1e-6 * draw.params.coefficient_scale() * draw.x0.norm().powi(2) {
        return false;
    }
    match closedform::solve_ivp(&draw.params, draw.x0) {
        Ok(sol) => {
            let g = sol.gamma;
            let scale = (g[0][1].norm() * g[1][0].norm() + g[0][0].norm() * g[1][1].norm()) * q;
            sol.diagnostics.eta.norm() > 1e-8 * scale
        }
        Err(_) => false,
    }
}

/// Rejection-samples a well-conditioned draw.
pub fn nondegenerate_draw<R: Rng + ?Sized>(rng: &mut R) -> Draw {
    loop {
        if let Some(d) = raw_draw(rng) {
            if is_well_conditioned(&d) {
                return d;
            }
        }
    }
}

/// `count` well-conditioned draws from a seeded stream.
pub fn ensemble(seed: u64, count: usize) -> Vec<Draw> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count).map(|_| nondegenerate_draw(&mut rng)).collect()
}

/// A real draw whose solution reaches a radicand zero in forward time.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BlowUpDraw {
    pub draw: Draw,
    pub singular_time: f64,
}

/// Seeded search over real parameters and states in `[-2, 2]` for
/// solutions with a first singular time in `(0, max_time]`.
pub fn find_blow_ups(seed: u64, count: usize, max_time: f64) -> Vec<BlowUpDraw> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::with_capacity(count);
    while out.len() < count {
        let mut x = || rng.gen_range(-DRAW_RADIUS..=DRAW_RADIUS);
        let (a1, a2, b1, b2, x1, x2) = (x(), x(), x(), x(), x(), x());
        let Ok(params) = ModelParams::real(a1, a2, b1, b2) else {
            continue;
        };
        let draw = Draw {
            params,
            x0: State::real(x1, x2),
        };
        if !is_well_conditioned(&draw) {
            continue;
        }
        let sol = closedform::solve_ivp(&params, draw.x0).expect("well-conditioned");
        if let Some(&t) = sol.singularity_times().first() {
            if t <= max_time {
                out.push(BlowUpDraw {
                    draw,
                    singular_time: t,
                });
            }
        }
    }
    out
}
