//! Explicit solution of the initial-value problem.
//!
//! For `x0` and nondegenerate parameters the solution is
//!
//! ```text
//! x_n(t) = γ_n1 w_1(t) + γ_n2 w_2(t),    w_m(t)^2 = 1 + k_m t,
//! ```
//!
//! with constant coefficients computed by [`solve_ivp`]. The two square
//! roots are fixed to `w_m(0) = 1` and then continued along the evaluation
//! path: at every step the root closest to the previous value is taken, and
//! steps are bisected until that choice is unambiguous. A radicand reaching
//! zero is a genuine singularity of the ODE (the state stays finite, its
//! derivative diverges) and ends the path.
//!
//! The rate `k_m = 1/t_m` is stored instead of `t_m` so that a constant mode
//! (`k_m = 0`) is representable.
//!
//! The isochronous system is solved by the same coefficients through
//! `x̃(t) = e^{iωt} x(τ(t))` with `τ(t) = (1 - e^{-2iωt}) / (2iω)`; the
//! square roots are then continued along the circle traced by `τ`.

use num_complex::Complex64;

use crate::model::{
    self, degeneracy_with_sign, quadratic_form, singular_threshold, IsochronousParams, ModelParams,
    State, DEGENERACY_REL,
};
use crate::{Error, Result, Status, Trajectory};

/// Accepted root must be this many times closer to the previous value than
/// the rejected one.
pub const BRANCH_RATIO: f64 = 10.0;

/// Smallest bisected step, relative to the parameter length of the path.
pub const MIN_STEP_REL: f64 = 1e-12;

/// A radicand with `|1 + k t| <= RADICAND_TOL * (1 + |k t|)` is a zero.
pub const RADICAND_TOL: f64 = 1e-13;

/// Largest parameter step along the `τ` circle, as a fraction of `T`.
const CIRCLE_STEPS_PER_PERIOD: f64 = 64.0;

const ZERO: Complex64 = Complex64::new(0.0, 0.0);
const ONE: Complex64 = Complex64::new(1.0, 0.0);

/// Which square root of the discriminant to use for `r`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum RootChoice {
    #[default]
    Principal,
    Negated,
}

impl RootChoice {
    fn sign(self) -> f64 {
        match self {
            RootChoice::Principal => 1.0,
            RootChoice::Negated => -1.0,
        }
    }
}

/// Intermediate quantities of the coefficient formulas.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CoefficientDiagnostics {
    pub a1: Complex64,
    pub a2: Complex64,
    pub b1: Complex64,
    pub b2: Complex64,
    pub r: Complex64,
    pub eta: Complex64,
    pub eta1: Complex64,
    pub eta2: Complex64,
}

impl CoefficientDiagnostics {
    /// `b1 b2 - a1 a2`, the common denominator of the `γ` coefficients.
    pub fn denominator(&self) -> Complex64 {
        self.b1 * self.b2 - self.a1 * self.a2
    }
}

/// Coefficients of the explicit solution for one initial state.
///
/// `gamma[n][m]` multiplies mode `m` in variable `n`; `rates[m]` is `k_m`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ClosedFormSolution {
    pub params: ModelParams,
    pub initial_state: State,
    pub gamma: [[Complex64; 2]; 2],
    pub rates: [Complex64; 2],
    pub diagnostics: CoefficientDiagnostics,
}

/// Current values of the two continued square roots.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BranchState {
    pub w: [Complex64; 2],
    pub last_time: Complex64,
}

impl BranchState {
    /// `w_1 = w_2 = 1` at `t = 0`.
    pub fn fresh() -> Self {
        Self {
            w: [ONE, ONE],
            last_time: ZERO,
        }
    }
}

impl Default for BranchState {
    fn default() -> Self {
        Self::fresh()
    }
}

/// A point reached while walking a path.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PathSample {
    /// Path parameter (the real time for real paths).
    pub param: f64,
    pub state: State,
    pub branch: BranchState,
}

/// Result of walking a path: samples reached in order, plus the parameter
/// of the singularity that stopped the walk, if any.
#[derive(Debug, Clone, PartialEq)]
pub struct Walk {
    pub samples: Vec<PathSample>,
    pub singular_at: Option<f64>,
}

impl Walk {
    pub fn completed(&self) -> bool {
        self.singular_at.is_none()
    }
}

pub fn solve_ivp(params: &ModelParams, x0: State) -> Result<ClosedFormSolution> {
    solve_ivp_with(params, x0, RootChoice::Principal)
}

/// Computes the solution coefficients using the given sign of `r`.
pub fn solve_ivp_with(
    params: &ModelParams,
    x0: State,
    root: RootChoice,
) -> Result<ClosedFormSolution> {
    params.validate()?;
    if !x0.is_finite() {
        return Err(Error::InvalidInput("initial state must be finite".into()));
    }
    if x0.is_zero() {
        return Err(Error::DegenerateInitialState {
            reason: "x0 = (0, 0)".into(),
        });
    }

    let flags = degeneracy_with_sign(params, root.sign());
    if flags.r_zero {
        return Err(Error::DegenerateParameters {
            reason: "r = 0 (confluent modes)".into(),
        });
    }
    if flags.denominator_zero {
        return Err(Error::DegenerateParameters {
            reason: format!("b1 b2 - a1 a2 = {} vanishes", flags.denominator),
        });
    }

    let [a1, a2] = flags.a;
    let [b1, b2] = flags.b;
    let d = flags.denominator;
    let (x1, x2) = (x0.x1, x0.x2);

    let u1 = b1 * x1 + a2 * x2;
    let u2 = a1 * x1 + b2 * x2;
    let g11 = b2 * u1 / d;
    let g22 = b1 * u2 / d;
    let g12 = -a2 * u2 / d;
    let g21 = -a1 * u1 / d;

    let q0 = quadratic_form(params, &x0);
    if q0.norm() <= singular_threshold(params, &x0) {
        return Err(Error::DegenerateInitialState {
            reason: format!("Q(x0) = {q0} vanishes"),
        });
    }

    let eta = (g12 * g21 - g11 * g22) * q0;
    let eta_scale = (g12.norm() * g21.norm() + g11.norm() * g22.norm()) * q0.norm();
    if eta.norm() <= DEGENERACY_REL * eta_scale || eta == ZERO {
        return Err(Error::DegenerateInitialState {
            reason: format!("eta = {eta} vanishes"),
        });
    }
    let (p1, p2) = (params.alpha1, params.alpha2);
    let eta1 = 2.0 * ((p2 * g12 + g22) * x1 + (g12 + p1 * g22) * x2);
    let eta2 = 2.0 * ((p2 * g11 + g21) * x1 + (g11 + p1 * g21) * x2);

    Ok(ClosedFormSolution {
        params: *params,
        initial_state: x0,
        gamma: [[g11, g12], [g21, g22]],
        rates: [-eta1 / eta, eta2 / eta],
        diagnostics: CoefficientDiagnostics {
            a1,
            a2,
            b1,
            b2,
            r: flags.r,
            eta,
            eta1,
            eta2,
        },
    })
}

impl ClosedFormSolution {
    /// `t_m = 1/k_m`, infinite for a constant mode.
    pub fn mode_times(&self) -> [Complex64; 2] {
        self.rates.map(|k| {
            if k == ZERO {
                Complex64::new(f64::INFINITY, 0.0)
            } else {
                k.inv()
            }
        })
    }

    fn column_is_null(&self, m: usize) -> bool {
        self.gamma[0][m] == ZERO && self.gamma[1][m] == ZERO
    }

    /// State for given square-root values.
    pub fn combine(&self, w: [Complex64; 2]) -> State {
        let g = &self.gamma;
        State::new(g[0][0] * w[0] + g[0][1] * w[1], g[1][0] * w[0] + g[1][1] * w[1])
    }

    /// Evaluates the solution at `t`, continuing each root from `branch`.
    ///
    /// Fails with [`Error::BranchAmbiguity`] when the step from
    /// `branch.last_time` is too large to decide the sign, and with
    /// [`Error::SingularTime`] when a radicand vanishes at `t`.
    pub fn eval(&self, t: Complex64, branch: &BranchState) -> Result<(State, BranchState)> {
        let mut w = branch.w;
        for m in 0..2 {
            let k = self.rates[m];
            if k == ZERO {
                continue;
            }
            let kt = k * t;
            let rho = ONE + kt;
            if rho.norm() <= RADICAND_TOL * (1.0 + kt.norm()) && !self.column_is_null(m) {
                return Err(Error::SingularTime { time: t });
            }
            let s = model::principal_sqrt(rho);
            let prev = branch.w[m];
            let (near, far) = if (s - prev).norm() <= (s + prev).norm() {
                (s, -s)
            } else {
                (-s, s)
            };
            if (far - prev).norm() < BRANCH_RATIO * (near - prev).norm() {
                return Err(Error::BranchAmbiguity { time: t });
            }
            w[m] = near;
        }
        let next = BranchState { w, last_time: t };
        Ok((self.combine(w), next))
    }

    /// `dx/dt` from the root values in `branch`.
    pub fn derivative_at(&self, branch: &BranchState) -> Result<State> {
        let mut terms = [ZERO; 2];
        for m in 0..2 {
            let k = self.rates[m];
            if k == ZERO {
                continue;
            }
            let w = branch.w[m];
            if w.norm_sqr() <= RADICAND_TOL * (1.0 + (k * branch.last_time).norm()) {
                return Err(Error::SingularTime {
                    time: branch.last_time,
                });
            }
            terms[m] = k / (2.0 * w);
        }
        Ok(self.combine(terms))
    }

    /// Closed-form `dx/dt` at `t`, continuing the roots from `branch`.
    pub fn exact_derivative(&self, t: Complex64, branch: &BranchState) -> Result<State> {
        let (_, b) = self.eval(t, branch)?;
        self.derivative_at(&b)
    }

    /// Positive real times where a radicand `1 + k_m t` vanishes, ascending.
    pub fn singularity_times(&self) -> Vec<f64> {
        let mut out: Vec<f64> = self
            .rates
            .iter()
            .filter(|k| **k != ZERO)
            .map(|k| -k.inv())
            .filter(|t| t.im.abs() <= 1e-10 * t.norm() && t.re > 0.0)
            .map(|t| t.re)
            .collect();
        out.sort_by(f64::total_cmp);
        out
    }

    /// Walks `path(u)` from `u = 0` (where `path(0) = 0`) through the
    /// nondecreasing parameters `params`, bisecting wherever the root choice
    /// is ambiguous. Parameter steps never exceed `max_step`.
    pub fn walk<P>(&self, path: P, params: &[f64], max_step: f64) -> Result<Walk>
    where
        P: Fn(f64) -> Complex64,
    {
        if params.iter().any(|u| !u.is_finite() || *u < 0.0) {
            return Err(Error::InvalidInput("path parameters must be finite and >= 0".into()));
        }
        if params.windows(2).any(|w| w[1] < w[0]) {
            return Err(Error::InvalidInput("path parameters must be nondecreasing".into()));
        }
        let length = params.last().copied().unwrap_or(0.0);
        let min_step = MIN_STEP_REL * length;

        let mut samples = Vec::with_capacity(params.len());
        let mut branch = BranchState::fresh();
        let mut state = self.initial_state;
        let mut u = 0.0;
        let mut step = max_step.min(length);

        for &target in params {
            while u < target {
                let next = (u + step).min(target);
                match self.eval(path(next), &branch) {
                    Ok((s, b)) => {
                        state = s;
                        branch = b;
                        u = next;
                        step = (2.0 * step).min(max_step);
                    }
                    Err(Error::BranchAmbiguity { .. }) => {
                        if next - u <= min_step {
                            return Ok(Walk {
                                samples,
                                singular_at: Some(0.5 * (u + next)),
                            });
                        }
                        step = 0.5 * (next - u);
                    }
                    Err(Error::SingularTime { .. }) => {
                        return Ok(Walk {
                            samples,
                            singular_at: Some(next),
                        })
                    }
                    Err(e) => return Err(e),
                }
            }
            samples.push(PathSample {
                param: target,
                state,
                branch,
            });
        }
        Ok(Walk {
            samples,
            singular_at: None,
        })
    }

    /// Walks the real time axis through `times`.
    pub fn walk_real(&self, times: &[f64]) -> Result<Walk> {
        self.walk(|t| Complex64::new(t, 0.0), times, f64::INFINITY)
    }

    /// Samples the solution at strictly increasing real times `times >= 0`.
    pub fn eval_path(&self, times: &[f64]) -> Result<Trajectory> {
        check_times(times)?;
        Ok(walk_to_trajectory(self.walk_real(times)?, |s| s.state))
    }
}

pub(crate) fn check_times(times: &[f64]) -> Result<()> {
    if times.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::InvalidInput("sample times must be strictly increasing".into()));
    }
    Ok(())
}

fn walk_to_trajectory(walk: Walk, state_of: impl Fn(&PathSample) -> State) -> Trajectory {
    let status = match walk.singular_at {
        None => Status::Completed,
        Some(t_est) => Status::HitSingularity { t_est },
    };
    Trajectory {
        times: walk.samples.iter().map(|s| s.param).collect(),
        states: walk.samples.iter().map(state_of).collect(),
        status,
    }
}

/// `τ(t) = (1 - e^{-2iωt}) / (2iω)`, a circle through 0 of period `π/|ω|`.
pub fn tau(omega: f64, t: f64) -> Complex64 {
    let iw2 = Complex64::new(0.0, 2.0 * omega);
    (ONE - (-iw2 * t).exp()) / iw2
}

/// Closed-form solution of the isochronous system.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IsochronousSolution {
    pub base: ClosedFormSolution,
    pub omega: f64,
}

impl IsochronousSolution {
    pub fn new(params: &IsochronousParams, x0: State) -> Result<Self> {
        Ok(Self {
            base: solve_ivp(&params.base, x0)?,
            omega: params.omega,
        })
    }

    pub fn base_period(&self) -> f64 {
        std::f64::consts::PI / self.omega.abs()
    }

    fn phase(&self, t: f64) -> Complex64 {
        Complex64::new(0.0, self.omega * t).exp()
    }

    /// Walks the `τ` circle through the real times `times`.
    pub fn walk(&self, times: &[f64]) -> Result<Walk> {
        let omega = self.omega;
        self.base.walk(
            |t| tau(omega, t),
            times,
            self.base_period() / CIRCLE_STEPS_PER_PERIOD,
        )
    }

    /// `x̃(t) = e^{iωt} x(τ(t))` for a sample of [`IsochronousSolution::walk`].
    pub fn state_at(&self, sample: &PathSample) -> State {
        sample.state * self.phase(sample.param)
    }

    /// `dx̃/dt = iω x̃ + e^{-iωt} ẋ(τ)` for a walk sample.
    pub fn derivative_at(&self, sample: &PathSample) -> Result<State> {
        let t = sample.param;
        let inner = self.base.derivative_at(&sample.branch)?;
        let rotation = Complex64::new(0.0, self.omega);
        Ok(self.state_at(sample) * rotation + inner * self.phase(-t))
    }

    pub fn eval_path(&self, times: &[f64]) -> Result<Trajectory> {
        check_times(times)?;
        Ok(walk_to_trajectory(self.walk(times)?, |s| self.state_at(s)))
    }

    /// State at a single real time `t >= 0`.
    pub fn eval(&self, t: f64) -> Result<State> {
        let walk = self.walk(&[t])?;
        match (walk.singular_at, walk.samples.first()) {
            (None, Some(s)) => Ok(self.state_at(s)),
            (Some(u), _) => Err(Error::SingularTime {
                time: Complex64::new(u, 0.0),
            }),
            (None, None) => unreachable!("walk over one parameter yields one sample"),
        }
    }
}

/// Solves the isochronous system from `x0` and evaluates it at real `t`.
pub fn eval_isochronous(params: &IsochronousParams, x0: State, t: f64) -> Result<State> {
    IsochronousSolution::new(params, x0)?.eval(t)
}
