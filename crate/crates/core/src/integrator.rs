//! Adaptive Dormand–Prince 5(4) integration of either vector field.
//!
//! The complex state is advanced as four real components
//! `(Re x1, Im x1, Re x2, Im x2)`. Steps are accepted on a weighted RMS
//! error norm with mixed tolerances `abs_tol + rel_tol * max(|y|, |y_new|)`
//! and sized by the usual `0.9 * err^(-1/5)` proportional rule. Requested
//! sample times are hit exactly by shortening the step that would overshoot
//! them, so samples carry the full fifth-order accuracy.
//!
//! Blow-up of this system is not a divergence of the state: at a singular
//! time the state stays finite while `Q(x) -> 0` and the derivative diverges.
//! The integrator therefore reports a singularity when the step size
//! collapses below `min_step` while `|Q|` has been shrinking over the last
//! accepted steps, or when an accepted state falls under the `|Q|` guard.

use crate::model::{quadratic_form, rhs, rhs_isochronous, IsochronousParams, ModelParams, State};
use crate::{Error, Result, Status, Trajectory};

/// Which of the two systems to integrate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Field {
    Plain(ModelParams),
    Isochronous(IsochronousParams),
}

impl Field {
    pub fn params(&self) -> &ModelParams {
        match self {
            Field::Plain(p) => p,
            Field::Isochronous(iso) => &iso.base,
        }
    }

    pub fn eval(&self, s: &State) -> Result<State> {
        match self {
            Field::Plain(p) => rhs(p, s),
            Field::Isochronous(iso) => rhs_isochronous(iso, s),
        }
    }

    /// `|Q(s)|` relative to the coefficient scale and `|s|^2`.
    pub fn relative_q(&self, s: &State) -> f64 {
        let p = self.params();
        quadratic_form(p, s).norm() / (p.coefficient_scale() * s.norm().powi(2))
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IntegratorConfig {
    pub rel_tol: f64,
    pub abs_tol: f64,
    /// `None` picks a step from the size of the initial derivative.
    pub initial_step: Option<f64>,
    /// Relative to the integration span; `None` means `1e-14`.
    pub min_step: Option<f64>,
    pub max_steps: usize,
    /// Relative `|Q|` floor below which the state counts as singular.
    pub singular_guard: f64,
}

impl Default for IntegratorConfig {
    fn default() -> Self {
        Self {
            rel_tol: 1e-10,
            abs_tol: 1e-12,
            initial_step: None,
            min_step: None,
            max_steps: 1_000_000,
            singular_guard: 1e-10,
        }
    }
}

impl IntegratorConfig {
    pub fn with_rel_tol(mut self, rel_tol: f64) -> Self {
        self.rel_tol = rel_tol;
        self
    }

    pub fn validate(&self) -> Result<()> {
        let positive = |v: f64| v.is_finite() && v > 0.0;
        let ok = positive(self.rel_tol)
            && self.rel_tol >= 1e-14
            && positive(self.abs_tol)
            && self.initial_step.is_none_or(positive)
            && self.min_step.is_none_or(positive)
            && self.max_steps > 0
            && positive(self.singular_guard);
        if ok {
            Ok(())
        } else {
            Err(Error::InvalidInput(
                "integrator settings must be positive and rel_tol >= 1e-14".into(),
            ))
        }
    }
}

// Dormand–Prince 5(4) tableau (Dormand & Prince 1980), FSAL.
// The system is autonomous, so the nodes c_i are not needed.
const A21: f64 = 1.0 / 5.0;
const A31: f64 = 3.0 / 40.0;
const A32: f64 = 9.0 / 40.0;
const A41: f64 = 44.0 / 45.0;
const A42: f64 = -56.0 / 15.0;
const A43: f64 = 32.0 / 9.0;
const A51: f64 = 19372.0 / 6561.0;
const A52: f64 = -25360.0 / 2187.0;
const A53: f64 = 64448.0 / 6561.0;
const A54: f64 = -212.0 / 729.0;
const A61: f64 = 9017.0 / 3168.0;
const A62: f64 = -355.0 / 33.0;
const A63: f64 = 46732.0 / 5247.0;
const A64: f64 = 49.0 / 176.0;
const A65: f64 = -5103.0 / 18656.0;

// fifth-order weights, also row 7 of the tableau
const B1: f64 = 35.0 / 384.0;
const B3: f64 = 500.0 / 1113.0;
const B4: f64 = 125.0 / 192.0;
const B5: f64 = -2187.0 / 6784.0;
const B6: f64 = 11.0 / 84.0;

// difference between the fifth- and fourth-order weights
const E1: f64 = 71.0 / 57600.0;
const E3: f64 = -71.0 / 16695.0;
const E4: f64 = 71.0 / 1920.0;
const E5: f64 = -17253.0 / 339200.0;
const E6: f64 = 22.0 / 525.0;
const E7: f64 = -1.0 / 40.0;

const SAFETY: f64 = 0.9;
const MIN_FACTOR: f64 = 0.2;
const MAX_FACTOR: f64 = 5.0;
/// Window of accepted steps over which `|Q|` must have decreased for a step
/// collapse to count as a singularity.
const Q_HISTORY: usize = 8;

type Vec4 = [f64; 4];

fn axpy(y: &Vec4, h: f64, terms: &[(f64, &Vec4)]) -> Vec4 {
    let mut out = *y;
    for (i, o) in out.iter_mut().enumerate() {
        let mut acc = 0.0;
        for (c, k) in terms {
            acc += c * k[i];
        }
        *o += h * acc;
    }
    out
}

fn field_reals(field: &Field, y: &Vec4) -> Option<Vec4> {
    if !y.iter().all(|v| v.is_finite()) {
        return None;
    }
    let f = field.eval(&State::from_reals(*y)).ok()?.to_reals();
    f.iter().all(|v| v.is_finite()).then_some(f)
}

struct StepResult {
    y: Vec4,
    f: Vec4,
    err: f64,
}

/// One Dormand–Prince step; `None` when a stage lands on a singular or
/// non-finite point.
fn dp_step(field: &Field, y: &Vec4, k1: &Vec4, h: f64, cfg: &IntegratorConfig) -> Option<StepResult> {
    let k2 = field_reals(field, &axpy(y, h, &[(A21, k1)]))?;
    let k3 = field_reals(field, &axpy(y, h, &[(A31, k1), (A32, &k2)]))?;
    let k4 = field_reals(field, &axpy(y, h, &[(A41, k1), (A42, &k2), (A43, &k3)]))?;
    let k5 = field_reals(
        field,
        &axpy(y, h, &[(A51, k1), (A52, &k2), (A53, &k3), (A54, &k4)]),
    )?;
    let k6 = field_reals(
        field,
        &axpy(y, h, &[(A61, k1), (A62, &k2), (A63, &k3), (A64, &k4), (A65, &k5)]),
    )?;
    let y_new = axpy(y, h, &[(B1, k1), (B3, &k3), (B4, &k4), (B5, &k5), (B6, &k6)]);
    let k7 = field_reals(field, &y_new)?;

    let mut sum = 0.0;
    for i in 0..4 {
        let e = h * (E1 * k1[i] + E3 * k3[i] + E4 * k4[i] + E5 * k5[i] + E6 * k6[i] + E7 * k7[i]);
        let scale = cfg.abs_tol + cfg.rel_tol * y[i].abs().max(y_new[i].abs());
        sum += (e / scale).powi(2);
    }
    Some(StepResult {
        y: y_new,
        f: k7,
        err: (sum / 4.0).sqrt(),
    })
}

fn initial_step(y: &Vec4, f: &Vec4, span: f64) -> f64 {
    let ny = y.iter().map(|v| v * v).sum::<f64>().sqrt();
    let nf = f.iter().map(|v| v * v).sum::<f64>().sqrt();
    let h = if nf > 0.0 { 0.01 * ny / nf } else { span };
    h.min(span)
}

/// Integrates `field` from `x0` at `t = 0` to `t_end`, recording the state
/// at each of `sample_times` (ascending, within `[0, t_end]`).
///
/// A singularity or an exhausted step budget is reported in the returned
/// trajectory's status, with the samples reached so far.
pub fn integrate(
    field: &Field,
    x0: State,
    t_end: f64,
    sample_times: &[f64],
    config: &IntegratorConfig,
) -> Result<Trajectory> {
    config.validate()?;
    field.params().validate()?;
    if !x0.is_finite() {
        return Err(Error::InvalidInput("initial state must be finite".into()));
    }
    if !(t_end.is_finite() && t_end >= 0.0) {
        return Err(Error::InvalidInput("t_end must be finite and >= 0".into()));
    }
    if sample_times.iter().any(|t| !(0.0..=t_end).contains(t)) {
        return Err(Error::InvalidInput("sample times must lie in [0, t_end]".into()));
    }
    crate::closedform::check_times(sample_times)?;

    let q0 = if x0.is_zero() { 0.0 } else { field.relative_q(&x0) };
    if q0 <= config.singular_guard {
        return Err(Error::SingularStart {
            q_abs: quadratic_form(field.params(), &x0).norm(),
        });
    }
    let mut f = field.eval(&x0)?.to_reals();

    let mut traj = Trajectory {
        times: Vec::with_capacity(sample_times.len()),
        states: Vec::with_capacity(sample_times.len()),
        status: Status::Completed,
    };
    let mut pending = sample_times.iter().copied().peekable();
    while pending.next_if(|&s| s == 0.0).is_some() {
        traj.times.push(0.0);
        traj.states.push(x0);
    }
    if t_end == 0.0 {
        return Ok(traj);
    }

    let min_step = config.min_step.unwrap_or(1e-14) * t_end;
    let mut y = x0.to_reals();
    let mut t = 0.0;
    let mut h = config.initial_step.unwrap_or_else(|| initial_step(&y, &f, t_end));
    let mut q_hist: Vec<f64> = vec![q0];
    let mut steps = 0usize;

    while t < t_end {
        if steps >= config.max_steps {
            traj.status = Status::StepLimit { t };
            return Ok(traj);
        }
        steps += 1;

        let stop = pending.peek().copied().unwrap_or(t_end);
        let clipped = t + h >= stop;
        let h_try = if clipped { stop - t } else { h };

        let outcome = dp_step(field, &y, &f, h_try, config);
        let accepted = matches!(&outcome, Some(r) if r.err <= 1.0);
        if !accepted {
            let factor = match &outcome {
                Some(r) => (SAFETY * r.err.powf(-0.2)).max(MIN_FACTOR),
                None => 0.25,
            };
            h = h_try * factor;
            if h < min_step {
                // Near the singularity |Q| is comparable to the local error, so
                // compare the ends of the window rather than every step.
                let shrinking = q_hist.len() >= 2 && q_hist[q_hist.len() - 1] < q_hist[0];
                if shrinking {
                    traj.status = Status::HitSingularity { t_est: t };
                    return Ok(traj);
                }
                return Err(Error::StepUnderflow { t });
            }
            continue;
        }

        let r = outcome.expect("accepted step has a result");
        t = if clipped { stop } else { t + h_try };
        y = r.y;
        f = r.f;
        let state = State::from_reals(y);
        let q = field.relative_q(&state);
        if q <= config.singular_guard {
            traj.status = Status::HitSingularity { t_est: t };
            return Ok(traj);
        }
        q_hist.push(q);
        if q_hist.len() > Q_HISTORY + 1 {
            q_hist.remove(0);
        }
        if clipped && pending.peek() == Some(&stop) {
            traj.times.push(stop);
            traj.states.push(state);
            pending.next();
        }

        let factor = if r.err == 0.0 {
            MAX_FACTOR
        } else {
            (SAFETY * r.err.powf(-0.2)).clamp(MIN_FACTOR, MAX_FACTOR)
        };
        // a step shortened to hit a sample does not shrink the next one
        h = if clipped { h.max(h_try * factor) } else { h_try * factor };
    }
    Ok(traj)
}

/// Endpoint comparison of a coarse (`rel_tol = 1e-8`) and a fine
/// (`rel_tol = 1e-11`) run.
#[derive(Debug, Clone, PartialEq)]
pub struct ConvergenceReport {
    pub coarse: Trajectory,
    pub fine: Trajectory,
    /// Relative endpoint difference when both runs completed.
    pub endpoint_difference: Option<f64>,
    /// Relative difference of the halt times when both hit a singularity.
    pub singular_time_difference: Option<f64>,
}

pub fn self_convergence(field: &Field, x0: State, t_end: f64) -> Result<ConvergenceReport> {
    let base = IntegratorConfig::default();
    let coarse = integrate(field, x0, t_end, &[t_end], &base.with_rel_tol(1e-8))?;
    let fine = integrate(field, x0, t_end, &[t_end], &base.with_rel_tol(1e-11))?;
    let endpoint_difference = match (coarse.last(), fine.last()) {
        (Some((_, a)), Some((_, b))) if coarse.status.is_completed() && fine.status.is_completed() => {
            Some((a - b).norm() / b.norm().max(1e-300))
        }
        _ => None,
    };
    let singular_time_difference = match (coarse.status, fine.status) {
        (Status::HitSingularity { t_est: a }, Status::HitSingularity { t_est: b }) => {
            Some((a - b).abs() / b.abs())
        }
        _ => None,
    };
    Ok(ConvergenceReport {
        coarse,
        fine,
        endpoint_difference,
        singular_time_difference,
    })
}
