//! Parameters, phase-space points and the two vector fields.
//!
//! Both systems share the quadratic denominator
//! `Q(x) = b1 x1^2 + (a1 b1 + a2 b2) x1 x2 + b2 x2^2`. All quantities are
//! complex; real problems are the special case of zero imaginary parts.

use std::ops::{Add, Mul, Neg, Sub};

use num_complex::Complex64;

use crate::{Error, Result};

/// Scalar type for parameters, states and (internally) times.
pub type ComplexScalar = Complex64;

/// `|Q|` below this fraction of `scale(Q) * |x|^2` counts as singular.
pub const SINGULAR_REL: f64 = 1e-12;

/// Relative tolerance for the degeneracy flags of [`degeneracy_report`].
pub const DEGENERACY_REL: f64 = 1e-10;

/// The four parameters `α1, α2, β1, β2`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ModelParams {
    pub alpha1: Complex64,
    pub alpha2: Complex64,
    pub beta1: Complex64,
    pub beta2: Complex64,
}

impl ModelParams {
    pub fn new(
        alpha1: Complex64,
        alpha2: Complex64,
        beta1: Complex64,
        beta2: Complex64,
    ) -> Result<Self> {
        let p = Self { alpha1, alpha2, beta1, beta2 };
        p.validate()?;
        Ok(p)
    }

    /// Real-valued parameters, stored as complex.
    pub fn real(alpha1: f64, alpha2: f64, beta1: f64, beta2: f64) -> Result<Self> {
        Self::new(alpha1.into(), alpha2.into(), beta1.into(), beta2.into())
    }

    pub fn validate(&self) -> Result<()> {
        let all = [self.alpha1, self.alpha2, self.beta1, self.beta2];
        if !all.iter().all(|z| z.is_finite()) {
            return Err(Error::InvalidInput("parameters must be finite".into()));
        }
        if self.coefficient_scale() == 0.0 {
            return Err(Error::InvalidInput(
                "the denominator Q vanishes identically (beta1 = beta2 = 0 and alpha1 beta1 + alpha2 beta2 = 0)".into(),
            ));
        }
        Ok(())
    }

    /// The mixed coefficient `α1 β1 + α2 β2` of `Q`.
    pub fn cross(&self) -> Complex64 {
        self.alpha1 * self.beta1 + self.alpha2 * self.beta2
    }

    /// Largest modulus among the three coefficients of `Q`.
    pub fn coefficient_scale(&self) -> f64 {
        self.beta1.norm().max(self.beta2.norm()).max(self.cross().norm())
    }

    /// Largest parameter modulus.
    pub fn magnitude(&self) -> f64 {
        [self.alpha1, self.alpha2, self.beta1, self.beta2]
            .iter()
            .map(|z| z.norm())
            .fold(0.0, f64::max)
    }

    /// Parameters with the roles of the two variables exchanged.
    pub fn swapped(&self) -> Self {
        Self {
            alpha1: self.alpha2,
            alpha2: self.alpha1,
            beta1: self.beta2,
            beta2: self.beta1,
        }
    }
}

/// Parameters of the isochronous system: the base model plus a real,
/// nonzero frequency `ω`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IsochronousParams {
    pub base: ModelParams,
    pub omega: f64,
}

impl IsochronousParams {
    pub fn new(base: ModelParams, omega: f64) -> Result<Self> {
        base.validate()?;
        if !omega.is_finite() || omega == 0.0 {
            return Err(Error::InvalidInput("omega must be finite and nonzero".into()));
        }
        Ok(Self { base, omega })
    }

    /// `T = π / |ω|`.
    pub fn base_period(&self) -> f64 {
        std::f64::consts::PI / self.omega.abs()
    }
}

/// A point `(x1, x2)` of the complex phase space. Also used for
/// time derivatives of such points.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct State {
    pub x1: Complex64,
    pub x2: Complex64,
}

impl State {
    pub const ZERO: State = State {
        x1: Complex64::new(0.0, 0.0),
        x2: Complex64::new(0.0, 0.0),
    };

    pub fn new(x1: Complex64, x2: Complex64) -> Self {
        Self { x1, x2 }
    }

    pub fn real(x1: f64, x2: f64) -> Self {
        Self::new(x1.into(), x2.into())
    }

    /// Euclidean norm over both complex components.
    pub fn norm(&self) -> f64 {
        self.x1.norm().hypot(self.x2.norm())
    }

    pub fn is_finite(&self) -> bool {
        self.x1.is_finite() && self.x2.is_finite()
    }

    pub fn is_zero(&self) -> bool {
        self.x1 == Complex64::new(0.0, 0.0) && self.x2 == Complex64::new(0.0, 0.0)
    }

    pub fn swapped(&self) -> Self {
        Self::new(self.x2, self.x1)
    }

    pub(crate) fn to_reals(self) -> [f64; 4] {
        [self.x1.re, self.x1.im, self.x2.re, self.x2.im]
    }

    pub(crate) fn from_reals(v: [f64; 4]) -> Self {
        Self::new(Complex64::new(v[0], v[1]), Complex64::new(v[2], v[3]))
    }
}

impl Add for State {
    type Output = State;
    fn add(self, rhs: State) -> State {
        State::new(self.x1 + rhs.x1, self.x2 + rhs.x2)
    }
}

impl Sub for State {
    type Output = State;
    fn sub(self, rhs: State) -> State {
        State::new(self.x1 - rhs.x1, self.x2 - rhs.x2)
    }
}

impl Neg for State {
    type Output = State;
    fn neg(self) -> State {
        State::new(-self.x1, -self.x2)
    }
}

impl Mul<Complex64> for State {
    type Output = State;
    fn mul(self, rhs: Complex64) -> State {
        State::new(self.x1 * rhs, self.x2 * rhs)
    }
}

impl Mul<f64> for State {
    type Output = State;
    fn mul(self, rhs: f64) -> State {
        State::new(self.x1 * rhs, self.x2 * rhs)
    }
}

/// `Q = β1 x1² + (α1β1 + α2β2) x1 x2 + β2 x2²`.
pub fn quadratic_form(params: &ModelParams, s: &State) -> Complex64 {
    params.beta1 * s.x1 * s.x1 + params.cross() * s.x1 * s.x2 + params.beta2 * s.x2 * s.x2
}

/// Threshold on `|Q|` below which `s` is treated as a singular point.
pub fn singular_threshold(params: &ModelParams, s: &State) -> f64 {
    SINGULAR_REL * params.coefficient_scale() * s.norm().powi(2)
}

/// Right-hand side of the base system.
pub fn rhs(params: &ModelParams, s: &State) -> Result<State> {
    let q = quadratic_form(params, s);
    if q.norm() <= singular_threshold(params, s) {
        return Err(Error::SingularPoint { q_abs: q.norm() });
    }
    Ok(State::new(
        (s.x1 + params.alpha1 * s.x2) / q,
        -(s.x2 + params.alpha2 * s.x1) / q,
    ))
}

/// Right-hand side of the isochronous system: `rhs + iω x`.
pub fn rhs_isochronous(params: &IsochronousParams, s: &State) -> Result<State> {
    let f = rhs(&params.base, s)?;
    let iw = Complex64::new(0.0, params.omega);
    Ok(State::new(f.x1 + iw * s.x1, f.x2 + iw * s.x2))
}

/// Principal square root: nonnegative real part, and nonnegative imaginary
/// part when the real part is zero.
pub(crate) fn principal_sqrt(z: Complex64) -> Complex64 {
    let s = z.sqrt();
    if s.re < 0.0 || (s.re == 0.0 && s.im < 0.0) {
        -s
    } else {
        s
    }
}

/// Mode constants `r`, `a_n`, `b_n` for a chosen sign of `r`.
pub(crate) fn mode_constants(
    params: &ModelParams,
    root_sign: f64,
) -> (Complex64, [Complex64; 2], [Complex64; 2]) {
    let s = params.cross();
    let r = principal_sqrt(s * s - 4.0 * params.beta1 * params.beta2) * root_sign;
    let diff = params.alpha1 * params.beta1 - params.alpha2 * params.beta2;
    let a = [r + diff, -r + diff];
    let b = [
        2.0 * params.beta1 - params.alpha2 * (r + s),
        -2.0 * params.beta2 + params.alpha1 * (r + s),
    ];
    (r, a, b)
}

/// Flags for parameter sets where the closed form breaks down.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DegeneracyFlags {
    pub r: Complex64,
    pub a: [Complex64; 2],
    pub b: [Complex64; 2],
    /// `b1 b2 - a1 a2`
    pub denominator: Complex64,
    pub r_zero: bool,
    pub denominator_zero: bool,
}

impl DegeneracyFlags {
    pub fn is_degenerate(&self) -> bool {
        self.r_zero || self.denominator_zero
    }
}

pub fn degeneracy_report(params: &ModelParams) -> DegeneracyFlags {
    degeneracy_with_sign(params, 1.0)
}

pub(crate) fn degeneracy_with_sign(params: &ModelParams, root_sign: f64) -> DegeneracyFlags {
    let (r, a, b) = mode_constants(params, root_sign);
    let s = params.cross();
    let r_scale = (s.norm_sqr() + 4.0 * params.beta1.norm() * params.beta2.norm()).sqrt();
    let denominator = b[0] * b[1] - a[0] * a[1];
    let d_scale = b[0].norm() * b[1].norm() + a[0].norm() * a[1].norm();
    DegeneracyFlags {
        r,
        a,
        b,
        denominator,
        r_zero: r.norm() <= DEGENERACY_REL * r_scale,
        denominator_zero: denominator.norm() <= DEGENERACY_REL * d_scale,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn fixture() -> ModelParams {
        ModelParams::real(0.0, 0.0, 1.0, -1.0).unwrap()
    }

    #[test]
    fn quadratic_form_examples() {
        assert_eq!(quadratic_form(&fixture(), &State::real(2.0, 1.0)), c(3.0, 0.0));
        assert_eq!(quadratic_form(&fixture(), &State::ZERO), c(0.0, 0.0));
        let p = ModelParams::real(0.0, 0.0, 1.0, 1.0).unwrap();
        let iso = State::new(c(1.0, 0.0), c(0.0, 1.0));
        assert_eq!(quadratic_form(&p, &iso), c(0.0, 0.0));
    }

    #[test]
    fn rhs_examples() {
        let f = rhs(&fixture(), &State::real(2.0, 1.0)).unwrap();
        assert!((f.x1 - c(2.0 / 3.0, 0.0)).norm() < 1e-15);
        assert!((f.x2 - c(-1.0 / 3.0, 0.0)).norm() < 1e-15);
        // d(x1 x2)/dt vanishes when alpha = 0
        let s = State::real(2.0, 1.0);
        assert!((s.x2 * f.x1 + s.x1 * f.x2).norm() < 1e-15);
        assert!(matches!(rhs(&fixture(), &State::ZERO), Err(Error::SingularPoint { .. })));
    }

    #[test]
    fn rhs_isochronous_examples() {
        let iso = IsochronousParams::new(fixture(), 1.0).unwrap();
        let f = rhs_isochronous(&iso, &State::real(2.0, 1.0)).unwrap();
        assert!((f.x1 - c(2.0 / 3.0, 2.0)).norm() < 1e-15);
        assert!((f.x2 - c(-1.0 / 3.0, 1.0)).norm() < 1e-15);
        assert!(rhs_isochronous(&iso, &State::ZERO).is_err());
        let tiny = IsochronousParams::new(fixture(), 1e-300).unwrap();
        let s = State::real(2.0, 1.0);
        let diff = rhs_isochronous(&tiny, &s).unwrap() - rhs(&fixture(), &s).unwrap();
        assert!(diff.norm() < 1e-299);
    }

    #[test]
    fn degeneracy_examples() {
        let d = degeneracy_report(&fixture());
        assert_eq!(d.r, c(2.0, 0.0));
        assert!(!d.r_zero && !d.denominator_zero);

        // beta = 0 makes Q identically zero, which `new` rejects, so build it directly.
        let zero = ModelParams {
            alpha1: c(0.0, 0.0),
            alpha2: c(0.0, 0.0),
            beta1: c(0.0, 0.0),
            beta2: c(0.0, 0.0),
        };
        assert!(zero.validate().is_err());
        let d = degeneracy_report(&zero);
        assert_eq!(d.r, c(0.0, 0.0));
        assert!(d.r_zero);

        let d = degeneracy_report(&ModelParams::real(2.0, 0.0, 1.0, 1.0).unwrap());
        assert_eq!(d.r, c(0.0, 0.0));
        assert!(d.r_zero);
    }

    #[test]
    fn principal_branch() {
        assert_eq!(principal_sqrt(c(-4.0, 0.0)), c(0.0, 2.0));
        assert_eq!(principal_sqrt(c(-4.0, -0.0)), c(0.0, 2.0));
        assert!(principal_sqrt(c(0.3, -2.0)).re > 0.0);
    }

    #[test]
    fn invalid_inputs() {
        assert!(ModelParams::real(f64::NAN, 0.0, 1.0, 1.0).is_err());
        assert!(IsochronousParams::new(fixture(), 0.0).is_err());
        assert!(IsochronousParams::new(fixture(), f64::INFINITY).is_err());
    }
}
