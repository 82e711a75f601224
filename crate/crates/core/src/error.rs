use num_complex::Complex64;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    /// The quadratic form in the denominator vanishes at the state.
    #[error("SingularPoint: |Q| = {q_abs:e} is below the singular threshold")]
    SingularPoint { q_abs: f64 },

    /// `b1 b2 - a1 a2` vanishes, or `r = 0` (confluent modes).
    #[error("DegenerateParameters: {reason}")]
    DegenerateParameters { reason: String },

    /// `η` vanishes for this initial state (includes `x0 = 0` and `Q(x0) = 0`).
    #[error("DegenerateInitialState: {reason}")]
    DegenerateInitialState { reason: String },

    #[error("BranchAmbiguity at t = {time}")]
    BranchAmbiguity { time: Complex64 },

    /// A radicand `1 + k_n t` vanished on the evaluation path.
    #[error("SingularTime: radicand zero bracketed near t = {time}")]
    SingularTime { time: Complex64 },

    #[error("SingularStart: initial |Q| = {q_abs:e} is below the guard")]
    SingularStart { q_abs: f64 },

    #[error("step size underflow at t = {t} without singularity evidence")]
    StepUnderflow { t: f64 },
}
