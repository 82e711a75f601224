//! Library side of the `twomode` command-line tool.
//!
//! Every subcommand is a function from a [`RunConfig`] and an output
//! directory to files on disk plus an [`Outcome`] that fixes the process
//! exit code:
//!
//! | code | meaning                         |
//! |------|---------------------------------|
//! | 0    | success                         |
//! | 1    | configuration or I/O error      |
//! | 2    | trajectory hit a singularity    |
//! | 3    | degenerate parameters or state  |
//! | 4    | a verification check failed     |
//! | 5    | integrator gave up (step budget or step underflow) |

pub mod commands;
pub mod config;
pub mod output;
pub mod sweep;

pub use config::{Format, RunConfig};

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("config error: {0}")]
    Config(String),
    #[error("I/O error: {0}")]
    Io(#[from] std::io::Error),
    #[error("{0}")]
    Degenerate(twomode::Error),
    #[error("{0}")]
    Solver(twomode::Error),
}

impl From<twomode::Error> for CliError {
    fn from(e: twomode::Error) -> Self {
        use twomode::Error as E;
        match e {
            E::DegenerateParameters { .. } | E::DegenerateInitialState { .. } | E::SingularStart { .. } => {
                CliError::Degenerate(e)
            }
            E::InvalidInput(msg) => CliError::Config(msg),
            other => CliError::Solver(other),
        }
    }
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) | CliError::Io(_) => 1,
            CliError::Degenerate(_) => 3,
            CliError::Solver(twomode::Error::SingularTime { .. }) => 2,
            CliError::Solver(twomode::Error::StepUnderflow { .. }) => 5,
            CliError::Solver(_) => 1,
        }
    }
}

/// How a command finished when it did not fail outright.
#[derive(Debug, Clone, PartialEq)]
pub enum Outcome {
    Completed,
    HitSingularity { t_star: f64 },
    StepLimit { t: f64 },
    VerificationFailed { check: String },
}

impl Outcome {
    pub fn exit_code(&self) -> i32 {
        match self {
            Outcome::Completed => 0,
            Outcome::HitSingularity { .. } => 2,
            Outcome::VerificationFailed { .. } => 4,
            Outcome::StepLimit { .. } => 5,
        }
    }
}

impl From<twomode::Status> for Outcome {
    fn from(s: twomode::Status) -> Self {
        match s {
            twomode::Status::Completed => Outcome::Completed,
            twomode::Status::HitSingularity { t_est } => Outcome::HitSingularity { t_star: t_est },
            twomode::Status::StepLimit { t } => Outcome::StepLimit { t },
        }
    }
}
