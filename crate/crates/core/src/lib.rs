//! Exact and numerical solutions of a solvable system of two nonlinearly
//! coupled first-order ODEs,
//!
//! ```text
//! x1' =  (x1 + a1 x2) / Q(x),   x2' = -(x2 + a2 x1) / Q(x),
//! Q(x) = b1 x1^2 + (a1 b1 + a2 b2) x1 x2 + b2 x2^2,
//! ```
//!
//! and of its isochronous variant obtained by adding `i ω x` to both
//! right-hand sides.
//!
//! Every solution of the initial-value problem is a superposition of two
//! square-root modes, `x_n(t) = γ_n1 √(1 + k_1 t) + γ_n2 √(1 + k_2 t)`.
//! The crate is organized as:
//!
//! - [`model`]: parameters, states and the two vector fields.
//! - [`closedform`]: the mode coefficients and branch-continuous evaluation.
//! - [`integrator`]: an adaptive Dormand–Prince 5(4) oracle on the
//!   complexified state.
//! - [`verify`]: named checks (residual, scaling, mode linearity, isochrony)
//!   and seeded ensemble sampling.
//!
//! ```
//! use twomode::{closedform, ModelParams, State};
//!
//! let params = ModelParams::real(0.0, 0.0, 1.0, -1.0)?;
//! let sol = closedform::solve_ivp(&params, State::real(2.0, 1.0))?;
//! let traj = sol.eval_path(&[0.0, 1.0, 2.0, 4.0])?;
//! let x = traj.states.last().unwrap();
//! assert!((x.x1.re - (1.5 + 0.5 * 17f64.sqrt())).abs() < 1e-12);
//! # Ok::<(), twomode::Error>(())
//! ```

pub mod closedform;
mod error;
pub mod integrator;
pub mod model;
mod trajectory;
pub mod verify;

pub use closedform::{BranchState, ClosedFormSolution, CoefficientDiagnostics, RootChoice};
pub use error::{Error, Result};
pub use integrator::{Field, IntegratorConfig};
pub use model::{ComplexScalar, DegeneracyFlags, IsochronousParams, ModelParams, State};
pub use trajectory::{Status, Trajectory};
