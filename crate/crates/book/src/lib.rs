//! Runs the guide's Rust listings as doctests.

#[doc = include_str!("../../../book/src/introduction.md")]
pub mod introduction {}

#[doc = include_str!("../../../book/src/model.md")]
pub mod model {}

#[doc = include_str!("../../../book/src/closed-form.md")]
pub mod closed_form {}

#[doc = include_str!("../../../book/src/isochrony.md")]
pub mod isochrony {}

#[doc = include_str!("../../../book/src/integrator.md")]
pub mod integrator {}

#[doc = include_str!("../../../book/src/verification.md")]
pub mod verification {}

#[doc = include_str!("../../../book/src/cli.md")]
pub mod cli {}
