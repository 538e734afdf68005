//! Computational toolkit for one-dimensional dynamics around Sharkovskii's
//! theorem and its extension to non-wandering points.
//!
//! The crate is organized bottom-up:
//!
//! - [`sharkovskii`]: the order ◁ on positive integers and its lift to
//!   hyperintegers.
//! - [`hyper`]: eventually periodic sequences read as classes of a
//!   sequence-quotient field.
//! - [`pl`]: exact continuous piecewise-linear maps.
//! - [`continuity`]: perturbation budgets `δ(ε, S, n)` and the iteration
//!   stability check.
//! - [`perturbation`]: bump perturbations that close a near-return into an
//!   exact periodic orbit.
//! - [`orbit`]: periodic points, first returns, forcing checks.
//! - [`pipeline`]: the full construction from a non-wandering point to a second
//!   non-wandering point at finite depth.
//!
//! A guide with worked examples lives in the `book/` directory of the
//! repository; its code listings run as doctests of this crate.

pub mod continuity;
pub mod error;
pub mod hyper;
pub mod orbit;
pub mod perturbation;
pub mod pipeline;
pub mod pl;
pub mod sharkovskii;

pub use error::{Error, Result};
pub use hyper::{ClassVerdict, HyperInteger, HyperNumber, Magnitude, Verdict};
pub use pl::{Interval, IntervalSet, PiecewiseLinearMap};
pub use sharkovskii::{OrderVerdict, SharkovskiiKey};

#[cfg(doctest)]
mod book {
    #[doc = include_str!("../../../book/src/intro.md")]
    mod intro {}
    #[doc = include_str!("../../../book/src/order.md")]
    mod order {}
    #[doc = include_str!("../../../book/src/hyper.md")]
    mod hyper {}
    #[doc = include_str!("../../../book/src/maps.md")]
    mod maps {}
    #[doc = include_str!("../../../book/src/continuity.md")]
    mod continuity {}
    #[doc = include_str!("../../../book/src/orbits.md")]
    mod orbits {}
    #[doc = include_str!("../../../book/src/perturbation.md")]
    mod perturbation {}
    #[doc = include_str!("../../../book/src/pipeline.md")]
    mod pipeline {}
    #[doc = include_str!("../../../book/src/cli.md")]
    mod cli {}
    #[doc = include_str!("../../../README.md")]
    mod readme {}
}
