//! Martingale selection on finite scenario trees, in exact rational arithmetic.
//!
//! The crate decides whether an adapted sequence of relatively open convex
//! polyhedra admits a selector that is a (cone-constrained) martingale under
//! some equivalent measure, constructs such a selector when it exists, and
//! applies the machinery to
//!
//! * arbitrage-free price bounds under polyhedral portfolio constraints
//!   ([`pricing`]), and
//! * robust no-arbitrage, strictly consistent price processes and
//!   endowment checks in currency markets with proportional costs
//!   ([`kabanov`]).
//!
//! All arithmetic is exact; there are no tolerances anywhere.

pub mod error;
pub mod format;
pub mod generate;
pub mod kabanov;
pub mod lp;
mod memo;
pub mod polyhedra;
pub mod pricing;
pub mod rational;
pub mod selection;
pub mod tree;

pub use error::{Error, Result};
pub use rational::Rational;
