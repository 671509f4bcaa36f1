//! Constrained online convex optimization over convex sets that are reachable
//! only through a separation oracle.
//!
//! The crate is `no_std` (it needs `alloc`). Modules, bottom-up:
//!
//! - [`geometry`]: the oracle-access contract and concrete test bodies.
//! - [`ipso`]: infeasible projection driven by separation-oracle calls.
//! - [`base_ogd`]: blocked online gradient descent on top of [`ipso`].
//! - [`bagel`]: the Lyapunov-surrogate algorithm for adversarial constraints.
//! - [`adversary`]: seeded cost and constraint sequences.
//! - [`evaluation`]: hindsight optima, certificates, slope fits and an
//!   exact-projection comparator. The only place exact projections live.

#![no_std]

extern crate alloc;

pub mod adversary;
pub mod bagel;
pub mod base_ogd;
mod error;
pub mod evaluation;
pub mod geometry;
pub mod ipso;
pub mod record;
pub mod rng;
mod vector;

pub use error::{Error, Result};
pub use vector::Vector;
