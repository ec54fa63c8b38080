//! Exterior Bernoulli free boundary solver for A-harmonic operators.
//!
//! Given a convex inner body K, an operator A in the class M_p(alpha) and
//! a constant c > 0, the crate computes the convex outer domain Omega and
//! the capacitary potential u of the ring Omega \ K with u = 1 on the
//! inner boundary, u = 0 on the outer boundary and |grad u| = c along the
//! outer (free) boundary. Along the way it exposes the building blocks as
//! executable checks: operator structure conditions, convexity of level
//! sets, gradient bounds, Harnack and comparison behaviour, and a radial
//! closed-form oracle that anchors the acceptance tests.

pub mod config;
pub mod error;
pub mod export;
pub mod free_boundary;
pub mod geometry;
pub mod grid;
pub mod linsolve;
pub mod math;
pub mod operator;
pub mod oracle;
pub mod potential;
pub mod report;
pub mod verify;

pub use error::{Error, Result};
pub use math::{Mat2, Vec2};
