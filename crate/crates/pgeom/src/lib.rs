//! Contravariant Riemannian-Poisson geometry engine.
//!
//! Scalar fields are exact symbolic expressions over chart coordinates
//! ([`expr`]); cometrics, bivector fields and 1-forms are matrices/vectors of
//! those expressions ([`manifold`]). On top of the bracket layer ([`poisson`])
//! sits the contravariant Levi-Civita connection with its curvature and
//! Weitzenböck machinery ([`connection`]), Killing and 2-Killing residuals
//! ([`killing`]) and warped products ([`warped`]).
//!
//! The crate's verification style is dual-route: every closed-form identity
//! is built twice from independent expression paths and the difference is
//! evaluated numerically on a seeded [`manifold::SamplePlan`]; residuals are
//! max-norms over the plan.

// Tensor code indexes matching summation variables across several arrays;
// the explicit index loops mirror that notation.
#![allow(clippy::needless_range_loop)]

pub mod connection;
pub mod error;
pub mod expr;
pub mod killing;
pub mod manifold;
pub mod poisson;
pub mod random;
pub mod warped;

pub use error::GeomError;
pub use expr::{Expr, ParseError};
