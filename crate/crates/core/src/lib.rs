//! Pointwise large-deviation limits `lim c_n log μ_n(I_n)` for sequences
//! whose log-MGF limit `L` need not be differentiable.
//!
//! - [`convex`]: extended-real convex functions, one-sided derivatives and
//!   the point classification at `λ`.
//! - [`legendre`]: Legendre–Fenchel conjugates, exact for piecewise-linear
//!   input.
//! - [`appendix`]: chord-modified functions and the atomic measures whose
//!   log-MGFs converge to them.
//! - [`harness`]: limit targets, empirical verification, local rates and
//!   the rate curve `z ↦ L(t_z+) - t_z z`.
//! - [`config`]: JSON configs and the command pipeline used by the binary.

pub mod appendix;
pub mod config;
pub mod convex;
pub mod error;
pub mod extreal;
pub mod families;
pub mod harness;
pub mod legendre;
pub mod measure;

pub use convex::{ConvexFn, Oracle, PointCase};
pub use error::{Error, ExcludedCase, Result};
pub use extreal::{ExtReal, NegInf, PosInf};
