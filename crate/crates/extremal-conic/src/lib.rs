//! Conic optimization bounds for geometric packing problems, with exact
//! rational certificates.
//!
//! This crate computes upper bounds for a family of extremal geometry
//! problems and then *proves* those bounds with self-contained rational
//! certificates:
//!
//! - **Kissing numbers** via the linear programming (two-point) bound and
//!   the semidefinite three-point bound on the unit sphere.
//! - **Measurable orthogonality-avoiding sets** on the sphere: the exact
//!   `1/n` bound, computed in rational arithmetic.
//! - **Measurable one-avoiding sets** in the plane: the closed-form
//!   two-point bound obtained from the radial Fourier profile.
//! - **Finite graphs**: the theta number and its variants, valid cuts from
//!   the Boolean-quadratic cone, the moment-matrix hierarchy, and exact
//!   dual certificates for the independence number.
//!
//! The numerical work is done by a small deterministic primal-dual
//! interior-point solver ([`conic`]); everything a certificate depends on
//! is re-checked in exact rational arithmetic ([`verify`]), so certificate
//! validity never rests on floating-point computation.
//!
//! See the `book/` guide in the repository for a narrative introduction,
//! and the `extremal-conic` binary for the command-line interface.

pub mod bounds;
pub mod cert;
pub mod conic;
pub mod graphs;
pub mod lasserre;
pub mod orthopoly;
pub mod rational;
pub mod simplex;
pub mod verify;

/// Toolkit version string recorded in emitted certificates.
pub const VERSION: &str = env!("CARGO_PKG_VERSION");
