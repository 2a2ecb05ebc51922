//! Pseudo-spectral solver and verification lab for Schrödinger map flows
//! into embedded Kähler targets, regularized by a fourth-order parabolic
//! term and time-stepped with an exact semigroup plus a Duhamel fixed point.

pub mod analysis;
pub mod error;
pub mod exec;
pub mod flow;
pub mod geometry;
pub mod linalg;
pub mod operators;
pub mod oracle;
pub mod scenario;
pub mod spectral;
pub mod verify;

pub use error::{Error, Result};
