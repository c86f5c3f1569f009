//! Stochastic midpoint variational integrators on the rotation group.
//!
//! The crate provides the Cayley-retraction Lie–Poisson steppers for the
//! free rigid body and the heavy top, truncated Wiener increments, the
//! conservation monitors used to check them, and a strong-convergence
//! harness.

pub mod convergence;
pub mod diagnostics;
pub mod error;
pub mod integrator;
pub mod lie;
pub mod models;
pub mod noise;
pub mod trajectory;

pub use error::{Error, Result};
pub use lie::{AlgebraVector, Mat3, Momentum, Rotation, Vec3};
