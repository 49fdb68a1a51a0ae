//! Riccati flows, linear-Gaussian Schrodinger bridges and Sinkhorn iterates,
//! grid Sinkhorn in log domain, and the explicit contraction constants that
//! bound all of them.
//!
//! - [`spd`]: symmetric / PSD / SPD matrix types, square roots, geometric mean, Loewner order.
//! - [`riccati`]: `Ricc_w(s) = (I + (w + s)^{-1})^{-1}`, its fixed point and decay constants.
//! - [`gaussian`]: exact bridge, Sinkhorn recursion, divergences, OT limit, proximal sampler.
//! - [`discrete`]: Sinkhorn on a quadrature grid with entropy diagnostics.
//! - [`bounds`]: `eps`, `phi`, curvature flows, `xi`/`iota`, rate envelopes.
//! - [`cli`], [`verify`]: config-driven runs and the acceptance suite.

pub mod bounds;
pub mod cli;
pub mod discrete;
pub mod error;
pub mod gaussian;
pub mod random;
pub mod riccati;
pub mod spd;
pub mod verify;

pub use error::{Error, Result};
