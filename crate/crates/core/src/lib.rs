//! Discretized pseudo-parabolic Kirchhoff equation with logarithmic source,
//!
//! ```text
//! u_t − kΔu_t − (a + b‖∇u‖_p^p) Δ_p u = |u|^{q−1} u log|u|   on (0, L),  u = 0 on ∂Ω,
//! ```
//!
//! with its variational landscape around the Nehari manifold,
//! a time integrator and the threshold/decay/blow-up checks built on top.

pub mod analysis;
pub mod bisect;
pub mod energy;
pub mod error;
pub mod evolution;
pub mod experiment;
pub mod grid;
pub mod linalg;
pub mod optimize;
pub mod wells;

#[cfg(test)]
pub(crate) mod testutil;

pub use error::{Error, Result};
pub use grid::{Field, Grid, ModelParams};
