//! Numerical laboratory for mean curvature flow with forcing near round
//! shrinkers.
//!
//! The crate is organised bottom-up:
//!
//! * [`mesh`]: discrete planar curves and axially symmetric profiles, with
//!   curvature, the shrinker quantity `phi = H + x^perp / 2`, normal graphs
//!   over the model shrinkers and the drift Laplacian.
//! * [`gaussian`]: Gaussian area functionals, entropy search, cutoff
//!   functionals, the modified monotone functionals and the shrinker scales.
//! * [`flow`]: integrators for the forced flow and its rescaled version,
//!   trajectories, graphical scale and the evolution residual of `phi`.
//! * [`loja`]: inequality verification (ODE and recurrence lemmas,
//!   summability, monotonicity and Lojasiewicz-type certificates).
//! * [`runner`]: scenario configuration, presets, outputs and sweeps.

pub mod error;
pub mod flow;
pub mod gaussian;
pub mod loja;
pub mod mesh;
pub mod runner;

pub use error::{Error, Result};
