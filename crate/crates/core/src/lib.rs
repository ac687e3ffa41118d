//! Numerically exact two-photon coincidence statistics for two
//! cooperatively emitting two-level quantum emitters.
//!
//! Markovian radiative decay, incoherent pumping and phenomenological pure
//! dephasing are handled in Liouville space ([`quantum`]); the per-emitter
//! superohmic phonon environments are treated without approximation through
//! discretized influence functionals in matrix product operator form
//! ([`pt`]). Analytic reference models, fitting, and instrument-response
//! post-processing complete the pipeline from microscopic parameters to
//! publishable g²(τ) curves.

pub mod analytic;
pub mod bath;
pub mod cache;
pub mod dynamics;
pub mod error;
pub mod csvio;
pub mod linalg;
pub mod postprocess;
pub mod pt;
pub mod quad;
pub mod quantum;
pub mod units;

pub use error::{CoemitError, Result};
