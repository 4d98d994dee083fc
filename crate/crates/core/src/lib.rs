//! Damping-injection tuning for fully actuated port-Hamiltonian
//! mechanical systems.
//!
//! The pipeline goes: describe a mechanical system ([`model`]), linearize
//! its damping-injected closed loop and transform the state matrix into
//! saddle-point form ([`linearize`]), read transient behavior off that
//! form's spectrum ([`saddle`]), choose gains for a no-overshoot or
//! target-damping-ratio response ([`tuning`]), certify a region where the
//! linear analysis governs the nonlinear system ([`doa`]), and validate
//! everything by nonlinear simulation ([`sim`]). The bundled two-link
//! manipulator study ([`demo`]) exercises the full chain.

pub mod demo;
pub mod doa;
mod error;
pub(crate) mod exec;
pub mod linalg;
pub mod linearize;
pub mod model;
pub mod saddle;
pub mod sim;
pub mod tuning;

pub use error::{Error, Result};
