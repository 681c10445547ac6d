//! A numerical laboratory for thermalization of weakly coupled quantum
//! systems and for Gibbs-state preparation by partial quantum phase
//! estimation.
//!
//! The crate builds system+bath Hamiltonians at desk scale, constructs
//! rectangular/microcanonical/Gibbs states, verifies spectral-projector
//! perturbation bounds and density-of-states counting bounds against
//! exactly computed trace distances, and simulates the preparation
//! algorithm both spectrally (eigenbasis-resolved) and at gate level.
//!
//! Module map:
//! - [`hamiltonians`]: spin-bath, coupling, and composed Hamiltonians.
//! - [`states`]: Gibbs, microcanonical, rectangular states; partial
//!   traces; trace distance.
//! - [`perturbation`]: projector census and the interacting-vs-
//!   noninteracting distance bound.
//! - [`counting`]: level counting, the smoothed bath density of states,
//!   and the counting bound.
//! - [`phaseest`]: spectral simulation of partial phase estimation and
//!   all closed-form error/runtime bounds.
//! - [`circuit`]: gate-level density-matrix oracle for the spectral path.
//! - [`dynamics`]: unitary time evolution, time-averaged distances, and
//!   Haar sampling in microcanonical subspaces.
//! - [`experiments`]: reproducible sweep drivers, CSV/JSON/SVG emission.

pub mod circuit;
pub mod counting;
pub mod csv;
pub mod dynamics;
pub mod experiments;
pub mod hamiltonians;
pub mod jsonio;
pub mod linalg;
pub mod perturbation;
pub mod phaseest;
pub mod quadrature;
pub mod rng;
pub mod states;

mod error;

pub use error::{Error, Result};
