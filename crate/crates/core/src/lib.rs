//! Free vibration of hinged Euler–Bernoulli beams with cracks modelled as
//! rotational springs.
//!
//! Eigenvalues and eigenfunctions come from a modified Shifrin method
//! ([`shifrin`]) and, independently, from a transition-matrix method
//! ([`transition`]). [`spectral`] evaluates the energy form and checks
//! computed modes against every boundary and junction condition.

pub mod beam_model;
pub mod cli;
pub mod eigen;
pub mod error;
pub mod linalg;
pub mod roots;
pub mod shifrin;
pub mod spectral;
pub mod transition;

pub use beam_model::{BeamProblem, CrackSpec, PhysicalBeam};
pub use eigen::{Eigenpair, PiecewiseFn, PiecewiseForm, SolverKind, Spectrum};
pub use error::{BeamError, Result};
