//! Continuous-time quantum walks of two identical, interacting particles on a
//! ring whose tunnelling amplitudes fluctuate as independent random telegraph
//! processes.
//!
//! All quantities are in reduced units: energies in units of the hopping `J`,
//! time `τ = Jt`, switching rate `γ = ξ/J`.

// Negated float comparisons reject NaN along with out-of-range values.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod ensemble;
pub mod error;
pub mod fullspace;
pub mod hamiltonian;
pub mod lattice;
pub mod noise;
pub mod observables;
pub mod propagator;
pub mod spectral;

pub use error::{Error, Result};
pub use hamiltonian::{InteractionSpec, LinkConfiguration, SparseHamiltonian};
pub use lattice::{centered_pair, LatticeSpec, StateVector, Statistics, TwoParticleBasis};
pub use noise::NoiseSpec;
