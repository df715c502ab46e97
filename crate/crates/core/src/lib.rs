//! Exact non-Markovian dynamics of two qubits in a leaky cavity.
//!
//! The cavity and its bath are eliminated into two coloured noises; the
//! two-qubit state follows a linear quantum-state-diffusion equation whose
//! memory terms are carried by two O-operators. Their coefficient fields are
//! solved once per parameter set ([`coeffs`]), trajectories are integrated
//! against sampled noises ([`trajectory`]), and the ensemble average recovers
//! the reduced density matrix. [`oracle`] provides independent references.
//!
//! The crate is `no_std` with `alloc`.

#![no_std]

extern crate alloc;

pub mod algebra;
pub mod coeffs;
pub mod error;
pub mod model;
pub mod noise;
pub mod observables;
pub mod oracle;
pub mod quadrature;
pub mod trajectory;

pub use algebra::{ComplexMatrix, C64};
pub use coeffs::{assemble_obar, solve_coefficients, CoefficientFields};
pub use error::{Error, Warning};
pub use model::{EomVariant, InitialState, ParameterSet, SystemState};
pub use noise::{NoiseRealization, NoiseSampler, TimeGrid};
pub use observables::{concurrence, trace_distance, DensityMatrix4};
pub use oracle::{closed_system, pseudomode_lindblad};
pub use trajectory::{propagate, quadrature_ensemble, run_ensemble, Method, SimulationResult};
