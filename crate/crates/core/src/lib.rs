//! Numerical laboratory for the Yang-Mills quantization pipeline: lattice
//! Cauchy data, the gauge Helmholtz projector, truncated Bargmann-Fock
//! quantization, mini-max spectra and the Chernoff-product propagator.

pub mod error;
pub mod fock;
pub mod helmholtz;
pub mod lattice;
pub mod lie;
pub mod propagator;
pub mod spectrum;

pub use error::{FockError, LatticeError, LieError, PropagatorError, SolverError, SpectrumError};
pub use lie::{Complex64, LieAlgebraSpec};
