//! Open-system dynamics of one and two qubits coupled to local and common
//! thermal baths, and quantum Fisher information for inverse-temperature
//! estimation with single-qubit probes.
//!
//! The crate is organised bottom-up:
//!
//! * [`bath`]: Ohmic spectral density, decay rates and Lamb-shift coefficients.
//! * [`operators`]: Pauli algebra, tensor products, partial traces and the
//!   eigenbasis jump-operator decomposition.
//! * [`liouvillian`]: assembly of Bloch-Redfield generators in the partial or
//!   full secular approximation, with Redfield or unified coefficients.
//! * [`dynamics`]: adaptive Runge-Kutta propagation and steady states.
//! * [`metrology`]: quantum Fisher information, finite-difference state
//!   derivatives, temperature conversions and Cramér-Rao errors.
//! * [`analytic`]: closed-form single-qubit solution used as an oracle.
//! * [`scenarios`]: config-driven runners, CSV output and the validation suite.

pub mod analytic;
pub mod bath;
pub mod dynamics;
pub mod error;
pub mod integrator;
pub mod liouvillian;
pub mod metrology;
pub mod operators;
pub mod quadrature;
pub mod scenarios;

pub use error::{Error, Result};
pub use operators::{CMatrix, DensityMatrix, Qubit, C64};
