//! Entanglement dynamics of two driven, dipole-coupled qubits, each damped
//! by its own reservoir.
//!
//! The library evolves two-qubit density matrices under three related master
//! equations (rotating frame, secular, undriven thermal), carries analytic
//! X-state solutions for four initial-state families, computes concurrence
//! by both the X-state shortcut and the general Wootters formula, and sweeps
//! (state parameter x coupling) grids of sudden-death times and revival
//! counts. The `esdlab` binary exposes the same machinery as `evolve`,
//! `scan`, `validate`, and `families` subcommands.
//!
//! Units: all rates are quoted in units of a reference relaxation rate and
//! all times in its inverse.

// Validation uses `!(x > 0.0)` so NaN inputs land on the error path; the
// suggested `x <= 0.0` would silently accept them.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod cli;
pub mod dynamics;
pub mod entanglement;
pub mod qmatrix;
pub mod scan;
pub mod validate;
pub mod xstate;

pub use dynamics::{DensityMatrix, DynamicsError, SystemParams, Trajectory};
pub use entanglement::{ConcurrenceTrace, EsdError, EsdReport};
pub use qmatrix::{CMat2, CMat4, MatrixError};
pub use scan::{FamilyKind, Model, ScanConfig, ScanResult};
pub use xstate::{FamilySpec, XState, XStateError};
