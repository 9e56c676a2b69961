//! Phase-space simulation of an oscillator with quadratic Hamiltonian
//! subjected to repeated imprecise simultaneous quadrature measurements.
//!
//! The library covers: truncated Fock-space states and operators,
//! numerically stable displacement matrices, characteristic functions and
//! Wigner transforms, Bogoliubov normal forms of quadratic Hamiltonians,
//! kick distributions derived from the measurement apparatus, the
//! measurement master equation with its exact characteristic-function
//! propagator and Monte-Carlo unravelling, and POVM outcome statistics.

pub mod displacement;
pub mod error;
pub mod fock;
pub mod grid;
pub mod kick;
pub mod lindblad;
pub mod measurement;
pub mod phase;
pub mod quadham;
pub mod special;
pub mod tol;

pub use error::{Error, Result};
pub use fock::{FockMatrix, FockVector};
pub use grid::{GridKind, PhaseGrid};
pub use kick::{KickDistribution, KickKind};
pub use measurement::{ApparatusState, ChiSource, MeasurementModel};
pub use quadham::{NormalForm, QuadraticLadder, QuadraticQp};
pub use tol::Tolerances;

/// Complex double, the scalar type used throughout.
pub type C64 = num_complex::Complex64;

// downstream crates build matrices with the same linear-algebra types
pub use nalgebra;
