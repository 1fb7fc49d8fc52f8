//! Simulator and verification engine for dipolar-decoupling and selective
//! recoupling pulse sequences on networks of spin-1/2 nuclei.
//!
//! The core tools:
//!
//! - [`algebra`]: exact symbolic algebra over sums of spin words
//!   (tensor products of `{E, Ix, Iy, Iz}`), with quarter-turn rotations on
//!   an integer path so toggling-frame identities hold exactly, plus a dense
//!   complex-matrix realization.
//! - [`model`]: rotating-frame Zeeman, secular dipolar, and selective-drive
//!   Hamiltonians from a declarative system description (rad/s, hbar = 1).
//! - [`sequence`]: Mansfield-notation parsing and expansion, the WHH-4 and
//!   MREV-16 decoupling cycles, selective-inversion W subcycles, and the
//!   recoupling supercycle.
//! - [`aht`]: toggling frames, zeroth-order averages, the first-order Magnus
//!   term, offset-averaging vectors, and secular selective-drive operators.
//! - [`propagator`]: exact time evolution, the average-Hamiltonian reference
//!   propagator, Haar-random states, and fidelity measures.
//! - [`experiments`]: packaged studies (fidelity map, recoupling checks,
//!   selectivity guide, symmetry-order checks).
//!
//! Everything numeric is generic over the scalar type through
//! [`scalar::Real`]; `f64` aliases for the main types are exported at the
//! crate root.

pub mod aht;
pub mod algebra;
pub mod experiments;
pub mod model;
pub mod propagator;
pub mod scalar;
pub mod sequence;

pub use scalar::{Real, C};

/// `f64` aliases for the commonly used types.
pub type OperatorSum64 = algebra::OperatorSum<f64>;
pub type SpinSystem64 = model::SpinSystem<f64>;
pub type Geometry64 = model::Geometry<f64>;
pub type SelectiveDrive64 = model::SelectiveDrive<f64>;
pub type PulseSequence64 = sequence::PulseSequence<f64>;
pub type StateVector64 = propagator::StateVector<f64>;
pub type Trajectory64 = propagator::Trajectory<f64>;
pub type ScanResult64 = experiments::ScanResult<f64>;
pub type OffsetVectors64 = aht::OffsetVectors<f64>;

/// `f32` aliases, for callers trading accuracy for footprint.
pub type OperatorSum32 = algebra::OperatorSum<f32>;
pub type SpinSystem32 = model::SpinSystem<f32>;
pub type PulseSequence32 = sequence::PulseSequence<f32>;
pub type StateVector32 = propagator::StateVector<f32>;
