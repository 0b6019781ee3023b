//! Simulation and analysis of an EIT quantum memory for a polarization-encoded
//! four-photon cluster state.
//!
//! The crate is organised bottom-up:
//!
//! - [`state`]: pure states, density matrices, Kraus channels and fidelity over
//!   labelled tensor-product bases.
//! - [`polariton`]: dark-state polaritons and the four-channel store/retrieve map.
//! - [`dynamics`]: one-dimensional light-storage dynamics in a Λ medium, storage
//!   efficiency and optimal control of the classical control field.
//! - [`decoherence`]: motional dephasing and transit lifetimes of the stored spin wave.
//! - [`verification`]: the projector witness and fidelity thresholds.

#![forbid(unsafe_code)]

pub mod constants;
pub mod decoherence;
pub mod dynamics;
mod error;
pub mod polariton;
pub mod state;
pub mod verification;

pub use error::{Error, Result};
pub use num_complex::Complex64;

pub use decoherence::{GeometryCase, MotionParams, SpinWaveVector};
pub use dynamics::{ControlSchedule, FieldEnvelope, MediumParams, SolverSettings, SpinWaveProfile};
pub use polariton::{ChannelConfig, MemoryReport, PolaritonState};
pub use state::{BasisFamily, DensityMatrix, KrausChannel, PureState};
pub use verification::WitnessOperator;
