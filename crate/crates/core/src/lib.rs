//! Models of a heralded single-photon source multiplexed in time with one
//! SPDC crystal, one fibre loop, one switch and one time-resolved detector.
//!
//! - [`model`]: source, detector and loss models and their probability kernels.
//! - [`analytic`]: closed-form heralding probabilities and fidelities.
//! - [`simulate`]: event-level Monte Carlo of the switching protocol.
//! - [`multiplex`]: parallel-source distributions and pump optimisation.

pub mod analytic;
pub mod error;
pub mod model;
pub mod multiplex;
pub mod simulate;

pub use error::{Error, Result};
pub use model::{
    DetectorKind, DetectorModel, LossModel, Outcome, OutcomeDistribution, ProtocolConfig,
    PumpSchedule, SourceModel,
};
