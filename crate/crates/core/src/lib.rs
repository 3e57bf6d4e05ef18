//! Monte Carlo link-level simulator for RIS-assisted, NOMA-enhanced bistatic
//! backscatter networks.
//!
//! A carrier emitter (CE) illuminates K passive backscatter devices (BDs);
//! pairs of BDs share a slot via power-domain NOMA and are decoded by a
//! backscatter reader (BR) with successive interference cancellation. An
//! N-element reconfigurable intelligent surface (RIS) reflects both the
//! excitation and the backscattered signals.
//!
//! Modules, bottom-up:
//! - [`scenario`]: geometry, power budget, fading and protocol parameters;
//! - [`channel`]: fading draws and composite channels;
//! - [`ris`]: RIS phase designs and quantization;
//! - [`noma`]: SINRs, SIC decoding and throughput of a cluster;
//! - [`protocol`]: training, pairing, frame layout and energy harvesting;
//! - [`montecarlo`]: seeded trials, aggregation and sweeps;
//! - [`analysis`]: closed-form references.

pub mod analysis;
pub mod channel;
pub mod montecarlo;
pub mod noma;
pub mod protocol;
pub mod ris;
pub mod scenario;

pub use channel::{ChannelError, ChannelRealization};
pub use montecarlo::{AggregateReport, Estimate, SweepAxis, TrialMetrics};
pub use noma::{ClusterAssignment, SinrPair};
pub use protocol::{EnergyLedger, FramePlan, ProtocolError};
pub use ris::PhaseConfig;
pub use scenario::{Position2D, Scenario, ValidationError};

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error(transparent)]
    Validation(#[from] ValidationError),
    #[error(transparent)]
    Channel(#[from] ChannelError),
    #[error(transparent)]
    Protocol(#[from] ProtocolError),
    #[error("at least one trial is required")]
    NoTrials,
    #[error("sweep needs at least one value")]
    EmptySweep,
}
