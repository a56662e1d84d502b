//! Discrete-time simulation of probabilistic, event-gated data acquisition.
//!
//! The pipeline mirrors the hardware chain:
//!
//! - [`signal`]: traces, CSV ingestion, synthetic Ricker events, upsampling
//!   onto the high-rate "analog" grid.
//! - [`afe`]: analog feature extraction (slope magnitude and amplitude).
//! - [`pbit`]: the probabilistic neuron, its LFSR and random-telegraph
//!   entropy sources.
//! - [`activation`]: p-neuron output ANDed with the sync clock, plus the
//!   amplitude override, producing the ADC clock enable.
//! - [`acquisition`]: gated sampling, linear-interpolation reconstruction,
//!   NMSE and savings metrics.
//! - [`experiment`]: survey runner, sweeps and report emission behind the CLI.

pub mod acquisition;
pub mod activation;
pub mod afe;
pub mod error;
pub mod experiment;
pub mod pbit;
pub mod signal;
pub mod stats;

pub use error::{Error, Result};
