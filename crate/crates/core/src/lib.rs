//! Functional simulator and cycle-approximate timing model of a spiking
//! continual-learning accelerator.
//!
//! * [`fxp`]: saturating fixed-point scalars and dyadic scaling
//! * [`neuron`]: LIF dynamics and activity traces
//! * [`learning`]: error spikes, dendritic compartments, metaplastic updates
//! * [`network`]: the functional reference model
//! * [`arch`]: PE mesh, address-event encoder, interleaved banks, cycle ledger
//! * [`dataflow`]: analytical systolic baselines and the comparison harness
//! * [`data`]: MNIST ingestion, spike encoding and the Split-MNIST stream
//! * [`experiment`]: run configuration, reports and the CLI commands

pub mod arch;
pub mod config;
pub mod data;
pub mod dataflow;
pub mod error;
pub mod experiment;
pub mod fxp;
pub mod learning;
pub mod network;
pub mod neuron;
pub mod report;

pub use error::{Error, Result};
