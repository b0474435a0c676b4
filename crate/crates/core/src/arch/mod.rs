//! Structural and timing model of the accelerator.
//!
//! An 8x8 mesh of processing elements computes weighted sums for one tile of
//! 64 output neurons at a time; LIF units attached to the last row update
//! the neurons. Active neurons are address-event encoded into a FIFO, and
//! only the synapse rows they address are fetched from eight low-order
//! interleaved banks, each bank feeding one PE column. Each synapse word
//! holds the weight and its metaplasticity parameter.
//!
//! Every timestep runs a forward phase and, while training, a backward and
//! an update phase; a metaplasticity sweep closes each training sample. The
//! model computes through the same scalar operations as
//! [`network`](crate::network) and must produce identical state.

mod accel;
pub mod aer;
pub mod banks;
pub mod cost;
pub mod ledger;
pub mod pe;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use accel::{Accelerator, LayerId};
pub use aer::{encode_aer, AerFifo};
pub use banks::{Layout, MemoryBanks, Region};
pub use ledger::{CycleLedger, Phase, PhaseCounters};
pub use pe::{Opcode, PeInstruction, PeMesh, PeState};

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ArchConfig {
    pub rows: usize,
    /// Mesh columns; each column owns one memory bank.
    pub cols: usize,
    pub fifo_capacity: usize,
    pub layout: Layout,
}

impl Default for ArchConfig {
    fn default() -> Self {
        Self {
            rows: pe::MESH_ROWS,
            cols: pe::MESH_COLS,
            fifo_capacity: aer::DEFAULT_FIFO_CAPACITY,
            layout: Layout::CoLocated,
        }
    }
}

impl ArchConfig {
    pub fn validate(&self) -> Result<()> {
        if self.rows == 0 || self.cols == 0 {
            return Err(Error::Config(format!("mesh {}x{} has no PEs", self.rows, self.cols)));
        }
        if self.fifo_capacity == 0 {
            return Err(Error::Config("fifo_capacity must be positive".into()));
        }
        Ok(())
    }

    pub fn banks(&self) -> usize {
        self.cols
    }
}
