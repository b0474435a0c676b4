use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::error::Result;

/// Controller phases, in execution order within a timestep.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Phase {
    Forward,
    Backward,
    Update,
    Meta,
}

impl Phase {
    pub const ALL: [Phase; 4] = [Phase::Forward, Phase::Backward, Phase::Update, Phase::Meta];

    pub fn name(self) -> &'static str {
        match self {
            Phase::Forward => "forward",
            Phase::Backward => "backward",
            Phase::Update => "update",
            Phase::Meta => "meta",
        }
    }

    fn index(self) -> usize {
        self as usize
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct PhaseCounters {
    pub cycles: u64,
    pub reads: u64,
    pub writes: u64,
    pub bank_conflicts: u64,
    /// Largest FIFO occupancy seen.
    pub fifo_peak: u64,
    pub saturations: u64,
}

impl PhaseCounters {
    pub fn merge(&mut self, o: &PhaseCounters) {
        self.cycles += o.cycles;
        self.reads += o.reads;
        self.writes += o.writes;
        self.bank_conflicts += o.bank_conflicts;
        self.fifo_peak = self.fifo_peak.max(o.fifo_peak);
        self.saturations += o.saturations;
    }
}

/// Per-phase cycle and memory-traffic counters.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct CycleLedger {
    pub forward: PhaseCounters,
    pub backward: PhaseCounters,
    pub update: PhaseCounters,
    pub meta: PhaseCounters,
}

impl CycleLedger {
    pub fn phase(&self, p: Phase) -> &PhaseCounters {
        [&self.forward, &self.backward, &self.update, &self.meta][p.index()]
    }

    pub fn phase_mut(&mut self, p: Phase) -> &mut PhaseCounters {
        match p {
            Phase::Forward => &mut self.forward,
            Phase::Backward => &mut self.backward,
            Phase::Update => &mut self.update,
            Phase::Meta => &mut self.meta,
        }
    }

    pub fn total(&self) -> PhaseCounters {
        let mut t = PhaseCounters::default();
        for p in Phase::ALL {
            t.merge(self.phase(p));
        }
        t
    }

    pub fn merge(&mut self, o: &CycleLedger) {
        for p in Phase::ALL {
            self.phase_mut(p).merge(o.phase(p));
        }
    }

    /// One row per phase followed by a `total` row.
    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut out = csv::Writer::from_writer(w);
        out.write_record(["phase", "cycles", "reads", "writes", "bank_conflicts", "fifo_peak", "saturations"])?;
        let rows = Phase::ALL
            .iter()
            .map(|&p| (p.name(), *self.phase(p)))
            .chain(std::iter::once(("total", self.total())));
        for (name, c) in rows {
            out.write_record([
                name.to_string(),
                c.cycles.to_string(),
                c.reads.to_string(),
                c.writes.to_string(),
                c.bank_conflicts.to_string(),
                c.fifo_peak.to_string(),
                c.saturations.to_string(),
            ])?;
        }
        out.flush().map_err(|e| crate::error::Error::io("<ledger csv>", e))?;
        Ok(())
    }
}
