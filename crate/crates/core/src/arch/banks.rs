use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const DEFAULT_BANKS: usize = 8;

/// Placement of the weight and metaplasticity parameter of a synapse.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Layout {
    /// `{w | m}` share one word: one access yields both.
    #[default]
    CoLocated,
    /// `w` and `m` live in separate regions and need separate accesses.
    Split,
}

impl Layout {
    pub fn name(self) -> &'static str {
        match self {
            Layout::CoLocated => "co-located",
            Layout::Split => "split",
        }
    }
}

impl std::str::FromStr for Layout {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "co-located" | "colocated" => Ok(Layout::CoLocated),
            "split" => Ok(Layout::Split),
            _ => Err(Error::Config(format!("unknown layout '{s}' (expected co-located or split)"))),
        }
    }
}

/// Low-order interleaved memory: address `a` lives in bank `a mod n` at row
/// `a div n`. Each bank serves one access per cycle.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct MemoryBanks {
    n_banks: usize,
    words: Vec<u64>,
    pub reads: u64,
    pub writes: u64,
    pub conflicts: u64,
    per_bank: Vec<u64>,
}

impl MemoryBanks {
    pub fn new(n_banks: usize, size: usize) -> Self {
        assert!(n_banks > 0, "at least one bank");
        Self {
            n_banks,
            words: vec![0; size],
            reads: 0,
            writes: 0,
            conflicts: 0,
            per_bank: vec![0; n_banks],
        }
    }

    pub fn n_banks(&self) -> usize {
        self.n_banks
    }

    pub fn size(&self) -> usize {
        self.words.len()
    }

    pub fn bank_of(&self, addr: usize) -> usize {
        addr % self.n_banks
    }

    pub fn row_of(&self, addr: usize) -> usize {
        addr / self.n_banks
    }

    fn check(&self, addr: usize) -> Result<()> {
        if addr >= self.words.len() {
            return Err(Error::Simulation(format!(
                "memory address {addr} out of range (size {})",
                self.words.len()
            )));
        }
        Ok(())
    }

    /// Cycles to serve `addrs` issued together: the busiest bank decides.
    fn schedule(&mut self, addrs: &[usize]) -> Result<u64> {
        if addrs.is_empty() {
            return Ok(0);
        }
        self.per_bank.fill(0);
        for &a in addrs {
            self.check(a)?;
            self.per_bank[a % self.n_banks] += 1;
        }
        let cycles = *self.per_bank.iter().max().unwrap_or(&0);
        self.conflicts += cycles - 1;
        Ok(cycles)
    }

    pub fn read_group(&mut self, addrs: &[usize], out: &mut Vec<u64>) -> Result<u64> {
        let cycles = self.schedule(addrs)?;
        out.clear();
        out.extend(addrs.iter().map(|&a| self.words[a]));
        self.reads += addrs.len() as u64;
        Ok(cycles)
    }

    pub fn write_group(&mut self, addrs: &[usize], values: &[u64]) -> Result<u64> {
        debug_assert_eq!(addrs.len(), values.len());
        let cycles = self.schedule(addrs)?;
        for (&a, &v) in addrs.iter().zip(values) {
            self.words[a] = v;
        }
        self.writes += addrs.len() as u64;
        Ok(cycles)
    }

    /// Host-side access that bypasses the counters (initialization, inspection).
    pub fn peek(&self, addr: usize) -> u64 {
        self.words[addr]
    }

    pub fn poke(&mut self, addr: usize, value: u64) {
        self.words[addr] = value;
    }
}

/// A dense row-major matrix stored at `base`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Region {
    pub base: usize,
    pub rows: usize,
    pub cols: usize,
}

impl Region {
    pub fn len(&self) -> usize {
        self.rows * self.cols
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn addr(&self, row: usize, col: usize) -> usize {
        self.base + row * self.cols + col
    }

    pub fn end(&self) -> usize {
        self.base + self.len()
    }
}
