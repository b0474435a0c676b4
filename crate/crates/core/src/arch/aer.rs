use std::collections::VecDeque;

use crate::error::{Error, Result};

pub const DEFAULT_FIFO_CAPACITY: usize = 256;

/// Queue of active neuron indices produced by the priority encoder.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct AerFifo {
    queue: VecDeque<u16>,
    capacity: usize,
    peak: usize,
}

impl AerFifo {
    pub fn new(capacity: usize) -> Self {
        Self {
            queue: VecDeque::with_capacity(capacity),
            capacity,
            peak: 0,
        }
    }

    pub fn capacity(&self) -> usize {
        self.capacity
    }

    pub fn len(&self) -> usize {
        self.queue.len()
    }

    pub fn is_empty(&self) -> bool {
        self.queue.is_empty()
    }

    /// Highest occupancy since construction or the last [`reset_peak`](Self::reset_peak).
    pub fn peak(&self) -> usize {
        self.peak
    }

    pub fn reset_peak(&mut self) {
        self.peak = self.queue.len();
    }

    pub fn push(&mut self, index: u16) -> Result<()> {
        if self.queue.len() == self.capacity {
            return Err(Error::Simulation(format!(
                "AER FIFO overflow: capacity {} exceeded while pushing index {index}; raise fifo_capacity",
                self.capacity
            )));
        }
        self.queue.push_back(index);
        self.peak = self.peak.max(self.queue.len());
        Ok(())
    }

    pub fn pop(&mut self) -> Option<u16> {
        self.queue.pop_front()
    }

    pub fn clear(&mut self) {
        self.queue.clear();
    }

    pub fn iter(&self) -> impl Iterator<Item = u16> + '_ {
        self.queue.iter().copied()
    }

    /// Scan `spikes` and enqueue the index of every set bit in ascending
    /// order. Returns the encoder cost: one cycle per bit scanned.
    pub fn encode(&mut self, spikes: &[bool]) -> Result<u64> {
        if spikes.len() > 1 << 16 {
            return Err(Error::Simulation(format!(
                "spike vector of {} bits exceeds the 16-bit address space",
                spikes.len()
            )));
        }
        for (i, _) in spikes.iter().enumerate().filter(|(_, &s)| s) {
            self.push(i as u16)?;
        }
        Ok(spikes.len() as u64)
    }
}

/// Encode a spike vector into a fresh FIFO of the given capacity.
pub fn encode_aer(spikes: &[bool], capacity: usize) -> Result<(AerFifo, u64)> {
    let mut fifo = AerFifo::new(capacity);
    let cycles = fifo.encode(spikes)?;
    Ok((fifo, cycles))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn contents(f: &AerFifo) -> Vec<u16> {
        f.iter().collect()
    }

    #[test]
    fn examples() {
        let (f, c) = encode_aer(&[false, true, false, false, true], 256).unwrap();
        assert_eq!(contents(&f), vec![1, 4]);
        assert_eq!(c, 5);
        let (f, _) = encode_aer(&[false; 64], 256).unwrap();
        assert!(f.is_empty());
        let (f, c) = encode_aer(&[true; 256], 256).unwrap();
        assert_eq!(contents(&f), (0..256).collect::<Vec<u16>>());
        assert_eq!((c, f.peak()), (256, 256));
    }

    #[test]
    fn overflow_is_a_simulation_error() {
        let err = encode_aer(&[true; 9], 8).unwrap_err();
        assert!(matches!(err, Error::Simulation(ref m) if m.contains("capacity 8")));
        assert!(encode_aer(&vec![false; (1 << 16) + 1], 8).is_err());
    }

    #[test]
    fn fifo_order() {
        let mut f = AerFifo::new(4);
        f.push(3).unwrap();
        f.push(1).unwrap();
        assert_eq!(f.pop(), Some(3));
        assert_eq!(f.pop(), Some(1));
        assert_eq!(f.pop(), None);
        assert_eq!(f.peak(), 2);
    }
}
