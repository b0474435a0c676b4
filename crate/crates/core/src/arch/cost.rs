//! Closed-form cycle counts of the controller schedule.
//!
//! These formulas restate what the accelerator model charges while it runs;
//! they exist so the simulated ledger can be checked against an independent
//! count and so the dataflow comparison can price AER without simulating.

use super::banks::Layout;
use super::ArchConfig;
use crate::network::ModelConfig;

fn div_ceil(a: usize, b: usize) -> u64 {
    a.div_ceil(b) as u64
}

/// Output-neuron tiles needed to cover `fanout` with one neuron per PE.
pub fn tiles(fanout: usize, g: &ArchConfig) -> u64 {
    div_ceil(fanout, g.rows * g.cols)
}

/// Bank-parallel groups needed to stream one row of `fanout` words, tile by
/// tile.
pub fn row_groups(fanout: usize, g: &ArchConfig) -> u64 {
    let cap = g.rows * g.cols;
    let full = (fanout / cap) as u64 * div_ceil(cap, g.cols);
    full + div_ceil(fanout % cap, g.cols)
}

/// Mesh fill charged once per tile whenever any row is streamed.
fn fill(active: usize, fanout: usize, g: &ArchConfig) -> u64 {
    if active == 0 {
        0
    } else {
        tiles(fanout, g) * g.rows as u64
    }
}

/// Encoder sweep, row fetch and accumulate, mesh fill, LIF pipeline.
pub fn layer_forward(n_in: usize, active: usize, n_out: usize, g: &ArchConfig) -> u64 {
    n_in as u64 + active as u64 * row_groups(n_out, g) + fill(active, n_out, g) + div_ceil(n_out, g.cols)
}

/// Error neurons, error encoding, output dendrites, feedback fetch, hidden
/// dendrites.
pub fn backward(n_out: usize, n_hidden: usize, error_events: usize, g: &ArchConfig) -> u64 {
    div_ceil(2 * n_out, g.cols)
        + 2 * n_out as u64
        + div_ceil(n_out, g.cols)
        + error_events as u64 * row_groups(n_hidden, g)
        + fill(error_events, n_hidden, g)
        + div_ceil(n_hidden, g.cols)
}

fn accesses_per_word(layout: Layout) -> u64 {
    match layout {
        Layout::CoLocated => 1,
        Layout::Split => 2,
    }
}

/// Dendrite preload plus read-modify-write of every active row.
pub fn layer_update(active: usize, fanout: usize, g: &ArchConfig) -> u64 {
    if active == 0 {
        return 0;
    }
    let rmw = 2 * accesses_per_word(g.layout) * row_groups(fanout, g);
    row_groups(fanout, g) + active as u64 * rmw + fill(active, fanout, g)
}

/// Read-modify-write sweep over every metaplasticity parameter of a layer.
pub fn layer_meta(words: usize, g: &ArchConfig) -> u64 {
    2 * div_ceil(words, g.cols) + g.rows as u64
}

/// Spike counts of one timestep that determine its cost.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct StepActivity {
    pub input: usize,
    pub hidden: usize,
    /// False-positive plus false-negative spikes.
    pub errors: usize,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct SampleCycles {
    pub forward: u64,
    pub backward: u64,
    pub update: u64,
    pub meta: u64,
}

impl SampleCycles {
    pub fn total(&self) -> u64 {
        self.forward + self.backward + self.update + self.meta
    }
}

/// Cycles for one sample given its per-step activity.
pub fn sample_cycles(m: &ModelConfig, g: &ArchConfig, steps: &[StepActivity], learn: bool) -> SampleCycles {
    let mut c = SampleCycles::default();
    for s in steps {
        c.forward += layer_forward(m.n_input, s.input, m.n_hidden, g)
            + layer_forward(m.n_hidden, s.hidden, m.n_output, g);
        if learn {
            c.backward += backward(m.n_output, m.n_hidden, s.errors, g);
            c.update += layer_update(s.hidden, m.n_output, g) + layer_update(s.input, m.n_hidden, g);
        }
    }
    if learn && m.metaplasticity {
        c.meta = layer_meta(m.n_input * m.n_hidden, g) + layer_meta(m.n_hidden * m.n_output, g);
    }
    c
}
