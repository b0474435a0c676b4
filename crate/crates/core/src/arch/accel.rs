use super::aer::AerFifo;
use super::banks::{Layout, MemoryBanks, Region};
use super::ledger::{CycleLedger, Phase, PhaseCounters};
use super::pe::{Opcode, PeInstruction, PeMesh, ACCUM_NEGATE, META_CONSOLIDATE, META_DOWN, META_UP};
use super::ArchConfig;
use crate::error::{Error, Result};
use crate::fxp::{saturation_events, Scalar, TraceValue};
use crate::learning::{label_spikes, ErrorNeurons, Synapse};
use crate::network::{
    argmax_first, fire_layer, InitialParams, LayerStates, Learner, ModelConfig, NetParams, Parameters, SampleOutcome,
    StepSpikes,
};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum LayerId {
    Hidden,
    Output,
}

/// Word placement of every parameter array.
#[derive(Clone, Copy, Debug)]
struct MemoryMap {
    hidden: Region,
    output: Region,
    feedback: Region,
    /// Separate metaplasticity regions in split layout.
    hidden_m: Option<Region>,
    output_m: Option<Region>,
}

impl MemoryMap {
    fn new(cfg: &ModelConfig, layout: Layout) -> Self {
        let hidden = Region { base: 0, rows: cfg.n_input, cols: cfg.n_hidden };
        let output = Region { base: hidden.end(), rows: cfg.n_hidden, cols: cfg.n_output };
        let feedback = Region { base: output.end(), rows: cfg.n_output, cols: cfg.n_hidden };
        let (hidden_m, output_m) = match layout {
            Layout::CoLocated => (None, None),
            Layout::Split => {
                let hm = Region { base: feedback.end(), ..hidden };
                let om = Region { base: hm.end(), ..output };
                (Some(hm), Some(om))
            }
        };
        Self { hidden, output, feedback, hidden_m, output_m }
    }

    fn size(&self) -> usize {
        self.output_m.map_or(self.feedback.end(), |r| r.end())
    }

    fn layer(&self, id: LayerId) -> (Region, Option<Region>) {
        match id {
            LayerId::Hidden => (self.hidden, self.hidden_m),
            LayerId::Output => (self.output, self.output_m),
        }
    }
}

/// Counter snapshot taken when a phase begins.
struct PhaseMark {
    phase: Phase,
    reads: u64,
    writes: u64,
    conflicts: u64,
    saturations: u64,
    cycles: u64,
}

/// Cycle-approximate accelerator executing the learner on the PE mesh.
#[derive(Clone, Debug)]
pub struct Accelerator<S: Scalar> {
    pub cfg: ModelConfig,
    pub arch: ArchConfig,
    pub params: NetParams<S>,
    pub state: LayerStates<S>,
    pub errors: ErrorNeurons<S>,
    pub ledger: CycleLedger,
    mesh: PeMesh<S>,
    banks: MemoryBanks,
    map: MemoryMap,
    fifo: AerFifo,
    cycles: u64,
    words: Vec<u64>,
    m_words: Vec<u64>,
    addrs: Vec<usize>,
    m_addrs: Vec<usize>,
    events: Vec<u16>,
}

impl<S: Scalar> Accelerator<S> {
    pub fn new(cfg: &ModelConfig, arch: &ArchConfig, seed: u64) -> Result<Self> {
        Self::from_initial(cfg, arch, &InitialParams::draw(cfg, seed))
    }

    /// Phase one: the host writes the initial parameters into the banks.
    pub fn from_initial(cfg: &ModelConfig, arch: &ArchConfig, init: &InitialParams) -> Result<Self> {
        Self::from_parameters(cfg, arch, &init.convert())
    }

    pub fn from_parameters(cfg: &ModelConfig, arch: &ArchConfig, p: &Parameters<S>) -> Result<Self> {
        arch.validate()?;
        p.check(cfg)?;
        let params = NetParams::<S>::build(cfg)?;
        let map = MemoryMap::new(cfg, arch.layout);
        let mut acc = Self {
            cfg: cfg.clone(),
            arch: arch.clone(),
            state: LayerStates::new(cfg, &params),
            errors: ErrorNeurons::new(cfg.n_output, &cfg.error_lif, S::from_f64(cfg.error_drive))?,
            ledger: CycleLedger::default(),
            mesh: PeMesh::new(arch.rows, arch.cols, params.plasticity),
            banks: MemoryBanks::new(arch.banks(), map.size()),
            map,
            fifo: AerFifo::new(arch.fifo_capacity),
            params,
            cycles: 0,
            words: Vec::new(),
            m_words: Vec::new(),
            addrs: Vec::new(),
            m_addrs: Vec::new(),
            events: Vec::new(),
        };
        for (i, &s) in p.hidden.iter().enumerate() {
            acc.poke_synapse(LayerId::Hidden, i, s);
        }
        for (i, &s) in p.output.iter().enumerate() {
            acc.poke_synapse(LayerId::Output, i, s);
        }
        for (i, &r) in p.feedback.iter().enumerate() {
            acc.banks.poke(map.feedback.base + i, r.to_bits());
        }
        Ok(acc)
    }

    pub fn parameters(&self) -> Parameters<S> {
        Parameters {
            hidden: self.synapses(LayerId::Hidden),
            output: self.synapses(LayerId::Output),
            feedback: self.feedback(),
        }
    }

    fn poke_synapse(&mut self, id: LayerId, i: usize, s: Synapse<S>) {
        let (w, m) = self.map.layer(id);
        match m {
            None => self.banks.poke(w.base + i, s.pack()),
            Some(m) => {
                self.banks.poke(w.base + i, s.w.to_bits());
                self.banks.poke(m.base + i, s.m.to_bits());
            }
        }
    }

    /// Host read-back of a layer's synapses, row-major by presynaptic index.
    pub fn synapses(&self, id: LayerId) -> Vec<Synapse<S>> {
        let (w, m) = self.map.layer(id);
        (0..w.len())
            .map(|i| match m {
                None => Synapse::unpack(self.banks.peek(w.base + i)),
                Some(m) => Synapse {
                    w: S::from_bits(self.banks.peek(w.base + i)),
                    m: S::from_bits(self.banks.peek(m.base + i)),
                },
            })
            .collect()
    }

    pub fn feedback(&self) -> Vec<S> {
        let r = self.map.feedback;
        (0..r.len()).map(|i| S::from_bits(self.banks.peek(r.base + i))).collect()
    }

    /// Instructions issued so far, by opcode.
    pub fn issued(&self) -> [u64; 8] {
        self.mesh.issued
    }

    pub fn memory_words(&self) -> usize {
        self.banks.size()
    }

    pub fn reset_state(&mut self) {
        self.state.reset(&self.params);
        self.errors.reset();
    }

    pub fn take_ledger(&mut self) -> CycleLedger {
        std::mem::take(&mut self.ledger)
    }

    fn begin(&mut self, phase: Phase) -> PhaseMark {
        self.fifo.reset_peak();
        PhaseMark {
            phase,
            reads: self.banks.reads,
            writes: self.banks.writes,
            conflicts: self.banks.conflicts,
            saturations: saturation_events(),
            cycles: self.cycles,
        }
    }

    fn end(&mut self, mark: PhaseMark) {
        let delta = PhaseCounters {
            cycles: self.cycles - mark.cycles,
            reads: self.banks.reads - mark.reads,
            writes: self.banks.writes - mark.writes,
            bank_conflicts: self.banks.conflicts - mark.conflicts,
            fifo_peak: self.fifo.peak() as u64,
            saturations: saturation_events() - mark.saturations,
        };
        self.ledger.phase_mut(mark.phase).merge(&delta);
    }

    fn lif_cycles(&self, n: usize) -> u64 {
        n.div_ceil(self.arch.cols) as u64
    }

    /// Encode `spikes` into the FIFO and drain it into `self.events`.
    fn encode(&mut self, spikes: &[bool]) -> Result<()> {
        self.fifo.clear();
        self.cycles += self.fifo.encode(spikes)?;
        self.events.clear();
        while let Some(i) = self.fifo.pop() {
            self.events.push(i);
        }
        Ok(())
    }

    fn tile_cap(&self) -> usize {
        self.arch.rows * self.arch.cols
    }

    fn fill(&mut self, any: bool) {
        if any {
            self.cycles += self.arch.rows as u64;
        }
    }

    /// Sum the rows of `region` addressed by the queued events into one
    /// accumulator per column. Events at or past `neg_from` are subtracted
    /// using row `event - neg_from`. Rows hold raw weights when `raw_rows`.
    fn accumulate_rows(&mut self, region: Region, raw_rows: bool, neg_from: usize) -> Result<Vec<S>> {
        let fanout = region.cols;
        let cols = self.arch.cols;
        let cap = self.tile_cap();
        let mut sums = vec![S::zero(); fanout];
        let events = std::mem::take(&mut self.events);
        for tile in (0..fanout).step_by(cap) {
            let width = cap.min(fanout - tile);
            self.mesh.broadcast(width, PeInstruction::new(Opcode::ResetAcc, 0));
            for &e in &events {
                let e = e as usize;
                let (row, op) = if e >= neg_from { (e - neg_from, ACCUM_NEGATE) } else { (e, 0) };
                if row >= region.rows {
                    return Err(Error::Simulation(format!("event {e} addresses row {row} of {}", region.rows)));
                }
                for g in (0..width).step_by(cols) {
                    let n = cols.min(width - g);
                    self.addrs.clear();
                    self.addrs.extend((0..n).map(|c| region.addr(row, tile + g + c)));
                    self.cycles += self.banks.read_group(&self.addrs, &mut self.words)?;
                    for c in 0..n {
                        let word = if raw_rows { self.words[c] << S::BITS } else { self.words[c] };
                        self.mesh.exec(g + c, PeInstruction::new(Opcode::MoveWeight, word));
                        self.mesh.exec(g + c, PeInstruction::new(Opcode::Accum, op));
                    }
                }
            }
            self.fill(!events.is_empty());
            for pe in 0..width {
                let bits = self.mesh.exec(pe, PeInstruction::new(Opcode::MoveAccum, 0)).unwrap_or(0);
                sums[tile + pe] = S::from_bits(bits);
            }
        }
        self.events = events;
        Ok(sums)
    }

    fn forward_layer(&mut self, id: LayerId, pre: &[bool]) -> Result<Vec<bool>> {
        self.encode(pre)?;
        let (region, m) = self.map.layer(id);
        let sums = self.accumulate_rows(region, m.is_some(), usize::MAX)?;
        let tp = self.params.trace;
        let (states, p) = match id {
            LayerId::Hidden => (&mut self.state.hidden, &self.params.hidden),
            LayerId::Output => (&mut self.state.output, &self.params.output),
        };
        let spikes = fire_layer(states, &sums, p, &tp);
        self.cycles += self.lif_cycles(region.cols);
        Ok(spikes)
    }

    fn forward(&mut self, input: &[bool]) -> Result<(Vec<bool>, Vec<bool>)> {
        let tp = self.params.trace;
        for (tr, &s) in self.state.input_traces.iter_mut().zip(input) {
            *tr = tr.update(s, &tp);
        }
        let hidden = self.forward_layer(LayerId::Hidden, input)?;
        let output = self.forward_layer(LayerId::Output, &hidden)?;
        Ok((hidden, output))
    }

    fn backward(&mut self, output: &[bool], label: usize, t: usize) -> Result<(Vec<bool>, Vec<bool>)> {
        let n_out = self.cfg.n_output;
        let labels = label_spikes(label, t, n_out, self.params.label_period);
        let (fp, fn_) = self.errors.compute_error_spikes(output, &labels)?;
        self.cycles += self.lif_cycles(2 * n_out);
        self.state.u_output.update_output(&fp, &fn_);
        self.cycles += self.lif_cycles(n_out);

        let both: Vec<bool> = fp.iter().chain(&fn_).copied().collect();
        self.encode(&both)?;
        let drive = self.accumulate_rows(self.map.feedback, true, n_out)?;
        self.state.u_hidden.integrate(&drive);
        self.cycles += self.lif_cycles(self.cfg.n_hidden);
        Ok((fp, fn_))
    }

    /// Read-modify-write of every synapse row addressed by an active
    /// presynaptic neuron, with `U` and `I` of the postsynaptic neurons
    /// preloaded into the PEs.
    fn update_layer(&mut self, id: LayerId, pre: &[bool]) -> Result<()> {
        self.events.clear();
        self.events.extend(pre.iter().enumerate().filter(|(_, &s)| s).map(|(i, _)| i as u16));
        if self.events.is_empty() {
            return Ok(());
        }
        let (region, m_region) = self.map.layer(id);
        let (u, post) = match id {
            LayerId::Hidden => (&self.state.u_hidden.u, &self.state.hidden),
            LayerId::Output => (&self.state.u_output.u, &self.state.output),
        };
        let u: Vec<S> = u.clone();
        let currents: Vec<S> = post.iter().map(|n| n.current).collect();
        let fanout = region.cols;
        let cols = self.arch.cols;
        let cap = self.tile_cap();
        let events = std::mem::take(&mut self.events);
        for tile in (0..fanout).step_by(cap) {
            let width = cap.min(fanout - tile);
            for pe in 0..width {
                self.mesh.exec(pe, PeInstruction::new(Opcode::LoadTemp, u[tile + pe].to_bits()));
                self.mesh.exec(pe, PeInstruction::new(Opcode::LoadAcc, currents[tile + pe].to_bits()));
                self.mesh.exec(pe, PeInstruction::new(Opcode::MoveInput, 1));
            }
            self.cycles += width.div_ceil(cols) as u64;
            for &j in &events {
                let j = j as usize;
                for g in (0..width).step_by(cols) {
                    let n = cols.min(width - g);
                    self.addrs.clear();
                    self.addrs.extend((0..n).map(|c| region.addr(j, tile + g + c)));
                    self.cycles += self.banks.read_group(&self.addrs, &mut self.words)?;
                    if let Some(mr) = m_region {
                        self.m_addrs.clear();
                        self.m_addrs.extend((0..n).map(|c| mr.addr(j, tile + g + c)));
                        self.cycles += self.banks.read_group(&self.m_addrs, &mut self.m_words)?;
                    }
                    for c in 0..n {
                        let word = match m_region {
                            None => self.words[c],
                            Some(_) => (self.words[c] << S::BITS) | self.m_words[c],
                        };
                        self.mesh.exec(g + c, PeInstruction::new(Opcode::MoveWeight, word));
                        let out = self.mesh.exec(g + c, PeInstruction::new(Opcode::MetaUpdate, 0)).unwrap_or(word);
                        let s = Synapse::<S>::unpack(out);
                        match m_region {
                            None => self.words[c] = out,
                            Some(_) => {
                                self.words[c] = s.w.to_bits();
                                self.m_words[c] = s.m.to_bits();
                            }
                        }
                    }
                    self.cycles += self.banks.write_group(&self.addrs, &self.words[..n])?;
                    if m_region.is_some() {
                        self.cycles += self.banks.write_group(&self.m_addrs, &self.m_words[..n])?;
                    }
                }
            }
            self.fill(true);
        }
        self.events = events;
        Ok(())
    }

    /// One timestep; training when `label` is given.
    pub fn step(&mut self, input: &[bool], label: Option<usize>, t: usize) -> Result<StepSpikes> {
        if input.len() != self.cfg.n_input {
            return Err(Error::Simulation(format!(
                "input frame has {} bits, expected {}",
                input.len(),
                self.cfg.n_input
            )));
        }
        let mark = self.begin(Phase::Forward);
        let (hidden, output) = self.forward(input)?;
        self.end(mark);
        let mut spikes = StepSpikes { hidden, output, ..StepSpikes::default() };
        let Some(label) = label else {
            return Ok(spikes);
        };

        let mark = self.begin(Phase::Backward);
        let (fp, fn_) = self.backward(&spikes.output, label, t)?;
        self.end(mark);

        let mark = self.begin(Phase::Update);
        self.update_layer(LayerId::Output, &spikes.hidden)?;
        self.update_layer(LayerId::Hidden, input)?;
        self.end(mark);

        spikes.false_pos = fp;
        spikes.false_neg = fn_;
        Ok(spikes)
    }

    /// Metaplasticity sweep over every stored parameter, once per sample.
    pub fn consolidate(&mut self) -> Result<()> {
        if !self.params.metaplasticity {
            return Ok(());
        }
        let mark = self.begin(Phase::Meta);
        let p = self.params.plasticity;
        let hidden_traces: Vec<S::Trace> = self.state.hidden.iter().map(|n| n.trace).collect();
        let output_traces: Vec<S::Trace> = self.state.output.iter().map(|n| n.trace).collect();
        let input_up: Vec<bool> = self.state.input_traces.iter().map(|t| t.reaches(p.theta_pre)).collect();
        let hidden_up: Vec<bool> = hidden_traces.iter().map(|t| t.reaches(p.theta_post)).collect();
        let hidden_dn: Vec<bool> = hidden_traces.iter().map(|t| t.reaches(p.theta_pre)).collect();
        let output_up: Vec<bool> = output_traces.iter().map(|t| t.reaches(p.theta_post)).collect();
        self.sweep_layer(LayerId::Hidden, &input_up, &hidden_up)?;
        self.sweep_layer(LayerId::Output, &hidden_dn, &output_up)?;
        self.end(mark);
        Ok(())
    }

    fn sweep_layer(&mut self, id: LayerId, pre_cross: &[bool], post_cross: &[bool]) -> Result<()> {
        let (w_region, m_region) = self.map.layer(id);
        let region = m_region.unwrap_or(w_region);
        let cols = self.arch.cols;
        let fanout = region.cols;
        for start in (0..region.len()).step_by(cols) {
            let n = cols.min(region.len() - start);
            self.addrs.clear();
            self.addrs.extend((0..n).map(|c| region.base + start + c));
            self.cycles += self.banks.read_group(&self.addrs, &mut self.words)?;
            for c in 0..n {
                let i = start + c;
                let (j, k) = (i / fanout, i % fanout);
                let mut op = META_CONSOLIDATE;
                if post_cross[k] {
                    op |= META_UP;
                }
                if pre_cross[j] {
                    op |= META_DOWN;
                }
                let word = self.words[c];
                self.mesh.exec(c, PeInstruction::new(Opcode::MoveWeight, word));
                let out = self.mesh.exec(c, PeInstruction::new(Opcode::MetaUpdate, op)).unwrap_or(word);
                self.words[c] = match m_region {
                    None => out,
                    Some(_) => Synapse::<S>::unpack(out).m.to_bits(),
                };
            }
            self.cycles += self.banks.write_group(&self.addrs, &self.words[..n])?;
        }
        self.fill(true);
        Ok(())
    }
}

impl<S: Scalar> Learner for Accelerator<S> {
    fn run_sample(&mut self, frames: &[Vec<bool>], label: usize, learn: bool) -> Result<SampleOutcome> {
        if label >= self.cfg.n_output {
            return Err(Error::Simulation(format!("label {label} has no output neuron")));
        }
        self.reset_state();
        let mut counts = vec![0u32; self.cfg.n_output];
        for (t, frame) in frames.iter().enumerate() {
            let spikes = self.step(frame, learn.then_some(label), t)?;
            for (c, &s) in counts.iter_mut().zip(&spikes.output) {
                *c += s as u32;
            }
        }
        if learn {
            self.consolidate()?;
        }
        Ok(SampleOutcome {
            prediction: argmax_first(&counts),
            output_counts: counts,
        })
    }
}
