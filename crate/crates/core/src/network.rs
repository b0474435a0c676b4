//! Functional reference of the two-layer spiking learner.
//!
//! This is the ground truth the accelerator model must reproduce bit for
//! bit. Weights are dense row-major matrices indexed by presynaptic neuron;
//! every weighted sum is accumulated in ascending presynaptic order.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fxp::{DyadicExp, Scalar, TraceParams, TraceValue};
use crate::learning::{
    label_spikes, metaplasticity_update, weight_update, DendriticState, ErrorPathway,
    PlasticityConfig, PlasticityParams, Synapse,
};
use crate::neuron::{LifConfig, LifParams, NeuronState};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ModelConfig {
    pub n_input: usize,
    pub n_hidden: usize,
    pub n_output: usize,
    pub hidden_lif: LifConfig,
    pub output_lif: LifConfig,
    pub error_lif: LifConfig,
    pub trace: TraceParams,
    pub plasticity: PlasticityConfig,
    /// Leak and injection exponent of the dendritic compartment.
    pub dendrite_exp: i8,
    /// Current injected into an error neuron while its mismatch persists.
    pub error_drive: f64,
    /// The target label neuron spikes once every `label_period` steps.
    pub label_period: usize,
    pub metaplasticity: bool,
    /// Initial hidden weights are uniform in `[-hidden_init, hidden_init]`.
    pub hidden_init: f64,
    pub output_init: f64,
    pub feedback_init: f64,
}

impl Default for ModelConfig {
    fn default() -> Self {
        Self {
            n_input: 256,
            n_hidden: 200,
            n_output: 2,
            hidden_lif: LifConfig::default(),
            output_lif: LifConfig::default(),
            error_lif: LifConfig {
                current_exp: 0,
                leak_exp: -1,
                input_exp: -1,
                v_th: 0.5,
                refractory_steps: 0,
                ..LifConfig::default()
            },
            trace: TraceParams::default(),
            plasticity: PlasticityConfig::default(),
            dendrite_exp: -2,
            error_drive: 1.0,
            label_period: 4,
            metaplasticity: true,
            hidden_init: 0.5,
            output_init: 0.25,
            feedback_init: 0.25,
        }
    }
}

impl ModelConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n_input == 0 || self.n_hidden == 0 || self.n_output == 0 {
            return Err(Error::Config("layer sizes must be positive".into()));
        }
        if self.n_input > u16::MAX as usize + 1 || self.n_hidden > u16::MAX as usize + 1 {
            return Err(Error::Config("layer sizes must fit 16-bit event addresses".into()));
        }
        if self.label_period == 0 {
            return Err(Error::Config("label_period must be at least 1".into()));
        }
        self.trace.validate()?;
        DyadicExp::new(self.dendrite_exp)?;
        self.hidden_lif.build::<f32>()?;
        self.output_lif.build::<f32>()?;
        self.error_lif.build::<f32>()?;
        self.plasticity.build::<f32>()?;
        for (name, v) in [
            ("hidden_init", self.hidden_init),
            ("output_init", self.output_init),
            ("feedback_init", self.feedback_init),
        ] {
            if !(v.is_finite() && v >= 0.0) {
                return Err(Error::Config(format!("{name} = {v} must be finite and >= 0")));
            }
        }
        Ok(())
    }

    pub fn synapse_count(&self) -> usize {
        self.n_input * self.n_hidden + self.n_hidden * self.n_output
    }
}

/// Real-valued initial parameters, drawn once from the run seed and then
/// converted to whichever precision is being simulated.
#[derive(Clone, Debug, PartialEq)]
pub struct InitialParams {
    pub hidden: Vec<f64>,
    pub output: Vec<f64>,
    pub feedback: Vec<f64>,
}

impl InitialParams {
    pub fn draw(cfg: &ModelConfig, seed: u64) -> Self {
        let uniform = |stream: u64, n: usize, scale: f64| -> Vec<f64> {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(stream);
            (0..n)
                .map(|_| if scale > 0.0 { rng.random_range(-scale..=scale) } else { 0.0 })
                .collect()
        };
        Self {
            hidden: uniform(1, cfg.n_input * cfg.n_hidden, cfg.hidden_init),
            output: uniform(2, cfg.n_hidden * cfg.n_output, cfg.output_init),
            feedback: uniform(3, cfg.n_output * cfg.n_hidden, cfg.feedback_init),
        }
    }
}

impl InitialParams {
    pub fn convert<S: Scalar>(&self) -> Parameters<S> {
        let syn = |v: &[f64]| v.iter().map(|&w| Synapse::new(S::from_f64(w))).collect();
        Parameters {
            hidden: syn(&self.hidden),
            output: syn(&self.output),
            feedback: self.feedback.iter().map(|&r| S::from_f64(r)).collect(),
        }
    }
}

/// Model constants converted to the working precision.
#[derive(Clone, Debug)]
pub struct NetParams<S: Scalar> {
    pub hidden: LifParams<S>,
    pub output: LifParams<S>,
    pub trace: TraceParams,
    pub plasticity: PlasticityParams<S>,
    pub dendrite_exp: DyadicExp,
    pub label_period: usize,
    pub metaplasticity: bool,
}

impl<S: Scalar> NetParams<S> {
    pub fn build(cfg: &ModelConfig) -> Result<Self> {
        cfg.validate()?;
        Ok(Self {
            hidden: cfg.hidden_lif.build()?,
            output: cfg.output_lif.build()?,
            trace: cfg.trace,
            plasticity: cfg.plasticity.build()?,
            dendrite_exp: DyadicExp::new(cfg.dendrite_exp)?,
            label_period: cfg.label_period,
            metaplasticity: cfg.metaplasticity,
        })
    }
}

/// Per-sample dynamic state of every layer.
#[derive(Clone, Debug, PartialEq)]
pub struct LayerStates<S: Scalar> {
    pub input_traces: Vec<S::Trace>,
    pub hidden: Vec<NeuronState<S>>,
    pub output: Vec<NeuronState<S>>,
    pub u_hidden: DendriticState<S>,
    pub u_output: DendriticState<S>,
}

impl<S: Scalar> LayerStates<S> {
    pub fn new(cfg: &ModelConfig, p: &NetParams<S>) -> Self {
        Self {
            input_traces: vec![S::Trace::default(); cfg.n_input],
            hidden: vec![NeuronState::at_rest(&p.hidden); cfg.n_hidden],
            output: vec![NeuronState::at_rest(&p.output); cfg.n_output],
            u_hidden: DendriticState::new(cfg.n_hidden, p.dendrite_exp),
            u_output: DendriticState::new(cfg.n_output, p.dendrite_exp),
        }
    }

    pub fn reset(&mut self, p: &NetParams<S>) {
        self.input_traces.fill(S::Trace::default());
        self.hidden.fill(NeuronState::at_rest(&p.hidden));
        self.output.fill(NeuronState::at_rest(&p.output));
        self.u_hidden.reset();
        self.u_output.reset();
    }
}

/// Spikes produced by one timestep.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct StepSpikes {
    pub hidden: Vec<bool>,
    pub output: Vec<bool>,
    pub false_pos: Vec<bool>,
    pub false_neg: Vec<bool>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SampleOutcome {
    pub output_counts: Vec<u32>,
    pub prediction: usize,
}

/// Index of the largest count; ties go to the lowest index.
pub fn argmax_first(counts: &[u32]) -> usize {
    let mut best = 0;
    for (i, &c) in counts.iter().enumerate() {
        if c > counts[best] {
            best = i;
        }
    }
    best
}

/// Learned and frozen parameters, in storage order.
#[derive(Clone, Debug, PartialEq)]
pub struct Parameters<S> {
    /// `n_input x n_hidden`.
    pub hidden: Vec<Synapse<S>>,
    /// `n_hidden x n_output`.
    pub output: Vec<Synapse<S>>,
    /// `n_output x n_hidden`.
    pub feedback: Vec<S>,
}

impl<S: Scalar> Parameters<S> {
    pub fn check(&self, cfg: &ModelConfig) -> Result<()> {
        let expect = [
            ("hidden", self.hidden.len(), cfg.n_input * cfg.n_hidden),
            ("output", self.output.len(), cfg.n_hidden * cfg.n_output),
            ("feedback", self.feedback.len(), cfg.n_output * cfg.n_hidden),
        ];
        for (name, got, want) in expect {
            if got != want {
                return Err(Error::Config(format!("{name} parameters have {got} entries, expected {want}")));
            }
        }
        Ok(())
    }
}

/// Anything that can consume one encoded sample.
pub trait Learner {
    fn run_sample(&mut self, frames: &[Vec<bool>], label: usize, learn: bool) -> Result<SampleOutcome>;
}

#[derive(Clone, Debug)]
pub struct Network<S: Scalar> {
    pub cfg: ModelConfig,
    pub params: NetParams<S>,
    /// `n_input x n_hidden`.
    pub hidden_syn: Vec<Synapse<S>>,
    /// `n_hidden x n_output`.
    pub output_syn: Vec<Synapse<S>>,
    pub pathway: ErrorPathway<S>,
    pub state: LayerStates<S>,
}

impl<S: Scalar> Network<S> {
    pub fn new(cfg: &ModelConfig, seed: u64) -> Result<Self> {
        let init = InitialParams::draw(cfg, seed);
        Self::from_initial(cfg, &init)
    }

    pub fn from_initial(cfg: &ModelConfig, init: &InitialParams) -> Result<Self> {
        Self::from_parameters(cfg, init.convert())
    }

    pub fn from_parameters(cfg: &ModelConfig, p: Parameters<S>) -> Result<Self> {
        p.check(cfg)?;
        let params = NetParams::<S>::build(cfg)?;
        let drive = S::from_f64(cfg.error_drive);
        let pathway = ErrorPathway::new(p.feedback, cfg.n_output, cfg.n_hidden, &cfg.error_lif, drive)?;
        Ok(Self {
            cfg: cfg.clone(),
            state: LayerStates::new(cfg, &params),
            params,
            hidden_syn: p.hidden,
            output_syn: p.output,
            pathway,
        })
    }

    pub fn parameters(&self) -> Parameters<S> {
        Parameters {
            hidden: self.hidden_syn.clone(),
            output: self.output_syn.clone(),
            feedback: self.pathway.feedback().to_vec(),
        }
    }

    pub fn reset_state(&mut self) {
        self.state.reset(&self.params);
        self.pathway.reset();
    }

    /// One timestep: forward through both layers and, when a label is given,
    /// error generation, dendrite integration and weight updates.
    pub fn step(&mut self, input: &[bool], label: Option<usize>, t: usize) -> Result<StepSpikes> {
        let n_hidden = self.cfg.n_hidden;
        let n_out = self.cfg.n_output;
        if input.len() != self.cfg.n_input {
            return Err(Error::Simulation(format!(
                "input frame has {} bits, expected {}",
                input.len(),
                self.cfg.n_input
            )));
        }
        let tp = self.params.trace;
        for (tr, &s) in self.state.input_traces.iter_mut().zip(input) {
            *tr = tr.update(s, &tp);
        }

        let hidden_sum = weighted_sums(&self.hidden_syn, input, n_hidden);
        let hidden = fire_layer(&mut self.state.hidden, &hidden_sum, &self.params.hidden, &tp);
        let output_sum = weighted_sums(&self.output_syn, &hidden, n_out);
        let output = fire_layer(&mut self.state.output, &output_sum, &self.params.output, &tp);

        let mut spikes = StepSpikes {
            hidden,
            output,
            ..StepSpikes::default()
        };
        let Some(label) = label else {
            return Ok(spikes);
        };

        let labels = label_spikes(label, t, n_out, self.params.label_period);
        let (fp, fn_) = self.pathway.compute_error_spikes(&spikes.output, &labels)?;
        self.state.u_output.update_output(&fp, &fn_);
        self.state.u_hidden.update_hidden(&fp, &fn_, &self.pathway);

        let p = &self.params.plasticity;
        update_layer(&mut self.output_syn, &spikes.hidden, &self.state.u_output.u, &self.state.output, p);
        update_layer(&mut self.hidden_syn, input, &self.state.u_hidden.u, &self.state.hidden, p);

        spikes.false_pos = fp;
        spikes.false_neg = fn_;
        Ok(spikes)
    }

    /// End-of-sample metaplasticity pass over every synapse.
    pub fn consolidate(&mut self) {
        if !self.params.metaplasticity {
            return;
        }
        let p = &self.params.plasticity;
        let hidden_traces: Vec<S::Trace> = self.state.hidden.iter().map(|n| n.trace).collect();
        let output_traces: Vec<S::Trace> = self.state.output.iter().map(|n| n.trace).collect();
        consolidate_layer(&mut self.hidden_syn, &self.state.input_traces, &hidden_traces, p);
        consolidate_layer(&mut self.output_syn, &hidden_traces, &output_traces, p);
    }
}

impl<S: Scalar> Learner for Network<S> {
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
            self.consolidate();
        }
        Ok(SampleOutcome {
            prediction: argmax_first(&counts),
            output_counts: counts,
        })
    }
}

pub(crate) fn weighted_sums<S: Scalar>(syn: &[Synapse<S>], pre: &[bool], fanout: usize) -> Vec<S> {
    let mut acc = vec![S::zero(); fanout];
    for (j, _) in pre.iter().enumerate().filter(|(_, &s)| s) {
        let row = &syn[j * fanout..(j + 1) * fanout];
        for (a, s) in acc.iter_mut().zip(row) {
            *a = a.add(s.w);
        }
    }
    acc
}

pub(crate) fn fire_layer<S: Scalar>(
    states: &mut [NeuronState<S>],
    sums: &[S],
    p: &LifParams<S>,
    tp: &TraceParams,
) -> Vec<bool> {
    states
        .iter_mut()
        .zip(sums)
        .map(|(st, &ws)| {
            let (next, spike) = st.step(ws, p, tp);
            *st = next;
            spike
        })
        .collect()
}

fn update_layer<S: Scalar>(
    syn: &mut [Synapse<S>],
    pre: &[bool],
    u_post: &[S],
    post: &[NeuronState<S>],
    p: &PlasticityParams<S>,
) {
    let fanout = u_post.len();
    for (j, _) in pre.iter().enumerate().filter(|(_, &s)| s) {
        let row = &mut syn[j * fanout..(j + 1) * fanout];
        for ((s, &u), n) in row.iter_mut().zip(u_post).zip(post) {
            *s = weight_update(*s, true, u, n.current, p);
        }
    }
}

fn consolidate_layer<S: Scalar>(
    syn: &mut [Synapse<S>],
    pre_traces: &[S::Trace],
    post_traces: &[S::Trace],
    p: &PlasticityParams<S>,
) {
    let fanout = post_traces.len();
    for (j, &pre) in pre_traces.iter().enumerate() {
        let row = &mut syn[j * fanout..(j + 1) * fanout];
        for (s, &post) in row.iter_mut().zip(post_traces) {
            *s = metaplasticity_update(*s, pre, post, p);
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fxp::Q7_8;

    fn small_cfg() -> ModelConfig {
        ModelConfig {
            n_input: 16,
            n_hidden: 12,
            n_output: 2,
            ..ModelConfig::default()
        }
    }

    fn frames(seed: u64, t: usize, n: usize, p: f64) -> Vec<Vec<bool>> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        (0..t).map(|_| (0..n).map(|_| rng.random_bool(p)).collect()).collect()
    }

    #[test]
    fn inference_leaves_parameters_untouched() {
        let cfg = small_cfg();
        let mut net = Network::<Q7_8>::new(&cfg, 7).unwrap();
        let before = (net.hidden_syn.clone(), net.output_syn.clone());
        let out = net.run_sample(&frames(1, 30, 16, 0.4), 1, false).unwrap();
        assert!(out.prediction < 2);
        assert_eq!((net.hidden_syn, net.output_syn), before);
    }

    #[test]
    fn training_changes_weights_but_not_feedback() {
        let cfg = small_cfg();
        let mut net = Network::<Q7_8>::new(&cfg, 7).unwrap();
        let r = net.pathway.feedback().to_vec();
        let before = net.hidden_syn.clone();
        for s in 0..20 {
            net.run_sample(&frames(s, 30, 16, 0.5), (s % 2) as usize, true).unwrap();
        }
        assert_ne!(net.hidden_syn, before);
        assert_eq!(net.pathway.feedback(), &r[..]);
    }

    #[test]
    fn same_seed_same_network() {
        let cfg = small_cfg();
        let a = Network::<Q7_8>::new(&cfg, 3).unwrap();
        let b = Network::<Q7_8>::new(&cfg, 3).unwrap();
        let c = Network::<Q7_8>::new(&cfg, 4).unwrap();
        assert_eq!(a.hidden_syn, b.hidden_syn);
        assert_ne!(a.hidden_syn, c.hidden_syn);
    }

    #[test]
    fn rejects_bad_inputs() {
        let cfg = small_cfg();
        let mut net = Network::<Q7_8>::new(&cfg, 3).unwrap();
        assert!(net.step(&[true; 3], None, 0).is_err());
        assert!(net.run_sample(&frames(1, 2, 16, 0.5), 2, true).is_err());
        let bad = ModelConfig { label_period: 0, ..small_cfg() };
        assert!(Network::<Q7_8>::new(&bad, 1).is_err());
    }

    #[test]
    fn argmax_breaks_ties_low() {
        assert_eq!(argmax_first(&[0, 0]), 0);
        assert_eq!(argmax_first(&[2, 3]), 1);
        assert_eq!(argmax_first(&[3, 3, 1]), 0);
    }

    #[test]
    fn weighted_sum_matches_dense_product() {
        let cfg = small_cfg();
        let net = Network::<Q7_8>::new(&cfg, 9).unwrap();
        let pre = frames(5, 1, 16, 0.5).remove(0);
        let sums = weighted_sums(&net.hidden_syn, &pre, 12);
        for n in 0..12 {
            let exact: f64 = (0..16)
                .filter(|&j| pre[j])
                .map(|j| net.hidden_syn[j * 12 + n].w.dequantize())
                .sum();
            assert_eq!(sums[n].dequantize(), exact);
        }
    }
}
