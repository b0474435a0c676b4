//! Error-spike learning with metaplastic consolidation.
//!
//! Output spikes are compared with label spikes; the signed mismatch drives a
//! pair of LIF error neurons per output (false positive / false negative).
//! Their spikes feed the output dendrites directly and the hidden dendrites
//! through a frozen random feedback matrix. Weight updates are gated by the
//! presynaptic spike and a boxcar on the postsynaptic current, and scaled by
//! the bilinear plasticity factor `f(w, m) = max(0, 1 - |m w| / 2^d)`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fxp::{DyadicExp, Scalar, TraceValue};
use crate::neuron::{LifConfig, LifParams, NeuronState};

/// Weight and metaplasticity parameter, stored as one memory word.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct Synapse<S> {
    pub w: S,
    pub m: S,
}

impl<S: Scalar> Synapse<S> {
    pub fn new(w: S) -> Self {
        Self { w, m: S::zero() }
    }

    /// `{w | m}` packed into one word, weight in the high half.
    pub fn pack(self) -> u64 {
        (self.w.to_bits() << S::BITS) | self.m.to_bits()
    }

    pub fn unpack(word: u64) -> Self {
        let mask = if S::BITS >= 64 { u64::MAX } else { (1u64 << S::BITS) - 1 };
        Self {
            w: S::from_bits((word >> S::BITS) & mask),
            m: S::from_bits(word & mask),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PlasticityConfig {
    pub learning_rate: f64,
    /// `d` in `f(w, m) = 1 - |m w| / 2^d`.
    pub auc_exp: i8,
    pub i_min: f64,
    pub i_max: f64,
    pub theta_pre: u8,
    pub theta_post: u8,
    pub meta_step: f64,
    pub meta_max: f64,
}

impl Default for PlasticityConfig {
    fn default() -> Self {
        Self {
            learning_rate: 2f64.powi(-5),
            auc_exp: 1,
            i_min: -2.0,
            i_max: 2.0,
            theta_pre: 50,
            theta_post: 35,
            meta_step: 2f64.powi(-5),
            meta_max: 8.0,
        }
    }
}

impl PlasticityConfig {
    pub fn build<S: Scalar>(&self) -> Result<PlasticityParams<S>> {
        if self.i_min >= self.i_max {
            return Err(Error::Config(format!(
                "boxcar bounds [{}, {}] are empty",
                self.i_min, self.i_max
            )));
        }
        for (name, th) in [("theta_pre", self.theta_pre), ("theta_post", self.theta_post)] {
            if th == 0 || th > 100 {
                return Err(Error::Config(format!("{name} = {th} outside (0, 100]")));
            }
        }
        if self.meta_step <= 0.0 {
            return Err(Error::Config(format!("meta_step {} must be positive", self.meta_step)));
        }
        if self.meta_max < 0.0 {
            return Err(Error::Config(format!("meta_max {} must be non-negative", self.meta_max)));
        }
        Ok(PlasticityParams {
            learning_rate: S::from_f64(self.learning_rate),
            auc_exp: DyadicExp::new(self.auc_exp)?,
            i_min: S::from_f64(self.i_min),
            i_max: S::from_f64(self.i_max),
            theta_pre: self.theta_pre,
            theta_post: self.theta_post,
            meta_step: S::from_f64(self.meta_step),
            meta_max: S::from_f64(self.meta_max),
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PlasticityParams<S> {
    pub learning_rate: S,
    pub auc_exp: DyadicExp,
    pub i_min: S,
    pub i_max: S,
    pub theta_pre: u8,
    pub theta_post: u8,
    pub meta_step: S,
    pub meta_max: S,
}

/// `max(0, 1 - |m w| 2^-d)`.
#[inline]
pub fn plasticity_factor<S: Scalar>(s: Synapse<S>, auc_exp: DyadicExp) -> S {
    let consolidated = s.m.mul(s.w).abs().scale(auc_exp.neg());
    let f = S::one().sub(consolidated);
    if f < S::zero() {
        S::zero()
    } else {
        f
    }
}

#[inline]
pub fn in_boxcar<S: Scalar>(current: S, p: &PlasticityParams<S>) -> bool {
    current >= p.i_min && current <= p.i_max
}

/// `w <- w - eta * f(w, m) * U_post` when the presynaptic neuron spiked and
/// the postsynaptic current lies inside the boxcar.
#[inline]
pub fn weight_update<S: Scalar>(
    s: Synapse<S>,
    pre_spike: bool,
    u_post: S,
    i_post: S,
    p: &PlasticityParams<S>,
) -> Synapse<S> {
    if !pre_spike || !in_boxcar(i_post, p) {
        return s;
    }
    let rate = p.learning_rate.mul(plasticity_factor(s, p.auc_exp));
    Synapse {
        w: s.w.sub(rate.mul(u_post)),
        m: s.m,
    }
}

/// Strengthen `m` when the postsynaptic trace crossed its threshold, weaken
/// it when the presynaptic trace did; clamp to `[0, meta_max]`.
#[inline]
pub fn metaplasticity_update<S: Scalar>(
    s: Synapse<S>,
    pre_trace: S::Trace,
    post_trace: S::Trace,
    p: &PlasticityParams<S>,
) -> Synapse<S> {
    meta_step(s, post_trace.reaches(p.theta_post), pre_trace.reaches(p.theta_pre), p)
}

/// The consolidation step once the two threshold comparisons are known.
#[inline]
pub fn meta_step<S: Scalar>(s: Synapse<S>, up: bool, down: bool, p: &PlasticityParams<S>) -> Synapse<S> {
    let m = match (up, down) {
        (true, false) => s.m.add(p.meta_step),
        (false, true) => s.m.sub(p.meta_step),
        _ => return s,
    };
    let m = if m < S::zero() {
        S::zero()
    } else if m > p.meta_max {
        p.meta_max
    } else {
        m
    };
    Synapse { w: s.w, m }
}

/// Label neuron spike train: the target output spikes every `period` steps,
/// all others stay silent.
pub fn label_spikes(label: usize, t: usize, n_out: usize, period: usize) -> Vec<bool> {
    (0..n_out).map(|k| k == label && t.is_multiple_of(period)).collect()
}

/// False-positive / false-negative LIF error neurons, one pair per output.
#[derive(Clone, Debug)]
pub struct ErrorNeurons<S: Scalar> {
    pub fp: Vec<NeuronState<S>>,
    pub fn_: Vec<NeuronState<S>>,
    pub params: LifParams<S>,
    /// Error current injected while the mismatch persists.
    pub drive: S,
}

impl<S: Scalar> ErrorNeurons<S> {
    pub fn new(n_out: usize, cfg: &LifConfig, drive: S) -> Result<Self> {
        let params = cfg.build::<S>()?;
        let rest = NeuronState::at_rest(&params);
        Ok(Self {
            fp: vec![rest; n_out],
            fn_: vec![rest; n_out],
            params,
            drive,
        })
    }

    pub fn len(&self) -> usize {
        self.fp.len()
    }

    pub fn is_empty(&self) -> bool {
        self.fp.is_empty()
    }

    pub fn reset(&mut self) {
        let rest = NeuronState::at_rest(&self.params);
        self.fp.fill(rest);
        self.fn_.fill(rest);
    }

    /// Drive the error neurons with `out - label` and its inverse; returns
    /// the false-positive and false-negative spike vectors.
    pub fn compute_error_spikes(
        &mut self,
        out_spikes: &[bool],
        label_spikes: &[bool],
    ) -> Result<(Vec<bool>, Vec<bool>)> {
        if out_spikes.len() != label_spikes.len() || out_spikes.len() != self.len() {
            return Err(Error::Config(format!(
                "error comparison length mismatch: {} outputs, {} labels, {} error neurons",
                out_spikes.len(),
                label_spikes.len(),
                self.len()
            )));
        }
        let n = self.len();
        let mut fp = vec![false; n];
        let mut fn_ = vec![false; n];
        for i in 0..n {
            let e = out_spikes[i] as i8 - label_spikes[i] as i8;
            let pos = if e > 0 { self.drive } else { S::zero() };
            let neg = if e < 0 { self.drive } else { S::zero() };
            let (s, spike) = self.fp[i].integrate_current(pos, &self.params).integrate_voltage_and_fire(&self.params);
            self.fp[i] = s;
            fp[i] = spike;
            let (s, spike) = self.fn_[i].integrate_current(neg, &self.params).integrate_voltage_and_fire(&self.params);
            self.fn_[i] = s;
            fn_[i] = spike;
        }
        Ok((fp, fn_))
    }
}

/// Error neurons and the frozen random feedback path to the hidden layer.
#[derive(Clone, Debug)]
pub struct ErrorPathway<S: Scalar> {
    /// `n_out x n_hidden`, row-major by output neuron.
    feedback: Vec<S>,
    n_hidden: usize,
    pub neurons: ErrorNeurons<S>,
}

impl<S: Scalar> ErrorPathway<S> {
    pub fn new(feedback: Vec<S>, n_out: usize, n_hidden: usize, cfg: &LifConfig, drive: S) -> Result<Self> {
        if feedback.len() != n_out * n_hidden {
            return Err(Error::Config(format!(
                "feedback matrix has {} entries, expected {n_out} x {n_hidden}",
                feedback.len()
            )));
        }
        Ok(Self {
            feedback,
            n_hidden,
            neurons: ErrorNeurons::new(n_out, cfg, drive)?,
        })
    }

    pub fn n_out(&self) -> usize {
        self.neurons.len()
    }

    pub fn n_hidden(&self) -> usize {
        self.n_hidden
    }

    pub fn feedback(&self) -> &[S] {
        &self.feedback
    }

    /// Feedback weights from error neuron `k` to every hidden neuron.
    pub fn feedback_row(&self, k: usize) -> &[S] {
        &self.feedback[k * self.n_hidden..(k + 1) * self.n_hidden]
    }

    pub fn reset(&mut self) {
        self.neurons.reset();
    }

    pub fn compute_error_spikes(
        &mut self,
        out_spikes: &[bool],
        label_spikes: &[bool],
    ) -> Result<(Vec<bool>, Vec<bool>)> {
        self.neurons.compute_error_spikes(out_spikes, label_spikes)
    }

    /// `R^T (fp - fn)`, accumulated in address-event order: every
    /// false-positive index ascending, then every false-negative index.
    pub fn hidden_drive(&self, fp: &[bool], fn_: &[bool]) -> Vec<S> {
        let mut acc = vec![S::zero(); self.n_hidden];
        for (k, _) in fp.iter().enumerate().filter(|(_, &s)| s) {
            for (a, &r) in acc.iter_mut().zip(self.feedback_row(k)) {
                *a = a.add(r);
            }
        }
        for (k, _) in fn_.iter().enumerate().filter(|(_, &s)| s) {
            for (a, &r) in acc.iter_mut().zip(self.feedback_row(k)) {
                *a = a.sub(r);
            }
        }
        acc
    }
}

/// Per-neuron dendritic error compartment `U`.
#[derive(Clone, Debug, PartialEq)]
pub struct DendriticState<S> {
    pub u: Vec<S>,
    pub u_exp: DyadicExp,
}

impl<S: Scalar> DendriticState<S> {
    pub fn new(n: usize, u_exp: DyadicExp) -> Self {
        Self {
            u: vec![S::zero(); n],
            u_exp,
        }
    }

    pub fn reset(&mut self) {
        self.u.fill(S::zero());
    }

    /// `U <- U - 2^k U + 2^k drive`.
    pub fn integrate(&mut self, drive: &[S]) {
        debug_assert_eq!(drive.len(), self.u.len());
        for (u, &d) in self.u.iter_mut().zip(drive) {
            let leak = u.scale(self.u_exp);
            *u = u.sub(leak).add(d.scale(self.u_exp));
        }
    }

    /// Output layer: the drive is the error spike itself, `fp - fn`.
    pub fn update_output(&mut self, fp: &[bool], fn_: &[bool]) {
        let drive: Vec<S> = fp.iter().zip(fn_).map(|(&p, &n)| spike_difference(p, n)).collect();
        self.integrate(&drive);
    }

    /// Hidden layer: the drive arrives through the feedback matrix.
    pub fn update_hidden(&mut self, fp: &[bool], fn_: &[bool], pathway: &ErrorPathway<S>) {
        let drive = pathway.hidden_drive(fp, fn_);
        self.integrate(&drive);
    }
}

#[inline]
pub fn spike_difference<S: Scalar>(fp: bool, fn_: bool) -> S {
    match (fp, fn_) {
        (true, false) => S::one(),
        (false, true) => S::zero().sub(S::one()),
        _ => S::zero(),
    }
}
