//! Leaky integrate-and-fire dynamics with dyadic constants.
//!
//! One step of a neuron is
//!
//! ```text
//! I <- I + 2^a (sum_j w_j S_j - I)
//! V <- V + 2^b (V_rest - V) + 2^c I
//! spike if V >= V_th and not refractory; then V <- V_reset
//! ```
//!
//! The current is integrated first and the voltage update sees the new
//! current, so an input spike can reach the membrane in the same step.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fxp::{DyadicExp, Scalar, TraceParams, TraceValue};

/// Real-valued neuron constants as they appear in configuration files.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct LifConfig {
    /// `a`: current integration exponent.
    pub current_exp: i8,
    /// `b`: membrane leak exponent.
    pub leak_exp: i8,
    /// `c`: current injection exponent.
    pub input_exp: i8,
    pub v_rest: f64,
    pub v_th: f64,
    pub v_reset: f64,
    pub refractory_steps: u8,
}

impl Default for LifConfig {
    fn default() -> Self {
        Self {
            current_exp: -3,
            leak_exp: -4,
            input_exp: -3,
            v_rest: 0.0,
            v_th: 1.0,
            v_reset: 0.0,
            refractory_steps: 2,
        }
    }
}

impl LifConfig {
    pub fn build<S: Scalar>(&self) -> Result<LifParams<S>> {
        if self.v_th <= self.v_rest {
            return Err(Error::Config(format!(
                "LIF threshold {} must exceed resting potential {}",
                self.v_th, self.v_rest
            )));
        }
        Ok(LifParams {
            current_exp: DyadicExp::new(self.current_exp)?,
            leak_exp: DyadicExp::new(self.leak_exp)?,
            input_exp: DyadicExp::new(self.input_exp)?,
            v_rest: S::from_f64(self.v_rest),
            v_th: S::from_f64(self.v_th),
            v_reset: S::from_f64(self.v_reset),
            refractory_steps: self.refractory_steps,
        })
    }
}

/// Neuron constants in the working precision.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LifParams<S> {
    pub current_exp: DyadicExp,
    pub leak_exp: DyadicExp,
    pub input_exp: DyadicExp,
    pub v_rest: S,
    pub v_th: S,
    pub v_reset: S,
    pub refractory_steps: u8,
}

#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct NeuronState<S: Scalar> {
    pub current: S,
    pub voltage: S,
    pub trace: S::Trace,
    pub refrac_left: u8,
}

impl<S: Scalar> NeuronState<S> {
    pub fn at_rest(p: &LifParams<S>) -> Self {
        Self {
            current: S::zero(),
            voltage: p.v_rest,
            trace: S::Trace::default(),
            refrac_left: 0,
        }
    }

    #[inline]
    pub fn integrate_current(mut self, weighted_sum: S, p: &LifParams<S>) -> Self {
        let delta = weighted_sum.sub(self.current).scale(p.current_exp);
        self.current = self.current.add(delta);
        self
    }

    #[inline]
    pub fn integrate_voltage_and_fire(mut self, p: &LifParams<S>) -> (Self, bool) {
        let leak = p.v_rest.sub(self.voltage).scale(p.leak_exp);
        let drive = self.current.scale(p.input_exp);
        self.voltage = self.voltage.add(leak).add(drive);
        if self.refrac_left == 0 && self.voltage >= p.v_th {
            self.voltage = p.v_reset;
            self.refrac_left = p.refractory_steps;
            (self, true)
        } else {
            self.refrac_left = self.refrac_left.saturating_sub(1);
            (self, false)
        }
    }

    /// Full neuron step: current, voltage, spike and trace.
    #[inline]
    pub fn step(self, weighted_sum: S, p: &LifParams<S>, tp: &TraceParams) -> (Self, bool) {
        let (mut next, spike) = self.integrate_current(weighted_sum, p).integrate_voltage_and_fire(p);
        next.trace = update_trace(next.trace, spike, tp);
        (next, spike)
    }
}

#[inline]
pub fn update_trace<T: TraceValue>(trace: T, spike: bool, tp: &TraceParams) -> T {
    trace.update(spike, tp)
}
