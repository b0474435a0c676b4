//! Saturating fixed-point arithmetic.
//!
//! Every on-chip quantity is either a 16-bit signed fixed-point value
//! ([`Fixed16`]) or an 8-bit unsigned activity trace ([`Trace8`]).
//! Multiplicative constants are restricted to powers of two
//! ([`DyadicExp`]) so they become shifts.
//!
//! Rounding is round-to-nearest, ties-to-even on every right shift and on
//! product rescaling. Results saturate at the format bounds; each clamp bumps
//! a per-thread saturation counter (see [`saturation_events`]).

use std::cell::Cell;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

thread_local! {
    static SATURATIONS: Cell<u64> = const { Cell::new(0) };
}

/// Saturation events recorded on the current thread since the last reset.
pub fn saturation_events() -> u64 {
    SATURATIONS.with(|c| c.get())
}

pub fn reset_saturation_events() {
    SATURATIONS.with(|c| c.set(0));
}

#[inline]
fn note_saturation() {
    SATURATIONS.with(|c| c.set(c.get() + 1));
}

#[inline]
fn clamp_count(v: i64, lo: i64, hi: i64) -> i64 {
    if v > hi {
        note_saturation();
        hi
    } else if v < lo {
        note_saturation();
        lo
    } else {
        v
    }
}

/// Arithmetic right shift with round-to-nearest, ties-to-even.
#[inline]
pub fn round_shift_right(v: i64, shift: u32) -> i64 {
    if shift == 0 {
        return v;
    }
    if shift >= 63 {
        return 0;
    }
    let q = v >> shift;
    let rem = v - (q << shift);
    let half = 1i64 << (shift - 1);
    if rem > half || (rem == half && (q & 1) == 1) {
        q + 1
    } else {
        q
    }
}

/// Power-of-two scale factor `2^k`, `|k| <= 15`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "i8", into = "i8")]
pub struct DyadicExp(i8);

impl DyadicExp {
    pub const MAX_ABS: i8 = 15;
    pub const ONE: DyadicExp = DyadicExp(0);

    pub fn new(k: i8) -> Result<Self> {
        if k.unsigned_abs() > Self::MAX_ABS as u8 {
            return Err(Error::Config(format!(
                "dyadic exponent {k} outside [-{0}, {0}]",
                Self::MAX_ABS
            )));
        }
        Ok(Self(k))
    }

    pub const fn k(self) -> i8 {
        self.0
    }

    pub fn factor(self) -> f64 {
        2f64.powi(self.0 as i32)
    }

    pub fn neg(self) -> Self {
        Self(-self.0)
    }

    /// Scale an integer by `2^k`: left shifts are exact, right shifts round
    /// to nearest even.
    #[inline]
    pub fn apply_raw(self, v: i64) -> i64 {
        if self.0 >= 0 {
            v << self.0
        } else {
            round_shift_right(v, (-self.0) as u32)
        }
    }
}

impl TryFrom<i8> for DyadicExp {
    type Error = Error;
    fn try_from(k: i8) -> Result<Self> {
        Self::new(k)
    }
}

impl From<DyadicExp> for i8 {
    fn from(e: DyadicExp) -> i8 {
        e.0
    }
}

/// Signed 16-bit fixed-point value with `F` fractional bits.
#[derive(Clone, Copy, Default, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Fixed16<const F: u32> {
    raw: i16,
}

/// The default on-chip format (Q7.8).
pub type Q7_8 = Fixed16<8>;

impl<const F: u32> Fixed16<F> {
    pub const FRAC_BITS: u32 = F;
    pub const MAX: Self = Self { raw: i16::MAX };
    pub const MIN: Self = Self { raw: i16::MIN };
    pub const ZERO: Self = Self { raw: 0 };

    pub const fn from_raw(raw: i16) -> Self {
        Self { raw }
    }

    pub const fn raw(self) -> i16 {
        self.raw
    }

    #[inline]
    fn saturate(v: i64) -> Self {
        Self {
            raw: clamp_count(v, i16::MIN as i64, i16::MAX as i64) as i16,
        }
    }

    /// Nearest representable value, ties to even, saturated.
    pub fn quantize(x: f64) -> Self {
        Self {
            raw: quantize_raw(x, F, i16::MIN as i64, i16::MAX as i64) as i16,
        }
    }

    pub fn dequantize(self) -> f64 {
        self.raw as f64 / (1u64 << F) as f64
    }

    #[inline]
    pub fn sat_add(self, rhs: Self) -> Self {
        Self::saturate(self.raw as i64 + rhs.raw as i64)
    }

    #[inline]
    pub fn sat_sub(self, rhs: Self) -> Self {
        Self::saturate(self.raw as i64 - rhs.raw as i64)
    }

    /// Product rescaled back to `F` fractional bits.
    #[inline]
    pub fn sat_mul(self, rhs: Self) -> Self {
        let wide = self.raw as i64 * rhs.raw as i64;
        Self::saturate(round_shift_right(wide, F))
    }

    #[inline]
    pub fn dyadic_scale(self, e: DyadicExp) -> Self {
        Self::saturate(e.apply_raw(self.raw as i64))
    }

    #[inline]
    pub fn sat_abs(self) -> Self {
        Self::saturate((self.raw as i64).abs())
    }
}

impl<const F: u32> fmt::Debug for Fixed16<F> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}(raw {})", self.dequantize(), self.raw)
    }
}

/// Signed 32-bit fixed-point value, used only for the precision ablation.
#[derive(Clone, Copy, Default, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Fixed32<const F: u32> {
    raw: i32,
}

pub type Q15_16 = Fixed32<16>;

impl<const F: u32> Fixed32<F> {
    pub const fn from_raw(raw: i32) -> Self {
        Self { raw }
    }

    pub const fn raw(self) -> i32 {
        self.raw
    }

    #[inline]
    fn saturate(v: i64) -> Self {
        Self {
            raw: clamp_count(v, i32::MIN as i64, i32::MAX as i64) as i32,
        }
    }

    pub fn quantize(x: f64) -> Self {
        Self {
            raw: quantize_raw(x, F, i32::MIN as i64, i32::MAX as i64) as i32,
        }
    }

    pub fn dequantize(self) -> f64 {
        self.raw as f64 / (1u64 << F) as f64
    }
}

impl<const F: u32> fmt::Debug for Fixed32<F> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}(raw {})", self.dequantize(), self.raw)
    }
}

fn quantize_raw(x: f64, frac: u32, lo: i64, hi: i64) -> i64 {
    if x.is_nan() {
        note_saturation();
        return 0;
    }
    let scaled = (x * (1u64 << frac) as f64).round_ties_even();
    if scaled > hi as f64 {
        note_saturation();
        hi
    } else if scaled < lo as f64 {
        note_saturation();
        lo
    } else {
        scaled as i64
    }
}

/// Free-function form of [`Fixed16::quantize`] for a runtime format.
/// Returns the raw word.
pub fn quantize(x: f64, frac_bits: u32) -> Result<i16> {
    if frac_bits > 15 {
        return Err(Error::Config(format!("frac_bits {frac_bits} outside [0, 15]")));
    }
    Ok(quantize_raw(x, frac_bits, i16::MIN as i64, i16::MAX as i64) as i16)
}

pub fn dequantize(raw: i16, frac_bits: u32) -> f64 {
    raw as f64 / (1u64 << frac_bits) as f64
}

/// Unsigned 8-bit integer activity trace.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Trace8(pub u8);

impl Trace8 {
    pub const fn raw(self) -> u8 {
        self.0
    }
}

/// Storage and arithmetic interface shared by every precision mode.
///
/// The functional reference and the accelerator model are generic over this
/// trait, so one code path serves the 16-bit, 32-bit and floating-point runs.
pub trait Scalar:
    Copy + Default + PartialEq + PartialOrd + fmt::Debug + Send + Sync + 'static
{
    /// Per-neuron activity trace type used alongside this scalar.
    type Trace: TraceValue;

    /// Storage width in bits of one value.
    const BITS: u32;
    const LABEL: &'static str;

    fn from_f64(x: f64) -> Self;
    fn to_f64(self) -> f64;
    fn zero() -> Self;
    fn one() -> Self {
        Self::from_f64(1.0)
    }
    fn add(self, rhs: Self) -> Self;
    fn sub(self, rhs: Self) -> Self;
    fn mul(self, rhs: Self) -> Self;
    fn scale(self, e: DyadicExp) -> Self;
    fn abs(self) -> Self;
    fn to_bits(self) -> u64;
    fn from_bits(bits: u64) -> Self;
}

impl<const F: u32> Scalar for Fixed16<F> {
    type Trace = Trace8;
    const BITS: u32 = 16;
    const LABEL: &'static str = "fxp16";

    fn from_f64(x: f64) -> Self {
        Self::quantize(x)
    }
    fn to_f64(self) -> f64 {
        self.dequantize()
    }
    fn zero() -> Self {
        Self::ZERO
    }
    fn add(self, rhs: Self) -> Self {
        self.sat_add(rhs)
    }
    fn sub(self, rhs: Self) -> Self {
        self.sat_sub(rhs)
    }
    fn mul(self, rhs: Self) -> Self {
        self.sat_mul(rhs)
    }
    fn scale(self, e: DyadicExp) -> Self {
        self.dyadic_scale(e)
    }
    fn abs(self) -> Self {
        self.sat_abs()
    }
    fn to_bits(self) -> u64 {
        self.raw as u16 as u64
    }
    fn from_bits(bits: u64) -> Self {
        Self::from_raw(bits as u16 as i16)
    }
}

impl<const F: u32> Scalar for Fixed32<F> {
    type Trace = Trace8;
    const BITS: u32 = 32;
    const LABEL: &'static str = "fxp32";

    fn from_f64(x: f64) -> Self {
        Self::quantize(x)
    }
    fn to_f64(self) -> f64 {
        self.dequantize()
    }
    fn zero() -> Self {
        Self { raw: 0 }
    }
    fn add(self, rhs: Self) -> Self {
        Self::saturate(self.raw as i64 + rhs.raw as i64)
    }
    fn sub(self, rhs: Self) -> Self {
        Self::saturate(self.raw as i64 - rhs.raw as i64)
    }
    fn mul(self, rhs: Self) -> Self {
        Self::saturate(round_shift_right(self.raw as i64 * rhs.raw as i64, F))
    }
    fn scale(self, e: DyadicExp) -> Self {
        Self::saturate(e.apply_raw(self.raw as i64))
    }
    fn abs(self) -> Self {
        Self::saturate((self.raw as i64).abs())
    }
    fn to_bits(self) -> u64 {
        self.raw as u32 as u64
    }
    fn from_bits(bits: u64) -> Self {
        Self::from_raw(bits as u32 as i32)
    }
}

/// Floating-point reference precision.
impl Scalar for f32 {
    type Trace = FloatTrace;
    const BITS: u32 = 32;
    const LABEL: &'static str = "float";

    fn from_f64(x: f64) -> Self {
        x as f32
    }
    fn to_f64(self) -> f64 {
        self as f64
    }
    fn zero() -> Self {
        0.0
    }
    fn add(self, rhs: Self) -> Self {
        self + rhs
    }
    fn sub(self, rhs: Self) -> Self {
        self - rhs
    }
    fn mul(self, rhs: Self) -> Self {
        self * rhs
    }
    fn scale(self, e: DyadicExp) -> Self {
        self * e.factor() as f32
    }
    fn abs(self) -> Self {
        f32::abs(self)
    }
    fn to_bits(self) -> u64 {
        f32::to_bits(self) as u64
    }
    fn from_bits(bits: u64) -> Self {
        f32::from_bits(bits as u32)
    }
}

/// Leaky-integrator parameters for activity traces.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TraceParams {
    /// Leak per step is `trace * 2^leak_exp`.
    pub leak_exp: DyadicExp,
    /// Added on every spike.
    pub increment: u8,
}

impl TraceParams {
    pub fn validate(&self) -> Result<()> {
        let k = self.leak_exp.k();
        if k >= 0 {
            return Err(Error::Config(format!("trace leak exponent must be negative, got {k}")));
        }
        let ceiling = (self.increment as u32) << k.unsigned_abs();
        if ceiling > 255 {
            return Err(Error::Config(format!(
                "trace steady state {ceiling} does not fit in 8 bits"
            )));
        }
        Ok(())
    }

    /// Steady state under spiking on every step.
    pub fn ceiling(&self) -> u32 {
        (self.increment as u32) << self.leak_exp.k().unsigned_abs()
    }
}

impl Default for TraceParams {
    fn default() -> Self {
        Self {
            leak_exp: DyadicExp(-2),
            increment: 25,
        }
    }
}

pub trait TraceValue: Copy + Default + PartialEq + fmt::Debug + Send + Sync + 'static {
    fn update(self, spike: bool, p: &TraceParams) -> Self;
    fn reaches(self, threshold: u8) -> bool;
    fn to_f64(self) -> f64;
}

impl TraceValue for Trace8 {
    /// `trace - leak + spike * A` where the leak is a truncating shift with
    /// a floor of one LSB while the trace is non-zero.
    #[inline]
    fn update(self, spike: bool, p: &TraceParams) -> Self {
        let t = self.0 as i32;
        let shift = p.leak_exp.k().unsigned_abs() as u32;
        let leak = if t == 0 { 0 } else { (t >> shift).max(1) };
        let next = t - leak + if spike { p.increment as i32 } else { 0 };
        Trace8(clamp_count(next as i64, 0, 255) as u8)
    }

    fn reaches(self, threshold: u8) -> bool {
        self.0 >= threshold
    }

    fn to_f64(self) -> f64 {
        self.0 as f64
    }
}

/// Real-valued trace for the floating-point reference.
#[derive(Clone, Copy, Debug, Default, PartialEq, PartialOrd, Serialize, Deserialize)]
pub struct FloatTrace(pub f32);

impl TraceValue for FloatTrace {
    fn update(self, spike: bool, p: &TraceParams) -> Self {
        let leak = self.0 * p.leak_exp.factor() as f32;
        let next = self.0 - leak + if spike { p.increment as f32 } else { 0.0 };
        FloatTrace(next.clamp(0.0, 255.0))
    }

    fn reaches(self, threshold: u8) -> bool {
        self.0 >= threshold as f32
    }

    fn to_f64(self) -> f64 {
        self.0 as f64
    }
}
