use crate::fxp::Scalar;
use crate::learning::{meta_step, weight_update, PlasticityParams, Synapse};

pub const MESH_ROWS: usize = 8;
pub const MESH_COLS: usize = 8;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Opcode {
    /// `acc += w` (operand bit 0 set: `acc -= w`).
    Accum,
    ResetAcc,
    /// Meta unit. Operand bit 0 clear: plasticity-scaled weight update using
    /// `temp` as `U_post` and `acc` as `I_post`. Bit 0 set: consolidation
    /// step, bit 1 = postsynaptic crossing, bit 2 = presynaptic crossing.
    MetaUpdate,
    LoadTemp,
    LoadAcc,
    /// Latch the presynaptic spike bit.
    MoveInput,
    /// Latch a synapse word.
    MoveWeight,
    /// Emit the accumulator.
    MoveAccum,
}

impl Opcode {
    pub const ALL: [Opcode; 8] = [
        Opcode::Accum,
        Opcode::ResetAcc,
        Opcode::MetaUpdate,
        Opcode::LoadTemp,
        Opcode::LoadAcc,
        Opcode::MoveInput,
        Opcode::MoveWeight,
        Opcode::MoveAccum,
    ];

    pub fn is_compute(self) -> bool {
        matches!(self, Opcode::Accum | Opcode::ResetAcc | Opcode::MetaUpdate)
    }
}

pub const ACCUM_NEGATE: u64 = 1;
pub const META_CONSOLIDATE: u64 = 1;
pub const META_UP: u64 = 2;
pub const META_DOWN: u64 = 4;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct PeInstruction {
    pub opcode: Opcode,
    pub operand: u64,
}

impl PeInstruction {
    pub const fn new(opcode: Opcode, operand: u64) -> Self {
        Self { opcode, operand }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct PeState<S: Scalar> {
    pub accum: S,
    pub temp: S,
    pub synapse: Synapse<S>,
    pub input: bool,
}

impl<S: Scalar> PeState<S> {
    /// Execute one instruction. `MoveAccum` returns the accumulator bits and
    /// `MetaUpdate` returns the packed synapse for write-back.
    #[inline]
    pub fn execute(&mut self, ins: PeInstruction, p: &PlasticityParams<S>) -> Option<u64> {
        match ins.opcode {
            Opcode::Accum => {
                self.accum = if ins.operand & ACCUM_NEGATE != 0 {
                    self.accum.sub(self.synapse.w)
                } else {
                    self.accum.add(self.synapse.w)
                };
                None
            }
            Opcode::ResetAcc => {
                self.accum = S::zero();
                None
            }
            Opcode::MetaUpdate => {
                self.synapse = if ins.operand & META_CONSOLIDATE != 0 {
                    meta_step(self.synapse, ins.operand & META_UP != 0, ins.operand & META_DOWN != 0, p)
                } else {
                    weight_update(self.synapse, self.input, self.temp, self.accum, p)
                };
                Some(self.synapse.pack())
            }
            Opcode::LoadTemp => {
                self.temp = S::from_bits(ins.operand);
                None
            }
            Opcode::LoadAcc => {
                self.accum = S::from_bits(ins.operand);
                None
            }
            Opcode::MoveInput => {
                self.input = ins.operand & 1 != 0;
                None
            }
            Opcode::MoveWeight => {
                self.synapse = Synapse::unpack(ins.operand);
                None
            }
            Opcode::MoveAccum => Some(self.accum.to_bits()),
        }
    }
}

/// `rows x cols` processing elements; PE `(r, c)` is at index `r * cols + c`.
#[derive(Clone, Debug)]
pub struct PeMesh<S: Scalar> {
    pub rows: usize,
    pub cols: usize,
    pes: Vec<PeState<S>>,
    params: PlasticityParams<S>,
    /// Instructions executed, by opcode, in [`Opcode::ALL`] order.
    pub issued: [u64; 8],
}

impl<S: Scalar> PeMesh<S> {
    pub fn new(rows: usize, cols: usize, params: PlasticityParams<S>) -> Self {
        Self {
            rows,
            cols,
            pes: vec![PeState::default(); rows * cols],
            params,
            issued: [0; 8],
        }
    }

    pub fn len(&self) -> usize {
        self.pes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pes.is_empty()
    }

    pub fn pe(&self, i: usize) -> &PeState<S> {
        &self.pes[i]
    }

    #[inline]
    pub fn exec(&mut self, pe: usize, ins: PeInstruction) -> Option<u64> {
        self.issued[ins.opcode as usize] += 1;
        self.pes[pe].execute(ins, &self.params)
    }

    /// Issue the same instruction to PEs `0..n`.
    pub fn broadcast(&mut self, n: usize, ins: PeInstruction) {
        for pe in 0..n {
            self.exec(pe, ins);
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fxp::Q7_8;
    use crate::learning::PlasticityConfig;

    fn q(x: f64) -> Q7_8 {
        Q7_8::quantize(x)
    }

    fn params() -> PlasticityParams<Q7_8> {
        PlasticityConfig::default().build().unwrap()
    }

    #[test]
    fn exactly_eight_opcodes_three_compute() {
        assert_eq!(Opcode::ALL.len(), 8);
        assert_eq!(Opcode::ALL.iter().filter(|o| o.is_compute()).count(), 3);
        for (i, o) in Opcode::ALL.iter().enumerate() {
            assert_eq!(*o as usize, i);
        }
    }

    #[test]
    fn accumulate_and_emit() {
        let p = params();
        let mut pe = PeState::<Q7_8>::default();
        for (w, neg) in [(0.5, false), (0.25, false), (0.125, true)] {
            pe.execute(PeInstruction::new(Opcode::MoveWeight, Synapse::new(q(w)).pack()), &p);
            pe.execute(PeInstruction::new(Opcode::Accum, neg as u64), &p);
        }
        let out = pe.execute(PeInstruction::new(Opcode::MoveAccum, 0), &p).unwrap();
        assert_eq!(Q7_8::from_bits(out), q(0.625));
        pe.execute(PeInstruction::new(Opcode::ResetAcc, 0), &p);
        assert_eq!(pe.accum, Q7_8::ZERO);
    }

    #[test]
    fn meta_unit_matches_learning_rules() {
        let p = params();
        let s = Synapse { w: q(0.5), m: q(1.0) };
        let mut pe = PeState::<Q7_8>::default();
        pe.execute(PeInstruction::new(Opcode::LoadTemp, q(0.75).to_bits()), &p);
        pe.execute(PeInstruction::new(Opcode::LoadAcc, q(0.5).to_bits()), &p);
        pe.execute(PeInstruction::new(Opcode::MoveInput, 1), &p);
        pe.execute(PeInstruction::new(Opcode::MoveWeight, s.pack()), &p);
        let word = pe.execute(PeInstruction::new(Opcode::MetaUpdate, 0), &p).unwrap();
        assert_eq!(Synapse::unpack(word), weight_update(s, true, q(0.75), q(0.5), &p));

        pe.execute(PeInstruction::new(Opcode::MoveWeight, s.pack()), &p);
        let word = pe
            .execute(PeInstruction::new(Opcode::MetaUpdate, META_CONSOLIDATE | META_UP), &p)
            .unwrap();
        assert_eq!(Synapse::<Q7_8>::unpack(word).m, q(1.0).add(p.meta_step));
    }
}
