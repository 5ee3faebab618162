//! Gate-level circuit representation.
//!
//! Qubits are numbered globally: the system register occupies the lowest
//! indices, then the aux register, then the qpe register. Qubit q is bit q of
//! a statevector index.

use crate::linalg::{c, cis, CMat};
use crate::simulator::kernels;
use crate::{Error, Result, C64};
use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;
use core::f64::consts::FRAC_1_SQRT_2;
#[allow(unused_imports)]
use num_traits::Float;

pub const UNITARY_QUBIT_LIMIT: usize = 14;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum GateKind {
    H(usize),
    X(usize),
    Z(usize),
    S(usize),
    Sdg(usize),
    T(usize),
    Tdg(usize),
    Cnot { control: usize, target: usize },
    Cz { control: usize, target: usize },
    /// diag(e^{-iθ/2}, e^{iθ/2})
    Rz { angle: f64, target: usize },
    Ry { angle: f64, target: usize },
    MeasureToBit { qubit: usize, bit: usize },
    /// CZ applied when classical `bit` is 1.
    ClassicallyControlledCz { bit: usize, control: usize, target: usize },
    /// Returns the qubit to |0⟩.
    Reset(usize),
}

impl GateKind {
    pub fn qubits(&self) -> ([usize; 2], usize) {
        use GateKind::*;
        match *self {
            H(q) | X(q) | Z(q) | S(q) | Sdg(q) | T(q) | Tdg(q) | Reset(q) => ([q, q], 1),
            Rz { target, .. } | Ry { target, .. } => ([target, target], 1),
            MeasureToBit { qubit, .. } => ([qubit, qubit], 1),
            Cnot { control, target } | Cz { control, target } | ClassicallyControlledCz { control, target, .. } => ([control, target], 2),
        }
    }

    pub fn is_two_qubit(&self) -> bool {
        self.qubits().1 == 2
    }

    pub fn is_unitary(&self) -> bool {
        !matches!(self, GateKind::MeasureToBit { .. } | GateKind::ClassicallyControlledCz { .. } | GateKind::Reset(_))
    }

    pub fn inverse(&self) -> Option<GateKind> {
        use GateKind::*;
        Some(match *self {
            S(q) => Sdg(q),
            Sdg(q) => S(q),
            T(q) => Tdg(q),
            Tdg(q) => T(q),
            Rz { angle, target } => Rz { angle: -angle, target },
            Ry { angle, target } => Ry { angle: -angle, target },
            MeasureToBit { .. } | ClassicallyControlledCz { .. } | Reset(_) => return None,
            g => g,
        })
    }

    /// 2x2 or 4x4 matrix; two-qubit gates use index control + 2·target.
    pub fn matrix(&self) -> Option<CMat> {
        use GateKind::*;
        let o = c(0.0, 0.0);
        let l = c(1.0, 0.0);
        let r = c(FRAC_1_SQRT_2, 0.0);
        let d = |a: C64, b: C64| CMat::from_row_slice(2, 2, &[a, o, o, b]);
        Some(match *self {
            H(_) => CMat::from_row_slice(2, 2, &[r, r, r, -r]),
            X(_) => CMat::from_row_slice(2, 2, &[o, l, l, o]),
            Z(_) => d(l, -l),
            S(_) => d(l, c(0.0, 1.0)),
            Sdg(_) => d(l, c(0.0, -1.0)),
            T(_) => d(l, cis(core::f64::consts::FRAC_PI_4)),
            Tdg(_) => d(l, cis(-core::f64::consts::FRAC_PI_4)),
            Rz { angle, .. } => d(cis(-angle / 2.0), cis(angle / 2.0)),
            Ry { angle, .. } => {
                let (s, co) = ((angle / 2.0).sin(), (angle / 2.0).cos());
                CMat::from_row_slice(2, 2, &[c(co, 0.0), c(-s, 0.0), c(s, 0.0), c(co, 0.0)])
            }
            Cnot { .. } => {
                let mut m = CMat::identity(4, 4);
                m[(1, 1)] = o;
                m[(3, 3)] = o;
                m[(3, 1)] = l;
                m[(1, 3)] = l;
                m
            }
            Cz { .. } => {
                let mut m = CMat::identity(4, 4);
                m[(3, 3)] = -l;
                m
            }
            _ => return None,
        })
    }

    pub fn text(&self) -> String {
        use GateKind::*;
        match *self {
            H(q) => format!("H {q}"),
            X(q) => format!("X {q}"),
            Z(q) => format!("Z {q}"),
            S(q) => format!("S {q}"),
            Sdg(q) => format!("SDG {q}"),
            T(q) => format!("T {q}"),
            Tdg(q) => format!("TDG {q}"),
            Cnot { control, target } => format!("CNOT {control} {target}"),
            Cz { control, target } => format!("CZ {control} {target}"),
            Rz { angle, target } => format!("RZ {angle:?} {target}"),
            Ry { angle, target } => format!("RY {angle:?} {target}"),
            MeasureToBit { qubit, bit } => format!("MEASURE {qubit} {bit}"),
            ClassicallyControlledCz { bit, control, target } => format!("CCZ {bit} {control} {target}"),
            Reset(q) => format!("RESET {q}"),
        }
    }

    fn qasm(&self) -> String {
        use GateKind::*;
        match *self {
            H(q) => format!("h q[{q}];"),
            X(q) => format!("x q[{q}];"),
            Z(q) => format!("z q[{q}];"),
            S(q) => format!("s q[{q}];"),
            Sdg(q) => format!("sdg q[{q}];"),
            T(q) => format!("t q[{q}];"),
            Tdg(q) => format!("tdg q[{q}];"),
            Cnot { control, target } => format!("cx q[{control}], q[{target}];"),
            Cz { control, target } => format!("cz q[{control}], q[{target}];"),
            Rz { angle, target } => format!("rz({angle:?}) q[{target}];"),
            Ry { angle, target } => format!("ry({angle:?}) q[{target}];"),
            MeasureToBit { qubit, bit } => format!("c[{bit}] = measure q[{qubit}];"),
            ClassicallyControlledCz { bit, control, target } => format!("if (c[{bit}]) cz q[{control}], q[{target}];"),
            Reset(q) => format!("reset q[{q}];"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct Registers {
    pub system: usize,
    pub aux: usize,
    pub qpe: usize,
}

impl Registers {
    pub fn new(system: usize, aux: usize, qpe: usize) -> Self {
        Registers { system, aux, qpe }
    }

    pub fn total(&self) -> usize {
        self.system + self.aux + self.qpe
    }

    pub fn aux_qubit(&self, i: usize) -> usize {
        debug_assert!(i < self.aux);
        self.system + i
    }

    pub fn qpe_qubit(&self, i: usize) -> usize {
        debug_assert!(i < self.qpe);
        self.system + self.aux + i
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct GateCounts {
    pub cnot: usize,
    pub cz: usize,
    pub conditioned_cz: usize,
    pub rz: usize,
    pub ry: usize,
    /// T and T†
    pub t: usize,
    /// S and S†
    pub s: usize,
    pub h: usize,
    pub x: usize,
    pub z: usize,
    pub measure: usize,
    pub reset: usize,
}

impl GateCounts {
    pub fn total(&self) -> usize {
        self.fields().iter().map(|f| f.1).sum()
    }

    pub fn two_qubit(&self) -> usize {
        self.cnot + self.cz + self.conditioned_cz
    }

    pub fn fields(&self) -> [(&'static str, usize); 12] {
        [
            ("cnot", self.cnot),
            ("cz", self.cz),
            ("conditioned_cz", self.conditioned_cz),
            ("rz", self.rz),
            ("ry", self.ry),
            ("t", self.t),
            ("s", self.s),
            ("h", self.h),
            ("x", self.x),
            ("z", self.z),
            ("measure", self.measure),
            ("reset", self.reset),
        ]
    }

    /// "kind,count" lines with a header.
    pub fn to_csv(&self) -> String {
        let mut s = String::from("kind,count\n");
        for (k, v) in self.fields() {
            s.push_str(&format!("{k},{v}\n"));
        }
        s
    }
}

impl core::ops::Add for GateCounts {
    type Output = GateCounts;
    fn add(self, o: GateCounts) -> GateCounts {
        GateCounts {
            cnot: self.cnot + o.cnot,
            cz: self.cz + o.cz,
            conditioned_cz: self.conditioned_cz + o.conditioned_cz,
            rz: self.rz + o.rz,
            ry: self.ry + o.ry,
            t: self.t + o.t,
            s: self.s + o.s,
            h: self.h + o.h,
            x: self.x + o.x,
            z: self.z + o.z,
            measure: self.measure + o.measure,
            reset: self.reset + o.reset,
        }
    }
}

impl core::ops::Sub for GateCounts {
    type Output = GateCounts;
    fn sub(self, o: GateCounts) -> GateCounts {
        GateCounts {
            cnot: self.cnot - o.cnot,
            cz: self.cz - o.cz,
            conditioned_cz: self.conditioned_cz - o.conditioned_cz,
            rz: self.rz - o.rz,
            ry: self.ry - o.ry,
            t: self.t - o.t,
            s: self.s - o.s,
            h: self.h - o.h,
            x: self.x - o.x,
            z: self.z - o.z,
            measure: self.measure - o.measure,
            reset: self.reset - o.reset,
        }
    }
}

/// A frozen gate sequence. Build one with [`CircuitBuilder`].
#[derive(Debug, Clone, PartialEq)]
pub struct QuantumCircuit {
    registers: Registers,
    n_bits: usize,
    gates: Vec<GateKind>,
    global_phase: f64,
}

impl QuantumCircuit {
    pub fn empty(registers: Registers) -> Self {
        QuantumCircuit { registers, n_bits: 0, gates: Vec::new(), global_phase: 0.0 }
    }

    pub fn registers(&self) -> Registers {
        self.registers
    }

    pub fn n_qubits(&self) -> usize {
        self.registers.total()
    }

    pub fn n_bits(&self) -> usize {
        self.n_bits
    }

    pub fn gates(&self) -> &[GateKind] {
        &self.gates
    }

    pub fn global_phase(&self) -> f64 {
        self.global_phase
    }

    pub fn len(&self) -> usize {
        self.gates.len()
    }

    pub fn is_empty(&self) -> bool {
        self.gates.is_empty()
    }

    pub fn has_measurements(&self) -> bool {
        self.gates.iter().any(|g| !g.is_unitary())
    }

    pub fn with_global_phase(mut self, phase: f64) -> Self {
        self.global_phase = phase;
        self
    }

    pub fn count_gates(&self) -> GateCounts {
        count_gates(self)
    }

    pub fn to_builder(&self) -> CircuitBuilder {
        CircuitBuilder { circuit: self.clone(), written: self.written_bits() }
    }

    fn written_bits(&self) -> Vec<bool> {
        let mut w = alloc::vec![false; self.n_bits];
        for g in &self.gates {
            if let GateKind::MeasureToBit { bit, .. } = g {
                w[*bit] = true;
            }
        }
        w
    }

    /// Line format: header lines `QUBITS s a q`, `BITS n`, `PHASE φ`, then
    /// one gate per line.
    pub fn to_text(&self) -> String {
        let r = self.registers;
        let mut s = format!("QUBITS {} {} {}\nBITS {}\nPHASE {:?}\n", r.system, r.aux, r.qpe, self.n_bits, self.global_phase);
        for g in &self.gates {
            s.push_str(&g.text());
            s.push('\n');
        }
        s
    }

    pub fn from_text(text: &str) -> Result<QuantumCircuit> {
        let mut lines = text.lines().map(str::trim).filter(|l| !l.is_empty() && !l.starts_with('#')).enumerate();
        let err = |i: usize, m: &str| Error::InvalidArgument(format!("circuit line {}: {m}", i + 1));
        let mut header = |key: &str| -> Result<Vec<String>> {
            let (i, l) = lines.next().ok_or_else(|| err(0, "missing header"))?;
            let mut p = l.split_whitespace();
            if p.next() != Some(key) {
                return Err(err(i, &format!("expected {key}")));
            }
            Ok(p.map(String::from).collect())
        };
        let q = header("QUBITS")?;
        let b = header("BITS")?;
        let ph = header("PHASE")?;
        let num = |s: &str| s.parse::<usize>().map_err(|_| err(0, "bad integer"));
        if q.len() != 3 || b.len() != 1 || ph.len() != 1 {
            return Err(err(0, "bad header"));
        }
        let regs = Registers::new(num(&q[0])?, num(&q[1])?, num(&q[2])?);
        let mut bld = CircuitBuilder::new(regs);
        bld.add_bits(num(&b[0])?);
        let phase: f64 = ph[0].parse().map_err(|_| err(2, "bad phase"))?;
        for (i, l) in lines {
            let p: Vec<&str> = l.split_whitespace().collect();
            let u = |k: usize| -> Result<usize> { p.get(k).ok_or_else(|| err(i, "missing operand"))?.parse().map_err(|_| err(i, "bad operand")) };
            let f = |k: usize| -> Result<f64> { p.get(k).ok_or_else(|| err(i, "missing operand"))?.parse().map_err(|_| err(i, "bad angle")) };
            let (g, arity) = match p[0] {
                "H" => (GateKind::H(u(1)?), 2),
                "X" => (GateKind::X(u(1)?), 2),
                "Z" => (GateKind::Z(u(1)?), 2),
                "S" => (GateKind::S(u(1)?), 2),
                "SDG" => (GateKind::Sdg(u(1)?), 2),
                "T" => (GateKind::T(u(1)?), 2),
                "TDG" => (GateKind::Tdg(u(1)?), 2),
                "RESET" => (GateKind::Reset(u(1)?), 2),
                "CNOT" => (GateKind::Cnot { control: u(1)?, target: u(2)? }, 3),
                "CZ" => (GateKind::Cz { control: u(1)?, target: u(2)? }, 3),
                "RZ" => (GateKind::Rz { angle: f(1)?, target: u(2)? }, 3),
                "RY" => (GateKind::Ry { angle: f(1)?, target: u(2)? }, 3),
                "MEASURE" => (GateKind::MeasureToBit { qubit: u(1)?, bit: u(2)? }, 3),
                "CCZ" => (GateKind::ClassicallyControlledCz { bit: u(1)?, control: u(2)?, target: u(3)? }, 4),
                k => return Err(err(i, &format!("unknown gate {k}"))),
            };
            if p.len() != arity {
                return Err(err(i, "wrong operand count"));
            }
            bld.push(g).map_err(|e| err(i, &format!("{e}")))?;
        }
        Ok(bld.build().with_global_phase(phase))
    }

    /// OpenQASM 3 export (interoperability only).
    pub fn to_qasm(&self) -> String {
        let mut s = String::from("OPENQASM 3.0;\ninclude \"stdgates.inc\";\n");
        s.push_str(&format!("qubit[{}] q;\n", self.n_qubits().max(1)));
        if self.n_bits > 0 {
            s.push_str(&format!("bit[{}] c;\n", self.n_bits));
        }
        if self.global_phase != 0.0 {
            s.push_str(&format!("gphase({:?});\n", self.global_phase));
        }
        for g in &self.gates {
            s.push_str(&g.qasm());
            s.push('\n');
        }
        s
    }
}

/// Validating builder; indices are checked when a gate is appended.
#[derive(Debug, Clone)]
pub struct CircuitBuilder {
    circuit: QuantumCircuit,
    written: Vec<bool>,
}

impl CircuitBuilder {
    pub fn new(registers: Registers) -> Self {
        CircuitBuilder { circuit: QuantumCircuit::empty(registers), written: Vec::new() }
    }

    pub fn registers(&self) -> Registers {
        self.circuit.registers
    }

    pub fn n_bits(&self) -> usize {
        self.circuit.n_bits
    }

    pub fn len(&self) -> usize {
        self.circuit.gates.len()
    }

    pub fn is_empty(&self) -> bool {
        self.circuit.gates.is_empty()
    }

    pub fn gates(&self) -> &[GateKind] {
        &self.circuit.gates
    }

    /// Allocates a classical bit.
    pub fn new_bit(&mut self) -> usize {
        self.circuit.n_bits += 1;
        self.written.push(false);
        self.circuit.n_bits - 1
    }

    pub fn add_bits(&mut self, n: usize) {
        for _ in 0..n {
            self.new_bit();
        }
    }

    pub fn add_phase(&mut self, phi: f64) {
        self.circuit.global_phase += phi;
    }

    pub fn push(&mut self, g: GateKind) -> Result<()> {
        let n = self.circuit.n_qubits();
        let ([a, b], arity) = g.qubits();
        if a >= n || b >= n {
            return Err(Error::InvalidArgument(format!("{g:?}: qubit out of range (circuit has {n})")));
        }
        if arity == 2 && a == b {
            return Err(Error::InvalidArgument(format!("{g:?}: control equals target")));
        }
        match g {
            GateKind::Rz { angle, .. } | GateKind::Ry { angle, .. } if !angle.is_finite() => {
                return Err(Error::InvalidArgument(format!("{g:?}: angle not finite")));
            }
            GateKind::MeasureToBit { bit, .. } => {
                if bit >= self.circuit.n_bits {
                    return Err(Error::InvalidArgument(format!("{g:?}: bit out of range")));
                }
                self.written[bit] = true;
            }
            GateKind::ClassicallyControlledCz { bit, .. } => {
                if bit >= self.circuit.n_bits || !self.written[bit] {
                    return Err(Error::InvalidArgument(format!("{g:?}: bit read before it is written")));
                }
            }
            _ => {}
        }
        self.circuit.gates.push(g);
        Ok(())
    }

    fn must(&mut self, g: GateKind) -> &mut Self {
        if let Err(e) = self.push(g) {
            panic!("invalid gate: {e}");
        }
        self
    }

    pub fn h(&mut self, q: usize) -> &mut Self {
        self.must(GateKind::H(q))
    }
    pub fn x(&mut self, q: usize) -> &mut Self {
        self.must(GateKind::X(q))
    }
    pub fn z(&mut self, q: usize) -> &mut Self {
        self.must(GateKind::Z(q))
    }
    pub fn s(&mut self, q: usize) -> &mut Self {
        self.must(GateKind::S(q))
    }
    pub fn sdg(&mut self, q: usize) -> &mut Self {
        self.must(GateKind::Sdg(q))
    }
    pub fn t(&mut self, q: usize) -> &mut Self {
        self.must(GateKind::T(q))
    }
    pub fn tdg(&mut self, q: usize) -> &mut Self {
        self.must(GateKind::Tdg(q))
    }
    pub fn cnot(&mut self, control: usize, target: usize) -> &mut Self {
        self.must(GateKind::Cnot { control, target })
    }
    pub fn cz(&mut self, control: usize, target: usize) -> &mut Self {
        self.must(GateKind::Cz { control, target })
    }
    pub fn rz(&mut self, angle: f64, target: usize) -> &mut Self {
        self.must(GateKind::Rz { angle, target })
    }
    pub fn ry(&mut self, angle: f64, target: usize) -> &mut Self {
        self.must(GateKind::Ry { angle, target })
    }
    pub fn measure(&mut self, qubit: usize, bit: usize) -> &mut Self {
        self.must(GateKind::MeasureToBit { qubit, bit })
    }
    pub fn cond_cz(&mut self, bit: usize, control: usize, target: usize) -> &mut Self {
        self.must(GateKind::ClassicallyControlledCz { bit, control, target })
    }
    pub fn reset(&mut self, q: usize) -> &mut Self {
        self.must(GateKind::Reset(q))
    }

    /// Appends another circuit on the same registers; its classical bits are
    /// renumbered after the existing ones.
    pub fn append(&mut self, other: &QuantumCircuit) -> Result<&mut Self> {
        if other.registers.total() > self.circuit.registers.total() {
            return Err(Error::InvalidArgument("appended circuit is wider".into()));
        }
        let off = self.circuit.n_bits;
        self.add_bits(other.n_bits);
        for g in &other.gates {
            let g = match *g {
                GateKind::MeasureToBit { qubit, bit } => GateKind::MeasureToBit { qubit, bit: bit + off },
                GateKind::ClassicallyControlledCz { bit, control, target } => GateKind::ClassicallyControlledCz { bit: bit + off, control, target },
                g => g,
            };
            self.push(g)?;
        }
        self.circuit.global_phase += other.global_phase;
        Ok(self)
    }

    pub fn build(self) -> QuantumCircuit {
        self.circuit
    }
}

pub fn compose(c1: &QuantumCircuit, c2: &QuantumCircuit) -> Result<QuantumCircuit> {
    if c1.registers != c2.registers {
        return Err(Error::InvalidArgument(format!("register mismatch: {:?} vs {:?}", c1.registers, c2.registers)));
    }
    let mut b = c1.to_builder();
    b.append(c2)?;
    Ok(b.build())
}

pub fn inverse(c: &QuantumCircuit) -> Result<QuantumCircuit> {
    let mut gates = Vec::with_capacity(c.gates.len());
    for g in c.gates.iter().rev() {
        gates.push(g.inverse().ok_or(Error::Measurement)?);
    }
    Ok(QuantumCircuit { registers: c.registers, n_bits: c.n_bits, gates, global_phase: -c.global_phase })
}

pub fn count_gates(c: &QuantumCircuit) -> GateCounts {
    let mut k = GateCounts::default();
    for g in &c.gates {
        use GateKind::*;
        match g {
            H(_) => k.h += 1,
            X(_) => k.x += 1,
            Z(_) => k.z += 1,
            S(_) | Sdg(_) => k.s += 1,
            T(_) | Tdg(_) => k.t += 1,
            Cnot { .. } => k.cnot += 1,
            Cz { .. } => k.cz += 1,
            Rz { .. } => k.rz += 1,
            Ry { .. } => k.ry += 1,
            MeasureToBit { .. } => k.measure += 1,
            ClassicallyControlledCz { .. } => k.conditioned_cz += 1,
            Reset(_) => k.reset += 1,
        }
    }
    k
}

/// Columns of the circuit unitary (including its global phase) for the
/// given input basis states.
pub fn unitary_columns(c: &QuantumCircuit, inputs: &[usize]) -> Result<CMat> {
    let n = c.n_qubits();
    if n > UNITARY_QUBIT_LIMIT {
        return Err(Error::CircuitTooLarge { qubits: n, limit: UNITARY_QUBIT_LIMIT });
    }
    if c.has_measurements() {
        return Err(Error::Measurement);
    }
    let dim = 1usize << n;
    let ph = cis(c.global_phase);
    let mut out = CMat::zeros(dim, inputs.len());
    let mut v = alloc::vec![C64::new(0.0, 0.0); dim];
    for (col, &inp) in inputs.iter().enumerate() {
        if inp >= dim {
            return Err(Error::InvalidArgument(format!("input {inp} out of range")));
        }
        v.iter_mut().for_each(|z| *z = C64::new(0.0, 0.0));
        v[inp] = ph;
        for g in &c.gates {
            kernels::apply_unitary(&mut v, g);
        }
        for (r, z) in v.iter().enumerate() {
            out[(r, col)] = *z;
        }
    }
    Ok(out)
}

pub fn unitary_of(c: &QuantumCircuit) -> Result<CMat> {
    let n = c.n_qubits();
    if n > UNITARY_QUBIT_LIMIT {
        return Err(Error::CircuitTooLarge { qubits: n, limit: UNITARY_QUBIT_LIMIT });
    }
    let inputs: Vec<usize> = (0..1usize << n).collect();
    unitary_columns(c, &inputs)
}

/// Block of the unitary with all non-system qubits in |0⟩ on input and
/// output.
pub fn system_block(c: &QuantumCircuit) -> Result<CMat> {
    let ns = c.registers.system;
    let inputs: Vec<usize> = (0..1usize << ns).collect();
    let cols = unitary_columns(c, &inputs)?;
    Ok(cols.rows(0, 1 << ns).into_owned())
}
