//! Hamming-weight phasing: n equal RZ(θ) rotations become one rotation per
//! bit of the Hamming weight, which is computed into an adder tree.

use super::{append_logical_and, append_uncompute_and};
use crate::circuit::{CircuitBuilder, QuantumCircuit, Registers};
use crate::{Error, Result};
use alloc::format;
use alloc::vec::Vec;

#[derive(Debug, Clone, PartialEq)]
pub struct HwpReport {
    pub n: usize,
    pub rotations: usize,
    pub t_gates: usize,
    pub ancillas: usize,
    /// ⌊log2 n + 1⌋
    pub rotation_formula: usize,
    /// 4n - 4
    pub t_bound: usize,
    /// n - 1
    pub ancilla_bound: usize,
}

#[derive(Debug, Clone, Copy)]
enum Adder {
    /// inputs a, b, c; sum left in c, carry in t
    Full { a: usize, b: usize, c: usize, t: usize },
    /// sum left in b, carry in t
    Half { a: usize, b: usize, t: usize },
}

fn compute(b: &mut CircuitBuilder, ad: Adder) {
    match ad {
        Adder::Full { a, b: bb, c, t } => {
            b.cnot(a, bb).cnot(a, c);
            append_logical_and(b, bb, c, t);
            b.cnot(a, t).cnot(bb, c).cnot(a, c);
        }
        Adder::Half { a, b: bb, t } => {
            append_logical_and(b, a, bb, t);
            b.cnot(a, bb);
        }
    }
}

fn uncompute(b: &mut CircuitBuilder, ad: Adder) {
    match ad {
        Adder::Full { a, b: bb, c, t } => {
            b.cnot(a, c).cnot(bb, c).cnot(a, t);
            append_uncompute_and(b, bb, c, t);
            b.cnot(a, c).cnot(a, bb);
        }
        Adder::Half { a, b: bb, t } => {
            b.cnot(a, bb);
            append_uncompute_and(b, a, bb, t);
        }
    }
}

fn plan(n: usize) -> (Vec<Adder>, Vec<usize>) {
    let mut adders = Vec::new();
    let mut next = n;
    let mut class: Vec<usize> = (0..n).collect();
    let mut weight_bits = Vec::new();
    while !class.is_empty() {
        let mut carries = Vec::new();
        while class.len() >= 2 {
            let t = next;
            next += 1;
            if class.len() >= 3 {
                let (a, bb, c) = (class.remove(0), class.remove(0), class.remove(0));
                adders.push(Adder::Full { a, b: bb, c, t });
                class.push(c);
            } else {
                let (a, bb) = (class.remove(0), class.remove(0));
                adders.push(Adder::Half { a, b: bb, t });
                class.push(bb);
            }
            carries.push(t);
        }
        weight_bits.push(class[0]);
        class = carries;
    }
    (adders, weight_bits)
}

/// Circuit equal to Π_i RZ(θ) on qubits 0..n (ancillas start and end in
/// |0⟩; the global phase is recorded on the circuit).
pub fn hamming_weight_phasing(n: usize, theta: f64) -> Result<(QuantumCircuit, HwpReport)> {
    if n < 2 {
        return Err(Error::InvalidArgument(format!("phasing needs at least 2 rotations, got {n}")));
    }
    let (adders, weight_bits) = plan(n);
    let mut b = CircuitBuilder::new(Registers::new(n, adders.len(), 0));
    for &ad in &adders {
        compute(&mut b, ad);
    }
    let mut phase = -theta * n as f64 / 2.0;
    for (k, &q) in weight_bits.iter().enumerate() {
        let lam = theta * (1u64 << k) as f64;
        b.rz(lam, q);
        phase += lam / 2.0;
    }
    for &ad in adders.iter().rev() {
        uncompute(&mut b, ad);
    }
    b.add_phase(phase);
    let c = b.build();
    let k = c.count_gates();
    let report = HwpReport {
        n,
        rotations: k.rz,
        t_gates: k.t,
        ancillas: adders.len(),
        rotation_formula: (usize::BITS - n.leading_zeros()) as usize,
        t_bound: 4 * n - 4,
        ancilla_bound: n - 1,
    };
    Ok((c, report))
}
