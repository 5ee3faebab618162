//! Pairwise contact potential for A particles in first quantization on an
//! N-site coordinate lattice, log2(N) qubits per particle.

use super::{append_mcu, Evolution, PhaseLedger, PotentialVariant};
use crate::circuit::{CircuitBuilder, Registers};
use crate::linalg::{c, CMat};
use crate::{Error, Result};
use alloc::format;
use alloc::vec::Vec;

fn check(a: usize, n: usize) -> Result<usize> {
    if a < 2 {
        return Err(Error::InvalidArgument(format!("need at least 2 particles, got {a}")));
    }
    if n < 2 || !n.is_power_of_two() {
        return Err(Error::InvalidArgument(format!("sites per particle must be a power of two ≥ 2, got {n}")));
    }
    let m = n.trailing_zeros() as usize;
    if a * m > 24 {
        return Err(Error::InvalidArgument(format!("{} qubits is too many", a * m)));
    }
    Ok(m)
}

/// Diagonal of V = Σ_{i<j} v0·δ(x_i, x_j); particle i occupies bits i·m..(i+1)·m.
pub fn many_body_potential_matrix(a: usize, n: usize, v0: f64) -> Result<CMat> {
    let m = check(a, n)?;
    let dim = 1usize << (a * m);
    let mask = n - 1;
    Ok(CMat::from_fn(dim, dim, |r, col| {
        if r != col {
            return c(0.0, 0.0);
        }
        let mut v = 0.0;
        for i in 0..a {
            for j in i + 1..a {
                if (r >> (i * m)) & mask == (r >> (j * m)) & mask {
                    v += v0;
                }
            }
        }
        c(v, 0.0)
    }))
}

/// exp(-iV dt) as C(A,2) pair blocks: x_j ⊕= x_i, a phase on x_j = 0, undo.
pub fn many_body_potential_evolution(a: usize, n: usize, v0: f64, dt: f64, variant: PotentialVariant) -> Result<Evolution> {
    let m = check(a, n)?;
    if !variant.is_mcu() {
        return Err(Error::InvalidArgument("the pair blocks use a multi-controlled variant".into()));
    }
    let na = m.saturating_sub(2);
    let regs = Registers::new(a * m, na, 0);
    let anc: Vec<usize> = (0..na).map(|i| regs.aux_qubit(i)).collect();
    let mut b = CircuitBuilder::new(regs);
    let theta = v0 * dt;
    let mut ledger = PhaseLedger::default();
    for i in 0..a {
        for j in i + 1..a {
            let bi: Vec<usize> = (0..m).map(|k| i * m + k).collect();
            let bj: Vec<usize> = (0..m).map(|k| j * m + k).collect();
            for k in 0..m {
                b.cnot(bi[k], bj[k]);
            }
            for &q in &bj[1..] {
                b.x(q);
            }
            ledger.add(-append_mcu(&mut b, &bj[1..], bj[0], &anc, theta, variant)?);
            ledger.mcu_blocks += 1;
            for &q in &bj[1..] {
                b.x(q);
            }
            for k in 0..m {
                b.cnot(bi[k], bj[k]);
            }
        }
    }
    Ok(Evolution { circuit: b.build(), ledger })
}
