//! Kinetic-energy evolution: three disconnected per-axis blocks.

use super::{append_diagonal, Evolution, PhaseLedger};
use crate::circuit::{CircuitBuilder, Registers};
use crate::lattice::{build_hamiltonian, LatticeConfig};
use crate::pauli::{map_diagonal, PauliSum};
use crate::{Error, Result};
use alloc::format;
use alloc::vec::Vec;

/// {I, Z} expansion of the kinetic diagonal.
pub fn kinetic_terms(config: &LatticeConfig) -> Result<PauliSum> {
    let h = build_hamiltonian(config)?;
    map_diagonal(&h.kinetic_diagonal)
}

fn check_template(config: &LatticeConfig, s: &PauliSum) -> Result<()> {
    let [qx, qy, qz] = config.axis_qubits();
    let blocks = [(0, qz), (qz, qy), (qz + qy, qx)];
    for t in &s.terms {
        if t.is_identity() {
            continue;
        }
        let inside = blocks.iter().any(|&(o, w)| t.z & !(((1u64 << w) - 1) << o) == 0);
        if !inside || t.z.count_ones() > 2 {
            return Err(Error::InvalidArgument(format!("kinetic term {} does not fit the per-axis template", t.axes(s.n_qubits))));
        }
    }
    Ok(())
}

/// exp(-i T dt) with rotation angles 2φ_j dt; the identity coefficient goes
/// to the ledger.
pub fn kinetic_evolution(dt: f64, config: &LatticeConfig) -> Result<Evolution> {
    let s = kinetic_terms(config)?;
    check_template(config, &s)?;
    let n = config.n_qubits();
    let mut b = CircuitBuilder::new(Registers::new(n, 0, 0));
    let q: Vec<usize> = (0..n).collect();
    let phase = append_diagonal(&mut b, &s.terms, &q, dt)?;
    Ok(Evolution { circuit: b.build(), ledger: PhaseLedger { phase, ..Default::default() } })
}
