//! Product of exponentials for non-diagonal Pauli sums, one basis change per
//! group of qubit-wise compatible strings.

use super::{append_diagonal, append_diagonal_on};
use crate::circuit::{CircuitBuilder, Registers};
use crate::linalg::c;
use crate::pauli::{PauliSum, PauliTerm};
use crate::{Error, Result};
use alloc::format;
use alloc::vec::Vec;

/// Letter of qubit j in a term: 0 = I, 1 = X, 2 = Y, 3 = Z.
fn letter(t: &PauliTerm, j: usize) -> u8 {
    match ((t.x >> j) & 1, (t.z >> j) & 1) {
        (0, 0) => 0,
        (1, 0) => 1,
        (1, 1) => 2,
        _ => 3,
    }
}

fn compatible(group: &[PauliTerm], t: &PauliTerm, n: usize) -> bool {
    group.iter().all(|g| (0..n).all(|j| {
        let (a, b) = (letter(g, j), letter(t, j));
        a == 0 || b == 0 || a == b
    }))
}

/// First-fit grouping in the given order; identity terms are dropped.
pub fn group_by_basis(terms: &[PauliTerm], n_qubits: usize) -> Vec<Vec<PauliTerm>> {
    let mut groups: Vec<Vec<PauliTerm>> = Vec::new();
    for t in terms.iter().filter(|t| !t.is_identity()) {
        match groups.iter_mut().find(|g| compatible(g, t, n_qubits)) {
            Some(g) => g.push(*t),
            None => groups.push(alloc::vec![*t]),
        }
    }
    groups
}

fn append_group(b: &mut CircuitBuilder, group: &[PauliTerm], qubits: &[usize], dt: f64) -> Result<()> {
    let n = qubits.len();
    let letters: Vec<u8> = (0..n).map(|j| group.iter().map(|t| letter(t, j)).max().unwrap_or(0)).collect();
    for (j, &l) in letters.iter().enumerate() {
        match l {
            1 => {
                b.h(qubits[j]);
            }
            2 => {
                b.sdg(qubits[j]).h(qubits[j]);
            }
            _ => {}
        }
    }
    let diag: Vec<PauliTerm> = group
        .iter()
        .map(|t| {
            let cf = t.coeff;
            if cf.im.abs() > 1e-12 * cf.norm().max(1.0) {
                return Err(Error::NotHermitian(cf.im.abs()));
            }
            Ok(PauliTerm::new(0, t.x | t.z, c(cf.re, 0.0)))
        })
        .collect::<Result<_>>()?;
    let common = diag.iter().fold(u64::MAX, |a, t| a & t.z);
    if common != 0 && diag.len() > 1 {
        append_diagonal_on(b, &diag, qubits, common.trailing_zeros() as usize, dt)?;
    } else {
        append_diagonal(b, &diag, qubits, dt)?;
    }
    for (j, &l) in letters.iter().enumerate() {
        match l {
            1 => {
                b.h(qubits[j]);
            }
            2 => {
                b.h(qubits[j]).s(qubits[j]);
            }
            _ => {}
        }
    }
    Ok(())
}

/// Appends Π_groups exp(-i Σ_{P∈group} c_P P dt) in group order and returns
/// the phase of the identity term.
pub fn append_pauli_rotations(b: &mut CircuitBuilder, sum: &PauliSum, order: &[PauliTerm], qubits: &[usize], dt: f64) -> Result<f64> {
    if qubits.len() != sum.n_qubits {
        return Err(Error::Dimension(format!("{} qubits for a {}-qubit sum", qubits.len(), sum.n_qubits)));
    }
    for g in group_by_basis(order, sum.n_qubits) {
        append_group(b, &g, qubits, dt)?;
    }
    Ok(-sum.identity_coefficient().re * dt)
}

/// CNOTs used by one application of the grouped product.
pub fn cnot_cost(sum: &PauliSum, order: &[PauliTerm]) -> Result<usize> {
    let n = sum.n_qubits;
    let mut b = CircuitBuilder::new(Registers::new(n, 0, 0));
    let q: Vec<usize> = (0..n).collect();
    append_pauli_rotations(&mut b, sum, order, &q, 1.0)?;
    Ok(b.build().count_gates().cnot)
}
