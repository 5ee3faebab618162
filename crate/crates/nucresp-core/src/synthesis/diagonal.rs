//! CNOT-ladder evolution of diagonal Pauli sums in Gray-code order.

use super::{Evolution, PhaseLedger};
use crate::circuit::{CircuitBuilder, Registers};
use crate::pauli::{gray_rank, PauliSum, PauliTerm};
use crate::{Error, Result};
use alloc::vec::Vec;

fn emit_parity_moves(b: &mut CircuitBuilder, qubits: &[usize], diff: u64, target: usize) {
    let mut d = diff;
    while d != 0 {
        let j = d.trailing_zeros() as usize;
        b.cnot(qubits[j], target);
        d &= d - 1;
    }
}

fn check_masks(terms: &[PauliTerm], width: usize) -> Result<()> {
    for t in terms {
        if !t.is_diagonal() {
            return Err(Error::NotDiagonal);
        }
        if width < 64 && t.z >> width != 0 {
            return Err(Error::InvalidArgument("term acts outside the given qubits".into()));
        }
    }
    Ok(())
}

/// Appends exp(-i Σ c_m Z^m dt) where bit j of a mask refers to
/// `qubits[j]`. Each group of masks sharing a highest bit is laid out along
/// the Gray sequence, so neighbouring rotations are one CNOT apart. Returns
/// the phase of the identity term.
pub fn append_diagonal(b: &mut CircuitBuilder, terms: &[PauliTerm], qubits: &[usize], dt: f64) -> Result<f64> {
    check_masks(terms, qubits.len())?;
    let mut phase = 0.0;
    let mut sorted: Vec<&PauliTerm> = Vec::with_capacity(terms.len());
    for t in terms {
        if t.is_identity() {
            phase -= t.coeff.re * dt;
        } else {
            sorted.push(t);
        }
    }
    sorted.sort_by_key(|t| gray_rank(t.z));
    let mut i = 0;
    while i < sorted.len() {
        let hb = 63 - sorted[i].z.leading_zeros() as usize;
        let target = qubits[hb];
        let mut p = 0u64;
        while i < sorted.len() && 63 - sorted[i].z.leading_zeros() as usize == hb {
            let lower = sorted[i].z & !(1u64 << hb);
            emit_parity_moves(b, qubits, p ^ lower, target);
            p = lower;
            b.rz(2.0 * sorted[i].coeff.re * dt, target);
            i += 1;
        }
        emit_parity_moves(b, qubits, p, target);
    }
    Ok(phase)
}

/// Like [`append_diagonal`] but every mask contains bit `tbit`, whose qubit
/// serves as the single target.
pub(crate) fn append_diagonal_on(b: &mut CircuitBuilder, terms: &[PauliTerm], qubits: &[usize], tbit: usize, dt: f64) -> Result<()> {
    check_masks(terms, qubits.len())?;
    let bit = 1u64 << tbit;
    if terms.iter().any(|t| t.z & bit == 0) {
        return Err(Error::InvalidArgument("every mask must contain the target".into()));
    }
    let mut sorted: Vec<&PauliTerm> = terms.iter().collect();
    sorted.sort_by_key(|t| gray_rank(t.z & !bit));
    let target = qubits[tbit];
    let mut p = 0u64;
    for t in sorted {
        let lower = t.z & !bit;
        emit_parity_moves(b, qubits, p ^ lower, target);
        p = lower;
        b.rz(2.0 * t.coeff.re * dt, target);
    }
    emit_parity_moves(b, qubits, p, target);
    Ok(())
}

/// Appends exp(-i Σ c_m Z^m ⊗ Z_a dt): every parity is accumulated on the
/// ancilla and the identity term becomes a plain rotation of the ancilla.
pub fn append_coupled_diagonal(b: &mut CircuitBuilder, terms: &[PauliTerm], qubits: &[usize], ancilla: usize, dt: f64) -> Result<()> {
    check_masks(terms, qubits.len())?;
    let mut sorted: Vec<&PauliTerm> = terms.iter().collect();
    sorted.sort_by_key(|t| gray_rank(t.z));
    let mut p = 0u64;
    for t in sorted {
        emit_parity_moves(b, qubits, p ^ t.z, ancilla);
        p = t.z;
        b.rz(2.0 * t.coeff.re * dt, ancilla);
    }
    emit_parity_moves(b, qubits, p, ancilla);
    Ok(())
}

/// exp(-i D dt) for a diagonal sum on its own register.
pub fn gray_code_diagonal_evolution(diag_terms: &PauliSum, dt: f64) -> Result<Evolution> {
    if !diag_terms.is_diagonal() {
        return Err(Error::NotDiagonal);
    }
    let n = diag_terms.n_qubits;
    let mut b = CircuitBuilder::new(Registers::new(n, 0, 0));
    let q: Vec<usize> = (0..n).collect();
    let phase = append_diagonal(&mut b, &diag_terms.terms, &q, dt)?;
    Ok(Evolution { circuit: b.build(), ledger: PhaseLedger { phase, ..Default::default() } })
}
