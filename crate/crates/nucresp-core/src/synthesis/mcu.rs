//! Potential evolution through a multi-controlled phase, and the Gray-code
//! alternative.
//!
//! The contact potential is V0·|s⟩⟨s| with |s⟩ = H^{⊗n}|0⟩, so
//! exp(-iV dt) = H^{⊗n} X^{⊗(n-1)} c^{n-1}U X^{⊗(n-1)} H^{⊗n} with
//! U = diag(e^{-iθ}, 1) on qubit 0 and θ = V0·dt.

use super::{append_diagonal, Evolution, Layout, PhaseLedger, PotentialVariant};
use crate::circuit::{CircuitBuilder, QuantumCircuit, Registers};
use crate::linalg::c;
use crate::pauli::PauliTerm;
use crate::{Error, Result};
use alloc::format;
use alloc::vec::Vec;

/// Toffoli up to diagonal phases, 4 T gates; its own inverse.
/// On |1,1,0⟩ it produces i|1,1,1⟩.
pub fn append_relative_phase_toffoli(b: &mut CircuitBuilder, a: usize, bq: usize, t: usize) {
    b.h(t).t(t).cnot(bq, t).tdg(t).cnot(a, t).t(t).cnot(bq, t).tdg(t).h(t);
}

/// Controls on qubits 0 and 1, target qubit 2.
pub fn relative_phase_toffoli() -> QuantumCircuit {
    let mut b = CircuitBuilder::new(Registers::new(3, 0, 0));
    append_relative_phase_toffoli(&mut b, 0, 1, 2);
    b.build()
}

/// t ← a∧b for an ancilla t in |0⟩.
pub fn append_logical_and(b: &mut CircuitBuilder, a: usize, bq: usize, t: usize) {
    append_relative_phase_toffoli(b, a, bq, t);
    b.sdg(t);
}

/// Measurement-based uncomputation of t = a∧b; t ends in |0⟩.
pub fn append_uncompute_and(b: &mut CircuitBuilder, a: usize, bq: usize, t: usize) {
    b.h(t);
    let bit = b.new_bit();
    b.measure(t, bit).cond_cz(bit, a, bq).reset(t);
}

/// Controlled U = diag(e^{-iθ}, 1) with 3 rotations and 2 CNOTs; the
/// circuit equals e^{iθ/4}·cU.
pub fn append_controlled_phase_cu(b: &mut CircuitBuilder, control: usize, target: usize, theta: f64) {
    b.cnot(control, target).rz(-theta / 2.0, target).cnot(control, target).rz(theta / 2.0, target).rz(-theta / 2.0, control);
}

/// Control qubit 1, target qubit 0.
pub fn controlled_phase_cu(theta: f64) -> QuantumCircuit {
    let mut b = CircuitBuilder::new(Registers::new(2, 0, 0));
    append_controlled_phase_cu(&mut b, 1, 0, theta);
    b.build()
}

/// c^k U on `target` with the given controls. Returns γ with
/// circuit = e^{iγ}·c^kU. Ancillas must be |0⟩ and are returned to |0⟩.
pub fn append_mcu(b: &mut CircuitBuilder, controls: &[usize], target: usize, ancillas: &[usize], theta: f64, variant: PotentialVariant) -> Result<f64> {
    match controls.len() {
        0 => {
            b.rz(theta, target);
            return Ok(theta / 2.0);
        }
        1 => {
            append_controlled_phase_cu(b, controls[0], target, theta);
            return Ok(theta / 4.0);
        }
        _ => {}
    }
    let k = controls.len();
    if ancillas.len() < k - 1 {
        return Err(Error::InvalidArgument(format!("{k} controls need {} ancillas, got {}", k - 1, ancillas.len())));
    }
    let ff = match variant {
        PotentialVariant::McuFeedforward => true,
        PotentialVariant::McuLadder => false,
        PotentialVariant::GrayCode => return Err(Error::InvalidArgument("gray_code is not a multi-controlled variant".into())),
    };
    // chain: anc[0] = c0∧c1, anc[i] = anc[i-1]∧c[i+1]
    let pairs: Vec<(usize, usize, usize)> = (0..k - 1).map(|i| if i == 0 { (controls[0], controls[1], ancillas[0]) } else { (ancillas[i - 1], controls[i + 1], ancillas[i]) }).collect();
    for &(x, y, t) in &pairs {
        if ff {
            append_logical_and(b, x, y, t);
        } else {
            append_relative_phase_toffoli(b, x, y, t);
        }
    }
    append_controlled_phase_cu(b, ancillas[k - 2], target, theta);
    for &(x, y, t) in pairs.iter().rev() {
        if ff {
            append_uncompute_and(b, x, y, t);
        } else {
            append_relative_phase_toffoli(b, x, y, t);
        }
    }
    Ok(theta / 4.0)
}

/// Appends exp(-iV dt) on `layout.system`; returns the ledger phase φ with
/// circuit·e^{iφ} = exp(-iV dt).
pub fn append_potential(b: &mut CircuitBuilder, layout: &Layout, v0: f64, dt: f64, variant: PotentialVariant) -> Result<f64> {
    layout.check(variant)?;
    let sys = &layout.system;
    let n = sys.len();
    let theta = v0 * dt;
    for &q in sys {
        b.h(q);
    }
    let phi = if variant.is_mcu() {
        for &q in &sys[1..] {
            b.x(q);
        }
        let g = append_mcu(b, &sys[1..], sys[0], &layout.mcu_ancillas, theta, variant)?;
        for &q in &sys[1..] {
            b.x(q);
        }
        -g
    } else {
        let cf = v0 / (1u64 << n) as f64;
        let terms: Vec<PauliTerm> = (0..1u64 << n).map(|z| PauliTerm::new(0, z, c(cf, 0.0))).collect();
        append_diagonal(b, &terms, sys, dt)?
    };
    for &q in sys {
        b.h(q);
    }
    Ok(phi)
}

/// exp(-iV dt) with θ = V0·dt on `nq` system qubits; mcu variants use an
/// aux register of nq-2 qubits.
pub fn potential_evolution(nq: usize, theta: f64, variant: PotentialVariant) -> Result<Evolution> {
    potential_evolution_v0(nq, theta, 1.0, variant)
}

fn potential_evolution_v0(nq: usize, theta: f64, dt_unit: f64, variant: PotentialVariant) -> Result<Evolution> {
    if nq == 0 {
        return Err(Error::InvalidArgument("no system qubits".into()));
    }
    let layout = Layout::new(nq, variant, false, 0);
    let mut b = CircuitBuilder::new(layout.registers);
    let phase = append_potential(&mut b, &layout, theta / dt_unit, dt_unit, variant)?;
    let ledger = PhaseLedger { phase, mcu_blocks: usize::from(variant.is_mcu()), ..Default::default() };
    Ok(Evolution { circuit: b.build(), ledger })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::circuit::{system_block, unitary_of};
    use crate::linalg::{cis, expm_hermitian, max_abs_diff, CMat};

    fn potential_matrix(nq: usize, theta: f64) -> CMat {
        let n = 1 << nq;
        CMat::from_element(n, n, c(theta / n as f64, 0.0))
    }

    #[test]
    fn toffoli_phases() {
        let u = unitary_of(&relative_phase_toffoli()).unwrap();
        assert!(max_abs_diff(&(&u * &u), &CMat::identity(8, 8)) < 1e-14);
        for inp in 0..8usize {
            let (a, bb, t) = (inp & 1, (inp >> 1) & 1, inp >> 2);
            let out = inp ^ ((a & bb) << 2);
            assert!((u[(out, inp)].norm() - 1.0).abs() < 1e-14, "{inp}");
            let _ = t;
        }
        assert!((u[(7, 3)] - c(0.0, 1.0)).norm() < 1e-14);
        assert!((u[(0, 0)] - c(1.0, 0.0)).norm() < 1e-14);
    }

    #[test]
    fn cu_phase() {
        let th = core::f64::consts::PI / 3.0;
        let u = unitary_of(&controlled_phase_cu(th)).unwrap();
        // control is qubit 1, target qubit 0: U on |target=0, control=1⟩ = index 2
        let mut cu = CMat::identity(4, 4);
        cu[(2, 2)] = cis(-th);
        let want = cu * cis(th / 4.0);
        assert!(max_abs_diff(&u, &want) < 1e-14);
        let k = controlled_phase_cu(th).count_gates();
        assert_eq!((k.rz, k.cnot), (3, 2));
        assert!(max_abs_diff(&unitary_of(&controlled_phase_cu(0.0)).unwrap(), &CMat::identity(4, 4)) < 1e-15);
    }

    #[test]
    fn feedforward_counts() {
        for nq in 3..=12usize {
            let k = potential_evolution(nq, 0.3, PotentialVariant::McuFeedforward).unwrap().circuit.count_gates();
            assert_eq!(k.h, 5 * nq - 6);
            assert_eq!(k.x, 2 * (nq - 1));
            assert_eq!(k.s, nq - 2);
            assert_eq!(k.t, 4 * (nq - 2));
            assert_eq!(k.cnot, 3 * nq - 4);
            assert_eq!(k.measure, nq - 2);
            assert_eq!(k.conditioned_cz, nq - 2);
            assert_eq!(k.rz, 3);
        }
        let k = potential_evolution(9, 0.3, PotentialVariant::McuFeedforward).unwrap().circuit.count_gates();
        assert_eq!((k.cnot, k.conditioned_cz, k.t, k.rz, k.h, k.x, k.s), (23, 7, 28, 3, 39, 16, 7));
    }

    #[test]
    fn ladder_roughly_doubles() {
        for nq in 3..=12usize {
            let f = potential_evolution(nq, 0.3, PotentialVariant::McuFeedforward).unwrap().circuit.count_gates();
            let l = potential_evolution(nq, 0.3, PotentialVariant::McuLadder).unwrap().circuit.count_gates();
            assert_eq!(l.t, 2 * f.t);
            assert_eq!(l.cnot, 2 * f.cnot - 2);
            assert_eq!(l.rz, 3);
        }
    }

    #[test]
    fn gray_counts() {
        for (nq, cn, rz) in [(9, 510, 511), (12, 4094, 4095)] {
            let k = potential_evolution(nq, 0.3, PotentialVariant::GrayCode).unwrap().circuit.count_gates();
            assert_eq!((k.cnot, k.rz), (cn, rz));
        }
    }

    #[test]
    fn potential_unitaries() {
        let th = -0.37;
        for nq in 1..=6usize {
            let target = expm_hermitian(&potential_matrix(nq, th), 1.0).unwrap();
            for v in [PotentialVariant::GrayCode, PotentialVariant::McuLadder] {
                let e = potential_evolution(nq, th, v).unwrap();
                let u = system_block(&e.exact_circuit()).unwrap();
                assert!(max_abs_diff(&u, &target) < 1e-10, "{nq} {v:?}");
                if v.is_mcu() {
                    assert!((e.ledger.phase + if nq == 1 { th / 2.0 } else { th / 4.0 }).abs() < 1e-15);
                }
            }
        }
    }

    #[test]
    fn ladder_returns_ancillas() {
        let e = potential_evolution(5, 0.8, PotentialVariant::McuLadder).unwrap();
        let cols = crate::circuit::unitary_columns(&e.circuit, &(0..32).collect::<Vec<_>>()).unwrap();
        for col in 0..32 {
            let leak: f64 = (32..cols.nrows()).map(|r| cols[(r, col)].norm_sqr()).sum();
            assert!(leak < 1e-24);
        }
    }

    #[test]
    fn feedforward_channel() {
        use crate::simulator::{final_state, StateVector};
        let (nq, th) = (5usize, 0.9);
        let e = potential_evolution(nq, th, PotentialVariant::McuFeedforward).unwrap();
        let dim = 1usize << nq;
        let amps: Vec<crate::C64> = (0..dim).map(|i| c((i as f64 * 0.7).cos(), (i as f64 * 0.3).sin()) / 4.0).collect();
        let nrm = crate::linalg::norm(&amps);
        let amps: Vec<crate::C64> = amps.iter().map(|z| z / nrm).collect();
        let want = crate::linalg::mat_vec(&expm_hermitian(&potential_matrix(nq, th), 1.0).unwrap(), &amps);
        let init = StateVector::embed_system(e.circuit.registers(), &amps).unwrap();
        for seed in 0..8 {
            let out = final_state(&e.circuit, &init, seed).unwrap();
            let ph = cis(e.ledger.phase);
            for i in 0..dim {
                assert!((out.amplitudes[i] * ph - want[i]).norm() < 1e-12);
            }
            assert!(out.amplitudes[dim..].iter().all(|z| z.norm() < 1e-12));
        }
    }

    #[test]
    fn zero_angle_identity() {
        let e = potential_evolution(4, 0.0, PotentialVariant::McuLadder).unwrap();
        assert_eq!(e.ledger.phase, 0.0);
        assert!(max_abs_diff(&system_block(&e.circuit).unwrap(), &CMat::identity(16, 16)) < 1e-14);
    }
}
