//! Trotter steps, ancilla-coupled (⊗Y_a) steps and directional control.

use super::{append_coupled_diagonal, append_diagonal, append_potential, Evolution, Layout, Model, OperatorOrder, PhaseLedger, PotentialVariant, TrotterConfig};
use crate::circuit::{CircuitBuilder, GateKind, QuantumCircuit};
use crate::linalg::c;
use crate::pauli::{map_diagonal, PauliSum, PauliTerm};
use crate::{Error, Result};
use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

/// One exponential in a product formula; the value is the fraction of dt.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum StepBlock {
    Kinetic(f64),
    Potential(f64),
}

/// Operator placed on the system register in exp(-i O⊗Y_a dt).
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum CoupledOperator {
    /// T + shift·I
    Kinetic { shift: f64 },
    Potential,
}

/// Product-formula blocks grouped by step, in time order. Second-order
/// formulas merge adjacent half steps; the trailing half step belongs to the
/// last group.
pub fn step_groups(order: OperatorOrder, steps: usize) -> Vec<Vec<StepBlock>> {
    use StepBlock::*;
    let mut out = Vec::with_capacity(steps);
    for i in 0..steps {
        let first = i == 0;
        let g = match order {
            OperatorOrder::VThenT => vec![Kinetic(1.0), Potential(1.0)],
            OperatorOrder::TThenV => vec![Potential(1.0), Kinetic(1.0)],
            OperatorOrder::TVT => vec![Kinetic(if first { 0.5 } else { 1.0 }), Potential(1.0)],
            OperatorOrder::VTV => vec![Potential(if first { 0.5 } else { 1.0 }), Kinetic(1.0)],
        };
        out.push(g);
    }
    if let Some(last) = out.last_mut() {
        match order {
            OperatorOrder::TVT => last.push(Kinetic(0.5)),
            OperatorOrder::VTV => last.push(Potential(0.5)),
            _ => {}
        }
    }
    out
}

struct Blocks<'a> {
    model: &'a Model,
    layout: &'a Layout,
    variant: PotentialVariant,
    kinetic: PauliSum,
}

impl<'a> Blocks<'a> {
    fn new(model: &'a Model, layout: &'a Layout, variant: PotentialVariant) -> Result<Self> {
        if layout.n_system() != model.n_qubits() {
            return Err(Error::Dimension(format!("layout has {} system qubits, model needs {}", layout.n_system(), model.n_qubits())));
        }
        layout.check(variant)?;
        Ok(Blocks { model, layout, variant, kinetic: map_diagonal(&model.kinetic)? })
    }

    fn append(&self, b: &mut CircuitBuilder, blk: StepBlock, dt: f64, ledger: &mut PhaseLedger) -> Result<()> {
        match blk {
            StepBlock::Kinetic(f) => {
                ledger.add(append_diagonal(b, &self.kinetic.terms, &self.layout.system, f * dt)?);
            }
            StepBlock::Potential(f) => {
                let phi = append_potential(b, self.layout, self.model.v0(), f * dt, self.variant)?;
                ledger.add(phi);
                if self.variant.is_mcu() {
                    // the e^{iθ/4} of the controlled phase is carried by the
                    // kinetic constant
                    ledger.kinetic_shift_applied = true;
                    ledger.mcu_blocks += 1;
                }
            }
        }
        Ok(())
    }

    fn coupled_kinetic_terms(&self, shift: f64) -> Vec<PauliTerm> {
        let mut t = self.kinetic.shift(shift).terms;
        if !t.iter().any(|x| x.is_identity()) {
            t.push(PauliTerm::new(0, 0, c(shift, 0.0)));
        }
        t
    }

    fn append_coupled(&self, b: &mut CircuitBuilder, op: CoupledOperator, dt: f64) -> Result<()> {
        let a = self.layout.coupling.ok_or_else(|| Error::InvalidArgument("layout has no coupling ancilla".into()))?;
        b.sdg(a).h(a);
        match op {
            CoupledOperator::Kinetic { shift } => {
                append_coupled_diagonal(b, &self.coupled_kinetic_terms(shift), &self.layout.system, a, dt)?;
            }
            CoupledOperator::Potential => {
                let sys = &self.layout.system;
                if self.variant.is_mcu() {
                    let mut inner = CircuitBuilder::new(self.layout.registers);
                    append_potential(&mut inner, self.layout, self.model.v0(), dt, self.variant)?;
                    b.append(&sandwich_rotations(&inner.build(), a)?)?;
                } else {
                    let cf = self.model.v0() / (1u64 << sys.len()) as f64;
                    let terms: Vec<PauliTerm> = (0..1u64 << sys.len()).map(|z| PauliTerm::new(0, z, c(cf, 0.0))).collect();
                    for &q in sys {
                        b.h(q);
                    }
                    append_coupled_diagonal(b, &terms, sys, a, dt)?;
                    for &q in sys {
                        b.h(q);
                    }
                }
            }
        }
        b.h(a).s(a);
        Ok(())
    }
}

/// Every RZ gets a CNOT from `control` on both sides, so its angle flips
/// when the control is |1⟩.
pub fn sandwich_rotations(circuit: &QuantumCircuit, control: usize) -> Result<QuantumCircuit> {
    let mut b = CircuitBuilder::new(circuit.registers());
    b.add_bits(circuit.n_bits());
    b.add_phase(circuit.global_phase());
    for g in circuit.gates() {
        if let GateKind::Rz { target, .. } = *g {
            if target == control {
                return Err(Error::InvalidArgument(format!("rotation on the control qubit {control}")));
            }
            b.push(GateKind::Cnot { control, target })?;
            b.push(*g)?;
            b.push(GateKind::Cnot { control, target })?;
        } else {
            if g.qubits().0[..g.qubits().1].contains(&control) {
                return Err(Error::InvalidArgument(format!("gate {} touches the control qubit", g.text())));
            }
            b.push(*g)?;
        }
    }
    Ok(b.build())
}

fn step_layout(model: &Model, variant: PotentialVariant) -> Layout {
    Layout::new(model.n_qubits(), variant, false, 0)
}

fn build_groups(model: &Model, layout: &Layout, variant: PotentialVariant, groups: &[Vec<StepBlock>], dt: f64) -> Result<Vec<Evolution>> {
    let blocks = Blocks::new(model, layout, variant)?;
    groups
        .iter()
        .map(|g| {
            let mut b = CircuitBuilder::new(layout.registers);
            let mut ledger = PhaseLedger::default();
            for &blk in g {
                blocks.append(&mut b, blk, dt, &mut ledger)?;
            }
            if variant.is_mcu() {
                ledger.kinetic_shifts += 1;
            }
            Ok(Evolution { circuit: b.build(), ledger })
        })
        .collect()
}

fn concat(layout: &Layout, parts: Vec<Evolution>) -> Result<Evolution> {
    let mut b = CircuitBuilder::new(layout.registers);
    let mut ledger = PhaseLedger::default();
    for p in parts {
        b.append(&p.circuit)?;
        ledger.merge(&p.ledger);
    }
    Ok(Evolution { circuit: b.build(), ledger })
}

/// A single (unmerged) step of the configured product formula.
pub fn trotter_step(model: &Model, config: &TrotterConfig, dt: f64) -> Result<Evolution> {
    config.validate()?;
    let layout = step_layout(model, config.potential_variant);
    let groups = step_groups(config.order, 1);
    let mut parts = build_groups(model, &layout, config.potential_variant, &groups, dt)?;
    Ok(parts.remove(0))
}

/// r steps with merged half steps for second order.
pub fn full_evolution(model: &Model, config: &TrotterConfig) -> Result<Evolution> {
    config.validate()?;
    let layout = step_layout(model, config.potential_variant);
    let parts = build_groups(model, &layout, config.potential_variant, &step_groups(config.order, config.steps), config.dt())?;
    concat(&layout, parts)
}

/// exp(-i O⊗Y_a dt) on a layout with a coupling ancilla. For the mcu
/// variants the potential circuit carries an extra e^{iθY_a/4}, θ = V0·dt,
/// which the kinetic shift of [`filter_evolution`] cancels.
pub fn axis_coupled_evolution(model: &Model, op: CoupledOperator, dt: f64, variant: PotentialVariant) -> Result<Evolution> {
    let layout = Layout::new(model.n_qubits(), variant, true, 0);
    let blocks = Blocks::new(model, &layout, variant)?;
    let mut b = CircuitBuilder::new(layout.registers);
    blocks.append_coupled(&mut b, op, dt)?;
    Ok(Evolution { circuit: b.build(), ledger: PhaseLedger::default() })
}

/// Trotterized exp(-i (H - E0)⊗Y_a t) on the layout system + ancillas, with
/// the coupling ancilla last in the aux register.
pub fn filter_evolution(model: &Model, config: &TrotterConfig, e0: f64) -> Result<Evolution> {
    config.validate()?;
    let variant = config.potential_variant;
    let layout = Layout::new(model.n_qubits(), variant, true, 0);
    let blocks = Blocks::new(model, &layout, variant)?;
    let shift = -e0 + if variant.is_mcu() { model.v0() / 4.0 } else { 0.0 };
    let dt = config.dt();
    let mut b = CircuitBuilder::new(layout.registers);
    let mut ledger = PhaseLedger::default();
    for g in step_groups(config.order, config.steps) {
        for blk in g {
            match blk {
                StepBlock::Kinetic(f) => blocks.append_coupled(&mut b, CoupledOperator::Kinetic { shift }, f * dt)?,
                StepBlock::Potential(f) => {
                    blocks.append_coupled(&mut b, CoupledOperator::Potential, f * dt)?;
                    if variant.is_mcu() {
                        ledger.mcu_blocks += 1;
                    }
                }
            }
        }
        if variant.is_mcu() {
            ledger.kinetic_shift_applied = true;
            ledger.kinetic_shifts += 1;
        }
    }
    Ok(Evolution { circuit: b.build(), ledger })
}

/// Control |0⟩ keeps the step, control |1⟩ runs it with dt → -dt. The
/// ledger phase φ becomes RZ(-2φ) on the control, so that branch 0 is the
/// exact target and branch 1 its inverse.
pub fn directional_control_wrap(step: &Evolution, control: usize) -> Result<Evolution> {
    let phi = step.ledger.phase + step.circuit.global_phase();
    let inner = sandwich_rotations(&step.circuit.clone().with_global_phase(0.0), control)?;
    let mut b = inner.to_builder();
    b.push(GateKind::Rz { angle: -2.0 * phi, target: control })?;
    Ok(Evolution { circuit: b.build(), ledger: PhaseLedger { phase: 0.0, ..step.ledger } })
}

/// Directionally controlled evolution of H - offset over `config.total_time`
/// per branch: control |0⟩ gives ≈exp(-i(H-offset)t), |1⟩ its inverse. Each
/// merged step is wrapped separately.
pub fn directional_evolution(model: &Model, config: &TrotterConfig, layout: &Layout, control: usize, offset: f64) -> Result<Evolution> {
    config.validate()?;
    let variant = config.potential_variant;
    let dt = config.dt();
    let parts = build_groups(model, layout, variant, &step_groups(config.order, config.steps), dt)?;
    let mut wrapped = Vec::with_capacity(parts.len());
    for (i, mut p) in parts.into_iter().enumerate() {
        let f: f64 = step_groups(config.order, config.steps)[i].iter().map(|b| if let StepBlock::Kinetic(f) = b { *f } else { 0.0 }).sum();
        p.ledger.phase += offset * f * dt;
        wrapped.push(directional_control_wrap(&p, control)?);
    }
    concat(layout, wrapped)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::circuit::{system_block, unitary_columns};
    use crate::lattice::{build_hamiltonian, LatticeConfig};
    use crate::linalg::{expm_hermitian, kron, max_abs_diff, CMat};

    fn model(n: usize) -> Model {
        Model::new(&LatticeConfig::cubic(n)).unwrap()
    }

    fn y() -> CMat {
        CMat::from_row_slice(2, 2, &[c(0.0, 0.0), c(0.0, -1.0), c(0.0, 1.0), c(0.0, 0.0)])
    }

    fn product_formula(m: &Model, order: OperatorOrder, r: usize, t: f64) -> CMat {
        let h = build_hamiltonian(&m.config).unwrap();
        let (tk, v) = (h.kinetic_matrix(), h.potential_matrix());
        let dt = t / r as f64;
        let mut u = CMat::identity(h.dim(), h.dim());
        for g in step_groups(order, r) {
            for blk in g {
                let e = match blk {
                    StepBlock::Kinetic(f) => expm_hermitian(&tk, f * dt).unwrap(),
                    StepBlock::Potential(f) => expm_hermitian(&v, f * dt).unwrap(),
                };
                u = e * u;
            }
        }
        u
    }

    #[test]
    fn reference_step_counts() {
        let m = model(8);
        let cfg = TrotterConfig::new(OperatorOrder::VThenT, 1, 0.01, PotentialVariant::GrayCode);
        let k = trotter_step(&m, &cfg, 0.01).unwrap().circuit.count_gates();
        assert_eq!((k.cnot, k.rz), (528, 529));
        for v in [PotentialVariant::GrayCode, PotentialVariant::McuFeedforward, PotentialVariant::McuLadder] {
            for r in [1, 3, 7] {
                let one = full_evolution(&m, &TrotterConfig::new(OperatorOrder::VThenT, r, 0.01, v)).unwrap().circuit.count_gates();
                let two = full_evolution(&m, &TrotterConfig::new(OperatorOrder::TVT, r, 0.01, v)).unwrap().circuit.count_gates();
                let d = two - one;
                assert_eq!((d.cnot, d.rz, d.total()), (18, 18, 36), "{v:?} r={r}");
            }
        }
    }

    #[test]
    fn matches_product_formula() {
        let m = model(4);
        let t = 0.003;
        for order in OperatorOrder::ALL {
            let exact = product_formula(&m, order, 3, t);
            for v in [PotentialVariant::GrayCode, PotentialVariant::McuLadder] {
                let e = full_evolution(&m, &TrotterConfig::new(order, 3, t, v)).unwrap();
                let u = system_block(&e.exact_circuit()).unwrap();
                assert!(max_abs_diff(&u, &exact) < 1e-10, "{order:?} {v:?}");
                if v.is_mcu() {
                    assert!(e.ledger.kinetic_shift_applied);
                    assert_eq!(e.ledger.kinetic_shifts, 3);
                }
            }
        }
    }

    #[test]
    fn mcu_and_gray_agree_without_extra_phase() {
        let m = model(4);
        let cfg = |v| TrotterConfig::new(OperatorOrder::TThenV, 1, 0.002, v);
        let g = trotter_step(&m, &cfg(PotentialVariant::GrayCode), 0.002).unwrap();
        let l = trotter_step(&m, &cfg(PotentialVariant::McuLadder), 0.002).unwrap();
        let (ug, ul) = (system_block(&g.exact_circuit()).unwrap(), system_block(&l.exact_circuit()).unwrap());
        assert!(max_abs_diff(&ug, &ul) < 1e-10);
        let kin = g.ledger.phase + m.v0() / 64.0 * 0.002;
        assert!((l.ledger.phase - (kin - m.v0() * 0.002 / 4.0)).abs() < 1e-12);
    }

    #[test]
    fn convergence_rates() {
        let m = model(4);
        let t = 0.002;
        let h = build_hamiltonian(&m.config).unwrap();
        let exact = expm_hermitian(&h.matrix, t).unwrap();
        let err = |order, r| {
            let e = full_evolution(&m, &TrotterConfig::new(order, r, t, PotentialVariant::GrayCode)).unwrap();
            max_abs_diff(&system_block(&e.exact_circuit()).unwrap(), &exact)
        };
        let (a, b) = (err(OperatorOrder::TVT, 8), err(OperatorOrder::TVT, 16));
        assert!((a / b - 4.0).abs() < 0.4, "{a} {b}");
        let (a, b) = (err(OperatorOrder::VThenT, 16), err(OperatorOrder::VThenT, 32));
        assert!((a / b - 2.0).abs() < 0.3, "{a} {b}");
        assert!(err(OperatorOrder::TVT, 64) < 1e-3);
    }

    #[test]
    fn coupled_counts() {
        let m = model(8);
        let e0 = -4.375;
        let cfg = |v| TrotterConfig::new(OperatorOrder::VThenT, 1, 0.01, v);
        let k = filter_evolution(&m, &cfg(PotentialVariant::McuFeedforward), e0).unwrap().circuit.count_gates();
        assert_eq!((k.cnot, k.conditioned_cz, k.t, k.rz), (53, 7, 28, 22));
        let k = filter_evolution(&m, &cfg(PotentialVariant::GrayCode), e0).unwrap().circuit.count_gates();
        assert_eq!((k.cnot, k.rz), (536, 531));
        let k = axis_coupled_evolution(&m, CoupledOperator::Kinetic { shift: -e0 }, 0.01, PotentialVariant::GrayCode).unwrap().circuit.count_gates();
        assert_eq!((k.cnot, k.rz), (24, 19));
    }

    #[test]
    fn coupled_blocks_exact() {
        let m = model(4);
        let h = build_hamiltonian(&m.config).unwrap();
        let dt = 0.004;
        let shift = 3.5;
        let sh = &h.kinetic_matrix() + CMat::identity(64, 64) * c(shift, 0.0);
        let want_k = expm_hermitian(&kron(&y(), &sh), dt).unwrap();
        let want_v = expm_hermitian(&kron(&y(), &h.potential_matrix()), dt).unwrap();
        let th = m.v0() * dt;
        let spurious = expm_hermitian(&kron(&y(), &CMat::identity(64, 64)), -th / 4.0).unwrap();
        for v in [PotentialVariant::GrayCode, PotentialVariant::McuLadder] {
            let layout = Layout::new(6, v, true, 0);
            let a = layout.coupling.unwrap();
            let inputs: Vec<usize> = (0..128).map(|i| (i & 63) | ((i >> 6) << a)).collect();
            let pick = |cm: CMat| CMat::from_fn(128, 128, |r, col| cm[(inputs[r], col)]);
            let uk = pick(unitary_columns(&axis_coupled_evolution(&m, CoupledOperator::Kinetic { shift }, dt, v).unwrap().circuit, &inputs).unwrap());
            let uv = pick(unitary_columns(&axis_coupled_evolution(&m, CoupledOperator::Potential, dt, v).unwrap().circuit, &inputs).unwrap());
            assert!(max_abs_diff(&uk, &want_k) < 1e-10);
            let wv = if v.is_mcu() { &spurious * &want_v } else { want_v.clone() };
            assert!(max_abs_diff(&uv, &wv) < 1e-10, "{v:?}");
        }
    }

    #[test]
    fn filter_matches_coupled_product() {
        let m = model(4);
        let h = build_hamiltonian(&m.config).unwrap();
        let e0 = -4.0;
        let (t, r) = (0.006, 2);
        let dt = t / r as f64;
        let tk = kron(&y(), &(&h.kinetic_matrix() - CMat::identity(64, 64) * c(e0, 0.0)));
        let vv = kron(&y(), &h.potential_matrix());
        let mut want = CMat::identity(128, 128);
        for g in step_groups(OperatorOrder::TVT, r) {
            for blk in g {
                want = match blk {
                    StepBlock::Kinetic(f) => expm_hermitian(&tk, f * dt).unwrap(),
                    StepBlock::Potential(f) => expm_hermitian(&vv, f * dt).unwrap(),
                } * want;
            }
        }
        for v in [PotentialVariant::GrayCode, PotentialVariant::McuLadder] {
            let e = filter_evolution(&m, &TrotterConfig::new(OperatorOrder::TVT, r, t, v), e0).unwrap();
            let a = Layout::new(6, v, true, 0).coupling.unwrap();
            let inputs: Vec<usize> = (0..128).map(|i| (i & 63) | ((i >> 6) << a)).collect();
            let cols = unitary_columns(&e.circuit, &inputs).unwrap();
            let u = CMat::from_fn(128, 128, |rr, col| cols[(inputs[rr], col)]);
            assert!(max_abs_diff(&u, &want) < 1e-10, "{v:?}");
        }
    }

    #[test]
    fn directional_counts() {
        let m = model(8);
        for (v, cn, rz) in [(PotentialVariant::McuFeedforward, 83, 22), (PotentialVariant::GrayCode, 1586, 530)] {
            let layout = Layout::new(9, v, false, 1);
            let cfg = TrotterConfig::new(OperatorOrder::TVT, 4, 0.01, v);
            let e = directional_evolution(&m, &cfg, &layout, layout.registers.qpe_qubit(0), 0.0).unwrap();
            let k = e.circuit.count_gates();
            // interior steps: subtract the two half-kinetic ends
            let one = directional_evolution(&m, &TrotterConfig::new(OperatorOrder::TVT, 5, 0.01, v), &layout, layout.registers.qpe_qubit(0), 0.0).unwrap().circuit.count_gates() - k;
            assert_eq!((one.cnot, one.rz), (cn, rz), "{v:?}");
            if v.is_mcu() {
                assert_eq!((one.conditioned_cz, one.t), (7, 28));
            }
        }
    }

    #[test]
    fn directional_branches() {
        let m = model(4);
        let h = build_hamiltonian(&m.config).unwrap();
        let (t, r, off) = (0.002, 2, -3.0);
        for v in [PotentialVariant::GrayCode, PotentialVariant::McuLadder] {
            let layout = Layout::new(6, v, false, 1);
            let ctl = layout.registers.qpe_qubit(0);
            let cfg = TrotterConfig::new(OperatorOrder::TVT, r, t, v);
            let e = directional_evolution(&m, &cfg, &layout, ctl, off).unwrap();
            let fwd = product_formula(&m, OperatorOrder::TVT, r, t) * crate::linalg::cis(off * t);
            let bwd = product_formula(&m, OperatorOrder::TVT, r, -t) * crate::linalg::cis(-off * t);
            let inputs: Vec<usize> = (0..128).map(|i| (i & 63) | ((i >> 6) << ctl)).collect();
            let cols = unitary_columns(&e.circuit, &inputs).unwrap();
            let u = CMat::from_fn(128, 128, |rr, col| cols[(inputs[rr], col)]);
            let zero = CMat::zeros(64, 64);
            assert!(max_abs_diff(&u.view((0, 0), (64, 64)).into_owned(), &fwd) < 1e-10, "{v:?}");
            assert!(max_abs_diff(&u.view((64, 64), (64, 64)).into_owned(), &bwd) < 1e-10, "{v:?}");
            assert!(max_abs_diff(&u.view((64, 0), (64, 64)).into_owned(), &zero) < 1e-12);
            let _ = &h;
        }
    }

    #[test]
    fn zero_time_identity() {
        let m = model(4);
        let e = full_evolution(&m, &TrotterConfig::new(OperatorOrder::TVT, 2, 0.0, PotentialVariant::McuLadder)).unwrap();
        assert!(max_abs_diff(&system_block(&e.exact_circuit()).unwrap(), &CMat::identity(64, 64)) < 1e-12);
        let e = axis_coupled_evolution(&m, CoupledOperator::Potential, 0.0, PotentialVariant::GrayCode).unwrap();
        assert!(max_abs_diff(&system_block(&e.circuit).unwrap(), &CMat::identity(64, 64)) < 1e-12);
    }
}
