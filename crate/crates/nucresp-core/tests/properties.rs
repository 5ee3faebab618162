use nucresp_core::circuit::{inverse, compose, unitary_of, CircuitBuilder, GateKind, QuantumCircuit, Registers};
use nucresp_core::lattice::{build_hamiltonian, LatticeConfig};
use nucresp_core::linalg::{self, c, cis, eigh, identity, max_abs_diff, CMat};
use nucresp_core::pauli::{gray_code_order, map_diagonal, map_matrix, matrix_of, PauliSum, PauliTerm};
use nucresp_core::rng::Stream;
use nucresp_core::simulator::{final_state, run_trajectory, run_with, NoiseModel, Plan, Readout, RunOptions, StateVector};
use proptest::prelude::*;

fn random_hermitian(n: usize, seed: u64) -> CMat {
    let mut g = Stream::new(seed, 0);
    let mut m = CMat::zeros(n, n);
    for i in 0..n {
        m[(i, i)] = c(g.uniform() * 2.0 - 1.0, 0.0);
        for j in 0..i {
            let z = c(g.uniform() * 2.0 - 1.0, g.uniform() * 2.0 - 1.0);
            m[(i, j)] = z;
            m[(j, i)] = z.conj();
        }
    }
    m
}

fn random_circuit(nq: usize, len: usize, seed: u64) -> QuantumCircuit {
    let mut b = CircuitBuilder::new(Registers::new(nq, 0, 0));
    let mut g = Stream::new(seed, 1);
    for _ in 0..len {
        let q = g.below(nq as u64) as usize;
        let q2 = (q + 1 + g.below(nq as u64 - 1) as usize) % nq;
        match g.below(7) {
            0 => b.h(q),
            1 => b.s(q),
            2 => b.t(q),
            3 => b.rz(g.uniform() * 6.0 - 3.0, q),
            4 => b.ry(g.uniform() * 6.0 - 3.0, q),
            5 => b.cz(q, q2),
            _ => b.cnot(q, q2),
        };
    }
    b.build()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn pauli_round_trip(nq in 1usize..=4, seed in any::<u64>()) {
        let m = random_hermitian(1 << nq, seed);
        let s = map_matrix(&m).unwrap();
        prop_assert!(s.is_hermitian());
        prop_assert!(max_abs_diff(&matrix_of(&s).unwrap(), &m) < 1e-12);
        let back = PauliSum::from_text(&s.to_text(17)).unwrap();
        prop_assert!(max_abs_diff(&matrix_of(&back).unwrap(), &m) < 1e-12);
    }

    #[test]
    fn diagonal_maps_to_z_strings(nq in 1usize..=6, seed in any::<u64>()) {
        let mut g = Stream::new(seed, 2);
        let d: Vec<f64> = (0..1 << nq).map(|_| g.uniform() - 0.5).collect();
        let s = map_diagonal(&d).unwrap();
        prop_assert!(s.is_diagonal());
        let m = matrix_of(&s).unwrap();
        for (i, v) in d.iter().enumerate() {
            prop_assert!((m[(i, i)].re - v).abs() < 1e-12);
        }
    }

    #[test]
    fn gray_order_is_single_bit_adjacent(nq in 1usize..=8, seed in any::<u64>()) {
        let mut g = Stream::new(seed, 3);
        let d: Vec<f64> = (0..1 << nq).map(|_| g.uniform()).collect();
        let order = gray_code_order(&map_diagonal(&d).unwrap()).unwrap();
        prop_assert_eq!(order.len(), 1 << nq);
        prop_assert!(order.iter().all(|t| t.is_diagonal()));
        for w in order.windows(2) {
            prop_assert_eq!((w[0].z ^ w[1].z).count_ones(), 1);
        }
    }

    #[test]
    fn circuit_then_inverse_is_identity(nq in 1usize..=4, len in 0usize..60, seed in any::<u64>()) {
        let circ = random_circuit(nq.max(2), len, seed);
        let u = unitary_of(&compose(&circ, &inverse(&circ).unwrap()).unwrap()).unwrap();
        prop_assert!(max_abs_diff(&u, &identity(1 << nq.max(2))) < 1e-10);
    }

    #[test]
    fn statevector_matches_unitary(len in 1usize..40, seed in any::<u64>()) {
        let circ = random_circuit(3, len, seed);
        let u = unitary_of(&circ).unwrap();
        let regs = circ.registers();
        for k in [0usize, 5] {
            let out = final_state(&circ, &StateVector::basis(regs, k), 0).unwrap();
            for (i, a) in out.amplitudes.iter().enumerate() {
                prop_assert!((a - u[(i, k)]).norm() < 1e-12);
            }
        }
    }

    #[test]
    fn pauli_products_square_to_identity(x in 0u64..16, z in 0u64..16) {
        let p = matrix_of(&PauliSum::from_terms(4, [PauliTerm::new(x, z, c(1.0, 0.0))], 0.0)).unwrap();
        prop_assert!(max_abs_diff(&(&p * &p), &identity(16)) < 1e-12);
        prop_assert!(linalg::hermitian_deviation(&p) < 1e-12);
    }
}

#[test]
fn small_lattice_mapping_reproduces_hamiltonian() {
    let h = build_hamiltonian(&LatticeConfig::cubic(2)).unwrap();
    let s = map_matrix(&h.matrix).unwrap();
    assert!(max_abs_diff(&matrix_of(&s).unwrap(), &h.matrix) < 1e-10);
    // kinetic part is diagonal, potential part uses only X strings
    let kin = map_diagonal(&h.kinetic_diagonal).unwrap();
    assert!(kin.is_diagonal());
    let pot = map_matrix(&h.potential_matrix()).unwrap();
    assert!(pot.terms.iter().all(|t| t.z == 0));
    assert_eq!(pot.len(), 8);
}

#[test]
fn norm_preserved_over_many_gates() {
    let circ = random_circuit(10, 10_000, 11);
    let out = final_state(&circ, &StateVector::zero(circ.registers()), 0).unwrap();
    assert!((linalg::norm(&out.amplitudes) - 1.0).abs() < 1e-10);
}

fn analytic_depolarized(circ: &QuantumCircuit, p: f64) -> CMat {
    let paulis: Vec<CMat> = (1..16u64)
        .map(|k| matrix_of(&PauliSum::from_terms(2, [PauliTerm::new(k & 3, k >> 2, c(1.0, 0.0))], 0.0)).unwrap())
        .collect();
    let mut rho = CMat::zeros(4, 4);
    rho[(0, 0)] = c(1.0, 0.0);
    for g in circ.gates() {
        let mut one = CircuitBuilder::new(circ.registers());
        one.push(g.clone()).unwrap();
        let u = unitary_of(&one.build()).unwrap();
        rho = &u * &rho * u.adjoint();
        if g.is_two_qubit() {
            let mut mixed = CMat::zeros(4, 4);
            for pm in &paulis {
                mixed += pm * &rho * pm;
            }
            rho = rho * c(1.0 - p, 0.0) + mixed * c(p / 15.0, 0.0);
        }
    }
    rho
}

#[test]
fn depolarizing_trajectories_match_density_matrix() {
    let mut b = CircuitBuilder::new(Registers::new(2, 0, 0));
    b.h(0).cnot(0, 1).ry(0.9, 0).cz(0, 1).rz(0.3, 1).cnot(1, 0);
    let circ = b.build();
    let p = 0.2;
    let want = analytic_depolarized(&circ, p);
    let plan = Plan::new(&circ).unwrap();
    let init = StateVector::zero(circ.registers());
    let opts = RunOptions { noise: NoiseModel::depolarizing(p), seed: 4, ..Default::default() };
    let n = 10_000;
    let mut rho = CMat::zeros(4, 4);
    for i in 0..n {
        let a = run_trajectory(&circ, &plan, &init, &opts, i).unwrap().state.amplitudes;
        for x in 0..4 {
            for y in 0..4 {
                rho[(x, y)] += a[x] * a[y].conj();
            }
        }
    }
    rho /= c(n as f64, 0.0);
    let (ev, _) = eigh(&(&rho - &want)).unwrap();
    let td = 0.5 * ev.iter().map(|v| v.abs()).sum::<f64>();
    assert!(td <= 0.02, "trace distance {td}");
}

#[test]
fn fixed_seed_is_deterministic() {
    let mut b = CircuitBuilder::new(Registers::new(3, 0, 0));
    b.h(0).cnot(0, 1).cnot(1, 2).ry(0.4, 2);
    for q in 0..3 {
        let bit = b.new_bit();
        b.measure(q, bit);
    }
    let circ = b.build();
    let init = StateVector::zero(circ.registers());
    let opts = RunOptions { noise: NoiseModel::depolarizing(0.1), seed: 77, shots: 300, readout: Readout::Shots, ..Default::default() };
    let a = run_with(&circ, &init, &opts).unwrap();
    assert_eq!(a, run_with(&circ, &init, &opts).unwrap());
    let other = run_with(&circ, &init, &RunOptions { seed: 78, ..opts.clone() }).unwrap();
    assert_ne!(a.histogram, other.histogram);
    assert_eq!(a.histogram.values().sum::<usize>(), 300);
}

#[test]
fn global_phase_is_tracked() {
    let mut b = CircuitBuilder::new(Registers::new(1, 0, 0));
    b.rz(0.5, 0);
    b.add_phase(0.25);
    let u = unitary_of(&b.build()).unwrap();
    assert!((u[(0, 0)] - cis(0.25 - 0.25)).norm() < 1e-12);
    assert!((u[(1, 1)] - cis(0.25 + 0.25)).norm() < 1e-12);
    assert!(matches!(GateKind::Rz { angle: 0.5, target: 0 }.inverse(), Some(GateKind::Rz { angle, .. }) if angle == -0.5));
}
