//! Self-checks of an installed build: circuit/oracle equivalence at small
//! sizes, algebraic round trips and gate-count regressions against a table.

use nucresp_core::circuit::{system_block, unitary_columns, unitary_of, QuantumCircuit};
use nucresp_core::lattice::{build_hamiltonian, LatticeConfig};
use nucresp_core::linalg::{c, cis, expm_hermitian, kron, max_abs_diff, mat_vec, norm, CMat};
use nucresp_core::pauli::{gray_code_order, map_diagonal, map_matrix, matrix_of};
use nucresp_core::response::{qpe_circuit, transition_circuit, transition_operator, QpeConfig};
use nucresp_core::rng::Stream;
use nucresp_core::simulator::{final_state, StateVector};
use nucresp_core::state_prep::Problem;
use nucresp_core::synthesis::{
    axis_coupled_evolution, controlled_phase_cu, directional_evolution, filter_evolution, full_evolution, kinetic_evolution, many_body_potential_evolution, many_body_potential_matrix,
    potential_evolution, relative_phase_toffoli, step_groups, trotter_step, CoupledOperator, Layout, Model, OperatorOrder, PotentialVariant, StepBlock, TrotterConfig,
};
use nucresp_core::C64;
use std::time::Instant;

pub const EXPECTED_COUNTS: &str = include_str!("../../../configs/expected_counts.csv");

#[derive(Debug, Clone, PartialEq)]
pub struct Check {
    pub name: String,
    pub passed: bool,
    pub detail: String,
    pub seconds: f64,
}

impl Check {
    pub fn line(&self) -> String {
        format!("{} {} ({}) [{:.2} s]", if self.passed { "PASS" } else { "FAIL" }, self.name, self.detail, self.seconds)
    }
}

fn timed(name: &str, f: impl FnOnce() -> Result<(bool, String), String>) -> Check {
    let t = Instant::now();
    let (passed, detail) = f().unwrap_or_else(|e| (false, format!("error: {e}")));
    Check { name: name.to_string(), passed, detail, seconds: t.elapsed().as_secs_f64() }
}

fn within(err: f64, tol: f64) -> (bool, String) {
    (err <= tol, format!("max deviation {err:.2e}, tolerance {tol:.0e}"))
}

fn s<E: ToString>(e: E) -> String {
    e.to_string()
}

fn y() -> CMat {
    CMat::from_row_slice(2, 2, &[c(0.0, 0.0), c(0.0, -1.0), c(0.0, 1.0), c(0.0, 0.0)])
}

/// Columns of `circuit` for the 2^k inputs spanned by `qubits` (all other
/// qubits in |0⟩), restricted to the same subspace.
fn sub_unitary(circuit: &QuantumCircuit, qubits: &[usize]) -> Result<CMat, String> {
    let dim = 1usize << qubits.len();
    let idx = |i: usize| qubits.iter().enumerate().map(|(b, &q)| ((i >> b) & 1) << q).sum::<usize>();
    let inputs: Vec<usize> = (0..dim).map(idx).collect();
    let cols = unitary_columns(circuit, &inputs).map_err(s)?;
    Ok(CMat::from_fn(dim, dim, |r, col| cols[(inputs[r], col)]) * cis(circuit.global_phase()))
}

/// Dense product e^{-iK f dt}, e^{-iV f dt} in the step-group order.
pub fn product_formula(kin: &CMat, pot: &CMat, order: OperatorOrder, steps: usize, t: f64) -> Result<CMat, String> {
    let dt = t / steps as f64;
    let mut u = CMat::identity(kin.nrows(), kin.ncols());
    for g in step_groups(order, steps) {
        for b in g {
            u = match b {
                StepBlock::Kinetic(f) => expm_hermitian(kin, f * dt),
                StepBlock::Potential(f) => expm_hermitian(pot, f * dt),
            }
            .map_err(s)?
                * u;
        }
    }
    Ok(u)
}

fn desk_model() -> Result<(Model, CMat, CMat), String> {
    let cfg = LatticeConfig::cubic(4);
    let h = build_hamiltonian(&cfg).map_err(s)?;
    Ok((Model::new(&cfg).map_err(s)?, h.kinetic_matrix(), h.potential_matrix()))
}

fn uniform(n: usize, theta: f64) -> CMat {
    let d = 1usize << n;
    CMat::from_element(d, d, c(theta / d as f64, 0.0))
}

/// Every synthesized unitary construction against its dense exponential,
/// measurement-free constructions at ≤ 12 qubits.
pub fn unitary_suite() -> Vec<Check> {
    let mut out = Vec::new();
    let dt = 0.0037;
    out.push(timed("unitary.kinetic", || {
        let (m, k, _) = desk_model()?;
        let e = kinetic_evolution(dt, &m.config).map_err(s)?;
        let u = system_block(&e.exact_circuit()).map_err(s)?;
        Ok(within(max_abs_diff(&u, &expm_hermitian(&k, dt).map_err(s)?), 1e-10))
    }));
    for (name, v) in [("unitary.gray_potential", PotentialVariant::GrayCode), ("unitary.mcu_ladder_potential", PotentialVariant::McuLadder)] {
        out.push(timed(name, || {
            let mut worst: f64 = 0.0;
            for nq in 3..=6 {
                let th = -235.0 * dt;
                let e = potential_evolution(nq, th, v).map_err(s)?;
                let u = system_block(&e.exact_circuit()).map_err(s)?;
                worst = worst.max(max_abs_diff(&u, &expm_hermitian(&uniform(nq, th), 1.0).map_err(s)?));
            }
            Ok(within(worst, 1e-10))
        }));
    }
    out.push(timed("unitary.controlled_phase_cu", || {
        let th = std::f64::consts::PI / 3.0;
        let u = unitary_of(&controlled_phase_cu(th)).map_err(s)?;
        let mut want = CMat::identity(4, 4) * cis(th / 4.0);
        want[(2, 2)] *= cis(-th);
        Ok(within(max_abs_diff(&u, &want), 1e-10))
    }));
    out.push(timed("unitary.relative_phase_toffoli", || {
        let u = unitary_of(&relative_phase_toffoli()).map_err(s)?;
        let sq = max_abs_diff(&(&u * &u), &CMat::identity(8, 8));
        let perm = (0..8usize).map(|i| (u[(i ^ ((i & 1) & (i >> 1 & 1)) << 2, i)].norm() - 1.0).abs()).fold(0.0, f64::max);
        Ok(within(sq.max(perm), 1e-10))
    }));
    out.push(timed("unitary.axis_coupled", || {
        let (m, k, v) = desk_model()?;
        let shift = 3.5;
        let id = CMat::identity(64, 64);
        let want_k = expm_hermitian(&kron(&y(), &(&k + &id * c(shift, 0.0))), dt).map_err(s)?;
        let want_v = expm_hermitian(&kron(&y(), &v), dt).map_err(s)?;
        // the mcu block also carries exp(iθY/4), removed by the kinetic shift
        let spurious = expm_hermitian(&kron(&y(), &id), -m.v0() * dt / 4.0).map_err(s)?;
        let mut worst: f64 = 0.0;
        for var in [PotentialVariant::GrayCode, PotentialVariant::McuLadder] {
            let a = Layout::new(6, var, true, 0).coupling.ok_or("no coupling")?;
            let q: Vec<usize> = (0..6).chain([a]).collect();
            let uk = sub_unitary(&axis_coupled_evolution(&m, CoupledOperator::Kinetic { shift }, dt, var).map_err(s)?.circuit, &q)?;
            let uv = sub_unitary(&axis_coupled_evolution(&m, CoupledOperator::Potential, dt, var).map_err(s)?.circuit, &q)?;
            let wv = if var.is_mcu() { &spurious * &want_v } else { want_v.clone() };
            worst = worst.max(max_abs_diff(&uk, &want_k)).max(max_abs_diff(&uv, &wv));
        }
        Ok(within(worst, 1e-10))
    }));
    out.push(timed("unitary.filter_step", || {
        let (m, k, v) = desk_model()?;
        let (e0, t, r) = (-4.0, 0.006, 2);
        let id = CMat::identity(64, 64);
        let tk = kron(&y(), &(&k - &id * c(e0, 0.0)));
        let vv = kron(&y(), &v);
        let want = product_formula(&tk, &vv, OperatorOrder::TVT, r, t)?;
        let mut worst: f64 = 0.0;
        for var in [PotentialVariant::GrayCode, PotentialVariant::McuLadder] {
            let e = filter_evolution(&m, &TrotterConfig::new(OperatorOrder::TVT, r, t, var), e0).map_err(s)?;
            let a = Layout::new(6, var, true, 0).coupling.ok_or("no coupling")?;
            let q: Vec<usize> = (0..6).chain([a]).collect();
            worst = worst.max(max_abs_diff(&(sub_unitary(&e.circuit, &q)? * cis(e.ledger.phase)), &want));
        }
        Ok(within(worst, 1e-10))
    }));
    out.push(timed("unitary.trotter_phase_accounting", || {
        let (m, k, v) = desk_model()?;
        let mut worst: f64 = 0.0;
        for var in [PotentialVariant::GrayCode, PotentialVariant::McuLadder] {
            for ord in OperatorOrder::ALL {
                let cfg = TrotterConfig::new(ord, 3, 0.01, var);
                let e = full_evolution(&m, &cfg).map_err(s)?;
                let u = system_block(&e.exact_circuit()).map_err(s)?;
                worst = worst.max(max_abs_diff(&u, &product_formula(&k, &v, ord, 3, 0.01)?));
                let st = trotter_step(&m, &cfg, 0.004).map_err(s)?;
                let u = system_block(&st.exact_circuit()).map_err(s)?;
                worst = worst.max(max_abs_diff(&u, &product_formula(&k, &v, ord, 1, 0.004)?));
            }
        }
        Ok(within(worst, 1e-10))
    }));
    out.push(timed("unitary.directional_wrap", || {
        let (m, k, v) = desk_model()?;
        let (t, r, off) = (0.002, 2, -3.0);
        let mut worst: f64 = 0.0;
        for var in [PotentialVariant::GrayCode, PotentialVariant::McuLadder] {
            let layout = Layout::new(6, var, false, 1);
            let ctl = layout.registers.qpe_qubit(0);
            let e = directional_evolution(&m, &TrotterConfig::new(OperatorOrder::TVT, r, t, var), &layout, ctl, off).map_err(s)?;
            let fwd = product_formula(&k, &v, OperatorOrder::TVT, r, t)? * cis(off * t);
            let bwd = product_formula(&k, &v, OperatorOrder::TVT, r, -t)? * cis(-off * t);
            let q: Vec<usize> = (0..6).chain([ctl]).collect();
            let u = sub_unitary(&e.circuit, &q)?;
            let mut want = CMat::zeros(128, 128);
            want.view_mut((0, 0), (64, 64)).copy_from(&fwd);
            want.view_mut((64, 64), (64, 64)).copy_from(&bwd);
            worst = worst.max(max_abs_diff(&u, &want));
        }
        Ok(within(worst, 1e-10))
    }));
    out.push(timed("unitary.many_body", || {
        let mut worst: f64 = 0.0;
        for (a, n) in [(2usize, 8usize), (3, 8)] {
            let e = many_body_potential_evolution(a, n, -235.0, dt, PotentialVariant::McuLadder).map_err(s)?;
            let want = expm_hermitian(&many_body_potential_matrix(a, n, -235.0).map_err(s)?, dt).map_err(s)?;
            worst = worst.max(max_abs_diff(&system_block(&e.exact_circuit()).map_err(s)?, &want));
        }
        Ok(within(worst, 1e-10))
    }));
    out.push(timed("channel.mcu_feedforward", || {
        // all basis states plus two dense superpositions, several seeds
        let mut worst: f64 = 0.0;
        for nq in [3usize, 5] {
            let th = 0.9;
            let e = potential_evolution(nq, th, PotentialVariant::McuFeedforward).map_err(s)?;
            let target = expm_hermitian(&uniform(nq, th), 1.0).map_err(s)?;
            let dim = 1usize << nq;
            let mut inputs: Vec<Vec<C64>> = (0..dim).map(|i| (0..dim).map(|j| c(f64::from(u8::from(i == j)), 0.0)).collect()).collect();
            for w in [0.7, 1.9] {
                let v: Vec<C64> = (0..dim).map(|i| c((i as f64 * w).cos(), (i as f64 * 0.3).sin())).collect();
                let nv = norm(&v);
                inputs.push(v.iter().map(|z| z / nv).collect());
            }
            for amps in &inputs {
                let want = mat_vec(&target, amps);
                let init = StateVector::embed_system(e.circuit.registers(), amps).map_err(s)?;
                for seed in 0..4 {
                    let out = final_state(&e.circuit, &init, seed).map_err(s)?;
                    let ph = cis(e.ledger.phase + e.circuit.global_phase());
                    let d = (0..out.amplitudes.len()).map(|i| (out.amplitudes[i] * ph - if i < dim { want[i] } else { c(0.0, 0.0) }).norm()).fold(0.0, f64::max);
                    worst = worst.max(d);
                }
            }
        }
        Ok(within(worst, 1e-8))
    }));
    out
}

/// Round trips and small algebraic properties.
pub fn property_suite() -> Vec<Check> {
    let mut out = Vec::new();
    out.push(timed("pauli.round_trip", || {
        let mut rng = Stream::new(11, 0);
        let mut worst: f64 = 0.0;
        for n in 1..=4usize {
            let d = 1 << n;
            let mut m = CMat::zeros(d, d);
            for i in 0..d {
                for j in i..d {
                    let z = c(rng.uniform() - 0.5, if i == j { 0.0 } else { rng.uniform() - 0.5 });
                    m[(i, j)] = z;
                    m[(j, i)] = z.conj();
                }
            }
            let back = matrix_of(&map_matrix(&m).map_err(s)?).map_err(s)?;
            worst = worst.max(max_abs_diff(&back, &m));
        }
        Ok(within(worst, 1e-12))
    }));
    out.push(timed("pauli.gray_adjacency", || {
        let d: Vec<f64> = (0..64).map(|i| (i as f64 * 1.3).sin()).collect();
        let order = gray_code_order(&map_diagonal(&d).map_err(s)?).map_err(s)?;
        let bad = order.windows(2).filter(|w| (w[0].z ^ w[1].z).count_ones() != 1).count();
        Ok((bad == 0 && order.len() == 64, format!("{} terms, {bad} non-adjacent pairs", order.len())))
    }));
    out.push(timed("model.reference_numbers", || {
        let p = Problem::new(&LatticeConfig::reference()).map_err(s)?;
        let ok = (p.spectrum.e0 + 4.375).abs() < 0.02 && (p.spectrum.gap_delta - 13.5).abs() < 0.1 && (p.spectrum.delta_h - 1232.0).abs() < 2.0;
        Ok((ok, format!("E0 {:.4}, gap {:.4}, width {:.2}", p.spectrum.e0, p.spectrum.gap_delta, p.spectrum.delta_h)))
    }));
    out
}

/// Rows `case,cnot,rz,conditioned_cz,t` ('#' starts a comment).
pub fn parse_table(text: &str) -> Result<Vec<(String, [usize; 4])>, String> {
    let mut rows = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let f: Vec<&str> = line.split(',').map(str::trim).collect();
        if f[0] == "case" {
            continue;
        }
        if f.len() != 5 {
            return Err(format!("line {}: expected 5 fields", i + 1));
        }
        let mut v = [0usize; 4];
        for k in 0..4 {
            v[k] = f[k + 1].parse().map_err(|_| format!("line {}: bad count '{}'", i + 1, f[k + 1]))?;
        }
        rows.push((f[0].to_string(), v));
    }
    Ok(rows)
}

/// Counts [cnot, rz, conditioned_cz, t] of a regression case.
pub fn case_counts(case: &str) -> Result<[usize; 4], String> {
    let m9 = || Model::new(&LatticeConfig::reference()).map_err(s);
    let tc = |o, r, v| TrotterConfig::new(o, r, 0.01, v);
    let k = match case {
        "kinetic_nq9" => kinetic_evolution(0.01, &LatticeConfig::reference()).map_err(s)?.circuit.count_gates(),
        "gray_potential_nq9" => potential_evolution(9, 0.5, PotentialVariant::GrayCode).map_err(s)?.circuit.count_gates(),
        "gray_potential_nq12" => potential_evolution(12, 0.5, PotentialVariant::GrayCode).map_err(s)?.circuit.count_gates(),
        "mcu_ff_potential_nq9" => potential_evolution(9, 0.5, PotentialVariant::McuFeedforward).map_err(s)?.circuit.count_gates(),
        "mcu_ff_potential_nq12" => potential_evolution(12, 0.5, PotentialVariant::McuFeedforward).map_err(s)?.circuit.count_gates(),
        "gray_step_order1" => trotter_step(&m9()?, &tc(OperatorOrder::VThenT, 1, PotentialVariant::GrayCode), 0.01).map_err(s)?.circuit.count_gates(),
        "mcu_filter_step" => filter_evolution(&m9()?, &tc(OperatorOrder::VThenT, 1, PotentialVariant::McuFeedforward), -4.375).map_err(s)?.circuit.count_gates(),
        "gray_filter_step" => filter_evolution(&m9()?, &tc(OperatorOrder::VThenT, 1, PotentialVariant::GrayCode), -4.375).map_err(s)?.circuit.count_gates(),
        "mcu_directional_step" | "gray_directional_step" => {
            let v = if case.starts_with("mcu") { PotentialVariant::McuFeedforward } else { PotentialVariant::GrayCode };
            let m = m9()?;
            let layout = Layout::new(9, v, false, 1);
            let ctl = layout.registers.qpe_qubit(0);
            // one interior step: r = 5 minus r = 4
            let a = directional_evolution(&m, &tc(OperatorOrder::TVT, 5, v), &layout, ctl, 0.0).map_err(s)?.circuit.count_gates();
            let b = directional_evolution(&m, &tc(OperatorOrder::TVT, 4, v), &layout, ctl, 0.0).map_err(s)?.circuit.count_gates();
            a - b
        }
        "transition_step" => transition_circuit(&transition_operator(&LatticeConfig::reference(), [0, 0, 1]).map_err(s)?, 1).map_err(s)?.circuit.count_gates(),
        c => return Err(format!("unknown case '{c}'")),
    };
    Ok([k.cnot, k.rz, k.conditioned_cz, k.t])
}

pub fn count_suite(table: &str) -> Vec<Check> {
    let rows = match parse_table(table) {
        Ok(r) if !r.is_empty() => r,
        Ok(_) => return vec![Check { name: "table".into(), passed: false, detail: "regression table is empty".into(), seconds: 0.0 }],
        Err(e) => return vec![Check { name: "table".into(), passed: false, detail: e, seconds: 0.0 }],
    };
    rows.iter()
        .map(|(case, want)| {
            timed(&format!("counts.{case}"), || {
                let got = case_counts(case)?;
                Ok((got == *want, format!("cnot/rz/ccz/t {got:?}, table {want:?}")))
            })
        })
        .collect()
}

/// Builds the 22-qubit stack and runs one noiseless amplitude evaluation.
pub fn smoke_22() -> Check {
    timed("smoke.qpe_22_qubits", || {
        let p = Problem::new(&LatticeConfig::reference()).map_err(s)?;
        let op = transition_operator(&p.config, [0, 0, 1]).map_err(s)?;
        let d = nucresp_core::response::run_response(&p, &op, &QpeConfig::full(), 1, nucresp_core::simulator::Readout::Amplitude).map_err(s)?;
        let total: f64 = d.probabilities().iter().sum();
        let q = qpe_circuit(&p, &QpeConfig::full(), None).map_err(s)?.circuit.n_qubits();
        Ok((q == 22 && (total - 1.0).abs() < 1e-8, format!("{q} qubits, Σ P = {total:.10}")))
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Level {
    Quick,
    Full,
}

/// Quick: small-size equivalence, properties and the table rows that do not
/// need 12-qubit diagonals. Full adds the rest and the 22-qubit run.
pub fn run(level: Level, table: &str) -> Vec<Check> {
    let mut out = unitary_suite();
    out.extend(property_suite());
    let mut counts = count_suite(table);
    if level == Level::Quick {
        counts.retain(|c| !c.name.ends_with("nq12"));
    }
    out.extend(counts);
    if level == Level::Full {
        out.push(smoke_22());
    }
    out
}
