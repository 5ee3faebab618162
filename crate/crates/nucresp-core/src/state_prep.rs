//! Ground-state preparation: the measurement-based energy filter and
//! initialization from known amplitudes.

use crate::circuit::{CircuitBuilder, QuantumCircuit, Registers};
use crate::lattice::{build_hamiltonian, build_hamiltonian_in, build_momentum_grid, diagonalize, DenseHamiltonian, LatticeConfig, SpectralData, TwoBodyBasis};
use crate::linalg::{self, c, CMat};
use crate::pauli::{map_diagonal, PauliSum};
use crate::simulator::{final_state, post_select, StateVector};
use crate::synthesis::{append_coupled_diagonal, append_diagonal, filter_evolution, Model, OperatorOrder, PotentialVariant, TrotterConfig};
use crate::{Error, Result, C64};
use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;
use core::f64::consts::PI;
#[allow(unused_imports)]
use num_traits::Float;

/// Hamiltonian, spectrum and circuit model of one lattice configuration.
#[derive(Debug, Clone)]
pub struct Problem {
    pub config: LatticeConfig,
    pub hamiltonian: DenseHamiltonian,
    pub spectrum: SpectralData,
    pub model: Model,
}

impl Problem {
    pub fn new(config: &LatticeConfig) -> Result<Problem> {
        let hamiltonian = build_hamiltonian(config)?;
        let spectrum = diagonalize(&hamiltonian)?;
        Ok(Problem { config: *config, model: Model { config: *config, kinetic: hamiltonian.kinetic_diagonal.clone() }, hamiltonian, spectrum })
    }

    pub fn dim(&self) -> usize {
        self.hamiltonian.dim()
    }

    pub fn energy(&self, psi: &[C64]) -> f64 {
        linalg::expectation(&self.hamiltonian.matrix, psi)
    }

    pub fn ground_overlap(&self, psi: &[C64]) -> f64 {
        linalg::inner(&self.spectrum.ground_state(), psi).norm_sqr()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FilterPlan {
    pub initial_state: Vec<C64>,
    /// MeV^-1
    pub filter_time: f64,
    pub e0_reference: f64,
    pub trotter: TrotterConfig,
}

impl FilterPlan {
    /// Zero-momentum start, t = π/(2Δ), E0 from the spectrum.
    pub fn reference(p: &Problem) -> FilterPlan {
        let t = PI / (2.0 * p.spectrum.gap_delta);
        FilterPlan {
            initial_state: crate::lattice::basis_state(p.dim(), 0),
            filter_time: t,
            e0_reference: p.spectrum.e0,
            trotter: TrotterConfig::new(OperatorOrder::TVT, 40, t, PotentialVariant::GrayCode),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FilterMode {
    Exact,
    Trotter,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FilterOutcome {
    pub state: Vec<C64>,
    pub success_probability: f64,
    pub energy: f64,
    pub ground_overlap: f64,
}

fn check_norm(psi: &[C64], dim: usize) -> Result<()> {
    if psi.len() != dim {
        return Err(Error::Dimension(format!("state of length {} for dimension {dim}", psi.len())));
    }
    let n = linalg::norm(psi);
    if (n - 1.0).abs() > 1e-10 {
        return Err(Error::InvalidArgument(format!("initial state norm {n} is not 1")));
    }
    Ok(())
}

/// Applies exp[-i(H - E0) t ⊗ Y_a] to ψ⊗|0⟩ and keeps the ancilla-|0⟩ branch.
pub fn energy_filter(p: &Problem, plan: &FilterPlan, mode: FilterMode) -> Result<FilterOutcome> {
    check_norm(&plan.initial_state, p.dim())?;
    let e0 = plan.e0_reference;
    let t = plan.filter_time;
    let (state, ancilla) = match mode {
        FilterMode::Exact => {
            // exp(-iAY) = cos A - i sin A Y; on |0⟩_a: cos A ψ ⊗|0⟩ + sin A ψ ⊗|1⟩
            let regs = Registers::new(p.model.n_qubits(), 1, 0);
            let cs = p.spectrum.function(|e| c(((e - e0) * t).cos(), 0.0));
            let sn = p.spectrum.function(|e| c(((e - e0) * t).sin(), 0.0));
            let mut amps = linalg::mat_vec(&cs, &plan.initial_state);
            amps.extend(linalg::mat_vec(&sn, &plan.initial_state));
            (StateVector::from_amplitudes(regs, amps)?, regs.aux_qubit(0))
        }
        FilterMode::Trotter => {
            let cfg = TrotterConfig { total_time: t, ..plan.trotter };
            let e = filter_evolution(&p.model, &cfg, e0)?;
            let a = e.circuit.registers().aux_qubit(e.circuit.registers().aux - 1);
            let init = StateVector::embed_system(e.circuit.registers(), &plan.initial_state)?;
            (final_state(&e.circuit, &init, 0)?, a)
        }
    };
    let (kept, prob) = post_select(&state, ancilla, false)?;
    let sys = kept.system_block();
    let nrm = linalg::norm(&sys);
    if nrm < 1e-12 {
        return Err(Error::PostSelection(prob));
    }
    let sys: Vec<C64> = sys.iter().map(|z| z / nrm).collect();
    Ok(FilterOutcome { energy: p.energy(&sys), ground_overlap: p.ground_overlap(&sys), success_probability: prob, state: sys })
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScanRow {
    pub ordering: OperatorOrder,
    pub steps: usize,
    pub energy_mev: f64,
    pub success_probability: f64,
}

pub fn scan_csv(rows: &[ScanRow]) -> String {
    let mut s = String::from("ordering,steps,energy_mev,success_probability\n");
    for r in rows {
        s += &format!("{},{},{},{}\n", r.ordering.label(), r.steps, crate::fmt6(r.energy_mev), crate::fmt6(r.success_probability));
    }
    s
}

/// Filter energies for each (ordering, r) with the synthesized circuits.
pub fn filter_convergence_scan(p: &Problem, plan: &FilterPlan, orderings: &[OperatorOrder], steps: &[usize]) -> Result<Vec<ScanRow>> {
    let mut rows = Vec::with_capacity(orderings.len() * steps.len());
    for &o in orderings {
        for &r in steps {
            rows.push(scan_point(p, plan, o, r)?);
        }
    }
    Ok(rows)
}

/// One point of the scan.
pub fn scan_point(p: &Problem, plan: &FilterPlan, ordering: OperatorOrder, steps: usize) -> Result<ScanRow> {
    let pl = FilterPlan { trotter: TrotterConfig { order: ordering, steps, ..plan.trotter }, ..plan.clone() };
    let out = energy_filter(p, &pl, FilterMode::Trotter)?;
    Ok(ScanRow { ordering, steps, energy_mev: out.energy, success_probability: out.success_probability })
}

/// Real, nonzero base amplitudes b_j.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum BaseState {
    /// H on every qubit.
    Hadamard,
    /// RY(θ) on every qubit: b_j = cos^{n-p}(θ/2) sin^p(θ/2).
    UniformRy(f64),
}

impl BaseState {
    pub fn amplitudes(self, n_qubits: usize) -> Vec<f64> {
        let dim = 1usize << n_qubits;
        match self {
            BaseState::Hadamard => alloc::vec![1.0 / (dim as f64).sqrt(); dim],
            BaseState::UniformRy(th) => {
                let (cs, sn) = ((th / 2.0).cos(), (th / 2.0).sin());
                (0..dim).map(|j| {
                    let p = (j as u64).count_ones() as i32;
                    cs.powi(n_qubits as i32 - p) * sn.powi(p)
                }).collect()
            }
        }
    }

    fn append(self, b: &mut CircuitBuilder, qubits: &[usize]) {
        for &q in qubits {
            match self {
                BaseState::Hadamard => {
                    b.h(q);
                }
                BaseState::UniformRy(th) => {
                    b.ry(th, q);
                }
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct InitPlan {
    /// g_j, Σ|g_j|² = 1.
    pub target: Vec<C64>,
    pub base: BaseState,
    /// Defaults to γ_max.
    pub gamma: Option<f64>,
    pub truncation_epsilon: f64,
}

impl InitPlan {
    pub fn new(target: Vec<C64>, base: BaseState) -> InitPlan {
        InitPlan { target, base, gamma: None, truncation_epsilon: 0.0 }
    }

    pub fn n_qubits(&self) -> Result<usize> {
        let n = self.target.len();
        if n < 2 || !n.is_power_of_two() {
            return Err(Error::Dimension(format!("target length {n} is not a power of two")));
        }
        Ok(n.trailing_zeros() as usize)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct InitAngles {
    pub d: Vec<f64>,
    pub gamma: f64,
    pub gamma_max: f64,
    pub success_probability: f64,
    /// θ_j = arg g_j when some g_j is not real.
    pub phases: Option<Vec<f64>>,
}

fn all_real(g: &[C64]) -> bool {
    g.iter().all(|z| z.im.abs() <= 1e-12)
}

/// γ_max = min_j |b_j / g_j| over nonzero g_j.
pub fn gamma_max(target: &[C64], base: &[f64]) -> f64 {
    target.iter().zip(base).filter(|(g, _)| g.norm() > 0.0).map(|(g, b)| (b / g.norm()).abs()).fold(f64::INFINITY, f64::min)
}

/// cos d_j = γ g_j / b_j (signed g when all g are real, |g| otherwise).
pub fn compute_init_angles(plan: &InitPlan) -> Result<InitAngles> {
    let n = plan.n_qubits()?;
    check_norm(&plan.target, 1 << n)?;
    let b = plan.base.amplitudes(n);
    if b.iter().any(|x| x.abs() < 1e-300) {
        return Err(Error::InvalidArgument("base amplitudes must be nonzero".into()));
    }
    let gmax = gamma_max(&plan.target, &b);
    let gamma = plan.gamma.unwrap_or(gmax);
    if !(gamma > 0.0) {
        return Err(Error::InvalidArgument(format!("γ = {gamma} must be positive")));
    }
    let real = all_real(&plan.target);
    let mut d = Vec::with_capacity(b.len());
    for (g, bj) in plan.target.iter().zip(&b) {
        let x = if real { gamma * g.re / bj } else { gamma * g.norm() / bj };
        if x.abs() > 1.0 + 1e-12 {
            return Err(Error::InvalidArgument(format!("γ|g/b| = {} exceeds 1", x.abs())));
        }
        d.push(x.clamp(-1.0, 1.0).acos());
    }
    let phases = if real { None } else { Some(plan.target.iter().map(|g| g.arg()).collect()) };
    let sp = b.iter().zip(&d).map(|(bj, dj)| (dj.cos() * bj).powi(2)).sum();
    Ok(InitAngles { d, gamma, gamma_max: gmax, success_probability: sp, phases })
}

/// θ of the uniform RY base maximizing γ_max². log γ_max(θ) is a minimum
/// of concave functions, so a golden-section search suffices.
pub fn optimize_uniform_ry(target: &[C64]) -> Result<(f64, f64)> {
    let n = target.len();
    if n < 2 || !n.is_power_of_two() {
        return Err(Error::Dimension(format!("target length {n} is not a power of two")));
    }
    let nq = n.trailing_zeros() as usize;
    let f = |th: f64| gamma_max(target, &BaseState::UniformRy(th).amplitudes(nq));
    let r = (5f64.sqrt() - 1.0) / 2.0;
    let (mut lo, mut hi) = (1e-9, PI - 1e-9);
    let mut x1 = hi - r * (hi - lo);
    let mut x2 = lo + r * (hi - lo);
    let (mut f1, mut f2) = (f(x1), f(x2));
    for _ in 0..200 {
        if f1 < f2 {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + r * (hi - lo);
            f2 = f(x2);
        } else {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - r * (hi - lo);
            f1 = f(x1);
        }
    }
    let th = 0.5 * (lo + hi);
    Ok((th, f(th).powi(2)))
}

/// Basis states sorted by |k| (stable), assigned to bit strings in order of
/// Hamming weight and then value.
pub fn energy_sorted_mapping(config: &LatticeConfig) -> Result<TwoBodyBasis> {
    let mut basis = build_momentum_grid(config)?;
    let n = basis.len();
    let scale = basis.states.iter().map(|k| k.norm_sqr()).fold(0.0, f64::max).max(1e-300);
    let key = |s: usize| (basis.states[s].norm_sqr() / scale * 1e12).round() as i64;
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by_key(|&s| key(s));
    let mut strings: Vec<usize> = (0..n).collect();
    strings.sort_by_key(|&s| ((s as u64).count_ones(), s));
    let mut codes = alloc::vec![0; n];
    for (r, &s) in order.iter().enumerate() {
        codes[s] = strings[r];
    }
    basis.codes = codes;
    Ok(basis)
}

/// Re-indexes a vector given by standard codes into the codes of `basis`.
pub fn remap_state(v: &[C64], basis: &TwoBodyBasis) -> Vec<C64> {
    let mut out = alloc::vec![C64::new(0.0, 0.0); v.len()];
    for (s, &cd) in basis.codes.iter().enumerate() {
        out[cd] = v[s];
    }
    out
}

/// Hamiltonian in the codes of `basis`.
pub fn hamiltonian_in(config: &LatticeConfig, basis: &TwoBodyBasis) -> DenseHamiltonian {
    build_hamiltonian_in(config, basis)
}

#[derive(Debug, Clone, PartialEq)]
pub struct InitCircuit {
    /// Base preparation, exp(-iQ⊗Y_a), then exp(iΘ) if needed; the ancilla
    /// must be post-selected on |0⟩.
    pub circuit: QuantumCircuit,
    pub ancilla: usize,
    pub q_terms: PauliSum,
    pub retained_terms: usize,
    /// Phase accumulated by the exp(iΘ) identity term.
    pub phase: f64,
}

pub fn state_init_circuit(plan: &InitPlan, angles: &InitAngles) -> Result<InitCircuit> {
    let n = plan.n_qubits()?;
    if angles.d.len() != 1 << n {
        return Err(Error::Dimension("angles do not match the target".into()));
    }
    let regs = Registers::new(n, 1, 0);
    let a = regs.aux_qubit(0);
    let sys: Vec<usize> = (0..n).collect();
    let mut q = map_diagonal(&angles.d)?;
    if plan.truncation_epsilon > 0.0 {
        q = q.truncate(plan.truncation_epsilon);
    }
    let mut b = CircuitBuilder::new(regs);
    plan.base.append(&mut b, &sys);
    b.sdg(a).h(a);
    append_coupled_diagonal(&mut b, &q.terms, &sys, a, 1.0)?;
    b.h(a).s(a);
    let mut phase = 0.0;
    if let Some(th) = &angles.phases {
        let neg: Vec<f64> = th.iter().map(|x| -x).collect();
        let s = map_diagonal(&neg)?;
        phase = append_diagonal(&mut b, &s.terms, &sys, 1.0)?;
    }
    let retained = q.len();
    Ok(InitCircuit { circuit: b.build().with_global_phase(phase), ancilla: a, q_terms: q, retained_terms: retained, phase })
}

/// Simulated post-selected system state and the ancilla-|0⟩ probability.
pub fn prepare_state(init: &InitCircuit) -> Result<(Vec<C64>, f64)> {
    let st = final_state(&init.circuit, &StateVector::zero(init.circuit.registers()), 0)?;
    let (kept, prob) = post_select(&st, init.ancilla, false)?;
    let g = linalg::cis(init.circuit.global_phase());
    let sys = kept.system_block();
    let nrm = linalg::norm(&sys);
    Ok((sys.iter().map(|z| z * g / nrm).collect(), prob))
}

/// Dense cos² filter probability <ψ|cos²[(H - E0) t]|ψ⟩.
pub fn filter_probability(spec: &SpectralData, psi: &[C64], t: f64) -> f64 {
    let e0 = spec.e0;
    let m: CMat = spec.function(|e| c(((e - e0) * t).cos().powi(2), 0.0));
    linalg::expectation(&m, psi)
}
