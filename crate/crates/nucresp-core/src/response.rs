//! Response function through phase estimation with windowed operators
//! exp(i2π2^k α(H̄ - β)), directionally controlled Trotter evolutions and an
//! inverse QFT on the phase register.

use crate::circuit::{CircuitBuilder, GateCounts, QuantumCircuit, Registers};
use crate::lattice::{build_hamiltonian, LatticeConfig, SpectralData};
use crate::linalg::{self, c, cis, CMat};
use crate::pauli::{map_matrix_pruned, PauliSum, PauliTerm};
use crate::simulator::{aggregate, kernels, run_trajectory, NoiseModel, Plan, Readout, RunOptions, RunResult, StateVector, Trajectory};
use crate::state_prep::Problem;
use crate::synthesis::{append_pauli_rotations, directional_evolution, Evolution, Layout, OperatorOrder, PhaseLedger, PotentialVariant, TrotterConfig};
use crate::{fmt6, Error, Result, C64};
use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;
use core::f64::consts::PI;
#[allow(unused_imports)]
use num_traits::Float;

/// H̄ = (H - E0)/ΔH.
#[derive(Debug, Clone, PartialEq)]
pub struct ScaledHamiltonian {
    pub e0: f64,
    pub delta_h: f64,
    /// Eigenvalues of H̄, ascending in [0, 1].
    pub eigenvalues: Vec<f64>,
}

impl ScaledHamiltonian {
    /// Energy spacing of the ω̄ grid in MeV.
    pub fn resolution_mev(&self, w: usize, alpha: f64) -> f64 {
        self.delta_h / (1u64 << w) as f64 / alpha
    }
}

pub fn scaled_hamiltonian(spec: &SpectralData) -> Result<ScaledHamiltonian> {
    if !(spec.delta_h > 0.0) {
        return Err(Error::InvalidArgument("spectral width ΔH is zero".into()));
    }
    Ok(ScaledHamiltonian { e0: spec.e0, delta_h: spec.delta_h, eigenvalues: spec.eigenvalues.iter().map(|e| (e - spec.e0) / spec.delta_h).collect() })
}

/// exp(i (q/2)·r) on the relative coordinate, q/2 in units of 2π/L per axis.
#[derive(Debug, Clone, PartialEq)]
pub struct TransitionOperator {
    pub q_half: [i64; 3],
    /// G with Ô = exp(iG).
    pub generator: PauliSum,
    /// Ô in the code basis: |k⟩ → |k + q/2⟩.
    pub matrix: CMat,
}

/// Position operator of one axis in its momentum basis, sites l = 0..n-1,
/// with ⟨k_j|z_l⟩ = e^{-i k_j z_l}/√n; scaled by 2π m / n.
fn axis_generator(n: usize, m: i64) -> CMat {
    let nf = n as f64;
    CMat::from_fn(n, n, |j, jp| {
        let mut s = c(0.0, 0.0);
        for l in 0..n {
            s += cis(-2.0 * PI * (j as f64 - jp as f64) * l as f64 / nf) * l as f64;
        }
        s * (2.0 * PI * m as f64 / nf / nf)
    })
}

fn axis_shift(n: usize, m: i64) -> CMat {
    let mut s = CMat::zeros(n, n);
    for j in 0..n {
        s[((j as i64 + m).rem_euclid(n as i64) as usize, j)] = c(1.0, 0.0);
    }
    s
}

pub fn transition_operator(config: &LatticeConfig, q_half: [i64; 3]) -> Result<TransitionOperator> {
    config.validate()?;
    let ns = [config.n_x, config.n_y, config.n_z];
    let dims: Vec<CMat> = (0..3).map(|a| CMat::identity(ns[a], ns[a])).collect();
    let embed = |a: usize, m: &CMat| -> CMat {
        let mut f = [dims[0].clone(), dims[1].clone(), dims[2].clone()];
        f[a] = m.clone();
        linalg::kron(&linalg::kron(&f[0], &f[1]), &f[2])
    };
    let dim = config.n_sites();
    let mut g = CMat::zeros(dim, dim);
    let mut o = CMat::identity(dim, dim);
    for a in 0..3 {
        if q_half[a] != 0 {
            g += embed(a, &axis_generator(ns[a], q_half[a]));
            o = embed(a, &axis_shift(ns[a], q_half[a])) * o;
        }
    }
    let generator = map_matrix_pruned(&g, 1e-12)?;
    Ok(TransitionOperator { q_half, generator, matrix: o })
}

/// q/2 given in fm^-1 along each axis; must lie on the momentum grid.
pub fn q_half_from_momentum(config: &LatticeConfig, q_half_fm: [f64; 3]) -> Result<[i64; 3]> {
    let ls = config.side_lengths();
    let mut out = [0i64; 3];
    for a in 0..3 {
        let m = q_half_fm[a] * ls[a] / (2.0 * PI);
        if (m - m.round()).abs() > 1e-6 {
            return Err(Error::InvalidArgument(format!("q/2 = {} fm^-1 is not a multiple of 2π/L on axis {a}", q_half_fm[a])));
        }
        out[a] = m.round() as i64;
    }
    Ok(out)
}

impl TransitionOperator {
    /// |q| in fm^-1 (the full transfer, twice q/2).
    pub fn q_magnitude(&self, config: &LatticeConfig) -> f64 {
        let ls = config.side_lengths();
        2.0 * (0..3).map(|a| (2.0 * PI * self.q_half[a] as f64 / ls[a]).powi(2)).sum::<f64>().sqrt()
    }

    /// E_CM = q²/4m in MeV.
    pub fn cm_energy(&self, config: &LatticeConfig) -> f64 {
        let q = self.q_magnitude(config);
        config.hbar_c * config.hbar_c * q * q / (4.0 * config.nucleon_mass)
    }

    /// ω̄ of the quasi-elastic center ω = q²/2m - E0.
    pub fn qe_center(&self, config: &LatticeConfig, scaled: &ScaledHamiltonian) -> f64 {
        let q = self.q_magnitude(config);
        let w = config.hbar_c * config.hbar_c * q * q / (2.0 * config.nucleon_mass) - scaled.e0;
        (w - self.cm_energy(config)) / scaled.delta_h
    }

    /// Terms ordered so that the grouping gives one basis change per group:
    /// Y-free strings first, then by descending Y mask.
    pub fn term_order(&self) -> Vec<PauliTerm> {
        let mut t: Vec<PauliTerm> = self.generator.terms.iter().filter(|t| !t.is_identity()).copied().collect();
        t.sort_by_key(|p| {
            let y = p.x & p.z;
            (y != 0, core::cmp::Reverse(y), p.x, p.z)
        });
        t
    }
}

/// Appends `steps` first-order steps of exp(iG/steps); returns the phase.
pub fn append_transition(b: &mut CircuitBuilder, op: &TransitionOperator, steps: usize, qubits: &[usize]) -> Result<f64> {
    if steps == 0 {
        return Err(Error::InvalidArgument("transition circuit needs at least one step".into()));
    }
    let order = op.term_order();
    let mut phase = 0.0;
    for _ in 0..steps {
        phase += append_pauli_rotations(b, &op.generator, &order, qubits, -1.0 / steps as f64)?;
    }
    Ok(phase)
}

pub fn transition_circuit(op: &TransitionOperator, steps: usize) -> Result<Evolution> {
    let n = op.generator.n_qubits;
    let mut b = CircuitBuilder::new(Registers::new(n, 0, 0));
    let q: Vec<usize> = (0..n).collect();
    let phase = append_transition(&mut b, op, steps, &q)?;
    Ok(Evolution { circuit: b.build(), ledger: PhaseLedger { phase, ..Default::default() } })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QpeConfig {
    pub w: usize,
    pub alpha: f64,
    pub beta: f64,
    /// Steps for k = 0; k uses steps_k0·2^k.
    pub steps_k0: usize,
    pub order: OperatorOrder,
    pub variant: PotentialVariant,
    pub noise: NoiseModel,
    pub shots: usize,
    /// Refuse to build circuits with more gates than this.
    pub gate_cap: Option<usize>,
}

impl QpeConfig {
    /// Three phase qubits over the window [0, 1/10): 8 bins inside the
    /// quasi-elastic region, 70 steps.
    pub fn window() -> QpeConfig {
        QpeConfig { w: 3, alpha: 10.0, beta: 0.0, steps_k0: 10, order: OperatorOrder::TVT, variant: PotentialVariant::McuFeedforward, noise: NoiseModel::noiseless(), shots: 0, gate_cap: Some(200_000) }
    }

    /// Six phase qubits over [0, 1), 63 steps.
    pub fn full() -> QpeConfig {
        QpeConfig { w: 6, alpha: 1.0, beta: 0.0, steps_k0: 1, ..QpeConfig::window() }
    }

    pub fn validate(&self) -> Result<()> {
        if self.w == 0 || self.w > 20 {
            return Err(Error::InvalidConfig(format!("qpe.w = {} must be in 1..=20", self.w)));
        }
        if !(self.alpha >= 1.0) || !self.alpha.is_finite() {
            return Err(Error::InvalidConfig(format!("qpe.alpha = {} must be ≥ 1", self.alpha)));
        }
        if !(0.0..1.0).contains(&self.beta) {
            return Err(Error::InvalidConfig(format!("qpe.beta = {} must lie in [0, 1)", self.beta)));
        }
        if self.steps_k0 == 0 {
            return Err(Error::InvalidConfig("qpe.steps_k0 must be positive".into()));
        }
        if self.order.order() != 2 {
            return Err(Error::InvalidConfig("directional control needs a second-order formula".into()));
        }
        self.noise.validate()
    }

    pub fn bins(&self) -> usize {
        1 << self.w
    }

    pub fn omega_bar(&self, a: usize) -> f64 {
        a as f64 / (self.bins() as f64 * self.alpha) + self.beta
    }

    /// Σ_k 2π 2^k α = 2πα(2^W - 1).
    pub fn total_time(&self) -> f64 {
        2.0 * PI * self.alpha * (self.bins() - 1) as f64
    }

    pub fn total_steps(&self) -> usize {
        self.steps_k0 * (self.bins() - 1)
    }
}

/// Inverse QFT on `qubits` (qubit k has weight 2^k) followed by measurement;
/// qubit k is read into bit base + W-1-k so that the outcome key is a.
pub fn append_inverse_qft(b: &mut CircuitBuilder, qubits: &[usize]) -> Result<()> {
    let w = qubits.len();
    for k in (0..w).rev() {
        for j in k + 1..w {
            let lam = -2.0 * PI / (1u64 << (j - k + 1)) as f64;
            let (cq, tq) = (qubits[j], qubits[k]);
            b.rz(lam / 2.0, cq).rz(lam / 2.0, tq).cnot(cq, tq).rz(-lam / 2.0, tq).cnot(cq, tq);
            b.add_phase(lam / 4.0);
        }
        b.h(qubits[k]);
    }
    let base = b.n_bits();
    b.add_bits(w);
    for (k, &q) in qubits.iter().enumerate() {
        b.measure(q, base + w - 1 - k);
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq)]
pub struct QpeCircuit {
    pub circuit: QuantumCircuit,
    pub layout: Layout,
    /// Gates of the directional evolutions only.
    pub evolution_counts: GateCounts,
    pub total_steps: usize,
}

/// Phase-estimation circuit acting on a system prepared in Ô|Ψ0⟩ (or, with
/// `transition`, in |Ψ0⟩ followed by the transition circuit).
pub fn qpe_circuit(p: &Problem, cfg: &QpeConfig, transition: Option<&Evolution>) -> Result<QpeCircuit> {
    cfg.validate()?;
    let nq = p.model.n_qubits();
    let layout = Layout::new(nq, cfg.variant, false, cfg.w);
    let regs = layout.registers;
    if let Some(cap) = cfg.gate_cap {
        // cheap estimate from one directional step before building
        let probe = directional_evolution(&p.model, &TrotterConfig::new(cfg.order, 2, 1e-3, cfg.variant), &layout, regs.qpe_qubit(0), 0.0)?;
        let est = probe.circuit.len() / 2 * cfg.total_steps();
        if est > cap {
            return Err(Error::Budget { gates: est, cap });
        }
    }
    let mut b = CircuitBuilder::new(regs);
    if let Some(t) = transition {
        b.append(&t.circuit)?;
        b.add_phase(t.ledger.phase);
    }
    let qpe: Vec<usize> = (0..cfg.w).map(|k| regs.qpe_qubit(k)).collect();
    for &q in &qpe {
        b.h(q);
    }
    let offset = p.spectrum.e0 + cfg.beta * p.spectrum.delta_h;
    let mut counts = GateCounts::default();
    for (k, &ctl) in qpe.iter().enumerate() {
        let tau = 2.0 * PI * (1u64 << k) as f64 * cfg.alpha;
        let t = tau / (2.0 * p.spectrum.delta_h);
        let tc = TrotterConfig::new(cfg.order, cfg.steps_k0 << k, t, cfg.variant);
        let e = directional_evolution(&p.model, &tc, &layout, ctl, offset)?;
        counts = counts + e.circuit.count_gates();
        b.append(&e.circuit)?;
    }
    append_inverse_qft(&mut b, &qpe)?;
    let circuit = b.build();
    if let Some(cap) = cfg.gate_cap {
        if circuit.len() > cap {
            return Err(Error::Budget { gates: circuit.len(), cap });
        }
    }
    Ok(QpeCircuit { circuit, layout, evolution_counts: counts, total_steps: cfg.total_steps() })
}

/// Σ_ν s_ν |(1/M) Σ_x e^{2πix(φ_ν - a/M)}|² with φ_ν = α(ω̄_ν - β).
pub fn qpe_kernel_probabilities(levels: &[(f64, f64)], cfg: &QpeConfig) -> Vec<f64> {
    let m = cfg.bins();
    let mf = m as f64;
    (0..m)
        .map(|a| {
            levels
                .iter()
                .map(|&(wb, s)| {
                    let d = cfg.alpha * (wb - cfg.beta) - a as f64 / mf;
                    let den = mf * (PI * d).sin();
                    let k = if den.abs() < 1e-13 { 1.0 } else { (PI * mf * d).sin() / den };
                    s * k * k
                })
                .sum()
        })
        .collect()
}

/// Outcome distribution of ideal phase estimation from the eigen-decomposition.
pub fn exact_qpe_reference(spec: &SpectralData, op: &TransitionOperator, cfg: &QpeConfig) -> Result<Vec<f64>> {
    let levels = crate::lattice::exact_response(spec, &op.matrix, &spec.ground_state())?;
    Ok(qpe_kernel_probabilities(&levels, cfg))
}

/// The phase-estimation pipeline with the directional evolutions replaced by
/// exact exponentials; the Hadamards and inverse QFT are the circuit ones.
pub fn oracle_qpe_probabilities(spec: &SpectralData, psi: &[C64], cfg: &QpeConfig) -> Result<Vec<f64>> {
    cfg.validate()?;
    let dim = spec.dim();
    if psi.len() != dim || !dim.is_power_of_two() {
        return Err(Error::Dimension("state does not match the spectrum".into()));
    }
    let nq = dim.trailing_zeros() as usize;
    let regs = Registers::new(nq, 0, cfg.w);
    let mut amps = alloc::vec![c(0.0, 0.0); dim << cfg.w];
    amps[..dim].copy_from_slice(psi);
    for k in 0..cfg.w {
        kernels::h(&mut amps, regs.qpe_qubit(k));
    }
    let g = |e: f64| (e - spec.e0) / spec.delta_h - cfg.beta;
    for k in 0..cfg.w {
        let tau = 2.0 * PI * (1u64 << k) as f64 * cfg.alpha;
        let fwd = spec.function(|e| cis(-g(e) * tau / 2.0));
        let bwd = spec.function(|e| cis(g(e) * tau / 2.0));
        for x in 0..1usize << cfg.w {
            let u = if (x >> k) & 1 == 1 { &bwd } else { &fwd };
            let blk = &mut amps[x * dim..(x + 1) * dim];
            let out = linalg::mat_vec(u, blk);
            blk.copy_from_slice(&out);
        }
    }
    let mut b = CircuitBuilder::new(regs);
    let q: Vec<usize> = (0..cfg.w).map(|k| regs.qpe_qubit(k)).collect();
    append_inverse_qft(&mut b, &q)?;
    let circ = b.build();
    let init = StateVector::from_amplitudes(regs, amps)?;
    let r = crate::simulator::run_with(&circ, &init, &RunOptions::default())?;
    Ok(r.probabilities)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ResponseRow {
    pub a: usize,
    pub omega_bar: f64,
    pub omega_mev: f64,
    pub probability: f64,
    /// P(a) divided by the ω̄ bin width.
    pub strength: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ResponseDataset {
    pub rows: Vec<ResponseRow>,
    pub config: QpeConfig,
    pub delta_h: f64,
    pub e_cm: f64,
    pub seed: u64,
    pub trajectories: usize,
    pub shots: usize,
    pub gate_counts: Option<GateCounts>,
    pub total_evolution_time: f64,
}

impl ResponseDataset {
    pub fn probabilities(&self) -> Vec<f64> {
        self.rows.iter().map(|r| r.probability).collect()
    }

    pub fn to_csv(&self) -> String {
        let mut s = String::from("a,omega_bar,omega_mev,probability,strength\n");
        for r in &self.rows {
            s += &format!("{},{},{},{},{}\n", r.a, fmt6(r.omega_bar), fmt6(r.omega_mev), fmt6(r.probability), fmt6(r.strength));
        }
        s
    }
}

/// Rows from outcome probabilities P(a).
pub fn response_from_probabilities(probs: &[f64], cfg: &QpeConfig, delta_h: f64, e_cm: f64) -> Result<ResponseDataset> {
    if probs.len() != cfg.bins() {
        return Err(Error::Dimension(format!("{} probabilities for {} bins", probs.len(), cfg.bins())));
    }
    let width = 1.0 / (cfg.bins() as f64 * cfg.alpha);
    let rows = probs
        .iter()
        .enumerate()
        .map(|(a, &p)| {
            let wb = cfg.omega_bar(a);
            ResponseRow { a, omega_bar: wb, omega_mev: wb * delta_h + e_cm, probability: p, strength: p / width }
        })
        .collect();
    Ok(ResponseDataset { rows, config: *cfg, delta_h, e_cm, seed: 0, trajectories: 0, shots: 0, gate_counts: None, total_evolution_time: cfg.total_time() })
}

/// Sampled frequencies in shot mode, otherwise the amplitude probabilities.
pub fn extract_response(result: &RunResult, cfg: &QpeConfig, delta_h: f64, e_cm: f64) -> Result<ResponseDataset> {
    let probs: Vec<f64> = if result.shots > 0 { (0..cfg.bins()).map(|a| result.frequency(a as u64)).collect() } else { result.probabilities.clone() };
    let mut d = response_from_probabilities(&probs, cfg, delta_h, e_cm)?;
    d.seed = result.seed;
    d.trajectories = result.trajectories;
    d.shots = result.shots;
    Ok(d)
}

/// Initial statevector for the circuit: Ô|Ψ0⟩ on the system register.
pub fn excited_input(p: &Problem, op: &TransitionOperator, regs: Registers) -> Result<StateVector> {
    let phi = linalg::mat_vec(&op.matrix, &p.spectrum.ground_state());
    StateVector::embed_system(regs, &phi)
}

/// Compiles and simulates the pipeline, returning the dataset.
pub fn run_response(p: &Problem, op: &TransitionOperator, cfg: &QpeConfig, seed: u64, readout: Readout) -> Result<ResponseDataset> {
    let qc = qpe_circuit(p, cfg, None)?;
    let init = excited_input(p, op, qc.circuit.registers())?;
    let opts = RunOptions { readout, shots: cfg.shots, noise: cfg.noise, seed, ..Default::default() };
    let r = crate::simulator::run_with(&qc.circuit, &init, &opts)?;
    let mut d = extract_response(&r, cfg, p.spectrum.delta_h, op.cm_energy(&p.config))?;
    d.gate_counts = Some(qc.circuit.count_gates());
    Ok(d)
}

/// Per-bin mean and variance of P(a) over noisy trajectories.
#[derive(Debug, Clone, PartialEq)]
pub struct NoisePoint {
    pub p: f64,
    pub mean: Vec<f64>,
    pub variance: Vec<f64>,
    pub trajectories: usize,
}

impl NoisePoint {
    /// (peak value, median, peak/median).
    pub fn peak_over_median(&self) -> (f64, f64, f64) {
        let peak = self.mean.iter().cloned().fold(0.0, f64::max);
        let mut s = self.mean.clone();
        s.sort_by(f64::total_cmp);
        let n = s.len();
        let med = if n % 2 == 1 { s[n / 2] } else { 0.5 * (s[n / 2 - 1] + s[n / 2]) };
        (peak, med, if med > 0.0 { peak / med } else { f64::INFINITY })
    }

    pub fn peak_bin(&self) -> usize {
        self.mean.iter().enumerate().fold((0, f64::MIN), |(bi, bv), (i, &v)| if v > bv { (i, v) } else { (bi, bv) }).0
    }
}

pub fn noise_stats(p: f64, per_trajectory: &[Vec<f64>]) -> NoisePoint {
    let n = per_trajectory.len();
    let m = per_trajectory.first().map_or(0, |v| v.len());
    let mut mean = alloc::vec![0.0; m];
    for v in per_trajectory {
        for (a, x) in mean.iter_mut().zip(v) {
            *a += x / n as f64;
        }
    }
    let mut var = alloc::vec![0.0; m];
    if n > 1 {
        for v in per_trajectory {
            for i in 0..m {
                var[i] += (v[i] - mean[i]).powi(2) / (n - 1) as f64;
            }
        }
    }
    NoisePoint { p, mean, variance: var, trajectories: n }
}

/// Seed for the i-th value of a sweep.
pub fn sweep_seed(seed: u64, index: usize) -> u64 {
    seed ^ (index as u64 + 1).wrapping_mul(0x9E37_79B9_7F4A_7C15)
}

/// One trajectory of a noisy amplitude-mode run.
pub fn noisy_trajectory(circuit: &QuantumCircuit, plan: &Plan, init: &StateVector, p: f64, seed: u64, index: u64) -> Result<Trajectory> {
    let opts = RunOptions { noise: NoiseModel::depolarizing(p), seed, ..Default::default() };
    run_trajectory(circuit, plan, init, &opts, index)
}

/// Sequential sweep over depolarizing strengths.
pub fn noise_sweep(circuit: &QuantumCircuit, init: &StateVector, ps: &[f64], trajectories: usize, seed: u64) -> Result<Vec<NoisePoint>> {
    let plan = Plan::new(circuit)?;
    let mut out = Vec::with_capacity(ps.len());
    for (i, &p) in ps.iter().enumerate() {
        NoiseModel::depolarizing(p).validate()?;
        let s = sweep_seed(seed, i);
        let mut per = Vec::with_capacity(trajectories);
        for t in 0..trajectories {
            per.push(noisy_trajectory(circuit, &plan, init, p, s, t as u64)?.probabilities);
        }
        out.push(noise_stats(p, &per));
    }
    Ok(out)
}

/// Amplitude-mode result of a set of trajectories (for callers that run
/// trajectories themselves).
pub fn combine(circuit: &QuantumCircuit, p: f64, seed: u64, ts: &[Trajectory]) -> Result<RunResult> {
    let plan = Plan::new(circuit)?;
    let opts = RunOptions { noise: NoiseModel::depolarizing(p), seed, trajectories: Some(ts.len()), ..Default::default() };
    Ok(aggregate(&plan, &opts, ts))
}

/// Hamiltonian diagonal for quick checks.
pub fn kinetic_diagonal(config: &LatticeConfig) -> Result<Vec<f64>> {
    Ok(build_hamiltonian(config)?.kinetic_diagonal)
}
