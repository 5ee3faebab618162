//! Dense statevector execution with mid-circuit measurement, feed-forward,
//! post-selection and two-qubit depolarizing noise sampled as stochastic
//! Pauli insertions.

use crate::circuit::{GateKind, QuantumCircuit, Registers};
use crate::lattice::DenseHamiltonian;
use crate::linalg::CMat;
use crate::pauli::PauliSum;
use crate::rng::{trajectory_streams, Stream};
use crate::{Error, Result, C64};
use alloc::collections::BTreeMap;
use alloc::format;
use alloc::vec::Vec;
#[allow(unused_imports)]
use num_traits::Float;

pub mod kernels {
    //! In-place gate kernels on a full amplitude vector.

    use crate::circuit::GateKind;
    use crate::linalg::cis;
    use crate::C64;
    use core::f64::consts::{FRAC_1_SQRT_2, FRAC_PI_4};
    #[allow(unused_imports)]
    use num_traits::Float;

    pub fn h(v: &mut [C64], q: usize) {
        let s = 1 << q;
        let r = FRAC_1_SQRT_2;
        for chunk in v.chunks_exact_mut(2 * s) {
            let (a, b) = chunk.split_at_mut(s);
            for (x, y) in a.iter_mut().zip(b.iter_mut()) {
                let (p, m) = (*x + *y, *x - *y);
                *x = p * r;
                *y = m * r;
            }
        }
    }

    pub fn x(v: &mut [C64], q: usize) {
        let s = 1 << q;
        for chunk in v.chunks_exact_mut(2 * s) {
            let (a, b) = chunk.split_at_mut(s);
            a.swap_with_slice(b);
        }
    }

    /// diag(d0, d1) on qubit q.
    pub fn diag(v: &mut [C64], q: usize, d0: C64, d1: C64) {
        let s = 1 << q;
        let one = C64::new(1.0, 0.0);
        for chunk in v.chunks_exact_mut(2 * s) {
            let (a, b) = chunk.split_at_mut(s);
            if d0 != one {
                a.iter_mut().for_each(|z| *z *= d0);
            }
            if d1 != one {
                b.iter_mut().for_each(|z| *z *= d1);
            }
        }
    }

    pub fn ry(v: &mut [C64], q: usize, angle: f64) {
        let s = 1 << q;
        let (sn, cs) = ((angle / 2.0).sin(), (angle / 2.0).cos());
        for chunk in v.chunks_exact_mut(2 * s) {
            let (a, b) = chunk.split_at_mut(s);
            for (x, y) in a.iter_mut().zip(b.iter_mut()) {
                let (p, m) = (*x, *y);
                *x = p * cs - m * sn;
                *y = p * sn + m * cs;
            }
        }
    }

    pub fn cnot(v: &mut [C64], control: usize, target: usize) {
        let (cs, ts) = (1usize << control, 1usize << target);
        if control > target {
            for chunk in v.chunks_exact_mut(2 * cs) {
                let hi = &mut chunk[cs..];
                for sub in hi.chunks_exact_mut(2 * ts) {
                    let (a, b) = sub.split_at_mut(ts);
                    a.swap_with_slice(b);
                }
            }
        } else {
            for chunk in v.chunks_exact_mut(2 * ts) {
                let (a, b) = chunk.split_at_mut(ts);
                for (ca, cb) in a.chunks_exact_mut(2 * cs).zip(b.chunks_exact_mut(2 * cs)) {
                    ca[cs..].swap_with_slice(&mut cb[cs..]);
                }
            }
        }
    }

    pub fn cz(v: &mut [C64], a: usize, b: usize) {
        let (hi, lo) = if a > b { (a, b) } else { (b, a) };
        let (hs, ls) = (1usize << hi, 1usize << lo);
        for chunk in v.chunks_exact_mut(2 * hs) {
            for sub in chunk[hs..].chunks_exact_mut(2 * ls) {
                sub[ls..].iter_mut().for_each(|z| *z = -*z);
            }
        }
    }

    /// Applies a unitary gate; non-unitary gates are ignored.
    pub fn apply_unitary(v: &mut [C64], g: &GateKind) {
        let one = C64::new(1.0, 0.0);
        match *g {
            GateKind::H(q) => h(v, q),
            GateKind::X(q) => x(v, q),
            GateKind::Z(q) => diag(v, q, one, -one),
            GateKind::S(q) => diag(v, q, one, C64::new(0.0, 1.0)),
            GateKind::Sdg(q) => diag(v, q, one, C64::new(0.0, -1.0)),
            GateKind::T(q) => diag(v, q, one, cis(FRAC_PI_4)),
            GateKind::Tdg(q) => diag(v, q, one, cis(-FRAC_PI_4)),
            GateKind::Rz { angle, target } => diag(v, target, cis(-angle / 2.0), cis(angle / 2.0)),
            GateKind::Ry { angle, target } => ry(v, target, angle),
            GateKind::Cnot { control, target } => cnot(v, control, target),
            GateKind::Cz { control, target } => cz(v, control, target),
            GateKind::MeasureToBit { .. } | GateKind::ClassicallyControlledCz { .. } | GateKind::Reset(_) => {}
        }
    }

    /// Pauli 0=I, 1=X, 2=Y, 3=Z (global phase of Y dropped).
    pub fn pauli(v: &mut [C64], q: usize, p: u8) {
        let one = C64::new(1.0, 0.0);
        match p {
            1 => x(v, q),
            2 => {
                x(v, q);
                diag(v, q, one, -one)
            }
            3 => diag(v, q, one, -one),
            _ => {}
        }
    }

    /// Probability that qubit q reads 1.
    pub fn prob_one(v: &[C64], q: usize) -> f64 {
        let s = 1 << q;
        v.chunks_exact(2 * s).map(|ch| ch[s..].iter().map(|z| z.norm_sqr()).sum::<f64>()).sum()
    }

    /// Projects qubit q onto `value` and renormalizes by 1/sqrt(p).
    pub fn project(v: &mut [C64], q: usize, value: bool, p: f64) {
        let s = 1 << q;
        let k = 1.0 / p.sqrt();
        for chunk in v.chunks_exact_mut(2 * s) {
            let (a, b) = chunk.split_at_mut(s);
            let (keep, kill) = if value { (b, a) } else { (a, b) };
            keep.iter_mut().for_each(|z| *z *= k);
            kill.iter_mut().for_each(|z| *z = C64::new(0.0, 0.0));
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct StateVector {
    pub amplitudes: Vec<C64>,
    pub registers: Registers,
}

impl StateVector {
    pub fn zero(registers: Registers) -> Self {
        let mut a = alloc::vec![C64::new(0.0, 0.0); 1 << registers.total()];
        a[0] = C64::new(1.0, 0.0);
        StateVector { amplitudes: a, registers }
    }

    pub fn basis(registers: Registers, index: usize) -> Self {
        let mut s = Self::zero(registers);
        s.amplitudes[0] = C64::new(0.0, 0.0);
        s.amplitudes[index] = C64::new(1.0, 0.0);
        s
    }

    pub fn from_amplitudes(registers: Registers, amplitudes: Vec<C64>) -> Result<Self> {
        if amplitudes.len() != 1 << registers.total() {
            return Err(Error::Dimension(format!("{} amplitudes for {} qubits", amplitudes.len(), registers.total())));
        }
        Ok(StateVector { amplitudes, registers })
    }

    /// System amplitudes embedded with every other register in |0⟩.
    pub fn embed_system(registers: Registers, system: &[C64]) -> Result<Self> {
        if system.len() != 1 << registers.system {
            return Err(Error::Dimension(format!("{} amplitudes for {} system qubits", system.len(), registers.system)));
        }
        let mut a = alloc::vec![C64::new(0.0, 0.0); 1 << registers.total()];
        a[..system.len()].copy_from_slice(system);
        Ok(StateVector { amplitudes: a, registers })
    }

    pub fn n_qubits(&self) -> usize {
        self.registers.total()
    }

    pub fn norm(&self) -> f64 {
        crate::linalg::norm(&self.amplitudes)
    }

    pub fn apply(&mut self, g: &GateKind) {
        kernels::apply_unitary(&mut self.amplitudes, g);
    }

    /// System amplitudes of the block where all other qubits are |0⟩.
    pub fn system_block(&self) -> Vec<C64> {
        self.amplitudes[..1 << self.registers.system].to_vec()
    }

    /// Marginal distribution of the listed qubits; bit j of the outcome
    /// index is qubits[j].
    pub fn marginal(&self, qubits: &[usize]) -> Vec<f64> {
        let mut out = alloc::vec![0.0; 1 << qubits.len()];
        for (i, z) in self.amplitudes.iter().enumerate() {
            let p = z.norm_sqr();
            if p == 0.0 {
                continue;
            }
            let mut k = 0;
            for (j, &q) in qubits.iter().enumerate() {
                k |= ((i >> q) & 1) << j;
            }
            out[k] += p;
        }
        out
    }
}

/// Projects `qubit` onto `value`; returns the renormalized state and the
/// projection probability.
pub fn post_select(state: &StateVector, qubit: usize, value: bool) -> Result<(StateVector, f64)> {
    if qubit >= state.n_qubits() {
        return Err(Error::InvalidArgument(format!("qubit {qubit} out of range")));
    }
    let p1 = kernels::prob_one(&state.amplitudes, qubit);
    let nrm = state.norm().powi(2);
    let p = if value { p1 } else { nrm - p1 } / nrm;
    if p < 1e-14 {
        return Err(Error::PostSelection(p));
    }
    let mut s = state.clone();
    kernels::project(&mut s.amplitudes, qubit, value, p * nrm);
    Ok((s, p))
}

pub enum Observable<'a> {
    Dense(&'a DenseHamiltonian),
    Matrix(&'a CMat),
    Pauli(&'a PauliSum),
}

/// ⟨ψ|H ⊗ I|ψ⟩ with H acting on the system register.
pub fn expectation(op: Observable<'_>, state: &StateVector) -> Result<f64> {
    let ns = 1usize << state.registers.system;
    let dim_ok = match &op {
        Observable::Dense(h) => h.dim() == ns,
        Observable::Matrix(m) => m.nrows() == ns && m.ncols() == ns,
        Observable::Pauli(p) => p.n_qubits == state.registers.system,
    };
    if !dim_ok {
        return Err(Error::Dimension("observable does not match the system register".into()));
    }
    let mut acc = C64::new(0.0, 0.0);
    for block in state.amplitudes.chunks_exact(ns) {
        if block.iter().all(|z| *z == C64::new(0.0, 0.0)) {
            continue;
        }
        let hv = match &op {
            Observable::Dense(h) => crate::linalg::mat_vec(&h.matrix, block),
            Observable::Matrix(m) => crate::linalg::mat_vec(m, block),
            Observable::Pauli(p) => crate::pauli::apply_sum(p, block),
        };
        acc += crate::linalg::inner(block, &hv);
    }
    let nrm = state.norm().powi(2);
    Ok(acc.re / nrm)
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct NoiseModel {
    pub two_qubit_depolarizing_p: f64,
}

impl NoiseModel {
    pub fn noiseless() -> Self {
        NoiseModel { two_qubit_depolarizing_p: 0.0 }
    }

    pub fn depolarizing(p: f64) -> Self {
        NoiseModel { two_qubit_depolarizing_p: p }
    }

    pub fn validate(&self) -> Result<()> {
        let p = self.two_qubit_depolarizing_p;
        if !(0.0..=1.0).contains(&p) || !p.is_finite() {
            return Err(Error::InvalidArgument(format!("depolarizing probability {p} outside [0, 1]")));
        }
        Ok(())
    }

    pub fn is_noiseless(&self) -> bool {
        self.two_qubit_depolarizing_p == 0.0
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Readout {
    /// Exact outcome probabilities from the final state.
    #[default]
    Amplitude,
    /// Sampled shots.
    Shots,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunOptions {
    pub readout: Readout,
    pub shots: usize,
    /// `None`: one trajectory when that is exact, otherwise one per shot.
    pub trajectories: Option<usize>,
    pub noise: NoiseModel,
    pub seed: u64,
    /// Qubits projected (and renormalized) at the end of each trajectory,
    /// before the terminal measurements are read.
    pub postselect: Vec<(usize, bool)>,
}

impl Default for RunOptions {
    fn default() -> Self {
        RunOptions { readout: Readout::Amplitude, shots: 0, trajectories: None, noise: NoiseModel::noiseless(), seed: 0, postselect: Vec::new() }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunResult {
    /// Classical bits written by terminal measurements, in increasing order;
    /// bit j of an outcome key is `output_bits[j]`.
    pub output_bits: Vec<usize>,
    pub histogram: BTreeMap<u64, usize>,
    pub shots: usize,
    /// Trajectory-averaged outcome probabilities (length 2^output_bits).
    pub probabilities: Vec<f64>,
    /// Mean post-selection probability; 1 when nothing is post-selected.
    pub postselection_probability: f64,
    pub seed: u64,
    pub trajectories: usize,
    pub noise: NoiseModel,
}

impl RunResult {
    pub fn frequency(&self, outcome: u64) -> f64 {
        if self.shots == 0 {
            return 0.0;
        }
        *self.histogram.get(&outcome).unwrap_or(&0) as f64 / self.shots as f64
    }

    /// CSV with columns bitstring,count,frequency; the bitstring lists the
    /// highest output bit first.
    pub fn to_csv(&self) -> alloc::string::String {
        let mut s = alloc::string::String::from("bitstring,count,frequency\n");
        let w = self.output_bits.len();
        for (k, n) in &self.histogram {
            let bits: alloc::string::String = (0..w).rev().map(|j| if (k >> j) & 1 == 1 { '1' } else { '0' }).collect();
            s.push_str(&format!("{bits},{n},{}\n", crate::fmt6(*n as f64 / self.shots.max(1) as f64)));
        }
        s
    }
}

/// Measurement layout derived once per circuit.
#[derive(Debug, Clone)]
pub struct Plan {
    terminal: Vec<bool>,
    /// (qubit, bit) of terminal measurements in increasing bit order.
    outputs: Vec<(usize, usize)>,
    has_mid_measurement: bool,
}

impl Plan {
    pub fn new(c: &QuantumCircuit) -> Result<Plan> {
        let gates = c.gates();
        let mut terminal = alloc::vec![false; gates.len()];
        let mut qubit_used_later = alloc::vec![false; c.n_qubits()];
        let mut bit_used_later = alloc::vec![false; c.n_bits()];
        for (i, g) in gates.iter().enumerate().rev() {
            if let GateKind::MeasureToBit { qubit, bit } = *g {
                terminal[i] = !qubit_used_later[qubit] && !bit_used_later[bit];
            }
            let ([a, b], _) = g.qubits();
            qubit_used_later[a] = true;
            qubit_used_later[b] = true;
            match *g {
                GateKind::MeasureToBit { bit, .. } | GateKind::ClassicallyControlledCz { bit, .. } => bit_used_later[bit] = true,
                _ => {}
            }
        }
        let mut outputs: Vec<(usize, usize)> = gates
            .iter()
            .zip(&terminal)
            .filter_map(|(g, &t)| match (*g, t) {
                (GateKind::MeasureToBit { qubit, bit }, true) => Some((qubit, bit)),
                _ => None,
            })
            .collect();
        outputs.sort_by_key(|x| x.1);
        if outputs.len() > 24 {
            return Err(Error::InvalidArgument(format!("{} terminal measurements; at most 24 are supported", outputs.len())));
        }
        let has_mid = gates.iter().zip(&terminal).any(|(g, &t)| !t && !g.is_unitary());
        Ok(Plan { terminal, outputs, has_mid_measurement: has_mid })
    }

    pub fn output_bits(&self) -> Vec<usize> {
        self.outputs.iter().map(|x| x.1).collect()
    }

    pub fn has_mid_measurement(&self) -> bool {
        self.has_mid_measurement
    }
}

/// Final state and readout data of one trajectory.
#[derive(Debug, Clone)]
pub struct Trajectory {
    pub state: StateVector,
    /// Outcome distribution over the terminal measurements.
    pub probabilities: Vec<f64>,
    pub postselection_probability: f64,
    pub mid_circuit_bits: Vec<bool>,
    pub errors_inserted: usize,
}

/// Runs every gate of `c` on `state` with the given streams.
pub fn execute(c: &QuantumCircuit, plan: &Plan, state: &mut StateVector, noise: NoiseModel, meas: &mut Stream, nrng: &mut Stream) -> (Vec<bool>, usize) {
    let mut bits = alloc::vec![false; c.n_bits()];
    let p = noise.two_qubit_depolarizing_p;
    let mut inserted = 0;
    let v = &mut state.amplitudes;
    for (i, g) in c.gates().iter().enumerate() {
        match *g {
            GateKind::MeasureToBit { qubit, bit } => {
                if plan.terminal[i] {
                    continue;
                }
                bits[bit] = measure(v, qubit, meas);
            }
            GateKind::Reset(q) => {
                if measure(v, q, meas) {
                    kernels::x(v, q);
                }
            }
            GateKind::ClassicallyControlledCz { bit, control, target } => {
                if bits[bit] {
                    kernels::cz(v, control, target);
                    inserted += depolarize(v, control, target, p, nrng);
                }
            }
            _ => {
                kernels::apply_unitary(v, g);
                if g.is_two_qubit() {
                    let ([a, b], _) = g.qubits();
                    inserted += depolarize(v, a, b, p, nrng);
                }
            }
        }
    }
    (bits, inserted)
}

fn measure(v: &mut [C64], q: usize, rng: &mut Stream) -> bool {
    let p1 = kernels::prob_one(v, q);
    let total: f64 = v.iter().map(|z| z.norm_sqr()).sum();
    let one = rng.uniform() * total < p1;
    let p = if one { p1 } else { total - p1 };
    kernels::project(v, q, one, p);
    one
}

fn depolarize(v: &mut [C64], a: usize, b: usize, p: f64, rng: &mut Stream) -> usize {
    if p == 0.0 {
        return 0;
    }
    if rng.uniform() >= p {
        return 0;
    }
    let k = 1 + rng.below(15) as u8;
    kernels::pauli(v, a, k % 4);
    kernels::pauli(v, b, k / 4);
    1
}

pub fn run_trajectory(c: &QuantumCircuit, plan: &Plan, initial: &StateVector, opts: &RunOptions, index: u64) -> Result<Trajectory> {
    let (mut meas, mut nrng) = trajectory_streams(opts.seed, index);
    let mut state = initial.clone();
    let (bits, inserted) = execute(c, plan, &mut state, opts.noise, &mut meas, &mut nrng);
    let mut ps = 1.0;
    for &(q, val) in &opts.postselect {
        let (s, p) = post_select(&state, q, val)?;
        state = s;
        ps *= p;
    }
    let qubits: Vec<usize> = plan.outputs.iter().map(|x| x.0).collect();
    let probabilities = state.marginal(&qubits);
    Ok(Trajectory { state, probabilities, postselection_probability: ps, mid_circuit_bits: bits, errors_inserted: inserted })
}

/// Trajectory count used when the caller does not fix one.
pub fn default_trajectories(plan: &Plan, opts: &RunOptions) -> usize {
    if let Some(t) = opts.trajectories {
        return t.max(1);
    }
    if opts.noise.is_noiseless() && !plan.has_mid_measurement() {
        1
    } else {
        match opts.readout {
            Readout::Shots => opts.shots.max(1),
            Readout::Amplitude => 1,
        }
    }
}

/// Shots assigned to trajectory `index` of `n`.
pub fn shots_for(index: usize, n: usize, shots: usize) -> usize {
    shots / n + usize::from(index < shots % n)
}

const SAMPLING_SALT: u64 = 0x9e37_79b9_7f4a_7c15;

/// Draws `count` outcomes from `probs` with a sampling stream of its own.
pub fn sample_outcomes(probs: &[f64], count: usize, seed: u64, index: u64, hist: &mut BTreeMap<u64, usize>) {
    if count == 0 || probs.is_empty() {
        return;
    }
    let mut r = Stream::new(seed ^ SAMPLING_SALT, index);
    let mut cdf = Vec::with_capacity(probs.len());
    let mut acc = 0.0;
    for p in probs {
        acc += p;
        cdf.push(acc);
    }
    for _ in 0..count {
        let u = r.uniform() * acc;
        let k = cdf.partition_point(|&x| x <= u).min(probs.len() - 1);
        *hist.entry(k as u64).or_insert(0) += 1;
    }
}

/// Combines trajectories (in index order) into a result.
pub fn aggregate(plan: &Plan, opts: &RunOptions, trajectories: &[Trajectory]) -> RunResult {
    let n = trajectories.len();
    let width = 1usize << plan.outputs.len();
    let mut probs = alloc::vec![0.0; width];
    let mut ps = 0.0;
    let mut hist = BTreeMap::new();
    for (i, t) in trajectories.iter().enumerate() {
        for (a, b) in probs.iter_mut().zip(&t.probabilities) {
            *a += b / n as f64;
        }
        ps += t.postselection_probability / n as f64;
        if opts.readout == Readout::Shots {
            sample_outcomes(&t.probabilities, shots_for(i, n, opts.shots), opts.seed, i as u64, &mut hist);
        }
    }
    RunResult {
        output_bits: plan.output_bits(),
        histogram: hist,
        shots: if opts.readout == Readout::Shots { opts.shots } else { 0 },
        probabilities: probs,
        postselection_probability: ps,
        seed: opts.seed,
        trajectories: n,
        noise: opts.noise,
    }
}

fn check_shapes(c: &QuantumCircuit, initial: &StateVector, opts: &RunOptions) -> Result<()> {
    if c.registers() != initial.registers {
        return Err(Error::Dimension(format!("circuit registers {:?} differ from state registers {:?}", c.registers(), initial.registers)));
    }
    opts.noise.validate()?;
    if opts.readout == Readout::Shots && opts.shots == 0 {
        return Err(Error::InvalidArgument("shot readout needs shots > 0".into()));
    }
    Ok(())
}

/// Sequential run over all trajectories.
pub fn run_with(c: &QuantumCircuit, initial: &StateVector, opts: &RunOptions) -> Result<RunResult> {
    check_shapes(c, initial, opts)?;
    let plan = Plan::new(c)?;
    let n = default_trajectories(&plan, opts);
    let mut ts = Vec::with_capacity(n);
    for i in 0..n {
        let mut t = run_trajectory(c, &plan, initial, opts, i as u64)?;
        t.state.amplitudes = Vec::new();
        ts.push(t);
    }
    Ok(aggregate(&plan, opts, &ts))
}

/// Shot-sampled run.
pub fn run(c: &QuantumCircuit, initial: &StateVector, shots: usize, noise: NoiseModel, seed: u64) -> Result<RunResult> {
    run_with(c, initial, &RunOptions { readout: Readout::Shots, shots, noise, seed, ..Default::default() })
}

/// Final state of a single noiseless trajectory.
pub fn final_state(c: &QuantumCircuit, initial: &StateVector, seed: u64) -> Result<StateVector> {
    let opts = RunOptions { seed, ..Default::default() };
    check_shapes(c, initial, &opts)?;
    let plan = Plan::new(c)?;
    Ok(run_trajectory(c, &plan, initial, &opts, 0)?.state)
}
