//! Trajectory sweeps spread over the rayon pool. Each (p, trajectory) pair
//! has its own seed, so results do not depend on the thread count.

use nucresp_core::circuit::QuantumCircuit;
use nucresp_core::response::{noise_stats, noisy_trajectory, sweep_seed, NoisePoint};
use nucresp_core::simulator::{NoiseModel, Plan, StateVector};
use nucresp_core::Result;
use rayon::prelude::*;

/// Sets the global pool size; `None` or 0 keeps rayon's default (which
/// honours `RAYON_NUM_THREADS`).
pub fn init_threads(n: Option<usize>) {
    let n = n.or_else(|| std::env::var("NUCRESP_THREADS").ok().and_then(|s| s.parse().ok()));
    if let Some(n) = n.filter(|&n| n > 0) {
        // a second call in the same process keeps the first pool
        let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    }
}

/// Same values as `nucresp_core::response::noise_sweep`, computed in parallel.
pub fn noise_sweep(circuit: &QuantumCircuit, init: &StateVector, ps: &[f64], trajectories: usize, seed: u64) -> Result<Vec<NoisePoint>> {
    for &p in ps {
        NoiseModel::depolarizing(p).validate()?;
    }
    let plan = Plan::new(circuit)?;
    let jobs: Vec<(usize, usize)> = (0..ps.len()).flat_map(|i| (0..trajectories).map(move |t| (i, t))).collect();
    let probs: Vec<Vec<f64>> = jobs
        .par_iter()
        .map(|&(i, t)| noisy_trajectory(circuit, &plan, init, ps[i], sweep_seed(seed, i), t as u64).map(|tr| tr.probabilities))
        .collect::<Result<_>>()?;
    Ok(ps.iter().enumerate().map(|(i, &p)| noise_stats(p, &probs[i * trajectories..(i + 1) * trajectories])).collect())
}
