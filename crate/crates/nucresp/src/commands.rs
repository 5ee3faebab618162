//! Subcommand bodies. Each writes its files into the context's output
//! directory and finishes with a manifest.

use crate::config::{Config, InputState, TransitionMode};
use crate::manifest::{Context, RunManifest};
use crate::{sweep, CliError};
use nucresp_core::circuit::{GateCounts, QuantumCircuit, Registers};
use nucresp_core::fmt6;
use nucresp_core::lattice::basis_state;
use nucresp_core::linalg;
use nucresp_core::pauli::map_matrix;
use nucresp_core::response::{self, exact_qpe_reference, qpe_circuit, transition_circuit, transition_operator, QpeConfig, ResponseDataset};
use nucresp_core::simulator::{run_with, NoiseModel, Readout, RunOptions, StateVector};
use nucresp_core::state_prep::{
    compute_init_angles, energy_filter, energy_sorted_mapping, filter_convergence_scan, optimize_uniform_ry, prepare_state, remap_state, scan_csv, state_init_circuit, BaseState, FilterMode, FilterPlan,
    InitPlan, Problem,
};
use nucresp_core::synthesis::{
    directional_evolution, filter_evolution, full_evolution, hamming_weight_phasing, kinetic_evolution, potential_evolution, trotter_step, Evolution, Layout, Model, PhaseLedger, TrotterConfig,
};
use nucresp_core::C64;
use serde_json::json;

/// Options shared by all subcommands; `None` falls back to the config.
#[derive(Debug, Clone, Default)]
pub struct Options {
    pub seed: Option<u64>,
    pub mode: Option<String>,
    pub shots: Option<usize>,
    pub trajectories: Option<usize>,
}

impl Options {
    pub fn seed(&self, cfg: &Config) -> u64 {
        self.seed.unwrap_or(cfg.seed)
    }

    pub fn readout(&self, cfg: &Config) -> Result<Readout, CliError> {
        match self.mode.as_deref().or(cfg.mode.as_deref()).unwrap_or("amplitude") {
            "amplitude" => Ok(Readout::Amplitude),
            "shots" => Ok(Readout::Shots),
            m => Err(CliError::Config(format!("unknown mode '{m}' (amplitude|shots)"))),
        }
    }
}

fn counts_line(k: &GateCounts) -> String {
    k.fields().iter().map(|(n, v)| format!("{n}={v}")).collect::<Vec<_>>().join(" ")
}

fn summary_csv(rows: &[(&str, String)]) -> String {
    let mut s = String::from("quantity,value\n");
    for (k, v) in rows {
        s += &format!("{k},{v}\n");
    }
    s
}

pub fn cmd_model(cfg: &Config, ctx: &mut Context) -> Result<RunManifest, CliError> {
    let p = Problem::new(&cfg.lattice)?;
    let h = map_matrix(&p.hamiltonian.matrix)?;
    let kin = nucresp_core::pauli::map_diagonal(&p.hamiltonian.kinetic_diagonal)?;
    let zero = basis_state(p.dim(), 0);
    let rows = [
        ("n_qubits", cfg.lattice.n_qubits().to_string()),
        ("E0_mev", fmt6(p.spectrum.e0)),
        ("gap_delta_mev", fmt6(p.spectrum.gap_delta)),
        ("delta_h_mev", fmt6(p.spectrum.delta_h)),
        ("pauli_terms", h.len().to_string()),
        ("kinetic_terms", kin.len().to_string()),
        ("zero_momentum_energy_mev", fmt6(p.energy(&zero))),
        ("zero_momentum_overlap", fmt6(p.ground_overlap(&zero))),
    ];
    let mut spec = String::from("index,energy_mev\n");
    for (i, e) in p.spectrum.eigenvalues.iter().enumerate() {
        spec += &format!("{i},{}\n", fmt6(*e));
    }
    ctx.write("spectrum.csv", &spec)?;
    ctx.write("hamiltonian.pauli", &h.to_text(5))?;
    ctx.write("model_summary.csv", &summary_csv(&rows))?;
    for (k, v) in rows {
        ctx.say(format!("{k} = {v}"));
    }
    ctx.finish("model", &cfg.entries)
}

/// Parameters of `synth`; unset fields come from the config.
#[derive(Debug, Clone, Default)]
pub struct SynthArgs {
    pub target: Option<String>,
    pub variant: Option<String>,
    pub order: Option<String>,
    pub steps: Option<usize>,
    pub dt: Option<f64>,
    pub qubits: Option<usize>,
}

pub const SYNTH_TARGETS: &[&str] = &["kinetic", "potential", "step", "evolution", "filter", "directional", "transition", "hwp", "qpe"];

fn empty(regs: Registers) -> Evolution {
    Evolution { circuit: QuantumCircuit::empty(regs), ledger: PhaseLedger::default() }
}

pub fn synthesize(cfg: &Config, a: &SynthArgs) -> Result<(String, Evolution), CliError> {
    let target = a.target.clone().unwrap_or_else(|| cfg.synth_target.clone());
    let variant = match &a.variant {
        Some(v) => nucresp_core::synthesis::PotentialVariant::from_key(v).ok_or_else(|| CliError::Config(format!("unknown variant '{v}'")))?,
        None => cfg.variant,
    };
    let order = match &a.order {
        Some(o) => nucresp_core::synthesis::OperatorOrder::from_label(o).ok_or_else(|| CliError::Config(format!("unknown ordering '{o}'")))?,
        None => cfg.order,
    };
    let steps = a.steps.unwrap_or(cfg.steps);
    let dt = a.dt.unwrap_or(cfg.synth_dt);
    let nq = a.qubits.or(cfg.synth_qubits).unwrap_or(cfg.lattice.n_qubits());
    let lattice_nq = cfg.lattice.n_qubits();
    if nq != lattice_nq && !matches!(target.as_str(), "potential" | "hwp") {
        return Err(CliError::Config(format!("--qubits {nq} only applies to potential and hwp; the lattice has {lattice_nq}")));
    }
    let model = || Model::new(&cfg.lattice);
    let tc = TrotterConfig::new(order, steps.max(1), dt * steps.max(1) as f64, variant);
    let layout_regs = |coupling: bool, qpe: usize| Layout::new(lattice_nq, variant, coupling, qpe).registers;
    let ev = match target.as_str() {
        "kinetic" => kinetic_evolution(dt, &cfg.lattice)?,
        "potential" => potential_evolution(nq, cfg.lattice.v0 * dt, variant)?,
        "step" if steps == 0 => empty(layout_regs(false, 0)),
        "step" => trotter_step(&model()?, &tc, dt)?,
        "evolution" if steps == 0 => empty(layout_regs(false, 0)),
        "evolution" => full_evolution(&model()?, &tc)?,
        "filter" if steps == 0 => empty(layout_regs(true, 0)),
        "filter" => {
            let p = Problem::new(&cfg.lattice)?;
            filter_evolution(&p.model, &tc, p.spectrum.e0)?
        }
        "directional" if steps == 0 => empty(layout_regs(false, 1)),
        "directional" => {
            let layout = Layout::new(lattice_nq, variant, false, 1);
            let ctl = layout.registers.qpe_qubit(0);
            directional_evolution(&model()?, &tc, &layout, ctl, 0.0)?
        }
        "transition" if steps == 0 => empty(Registers::new(lattice_nq, 0, 0)),
        "transition" => transition_circuit(&transition_operator(&cfg.lattice, cfg.q_half)?, steps)?,
        "hwp" => {
            let (c, _) = hamming_weight_phasing(nq, dt)?;
            Evolution { circuit: c, ledger: PhaseLedger::default() }
        }
        "qpe" => {
            let p = Problem::new(&cfg.lattice)?;
            let q = qpe_circuit(&p, &QpeConfig { order, variant, ..cfg.qpe }, None)?;
            Evolution { circuit: q.circuit, ledger: PhaseLedger::default() }
        }
        t => return Err(CliError::Config(format!("unknown synth target '{t}' (one of {})", SYNTH_TARGETS.join(", ")))),
    };
    Ok((target, ev))
}

pub fn cmd_synth(cfg: &Config, a: &SynthArgs, ctx: &mut Context) -> Result<RunManifest, CliError> {
    let (target, ev) = synthesize(cfg, a)?;
    let k = ev.circuit.count_gates();
    ctx.option("target", &target);
    for (n, v) in [("variant", &a.variant), ("order", &a.order)] {
        if let Some(v) = v {
            ctx.option(n, v);
        }
    }
    if let Some(s) = a.steps {
        ctx.option("steps", s);
    }
    if let Some(d) = a.dt {
        ctx.option("dt", d);
    }
    if let Some(q) = a.qubits {
        ctx.option("qubits", q);
    }
    ctx.write("circuit.txt", &ev.circuit.to_text())?;
    ctx.write("counts.csv", &k.to_csv())?;
    ctx.say(format!("target = {target}"));
    ctx.say(format!("qubits = {}", ev.circuit.n_qubits()));
    ctx.say(format!("ledger_phase = {}", fmt6(ev.ledger.phase)));
    ctx.say(counts_line(&k));
    ctx.finish("synth", &cfg.entries)
}

pub fn cmd_prep(cfg: &Config, ctx: &mut Context) -> Result<RunManifest, CliError> {
    let p = Problem::new(&cfg.lattice)?;
    let mut plan = FilterPlan::reference(&p);
    plan.trotter.potential_variant = cfg.variant;
    let exact = energy_filter(&p, &plan, FilterMode::Exact)?;
    let g = p.spectrum.ground_state();
    let had = compute_init_angles(&InitPlan::new(g.clone(), BaseState::Hadamard))?;
    let (_, p_y) = optimize_uniform_ry(&g)?;
    let sorted = energy_sorted_mapping(&cfg.lattice)?;
    let gs = remap_state(&g, &sorted);
    let (theta, p_sorted) = optimize_uniform_ry(&gs)?;
    let mut ip = InitPlan::new(gs.clone(), BaseState::UniformRy(theta));
    ip.truncation_epsilon = cfg.prep_epsilon;
    let ang = compute_init_angles(&ip)?;
    let ic = state_init_circuit(&ip, &ang)?;
    let (psi, _) = prepare_state(&ic)?;
    let hs = nucresp_core::state_prep::hamiltonian_in(&cfg.lattice, &sorted);
    let e_trunc = linalg::expectation(&hs.matrix, &psi);
    let rows = [
        ("filter_time_inv_mev", fmt6(plan.filter_time)),
        ("filter_exact_probability", fmt6(exact.success_probability)),
        ("filter_exact_energy_mev", fmt6(exact.energy)),
        ("filter_exact_overlap", fmt6(exact.ground_overlap)),
        ("init_hadamard_probability", fmt6(had.success_probability)),
        ("init_uniform_ry_probability", fmt6(p_y)),
        ("init_sorted_probability", fmt6(p_sorted)),
        ("init_sorted_theta", fmt6(theta)),
        ("init_epsilon", fmt6(cfg.prep_epsilon)),
        ("init_retained_terms", ic.retained_terms.to_string()),
        ("init_truncated_energy_mev", fmt6(e_trunc)),
    ];
    ctx.write("prep_summary.csv", &summary_csv(&rows))?;
    for (k, v) in rows {
        ctx.say(format!("{k} = {v}"));
    }
    let scan = filter_convergence_scan(&p, &plan, &cfg.prep_orderings, &cfg.prep_steps)?;
    ctx.write("prep_scan.csv", &scan_csv(&scan))?;
    ctx.say(format!("scan rows = {}", scan.len()));
    ctx.finish("prep", &cfg.entries)
}

/// System input of the QPE: ground state (exact or from the initializer),
/// with Ô applied either directly or by a circuit in front of the QPE.
pub struct ResponseInput {
    pub problem: Problem,
    pub operator: response::TransitionOperator,
    pub transition: Option<Evolution>,
    pub ground: Vec<C64>,
    pub init_probability: Option<f64>,
}

pub fn response_input(cfg: &Config) -> Result<ResponseInput, CliError> {
    let problem = Problem::new(&cfg.lattice)?;
    let operator = transition_operator(&cfg.lattice, cfg.q_half)?;
    let (ground, init_probability) = match cfg.input {
        InputState::Exact => (problem.spectrum.ground_state(), None),
        InputState::Init => {
            let plan = InitPlan::new(problem.spectrum.ground_state(), BaseState::Hadamard);
            let ang = compute_init_angles(&plan)?;
            let (psi, pr) = prepare_state(&state_init_circuit(&plan, &ang)?)?;
            (psi, Some(pr))
        }
    };
    let transition = match cfg.transition {
        TransitionMode::Exact => None,
        TransitionMode::Circuit => Some(transition_circuit(&operator, cfg.transition_steps)?),
    };
    Ok(ResponseInput { problem, operator, transition, ground, init_probability })
}

impl ResponseInput {
    pub fn initial_state(&self, regs: Registers) -> Result<StateVector, CliError> {
        let sys = match self.transition {
            Some(_) => self.ground.clone(),
            None => linalg::mat_vec(&self.operator.matrix, &self.ground),
        };
        Ok(StateVector::embed_system(regs, &sys)?)
    }
}

fn dataset_json(d: &ResponseDataset, cfg: &Config, extra: serde_json::Value) -> serde_json::Value {
    let q = &d.config;
    json!({
        "qpe": {
            "w": q.w, "alpha": q.alpha, "beta": q.beta, "steps_k0": q.steps_k0,
            "order": q.order.key(), "variant": q.variant.key(), "total_steps": q.total_steps(),
            "noise_p": q.noise.two_qubit_depolarizing_p, "shots": d.shots,
        },
        "q_half": cfg.q_half,
        "delta_h_mev": d.delta_h,
        "e_cm_mev": d.e_cm,
        "seed": d.seed,
        "trajectories": d.trajectories,
        "total_evolution_time": d.total_evolution_time,
        "gate_counts": d.gate_counts.map(|k| k.fields().iter().map(|(n, v)| (n.to_string(), json!(v))).collect::<serde_json::Map<_, _>>()),
        "config": cfg.entries,
        "extra": extra,
    })
}

pub fn cmd_response(cfg: &Config, opts: &Options, ctx: &mut Context) -> Result<RunManifest, CliError> {
    let input = response_input(cfg)?;
    let readout = opts.readout(cfg)?;
    let shots = opts.shots.unwrap_or(cfg.shots);
    if readout == Readout::Shots && shots == 0 {
        return Err(CliError::Config("shot mode needs --shots or run.shots > 0".into()));
    }
    let qcfg = QpeConfig { shots, ..cfg.qpe };
    let p = &input.problem;
    let qc = qpe_circuit(p, &qcfg, input.transition.as_ref())?;
    let init = input.initial_state(qc.circuit.registers())?;
    let seed = opts.seed(cfg);
    let ro = RunOptions { readout, shots, seed, trajectories: opts.trajectories, ..Default::default() };
    let r = run_with(&qc.circuit, &init, &ro)?;
    let mut d = response::extract_response(&r, &qcfg, p.spectrum.delta_h, input.operator.cm_energy(&cfg.lattice))?;
    d.gate_counts = Some(qc.circuit.count_gates());
    let exact = exact_qpe_reference(&p.spectrum, &input.operator, &qcfg)?;
    let mut ex = String::from("a,omega_bar,probability\n");
    for (a, v) in exact.iter().enumerate() {
        ex += &format!("{a},{},{}\n", fmt6(qcfg.omega_bar(a)), fmt6(*v));
    }
    ctx.option("mode", if readout == Readout::Shots { "shots" } else { "amplitude" });
    ctx.option("shots", shots);
    ctx.write("response.csv", &d.to_csv())?;
    ctx.write("response_exact.csv", &ex)?;
    let scaled = response::scaled_hamiltonian(&p.spectrum)?;
    let extra = json!({
        "qubits": qc.circuit.n_qubits(),
        "qe_center_omega_bar": input.operator.qe_center(&cfg.lattice, &scaled),
        "init_probability": input.init_probability,
        "transition": if input.transition.is_some() { "circuit" } else { "exact" },
        "wall_time_s": ctx.elapsed(),
    });
    let meta = serde_json::to_string_pretty(&dataset_json(&d, cfg, extra)).map_err(|e| CliError::Runtime(e.to_string()))?;
    ctx.write("response.json", &(meta + "\n"))?;
    let probs = d.probabilities();
    let peak = (0..probs.len()).max_by(|&a, &b| probs[a].total_cmp(&probs[b])).unwrap_or(0);
    let dev = probs.iter().zip(&exact).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
    ctx.say(format!("qubits = {}", qc.circuit.n_qubits()));
    ctx.say(counts_line(&qc.circuit.count_gates()));
    ctx.say(format!("sum_probability = {}", fmt6(probs.iter().sum())));
    ctx.say(format!("peak_bin = {peak} (omega = {} MeV)", fmt6(d.rows[peak].omega_mev)));
    ctx.say(format!("max_deviation_from_exact = {}", fmt6(dev)));
    ctx.finish("response", &cfg.entries)
}

pub fn cmd_noise_sweep(cfg: &Config, opts: &Options, ps: Option<Vec<f64>>, ctx: &mut Context) -> Result<RunManifest, CliError> {
    let ps = ps.unwrap_or_else(|| cfg.noise_p.clone());
    if ps.is_empty() {
        return Err(CliError::Config("empty list of depolarizing probabilities (noise.p or --p)".into()));
    }
    for &p in &ps {
        NoiseModel::depolarizing(p).validate().map_err(|e| CliError::Config(e.to_string()))?;
    }
    let trajectories = opts.trajectories.unwrap_or(cfg.trajectories);
    if trajectories == 0 {
        return Err(CliError::Config("trajectory count must be positive".into()));
    }
    let input = response_input(cfg)?;
    let p = &input.problem;
    let qc = qpe_circuit(p, &cfg.qpe, input.transition.as_ref())?;
    let init = input.initial_state(qc.circuit.registers())?;
    let seed = opts.seed(cfg);
    let pts = sweep::noise_sweep(&qc.circuit, &init, &ps, trajectories, seed)?;
    let e_cm = input.operator.cm_energy(&cfg.lattice);
    let width = 1.0 / (cfg.qpe.bins() as f64 * cfg.qpe.alpha);
    let mut bins = String::from("p,a,omega_bar,omega_mev,mean,variance,strength\n");
    let mut summary = String::from("p,trajectories,peak_bin,peak,median,peak_over_median\n");
    for pt in &pts {
        for a in 0..pt.mean.len() {
            let wb = cfg.qpe.omega_bar(a);
            bins += &format!("{},{a},{},{},{},{},{}\n", fmt6(pt.p), fmt6(wb), fmt6(wb * p.spectrum.delta_h + e_cm), fmt6(pt.mean[a]), fmt6(pt.variance[a]), fmt6(pt.mean[a] / width));
        }
        let (pk, md, ratio) = pt.peak_over_median();
        summary += &format!("{},{},{},{},{},{}\n", fmt6(pt.p), pt.trajectories, pt.peak_bin(), fmt6(pk), fmt6(md), fmt6(ratio));
        ctx.say(format!("p = {}: peak_bin = {} peak = {} peak/median = {}", fmt6(pt.p), pt.peak_bin(), fmt6(pk), fmt6(ratio)));
    }
    ctx.option("trajectories", trajectories);
    ctx.option("p", ps.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(","));
    ctx.write("noise_bins.csv", &bins)?;
    ctx.write("noise_summary.csv", &summary)?;
    let meta = json!({
        "qubits": qc.circuit.n_qubits(),
        "gate_counts": qc.circuit.count_gates().fields().iter().map(|(n, v)| (n.to_string(), json!(v))).collect::<serde_json::Map<_, _>>(),
        "seed": seed,
        "trajectories": trajectories,
        "p": ps,
        "config": cfg.entries,
        "wall_time_s": ctx.elapsed(),
    });
    ctx.write("noise.json", &(serde_json::to_string_pretty(&meta).map_err(|e| CliError::Runtime(e.to_string()))? + "\n"))?;
    ctx.finish("noise-sweep", &cfg.entries)
}
