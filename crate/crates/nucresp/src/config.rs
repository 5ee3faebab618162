//! Flat key-value configuration with `[section]` headers or dotted keys.
//!
//! ```text
//! [model]
//! n_x = 8        # comment
//! qpe.w = 3
//! ```

use crate::CliError;
use nucresp_core::lattice::LatticeConfig;
use nucresp_core::response::QpeConfig;
use nucresp_core::synthesis::{OperatorOrder, PotentialVariant};
use std::collections::BTreeMap;
use std::str::FromStr;

pub const REFERENCE: &str = include_str!("../../../configs/reference.conf");

const MODEL_KEYS: [&str; 7] = ["n_x", "n_y", "n_z", "spacing_a", "v0", "hbar_c", "nucleon_mass"];

const OPTIONAL_KEYS: &[&str] = &[
    "trotter.order",
    "trotter.steps",
    "trotter.time",
    "trotter.variant",
    "synth.target",
    "synth.dt",
    "synth.qubits",
    "prep.orderings",
    "prep.steps",
    "prep.epsilon",
    "qpe.w",
    "qpe.alpha",
    "qpe.beta",
    "qpe.steps_k0",
    "qpe.order",
    "qpe.variant",
    "qpe.q_half",
    "qpe.gate_cap",
    "qpe.input",
    "qpe.transition",
    "qpe.transition_steps",
    "noise.p",
    "noise.trajectories",
    "run.seed",
    "run.shots",
    "run.mode",
];

/// Parsed `key = value` pairs with fully qualified keys.
#[derive(Debug, Clone, PartialEq)]
pub struct RawConfig {
    pub entries: BTreeMap<String, String>,
}

fn known(key: &str) -> bool {
    key.strip_prefix("model.").is_some_and(|k| MODEL_KEYS.contains(&k)) || OPTIONAL_KEYS.contains(&key)
}

impl RawConfig {
    pub fn parse(text: &str) -> Result<RawConfig, CliError> {
        let mut entries = BTreeMap::new();
        let mut section = String::new();
        for (n, line) in text.lines().enumerate() {
            let line = line.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            if let Some(s) = line.strip_prefix('[') {
                let s = s.strip_suffix(']').ok_or_else(|| CliError::Config(format!("line {}: unterminated section header", n + 1)))?;
                section = s.trim().to_string();
                continue;
            }
            let (k, v) = line.split_once('=').ok_or_else(|| CliError::Config(format!("line {}: expected key = value", n + 1)))?;
            let k = k.trim();
            let key = if k.contains('.') || section.is_empty() { k.to_string() } else { format!("{section}.{k}") };
            if !known(&key) {
                return Err(CliError::Config(format!("unknown key '{key}'")));
            }
            if entries.insert(key.clone(), v.trim().to_string()).is_some() {
                return Err(CliError::Config(format!("duplicate key '{key}'")));
            }
        }
        Ok(RawConfig { entries })
    }

    fn get<T: FromStr>(&self, key: &str) -> Result<Option<T>, CliError> {
        match self.entries.get(key) {
            None => Ok(None),
            Some(v) => v.parse().map(Some).map_err(|_| CliError::Config(format!("bad value '{v}' for key '{key}'"))),
        }
    }

    fn required<T: FromStr>(&self, key: &str) -> Result<T, CliError> {
        self.get(key)?.ok_or_else(|| CliError::Config(format!("missing key '{key}'")))
    }

    fn list<T: FromStr>(&self, key: &str) -> Result<Option<Vec<T>>, CliError> {
        match self.entries.get(key) {
            None => Ok(None),
            Some(v) if v.is_empty() => Ok(Some(Vec::new())),
            Some(v) => v
                .split(',')
                .map(|s| s.trim().parse().map_err(|_| CliError::Config(format!("bad list item '{}' for key '{key}'", s.trim()))))
                .collect::<Result<Vec<T>, _>>()
                .map(Some),
        }
    }
}

fn order(s: &str, key: &str) -> Result<OperatorOrder, CliError> {
    OperatorOrder::from_label(s).ok_or_else(|| CliError::Config(format!("unknown ordering '{s}' for key '{key}'")))
}

fn variant(s: &str, key: &str) -> Result<PotentialVariant, CliError> {
    PotentialVariant::from_key(s).ok_or_else(|| CliError::Config(format!("unknown variant '{s}' for key '{key}'")))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum InputState {
    /// Exact ground state loaded into the register.
    Exact,
    /// Ground state produced by the measurement-based initializer.
    Init,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TransitionMode {
    /// Ô|Ψ0⟩ loaded directly.
    Exact,
    /// First-order circuit for exp(i(q/2)·r) in front of the QPE.
    Circuit,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Config {
    pub lattice: LatticeConfig,
    pub order: OperatorOrder,
    pub steps: usize,
    pub time: Option<f64>,
    pub variant: PotentialVariant,
    pub synth_target: String,
    pub synth_dt: f64,
    pub synth_qubits: Option<usize>,
    pub prep_orderings: Vec<OperatorOrder>,
    pub prep_steps: Vec<usize>,
    pub prep_epsilon: f64,
    pub qpe: QpeConfig,
    pub q_half: [i64; 3],
    pub input: InputState,
    pub transition: TransitionMode,
    pub transition_steps: usize,
    pub noise_p: Vec<f64>,
    pub trajectories: usize,
    pub seed: u64,
    pub shots: usize,
    pub mode: Option<String>,
    pub entries: BTreeMap<String, String>,
}

impl Config {
    pub fn parse(text: &str) -> Result<Config, CliError> {
        Config::from_raw(&RawConfig::parse(text)?)
    }

    pub fn reference() -> Config {
        Config::parse(REFERENCE).expect("bundled configuration parses")
    }

    pub fn from_raw(r: &RawConfig) -> Result<Config, CliError> {
        let lattice = LatticeConfig {
            n_x: r.required("model.n_x")?,
            n_y: r.required("model.n_y")?,
            n_z: r.required("model.n_z")?,
            spacing_a: r.required("model.spacing_a")?,
            v0: r.required("model.v0")?,
            hbar_c: r.required("model.hbar_c")?,
            nucleon_mass: r.required("model.nucleon_mass")?,
        };
        lattice.validate().map_err(|e| CliError::Config(e.to_string()))?;
        let ord = match r.entries.get("trotter.order") {
            Some(s) => order(s, "trotter.order")?,
            None => OperatorOrder::TVT,
        };
        let var = match r.entries.get("trotter.variant") {
            Some(s) => variant(s, "trotter.variant")?,
            None => PotentialVariant::McuFeedforward,
        };
        let prep_orderings = match r.list::<String>("prep.orderings")? {
            Some(v) => v.iter().map(|s| order(s, "prep.orderings")).collect::<Result<_, _>>()?,
            None => OperatorOrder::ALL.to_vec(),
        };
        let d = QpeConfig::window();
        let qpe_order = match r.entries.get("qpe.order") {
            Some(s) => order(s, "qpe.order")?,
            None => ord,
        };
        let qpe_variant = match r.entries.get("qpe.variant") {
            Some(s) => variant(s, "qpe.variant")?,
            None => var,
        };
        let gate_cap = match r.entries.get("qpe.gate_cap").map(String::as_str) {
            Some("none") => None,
            Some(_) => Some(r.required("qpe.gate_cap")?),
            None => d.gate_cap,
        };
        let q_half = match r.list::<i64>("qpe.q_half")? {
            Some(v) if v.len() == 3 => [v[0], v[1], v[2]],
            Some(_) => return Err(CliError::Config("qpe.q_half needs three components".into())),
            None => [0, 0, 1],
        };
        let input = match r.entries.get("qpe.input").map(String::as_str) {
            None | Some("exact") => InputState::Exact,
            Some("init") => InputState::Init,
            Some(s) => return Err(CliError::Config(format!("unknown input '{s}' for key 'qpe.input'"))),
        };
        let transition = match r.entries.get("qpe.transition").map(String::as_str) {
            None | Some("exact") => TransitionMode::Exact,
            Some("circuit") => TransitionMode::Circuit,
            Some(s) => return Err(CliError::Config(format!("unknown transition '{s}' for key 'qpe.transition'"))),
        };
        let qpe = QpeConfig {
            w: r.get("qpe.w")?.unwrap_or(d.w),
            alpha: r.get("qpe.alpha")?.unwrap_or(d.alpha),
            beta: r.get("qpe.beta")?.unwrap_or(d.beta),
            steps_k0: r.get("qpe.steps_k0")?.unwrap_or(d.steps_k0),
            order: qpe_order,
            variant: qpe_variant,
            gate_cap,
            shots: r.get("run.shots")?.unwrap_or(0),
            ..d
        };
        qpe.validate().map_err(|e| CliError::Config(e.to_string()))?;
        Ok(Config {
            lattice,
            order: ord,
            steps: r.get("trotter.steps")?.unwrap_or(40),
            time: r.get("trotter.time")?,
            variant: var,
            synth_target: r.get("synth.target")?.unwrap_or_else(|| "step".to_string()),
            synth_dt: r.get("synth.dt")?.unwrap_or(1e-3),
            synth_qubits: r.get("synth.qubits")?,
            prep_orderings,
            prep_steps: r.list("prep.steps")?.unwrap_or_else(|| vec![1, 2, 5, 10, 20, 40, 60]),
            prep_epsilon: r.get("prep.epsilon")?.unwrap_or(0.002),
            qpe,
            q_half,
            input,
            transition,
            transition_steps: r.get("qpe.transition_steps")?.unwrap_or(30),
            noise_p: r.list("noise.p")?.unwrap_or_default(),
            trajectories: r.get("noise.trajectories")?.unwrap_or(100),
            seed: r.get("run.seed")?.unwrap_or(0),
            shots: r.get("run.shots")?.unwrap_or(0),
            mode: r.get("run.mode")?,
            entries: r.entries.clone(),
        })
    }
}
