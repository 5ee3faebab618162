//! Circuit constructions for the lattice Hamiltonian.
//!
//! Phase convention: a construction returns a circuit together with a
//! [`PhaseLedger`]; `unitary_of(circuit) · e^{i·ledger.phase}` is the target
//! operator. Identity Pauli terms never emit gates in uncontrolled circuits.

mod diagonal;
mod hwp;
mod kinetic;
mod many_body;
mod mcu;
mod pauli_exp;
mod trotter;

use diagonal::append_diagonal_on;
pub use diagonal::{append_coupled_diagonal, append_diagonal, gray_code_diagonal_evolution};
pub use hwp::{hamming_weight_phasing, HwpReport};
pub use kinetic::{kinetic_evolution, kinetic_terms};
pub use many_body::{many_body_potential_evolution, many_body_potential_matrix};
pub use mcu::{
    append_controlled_phase_cu, append_logical_and, append_mcu, append_potential, append_relative_phase_toffoli, append_uncompute_and, controlled_phase_cu, potential_evolution, relative_phase_toffoli,
};
pub use pauli_exp::{append_pauli_rotations, cnot_cost, group_by_basis};
pub use trotter::{
    axis_coupled_evolution, directional_control_wrap, directional_evolution, filter_evolution, full_evolution, sandwich_rotations, step_groups, trotter_step, CoupledOperator, StepBlock,
};

use crate::circuit::{QuantumCircuit, Registers};
use crate::lattice::LatticeConfig;
use crate::{Error, Result};
use alloc::format;
use alloc::vec::Vec;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum OperatorOrder {
    /// e^{-iV dt} e^{-iT dt}: T acts first ("V+T").
    VThenT,
    /// e^{-iT dt} e^{-iV dt} ("T+V").
    TThenV,
    /// e^{-iT dt/2} e^{-iV dt} e^{-iT dt/2} ("T+V+T").
    TVT,
    /// e^{-iV dt/2} e^{-iT dt} e^{-iV dt/2} ("V+T+V").
    VTV,
}

impl OperatorOrder {
    pub const ALL: [OperatorOrder; 4] = [OperatorOrder::VThenT, OperatorOrder::TThenV, OperatorOrder::TVT, OperatorOrder::VTV];

    pub fn order(self) -> u8 {
        match self {
            OperatorOrder::VThenT | OperatorOrder::TThenV => 1,
            _ => 2,
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            OperatorOrder::VThenT => "V+T",
            OperatorOrder::TThenV => "T+V",
            OperatorOrder::TVT => "T+V+T",
            OperatorOrder::VTV => "V+T+V",
        }
    }

    pub fn from_label(s: &str) -> Option<OperatorOrder> {
        Self::ALL.into_iter().find(|o| o.label() == s || o.key() == s)
    }

    pub fn key(self) -> &'static str {
        match self {
            OperatorOrder::VThenT => "V_then_T",
            OperatorOrder::TThenV => "T_then_V",
            OperatorOrder::TVT => "T_V_T",
            OperatorOrder::VTV => "V_T_V",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum PotentialVariant {
    GrayCode,
    McuLadder,
    McuFeedforward,
}

impl PotentialVariant {
    pub fn is_mcu(self) -> bool {
        !matches!(self, PotentialVariant::GrayCode)
    }

    pub fn key(self) -> &'static str {
        match self {
            PotentialVariant::GrayCode => "gray_code",
            PotentialVariant::McuLadder => "mcu_ladder",
            PotentialVariant::McuFeedforward => "mcu_feedforward",
        }
    }

    pub fn from_key(s: &str) -> Option<PotentialVariant> {
        [PotentialVariant::GrayCode, PotentialVariant::McuLadder, PotentialVariant::McuFeedforward].into_iter().find(|v| v.key() == s || (s == "gray" && *v == PotentialVariant::GrayCode))
    }

    /// Aux qubits borrowed by the potential block on `nq` system qubits.
    pub fn ancillas(self, nq: usize) -> usize {
        if self.is_mcu() {
            nq.saturating_sub(2)
        } else {
            0
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrotterConfig {
    pub order: OperatorOrder,
    pub steps: usize,
    /// Total time, MeV^-1.
    pub total_time: f64,
    pub potential_variant: PotentialVariant,
}

impl TrotterConfig {
    pub fn new(order: OperatorOrder, steps: usize, total_time: f64, potential_variant: PotentialVariant) -> Self {
        TrotterConfig { order, steps, total_time, potential_variant }
    }

    pub fn dt(&self) -> f64 {
        if self.steps == 0 {
            0.0
        } else {
            self.total_time / self.steps as f64
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !self.total_time.is_finite() {
            return Err(Error::InvalidArgument("total time must be finite".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct PhaseLedger {
    /// Radians; unitary_of(circuit)·e^{i phase} = target.
    pub phase: f64,
    /// Set once the V0/4 constant of the controlled-phase construction has
    /// been moved into the kinetic identity term.
    pub kinetic_shift_applied: bool,
    pub kinetic_shifts: usize,
    pub mcu_blocks: usize,
}

impl PhaseLedger {
    pub fn add(&mut self, phi: f64) {
        self.phase += phi;
    }

    pub fn merge(&mut self, o: &PhaseLedger) {
        self.phase += o.phase;
        self.kinetic_shift_applied |= o.kinetic_shift_applied;
        self.kinetic_shifts += o.kinetic_shifts;
        self.mcu_blocks += o.mcu_blocks;
    }
}

/// A synthesized evolution.
#[derive(Debug, Clone, PartialEq)]
pub struct Evolution {
    pub circuit: QuantumCircuit,
    pub ledger: PhaseLedger,
}

impl Evolution {
    /// The circuit with the ledger phase folded into its global phase.
    pub fn exact_circuit(&self) -> QuantumCircuit {
        let p = self.circuit.global_phase() + self.ledger.phase;
        self.circuit.clone().with_global_phase(p)
    }
}

/// Qubit assignment shared by the constructions.
#[derive(Debug, Clone, PartialEq)]
pub struct Layout {
    pub registers: Registers,
    pub system: Vec<usize>,
    /// Ancillas for the multi-controlled construction.
    pub mcu_ancillas: Vec<usize>,
    /// Filter ancilla (Y_a coupling), if any.
    pub coupling: Option<usize>,
}

impl Layout {
    /// System register, mcu ancillas (if the variant needs them), then an
    /// optional coupling ancilla, all in the aux register, plus `qpe` qubits.
    pub fn new(nq: usize, variant: PotentialVariant, coupling: bool, qpe: usize) -> Layout {
        let na = variant.ancillas(nq);
        let aux = na + usize::from(coupling);
        let registers = Registers::new(nq, aux, qpe);
        Layout {
            registers,
            system: (0..nq).collect(),
            mcu_ancillas: (0..na).map(|i| registers.aux_qubit(i)).collect(),
            coupling: if coupling { Some(registers.aux_qubit(na)) } else { None },
        }
    }

    pub fn n_system(&self) -> usize {
        self.system.len()
    }

    pub fn check(&self, variant: PotentialVariant) -> Result<()> {
        let need = variant.ancillas(self.system.len());
        if self.mcu_ancillas.len() < need {
            return Err(Error::InvalidArgument(format!("{} needs {need} ancillas, layout has {}", variant.key(), self.mcu_ancillas.len())));
        }
        Ok(())
    }
}

/// Kinetic operator and constants needed by the step builders.
#[derive(Debug, Clone, PartialEq)]
pub struct Model {
    pub config: LatticeConfig,
    /// Kinetic diagonal by basis code.
    pub kinetic: Vec<f64>,
}

impl Model {
    pub fn new(config: &LatticeConfig) -> Result<Model> {
        let h = crate::lattice::build_hamiltonian(config)?;
        Ok(Model { config: *config, kinetic: h.kinetic_diagonal })
    }

    pub fn n_qubits(&self) -> usize {
        self.config.n_qubits()
    }

    pub fn v0(&self) -> f64 {
        self.config.v0
    }
}
