//! Common interface over the dense and MPS simulators.

use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gates::{Mat2, Mat4};
use crate::mps::{MpsConfig, MpsState};
use crate::state::{LogBase, StateVector};

/// A pure-state register that circuits can act on.
pub trait QuantumState: Clone {
    fn n_qubits(&self) -> usize;
    fn apply_1q(&mut self, gate: &Mat2, qubit: usize) -> Result<()>;
    fn apply_2q(&mut self, gate: &Mat4, q1: usize, q2: usize) -> Result<()>;
    /// `⟨self|other⟩`.
    fn overlap(&self, other: &Self) -> Result<C64>;
    /// Entropy of the leading `block_size` qubits.
    fn block_entropy(&self, block_size: usize, base: LogBase) -> Result<f64>;
    fn to_dense(&self) -> Result<StateVector>;
}

impl QuantumState for StateVector {
    fn n_qubits(&self) -> usize {
        StateVector::n_qubits(self)
    }
    fn apply_1q(&mut self, gate: &Mat2, qubit: usize) -> Result<()> {
        StateVector::apply_1q(self, gate, qubit)
    }
    fn apply_2q(&mut self, gate: &Mat4, q1: usize, q2: usize) -> Result<()> {
        StateVector::apply_2q(self, gate, q1, q2)
    }
    fn overlap(&self, other: &Self) -> Result<C64> {
        self.inner(other)
    }
    fn block_entropy(&self, block_size: usize, base: LogBase) -> Result<f64> {
        StateVector::block_entropy(self, block_size, base)
    }
    fn to_dense(&self) -> Result<StateVector> {
        Ok(self.clone())
    }
}

impl QuantumState for MpsState {
    fn n_qubits(&self) -> usize {
        MpsState::n_qubits(self)
    }
    fn apply_1q(&mut self, gate: &Mat2, qubit: usize) -> Result<()> {
        MpsState::apply_1q(self, gate, qubit)
    }
    fn apply_2q(&mut self, gate: &Mat4, q1: usize, q2: usize) -> Result<()> {
        MpsState::apply_2q(self, gate, q1, q2)
    }
    fn overlap(&self, other: &Self) -> Result<C64> {
        self.inner(other)
    }
    fn block_entropy(&self, block_size: usize, base: LogBase) -> Result<f64> {
        if block_size == 0 {
            return Err(Error::InvalidBlock {
                block: 0,
                n_qubits: self.n_qubits(),
            });
        }
        self.bond_entropy(block_size - 1, base)
    }
    fn to_dense(&self) -> Result<StateVector> {
        self.to_statevector()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BackendKind {
    #[default]
    Statevector,
    Mps,
}

impl std::str::FromStr for BackendKind {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "statevector" | "sv" => Ok(Self::Statevector),
            "mps" => Ok(Self::Mps),
            other => Err(Error::Config(format!("unknown backend `{other}`"))),
        }
    }
}

/// Simulator choice with its settings.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Backend {
    Statevector,
    Mps(MpsConfig),
}

impl Backend {
    pub fn kind(&self) -> BackendKind {
        match self {
            Backend::Statevector => BackendKind::Statevector,
            Backend::Mps(_) => BackendKind::Mps,
        }
    }

    pub fn zero_state(&self, n_qubits: usize) -> Result<SimState> {
        Ok(match self {
            Backend::Statevector => SimState::Dense(StateVector::zero(n_qubits)?),
            Backend::Mps(cfg) => SimState::Mps(MpsState::zero(n_qubits, *cfg)?),
        })
    }
}

/// A state produced by either backend.
#[derive(Debug, Clone)]
pub enum SimState {
    Dense(StateVector),
    Mps(MpsState),
}

impl QuantumState for SimState {
    fn n_qubits(&self) -> usize {
        match self {
            SimState::Dense(s) => s.n_qubits(),
            SimState::Mps(s) => s.n_qubits(),
        }
    }
    fn apply_1q(&mut self, gate: &Mat2, qubit: usize) -> Result<()> {
        match self {
            SimState::Dense(s) => s.apply_1q(gate, qubit),
            SimState::Mps(s) => s.apply_1q(gate, qubit),
        }
    }
    fn apply_2q(&mut self, gate: &Mat4, q1: usize, q2: usize) -> Result<()> {
        match self {
            SimState::Dense(s) => s.apply_2q(gate, q1, q2),
            SimState::Mps(s) => s.apply_2q(gate, q1, q2),
        }
    }
    fn overlap(&self, other: &Self) -> Result<C64> {
        match (self, other) {
            (SimState::Dense(a), SimState::Dense(b)) => a.inner(b),
            (SimState::Mps(a), SimState::Mps(b)) => a.inner(b),
            (a, b) => a.to_dense()?.inner(&b.to_dense()?),
        }
    }
    fn block_entropy(&self, block_size: usize, base: LogBase) -> Result<f64> {
        match self {
            SimState::Dense(s) => QuantumState::block_entropy(s, block_size, base),
            SimState::Mps(s) => QuantumState::block_entropy(s, block_size, base),
        }
    }
    fn to_dense(&self) -> Result<StateVector> {
        match self {
            SimState::Dense(s) => Ok(s.clone()),
            SimState::Mps(s) => s.to_statevector(),
        }
    }
}
