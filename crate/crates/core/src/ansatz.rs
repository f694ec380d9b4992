//! Layered HVA and HEA circuit programs.

use serde::{Deserialize, Serialize};

use crate::backend::{Backend, QuantumState, SimState};
use crate::error::{Error, Result};
use crate::gates::{self, Mat2, Mat4};
use crate::state::StateVector;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum GateKind {
    H,
    RX,
    RY,
    RZ,
    RZZ,
    CNOT,
    SWAP,
}

impl GateKind {
    pub fn is_parameterized(self) -> bool {
        matches!(self, GateKind::RX | GateKind::RY | GateKind::RZ | GateKind::RZZ)
    }

    pub fn arity(self) -> usize {
        match self {
            GateKind::H | GateKind::RX | GateKind::RY | GateKind::RZ => 1,
            GateKind::RZZ | GateKind::CNOT | GateKind::SWAP => 2,
        }
    }
}

/// Matrix of a gate, either one- or two-qubit.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum GateMatrix {
    One(Mat2),
    Two(Mat4),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GateOp {
    pub kind: GateKind,
    pub qubits: Vec<usize>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub slot: Option<usize>,
}

impl GateOp {
    fn fixed(kind: GateKind, qubits: Vec<usize>) -> Self {
        Self {
            kind,
            qubits,
            slot: None,
        }
    }

    fn param(kind: GateKind, qubits: Vec<usize>, slot: usize) -> Self {
        Self {
            kind,
            qubits,
            slot: Some(slot),
        }
    }

    /// Matrix at rotation angle `angle` (ignored for fixed gates).
    pub fn matrix(&self, angle: f64) -> GateMatrix {
        match self.kind {
            GateKind::H => GateMatrix::One(gates::hadamard()),
            GateKind::RX => GateMatrix::One(gates::rx(angle)),
            GateKind::RY => GateMatrix::One(gates::ry(angle)),
            GateKind::RZ => GateMatrix::One(gates::rz(angle)),
            GateKind::RZZ => GateMatrix::Two(gates::rzz(angle)),
            GateKind::CNOT => GateMatrix::Two(gates::cnot()),
            GateKind::SWAP => GateMatrix::Two(gates::swap()),
        }
    }

    /// Generator `G` of `exp(-i θ/2 G)` for parameterized kinds.
    pub fn generator(&self) -> Option<GateMatrix> {
        match self.kind {
            GateKind::RX => Some(GateMatrix::One(gates::pauli_x())),
            GateKind::RY => Some(GateMatrix::One(gates::pauli_y())),
            GateKind::RZ => Some(GateMatrix::One(gates::pauli_z())),
            GateKind::RZZ => Some(GateMatrix::Two(gates::zz())),
            _ => None,
        }
    }

    pub fn angle(&self, params: &[f64]) -> f64 {
        self.slot.map_or(0.0, |s| params[s])
    }
}

/// Applies a gate matrix to the op's qubits.
pub fn apply_matrix<S: QuantumState>(state: &mut S, m: &GateMatrix, qubits: &[usize]) -> Result<()> {
    match m {
        GateMatrix::One(g) => state.apply_1q(g, qubits[0]),
        GateMatrix::Two(g) => state.apply_2q(g, qubits[0], qubits[1]),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum AnsatzKind {
    Hva,
    Hea,
}

impl std::str::FromStr for AnsatzKind {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "hva" => Ok(Self::Hva),
            "hea" => Ok(Self::Hea),
            other => Err(Error::Config(format!("unknown ansatz `{other}`"))),
        }
    }
}

impl std::fmt::Display for AnsatzKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            AnsatzKind::Hva => "hva",
            AnsatzKind::Hea => "hea",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Circuit {
    pub ansatz: AnsatzKind,
    pub n_qubits: usize,
    pub n_layers: usize,
    /// Fixed state preparation applied to `|0…0⟩`.
    pub prep: Vec<GateOp>,
    pub layers: Vec<Vec<GateOp>>,
    pub param_count: usize,
}

/// Hamiltonian variational ansatz for the Ising ring.
///
/// Prep is a Hadamard on every qubit. Each layer applies `RZZ(β_l)` on the
/// bonds `(j, j+1 mod N)` in ascending `j` and then `RX(γ_l)` on every
/// qubit; all gates of a sub-layer share one slot, ordered `β_1, γ_1, β_2, …`.
pub fn build_hva(n_qubits: usize, n_layers: usize) -> Result<Circuit> {
    check_size(n_qubits)?;
    let prep = (0..n_qubits).map(|q| GateOp::fixed(GateKind::H, vec![q])).collect();
    let layers = (0..n_layers)
        .map(|l| {
            let (beta, gamma) = (2 * l, 2 * l + 1);
            let mut ops: Vec<GateOp> = (0..n_qubits)
                .map(|j| GateOp::param(GateKind::RZZ, vec![j, (j + 1) % n_qubits], beta))
                .collect();
            ops.extend((0..n_qubits).map(|q| GateOp::param(GateKind::RX, vec![q], gamma)));
            ops
        })
        .collect();
    Ok(Circuit {
        ansatz: AnsatzKind::Hva,
        n_qubits,
        n_layers,
        prep,
        layers,
        param_count: 2 * n_layers,
    })
}

/// Hardware-efficient ansatz: per layer `RX, RY, RZ` on each qubit (slots
/// qubit-major), then a CNOT brickwall on even pairs followed by odd pairs,
/// control on the lower index and no wrap-around.
pub fn build_hea(n_qubits: usize, n_layers: usize) -> Result<Circuit> {
    check_size(n_qubits)?;
    let per_layer = 3 * n_qubits;
    let layers = (0..n_layers)
        .map(|l| {
            let mut ops = Vec::with_capacity(per_layer + n_qubits);
            for q in 0..n_qubits {
                for (a, kind) in [GateKind::RX, GateKind::RY, GateKind::RZ].into_iter().enumerate() {
                    ops.push(GateOp::param(kind, vec![q], l * per_layer + 3 * q + a));
                }
            }
            for start in [0, 1] {
                for q in (start..n_qubits.saturating_sub(1)).step_by(2) {
                    ops.push(GateOp::fixed(GateKind::CNOT, vec![q, q + 1]));
                }
            }
            ops
        })
        .collect();
    Ok(Circuit {
        ansatz: AnsatzKind::Hea,
        n_qubits,
        n_layers,
        prep: Vec::new(),
        layers,
        param_count: per_layer * n_layers,
    })
}

pub fn build(kind: AnsatzKind, n_qubits: usize, n_layers: usize) -> Result<Circuit> {
    match kind {
        AnsatzKind::Hva => build_hva(n_qubits, n_layers),
        AnsatzKind::Hea => build_hea(n_qubits, n_layers),
    }
}

fn check_size(n: usize) -> Result<()> {
    if n < 2 {
        return Err(Error::InvalidInput("ansatz needs at least 2 qubits".into()));
    }
    Ok(())
}

impl Circuit {
    /// Every op in execution order: prep, then layers.
    pub fn ops(&self) -> impl Iterator<Item = &GateOp> {
        self.prep.iter().chain(self.layers.iter().flatten())
    }

    pub fn check_params(&self, params: &[f64]) -> Result<()> {
        if params.len() != self.param_count {
            return Err(Error::DimensionMismatch {
                expected: self.param_count,
                found: params.len(),
            });
        }
        Ok(())
    }

    pub fn apply_prep<S: QuantumState>(&self, state: &mut S) -> Result<()> {
        for op in &self.prep {
            apply_matrix(state, &op.matrix(0.0), &op.qubits)?;
        }
        Ok(())
    }

    /// Applies layer `layer` (0-based).
    pub fn apply_layer<S: QuantumState>(&self, state: &mut S, params: &[f64], layer: usize) -> Result<()> {
        for op in &self.layers[layer] {
            apply_matrix(state, &op.matrix(op.angle(params)), &op.qubits)?;
        }
        Ok(())
    }

    /// State after prep and the first `upto_layer` layers, starting from `init = |0…0⟩`.
    pub fn run_prefix_on<S: QuantumState>(&self, mut init: S, params: &[f64], upto_layer: usize) -> Result<S> {
        self.check_params(params)?;
        if upto_layer > self.n_layers {
            return Err(Error::InvalidInput(format!(
                "prefix {upto_layer} exceeds {} layers",
                self.n_layers
            )));
        }
        if init.n_qubits() != self.n_qubits {
            return Err(Error::DimensionMismatch {
                expected: self.n_qubits,
                found: init.n_qubits(),
            });
        }
        self.apply_prep(&mut init)?;
        for l in 0..upto_layer {
            self.apply_layer(&mut init, params, l)?;
        }
        Ok(init)
    }

    pub fn run_prefix(&self, params: &[f64], upto_layer: usize, backend: &Backend) -> Result<SimState> {
        self.run_prefix_on(backend.zero_state(self.n_qubits)?, params, upto_layer)
    }

    /// Full circuit on the dense backend.
    pub fn statevector(&self, params: &[f64]) -> Result<StateVector> {
        self.run_prefix_on(StateVector::zero(self.n_qubits)?, params, self.n_layers)
    }

    /// JSON description of the gate program.
    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }
}
