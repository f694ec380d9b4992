//! Dense statevector backend.
//!
//! Qubit 0 is the most significant bit of the basis index, so `|10⟩` on two
//! qubits is index 2. The MPS backend uses the same ordering.

use nalgebra::DMatrix;
use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gates::{unitarity_residual, Mat2, Mat4};
use crate::linalg::{hermitian_eigensystem, hermiticity_residual};

/// Eigenvalues below this are treated as exact zeros in the entropy sum.
pub const EIGEN_CLAMP: f64 = 1e-14;

const UNITARY_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub enum LogBase {
    #[default]
    #[serde(rename = "e")]
    E,
    #[serde(rename = "2")]
    Two,
}

impl LogBase {
    pub fn ln_scale(self) -> f64 {
        match self {
            LogBase::E => 1.0,
            LogBase::Two => std::f64::consts::LN_2,
        }
    }
}

/// `−Σ p log p` over the given probabilities, skipping `p < EIGEN_CLAMP`.
pub fn shannon_entropy<I: IntoIterator<Item = f64>>(probs: I, base: LogBase) -> f64 {
    let s: f64 = probs.into_iter().filter(|&p| p >= EIGEN_CLAMP).map(|p| -p * p.ln()).sum();
    (s / base.ln_scale()).max(0.0)
}

#[derive(Debug, Clone, PartialEq)]
pub struct StateVector {
    n_qubits: usize,
    amps: Vec<C64>,
}

impl StateVector {
    /// `|0…0⟩`.
    pub fn zero(n_qubits: usize) -> Result<Self> {
        Self::basis(n_qubits, 0)
    }

    pub fn basis(n_qubits: usize, index: usize) -> Result<Self> {
        if n_qubits == 0 || n_qubits > 30 {
            return Err(Error::InvalidInput(format!("unsupported qubit count {n_qubits}")));
        }
        let dim = 1usize << n_qubits;
        if index >= dim {
            return Err(Error::InvalidInput(format!("basis index {index} >= {dim}")));
        }
        let mut amps = vec![C64::new(0.0, 0.0); dim];
        amps[index] = C64::new(1.0, 0.0);
        Ok(Self { n_qubits, amps })
    }

    /// Computational basis state for `bits`, `bits[0]` being qubit 0.
    pub fn from_bits(bits: &[u8]) -> Result<Self> {
        let index = bits.iter().try_fold(0usize, |acc, &b| match b {
            0 | 1 => Ok((acc << 1) | b as usize),
            _ => Err(Error::InvalidInput(format!("bit value {b}"))),
        })?;
        Self::basis(bits.len(), index)
    }

    /// Builds a state from raw amplitudes, normalizing them.
    pub fn from_amplitudes(amps: Vec<C64>) -> Result<Self> {
        let dim = amps.len();
        if dim < 2 || !dim.is_power_of_two() {
            return Err(Error::InvalidInput(format!("amplitude count {dim} is not 2^n, n >= 1")));
        }
        let norm = amps.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt();
        if !(norm.is_finite() && norm > 0.0) {
            return Err(Error::InvalidInput("amplitudes have zero or non-finite norm".into()));
        }
        Ok(Self {
            n_qubits: dim.trailing_zeros() as usize,
            amps: amps.into_iter().map(|a| a / norm).collect(),
        })
    }

    /// Wraps amplitudes without normalizing; for intermediate vectors such
    /// as `H|ψ⟩` in gradient sweeps.
    pub(crate) fn from_raw(n_qubits: usize, amps: Vec<C64>) -> Self {
        debug_assert_eq!(amps.len(), 1 << n_qubits);
        Self { n_qubits, amps }
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    pub fn dim(&self) -> usize {
        self.amps.len()
    }

    pub fn amplitudes(&self) -> &[C64] {
        &self.amps
    }

    pub fn norm_sqr(&self) -> f64 {
        self.amps.iter().map(|a| a.norm_sqr()).sum()
    }

    pub fn scale(&mut self, factor: C64) {
        for a in &mut self.amps {
            *a *= factor;
        }
    }

    fn check_qubit(&self, q: usize) -> Result<()> {
        if q >= self.n_qubits {
            return Err(Error::QubitOutOfRange {
                qubit: q,
                n_qubits: self.n_qubits,
            });
        }
        Ok(())
    }

    fn stride(&self, q: usize) -> usize {
        1 << (self.n_qubits - 1 - q)
    }

    pub fn apply_1q(&mut self, gate: &Mat2, qubit: usize) -> Result<()> {
        self.check_qubit(qubit)?;
        let stride = self.stride(qubit);
        let dim = self.amps.len();
        let mut base = 0;
        while base < dim {
            for i in base..base + stride {
                let a0 = self.amps[i];
                let a1 = self.amps[i + stride];
                self.amps[i] = gate[0][0] * a0 + gate[0][1] * a1;
                self.amps[i + stride] = gate[1][0] * a0 + gate[1][1] * a1;
            }
            base += 2 * stride;
        }
        Ok(())
    }

    /// `apply_1q` preceded by a unitarity check.
    pub fn apply_1q_checked(&mut self, gate: &Mat2, qubit: usize) -> Result<()> {
        let r = unitarity_residual(gate);
        if r > UNITARY_TOL {
            return Err(Error::NonUnitary(r));
        }
        self.apply_1q(gate, qubit)
    }

    pub fn apply_2q(&mut self, gate: &Mat4, q1: usize, q2: usize) -> Result<()> {
        self.check_qubit(q1)?;
        self.check_qubit(q2)?;
        if q1 == q2 {
            return Err(Error::RepeatedQubit(q1));
        }
        let s1 = self.stride(q1);
        let s2 = self.stride(q2);
        let mask = s1 | s2;
        for i in 0..self.amps.len() {
            if i & mask != 0 {
                continue;
            }
            let idx = [i, i | s2, i | s1, i | s1 | s2];
            let a = idx.map(|k| self.amps[k]);
            for (r, &k) in idx.iter().enumerate() {
                self.amps[k] = gate[r][0] * a[0] + gate[r][1] * a[1] + gate[r][2] * a[2] + gate[r][3] * a[3];
            }
        }
        Ok(())
    }

    pub fn apply_2q_checked(&mut self, gate: &Mat4, q1: usize, q2: usize) -> Result<()> {
        let r = unitarity_residual(gate);
        if r > UNITARY_TOL {
            return Err(Error::NonUnitary(r));
        }
        self.apply_2q(gate, q1, q2)
    }

    /// `⟨self|other⟩`.
    pub fn inner(&self, other: &StateVector) -> Result<C64> {
        if self.n_qubits != other.n_qubits {
            return Err(Error::DimensionMismatch {
                expected: self.n_qubits,
                found: other.n_qubits,
            });
        }
        Ok(self.amps.iter().zip(&other.amps).map(|(a, b)| a.conj() * b).sum())
    }

    /// Reduced density matrix of the leading `block_size` qubits.
    pub fn reduced_density(&self, block_size: usize) -> Result<DensityMatrix> {
        self.check_block(block_size)?;
        let rows = 1usize << block_size;
        let cols = self.amps.len() / rows;
        let m = DMatrix::from_fn(rows, cols, |a, b| self.amps[a * cols + b]);
        Ok(DensityMatrix {
            elements: &m * m.adjoint(),
        })
    }

    /// Reduced density matrix of the trailing `block_size` qubits.
    pub fn reduced_density_trailing(&self, block_size: usize) -> Result<DensityMatrix> {
        self.check_block(block_size)?;
        let cols = 1usize << block_size;
        let rows = self.amps.len() / cols;
        let m = DMatrix::from_fn(rows, cols, |a, b| self.amps[a * cols + b]);
        Ok(DensityMatrix {
            elements: m.transpose() * m.map(|z| z.conj()),
        })
    }

    /// Entanglement entropy between the leading `block_size` qubits and the rest.
    pub fn block_entropy(&self, block_size: usize, base: LogBase) -> Result<f64> {
        self.reduced_density(block_size)?.von_neumann_entropy(base)
    }

    fn check_block(&self, block_size: usize) -> Result<()> {
        if block_size == 0 || block_size >= self.n_qubits {
            return Err(Error::InvalidBlock {
                block: block_size,
                n_qubits: self.n_qubits,
            });
        }
        Ok(())
    }
}

#[derive(Debug, Clone)]
pub struct DensityMatrix {
    elements: DMatrix<C64>,
}

impl DensityMatrix {
    pub fn from_matrix(elements: DMatrix<C64>) -> Result<Self> {
        if elements.nrows() != elements.ncols() {
            return Err(Error::DimensionMismatch {
                expected: elements.nrows(),
                found: elements.ncols(),
            });
        }
        Ok(Self { elements })
    }

    pub fn dim(&self) -> usize {
        self.elements.nrows()
    }

    pub fn elements(&self) -> &DMatrix<C64> {
        &self.elements
    }

    pub fn trace(&self) -> C64 {
        self.elements.trace()
    }

    pub fn hermiticity_residual(&self) -> f64 {
        hermiticity_residual(&self.elements)
    }

    pub fn eigenvalues(&self) -> Result<Vec<f64>> {
        Ok(hermitian_eigensystem(&self.elements)?.values)
    }

    /// `−Σ λ log λ` over the eigenvalues.
    pub fn von_neumann_entropy(&self, base: LogBase) -> Result<f64> {
        Ok(shannon_entropy(self.eigenvalues()?, base))
    }
}
