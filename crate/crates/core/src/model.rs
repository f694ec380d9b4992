//! Transverse-field Ising chain: Pauli-sum Hamiltonian, exact
//! diagonalization, ground space and energy expectations.

use std::fmt;

use nalgebra::DMatrix;
use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gates::{pauli_x, pauli_y, pauli_z};
use crate::linalg::hermitian_eigensystem;
use crate::state::{LogBase, StateVector};

/// Largest register for dense Hamiltonians and exact diagonalization.
pub const MAX_ED_QUBITS: usize = 12;
pub const DEFAULT_DEGENERACY_TOL: f64 = 1e-10;
const IMAG_RESIDUE_TOL: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Pauli {
    I,
    X,
    Y,
    Z,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Boundary {
    #[default]
    Periodic,
    Open,
}

impl std::str::FromStr for Boundary {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "periodic" | "pbc" => Ok(Self::Periodic),
            "open" | "obc" => Ok(Self::Open),
            other => Err(Error::Config(format!("unknown boundary `{other}`"))),
        }
    }
}

impl fmt::Display for Boundary {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Boundary::Periodic => "periodic",
            Boundary::Open => "open",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TfimParams {
    pub n_qubits: usize,
    pub j: f64,
    pub h: f64,
    pub boundary: Boundary,
}

impl TfimParams {
    pub fn new(n_qubits: usize, j: f64, h: f64, boundary: Boundary) -> Result<Self> {
        if n_qubits < 2 {
            return Err(Error::InvalidInput("TFIM needs at least 2 qubits".into()));
        }
        Ok(Self {
            n_qubits,
            j,
            h,
            boundary,
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PauliTerm {
    pub coeff: f64,
    pub ops: Vec<Pauli>,
}

impl PauliTerm {
    /// Bit masks (qubit 0 = MSB) of the X/Y flips, Z-type signs and Y count.
    fn masks(&self) -> (usize, usize, u32) {
        let n = self.ops.len();
        let (mut flip, mut sign, mut ny) = (0usize, 0usize, 0u32);
        for (q, op) in self.ops.iter().enumerate() {
            let bit = 1 << (n - 1 - q);
            match op {
                Pauli::I => {}
                Pauli::X => flip |= bit,
                Pauli::Y => {
                    flip |= bit;
                    sign |= bit;
                    ny += 1;
                }
                Pauli::Z => sign |= bit,
            }
        }
        (flip, sign, ny)
    }

    pub fn label(&self) -> String {
        self.ops
            .iter()
            .map(|p| match p {
                Pauli::I => 'I',
                Pauli::X => 'X',
                Pauli::Y => 'Y',
                Pauli::Z => 'Z',
            })
            .collect()
    }
}

/// σ|i⟩ = phase · |i ⊕ flip⟩ where Y = iXZ contributes i·(−1)^bit.
fn pauli_action(i: usize, flip: usize, sign: usize, ny: u32) -> (usize, C64) {
    let neg = (i & sign).count_ones() % 2 == 1;
    let base = match ny % 4 {
        0 => C64::new(1.0, 0.0),
        1 => C64::new(0.0, 1.0),
        2 => C64::new(-1.0, 0.0),
        _ => C64::new(0.0, -1.0),
    };
    (i ^ flip, if neg { -base } else { base })
}

/// Real-weighted sum of Pauli strings; Hermitian by construction.
#[derive(Debug, Clone, PartialEq)]
pub struct PauliTermList {
    n_qubits: usize,
    terms: Vec<PauliTerm>,
}

impl PauliTermList {
    pub fn new(n_qubits: usize) -> Self {
        Self {
            n_qubits,
            terms: Vec::new(),
        }
    }

    /// Adds a term, merging coefficients when the string is already present.
    pub fn push(&mut self, coeff: f64, ops: Vec<Pauli>) -> Result<()> {
        if ops.len() != self.n_qubits {
            return Err(Error::DimensionMismatch {
                expected: self.n_qubits,
                found: ops.len(),
            });
        }
        match self.terms.iter_mut().find(|t| t.ops == ops) {
            Some(t) => t.coeff += coeff,
            None => self.terms.push(PauliTerm { coeff, ops }),
        }
        Ok(())
    }

    /// Parses labels such as `"XIZ"`.
    pub fn push_label(&mut self, coeff: f64, label: &str) -> Result<()> {
        let ops = label
            .chars()
            .map(|c| match c {
                'I' => Ok(Pauli::I),
                'X' => Ok(Pauli::X),
                'Y' => Ok(Pauli::Y),
                'Z' => Ok(Pauli::Z),
                other => Err(Error::InvalidInput(format!("bad Pauli label `{other}`"))),
            })
            .collect::<Result<Vec<_>>>()?;
        self.push(coeff, ops)
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    pub fn terms(&self) -> &[PauliTerm] {
        &self.terms
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    /// `H|ψ⟩` as raw amplitudes.
    pub fn apply(&self, state: &StateVector) -> Result<Vec<C64>> {
        self.check(state.n_qubits())?;
        let amps = state.amplitudes();
        let mut out = vec![C64::new(0.0, 0.0); amps.len()];
        for t in &self.terms {
            let (flip, sign, ny) = t.masks();
            for (i, a) in amps.iter().enumerate() {
                let (j, ph) = pauli_action(i, flip, sign, ny);
                out[j] += ph * *a * t.coeff;
            }
        }
        Ok(out)
    }

    fn check(&self, n: usize) -> Result<()> {
        if n != self.n_qubits {
            return Err(Error::DimensionMismatch {
                expected: self.n_qubits,
                found: n,
            });
        }
        Ok(())
    }

    /// Dense matrix `Σ c_t ⊗_j σ_{t,j}`.
    pub fn dense_matrix(&self) -> Result<DMatrix<C64>> {
        if self.n_qubits > MAX_ED_QUBITS {
            return Err(Error::DimensionGuard {
                what: "dense_hamiltonian",
                size: self.n_qubits,
                limit: MAX_ED_QUBITS,
            });
        }
        let dim = 1usize << self.n_qubits;
        let mut h = DMatrix::<C64>::zeros(dim, dim);
        for t in &self.terms {
            let (flip, sign, ny) = t.masks();
            for i in 0..dim {
                let (j, ph) = pauli_action(i, flip, sign, ny);
                h[(j, i)] += ph * t.coeff;
            }
        }
        Ok(h)
    }
}

/// `−J Σ Z_j Z_{j+1} − h Σ X_j`, with the `(N−1, 0)` bond only when periodic.
pub fn tfim_terms(p: &TfimParams) -> PauliTermList {
    let n = p.n_qubits;
    let mut list = PauliTermList::new(n);
    let bonds = match p.boundary {
        Boundary::Periodic => n,
        Boundary::Open => n - 1,
    };
    for j in 0..bonds {
        let mut ops = vec![Pauli::I; n];
        ops[j] = Pauli::Z;
        ops[(j + 1) % n] = Pauli::Z;
        list.push(-p.j, ops).expect("length matches");
    }
    for j in 0..n {
        let mut ops = vec![Pauli::I; n];
        ops[j] = Pauli::X;
        list.push(-p.h, ops).expect("length matches");
    }
    list
}

pub fn dense_hamiltonian(terms: &PauliTermList) -> Result<DMatrix<C64>> {
    terms.dense_matrix()
}

/// Lowest eigenspace of a Hamiltonian.
#[derive(Debug, Clone)]
pub struct GroundSpace {
    pub energy: f64,
    /// Orthonormal, canonicalized (see [`ground_space`]).
    pub basis: Vec<StateVector>,
    /// First eigenvalue above the ground space, if any.
    pub first_excited: Option<f64>,
}

impl GroundSpace {
    pub fn degeneracy(&self) -> usize {
        self.basis.len()
    }

    pub fn n_qubits(&self) -> usize {
        self.basis[0].n_qubits()
    }

    pub fn gap(&self) -> Option<f64> {
        self.first_excited.map(|e| e - self.energy)
    }

    /// `P = Σ_k |v_k⟩⟨v_k|` as a dense matrix.
    pub fn projector(&self) -> Result<DMatrix<C64>> {
        let n = self.n_qubits();
        if n > MAX_ED_QUBITS {
            return Err(Error::DimensionGuard {
                what: "projector",
                size: n,
                limit: MAX_ED_QUBITS,
            });
        }
        let dim = 1usize << n;
        let mut p = DMatrix::<C64>::zeros(dim, dim);
        for v in &self.basis {
            let a = v.amplitudes();
            for i in 0..dim {
                for j in 0..dim {
                    p[(i, j)] += a[i] * a[j].conj();
                }
            }
        }
        Ok(p)
    }
}

/// Exact diagonalization; the ground space collects every eigenvector with
/// `λ ≤ E0 + rel_tol·max(1, |E0|)`.
///
/// Degenerate bases are canonicalized by projecting computational basis
/// vectors in index order and orthonormalizing, so the first vector is the
/// projection of the lowest-index basis state with support in the space.
pub fn ground_space(h: &DMatrix<C64>, rel_tol: f64) -> Result<GroundSpace> {
    let dim = h.nrows();
    if dim < 2 || !dim.is_power_of_two() {
        return Err(Error::InvalidInput(format!("Hamiltonian dimension {dim} is not 2^n")));
    }
    let eig = hermitian_eigensystem(h)?;
    let e0 = eig.values[0];
    let thresh = e0 + rel_tol * e0.abs().max(1.0);
    let m = eig.values.iter().take_while(|&&v| v <= thresh).count();
    let first_excited = eig.values.get(m).copied();
    let raw: Vec<Vec<C64>> = (0..m).map(|k| eig.vectors.column(k).iter().copied().collect()).collect();
    let basis = canonical_basis(&raw, dim)?
        .into_iter()
        .map(StateVector::from_amplitudes)
        .collect::<Result<Vec<_>>>()?;
    Ok(GroundSpace {
        energy: e0,
        basis,
        first_excited,
    })
}

fn canonical_basis(raw: &[Vec<C64>], dim: usize) -> Result<Vec<Vec<C64>>> {
    let m = raw.len();
    if m == 1 {
        let v = &raw[0];
        // fix the phase: first sizeable component real positive
        let pivot = v.iter().position(|a| a.norm_sqr() > 1e-8).unwrap_or(0);
        let phase = v[pivot].conj() / v[pivot].norm();
        return Ok(vec![v.iter().map(|a| a * phase).collect()]);
    }
    let mut out: Vec<Vec<C64>> = Vec::with_capacity(m);
    for i in 0..dim {
        if out.len() == m {
            break;
        }
        // P e_i = Σ_k v_k conj(v_k[i])
        let mut w = vec![C64::new(0.0, 0.0); dim];
        for v in raw {
            let c = v[i].conj();
            for (x, a) in w.iter_mut().zip(v) {
                *x += a * c;
            }
        }
        for _ in 0..2 {
            for u in &out {
                let ov: C64 = u.iter().zip(&w).map(|(a, b)| a.conj() * b).sum();
                for (x, a) in w.iter_mut().zip(u) {
                    *x -= a * ov;
                }
            }
        }
        let n2: f64 = w.iter().map(|a| a.norm_sqr()).sum();
        if n2 > 1e-8 {
            let n = n2.sqrt();
            out.push(w.into_iter().map(|a| a / n).collect());
        }
    }
    if out.len() != m {
        return Err(Error::Numerical("could not canonicalize degenerate ground space".into()));
    }
    Ok(out)
}

/// `⟨ψ|H|ψ⟩` on either backend.
pub fn energy_expectation<S: Expectation>(state: &S, terms: &PauliTermList) -> Result<f64> {
    state.expectation(terms)
}

/// Balanced-cut style entropy of the first ground-space vector.
pub fn ground_state_entropy(gs: &GroundSpace, block_size: usize, base: LogBase) -> Result<f64> {
    gs.basis[0].block_entropy(block_size, base)
}

/// State types that can evaluate Pauli-sum expectation values.
pub trait Expectation {
    fn expectation(&self, terms: &PauliTermList) -> Result<f64>;
}

fn real_part(z: C64) -> Result<f64> {
    if z.im.abs() > IMAG_RESIDUE_TOL * z.re.abs().max(1.0) {
        return Err(Error::Numerical(format!("expectation has imaginary residue {:.3e}", z.im)));
    }
    Ok(z.re)
}

impl Expectation for StateVector {
    fn expectation(&self, terms: &PauliTermList) -> Result<f64> {
        let hpsi = terms.apply(self)?;
        real_part(self.amplitudes().iter().zip(&hpsi).map(|(a, b)| a.conj() * b).sum())
    }
}

impl Expectation for crate::mps::MpsState {
    fn expectation(&self, terms: &PauliTermList) -> Result<f64> {
        terms.check(self.n_qubits())?;
        let mut total = C64::new(0.0, 0.0);
        for t in terms.terms() {
            let mut work = self.clone();
            for (q, op) in t.ops.iter().enumerate() {
                let g = match op {
                    Pauli::I => continue,
                    Pauli::X => pauli_x(),
                    Pauli::Y => pauli_y(),
                    Pauli::Z => pauli_z(),
                };
                work.apply_1q(&g, q)?;
            }
            total += self.inner(&work)? * t.coeff;
        }
        real_part(total)
    }
}

impl Expectation for crate::backend::SimState {
    fn expectation(&self, terms: &PauliTermList) -> Result<f64> {
        match self {
            crate::backend::SimState::Dense(s) => s.expectation(terms),
            crate::backend::SimState::Mps(s) => s.expectation(terms),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gates::hadamard;

    fn tfim(n: usize, j: f64, h: f64, b: Boundary) -> PauliTermList {
        tfim_terms(&TfimParams::new(n, j, h, b).unwrap())
    }

    #[test]
    fn term_counts() {
        let t = tfim(4, 1.0, 1.0, Boundary::Periodic);
        let zz = t.terms().iter().filter(|x| x.label().contains('Z')).count();
        let xx = t.terms().iter().filter(|x| x.label().contains('X')).count();
        assert_eq!((zz, xx), (4, 4));
        assert!(t.terms().iter().all(|x| x.coeff == -1.0));
        assert!(t.terms().iter().any(|x| x.label() == "ZIIZ"));

        let t = tfim(3, 1.0, 1.0, Boundary::Open);
        assert_eq!(t.terms().iter().filter(|x| x.label().contains('Z')).count(), 2);
        assert_eq!(t.terms().iter().filter(|x| x.label().contains('X')).count(), 3);
    }

    #[test]
    fn two_site_ring_merges_duplicate_bond() {
        let t = tfim(2, 1.0, 0.5, Boundary::Periodic);
        let zz: Vec<_> = t.terms().iter().filter(|x| x.label() == "ZZ").collect();
        assert_eq!(zz.len(), 1);
        assert_eq!(zz[0].coeff, -2.0);
    }

    #[test]
    fn classical_limit_energy() {
        let t = tfim(4, 1.0, 0.0, Boundary::Periodic);
        let s = StateVector::zero(4).unwrap();
        assert_eq!(energy_expectation(&s, &t).unwrap(), -4.0);
    }

    #[test]
    fn free_spin_limit_energy() {
        let t = tfim(4, 0.0, 1.0, Boundary::Periodic);
        let mut s = StateVector::zero(4).unwrap();
        for q in 0..4 {
            s.apply_1q(&hadamard(), q).unwrap();
        }
        assert!((energy_expectation(&s, &t).unwrap() + 4.0).abs() < 1e-14);
    }

    #[test]
    fn dense_small_cases() {
        let mut t = PauliTermList::new(1);
        t.push_label(1.0, "Z").unwrap();
        let h = t.dense_matrix().unwrap();
        assert_eq!(h[(0, 0)].re, 1.0);
        assert_eq!(h[(1, 1)].re, -1.0);
        assert_eq!(h[(0, 1)].norm(), 0.0);

        let mut t = PauliTermList::new(2);
        t.push_label(1.0, "XI").unwrap();
        t.push_label(1.0, "IX").unwrap();
        let e = hermitian_eigensystem(&t.dense_matrix().unwrap()).unwrap();
        for (v, x) in e.values.iter().zip([-2.0, 0.0, 0.0, 2.0]) {
            assert!((v - x).abs() < 1e-14);
        }

        let mut t = PauliTermList::new(1);
        t.push_label(1.0, "Y").unwrap();
        let h = t.dense_matrix().unwrap();
        assert_eq!(h[(0, 1)], C64::new(0.0, -1.0));
        assert_eq!(h[(1, 0)], C64::new(0.0, 1.0));
        assert!(t.push_label(1.0, "Q").is_err());
        assert!(t.push_label(1.0, "XX").is_err());
    }

    #[test]
    fn ed_guard() {
        let t = tfim(13, 1.0, 1.0, Boundary::Periodic);
        assert!(matches!(t.dense_matrix(), Err(Error::DimensionGuard { .. })));
    }

    #[test]
    fn classical_degenerate_ground_space() {
        let h = tfim(4, 1.0, 0.0, Boundary::Periodic).dense_matrix().unwrap();
        let gs = ground_space(&h, DEFAULT_DEGENERACY_TOL).unwrap();
        assert_eq!(gs.energy, -4.0);
        assert_eq!(gs.degeneracy(), 2);
        assert_eq!(gs.basis[0], StateVector::zero(4).unwrap());
        assert_eq!(gs.basis[1], StateVector::basis(4, 15).unwrap());
        assert_eq!(ground_state_entropy(&gs, 2, LogBase::E).unwrap(), 0.0);
        assert!((gs.gap().unwrap() - 4.0).abs() < 1e-12);
    }

    #[test]
    fn free_spin_ground_space() {
        let h = tfim(4, 0.0, 1.0, Boundary::Periodic).dense_matrix().unwrap();
        let gs = ground_space(&h, DEFAULT_DEGENERACY_TOL).unwrap();
        assert!((gs.energy + 4.0).abs() < 1e-12);
        assert_eq!(gs.degeneracy(), 1);
        for a in gs.basis[0].amplitudes() {
            assert!((a - C64::new(0.25, 0.0)).norm() < 1e-12);
        }
        assert!(ground_state_entropy(&gs, 2, LogBase::E).unwrap().abs() < 1e-12);
    }

    #[test]
    fn projector_is_idempotent() {
        let h = tfim(4, 1.0, 0.0, Boundary::Periodic).dense_matrix().unwrap();
        let gs = ground_space(&h, DEFAULT_DEGENERACY_TOL).unwrap();
        let p = gs.projector().unwrap();
        let err = (&p * &p - &p).iter().fold(0.0f64, |a, z| a.max(z.norm()));
        assert!(err < 1e-9);
        let herm = (p.adjoint() - &p).iter().fold(0.0f64, |a, z| a.max(z.norm()));
        assert!(herm < 1e-9);
    }
}
