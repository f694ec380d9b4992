//! Matrix-product-state backend.
//!
//! Site tensors are stored with index order (left bond, physical, right
//! bond). Two-qubit gates on distant sites are routed with SWAPs on the open
//! chain, so the periodic wrap bond of a ring Hamiltonian is handled exactly
//! without a second tensor layout. After each two-site update the state is
//! in mixed-canonical form with its center on the right site of the split.

use nalgebra::DMatrix;
use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gates::{flip_qubits, swap, Mat2, Mat4};
use crate::linalg::svd;
use crate::state::{shannon_entropy, LogBase, StateVector};

pub const DEFAULT_SVD_CUTOFF: f64 = 1e-12;
pub const MAX_CONTRACT_QUBITS: usize = 20;

/// Relative gap below which neighbouring singular values count as degenerate.
const TIE_TOL: f64 = 1e-12;

/// Truncation settings for two-site splits.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MpsConfig {
    pub chi_max: usize,
    pub svd_cutoff: f64,
}

impl MpsConfig {
    /// `chi_max = 2^⌊n/2⌋`, which never truncates an `n`-qubit state.
    pub fn lossless(n_qubits: usize) -> Self {
        Self {
            chi_max: 1 << (n_qubits / 2),
            svd_cutoff: DEFAULT_SVD_CUTOFF,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
struct Site {
    left: usize,
    right: usize,
    data: Vec<C64>,
}

impl Site {
    fn at(&self, l: usize, s: usize, r: usize) -> C64 {
        self.data[(l * 2 + s) * self.right + r]
    }

    /// `(left·2) × right` view.
    fn left_matrix(&self) -> DMatrix<C64> {
        DMatrix::from_fn(self.left * 2, self.right, |i, j| self.data[i * self.right + j])
    }

    /// `left × (2·right)` view.
    fn right_matrix(&self) -> DMatrix<C64> {
        let w = 2 * self.right;
        DMatrix::from_fn(self.left, w, |i, j| self.data[i * w + j])
    }

    fn from_left_matrix(m: &DMatrix<C64>) -> Self {
        let (rows, right) = m.shape();
        let mut data = Vec::with_capacity(rows * right);
        for i in 0..rows {
            for j in 0..right {
                data.push(m[(i, j)]);
            }
        }
        Self {
            left: rows / 2,
            right,
            data,
        }
    }

    fn from_right_matrix(m: &DMatrix<C64>) -> Self {
        let (left, w) = m.shape();
        let mut data = Vec::with_capacity(left * w);
        for i in 0..left {
            for j in 0..w {
                data.push(m[(i, j)]);
            }
        }
        Self {
            left,
            right: w / 2,
            data,
        }
    }
}

/// Record of one two-site split.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct SplitReport {
    pub discarded_weight: f64,
    pub kept: usize,
    /// True when `chi_max` rather than the cutoff decided `kept`.
    pub chi_limited: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MpsState {
    n_qubits: usize,
    sites: Vec<Site>,
    config: MpsConfig,
    center: Option<usize>,
    total_discarded: f64,
    max_split_discarded: f64,
    last_split: Option<SplitReport>,
}

impl MpsState {
    /// Product state for `bits`, `bits[0]` on site 0.
    pub fn from_basis(bits: &[u8], config: MpsConfig) -> Result<Self> {
        if bits.is_empty() {
            return Err(Error::InvalidInput("empty bitstring".into()));
        }
        if config.chi_max == 0 {
            return Err(Error::InvalidInput("chi_max must be >= 1".into()));
        }
        let sites = bits
            .iter()
            .map(|&b| {
                if b > 1 {
                    return Err(Error::InvalidInput(format!("bit value {b}")));
                }
                let mut data = vec![C64::new(0.0, 0.0); 2];
                data[b as usize] = C64::new(1.0, 0.0);
                Ok(Site { left: 1, right: 1, data })
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Self {
            n_qubits: bits.len(),
            sites,
            config,
            center: Some(0),
            total_discarded: 0.0,
            max_split_discarded: 0.0,
            last_split: None,
        })
    }

    /// `bits` must have length `n_qubits`.
    pub fn from_basis_checked(n_qubits: usize, bits: &[u8], config: MpsConfig) -> Result<Self> {
        if bits.len() != n_qubits {
            return Err(Error::DimensionMismatch {
                expected: n_qubits,
                found: bits.len(),
            });
        }
        Self::from_basis(bits, config)
    }

    pub fn zero(n_qubits: usize, config: MpsConfig) -> Result<Self> {
        Self::from_basis(&vec![0; n_qubits], config)
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    pub fn config(&self) -> MpsConfig {
        self.config
    }

    pub fn canonical_center(&self) -> Option<usize> {
        self.center
    }

    /// Dimensions of the `n − 1` interior bonds.
    pub fn bond_dims(&self) -> Vec<usize> {
        self.sites[..self.n_qubits - 1].iter().map(|s| s.right).collect()
    }

    /// Sum of discarded squared weight over every split so far.
    pub fn total_discarded(&self) -> f64 {
        self.total_discarded
    }

    pub fn max_split_discarded(&self) -> f64 {
        self.max_split_discarded
    }

    pub fn last_split(&self) -> Option<SplitReport> {
        self.last_split
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

    pub fn apply_1q(&mut self, gate: &Mat2, qubit: usize) -> Result<()> {
        self.check_qubit(qubit)?;
        let site = &mut self.sites[qubit];
        let r = site.right;
        for l in 0..site.left {
            for b in 0..r {
                let i0 = (l * 2) * r + b;
                let i1 = (l * 2 + 1) * r + b;
                let (a0, a1) = (site.data[i0], site.data[i1]);
                site.data[i0] = gate[0][0] * a0 + gate[0][1] * a1;
                site.data[i1] = gate[1][0] * a0 + gate[1][1] * a1;
            }
        }
        Ok(())
    }

    /// Applies `gate` to the ordered pair `(q1, q2)`, routing with SWAPs
    /// when the sites are not adjacent.
    pub fn apply_2q(&mut self, gate: &Mat4, q1: usize, q2: usize) -> Result<()> {
        self.check_qubit(q1)?;
        self.check_qubit(q2)?;
        if q1 == q2 {
            return Err(Error::RepeatedQubit(q1));
        }
        let (lo, hi) = (q1.min(q2), q1.max(q2));
        let oriented = if q1 < q2 { *gate } else { flip_qubits(gate) };
        if hi == lo + 1 {
            return self.apply_adjacent(&oriented, lo);
        }
        // carry the low qubit up to hi − 1, act, then carry it back
        let sw = swap();
        for p in lo..hi - 1 {
            self.apply_adjacent(&sw, p)?;
        }
        self.apply_adjacent(&oriented, hi - 1)?;
        for p in (lo..hi - 1).rev() {
            self.apply_adjacent(&sw, p)?;
        }
        Ok(())
    }

    /// Gate on sites `(i, i + 1)` with site `i` as the first gate qubit.
    fn apply_adjacent(&mut self, gate: &Mat4, i: usize) -> Result<()> {
        self.move_center(i)?;
        let a = self.sites[i].left_matrix();
        let b = self.sites[i + 1].right_matrix();
        let theta = a * b;
        let (l, r) = (self.sites[i].left, self.sites[i + 1].right);
        // theta[(a, s1), (s2, b)] ← Σ G[(s1' s2'), (s1 s2)] theta[(a, s1), (s2, b)]
        let mut out = DMatrix::<C64>::zeros(2 * l, 2 * r);
        for al in 0..l {
            for br in 0..r {
                let v = [
                    theta[(al * 2, br)],
                    theta[(al * 2, r + br)],
                    theta[(al * 2 + 1, br)],
                    theta[(al * 2 + 1, r + br)],
                ];
                for (row, g) in gate.iter().enumerate() {
                    let x = g[0] * v[0] + g[1] * v[1] + g[2] * v[2] + g[3] * v[3];
                    let (s1, s2) = (row >> 1, row & 1);
                    out[(al * 2 + s1, s2 * r + br)] = x;
                }
            }
        }
        let dec = svd(&out)?;
        let report = truncation_rank(&dec.s, self.config);
        let k = report.kept;
        let kept_norm = dec.s[..k].iter().map(|x| x * x).sum::<f64>().sqrt();
        if !(kept_norm.is_finite() && kept_norm > 0.0) {
            return Err(Error::Numerical("two-site split lost all weight".into()));
        }
        let u = dec.u.columns(0, k).into_owned();
        let sv = DMatrix::from_fn(k, 2 * r, |row, col| dec.v_t[(row, col)] * (dec.s[row] / kept_norm));
        self.sites[i] = Site::from_left_matrix(&u);
        self.sites[i + 1] = Site::from_right_matrix(&sv);
        self.center = Some(i + 1);
        self.total_discarded += report.discarded_weight;
        self.max_split_discarded = self.max_split_discarded.max(report.discarded_weight);
        self.last_split = Some(report);
        Ok(())
    }

    /// Brings the state into mixed-canonical form centred on `target`.
    pub fn move_center(&mut self, target: usize) -> Result<()> {
        self.check_qubit(target)?;
        let (from_left, from_right) = match self.center {
            Some(c) => (c, c),
            None => (0, self.n_qubits - 1),
        };
        for i in from_left..target {
            self.shift_right(i);
        }
        for i in (target + 1..=from_right).rev() {
            self.shift_left(i);
        }
        self.center = Some(target);
        Ok(())
    }

    /// QR on site `i`, pushing R into site `i + 1`.
    fn shift_right(&mut self, i: usize) {
        let qr = self.sites[i].left_matrix().qr();
        let (q, r) = (qr.q(), qr.r());
        let next = r * self.sites[i + 1].right_matrix();
        self.sites[i] = Site::from_left_matrix(&q);
        self.sites[i + 1] = Site::from_right_matrix(&next);
    }

    /// LQ on site `i` (via QR of the adjoint), pushing L into site `i − 1`.
    fn shift_left(&mut self, i: usize) {
        let qr = self.sites[i].right_matrix().adjoint().qr();
        let (q, r) = (qr.q(), qr.r());
        let prev = self.sites[i - 1].left_matrix() * r.adjoint();
        self.sites[i] = Site::from_right_matrix(&q.adjoint());
        self.sites[i - 1] = Site::from_left_matrix(&prev);
    }

    /// Schmidt coefficients across bond `cut` (between sites `cut` and `cut + 1`).
    pub fn schmidt_values(&self, cut: usize) -> Result<Vec<f64>> {
        if cut + 1 >= self.n_qubits {
            return Err(Error::InvalidBond {
                bond: cut,
                n_qubits: self.n_qubits,
            });
        }
        let mut work = self.clone();
        work.move_center(cut)?;
        Ok(svd(&work.sites[cut].left_matrix())?.s)
    }

    /// Entanglement entropy of sites `0..=cut` against the rest.
    pub fn bond_entropy(&self, cut: usize, base: LogBase) -> Result<f64> {
        let s = self.schmidt_values(cut)?;
        Ok(shannon_entropy(s.iter().map(|x| x * x), base))
    }

    pub fn to_statevector(&self) -> Result<StateVector> {
        if self.n_qubits > MAX_CONTRACT_QUBITS {
            return Err(Error::DimensionGuard {
                what: "mps_to_statevector",
                size: self.n_qubits,
                limit: MAX_CONTRACT_QUBITS,
            });
        }
        // acc rows: basis prefix index, cols: open right bond
        let mut acc = self.sites[0].left_matrix();
        for site in &self.sites[1..] {
            let prod = &acc * site.right_matrix();
            let r = site.right;
            acc = DMatrix::from_fn(prod.nrows() * 2, r, |row, b| prod[(row / 2, (row % 2) * r + b)]);
        }
        StateVector::from_amplitudes(acc.column(0).iter().copied().collect())
    }

    /// `⟨self|other⟩` by left-to-right transfer-matrix contraction.
    pub fn inner(&self, other: &MpsState) -> Result<C64> {
        if self.n_qubits != other.n_qubits {
            return Err(Error::DimensionMismatch {
                expected: self.n_qubits,
                found: other.n_qubits,
            });
        }
        let mut env = DMatrix::from_element(1, 1, C64::new(1.0, 0.0));
        for (a, b) in self.sites.iter().zip(&other.sites) {
            let mut next = DMatrix::<C64>::zeros(a.right, b.right);
            for s in 0..2 {
                let am = DMatrix::from_fn(a.left, a.right, |l, r| a.at(l, s, r));
                let bm = DMatrix::from_fn(b.left, b.right, |l, r| b.at(l, s, r));
                next += am.adjoint() * &env * bm;
            }
            env = next;
        }
        Ok(env[(0, 0)])
    }

    pub fn norm_sqr(&self) -> f64 {
        self.inner(self).map(|z| z.re).unwrap_or(f64::NAN)
    }

    /// Worst orthonormality residual of the sites around the canonical center.
    pub fn canonical_residual(&self) -> f64 {
        let Some(c) = self.center else {
            return f64::INFINITY;
        };
        let mut worst = 0.0f64;
        for (i, site) in self.sites.iter().enumerate() {
            let gram = if i < c {
                let m = site.left_matrix();
                m.adjoint() * m
            } else if i > c {
                let m = site.right_matrix();
                &m * m.adjoint()
            } else {
                continue;
            };
            let n = gram.nrows();
            for p in 0..n {
                for q in 0..n {
                    let target = if p == q { 1.0 } else { 0.0 };
                    worst = worst.max((gram[(p, q)] - C64::new(target, 0.0)).norm());
                }
            }
        }
        worst
    }
}

/// Number of singular values to keep: the fewest whose discarded tail weight
/// is within the cutoff, capped at `chi_max`, never cutting inside a
/// degenerate group unless the cap forces it.
fn truncation_rank(s: &[f64], config: MpsConfig) -> SplitReport {
    let n = s.len();
    let total: f64 = s.iter().map(|x| x * x).sum();
    let mut tail = 0.0;
    let mut k = n;
    while k > 1 {
        let w = s[k - 1] * s[k - 1];
        if tail + w > config.svd_cutoff * total {
            break;
        }
        tail += w;
        k -= 1;
    }
    let tied = |k: usize| k < n && k > 0 && (s[k - 1] - s[k]).abs() <= TIE_TOL * s[0];
    while tied(k) && k < config.chi_max {
        k += 1;
    }
    let mut chi_limited = false;
    if k > config.chi_max {
        k = config.chi_max;
        chi_limited = true;
        // drop the whole degenerate group straddling the cap
        while tied(k) && k > 1 {
            k -= 1;
        }
    }
    let discarded = s[k..].iter().map(|x| x * x).sum::<f64>() / total;
    SplitReport {
        discarded_weight: discarded,
        kept: k,
        chi_limited,
    }
}
