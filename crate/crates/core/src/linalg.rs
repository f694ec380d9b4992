//! Dense Hermitian eigensolver and SVD wrappers over nalgebra.

use nalgebra::DMatrix;
use num_complex::Complex64 as C64;

use crate::error::{Error, Result};

/// Largest matrix dimension accepted by the dense eigensolver (2^12).
pub const MAX_DENSE_DIM: usize = 1 << 12;

const HERMITIAN_TOL: f64 = 1e-10;

#[derive(Debug, Clone)]
pub struct Eigensystem {
    /// Ascending.
    pub values: Vec<f64>,
    /// Column `k` pairs with `values[k]`.
    pub vectors: DMatrix<C64>,
}

/// Max-entry residual of `M − M†`.
pub fn hermiticity_residual(m: &DMatrix<C64>) -> f64 {
    let n = m.nrows();
    let mut worst = 0.0f64;
    for i in 0..n {
        for j in i..n {
            worst = worst.max((m[(i, j)] - m[(j, i)].conj()).norm());
        }
    }
    worst
}

/// Full eigendecomposition of a Hermitian matrix, eigenvalues ascending.
///
/// Matrices with an identically zero imaginary part go through the real
/// symmetric solver, which is several times faster at the sizes used for
/// exact diagonalization.
pub fn hermitian_eigensystem(m: &DMatrix<C64>) -> Result<Eigensystem> {
    let n = m.nrows();
    if m.ncols() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            found: m.ncols(),
        });
    }
    if n > MAX_DENSE_DIM {
        return Err(Error::DimensionGuard {
            what: "hermitian_eigensystem",
            size: n,
            limit: MAX_DENSE_DIM,
        });
    }
    let scale = m.iter().fold(1.0f64, |a, z| a.max(z.norm()));
    let res = hermiticity_residual(m);
    if res > HERMITIAN_TOL * scale {
        return Err(Error::NonHermitian(res));
    }
    if n == 0 {
        return Ok(Eigensystem {
            values: vec![],
            vectors: DMatrix::zeros(0, 0),
        });
    }

    let (values, vectors) = if m.iter().all(|z| z.im == 0.0) {
        let real = DMatrix::from_fn(n, n, |i, j| 0.5 * (m[(i, j)].re + m[(j, i)].re));
        let eig = real.symmetric_eigen();
        (
            eig.eigenvalues.iter().copied().collect::<Vec<_>>(),
            eig.eigenvectors.map(|x| C64::new(x, 0.0)),
        )
    } else {
        let sym = DMatrix::from_fn(n, n, |i, j| 0.5 * (m[(i, j)] + m[(j, i)].conj()));
        let eig = sym.symmetric_eigen();
        (eig.eigenvalues.iter().copied().collect(), eig.eigenvectors)
    };

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
    let sorted_vals = order.iter().map(|&k| values[k]).collect();
    let sorted_vecs = DMatrix::from_fn(n, n, |i, j| vectors[(i, order[j])]);
    Ok(Eigensystem {
        values: sorted_vals,
        vectors: sorted_vecs,
    })
}

/// Thin SVD with singular values sorted descending.
pub struct Svd {
    pub u: DMatrix<C64>,
    pub s: Vec<f64>,
    pub v_t: DMatrix<C64>,
}

/// Residual bound for accepting a decomposition from the bidiagonal
/// QR iteration, relative to `max(1, ‖A‖_F)`.
const SVD_ACCEPT_TOL: f64 = 1e-12;

pub fn svd(m: &DMatrix<C64>) -> Result<Svd> {
    if m.is_empty() {
        return Err(Error::InvalidInput("SVD of an empty matrix".into()));
    }
    if m.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
        return Err(Error::NonFinite("SVD input".into()));
    }
    // nalgebra's implicit-shift iteration occasionally returns an inaccurate
    // factorization on rank-deficient complex input without reporting it
    let fast = nalgebra::SVD::try_new(m.clone(), true, true, 1e-15, 10_000).and_then(|dec| {
        let u = dec.u?;
        let v_t = dec.v_t?;
        let s: Vec<f64> = dec.singular_values.iter().copied().collect();
        svd_is_accurate(m, &u, &s, &v_t).then_some((u, s, v_t))
    });
    let (u, s, v_t) = match fast {
        Some(f) => f,
        None => jacobi_svd(m)?,
    };
    let mut order: Vec<usize> = (0..s.len()).collect();
    order.sort_by(|&a, &b| s[b].total_cmp(&s[a]));
    let k = s.len();
    Ok(Svd {
        u: DMatrix::from_fn(u.nrows(), k, |i, j| u[(i, order[j])]),
        s: order.iter().map(|&j| s[j]).collect(),
        v_t: DMatrix::from_fn(k, v_t.ncols(), |i, j| v_t[(order[i], j)]),
    })
}

fn svd_is_accurate(m: &DMatrix<C64>, u: &DMatrix<C64>, s: &[f64], v_t: &DMatrix<C64>) -> bool {
    let k = s.len();
    let scale = m.norm().max(1.0);
    let mut us = u.clone();
    for (j, &sj) in s.iter().enumerate() {
        us.column_mut(j).scale_mut(sj);
    }
    let recon = (us * v_t - m).norm();
    let id = DMatrix::<C64>::identity(k, k);
    let uo = (u.adjoint() * u - &id).norm();
    let vo = (v_t * v_t.adjoint() - &id).norm();
    recon <= SVD_ACCEPT_TOL * scale && uo <= SVD_ACCEPT_TOL * k as f64 && vo <= SVD_ACCEPT_TOL * k as f64
}

/// One-sided (Hestenes) Jacobi SVD, slower but accurate on rank-deficient
/// input.
fn jacobi_svd(m: &DMatrix<C64>) -> Result<(DMatrix<C64>, Vec<f64>, DMatrix<C64>)> {
    if m.nrows() < m.ncols() {
        let (u, s, v_t) = jacobi_svd(&m.adjoint())?;
        return Ok((v_t.adjoint(), s, u.adjoint()));
    }
    let (rows, n) = m.shape();
    let mut a = m.clone();
    let mut v = DMatrix::<C64>::identity(n, n);
    let mut converged = false;
    for _sweep in 0..80 {
        let mut rotated = false;
        for p in 0..n {
            for q in p + 1..n {
                let alpha = a.column(p).norm_squared();
                let beta = a.column(q).norm_squared();
                let gamma = a.column(p).dotc(&a.column(q));
                let g = gamma.norm();
                if g <= f64::EPSILON * (alpha * beta).sqrt() || g == 0.0 {
                    continue;
                }
                rotated = true;
                let phase = gamma / g;
                let zeta = (beta - alpha) / (2.0 * g);
                let t = zeta.signum() / (zeta.abs() + (1.0 + zeta * zeta).sqrt());
                let c = 1.0 / (1.0 + t * t).sqrt();
                let sn = c * t;
                for mat in [&mut a, &mut v] {
                    for i in 0..mat.nrows() {
                        let x = mat[(i, p)];
                        let y = mat[(i, q)] * phase.conj();
                        mat[(i, p)] = x * c - y * sn;
                        mat[(i, q)] = x * sn + y * c;
                    }
                }
            }
        }
        if !rotated {
            converged = true;
            break;
        }
    }
    if !converged {
        return Err(Error::Numerical("Jacobi SVD did not converge".into()));
    }
    let s: Vec<f64> = (0..n).map(|j| a.column(j).norm()).collect();
    let smax = s.iter().cloned().fold(0.0, f64::max);
    let mut u = DMatrix::<C64>::zeros(rows, n);
    let mut filled = vec![false; n];
    for j in 0..n {
        if s[j] > smax * 1e-300 && s[j] > 0.0 {
            u.set_column(j, &(a.column(j) / C64::new(s[j], 0.0)));
            filled[j] = true;
        }
    }
    // complete the null-space columns so U stays an isometry
    let mut e = 0;
    for j in 0..n {
        if filled[j] {
            continue;
        }
        while e < rows {
            let mut cand = nalgebra::DVector::<C64>::zeros(rows);
            cand[e] = C64::new(1.0, 0.0);
            e += 1;
            for _ in 0..2 {
                for k in (0..n).filter(|&k| filled[k]) {
                    let proj = u.column(k).dotc(&cand);
                    cand -= u.column(k) * proj;
                }
            }
            let nrm = cand.norm();
            if nrm > 1e-8 {
                u.set_column(j, &(cand / C64::new(nrm, 0.0)));
                filled[j] = true;
                break;
            }
        }
    }
    Ok((u, s, v.adjoint()))
}
