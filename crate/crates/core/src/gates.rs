//! Fixed-size gate matrices.
//!
//! Two-qubit matrices act on the ordered pair `(q1, q2)` with basis index
//! `2 * bit(q1) + bit(q2)`. All rotations follow `exp(-i * angle / 2 * G)`.

use num_complex::Complex64 as C64;

pub type Mat2 = [[C64; 2]; 2];
pub type Mat4 = [[C64; 4]; 4];

const O: C64 = C64::new(0.0, 0.0);
const I1: C64 = C64::new(1.0, 0.0);
const IM: C64 = C64::new(0.0, 1.0);

pub fn identity2() -> Mat2 {
    [[I1, O], [O, I1]]
}

pub fn identity4() -> Mat4 {
    let mut m = [[O; 4]; 4];
    for (k, row) in m.iter_mut().enumerate() {
        row[k] = I1;
    }
    m
}

pub fn hadamard() -> Mat2 {
    let s = C64::new(std::f64::consts::FRAC_1_SQRT_2, 0.0);
    [[s, s], [s, -s]]
}

pub fn pauli_x() -> Mat2 {
    [[O, I1], [I1, O]]
}

pub fn pauli_y() -> Mat2 {
    [[O, -IM], [IM, O]]
}

pub fn pauli_z() -> Mat2 {
    [[I1, O], [O, -I1]]
}

pub fn rx(theta: f64) -> Mat2 {
    let (s, c) = (theta / 2.0).sin_cos();
    [[C64::new(c, 0.0), C64::new(0.0, -s)], [C64::new(0.0, -s), C64::new(c, 0.0)]]
}

pub fn ry(theta: f64) -> Mat2 {
    let (s, c) = (theta / 2.0).sin_cos();
    [[C64::new(c, 0.0), C64::new(-s, 0.0)], [C64::new(s, 0.0), C64::new(c, 0.0)]]
}

pub fn rz(theta: f64) -> Mat2 {
    let minus = C64::from_polar(1.0, -theta / 2.0);
    let plus = C64::from_polar(1.0, theta / 2.0);
    [[minus, O], [O, plus]]
}

/// `exp(-i theta/2 Z⊗Z)`.
pub fn rzz(theta: f64) -> Mat4 {
    let minus = C64::from_polar(1.0, -theta / 2.0);
    let plus = C64::from_polar(1.0, theta / 2.0);
    diag4([minus, plus, plus, minus])
}

pub fn cnot() -> Mat4 {
    let mut m = [[O; 4]; 4];
    m[0][0] = I1;
    m[1][1] = I1;
    m[2][3] = I1;
    m[3][2] = I1;
    m
}

pub fn swap() -> Mat4 {
    let mut m = [[O; 4]; 4];
    m[0][0] = I1;
    m[1][2] = I1;
    m[2][1] = I1;
    m[3][3] = I1;
    m
}

pub fn zz() -> Mat4 {
    diag4([I1, -I1, -I1, I1])
}

pub fn diag4(d: [C64; 4]) -> Mat4 {
    let mut m = [[O; 4]; 4];
    for k in 0..4 {
        m[k][k] = d[k];
    }
    m
}

pub fn kron(a: &Mat2, b: &Mat2) -> Mat4 {
    let mut m = [[O; 4]; 4];
    for i in 0..2 {
        for j in 0..2 {
            for k in 0..2 {
                for l in 0..2 {
                    m[2 * i + k][2 * j + l] = a[i][j] * b[k][l];
                }
            }
        }
    }
    m
}

pub fn adjoint2(m: &Mat2) -> Mat2 {
    let mut out = [[O; 2]; 2];
    for i in 0..2 {
        for j in 0..2 {
            out[i][j] = m[j][i].conj();
        }
    }
    out
}

pub fn adjoint4(m: &Mat4) -> Mat4 {
    let mut out = [[O; 4]; 4];
    for i in 0..4 {
        for j in 0..4 {
            out[i][j] = m[j][i].conj();
        }
    }
    out
}

pub fn mul4(a: &Mat4, b: &Mat4) -> Mat4 {
    let mut out = [[O; 4]; 4];
    for i in 0..4 {
        for j in 0..4 {
            out[i][j] = (0..4).map(|k| a[i][k] * b[k][j]).sum();
        }
    }
    out
}

/// Exchanges the roles of the two qubits: `SWAP · m · SWAP`.
pub fn flip_qubits(m: &Mat4) -> Mat4 {
    let p = [0usize, 2, 1, 3];
    let mut out = [[O; 4]; 4];
    for i in 0..4 {
        for j in 0..4 {
            out[p[i]][p[j]] = m[i][j];
        }
    }
    out
}

/// Max-entry residual of `M†M − I`.
pub fn unitarity_residual<const D: usize>(m: &[[C64; D]; D]) -> f64 {
    let mut worst = 0.0f64;
    for i in 0..D {
        for j in 0..D {
            let v: C64 = (0..D).map(|k| m[k][i].conj() * m[k][j]).sum();
            let target = if i == j { I1 } else { O };
            worst = worst.max((v - target).norm());
        }
    }
    worst
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rotations_are_unitary() {
        for &t in &[0.0, 0.3, -1.7, 4.0] {
            assert!(unitarity_residual(&rx(t)) < 1e-15);
            assert!(unitarity_residual(&ry(t)) < 1e-15);
            assert!(unitarity_residual(&rz(t)) < 1e-15);
            assert!(unitarity_residual(&rzz(t)) < 1e-15);
        }
        assert!(unitarity_residual(&cnot()) == 0.0);
        assert!(unitarity_residual(&hadamard()) < 1e-15);
    }

    #[test]
    fn rx_at_pi_is_minus_i_x() {
        let m = rx(std::f64::consts::PI);
        assert!((m[0][1] - C64::new(0.0, -1.0)).norm() < 1e-15);
        assert!(m[0][0].norm() < 1e-15);
    }

    #[test]
    fn flip_of_cnot_moves_control() {
        let f = flip_qubits(&cnot());
        // control on the second qubit: |01> -> |11>
        assert_eq!(f[3][1], I1);
        assert_eq!(f[0][0], I1);
        assert_eq!(f[2][2], I1);
    }
}
