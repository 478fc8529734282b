//! Brute-force joint probabilities from explicit two-spin states.
//!
//! The pair state is assembled from single-spin eigenvectors along the
//! preferred axis, turned into a 4x4 density matrix, and contracted with
//! `1/2 (1 + rA a.sigma) (x) 1/2 (1 + rB b.sigma)`. No closed-form
//! correlation enters.

use num_complex::Complex64;

use super::{MeasurementAxis, PairSpinState, OUTCOME_PAIRS};

type C = Complex64;
type Mat2 = [[C; 2]; 2];
type Vec4 = [C; 4];
type Mat4 = [[C; 4]; 4];

const ZERO: C = C::new(0.0, 0.0);
const ONE: C = C::new(1.0, 0.0);

fn pauli_dot(n: &MeasurementAxis) -> Mat2 {
    // n.sigma = [[z, x - iy], [x + iy, -z]]
    [
        [C::new(n.z(), 0.0), C::new(n.x(), -n.y())],
        [C::new(n.x(), n.y()), C::new(-n.z(), 0.0)],
    ]
}

fn projector(n: &MeasurementAxis, sign: f64) -> Mat2 {
    let s = pauli_dot(n);
    let mut p = [[ZERO; 2]; 2];
    for i in 0..2 {
        for j in 0..2 {
            let id = if i == j { ONE } else { ZERO };
            p[i][j] = (id + s[i][j] * sign) * 0.5;
        }
    }
    p
}

fn kron(a: &Mat2, b: &Mat2) -> Mat4 {
    let mut k = [[ZERO; 4]; 4];
    for i in 0..2 {
        for j in 0..2 {
            for r in 0..2 {
                for c in 0..2 {
                    k[2 * i + r][2 * j + c] = a[i][j] * b[r][c];
                }
            }
        }
    }
    k
}

fn product_state(u: &[C; 2], v: &[C; 2]) -> Vec4 {
    [u[0] * v[0], u[0] * v[1], u[1] * v[0], u[1] * v[1]]
}

/// Spin-up and spin-down eigenvectors of `n.sigma`, related to the z basis
/// by an SU(2) rotation so that coupled states keep their standard phases.
fn spinors(n: &MeasurementAxis) -> ([C; 2], [C; 2]) {
    let polar = n.z().clamp(-1.0, 1.0).acos();
    let azimuth = n.y().atan2(n.x());
    let (c, s) = ((polar / 2.0).cos(), (polar / 2.0).sin());
    let phase = C::from_polar(1.0, azimuth);
    let up = [C::new(c, 0.0), phase * s];
    let down = [-phase.conj() * s, C::new(c, 0.0)];
    (up, down)
}

/// Basis vectors `[singlet, |1,-1>, |1,0>, |1,+1>]` quantized along `n`.
fn coupled_basis(n: &MeasurementAxis) -> [Vec4; 4] {
    let (up, down) = spinors(n);
    let ud = product_state(&up, &down);
    let du = product_state(&down, &up);
    let h = std::f64::consts::FRAC_1_SQRT_2;
    let mut singlet = [ZERO; 4];
    let mut t0 = [ZERO; 4];
    for i in 0..4 {
        singlet[i] = (ud[i] - du[i]) * h;
        t0[i] = (ud[i] + du[i]) * h;
    }
    [
        singlet,
        product_state(&down, &down),
        t0,
        product_state(&up, &up),
    ]
}

fn density_matrix(state: &PairSpinState) -> Mat4 {
    let basis = coupled_basis(&state.preferred_axis);
    let mut rho = [[ZERO; 4]; 4];
    for (w, psi) in state.weights().iter().zip(basis.iter()) {
        if *w == 0.0 {
            continue;
        }
        for i in 0..4 {
            for j in 0..4 {
                rho[i][j] += psi[i] * psi[j].conj() * *w;
            }
        }
    }
    rho
}

fn trace_product(a: &Mat4, b: &Mat4) -> C {
    let mut t = ZERO;
    for i in 0..4 {
        for k in 0..4 {
            t += a[i][k] * b[k][i];
        }
    }
    t
}

/// Joint outcome probabilities, ordered as [`OUTCOME_PAIRS`].
pub fn density_matrix_oracle(
    state: &PairSpinState,
    a: &MeasurementAxis,
    b: &MeasurementAxis,
) -> [f64; 4] {
    let rho = density_matrix(state);
    OUTCOME_PAIRS.map(|(ra, rb)| {
        let op = kron(&projector(a, ra.sign()), &projector(b, rb.sign()));
        trace_product(&rho, &op).re
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spin_model::{SpinKind, TripletM};

    #[test]
    fn density_matrix_has_unit_trace_and_is_hermitian() {
        let n = MeasurementAxis::normalized(0.3, -0.5, 0.8).unwrap();
        let w = crate::spin_model::MixtureWeights::new([0.1, 0.2, 0.3, 0.4]).unwrap();
        let rho = density_matrix(&PairSpinState::mixture(w).with_preferred_axis(n));
        let tr: C = (0..4).map(|i| rho[i][i]).sum();
        assert!((tr - ONE).norm() < 1e-14);
        for i in 0..4 {
            for j in 0..4 {
                assert!((rho[i][j] - rho[j][i].conj()).norm() < 1e-14);
            }
        }
    }

    #[test]
    fn coupled_basis_is_orthonormal() {
        let n = MeasurementAxis::normalized(-0.2, 0.9, -0.4).unwrap();
        let basis = coupled_basis(&n);
        for i in 0..4 {
            for j in 0..4 {
                let ip: C = (0..4).map(|k| basis[i][k].conj() * basis[j][k]).sum();
                let expect = if i == j { 1.0 } else { 0.0 };
                assert!((ip - C::new(expect, 0.0)).norm() < 1e-14);
            }
        }
    }

    #[test]
    fn unpolarized_mixture_has_no_single_arm_polarization() {
        let w = crate::spin_model::MixtureWeights::new([0.25; 4]).unwrap();
        let s = PairSpinState::from_kind(SpinKind::Mixture(w));
        let a = MeasurementAxis::normalized(0.4, 0.1, 0.7).unwrap();
        let p = density_matrix_oracle(&s, &a, &a);
        // [++, +-, -+, --]
        assert!((p[0] + p[1] - 0.5).abs() < 1e-14);
        assert!((p[0] + p[2] - 0.5).abs() < 1e-14);
    }

    #[test]
    fn m_plus_along_axis_is_certain() {
        let n = MeasurementAxis::BEAM;
        let p = density_matrix_oracle(&PairSpinState::triplet(TripletM::Plus), &n, &n);
        assert!((p[0] - 1.0).abs() < 1e-14);
    }
}
