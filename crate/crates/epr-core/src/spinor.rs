//! Spin-1/2 basis conventions and 2x2 unitary algebra.
//!
//! Every spatial [`Direction`] `n` gets a definite pair of spinors
//! `|n,up>`, `|n,down>` - the eigenvectors of `n.sigma` with eigenvalues
//! +1 and -1. The assignment is made once and for all by a global gauge:
//!
//! ```text
//! |n,up>   = first  column of W(n),      W(n) = Rz(phi) * Ry(theta)
//! |n,down> = second column of W(n)
//! ```
//!
//! with `Ry(theta) = [[cos t/2, -sin t/2], [sin t/2, cos t/2]]` and
//! `Rz(phi) = diag(exp(-i phi/2), exp(+i phi/2))`. Fixing the gauge this
//! way makes every change of basis an exact unitary,
//! `C(a -> b) = W(b)^dagger W(a)`, so chained rotations compose exactly
//! (each is a product of exactly two `W` factors, never an accumulation),
//! and it reproduces the textbook real rotation matrix between two
//! directions in the x-z plane:
//!
//! ```text
//! |a,up>   =  cos(t/2) |b,up> + sin(t/2) |b,down>
//! |a,down> = -sin(t/2) |b,up> + cos(t/2) |b,down>
//! ```
//!
//! for `b = z` and `a` at polar angle `t`, azimuth 0. Any other smooth
//! gauge differs only by per-direction phases, which cancel in all
//! physical quantities (branch weights, expectation values).

use crate::direction::Direction;
use num_complex::Complex64;

/// A 2x2 complex matrix in row-major order: `m[row][col]`.
pub type Mat2 = [[Complex64; 2]; 2];

/// The 2x2 identity.
pub fn identity() -> Mat2 {
    [
        [Complex64::new(1.0, 0.0), Complex64::new(0.0, 0.0)],
        [Complex64::new(0.0, 0.0), Complex64::new(1.0, 0.0)],
    ]
}

/// Matrix product `a * b`.
pub fn mat_mul(a: &Mat2, b: &Mat2) -> Mat2 {
    let mut out = [[Complex64::new(0.0, 0.0); 2]; 2];
    for (r, out_row) in out.iter_mut().enumerate() {
        for (c, out_elem) in out_row.iter_mut().enumerate() {
            *out_elem = a[r][0] * b[0][c] + a[r][1] * b[1][c];
        }
    }
    out
}

/// Conjugate transpose `m^dagger`.
pub fn dagger(m: &Mat2) -> Mat2 {
    [[m[0][0].conj(), m[1][0].conj()], [m[0][1].conj(), m[1][1].conj()]]
}

/// Matrix-vector product `m * v` on a 2-spinor.
pub fn mat_vec(m: &Mat2, v: &[Complex64; 2]) -> [Complex64; 2] {
    [m[0][0] * v[0] + m[0][1] * v[1], m[1][0] * v[0] + m[1][1] * v[1]]
}

/// The spin projection operator `n.sigma` along `n`, in the z basis:
/// `[[cos t, sin t e^{-i phi}], [sin t e^{i phi}, -cos t]]`.
pub fn pauli_along(n: &Direction) -> Mat2 {
    let (st, ct) = (n.theta().sin(), n.theta().cos());
    let phase = Complex64::from_polar(1.0, n.phi());
    [
        [Complex64::new(ct, 0.0), phase.conj() * st],
        [phase * st, Complex64::new(-ct, 0.0)],
    ]
}

/// The gauge matrix `W(n) = Rz(phi) * Ry(theta)` whose columns are
/// `|n,up>` and `|n,down>` expressed in the z basis.
pub fn basis_matrix(n: &Direction) -> Mat2 {
    let (s, c) = ((n.theta() / 2.0).sin(), (n.theta() / 2.0).cos());
    let half_phase = Complex64::from_polar(1.0, n.phi() / 2.0);
    let neg = half_phase.conj();
    [
        [neg * c, neg * -s],
        [half_phase * s, half_phase * c],
    ]
}

/// Change-of-basis matrix `C(from -> to) = W(to)^dagger * W(from)`.
///
/// Column `s` of the result expands `|from, s>` in the `to` basis:
/// `|from, s> = sum_s' C[s'][s] |to, s'>`.
pub fn change_of_basis(from: &Direction, to: &Direction) -> Mat2 {
    mat_mul(&dagger(&basis_matrix(to)), &basis_matrix(from))
}

/// The operator `axis.sigma` expressed in the `basis` eigenbasis:
/// `W(basis)^dagger * (axis.sigma) * W(basis)`.
pub fn operator_in_basis(axis: &Direction, basis: &Direction) -> Mat2 {
    let w = basis_matrix(basis);
    mat_mul(&dagger(&w), &mat_mul(&pauli_along(axis), &w))
}

/// Largest entrywise absolute difference between two matrices.
pub fn max_abs_diff(a: &Mat2, b: &Mat2) -> f64 {
    let mut worst = 0.0f64;
    for r in 0..2 {
        for c in 0..2 {
            worst = worst.max((a[r][c] - b[r][c]).norm());
        }
    }
    worst
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn rand_dir(state: &mut u64) -> Direction {
        let next = |s: &mut u64| {
            *s = s.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            (*s >> 11) as f64 / (1u64 << 53) as f64
        };
        // acos sampling keeps the distribution uniform on the sphere.
        let theta = (1.0 - 2.0 * next(state)).clamp(-1.0, 1.0).acos();
        let phi = 2.0 * PI * next(state);
        Direction::new(theta, phi).unwrap()
    }

    fn assert_unitary(m: &Mat2) {
        let prod = mat_mul(&dagger(m), m);
        assert!(max_abs_diff(&prod, &identity()) < 1e-14);
    }

    #[test]
    fn basis_matrix_is_unitary() {
        let mut s = 7u64;
        for _ in 0..200 {
            assert_unitary(&basis_matrix(&rand_dir(&mut s)));
        }
    }

    #[test]
    fn columns_are_pauli_eigenvectors() {
        let mut s = 99u64;
        for _ in 0..200 {
            let n = rand_dir(&mut s);
            let sigma = pauli_along(&n);
            let w = basis_matrix(&n);
            let up = [w[0][0], w[1][0]];
            let down = [w[0][1], w[1][1]];
            let su = mat_vec(&sigma, &up);
            let sd = mat_vec(&sigma, &down);
            for i in 0..2 {
                assert!((su[i] - up[i]).norm() < 1e-14, "up not a +1 eigenvector");
                assert!((sd[i] + down[i]).norm() < 1e-14, "down not a -1 eigenvector");
            }
        }
    }

    #[test]
    fn pauli_along_z_and_x() {
        let z = pauli_along(&Direction::Z);
        assert!((z[0][0].re - 1.0).abs() < 1e-15 && (z[1][1].re + 1.0).abs() < 1e-15);
        assert!(z[0][1].norm() < 1e-15 && z[1][0].norm() < 1e-15);

        let x = pauli_along(&Direction::new(PI / 2.0, 0.0).unwrap());
        assert!(x[0][0].norm() < 1e-15 && x[1][1].norm() < 1e-15);
        assert!((x[0][1].re - 1.0).abs() < 1e-15 && (x[1][0].re - 1.0).abs() < 1e-15);
    }

    #[test]
    fn change_of_basis_identity_when_axes_match() {
        let mut s = 5u64;
        for _ in 0..50 {
            let n = rand_dir(&mut s);
            assert!(max_abs_diff(&change_of_basis(&n, &n), &identity()) < 1e-14);
        }
    }

    /// In the x-z plane the change of basis to z is the real rotation
    /// matrix `[[cos t/2, -sin t/2], [sin t/2, cos t/2]]`: the up spinor
    /// along the tilted axis decomposes with two plus signs, the down
    /// spinor picks up the single minus sign on its z-up component.
    #[test]
    fn tilted_axis_to_z_is_real_rotation() {
        for k in 1..=35 {
            let t = PI * k as f64 / 36.0;
            let a = Direction::new(t, 0.0).unwrap();
            let c = change_of_basis(&a, &Direction::Z);
            let (s2, c2) = ((t / 2.0).sin(), (t / 2.0).cos());
            let expect = [
                [Complex64::new(c2, 0.0), Complex64::new(-s2, 0.0)],
                [Complex64::new(s2, 0.0), Complex64::new(c2, 0.0)],
            ];
            assert!(max_abs_diff(&c, &expect) < 1e-14, "theta = {t}");
        }
    }

    /// Chained basis changes compose exactly: going a - > b -> c equals
    /// going a -> c directly, because both sides are the same product
    /// W(c)^dagger W(a) (the W(b) factors cancel by unitarity).
    #[test]
    fn chained_changes_compose() {
        let mut s = 1234u64;
        for _ in 0..100 {
            let a = rand_dir(&mut s);
            let b = rand_dir(&mut s);
            let c = rand_dir(&mut s);
            let two_step = mat_mul(&change_of_basis(&b, &c), &change_of_basis(&a, &b));
            let direct = change_of_basis(&a, &c);
            assert!(max_abs_diff(&two_step, &direct) < 1e-13);
        }
    }

    #[test]
    fn operator_in_own_basis_is_diagonal() {
        let mut s = 31u64;
        for _ in 0..100 {
            let n = rand_dir(&mut s);
            let op = operator_in_basis(&n, &n);
            assert!((op[0][0].re - 1.0).abs() < 1e-13);
            assert!((op[1][1].re + 1.0).abs() < 1e-13);
            assert!(op[0][1].norm() < 1e-13 && op[1][0].norm() < 1e-13);
        }
    }

    #[test]
    fn operator_in_basis_has_pauli_spectrum() {
        // Trace 0 and determinant -1 for any axis/basis pair.
        let mut s = 77u64;
        for _ in 0..100 {
            let axis = rand_dir(&mut s);
            let basis = rand_dir(&mut s);
            let op = operator_in_basis(&axis, &basis);
            let trace = op[0][0] + op[1][1];
            let det = op[0][0] * op[1][1] - op[0][1] * op[1][0];
            assert!(trace.norm() < 1e-13);
            assert!((det + Complex64::new(1.0, 0.0)).norm() < 1e-13);
            // Hermitian as well.
            assert!(max_abs_diff(&op, &dagger(&op)) < 1e-13);
        }
    }
}
