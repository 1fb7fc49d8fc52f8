//! Dense complex-matrix realization and the small matrix-function toolbox
//! used by the propagator and the test oracles.

use nalgebra::DMatrix;
use num_complex::Complex;

use super::op::OperatorSum;
use super::word::Letter;
use super::AlgebraError;
use crate::scalar::{r, Real, C};

/// Default cap on the spin count for densification (2^n x 2^n matrices).
pub const DEFAULT_DENSE_CAP: usize = 12;

fn letter_matrix<T: Real>(l: Letter) -> DMatrix<C<T>> {
    let half = r::<T>(0.5);
    let zero = C::<T>::new(T::zero(), T::zero());
    match l {
        Letter::E => DMatrix::identity(2, 2),
        Letter::X => DMatrix::from_row_slice(
            2,
            2,
            &[zero, Complex::new(half, T::zero()), Complex::new(half, T::zero()), zero],
        ),
        Letter::Y => DMatrix::from_row_slice(
            2,
            2,
            &[zero, Complex::new(T::zero(), -half), Complex::new(T::zero(), half), zero],
        ),
        Letter::Z => DMatrix::from_row_slice(
            2,
            2,
            &[Complex::new(half, T::zero()), zero, zero, Complex::new(-half, T::zero())],
        ),
    }
}

/// Kronecker-product realization of an operator sum. Site 0 is the leftmost
/// (most significant) factor. Add/mul commute with this map.
pub fn to_dense<T: Real>(op: &OperatorSum<T>) -> Result<DMatrix<C<T>>, AlgebraError> {
    to_dense_capped(op, DEFAULT_DENSE_CAP)
}

pub fn to_dense_capped<T: Real>(
    op: &OperatorSum<T>,
    cap: usize,
) -> Result<DMatrix<C<T>>, AlgebraError> {
    let n = op.n();
    if n > cap {
        return Err(AlgebraError::DenseCapExceeded { n, cap });
    }
    let dim = 1usize << n;
    let mut out = DMatrix::<C<T>>::zeros(dim, dim);
    for (word, coeff) in op.terms() {
        let mut m = DMatrix::<C<T>>::identity(1, 1);
        for &l in word.letters() {
            m = m.kronecker(&letter_matrix::<T>(l));
        }
        out += m * *coeff;
    }
    Ok(out)
}

/// `exp(-i h t)` by scaling-and-squaring with a Taylor kernel. Intended for
/// Hermitian `h`; accurate to ~1e-14 for the matrix sizes used here.
pub fn unitary_exp<T: Real>(h: &DMatrix<C<T>>, t: T) -> DMatrix<C<T>> {
    let dim = h.nrows();
    let mut a = h.map(|z| Complex::new(z.im * t, -z.re * t)); // -i h t
    let norm = frob(&a);
    let theta0 = r::<T>(0.25);
    let mut squarings = 0u32;
    if norm > theta0 {
        let mut s = norm / theta0;
        while s > T::one() {
            s /= r::<T>(2.0);
            squarings += 1;
        }
        let scale = r::<T>(0.5).powi(squarings as i32);
        a.iter_mut().for_each(|z| *z *= Complex::new(scale, T::zero()));
    }
    let mut out = DMatrix::<C<T>>::identity(dim, dim);
    let mut term = DMatrix::<C<T>>::identity(dim, dim);
    let tol = T::default_epsilon() * r::<T>(0.01);
    for m in 1..=40u32 {
        term = &term * &a;
        let inv_m = T::one() / r::<T>(f64::from(m));
        term.iter_mut().for_each(|z| *z *= Complex::new(inv_m, T::zero()));
        out += &term;
        if frob(&term) < tol {
            break;
        }
    }
    for _ in 0..squarings {
        out = &out * &out;
    }
    out
}

/// Principal matrix logarithm of a near-identity matrix via the Mercator
/// series; requires `||w - 1|| < 0.5`.
pub fn mercator_log<T: Real>(w: &DMatrix<C<T>>) -> Result<DMatrix<C<T>>, AlgebraError> {
    let dim = w.nrows();
    let e = w - DMatrix::<C<T>>::identity(dim, dim);
    let nrm = frob(&e);
    if nrm >= r(0.5) {
        return Err(AlgebraError::LogOutOfRange);
    }
    let mut out = DMatrix::<C<T>>::zeros(dim, dim);
    let mut p = DMatrix::<C<T>>::identity(dim, dim);
    let mut sign = T::one();
    for m in 1..=200u32 {
        p = &p * &e;
        let f = sign / r::<T>(f64::from(m));
        out += p.map(|z| z * Complex::new(f, T::zero()));
        if frob(&p) / r(f64::from(m)) < T::default_epsilon() * r(0.001) {
            break;
        }
        sign = -sign;
    }
    Ok(out)
}

pub fn frob<T: Real>(m: &DMatrix<C<T>>) -> T {
    let mut acc = T::zero();
    for z in m.iter() {
        acc += z.norm_sqr();
    }
    acc.sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::algebra::word::SpinWord;
    use crate::scalar::c;

    type Op = OperatorSum<f64>;

    #[test]
    fn identity_word_scales() {
        let op = Op::identity(2, c(0.7, 0.0));
        let m = to_dense(&op).unwrap();
        assert_eq!(m[(0, 0)], c::<f64>(0.7, 0.0));
        assert_eq!(m[(3, 3)], c::<f64>(0.7, 0.0));
        assert_eq!(m[(0, 1)], c::<f64>(0.0, 0.0));
    }

    #[test]
    fn single_spin_z() {
        let op = Op::single(1, 0, Letter::Z, c(1.0, 0.0)).unwrap();
        let m = to_dense(&op).unwrap();
        assert_eq!(m[(0, 0)], c::<f64>(0.5, 0.0));
        assert_eq!(m[(1, 1)], c::<f64>(-0.5, 0.0));
    }

    #[test]
    fn two_spin_secular_coupling_matrix() {
        // D=1: 2 Iz Iz - Ix Ix - Iy Iy: diagonal (1/2,-1/2,-1/2,1/2),
        // flip-flop entries -1/2.
        let mut op = Op::zero(2);
        op.add_term("ZZ".parse::<SpinWord>().unwrap(), c(2.0, 0.0));
        op.add_term("XX".parse::<SpinWord>().unwrap(), c(-1.0, 0.0));
        op.add_term("YY".parse::<SpinWord>().unwrap(), c(-1.0, 0.0));
        let m = to_dense(&op).unwrap();
        for (i, want) in [(0, 0.5), (1, -0.5), (2, -0.5), (3, 0.5)] {
            assert!((m[(i, i)].re - want).abs() < 1e-15);
        }
        assert!((m[(1, 2)].re + 0.5).abs() < 1e-15);
        assert!((m[(2, 1)].re + 0.5).abs() < 1e-15);
        assert!(m[(0, 3)].norm() < 1e-15);
    }

    #[test]
    fn dense_norm_matches_word_norm() {
        let mut op = Op::zero(2);
        op.add_term("ZZ".parse::<SpinWord>().unwrap(), c(2.0, 0.0));
        op.add_term("XX".parse::<SpinWord>().unwrap(), c(-1.0, 0.0));
        op.add_term("YY".parse::<SpinWord>().unwrap(), c(-1.0, 0.0));
        let m = to_dense(&op).unwrap();
        assert!((frob(&m) - op.norm()).abs() < 1e-13);
    }

    #[test]
    fn cap_enforced() {
        let op = Op::zero(13);
        assert!(matches!(to_dense(&op), Err(AlgebraError::DenseCapExceeded { .. })));
    }

    #[test]
    fn exp_of_pauli_rotation() {
        // exp(-i theta Ix) has cos(theta/2) on the diagonal
        let op = Op::single(1, 0, Letter::X, c(1.0, 0.0)).unwrap();
        let m = to_dense(&op).unwrap();
        let th = 0.7343;
        let u = unitary_exp(&m, th);
        assert!((u[(0, 0)].re - (th / 2.0).cos()).abs() < 1e-14);
        assert!((u[(0, 1)].im + (th / 2.0).sin()).abs() < 1e-14);
        // unitarity
        let err = frob(&(&u * u.adjoint() - DMatrix::identity(2, 2)));
        assert!(err < 1e-14);
    }

    #[test]
    fn exp_large_phase_unitary() {
        let op = Op::single(1, 0, Letter::Z, c(1.0, 0.0)).unwrap();
        let m = to_dense(&op).unwrap();
        let u = unitary_exp(&m, 417.0);
        let err = frob(&(&u * u.adjoint() - DMatrix::identity(2, 2)));
        assert!(err < 1e-12);
        // phases exp(-i 417/2), exp(+i 417/2)
        assert!((u[(0, 0)].re - (417.0f64 / 2.0).cos()).abs() < 1e-11);
    }

    #[test]
    fn log_inverts_exp() {
        let op = Op::single(1, 0, Letter::Y, c(1.0, 0.0)).unwrap();
        let m = to_dense(&op).unwrap();
        let t = 0.2;
        let u = unitary_exp(&m, t);
        let l = mercator_log(&u).unwrap();
        // l should equal -i m t
        let want = m.map(|z| num_complex::Complex::new(z.im * t, -z.re * t));
        assert!(frob(&(l - want)) < 1e-14);
    }
}
