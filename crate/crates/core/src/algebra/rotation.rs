//! Site rotations and their action on operator coefficient vectors.
//!
//! A rotation `exp(-i theta n.I)` applied to the system conjugates operators
//! as `A -> U^dag A U`. On the coefficient 3-vector of single-site operators
//! this acts as the orthogonal matrix `R_n(-theta)`. Quarter-turn rotations
//! about coordinate axes take an exact signed-permutation path so that
//! toggling-frame identities hold without floating-point error.

use serde::{Deserialize, Serialize};

use super::AlgebraError;
use crate::scalar::{r, Real};

/// Coordinate axis label.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Axis {
    X,
    Y,
    Z,
}

impl Axis {
    pub fn unit<T: Real>(self) -> [T; 3] {
        let mut v = [T::zero(); 3];
        v[self.index()] = T::one();
        v
    }

    pub fn index(self) -> usize {
        match self {
            Axis::X => 0,
            Axis::Y => 1,
            Axis::Z => 2,
        }
    }

    pub fn as_char(self) -> char {
        match self {
            Axis::X => 'X',
            Axis::Y => 'Y',
            Axis::Z => 'Z',
        }
    }
}

/// Which spins a rotation addresses.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Site {
    /// Broadband: every spin.
    All,
    /// Selective: a single spin.
    One(usize),
}

/// A delta rotation `exp(-i theta n.I)` on one site or on all sites.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SiteRotation<T: Real> {
    pub site: Site,
    pub axis: [T; 3],
    pub angle: T,
}

impl<T: Real> SiteRotation<T> {
    /// Rotation about an arbitrary unit axis. The axis must be normalized to
    /// within 1e-12.
    pub fn about(site: Site, axis: [T; 3], angle: T) -> Result<SiteRotation<T>, AlgebraError> {
        let norm2 = axis[0] * axis[0] + axis[1] * axis[1] + axis[2] * axis[2];
        if (norm2 - T::one()).abs() > r(1e-12) {
            return Err(AlgebraError::AxisNotUnit);
        }
        Ok(SiteRotation { site, axis, angle })
    }

    /// Rotation about a coordinate axis (always a valid unit axis).
    pub fn about_coord(site: Site, axis: Axis, angle: T) -> SiteRotation<T> {
        SiteRotation { site, axis: axis.unit(), angle }
    }

    /// The inverse rotation (same axis, opposite angle).
    pub fn inverse(&self) -> SiteRotation<T> {
        SiteRotation { site: self.site, axis: self.axis, angle: -self.angle }
    }

    pub fn is_broadband(&self) -> bool {
        matches!(self.site, Site::All)
    }

    /// Coefficient-vector map for `A -> U^dag A U`: the matrix `R_n(-theta)`.
    pub fn conj_matrix(&self) -> Mat3<T> {
        Mat3::rotation(self.axis, -self.angle)
    }

    /// True when two rotations have the same conjugation action on operators
    /// (equal up to a global phase of the unitary), within `tol`.
    pub fn same_action(&self, other: &SiteRotation<T>, tol: T) -> bool {
        if self.site != other.site {
            return false;
        }
        self.conj_matrix().approx_eq(&other.conj_matrix(), tol)
    }
}

/// 3x3 coefficient-rotation matrix with an exactness marker. Entries of exact
/// matrices are drawn from {-1, 0, +1} and compose without rounding.
#[derive(Clone, Debug, PartialEq)]
pub struct Mat3<T: Real> {
    pub m: [[T; 3]; 3],
    pub exact: bool,
}

impl<T: Real> Mat3<T> {
    pub fn identity() -> Mat3<T> {
        let mut m = [[T::zero(); 3]; 3];
        for (i, row) in m.iter_mut().enumerate() {
            row[i] = T::one();
        }
        Mat3 { m, exact: true }
    }

    /// `R_n(theta)` (right-handed rotation of vectors about `n` by `theta`).
    /// Detects exact quarter-turn coordinate rotations and builds them from
    /// integer arithmetic.
    pub fn rotation(axis: [T; 3], theta: T) -> Mat3<T> {
        if let Some(m) = Self::exact_quarter_turn(axis, theta) {
            return m;
        }
        let (s, c) = (theta.sin(), theta.cos());
        let (x, y, z) = (axis[0], axis[1], axis[2]);
        let omc = T::one() - c;
        let m = [
            [c + x * x * omc, x * y * omc - z * s, x * z * omc + y * s],
            [y * x * omc + z * s, c + y * y * omc, y * z * omc - x * s],
            [z * x * omc - y * s, z * y * omc + x * s, c + z * z * omc],
        ];
        Mat3 { m, exact: false }
    }

    /// Exact path: axis is exactly a signed coordinate unit vector and the
    /// angle is exactly an integer multiple of pi/2 (as produced by the
    /// sequence builders, which multiply `frac_pi_2` by small integers).
    fn exact_quarter_turn(axis: [T; 3], theta: T) -> Option<Mat3<T>> {
        let mut coord: Option<(usize, i8)> = None;
        for (i, &a) in axis.iter().enumerate() {
            if a == T::one() || a == -T::one() {
                if coord.is_some() {
                    return None;
                }
                coord = Some((i, if a == T::one() { 1 } else { -1 }));
            } else if a != T::zero() {
                return None;
            }
        }
        let (ax, sign) = coord?;
        let quarter = T::frac_pi_2();
        let mut k: Option<i32> = None;
        for q in -8..=8i32 {
            if theta == quarter * r(f64::from(q)) {
                k = Some(q);
                break;
            }
        }
        let k = k?;
        // quarter turns of vectors about +axis, repeated (k*sign mod 4) times
        let steps = (i32::from(sign) * k).rem_euclid(4);
        let mut m = [[0i8; 3]; 3];
        for (i, row) in m.iter_mut().enumerate() {
            row[i] = 1;
        }
        let gen = Self::quarter_generator(ax);
        for _ in 0..steps {
            m = Self::imul(gen, m);
        }
        let mut out = [[T::zero(); 3]; 3];
        for i in 0..3 {
            for j in 0..3 {
                out[i][j] = r(f64::from(m[i][j]));
            }
        }
        Some(Mat3 { m: out, exact: true })
    }

    /// Integer matrix of the +pi/2 right-handed rotation about coordinate `ax`.
    fn quarter_generator(ax: usize) -> [[i8; 3]; 3] {
        match ax {
            0 => [[1, 0, 0], [0, 0, -1], [0, 1, 0]],
            1 => [[0, 0, 1], [0, 1, 0], [-1, 0, 0]],
            2 => [[0, -1, 0], [1, 0, 0], [0, 0, 1]],
            _ => unreachable!(),
        }
    }

    fn imul(a: [[i8; 3]; 3], b: [[i8; 3]; 3]) -> [[i8; 3]; 3] {
        let mut out = [[0i8; 3]; 3];
        for i in 0..3 {
            for j in 0..3 {
                let mut s = 0i8;
                for (k, bk) in b.iter().enumerate() {
                    s += a[i][k] * bk[j];
                }
                out[i][j] = s;
            }
        }
        out
    }

    pub fn mul(&self, other: &Mat3<T>) -> Mat3<T> {
        let mut out = [[T::zero(); 3]; 3];
        for i in 0..3 {
            for j in 0..3 {
                let mut s = T::zero();
                for (k, brow) in other.m.iter().enumerate() {
                    s += self.m[i][k] * brow[j];
                }
                out[i][j] = s;
            }
        }
        Mat3 { m: out, exact: self.exact && other.exact }
    }

    pub fn apply(&self, v: [T; 3]) -> [T; 3] {
        let mut out = [T::zero(); 3];
        for (i, row) in self.m.iter().enumerate() {
            out[i] = row[0] * v[0] + row[1] * v[1] + row[2] * v[2];
        }
        out
    }

    pub fn transpose(&self) -> Mat3<T> {
        let mut out = [[T::zero(); 3]; 3];
        for i in 0..3 {
            for j in 0..3 {
                out[i][j] = self.m[j][i];
            }
        }
        Mat3 { m: out, exact: self.exact }
    }

    pub fn is_identity(&self, tol: T) -> bool {
        for i in 0..3 {
            for j in 0..3 {
                let want = if i == j { T::one() } else { T::zero() };
                if (self.m[i][j] - want).abs() > tol {
                    return false;
                }
            }
        }
        true
    }

    pub fn approx_eq(&self, other: &Mat3<T>, tol: T) -> bool {
        for i in 0..3 {
            for j in 0..3 {
                if (self.m[i][j] - other.m[i][j]).abs() > tol {
                    return false;
                }
            }
        }
        true
    }

    /// Column `j` of the matrix: image of the j-th basis vector.
    pub fn column(&self, j: usize) -> [T; 3] {
        [self.m[0][j], self.m[1][j], self.m[2][j]]
    }

    /// If the matrix is a signed permutation, the single nonzero (row, sign)
    /// of column `j`.
    pub fn signed_permutation_column(&self, j: usize) -> Option<(usize, T)> {
        let mut hit = None;
        for i in 0..3 {
            let v = self.m[i][j];
            if v == T::one() || v == -T::one() {
                if hit.is_some() {
                    return None;
                }
                hit = Some((i, v));
            } else if v != T::zero() {
                return None;
            }
        }
        hit
    }
}

/// Accumulated conjugation frame: one coefficient matrix per site.
#[derive(Clone, Debug)]
pub struct FrameRotation<T: Real> {
    sites: Vec<Mat3<T>>,
}

impl<T: Real> FrameRotation<T> {
    pub fn identity(n: usize) -> FrameRotation<T> {
        FrameRotation { sites: vec![Mat3::identity(); n] }
    }

    pub fn n(&self) -> usize {
        self.sites.len()
    }

    pub fn site(&self, k: usize) -> &Mat3<T> {
        &self.sites[k]
    }

    /// Compose a new delta rotation into the frame. Conjugation by the
    /// accumulated pulse product `U = P_m ... P_1` maps coefficient vectors
    /// through `M(P_1) ... M(P_m)`, so later pulses multiply on the right.
    pub fn push(&mut self, rot: &SiteRotation<T>) -> Result<(), AlgebraError> {
        let m = rot.conj_matrix();
        match rot.site {
            Site::All => {
                for s in &mut self.sites {
                    *s = s.mul(&m);
                }
            }
            Site::One(k) => {
                if k >= self.sites.len() {
                    return Err(AlgebraError::SiteOutOfRange { site: k, n: self.sites.len() });
                }
                self.sites[k] = self.sites[k].mul(&m);
            }
        }
        Ok(())
    }

    pub fn is_identity(&self, tol: T) -> bool {
        self.sites.iter().all(|m| m.is_identity(tol))
    }

    pub fn is_exact(&self) -> bool {
        self.sites.iter().all(|m| m.exact)
    }
}
