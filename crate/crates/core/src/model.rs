//! Physical model: rotating-frame Zeeman offsets, secular dipolar coupling,
//! and selective RF drives, built from a declarative system description.
//!
//! All energies are angular frequencies (rad/s) with hbar = 1.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::algebra::{AlgebraError, Letter, OperatorSum, SpinWord};
use crate::scalar::{r, Real};

/// Reduced Planck constant in J*s; used only to convert the geometric dipolar
/// constant into rad/s (one power of hbar is absorbed by the hbar = 1
/// convention).
pub const HBAR: f64 = 1.054_571_817e-34;

/// mu_0 / 4 pi in T*m/A.
pub const MU0_OVER_4PI: f64 = 1e-7;

#[derive(Debug, Error, PartialEq)]
pub enum ModelError {
    #[error("couplings must be a symmetric {n}x{n} matrix with zero diagonal")]
    BadCouplings { n: usize },
    #[error("offsets must be finite")]
    NonFiniteOffset,
    #[error("spin positions {a} and {b} coincide")]
    CoincidentPositions { a: usize, b: usize },
    #[error("dipolar constant needs two distinct spins")]
    SameSpin,
    #[error("field axis must have unit norm")]
    FieldAxisNotUnit,
    #[error(transparent)]
    Algebra(#[from] AlgebraError),
}

/// Spin network: rotating-frame offsets and pairwise secular couplings.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SpinSystem<T: Real> {
    n: usize,
    offsets: Vec<T>,
    couplings: Vec<Vec<T>>,
    /// Set when two offsets coincide; selective addressing is then impossible.
    degenerate_offsets: bool,
}

impl<T: Real> SpinSystem<T> {
    pub fn new(offsets: Vec<T>, couplings: Vec<Vec<T>>) -> Result<SpinSystem<T>, ModelError> {
        let n = offsets.len();
        if offsets.iter().any(|w| !w.is_finite()) {
            return Err(ModelError::NonFiniteOffset);
        }
        if couplings.len() != n {
            return Err(ModelError::BadCouplings { n });
        }
        for (k, row) in couplings.iter().enumerate() {
            if row.len() != n || row[k] != T::zero() {
                return Err(ModelError::BadCouplings { n });
            }
            for (l, &d) in row.iter().enumerate() {
                if d != couplings[l][k] {
                    return Err(ModelError::BadCouplings { n });
                }
            }
        }
        let mut degenerate = false;
        for k in 0..n {
            for l in (k + 1)..n {
                if offsets[k] == offsets[l] {
                    degenerate = true;
                }
            }
        }
        if degenerate {
            log::warn!("two spins share the same offset; selective addressing is degenerate");
        }
        Ok(SpinSystem { n, offsets, couplings, degenerate_offsets: degenerate })
    }

    /// System with every coupling zero.
    pub fn uncoupled(offsets: Vec<T>) -> Result<SpinSystem<T>, ModelError> {
        let n = offsets.len();
        SpinSystem::new(offsets, vec![vec![T::zero(); n]; n])
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn offsets(&self) -> &[T] {
        &self.offsets
    }

    pub fn coupling(&self, k: usize, l: usize) -> T {
        self.couplings[k][l]
    }

    pub fn couplings(&self) -> &[Vec<T>] {
        &self.couplings
    }

    pub fn degenerate_offsets(&self) -> bool {
        self.degenerate_offsets
    }
}

/// Spatial arrangement from which dipolar couplings can be derived.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Geometry<T: Real> {
    pub positions: Vec<[T; 3]>,
    /// Gyromagnetic ratio, rad s^-1 T^-1.
    pub gamma: T,
    /// Unit vector of the static field (the z-axis).
    pub field_axis: [T; 3],
}

impl<T: Real> Geometry<T> {
    pub fn validate(&self) -> Result<(), ModelError> {
        let ax = &self.field_axis;
        let norm2 = ax[0] * ax[0] + ax[1] * ax[1] + ax[2] * ax[2];
        if (norm2 - T::one()).abs() > r(1e-12) {
            return Err(ModelError::FieldAxisNotUnit);
        }
        for a in 0..self.positions.len() {
            for b in (a + 1)..self.positions.len() {
                let d = dist2(&self.positions[a], &self.positions[b]);
                if d == T::zero() {
                    return Err(ModelError::CoincidentPositions { a, b });
                }
            }
        }
        Ok(())
    }

    /// Build the full spin system: offsets supplied, couplings from the
    /// dipolar constant of each pair.
    pub fn to_system(&self, offsets: Vec<T>) -> Result<SpinSystem<T>, ModelError> {
        self.validate()?;
        let n = self.positions.len();
        let mut d = vec![vec![T::zero(); n]; n];
        for k in 0..n {
            for l in (k + 1)..n {
                let v = dipolar_constant(self, k, l)?;
                d[k][l] = v;
                d[l][k] = v;
            }
        }
        SpinSystem::new(offsets, d)
    }
}

fn dist2<T: Real>(a: &[T; 3], b: &[T; 3]) -> T {
    let dx = a[0] - b[0];
    let dy = a[1] - b[1];
    let dz = a[2] - b[2];
    dx * dx + dy * dy + dz * dz
}

/// Secular dipolar coupling constant for a pair of spins, in rad/s:
/// `(mu0/4pi) gamma^2 hbar (1 - 3 cos^2 theta) / (2 r^3)` with theta the
/// angle between the pair vector and the field axis.
pub fn dipolar_constant<T: Real>(
    geometry: &Geometry<T>,
    k: usize,
    l: usize,
) -> Result<T, ModelError> {
    if k == l {
        return Err(ModelError::SameSpin);
    }
    let pa = &geometry.positions[k];
    let pb = &geometry.positions[l];
    let r2 = dist2(pa, pb);
    if r2 == T::zero() {
        return Err(ModelError::CoincidentPositions { a: k, b: l });
    }
    let rlen = r2.sqrt();
    let dot = (pa[0] - pb[0]) * geometry.field_axis[0]
        + (pa[1] - pb[1]) * geometry.field_axis[1]
        + (pa[2] - pb[2]) * geometry.field_axis[2];
    let cos_t = dot / rlen;
    let prefac = r::<T>(MU0_OVER_4PI * HBAR) * geometry.gamma * geometry.gamma;
    let ang = T::one() - r::<T>(3.0) * cos_t * cos_t;
    Ok(prefac * ang / (r::<T>(2.0) * rlen * rlen * rlen))
}

/// Rotating-frame Zeeman term `-sum_k dw_k Iz_k`.
pub fn build_zeeman<T: Real>(system: &SpinSystem<T>) -> OperatorSum<T> {
    let n = system.n();
    let mut h = OperatorSum::zero(n);
    for (k, &dw) in system.offsets().iter().enumerate() {
        if dw == T::zero() {
            continue;
        }
        let word = SpinWord::single(n, k, Letter::Z).expect("site in range");
        h.add_term(word, num_complex::Complex::new(-dw, T::zero()));
    }
    h
}

/// Secular dipolar Hamiltonian `sum_{k<l} D_kl (2 Iz Iz - Ix Ix - Iy Iy)`.
pub fn build_dipolar<T: Real>(system: &SpinSystem<T>) -> OperatorSum<T> {
    let n = system.n();
    let mut h = OperatorSum::zero(n);
    let two = num_complex::Complex::new(r::<T>(2.0), T::zero());
    let neg_one = num_complex::Complex::new(-T::one(), T::zero());
    for k in 0..n {
        for l in (k + 1)..n {
            let d = system.coupling(k, l);
            if d == T::zero() {
                continue;
            }
            let dc = num_complex::Complex::new(d, T::zero());
            for (letter, w) in
                [(Letter::Z, two), (Letter::X, neg_one), (Letter::Y, neg_one)]
            {
                let word = SpinWord::pair(n, (k, letter), (l, letter)).expect("sites in range");
                h.add_term(word, dc * w);
            }
        }
    }
    h
}

/// A selective (soft) drive window targeted at one spin's scaled resonance.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SelectiveDrive<T: Real> {
    /// Index of the addressed spin (the drive still couples to every spin).
    pub target: usize,
    /// Rabi frequency omega_RF, rad/s.
    pub amplitude: T,
    /// Drive carrier offset dw' relative to the broadband carrier, rad/s.
    pub carrier_offset: T,
    /// RF phase, radians.
    pub phase: T,
    /// Window start, seconds.
    pub start: T,
    /// Window length, seconds.
    pub duration: T,
}

impl<T: Real> SelectiveDrive<T> {
    pub fn active_at(&self, t: T) -> bool {
        t >= self.start && t < self.start + self.duration
    }

    /// The drive's transverse coefficient pair `(cx, cy)` at time `t`, such
    /// that the instantaneous Hamiltonian is `sum_k (cx Ix_k + cy Iy_k)`.
    ///
    /// The rotating-frame drive is
    /// `-w1 [cos(g) Ix - sin(g) Iy]` with `g = dw' (t - start) - phi`; the
    /// oscillation clock starts at the window opening.
    pub fn coefficients_at(&self, t: T) -> (T, T) {
        if !self.active_at(t) {
            return (T::zero(), T::zero());
        }
        let g = self.carrier_offset * (t - self.start) - self.phase;
        (-self.amplitude * g.cos(), self.amplitude * g.sin())
    }
}

/// Instantaneous drive Hamiltonian at time `t`, summed over every spin.
/// Outside the window the drive is the empty sum.
pub fn drive_hamiltonian<T: Real>(
    drive: &SelectiveDrive<T>,
    system: &SpinSystem<T>,
    t: T,
) -> OperatorSum<T> {
    let n = system.n();
    let mut h = OperatorSum::zero(n);
    let (cx, cy) = drive.coefficients_at(t);
    if cx == T::zero() && cy == T::zero() {
        return h;
    }
    for k in 0..n {
        h.add_term(
            SpinWord::single(n, k, Letter::X).expect("site in range"),
            num_complex::Complex::new(cx, T::zero()),
        );
        h.add_term(
            SpinWord::single(n, k, Letter::Y).expect("site in range"),
            num_complex::Complex::new(cy, T::zero()),
        );
    }
    h
}
