//! Exact quantum state evolution under the full time-dependent Hamiltonian
//! (delta rotations + free dipolar/Zeeman evolution + selective drives), the
//! average-Hamiltonian reference propagator, and fidelity measures.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use thiserror::Error;

use crate::algebra::{to_dense, unitary_exp, AlgebraError, OperatorSum};
use crate::model::{build_dipolar, build_zeeman, SelectiveDrive, SpinSystem};
use crate::scalar::{r, Real, C};
use crate::sequence::{PulseSequence, SequenceEvent};

#[derive(Debug, Error, PartialEq)]
pub enum PropagatorError {
    #[error(transparent)]
    Algebra(#[from] AlgebraError),
    #[error("state dimension {got} does not match 2^{n}")]
    DimensionMismatch { got: usize, n: usize },
    #[error("dt must be positive")]
    NonPositiveDt,
    #[error("state norm {norm} too far from 1")]
    NotNormalized { norm: f64 },
    #[error("evolution must span at least one cycle")]
    NoCycles,
    #[error("drive windows need amplitude >= 0 and duration > 0")]
    BadDrive,
}

/// A pure state of `n` spins; site 0 is the most significant bit of the
/// amplitude index.
#[derive(Clone, Debug, PartialEq)]
pub struct StateVector<T: Real> {
    amps: DVector<C<T>>,
}

impl<T: Real> StateVector<T> {
    /// Wrap amplitudes, requiring unit norm within 1e-10.
    pub fn new(amps: DVector<C<T>>) -> Result<StateVector<T>, PropagatorError> {
        let norm = vec_norm(&amps);
        if (norm - T::one()).abs() > r(1e-10) {
            return Err(PropagatorError::NotNormalized {
                norm: norm.to_f64().unwrap_or(f64::NAN),
            });
        }
        Ok(StateVector { amps })
    }

    /// Basis state |00...0>.
    pub fn ground(n: usize) -> StateVector<T> {
        let dim = 1usize << n;
        let mut amps = DVector::zeros(dim);
        amps[0] = Complex::new(T::one(), T::zero());
        StateVector { amps }
    }

    /// Single computational basis state.
    pub fn basis(n: usize, index: usize) -> StateVector<T> {
        let dim = 1usize << n;
        let mut amps = DVector::zeros(dim);
        amps[index] = Complex::new(T::one(), T::zero());
        StateVector { amps }
    }

    pub fn dim(&self) -> usize {
        self.amps.len()
    }

    pub fn n_spins(&self) -> usize {
        self.amps.len().trailing_zeros() as usize
    }

    pub fn amplitudes(&self) -> &DVector<C<T>> {
        &self.amps
    }

    pub fn norm(&self) -> T {
        vec_norm(&self.amps)
    }

    /// Explicit renormalization; the drift is reported through the log.
    pub fn renormalize(&mut self) {
        let norm = self.norm();
        log::debug!(
            "renormalizing state, drift {:e}",
            (norm - T::one()).abs().to_f64().unwrap_or(f64::NAN)
        );
        let inv = T::one() / norm;
        self.amps.iter_mut().for_each(|a| *a *= Complex::new(inv, T::zero()));
    }

    pub fn inner(&self, other: &StateVector<T>) -> C<T> {
        self.amps.dotc(&other.amps)
    }
}

fn vec_norm<T: Real>(v: &DVector<C<T>>) -> T {
    let mut acc = T::zero();
    for z in v.iter() {
        acc += z.norm_sqr();
    }
    acc.sqrt()
}

/// Squared overlap `|<a|b>|^2`; global-phase invariant.
pub fn fidelity<T: Real>(a: &StateVector<T>, b: &StateVector<T>) -> Result<T, PropagatorError> {
    if a.dim() != b.dim() {
        return Err(PropagatorError::DimensionMismatch { got: b.dim(), n: a.n_spins() });
    }
    Ok(a.inner(b).norm_sqr())
}

/// Haar-distributed random pure state: normalized vector of independent
/// standard complex Gaussians from a seeded portable generator (ChaCha8).
pub fn random_state<T: Real>(seed: u64, n: usize) -> StateVector<T> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let dim = 1usize << n;
    let mut amps = DVector::zeros(dim);
    for k in 0..dim {
        let re: f64 = StandardNormal.sample(&mut rng);
        let im: f64 = StandardNormal.sample(&mut rng);
        amps[k] = Complex::new(r::<T>(re), r::<T>(im));
    }
    let norm = vec_norm(&amps);
    let inv = T::one() / norm;
    amps.iter_mut().for_each(|a| *a *= Complex::new(inv, T::zero()));
    StateVector { amps }
}

/// Stroboscopic record of an exact evolution.
#[derive(Clone, Debug)]
pub struct Trajectory<T: Real> {
    pub samples: Vec<(T, StateVector<T>)>,
    /// Largest |norm - 1| observed at cycle boundaries.
    pub max_norm_drift: T,
}

impl<T: Real> Trajectory<T> {
    pub fn final_state(&self) -> &StateVector<T> {
        &self.samples.last().expect("trajectory has samples").1
    }

    pub fn final_time(&self) -> T {
        self.samples.last().expect("trajectory has samples").0
    }
}

#[derive(Clone, Copy, Debug)]
pub enum DtPolicy<T: Real> {
    /// `dt <= 2 pi / (safety * fastest rate)`, the fastest rate taken over
    /// offsets, drive amplitudes and the static-coupling norm.
    Auto { safety: T },
    /// Explicit upper bound on dt; intervals are subdivided to honor it.
    Fixed(T),
}

impl<T: Real> Default for DtPolicy<T> {
    fn default() -> Self {
        DtPolicy::Auto { safety: r(20.0) }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum RecordPolicy {
    #[default]
    FinalOnly,
    Stroboscopic,
}

#[derive(Clone, Copy, Debug, Default)]
pub struct EvolveOptions<T: Real> {
    pub cycles: usize,
    pub dt: DtPolicy<T>,
    pub record: RecordPolicy,
}

/// Apply `exp(-i h dt)` to `psi` by a Taylor series on the vector; valid for
/// small `||h|| dt` (the caller guarantees the bound).
fn taylor_apply<T: Real>(
    h: &DMatrix<C<T>>,
    dt: T,
    psi: &mut DVector<C<T>>,
    term: &mut DVector<C<T>>,
    tmp: &mut DVector<C<T>>,
) {
    term.copy_from(psi);
    let zero = Complex::new(T::zero(), T::zero());
    let tol2 = {
        let t = T::default_epsilon() * r::<T>(0.01);
        t * t
    };
    for m in 1..=48u32 {
        let alpha = Complex::new(T::zero(), -dt / r::<T>(f64::from(m)));
        tmp.gemv(alpha, h, &*term, zero);
        std::mem::swap(term, tmp);
        *psi += &*term;
        let mut nrm = T::zero();
        for z in term.iter() {
            nrm += z.norm_sqr();
        }
        if nrm < tol2 {
            break;
        }
    }
}

/// Exact evolution of `psi0` through `opts.cycles` repetitions of `seq`.
///
/// Delta rotations apply as exact unitaries. Drive-free intervals use the
/// cached exponential of the static Hamiltonian. Inside drive windows the
/// Hamiltonian is sampled at each substep midpoint (piecewise-constant
/// midpoint rule). The sequence's zeeman-suppression flag removes the offset
/// term from free evolution (idealized pi-train limit).
pub fn exact_evolve<T: Real>(
    system: &SpinSystem<T>,
    seq: &PulseSequence<T>,
    drives: &[SelectiveDrive<T>],
    opts: &EvolveOptions<T>,
    psi0: &StateVector<T>,
) -> Result<Trajectory<T>, PropagatorError> {
    let n = system.n();
    let dim = 1usize << n;
    if psi0.dim() != dim {
        return Err(PropagatorError::DimensionMismatch { got: psi0.dim(), n });
    }
    if opts.cycles == 0 {
        return Err(PropagatorError::NoCycles);
    }

    // gather drives from the argument list and from inline events
    let mut all_drives: Vec<SelectiveDrive<T>> = drives.to_vec();
    for ev in seq.events() {
        if let SequenceEvent::DriveWindow(d) = ev {
            all_drives.push(d.clone());
        }
    }
    for d in &all_drives {
        if d.amplitude < T::zero() || d.duration <= T::zero() {
            return Err(PropagatorError::BadDrive);
        }
        if d.target >= n {
            return Err(PropagatorError::Algebra(AlgebraError::SiteOutOfRange {
                site: d.target,
                n,
            }));
        }
    }

    // static Hamiltonian for free intervals
    let mut h_static_op = build_dipolar(system);
    if !seq.zeeman_suppressed() {
        h_static_op = h_static_op.add(&build_zeeman(system))?;
    }
    let h_static = to_dense(&h_static_op)?;
    let h_static_norm = crate::algebra::frob(&h_static);

    // transverse sums for the drive term
    let (sx_sum, sy_sum) = if all_drives.is_empty() {
        (None, None)
    } else {
        let mut sx = OperatorSum::zero(n);
        let mut sy = OperatorSum::zero(n);
        for k in 0..n {
            sx.add_term(
                crate::algebra::SpinWord::single(n, k, crate::algebra::Letter::X)?,
                Complex::new(T::one(), T::zero()),
            );
            sy.add_term(
                crate::algebra::SpinWord::single(n, k, crate::algebra::Letter::Y)?,
                Complex::new(T::one(), T::zero()),
            );
        }
        (Some(to_dense(&sx)?), Some(to_dense(&sy)?))
    };
    let trans_norm = sx_sum.as_ref().map_or(T::zero(), crate::algebra::frob);

    // dt bound
    let two_pi = T::two_pi();
    let mut fastest = h_static_norm;
    for &dw in system.offsets() {
        fastest = fastest.max(dw.abs());
    }
    let mut amp_total = T::zero();
    for d in &all_drives {
        fastest = fastest.max(d.amplitude.abs());
        amp_total += d.amplitude.abs();
    }
    let dt_max = match opts.dt {
        DtPolicy::Auto { safety } => {
            if fastest == T::zero() {
                seq.cycle_time()
            } else {
                two_pi / (safety * fastest)
            }
        }
        DtPolicy::Fixed(dt) => {
            if dt <= T::zero() {
                return Err(PropagatorError::NonPositiveDt);
            }
            dt
        }
    };

    // precompute delta unitaries and static interval propagators
    enum Slot<T: Real> {
        Unitary(DMatrix<C<T>>),
        Free { duration: T, cached: DMatrix<C<T>> },
        Skip,
    }
    let mut slots: Vec<Slot<T>> = Vec::with_capacity(seq.events().len());
    for ev in seq.events() {
        match ev {
            SequenceEvent::Delta(rot) => {
                let mut gen = OperatorSum::zero(n);
                let sites: Vec<usize> = match rot.site {
                    crate::algebra::Site::All => (0..n).collect(),
                    crate::algebra::Site::One(k) => {
                        if k >= n {
                            return Err(PropagatorError::Algebra(
                                AlgebraError::SiteOutOfRange { site: k, n },
                            ));
                        }
                        vec![k]
                    }
                };
                for k in sites {
                    for (i, &a) in rot.axis.iter().enumerate() {
                        if a != T::zero() {
                            gen.add_term(
                                crate::algebra::SpinWord::single(
                                    n,
                                    k,
                                    crate::algebra::Letter::from_axis_index(i),
                                )?,
                                Complex::new(a, T::zero()),
                            );
                        }
                    }
                }
                slots.push(Slot::Unitary(unitary_exp(&to_dense(&gen)?, rot.angle)));
            }
            SequenceEvent::Free { duration } => {
                slots.push(Slot::Free {
                    duration: *duration,
                    cached: unitary_exp(&h_static, *duration),
                });
            }
            SequenceEvent::DriveWindow(_) => slots.push(Slot::Skip),
        }
    }

    let t_c = seq.cycle_time();
    let mut psi = psi0.amplitudes().clone();
    let mut h_buf: DMatrix<C<T>> = DMatrix::zeros(dim, dim);
    let mut term_buf: DVector<C<T>> = DVector::zeros(dim);
    let mut tmp_buf: DVector<C<T>> = DVector::zeros(dim);
    let mut samples: Vec<(T, StateVector<T>)> = Vec::new();
    if opts.record == RecordPolicy::Stroboscopic {
        samples.push((T::zero(), psi0.clone()));
    }
    let mut max_drift = T::zero();
    let mut applied = DVector::zeros(dim);

    for cyc in 0..opts.cycles {
        let t_cycle = r::<T>(cyc as f64) * t_c;
        let mut offset = T::zero();
        for slot in &slots {
            match slot {
                Slot::Skip => {}
                Slot::Unitary(u) => {
                    applied.gemv(
                        Complex::new(T::one(), T::zero()),
                        u,
                        &psi,
                        Complex::new(T::zero(), T::zero()),
                    );
                    std::mem::swap(&mut psi, &mut applied);
                }
                Slot::Free { duration, cached } => {
                    let t0 = t_cycle + offset;
                    let t1 = t0 + *duration;
                    let active = all_drives
                        .iter()
                        .any(|d| d.start < t1 && d.start + d.duration > t0);
                    if !active {
                        applied.gemv(
                            Complex::new(T::one(), T::zero()),
                            cached,
                            &psi,
                            Complex::new(T::zero(), T::zero()),
                        );
                        std::mem::swap(&mut psi, &mut applied);
                    } else {
                        let steps_f = (*duration / dt_max).ceil();
                        let steps = steps_f.to_i64().unwrap_or(1).max(1);
                        let dt = *duration / r::<T>(steps as f64);
                        let hbound = h_static_norm + amp_total * trans_norm;
                        let small = hbound * dt < r(0.25);
                        for s in 0..steps {
                            let t_mid = t0 + (r::<T>(s as f64) + r(0.5)) * dt;
                            let mut cx = T::zero();
                            let mut cy = T::zero();
                            for d in &all_drives {
                                let (a, b) = d.coefficients_at(t_mid);
                                cx += a;
                                cy += b;
                            }
                            h_buf.copy_from(&h_static);
                            if let (Some(sx), Some(sy)) = (&sx_sum, &sy_sum) {
                                for ((h, x), y) in
                                    h_buf.iter_mut().zip(sx.iter()).zip(sy.iter())
                                {
                                    *h += Complex::new(x.re * cx + y.re * cy, x.im * cx + y.im * cy);
                                }
                            }
                            if small {
                                taylor_apply(&h_buf, dt, &mut psi, &mut term_buf, &mut tmp_buf);
                            } else {
                                let u = unitary_exp(&h_buf, dt);
                                applied.gemv(
                                    Complex::new(T::one(), T::zero()),
                                    &u,
                                    &psi,
                                    Complex::new(T::zero(), T::zero()),
                                );
                                std::mem::swap(&mut psi, &mut applied);
                            }
                        }
                    }
                    offset += *duration;
                }
            }
        }
        let drift = (vec_norm(&psi) - T::one()).abs();
        if drift > max_drift {
            max_drift = drift;
        }
        if opts.record == RecordPolicy::Stroboscopic {
            samples.push((t_cycle + t_c, StateVector { amps: psi.clone() }));
        }
    }
    if max_drift > r(1e-10) {
        log::warn!("state norm drifted by {:e} over the run", max_drift.to_f64().unwrap_or(f64::NAN));
    }
    if opts.record == RecordPolicy::FinalOnly {
        samples.push((r::<T>(opts.cycles as f64) * t_c, StateVector { amps: psi }));
    }
    Ok(Trajectory { samples, max_norm_drift: max_drift })
}

/// Average-Hamiltonian reference evolution:
/// `psi(t) = exp(-i hz_bar t) exp(-i hsec_bar t) psi0`
/// (secular drive first, then the averaged offset term).
pub fn aht_evolve<T: Real>(
    hz_bar: &OperatorSum<T>,
    hsec_bar: &OperatorSum<T>,
    t: T,
    psi0: &StateVector<T>,
) -> Result<StateVector<T>, PropagatorError> {
    if hz_bar.n() != hsec_bar.n() {
        return Err(PropagatorError::Algebra(AlgebraError::DimensionMismatch {
            left: hz_bar.n(),
            right: hsec_bar.n(),
        }));
    }
    let dim = 1usize << hz_bar.n();
    if psi0.dim() != dim {
        return Err(PropagatorError::DimensionMismatch { got: psi0.dim(), n: hz_bar.n() });
    }
    let uz = unitary_exp(&to_dense(hz_bar)?, t);
    let us = unitary_exp(&to_dense(hsec_bar)?, t);
    let psi = &uz * (&us * psi0.amplitudes());
    Ok(StateVector { amps: psi })
}

/// Reduced density matrix over the `keep` sites (ascending order), tracing
/// out the rest. Site 0 is the most significant amplitude-index bit.
pub fn reduced_density<T: Real>(psi: &StateVector<T>, keep: &[usize]) -> DMatrix<C<T>> {
    let n = psi.n_spins();
    let dk = 1usize << keep.len();
    let tr_sites: Vec<usize> = (0..n).filter(|s| !keep.contains(s)).collect();
    let dt = 1usize << tr_sites.len();
    let index = |ik: usize, it: usize| -> usize {
        let mut idx = 0usize;
        for (pos, &s) in keep.iter().enumerate() {
            let bit = (ik >> (keep.len() - 1 - pos)) & 1;
            idx |= bit << (n - 1 - s);
        }
        for (pos, &s) in tr_sites.iter().enumerate() {
            let bit = (it >> (tr_sites.len() - 1 - pos)) & 1;
            idx |= bit << (n - 1 - s);
        }
        idx
    };
    let amps = psi.amplitudes();
    let mut rho = DMatrix::zeros(dk, dk);
    for i in 0..dk {
        for j in 0..dk {
            let mut acc = Complex::new(T::zero(), T::zero());
            for it in 0..dt {
                acc += amps[index(i, it)] * amps[index(j, it)].conj();
            }
            rho[(i, j)] = acc;
        }
    }
    rho
}

/// Normalized trace overlap of two density matrices:
/// `Tr(rho sigma) / sqrt(Tr rho^2 Tr sigma^2)`. Coincides with `|<a|b>|^2`
/// on pure states.
pub fn overlap_normalized<T: Real>(rho: &DMatrix<C<T>>, sigma: &DMatrix<C<T>>) -> T {
    let mut num = T::zero();
    let mut pr = T::zero();
    let mut ps = T::zero();
    let dim = rho.nrows();
    for i in 0..dim {
        for j in 0..dim {
            num += (rho[(i, j)] * sigma[(j, i)]).re;
            pr += (rho[(i, j)] * rho[(j, i)]).re;
            ps += (sigma[(i, j)] * sigma[(j, i)]).re;
        }
    }
    let den = (pr * ps).sqrt();
    if den == T::zero() {
        T::zero()
    } else {
        (num / den).min(T::one()).max(-T::one())
    }
}
