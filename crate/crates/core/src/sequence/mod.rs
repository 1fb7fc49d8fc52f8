//! Pulse sequences: timed event lists, Mansfield-notation expansion, the
//! WHH-4 / MREV-16 decoupling cycles, selective-inversion W subcycles, and
//! the recoupling supercycle.

mod mansfield;

pub use mansfield::{parse_mansfield, CycleSpec, MansfieldError, SignedAxis};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::algebra::{Axis, FrameRotation, Site, SiteRotation};
use crate::model::SelectiveDrive;
use crate::scalar::{r, Real};

#[derive(Debug, Error, PartialEq)]
pub enum SequenceError {
    #[error(transparent)]
    Mansfield(#[from] MansfieldError),
    #[error("tau must be positive")]
    NonPositiveTau,
    #[error("bracket {index} starts in frame {found}, which no leading pulse can reach")]
    UnreachableStart { index: usize, found: String },
    #[error("bracket {index}: frame {found} cannot follow {prev} by a single pi/2 pulse")]
    UnreachableFrame { index: usize, prev: String, found: String },
    #[error("target spin {site} out of range for {n} spins")]
    TargetOutOfRange { site: usize, n: usize },
    #[error("recoupling needs two distinct spins")]
    SameSpin,
    #[error("cycle time must be positive")]
    ZeroCycleTime,
}

/// One timed event of a pulse sequence.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub enum SequenceEvent<T: Real> {
    /// Free evolution for a positive duration.
    Free { duration: T },
    /// Instantaneous rotation; `Site::All` is broadband, `Site::One` selective.
    Delta(SiteRotation<T>),
    /// A soft-drive window carried inline with the event list.
    DriveWindow(SelectiveDrive<T>),
}

/// An ordered event list with a declared cycle time (the sum of its free
/// intervals).
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct PulseSequence<T: Real> {
    events: Vec<SequenceEvent<T>>,
    cycle_time: T,
    /// When set, exact propagation drops the Zeeman term during free
    /// intervals: the idealized stand-in for a fast broadband pi-train.
    zeeman_suppressed: bool,
}

impl<T: Real> PulseSequence<T> {
    pub fn new(events: Vec<SequenceEvent<T>>) -> PulseSequence<T> {
        let cycle_time = events
            .iter()
            .map(|e| match e {
                SequenceEvent::Free { duration } => *duration,
                _ => T::zero(),
            })
            .fold(T::zero(), |a, b| a + b);
        PulseSequence { events, cycle_time, zeeman_suppressed: false }
    }

    pub fn with_zeeman_suppressed(mut self, flag: bool) -> PulseSequence<T> {
        self.zeeman_suppressed = flag;
        self
    }

    pub fn events(&self) -> &[SequenceEvent<T>] {
        &self.events
    }

    pub fn cycle_time(&self) -> T {
        self.cycle_time
    }

    pub fn zeeman_suppressed(&self) -> bool {
        self.zeeman_suppressed
    }

    pub fn free_interval_count(&self) -> usize {
        self.events.iter().filter(|e| matches!(e, SequenceEvent::Free { .. })).count()
    }

    /// Do the broadband rotations compose to the identity action over one
    /// cycle? (Checked on the conjugation action, so a global phase of the
    /// unitary is ignored.)
    pub fn is_closed_broadband(&self, n: usize, tol: T) -> bool {
        let mut frame = FrameRotation::<T>::identity(n);
        for ev in &self.events {
            if let SequenceEvent::Delta(rot) = ev {
                if rot.is_broadband() && frame.push(rot).is_err() {
                    return false;
                }
            }
        }
        frame.is_identity(tol)
    }

    /// Event list reversed in time with every rotation inverted.
    pub fn time_reversed(&self) -> PulseSequence<T> {
        let events = self
            .events
            .iter()
            .rev()
            .map(|e| match e {
                SequenceEvent::Free { duration } => SequenceEvent::Free { duration: *duration },
                SequenceEvent::Delta(rot) => SequenceEvent::Delta(rot.inverse()),
                SequenceEvent::DriveWindow(d) => SequenceEvent::DriveWindow(d.clone()),
            })
            .collect();
        PulseSequence {
            events,
            cycle_time: self.cycle_time,
            zeeman_suppressed: self.zeeman_suppressed,
        }
    }

    /// Structural time-reflection symmetry: the event list equals its own
    /// reversal with rotations inverted, comparing rotations by their
    /// conjugation action.
    pub fn is_time_symmetric(&self, tol: T) -> bool {
        let rev = self.time_reversed();
        if self.events.len() != rev.events.len() {
            return false;
        }
        self.events.iter().zip(rev.events.iter()).all(|(a, b)| match (a, b) {
            (SequenceEvent::Free { duration: da }, SequenceEvent::Free { duration: db }) => {
                (*da - *db).abs() <= tol * da.abs().max(T::one())
            }
            (SequenceEvent::Delta(ra), SequenceEvent::Delta(rb)) => ra.same_action(rb, tol),
            (SequenceEvent::DriveWindow(_), SequenceEvent::DriveWindow(_)) => true,
            _ => false,
        })
    }

    /// Concatenate sequences; the zeeman flag survives only if unanimous.
    pub fn concat(parts: &[PulseSequence<T>]) -> PulseSequence<T> {
        let mut events = Vec::new();
        let mut suppressed = !parts.is_empty();
        for p in parts {
            events.extend(p.events.iter().cloned());
            suppressed &= p.zeeman_suppressed;
        }
        PulseSequence::new(events).with_zeeman_suppressed(suppressed)
    }
}

fn q2<T: Real>() -> T {
    T::frac_pi_2()
}

/// The four WHH-style quarter-turn pulses. `M(P) z` determines which frame
/// the pulse sends the untoggled z-axis to:
/// `P_x -> +y, P_xbar -> -y, P_y -> -x, P_ybar -> +x`.
fn pulse_for_direction<T: Real>(u: [i8; 3]) -> Option<SiteRotation<T>> {
    let q = q2::<T>();
    match u {
        [0, 1, 0] => Some(SiteRotation::about_coord(Site::All, Axis::X, q)),
        [0, -1, 0] => Some(SiteRotation::about_coord(Site::All, Axis::X, -q)),
        [-1, 0, 0] => Some(SiteRotation::about_coord(Site::All, Axis::Y, q)),
        [1, 0, 0] => Some(SiteRotation::about_coord(Site::All, Axis::Y, -q)),
        _ => None,
    }
}

fn imat_apply(m: &[[i8; 3]; 3], v: [i8; 3]) -> [i8; 3] {
    let mut out = [0i8; 3];
    for (i, row) in m.iter().enumerate() {
        out[i] = row[0] * v[0] + row[1] * v[1] + row[2] * v[2];
    }
    out
}

fn imat_mul(a: &[[i8; 3]; 3], b: &[[i8; 3]; 3]) -> [[i8; 3]; 3] {
    let mut out = [[0i8; 3]; 3];
    for i in 0..3 {
        for j in 0..3 {
            for (k, brow) in b.iter().enumerate() {
                out[i][j] += a[i][k] * brow[j];
            }
        }
    }
    out
}

fn imat_transpose(a: &[[i8; 3]; 3]) -> [[i8; 3]; 3] {
    let mut out = [[0i8; 3]; 3];
    for i in 0..3 {
        for j in 0..3 {
            out[i][j] = a[j][i];
        }
    }
    out
}

/// Integer conjugation matrix of a quarter-turn pulse: image of coefficient
/// vectors under `A -> P^dag A P`.
fn pulse_conj_imat(axis: Axis, positive: bool) -> [[i8; 3]; 3] {
    // R_axis(-theta) for theta = +/- pi/2
    let gen = match axis {
        Axis::X => [[1, 0, 0], [0, 0, -1], [0, 1, 0]],
        Axis::Y => [[0, 0, 1], [0, 1, 0], [-1, 0, 0]],
        Axis::Z => [[0, -1, 0], [1, 0, 0], [0, 0, 1]],
    };
    // M = R(-theta): one generator step for theta = -pi/2, three for +pi/2
    let steps = if positive { 3 } else { 1 };
    let mut m = [[0i8; 3]; 3];
    for (i, row) in m.iter_mut().enumerate() {
        row[i] = 1;
    }
    for _ in 0..steps {
        m = imat_mul(&gen, &m);
    }
    m
}

fn rotation_imat<T: Real>(rot: &SiteRotation<T>) -> Option<[[i8; 3]; 3]> {
    let q = q2::<T>();
    for axis in [Axis::X, Axis::Y, Axis::Z] {
        let unit: [T; 3] = axis.unit();
        if rot.axis == unit {
            if rot.angle == q {
                return Some(pulse_conj_imat(axis, true));
            }
            if rot.angle == -q {
                return Some(pulse_conj_imat(axis, false));
            }
        }
    }
    None
}

/// Expand a Mansfield cycle into its pulse realization. Each bracket
/// `[Z,a2,a3]` becomes the pattern `tau, P1, tau, P2, 2tau, P3, tau, P4, tau`
/// whose toggling frames visit `Z, a2, a3, a2, Z` (the 1-1-2-1-1 split),
/// with `P3 = P2^-1` and `P4 = P1^-1` closing the bracket.
pub fn expand_cycle<T: Real>(
    spec: &CycleSpec,
    tau: T,
) -> Result<PulseSequence<T>, SequenceError> {
    if tau <= T::zero() {
        return Err(SequenceError::NonPositiveTau);
    }
    let mut events: Vec<SequenceEvent<T>> = Vec::new();
    for (index, bracket) in spec.brackets().iter().enumerate() {
        if bracket[0] != SignedAxis::Z {
            return Err(SequenceError::UnreachableStart {
                index,
                found: bracket[0].to_string(),
            });
        }
        let a2 = bracket[1].vector();
        let a3 = bracket[2].vector();

        let p1: SiteRotation<T> = pulse_for_direction(a2).ok_or_else(|| {
            SequenceError::UnreachableFrame {
                index,
                prev: bracket[0].to_string(),
                found: bracket[1].to_string(),
            }
        })?;
        let m1 = rotation_imat(&p1).expect("builder pulses are exact quarter turns");
        // u2 = M1^-1 a3 (M1 orthogonal, so inverse = transpose)
        let u2 = imat_apply(&imat_transpose(&m1), a3);
        let p2: SiteRotation<T> = pulse_for_direction(u2).ok_or_else(|| {
            SequenceError::UnreachableFrame {
                index,
                prev: bracket[1].to_string(),
                found: bracket[2].to_string(),
            }
        })?;
        let p3 = p2.inverse();
        let p4 = p1.inverse();

        let two_tau = tau * r::<T>(2.0);
        events.push(SequenceEvent::Free { duration: tau });
        events.push(SequenceEvent::Delta(p1));
        events.push(SequenceEvent::Free { duration: tau });
        events.push(SequenceEvent::Delta(p2));
        events.push(SequenceEvent::Free { duration: two_tau });
        events.push(SequenceEvent::Delta(p3));
        events.push(SequenceEvent::Free { duration: tau });
        events.push(SequenceEvent::Delta(p4));
        events.push(SequenceEvent::Free { duration: tau });
    }
    Ok(PulseSequence::new(events))
}

/// The four-pulse WHH-4 cycle `[Z,Y,X]` with cycle time `6 tau`.
pub fn build_whh4<T: Real>(tau: T) -> Result<PulseSequence<T>, SequenceError> {
    expand_cycle(&parse_mansfield("[Z,Y,X]").expect("static spec"), tau)
}

/// The compound MREV-16 cycle `[Z,Y,X][Z,-Y,X][Z,Y,-X][Z,-Y,-X]` with cycle
/// time `24 tau`.
pub fn build_mrev16<T: Real>(tau: T) -> Result<PulseSequence<T>, SequenceError> {
    expand_cycle(
        &parse_mansfield("[Z,Y,X][Z,-Y,X][Z,Y,-X][Z,-Y,-X]").expect("static spec"),
        tau,
    )
}

/// Selective-inversion axis of a W subcycle; `NoPulse` is the bare skeleton
/// W(-).
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum WAxis {
    NoPulse,
    X,
    Y,
    Z,
}

impl WAxis {
    fn axis(self) -> Option<Axis> {
        match self {
            WAxis::NoPulse => None,
            WAxis::X => Some(Axis::X),
            WAxis::Y => Some(Axis::Y),
            WAxis::Z => Some(Axis::Z),
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            WAxis::NoPulse => "-",
            WAxis::X => "X",
            WAxis::Y => "Y",
            WAxis::Z => "Z",
        }
    }
}

/// How the offset term is removed inside W-subcycle intervals.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub enum TrainSpec<T: Real> {
    /// Analytic suppression: exact propagation drops the Zeeman term.
    Idealized,
    /// Explicit broadband pi-train at roughly this spacing (even count per
    /// interval, half-spacing margins).
    Spacing(T),
}

fn pi_train_events<T: Real>(duration: T, spacing: T, events: &mut Vec<SequenceEvent<T>>) {
    let pi = T::pi();
    let raw = (duration / spacing).round();
    let mut m = if raw < r(2.0) { 2i64 } else { raw.to_i64().unwrap_or(2) };
    if m % 2 != 0 {
        m += 1;
        log::warn!("pi-train count rounded up to even ({m} pulses per interval)");
    }
    let mf = r::<T>(m as f64);
    let seg = duration / mf;
    let half = seg / r(2.0);
    events.push(SequenceEvent::Free { duration: half });
    for k in 0..m {
        events.push(SequenceEvent::Delta(SiteRotation::about_coord(Site::All, Axis::X, pi)));
        let d = if k + 1 == m { half } else { seg };
        events.push(SequenceEvent::Free { duration: d });
    }
}

fn w_interval<T: Real>(
    n: usize,
    duration: T,
    selectives: &[(usize, Axis)],
    train: &TrainSpec<T>,
    events: &mut Vec<SequenceEvent<T>>,
) {
    let pi = T::pi();
    let _ = n;
    for &(site, axis) in selectives {
        events.push(SequenceEvent::Delta(SiteRotation::about_coord(Site::One(site), axis, pi)));
    }
    match train {
        TrainSpec::Idealized => events.push(SequenceEvent::Free { duration }),
        TrainSpec::Spacing(s) => pi_train_events(duration, *s, events),
    }
    for &(site, axis) in selectives {
        events.push(SequenceEvent::Delta(SiteRotation::about_coord(Site::One(site), axis, pi)));
    }
}

/// A slow WHH-4 skeleton with interval `big_t`, each free interval bracketed
/// by selective pi pulses on the assigned spins.
fn w_skeleton<T: Real>(
    n: usize,
    assignments: &[(usize, WAxis)],
    big_t: T,
    train: &TrainSpec<T>,
) -> Result<PulseSequence<T>, SequenceError> {
    for &(site, _) in assignments {
        if site >= n {
            return Err(SequenceError::TargetOutOfRange { site, n });
        }
    }
    let skeleton = build_whh4(big_t)?;
    let selectives: Vec<(usize, Axis)> = assignments
        .iter()
        .filter_map(|&(site, w)| w.axis().map(|a| (site, a)))
        .collect();
    let mut events = Vec::new();
    for ev in skeleton.events() {
        match ev {
            SequenceEvent::Free { duration } => {
                w_interval(n, *duration, &selectives, train, &mut events);
            }
            other => events.push(other.clone()),
        }
    }
    let suppressed = matches!(train, TrainSpec::Idealized);
    Ok(PulseSequence::new(events).with_zeeman_suppressed(suppressed))
}

/// `W_target(axis)` subcycle on an `n`-spin system: cycle time `6 big_t`.
pub fn build_w_subcycle<T: Real>(
    n: usize,
    target: usize,
    axis: WAxis,
    big_t: T,
    train: TrainSpec<T>,
) -> Result<PulseSequence<T>, SequenceError> {
    if big_t <= T::zero() {
        return Err(SequenceError::NonPositiveTau);
    }
    w_skeleton(n, &[(target, axis)], big_t, &train)
}

/// Simultaneous `W_k(alpha)` / `W_l(beta)` pair subcycle (used to realize the
/// effective pair couplings).
pub fn build_w_pair<T: Real>(
    n: usize,
    k: usize,
    l: usize,
    alpha: WAxis,
    beta: WAxis,
    big_t: T,
    train: TrainSpec<T>,
) -> Result<PulseSequence<T>, SequenceError> {
    if k == l {
        return Err(SequenceError::SameSpin);
    }
    if big_t <= T::zero() {
        return Err(SequenceError::NonPositiveTau);
    }
    w_skeleton(n, &[(k, alpha), (l, beta)], big_t, &train)
}

/// Recoupling supercycle mode.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum SuperWhhMode {
    /// Three subcycles, cycle time `18 big_t`.
    Plain,
    /// Six subcycles with the mirror-image tail, cycle time `36 big_t`; the
    /// time-reflection symmetry removes all odd-order average terms.
    Symmetrized,
}

/// A built recoupling supercycle: the per-slot axis schedule for the two
/// addressed spins plus the merged event list.
#[derive(Clone, Debug)]
pub struct SuperWhh<T: Real> {
    pub k: usize,
    pub l: usize,
    /// `(axis on k, axis on l, reversed?)` per subcycle slot.
    pub schedule: Vec<(WAxis, WAxis, bool)>,
    pub sequence: PulseSequence<T>,
}

/// Build the supercycle that recouples spins `k` and `l` while decoupling
/// every spectator: k sees subcycles (Z, Y, X), l sees (Z, X, Y); the
/// symmetrized mode appends the time-reversed mirror.
pub fn build_super_whh<T: Real>(
    n: usize,
    k: usize,
    l: usize,
    big_t: T,
    mode: SuperWhhMode,
    train: TrainSpec<T>,
) -> Result<SuperWhh<T>, SequenceError> {
    if k == l {
        return Err(SequenceError::SameSpin);
    }
    if k >= n {
        return Err(SequenceError::TargetOutOfRange { site: k, n });
    }
    if l >= n {
        return Err(SequenceError::TargetOutOfRange { site: l, n });
    }
    let slots = [(WAxis::Z, WAxis::Z), (WAxis::Y, WAxis::X), (WAxis::X, WAxis::Y)];
    let mut parts: Vec<PulseSequence<T>> = Vec::new();
    let mut schedule: Vec<(WAxis, WAxis, bool)> = Vec::new();
    for &(ak, al) in &slots {
        parts.push(build_w_pair(n, k, l, ak, al, big_t, train)?);
        schedule.push((ak, al, false));
    }
    if mode == SuperWhhMode::Symmetrized {
        for (i, &(ak, al)) in slots.iter().enumerate().rev() {
            parts.push(parts[i].time_reversed());
            schedule.push((ak, al, true));
        }
    }
    Ok(SuperWhh { k, l, schedule, sequence: PulseSequence::concat(&parts) })
}
