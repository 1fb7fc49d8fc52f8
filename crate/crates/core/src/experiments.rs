//! Pre-packaged, reproducible studies: the two-spin fidelity map, recoupling
//! verification, the selectivity-error guide, and symmetry-order checks.

use num_complex::Complex;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::aht::{average0, magnus1, offset_vectors, AhtError};
use crate::algebra::{AlgebraError, Letter, OperatorSum, SpinWord};
use crate::model::{build_dipolar, build_zeeman, ModelError, SelectiveDrive, SpinSystem};
use crate::propagator::{
    exact_evolve, fidelity, random_state, reduced_density, overlap_normalized, aht_evolve,
    DtPolicy, EvolveOptions, PropagatorError, RecordPolicy,
};
use crate::scalar::{r, Real};
use crate::sequence::{
    build_mrev16, build_super_whh, PulseSequence, SequenceError, SuperWhhMode, TrainSpec,
};

#[derive(Debug, Error)]
pub enum ExperimentError {
    #[error(transparent)]
    Algebra(#[from] AlgebraError),
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Sequence(#[from] SequenceError),
    #[error(transparent)]
    Aht(#[from] AhtError),
    #[error(transparent)]
    Propagator(#[from] PropagatorError),
    #[error("grid must be non-empty")]
    EmptyGrid,
    #[error("seeds must be >= 1")]
    NoSeeds,
    #[error("target offset must be positive for the scaled-resonance drive")]
    NonPositiveOffset,
    #[error("explicit window of {got} cycles is shorter than the pi pulse ({need} cycles)")]
    WindowTooShort { got: usize, need: usize },
}

/// Rectangular grid of scalar results with axis metadata.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ScanResult<T: Real> {
    pub x_label: String,
    pub x: Vec<T>,
    pub y_label: String,
    pub y: Vec<T>,
    /// `values[i][j]` belongs to `(x[i], y[j])`.
    pub values: Vec<Vec<T>>,
    pub metadata: ScanMetadata,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ScanMetadata {
    pub sequence: String,
    pub seeds: u32,
    pub base_seed: u64,
    pub params: Vec<(String, String)>,
}

impl<T: Real> ScanResult<T> {
    pub fn all_finite(&self) -> bool {
        self.values.iter().flatten().all(|v| v.is_finite())
    }
}

/// Parameters of the two-spin decoupled-selective-pulse fidelity map.
///
/// Grid defaults bracket the visible breakdown of the zeroth-order average:
/// fidelity sits on the finite-selectivity floor near the small-parameter
/// corner and collapses along the `tau*dw` axis past ~3e-2.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct FigTwoParams<T: Real> {
    pub tau_d: Vec<T>,
    pub tau_dw: Vec<T>,
    /// Mean over this many Haar-random initial states.
    pub seeds: u32,
    pub base_seed: u64,
    /// Selective-drive phase (radians).
    pub phi: T,
    /// `omega_RF = delta_omega_jk / drive_ratio`.
    pub drive_ratio: T,
    /// Absolute offset scale of the target spin (rad/s).
    pub delta_omega: T,
    pub dt: DtSetting<T>,
    /// Optional explicit window in cycles (defaults to one selective pi).
    pub cycles_override: Option<usize>,
}

/// Serializable stand-in for [`DtPolicy`].
#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub enum DtSetting<T: Real> {
    Auto { safety: T },
    Fixed(T),
}

impl<T: Real> DtSetting<T> {
    pub fn policy(self) -> DtPolicy<T> {
        match self {
            DtSetting::Auto { safety } => DtPolicy::Auto { safety },
            DtSetting::Fixed(dt) => DtPolicy::Fixed(dt),
        }
    }
}

pub fn log_grid<T: Real>(lo: f64, hi: f64, count: usize) -> Vec<T> {
    let mut out = Vec::with_capacity(count);
    for i in 0..count {
        let f = if count == 1 { 0.0 } else { i as f64 / (count - 1) as f64 };
        out.push(r(10f64.powf(lo.log10() + f * (hi.log10() - lo.log10()))));
    }
    out
}

impl<T: Real> Default for FigTwoParams<T> {
    fn default() -> Self {
        FigTwoParams {
            tau_d: log_grid(1e-4, 1e-1, 16),
            tau_dw: log_grid(1e-3, 1e-1, 16),
            seeds: 3,
            base_seed: 7,
            phi: r(0.7),
            drive_ratio: r(100.0),
            delta_omega: r(1e5),
            dt: DtSetting::Auto { safety: r(20.0) },
            cycles_override: None,
        }
    }
}

/// Mean fidelity between exact evolution and the average-Hamiltonian
/// prediction at one grid point. The same seeded initial states are used at
/// every grid point so the map is smooth in the parameters.
pub fn fig2_point<T: Real>(
    params: &FigTwoParams<T>,
    tau_d: T,
    tau_dw: T,
) -> Result<T, ExperimentError> {
    let dw = params.delta_omega;
    if dw <= T::zero() {
        return Err(ExperimentError::NonPositiveOffset);
    }
    let tau = tau_dw / dw;
    let d = tau_d / tau;
    let w1 = dw / params.drive_ratio;

    let seq = build_mrev16(tau)?;
    let t_c = seq.cycle_time();
    let t_pi = T::two_pi() / w1;
    let need = {
        let n = (t_pi / t_c).round();
        n.to_usize().unwrap_or(1).max(1)
    };
    let cycles = match params.cycles_override {
        Some(c) => {
            if c < need {
                return Err(ExperimentError::WindowTooShort { got: c, need });
            }
            c
        }
        None => need,
    };
    let t_final = r::<T>(cycles as f64) * t_c;

    let system = SpinSystem::new(
        vec![dw, T::zero()],
        vec![vec![T::zero(), d], vec![d, T::zero()]],
    )?;
    let vectors = offset_vectors(&seq)?;
    let drive = SelectiveDrive {
        target: 0,
        amplitude: w1,
        carrier_offset: vectors.zeta_norm() * dw,
        phase: params.phi,
        start: T::zero(),
        duration: t_final,
    };
    let hz_bar = average0(&seq, &build_zeeman(&system))?;
    let hsec_bar = crate::aht::secular_selective(&vectors, w1, params.phi, 0, 2)?;

    let opts = EvolveOptions {
        cycles,
        dt: params.dt.policy(),
        record: RecordPolicy::FinalOnly,
    };
    let mut acc = T::zero();
    for s in 0..params.seeds {
        let seed = params.base_seed.wrapping_add(u64::from(s));
        let psi0 = random_state::<T>(seed, 2);
        let traj = exact_evolve(&system, &seq, std::slice::from_ref(&drive), &opts, &psi0)?;
        let psi_aht = aht_evolve(&hz_bar, &hsec_bar, t_final, &psi0)?;
        acc += fidelity(&psi_aht, traj.final_state())?;
    }
    Ok(acc / r(f64::from(params.seeds)))
}

/// Run the full fidelity map. Grid points evaluate in parallel; assembly is
/// indexed, so the result is identical for any thread count.
pub fn fidelity_scan<T: Real>(params: &FigTwoParams<T>) -> Result<ScanResult<T>, ExperimentError> {
    if params.tau_d.is_empty() || params.tau_dw.is_empty() {
        return Err(ExperimentError::EmptyGrid);
    }
    if params.seeds == 0 {
        return Err(ExperimentError::NoSeeds);
    }
    let nx = params.tau_d.len();
    let ny = params.tau_dw.len();
    type Cell<T> = ((usize, usize), T);
    let points: Vec<(usize, usize)> =
        (0..nx).flat_map(|i| (0..ny).map(move |j| (i, j))).collect();
    let computed: Result<Vec<Cell<T>>, ExperimentError> = points
        .par_iter()
        .map(|&(i, j)| {
            let f = fig2_point(params, params.tau_d[i], params.tau_dw[j])?;
            Ok(((i, j), f))
        })
        .collect();
    let mut values = vec![vec![T::zero(); ny]; nx];
    for ((i, j), f) in computed? {
        values[i][j] = f;
    }
    let fmt = |v: T| format!("{:?}", v.to_f64().unwrap_or(f64::NAN));
    Ok(ScanResult {
        x_label: "tau_D".to_string(),
        x: params.tau_d.clone(),
        y_label: "tau_dw".to_string(),
        y: params.tau_dw.clone(),
        values,
        metadata: ScanMetadata {
            sequence: "MREV-16 [Z,Y,X][Z,-Y,X][Z,Y,-X][Z,-Y,-X]".to_string(),
            seeds: params.seeds,
            base_seed: params.base_seed,
            params: vec![
                ("phi".to_string(), fmt(params.phi)),
                ("drive_ratio".to_string(), fmt(params.drive_ratio)),
                ("delta_omega".to_string(), fmt(params.delta_omega)),
                (
                    "dt".to_string(),
                    match params.dt {
                        DtSetting::Auto { safety } => format!("auto/{}", fmt(safety)),
                        DtSetting::Fixed(dt) => format!("fixed {}", fmt(dt)),
                    },
                ),
            ],
        },
    })
}

/// Zeroth-order recoupling verification plus optional exact dynamics.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct RecouplingReport<T: Real> {
    pub n: usize,
    pub target: (usize, usize),
    pub mode: SuperWhhMode,
    pub big_t: T,
    /// Per-pair effective Hamiltonian from a unit coupling on that pair only.
    pub pair_effective: Vec<(usize, usize, OperatorSum<T>)>,
    /// Frobenius deviation of each pair from its ideal (8/9 recoupled form on
    /// the target, zero elsewhere).
    pub deviation_norms: Vec<(usize, usize, T)>,
    /// Recovered/natural coupling ratio on the isotropic form (8/9 ideally).
    pub coupling_ratio: T,
    pub dynamics: Option<RecouplingDynamics<T>>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct RecouplingDynamics<T: Real> {
    pub supercycles: usize,
    pub t_total: T,
    /// Reduced-state overlap of the target pair against the recoupled-model
    /// evolution.
    pub pair_fidelity: T,
    /// Worst spectator reduced-state infidelity against its initial state.
    pub spectator_infidelity: T,
    /// Bloch-angle equivalent of the spectator error,
    /// `2 asin(sqrt(infidelity))`.
    pub spectator_phase_error: T,
}

/// Ideal recoupled pair Hamiltonian `(8/9) d * I_k . I_l`.
pub fn recoupled_target<T: Real>(
    n: usize,
    k: usize,
    l: usize,
    d: T,
) -> Result<OperatorSum<T>, AlgebraError> {
    let mut h = OperatorSum::zero(n);
    let c = r::<T>(8.0) / r::<T>(9.0) * d;
    for letter in [Letter::X, Letter::Y, Letter::Z] {
        h.add_term(SpinWord::pair(n, (k, letter), (l, letter))?, Complex::new(c, T::zero()));
    }
    Ok(h)
}

fn unit_pair_system<T: Real>(n: usize, a: usize, b: usize) -> SpinSystem<T> {
    let mut d = vec![vec![T::zero(); n]; n];
    d[a][b] = T::one();
    d[b][a] = T::one();
    SpinSystem::new(vec![T::zero(); n], d).expect("valid template")
}

/// Verify the supercycle: target pair recoupled to `(8/9) D I.I`, every
/// other pair averaged away. Optionally runs exact dynamics on the full
/// system with uniform couplings `d` over roughly `t_total_target` seconds.
pub fn recoupling_check<T: Real>(
    n: usize,
    k: usize,
    l: usize,
    big_t: T,
    mode: SuperWhhMode,
    dynamics: Option<RecouplingDynamicsRequest<T>>,
) -> Result<RecouplingReport<T>, ExperimentError> {
    let sw = build_super_whh(n, k, l, big_t, mode, TrainSpec::Idealized)?;
    let mut pair_effective = Vec::new();
    let mut deviation_norms = Vec::new();
    for a in 0..n {
        for b in (a + 1)..n {
            let sys = unit_pair_system::<T>(n, a, b);
            let avg = average0(&sw.sequence, &build_dipolar(&sys))?;
            let ideal = if (a, b) == (k.min(l), k.max(l)) {
                recoupled_target(n, k, l, T::one())?
            } else {
                OperatorSum::zero(n)
            };
            deviation_norms.push((a, b, avg.distance(&ideal)?));
            pair_effective.push((a, b, avg));
        }
    }
    // recovered/natural ratio on the isotropic form; the template couples the
    // target pair with unit strength, so the XX coefficient is the ratio
    let xx = SpinWord::pair(n, (k, Letter::X), (l, Letter::X))?;
    let coupling_ratio = pair_effective
        .iter()
        .find(|(a, b, _)| (*a, *b) == (k.min(l), k.max(l)))
        .map(|(_, _, op)| op.coeff(&xx).re)
        .unwrap_or_else(T::zero);

    let dynamics = match dynamics {
        None => None,
        Some(req) => Some(recoupling_dynamics(n, k, l, big_t, mode, &req)?),
    };

    Ok(RecouplingReport {
        n,
        target: (k, l),
        mode,
        big_t,
        pair_effective,
        deviation_norms,
        coupling_ratio,
        dynamics,
    })
}

#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct RecouplingDynamicsRequest<T: Real> {
    /// Uniform coupling strength for every pair (rad/s).
    pub coupling: T,
    /// Evolve for the whole number of supercycles nearest this time.
    pub t_total_target: T,
    pub seed: u64,
}

pub fn recoupling_dynamics<T: Real>(
    n: usize,
    k: usize,
    l: usize,
    big_t: T,
    mode: SuperWhhMode,
    req: &RecouplingDynamicsRequest<T>,
) -> Result<RecouplingDynamics<T>, ExperimentError> {
    let sw = build_super_whh(n, k, l, big_t, mode, TrainSpec::Idealized)?;
    let t_c = sw.sequence.cycle_time();
    let supercycles = {
        let c = (req.t_total_target / t_c).round();
        c.to_usize().unwrap_or(1).max(1)
    };
    let t_total = r::<T>(supercycles as f64) * t_c;

    let d = req.coupling;
    let mut dm = vec![vec![T::zero(); n]; n];
    for a in 0..n {
        for b in 0..n {
            if a != b {
                dm[a][b] = d;
            }
        }
    }
    let system = SpinSystem::new(vec![T::zero(); n], dm)?;
    let psi0 = random_state::<T>(req.seed, n);
    let traj = exact_evolve(
        &system,
        &sw.sequence,
        &[],
        &EvolveOptions { cycles: supercycles, ..Default::default() },
        &psi0,
    )?;
    let psi = traj.final_state();

    let href = recoupled_target(n, k, l, d)?;
    let zero = OperatorSum::zero(n);
    let psi_ref = aht_evolve(&zero, &href, t_total, &psi0)?;

    let pair = [k.min(l), k.max(l)];
    let rho_pair = reduced_density(psi, &pair);
    let sig_pair = reduced_density(&psi_ref, &pair);
    let pair_fidelity = overlap_normalized(&rho_pair, &sig_pair);

    let mut worst = T::zero();
    for m in (0..n).filter(|m| *m != k && *m != l) {
        let rho = reduced_density(psi, &[m]);
        let sig = reduced_density(&psi_ref, &[m]);
        let infid = T::one() - overlap_normalized(&rho, &sig);
        if infid > worst {
            worst = infid;
        }
    }
    let phase = r::<T>(2.0) * worst.max(T::zero()).sqrt().min(T::one()).asin();
    Ok(RecouplingDynamics {
        supercycles,
        t_total,
        pair_fidelity,
        spectator_infidelity: worst,
        spectator_phase_error: phase,
    })
}

/// Selectivity guide for a bare (undecoupled) soft pulse on one of two
/// uncoupled spins.
#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct SelectivityError<T: Real> {
    /// `|sinc(pi dw / 2 w1)|` with `sinc(x) = sin(x)/x`.
    pub predicted: T,
    /// `1 - F` of the neighbor against its unperturbed evolution.
    pub simulated: T,
}

/// Drive a resonant soft pulse of the given duration on a target spin at
/// offset zero and measure the erroneous rotation of a neighbor detuned by
/// `delta_omega`. The pair is returned for comparison; no equality is
/// asserted (order-of-magnitude guide only).
pub fn selectivity_error<T: Real>(
    delta_omega: T,
    omega_rf: T,
    duration: T,
) -> Result<SelectivityError<T>, ExperimentError> {
    if omega_rf <= T::zero() {
        return Err(ExperimentError::NonPositiveOffset);
    }
    let x = T::pi() * delta_omega / (r::<T>(2.0) * omega_rf);
    let predicted = if x == T::zero() { T::one() } else { (x.sin() / x).abs() };

    let system = SpinSystem::uncoupled(vec![T::zero(), delta_omega])?;
    let seq = PulseSequence::new(vec![crate::sequence::SequenceEvent::Free { duration }]);
    let drive = SelectiveDrive {
        target: 0,
        amplitude: omega_rf,
        carrier_offset: T::zero(),
        phase: T::zero(),
        start: T::zero(),
        duration,
    };
    let psi0 = crate::propagator::StateVector::<T>::basis(2, 0);
    let traj = exact_evolve(
        &system,
        &seq,
        &[drive],
        &EvolveOptions { cycles: 1, ..Default::default() },
        &psi0,
    )?;
    let rho_nb = reduced_density(traj.final_state(), &[1]);
    // the unperturbed neighbor only accumulates phase on |0>, so its reduced
    // state is the projector it started in
    let mut reference = nalgebra::DMatrix::zeros(2, 2);
    reference[(0, 0)] = Complex::new(T::one(), T::zero());
    let simulated = T::one() - overlap_normalized(&rho_nb, &reference);
    Ok(SelectivityError { predicted, simulated })
}

/// Norms of the zeroth- and first-order average terms of a cycle, with
/// vanishing flags. "Vanishes" means below 1e-12 relative to the natural
/// scale of each order (`||h||` and `||h||^2 t_c` respectively).
#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct SymmetryReport<T: Real> {
    pub avg0_norm: T,
    pub magnus1_norm: T,
    pub avg0_vanishes: bool,
    pub magnus1_vanishes: bool,
}

pub fn symmetry_order_check<T: Real>(
    seq: &PulseSequence<T>,
    h: &OperatorSum<T>,
) -> Result<SymmetryReport<T>, ExperimentError> {
    let a0 = average0(seq, h)?.norm();
    let m1 = magnus1(seq, h)?.norm();
    let scale0 = h.norm().max(T::default_epsilon());
    let scale1 = (h.norm() * h.norm() * seq.cycle_time()).max(T::default_epsilon());
    let rel = r::<T>(1e-12);
    Ok(SymmetryReport {
        avg0_norm: a0,
        magnus1_norm: m1,
        avg0_vanishes: a0 <= rel * scale0,
        magnus1_vanishes: m1 <= rel * scale1,
    })
}
