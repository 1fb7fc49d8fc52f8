//! Propagator behavior: step-size convergence, the idealized pi-train limit,
//! scaled offset precession, and drive handling.

use spinaht::aht::average0;
use spinaht::algebra::{to_dense, unitary_exp};
use spinaht::experiments::{fig2_point, DtSetting, FigTwoParams};
use spinaht::model::{build_dipolar, build_zeeman, SelectiveDrive, SpinSystem};
use spinaht::propagator::{
    aht_evolve, exact_evolve, fidelity, random_state, DtPolicy, EvolveOptions, RecordPolicy,
    StateVector,
};
use spinaht::sequence::{
    build_mrev16, build_w_subcycle, PulseSequence, SequenceEvent, TrainSpec, WAxis,
};

#[test]
fn dt_halving_converges_quadratically() {
    // a harsh grid point so the midpoint error is resolvable
    let params = FigTwoParams::<f64>::default();
    let tau_d = 1e-2;
    let tau_dw = 3e-2;
    let tau = tau_dw / params.delta_omega;
    let run = |div: f64| {
        let mut p = params.clone();
        p.seeds = 1;
        p.dt = DtSetting::Fixed(tau / div);
        fig2_point(&p, tau_d, tau_dw).unwrap()
    };
    let f1 = run(1.0);
    let f2 = run(2.0);
    let f4 = run(4.0);
    let d12 = (f1 - f2).abs();
    let d24 = (f2 - f4).abs();
    assert!(d12 < 1e-6, "dt convergence gate: {d12:e}");
    assert!(d24 < d12, "halving dt must reduce the defect");
    let order = d12 / d24.max(1e-300);
    assert!(order > 2.0, "midpoint rule should converge at second order, got ratio {order}");
}

#[test]
fn idealized_w_subcycle_is_pi_train_limit() {
    // explicit trains approach the analytically suppressed Zeeman evolution
    // monotonically as the spacing shrinks
    let n = 2;
    let big_t = 1e-3f64;
    let dw = 1e4;
    let sys = SpinSystem::new(
        vec![dw, -0.37 * dw],
        vec![vec![0.0, 55.0], vec![55.0, 0.0]],
    )
    .unwrap();
    let psi0 = random_state::<f64>(11, n);
    let cycles = 5;
    let ideal = {
        let seq = build_w_subcycle(n, 0, WAxis::X, big_t, TrainSpec::Idealized).unwrap();
        assert!(seq.zeeman_suppressed());
        exact_evolve(&sys, &seq, &[], &EvolveOptions { cycles, ..Default::default() }, &psi0)
            .unwrap()
    };
    let mut last = -1.0f64;
    for m in [4.0, 8.0, 16.0] {
        let seq =
            build_w_subcycle(n, 0, WAxis::X, big_t, TrainSpec::Spacing(big_t / m)).unwrap();
        assert!(!seq.zeeman_suppressed());
        let traj = exact_evolve(
            &sys,
            &seq,
            &[],
            &EvolveOptions { cycles, ..Default::default() },
            &psi0,
        )
        .unwrap();
        let f = fidelity(ideal.final_state(), traj.final_state()).unwrap();
        assert!(f > last, "train fidelity must increase as spacing shrinks ({f} after {last})");
        last = f;
    }
    assert!(last > 0.999, "finest train should be close to the idealized limit, got {last}");
}

#[test]
fn mrev16_offsets_precess_at_one_third_rate() {
    let dw = 1e5f64;
    let tau = 1e-9;
    let sys = SpinSystem::uncoupled(vec![dw]).unwrap();
    let seq = build_mrev16(tau).unwrap();
    let cycles = 1000;
    let t = seq.cycle_time() * cycles as f64;
    let psi0 = random_state::<f64>(3, 1);
    let traj = exact_evolve(
        &sys,
        &seq,
        &[],
        &EvolveOptions { cycles, ..Default::default() },
        &psi0,
    )
    .unwrap();
    let hz_bar = average0(&seq, &build_zeeman(&sys)).unwrap();
    let zero = spinaht::algebra::OperatorSum::zero(1);
    // scaled prediction tracks the exact evolution...
    let scaled = aht_evolve(&hz_bar, &zero, t, &psi0).unwrap();
    let f_scaled = fidelity(&scaled, traj.final_state()).unwrap();
    assert!(f_scaled > 0.9999, "scaled offset prediction off: {f_scaled}");
    // ...and clearly beats the bare-rate prediction
    let bare = aht_evolve(&build_zeeman(&sys), &zero, t, &psi0).unwrap();
    let f_bare = fidelity(&bare, traj.final_state()).unwrap();
    assert!(f_scaled > f_bare + 0.1, "scaled {f_scaled} vs bare {f_bare}");
}

#[test]
fn inline_drive_window_matches_drive_list() {
    let dw = 1e4f64;
    let sys = SpinSystem::uncoupled(vec![dw, 0.0]).unwrap();
    let drive = SelectiveDrive {
        target: 0,
        amplitude: 200.0,
        carrier_offset: dw / 3.0,
        phase: 0.4,
        start: 0.0,
        duration: 1e-3,
    };
    let psi0 = random_state::<f64>(21, 2);
    let free = SequenceEvent::Free { duration: 1e-3 };
    let seq_plain = PulseSequence::new(vec![free.clone()]);
    let seq_inline = PulseSequence::new(vec![
        SequenceEvent::DriveWindow(drive.clone()),
        free,
    ]);
    let opts = EvolveOptions { cycles: 1, ..Default::default() };
    let a = exact_evolve(&sys, &seq_plain, std::slice::from_ref(&drive), &opts, &psi0).unwrap();
    let b = exact_evolve(&sys, &seq_inline, &[], &opts, &psi0).unwrap();
    assert!((fidelity(a.final_state(), b.final_state()).unwrap() - 1.0).abs() < 1e-12);
}

#[test]
fn constant_drive_step_matches_direct_exponential() {
    // frozen drive (dw' = 0, phi = 0): the stepped propagator must match the
    // exponential of the assembled static + drive operator
    let sys = SpinSystem::new(
        vec![300.0, -150.0],
        vec![vec![0.0, 40.0], vec![40.0, 0.0]],
    )
    .unwrap();
    let t = 2e-3f64;
    let drive = SelectiveDrive {
        target: 1,
        amplitude: 70.0,
        carrier_offset: 0.0,
        phase: 0.0,
        start: 0.0,
        duration: t,
    };
    let seq = PulseSequence::new(vec![SequenceEvent::Free { duration: t }]);
    let psi0 = random_state::<f64>(5, 2);
    let traj = exact_evolve(
        &sys,
        &seq,
        std::slice::from_ref(&drive),
        &EvolveOptions { cycles: 1, ..Default::default() },
        &psi0,
    )
    .unwrap();
    let h = build_zeeman(&sys)
        .add(&build_dipolar(&sys))
        .unwrap()
        .add(&spinaht::model::drive_hamiltonian(&drive, &sys, 0.0))
        .unwrap();
    let u = unitary_exp(&to_dense(&h).unwrap(), t);
    let psi_direct = StateVector::new(u * psi0.amplitudes()).unwrap();
    assert!((fidelity(&psi_direct, traj.final_state()).unwrap() - 1.0).abs() < 1e-10);
}

#[test]
fn norm_preserved_over_long_runs() {
    let params = FigTwoParams::<f64>::default();
    // mid-grid point with a few hundred thousand steps
    let tau_d = 1e-3;
    let tau_dw = 3e-3;
    let mut p = params.clone();
    p.seeds = 1;
    let _ = fig2_point(&p, tau_d, tau_dw).unwrap();
    // direct check on the trajectory drift
    let dw = p.delta_omega;
    let tau = tau_dw / dw;
    let sys = SpinSystem::new(
        vec![dw, 0.0],
        vec![vec![0.0, tau_d / tau], vec![tau_d / tau, 0.0]],
    )
    .unwrap();
    let seq = build_mrev16(tau).unwrap();
    let drive = SelectiveDrive {
        target: 0,
        amplitude: dw / 100.0,
        carrier_offset: dw / 3.0,
        phase: 0.7,
        start: 0.0,
        duration: 1.0,
    };
    let cycles = 8000;
    let psi0 = random_state::<f64>(9, 2);
    let traj = exact_evolve(
        &sys,
        &seq,
        &[drive],
        &EvolveOptions { cycles, dt: DtPolicy::default(), record: RecordPolicy::FinalOnly },
        &psi0,
    )
    .unwrap();
    assert!(traj.max_norm_drift < 1e-10, "norm drift {:e}", traj.max_norm_drift);
    assert!((traj.final_state().norm() - 1.0).abs() < 1e-10);
}

#[test]
fn stroboscopic_sampling_times_increase() {
    let sys = SpinSystem::uncoupled(vec![100.0]).unwrap();
    let seq = PulseSequence::new(vec![SequenceEvent::Free { duration: 1e-3f64 }]);
    let psi0 = random_state::<f64>(2, 1);
    let traj = exact_evolve(
        &sys,
        &seq,
        &[],
        &EvolveOptions { cycles: 5, record: RecordPolicy::Stroboscopic, ..Default::default() },
        &psi0,
    )
    .unwrap();
    assert_eq!(traj.samples.len(), 6);
    for w in traj.samples.windows(2) {
        assert!(w[1].0 > w[0].0);
    }
}

#[test]
fn closed_cycle_with_zero_coupling_is_scaled_offset_evolution() {
    // tiny tau*dw: stroboscopic evolution reduces to the averaged offset
    // rotation to 1e-10
    let dw = 1e5f64;
    let tau = 1e-11;
    let sys = SpinSystem::uncoupled(vec![dw]).unwrap();
    let seq = build_mrev16(tau).unwrap();
    let cycles = 10;
    let psi0 = random_state::<f64>(17, 1);
    let traj = exact_evolve(
        &sys,
        &seq,
        &[],
        &EvolveOptions { cycles, record: RecordPolicy::Stroboscopic, ..Default::default() },
        &psi0,
    )
    .unwrap();
    let hz_bar = average0(&seq, &build_zeeman(&sys)).unwrap();
    let zero = spinaht::algebra::OperatorSum::zero(1);
    for (t, state) in &traj.samples {
        let pred = aht_evolve(&hz_bar, &zero, *t, &psi0).unwrap();
        assert!((fidelity(&pred, state).unwrap() - 1.0).abs() < 1e-10);
    }
}

#[test]
fn bad_drives_rejected() {
    use spinaht::propagator::PropagatorError;
    let sys = SpinSystem::uncoupled(vec![1e5, 0.0]).unwrap();
    let seq = PulseSequence::new(vec![SequenceEvent::Free { duration: 1e-3f64 }]);
    let psi0 = random_state::<f64>(1, 2);
    let opts = EvolveOptions { cycles: 1, ..Default::default() };
    let bad_amp = SelectiveDrive {
        target: 0, amplitude: -1.0, carrier_offset: 0.0, phase: 0.0, start: 0.0, duration: 1.0,
    };
    assert!(matches!(
        exact_evolve(&sys, &seq, &[bad_amp], &opts, &psi0),
        Err(PropagatorError::BadDrive)
    ));
    let bad_target = SelectiveDrive {
        target: 5, amplitude: 1.0, carrier_offset: 0.0, phase: 0.0, start: 0.0, duration: 1.0,
    };
    assert!(exact_evolve(&sys, &seq, &[bad_target], &opts, &psi0).is_err());
}
