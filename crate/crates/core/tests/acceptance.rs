//! Acceptance suite: one test per criterion, each printing a PASS line with
//! the measured numbers (run with `--nocapture` to see them).
//!
//! Two criteria assert literal reference values that direct computation
//! contradicts; those tests fail with a full explanation and are expected to
//! stay red. See the README section "Validation notes".

use std::time::Instant;

use spinaht::aht::{average0, effective_pair_coupling, magnus1, offset_vectors};
use spinaht::algebra::{
    frob, mercator_log, to_dense, unitary_exp, Axis, Letter, OperatorSum, Site, SiteRotation,
    SpinWord,
};
use spinaht::experiments::{
    fidelity_scan, fig2_point, recoupling_check, recoupling_dynamics, selectivity_error,
    DtSetting, FigTwoParams, RecouplingDynamicsRequest,
};
use spinaht::model::{build_dipolar, build_zeeman, SpinSystem};
use spinaht::scalar::c;
use spinaht::sequence::{
    build_mrev16, build_super_whh, build_whh4, expand_cycle, parse_mansfield, PulseSequence,
    SequenceEvent, SuperWhhMode, TrainSpec, WAxis,
};

type Op = OperatorSum<f64>;

const Q: f64 = std::f64::consts::FRAC_PI_2;

fn single(letter: Letter, coeff: f64) -> Op {
    Op::single(1, 0, letter, c(coeff, 0.0)).unwrap()
}

/// Small deterministic pseudo-random stream for test systems.
fn lcg(state: &mut u64) -> f64 {
    *state = state.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
    ((*state >> 11) as f64) / ((1u64 << 53) as f64)
}

#[test]
fn criterion_01_whh4_dipolar_average_exactly_zero() {
    let start = Instant::now();
    let mut rng = 0x5eed_u64;
    for n in 2..=6usize {
        for rep in 0..3 {
            let mut d = vec![vec![0.0f64; n]; n];
            for k in 0..n {
                for l in (k + 1)..n {
                    let v = 4.0 * lcg(&mut rng) - 2.0;
                    d[k][l] = v;
                    d[l][k] = v;
                }
            }
            let offsets = (0..n).map(|k| k as f64).collect();
            let sys = SpinSystem::new(offsets, d).unwrap();
            // both a dyadic and a non-dyadic interval
            for tau in [2f64.powi(-20), 1e-6] {
                let seq = build_whh4(tau).unwrap();
                let avg = average0(&seq, &build_dipolar(&sys)).unwrap();
                assert!(
                    avg.is_empty(),
                    "n={n} rep={rep} tau={tau}: residual norm {:e}",
                    avg.norm()
                );
            }
        }
    }
    let elapsed = start.elapsed();
    assert!(elapsed.as_secs_f64() < 1.0, "took {elapsed:?}");
    println!("criterion 1: PASS - WHH-4 dipolar average exactly zero up to n=6 in {elapsed:?}");
}

#[test]
fn criterion_02_offset_averages_exact() {
    let tau = 2f64.powi(-20);
    let third = 1.0 / 3.0;

    let whh = build_whh4(tau).unwrap();
    // Iz -> (Ix + Iy + Iz)/3
    let avg_z = average0(&whh, &single(Letter::Z, 1.0)).unwrap();
    let mut want = Op::zero(1);
    want.add_term("X".parse::<SpinWord>().unwrap(), c(third, 0.0));
    want.add_term("Y".parse::<SpinWord>().unwrap(), c(third, 0.0));
    want.add_term("Z".parse::<SpinWord>().unwrap(), c(third, 0.0));
    assert!(avg_z.exact_eq(&want), "got {avg_z}");
    // Ix -> (2 Ix - Iy)/3
    let avg_x = average0(&whh, &single(Letter::X, 1.0)).unwrap();
    let mut want = Op::zero(1);
    want.add_term("X".parse::<SpinWord>().unwrap(), c(2.0 * third, 0.0));
    want.add_term("Y".parse::<SpinWord>().unwrap(), c(-third, 0.0));
    assert!(avg_x.exact_eq(&want), "got {avg_x}");
    // Iy -> (Iy - 2 Iz)/3
    let avg_y = average0(&whh, &single(Letter::Y, 1.0)).unwrap();
    let mut want = Op::zero(1);
    want.add_term("Y".parse::<SpinWord>().unwrap(), c(third, 0.0));
    want.add_term("Z".parse::<SpinWord>().unwrap(), c(-2.0 * third, 0.0));
    assert!(avg_y.exact_eq(&want), "got {avg_y}");

    // MREV-16: (1/3, 2/3, 1/3) of (Iz, Ix, Iy)
    let mrev = build_mrev16(tau).unwrap();
    for (letter, factor) in [(Letter::Z, third), (Letter::X, 2.0 * third), (Letter::Y, third)] {
        let avg = average0(&mrev, &single(letter, 1.0)).unwrap();
        let want = single(letter, factor);
        assert!(avg.exact_eq(&want), "MREV {letter:?}: got {avg}");
    }
    println!("criterion 2: PASS - [Z,Y,X] and MREV-16 offset averages exact");
}

#[test]
fn criterion_03_offset_vectors_match_printed_values() {
    let tau = 2f64.powi(-20);
    let third = 1.0 / 3.0;

    let v = offset_vectors(&build_whh4(tau).unwrap()).unwrap();
    assert_eq!(v.zeta, [third, third, third]);
    assert_eq!(v.xi, [2.0 * third, -third, 0.0]);
    assert_eq!(v.eta, [0.0, third, -2.0 * third]);

    let v = offset_vectors(&build_mrev16(tau).unwrap()).unwrap();
    assert_eq!(v.zeta, [0.0, 0.0, third]);
    assert_eq!(v.xi, [2.0 * third, 0.0, 0.0]);
    assert_eq!(v.eta, [0.0, third, 0.0]);
    assert_eq!(v.zeta_dot_xi(), 0.0);
    assert_eq!(v.zeta_dot_eta(), 0.0);

    let spec = parse_mansfield("[Z,Y,X][Z,-Y,-X]").unwrap();
    let v = offset_vectors(&expand_cycle(&spec, tau).unwrap()).unwrap();
    assert_eq!(v.zeta, [0.0, 0.0, third]);
    assert_eq!(v.eta, [0.0, third, 0.0]);
    // Direct averaging (cross-checked against dense conjugation in the
    // oracle tests, and forced by the per-bracket decomposition that also
    // yields the MREV-16 value above) gives xi = (2,-1,0)/3:
    assert_eq!(v.xi, [2.0 * third, -third, 0.0]);
    // The reference text prints (2,-1,0)/6 for this sequence. That value is
    // arithmetically inconsistent with its own MREV-16 average (2/3) Ix,
    // since the two brackets contribute (4,-2,0)/6 each and MREV-16 is the
    // average of four such brackets. The literal assertion is kept as
    // specified and documents the discrepancy:
    let printed_xi = [2.0 / 6.0, -1.0 / 6.0, 0.0];
    assert_eq!(
        v.xi, printed_xi,
        "computed xi = (2,-1,0)/3 (dense-oracle verified); the printed \
         (2,-1,0)/6 cannot be reproduced by any pi/2-pulse realization of \
         [Z,Y,X][Z,-Y,-X] - see README 'Validation notes'"
    );
    println!("criterion 3: PASS");
}

#[test]
fn criterion_04_table_of_pair_couplings() {
    let start = Instant::now();
    let d = 1.0f64;
    let axes = [WAxis::NoPulse, WAxis::X, WAxis::Y, WAxis::Z];

    let h1 = {
        let mut h = Op::zero(2);
        h.add_term("XX".parse().unwrap(), c(-4.0 / 3.0 * d, 0.0));
        h.add_term("YY".parse().unwrap(), c(-2.0 / 3.0 * d, 0.0));
        h
    };
    let h2 = {
        let mut h = Op::zero(2);
        h.add_term("ZZ".parse().unwrap(), c(-4.0 / 3.0 * d, 0.0));
        h.add_term("YY".parse().unwrap(), c(-2.0 / 3.0 * d, 0.0));
        h
    };
    let h3 = {
        let mut h = Op::zero(2);
        for w in ["XX", "YY", "ZZ"] {
            h.add_term(w.parse().unwrap(), c(4.0 / 3.0 * d, 0.0));
        }
        h
    };
    let zero = Op::zero(2);
    let table = |a: WAxis, b: WAxis| -> &Op {
        use WAxis::*;
        match (a, b) {
            (NoPulse, X) | (X, NoPulse) | (Y, Z) | (Z, Y) => &h1,
            (NoPulse, Y) | (Y, NoPulse) | (X, Z) | (Z, X) => &h2,
            (NoPulse, Z) | (Z, NoPulse) | (X, Y) | (Y, X) => &h3,
            _ => &zero,
        }
    };
    for a in axes {
        for b in axes {
            let got = effective_pair_coupling(a, b, d).unwrap();
            assert!(
                got.exact_eq(table(a, b)),
                "W({}) W({}): got {got}",
                a.label(),
                b.label()
            );
        }
    }
    // the three nontrivial forms cancel
    assert!(h1.add(&h2).unwrap().add(&h3).unwrap().is_empty());
    let elapsed = start.elapsed();
    assert!(elapsed.as_secs_f64() < 1.0, "took {elapsed:?}");
    println!("criterion 4: PASS - all 16 pair-coupling entries reproduced in {elapsed:?}");
}

#[test]
fn criterion_05_super_whh_recoupling_exact() {
    for n in [3usize, 4] {
        for mode in [SuperWhhMode::Plain, SuperWhhMode::Symmetrized] {
            let (k, l) = (0usize, 1usize);
            let report = recoupling_check(n, k, l, 0.5f64, mode, None).unwrap();
            for (a, b, dev) in &report.deviation_norms {
                assert_eq!(
                    *dev, 0.0,
                    "n={n} {mode:?}: pair ({a},{b}) deviates by {dev:e}"
                );
            }
            assert_eq!(report.coupling_ratio, 8.0 / 9.0, "n={n} {mode:?}");
        }
    }
    println!("criterion 5: PASS - (8/9) recoupling with exactly decoupled spectators, n=3 and 4");
}

#[test]
fn criterion_06_magnus_first_order() {
    // symmetric cycles: identically zero
    let whh = build_whh4(0.25f64).unwrap();
    let sys2 = SpinSystem::new(vec![0.0, 1.0], vec![vec![0.0, 1.0], vec![1.0, 0.0]]).unwrap();
    let m1 = magnus1(&whh, &build_dipolar(&sys2)).unwrap();
    assert!(m1.is_empty(), "WHH-4 first order: {:e}", m1.norm());

    let sw = build_super_whh(3, 0, 1, 0.5f64, SuperWhhMode::Symmetrized, TrainSpec::Idealized)
        .unwrap();
    let mut d3 = vec![vec![1.0f64; 3]; 3];
    for (i, row) in d3.iter_mut().enumerate() {
        row[i] = 0.0;
    }
    let sys3 = SpinSystem::new(vec![0.0, 1.0, 2.0], d3).unwrap();
    let hd3 = build_dipolar(&sys3);
    let m1 = magnus1(&sw.sequence, &hd3).unwrap();
    let rel = m1.norm() / (hd3.norm() * hd3.norm() * sw.sequence.cycle_time());
    assert!(rel <= 1e-12, "symmetrized supercycle first order: rel {rel:e}");

    // asymmetric two-interval cycle vs the Richardson-extrapolated matrix-log
    // oracle, n = 2
    let tau = 1e-3f64;
    let seq = PulseSequence::new(vec![
        SequenceEvent::Free { duration: tau },
        SequenceEvent::Delta(SiteRotation::about_coord(Site::All, Axis::X, Q)),
        SequenceEvent::Free { duration: tau },
        SequenceEvent::Delta(SiteRotation::about_coord(Site::All, Axis::X, -Q)),
    ]);
    let sys = SpinSystem::new(vec![3.0, -2.0], vec![vec![0.0, 1.0], vec![1.0, 0.0]]).unwrap();
    let h = build_zeeman(&sys).add(&build_dipolar(&sys)).unwrap();
    let m1 = magnus1(&seq, &h).unwrap();
    assert!(!m1.is_empty());

    let h1 = to_dense(&h).unwrap();
    let h2 = to_dense(&h.rotate_conj(&SiteRotation::about_coord(Site::All, Axis::X, Q)).unwrap())
        .unwrap();
    let h0 = (&h1 + &h2) * c(0.5, 0.0);
    let extract = |tt: f64| {
        let u = unitary_exp(&h2, tt) * unitary_exp(&h1, tt);
        mercator_log(&u).unwrap() * c(0.0, 1.0 / (2.0 * tt)) - &h0
    };
    let (m_1, m_2, m_4) = (extract(tau), extract(tau / 2.0), extract(tau / 4.0));
    let y1 = &m_2 * c(4.0, 0.0) - &m_1;
    let y2 = &m_4 * c(4.0, 0.0) - &m_2;
    let oracle = (y2 * c(8.0, 0.0) - y1) * c(1.0 / 3.0, 0.0);
    let rel = frob(&(oracle - to_dense(&m1).unwrap())) / m1.norm();
    assert!(rel <= 1e-8, "log-oracle deviation {rel:e}");
    println!("criterion 6: PASS - first-order term vanishes on symmetric cycles; asymmetric cycle matches the propagator-log oracle to {rel:e}");
}

#[test]
fn criterion_07_fidelity_map() {
    let start = Instant::now();
    let params = FigTwoParams::<f64>::default();
    // run on a 4-thread pool as stipulated
    let pool = rayon::ThreadPoolBuilder::new().num_threads(4).build().unwrap();
    let scan = pool.install(|| fidelity_scan(&params)).unwrap();
    let elapsed = start.elapsed();

    assert!(scan.all_finite());
    let corner = scan.values[0][0];
    assert!(corner >= 0.999, "corner fidelity {corner}");

    // non-increasing along each axis within 1e-3 ripple
    let nx = scan.x.len();
    let ny = scan.y.len();
    for i in 0..nx {
        for j in 0..ny - 1 {
            assert!(
                scan.values[i][j + 1] <= scan.values[i][j] + 1e-3,
                "ripple along tau_dw at ({i},{j}): {} -> {}",
                scan.values[i][j],
                scan.values[i][j + 1]
            );
        }
    }
    for j in 0..ny {
        for i in 0..nx - 1 {
            assert!(
                scan.values[i + 1][j] <= scan.values[i][j] + 1e-3,
                "ripple along tau_D at ({i},{j}): {} -> {}",
                scan.values[i][j],
                scan.values[i + 1][j]
            );
        }
    }
    assert!(elapsed.as_secs_f64() < 600.0, "scan took {elapsed:?}");

    // dt-halving gate at the corner
    let tau = scan.y[0] / params.delta_omega;
    let gate = {
        let mut p = params.clone();
        p.seeds = 3;
        let f1 = fig2_point(&p, scan.x[0], scan.y[0]).unwrap();
        p.dt = DtSetting::Fixed(tau / 2.0);
        let f2 = fig2_point(&p, scan.x[0], scan.y[0]).unwrap();
        (f1 - f2).abs()
    };
    assert!(gate < 1e-6, "dt gate {gate:e}");
    println!(
        "criterion 7: PASS - corner {corner:.6}, monotone within 1e-3, dt gate {gate:.2e}, {elapsed:?} on 4 threads"
    );
}

#[test]
fn criterion_08_recoupled_dynamics() {
    let d = 1.0f64;
    let big_t = 1e-3 / d;
    let req = RecouplingDynamicsRequest { coupling: d, t_total_target: 1.0 / d, seed: 4242 };
    let dyn1 = recoupling_dynamics(3, 0, 1, big_t, SuperWhhMode::Symmetrized, &req).unwrap();
    assert!(
        dyn1.pair_fidelity >= 0.99,
        "pair fidelity {} over {} supercycles",
        dyn1.pair_fidelity,
        dyn1.supercycles
    );
    let dyn2 =
        recoupling_dynamics(3, 0, 1, big_t / 2.0, SuperWhhMode::Symmetrized, &req).unwrap();
    let ratio = dyn1.spectator_phase_error / dyn2.spectator_phase_error;
    assert!(
        (3.0..=5.0).contains(&ratio),
        "spectator phase-error ratio {ratio} (phase errors {:e} -> {:e})",
        dyn1.spectator_phase_error,
        dyn2.spectator_phase_error
    );
    println!(
        "criterion 8: PASS - pair fidelity {:.6}, spectator phase error halving ratio {ratio:.3}",
        dyn1.pair_fidelity
    );
}

#[test]
fn criterion_09_selectivity_guide() {
    let w1 = 1e3f64;
    let t_pi = std::f64::consts::PI / w1;
    let mut rows = Vec::new();
    for r in [10.0f64, 30.0, 100.0] {
        let s = selectivity_error(r * w1, w1, t_pi).unwrap();
        rows.push((r, s.predicted, s.simulated));
    }
    for (r, predicted, simulated) in &rows {
        println!(
            "  dw/w1 = {r:>5}: predicted |sinc| = {predicted:.3e}, simulated 1-F = {simulated:.3e}"
        );
    }
    for (r, predicted, simulated) in rows {
        let ratio = simulated / predicted;
        assert!(
            (0.1..=10.0).contains(&ratio),
            "dw/w1 = {r}: simulated {simulated:.3e} is not within a factor of 10 of \
             predicted {predicted:.3e}. At these ratios pi*dw/(2 w1) is an exact \
             multiple of pi, so sin(x)/x vanishes while the integer-ratio echo \
             leaves a residual error ~ (pi/(4 r^2))^2; no order-of-magnitude match \
             is possible at sinc zeros - see README 'Validation notes'"
        );
    }
    println!("criterion 9: PASS");
}
