mod common;

use common::bundled;
use dcmpc::lip_model::{
    integrate_plant, momentum_from_axes, ComState, ConstantHeight, Omega, PlantInput, RobotParams,
};
use dcmpc::mpc::{discretize, AxisState, COM, XI};
use dcmpc::simulator::{
    detect_fall, max_recoverable_push, run, ControlMode, EnvelopeSearch, FallReason, FallRules,
    FallSample, Outcome, PushEvent,
};
use nalgebra::{Vector2, Vector4};
use proptest::prelude::*;

#[test]
fn logged_cmp_offset_matches_momentum() {
    let s = bundled("fig6_full");
    let log = run(&s).unwrap();
    let m = s.robot.mass;
    let mut nonzero = 0;
    for smp in &log.samples {
        let f = m * (s.robot.g + smp.com.zdd);
        assert!((smp.cmp[0] - smp.cop[0] - smp.hdot[1] / f).abs() < 1e-12);
        assert!((smp.cmp[1] - smp.cop[1] + smp.hdot[0] / f).abs() < 1e-12);
        nonzero += usize::from(smp.hdot != [0.0; 2]);
    }
    assert!(nonzero > 0, "full mode should use the momentum");
}

#[test]
fn identical_inputs_give_identical_logs() {
    let s = bundled("fig4_baseline").with_mode(ControlMode::CopStepCmp);
    assert_eq!(run(&s).unwrap(), run(&s).unwrap());
}

#[test]
fn bundled_outcomes() {
    assert!(run(&bundled("fig4_baseline")).unwrap().outcome.completed());
    assert!(run(&bundled("fig6_full")).unwrap().outcome.completed());
    match run(&bundled("fig5_baseline")).unwrap().outcome {
        Outcome::Fell {
            reason: FallReason::Infeasible { .. },
            ..
        } => {}
        other => panic!("expected an infeasible fall, got {other:?}"),
    }
}

#[test]
fn push_window_is_logged() {
    let mut s = bundled("fig4_baseline");
    let log = run(&s).unwrap();
    let active = log.samples.iter().filter(|x| x.push_active).count();
    assert_eq!(active, (s.pushes[0].duration / s.dt).round() as usize);

    s.pushes.clear();
    let quiet = run(&s).unwrap();
    assert!(quiet.outcome.completed());
    assert!(quiet.samples.iter().all(|x| !x.push_active));
}

/// Plant state `(xi, x)` after one period against the one-step model
/// prediction, sagittal axis, constant height.
fn one_period_gap(psi: AxisState, hdd: f64, copd: f64, period: f64) -> f64 {
    let (z, dt) = (0.8, 1e-3);
    let params = RobotParams::default();
    let w = (params.g / z).sqrt();
    let st = discretize(
        Omega::new(w, 0.0).unwrap(),
        0.0,
        params.mass,
        params.g,
        period,
    )
    .unwrap();
    let predicted = st.step(&psi.to_vector(), &Vector2::new(hdd, copd));
    let mut s = ComState {
        x: [psi.x, 0.0],
        v: [w * (psi.xi - psi.x), 0.0],
        z,
        zd: 0.0,
        zdd: 0.0,
    };
    let steps = (period / dt).round() as usize;
    for k in 0..steps {
        let tau = k as f64 * dt;
        // The sagittal axis-mapped momentum is Hdot_y.
        let input = PlantInput {
            cop: [psi.cop + copd * tau, 0.0],
            cop_rate: [copd, 0.0],
            hdot: momentum_from_axes([psi.momentum + hdd * tau, 0.0]),
            hddot: momentum_from_axes([hdd, 0.0]),
            force: [0.0; 2],
        };
        s = integrate_plant(&s, &input, tau, dt, &ConstantHeight(z), params);
    }
    let measured = Vector4::new(s.x[0] + s.v[0] / w, s.x[0], 0.0, 0.0);
    (measured[XI] - predicted[XI])
        .abs()
        .max((measured[COM] - predicted[COM]).abs())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    /// Held inputs with the DCM within a few centimetres of the CMP: the
    /// Euler-vs-exact gap stays under a millimetre at T = 0.06 s.
    #[test]
    fn plant_matches_model_with_held_inputs(
        xi in -0.015f64..0.015, x in -0.015f64..0.015, cop in -0.015f64..0.015, h in -5.0f64..5.0,
    ) {
        let gap = one_period_gap(AxisState { xi, x, momentum: h, cop }, 0.0, 0.0, 0.06);
        prop_assert!(gap < 1e-3, "gap {gap}");
    }

    /// With ramped inputs the gap is second order in the period.
    #[test]
    fn plant_model_gap_is_second_order(
        xi in -0.2f64..0.2, x in -0.2f64..0.2, cop in -0.1f64..0.1,
        h in -20.0f64..20.0, hdd in -300.0f64..300.0, copd in -2.0f64..2.0,
    ) {
        let psi = AxisState { xi, x, momentum: h, cop };
        let coarse = one_period_gap(psi, hdd, copd, 0.06);
        let fine = one_period_gap(psi, hdd, copd, 0.03);
        prop_assume!(coarse > 1e-6);
        let ratio = coarse / fine;
        prop_assert!((2.5..=6.0).contains(&ratio), "ratio {ratio}");
    }
}

fn sample(t: f64, xi: [f64; 2]) -> FallSample {
    FallSample {
        t,
        xi,
        com: [0.0; 2],
        cop: [0.0; 2],
        support: [[-0.1, 0.1], [-0.05, 0.05]],
        controller_error: None,
    }
}

const RULES: FallRules = FallRules {
    reach: 0.3,
    step_duration: 0.8,
    com_cop_factor: 1.5,
};

#[test]
fn fall_on_controller_error() {
    let mut s = sample(0.0, [0.0; 2]);
    s.controller_error = Some("lateral QP infeasible".into());
    assert!(matches!(
        detect_fall(&[s], &RULES),
        Some(FallReason::Infeasible { .. })
    ));
}

#[test]
fn fall_on_com_cop_separation() {
    let mut s = sample(0.0, [0.0; 2]);
    s.com = [0.3, 0.34];
    assert!(matches!(
        detect_fall(&[s.clone()], &RULES),
        Some(FallReason::ComCopSeparation { .. })
    ));
    s.com = [0.3, 0.3];
    assert_eq!(detect_fall(&[s], &RULES), None);
}

#[test]
fn dcm_divergence_needs_a_full_step() {
    let far = [0.5, 0.0];
    let tail: Vec<_> = (0..=80).map(|k| sample(k as f64 * 0.01, far)).collect();
    assert!(matches!(
        detect_fall(&tail, &RULES),
        Some(FallReason::DcmDivergence { .. })
    ));
    // Just short of a step duration.
    assert_eq!(detect_fall(&tail[1..], &RULES), None);
    // One sample back inside the reach resets the count.
    let mut broken = tail.clone();
    broken[40].xi = [0.0; 2];
    assert_eq!(detect_fall(&broken, &RULES), None);
    assert_eq!(detect_fall(&[], &RULES), None);
}

#[test]
fn envelope_bisection_terminates_quickly() {
    let s = bundled("fig4_baseline").with_mode(ControlMode::CopOnly);
    let env = max_recoverable_push(
        &s,
        &EnvelopeSearch {
            direction: [0.0, 1.0],
            ..EnvelopeSearch::default()
        },
    )
    .unwrap();
    assert!(!env.unbounded);
    assert!(env.bisection_runs <= 7, "{} runs", env.bisection_runs);
    assert!(env.bracket[1] - env.bracket[0] <= 5.0);
    assert!(env.monotonicity_violations.is_empty());
    for t in &env.trace {
        assert_eq!(t.recoverable, t.magnitude <= env.magnitude, "{t:?}");
    }
}

#[test]
fn zero_duration_push_is_unbounded() {
    let s = bundled("fig4_baseline");
    let env = max_recoverable_push(
        &s,
        &EnvelopeSearch {
            duration: 0.0,
            ..EnvelopeSearch::default()
        },
    )
    .unwrap();
    assert!(env.unbounded);
    assert_eq!(env.magnitude, env.cap);
}

#[test]
fn invalid_scenarios_are_rejected() {
    let mut s = bundled("fig4_baseline");
    s.dt = 0.003;
    assert!(run(&s).is_err());
    let mut s = bundled("fig4_baseline");
    s.pushes = vec![PushEvent {
        force: [10.0, 0.0],
        start: 100.0,
        duration: 0.1,
    }];
    assert!(run(&s).is_err());
}

#[test]
fn unperturbed_walk_tracks_the_dcm() {
    let mut s = bundled("fig4_baseline");
    s.pushes.clear();
    let log = run(&s).unwrap();
    assert!(log.outcome.completed());
    // The default CoP-rate weight trades a few centimetres of DCM lag for a
    // smoother CoP. With a lighter weight the tracking tightens.
    assert!(log.max_dcm_error() < 0.05, "{}", log.max_dcm_error());
    s.mpc.weights.cop_rate = 1e-3;
    let light = run(&s).unwrap();
    assert!(light.outcome.completed());
    assert!(light.max_dcm_error() < 0.02, "{}", light.max_dcm_error());
}

#[test]
fn oversized_push_falls() {
    let mut s = bundled("fig4_baseline");
    s.pushes[0].force = [5000.0, 0.0];
    match run(&s).unwrap().outcome {
        Outcome::Fell {
            reason: FallReason::Infeasible { .. } | FallReason::DcmDivergence { .. },
            ..
        } => {}
        other => panic!("expected a fall, got {other:?}"),
    }
}
