use dcmpc::gait_plan::{build_vertical_profile, HeightCurve};
use dcmpc::lip_model::{
    cmp_from_cop, cmp_offset, dcm_rate, momentum_from_axes, momentum_to_axes, natural_frequency,
    vrp_from_cmp, Dcm, Omega, VerticalMotion, GRAVITY, OMEGA_MIN,
};
use dcmpc::mpc::{condense, discretize, StageMatrices, COM, COP, MOMENTUM, XI};
use nalgebra::{DVector, Vector2, Vector4};
use proptest::prelude::*;

fn stage() -> impl Strategy<Value = StageMatrices> {
    (2.5f64..4.5, -3.0f64..3.0, -2.0f64..2.0, 0.01f64..0.1).prop_map(|(w, wd, zdd, t)| {
        discretize(Omega::new(w, wd).unwrap(), zdd, 90.0, GRAVITY, t).unwrap()
    })
}

proptest! {
    #[test]
    fn condensation_matches_recursion(
        stages in prop::collection::vec(stage(), 1..=20),
        psi0 in prop::array::uniform4(-1.0f64..1.0),
        seed in prop::collection::vec(-5.0f64..5.0, 40),
    ) {
        let n = stages.len();
        let cs = condense(&stages);
        let psi0 = Vector4::from(psi0);
        let u = DVector::from_fn(2 * n, |i, _| seed[i]);
        let stacked = cs.predict(&psi0, &u);
        let mut psi = psi0;
        for (j, st) in stages.iter().enumerate() {
            psi = st.step(&psi, &Vector2::new(u[2 * j], u[2 * j + 1]));
            for c in 0..4 {
                prop_assert!((stacked[4 * j + c] - psi[c]).abs() <= 1e-12 * psi[c].abs().max(1.0));
            }
        }
    }

    #[test]
    fn euler_step_matches_continuous_rates(
        w in 2.5f64..4.5, wd in -3.0f64..3.0, zdd in -2.0f64..2.0,
        psi in prop::array::uniform4(-1.0f64..1.0),
        u in prop::array::uniform2(-5.0f64..5.0),
    ) {
        let t = 1e-2;
        let mass = 90.0;
        let om = Omega::new(w, wd).unwrap();
        let st = discretize(om, zdd, mass, GRAVITY, t).unwrap();
        let next = st.step(&Vector4::from(psi), &Vector2::from(u));
        let cmp = psi[COP] + cmp_offset(psi[MOMENTUM], mass, zdd, GRAVITY).unwrap();
        let xi_rate = dcm_rate(&Dcm { xi: [psi[XI], 0.0], z: None }, &[cmp, 0.0], om)[0];
        prop_assert!((next[XI] - (psi[XI] + t * xi_rate)).abs() < 1e-12);
        prop_assert!((next[COM] - (psi[COM] + t * w * (psi[XI] - psi[COM]))).abs() < 1e-12);
        prop_assert!((next[MOMENTUM] - (psi[MOMENTUM] + t * u[0])).abs() < 1e-12);
        prop_assert!((next[COP] - (psi[COP] + t * u[1])).abs() < 1e-12);
    }

    #[test]
    fn cmp_offset_matches_momentum(
        cop in prop::array::uniform2(-1.0f64..1.0),
        hdot in prop::array::uniform2(-100.0f64..100.0),
        zdd in -3.0f64..3.0,
    ) {
        let mass = 60.0;
        let cmp = cmp_from_cop(cop, hdot, mass, zdd, GRAVITY).unwrap();
        let f = mass * (GRAVITY + zdd);
        // Moment balance about the CMP: the CoP offset times the support force equals Hdot.
        prop_assert!(((cmp[0] - cop[0]) * f - hdot[1]).abs() < 1e-9);
        prop_assert!(((cmp[1] - cop[1]) * f + hdot[0]).abs() < 1e-9);
        let axes = momentum_to_axes(hdot);
        prop_assert_eq!(momentum_from_axes(axes), hdot);
        for a in 0..2 {
            let off = cmp_offset(axes[a], mass, zdd, GRAVITY).unwrap();
            prop_assert!((cop[a] + off - cmp[a]).abs() < 1e-12);
        }
    }
}

#[test]
fn constant_height_has_lipm_frequency() {
    let w = natural_frequency(0.8, GRAVITY).unwrap();
    assert!((w.omega - (GRAVITY / 0.8f64).sqrt()).abs() < 1e-15);
    assert_eq!(w.omega_dot, 0.0);
    assert!((w.divergence_rate() - w.omega).abs() < 1e-15);
    let vrp = vrp_from_cmp([0.1, 0.2], w, GRAVITY).unwrap();
    assert!((vrp[2] - 0.8).abs() < 1e-12);
}

#[test]
fn frequency_below_floor_is_rejected() {
    assert!(Omega::new(OMEGA_MIN * 0.5, 0.0).is_err());
    assert!(Omega::new(3.0, f64::NAN).is_err());
    assert!(natural_frequency(-0.1, GRAVITY).is_err());
}

#[test]
fn free_fall_is_rejected() {
    assert!(cmp_from_cop([0.0; 2], [1.0, 0.0], 60.0, -GRAVITY, GRAVITY).is_err());
    assert!(discretize(
        Omega::new(3.0, 0.0).unwrap(),
        -GRAVITY - 1.0,
        60.0,
        GRAVITY,
        0.05
    )
    .is_err());
}

#[test]
fn height_curve_hits_waypoints_with_zero_slope() {
    let curve = HeightCurve::new(vec![(0.0, 0.75), (2.0, 0.75), (4.0, 0.9), (6.0, 0.9)]).unwrap();
    for (t, z) in [(0.0, 0.75), (2.0, 0.75), (4.0, 0.9), (6.0, 0.9)] {
        let (zs, zd, _) = curve.sample(t);
        assert!((zs - z).abs() < 1e-12);
        assert!(zd.abs() < 1e-12);
    }
    let (mid, zd, _) = curve.sample(3.0);
    assert!((mid - 0.825).abs() < 1e-12 && zd > 0.0);
}

#[test]
fn vertical_profile_frequency_tracks_height() {
    let profile =
        build_vertical_profile(&[(0.0, 0.75), (1.0, 0.9), (2.0, 0.9)], 0.05, 2.0, GRAVITY).unwrap();
    let first = profile.omega_at(0);
    let last = profile.omega_at(40);
    assert!((first.omega - (GRAVITY / 0.75f64).sqrt()).abs() < 1e-9);
    assert!((last.omega - (GRAVITY / 0.9f64).sqrt()).abs() < 1e-9);
    // Past the end the profile holds its final value.
    assert_eq!(profile.omega_at(1000), last);
}
