use std::f64::consts::{FRAC_PI_2, PI};

use biphoton::dispersion::{CrystalSpec, SellmeierSet};
use biphoton::phasematch::{
    angle_derivative_wrt_cut, conjugate_wavelength, degenerate_cut_angle, external_to_internal,
    internal_to_external, solve_emission_angles, tuning_curve, Photon, PumpSpec,
};
use biphoton::Error;
use proptest::prelude::*;

fn setup() -> (PumpSpec, CrystalSpec) {
    let pump = PumpSpec::argon_351();
    let probe = CrystalSpec::bbo(5e-3, 0.5).unwrap();
    let alpha = degenerate_cut_angle(&pump, &probe).unwrap();
    (pump, probe.with_cut_angle(alpha).unwrap())
}

/// Implicit-function derivative of the signed external angle with respect
/// to the cut angle, from differentiating both matching conditions.
fn implicit_derivative(
    lambda_s: f64,
    pump: &PumpSpec,
    crystal: &CrystalSpec,
    which: Photon,
) -> f64 {
    let p = solve_emission_angles(lambda_s, pump, crystal).unwrap();
    let k_s = 2.0 * PI * p.n_s / p.lambda_s;
    let k_i = 2.0 * PI * p.n_i / p.lambda_i;
    let dkp = 2.0 * PI / pump.wavelength
        * crystal
            .dn_extraordinary_dtheta(pump.wavelength, crystal.cut_angle)
            .unwrap();
    let det = k_s * k_i * (p.theta_s_int - p.theta_i_int).sin();
    let (d_int, n, th_int, th_ext) = match which {
        Photon::Signal => (
            -k_i * p.theta_i_int.cos() * dkp / det,
            p.n_s,
            p.theta_s_int,
            p.theta_s_ext,
        ),
        Photon::Idler => (
            k_s * p.theta_s_int.cos() * dkp / det,
            p.n_i,
            p.theta_i_int,
            p.theta_i_ext,
        ),
    };
    n * th_int.cos() / th_ext.cos() * d_int
}

#[test]
fn degenerate_cut_angle_reproduces_degenerate_index() {
    let (pump, crystal) = setup();
    let ne = crystal
        .n_extraordinary(pump.wavelength, crystal.cut_angle)
        .unwrap();
    let no = crystal.n_ordinary(2.0 * pump.wavelength).unwrap();
    assert!((ne - no).abs() < 1e-14);
    let deg = crystal.cut_angle.to_degrees();
    assert!((32.0..=35.0).contains(&deg), "{deg}");
}

#[test]
fn finite_difference_derivative_matches_implicit_oracle() {
    let (pump, crystal) = setup();
    for lambda in [630e-9, 650e-9, 690e-9, 698e-9, 701e-9, 720e-9, 780e-9] {
        for which in [Photon::Signal, Photon::Idler] {
            let fd = angle_derivative_wrt_cut(lambda, &pump, &crystal, which).unwrap();
            let exact = implicit_derivative(lambda, &pump, &crystal, which);
            assert!(
                (fd - exact).abs() < 1e-5 * exact.abs(),
                "{lambda:e} {which:?}: {fd} vs {exact}"
            );
        }
    }
}

#[test]
fn derivative_is_undefined_at_degeneracy() {
    let (pump, crystal) = setup();
    let err = angle_derivative_wrt_cut(2.0 * pump.wavelength, &pump, &crystal, Photon::Signal)
        .unwrap_err();
    assert!(matches!(err, Error::DerivativeUndefined(_)), "{err}");
}

#[test]
fn hundred_point_curve_has_small_residuals() {
    let (pump, crystal) = setup();
    let k_p = pump.wavenumber(&crystal).unwrap();
    let curve = tuning_curve(627e-9, 797e-9, 100, &pump, &crystal).unwrap();
    assert_eq!(curve.len(), 100);
    for p in &curve {
        // Re-substitute with indices recomputed from the dispersion model.
        let ks = 2.0 * PI * crystal.n_ordinary(p.lambda_s).unwrap() / p.lambda_s;
        let ki = 2.0 * PI * crystal.n_ordinary(p.lambda_i).unwrap() / p.lambda_i;
        let tr = ks * p.theta_s_int.sin() + ki * p.theta_i_int.sin();
        let lo = ks * p.theta_s_int.cos() + ki * p.theta_i_int.cos() - k_p;
        assert!(tr.hypot(lo) < 1e-6 * k_p);
        assert!(
            (1.0 / p.lambda_s + 1.0 / p.lambda_i - 1.0 / pump.wavelength).abs() * pump.wavelength
                < 1e-14
        );
    }
}

#[test]
fn solution_fails_beyond_the_tuning_range() {
    let (pump, crystal) = setup();
    let detuned = crystal.with_cut_angle(crystal.cut_angle - 0.01).unwrap();
    assert!(matches!(
        solve_emission_angles(690e-9, &pump, &detuned),
        Err(Error::NoSolution(_))
    ));
}

#[test]
fn isotropic_crystal_has_no_solution() {
    let pump = PumpSpec::argon_351();
    let iso = CrystalSpec::new(
        "iso",
        5e-3,
        0.5,
        SellmeierSet::BBO_ORDINARY,
        SellmeierSet::BBO_ORDINARY,
    )
    .unwrap();
    assert!(degenerate_cut_angle(&pump, &iso).is_err());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn residual_and_conjugate_properties(lambda_s in 627e-9f64..797e-9) {
        let (pump, crystal) = setup();
        let p = solve_emission_angles(lambda_s, &pump, &crystal).unwrap();
        let k_p = pump.wavenumber(&crystal).unwrap();
        prop_assert!(p.residual < 1e-6 * k_p);
        prop_assert!(p.theta_s_int >= 0.0 && p.theta_i_int <= 0.0);
        let back = conjugate_wavelength(p.lambda_i, &pump).unwrap();
        prop_assert!((back - lambda_s).abs() < 1e-6 * lambda_s);
        // Swapping roles mirrors the angles.
        let q = solve_emission_angles(p.lambda_i, &pump, &crystal).unwrap();
        prop_assert!((q.theta_s_int + p.theta_i_int).abs() < 1e-9);
    }

    #[test]
    fn snell_round_trip(theta in -0.2f64..0.2, lambda in 300e-9f64..800e-9) {
        let (_, crystal) = setup();
        let ext = internal_to_external(theta, lambda, &crystal).unwrap();
        let back = external_to_internal(ext, lambda, &crystal).unwrap();
        prop_assert!((back - theta).abs() < 1e-13);
        prop_assert!(ext.abs() >= theta.abs());
    }

    #[test]
    fn extraordinary_index_is_bounded(theta in 0.0f64..FRAC_PI_2, lambda in 300e-9f64..800e-9) {
        let (_, crystal) = setup();
        let ne = crystal.n_extraordinary(lambda, theta).unwrap();
        let no = crystal.n_ordinary(lambda).unwrap();
        let np = crystal.n_principal_extraordinary(lambda).unwrap();
        prop_assert!(ne <= no + 1e-15 && ne >= np - 1e-15);
        prop_assert_eq!(ne, crystal.n_extraordinary(lambda, theta).unwrap());
    }
}
