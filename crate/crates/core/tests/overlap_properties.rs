use biphoton::amplitude::{
    coefficients, correlation_map, diagonal_half_width, f_x, f_z, AngularDeviation, Frame, GridSpec,
};
use biphoton::dispersion::CrystalSpec;
use biphoton::overlap::{
    misalignment_derivatives, overlap_vs_displacement, overlap_vs_misalignment,
    spectral_overlap_at, ImagingSystem, DEFAULT_NODES, DEGENERATE_PROXY,
};
use biphoton::phasematch::{
    degenerate_cut_angle, solve_emission_angles, PhaseMatchPoint, PumpSpec,
};
use proptest::prelude::*;

fn setup() -> (PumpSpec, CrystalSpec) {
    let pump = PumpSpec::argon_351();
    let probe = CrystalSpec::bbo(5e-3, 0.5).unwrap();
    let alpha = degenerate_cut_angle(&pump, &probe).unwrap();
    (pump, probe.with_cut_angle(alpha).unwrap())
}

fn base(lambda_s: f64) -> (PumpSpec, CrystalSpec, PhaseMatchPoint) {
    let (pump, crystal) = setup();
    let b = solve_emission_angles(lambda_s, &pump, &crystal).unwrap();
    (pump, crystal, b)
}

/// Half-maximum crossing of `F_z` along the diagonal found by scanning a
/// fine grid and interpolating linearly.
fn scanned_half_width(b: &PhaseMatchPoint, crystal: &CrystalSpec) -> f64 {
    let step = 1e-6;
    let fz = |u: f64| f_z(&AngularDeviation::external(u, u).unwrap(), b, crystal);
    let mut u = 0.0;
    while fz(u + step) > 0.5 {
        u += step;
    }
    let (a, c) = (fz(u), fz(u + step));
    u + step * (a - 0.5) / (a - c)
}

#[test]
fn half_width_agrees_with_scan_and_grows_toward_degeneracy() {
    let mut widths = Vec::new();
    for l in [650e-9, 690e-9, 698e-9] {
        let (_, crystal, b) = base(l);
        let hw = diagonal_half_width(&b, &crystal, Frame::External)
            .unwrap()
            .unwrap();
        let scan = scanned_half_width(&b, &crystal);
        assert!((hw - scan).abs() < 1e-8, "{l:e}: {hw} vs {scan}");
        widths.push(hw);
    }
    assert!(widths[0] < widths[1] && widths[1] < widths[2], "{widths:?}");
}

#[test]
fn ridges_follow_coefficient_directions() {
    let (pump, crystal, b) = base(690e-9);
    let c = coefficients(&b, Frame::External);
    // F_x is flat where the difference combination vanishes.
    let t = 1e-3 / c.transverse.0.max(c.transverse.1);
    let along_x = AngularDeviation::external(t * c.transverse.1, t * c.transverse.0).unwrap();
    assert!((f_x(&along_x, &b, &pump) - 1.0).abs() < 1e-12);
    // F_z is flat where the sum combination vanishes.
    let s = 1e-3 / c.longitudinal.0.max(c.longitudinal.1);
    let along_z = AngularDeviation::external(s * c.longitudinal.1, -s * c.longitudinal.0).unwrap();
    assert!((f_z(&along_z, &b, &crystal) - 1.0).abs() < 1e-12);
}

#[test]
fn map_matches_pointwise_evaluation() {
    let (pump, crystal, b) = base(698e-9);
    let grid = GridSpec::symmetric(2e-3, 21, Frame::External);
    let map = correlation_map(&b, &pump, &crystal, &grid).unwrap();
    let centre = map.index(10, 10);
    assert_eq!(map.f_x[centre], 1.0);
    assert_eq!(map.f_z[centre], 1.0);
    for (r, &s) in map.grid_s.iter().enumerate() {
        for (c, &i) in map.grid_i.iter().enumerate() {
            let dev = AngularDeviation::external(s, i).unwrap();
            let k = map.index(r, c);
            assert_eq!(map.f_x[k], f_x(&dev, &b, &pump));
            assert_eq!(map.f_z[k], f_z(&dev, &b, &crystal));
        }
    }
}

#[test]
fn misalignment_keeps_transverse_factor_at_unity() {
    let (pump, crystal) = setup();
    for l in [650e-9, 690e-9, DEGENERATE_PROXY] {
        let b = solve_emission_angles(l, &pump, &crystal).unwrap();
        let (ds, di) = misalignment_derivatives(l, &pump, &crystal).unwrap();
        for da in [1e-5, 1e-4, 3e-4] {
            let dev = AngularDeviation {
                d_theta_s: b.theta_s_ext.signum() * ds * da,
                d_theta_i: b.theta_i_ext.signum() * di * da,
                frame: Frame::External,
            };
            assert!(f_x(&dev, &b, &pump) > 0.999, "{l:e} {da}");
        }
    }
}

#[test]
fn misalignment_overlap_is_uniform_across_the_spectrum() {
    let (pump, crystal) = setup();
    let grid: Vec<f64> = (-50..=50)
        .map(|k| (k as f64 * 0.001).to_radians())
        .collect();
    let near = overlap_vs_misalignment(DEGENERATE_PROXY, &grid, &pump, &crystal).unwrap();
    let far = overlap_vs_misalignment(650e-9, &grid, &pump, &crystal).unwrap();
    for (a, b) in near.samples.iter().zip(&far.samples) {
        assert_eq!(a.0, b.0);
        assert!((a.1 - b.1).abs() < 1e-3, "{a:?} {b:?}");
        assert!((0.0..=1.0).contains(&a.1));
    }
    assert_eq!(near.samples[50].1, 1.0);
}

#[test]
fn displacement_overlap_is_even_and_peaks_in_the_image_plane() {
    let (pump, crystal) = setup();
    let imaging = ImagingSystem::unit_magnification(50e-3).unwrap();
    let zs: Vec<f64> = (-10..=10).map(|k| k as f64 * 2.5e-4).collect();
    let curve = overlap_vs_displacement(690e-9, &zs, &pump, &crystal, &imaging).unwrap();
    assert_eq!(curve.samples[10].1, 1.0);
    for k in 0..10 {
        let (l, r) = (curve.samples[k].1, curve.samples[20 - k].1);
        assert!((l - r).abs() < 1e-14);
        assert!(l <= 1.0);
    }
}

#[test]
fn spectral_quadrature_converges() {
    let (pump, crystal) = setup();
    let imaging = ImagingSystem::unit_magnification(37e-3).unwrap();
    for l in [627e-9, 660e-9, 690e-9, 700e-9, 760e-9] {
        let a = spectral_overlap_at(l, &crystal, &pump, &imaging, DEFAULT_NODES).unwrap();
        let b = spectral_overlap_at(l, &crystal, &pump, &imaging, 2 * DEFAULT_NODES - 1).unwrap();
        assert!((a - b).abs() < 1e-8, "{l:e}: {a} vs {b}");
        assert!((0.0..=1.0).contains(&a));
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(300))]

    #[test]
    fn amplitudes_are_bounded_and_even(
        l in 630e-9f64..700e-9,
        s in -0.05f64..0.05,
        i in -0.05f64..0.05,
    ) {
        let (pump, crystal, b) = base(l);
        let dev = AngularDeviation::external(s, i).unwrap();
        let neg = AngularDeviation::external(-s, -i).unwrap();
        let x = f_x(&dev, &b, &pump);
        let z = f_z(&dev, &b, &crystal);
        prop_assert!((0.0..=1.0).contains(&x));
        prop_assert!(z.abs() <= 1.0);
        prop_assert_eq!(x, f_x(&neg, &b, &pump));
        prop_assert!((z - f_z(&neg, &b, &crystal)).abs() < 1e-15);
    }
}
