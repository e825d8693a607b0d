use cascadeq::analytic::{
    coupling_strength, efficiency, mean_output_field, optimal_gamma_eg, reflectance_closed_form, vacuum_field_impedance,
    vacuum_field_thermo, AnalyticParams, DeviceParams,
};
use proptest::prelude::*;

fn params(gamma_fg_t: f64, gamma_eg_t: f64, g_c: f64) -> AnalyticParams {
    AnalyticParams {
        gamma_fg_t,
        gamma_eg_t,
        g_c,
    }
}

/// Second evaluation of zeta from decimal strings, expanding the complex
/// division by hand.
fn zeta_by_hand(fg: &str, eg: &str, g: &str) -> f64 {
    let fg: f64 = fg.parse().unwrap();
    let eg: f64 = eg.parse().unwrap();
    let g: f64 = g.parse().unwrap();
    let a = g * g * 4.0 / fg;
    let d = (a + eg) * (a + eg) + g * g;
    if d == 0.0 {
        return 0.0;
    }
    let re = 1.0 - 2.0 * eg * (a + eg) / d;
    let im = -2.0 * eg * g / d;
    1.0 - (im * im + re * re)
}

#[test]
fn reference_values() {
    let b = mean_output_field(&params(300.0, 300.0, 150.0)).unwrap();
    assert!((b.re - 0.05882).abs() < 1e-5 && (b.im + 0.23529).abs() < 1e-5);
    assert!((efficiency(&params(300.0, 300.0, 150.0)).unwrap() - 0.94118).abs() < 1e-5);
    assert_eq!(mean_output_field(&params(300.0, 0.0, 120.0)).unwrap().re, 1.0);
    assert_eq!(efficiency(&params(300.0, 0.0, 120.0)).unwrap(), 0.0);
    let b = mean_output_field(&params(300.0, 80.0, 0.0)).unwrap();
    assert_eq!((b.re, b.im), (-1.0, 0.0));
    assert_eq!(efficiency(&params(300.0, 80.0, 0.0)).unwrap(), 0.0);
    assert!(efficiency(&params(0.0, 1.0, 1.0)).is_err());
}

#[test]
fn optimum_at_one_hundred_megahertz() {
    let gs = optimal_gamma_eg(300.0, 100.0);
    assert!((gs - 166.6667).abs() < 1e-3);
    assert!((efficiency(&params(300.0, 166.67, 100.0)).unwrap() - 0.8889).abs() < 1e-4);
    assert!((gs / 300.0 - 0.5556).abs() < 1e-4);
}

#[test]
fn optimum_limits() {
    // A << g: the optimum approaches g
    let g = 1.0;
    assert!((optimal_gamma_eg(1e4, g) - g).abs() < 1e-6);
    // A >> g: the optimum approaches A
    let (fg, g) = (1.0, 100.0);
    let a = 4.0 * g * g / fg;
    assert!((optimal_gamma_eg(fg, g) / a - 1.0).abs() < 1e-3);
}

proptest! {
    #[test]
    fn efficiency_lies_in_unit_interval(fg in 1e-3f64..1e4, eg in 0.0f64..1e4, g in 0.0f64..1e4) {
        let z = efficiency(&params(fg, eg, g)).unwrap();
        prop_assert!((-1e-12..=1.0 + 1e-12).contains(&z));
    }

    #[test]
    fn closed_form_matches_complex_field(fg in 1.0f64..1e3, eg in 0.0f64..1e3, g in 0.0f64..1e3) {
        let p = params(fg, eg, g);
        let direct = mean_output_field(&p).unwrap().norm_sqr();
        prop_assert!((direct - reflectance_closed_form(&p).unwrap()).abs() <= 1e-12);
    }

    #[test]
    fn independent_evaluation_agrees(fg in 1.0f64..1e3, eg in 0.0f64..1e3, g in 0.0f64..1e3) {
        let z = efficiency(&params(fg, eg, g)).unwrap();
        let alt = zeta_by_hand(&fg.to_string(), &eg.to_string(), &g.to_string());
        prop_assert!((z - alt).abs() <= 1e-12);
    }

    #[test]
    fn balanced_case(fg in 1.0f64..1e3, g in 1.0f64..1e3) {
        let eg = 4.0 * g * g / fg;
        let z = efficiency(&params(fg, eg, g)).unwrap();
        let want = 4.0 * eg * eg / (4.0 * eg * eg + g * g);
        prop_assert!((z - want).abs() <= 1e-12);
    }

    #[test]
    fn balanced_condition_never_beats_optimum(fg in 1.0f64..1e3, g in 1.0f64..1e3) {
        let at_balance = efficiency(&params(fg, 4.0 * g * g / fg, g)).unwrap();
        let at_opt = efficiency(&params(fg, optimal_gamma_eg(fg, g), g)).unwrap();
        prop_assert!(at_balance <= at_opt + 1e-12);
    }
}

#[test]
fn grid_argmax_matches_optimum() {
    use rand::{Rng, SeedableRng};
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(5);
    for _ in 0..100 {
        let fg = rng.random_range(50.0..1000.0);
        let g = rng.random_range(10.0..500.0);
        let gs = optimal_gamma_eg(fg, g);
        let hi = 3.0 * gs;
        let n = 20_000;
        let step = hi / n as f64;
        let best = (0..=n)
            .map(|k| k as f64 * step)
            .max_by(|a, b| {
                let za = efficiency(&params(fg, *a, g)).unwrap();
                let zb = efficiency(&params(fg, *b, g)).unwrap();
                za.total_cmp(&zb)
            })
            .unwrap();
        assert!((best - gs).abs() <= step, "fg {fg} g {g}: grid {best} vs {gs}");
    }
}

#[test]
fn vacuum_field_scalings() {
    let e = vacuum_field_thermo(1e10, 10.0, 1e-12);
    assert!((vacuum_field_thermo(1e10, 10.0, 4e-12) - e / 2.0).abs() < 1e-12 * e);
    assert!(vacuum_field_thermo(1e-30, 10.0, 1e-12) < 1e-15);

    let dev = DeviceParams::default();
    let e = vacuum_field_impedance(&dev).unwrap();
    assert!((2.3..=3.3).contains(&e), "E_rms {e}");
    let low = vacuum_field_impedance(&DeviceParams { z_cav: 50.0, ..dev }).unwrap();
    assert!((low - e * (50.0f64 / 2000.0).sqrt()).abs() < 1e-12);
    assert!((low - 0.41).abs() < 0.01);
    let wide = vacuum_field_impedance(&DeviceParams { d: 2.0 * dev.d, ..dev }).unwrap();
    assert!((wide - e / 2.0).abs() < 1e-12);
}

#[test]
fn device_coupling() {
    let dev = DeviceParams::default();
    let r = coupling_strength(&dev).unwrap();
    assert!((r.p / 8e-28 - 1.0).abs() < 0.05, "p = {}", r.p);
    assert!((100.0..=300.0).contains(&r.g_c), "g = {}", r.g_c);
    let double = coupling_strength(&DeviceParams { a: 2.0 * dev.a, ..dev }).unwrap();
    assert!((double.g_c - 2.0 * r.g_c).abs() < 1e-9);
    assert_eq!(coupling_strength(&DeviceParams { a: 0.0, ..dev }).unwrap().g_c, 0.0);
    assert!(coupling_strength(&DeviceParams { d_prime: 8e-6, ..dev }).is_err());
}

#[test]
fn weak_dielectric_factor_warns() {
    let dev = DeviceParams {
        l: 0.1,
        ..Default::default()
    };
    assert!(!coupling_strength(&dev).unwrap().warnings.is_empty());
}
