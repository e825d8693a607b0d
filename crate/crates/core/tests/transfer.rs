use cascadeq::hilbert::{HilbertSpec, OperatorMatrix};
use cascadeq::models::O2MParams;
use cascadeq::transfer::{
    build_transfer, erasure_herald, pi_pulse_unitary, run_transfer, tr, Detectors, InjectionMode, ProtocolParams,
    PulseModel, TimeBinQubit, TransferOutcome,
};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};

fn lossless(pulse: PulseModel) -> ProtocolParams {
    ProtocolParams {
        mode: InjectionMode::Ideal,
        pulse,
        conversion: O2MParams {
            kappa_c: 0.0,
            ..Default::default()
        },
        ..Default::default()
    }
}

fn qubit(alpha: Complex64, beta: Complex64) -> TimeBinQubit {
    TimeBinQubit::new(alpha, beta, 20.0, 80.0).unwrap()
}

fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

fn check_state(out: &TransferOutcome) {
    let rho = &out.rho;
    let trace: f64 = (0..4).map(|i| rho[[i, i]].re).sum();
    assert!(trace <= 1.0 + 1e-8);
    let parts = out.syndrome + rho[[tr::E, tr::E]].re + rho[[tr::F, tr::F]].re + rho[[tr::H, tr::H]].re;
    assert!((parts - trace).abs() <= 1e-8);
    for i in 0..4 {
        for j in 0..4 {
            assert!((rho[[i, j]] - rho[[j, i]].conj()).norm() <= 1e-12);
        }
    }
    // PSD: every 2x2 principal minor and the diagonal
    for i in 0..4 {
        assert!(rho[[i, i]].re >= -1e-8);
        for j in i + 1..4 {
            let det = rho[[i, i]].re * rho[[j, j]].re - rho[[i, j]].norm_sqr();
            assert!(det >= -1e-8);
        }
    }
}

#[test]
fn early_bin_ends_in_h() {
    let out = run_transfer(&qubit(c(1.0, 0.0), c(0.0, 0.0)), &lossless(PulseModel::Instantaneous), 2, 1, None).unwrap();
    assert!(out.fidelity >= 0.99);
    assert!(out.rho[[tr::H, tr::H]].re >= 0.99);
    check_state(&out);
}

#[test]
fn late_bin_ends_in_f() {
    let out = run_transfer(&qubit(c(0.0, 0.0), c(1.0, 0.0)), &lossless(PulseModel::Instantaneous), 2, 1, None).unwrap();
    assert!(out.fidelity >= 0.99);
    assert!(out.rho[[tr::F, tr::F]].re >= 0.99);
}

#[test]
fn lossless_transfer_is_an_isometry() {
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(99);
    for _ in 0..20 {
        let theta: f64 = rng.random_range(0.0..std::f64::consts::PI);
        let phi: f64 = rng.random_range(0.0..std::f64::consts::TAU);
        let q = qubit(
            c((theta / 2.0).cos(), 0.0),
            Complex64::from_polar((theta / 2.0).sin(), phi),
        );
        let out = run_transfer(&q, &lossless(PulseModel::Instantaneous), 2, 3, Some(1)).unwrap();
        assert!(out.fidelity >= 0.999, "theta {theta} phi {phi}: {}", out.fidelity);
        assert!(out.syndrome < 1e-9);
        check_state(&out);
    }
}

#[test]
fn finite_pulses_keep_the_relative_phase() {
    let h = std::f64::consts::FRAC_1_SQRT_2;
    let out = run_transfer(&qubit(c(h, 0.0), c(0.0, h)), &lossless(PulseModel::Finite(2.0)), 2, 1, None).unwrap();
    assert!(out.fidelity >= 0.99, "{}", out.fidelity);
}

#[test]
fn global_phase_does_not_matter() {
    let (a, b) = (c(0.6, 0.0), c(0.0, 0.8));
    let ph = Complex64::from_polar(1.0, 1.1);
    for p in [
        lossless(PulseModel::Instantaneous),
        ProtocolParams {
            mode: InjectionMode::Ideal,
            ..Default::default()
        },
        ProtocolParams::default(),
    ] {
        let x = run_transfer(&qubit(a, b), &p, 24, 7, None).unwrap();
        let y = run_transfer(&qubit(a * ph, b * ph), &p, 24, 7, None).unwrap();
        assert!((x.fidelity - y.fidelity).abs() < 1e-9);
        assert!((x.syndrome - y.syndrome).abs() < 1e-9);
        check_state(&x);
    }
}

#[test]
fn realistic_run_loses_fidelity() {
    let h = std::f64::consts::FRAC_1_SQRT_2;
    let out = run_transfer(&qubit(c(h, 0.0), c(h, 0.0)), &ProtocolParams::default(), 40, 2, None).unwrap();
    assert!(out.fidelity < 1.0);
    assert!(out.residual_cavity < 0.01);
    assert!(out.herald_fraction > 0.5);
    check_state(&out);
}

#[test]
fn realistic_needs_lead_time() {
    let q = TimeBinQubit::new(c(1.0, 0.0), c(0.0, 0.0), 5.0, 80.0).unwrap();
    assert!(build_transfer(&q, &ProtocolParams::default()).is_err());
    assert!(build_transfer(&q, &lossless(PulseModel::Instantaneous)).is_ok());
}

#[test]
fn pi_pulses_are_unitary() {
    let s = HilbertSpec::new([("register", 3), ("cavity", 2), ("transmon", 4)]).unwrap();
    let id = OperatorMatrix::identity(&s);
    for (i, j) in [(tr::E, tr::F), (tr::F, tr::H), (tr::G, tr::E)] {
        let u = pi_pulse_unitary(&s, i, j).unwrap();
        assert!((&u.adjoint() * &u).max_abs_diff(&id).unwrap() <= 1e-12);
    }
}

#[test]
fn erasure_examples() {
    let h = c(std::f64::consts::FRAC_1_SQRT_2, 0.0);
    assert_eq!(erasure_herald(h, h, 1.0, Detectors::One).unwrap().herald_prob, 0.5);
    assert_eq!(erasure_herald(h, h, 1.0, Detectors::Two).unwrap().herald_prob, 1.0);
    assert_eq!(erasure_herald(h, h, 0.0, Detectors::One).unwrap().herald_prob, 0.0);
    assert!(erasure_herald(h, h, 1.5, Detectors::One).is_err());
}
