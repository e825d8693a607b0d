use std::ffi::CStr;
use std::ptr;

use cascadeq_ffi::*;

fn last_error() -> String {
    let p = cq_last_error();
    assert!(!p.is_null());
    unsafe { CStr::from_ptr(p) }.to_string_lossy().into_owned()
}

#[test]
fn m2o_handle_round_trip() {
    let p = cq_m2o_params_default();
    assert!(p.omega_0.is_nan());
    let mut m: *mut CqModel = ptr::null_mut();
    assert_eq!(unsafe { cq_model_new_m2o(&p, &mut m) }, CqStatus::Ok);
    assert_eq!(unsafe { cq_model_dim(m) }, 6);
    let mut a = CqEnsembleSummary::default();
    let mut b = CqEnsembleSummary::default();
    assert_eq!(unsafe { cq_model_run(m, 400, 3, 1, &mut a) }, CqStatus::Ok);
    assert_eq!(unsafe { cq_model_run(m, 400, 3, 4, &mut b) }, CqStatus::Ok);
    assert_eq!(a.n_traj, 400);
    assert_eq!(a.herald_count, b.herald_count);
    assert_eq!(a.efficiency.to_bits(), b.efficiency.to_bits());
    assert!(a.efficiency > 0.3 && a.rate_mhz > 0.0);
    unsafe { cq_model_free(m) };
    assert!(cq_last_error().is_null());
}

#[test]
fn o2m_dimension_and_zero_coupling() {
    let mut p = cq_o2m_params_default();
    p.g_c = 0.0;
    let mut m: *mut CqModel = ptr::null_mut();
    assert_eq!(unsafe { cq_model_new_o2m(&p, &mut m) }, CqStatus::Ok);
    assert_eq!(unsafe { cq_model_dim(m) }, 18);
    let mut s = CqEnsembleSummary::default();
    assert_eq!(unsafe { cq_model_run(m, 50, 1, 0, &mut s) }, CqStatus::Ok);
    assert_eq!(s.efficiency, 0.0);
    assert!(s.rate_mhz.is_nan());
    unsafe { cq_model_free(m) };
}

#[test]
fn errors_are_reported() {
    let mut p = cq_o2m_params_default();
    p.eta = 1.5;
    let mut m: *mut CqModel = ptr::null_mut();
    assert_eq!(unsafe { cq_model_new_o2m(&p, &mut m) }, CqStatus::InvalidParameter);
    assert!(m.is_null());
    assert!(last_error().contains("eta"));
    assert_eq!(unsafe { cq_model_new_o2m(ptr::null(), &mut m) }, CqStatus::NullPointer);
    assert_eq!(unsafe { cq_model_dim(ptr::null()) }, 0);
    unsafe { cq_model_free(ptr::null_mut()) };
    let mut z = 0.0;
    assert_eq!(unsafe { cq_analytic_efficiency(0.0, 1.0, 1.0, &mut z) }, CqStatus::InvalidParameter);
    assert_eq!(
        unsafe { cq_erasure_herald_prob(1.0, 0.0, 0.0, 0.0, 1.0, 3, &mut z) },
        CqStatus::InvalidParameter
    );
}

#[test]
fn closed_forms() {
    let mut z = 0.0;
    assert_eq!(unsafe { cq_analytic_efficiency(300.0, 300.0, 150.0, &mut z) }, CqStatus::Ok);
    assert!((z - 0.94118).abs() < 1e-5);
    assert!((cq_optimal_gamma_eg(300.0, 100.0) - 166.6667).abs() < 1e-3);
    let h = std::f64::consts::FRAC_1_SQRT_2;
    assert_eq!(unsafe { cq_erasure_herald_prob(h, 0.0, h, 0.0, 1.0, 1, &mut z) }, CqStatus::Ok);
    assert_eq!(z, 0.5);
    let d = cq_device_params_default();
    let mut r = CqCouplingReport::default();
    assert_eq!(unsafe { cq_coupling_strength(&d, &mut r) }, CqStatus::Ok);
    assert!((2.3..=3.3).contains(&r.e_rms));
    assert!((100.0..=300.0).contains(&r.g_c));
    let v = unsafe { CStr::from_ptr(cq_version()) };
    assert_eq!(v.to_str().unwrap(), env!("CARGO_PKG_VERSION"));
}

#[test]
fn header_declares_the_interface() {
    let h = std::fs::read_to_string(concat!(env!("CARGO_MANIFEST_DIR"), "/include/cascadeq.h")).unwrap();
    for name in [
        "typedef struct CqModel CqModel;",
        "CQ_STATUS_NULL_POINTER = 1",
        "cq_model_new_o2m",
        "cq_model_new_m2o",
        "cq_model_run",
        "cq_model_free",
        "cq_last_error",
        "cq_coupling_strength",
        "cq_erasure_herald_prob",
    ] {
        assert!(h.contains(name), "{name} missing");
    }
}

#[test]
fn header_compiles_as_c() {
    let Ok(cc) = which_cc() else {
        eprintln!("no C compiler; skipped");
        return;
    };
    let dir = std::env::temp_dir().join(format!("cascadeq-h-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let src = dir.join("use.c");
    std::fs::write(
        &src,
        "#include \"cascadeq.h\"\nint main(void) { CqO2MParams p = cq_o2m_params_default(); CqModel *m = 0;\n\
         CqStatus s = cq_model_new_o2m(&p, &m); cq_model_free(m); return (int)s; }\n",
    )
    .unwrap();
    let out = std::process::Command::new(cc)
        .args(["-std=c99", "-Wall", "-Werror", "-fsyntax-only", "-I"])
        .arg(concat!(env!("CARGO_MANIFEST_DIR"), "/include"))
        .arg(&src)
        .output()
        .unwrap();
    let _ = std::fs::remove_dir_all(&dir);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
}

fn which_cc() -> Result<&'static str, ()> {
    ["cc", "gcc", "clang"]
        .into_iter()
        .find(|c| std::process::Command::new(c).arg("--version").output().is_ok())
        .ok_or(())
}
