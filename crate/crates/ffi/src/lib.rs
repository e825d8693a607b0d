//! C interface. Every fallible call returns a [`CqStatus`]; the message of
//! the last failure on the calling thread is available from
//! [`cq_last_error`]. Rates are `nu` in MHz, times in ns.

use std::cell::RefCell;
use std::ffi::{c_char, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use cascadeq::analytic::{coupling_strength, efficiency, optimal_gamma_eg, AnalyticParams, DeviceParams};
use cascadeq::models::{
    build_m2o, build_o2m, m2o_efficiency_with, o2m_efficiency_with, M2OParams, O2MParams, RunOptions,
};
use cascadeq::transfer::{erasure_herald, Detectors};
use cascadeq::Error;

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CqStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidParameter = 2,
    Simulation = 3,
    InsufficientStatistics = 4,
    Panic = 5,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: String) {
    let c = CString::new(msg.replace('\0', " ")).expect("no interior nul");
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

fn fail(e: Error) -> CqStatus {
    let status = match e {
        Error::InvalidParameter(_) | Error::InvalidQubit(_) => CqStatus::InvalidParameter,
        Error::InsufficientStatistics { .. } => CqStatus::InsufficientStatistics,
        _ => CqStatus::Simulation,
    };
    set_error(e.to_string());
    status
}

fn guard(f: impl FnOnce() -> CqStatus) -> CqStatus {
    LAST_ERROR.with(|e| *e.borrow_mut() = None);
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(s) => s,
        Err(_) => {
            set_error("internal panic".into());
            CqStatus::Panic
        }
    }
}

fn null() -> CqStatus {
    set_error("null pointer argument".into());
    CqStatus::NullPointer
}

/// Message of the last failed call on this thread, or NULL. Valid until the
/// next call into the library from the same thread.
#[no_mangle]
pub extern "C" fn cq_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

/// Library version, static storage.
#[no_mangle]
pub extern "C" fn cq_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

#[repr(C)]
#[derive(Debug, Clone, Copy)]
pub struct CqO2MParams {
    pub gamma_fe_s: f64,
    pub gamma_fg_t: f64,
    pub gamma_eg_t: f64,
    pub g_c: f64,
    pub kappa_c: f64,
    pub eta: f64,
    pub omega_0: f64,
    pub sigma: f64,
    pub t0: f64,
    pub cavity_dim: u32,
    pub strict_herald: bool,
}

impl From<&O2MParams> for CqO2MParams {
    fn from(p: &O2MParams) -> Self {
        Self {
            gamma_fe_s: p.gamma_fe_s,
            gamma_fg_t: p.gamma_fg_t,
            gamma_eg_t: p.gamma_eg_t,
            g_c: p.g_c,
            kappa_c: p.kappa_c,
            eta: p.eta,
            omega_0: p.omega_0,
            sigma: p.sigma,
            t0: p.t0,
            cavity_dim: p.cavity_dim as u32,
            strict_herald: p.strict_herald,
        }
    }
}

impl From<&CqO2MParams> for O2MParams {
    fn from(p: &CqO2MParams) -> Self {
        Self {
            gamma_fe_s: p.gamma_fe_s,
            gamma_fg_t: p.gamma_fg_t,
            gamma_eg_t: p.gamma_eg_t,
            g_c: p.g_c,
            kappa_c: p.kappa_c,
            eta: p.eta,
            omega_0: p.omega_0,
            sigma: p.sigma,
            t0: p.t0,
            cavity_dim: p.cavity_dim as usize,
            strict_herald: p.strict_herald,
        }
    }
}

/// `omega_0` NaN selects the default drive `gamma_fg_t / 3`.
#[repr(C)]
#[derive(Debug, Clone, Copy)]
pub struct CqM2OParams {
    pub gamma_fg_t: f64,
    pub gamma_eg_t: f64,
    pub g_c: f64,
    pub kappa_c: f64,
    pub omega_0: f64,
    pub cavity_dim: u32,
    pub strict_herald: bool,
}

impl From<&M2OParams> for CqM2OParams {
    fn from(p: &M2OParams) -> Self {
        Self {
            gamma_fg_t: p.gamma_fg_t,
            gamma_eg_t: p.gamma_eg_t,
            g_c: p.g_c,
            kappa_c: p.kappa_c,
            omega_0: p.omega_0.unwrap_or(f64::NAN),
            cavity_dim: p.cavity_dim as u32,
            strict_herald: p.strict_herald,
        }
    }
}

impl From<&CqM2OParams> for M2OParams {
    fn from(p: &CqM2OParams) -> Self {
        Self {
            gamma_fg_t: p.gamma_fg_t,
            gamma_eg_t: p.gamma_eg_t,
            g_c: p.g_c,
            kappa_c: p.kappa_c,
            omega_0: (!p.omega_0.is_nan()).then_some(p.omega_0),
            cavity_dim: p.cavity_dim as usize,
            strict_herald: p.strict_herald,
        }
    }
}

#[no_mangle]
pub extern "C" fn cq_o2m_params_default() -> CqO2MParams {
    (&O2MParams::default()).into()
}

#[no_mangle]
pub extern "C" fn cq_m2o_params_default() -> CqM2OParams {
    (&M2OParams::default()).into()
}

enum Kind {
    O2M(O2MParams),
    M2O(M2OParams),
}

/// Opaque conversion model.
pub struct CqModel {
    kind: Kind,
    dim: usize,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, Default)]
pub struct CqEnsembleSummary {
    pub n_traj: u64,
    pub n_failed: u64,
    pub herald_count: u64,
    pub efficiency: f64,
    pub efficiency_stderr: f64,
    /// NaN when too few heralds were seen.
    pub rate_mhz: f64,
}

/// # Safety
/// `params` must be NULL or point to a valid struct; `out` must be NULL or
/// writable.
#[no_mangle]
pub unsafe extern "C" fn cq_model_new_o2m(params: *const CqO2MParams, out: *mut *mut CqModel) -> CqStatus {
    guard(|| {
        if params.is_null() || out.is_null() {
            return null();
        }
        let p: O2MParams = (&*params).into();
        if let Err(e) = p.validate() {
            return fail(e);
        }
        match build_o2m(&p) {
            Ok((m, _)) => {
                let dim = m.space().dim();
                *out = Box::into_raw(Box::new(CqModel { kind: Kind::O2M(p), dim }));
                CqStatus::Ok
            }
            Err(e) => fail(e),
        }
    })
}

/// # Safety
/// As [`cq_model_new_o2m`].
#[no_mangle]
pub unsafe extern "C" fn cq_model_new_m2o(params: *const CqM2OParams, out: *mut *mut CqModel) -> CqStatus {
    guard(|| {
        if params.is_null() || out.is_null() {
            return null();
        }
        let p: M2OParams = (&*params).into();
        if let Err(e) = p.validate() {
            return fail(e);
        }
        match build_m2o(&p) {
            Ok((m, _)) => {
                let dim = m.space().dim();
                *out = Box::into_raw(Box::new(CqModel { kind: Kind::M2O(p), dim }));
                CqStatus::Ok
            }
            Err(e) => fail(e),
        }
    })
}

/// # Safety
/// `model` must be NULL or a handle from `cq_model_new_*` not yet freed.
#[no_mangle]
pub unsafe extern "C" fn cq_model_free(model: *mut CqModel) {
    if !model.is_null() {
        drop(Box::from_raw(model));
    }
}

/// Hilbert-space dimension, 0 for NULL.
///
/// # Safety
/// `model` must be NULL or a live handle.
#[no_mangle]
pub unsafe extern "C" fn cq_model_dim(model: *const CqModel) -> usize {
    model.as_ref().map_or(0, |m| m.dim)
}

/// Runs `n_traj` trajectories; trajectory `i` uses seed `seed + i`.
/// `threads` 0 uses every core. Results do not depend on `threads`.
///
/// # Safety
/// `model` must be a live handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn cq_model_run(
    model: *const CqModel,
    n_traj: u64,
    seed: u64,
    threads: u32,
    out: *mut CqEnsembleSummary,
) -> CqStatus {
    guard(|| {
        let (Some(m), false) = (model.as_ref(), out.is_null()) else {
            return null();
        };
        let mut opt = RunOptions::new(n_traj as usize, seed);
        opt.threads = (threads > 0).then_some(threads as usize);
        let r = match &m.kind {
            Kind::O2M(p) => o2m_efficiency_with(p, &opt),
            Kind::M2O(p) => m2o_efficiency_with(p, &opt),
        };
        match r {
            Ok(r) => {
                *out = CqEnsembleSummary {
                    n_traj: r.n_traj as u64,
                    n_failed: r.n_failed as u64,
                    herald_count: r.herald_count as u64,
                    efficiency: r.efficiency,
                    efficiency_stderr: r.efficiency_stderr,
                    rate_mhz: r.rate_mhz.unwrap_or(f64::NAN),
                };
                CqStatus::Ok
            }
            Err(e) => fail(e),
        }
    })
}

/// Weak-input conversion efficiency.
///
/// # Safety
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn cq_analytic_efficiency(gamma_fg_t: f64, gamma_eg_t: f64, g_c: f64, out: *mut f64) -> CqStatus {
    guard(|| {
        if out.is_null() {
            return null();
        }
        let p = AnalyticParams {
            gamma_fg_t,
            gamma_eg_t,
            g_c,
        };
        match efficiency(&p) {
            Ok(z) => {
                *out = z;
                CqStatus::Ok
            }
            Err(e) => fail(e),
        }
    })
}

/// `gamma_eg_t` maximizing the weak-input efficiency.
#[no_mangle]
pub extern "C" fn cq_optimal_gamma_eg(gamma_fg_t: f64, g_c: f64) -> f64 {
    optimal_gamma_eg(gamma_fg_t, g_c)
}

/// Lengths in m, impedance in ohm, `f_c` in MHz.
#[repr(C)]
#[derive(Debug, Clone, Copy)]
pub struct CqDeviceParams {
    pub z_cav: f64,
    pub d: f64,
    pub d_prime: f64,
    pub l: f64,
    pub f_c: f64,
    pub a: f64,
    pub eps_gaas: f64,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, Default)]
pub struct CqCouplingReport {
    /// C m
    pub p: f64,
    pub eps_eff: f64,
    pub enhancement: f64,
    /// V/m
    pub e_rms: f64,
    /// MHz
    pub g_c: f64,
}

#[no_mangle]
pub extern "C" fn cq_device_params_default() -> CqDeviceParams {
    let d = DeviceParams::default();
    CqDeviceParams {
        z_cav: d.z_cav,
        d: d.d,
        d_prime: d.d_prime,
        l: d.l,
        f_c: d.f_c,
        a: d.a,
        eps_gaas: d.eps_gaas,
    }
}

/// # Safety
/// `dev` must point to a valid struct and `out` be writable.
#[no_mangle]
pub unsafe extern "C" fn cq_coupling_strength(dev: *const CqDeviceParams, out: *mut CqCouplingReport) -> CqStatus {
    guard(|| {
        if dev.is_null() || out.is_null() {
            return null();
        }
        let d = &*dev;
        let dev = DeviceParams {
            z_cav: d.z_cav,
            d: d.d,
            d_prime: d.d_prime,
            l: d.l,
            f_c: d.f_c,
            a: d.a,
            eps_gaas: d.eps_gaas,
        };
        if let Err(e) = dev.validate() {
            return fail(e);
        }
        match coupling_strength(&dev) {
            Ok(r) => {
                *out = CqCouplingReport {
                    p: r.p,
                    eps_eff: r.eps_eff,
                    enhancement: r.enhancement,
                    e_rms: r.e_rms,
                    g_c: r.g_c,
                };
                CqStatus::Ok
            }
            Err(e) => fail(e),
        }
    })
}

/// Probability that the which-bin erasure heralds. `detectors` is 1 or 2.
///
/// # Safety
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn cq_erasure_herald_prob(
    early_re: f64,
    early_im: f64,
    late_re: f64,
    late_im: f64,
    detector_efficiency: f64,
    detectors: u32,
    out: *mut f64,
) -> CqStatus {
    use cascadeq::Complex64;
    guard(|| {
        if out.is_null() {
            return null();
        }
        let det = match detectors {
            1 => Detectors::One,
            2 => Detectors::Two,
            n => return fail(Error::InvalidParameter(format!("detectors must be 1 or 2, got {n}"))),
        };
        let early = Complex64::new(early_re, early_im);
        let late = Complex64::new(late_re, late_im);
        match erasure_herald(early, late, detector_efficiency, det) {
            Ok(o) => {
                *out = o.herald_prob;
                CqStatus::Ok
            }
            Err(e) => fail(e),
        }
    })
}
