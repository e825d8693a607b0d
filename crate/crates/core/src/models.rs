//! The two conversion models: optical photon to microwave (o2m) through a
//! cascaded source, and microwave to optical (m2o) with a constant drive.
//!
//! Level order: source `G, F, E`; target `G, E, F`; cavity Fock `0..n`.

use ndarray::Array2;
use num_complex::Complex64;

use crate::engine::{
    lindblad_oracle, run_ensemble_with, DriveEnvelope, EffectiveModel, EnsembleConfig, EnsembleResult, RateStatistic,
    Simulator, StopRules,
};
use crate::error::{Error, Result};
use crate::hilbert::{annihilation_op, transition_op, HilbertSpec, OperatorMatrix, StateVector};
use crate::units::mhz_to_angular;

pub const SOURCE: &str = "source";
pub const TARGET: &str = "target";
pub const CAVITY: &str = "cavity";

/// Source levels.
pub mod src {
    pub const G: usize = 0;
    pub const F: usize = 1;
    pub const E: usize = 2;
}

/// Target (coupled quantum dot) levels.
pub mod tgt {
    pub const G: usize = 0;
    pub const E: usize = 1;
    pub const F: usize = 2;
}

/// Longest automatically chosen simulation window.
pub const T_FINAL_CAP_NS: f64 = 200.0;

/// Optical-to-microwave parameters. Rates are `nu = omega / 2 pi` in MHz,
/// times in ns.
#[derive(Debug, Clone, PartialEq)]
pub struct O2MParams {
    pub gamma_fe_s: f64,
    pub gamma_fg_t: f64,
    pub gamma_eg_t: f64,
    pub g_c: f64,
    pub kappa_c: f64,
    pub eta: f64,
    /// Peak of the Gaussian source drive.
    pub omega_0: f64,
    pub sigma: f64,
    pub t0: f64,
    pub cavity_dim: usize,
    /// Count a herald only if no cavity loss happened before it.
    pub strict_herald: bool,
}

impl Default for O2MParams {
    fn default() -> Self {
        Self {
            gamma_fe_s: 300.0,
            gamma_fg_t: 300.0,
            gamma_eg_t: 300.0,
            g_c: 200.0,
            kappa_c: 3.0,
            eta: 1.0,
            omega_0: 100.0,
            sigma: 5.0,
            t0: 20.0,
            cavity_dim: 2,
            strict_herald: false,
        }
    }
}

fn check_rate(name: &str, v: f64) -> Result<()> {
    if !v.is_finite() || v < 0.0 {
        return Err(Error::InvalidParameter(format!("{name} must be a finite rate >= 0, got {v}")));
    }
    Ok(())
}

fn check_cavity(dim: usize) -> Result<()> {
    if dim < 2 {
        return Err(Error::InvalidParameter(format!("cavity_dim must be >= 2, got {dim}")));
    }
    Ok(())
}

impl O2MParams {
    /// Validates and returns soft warnings.
    pub fn validate(&self) -> Result<Vec<String>> {
        check_rate("gamma_fe_s", self.gamma_fe_s)?;
        check_rate("gamma_fg_t", self.gamma_fg_t)?;
        check_rate("gamma_eg_t", self.gamma_eg_t)?;
        check_rate("g_c", self.g_c)?;
        check_rate("kappa_c", self.kappa_c)?;
        check_rate("omega_0", self.omega_0)?;
        if !(0.0..=1.0).contains(&self.eta) {
            return Err(Error::InvalidParameter(format!("eta must lie in [0, 1], got {}", self.eta)));
        }
        if !(self.sigma.is_finite() && self.sigma > 0.0) {
            return Err(Error::InvalidParameter(format!("sigma must be positive, got {}", self.sigma)));
        }
        if !self.t0.is_finite() {
            return Err(Error::InvalidParameter("t0 must be finite".into()));
        }
        check_cavity(self.cavity_dim)?;
        let mut warn = Vec::new();
        let bandwidth = 1e3 / (2.0 * std::f64::consts::PI * self.sigma);
        if bandwidth >= self.gamma_fg_t {
            warn.push(format!(
                "pulse bandwidth 1/(2 pi sigma) = {bandwidth:.1} MHz is not below gamma_fg_t = {} MHz",
                self.gamma_fg_t
            ));
        }
        if self.gamma_fe_s > 0.0 && self.omega_0 / self.gamma_fe_s > 1.0 / 3.0 + 1e-12 {
            warn.push(format!(
                "omega_0 / gamma_fe_s = {:.3} exceeds 1/3; the emitted photon is no longer a clean single pulse",
                self.omega_0 / self.gamma_fe_s
            ));
        }
        if self.t0 < 3.0 * self.sigma {
            warn.push("pulse centre t0 < 3 sigma; the drive is truncated at t = 0".into());
        }
        Ok(warn)
    }

    pub fn space(&self) -> Result<HilbertSpec> {
        HilbertSpec::new([(SOURCE, 3), (TARGET, 3), (CAVITY, self.cavity_dim)])
    }

    /// Time the drive switches on; the origin for the o2m rate.
    pub fn rate_reference(&self) -> f64 {
        DriveEnvelope::gaussian(1.0, self.t0, self.sigma).onset()
    }

    pub fn default_t_final(&self) -> f64 {
        let mut rates = vec![self.gamma_fe_s, self.gamma_fg_t, self.gamma_eg_t];
        if self.gamma_fg_t > 0.0 {
            rates.push(4.0 * self.g_c * self.g_c / self.gamma_fg_t);
        }
        let slowest = rates
            .into_iter()
            .filter(|&r| r > 0.0)
            .map(mhz_to_angular)
            .fold(f64::INFINITY, f64::min);
        let t = if slowest.is_finite() {
            self.t0 + 10.0 / slowest
        } else {
            T_FINAL_CAP_NS
        };
        t.min(T_FINAL_CAP_NS).max(self.t0 + 4.0 * self.sigma)
    }

    pub fn default_dt(&self, model: &EffectiveModel) -> f64 {
        default_dt(model, Some(self.sigma))
    }
}

/// `min(0.05 / fastest rate, sigma / 50)`.
pub fn default_dt(model: &EffectiveModel, sigma: Option<f64>) -> f64 {
    let rate = model.max_rate();
    let mut dt = if rate > 0.0 { 0.05 / rate } else { 0.05 };
    if let Some(s) = sigma {
        dt = dt.min(s / 50.0);
    }
    dt
}

/// Microwave-to-optical parameters (MHz).
#[derive(Debug, Clone, PartialEq)]
pub struct M2OParams {
    pub gamma_fg_t: f64,
    pub gamma_eg_t: f64,
    pub g_c: f64,
    pub kappa_c: f64,
    /// Constant G-E drive; `None` means `gamma_fg_t / 3`.
    pub omega_0: Option<f64>,
    pub cavity_dim: usize,
    pub strict_herald: bool,
}

impl Default for M2OParams {
    fn default() -> Self {
        Self {
            gamma_fg_t: 300.0,
            gamma_eg_t: 300.0,
            g_c: 200.0,
            kappa_c: 3.0,
            omega_0: None,
            cavity_dim: 2,
            strict_herald: false,
        }
    }
}

impl M2OParams {
    pub fn omega(&self) -> f64 {
        self.omega_0.unwrap_or(self.gamma_fg_t / 3.0)
    }

    pub fn validate(&self) -> Result<Vec<String>> {
        check_rate("gamma_fg_t", self.gamma_fg_t)?;
        check_rate("gamma_eg_t", self.gamma_eg_t)?;
        check_rate("g_c", self.g_c)?;
        check_rate("kappa_c", self.kappa_c)?;
        check_rate("omega_0", self.omega())?;
        check_cavity(self.cavity_dim)?;
        Ok(Vec::new())
    }

    pub fn space(&self) -> Result<HilbertSpec> {
        HilbertSpec::new([(TARGET, 3), (CAVITY, self.cavity_dim)])
    }

    /// Twenty times the slower of the two series steps (cavity uptake and
    /// drive pumping), capped.
    pub fn default_t_final(&self) -> f64 {
        let sum = mhz_to_angular(self.gamma_eg_t + self.gamma_fg_t);
        if sum <= 0.0 {
            return T_FINAL_CAP_NS;
        }
        let g = mhz_to_angular(self.g_c);
        let om = mhz_to_angular(self.omega());
        let k_up = 4.0 * g * g / sum;
        let k_pump = 4.0 * om * om / sum;
        if k_up <= 0.0 || k_pump <= 0.0 {
            return T_FINAL_CAP_NS;
        }
        let k_eff = 1.0 / (1.0 / k_up + 1.0 / k_pump);
        (20.0 / k_eff).min(T_FINAL_CAP_NS)
    }
}

fn sigma(space: &HilbertSpec, sub: &str, i: usize, j: usize) -> Result<OperatorMatrix> {
    transition_op(space, sub, i, j)
}

/// Builds the cascaded o2m model and its initial state `|G>_s |G, 0>_t`.
pub fn build_o2m(p: &O2MParams) -> Result<(EffectiveModel, StateVector)> {
    p.validate()?;
    let s = p.space()?;
    let mut m = EffectiveModel::new(s.clone());
    let (g_fe, g_fg, g_eg) = (
        mhz_to_angular(p.gamma_fe_s),
        mhz_to_angular(p.gamma_fg_t),
        mhz_to_angular(p.gamma_eg_t),
    );
    let a = annihilation_op(&s, CAVITY)?;

    let drive = &sigma(&s, SOURCE, src::G, src::F)? + &sigma(&s, SOURCE, src::F, src::G)?;
    m.add_hermitian(drive, DriveEnvelope::gaussian(mhz_to_angular(p.omega_0), p.t0, p.sigma))?;
    let fe = sigma(&s, TARGET, tgt::F, tgt::E)?;
    let jc = &(&a * &fe) + &(&a.adjoint() * &fe.adjoint());
    m.add_hermitian(jc.scale_real(mhz_to_angular(p.g_c)), DriveEnvelope::constant(1.0))?;

    let src_emit = sigma(&s, SOURCE, src::E, src::F)?;
    let tgt_gf = sigma(&s, TARGET, tgt::G, tgt::F)?;
    let c1 = &src_emit.scale_real(g_fe.sqrt()) + &tgt_gf.scale_real((g_fg * p.eta).sqrt());
    m.add_channel("C1", c1, false)?;
    m.add_channel("C2", tgt_gf.scale_real((g_fg * (1.0 - p.eta)).sqrt()), false)?;
    m.add_channel("C3", sigma(&s, TARGET, tgt::G, tgt::E)?.scale_real(g_eg.sqrt()), true)?;
    m.add_channel("C4", a.scale_real(mhz_to_angular(p.kappa_c).sqrt()), false)?;

    // One-way coupling: keep only -i sqrt(..) sigma_EF^s sigma_FG^t and cancel
    // the reverse cross term produced by C1† C1.
    let k = (g_fg * g_fe * p.eta).sqrt();
    let forward = &src_emit * &tgt_gf.adjoint();
    let reverse = forward.adjoint();
    let extra = &forward.scale(Complex64::new(0.0, -0.5 * k)) + &reverse.scale(Complex64::new(0.0, 0.5 * k));
    m.add_extra(extra)?;

    let psi0 = StateVector::basis(&s, &[src::G, tgt::G, 0])?;
    Ok((m, psi0))
}

/// Builds the m2o model and its initial state `|G, 1_c>`.
pub fn build_m2o(p: &M2OParams) -> Result<(EffectiveModel, StateVector)> {
    p.validate()?;
    let s = p.space()?;
    let mut m = EffectiveModel::new(s.clone());
    let a = annihilation_op(&s, CAVITY)?;
    let ge = &sigma(&s, TARGET, tgt::G, tgt::E)? + &sigma(&s, TARGET, tgt::E, tgt::G)?;
    m.add_hermitian(ge, DriveEnvelope::constant(mhz_to_angular(p.omega())))?;
    let fe = sigma(&s, TARGET, tgt::F, tgt::E)?;
    let jc = &(&a * &fe) + &(&a.adjoint() * &fe.adjoint());
    m.add_hermitian(jc, DriveEnvelope::constant(mhz_to_angular(p.g_c)))?;
    m.add_channel(
        "C1",
        sigma(&s, TARGET, tgt::G, tgt::F)?.scale_real(mhz_to_angular(p.gamma_fg_t).sqrt()),
        true,
    )?;
    m.add_channel(
        "C2",
        sigma(&s, TARGET, tgt::G, tgt::E)?.scale_real(mhz_to_angular(p.gamma_eg_t).sqrt()),
        false,
    )?;
    m.add_channel("C3", a.scale_real(mhz_to_angular(p.kappa_c).sqrt()), false)?;
    let psi0 = StateVector::basis(&s, &[tgt::G, 1])?;
    Ok((m, psi0))
}

/// Settings for an efficiency estimate.
#[derive(Debug, Clone, PartialEq)]
pub struct RunOptions {
    pub n_traj: usize,
    pub seed: u64,
    pub threads: Option<usize>,
    pub rate_statistic: RateStatistic,
    pub t_final: Option<f64>,
    pub dt: Option<f64>,
    /// Stop trajectories once their herald outcome is settled.
    pub early_stop: bool,
    /// Keep every trajectory's jump record in the result.
    pub keep_jumps: bool,
}

impl RunOptions {
    pub fn new(n_traj: usize, seed: u64) -> Self {
        Self {
            n_traj,
            seed,
            threads: None,
            rate_statistic: RateStatistic::Mean,
            t_final: None,
            dt: None,
            early_stop: true,
            keep_jumps: false,
        }
    }
}

fn estimate(
    model: &EffectiveModel,
    psi0: &StateVector,
    t_final: f64,
    dt: f64,
    veto: Vec<String>,
    rate_reference: f64,
    opt: &RunOptions,
) -> Result<EnsembleResult> {
    let mut sim = Simulator::new(model, t_final, dt)?;
    let stop = StopRules {
        at_first_herald: opt.early_stop,
        when_herald_unreachable: opt.early_stop,
        veto,
    };
    sim.set_stop_rules(stop.clone())?;
    let cfg = EnsembleConfig {
        n_traj: opt.n_traj,
        base_seed: opt.seed,
        threads: opt.threads,
        stop,
        rate_reference,
        rate_statistic: opt.rate_statistic,
        keep_jumps: opt.keep_jumps,
    };
    run_ensemble_with(&sim, psi0, &cfg)
}

/// Herald (C3) statistics of the o2m model; rate measured from the drive
/// onset.
pub fn o2m_efficiency_with(p: &O2MParams, opt: &RunOptions) -> Result<EnsembleResult> {
    let (m, psi0) = build_o2m(p)?;
    let t_final = opt.t_final.unwrap_or_else(|| p.default_t_final());
    let dt = opt.dt.unwrap_or_else(|| p.default_dt(&m));
    let veto = if p.strict_herald { vec!["C4".to_string()] } else { Vec::new() };
    estimate(&m, &psi0, t_final, dt, veto, p.rate_reference(), opt)
}

pub fn o2m_efficiency(p: &O2MParams, n_traj: usize, seed: u64) -> Result<EnsembleResult> {
    o2m_efficiency_with(p, &RunOptions::new(n_traj, seed))
}

/// Herald (C1) statistics of the m2o model; rate measured from t = 0.
pub fn m2o_efficiency_with(p: &M2OParams, opt: &RunOptions) -> Result<EnsembleResult> {
    let (m, psi0) = build_m2o(p)?;
    let t_final = opt.t_final.unwrap_or_else(|| p.default_t_final());
    let dt = opt.dt.unwrap_or_else(|| default_dt(&m, None));
    let veto = if p.strict_herald { vec!["C3".to_string()] } else { Vec::new() };
    estimate(&m, &psi0, t_final, dt, veto, 0.0, opt)
}

pub fn m2o_efficiency(p: &M2OParams, n_traj: usize, seed: u64) -> Result<EnsembleResult> {
    m2o_efficiency_with(p, &RunOptions::new(n_traj, seed))
}

/// Largest two-photon population seen when the o2m model is rerun with a
/// three-level cavity. Should stay below 1e-6 for the two-level truncation
/// to be trusted.
pub fn o2m_fock_overflow(p: &O2MParams) -> Result<f64> {
    let mut q = p.clone();
    q.cavity_dim = 3;
    let (m, psi0) = build_o2m(&q)?;
    let t_final = q.default_t_final();
    let times: Vec<f64> = (0..=40).map(|k| t_final * k as f64 / 40.0).collect();
    let rho0 = Array2::from_shape_fn((psi0.space().dim(), psi0.space().dim()), |(i, j)| {
        psi0.amplitudes()[i] * psi0.amplitudes()[j].conj()
    });
    let traj = lindblad_oracle(&m, &rho0, t_final, q.default_dt(&m), &times)?;
    let s = m.space();
    let two = crate::hilbert::transition_op(s, CAVITY, 2, 2)?;
    Ok(traj.expectation(&two).into_iter().fold(0.0, f64::max))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_are_quiet() {
        assert!(O2MParams::default().validate().unwrap().is_empty());
        assert_eq!(M2OParams::default().omega(), 100.0);
    }

    #[test]
    fn warnings_and_errors() {
        let p = O2MParams {
            sigma: 0.1,
            omega_0: 300.0,
            ..Default::default()
        };
        assert_eq!(p.validate().unwrap().len(), 2);
        let bad = O2MParams {
            eta: 1.5,
            ..Default::default()
        };
        assert!(bad.validate().is_err());
        let bad = M2OParams {
            kappa_c: -1.0,
            ..Default::default()
        };
        assert!(build_m2o(&bad).is_err());
    }

    #[test]
    fn c2_vanishes_at_unit_eta() {
        let (m, _) = build_o2m(&O2MParams::default()).unwrap();
        assert_eq!(m.channel("C2").unwrap().op.nonzero_count(), 0);
        assert_eq!(m.space().dim(), 18);
    }

    #[test]
    fn t_final_choices() {
        let p = O2MParams::default();
        let t = p.default_t_final();
        assert!(t > p.t0 + 3.0 * p.sigma && t <= T_FINAL_CAP_NS);
        let q = M2OParams {
            g_c: 0.0,
            ..Default::default()
        };
        assert_eq!(q.default_t_final(), T_FINAL_CAP_NS);
        assert!(M2OParams::default().default_t_final() < 60.0);
    }
}
