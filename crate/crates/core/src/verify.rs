//! Trajectory ensembles checked against the master-equation oracle on a
//! time grid.

use crate::engine::{lindblad_oracle, observable_series, DriveEnvelope, EffectiveModel};
use crate::error::{Error, Result};
use crate::hilbert::{annihilation_op, transition_op, OperatorMatrix, StateVector};
use crate::models::{build_m2o, build_o2m, default_dt, M2OParams, O2MParams, CAVITY};
use crate::units::mhz_to_angular;

/// Deviations are measured in standard errors; this is the pass limit.
pub const Z_LIMIT: f64 = 3.0;

/// Two-level test rates, MHz.
pub const DECAY_RATE: f64 = 50.0;
pub const RABI_DRIVE: f64 = 50.0;
pub const RABI_DECAY: f64 = 20.0;

#[derive(Debug, Clone, PartialEq)]
pub enum OracleCase {
    Decay,
    /// Resonantly driven two-level system with spontaneous emission.
    Rabi,
    O2M(O2MParams),
    M2O(M2OParams),
}

/// A model, its initial state, its timing and the observables to compare.
#[derive(Debug, Clone)]
pub struct CheckSetup {
    pub model: EffectiveModel,
    pub psi0: StateVector,
    pub t_final: f64,
    pub dt: f64,
    pub observables: Vec<(String, OperatorMatrix)>,
}

fn two_level(drive: f64, decay: f64) -> Result<(EffectiveModel, StateVector)> {
    let s = crate::hilbert::HilbertSpec::new([("atom", 2)])?;
    let mut m = EffectiveModel::new(s.clone());
    if drive > 0.0 {
        let x = &transition_op(&s, "atom", 0, 1)? + &transition_op(&s, "atom", 1, 0)?;
        m.add_hermitian(x, DriveEnvelope::constant(mhz_to_angular(drive)))?;
    }
    m.add_channel(
        "decay",
        transition_op(&s, "atom", 0, 1)?.scale_real(mhz_to_angular(decay).sqrt()),
        true,
    )?;
    let start = if drive > 0.0 { 0 } else { 1 };
    let psi0 = StateVector::basis(&s, &[start])?;
    Ok((m, psi0))
}

/// Level populations of every non-cavity subsystem plus the cavity photon
/// number.
fn standard_observables(m: &EffectiveModel) -> Result<Vec<(String, OperatorMatrix)>> {
    let s = m.space();
    let mut out = Vec::new();
    for sub in s.subsystems() {
        if sub.label == CAVITY {
            let a = annihilation_op(s, CAVITY)?;
            out.push(("cavity_n".to_string(), &a.adjoint() * &a));
        } else {
            for k in 0..sub.dim {
                out.push((format!("{}_{k}", sub.label), transition_op(s, &sub.label, k, k)?));
            }
        }
    }
    Ok(out)
}

impl OracleCase {
    pub fn name(&self) -> &'static str {
        match self {
            Self::Decay => "decay",
            Self::Rabi => "rabi",
            Self::O2M(_) => "o2m",
            Self::M2O(_) => "m2o",
        }
    }

    pub fn setup(&self) -> Result<CheckSetup> {
        let (model, psi0, t_final, dt) = match self {
            Self::Decay => {
                let (m, psi) = two_level(0.0, DECAY_RATE)?;
                let dt = default_dt(&m, None);
                (m, psi, 5.0 / mhz_to_angular(DECAY_RATE), dt)
            }
            Self::Rabi => {
                let (m, psi) = two_level(RABI_DRIVE, RABI_DECAY)?;
                let dt = default_dt(&m, None);
                (m, psi, 3.0 / mhz_to_angular(RABI_DECAY), dt)
            }
            Self::O2M(p) => {
                let (m, psi) = build_o2m(p)?;
                let dt = p.default_dt(&m);
                (m, psi, p.default_t_final(), dt)
            }
            Self::M2O(p) => {
                let (m, psi) = build_m2o(p)?;
                let dt = default_dt(&m, None);
                (m, psi, p.default_t_final(), dt)
            }
        };
        let observables = standard_observables(&model)?;
        Ok(CheckSetup {
            model,
            psi0,
            t_final,
            dt,
            observables,
        })
    }
}

/// Copy of `m` with every collapse operator scaled by `sqrt(factor)`.
pub fn scale_decay_rates(m: &EffectiveModel, factor: f64) -> Result<EffectiveModel> {
    if !(factor.is_finite() && factor >= 0.0) {
        return Err(Error::InvalidParameter(format!("rate scale must be >= 0, got {factor}")));
    }
    let mut out = EffectiveModel::new(m.space().clone());
    for h in m.hermitian_terms() {
        out.add_hermitian(h.op.clone(), h.envelope)?;
    }
    for c in m.channels() {
        out.add_channel(c.label.clone(), c.op.scale_real(factor.sqrt()), c.herald)?;
    }
    for e in m.extra_terms() {
        out.add_extra(e.clone())?;
    }
    for k in m.kicks() {
        out.add_kick(k.time, k.label.clone(), k.unitary.clone())?;
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq)]
pub struct OracleReport {
    pub times: Vec<f64>,
    pub labels: Vec<String>,
    /// `[sample][observable]`
    pub mc_mean: Vec<Vec<f64>>,
    pub mc_stderr: Vec<Vec<f64>>,
    pub oracle: Vec<Vec<f64>>,
    /// Largest `|mc - oracle| / max(stderr, error_floor)`.
    pub max_deviation: f64,
    pub worst_time: f64,
    pub worst_label: String,
    pub n_traj: usize,
    pub pass: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct OracleCheckOptions {
    pub n_traj: usize,
    pub points: usize,
    pub seed: u64,
    pub threads: Option<usize>,
    /// Multiplies all decay rates in the oracle only. 1 for a real check.
    pub oracle_rate_scale: f64,
}

impl OracleCheckOptions {
    pub fn new(n_traj: usize, seed: u64) -> Self {
        Self {
            n_traj,
            points: 50,
            seed,
            threads: None,
            oracle_rate_scale: 1.0,
        }
    }
}

/// Below this many expected carriers the sample spread is not trusted.
pub const RARE_COUNT: f64 = 10.0;

/// Smallest error scale for an expectation `mu` from `n` trajectories.
/// Nothing below `1/n` is resolvable. When fewer than [`RARE_COUNT`]
/// trajectories are expected to carry the population (or to lack it), the
/// sample variance comes from a handful of them and runs low, so the
/// Poisson error of the expected count is used instead.
pub fn error_floor(mu: f64, n: usize) -> f64 {
    let n = n as f64;
    let rare = mu.min(1.0 - mu).max(0.0);
    if rare * n < RARE_COUNT {
        (rare.max(1.0 / n) / n).sqrt()
    } else {
        1.0 / n
    }
}

/// Samples at `points` equally spaced times in `(0, t_final]`.
pub fn oracle_check(setup: &CheckSetup, opt: &OracleCheckOptions) -> Result<OracleReport> {
    if opt.points == 0 {
        return Err(Error::InvalidParameter("need at least one comparison time".into()));
    }
    let times: Vec<f64> = (1..=opt.points)
        .map(|k| (setup.t_final * k as f64 / opt.points as f64).min(setup.t_final))
        .collect();
    let ops: Vec<OperatorMatrix> = setup.observables.iter().map(|(_, o)| o.clone()).collect();
    let labels: Vec<String> = setup.observables.iter().map(|(l, _)| l.clone()).collect();
    let oracle_model = if opt.oracle_rate_scale == 1.0 {
        setup.model.clone()
    } else {
        scale_decay_rates(&setup.model, opt.oracle_rate_scale)?
    };
    let rho0 = setup.psi0.projector();
    let traj = lindblad_oracle(&oracle_model, &rho0, setup.t_final, setup.dt, &times)?;
    let series = observable_series(
        &setup.model,
        &setup.psi0,
        setup.t_final,
        setup.dt,
        &times,
        &ops,
        opt.n_traj,
        opt.seed,
        opt.threads,
    )?;
    let per_op: Vec<Vec<f64>> = ops.iter().map(|o| traj.expectation(o)).collect();
    let oracle: Vec<Vec<f64>> = (0..times.len())
        .map(|s| per_op.iter().map(|v| v[s]).collect())
        .collect();
    let mut max_deviation: f64 = 0.0;
    let mut worst = (0.0, String::new());
    for s in 0..times.len() {
        for k in 0..ops.len() {
            let z = (series.mean[s][k] - oracle[s][k]).abs() / series.stderr[s][k].max(error_floor(oracle[s][k], series.n_traj));
            if z > max_deviation {
                max_deviation = z;
                worst = (times[s], labels[k].clone());
            }
        }
    }
    Ok(OracleReport {
        times,
        labels,
        mc_mean: series.mean,
        mc_stderr: series.stderr,
        oracle,
        max_deviation,
        worst_time: worst.0,
        worst_label: worst.1,
        n_traj: series.n_traj,
        pass: max_deviation <= Z_LIMIT,
    })
}
