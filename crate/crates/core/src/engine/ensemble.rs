use std::io::Write;

use rayon::prelude::*;

use super::model::EffectiveModel;
use super::trajectory::{JumpEvent, Simulator, StopRules, TrajectoryRecord};
use crate::error::{Error, Result};
use crate::hilbert::{OperatorMatrix, StateVector};

/// Minimum herald count for a rate estimate.
pub const MIN_HERALDS: usize = 20;

/// Fraction of aborted trajectories above which the ensemble fails.
const MAX_FAILURE_FRACTION: f64 = 0.01;

/// Which summary of the herald-time distribution defines the transfer time.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub enum RateStatistic {
    #[default]
    Mean,
    P50,
    P90,
}

impl RateStatistic {
    pub fn name(self) -> &'static str {
        match self {
            Self::Mean => "mean",
            Self::P50 => "p50",
            Self::P90 => "p90",
        }
    }
}

impl std::str::FromStr for RateStatistic {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "mean" => Ok(Self::Mean),
            "p50" | "median" => Ok(Self::P50),
            "p90" => Ok(Self::P90),
            other => Err(Error::InvalidParameter(format!(
                "unknown rate statistic `{other}` (expected mean, p50 or p90)"
            ))),
        }
    }
}

/// Linear-interpolated empirical quantile of sorted data.
fn quantile(sorted: &[f64], q: f64) -> f64 {
    let pos = q * (sorted.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    let frac = pos - lo as f64;
    sorted[lo] + (sorted[hi] - sorted[lo]) * frac
}

/// Conversion rate in MHz, `1000 / tau` with `tau` (ns) the chosen herald
/// statistic measured from `t_reference`.
pub fn estimate_rate(herald_times: &[f64], t_reference: f64, statistic: RateStatistic) -> Result<f64> {
    if herald_times.len() < MIN_HERALDS {
        return Err(Error::InsufficientStatistics {
            got: herald_times.len(),
            need: MIN_HERALDS,
        });
    }
    let t = match statistic {
        RateStatistic::Mean => herald_times.iter().sum::<f64>() / herald_times.len() as f64,
        RateStatistic::P50 | RateStatistic::P90 => {
            let mut v = herald_times.to_vec();
            v.sort_by(f64::total_cmp);
            quantile(&v, if statistic == RateStatistic::P50 { 0.5 } else { 0.9 })
        }
    };
    let tau = t - t_reference;
    if tau <= 0.0 {
        return Err(Error::NonPositiveDelay(tau));
    }
    Ok(1000.0 / tau)
}

#[derive(Debug, Clone, PartialEq)]
pub struct EnsembleConfig {
    pub n_traj: usize,
    pub base_seed: u64,
    /// Worker count; `None` uses all cores. Results do not depend on it.
    pub threads: Option<usize>,
    pub stop: StopRules,
    pub rate_reference: f64,
    pub rate_statistic: RateStatistic,
    pub keep_jumps: bool,
}

impl EnsembleConfig {
    pub fn new(n_traj: usize, base_seed: u64) -> Self {
        Self {
            n_traj,
            base_seed,
            threads: None,
            stop: StopRules::default(),
            rate_reference: 0.0,
            rate_statistic: RateStatistic::Mean,
            keep_jumps: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EnsembleResult {
    pub n_traj: usize,
    pub n_failed: usize,
    pub herald_count: usize,
    /// `herald_count / (n_traj - n_failed)`
    pub efficiency: f64,
    pub efficiency_stderr: f64,
    /// First herald time of each heralded trajectory, in trajectory order.
    pub herald_times: Vec<f64>,
    /// `None` when fewer than [`MIN_HERALDS`] heralds were seen.
    pub rate_mhz: Option<f64>,
    /// Per-trajectory jump lists when requested (empty for failed runs).
    pub jumps: Vec<Vec<JumpEvent>>,
}

impl EnsembleResult {
    /// Line format `traj_index, jump_time_ns, channel_label`.
    pub fn write_jump_log<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        for (i, js) in self.jumps.iter().enumerate() {
            for j in js {
                writeln!(w, "{}, {:.6}, {}", i, j.time, j.label)?;
            }
        }
        Ok(())
    }
}

/// Time-resolved ensemble averages with standard errors.
#[derive(Debug, Clone, PartialEq)]
pub struct ObservableSeries {
    pub times: Vec<f64>,
    /// `mean[s][k]` for sample `s`, observable `k`.
    pub mean: Vec<Vec<f64>>,
    pub stderr: Vec<Vec<f64>>,
    pub n_traj: usize,
}

pub(crate) fn trajectory_seed(base_seed: u64, index: usize) -> u64 {
    base_seed.wrapping_add(index as u64)
}

pub(crate) fn with_pool<T: Send>(threads: Option<usize>, f: impl FnOnce() -> T + Send) -> Result<T> {
    let mut b = rayon::ThreadPoolBuilder::new();
    if let Some(n) = threads {
        b = b.num_threads(n.max(1));
    }
    let pool = b
        .build()
        .map_err(|e| Error::InvalidParameter(format!("thread pool: {e}")))?;
    Ok(pool.install(f))
}

pub(crate) fn failure_check(n_failed: usize, total: usize, first: Option<&Error>) -> Result<()> {
    if n_failed as f64 > MAX_FAILURE_FRACTION * total as f64 {
        return Err(Error::TooManyFailures {
            failed: n_failed,
            total,
            first: first.map(|e| e.to_string()).unwrap_or_default(),
        });
    }
    Ok(())
}

/// Runs all trajectories and returns the raw records in index order.
pub fn run_records(
    sim: &Simulator,
    psi0: &StateVector,
    n_traj: usize,
    base_seed: u64,
    threads: Option<usize>,
) -> Result<Vec<Result<TrajectoryRecord>>> {
    with_pool(threads, || {
        (0..n_traj)
            .into_par_iter()
            .map(|i| sim.run(psi0, trajectory_seed(base_seed, i)))
            .collect()
    })
}

/// Whether a record counts as heralded: a herald jump that is not preceded
/// by a veto jump.
pub(crate) fn herald_time(rec: &TrajectoryRecord, herald: &[bool], veto: &[bool]) -> Option<f64> {
    for j in &rec.jumps {
        if herald[j.channel] {
            return Some(j.time);
        }
        if veto[j.channel] {
            return None;
        }
    }
    None
}

pub fn run_ensemble_with(sim: &Simulator, psi0: &StateVector, cfg: &EnsembleConfig) -> Result<EnsembleResult> {
    if cfg.n_traj == 0 {
        return Err(Error::InvalidParameter("n_traj must be at least 1".into()));
    }
    let records = run_records(sim, psi0, cfg.n_traj, cfg.base_seed, cfg.threads)?;
    let mut n_failed = 0;
    let mut first_err = None;
    let mut herald_times = Vec::new();
    let mut jumps = Vec::new();
    for rec in records {
        match rec {
            Ok(rec) => {
                if let Some(t) = herald_time(&rec, sim.herald_flags(), sim.veto_flags()) {
                    herald_times.push(t);
                }
                if cfg.keep_jumps {
                    jumps.push(rec.jumps);
                }
            }
            Err(e) => {
                n_failed += 1;
                if first_err.is_none() {
                    first_err = Some(e);
                }
                if cfg.keep_jumps {
                    jumps.push(Vec::new());
                }
            }
        }
    }
    failure_check(n_failed, cfg.n_traj, first_err.as_ref())?;
    let done = cfg.n_traj - n_failed;
    let herald_count = herald_times.len();
    let p = herald_count as f64 / done as f64;
    let rate_mhz = match estimate_rate(&herald_times, cfg.rate_reference, cfg.rate_statistic) {
        Ok(r) => Some(r),
        Err(Error::InsufficientStatistics { .. }) => None,
        Err(e) => return Err(e),
    };
    Ok(EnsembleResult {
        n_traj: cfg.n_traj,
        n_failed,
        herald_count,
        efficiency: p,
        efficiency_stderr: (p * (1.0 - p) / done as f64).sqrt(),
        herald_times,
        rate_mhz,
        jumps,
    })
}

/// Ensemble with trajectory `i` seeded by `base_seed + i`.
pub fn run_ensemble(
    model: &EffectiveModel,
    psi0: &StateVector,
    t_final: f64,
    dt: f64,
    cfg: &EnsembleConfig,
) -> Result<EnsembleResult> {
    let mut sim = Simulator::new(model, t_final, dt)?;
    sim.set_stop_rules(cfg.stop.clone())?;
    run_ensemble_with(&sim, psi0, cfg)
}

/// Ensemble averages of `observables` at `sample_times`. Stop rules are
/// not applied.
#[allow(clippy::too_many_arguments)]
pub fn observable_series(
    model: &EffectiveModel,
    psi0: &StateVector,
    t_final: f64,
    dt: f64,
    sample_times: &[f64],
    observables: &[OperatorMatrix],
    n_traj: usize,
    base_seed: u64,
    threads: Option<usize>,
) -> Result<ObservableSeries> {
    if n_traj < 2 {
        return Err(Error::InvalidParameter("need at least 2 trajectories for a standard error".into()));
    }
    let sim = Simulator::with_samples(model, t_final, dt, sample_times, observables)?;
    let per = sample_times.len() * observables.len();
    let runs: Vec<Result<Vec<f64>>> = with_pool(threads, || {
        (0..n_traj)
            .into_par_iter()
            .map(|i| {
                let mut buf = Vec::with_capacity(per);
                sim.run_sampled(psi0, trajectory_seed(base_seed, i), Some(&mut buf))?;
                Ok(buf)
            })
            .collect()
    })?;
    let mut sum = vec![0.0; per];
    let mut sum2 = vec![0.0; per];
    let mut n_failed = 0;
    let mut first_err = None;
    for run in runs {
        match run {
            Ok(v) => {
                for (k, x) in v.iter().enumerate() {
                    sum[k] += x;
                    sum2[k] += x * x;
                }
            }
            Err(e) => {
                n_failed += 1;
                first_err.get_or_insert(e);
            }
        }
    }
    failure_check(n_failed, n_traj, first_err.as_ref())?;
    let done = (n_traj - n_failed) as f64;
    let nk = observables.len();
    let mut mean = Vec::with_capacity(sample_times.len());
    let mut stderr = Vec::with_capacity(sample_times.len());
    for s in 0..sample_times.len() {
        let mut m_row = Vec::with_capacity(nk);
        let mut e_row = Vec::with_capacity(nk);
        for k in 0..nk {
            let m = sum[s * nk + k] / done;
            let var = ((sum2[s * nk + k] / done - m * m) * done / (done - 1.0)).max(0.0);
            m_row.push(m);
            e_row.push((var / done).sqrt());
        }
        mean.push(m_row);
        stderr.push(e_row);
    }
    Ok(ObservableSeries {
        times: sample_times.to_vec(),
        mean,
        stderr,
        n_traj: n_traj - n_failed,
    })
}
