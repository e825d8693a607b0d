//! Time-bin photon to transmon state transfer.
//!
//! Each bin is converted into a cavity photon, swapped into the transmon
//! `g -> e` by a Jaynes-Cummings window of length `pi / (2 g_t)`, and lifted
//! out of the cavity manifold with pi-pulses: bin 1 ends in `h`, bin 2 in
//! `f`, giving `alpha |h> + beta |f>`.
//!
//! Two injection modes:
//! - `Ideal`: a register `(G1, G2, E)` hands its bin excitation to the
//!   cavity with an instantaneous swap `|G_k, 0> <-> |E, 1>` at `t_k`.
//! - `Realistic`: a Lambda source `(G1, G2, F, E)` driven on `G_k <-> F` by
//!   a Gaussian centred at `t_k` feeds the cascaded target. The herald
//!   photon is not kept as a mode, so a herald jump reveals which bin fired.

use ndarray::Array2;
use num_complex::Complex64;
use rayon::prelude::*;

use crate::engine::{failure_check, trajectory_seed, with_pool, DriveEnvelope, EffectiveModel, Simulator};
use crate::error::{Error, Result};
use crate::hilbert::{annihilation_op, transition_op, HilbertSpec, OperatorMatrix, StateVector};
use crate::models::{default_dt, O2MParams, CAVITY, TARGET};
use crate::units::mhz_to_angular;

pub const TRANSMON: &str = "transmon";
pub const REGISTER: &str = "register";
pub const SOURCE: &str = "source";

/// Transmon levels.
pub mod tr {
    pub const G: usize = 0;
    pub const E: usize = 1;
    pub const F: usize = 2;
    pub const H: usize = 3;
}

/// Residual cavity population at the start of bin 2 above which the
/// outcome carries a warning.
pub const RESIDUAL_LIMIT: f64 = 0.01;

/// Realistic mode: the swap window opens this many pulse widths after the
/// bin's drive peak.
pub const SWAP_OFFSET_SIGMAS: f64 = 0.5;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TimeBinQubit {
    pub alpha: Complex64,
    pub beta: Complex64,
    /// ns
    pub t1: f64,
    pub t2: f64,
}

impl TimeBinQubit {
    pub fn new(alpha: Complex64, beta: Complex64, t1: f64, t2: f64) -> Result<Self> {
        let q = Self { alpha, beta, t1, t2 };
        q.validate()?;
        Ok(q)
    }

    pub fn validate(&self) -> Result<()> {
        let n = self.alpha.norm_sqr() + self.beta.norm_sqr();
        if (n - 1.0).abs() > 1e-10 {
            return Err(Error::InvalidQubit(format!("|alpha|^2 + |beta|^2 = {n}")));
        }
        if !(self.t1.is_finite() && self.t2.is_finite()) || self.t2 <= self.t1 {
            return Err(Error::InvalidQubit(format!("need t2 > t1, got t1 = {}, t2 = {}", self.t1, self.t2)));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum PulseModel {
    Instantaneous,
    /// Square resonant pulse of the given duration (ns).
    Finite(f64),
}

impl PulseModel {
    fn duration(self) -> f64 {
        match self {
            Self::Instantaneous => 0.0,
            Self::Finite(d) => d,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum InjectionMode {
    Ideal,
    Realistic,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ProtocolParams {
    /// Transmon-cavity coupling, MHz.
    pub g_t: f64,
    pub conversion: O2MParams,
    pub pulse: PulseModel,
    pub mode: InjectionMode,
}

impl Default for ProtocolParams {
    fn default() -> Self {
        Self {
            g_t: 50.0,
            conversion: O2MParams::default(),
            pulse: PulseModel::Instantaneous,
            mode: InjectionMode::Realistic,
        }
    }
}

impl ProtocolParams {
    /// Duration of the cavity-to-transmon swap, ns.
    pub fn swap_time(&self) -> f64 {
        std::f64::consts::PI / (2.0 * mhz_to_angular(self.g_t))
    }

    /// Validates and returns soft warnings.
    pub fn validate(&self, q: &TimeBinQubit) -> Result<Vec<String>> {
        q.validate()?;
        let mut warn = self.conversion.validate()?;
        if !(self.g_t.is_finite() && self.g_t > 0.0) {
            return Err(Error::InvalidParameter(format!("g_t must be positive, got {}", self.g_t)));
        }
        if let PulseModel::Finite(d) = self.pulse {
            if !(d.is_finite() && d > 0.0) {
                return Err(Error::InvalidParameter(format!("pi-pulse duration must be positive, got {d}")));
            }
        }
        let sigma = self.conversion.sigma;
        let ts = self.swap_time();
        let stage = (2.0 * ts).max(ts + 2.0 * self.pulse.duration());
        let needed = stage + 6.0 * sigma;
        if q.t2 - q.t1 < needed {
            return Err(Error::InvalidQubit(format!(
                "bins too close: t2 - t1 = {} ns, stage 1 needs {needed:.3} ns",
                q.t2 - q.t1
            )));
        }
        if self.mode == InjectionMode::Realistic && q.t1 < 3.0 * sigma {
            return Err(Error::InvalidQubit(format!("t1 must be at least 3 sigma = {} ns", 3.0 * sigma)));
        }
        let kappa = self.conversion.kappa_c;
        if 10.0 * kappa > self.g_t {
            warn.push(format!("kappa_c = {kappa} MHz is not much smaller than g_t = {} MHz", self.g_t));
        }
        if self.g_t >= self.conversion.g_c && self.mode == InjectionMode::Realistic {
            warn.push(format!(
                "g_t = {} MHz is not below g_c = {} MHz",
                self.g_t, self.conversion.g_c
            ));
        }
        Ok(warn)
    }
}

/// The assembled protocol model and its timing.
#[derive(Debug, Clone)]
pub struct TransferModel {
    pub model: EffectiveModel,
    pub psi0: StateVector,
    pub t_final: f64,
    pub dt: f64,
    /// When bin 2 starts; the residual cavity population is read here.
    pub bin2_start: f64,
}

/// `|i> -> |j>`, `|j> -> -|i>` on the transmon; the real rotation a
/// resonant pi-pulse produces.
pub fn pi_pulse_unitary(space: &HilbertSpec, i: usize, j: usize) -> Result<OperatorMatrix> {
    let id = OperatorMatrix::identity(space);
    let pii = transition_op(space, TRANSMON, i, i)?;
    let pjj = transition_op(space, TRANSMON, j, j)?;
    let ji = transition_op(space, TRANSMON, j, i)?;
    Ok(&(&(&(&id - &pii) - &pjj) + &ji) - &ji.adjoint())
}

/// Generator of [`pi_pulse_unitary`]: `i |j><i| - i |i><j|`.
fn pi_pulse_generator(space: &HilbertSpec, i: usize, j: usize) -> Result<OperatorMatrix> {
    let ji = transition_op(space, TRANSMON, j, i)?;
    Ok(&ji.scale(Complex64::new(0.0, 1.0)) + &ji.adjoint().scale(Complex64::new(0.0, -1.0)))
}

/// Adds the JC window and the pi-pulses for one bin. Returns when the last
/// pulse ends.
fn add_bin_stage(m: &mut EffectiveModel, p: &ProtocolParams, start: f64, pairs: &[(usize, usize)]) -> Result<f64> {
    let s = m.space().clone();
    let a = annihilation_op(&s, CAVITY)?;
    let eg = transition_op(&s, TRANSMON, tr::E, tr::G)?;
    let jc = &(&a * &eg) + &(&a.adjoint() * &eg.adjoint());
    let ts = p.swap_time();
    m.add_hermitian(jc, DriveEnvelope::window(mhz_to_angular(p.g_t), start, start + ts))?;
    let mut t = start + ts;
    for &(i, j) in pairs {
        match p.pulse {
            PulseModel::Instantaneous => {
                m.add_kick(t, format!("pi_{i}{j}"), pi_pulse_unitary(&s, i, j)?)?;
            }
            PulseModel::Finite(d) => {
                let omega = std::f64::consts::FRAC_PI_2 / d;
                m.add_hermitian(pi_pulse_generator(&s, i, j)?, DriveEnvelope::window(omega, t, t + d))?;
                t += d;
            }
        }
    }
    Ok(t)
}

const BIN1_PULSES: [(usize, usize); 2] = [(tr::E, tr::F), (tr::F, tr::H)];
const BIN2_PULSES: [(usize, usize); 1] = [(tr::E, tr::F)];

fn build_ideal(q: &TimeBinQubit, p: &ProtocolParams) -> Result<TransferModel> {
    // register levels
    const G1: usize = 0;
    const G2: usize = 1;
    const E: usize = 2;
    let s = HilbertSpec::new([(REGISTER, 3), (CAVITY, 2), (TRANSMON, 4)])?;
    let mut m = EffectiveModel::new(s.clone());
    let a = annihilation_op(&s, CAVITY)?;
    m.add_channel("C4", a.scale_real(mhz_to_angular(p.conversion.kappa_c).sqrt()), false)?;
    let id = OperatorMatrix::identity(&s);
    let excited = &transition_op(&s, REGISTER, E, E)? * &transition_op(&s, CAVITY, 1, 1)?;
    let sigma = p.conversion.sigma;
    let mut end = 0.0;
    for (k, (t, pulses)) in [(q.t1, &BIN1_PULSES[..]), (q.t2, &BIN2_PULSES[..])].into_iter().enumerate() {
        let level = if k == 0 { G1 } else { G2 };
        let ground = &transition_op(&s, REGISTER, level, level)? * &transition_op(&s, CAVITY, 0, 0)?;
        let hop = &transition_op(&s, REGISTER, E, level)? * &transition_op(&s, CAVITY, 1, 0)?;
        let swap = &(&(&(&id - &ground) - &excited) + &hop) + &hop.adjoint();
        m.add_kick(t, format!("inject_{}", k + 1), swap)?;
        end = add_bin_stage(&mut m, p, t, pulses)?;
    }
    let mut amps = ndarray::Array1::zeros(s.dim());
    amps[s.basis_index(&[G1, 0, tr::G])?] = q.alpha;
    amps[s.basis_index(&[G2, 0, tr::G])?] = q.beta;
    let psi0 = StateVector::new(s, amps)?;
    let dt = default_dt(&m, Some(sigma)).min(p.swap_time() / 100.0);
    Ok(TransferModel {
        model: m,
        psi0,
        t_final: end + 1.0,
        dt,
        bin2_start: q.t2 - 3.0 * sigma,
    })
}

fn build_realistic(q: &TimeBinQubit, p: &ProtocolParams) -> Result<TransferModel> {
    // source levels
    const G1: usize = 0;
    const G2: usize = 1;
    const F: usize = 2;
    const E: usize = 3;
    use crate::models::tgt;
    let c = &p.conversion;
    let s = HilbertSpec::new([(SOURCE, 4), (TARGET, 3), (CAVITY, 2), (TRANSMON, 4)])?;
    let mut m = EffectiveModel::new(s.clone());
    let (g_fe, g_fg, g_eg) = (
        mhz_to_angular(c.gamma_fe_s),
        mhz_to_angular(c.gamma_fg_t),
        mhz_to_angular(c.gamma_eg_t),
    );
    let a = annihilation_op(&s, CAVITY)?;
    let fe = transition_op(&s, TARGET, tgt::F, tgt::E)?;
    let jc = &(&a * &fe) + &(&a.adjoint() * &fe.adjoint());
    m.add_hermitian(jc.scale_real(mhz_to_angular(c.g_c)), DriveEnvelope::constant(1.0))?;
    let src_emit = transition_op(&s, SOURCE, E, F)?;
    let tgt_gf = transition_op(&s, TARGET, tgt::G, tgt::F)?;
    m.add_channel(
        "C1",
        &src_emit.scale_real(g_fe.sqrt()) + &tgt_gf.scale_real((g_fg * c.eta).sqrt()),
        false,
    )?;
    m.add_channel("C2", tgt_gf.scale_real((g_fg * (1.0 - c.eta)).sqrt()), false)?;
    m.add_channel(
        "C3",
        transition_op(&s, TARGET, tgt::G, tgt::E)?.scale_real(g_eg.sqrt()),
        true,
    )?;
    m.add_channel("C4", a.scale_real(mhz_to_angular(c.kappa_c).sqrt()), false)?;
    let k = (g_fg * g_fe * c.eta).sqrt();
    let forward = &src_emit * &tgt_gf.adjoint();
    m.add_extra(&forward.scale(Complex64::new(0.0, -0.5 * k)) + &forward.adjoint().scale(Complex64::new(0.0, 0.5 * k)))?;

    let mut end = 0.0;
    for (level, t, pulses) in [(G1, q.t1, &BIN1_PULSES[..]), (G2, q.t2, &BIN2_PULSES[..])] {
        let drive = &transition_op(&s, SOURCE, level, F)? + &transition_op(&s, SOURCE, F, level)?;
        m.add_hermitian(drive, DriveEnvelope::gaussian(mhz_to_angular(c.omega_0), t, c.sigma))?;
        // nearly all bin photons have reached the cavity half a width after the
        // drive peak; waiting longer only adds cavity loss
        end = add_bin_stage(&mut m, p, t + SWAP_OFFSET_SIGMAS * c.sigma, pulses)?;
    }
    let slowest = [c.gamma_fe_s, c.gamma_fg_t, c.gamma_eg_t]
        .into_iter()
        .filter(|&r| r > 0.0)
        .map(mhz_to_angular)
        .fold(f64::INFINITY, f64::min);
    let tail = if slowest.is_finite() { (10.0 / slowest).min(50.0) } else { 1.0 };
    let mut amps = ndarray::Array1::zeros(s.dim());
    amps[s.basis_index(&[G1, tgt::G, 0, tr::G])?] = q.alpha;
    amps[s.basis_index(&[G2, tgt::G, 0, tr::G])?] = q.beta;
    let psi0 = StateVector::new(s, amps)?;
    let dt = default_dt(&m, Some(c.sigma));
    Ok(TransferModel {
        model: m,
        psi0,
        t_final: end + tail,
        dt,
        bin2_start: q.t2 - 3.0 * c.sigma,
    })
}

pub fn build_transfer(q: &TimeBinQubit, p: &ProtocolParams) -> Result<TransferModel> {
    p.validate(q)?;
    match p.mode {
        InjectionMode::Ideal => build_ideal(q, p),
        InjectionMode::Realistic => build_realistic(q, p),
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TransferOutcome {
    /// Trajectory-averaged reduced transmon state in the order `g, e, f, h`.
    pub rho: Array2<Complex64>,
    pub fidelity: f64,
    pub fidelity_stderr: f64,
    /// Transmon ground population.
    pub syndrome: f64,
    pub syndrome_stderr: f64,
    /// Fraction of trajectories with a herald jump (1 in ideal mode).
    pub herald_fraction: f64,
    /// Herald fired and no cavity photon was lost.
    pub success_probability: f64,
    pub success_stderr: f64,
    pub residual_cavity: f64,
    pub n_traj: usize,
    pub warnings: Vec<String>,
}

fn mean_stderr(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let m = xs.iter().sum::<f64>() / n;
    if xs.len() < 2 {
        return (m, 0.0);
    }
    let var = xs.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / (n - 1.0);
    (m, (var / n).sqrt())
}

struct PerTrajectory {
    rho: [[Complex64; 4]; 4],
    fidelity: f64,
    syndrome: f64,
    heralded: bool,
    success: bool,
    residual: f64,
}

pub fn run_transfer(
    q: &TimeBinQubit,
    p: &ProtocolParams,
    n_traj: usize,
    seed: u64,
    threads: Option<usize>,
) -> Result<TransferOutcome> {
    if n_traj < 2 {
        return Err(Error::InvalidParameter("need at least 2 trajectories".into()));
    }
    let mut warnings = p.validate(q)?;
    let tm = build_transfer(q, p)?;
    let s = tm.model.space().clone();
    let number = &annihilation_op(&s, CAVITY)?.adjoint() * &annihilation_op(&s, CAVITY)?;
    let sim = Simulator::with_samples(&tm.model, tm.t_final, tm.dt, &[tm.bin2_start], &[number])?;
    let herald = sim.herald_flags().to_vec();
    let loss = sim
        .channel_labels()
        .iter()
        .position(|l| l == "C4")
        .expect("cavity loss channel");
    let ideal = p.mode == InjectionMode::Ideal;
    let target = [
        Complex64::new(0.0, 0.0),
        Complex64::new(0.0, 0.0),
        q.beta,
        q.alpha,
    ];
    let runs: Vec<Result<PerTrajectory>> = with_pool(threads, || {
        (0..n_traj)
            .into_par_iter()
            .map(|i| {
                let mut buf = Vec::with_capacity(1);
                let rec = sim.run_sampled(&tm.psi0, trajectory_seed(seed, i), Some(&mut buf))?;
                let psi = rec.final_state.amplitudes();
                let mut rho = [[Complex64::new(0.0, 0.0); 4]; 4];
                for block in 0..psi.len() / 4 {
                    for a in 0..4 {
                        for b in 0..4 {
                            rho[a][b] += psi[block * 4 + a] * psi[block * 4 + b].conj();
                        }
                    }
                }
                let mut fid = Complex64::new(0.0, 0.0);
                for a in 0..4 {
                    for b in 0..4 {
                        fid += target[a].conj() * rho[a][b] * target[b];
                    }
                }
                let heralded = ideal || rec.jumps.iter().any(|j| herald[j.channel]);
                let lost = rec.jumps.iter().any(|j| j.channel == loss);
                Ok(PerTrajectory {
                    rho,
                    fidelity: fid.re,
                    syndrome: rho[tr::G][tr::G].re,
                    heralded,
                    success: heralded && !lost,
                    residual: buf[0],
                })
            })
            .collect()
    })?;
    let mut ok = Vec::with_capacity(n_traj);
    let mut failed = 0;
    let mut first = None;
    for r in runs {
        match r {
            Ok(t) => ok.push(t),
            Err(e) => {
                failed += 1;
                first.get_or_insert(e);
            }
        }
    }
    failure_check(failed, n_traj, first.as_ref())?;
    let n = ok.len() as f64;
    let mut rho = Array2::zeros((4, 4));
    for t in &ok {
        for a in 0..4 {
            for b in 0..4 {
                rho[[a, b]] += t.rho[a][b] / n;
            }
        }
    }
    let col = |f: &dyn Fn(&PerTrajectory) -> f64| -> Vec<f64> { ok.iter().map(f).collect() };
    let (fidelity, fidelity_stderr) = mean_stderr(&col(&|t| t.fidelity));
    let (syndrome, syndrome_stderr) = mean_stderr(&col(&|t| t.syndrome));
    let (success_probability, success_stderr) = mean_stderr(&col(&|t| f64::from(u8::from(t.success))));
    let herald_fraction = ok.iter().filter(|t| t.heralded).count() as f64 / n;
    let residual_cavity = ok.iter().map(|t| t.residual).sum::<f64>() / n;
    if residual_cavity > RESIDUAL_LIMIT {
        warnings.push(format!(
            "cavity population {residual_cavity:.4} remains at the start of bin 2 (limit {RESIDUAL_LIMIT})"
        ));
    }
    Ok(TransferOutcome {
        rho,
        fidelity,
        fidelity_stderr,
        syndrome,
        syndrome_stderr,
        herald_fraction,
        success_probability,
        success_stderr,
        residual_cavity,
        n_traj: ok.len(),
        warnings,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Detectors {
    One,
    Two,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PhaseCorrection {
    None,
    Pi,
}

/// One detector port after the delay line and the 50/50 beam splitter.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ErasurePort {
    pub probability: f64,
    /// Correction to apply to the late-bin (`f`) component on a click.
    pub correction: PhaseCorrection,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ErasureOutcome {
    pub herald_prob: f64,
    pub ports: Vec<ErasurePort>,
}

/// Erases which-bin information of the herald photon: the early component
/// is delayed by `t2 - t1` and rotated in polarization, then both are mixed
/// on a 50/50 splitter. Each output port projects onto `early ± late` and
/// clicks with probability `eta / 2`; the `-` port leaves a relative `pi`
/// phase on the transmon.
pub fn erasure_herald(
    early: Complex64,
    late: Complex64,
    detector_efficiency: f64,
    detectors: Detectors,
) -> Result<ErasureOutcome> {
    let n = early.norm_sqr() + late.norm_sqr();
    if (n - 1.0).abs() > 1e-10 {
        return Err(Error::InvalidQubit(format!("herald amplitudes have norm^2 {n}")));
    }
    if !(0.0..=1.0).contains(&detector_efficiency) {
        return Err(Error::InvalidParameter(format!(
            "detector efficiency must lie in [0, 1], got {detector_efficiency}"
        )));
    }
    // transmon states tagged by the two bins are orthogonal, so each port
    // sees half of the photon regardless of the amplitudes
    let per_port = detector_efficiency * 0.5;
    let mut ports = vec![ErasurePort {
        probability: per_port,
        correction: PhaseCorrection::None,
    }];
    if detectors == Detectors::Two {
        ports.push(ErasurePort {
            probability: per_port,
            correction: PhaseCorrection::Pi,
        });
    }
    Ok(ErasureOutcome {
        herald_prob: ports.iter().map(|p| p.probability).sum(),
        ports,
    })
}
