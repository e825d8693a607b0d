use ndarray::Array1;
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::model::{Compiled, EffectiveModel};
use super::sparse::Csr;
use crate::error::{Error, Result};
use crate::hilbert::{OperatorMatrix, StateVector};

const ZERO: Complex64 = Complex64::new(0.0, 0.0);
const BISECT_TOL: f64 = 1e-6;
const NORM_SLACK: f64 = 1e-10;

#[derive(Debug, Clone, PartialEq)]
pub struct JumpEvent {
    pub time: f64,
    pub channel: usize,
    pub label: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrajectoryRecord {
    pub seed: u64,
    pub jumps: Vec<JumpEvent>,
    /// Normalized state at `t_end`.
    pub final_state: StateVector,
    /// Equals `t_final` unless a stop rule ended the run early.
    pub t_end: f64,
}

impl TrajectoryRecord {
    pub fn first_herald(&self, herald: &[bool]) -> Option<&JumpEvent> {
        self.jumps.iter().find(|j| herald[j.channel])
    }
}

/// Early-termination rules. They never change which trajectories herald,
/// only how much of each is integrated.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct StopRules {
    /// Stop once the first herald jump has been recorded.
    pub at_first_herald: bool,
    /// Stop as soon as no basis state in the support of psi can reach a
    /// herald channel.
    pub when_herald_unreachable: bool,
    /// Channel labels that disqualify a later herald; with `at_first_herald`
    /// the run also stops on these.
    pub veto: Vec<String>,
}

/// A model compiled for repeated trajectory runs over one time grid.
pub struct Simulator {
    compiled: Compiled,
    labels: Vec<String>,
    points: Vec<f64>,
    dt: f64,
    samples: Vec<f64>,
    observables: Vec<Csr>,
    stop: StopRules,
    veto: Vec<bool>,
    space: crate::hilbert::HilbertSpec,
}

/// Sorted, deduplicated segment boundaries on `[0, t_final]`.
pub(crate) fn segment_points(model: &EffectiveModel, t_final: f64, samples: &[f64]) -> Vec<f64> {
    let mut pts = vec![0.0, t_final];
    pts.extend(model.breakpoints().into_iter().filter(|&t| t > 0.0 && t < t_final));
    pts.extend(samples.iter().copied().filter(|&t| t > 0.0 && t < t_final));
    pts.sort_by(f64::total_cmp);
    pts.dedup();
    pts
}

pub(crate) fn check_grid(t_final: f64, dt: f64, samples: &[f64]) -> Result<()> {
    if !(t_final.is_finite() && t_final > 0.0) {
        return Err(Error::InvalidParameter(format!("t_final must be positive, got {t_final}")));
    }
    if !(dt.is_finite() && dt > 0.0) {
        return Err(Error::InvalidParameter(format!("dt must be positive, got {dt}")));
    }
    if samples.iter().any(|&s| !(0.0..=t_final).contains(&s)) {
        return Err(Error::InvalidParameter("sample times must lie in [0, t_final]".into()));
    }
    if samples.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::InvalidParameter("sample times must be strictly increasing".into()));
    }
    Ok(())
}

/// Number of equal RK4 steps covering `len` with steps no longer than `dt`.
pub(crate) fn steps_for(len: f64, dt: f64) -> usize {
    ((len / dt) - 1e-9).ceil().max(1.0) as usize
}

impl Simulator {
    pub fn new(model: &EffectiveModel, t_final: f64, dt: f64) -> Result<Self> {
        Self::with_samples(model, t_final, dt, &[], &[])
    }

    /// `observables` are evaluated on the normalized state at each of
    /// `sample_times`.
    pub fn with_samples(
        model: &EffectiveModel,
        t_final: f64,
        dt: f64,
        sample_times: &[f64],
        observables: &[OperatorMatrix],
    ) -> Result<Self> {
        check_grid(t_final, dt, sample_times)?;
        for o in observables {
            if o.space() != model.space() {
                return Err(Error::SpaceMismatch);
            }
        }
        Ok(Self {
            compiled: model.compile(),
            labels: model.channels().iter().map(|c| c.label.clone()).collect(),
            points: segment_points(model, t_final, sample_times),
            dt,
            samples: sample_times.to_vec(),
            observables: observables.iter().map(Csr::from_dense).collect(),
            stop: StopRules::default(),
            veto: vec![false; model.channels().len()],
            space: model.space().clone(),
        })
    }

    pub fn set_stop_rules(&mut self, stop: StopRules) -> Result<()> {
        let mut veto = vec![false; self.labels.len()];
        for v in &stop.veto {
            let k = self
                .labels
                .iter()
                .position(|l| l == v)
                .ok_or_else(|| Error::InvalidParameter(format!("unknown channel `{v}`")))?;
            veto[k] = true;
        }
        self.veto = veto;
        self.stop = stop;
        Ok(())
    }

    pub fn channel_labels(&self) -> &[String] {
        &self.labels
    }

    pub fn herald_flags(&self) -> &[bool] {
        &self.compiled.herald
    }

    pub fn veto_flags(&self) -> &[bool] {
        &self.veto
    }

    pub fn sample_times(&self) -> &[f64] {
        &self.samples
    }

    pub fn n_observables(&self) -> usize {
        self.observables.len()
    }

    pub fn t_final(&self) -> f64 {
        *self.points.last().unwrap()
    }

    pub fn run(&self, psi0: &StateVector, seed: u64) -> Result<TrajectoryRecord> {
        self.run_sampled(psi0, seed, None)
    }

    /// Runs one trajectory. When `out` is given, observable values are
    /// appended sample-major and stop rules are ignored so every sample
    /// time is reached.
    pub fn run_sampled(&self, psi0: &StateVector, seed: u64, mut out: Option<&mut Vec<f64>>) -> Result<TrajectoryRecord> {
        if psi0.space() != &self.space {
            return Err(Error::SpaceMismatch);
        }
        if !psi0.is_normalized() {
            return Err(Error::NotNormalized(psi0.norm()));
        }
        let sampling = out.is_some();
        let c = &self.compiled;
        let n = c.dim;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut st = State {
            psi: psi0.amplitudes().to_vec(),
            k: vec![vec![ZERO; n]; 4],
            tmp: vec![ZERO; n],
            trial: vec![ZERO; n],
        };
        let mut r = draw_threshold(&mut rng);
        let mut jumps: Vec<JumpEvent> = Vec::new();
        let mut kick_i = 0;
        let mut sample_i = 0;
        let mut decided = false;
        let finish = |psi: &[Complex64], jumps: Vec<JumpEvent>, t_end: f64| -> Result<TrajectoryRecord> {
            let nrm = psi.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt();
            let amps = Array1::from_iter(psi.iter().map(|a| a / nrm));
            Ok(TrajectoryRecord {
                seed,
                jumps,
                final_state: StateVector::new(self.space.clone(), amps)?,
                t_end,
            })
        };
        if !sampling && self.stop.when_herald_unreachable && !c.herald_possible(&st.psi) {
            return finish(&st.psi, jumps, 0.0);
        }
        let last = self.points.len() - 1;
        for seg in 0..=last {
            let t = self.points[seg];
            while kick_i < c.kicks.len() && c.kicks[kick_i].0 <= t {
                c.kicks[kick_i].1.mul_into(&st.psi, &mut st.tmp);
                std::mem::swap(&mut st.psi, &mut st.tmp);
                kick_i += 1;
            }
            if let Some(buf) = out.as_deref_mut() {
                while sample_i < self.samples.len() && self.samples[sample_i] <= t {
                    let nrm = norm_sqr(&st.psi);
                    for o in &self.observables {
                        buf.push(o.expect(&st.psi).re / nrm);
                    }
                    sample_i += 1;
                }
            }
            if seg == last {
                break;
            }
            let (a, b) = (t, self.points[seg + 1]);
            let steps = steps_for(b - a, self.dt);
            let h = (b - a) / steps as f64;
            for s in 0..steps {
                let t0 = a + s as f64 * h;
                let t1 = if s + 1 == steps { b } else { t0 + h };
                let mut now = t0;
                // the remainder of a step after a jump may cross again
                while now < t1 {
                    let span = t1 - now;
                    let before = norm_sqr(&st.psi);
                    st.rk4(c, now, span, (a, b));
                    let after = norm_sqr(&st.trial);
                    check_step(&st.trial, now, before, after)?;
                    if after > r {
                        std::mem::swap(&mut st.psi, &mut st.trial);
                        now = t1;
                        continue;
                    }
                    // bisect for the crossing time within (now, t1]
                    let (mut lo, mut hi) = (0.0, span);
                    while hi - lo > BISECT_TOL * h {
                        let mid = 0.5 * (lo + hi);
                        st.rk4(c, now, mid, (a, b));
                        if norm_sqr(&st.trial) <= r {
                            hi = mid;
                        } else {
                            lo = mid;
                        }
                    }
                    st.rk4(c, now, hi, (a, b));
                    let tj = now + hi;
                    check_step(&st.trial, tj, before, norm_sqr(&st.trial))?;
                    std::mem::swap(&mut st.psi, &mut st.trial);
                    let k = select_channel(c, &st.psi, &mut rng, tj)?;
                    c.channels[k].mul_into(&st.psi, &mut st.tmp);
                    let w = norm_sqr(&st.tmp).sqrt();
                    for (p, q) in st.psi.iter_mut().zip(&st.tmp) {
                        *p = q / w;
                    }
                    jumps.push(JumpEvent {
                        time: tj,
                        channel: k,
                        label: self.labels[k].clone(),
                    });
                    r = draw_threshold(&mut rng);
                    now = tj;
                    if !sampling {
                        if c.herald[k] || self.veto[k] {
                            decided = true;
                        }
                        if self.stop.at_first_herald && decided {
                            return finish(&st.psi, jumps, tj);
                        }
                        if self.stop.when_herald_unreachable && !c.herald_possible(&st.psi) {
                            return finish(&st.psi, jumps, tj);
                        }
                    }
                }
            }
        }
        finish(&st.psi, jumps, self.t_final())
    }
}

struct State {
    psi: Vec<Complex64>,
    k: Vec<Vec<Complex64>>,
    tmp: Vec<Complex64>,
    trial: Vec<Complex64>,
}

impl State {
    /// `trial = psi(t + h)` by one RK4 step. Envelope times are clamped into
    /// the open segment so window edges are never sampled.
    fn rk4(&mut self, c: &Compiled, t: f64, h: f64, seg: (f64, f64)) {
        let eps = 1e-9 * (seg.1 - seg.0);
        let clamp = |x: f64| x.clamp(seg.0 + eps, seg.1 - eps);
        let n = self.psi.len();
        let (k1, rest) = self.k.split_at_mut(1);
        let (k2, rest) = rest.split_at_mut(1);
        let (k3, k4) = rest.split_at_mut(1);
        let (k1, k2, k3, k4) = (&mut k1[0], &mut k2[0], &mut k3[0], &mut k4[0]);
        c.derivative(clamp(t), &self.psi, k1);
        for i in 0..n {
            self.tmp[i] = self.psi[i] + k1[i] * (0.5 * h);
        }
        c.derivative(clamp(t + 0.5 * h), &self.tmp, k2);
        for i in 0..n {
            self.tmp[i] = self.psi[i] + k2[i] * (0.5 * h);
        }
        c.derivative(clamp(t + 0.5 * h), &self.tmp, k3);
        for i in 0..n {
            self.tmp[i] = self.psi[i] + k3[i] * h;
        }
        c.derivative(clamp(t + h), &self.tmp, k4);
        let w = h / 6.0;
        for i in 0..n {
            self.trial[i] = self.psi[i] + (k1[i] + (k2[i] + k3[i]) * 2.0 + k4[i]) * w;
        }
    }
}

fn norm_sqr(x: &[Complex64]) -> f64 {
    x.iter().map(|a| a.norm_sqr()).sum()
}

fn draw_threshold(rng: &mut ChaCha8Rng) -> f64 {
    // (0, 1]
    1.0 - rng.random::<f64>()
}

fn check_step(x: &[Complex64], time: f64, before: f64, after: f64) -> Result<()> {
    if !after.is_finite() || x.iter().any(|a| !a.re.is_finite() || !a.im.is_finite()) {
        return Err(Error::NonFiniteState { time });
    }
    if after > before + NORM_SLACK {
        return Err(Error::NormGrowth { time, before, after });
    }
    Ok(())
}

fn select_channel(c: &Compiled, psi: &[Complex64], rng: &mut ChaCha8Rng, time: f64) -> Result<usize> {
    let weights: Vec<f64> = c.channels.iter().map(|ch| ch.apply_norm_sqr(psi)).collect();
    let total: f64 = weights.iter().sum();
    if !(total > 0.0 && total.is_finite()) {
        return Err(Error::ZeroJumpWeights { time });
    }
    let u = rng.random::<f64>() * total;
    let mut acc = 0.0;
    let mut last_nonzero = 0;
    for (k, w) in weights.iter().enumerate() {
        if *w > 0.0 {
            last_nonzero = k;
            acc += w;
            if u < acc {
                return Ok(k);
            }
        }
    }
    Ok(last_nonzero)
}

/// One trajectory with a freshly compiled model.
pub fn run_trajectory(
    model: &EffectiveModel,
    psi0: &StateVector,
    t_final: f64,
    dt: f64,
    seed: u64,
) -> Result<TrajectoryRecord> {
    Simulator::new(model, t_final, dt)?.run(psi0, seed)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::engine::envelope::DriveEnvelope;
    use crate::hilbert::{transition_op, HilbertSpec};

    fn two_level(gamma: f64, omega: f64) -> (EffectiveModel, HilbertSpec) {
        let s = HilbertSpec::new([("q", 2)]).unwrap();
        let mut m = EffectiveModel::new(s.clone());
        if gamma > 0.0 {
            m.add_channel("decay", transition_op(&s, "q", 0, 1).unwrap().scale_real(gamma.sqrt()), true)
                .unwrap();
        }
        if omega != 0.0 {
            let x = &transition_op(&s, "q", 0, 1).unwrap() + &transition_op(&s, "q", 1, 0).unwrap();
            m.add_hermitian(x, DriveEnvelope::constant(omega)).unwrap();
        }
        (m, s)
    }

    #[test]
    fn jump_times_increase_and_stay_in_range() {
        let (m, s) = two_level(2.0, 1.5);
        let psi = StateVector::basis(&s, &[0]).unwrap();
        let rec = run_trajectory(&m, &psi, 20.0, 0.01, 3).unwrap();
        assert!(!rec.jumps.is_empty());
        assert!(rec.jumps.windows(2).all(|w| w[0].time < w[1].time));
        assert!(rec.jumps.iter().all(|j| j.time > 0.0 && j.time <= 20.0));
        assert!(rec.final_state.is_normalized());
    }

    #[test]
    fn stop_at_first_herald() {
        let (m, s) = two_level(2.0, 1.5);
        let psi = StateVector::basis(&s, &[0]).unwrap();
        let mut sim = Simulator::new(&m, 20.0, 0.01).unwrap();
        sim.set_stop_rules(StopRules {
            at_first_herald: true,
            ..Default::default()
        })
        .unwrap();
        let rec = sim.run(&psi, 3).unwrap();
        assert_eq!(rec.jumps.len(), 1);
        assert_eq!(rec.t_end, rec.jumps[0].time);
        let full = sim.run_sampled(&psi, 3, Some(&mut Vec::new())).unwrap();
        assert_eq!(full.jumps[0], rec.jumps[0]);
    }

    #[test]
    fn rejects_bad_input() {
        let (m, s) = two_level(1.0, 0.0);
        let bad = StateVector::new(s.clone(), Array1::from(vec![ZERO, Complex64::new(2.0, 0.0)])).unwrap();
        assert!(matches!(run_trajectory(&m, &bad, 1.0, 0.1, 0), Err(Error::NotNormalized(_))));
        let psi = StateVector::basis(&s, &[1]).unwrap();
        assert!(run_trajectory(&m, &psi, 1.0, 0.0, 0).is_err());
        assert!(run_trajectory(&m, &psi, -1.0, 0.1, 0).is_err());
    }

    #[test]
    fn huge_step_is_reported() {
        let (m, s) = two_level(400.0, 0.0);
        let psi = StateVector::basis(&s, &[1]).unwrap();
        let err = run_trajectory(&m, &psi, 1.0, 0.5, 0).unwrap_err();
        assert!(matches!(err, Error::NonFiniteState { .. } | Error::NormGrowth { .. }));
    }

    #[test]
    fn steps_cover_segment() {
        assert_eq!(steps_for(1.0, 0.1), 10);
        assert_eq!(steps_for(1.0, 0.3), 4);
        assert_eq!(steps_for(1e-3, 0.3), 1);
    }
}
