use num_complex::Complex64;

use super::envelope::DriveEnvelope;
use super::sparse::Csr;
use crate::error::{Error, Result};
use crate::hilbert::{HilbertSpec, OperatorMatrix};

const MINUS_I: Complex64 = Complex64::new(0.0, -1.0);

/// A jump channel `C_k`; its rate is `||C_k psi||^2`.
#[derive(Debug, Clone, PartialEq)]
pub struct CollapseChannel {
    pub label: String,
    pub op: OperatorMatrix,
    pub herald: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct HermitianTerm {
    pub op: OperatorMatrix,
    pub envelope: DriveEnvelope,
}

/// Instantaneous unitary applied at a fixed time.
#[derive(Debug, Clone, PartialEq)]
pub struct Kick {
    pub time: f64,
    pub label: String,
    pub unitary: OperatorMatrix,
}

/// Non-Hermitian effective Hamiltonian (units of rad/ns, hbar = 1) plus
/// its jump channels.
///
/// `H_eff(t) = sum_k env_k(t) H_k - (i/2) sum_k C_k† C_k + sum extra`.
/// The damping part is always regenerated from `channels`.
#[derive(Debug, Clone, PartialEq)]
pub struct EffectiveModel {
    space: HilbertSpec,
    hermitian_terms: Vec<HermitianTerm>,
    channels: Vec<CollapseChannel>,
    extra_terms: Vec<OperatorMatrix>,
    kicks: Vec<Kick>,
}

impl EffectiveModel {
    pub fn new(space: HilbertSpec) -> Self {
        Self {
            space,
            hermitian_terms: Vec::new(),
            channels: Vec::new(),
            extra_terms: Vec::new(),
            kicks: Vec::new(),
        }
    }

    pub fn space(&self) -> &HilbertSpec {
        &self.space
    }

    pub fn hermitian_terms(&self) -> &[HermitianTerm] {
        &self.hermitian_terms
    }

    pub fn channels(&self) -> &[CollapseChannel] {
        &self.channels
    }

    pub fn extra_terms(&self) -> &[OperatorMatrix] {
        &self.extra_terms
    }

    pub fn kicks(&self) -> &[Kick] {
        &self.kicks
    }

    pub fn channel(&self, label: &str) -> Option<&CollapseChannel> {
        self.channels.iter().find(|c| c.label == label)
    }

    fn check_space(&self, op: &OperatorMatrix) -> Result<()> {
        if op.space() != &self.space {
            Err(Error::SpaceMismatch)
        } else {
            Ok(())
        }
    }

    pub fn add_hermitian(&mut self, op: OperatorMatrix, envelope: DriveEnvelope) -> Result<()> {
        self.check_space(&op)?;
        if !op.is_hermitian(1e-12) {
            return Err(Error::InvalidParameter("drive term is not Hermitian".into()));
        }
        self.hermitian_terms.push(HermitianTerm { op, envelope });
        Ok(())
    }

    pub fn add_channel(&mut self, label: impl Into<String>, op: OperatorMatrix, herald: bool) -> Result<()> {
        self.check_space(&op)?;
        let label = label.into();
        if self.channel(&label).is_some() {
            return Err(Error::DuplicateLabel(label));
        }
        self.channels.push(CollapseChannel { label, op, herald });
        Ok(())
    }

    pub fn add_extra(&mut self, op: OperatorMatrix) -> Result<()> {
        self.check_space(&op)?;
        self.extra_terms.push(op);
        Ok(())
    }

    pub fn add_kick(&mut self, time: f64, label: impl Into<String>, unitary: OperatorMatrix) -> Result<()> {
        self.check_space(&unitary)?;
        let prod = &unitary.adjoint() * &unitary;
        if prod.max_abs_diff(&OperatorMatrix::identity(&self.space))? > 1e-12 {
            return Err(Error::InvalidParameter("kick operator is not unitary".into()));
        }
        self.kicks.push(Kick {
            time,
            label: label.into(),
            unitary,
        });
        Ok(())
    }

    /// `-(i/2) sum_k C_k† C_k`
    pub fn damping(&self) -> OperatorMatrix {
        let mut acc = OperatorMatrix::zeros(&self.space);
        for ch in &self.channels {
            acc = &acc + &(&ch.op.adjoint() * &ch.op);
        }
        acc.scale(Complex64::new(0.0, -0.5))
    }

    /// Dense `H_eff(t)`.
    pub fn h_eff(&self, t: f64) -> OperatorMatrix {
        let mut h = self.damping();
        for term in &self.hermitian_terms {
            h = &h + &term.op.scale_real(term.envelope.value(t));
        }
        for extra in &self.extra_terms {
            h = &h + extra;
        }
        h
    }

    /// Fastest rate in the model (rad/ns), used to choose a step size.
    pub fn max_rate(&self) -> f64 {
        let max_abs = |op: &OperatorMatrix| op.entries().iter().map(|c| c.norm()).fold(0.0, f64::max);
        let mut rate = max_abs(&self.damping()) * 2.0;
        for term in &self.hermitian_terms {
            rate = rate.max(term.envelope.peak() * max_abs(&term.op));
        }
        for extra in &self.extra_terms {
            rate = rate.max(max_abs(extra));
        }
        rate
    }

    pub fn breakpoints(&self) -> Vec<f64> {
        let mut out: Vec<f64> = self
            .hermitian_terms
            .iter()
            .flat_map(|t| t.envelope.breakpoints())
            .chain(self.kicks.iter().map(|k| k.time))
            .collect();
        out.sort_by(f64::total_cmp);
        out.dedup();
        out
    }

    pub(crate) fn compile(&self) -> Compiled {
        let mut constant = self.damping();
        let mut timed = Vec::new();
        for term in &self.hermitian_terms {
            if let DriveEnvelope::Constant { amplitude } = term.envelope {
                constant = &constant + &term.op.scale_real(amplitude);
            } else {
                timed.push((Csr::from_dense(&term.op.scale(MINUS_I)), term.envelope));
            }
        }
        for extra in &self.extra_terms {
            constant = &constant + extra;
        }
        let channels: Vec<Csr> = self.channels.iter().map(|c| Csr::from_dense(&c.op)).collect();
        let mut kicks: Vec<(f64, Csr)> = self
            .kicks
            .iter()
            .map(|k| (k.time, Csr::from_dense(&k.unitary)))
            .collect();
        kicks.sort_by(|a, b| a.0.total_cmp(&b.0));
        let static_gen = Csr::from_dense(&constant.scale(MINUS_I));
        let herald: Vec<bool> = self.channels.iter().map(|c| c.herald).collect();
        let herald_reachable = reachability(self.space.dim(), &static_gen, &timed, &channels, &kicks, &herald);
        Compiled {
            dim: self.space.dim(),
            static_gen,
            timed,
            channels,
            herald,
            kicks,
            herald_reachable,
        }
    }
}

/// Integrator-ready form of an [`EffectiveModel`]; generators are stored
/// premultiplied by `-i`.
pub(crate) struct Compiled {
    pub(crate) dim: usize,
    pub(crate) static_gen: Csr,
    pub(crate) timed: Vec<(Csr, DriveEnvelope)>,
    pub(crate) channels: Vec<Csr>,
    pub(crate) herald: Vec<bool>,
    pub(crate) kicks: Vec<(f64, Csr)>,
    /// `herald_reachable[j]`: basis state `j` can still lead to a herald jump.
    pub(crate) herald_reachable: Vec<bool>,
}

impl Compiled {
    /// `out = -i H_eff(t) x`
    #[inline]
    pub(crate) fn derivative(&self, t: f64, x: &[Complex64], out: &mut [Complex64]) {
        self.static_gen.mul_into(x, out);
        for (op, env) in &self.timed {
            let v = env.value(t);
            if v != 0.0 {
                op.mul_add(Complex64::new(v, 0.0), x, out);
            }
        }
    }

    /// `Y += (-i H_eff(t)) R` for a dense matrix `R`.
    pub(crate) fn left_generator(&self, t: f64, r: &[Complex64], y: &mut [Complex64]) {
        self.static_gen.left_mul_add(Complex64::new(1.0, 0.0), r, y);
        for (op, env) in &self.timed {
            let v = env.value(t);
            if v != 0.0 {
                op.left_mul_add(Complex64::new(v, 0.0), r, y);
            }
        }
    }

    pub(crate) fn herald_possible(&self, x: &[Complex64]) -> bool {
        x.iter()
            .zip(&self.herald_reachable)
            .any(|(a, &ok)| ok && (a.re != 0.0 || a.im != 0.0))
    }
}

fn reachability(
    n: usize,
    static_gen: &Csr,
    timed: &[(Csr, DriveEnvelope)],
    channels: &[Csr],
    kicks: &[(f64, Csr)],
    herald: &[bool],
) -> Vec<bool> {
    // reverse adjacency: edge col -> row means amplitude flows from col to row
    let mut preds: Vec<Vec<usize>> = vec![Vec::new(); n];
    let mut add = |m: &Csr| {
        for (i, j) in m.pattern() {
            if i != j {
                preds[i].push(j);
            }
        }
    };
    add(static_gen);
    for (m, _) in timed {
        add(m);
    }
    for m in channels {
        add(m);
    }
    for (_, m) in kicks {
        add(m);
    }
    let mut ok = vec![false; n];
    let mut stack = Vec::new();
    for (m, &h) in channels.iter().zip(herald) {
        if h {
            for (_, j) in m.pattern() {
                if !ok[j] {
                    ok[j] = true;
                    stack.push(j);
                }
            }
        }
    }
    while let Some(i) = stack.pop() {
        for &j in &preds[i] {
            if !ok[j] {
                ok[j] = true;
                stack.push(j);
            }
        }
    }
    ok
}
