//! Dense master-equation integrator used as a reference for the
//! trajectory ensemble.
//!
//! `drho/dt = -i (H_eff rho - rho H_eff†) + sum_k C_k rho C_k†`, built from
//! the same [`EffectiveModel`] so cascade terms enter identically.

use ndarray::Array2;
use num_complex::Complex64;

use super::model::{Compiled, EffectiveModel};
use super::trajectory::{check_grid, segment_points, steps_for};
use crate::error::{Error, Result};
use crate::hilbert::OperatorMatrix;

pub const MAX_ORACLE_DIMENSION: usize = 128;

const ZERO: Complex64 = Complex64::new(0.0, 0.0);

#[derive(Debug, Clone, PartialEq)]
pub struct OracleTrajectory {
    pub times: Vec<f64>,
    pub states: Vec<Array2<Complex64>>,
}

impl OracleTrajectory {
    /// `Tr(O rho(t))` at every recorded time.
    pub fn expectation(&self, op: &OperatorMatrix) -> Vec<f64> {
        self.states
            .iter()
            .map(|rho| {
                let n = rho.nrows();
                let mut acc = ZERO;
                for i in 0..n {
                    for j in 0..n {
                        acc += op.entries()[[i, j]] * rho[[j, i]];
                    }
                }
                acc.re
            })
            .collect()
    }
}

/// Checks Hermiticity, unit trace and positivity within `tol`.
pub fn validate_density_matrix(rho: &Array2<Complex64>, tol: f64) -> Result<()> {
    let n = rho.nrows();
    if rho.ncols() != n {
        return Err(Error::InvalidDensityMatrix("not square".into()));
    }
    for i in 0..n {
        for j in 0..n {
            if (rho[[i, j]] - rho[[j, i]].conj()).norm() > tol {
                return Err(Error::InvalidDensityMatrix(format!("not Hermitian at ({i}, {j})")));
            }
        }
    }
    let tr: f64 = (0..n).map(|i| rho[[i, i]].re).sum();
    if (tr - 1.0).abs() > tol {
        return Err(Error::InvalidDensityMatrix(format!("trace {tr}")));
    }
    let low = min_eigenvalue(rho);
    if low < -tol {
        return Err(Error::InvalidDensityMatrix(format!("negative eigenvalue {low}")));
    }
    Ok(())
}

/// Smallest eigenvalue of a Hermitian matrix via the real symmetric
/// `2n x 2n` embedding and cyclic Jacobi rotations.
pub(crate) fn min_eigenvalue(h: &Array2<Complex64>) -> f64 {
    let n = h.nrows();
    let m = 2 * n;
    let mut a = vec![0.0; m * m];
    for i in 0..n {
        for j in 0..n {
            let z = 0.5 * (h[[i, j]] + h[[j, i]].conj());
            a[i * m + j] = z.re;
            a[(i + n) * m + j + n] = z.re;
            a[i * m + j + n] = -z.im;
            a[(i + n) * m + j] = z.im;
        }
    }
    for _sweep in 0..100 {
        let off: f64 = (0..m)
            .flat_map(|i| (0..m).filter(move |&j| j != i).map(move |j| (i, j)))
            .map(|(i, j)| a[i * m + j] * a[i * m + j])
            .sum();
        if off < 1e-30 {
            break;
        }
        for p in 0..m {
            for q in p + 1..m {
                let apq = a[p * m + q];
                if apq.abs() < 1e-300 {
                    continue;
                }
                let theta = (a[q * m + q] - a[p * m + p]) / (2.0 * apq);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let t = if theta == 0.0 { 1.0 } else { t };
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for k in 0..m {
                    let akp = a[k * m + p];
                    let akq = a[k * m + q];
                    a[k * m + p] = c * akp - s * akq;
                    a[k * m + q] = s * akp + c * akq;
                }
                for k in 0..m {
                    let apk = a[p * m + k];
                    let aqk = a[q * m + k];
                    a[p * m + k] = c * apk - s * aqk;
                    a[q * m + k] = s * apk + c * aqk;
                }
            }
        }
    }
    (0..m).map(|i| a[i * m + i]).fold(f64::INFINITY, f64::min)
}

struct Work {
    x: Vec<Complex64>,
    y: Vec<Complex64>,
    ks: [Vec<Complex64>; 4],
    tmp: Vec<Complex64>,
}

fn lindblad_rhs(c: &Compiled, t: f64, rho: &[Complex64], out: &mut [Complex64], w: &mut Work) {
    let n = c.dim;
    // X = -i H_eff rho; out = X + X†
    w.x.iter_mut().for_each(|v| *v = ZERO);
    c.left_generator(t, rho, &mut w.x);
    for i in 0..n {
        for j in 0..n {
            out[i * n + j] = w.x[i * n + j] + w.x[j * n + i].conj();
        }
    }
    for ch in &c.channels {
        // C rho C† = C (C rho)†
        w.x.iter_mut().for_each(|v| *v = ZERO);
        ch.left_mul_add(Complex64::new(1.0, 0.0), rho, &mut w.x);
        for i in 0..n {
            for j in 0..n {
                w.y[i * n + j] = w.x[j * n + i].conj();
            }
        }
        ch.left_mul_add(Complex64::new(1.0, 0.0), &w.y, out);
    }
}

fn rk4(c: &Compiled, t: f64, h: f64, seg: (f64, f64), rho: &mut [Complex64], w: &mut Work) {
    let eps = 1e-9 * (seg.1 - seg.0);
    let clamp = |x: f64| x.clamp(seg.0 + eps, seg.1 - eps);
    let len = rho.len();
    let mut ks = std::mem::take(&mut w.ks);
    let mut tmp = std::mem::take(&mut w.tmp);
    lindblad_rhs(c, clamp(t), rho, &mut ks[0], w);
    for i in 0..len {
        tmp[i] = rho[i] + ks[0][i] * (0.5 * h);
    }
    lindblad_rhs(c, clamp(t + 0.5 * h), &tmp, &mut ks[1], w);
    for i in 0..len {
        tmp[i] = rho[i] + ks[1][i] * (0.5 * h);
    }
    lindblad_rhs(c, clamp(t + 0.5 * h), &tmp, &mut ks[2], w);
    for i in 0..len {
        tmp[i] = rho[i] + ks[2][i] * h;
    }
    lindblad_rhs(c, clamp(t + h), &tmp, &mut ks[3], w);
    let s = h / 6.0;
    for i in 0..len {
        rho[i] += (ks[0][i] + (ks[1][i] + ks[2][i]) * 2.0 + ks[3][i]) * s;
    }
    w.ks = ks;
    w.tmp = tmp;
}

/// Integrates the master equation with RK4, recording `rho` at
/// `sample_times`. Uses the same segment grid as the trajectory engine.
pub fn lindblad_oracle(
    model: &EffectiveModel,
    rho0: &Array2<Complex64>,
    t_final: f64,
    dt: f64,
    sample_times: &[f64],
) -> Result<OracleTrajectory> {
    let n = model.space().dim();
    if n > MAX_ORACLE_DIMENSION {
        return Err(Error::DimensionCap(n, MAX_ORACLE_DIMENSION));
    }
    if rho0.nrows() != n || rho0.ncols() != n {
        return Err(Error::SpaceMismatch);
    }
    validate_density_matrix(rho0, 1e-10)?;
    check_grid(t_final, dt, sample_times)?;
    let c = model.compile();
    let points = segment_points(model, t_final, sample_times);
    let mut rho: Vec<Complex64> = rho0.iter().copied().collect();
    let mut w = Work {
        x: vec![ZERO; n * n],
        y: vec![ZERO; n * n],
        ks: std::array::from_fn(|_| vec![ZERO; n * n]),
        tmp: vec![ZERO; n * n],
    };
    let mut out = OracleTrajectory {
        times: Vec::with_capacity(sample_times.len()),
        states: Vec::with_capacity(sample_times.len()),
    };
    let mut kick_i = 0;
    let mut sample_i = 0;
    let last = points.len() - 1;
    for seg in 0..=last {
        let t = points[seg];
        while kick_i < c.kicks.len() && c.kicks[kick_i].0 <= t {
            // rho -> U rho U† = U (U rho)†
            let u = &c.kicks[kick_i].1;
            w.x.iter_mut().for_each(|v| *v = ZERO);
            u.left_mul_add(Complex64::new(1.0, 0.0), &rho, &mut w.x);
            for i in 0..n {
                for j in 0..n {
                    w.y[i * n + j] = w.x[j * n + i].conj();
                }
            }
            rho.iter_mut().for_each(|v| *v = ZERO);
            u.left_mul_add(Complex64::new(1.0, 0.0), &w.y, &mut rho);
            kick_i += 1;
        }
        while sample_i < sample_times.len() && sample_times[sample_i] <= t {
            out.times.push(sample_times[sample_i]);
            out.states
                .push(Array2::from_shape_vec((n, n), rho.clone()).expect("square buffer"));
            sample_i += 1;
        }
        if seg == last {
            break;
        }
        let (a, b) = (t, points[seg + 1]);
        let steps = steps_for(b - a, dt);
        let h = (b - a) / steps as f64;
        for s in 0..steps {
            rk4(&c, a + s as f64 * h, h, (a, b), &mut rho, &mut w);
        }
        if rho.iter().any(|v| !v.re.is_finite() || !v.im.is_finite()) {
            return Err(Error::NonFiniteState { time: b });
        }
    }
    Ok(out)
}
