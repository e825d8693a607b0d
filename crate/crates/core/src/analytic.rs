//! Closed-form conversion efficiency for a weak coherent input and the
//! dipole/cavity coupling-strength estimate for the device.

use std::f64::consts::PI;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::units::mhz_to_angular;

/// Physical constants (SI).
pub mod constants {
    pub const HBAR: f64 = 1.054571817e-34;
    pub const ELEMENTARY_CHARGE: f64 = 1.602176634e-19;
    pub const SPEED_OF_LIGHT: f64 = 299_792_458.0;
    pub const EPSILON_0: f64 = 8.8541878128e-12;
}

use constants::*;

/// Rates as `nu` in MHz.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AnalyticParams {
    pub gamma_fg_t: f64,
    pub gamma_eg_t: f64,
    pub g_c: f64,
}

impl AnalyticParams {
    fn check(&self) -> Result<()> {
        if !(self.gamma_fg_t.is_finite() && self.gamma_fg_t > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "gamma_fg_t must be positive, got {}",
                self.gamma_fg_t
            )));
        }
        for (name, v) in [("gamma_eg_t", self.gamma_eg_t), ("g_c", self.g_c)] {
            if !(v.is_finite() && v >= 0.0) {
                return Err(Error::InvalidParameter(format!("{name} must be >= 0, got {v}")));
            }
        }
        Ok(())
    }
}

/// Normalized reflected field `b = 1 - 2 G_EG / (4 g^2 / G_FG + G_EG - i g)`.
pub fn mean_output_field(p: &AnalyticParams) -> Result<Complex64> {
    p.check()?;
    let gfg = mhz_to_angular(p.gamma_fg_t);
    let geg = mhz_to_angular(p.gamma_eg_t);
    let g = mhz_to_angular(p.g_c);
    let a = 4.0 * g * g / gfg;
    let denom = Complex64::new(a + geg, -g);
    if denom.norm() == 0.0 {
        // g = 0 and G_EG = 0: nothing absorbs, the field is reflected unchanged
        return Ok(Complex64::new(1.0, 0.0));
    }
    Ok(Complex64::new(1.0, 0.0) - Complex64::new(2.0 * geg, 0.0) / denom)
}

/// `zeta = 1 - |b|^2`.
pub fn efficiency(p: &AnalyticParams) -> Result<f64> {
    Ok(1.0 - mean_output_field(p)?.norm_sqr())
}

/// `|b|^2 = ((A - G)^2 + g^2) / ((A + G)^2 + g^2)` with `A = 4 g^2 / G_FG`.
pub fn reflectance_closed_form(p: &AnalyticParams) -> Result<f64> {
    p.check()?;
    let a = 4.0 * p.g_c * p.g_c / p.gamma_fg_t;
    let (gm, g) = (p.gamma_eg_t, p.g_c);
    let den = (a + gm).powi(2) + g * g;
    if den == 0.0 {
        return Ok(1.0);
    }
    Ok(((a - gm).powi(2) + g * g) / den)
}

/// `G_EG` (MHz) maximizing the efficiency: `sqrt(A^2 + g^2)`.
pub fn optimal_gamma_eg(gamma_fg_t: f64, g_c: f64) -> f64 {
    let a = 4.0 * g_c * g_c / gamma_fg_t;
    a.hypot(g_c)
}

/// `sqrt(hbar w / (2 eps0 eps_eff V))` in V/m; `omega_c` in rad/s, `v_eff` in m^3.
pub fn vacuum_field_thermo(omega_c: f64, eps_eff: f64, v_eff: f64) -> f64 {
    (HBAR * omega_c / (2.0 * EPSILON_0 * eps_eff * v_eff)).sqrt()
}

/// Device geometry. Lengths in m, impedance in ohm, frequency as `nu` in MHz.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DeviceParams {
    pub z_cav: f64,
    pub d: f64,
    pub d_prime: f64,
    pub l: f64,
    pub f_c: f64,
    pub a: f64,
    pub eps_gaas: f64,
}

impl Default for DeviceParams {
    fn default() -> Self {
        Self {
            z_cav: 2000.0,
            d: 7e-6,
            d_prime: 200e-9,
            l: 3e-3,
            f_c: 11_000.0,
            a: 10e-9,
            eps_gaas: 13.0,
        }
    }
}

impl DeviceParams {
    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("z_cav", self.z_cav),
            ("d", self.d),
            ("d_prime", self.d_prime),
            ("l", self.l),
            ("f_c", self.f_c),
            ("eps_gaas", self.eps_gaas),
        ] {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::InvalidParameter(format!("{name} must be positive, got {v}")));
            }
        }
        if !(self.a.is_finite() && self.a >= 0.0) {
            return Err(Error::InvalidParameter(format!("a must be >= 0, got {}", self.a)));
        }
        if self.d_prime >= self.d {
            return Err(Error::InvalidParameter(format!(
                "d_prime ({}) must be smaller than d ({})",
                self.d_prime, self.d
            )));
        }
        Ok(())
    }

    /// Cavity angular frequency in rad/s.
    pub fn omega_c(&self) -> f64 {
        2.0 * PI * self.f_c * 1e6
    }
}

/// `sqrt(Z hbar w^2 / (pi d^2))` in V/m.
pub fn vacuum_field_impedance(dev: &DeviceParams) -> Result<f64> {
    dev.validate()?;
    let w = dev.omega_c();
    Ok((dev.z_cav * HBAR * w * w / (PI * dev.d * dev.d)).sqrt())
}

#[derive(Debug, Clone, PartialEq)]
pub struct CouplingReport {
    /// Dipole moment in C m.
    pub p: f64,
    pub eps_eff: f64,
    pub enhancement: f64,
    /// V/m
    pub e_rms: f64,
    /// `g_c / 2 pi` in MHz.
    pub g_c: f64,
    pub warnings: Vec<String>,
}

pub fn coupling_strength(dev: &DeviceParams) -> Result<CouplingReport> {
    let e_rms = vacuum_field_impedance(dev)?;
    let p = dev.a * ELEMENTARY_CHARGE / 2.0;
    let eps_eff = (PI * SPEED_OF_LIGHT / (dev.l * dev.omega_c())).powi(2);
    let enhancement = (eps_eff / dev.eps_gaas).sqrt() * dev.d / dev.d_prime;
    let g_hz = p * enhancement * e_rms / (2.0 * PI * HBAR);
    let mut warnings = Vec::new();
    if eps_eff < dev.eps_gaas {
        warnings.push(format!(
            "eps_eff = {eps_eff:.3} is below eps_gaas = {}; the dielectric factor suppresses the field",
            dev.eps_gaas
        ));
    }
    Ok(CouplingReport {
        p,
        eps_eff,
        enhancement,
        e_rms,
        g_c: g_hz * 1e-6,
        warnings,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn reference_point() {
        let p = AnalyticParams {
            gamma_fg_t: 300.0,
            gamma_eg_t: 300.0,
            g_c: 150.0,
        };
        let b = mean_output_field(&p).unwrap();
        assert_abs_diff_eq!(b.re, 0.05882, epsilon = 1e-5);
        assert_abs_diff_eq!(b.im, -0.23529, epsilon = 1e-5);
        assert_abs_diff_eq!(efficiency(&p).unwrap(), 0.94118, epsilon = 1e-5);
    }

    #[test]
    fn limits() {
        let p = AnalyticParams {
            gamma_fg_t: 300.0,
            gamma_eg_t: 0.0,
            g_c: 80.0,
        };
        assert_eq!(mean_output_field(&p).unwrap(), Complex64::new(1.0, 0.0));
        assert_eq!(efficiency(&p).unwrap(), 0.0);
        let q = AnalyticParams {
            gamma_eg_t: 120.0,
            g_c: 0.0,
            ..p
        };
        assert_eq!(mean_output_field(&q).unwrap(), Complex64::new(-1.0, 0.0));
        assert_eq!(efficiency(&q).unwrap(), 0.0);
        assert!(mean_output_field(&AnalyticParams { gamma_fg_t: 0.0, ..p }).is_err());
    }

    #[test]
    fn optimum_at_g100() {
        assert_abs_diff_eq!(optimal_gamma_eg(300.0, 100.0), 166.6667, epsilon = 1e-4);
        let p = AnalyticParams {
            gamma_fg_t: 300.0,
            gamma_eg_t: optimal_gamma_eg(300.0, 100.0),
            g_c: 100.0,
        };
        assert_abs_diff_eq!(efficiency(&p).unwrap(), 0.8889, epsilon = 1e-4);
    }

    #[test]
    fn device_numbers() {
        let r = coupling_strength(&DeviceParams::default()).unwrap();
        assert!((2.3..=3.3).contains(&r.e_rms), "{}", r.e_rms);
        assert!((r.p / 8e-28 - 1.0).abs() < 0.05);
        assert!((100.0..=300.0).contains(&r.g_c), "{}", r.g_c);
        assert!(r.warnings.is_empty());
        let zero = coupling_strength(&DeviceParams {
            a: 0.0,
            ..Default::default()
        })
        .unwrap();
        assert_eq!(zero.g_c, 0.0);
        assert!(coupling_strength(&DeviceParams {
            d_prime: 1e-5,
            ..Default::default()
        })
        .is_err());
    }

    #[test]
    fn thermo_field_scaling() {
        let e1 = vacuum_field_thermo(1e10, 10.0, 1e-15);
        let e4 = vacuum_field_thermo(1e10, 10.0, 4e-15);
        assert_abs_diff_eq!(e1 / e4, 2.0, epsilon = 1e-12);
        assert_eq!(vacuum_field_thermo(0.0, 10.0, 1e-15), 0.0);
    }
}
