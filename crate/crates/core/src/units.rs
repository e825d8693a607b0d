//! Unit handling. Frequencies are entered as `nu = omega / 2 pi` and
//! stored in MHz; times in ns; lengths in m; impedances in ohm.

use std::f64::consts::PI;

use crate::error::{Error, Result};

/// `nu` in MHz to angular frequency in rad/ns.
#[inline]
pub fn mhz_to_angular(nu_mhz: f64) -> f64 {
    2.0 * PI * nu_mhz * 1e-3
}

/// Angular frequency in rad/ns to `nu` in MHz.
#[inline]
pub fn angular_to_mhz(omega: f64) -> f64 {
    omega * 1e3 / (2.0 * PI)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Dimension {
    Frequency,
    Time,
    Length,
    Impedance,
}

impl Dimension {
    /// Canonical unit that parsed values are returned in.
    pub fn canonical(self) -> &'static str {
        match self {
            Self::Frequency => "MHz",
            Self::Time => "ns",
            Self::Length => "m",
            Self::Impedance => "ohm",
        }
    }

    fn scale(self, unit: &str) -> Option<f64> {
        let s = match (self, unit) {
            (Self::Frequency, "Hz") => 1e-6,
            (Self::Frequency, "kHz") => 1e-3,
            (Self::Frequency, "MHz") => 1.0,
            (Self::Frequency, "GHz") => 1e3,
            (Self::Time, "ps") => 1e-3,
            (Self::Time, "ns") => 1.0,
            (Self::Time, "us" | "µs") => 1e3,
            (Self::Time, "ms") => 1e6,
            (Self::Time, "s") => 1e9,
            (Self::Length, "nm") => 1e-9,
            (Self::Length, "um" | "µm") => 1e-6,
            (Self::Length, "mm") => 1e-3,
            (Self::Length, "m") => 1.0,
            (Self::Impedance, "ohm" | "Ohm" | "Ω") => 1.0,
            (Self::Impedance, "kohm" | "kOhm" | "kΩ") => 1e3,
            _ => return None,
        };
        Some(s)
    }
}

/// Parses `"<number> <unit>"` (space optional) into the canonical unit of
/// `dim`. Bare numbers are rejected.
pub fn parse_quantity(text: &str, dim: Dimension) -> Result<f64> {
    let t = text.trim();
    let split = t
        .char_indices()
        .find(|&(i, ch)| {
            ch.is_alphabetic() && !(matches!(ch, 'e' | 'E') && t[i + ch.len_utf8()..].starts_with(|c: char| c.is_ascii_digit() || c == '-' || c == '+'))
                || ch == 'µ'
                || ch == 'Ω'
        })
        .map(|(i, _)| i)
        .ok_or_else(|| {
            Error::InvalidParameter(format!(
                "`{t}` needs a unit suffix (e.g. `{}`)",
                dim.canonical()
            ))
        })?;
    let (num, unit) = t.split_at(split);
    let value: f64 = num
        .trim()
        .parse()
        .map_err(|_| Error::InvalidParameter(format!("cannot parse number in `{t}`")))?;
    if !value.is_finite() {
        return Err(Error::InvalidParameter(format!("non-finite value `{t}`")));
    }
    let scale = dim
        .scale(unit.trim())
        .ok_or_else(|| Error::InvalidParameter(format!("unit `{}` is not a {:?} unit", unit.trim(), dim)))?;
    Ok(value * scale)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_units() {
        assert_eq!(parse_quantity("300 MHz", Dimension::Frequency).unwrap(), 300.0);
        assert_eq!(parse_quantity("11GHz", Dimension::Frequency).unwrap(), 11000.0);
        assert_eq!(parse_quantity("5 ns", Dimension::Time).unwrap(), 5.0);
        assert!((parse_quantity("7 um", Dimension::Length).unwrap() - 7e-6).abs() < 1e-18);
        assert!((parse_quantity("1e1 nm", Dimension::Length).unwrap() - 1e-8).abs() < 1e-20);
        assert!((parse_quantity("2.5e-3 GHz", Dimension::Frequency).unwrap() - 2.5).abs() < 1e-12);
        assert_eq!(parse_quantity("2 kohm", Dimension::Impedance).unwrap(), 2000.0);
        assert_eq!(parse_quantity("-3 MHz", Dimension::Frequency).unwrap(), -3.0);
    }

    #[test]
    fn rejects_bare_and_wrong_units() {
        assert!(parse_quantity("300", Dimension::Frequency).is_err());
        assert!(parse_quantity("300 ns", Dimension::Frequency).is_err());
        assert!(parse_quantity("abc MHz", Dimension::Frequency).is_err());
        assert!(parse_quantity("", Dimension::Time).is_err());
    }

    #[test]
    fn angular_round_trip() {
        let w = mhz_to_angular(300.0);
        assert!((w - 1.884955592153876).abs() < 1e-12);
        assert!((angular_to_mhz(w) - 300.0).abs() < 1e-9);
    }
}
