//! Parameter tables shared by the flags and the config file, and the
//! merged settings they produce.

use std::collections::BTreeMap;
use std::path::Path;

use cascadeq::units::{parse_quantity, Dimension};

use super::CliError;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Kind {
    Quantity(Dimension),
    Real,
    Integer,
    Switch,
    Choice(&'static [&'static str]),
    /// `instantaneous` or a duration.
    Pulse,
}

impl Kind {
    pub fn value_name(self) -> &'static str {
        match self {
            Kind::Quantity(Dimension::Frequency) => "FREQ",
            Kind::Quantity(Dimension::Time) => "TIME",
            Kind::Quantity(Dimension::Length) => "LENGTH",
            Kind::Quantity(Dimension::Impedance) => "IMPEDANCE",
            Kind::Real => "X",
            Kind::Integer => "N",
            Kind::Switch => "BOOL",
            Kind::Choice(_) => "NAME",
            Kind::Pulse => "PULSE",
        }
    }

    pub fn unit_hint(self) -> String {
        match self {
            Kind::Quantity(Dimension::Frequency) => "[MHz; unit required: Hz, kHz, MHz, GHz]".into(),
            Kind::Quantity(Dimension::Time) => "[ns; unit required: ps, ns, us, ms, s]".into(),
            Kind::Quantity(Dimension::Length) => "[m; unit required: nm, um, mm, m]".into(),
            Kind::Quantity(Dimension::Impedance) => "[ohm; unit required: ohm, kohm]".into(),
            Kind::Real => "[dimensionless]".into(),
            Kind::Integer => "[count]".into(),
            Kind::Switch => "[true|false]".into(),
            Kind::Choice(c) => format!("[{}]", c.join("|")),
            Kind::Pulse => "[instantaneous | duration with unit, e.g. 2ns]".into(),
        }
    }

    /// Canonical number for quantities and plain numbers.
    pub fn number(self, raw: &str) -> Result<f64, String> {
        match self {
            Kind::Quantity(d) => parse_quantity(raw, d).map_err(|e| e.to_string()),
            Kind::Real => raw
                .trim()
                .parse::<f64>()
                .ok()
                .filter(|v| v.is_finite())
                .ok_or_else(|| format!("`{raw}` is not a dimensionless number")),
            Kind::Integer => raw
                .trim()
                .parse::<u64>()
                .map(|v| v as f64)
                .map_err(|_| format!("`{raw}` is not a non-negative integer")),
            _ => Err(format!("`{raw}` is not numeric")),
        }
    }

    pub fn check(self, raw: &str) -> Result<(), String> {
        match self {
            Kind::Switch => match raw.trim() {
                "true" | "false" => Ok(()),
                _ => Err(format!("`{raw}` is not true or false")),
            },
            Kind::Choice(c) => {
                if c.contains(&raw.trim()) {
                    Ok(())
                } else {
                    Err(format!("`{raw}` is not one of {}", c.join(", ")))
                }
            }
            Kind::Pulse => {
                if raw.trim() == "instantaneous" {
                    Ok(())
                } else {
                    Kind::Quantity(Dimension::Time).number(raw).map(|_| ())
                }
            }
            _ => self.number(raw).map(|_| ()),
        }
    }

    /// Text that parses back to `value` (canonical unit attached).
    pub fn render(self, value: f64) -> String {
        match self {
            Kind::Quantity(d) => format!("{value}{}", d.canonical()),
            Kind::Integer => format!("{}", value.round() as u64),
            _ => format!("{value}"),
        }
    }
}

#[derive(Debug, Clone, Copy)]
pub struct Param {
    pub key: &'static str,
    pub kind: Kind,
    pub help: &'static str,
}

const fn p(key: &'static str, kind: Kind, help: &'static str) -> Param {
    Param { key, kind, help }
}

const FREQ: Kind = Kind::Quantity(Dimension::Frequency);
const TIME: Kind = Kind::Quantity(Dimension::Time);
const LEN: Kind = Kind::Quantity(Dimension::Length);

pub const STATISTICS: &[&str] = &["mean", "p50", "median", "p90"];

pub const RUN: &[Param] = &[
    p("n_traj", Kind::Integer, "number of trajectories"),
    p("seed", Kind::Integer, "base seed; trajectory i uses seed + i (default: $CASCADEQ_SEED, else 1)"),
    p("threads", Kind::Integer, "worker threads; results do not depend on it"),
    p("rate_statistic", Kind::Choice(STATISTICS), "herald-time statistic used for the rate"),
];

pub const O2M: &[Param] = &[
    p("gamma_fe_s", FREQ, "source F->E decay, Gamma/2pi (default 300MHz)"),
    p("gamma_fg_t", FREQ, "target F->G decay, Gamma/2pi (default 300MHz)"),
    p("gamma_eg_t", FREQ, "target E->G decay, Gamma/2pi (default 300MHz)"),
    p("g_c", FREQ, "dot-cavity coupling g/2pi (default 200MHz)"),
    p("kappa_c", FREQ, "cavity loss kappa/2pi (default 3MHz)"),
    p("eta", Kind::Real, "fraction of the source emission reaching the target (default 1)"),
    p("omega_0", FREQ, "peak of the Gaussian source drive (default 100MHz)"),
    p("sigma", TIME, "width of the source drive (default 5ns)"),
    p("t0", TIME, "centre of the source drive (default 20ns)"),
    p("cavity_dim", Kind::Integer, "cavity Fock levels (default 2)"),
    p("strict_herald", Kind::Switch, "ignore heralds preceded by cavity loss (default false)"),
    p("t_final", TIME, "simulation end (default: from the slowest rate)"),
    p("dt", TIME, "RK4 step (default: from the fastest rate)"),
];

pub const M2O: &[Param] = &[
    p("gamma_fg_t", FREQ, "target F->G decay, Gamma/2pi (default 300MHz)"),
    p("gamma_eg_t", FREQ, "target E->G decay, Gamma/2pi (default 300MHz)"),
    p("g_c", FREQ, "dot-cavity coupling g/2pi (default 200MHz)"),
    p("kappa_c", FREQ, "cavity loss kappa/2pi (default 3MHz)"),
    p("omega_0", FREQ, "constant G-E drive (default gamma_fg_t / 3)"),
    p("cavity_dim", Kind::Integer, "cavity Fock levels (default 2)"),
    p("strict_herald", Kind::Switch, "ignore heralds preceded by cavity loss (default false)"),
    p("t_final", TIME, "simulation end (default: from the effective rate)"),
    p("dt", TIME, "RK4 step (default: from the fastest rate)"),
];

pub const ANALYTIC: &[Param] = &[
    p("gamma_fg_t", FREQ, "target F->G decay, Gamma/2pi (default 300MHz)"),
    p("gamma_eg_t", FREQ, "target E->G decay, Gamma/2pi (default 300MHz)"),
    p("g_c", FREQ, "dot-cavity coupling g/2pi (default 200MHz)"),
];

pub const DEVICE: &[Param] = &[
    p("z_cav", Kind::Quantity(Dimension::Impedance), "cavity impedance (default 2000ohm)"),
    p("d", LEN, "electrode gap (default 7um)"),
    p("d_prime", LEN, "enhanced gap at the dots (default 200nm)"),
    p("l", LEN, "cavity length (default 3mm)"),
    p("f_c", FREQ, "cavity frequency omega_c/2pi (default 11GHz)"),
    p("a", LEN, "dot separation (default 10nm)"),
    p("eps_gaas", Kind::Real, "GaAs permittivity (default 13)"),
];

pub const TRANSFER: &[Param] = &[
    p("alpha_re", Kind::Real, "early-bin amplitude, real part (default 1/sqrt 2)"),
    p("alpha_im", Kind::Real, "early-bin amplitude, imaginary part (default 0)"),
    p("beta_re", Kind::Real, "late-bin amplitude, real part (default 1/sqrt 2)"),
    p("beta_im", Kind::Real, "late-bin amplitude, imaginary part (default 0)"),
    p("t1", TIME, "early bin arrival (default 20ns)"),
    p("t2", TIME, "late bin arrival (default 80ns)"),
    p("g_t", FREQ, "cavity-transmon coupling g/2pi (default 50MHz)"),
    p("pulse", Kind::Pulse, "pi-pulse model (default instantaneous)"),
    p("mode", Kind::Choice(&["ideal", "realistic"]), "photon injection model (default realistic)"),
    p("detectors", Kind::Choice(&["1", "2"]), "erasure detectors (default 1)"),
    p("detector_efficiency", Kind::Real, "erasure detector efficiency (default 1)"),
];

pub const NAMESPACES: &[(&str, &[Param])] = &[
    ("run", RUN),
    ("o2m", O2M),
    ("m2o", M2O),
    ("analytic", ANALYTIC),
    ("device", DEVICE),
    ("transfer", TRANSFER),
];

pub fn table(ns: &str) -> Option<&'static [Param]> {
    NAMESPACES.iter().find(|(n, _)| *n == ns).map(|(_, t)| *t)
}

pub fn lookup(ns: &str, key: &str) -> Option<Param> {
    table(ns)?.iter().find(|p| p.key == key).copied()
}

/// `ns.key` -> raw text, validated against the tables.
#[derive(Debug, Clone, Default)]
pub struct Settings {
    values: BTreeMap<(String, String), String>,
}

impl Settings {
    /// Sets `ns.key = raw` after checking the key and the value.
    pub fn set(&mut self, ns: &str, key: &str, raw: &str) -> Result<(), CliError> {
        if table(ns).is_none() {
            return Err(CliError::Usage(format!("unknown namespace `{ns}` in `{ns}.{key}`")));
        }
        let param = lookup(ns, key).ok_or_else(|| CliError::Usage(format!("unknown key `{ns}.{key}`")))?;
        param
            .kind
            .check(raw)
            .map_err(|e| CliError::Usage(format!("{ns}.{key}: {e}")))?;
        self.values.insert((ns.to_string(), key.to_string()), raw.trim().to_string());
        Ok(())
    }

    /// Parses `ns.key=value`.
    pub fn set_assignment(&mut self, text: &str) -> Result<(), CliError> {
        let (lhs, rhs) = text
            .split_once('=')
            .ok_or_else(|| CliError::Usage(format!("expected `namespace.key=value`, got `{text}`")))?;
        let (ns, key) = lhs
            .trim()
            .split_once('.')
            .ok_or_else(|| CliError::Usage(format!("key `{}` needs a namespace, e.g. o2m.g_c", lhs.trim())))?;
        self.set(ns, key, rhs)
    }

    /// Flat `ns.key = value` lines; `#` starts a comment.
    pub fn load_file(&mut self, path: &Path) -> Result<(), CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Usage(format!("cannot read config {}: {e}", path.display())))?;
        for (n, line) in text.lines().enumerate() {
            let line = line.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            self.set_assignment(line)
                .map_err(|e| CliError::Usage(format!("{}:{}: {}", path.display(), n + 1, e.message())))?;
        }
        Ok(())
    }

    pub fn raw(&self, ns: &str, key: &str) -> Option<&str> {
        self.values.get(&(ns.to_string(), key.to_string())).map(String::as_str)
    }

    pub fn number(&self, ns: &str, key: &str) -> Option<f64> {
        let kind = lookup(ns, key).expect("key in table").kind;
        self.raw(ns, key).map(|r| kind.number(r).expect("validated on insert"))
    }

    pub fn number_or(&self, ns: &str, key: &str, default: f64) -> f64 {
        self.number(ns, key).unwrap_or(default)
    }

    pub fn switch(&self, ns: &str, key: &str) -> Option<bool> {
        self.raw(ns, key).map(|r| r == "true")
    }

    /// Every `ns.key = value` in key order.
    pub fn entries(&self) -> impl Iterator<Item = (&str, &str, &str)> {
        self.values.iter().map(|((n, k), v)| (n.as_str(), k.as_str(), v.as_str()))
    }
}
