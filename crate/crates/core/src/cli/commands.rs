use std::io::Write;
use std::path::PathBuf;

use clap::ArgMatches;
use num_complex::Complex64;

use cascadeq::analytic::{
    coupling_strength, efficiency, mean_output_field, optimal_gamma_eg, AnalyticParams, DeviceParams,
};
use cascadeq::engine::{EnsembleResult, RateStatistic};
use cascadeq::models::{
    build_m2o, build_o2m, default_dt, m2o_efficiency_with, o2m_efficiency_with, M2OParams, O2MParams, RunOptions,
};
use cascadeq::transfer::{
    erasure_herald, run_transfer, Detectors, InjectionMode, ProtocolParams, PulseModel, TimeBinQubit,
};
use cascadeq::units::Dimension;
use cascadeq::verify::{oracle_check as check, OracleCase, OracleCheckOptions};

use super::output::{write_meta, write_svg, Series};
use super::schema::{lookup, Kind, Settings};
use super::CliError;

pub const DEFAULT_SEED: u64 = 1;

fn seed(s: &Settings) -> Result<u64, CliError> {
    if let Some(v) = s.number("run", "seed") {
        return Ok(v as u64);
    }
    match std::env::var("CASCADEQ_SEED") {
        Ok(v) => v
            .trim()
            .parse()
            .map_err(|_| CliError::Usage(format!("CASCADEQ_SEED=`{v}` is not a non-negative integer"))),
        Err(_) => Ok(DEFAULT_SEED),
    }
}

fn threads(s: &Settings) -> Result<Option<usize>, CliError> {
    match s.number("run", "threads") {
        Some(0.0) => Err(CliError::Usage("threads must be >= 1".into())),
        Some(v) => Ok(Some(v as usize)),
        None => Ok(None),
    }
}

fn run_options(s: &Settings, ns: &str, n_default: usize) -> Result<RunOptions, CliError> {
    let n = s.number_or("run", "n_traj", n_default as f64) as usize;
    let mut opt = RunOptions::new(n, seed(s)?);
    opt.threads = threads(s)?;
    if let Some(r) = s.raw("run", "rate_statistic") {
        opt.rate_statistic = r.parse::<RateStatistic>()?;
    }
    if lookup(ns, "t_final").is_some() {
        opt.t_final = s.number(ns, "t_final");
        opt.dt = s.number(ns, "dt");
    }
    Ok(opt)
}

pub fn o2m_params(s: &Settings) -> O2MParams {
    let d = O2MParams::default();
    let n = |k: &str, v: f64| s.number_or("o2m", k, v);
    O2MParams {
        gamma_fe_s: n("gamma_fe_s", d.gamma_fe_s),
        gamma_fg_t: n("gamma_fg_t", d.gamma_fg_t),
        gamma_eg_t: n("gamma_eg_t", d.gamma_eg_t),
        g_c: n("g_c", d.g_c),
        kappa_c: n("kappa_c", d.kappa_c),
        eta: n("eta", d.eta),
        omega_0: n("omega_0", d.omega_0),
        sigma: n("sigma", d.sigma),
        t0: n("t0", d.t0),
        cavity_dim: n("cavity_dim", d.cavity_dim as f64) as usize,
        strict_herald: s.switch("o2m", "strict_herald").unwrap_or(d.strict_herald),
    }
}

pub fn m2o_params(s: &Settings) -> M2OParams {
    let d = M2OParams::default();
    let n = |k: &str, v: f64| s.number_or("m2o", k, v);
    M2OParams {
        gamma_fg_t: n("gamma_fg_t", d.gamma_fg_t),
        gamma_eg_t: n("gamma_eg_t", d.gamma_eg_t),
        g_c: n("g_c", d.g_c),
        kappa_c: n("kappa_c", d.kappa_c),
        omega_0: s.number("m2o", "omega_0"),
        cavity_dim: n("cavity_dim", d.cavity_dim as f64) as usize,
        strict_herald: s.switch("m2o", "strict_herald").unwrap_or(d.strict_herald),
    }
}

fn analytic_params(s: &Settings) -> AnalyticParams {
    AnalyticParams {
        gamma_fg_t: s.number_or("analytic", "gamma_fg_t", 300.0),
        gamma_eg_t: s.number_or("analytic", "gamma_eg_t", 300.0),
        g_c: s.number_or("analytic", "g_c", 200.0),
    }
}

fn device_params(s: &Settings) -> DeviceParams {
    let d = DeviceParams::default();
    let n = |k: &str, v: f64| s.number_or("device", k, v);
    DeviceParams {
        z_cav: n("z_cav", d.z_cav),
        d: n("d", d.d),
        d_prime: n("d_prime", d.d_prime),
        l: n("l", d.l),
        f_c: n("f_c", d.f_c),
        a: n("a", d.a),
        eps_gaas: n("eps_gaas", d.eps_gaas),
    }
}

fn qubit(s: &Settings) -> Result<TimeBinQubit, CliError> {
    let h = std::f64::consts::FRAC_1_SQRT_2;
    let n = |k: &str, v: f64| s.number_or("transfer", k, v);
    Ok(TimeBinQubit::new(
        Complex64::new(n("alpha_re", h), n("alpha_im", 0.0)),
        Complex64::new(n("beta_re", h), n("beta_im", 0.0)),
        n("t1", 20.0),
        n("t2", 80.0),
    )?)
}

fn protocol(s: &Settings) -> ProtocolParams {
    let pulse = match s.raw("transfer", "pulse") {
        None | Some("instantaneous") => PulseModel::Instantaneous,
        Some(raw) => PulseModel::Finite(Kind::Quantity(Dimension::Time).number(raw).expect("validated on insert")),
    };
    let mode = match s.raw("transfer", "mode") {
        Some("ideal") => InjectionMode::Ideal,
        _ => InjectionMode::Realistic,
    };
    ProtocolParams {
        g_t: s.number_or("transfer", "g_t", 50.0),
        conversion: o2m_params(s),
        pulse,
        mode,
    }
}

fn warn(list: &[String]) {
    for w in list {
        eprintln!("warning: {w}");
    }
}

fn opt_num(v: Option<f64>, digits: usize) -> String {
    v.map(|x| format!("{x:.digits$}")).unwrap_or_default()
}

fn print_ensemble(
    out: &mut dyn Write,
    model: &str,
    r: &EnsembleResult,
    opt: &RunOptions,
    t_final: f64,
    dt: f64,
) -> Result<(), CliError> {
    writeln!(out, "model={model}")?;
    writeln!(out, "n_traj={}", r.n_traj)?;
    writeln!(out, "seed={}", opt.seed)?;
    writeln!(out, "t_final_ns={t_final:.6}")?;
    writeln!(out, "dt_ns={dt:.6}")?;
    writeln!(out, "efficiency={:.4}", r.efficiency)?;
    writeln!(out, "eff_stderr={:.4}", r.efficiency_stderr)?;
    writeln!(out, "n_heralds={}", r.herald_count)?;
    writeln!(out, "n_failed={}", r.n_failed)?;
    writeln!(out, "rate_statistic={}", opt.rate_statistic.name())?;
    writeln!(out, "rate_MHz={}", opt_num(r.rate_mhz, 3))?;
    Ok(())
}

fn write_jumps(m: &ArgMatches, r: &EnsembleResult) -> Result<(), CliError> {
    if let Some(path) = m.get_one::<PathBuf>("jump-log") {
        let f = std::fs::File::create(path)?;
        r.write_jump_log(std::io::BufWriter::new(f))?;
    }
    Ok(())
}

fn echo_o2m(out: &mut dyn Write, p: &O2MParams) -> std::io::Result<()> {
    writeln!(out, "gamma_fe_s_MHz={}", p.gamma_fe_s)?;
    writeln!(out, "gamma_fg_t_MHz={}", p.gamma_fg_t)?;
    writeln!(out, "gamma_eg_t_MHz={}", p.gamma_eg_t)?;
    writeln!(out, "g_c_MHz={}", p.g_c)?;
    writeln!(out, "kappa_c_MHz={}", p.kappa_c)?;
    writeln!(out, "eta={}", p.eta)?;
    writeln!(out, "omega_0_MHz={}", p.omega_0)?;
    writeln!(out, "sigma_ns={}", p.sigma)?;
    writeln!(out, "t0_ns={}", p.t0)
}

pub fn convert_o2m(m: &ArgMatches, s: &Settings, out: &mut dyn Write) -> Result<(), CliError> {
    let p = o2m_params(s);
    let mut opt = run_options(s, "o2m", 2000)?;
    warn(&p.validate()?);
    opt.keep_jumps = m.get_one::<PathBuf>("jump-log").is_some();
    let (model, _) = build_o2m(&p)?;
    let t_final = opt.t_final.unwrap_or_else(|| p.default_t_final());
    let dt = opt.dt.unwrap_or_else(|| p.default_dt(&model));
    let r = o2m_efficiency_with(&p, &opt)?;
    print_ensemble(out, "o2m", &r, &opt, t_final, dt)?;
    echo_o2m(out, &p)?;
    write_jumps(m, &r)
}

pub fn convert_m2o(m: &ArgMatches, s: &Settings, out: &mut dyn Write) -> Result<(), CliError> {
    let p = m2o_params(s);
    let mut opt = run_options(s, "m2o", 2000)?;
    warn(&p.validate()?);
    opt.keep_jumps = m.get_one::<PathBuf>("jump-log").is_some();
    let (model, _) = build_m2o(&p)?;
    let t_final = opt.t_final.unwrap_or_else(|| p.default_t_final());
    let dt = opt.dt.unwrap_or_else(|| default_dt(&model, None));
    let r = m2o_efficiency_with(&p, &opt)?;
    print_ensemble(out, "m2o", &r, &opt, t_final, dt)?;
    writeln!(out, "gamma_fg_t_MHz={}", p.gamma_fg_t)?;
    writeln!(out, "gamma_eg_t_MHz={}", p.gamma_eg_t)?;
    writeln!(out, "g_c_MHz={}", p.g_c)?;
    writeln!(out, "kappa_c_MHz={}", p.kappa_c)?;
    writeln!(out, "omega_0_MHz={}", p.omega())?;
    write_jumps(m, &r)
}

pub fn analytic(s: &Settings, out: &mut dyn Write) -> Result<(), CliError> {
    let p = analytic_params(s);
    let b = mean_output_field(&p)?;
    let z = efficiency(&p)?;
    writeln!(out, "gamma_fg_t_MHz={}", p.gamma_fg_t)?;
    writeln!(out, "gamma_eg_t_MHz={}", p.gamma_eg_t)?;
    writeln!(out, "g_c_MHz={}", p.g_c)?;
    writeln!(out, "b_re={:.6}", b.re)?;
    writeln!(out, "b_im={:.6}", b.im)?;
    writeln!(out, "zeta={:.6}", z)?;
    if p.g_c > 0.0 {
        let opt = optimal_gamma_eg(p.gamma_fg_t, p.g_c);
        let best = efficiency(&AnalyticParams { gamma_eg_t: opt, ..p })?;
        writeln!(out, "gamma_eg_opt_MHz={opt:.4}")?;
        writeln!(out, "zeta_opt={best:.6}")?;
    }
    Ok(())
}

pub fn gc_calc(s: &Settings, out: &mut dyn Write) -> Result<(), CliError> {
    let d = device_params(s);
    let r = coupling_strength(&d)?;
    warn(&r.warnings);
    writeln!(out, "z_cav_ohm={}", d.z_cav)?;
    writeln!(out, "d_m={:e}", d.d)?;
    writeln!(out, "d_prime_m={:e}", d.d_prime)?;
    writeln!(out, "l_m={:e}", d.l)?;
    writeln!(out, "f_c_MHz={}", d.f_c)?;
    writeln!(out, "a_m={:e}", d.a)?;
    writeln!(out, "eps_gaas={}", d.eps_gaas)?;
    writeln!(out, "p_Cm={:.4e}", r.p)?;
    writeln!(out, "eps_eff={:.4}", r.eps_eff)?;
    writeln!(out, "enhancement={:.4}", r.enhancement)?;
    writeln!(out, "E_rms_V_per_m={:.4}", r.e_rms)?;
    writeln!(out, "g_c_MHz={:.3}", r.g_c)?;
    Ok(())
}

pub fn oracle_check(m: &ArgMatches, s: &Settings, out: &mut dyn Write) -> Result<(), CliError> {
    let case = match m.get_one::<String>("model").map(String::as_str) {
        Some("decay") => OracleCase::Decay,
        Some("rabi") => OracleCase::Rabi,
        Some("o2m") => OracleCase::O2M(o2m_params(s)),
        Some("m2o") => OracleCase::M2O(m2o_params(s)),
        _ => unreachable!("clap restricts --model"),
    };
    let mut setup = case.setup()?;
    let ns = case.name();
    if lookup(ns, "t_final").is_some() {
        setup.t_final = s.number_or(ns, "t_final", setup.t_final);
        setup.dt = s.number_or(ns, "dt", setup.dt);
    }
    let mut opt = OracleCheckOptions::new(s.number_or("run", "n_traj", 5000.0) as usize, seed(s)?);
    opt.threads = threads(s)?;
    opt.points = *m.get_one::<usize>("points").expect("default");
    opt.oracle_rate_scale = *m.get_one::<f64>("oracle-rate-scale").expect("default");
    let r = check(&setup, &opt)?;
    writeln!(out, "model={ns}")?;
    writeln!(out, "dimension={}", setup.model.space().dim())?;
    writeln!(out, "n_traj={}", r.n_traj)?;
    writeln!(out, "seed={}", opt.seed)?;
    writeln!(out, "points={}", r.times.len())?;
    writeln!(out, "observables={}", r.labels.join(","))?;
    writeln!(out, "max_deviation={:.3}", r.max_deviation)?;
    writeln!(out, "worst_time_ns={:.4}", r.worst_time)?;
    writeln!(out, "worst_observable={}", r.worst_label)?;
    writeln!(out, "result={}", if r.pass { "pass" } else { "fail" })?;
    if r.pass {
        Ok(())
    } else {
        Err(CliError::CheckFailed(format!(
            "ensemble deviates from the master equation by {:.2} standard errors",
            r.max_deviation
        )))
    }
}

const TRANSFER_HEADER: &str = "fidelity,fidelity_stderr,syndrome,syndrome_stderr,herald_fraction,\
success_probability,success_stderr,residual_cavity,erasure_herald_prob,n_traj";

pub fn transfer(m: &ArgMatches, s: &Settings, out: &mut dyn Write) -> Result<(), CliError> {
    let q = qubit(s)?;
    let p = protocol(s);
    let n = s.number_or("run", "n_traj", 500.0) as usize;
    let seed = seed(s)?;
    let r = run_transfer(&q, &p, n, seed, threads(s)?)?;
    warn(&r.warnings);
    let detectors = match s.raw("transfer", "detectors") {
        Some("2") => Detectors::Two,
        _ => Detectors::One,
    };
    let eta = s.number_or("transfer", "detector_efficiency", 1.0);
    let erasure = erasure_herald(q.alpha, q.beta, eta, detectors)?;
    writeln!(out, "mode={}", if p.mode == InjectionMode::Ideal { "ideal" } else { "realistic" })?;
    writeln!(out, "n_traj={}", r.n_traj)?;
    writeln!(out, "seed={seed}")?;
    writeln!(out, "fidelity={:.4}", r.fidelity)?;
    writeln!(out, "fidelity_stderr={:.4}", r.fidelity_stderr)?;
    writeln!(out, "syndrome={:.4}", r.syndrome)?;
    writeln!(out, "syndrome_stderr={:.4}", r.syndrome_stderr)?;
    writeln!(out, "herald_fraction={:.4}", r.herald_fraction)?;
    writeln!(out, "success_probability={:.4}", r.success_probability)?;
    writeln!(out, "success_stderr={:.4}", r.success_stderr)?;
    writeln!(out, "residual_cavity={:.3e}", r.residual_cavity)?;
    for (i, name) in ["g", "e", "f", "h"].iter().enumerate() {
        writeln!(out, "population_{name}={:.4}", r.rho[[i, i]].re)?;
    }
    writeln!(out, "erasure_herald_prob={:.4}", erasure.herald_prob)?;
    if let Some(path) = m.get_one::<PathBuf>("csv") {
        let mut text = String::from(TRANSFER_HEADER);
        text.push('\n');
        text.push_str(&format!(
            "{:.6},{:.6},{:.6},{:.6},{:.6},{:.6},{:.6},{:.6e},{:.6},{}\n",
            r.fidelity,
            r.fidelity_stderr,
            r.syndrome,
            r.syndrome_stderr,
            r.herald_fraction,
            r.success_probability,
            r.success_stderr,
            r.residual_cavity,
            erasure.herald_prob,
            r.n_traj
        ));
        std::fs::write(path, text)?;
        write_meta(path, s, seed, n)?;
    }
    Ok(())
}

const SWEEP_HEADER: &str = "swept_param,value,efficiency,eff_stderr,rate_MHz,n_heralds,analytic_zeta";
const TRANSFER_EXTRA: &str = ",syndrome,syndrome_stderr,success_probability,success_stderr";

pub const RATIO: &str = "eg_fg_ratio";

struct Row {
    efficiency: f64,
    stderr: f64,
    rate: Option<f64>,
    heralds: Option<usize>,
    zeta: Option<f64>,
    extra: Vec<f64>,
}

fn grid(m: &ArgMatches, kind: Kind) -> Result<Vec<f64>, CliError> {
    let num = |raw: &str| kind.number(raw).map_err(CliError::Usage);
    if let Some(list) = m.get_one::<String>("values") {
        let v = list.split(',').map(|x| num(x.trim())).collect::<Result<Vec<_>, _>>()?;
        if v.is_empty() {
            return Err(CliError::Usage("--values is empty".into()));
        }
        return Ok(v);
    }
    let (Some(from), Some(to), Some(&n)) = (
        m.get_one::<String>("from"),
        m.get_one::<String>("to"),
        m.get_one::<usize>("points"),
    ) else {
        return Err(CliError::Usage("give --values or all of --from, --to, --points".into()));
    };
    if n < 2 {
        return Err(CliError::Usage(format!("--points must be >= 2, got {n}")));
    }
    let (a, b) = (num(from)?, num(to)?);
    let log = m.get_one::<String>("scale").map(String::as_str) == Some("log");
    if log && (a <= 0.0 || b <= 0.0) {
        return Err(CliError::Usage("log grid needs positive end points".into()));
    }
    Ok((0..n)
        .map(|k| {
            let f = k as f64 / (n - 1) as f64;
            if log {
                (a.ln() + f * (b.ln() - a.ln())).exp()
            } else {
                a + f * (b - a)
            }
        })
        .collect())
}

fn sweep_point(model: &str, s: &Settings) -> Result<Row, CliError> {
    match model {
        "analytic" => {
            let z = efficiency(&analytic_params(s))?;
            Ok(Row {
                efficiency: z,
                stderr: 0.0,
                rate: None,
                heralds: None,
                zeta: Some(z),
                extra: Vec::new(),
            })
        }
        "o2m" => {
            let p = o2m_params(s);
            let r = o2m_efficiency_with(&p, &run_options(s, "o2m", 1000)?)?;
            let zeta = efficiency(&AnalyticParams {
                gamma_fg_t: p.gamma_fg_t,
                gamma_eg_t: p.gamma_eg_t,
                g_c: p.g_c,
            })
            .ok();
            Ok(Row {
                efficiency: r.efficiency,
                stderr: r.efficiency_stderr,
                rate: r.rate_mhz,
                heralds: Some(r.herald_count),
                zeta,
                extra: Vec::new(),
            })
        }
        "m2o" => {
            let r = m2o_efficiency_with(&m2o_params(s), &run_options(s, "m2o", 1000)?)?;
            Ok(Row {
                efficiency: r.efficiency,
                stderr: r.efficiency_stderr,
                rate: r.rate_mhz,
                heralds: Some(r.herald_count),
                zeta: None,
                extra: Vec::new(),
            })
        }
        _ => {
            let n = s.number_or("run", "n_traj", 200.0) as usize;
            let r = run_transfer(&qubit(s)?, &protocol(s), n, seed(s)?, threads(s)?)?;
            Ok(Row {
                efficiency: r.fidelity,
                stderr: r.fidelity_stderr,
                rate: None,
                heralds: Some((r.herald_fraction * r.n_traj as f64).round() as usize),
                zeta: None,
                extra: vec![r.syndrome, r.syndrome_stderr, r.success_probability, r.success_stderr],
            })
        }
    }
}

/// Finds the namespace holding `key` for `model`.
fn swept_kind(model: &str, key: &str) -> Result<(&'static str, Kind), CliError> {
    if key == RATIO && model != "transfer" {
        return Ok(("", Kind::Real));
    }
    let spaces: &[&'static str] = match model {
        "o2m" => &["o2m"],
        "m2o" => &["m2o"],
        "analytic" => &["analytic"],
        _ => &["transfer", "o2m"],
    };
    for ns in spaces {
        if let Some(p) = lookup(ns, key) {
            return match p.kind {
                Kind::Quantity(_) | Kind::Real | Kind::Integer => Ok((ns, p.kind)),
                _ => Err(CliError::Usage(format!("`{key}` is not numeric and cannot be swept"))),
            };
        }
    }
    Err(CliError::Usage(format!("`{key}` is not a parameter of the {model} model")))
}

pub fn sweep(m: &ArgMatches, s: &Settings, out: &mut dyn Write) -> Result<(), CliError> {
    let model = m.get_one::<String>("model").expect("required").as_str();
    let key = m.get_one::<String>("param").expect("required").as_str();
    let (ns, kind) = swept_kind(model, key)?;
    let values = grid(m, kind)?;
    let path = m.get_one::<PathBuf>("out").expect("required");
    let model_ns = if model == "transfer" { "o2m" } else { model };
    let mut rows = Vec::with_capacity(values.len());
    for &v in &values {
        let mut local = s.clone();
        if ns.is_empty() {
            let fg = local.number_or(model_ns, "gamma_fg_t", 300.0);
            local.set(model_ns, "gamma_eg_t", &Kind::Quantity(Dimension::Frequency).render(v * fg))?;
        } else {
            local.set(ns, key, &kind.render(v))?;
        }
        let row = sweep_point(model, &local);
        if let Err(e) = &row {
            eprintln!("error at {key}={v}: {}", e.message());
        }
        rows.push((v, row));
    }
    let mut text = String::from(SWEEP_HEADER);
    if model == "transfer" {
        text.push_str(TRANSFER_EXTRA);
    }
    text.push('\n');
    let mut failed = 0;
    for (v, row) in &rows {
        match row {
            Ok(r) => {
                text.push_str(&format!(
                    "{key},{v},{:.6},{:.6},{},{},{}",
                    r.efficiency,
                    r.stderr,
                    opt_num(r.rate, 3),
                    r.heralds.map(|h| h.to_string()).unwrap_or_default(),
                    opt_num(r.zeta, 6)
                ));
                for x in &r.extra {
                    text.push_str(&format!(",{x:.6}"));
                }
            }
            Err(_) => {
                failed += 1;
                text.push_str(&format!("{key},{v},,,,,"));
                if model == "transfer" {
                    text.push_str(",,,");
                }
            }
        }
        text.push('\n');
    }
    std::fs::write(path, &text)?;
    let n = s.number_or("run", "n_traj", if model == "transfer" { 200.0 } else { 1000.0 }) as usize;
    write_meta(path, s, seed(s)?, n)?;
    if let Some(svg) = m.get_one::<PathBuf>("svg") {
        let ok: Vec<(f64, &Row)> = rows.iter().filter_map(|(v, r)| r.as_ref().ok().map(|r| (*v, r))).collect();
        let mut series = vec![Series {
            name: if model == "transfer" { "fidelity" } else { "efficiency" },
            points: ok.iter().map(|(v, r)| (*v, r.efficiency)).collect(),
            dashed: false,
        }];
        if model == "o2m" {
            series.push(Series {
                name: "analytic",
                points: ok.iter().filter_map(|(v, r)| r.zeta.map(|z| (*v, z))).collect(),
                dashed: true,
            });
        }
        write_svg(svg, key, &series)?;
    }
    writeln!(out, "rows={}", rows.len())?;
    writeln!(out, "failed={failed}")?;
    writeln!(out, "csv={}", path.display())?;
    if failed > 0 {
        return Err(CliError::Simulation(format!("{failed} grid point(s) failed")));
    }
    Ok(())
}
