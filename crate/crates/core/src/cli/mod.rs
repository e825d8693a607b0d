//! Command-line front end.

mod commands;
mod output;
mod schema;

use std::path::PathBuf;

use clap::{Arg, ArgAction, ArgMatches, Command};

use schema::{Settings, NAMESPACES};

/// Process exit codes.
pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 2;
pub const EXIT_SIMULATION: i32 = 3;
pub const EXIT_CHECK_FAILED: i32 = 4;

#[derive(Debug)]
pub enum CliError {
    Usage(String),
    Simulation(String),
    CheckFailed(String),
}

impl CliError {
    pub fn message(&self) -> &str {
        match self {
            CliError::Usage(m) | CliError::Simulation(m) | CliError::CheckFailed(m) => m,
        }
    }

    pub fn code(&self) -> i32 {
        match self {
            CliError::Usage(_) => EXIT_USAGE,
            CliError::Simulation(_) => EXIT_SIMULATION,
            CliError::CheckFailed(_) => EXIT_CHECK_FAILED,
        }
    }
}

impl From<cascadeq::Error> for CliError {
    fn from(e: cascadeq::Error) -> Self {
        match e {
            cascadeq::Error::InvalidParameter(_) | cascadeq::Error::InvalidQubit(_) => CliError::Usage(e.to_string()),
            other => CliError::Simulation(other.to_string()),
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Simulation(format!("I/O error: {e}"))
    }
}

fn flag_name(key: &str) -> String {
    key.replace('_', "-")
}

/// Adds one flag per table entry of `ns`, skipping `skip`.
fn with_params(mut cmd: Command, ns: &'static str, skip: &[&str]) -> Command {
    let table = NAMESPACES.iter().find(|(n, _)| *n == ns).expect("namespace").1;
    for p in table.iter().filter(|p| !skip.contains(&p.key)) {
        cmd = cmd.arg(
            Arg::new(format!("{ns}.{}", p.key))
                .long(flag_name(p.key))
                .value_name(p.kind.value_name())
                .help(format!("{} {}", p.help, p.kind.unit_hint())),
        );
    }
    cmd
}

fn common(cmd: Command) -> Command {
    cmd.arg(
        Arg::new("config")
            .long("config")
            .value_name("PATH")
            .value_parser(clap::value_parser!(PathBuf))
            .help("flat `namespace.key = value` file; flags override it"),
    )
    .arg(
        Arg::new("set")
            .long("set")
            .value_name("NS.KEY=VALUE")
            .action(ArgAction::Append)
            .help("override one config entry, e.g. --set o2m.g_c=100MHz"),
    )
}

pub fn command() -> Command {
    let convert_o2m = with_params(
        with_params(
            common(Command::new("convert-o2m").about("Optical-to-microwave conversion ensemble")),
            "run",
            &[],
        ),
        "o2m",
        &[],
    )
    .arg(
        Arg::new("jump-log")
            .long("jump-log")
            .value_name("PATH")
            .value_parser(clap::value_parser!(PathBuf))
            .help("write every jump as `trajectory, time_ns, channel`"),
    );
    let convert_m2o = with_params(
        with_params(
            common(Command::new("convert-m2o").about("Microwave-to-optical conversion ensemble")),
            "run",
            &[],
        ),
        "m2o",
        &[],
    )
    .arg(
        Arg::new("jump-log")
            .long("jump-log")
            .value_name("PATH")
            .value_parser(clap::value_parser!(PathBuf))
            .help("write every jump as `trajectory, time_ns, channel`"),
    );
    let sweep = with_params(common(Command::new("sweep").about("Parameter sweep written as CSV")), "run", &[])
        .arg(
            Arg::new("model")
                .long("model")
                .required(true)
                .value_parser(["o2m", "m2o", "analytic", "transfer"])
                .help("model to sweep"),
        )
        .arg(
            Arg::new("param")
                .long("param")
                .required(true)
                .value_name("KEY")
                .help("swept key of the model namespace, or eg_fg_ratio for gamma_eg_t / gamma_fg_t"),
        )
        .arg(
            Arg::new("from")
                .long("from")
                .value_name("VALUE")
                .help("first grid value, with the parameter's unit"),
        )
        .arg(Arg::new("to").long("to").value_name("VALUE").help("last grid value, with the parameter's unit"))
        .arg(
            Arg::new("points")
                .long("points")
                .value_name("N")
                .value_parser(clap::value_parser!(usize))
                .help("grid points, >= 2 [count]"),
        )
        .arg(
            Arg::new("scale")
                .long("scale")
                .value_parser(["linear", "log"])
                .default_value("linear")
                .help("grid spacing"),
        )
        .arg(
            Arg::new("values")
                .long("values")
                .value_name("V1,V2,..")
                .conflicts_with_all(["from", "to", "points"])
                .help("explicit grid, comma separated, with units"),
        )
        .arg(
            Arg::new("out")
                .long("out")
                .required(true)
                .value_name("PATH")
                .value_parser(clap::value_parser!(PathBuf))
                .help("CSV output; metadata goes to PATH.meta"),
        )
        .arg(
            Arg::new("svg")
                .long("svg")
                .value_name("PATH")
                .value_parser(clap::value_parser!(PathBuf))
                .help("also draw the efficiency curve"),
        );
    let analytic = with_params(
        common(Command::new("analytic").about("Closed-form efficiency for a weak coherent input")),
        "analytic",
        &[],
    );
    let gc = with_params(
        common(Command::new("gc-calc").about("Dot-cavity coupling strength from the device geometry")),
        "device",
        &[],
    );
    let oracle = with_params(
        common(Command::new("oracle-check").about("Compare the trajectory ensemble with the master equation")),
        "run",
        &["rate_statistic"],
    )
    .arg(
        Arg::new("model")
            .long("model")
            .required(true)
            .value_parser(["decay", "rabi", "o2m", "m2o"])
            .help("model to check; o2m and m2o read their namespace from --config / --set"),
    )
    .arg(
        Arg::new("points")
            .long("points")
            .value_name("N")
            .value_parser(clap::value_parser!(usize))
            .default_value("50")
            .help("comparison times [count]"),
    )
    .arg(
        Arg::new("oracle-rate-scale")
            .long("oracle-rate-scale")
            .value_name("X")
            .value_parser(clap::value_parser!(f64))
            .default_value("1")
            .help("test harness: scale every decay rate in the oracle only [dimensionless]"),
    );
    let transfer = with_params(
        with_params(
            with_params(
                common(Command::new("transfer").about("Time-bin photon to transmon state transfer")),
                "run",
                &[],
            ),
            "transfer",
            &[],
        ),
        "o2m",
        &["cavity_dim", "strict_herald", "t_final", "dt", "t0"],
    )
    .arg(
        Arg::new("csv")
            .long("csv")
            .value_name("PATH")
            .value_parser(clap::value_parser!(PathBuf))
            .help("write the outcome as a one-row CSV"),
    );
    Command::new("cascadeq")
        .version(env!("CARGO_PKG_VERSION"))
        .about("Quantum-trajectory simulator for cascaded optical/microwave photon conversion")
        .subcommand_required(true)
        .arg_required_else_help(true)
        .subcommand(convert_o2m)
        .subcommand(convert_m2o)
        .subcommand(sweep)
        .subcommand(analytic)
        .subcommand(gc)
        .subcommand(oracle)
        .subcommand(transfer)
}

/// Config file, then `--set`, then dedicated flags.
fn settings(m: &ArgMatches) -> Result<Settings, CliError> {
    let mut s = Settings::default();
    if let Some(path) = m.get_one::<PathBuf>("config") {
        s.load_file(path)?;
    }
    if let Some(sets) = m.get_many::<String>("set") {
        for a in sets {
            s.set_assignment(a)?;
        }
    }
    for (ns, table) in NAMESPACES {
        for p in table.iter() {
            let id = format!("{ns}.{}", p.key);
            if let Ok(Some(v)) = m.try_get_one::<String>(&id) {
                s.set(ns, p.key, v)?;
            }
        }
    }
    Ok(s)
}

pub fn run(args: Vec<String>) -> i32 {
    let matches = match command().try_get_matches_from(args) {
        Ok(m) => m,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
        }
    };
    let (name, sub) = matches.subcommand().expect("subcommand required");
    let result = settings(sub).and_then(|s| {
        let stdout = std::io::stdout();
        let mut out = stdout.lock();
        match name {
            "convert-o2m" => commands::convert_o2m(sub, &s, &mut out),
            "convert-m2o" => commands::convert_m2o(sub, &s, &mut out),
            "sweep" => commands::sweep(sub, &s, &mut out),
            "analytic" => commands::analytic(&s, &mut out),
            "gc-calc" => commands::gc_calc(&s, &mut out),
            "oracle-check" => commands::oracle_check(sub, &s, &mut out),
            "transfer" => commands::transfer(sub, &s, &mut out),
            _ => unreachable!("unknown subcommand"),
        }
    });
    match result {
        Ok(()) => EXIT_OK,
        Err(e) => {
            eprintln!("error: {}", e.message());
            e.code()
        }
    }
}
