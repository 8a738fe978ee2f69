use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::{SystemTime, UNIX_EPOCH};

use clap::{Parser, Subcommand, ValueEnum};
use qoems_core::config::parse_config;
use qoems_core::model::steady_state_branches;
use qoems_core::output::{render, write_file, Format, Provenance};
use qoems_core::sweep::run_sweep;
use qoems_core::validation::run_validation;
use qoems_core::{solve_steady_state, AxisName, Convention, Error, Scenario};

const TOOL: &str = concat!("qoems ", env!("CARGO_PKG_VERSION"));

const EXIT_USAGE: u8 = 1;
const EXIT_PHYSICS: u8 = 2;
const EXIT_VALIDATION: u8 = 3;

#[derive(Debug, Parser)]
#[command(
    name = "qoems",
    version,
    about = "Probe response of a Coulomb-coupled optomechanical system"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,

    /// Configuration file.
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    /// Output file; standard output when omitted.
    #[arg(long, global = true)]
    out: Option<PathBuf>,

    #[arg(long, global = true, value_enum, default_value_t = FormatArg::Csv)]
    format: FormatArg,

    /// Overrides the convention of the configuration file.
    #[arg(long, global = true, value_enum)]
    convention: Option<ConventionArg>,

    /// Worker threads; all cores when omitted.
    #[arg(long, global = true)]
    jobs: Option<usize>,

    /// Leave the timestamp out of the output header.
    #[arg(long, global = true)]
    no_timestamp: bool,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Transmission spectrum.
    Spectrum,
    /// Transmission with the phase unwrapped along the detuning axis.
    Phase,
    /// Group delay at the configured probe detuning.
    Delay,
    /// Whatever scenario the configuration names.
    Sweep,
    /// Operating point and all steady-state branches as JSON.
    SteadyState,
    /// Oracle cross-checks; exits with status 3 on failure.
    Validate,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum FormatArg {
    Csv,
    Gnuplot,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum ConventionArg {
    PaperCorrected,
    Intracavity,
}

impl From<ConventionArg> for Convention {
    fn from(c: ConventionArg) -> Self {
        match c {
            ConventionArg::PaperCorrected => Convention::PaperCorrected,
            ConventionArg::Intracavity => Convention::Intracavity,
        }
    }
}

enum Failure {
    Usage(String),
    Core(Error),
    Validation(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Core(e)
    }
}

fn emit(target: Option<&Path>, text: &str) -> Result<(), Failure> {
    if let Some(path) = target {
        return Ok(write_file(path, text)?);
    }
    let mut out = io::stdout().lock();
    match out.write_all(text.as_bytes()).and_then(|()| out.flush()) {
        // A closed pipe (`qoems ... | head`) is the reader's choice, not an error.
        Err(e) if e.kind() != io::ErrorKind::BrokenPipe => Err(Failure::Core(Error::Io {
            path: "<stdout>".into(),
            message: e.to_string(),
        })),
        _ => Ok(()),
    }
}

fn read_config(cli: &Cli) -> Result<String, Failure> {
    let path = cli
        .config
        .as_ref()
        .ok_or_else(|| Failure::Usage("this command needs --config <path>".into()))?;
    std::fs::read_to_string(path).map_err(|e| {
        Failure::Core(Error::Io {
            path: path.display().to_string(),
            message: e.to_string(),
        })
    })
}

fn validate(cli: &Cli) -> Result<(), Failure> {
    let report = run_validation(TOOL)?;
    let mut text = report.to_json();
    text.push('\n');
    emit(cli.out.as_deref(), &text)?;
    if report.passed {
        Ok(())
    } else {
        let failed: Vec<&str> = report
            .checks
            .iter()
            .filter(|c| !c.passed)
            .map(|c| c.name.as_str())
            .collect();
        Err(Failure::Validation(failed.join(", ")))
    }
}

fn steady_state(cli: &Cli) -> Result<(), Failure> {
    let (params, _) = parse_config(&read_config(cli)?)?;
    let op = solve_steady_state(&params)?;
    let branches = steady_state_branches(&params)?;
    let value = serde_json::json!({
        "operating_point": op,
        "photon_number_branches": branches,
        "relative_residual": op.relative_residual(params.cavity.kappa),
    });
    let mut text = serde_json::to_string_pretty(&value).expect("operating point serializes");
    text.push('\n');
    emit(cli.out.as_deref(), &text)
}

fn sweep(cli: &Cli) -> Result<(), Failure> {
    let (params, mut spec) = parse_config(&read_config(cli)?)?;
    match cli.command {
        Command::Spectrum => spec.scenario = Scenario::Spectrum,
        Command::Phase => spec.scenario = Scenario::Phase,
        Command::Delay if !spec.scenario.is_delay() => {
            spec.scenario = if spec.axes.iter().any(|a| a.name == AxisName::Kappa) {
                Scenario::DelayVsKappa
            } else {
                Scenario::DelayVsPower
            };
        }
        _ => {}
    }
    if spec.scenario == Scenario::Validate {
        return validate(cli);
    }
    if let Some(c) = cli.convention {
        spec.convention = c.into();
    }
    if let Some(w) = params.perturbative_warning() {
        log::warn!("{w}");
    }
    params.validate()?;
    spec.validate()?;

    let result = run_sweep(&params, &spec)?;
    let failed = result.rows.iter().filter(|r| r.error.is_some()).count();
    if failed > 0 {
        log::warn!(
            "{failed} of {} grid points failed; see the status column",
            result.rows.len()
        );
    }
    let prov = Provenance {
        tool: TOOL.to_string(),
        timestamp: (!cli.no_timestamp).then(|| {
            SystemTime::now()
                .duration_since(UNIX_EPOCH)
                .map(|d| d.as_secs())
                .unwrap_or(0)
        }),
    };
    let format = match cli.format {
        FormatArg::Csv => Format::Csv,
        FormatArg::Gnuplot => Format::Gnuplot,
    };
    let text = render(&result, &prov, format);
    emit(cli.out.as_deref().or(spec.output.as_deref()), &text)
}

fn run(cli: &Cli) -> Result<(), Failure> {
    match cli.command {
        Command::Validate => validate(cli),
        Command::SteadyState => steady_state(cli),
        Command::Spectrum | Command::Phase | Command::Delay | Command::Sweep => sweep(cli),
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };

    let outcome = match cli.jobs {
        Some(0) => Err(Failure::Usage("--jobs must be at least 1".into())),
        Some(n) => match rayon::ThreadPoolBuilder::new().num_threads(n).build() {
            Ok(pool) => pool.install(|| run(&cli)),
            Err(e) => Err(Failure::Usage(format!(
                "cannot start {n} worker threads: {e}"
            ))),
        },
        None => run(&cli),
    };

    match outcome {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Usage(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(EXIT_USAGE)
        }
        Err(Failure::Validation(failed)) => {
            eprintln!("validation failed: {failed}");
            ExitCode::from(EXIT_VALIDATION)
        }
        Err(Failure::Core(e)) => {
            eprintln!("error: {e}");
            ExitCode::from(if e.is_physics() {
                EXIT_PHYSICS
            } else {
                EXIT_USAGE
            })
        }
    }
}
