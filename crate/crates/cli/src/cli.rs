use std::ffi::OsString;
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use aloha_core::ideal::{lattice_levels, RationalPowerFactor};
use aloha_core::{normalized_ladder, AnalysisOptions};
use clap::{Args, Parser, Subcommand, ValueEnum};

use crate::config::{parse_scenario_file, SweepSpec};
use crate::error::{CliError, Result};
use crate::output::{format_float, write_rows, write_rows_to_path, Format};
use crate::report::compare_report;
use crate::sweep::{run_sweep, ResultRow, SimSettings, SweepOptions};

pub const EXIT_NUMERICAL: u8 = 2;
pub const EXIT_COVERAGE: u8 = 3;

#[derive(Debug, Parser)]
#[command(name = "aloha-dim", version, about = "Slotted ALOHA dimensioning with capture and power diversity")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Analytical metrics over the sweep.
    Analyze(OutputArgs),
    /// Analytical metrics plus simulation estimates of the loss rate.
    Simulate(SimArgs),
    /// Like `simulate`, then reports how often the analytical loss rate falls
    /// inside the simulation interval.
    Compare(SimArgs),
    /// Prints the power ladder of every `v` in the sweep.
    Levels(LevelsArgs),
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum FormatArg {
    Csv,
    Json,
}

impl From<FormatArg> for Format {
    fn from(f: FormatArg) -> Self {
        match f {
            FormatArg::Csv => Format::Csv,
            FormatArg::Json => Format::Json,
        }
    }
}

#[derive(Debug, Args)]
struct OutputArgs {
    /// Scenario file; the full default grid when omitted.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Output file; standard output when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "csv")]
    format: FormatArg,
    /// Damping of the wide-band inversion.
    #[arg(long)]
    eta: Option<f64>,
    /// Fixed-point tolerance.
    #[arg(long)]
    tol: Option<f64>,
}

#[derive(Debug, Args)]
struct SimArgs {
    #[command(flatten)]
    output: OutputArgs,
    /// Replications per row.
    #[arg(long)]
    reps: Option<usize>,
    /// Slots per replication, warm-up included.
    #[arg(long)]
    slots: Option<u64>,
    #[arg(long)]
    devices: Option<u64>,
    /// Base seed; row i uses seed + i.
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Debug, Args)]
struct LevelsArgs {
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    out: Option<PathBuf>,
}

/// Runs the command line and maps every outcome to an exit status.
pub fn run<I, T>(args: I) -> ExitCode
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(1)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    match execute(cli.command) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}

fn load_spec(config: Option<&Path>) -> Result<SweepSpec> {
    match config {
        Some(path) => parse_scenario_file(path),
        None => Ok(SweepSpec::default_grid()),
    }
}

fn analysis_options(args: &OutputArgs) -> Result<AnalysisOptions> {
    let mut opts = AnalysisOptions::default();
    if let Some(eta) = args.eta {
        if !(eta > 0.0) || !eta.is_finite() {
            return Err(CliError::Usage(format!("--eta must be positive, got {eta}")));
        }
        opts.eta = eta;
    }
    if let Some(tol) = args.tol {
        if !(tol > 0.0) || !tol.is_finite() {
            return Err(CliError::Usage(format!("--tol must be positive, got {tol}")));
        }
        opts.tol = tol;
    }
    Ok(opts)
}

fn simulation_spec(args: &SimArgs) -> Result<SweepSpec> {
    let mut spec = load_spec(args.output.config.as_deref())?;
    let sim = &mut spec.sim;
    sim.replications = args.reps.or(sim.replications);
    sim.slots = args.slots.or(sim.slots);
    sim.devices = args.devices.or(sim.devices);
    sim.seed = args.seed.or(sim.seed);
    let origin = args
        .output
        .config
        .clone()
        .unwrap_or_else(|| PathBuf::from("command line"));
    spec.validate(&origin)?;
    Ok(spec)
}

fn emit(rows: &[ResultRow], args: &OutputArgs) -> Result<()> {
    let format = args.format.into();
    match &args.out {
        Some(path) => write_rows_to_path(rows, format, path),
        None => write_rows(rows, format, io::stdout().lock()),
    }
}

fn failure_code(rows: &[ResultRow]) -> u8 {
    let failed: Vec<&ResultRow> = rows.iter().filter(|r| !r.is_ok()).collect();
    for r in &failed {
        eprintln!(
            "warning: {} v={} capture_db={} sigma_db={} alpha={}: {}",
            r.model.name(),
            format_float(r.v),
            format_float(r.capture_db),
            format_float(r.sigma_db),
            format_float(r.alpha),
            r.status
        );
    }
    if failed.is_empty() {
        0
    } else {
        EXIT_NUMERICAL
    }
}

fn execute(command: Command) -> Result<u8> {
    match command {
        Command::Analyze(args) => {
            let spec = load_spec(args.config.as_deref())?;
            let opts = SweepOptions {
                analysis: analysis_options(&args)?,
                simulation: None,
            };
            let rows = run_sweep(&spec, &opts);
            emit(&rows, &args)?;
            Ok(failure_code(&rows))
        }
        Command::Simulate(args) => {
            let spec = simulation_spec(&args)?;
            let rows = simulated_rows(&spec, &args)?;
            emit(&rows, &args.output)?;
            Ok(failure_code(&rows))
        }
        Command::Compare(args) => {
            let spec = simulation_spec(&args)?;
            let rows = simulated_rows(&spec, &args)?;
            if args.output.out.is_some() {
                emit(&rows, &args.output)?;
            }
            let code = failure_code(&rows);
            let report = compare_report(&rows, spec.coverage_threshold())?;
            println!("{report}");
            Ok(if code != 0 {
                code
            } else if report.passed() {
                0
            } else {
                EXIT_COVERAGE
            })
        }
        Command::Levels(args) => {
            let spec = load_spec(args.config.as_deref())?;
            let text = levels_text(&spec)?;
            match &args.out {
                Some(path) => std::fs::write(path, text).map_err(|source| CliError::Io {
                    path: path.clone(),
                    source,
                })?,
                None => io::stdout()
                    .lock()
                    .write_all(text.as_bytes())
                    .map_err(|source| CliError::Io {
                        path: PathBuf::from("<stdout>"),
                        source,
                    })?,
            }
            Ok(0)
        }
    }
}

fn simulated_rows(spec: &SweepSpec, args: &SimArgs) -> Result<Vec<ResultRow>> {
    let opts = SweepOptions {
        analysis: analysis_options(&args.output)?,
        simulation: Some(SimSettings::from_spec(spec)),
    };
    Ok(run_sweep(spec, &opts))
}

/// Normalised ladder, and the integer lattice ladder when `v` is rational.
pub fn levels_text(spec: &SweepSpec) -> Result<String> {
    let mut out = String::new();
    for &v in &spec.v {
        let ladder = normalized_ladder(v, spec.k_max)?;
        let join = |xs: Vec<String>| xs.join(" ");
        out.push_str(&format!(
            "v={} K={} levels: {}\n",
            format_float(v),
            spec.k_max,
            join(ladder.levels().iter().map(|&x| format_float(x)).collect())
        ));
        if let Ok(factor) = RationalPowerFactor::from_f64(v) {
            let lattice = lattice_levels(factor, spec.k_max)?;
            out.push_str(&format!(
                "v={} K={} lattice: {}\n",
                format_float(v),
                spec.k_max,
                join(lattice.levels().iter().map(u64::to_string).collect())
            ));
        }
    }
    Ok(out)
}
