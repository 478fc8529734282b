//! Command-line driver: analytic tables, cross-section sweeps, Monte Carlo
//! runs and rate planning.
//!
//! Exit codes: 0 success, 2 invalid input (arguments, config, preconditions),
//! 3 runtime failure (no coincidences in any setting, or output I/O failure).

use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::de::DeserializeOwned;
use serde::Serialize;

use deuteron_epr::event_generator::EventDumpWriter;
use deuteron_epr::exec::Executor;
use deuteron_epr::simulation::{simulate, simulate_with_events, ExperimentConfig, Timing};
use deuteron_epr::tables::{
    analytic_table, rates_report, xsec_table, AnalyticConfig, RatesConfig, XsecConfig,
};

const BUNDLED_SCENARIOS: &str = include_str!("../scenarios/pp_deuteron.json");

#[derive(Parser)]
#[command(name = "deuteron-epr", version, about = "Spin correlations in deuteron photodisintegration")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Singlet correlation, local envelope and envelope gap over an angle grid
    Analytic(Common),
    /// Cross-section fits, triplet fractions and cone factors over an energy grid
    Xsec {
        #[command(flatten)]
        common: Common,
        /// Evaluate fits outside their validity windows
        #[arg(long)]
        allow_extrapolation: bool,
    },
    /// Monte Carlo run: generate, detect, tally, estimate
    Simulate {
        #[command(flatten)]
        common: Common,
        /// Overrides the config seed
        #[arg(long)]
        seed: Option<u64>,
        /// Overrides the config stream count
        #[arg(long)]
        streams: Option<u32>,
        #[arg(long)]
        allow_extrapolation: bool,
        /// Write every generated event as CSV (runs sequentially)
        #[arg(long, value_name = "PATH")]
        dump_events: Option<PathBuf>,
        /// Run on a single thread
        #[arg(long)]
        sequential: bool,
        /// Record wall-clock time in the report (makes it non-reproducible)
        #[arg(long)]
        timing: bool,
    },
    /// Pair and coincidence rates for experimental scenarios
    Rates(Common),
}

#[derive(Args)]
struct Common {
    /// JSON config; built-in defaults when absent
    #[arg(long, value_name = "PATH")]
    config: Option<PathBuf>,
    /// Output file; stdout when absent
    #[arg(long, value_name = "PATH")]
    out: Option<PathBuf>,
    /// Defaults to csv for tables and json for reports
    #[arg(long, value_enum)]
    format: Option<Format>,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Csv,
    Json,
}

enum Failure {
    Invalid(String),
    Runtime(String),
}

impl From<deuteron_epr::Error> for Failure {
    fn from(e: deuteron_epr::Error) -> Self {
        Failure::Invalid(e.to_string())
    }
}

fn io_failure(path: Option<&Path>, e: io::Error) -> Failure {
    match path {
        Some(p) => Failure::Runtime(format!("{}: {e}", p.display())),
        None => Failure::Runtime(e.to_string()),
    }
}

fn load<T: DeserializeOwned + Default>(path: Option<&Path>) -> Result<T, Failure> {
    match path {
        None => Ok(T::default()),
        Some(p) => {
            let text = std::fs::read_to_string(p)
                .map_err(|e| Failure::Invalid(format!("{}: {e}", p.display())))?;
            serde_json::from_str(&text).map_err(|e| Failure::Invalid(format!("{}: {e}", p.display())))
        }
    }
}

fn open_out(path: Option<&Path>) -> Result<Box<dyn Write>, Failure> {
    Ok(match path {
        Some(p) => Box::new(BufWriter::new(File::create(p).map_err(|e| io_failure(Some(p), e))?)),
        None => Box::new(BufWriter::new(io::stdout().lock())),
    })
}

fn emit<T: Serialize>(
    common: &Common,
    default: Format,
    value: &T,
    csv: impl FnOnce(&mut dyn Write) -> deuteron_epr::Result<()>,
) -> Result<(), Failure> {
    let path = common.out.as_deref();
    let mut out = open_out(path)?;
    match common.format.unwrap_or(default) {
        Format::Json => {
            serde_json::to_writer_pretty(&mut out, value)
                .map_err(|e| Failure::Runtime(e.to_string()))?;
            writeln!(out).map_err(|e| io_failure(path, e))?;
        }
        Format::Csv => csv(&mut out).map_err(|e| Failure::Runtime(e.to_string()))?,
    }
    out.flush().map_err(|e| io_failure(path, e))
}

fn run(cli: Cli) -> Result<(), Failure> {
    match cli.command {
        Command::Analytic(common) => {
            let cfg: AnalyticConfig = load(common.config.as_deref())?;
            let table = analytic_table(&cfg)?;
            emit(&common, Format::Csv, &table, |w| table.write_csv(w))
        }
        Command::Xsec {
            common,
            allow_extrapolation,
        } => {
            let cfg: XsecConfig = load(common.config.as_deref())?;
            let table = xsec_table(&cfg, allow_extrapolation)?;
            emit(&common, Format::Csv, &table, |w| table.write_csv(w))
        }
        Command::Rates(common) => {
            let cfg: RatesConfig = match common.config.as_deref() {
                Some(p) => load(Some(p))?,
                None => serde_json::from_str(BUNDLED_SCENARIOS)
                    .map_err(|e| Failure::Invalid(format!("bundled scenarios: {e}")))?,
            };
            let report = rates_report(&cfg)?;
            for n in &report.notes {
                eprintln!("note: {n}");
            }
            emit(&common, Format::Json, &report, |w| report.write_csv(w))
        }
        Command::Simulate {
            common,
            seed,
            streams,
            allow_extrapolation,
            dump_events,
            sequential,
            timing,
        } => {
            let mut cfg: ExperimentConfig = load(common.config.as_deref())?;
            if let Some(s) = seed {
                cfg.seed = s;
            }
            if let Some(s) = streams {
                cfg.streams = s;
            }
            cfg.allow_extrapolation |= allow_extrapolation;
            cfg.validate()?;

            let start = Instant::now();
            let mut report = match dump_events.as_deref() {
                Some(p) => {
                    let file = File::create(p).map_err(|e| io_failure(Some(p), e))?;
                    let mut writer =
                        EventDumpWriter::new(BufWriter::new(file)).map_err(|e| io_failure(Some(p), e))?;
                    let mut write_err = None;
                    let report = simulate_with_events(&cfg, &mut |ev| {
                        if write_err.is_none() {
                            write_err = writer.write(ev).err();
                        }
                    })?;
                    if let Some(e) = write_err {
                        return Err(io_failure(Some(p), e));
                    }
                    writer.finish().map_err(|e| io_failure(Some(p), e))?;
                    report
                }
                None => {
                    let exec = if sequential {
                        Executor::Sequential
                    } else {
                        Executor::default()
                    };
                    simulate(&cfg, exec)?
                }
            };
            if timing {
                report.timing = Some(Timing {
                    wall_seconds: start.elapsed().as_secs_f64(),
                });
            }
            for s in report.settings.iter().filter(|s| s.zero_coincidences) {
                eprintln!("warning: setting '{}' recorded no coincidences", s.label);
            }
            emit(&common, Format::Json, &report, |w| report.write_csv(w))?;
            if report.all_zero_coincidences {
                return Err(Failure::Runtime("no coincidences in any setting".into()));
            }
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Invalid(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
        Err(Failure::Runtime(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(3)
        }
    }
}
