use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

mod commands;
mod config;

use config::{Overrides, RunConfig};

#[derive(Parser)]
#[command(name = "vpidm", version, about = "Interpolating diffusion models for speech enhancement")]
struct Cli {
    /// TOML file with default values for any of the tuning flags.
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    #[command(flatten)]
    overrides: Overrides,

    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Csv,
    Json,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Export {
    None,
    Summary,
    Full,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum WavEncoding {
    Float32,
    Pcm16,
}

#[derive(Subcommand)]
enum Command {
    /// Tabulate β, α, λ, G and g of the configured schedule on a uniform grid.
    ScheduleDump {
        #[arg(long, default_value_t = vpidm::schedule::DEFAULT_DUMP_POINTS)]
        points: usize,
        #[arg(long, value_enum, default_value_t = Format::Csv)]
        format: Format,
        /// Output file; stdout when omitted.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Sample the closed-form marginal at chosen times, optionally with an Euler–Maruyama path.
    SimulateForward {
        #[arg(long)]
        clean: PathBuf,
        #[arg(long)]
        noisy: PathBuf,
        #[arg(long)]
        out_dir: PathBuf,
        #[arg(long, value_delimiter = ',', default_value = "0,0.25,0.5,0.75,1")]
        times: Vec<f64>,
        /// Euler–Maruyama path export.
        #[arg(long, value_enum, default_value_t = Export::None)]
        export: Export,
        #[command(flatten)]
        audio: commands::AudioOptions,
    },
    /// Run the reverse sampler with a score model that sees the clean reference.
    ///
    /// Validation only: the default oracle model needs the clean signal, so the
    /// output is not a blind enhancement.
    EnhanceOracle {
        #[arg(long, num_args = 1.., required = true)]
        clean: Vec<PathBuf>,
        #[arg(long, num_args = 1.., required = true)]
        noisy: Vec<PathBuf>,
        /// Interference references for SI-SIR/SI-SAR; noisy − clean when omitted.
        #[arg(long, num_args = 1..)]
        noise: Vec<PathBuf>,
        /// Output WAV for a single pair, output directory for several.
        #[arg(long)]
        out: PathBuf,
        /// Metrics CSV; defaults next to the output.
        #[arg(long)]
        metrics: Option<PathBuf>,
        #[arg(long, default_value = "oracle")]
        model: String,
        #[arg(long, value_enum, default_value_t = WavEncoding::Float32)]
        wav_format: WavEncoding,
        /// Write every reverse state: per-step CSV summary or full binary tensors.
        #[arg(long, value_enum, default_value_t = Export::None)]
        export: Export,
        #[command(flatten)]
        audio: commands::AudioOptions,
    },
    /// Initial error of the VP and VE schedules for a clean/noisy pair.
    IeReport {
        #[arg(long)]
        clean: PathBuf,
        #[arg(long)]
        noisy: PathBuf,
        #[arg(long, value_enum, default_value_t = Format::Csv)]
        format: Format,
        #[arg(long)]
        out: Option<PathBuf>,
        #[command(flatten)]
        audio: commands::AudioOptions,
    },
}

#[derive(Debug)]
pub enum CliError {
    Config(String),
    Io(String),
    Numerical(String),
}

impl CliError {
    /// Wraps a library error raised while validating configuration.
    pub fn config(e: vpidm::Error) -> Self {
        CliError::Config(e.to_string())
    }

    fn exit_code(&self) -> u8 {
        match self {
            CliError::Config(_) => 2,
            CliError::Io(_) => 3,
            CliError::Numerical(_) => 4,
        }
    }
}

impl From<vpidm::Error> for CliError {
    fn from(e: vpidm::Error) -> Self {
        use vpidm::Error as E;
        let msg = e.to_string();
        match e {
            _ if e.is_io() => CliError::Io(msg),
            E::LengthMismatch { .. } | E::EmptyInput(_) => CliError::Io(msg),
            E::InvalidParameter(_) | E::StftConfig(_) | E::Model(_) => CliError::Config(msg),
            _ => CliError::Numerical(msg),
        }
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let (kind, msg) = match self {
            CliError::Config(m) => ("configuration error", m),
            CliError::Io(m) => ("i/o error", m),
            CliError::Numerical(m) => ("numerical error", m),
        };
        write!(f, "{kind}: {msg}")
    }
}

fn run(cli: Cli) -> Result<(), CliError> {
    let cfg = RunConfig::resolve(cli.overrides, cli.config.as_deref())?;
    match cli.command {
        Command::ScheduleDump { points, format, out } => {
            commands::schedule_dump(&cfg, points, format, out.as_deref())
        }
        Command::SimulateForward {
            clean,
            noisy,
            out_dir,
            times,
            export,
            audio,
        } => commands::simulate_forward(&cfg, &audio, &clean, &noisy, &out_dir, &times, export),
        Command::EnhanceOracle {
            clean,
            noisy,
            noise,
            out,
            metrics,
            model,
            wav_format,
            export,
            audio,
        } => commands::enhance_oracle(
            &cfg,
            &audio,
            commands::EnhanceJob {
                clean,
                noisy,
                noise,
                out,
                metrics,
                model,
                wav_format,
                export,
            },
        ),
        Command::IeReport {
            clean,
            noisy,
            format,
            out,
            audio,
        } => commands::ie_report(&cfg, &audio, &clean, &noisy, format, out.as_deref()),
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("vpidm: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
