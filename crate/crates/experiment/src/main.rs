use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use serde::Serialize;
use tdoaspace::localize::Algorithm;
use tdoaspace_experiment::io::{self, PlanarInput};
use tdoaspace_experiment::{simulate, ExperimentError, Result};

#[derive(Parser)]
#[command(name = "tdoaspace", version, about = "TDOA-space denoising, localization and Monte-Carlo experiments")]
struct Cli {
    /// Propagation speed; TDOA inputs and outputs are times when it is not 1.
    #[arg(long, global = true, default_value_t = 1.0)]
    speed: f64,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a Monte-Carlo experiment and write its CSV.
    Simulate {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Project one TDOA measurement onto the feasible subspace.
    Denoise {
        #[arg(long)]
        tdoa: PathBuf,
        /// Covariance file; defaults to the `cov` field of the TDOA file.
        #[arg(long)]
        cov: Option<PathBuf>,
        /// Pairs to treat as missing, e.g. "2-1,3-1".
        #[arg(long)]
        missing: Option<String>,
    },
    /// Estimate the source position from one TDOA measurement.
    Locate {
        #[arg(long, value_enum)]
        algo: AlgoArg,
        #[arg(long)]
        tdoa: PathBuf,
        #[arg(long = "ref", default_value_t = 0)]
        reference: usize,
        /// Denoise before localizing.
        #[arg(long)]
        denoise: bool,
        /// Sensor preset when the file has no `sensors` field.
        #[arg(long)]
        array: Option<String>,
        #[arg(long)]
        cov: Option<PathBuf>,
    },
    /// Closed-form analysis of three sensors in the plane.
    Planar {
        #[arg(value_enum)]
        action: PlanarAction,
        /// JSON file with `sensors` and a `tau` list.
        #[arg(long, conflicts_with_all = ["sensors", "tau"])]
        input: Option<PathBuf>,
        /// Sensors as "x0,y0;x1,y1;x2,y2".
        #[arg(long, requires = "tau")]
        sensors: Option<String>,
        /// TDOA pair "tau10,tau20"; repeatable.
        #[arg(long, allow_hyphen_values = true)]
        tau: Vec<String>,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum AlgoArg {
    Ls,
    Srdls,
    Gs,
    Ml,
}

impl From<AlgoArg> for Algorithm {
    fn from(a: AlgoArg) -> Self {
        match a {
            AlgoArg::Ls => Algorithm::Ls,
            AlgoArg::Srdls => Algorithm::SrdLs,
            AlgoArg::Gs => Algorithm::Gs,
            AlgoArg::Ml => Algorithm::Ml,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum PlanarAction {
    Classify,
    Invert,
}

fn print_json<T: Serialize>(value: &T) -> Result<()> {
    let text = serde_json::to_string_pretty(value).map_err(|e| ExperimentError::config(e.to_string()))?;
    println!("{text}");
    Ok(())
}

fn run(cli: Cli) -> Result<()> {
    let speed = cli.speed;
    match cli.command {
        Command::Simulate { config, out } => {
            let path = simulate(&config, &out)?;
            println!("{}", path.display());
        }
        Command::Denoise { tdoa, cov, missing } => {
            let file = io::load_tdoa(&tdoa)?;
            let cov = cov.map(|p| io::load_cov(&p)).transpose()?;
            let missing = missing.map(|m| io::parse_pairs(&m)).transpose()?.unwrap_or_default();
            let m = io::measurement(&file, cov.as_ref(), &missing, speed)?;
            print_json(&io::denoise_cmd(&m, speed)?)?;
        }
        Command::Locate {
            algo,
            tdoa,
            reference,
            denoise,
            array,
            cov,
        } => {
            let file = io::load_tdoa(&tdoa)?;
            let cov = cov.map(|p| io::load_cov(&p)).transpose()?;
            let m = io::measurement(&file, cov.as_ref(), &[], speed)?;
            let sensors = io::sensor_array(&m, array.as_deref())?;
            if reference > m.n {
                return Err(ExperimentError::config(format!("--ref {reference} out of range")));
            }
            print_json(&io::locate_cmd(&m, &sensors, algo.into(), reference, denoise)?)?;
        }
        Command::Planar {
            action,
            input,
            sensors,
            tau,
        } => {
            let input = match (input, sensors) {
                (Some(path), _) => io::load_planar(&path)?,
                (None, Some(s)) => PlanarInput {
                    sensors: io::parse_sensors(&s)?,
                    tau: tau.iter().map(|t| io::parse_pair(t, "tau")).collect::<Result<_>>()?,
                },
                (None, None) => return Err(ExperimentError::config("give --input or --sensors with --tau")),
            };
            let with_solutions = matches!(action, PlanarAction::Invert);
            print_json(&io::planar_cmd(&input, with_solutions, speed)?)?;
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
