//! `birkhoff`: classify boundary value problems, locate their spectra and
//! probe the structure behind eigenfunction expansions.
//!
//! Exit codes: 0 success, 2 malformed input or options, 3 numerical failure.

mod commands;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use birkhoff::config::{threads_from_env, Defaults};
use birkhoff::BvpError;
use clap::{Args, Parser, Subcommand, ValueEnum};

use crate::output::Format;

#[derive(Debug, Parser)]
#[command(name = "birkhoff", version, about = "Regularity, spectra and Green's functions of two-point boundary value problems")]
pub struct Cli {
    /// Problem document (JSON); may also be given after the subcommand.
    #[arg(long, global = true, value_name = "PATH")]
    spec: Option<PathBuf>,

    /// Write the result here instead of stdout.
    #[arg(long, global = true, value_name = "PATH")]
    out: Option<PathBuf>,

    #[arg(long, global = true, value_enum)]
    format: Option<Format>,

    #[arg(long, global = true)]
    seed: Option<u64>,

    /// Sub-sector half-width; defaults to pi/(4n).
    #[arg(long, global = true)]
    epsilon: Option<f64>,

    /// Hyperbolic-circle radius of the sector geometry.
    #[arg(long, global = true)]
    delta: Option<f64>,

    /// Relative merge tolerance for distinct characteristic values.
    #[arg(long, global = true)]
    tol: Option<f64>,

    /// Print every default as JSON and exit.
    #[arg(long)]
    print_defaults: bool,

    #[command(subcommand)]
    command: Option<Command>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum SectorChoice {
    #[value(name = "0")]
    Zero,
    #[value(name = "1")]
    One,
    Both,
}

impl SectorChoice {
    fn sectors(self) -> Vec<u8> {
        match self {
            SectorChoice::Zero => vec![0],
            SectorChoice::One => vec![1],
            SectorChoice::Both => vec![0, 1],
        }
    }
}

#[derive(Debug, Args)]
pub struct SpecArg {
    #[arg(value_name = "SPEC")]
    path: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum InputFunction {
    Poly,
    Samples,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Regularity class, theta determinants and F(s).
    Classify {
        #[command(flatten)]
        spec: SpecArg,
    },
    /// Characteristic values in an annulus of the rho-plane.
    Spectrum {
        #[command(flatten)]
        spec: SpecArg,
        #[arg(long, default_value_t = 0.5)]
        rmin: f64,
        #[arg(long, default_value_t = 50.0)]
        rmax: f64,
        #[arg(long, value_enum, default_value = "both")]
        sector: SectorChoice,
    },
    /// Samples of the Green's function on an m x m grid.
    Green {
        #[command(flatten)]
        spec: SpecArg,
        /// Spectral parameter as `re,im`.
        #[arg(long, value_parser = parse_complex, allow_hyphen_values = true)]
        rho: birkhoff::Complex64,
        #[arg(long, default_value_t = 11)]
        grid: usize,
    },
    /// Convergence of the modified characteristic matrix along a sector bisector.
    McmLimit {
        #[command(flatten)]
        spec: SpecArg,
        #[arg(long, value_enum, default_value = "0")]
        sector: SectorChoice,
        #[arg(long, default_value_t = 20.0)]
        rmin: f64,
        #[arg(long, default_value_t = 200.0)]
        rmax: f64,
        #[arg(long, default_value_t = 8)]
        points: usize,
    },
    /// Riesz projectors of the eigenvalue groups found up to `--rmax`.
    Projectors {
        #[command(flatten)]
        spec: SpecArg,
        #[arg(long, default_value_t = 20.0)]
        rmax: f64,
        /// Characteristic values closer than this (in rho) share a projector.
        #[arg(long, default_value_t = 1.5)]
        group_tol: f64,
    },
    /// Gram condition numbers and partial-sum errors of eigenfunction expansions.
    Expand {
        #[command(flatten)]
        spec: SpecArg,
        #[arg(long, value_enum, default_value = "poly")]
        input_function: InputFunction,
        /// Polynomial coefficients or uniform samples on [0, 1], as `[[re, im], ...]`.
        #[arg(long, default_value = "[[0,0],[1,0],[-1,0]]")]
        values: String,
        #[arg(long, value_delimiter = ',', default_value = "5,10,20,30")]
        ks: Vec<usize>,
        /// Group close characteristic values before measuring.
        #[arg(long)]
        paired: bool,
        /// Also compute partial sums of the projector expansion.
        #[arg(long)]
        partial_sums: bool,
        #[arg(long, default_value_t = 110.0)]
        rmax: f64,
    },
    /// One deterministic document combining every check.
    Report {
        #[command(flatten)]
        spec: SpecArg,
        #[arg(long, default_value_t = 50.0)]
        rmax: f64,
        /// Number of eigenvalue groups whose projectors enter the report.
        #[arg(long, default_value_t = 6)]
        projectors: usize,
    },
}

fn parse_complex(s: &str) -> Result<birkhoff::Complex64, String> {
    let (re, im) = s.split_once(',').ok_or_else(|| format!("expected `re,im`, got `{s}`"))?;
    let p = |v: &str| v.trim().parse::<f64>().map_err(|e| format!("`{v}`: {e}"));
    Ok(birkhoff::Complex64::new(p(re)?, p(im)?))
}

/// Failure classes mapped onto exit codes.
#[derive(Debug)]
pub enum Failure {
    Usage(String),
    Spec(String),
    Numerical(String),
}

impl Failure {
    fn code(&self) -> u8 {
        match self {
            Failure::Usage(_) | Failure::Spec(_) => 2,
            Failure::Numerical(_) => 3,
        }
    }
}

impl std::fmt::Display for Failure {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Failure::Usage(m) => write!(f, "usage error: {m}"),
            Failure::Spec(m) => write!(f, "spec error: {m}"),
            Failure::Numerical(m) => write!(f, "numerical failure: {m}"),
        }
    }
}

impl From<BvpError> for Failure {
    fn from(e: BvpError) -> Self {
        if e.is_spec_error() {
            Failure::Spec(e.to_string())
        } else {
            Failure::Numerical(e.to_string())
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Some(n) = threads_from_env() {
        // only fails if a pool already exists, which cannot happen this early
        let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    }
    if cli.print_defaults {
        return match output::json(&Defaults::default()).and_then(|r| output::emit(cli.out.as_deref(), r)) {
            Ok(()) => ExitCode::SUCCESS,
            Err(e) => {
                eprintln!("birkhoff: {e}");
                ExitCode::from(e.code())
            }
        };
    }
    match commands::run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("birkhoff: {e}");
            ExitCode::from(e.code())
        }
    }
}
