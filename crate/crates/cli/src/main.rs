//! `gpgd`: recovery experiments, certificates and property suites.
//!
//! Exit codes: 0 success, 2 usage or config error, 3 numerical failure.

mod config;
mod probe;
mod recover;
mod verify;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use gpgd::linalg::sample_gaussian;
use gpgd::{Error, Matrix, ModelSet, RngStream};

#[derive(Parser, Debug)]
#[command(name = "gpgd", version, about = "Generalized projected gradient descent toolkit")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Run the solve described by an experiment file (TOML or JSON).
    Recover {
        config: PathBuf,
        /// Directory that relative output paths resolve against.
        #[arg(long)]
        out_dir: Option<PathBuf>,
    },
    /// Sampled (and optionally bisected) Lipschitz certificate of a projection.
    Certify(probe::CertifyArgs),
    /// Run a property suite.
    Verify {
        /// One of lemmas-q-r, orth-props, rip, contraction, ht-constants, fk-identities.
        suite: String,
    },
    /// Restricted isometry constant and optimal step size of an operator.
    Ric(probe::RicArgs),
}

#[derive(Debug)]
pub enum Failure {
    Usage(String),
    Numerical(String),
}

impl Failure {
    /// Library errors from bad inputs are usage errors, the rest numerical.
    pub fn from_core(e: Error) -> Self {
        match e {
            Error::InvalidParameter(_)
            | Error::DimensionMismatch { .. }
            | Error::HaarDimension(_)
            | Error::EmptyMatrix
            | Error::UnsupportedFormat(_)
            | Error::MalformedImage(_)
            | Error::EnumerationBudget { .. }
            | Error::ExactSearchUnavailable(_)
            | Error::Io(_) => Failure::Usage(e.to_string()),
            other => Failure::Numerical(other.to_string()),
        }
    }

    fn code(&self) -> u8 {
        match self {
            Failure::Usage(_) => 2,
            Failure::Numerical(_) => 3,
        }
    }
}

/// A `dim`-dimensional subspace of `R^n` spanned by Gaussian vectors drawn
/// from stream `(seed, 0)`.
pub fn seeded_subspace(n: usize, dim: usize, seed: u64) -> gpgd::Result<ModelSet> {
    seeded_basis(n, dim, &mut RngStream::new(seed, 0)).map(|basis| ModelSet::Subspace { basis })
}

/// `count` such subspaces; subspace `i` uses stream `(seed, i)`.
pub fn seeded_union(n: usize, dim: usize, count: usize, seed: u64) -> gpgd::Result<ModelSet> {
    let bases = (0..count as u64).map(|i| seeded_basis(n, dim, &mut RngStream::new(seed, i))).collect::<gpgd::Result<Vec<_>>>()?;
    ModelSet::union(bases)
}

fn seeded_basis(n: usize, dim: usize, rng: &mut RngStream) -> gpgd::Result<Matrix> {
    if dim == 0 || dim > n {
        return Err(Error::InvalidParameter(format!("subspace dimension must be in 1..={n}, got {dim}")));
    }
    let cols: Vec<_> = (0..dim).map(|_| sample_gaussian(rng, n)).collect();
    match ModelSet::span(&cols)? {
        ModelSet::Subspace { basis } if basis.cols() == dim => Ok(basis),
        _ => Err(Error::InvalidParameter("random spanning vectors were dependent".into())),
    }
}

fn run(cli: Cli) -> Result<(), Failure> {
    match cli.command {
        Command::Recover { config, out_dir } => recover::run(&config, out_dir.as_deref()),
        Command::Certify(args) => probe::run_certify(&args),
        Command::Ric(args) => probe::run_ric(&args),
        Command::Verify { suite } => {
            let report = verify::run_suite(&suite).ok_or_else(|| {
                Failure::Usage(format!("unknown suite {suite:?}; known suites: {}", verify::SUITES.join(", ")))
            })?;
            println!("{}", serde_json::to_string_pretty(&report).expect("report serializes"));
            if report.passed {
                Ok(())
            } else {
                Err(Failure::Numerical(format!("{} of {} checks failed", report.failures.len(), report.checks)))
            }
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            let (Failure::Usage(msg) | Failure::Numerical(msg)) = &f;
            eprintln!("gpgd: {msg}");
            ExitCode::from(f.code())
        }
    }
}
