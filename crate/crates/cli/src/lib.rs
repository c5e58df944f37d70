//! Front end for the `psboson` numerics: every subcommand runs a suite of
//! module checks and emits a deterministic JSON (or CSV) report.

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};

pub mod report;
mod suites;

pub use report::{Check, Report, Table};

#[derive(Parser, Debug)]
#[command(name = "psboson", version, about = "Pseudo-boson model numerics and verification suites")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    #[command(flatten)]
    pub common: CommonArgs,
}

#[derive(Subcommand, Debug, Clone)]
pub enum Command {
    /// Closed-form E_{m,n} with eigenvector residuals for H and H*.
    Spectrum,
    /// Pseudo-Jacobi sector spectra, su(1,1) relations and the full-space union check.
    Sectors,
    /// Gram matrix of the biorthogonal eigenbases.
    Biorth,
    /// Pseudo-boson commutators, diagonal form and the similarity S.
    Commutators,
    /// Equation-of-motion matrix: spectrum, eigenvectors, pairing.
    Emm,
    /// Lowest eigenvalue of the self-adjoint variant γ → iλ along a depth schedule.
    Stability {
        #[arg(long, default_value_t = 0.6, allow_hyphen_values = true)]
        lambda: f64,
        #[arg(long, value_delimiter = ',', default_value = "20,40,60")]
        depths: Vec<usize>,
    },
    /// Similarity S = ΨΦ⁻¹ between a matrix with real spectrum and its adjoint.
    Theorem1 {
        /// JSON `{"n","re","im"}` or CSV rows of `re,im` pairs.
        #[arg(long)]
        input: PathBuf,
    },
    /// Every suite with default settings; prints a summary table.
    VerifyAll,
}

#[derive(ValueEnum, Debug, Clone, Copy, PartialEq, Eq)]
pub enum Format {
    Json,
    Csv,
}

#[derive(Args, Debug, Clone)]
pub struct CommonArgs {
    #[arg(long, global = true, default_value_t = 0.5, allow_hyphen_values = true)]
    pub beta: f64,
    #[arg(long, global = true, default_value_t = 0.75)]
    pub gamma: f64,
    /// Occupation cutoff per mode for full-space checks.
    #[arg(long, global = true, default_value_t = 40)]
    pub trunc: usize,
    /// Sector chain depth; the convergence schedule is depth/2, depth, 2·depth.
    #[arg(long, global = true, default_value_t = 60)]
    pub depth: usize,
    /// Casimir labels as `MIN:MAX`.
    #[arg(long, global = true, default_value = "-2:2", value_parser = parse_k_range, allow_hyphen_values = true)]
    pub k_range: (i64, i64),
    #[arg(long, global = true, default_value_t = 3)]
    pub m_max: usize,
    #[arg(long, global = true, default_value_t = 3)]
    pub n_max: usize,
    /// Cutoff for the full-space vs sector-union eigensolve.
    #[arg(long, global = true, default_value_t = 10)]
    pub union_trunc: usize,
    #[arg(long, global = true, value_enum, default_value_t = Format::Json)]
    pub format: Format,
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    #[command(flatten)]
    pub tol: Tolerances,
}

#[derive(Args, Debug, Clone, Copy, PartialEq)]
pub struct Tolerances {
    /// Relative eigenvector residuals.
    #[arg(long = "tol-residual", global = true, default_value_t = 1e-8)]
    pub residual: f64,
    /// Commutation relations and diagonal form on interior rows.
    #[arg(long = "tol-algebra", global = true, default_value_t = 1e-10)]
    pub algebra: f64,
    /// `[H, x]` eigen-relations for the pseudo-boson operators.
    #[arg(long = "tol-heisenberg", global = true, default_value_t = 1e-9)]
    pub heisenberg: f64,
    /// Casimir reductions (interior margin 2).
    #[arg(long = "tol-casimir", global = true, default_value_t = 1e-9)]
    pub casimir: f64,
    #[arg(long = "tol-biorth", global = true, default_value_t = 1e-9)]
    pub biorth: f64,
    /// Exact phase similarities.
    #[arg(long = "tol-similarity", global = true, default_value_t = 1e-13)]
    pub similarity: f64,
    /// Sector eigenvalues vs closed form, and the stability limit.
    #[arg(long = "tol-sector", global = true, default_value_t = 1e-6)]
    pub sector: f64,
    /// Full-space spectrum vs sector union.
    #[arg(long = "tol-union", global = true, default_value_t = 1e-8)]
    pub union: f64,
    /// EMM spectrum and eigenvectors.
    #[arg(long = "tol-emm", global = true, default_value_t = 1e-10)]
    pub emm: f64,
    /// Similarity verifier: similarity error and column identity.
    #[arg(long = "tol-theorem1", global = true, default_value_t = 1e-8)]
    pub theorem1: f64,
    /// Similarity verifier: biorthonormality of the rescaled eigenvectors.
    #[arg(long = "tol-theorem1-biorth", global = true, default_value_t = 1e-10)]
    pub theorem1_biorth: f64,
    /// Largest |Im λ| accepted as a real spectrum.
    #[arg(long = "real-tol", global = true, default_value_t = 1e-8)]
    pub real: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self {
            residual: 1e-8,
            algebra: 1e-10,
            heisenberg: 1e-9,
            casimir: 1e-9,
            biorth: 1e-9,
            similarity: 1e-13,
            sector: 1e-6,
            union: 1e-8,
            emm: 1e-10,
            theorem1: 1e-8,
            theorem1_biorth: 1e-10,
            real: 1e-8,
        }
    }
}

fn parse_k_range(s: &str) -> Result<(i64, i64), String> {
    let (a, b) = s.split_once(':').ok_or_else(|| format!("expected MIN:MAX, got {s:?}"))?;
    let a: i64 = a.trim().parse().map_err(|e| format!("{a:?}: {e}"))?;
    let b: i64 = b.trim().parse().map_err(|e| format!("{b:?}: {e}"))?;
    if a > b {
        return Err(format!("empty range {a}:{b}"));
    }
    Ok((a, b))
}

#[derive(Debug, Clone, PartialEq)]
pub enum CommandKind {
    Spectrum,
    Sectors,
    Biorth,
    Commutators,
    Emm,
    Stability { lambda: f64, depths: Vec<usize> },
    Theorem1 { input: PathBuf },
    VerifyAll,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub command: CommandKind,
    pub beta: f64,
    pub gamma: f64,
    pub trunc: usize,
    pub depth: usize,
    pub k_range: (i64, i64),
    pub m_max: usize,
    pub n_max: usize,
    pub union_trunc: usize,
    pub format: Format,
    pub out: Option<PathBuf>,
    pub tol: Tolerances,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            command: CommandKind::VerifyAll,
            beta: 0.5,
            gamma: 0.75,
            trunc: 40,
            depth: 60,
            k_range: (-2, 2),
            m_max: 3,
            n_max: 3,
            union_trunc: 10,
            format: Format::Json,
            out: None,
            tol: Tolerances::default(),
        }
    }
}

impl From<Cli> for RunConfig {
    fn from(cli: Cli) -> Self {
        let c = cli.common;
        let command = match cli.command {
            Command::Spectrum => CommandKind::Spectrum,
            Command::Sectors => CommandKind::Sectors,
            Command::Biorth => CommandKind::Biorth,
            Command::Commutators => CommandKind::Commutators,
            Command::Emm => CommandKind::Emm,
            Command::Stability { lambda, depths } => CommandKind::Stability { lambda, depths },
            Command::Theorem1 { input } => CommandKind::Theorem1 { input },
            Command::VerifyAll => CommandKind::VerifyAll,
        };
        Self {
            command,
            beta: c.beta,
            gamma: c.gamma,
            trunc: c.trunc,
            depth: c.depth,
            k_range: c.k_range,
            m_max: c.m_max,
            n_max: c.n_max,
            union_trunc: c.union_trunc,
            format: c.format,
            out: c.out,
            tol: c.tol,
        }
    }
}

#[derive(Debug, thiserror::Error)]
pub enum RunError {
    /// Bad input that clap cannot see (unreadable or malformed files, bad ranges).
    #[error("{0}")]
    Usage(String),
    #[error(transparent)]
    Numeric(#[from] psboson::Error),
}

impl RunError {
    pub fn exit_code(&self) -> u8 {
        match self {
            RunError::Usage(_) | RunError::Numeric(psboson::Error::Parse(_)) => 2,
            RunError::Numeric(_) => 1,
        }
    }
}

pub fn run(config: &RunConfig) -> Result<Report, RunError> {
    suites::run(config)
}

impl Report {
    pub fn render(&self, format: Format) -> String {
        match format {
            Format::Json => self.to_json(),
            Format::Csv => self.to_csv(),
        }
    }
}
