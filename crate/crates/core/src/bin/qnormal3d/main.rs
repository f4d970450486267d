//! Command-line front end: evaluate densities, run identity checks, tabulate
//! moments, Gram matrices and limits, and draw samples.
//!
//! Exit codes: 0 success, 1 a checked identity failed, 2 invalid parameters
//! or input, 3 a series, product or quadrature did not converge, 4 too few
//! samples for an estimate.

mod commands;
mod table;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use qnormal3d::quadrature::THREADS_ENV;
use qnormal3d::{Error, ModelParams, TruncationConfig};

use table::Format;

#[derive(Debug, Parser)]
#[command(name = "qnormal3d", version, about = "Three-dimensional q-Normal distributions")]
pub struct RunConfig {
    #[command(flatten)]
    pub common: Common,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Args)]
pub struct Common {
    /// Correlations `rho12,rho13,rho23`; default 0.3,0.4,0.5.
    #[arg(long, global = true, value_parser = parse_rho, allow_hyphen_values = true)]
    pub rho: Option<[f64; 3]>,
    /// Deformation parameter q; default 0.5.
    #[arg(long, global = true, allow_negative_numbers = true)]
    pub q: Option<f64>,
    #[arg(long, global = true, value_enum, default_value_t = Format::Csv)]
    pub format: Format,
    /// Output file; standard output when absent.
    #[arg(long, short, global = true)]
    pub output: Option<PathBuf>,
    /// Term cap for infinite products and series.
    #[arg(long, global = true, default_value_t = TruncationConfig::default().max_terms)]
    pub max_terms: usize,
    /// Absolute tail tolerance for series.
    #[arg(long, global = true, default_value_t = TruncationConfig::default().tail_tol)]
    pub tail_tol: f64,
    /// Per-factor deviation at which infinite products stop.
    #[arg(long, global = true, default_value_t = TruncationConfig::default().product_tol)]
    pub product_tol: f64,
    /// Worker threads for quadrature.
    #[arg(long, global = true, env = THREADS_ENV)]
    pub threads: Option<usize>,
}

impl Common {
    pub fn params(&self) -> Result<ModelParams, Error> {
        let [a, b, c] = self.rho.unwrap_or([0.3, 0.4, 0.5]);
        ModelParams::new(a, b, c, self.q.unwrap_or(0.5))
    }

    pub fn truncation(&self) -> Result<TruncationConfig, Error> {
        TruncationConfig::new(self.max_terms, self.tail_tol, self.product_tol)
    }
}

fn parse_rho(s: &str) -> Result<[f64; 3], String> {
    let parts: Vec<f64> = s
        .split(',')
        .map(|p| p.trim().parse::<f64>().map_err(|e| format!("{p:?}: {e}")))
        .collect::<Result<_, _>>()?;
    parts
        .try_into()
        .map_err(|v: Vec<f64>| format!("expected three comma-separated values, got {}", v.len()))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum DensityName {
    #[value(name = "fN")]
    FN,
    #[value(name = "fCN")]
    FCN,
    #[value(name = "fR")]
    FR,
    #[value(name = "f3D")]
    F3D,
    #[value(name = "fYZ")]
    FYZ,
    #[value(name = "fZ")]
    FZ,
    #[value(name = "fXgYZ")]
    FXgYZ,
    #[value(name = "fYZgX")]
    FYZgX,
    #[value(name = "pmKernel")]
    PmKernel,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum MomentName {
    #[value(name = "e_h2n_z")]
    EH2nZ,
    #[value(name = "var_z")]
    VarZ,
    #[value(name = "cov")]
    Cov,
    #[value(name = "mixed")]
    Mixed,
    #[value(name = "cond_x")]
    CondX,
    #[value(name = "cond_y")]
    CondY,
    #[value(name = "cond_xy")]
    CondXY,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum GramFamily {
    Qhermite,
    Asc,
    Rogers,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Law {
    #[value(name = "fN")]
    FN,
    #[value(name = "fCN")]
    FCN,
    #[value(name = "3d")]
    ThreeD,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Evaluate a density on a grid.
    Eval {
        density: DensityName,
        /// `start:stop:count` for the leading variable; the whole support by default.
        #[arg(long, allow_hyphen_values = true)]
        grid: Option<String>,
        /// Representation, or `all` for one column per representation.
        #[arg(long)]
        form: Option<String>,
        #[arg(long, allow_negative_numbers = true, default_value_t = 0.0)]
        x: f64,
        #[arg(long, allow_negative_numbers = true, default_value_t = 0.0)]
        y: f64,
        #[arg(long, allow_negative_numbers = true, default_value_t = 0.0)]
        z: f64,
        /// Correlation for fCN and pmKernel; rho12 by default.
        #[arg(long, allow_negative_numbers = true)]
        corr: Option<f64>,
        /// Parameter of fR; r by default.
        #[arg(long, allow_negative_numbers = true)]
        beta: Option<f64>,
    },
    /// Run an identity suite; exits 1 if any identity fails.
    Check {
        /// orthogonality, marginals, chapman-kolmogorov, poisson-mehler,
        /// moments, conditionals, limits or all.
        suite: String,
        #[arg(long, default_value_t = 17)]
        seed: u64,
    },
    /// Closed-form moments beside their quadrature values.
    Moments {
        #[arg(long, value_enum)]
        kind: MomentName,
        #[arg(long, default_value_t = 1)]
        n: u32,
        #[arg(long, default_value_t = 1)]
        m: u32,
        /// r for e_h2n_z and var_z; the product of the correlations by default.
        #[arg(long, allow_negative_numbers = true)]
        r: Option<f64>,
        #[arg(long, allow_negative_numbers = true, default_value_t = 0.5)]
        y: f64,
        #[arg(long, allow_negative_numbers = true, default_value_t = 1.0)]
        z: f64,
    },
    /// Gram matrix of a polynomial family under its weight.
    Gram {
        #[arg(long, value_enum)]
        family: GramFamily,
        #[arg(long, default_value_t = 4)]
        nmax: u32,
        /// Conditioning value for asc.
        #[arg(long, allow_negative_numbers = true, default_value_t = 0.0)]
        y: f64,
        /// Correlation for asc; rho12 by default.
        #[arg(long, allow_negative_numbers = true)]
        corr: Option<f64>,
        /// Parameter for rogers; r by default.
        #[arg(long, allow_negative_numbers = true)]
        beta: Option<f64>,
    },
    /// Draw samples, raw or summarised.
    Sample {
        #[arg(long, default_value_t = 1000)]
        n: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, value_enum, default_value_t = Law::ThreeD)]
        law: Law,
        #[arg(long, default_value_t = qnormal3d::sampler::DEFAULT_BURN_IN)]
        burn_in: usize,
        #[arg(long, default_value_t = qnormal3d::sampler::DEFAULT_THIN)]
        thin: usize,
        #[arg(long, default_value_t = qnormal3d::sampler::DEFAULT_GRID_POINTS)]
        grid_points: usize,
        /// Conditioning value for fCN.
        #[arg(long, allow_negative_numbers = true, default_value_t = 0.0)]
        y: f64,
        /// Correlation for fCN; rho12 by default.
        #[arg(long, allow_negative_numbers = true)]
        corr: Option<f64>,
        /// Print estimates against closed forms instead of raw draws.
        #[arg(long)]
        summary: bool,
    },
    /// Distance to the Gaussian limits along an increasing q sequence.
    Limits {
        #[arg(long, value_delimiter = ',', default_value = "0.9,0.99,0.999")]
        qs: Vec<f64>,
    },
}

/// Why a command stopped.
#[derive(Debug)]
pub enum Failure {
    Lib(Error),
    Io(std::io::Error),
    Usage(String),
    /// Some checked identity failed.
    Identities,
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Lib(e)
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        Failure::Io(e)
    }
}

impl Failure {
    fn code(&self) -> u8 {
        match self {
            Failure::Identities => 1,
            Failure::Lib(Error::NonConvergence { .. }) => 3,
            Failure::Lib(Error::InsufficientSamples { .. }) => 4,
            Failure::Lib(_) | Failure::Io(_) | Failure::Usage(_) => 2,
        }
    }
}

fn main() -> ExitCode {
    let cfg = RunConfig::parse();
    if let Some(t) = cfg.common.threads {
        std::env::set_var(THREADS_ENV, t.to_string());
    }
    match commands::run(&cfg) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            match &f {
                Failure::Lib(e) => eprintln!("error: {e}"),
                Failure::Io(e) => eprintln!("error: {e}"),
                Failure::Usage(m) => eprintln!("error: {m}"),
                Failure::Identities => {}
            }
            ExitCode::from(f.code())
        }
    }
}
