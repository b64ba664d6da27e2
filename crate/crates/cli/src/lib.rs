//! Command-line front end of `rough-heston`.
//!
//! ```text
//! rough-heston [--config FILE] [--seed N] [--workers N] [--out csv|json] <command>
//! ```
//!
//! Exit codes: 0 on success, 1 when a run faults, 2 on usage or config errors.

pub mod config;
pub mod error;
pub mod report;

use std::io::Write;
use std::path::PathBuf;

use clap::{Parser, Subcommand, ValueEnum};
use rough_heston::diagnostics::{
    holder_scaling_report, martingale_mean_check, structural_invariant_sweep, RunSpec,
};
use rough_heston::kernels::regularity_sweep;
use rough_heston::monte_carlo::{convergence_table_from, price};
use rough_heston::reference::{self, reference_for, Instrument};
use rough_heston::{Payoff, SchemeKind, Workers};

pub use config::{Experiment, ExperimentConfig};
pub use error::CliError;
use report::{emit, DiagnosticReport, KernelReport, OutputFormat, PriceReport, TableReport};

#[derive(Debug, Parser)]
#[command(name = "rough-heston", version, about = "Rough Heston Monte-Carlo and reference pricing")]
pub struct Cli {
    /// TOML experiment config; the built-in benchmark when omitted.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Master seed; overrides the config.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Worker threads, 0 for all cores.
    #[arg(long, global = true, default_value_t = 0)]
    pub workers: usize,
    #[arg(long, global = true, value_enum, default_value_t = OutputFormat::Json)]
    pub out: OutputFormat,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Scheme {
    Volterra,
    Integrated,
}

impl From<Scheme> for SchemeKind {
    fn from(s: Scheme) -> Self {
        match s {
            Scheme::Volterra => SchemeKind::Volterra,
            Scheme::Integrated => SchemeKind::Integrated,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Check {
    Holder,
    Invariants,
    Martingale,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Monte-Carlo price of the configured payoff.
    Price {
        #[arg(long, value_enum)]
        scheme: Option<Scheme>,
        #[arg(long)]
        steps: Option<usize>,
        #[arg(long)]
        paths: Option<usize>,
    },
    /// Convergence table over grid sizes, one block per scheme.
    Table {
        /// Comma-separated grid sizes, e.g. 4,10,20,40,80,160,320.
        #[arg(long, value_delimiter = ',', required = true, num_args = 0..)]
        n_list: Vec<usize>,
        /// Head the table with the deterministic reference when one exists.
        #[arg(long)]
        reference: bool,
        #[arg(long)]
        paths: Option<usize>,
    },
    /// Deterministic reference price with grid-doubling diagnostics.
    Reference {
        #[arg(long, value_parser = parse_instrument)]
        instrument: Instrument,
        /// European strike; defaults to the configured strike, else S0.
        #[arg(long)]
        strike: Option<f64>,
        /// Volterra grid size of the coarse solve.
        #[arg(long)]
        resolution: Option<usize>,
    },
    /// Statistical and structural checks of the schemes.
    Diagnose {
        #[arg(long, value_enum)]
        check: Check,
        #[arg(long, value_enum)]
        scheme: Option<Scheme>,
        #[arg(long)]
        steps: Option<usize>,
        #[arg(long)]
        paths: Option<usize>,
        /// Moment order of the Hölder regression.
        #[arg(long, default_value_t = 2.0)]
        p: f64,
    },
    /// Regularity bounds of the configured kernel on refined grids.
    ValidateKernel {
        /// Exponent tested; defaults to the kernel's own.
        #[arg(long)]
        hurst: Option<f64>,
        #[arg(long, value_delimiter = ',', default_value = "64,128,256,512")]
        steps: Vec<usize>,
    },
}

fn parse_instrument(s: &str) -> Result<Instrument, String> {
    s.parse().map_err(|e: rough_heston::Error| e.to_string())
}

fn workers(n: usize) -> Workers {
    if n == 0 {
        Workers::Auto
    } else {
        Workers::Fixed(n)
    }
}

/// Parse `args`, run the command and write its report to `out`.
pub fn run<I, T>(args: I, out: &mut dyn Write) -> Result<(), CliError>
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = Cli::try_parse_from(args).map_err(|e| CliError::Usage(e.to_string()))?;
    execute(&cli, out)
}

pub fn execute(cli: &Cli, out: &mut dyn Write) -> Result<(), CliError> {
    let config = match &cli.config {
        Some(path) => ExperimentConfig::load(path)?,
        None => ExperimentConfig::default(),
    };
    let mut exp = config.resolve(cli.seed, workers(cli.workers))?;
    let seed = exp.mc.master_seed;
    match &cli.command {
        Command::Price {
            scheme,
            steps,
            paths,
        } => {
            override_mc(&mut exp, *scheme, *steps, *paths)?;
            let e = price(&exp.params, &exp.kernel, &exp.payoff, &exp.mc)?;
            let r = PriceReport::new(exp.payoff.name(), exp.mc.scheme, exp.mc.steps, seed, &e);
            emit(&r, cli.out, out)
        }
        Command::Table {
            n_list,
            reference,
            paths,
        } => {
            if n_list.is_empty() {
                return Err(CliError::Usage("--n-list needs at least one grid size".into()));
            }
            override_mc(&mut exp, None, None, *paths)?;
            let reference = if *reference {
                reference_for(&exp.params, &exp.kernel, &exp.payoff, &exp.reference)?
            } else {
                None
            };
            let rows = convergence_table_from(&exp.params, &exp.kernel, &exp.payoff, n_list, &exp.mc)?;
            let r = TableReport {
                payoff: exp.payoff.name().into(),
                num_paths: exp.mc.num_paths,
                seed,
                reference,
                rows,
            };
            emit(&r, cli.out, out)
        }
        Command::Reference {
            instrument,
            strike,
            resolution,
        } => {
            if let Some(m) = resolution {
                exp.reference.resolution = *m;
            }
            let r = match instrument {
                Instrument::EuropeanCall => {
                    let k = strike.unwrap_or(match exp.payoff {
                        Payoff::EuropeanCall { strike } => strike,
                        _ => exp.params.s0,
                    });
                    reference::european_call(&exp.params, &exp.kernel, k, &exp.reference)
                }
                Instrument::VarianceSwap | Instrument::VarianceCall if strike.is_some() => {
                    return Err(CliError::Usage(format!(
                        "--strike does not apply to {}",
                        instrument.as_str()
                    )))
                }
                Instrument::VarianceSwap => reference::variance_swap(&exp.params, &exp.kernel, &exp.reference),
                Instrument::VarianceCall => {
                    reference::variance_call(&exp.params, &exp.kernel, exp.params.v0, &exp.reference)
                }
            }
            .map_err(|e| CliError::from_core("reference", e))?;
            emit(&r, cli.out, out)
        }
        Command::Diagnose {
            check,
            scheme,
            steps,
            paths,
            p,
        } => {
            override_mc(&mut exp, *scheme, *steps, *paths)?;
            let mc = &exp.mc;
            let spec = RunSpec {
                workers: mc.workers,
                ..RunSpec::new(mc.scheme, mc.steps, mc.num_paths, seed)
            };
            let r = match check {
                Check::Holder => {
                    DiagnosticReport::Holder(holder_scaling_report(&exp.params, &exp.kernel, &spec, *p)?)
                }
                Check::Invariants => {
                    DiagnosticReport::Invariants(structural_invariant_sweep(&exp.params, &exp.kernel, &spec)?)
                }
                Check::Martingale => DiagnosticReport::Martingale(martingale_mean_check(
                    &exp.params,
                    &exp.kernel,
                    mc.steps,
                    mc.num_paths,
                    seed,
                    mc.workers,
                )?),
            };
            emit(&r, cli.out, out)
        }
        Command::ValidateKernel { hurst, steps } => {
            let hurst = hurst.unwrap_or_else(|| exp.kernel.hurst_exponent());
            let sweep = regularity_sweep(&exp.kernel, exp.params.horizon, hurst, steps)?;
            emit(&KernelReport { hurst, sweep }, cli.out, out)
        }
    }
}

fn override_mc(
    exp: &mut Experiment,
    scheme: Option<Scheme>,
    steps: Option<usize>,
    paths: Option<usize>,
) -> Result<(), CliError> {
    if let Some(s) = scheme {
        exp.mc.scheme = s.into();
    }
    if let Some(n) = steps {
        exp.mc.steps = n;
    }
    if let Some(m) = paths {
        exp.mc.num_paths = m;
    }
    exp.mc.validate().map_err(CliError::Runtime)
}
