//! Monte-Carlo estimation over i.i.d. paths of either scheme.
//!
//! For payoff samples `f_1, ..., f_M` the engine reports
//!
//! ```text
//! Ū_M = (1/M) Σ f_m
//! Σ_M = (1/√M) √( (1/M) Σ f_m² - Ū_M² )
//! ```
//!
//! and the interval `[Ū_M - 2Σ_M, Ū_M + 2Σ_M]`. Paths draw from streams
//! keyed by `(seed, path index)` and the sums are reduced pairwise in path
//! order, so estimates are bit-identical for any number of workers.

use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::TimeGrid;
use crate::increments::IncrementStream;
use crate::kernels::{Kernel, KernelWeights};
use crate::params::ModelParams;
use crate::payoffs::Payoff;
use crate::scheme_v::{VPath, VolterraOptions, VolterraScheme};
use crate::scheme_x::{IntegratedOptions, IntegratedScheme, XPath};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SchemeKind {
    /// Stochastic Volterra formulation, simulating `(Y, V)`.
    Volterra,
    /// Integrated-variance formulation, simulating `(Y, X)`.
    Integrated,
}

impl SchemeKind {
    pub const ALL: [SchemeKind; 2] = [SchemeKind::Volterra, SchemeKind::Integrated];

    pub fn as_str(self) -> &'static str {
        match self {
            SchemeKind::Volterra => "volterra",
            SchemeKind::Integrated => "integrated",
        }
    }
}

impl std::fmt::Display for SchemeKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Workers {
    /// Rayon's global pool.
    #[default]
    Auto,
    Fixed(usize),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct McConfig {
    pub num_paths: usize,
    pub master_seed: u64,
    pub scheme: SchemeKind,
    /// Number of time steps `n`.
    pub steps: usize,
    pub workers: Workers,
    pub volterra: VolterraOptions,
    pub integrated: IntegratedOptions,
}

impl McConfig {
    pub fn new(scheme: SchemeKind, steps: usize, num_paths: usize, master_seed: u64) -> Self {
        Self {
            num_paths,
            master_seed,
            scheme,
            steps,
            workers: Workers::Auto,
            volterra: VolterraOptions::default(),
            integrated: IntegratedOptions::default(),
        }
    }

    pub fn with_workers(mut self, workers: Workers) -> Self {
        self.workers = workers;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.num_paths < 2 {
            return Err(Error::invalid("num_paths", "at least two paths are needed for an error estimate"));
        }
        if self.steps == 0 {
            return Err(Error::invalid("n", "must be positive"));
        }
        if self.workers == Workers::Fixed(0) {
            return Err(Error::invalid("workers", "must be positive"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct McEstimate {
    pub mean: f64,
    pub stat_error: f64,
    pub ci_low: f64,
    pub ci_high: f64,
    pub num_paths: usize,
    pub wall_time_seconds: f64,
    pub fault_count: usize,
}

impl McEstimate {
    /// Statistics of a sample with the population (1/M) variance.
    ///
    /// Both sums are taken over `f_m - f_1` so that a constant sample has
    /// exactly zero spread.
    pub fn from_samples(samples: &[f64], wall_time_seconds: f64) -> Result<Self> {
        let m = samples.len();
        if m < 2 {
            return Err(Error::invalid("num_paths", "at least two samples are needed"));
        }
        let shift = samples[0];
        let centred: Vec<f64> = samples.iter().map(|f| f - shift).collect();
        let squares: Vec<f64> = centred.iter().map(|d| d * d).collect();
        let mf = m as f64;
        let first = pairwise_sum(&centred) / mf;
        let second = pairwise_sum(&squares) / mf;
        let mean = shift + first;
        let variance = (second - first * first).max(0.0);
        let stat_error = (variance / mf).sqrt();
        Ok(Self {
            mean,
            stat_error,
            ci_low: mean - 2.0 * stat_error,
            ci_high: mean + 2.0 * stat_error,
            num_paths: m,
            wall_time_seconds,
            fault_count: 0,
        })
    }

    /// Compare every field except the wall-clock time bit for bit.
    pub fn same_statistics(&self, other: &Self) -> bool {
        self.mean.to_bits() == other.mean.to_bits()
            && self.stat_error.to_bits() == other.stat_error.to_bits()
            && self.ci_low.to_bits() == other.ci_low.to_bits()
            && self.ci_high.to_bits() == other.ci_high.to_bits()
            && self.num_paths == other.num_paths
            && self.fault_count == other.fault_count
    }
}

/// Pairwise (tree) summation in slice order.
pub fn pairwise_sum(xs: &[f64]) -> f64 {
    if xs.len() <= 16 {
        return xs.iter().sum();
    }
    let mid = xs.len() / 2;
    pairwise_sum(&xs[..mid]) + pairwise_sum(&xs[mid..])
}

/// Produces the increment stream of a path from `(seed, path index, grid)`.
pub type StreamSource = dyn Fn(u64, u64, &TimeGrid) -> IncrementStream + Sync;

/// The default source: [`IncrementStream::sample`].
pub fn keyed_streams(seed: u64, path_index: u64, grid: &TimeGrid) -> IncrementStream {
    IncrementStream::sample(seed, path_index, grid)
}

/// Run `f` on the stream of every path and return the results in path order.
///
/// Path faults are counted; if any occur the whole run fails with
/// [`Error::FaultedRun`].
pub fn run_paths<T, F>(
    grid: &TimeGrid,
    num_paths: usize,
    seed: u64,
    workers: Workers,
    source: &StreamSource,
    f: F,
) -> Result<Vec<T>>
where
    T: Send,
    F: Fn(&IncrementStream) -> Result<T> + Sync,
{
    let job = || {
        (0..num_paths as u64)
            .into_par_iter()
            .map(|j| f(&source(seed, j, grid)))
            .collect::<Vec<Result<T>>>()
    };
    let results = match workers {
        Workers::Auto => job(),
        Workers::Fixed(k) => rayon::ThreadPoolBuilder::new()
            .num_threads(k.max(1))
            .build()
            .map_err(|e| Error::invalid("workers", e.to_string()))?
            .install(job),
    };
    let mut out = Vec::with_capacity(num_paths);
    let mut faults = Vec::new();
    for r in results {
        match r {
            Ok(v) => out.push(v),
            Err(e @ Error::PathFault { .. }) => faults.push(e),
            Err(e) => return Err(e),
        }
    }
    if let Some(first) = faults.first() {
        return Err(Error::FaultedRun {
            count: faults.len(),
            num_paths,
            first: Box::new(first.clone()),
        });
    }
    Ok(out)
}

/// A simulated path of either scheme.
#[derive(Debug, Clone)]
pub enum SchemePath {
    Volterra(VPath),
    Integrated(XPath),
}

impl SchemePath {
    pub fn s(&self) -> &[f64] {
        match self {
            SchemePath::Volterra(p) => &p.s,
            SchemePath::Integrated(p) => &p.s,
        }
    }

    /// Integrated variance at the nodes.
    pub fn x(&self) -> &[f64] {
        match self {
            SchemePath::Volterra(p) => &p.x,
            SchemePath::Integrated(p) => &p.x,
        }
    }
}

/// Either scheme, prepared once and shared by all paths of a run.
#[derive(Debug, Clone)]
pub enum Simulator<'a> {
    Volterra(VolterraScheme<'a>),
    Integrated(IntegratedScheme<'a>),
}

impl<'a> Simulator<'a> {
    pub fn new(
        params: &ModelParams,
        kernel: &Kernel,
        weights: &'a KernelWeights,
        scheme: SchemeKind,
        volterra: VolterraOptions,
        integrated: IntegratedOptions,
    ) -> Result<Self> {
        Ok(match scheme {
            SchemeKind::Volterra => Simulator::Volterra(VolterraScheme::new(*params, weights, volterra)?),
            SchemeKind::Integrated => {
                Simulator::Integrated(IntegratedScheme::new(*params, kernel, weights, integrated)?)
            }
        })
    }

    pub fn grid(&self) -> &TimeGrid {
        match self {
            Simulator::Volterra(s) => s.grid(),
            Simulator::Integrated(s) => s.grid(),
        }
    }

    pub fn simulate(&self, stream: &IncrementStream) -> Result<SchemePath> {
        Ok(match self {
            Simulator::Volterra(s) => SchemePath::Volterra(s.simulate(stream)?),
            Simulator::Integrated(s) => SchemePath::Integrated(s.simulate(stream)?),
        })
    }
}

/// Monte-Carlo price of `payoff`.
pub fn price(params: &ModelParams, kernel: &Kernel, payoff: &Payoff, cfg: &McConfig) -> Result<McEstimate> {
    price_with_source(params, kernel, payoff, cfg, &keyed_streams)
}

pub fn price_with_source(
    params: &ModelParams,
    kernel: &Kernel,
    payoff: &Payoff,
    cfg: &McConfig,
    source: &StreamSource,
) -> Result<McEstimate> {
    cfg.validate()?;
    params.validate()?;
    let grid = TimeGrid::uniform(cfg.steps, params.horizon)?;
    let weights = KernelWeights::precompute(kernel, &grid)?;
    let sim = Simulator::new(params, kernel, &weights, cfg.scheme, cfg.volterra, cfg.integrated)?;
    let start = Instant::now();
    let samples = run_paths(&grid, cfg.num_paths, cfg.master_seed, cfg.workers, source, |stream| {
        let path = sim.simulate(stream)?;
        Ok(payoff.evaluate(path.s(), path.x(), &grid))
    })?;
    let elapsed = start.elapsed().as_secs_f64();
    McEstimate::from_samples(&samples, elapsed)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TableRow {
    pub scheme: SchemeKind,
    pub n: usize,
    pub mean: f64,
    pub stat_error: f64,
    pub ci_low: f64,
    pub ci_high: f64,
    pub wall_time_seconds: f64,
}

impl TableRow {
    pub fn new(scheme: SchemeKind, n: usize, e: &McEstimate) -> Self {
        Self {
            scheme,
            n,
            mean: e.mean,
            stat_error: e.stat_error,
            ci_low: e.ci_low,
            ci_high: e.ci_high,
            wall_time_seconds: e.wall_time_seconds,
        }
    }
}

/// One row per `(scheme, n)`, the Volterra block first.
pub fn convergence_table(
    params: &ModelParams,
    kernel: &Kernel,
    payoff: &Payoff,
    n_list: &[usize],
    num_paths: usize,
    seed: u64,
    workers: Workers,
) -> Result<Vec<TableRow>> {
    let base = McConfig::new(SchemeKind::Volterra, 1, num_paths, seed).with_workers(workers);
    convergence_table_from(params, kernel, payoff, n_list, &base)
}

/// [`convergence_table`] with paths, seed, workers and scheme options taken
/// from `base`; its scheme and step count are overridden row by row.
pub fn convergence_table_from(
    params: &ModelParams,
    kernel: &Kernel,
    payoff: &Payoff,
    n_list: &[usize],
    base: &McConfig,
) -> Result<Vec<TableRow>> {
    if n_list.is_empty() {
        return Err(Error::invalid("n_list", "needs at least one grid size"));
    }
    let mut rows = Vec::with_capacity(2 * n_list.len());
    for scheme in SchemeKind::ALL {
        for &n in n_list {
            let cfg = McConfig {
                scheme,
                steps: n,
                ..*base
            };
            rows.push(TableRow::new(scheme, n, &price(params, kernel, payoff, &cfg)?));
        }
    }
    Ok(rows)
}
