//! Documents emitted by the commands.
//!
//! Each report serializes to JSON as a whole and to CSV as a list of flat
//! rows. Numbers go through the shortest round-trip representation in both
//! formats, so the two carry identical values.

use std::io::Write;

use rough_heston::diagnostics::{HolderReport, InvariantReport, MartingaleCheck};
use rough_heston::kernels::RegularitySweep;
use rough_heston::monte_carlo::TableRow;
use rough_heston::reference::ReferenceReport;
use rough_heston::{McEstimate, SchemeKind};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::error::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum OutputFormat {
    Csv,
    Json,
}

pub trait Report: Serialize + DeserializeOwned {
    type Row: Serialize;

    fn rows(&self) -> Vec<Self::Row>;
}

pub fn emit<R: Report>(report: &R, format: OutputFormat, out: &mut dyn Write) -> Result<(), CliError> {
    match format {
        OutputFormat::Json => {
            serde_json::to_writer_pretty(&mut *out, report)?;
            writeln!(out)?;
        }
        OutputFormat::Csv => {
            let mut w = csv::Writer::from_writer(out);
            for row in report.rows() {
                w.serialize(row)?;
            }
            w.flush()?;
        }
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PriceReport {
    pub payoff: String,
    pub scheme: SchemeKind,
    pub steps: usize,
    pub seed: u64,
    pub mean: f64,
    pub stat_error: f64,
    pub ci_low: f64,
    pub ci_high: f64,
    pub num_paths: usize,
    pub wall_time_seconds: f64,
    pub fault_count: usize,
}

impl PriceReport {
    pub fn new(payoff: &str, scheme: SchemeKind, steps: usize, seed: u64, e: &McEstimate) -> Self {
        Self {
            payoff: payoff.to_string(),
            scheme,
            steps,
            seed,
            mean: e.mean,
            stat_error: e.stat_error,
            ci_low: e.ci_low,
            ci_high: e.ci_high,
            num_paths: e.num_paths,
            wall_time_seconds: e.wall_time_seconds,
            fault_count: e.fault_count,
        }
    }
}

impl Report for PriceReport {
    type Row = PriceReport;

    fn rows(&self) -> Vec<PriceReport> {
        vec![self.clone()]
    }
}

/// Both scheme blocks of a convergence table, optionally headed by the
/// deterministic reference.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TableReport {
    pub payoff: String,
    pub num_paths: usize,
    pub seed: u64,
    pub reference: Option<ReferenceReport>,
    pub rows: Vec<TableRow>,
}

/// CSV row; the reference row leaves the statistical columns empty.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TableCsvRow {
    pub scheme: String,
    pub n: usize,
    pub mean: f64,
    pub stat_error: Option<f64>,
    pub ci_low: Option<f64>,
    pub ci_high: Option<f64>,
    pub wall_time_seconds: f64,
}

impl Report for TableReport {
    type Row = TableCsvRow;

    fn rows(&self) -> Vec<TableCsvRow> {
        let reference = self.reference.iter().map(|r| TableCsvRow {
            scheme: "reference".into(),
            n: r.resolution,
            mean: r.value,
            stat_error: None,
            ci_low: None,
            ci_high: None,
            wall_time_seconds: r.wall_time_seconds,
        });
        let mc = self.rows.iter().map(|r| TableCsvRow {
            scheme: r.scheme.as_str().into(),
            n: r.n,
            mean: r.mean,
            stat_error: Some(r.stat_error),
            ci_low: Some(r.ci_low),
            ci_high: Some(r.ci_high),
            wall_time_seconds: r.wall_time_seconds,
        });
        reference.chain(mc).collect()
    }
}

impl Report for ReferenceReport {
    type Row = ReferenceReport;

    fn rows(&self) -> Vec<ReferenceReport> {
        vec![self.clone()]
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "check", rename_all = "snake_case")]
pub enum DiagnosticReport {
    Holder(HolderReport),
    Invariants(InvariantReport),
    Martingale(MartingaleCheck),
}

/// Union of the diagnostic columns; unused ones stay empty.
#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct DiagnosticRow {
    pub check: &'static str,
    pub scheme: Option<SchemeKind>,
    pub steps: usize,
    pub num_paths: usize,
    pub s: Option<f64>,
    pub t: Option<f64>,
    pub moment: Option<f64>,
    pub fitted_slope: Option<f64>,
    pub target: Option<f64>,
    pub xbar_violations: Option<usize>,
    pub negative_sqrt_arguments: Option<usize>,
    pub negative_v_fraction: Option<f64>,
    pub mean: Option<f64>,
    pub mean_perp: Option<f64>,
    pub z: Option<f64>,
    pub z_perp: Option<f64>,
    pub passed: Option<bool>,
}

impl Report for DiagnosticReport {
    type Row = DiagnosticRow;

    fn rows(&self) -> Vec<DiagnosticRow> {
        match self {
            DiagnosticReport::Holder(h) => h
                .lags
                .iter()
                .zip(&h.empirical_moments)
                .map(|(&(s, t), &moment)| DiagnosticRow {
                    check: "holder",
                    scheme: Some(h.scheme),
                    steps: h.steps,
                    num_paths: h.num_paths,
                    s: Some(s),
                    t: Some(t),
                    moment: Some(moment),
                    fitted_slope: Some(h.fitted_slope),
                    target: Some(h.target),
                    ..DiagnosticRow::default()
                })
                .collect(),
            DiagnosticReport::Invariants(r) => vec![DiagnosticRow {
                check: "invariants",
                scheme: Some(r.scheme),
                steps: r.steps,
                num_paths: r.num_paths,
                xbar_violations: r.xbar_violations,
                negative_sqrt_arguments: Some(r.negative_sqrt_arguments),
                negative_v_fraction: r.negative_v_fraction,
                passed: Some(r.clean()),
                ..DiagnosticRow::default()
            }],
            DiagnosticReport::Martingale(m) => vec![DiagnosticRow {
                check: "martingale",
                scheme: Some(SchemeKind::Integrated),
                steps: m.steps,
                num_paths: m.num_paths,
                mean: Some(m.m.mean),
                mean_perp: Some(m.m_perp.mean),
                z: Some(m.z),
                z_perp: Some(m.z_perp),
                passed: Some(m.passed),
                ..DiagnosticRow::default()
            }],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KernelReport {
    pub hurst: f64,
    pub sweep: RegularitySweep,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct KernelRow {
    pub steps: usize,
    pub hurst: f64,
    pub a2_ratio: f64,
    pub a3_ratio: f64,
    pub lattice_size: usize,
    pub bounded: bool,
}

impl Report for KernelReport {
    type Row = KernelRow;

    fn rows(&self) -> Vec<KernelRow> {
        self.sweep
            .reports
            .iter()
            .map(|r| KernelRow {
                steps: r.steps,
                hurst: r.hurst,
                a2_ratio: r.a2_ratio,
                a3_ratio: r.a3_ratio,
                lattice_size: r.lattice_size,
                bounded: self.sweep.bounded,
            })
            .collect()
    }
}
