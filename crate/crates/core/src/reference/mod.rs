//! Deterministic reference prices.
//!
//! All solves share one discretization: on a uniform grid `t_k = k h` the
//! convolution `∫_0^{t_k} K(t_k - s) f(s) ds` is replaced by the integral of
//! `K` against the piecewise-linear interpolant of `f`,
//!
//! ```text
//! Σ_{j<k} A_{k-1-j} f_j + Σ_{1<=j<=k} B_{k-j} f_j
//! A_l = ∫_{lh}^{(l+1)h} K(r) (r - lh)/h dr
//! B_l = ∫_{lh}^{(l+1)h} K(r) ((l+1)h - r)/h dr
//! ```
//!
//! The moments are exact for the power law, so the singularity of `K` at the
//! origin costs no accuracy. The `B_0 f_k` term makes every step implicit.
//!
//! * [`volterra`] solves the linear equation for `E[X_t]`.
//! * [`riccati`] solves the Riccati-Volterra equation behind the joint
//!   transform of `(log S_T, X_T)`.
//! * [`fourier`] turns a characteristic function into a call price.

pub mod fourier;
pub mod riccati;
pub mod volterra;

use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::kernels::Kernel;
use crate::params::ModelParams;
use crate::payoffs::Payoff;

pub use fourier::{
    black_scholes_call, black_scholes_char_fn, fourier_call_price, invert_call, InversionResult,
    InversionSettings, TransformDomain,
};
pub use riccati::{char_fn_log_s, char_fn_x, CharFnSolution, RiccatiSolver};
pub use volterra::{
    expected_integrated_variance, solve_expected_integrated_variance, VolterraOdeSolution,
};

/// Product-trapezoid lag moments `(A_l, B_l)` for `l = 0..m`.
#[derive(Debug, Clone)]
pub(crate) struct ProductWeights {
    pub h: f64,
    pub a: Vec<f64>,
    pub b: Vec<f64>,
}

impl ProductWeights {
    pub(crate) fn new(kernel: &Kernel, horizon: f64, m: usize) -> Result<Self> {
        if m == 0 {
            return Err(Error::invalid("resolution", "must be positive"));
        }
        if !(horizon > 0.0) {
            return Err(Error::invalid("horizon", format!("must be positive, got {horizon}")));
        }
        let h = horizon / m as f64;
        let mut a = Vec::with_capacity(m);
        let mut b = Vec::with_capacity(m);
        for l in 0..m {
            let (x, y) = kernel.linear_moments(l as f64 * h, (l + 1) as f64 * h)?;
            a.push(x);
            b.push(y);
        }
        Ok(Self { h, a, b })
    }

    pub(crate) fn steps(&self) -> usize {
        self.a.len()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Instrument {
    EuropeanCall,
    VarianceSwap,
    VarianceCall,
}

impl Instrument {
    pub fn as_str(self) -> &'static str {
        match self {
            Instrument::EuropeanCall => "european_call",
            Instrument::VarianceSwap => "variance_swap",
            Instrument::VarianceCall => "variance_call",
        }
    }
}

impl std::str::FromStr for Instrument {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "european_call" => Ok(Instrument::EuropeanCall),
            "variance_swap" => Ok(Instrument::VarianceSwap),
            "variance_call" => Ok(Instrument::VarianceCall),
            other => Err(Error::invalid(
                "instrument",
                format!("expected european_call, variance_swap or variance_call, got `{other}`"),
            )),
        }
    }
}

/// Knobs of the reference pricers.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ReferenceSettings {
    /// Time steps `m` of the Volterra solves; the check run uses `2m`.
    pub resolution: usize,
    /// Damping `α` of the call transform.
    pub damping: f64,
    /// Frequency panels stop once `∫|integrand|` over a panel is below this.
    pub tail_threshold: f64,
}

impl Default for ReferenceSettings {
    fn default() -> Self {
        Self {
            resolution: 400,
            damping: 1.5,
            tail_threshold: 1e-10,
        }
    }
}

/// A reference value with its grid-doubling diagnostics.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReferenceReport {
    pub instrument: Instrument,
    /// Value at the finer resolution.
    pub value: f64,
    pub coarse_value: f64,
    pub resolution: usize,
    pub coarse_resolution: usize,
    /// `|value - coarse_value|`
    pub refinement_difference: f64,
    /// Quadrature error estimate of the inversion integral (0 for the swap).
    pub quadrature_error: f64,
    /// Last frequency integrated by the inversion (none for the swap).
    pub frequency_cutoff: Option<f64>,
    pub wall_time_seconds: f64,
}

fn inversion_settings(settings: &ReferenceSettings) -> InversionSettings {
    InversionSettings {
        damping: settings.damping,
        tail_threshold: settings.tail_threshold,
        ..InversionSettings::default()
    }
}

fn check_resolution(settings: &ReferenceSettings, min: usize) -> Result<()> {
    if settings.resolution < min {
        return Err(Error::invalid(
            "resolution",
            format!("must be at least {min}, got {}", settings.resolution),
        ));
    }
    Ok(())
}

fn fourier_report(
    instrument: Instrument,
    settings: &ReferenceSettings,
    start: Instant,
    price_at: impl Fn(usize) -> Result<InversionResult>,
) -> Result<ReferenceReport> {
    let coarse = price_at(settings.resolution)?;
    let fine = price_at(2 * settings.resolution)?;
    Ok(ReferenceReport {
        instrument,
        value: fine.value,
        coarse_value: coarse.value,
        resolution: 2 * settings.resolution,
        coarse_resolution: settings.resolution,
        refinement_difference: (fine.value - coarse.value).abs(),
        quadrature_error: fine.error_estimate,
        frequency_cutoff: Some(fine.cutoff),
        wall_time_seconds: start.elapsed().as_secs_f64(),
    })
}

/// Call on `S_T` by Fourier inversion of the log-price characteristic function.
pub fn european_call(
    params: &ModelParams,
    kernel: &Kernel,
    strike: f64,
    settings: &ReferenceSettings,
) -> Result<ReferenceReport> {
    check_resolution(settings, riccati::MIN_RESOLUTION)?;
    if !(strike > 0.0) {
        return Err(Error::invalid("strike", "a log-price inversion needs a positive strike"));
    }
    let start = Instant::now();
    let inv = inversion_settings(settings);
    fourier_report(Instrument::EuropeanCall, settings, start, |m| {
        let solver = RiccatiSolver::new(params, kernel, m)?;
        invert_call(
            &|u| solver.char_fn_log_s(u).map(|c| c.phi),
            strike,
            &inv,
            TransformDomain::LogPrice,
        )
    })
}

/// `E[X_T]` from the linear Volterra equation.
pub fn variance_swap(
    params: &ModelParams,
    kernel: &Kernel,
    settings: &ReferenceSettings,
) -> Result<ReferenceReport> {
    check_resolution(settings, volterra::MIN_RESOLUTION)?;
    let start = Instant::now();
    let (fine, coarse) = volterra::converged_pair(params, kernel, params.horizon, settings.resolution)?;
    Ok(ReferenceReport {
        instrument: Instrument::VarianceSwap,
        value: fine.terminal(),
        coarse_value: coarse.terminal(),
        resolution: fine.grid.steps(),
        coarse_resolution: coarse.grid.steps(),
        refinement_difference: (fine.terminal() - coarse.terminal()).abs(),
        quadrature_error: 0.0,
        frequency_cutoff: None,
        wall_time_seconds: start.elapsed().as_secs_f64(),
    })
}

/// Call on `X_T` by Fourier inversion of the characteristic function of `X_T`.
pub fn variance_call(
    params: &ModelParams,
    kernel: &Kernel,
    strike: f64,
    settings: &ReferenceSettings,
) -> Result<ReferenceReport> {
    check_resolution(settings, riccati::MIN_RESOLUTION)?;
    let start = Instant::now();
    let inv = inversion_settings(settings);
    fourier_report(Instrument::VarianceCall, settings, start, |m| {
        let solver = RiccatiSolver::new(params, kernel, m)?;
        invert_call(
            &|u| solver.char_fn_x(u).map(|c| c.phi),
            strike,
            &inv,
            TransformDomain::Level,
        )
    })
}

/// The reference for `payoff`, or `None` when no deterministic pricer exists.
pub fn reference_for(
    params: &ModelParams,
    kernel: &Kernel,
    payoff: &Payoff,
    settings: &ReferenceSettings,
) -> Result<Option<ReferenceReport>> {
    match *payoff {
        Payoff::EuropeanCall { strike } => european_call(params, kernel, strike, settings).map(Some),
        Payoff::VarianceSwap => variance_swap(params, kernel, settings).map(Some),
        Payoff::VarianceCall { strike } => variance_call(params, kernel, strike, settings).map(Some),
        Payoff::AsianCall { .. } | Payoff::LookbackCall { .. } => Ok(None),
    }
}
