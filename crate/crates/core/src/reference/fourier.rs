//! Call prices from characteristic functions.
//!
//! For a log-price `Y = log S_T` with characteristic function `φ` and damping
//! `α > 0`, the damped call transform gives, with `k = log K`,
//!
//! ```text
//! C(K) = e^{-αk}/π ∫_0^∞ Re[ e^{-ivk} φ(v - (α+1)i) / (α² + α - v² + i(2α+1)v) ] dv
//! ```
//!
//! For a nonnegative level `X` (the integrated variance), writing
//! `φ(v - ia) = E[e^{(a+iv)X}]`,
//!
//! ```text
//! E[(X - K)_+] = 1/π ∫_0^∞ Re[ φ(v - ia) e^{-(a+iv)K} / (a+iv)² ] dv
//! ```
//!
//! The half-line is cut into the panels `[0,1], [1,2], [2,4], ...`, each
//! integrated adaptively with Gauss-Kronrod. Integration stops after the
//! first panel whose `∫|integrand|` falls under the tail threshold.

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, Normal};

use crate::error::{Error, Result};
use crate::quad::{gk15_combine, gk15_nodes, Panel};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TransformDomain {
    /// The characteristic function is that of `log S_T`; strikes are levels of `S_T`.
    LogPrice,
    /// The characteristic function is that of a nonnegative variable itself.
    Level,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct InversionSettings {
    pub damping: f64,
    pub tail_threshold: f64,
    /// Absolute error target for each frequency panel.
    pub panel_tolerance: f64,
    /// Frequencies beyond this are never reached; running into it is an error.
    pub max_frequency: f64,
}

impl Default for InversionSettings {
    fn default() -> Self {
        Self {
            damping: 1.5,
            tail_threshold: 1e-10,
            panel_tolerance: 1e-10,
            max_frequency: 1_048_576.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct InversionResult {
    pub value: f64,
    /// Summed Gauss-Kronrod error estimates.
    pub error_estimate: f64,
    /// Right end of the last panel.
    pub cutoff: f64,
    pub evaluations: usize,
}

const MAX_DEPTH: u32 = 30;

struct Acc {
    value: f64,
    error: f64,
    abs_value: f64,
    evaluations: usize,
}

/// One Kronrod panel with the 15 nodes evaluated in parallel.
fn panel<F>(f: &F, a: f64, b: f64) -> Result<Panel>
where
    F: Fn(f64) -> Result<f64> + Sync,
{
    let nodes = gk15_nodes(a, b);
    let values: Vec<f64> = nodes.par_iter().map(|&v| f(v)).collect::<Result<_>>()?;
    let values: [f64; 15] = values.try_into().expect("fifteen nodes");
    if values.iter().any(|v| !v.is_finite()) {
        return Err(Error::Inversion(format!("non-finite integrand on [{a}, {b}]")));
    }
    Ok(gk15_combine(a, b, &values))
}

fn adaptive<F>(f: &F, p: Panel, tol: f64, depth: u32, acc: &mut Acc) -> Result<()>
where
    F: Fn(f64) -> Result<f64> + Sync,
{
    if p.error <= tol {
        acc.value += p.value;
        acc.error += p.error;
        acc.abs_value += p.abs_value;
        return Ok(());
    }
    if depth >= MAX_DEPTH {
        return Err(Error::Inversion(format!(
            "panel [{}, {}] still has error {:e} after {MAX_DEPTH} bisections",
            p.a, p.b, p.error
        )));
    }
    let mid = 0.5 * (p.a + p.b);
    let left = panel(f, p.a, mid)?;
    let right = panel(f, mid, p.b)?;
    acc.evaluations += 30;
    adaptive(f, left, 0.5 * tol, depth + 1, acc)?;
    adaptive(f, right, 0.5 * tol, depth + 1, acc)
}

/// Integrate `f` over `[0, ∞)` on dyadic panels until the tail is negligible.
pub(crate) fn integrate_half_line<F>(f: &F, settings: &InversionSettings) -> Result<InversionResult>
where
    F: Fn(f64) -> Result<f64> + Sync,
{
    let mut total = 0.0;
    let mut error = 0.0;
    let mut evaluations = 0;
    let (mut lo, mut hi) = (0.0, 1.0);
    loop {
        if hi > settings.max_frequency {
            return Err(Error::Inversion(format!(
                "integrand still above {:e} at frequency {lo}",
                settings.tail_threshold
            )));
        }
        let mut acc = Acc {
            value: 0.0,
            error: 0.0,
            abs_value: 0.0,
            evaluations: 15,
        };
        let first = panel(f, lo, hi)?;
        adaptive(f, first, settings.panel_tolerance, 0, &mut acc)?;
        total += acc.value;
        error += acc.error;
        evaluations += acc.evaluations;
        if acc.abs_value < settings.tail_threshold {
            return Ok(InversionResult {
                value: total,
                error_estimate: error,
                cutoff: hi,
                evaluations,
            });
        }
        lo = hi;
        hi *= 2.0;
    }
}

/// Invert a characteristic function (extended to complex arguments) into
/// the price of a call struck at `strike`.
pub fn invert_call(
    char_fn: &(dyn Fn(Complex64) -> Result<Complex64> + Sync),
    strike: f64,
    settings: &InversionSettings,
    domain: TransformDomain,
) -> Result<InversionResult> {
    let alpha = settings.damping;
    if !(alpha > 0.0 && alpha.is_finite()) {
        return Err(Error::invalid("damping", format!("must be positive, got {alpha}")));
    }
    let i = Complex64::i();
    match domain {
        TransformDomain::LogPrice => {
            if !(strike > 0.0) {
                return Err(Error::invalid("strike", "must be positive"));
            }
            let k = strike.ln();
            let scale = (-alpha * k).exp() / std::f64::consts::PI;
            let integrand = |v: f64| -> Result<f64> {
                let phi = char_fn(Complex64::new(v, -(alpha + 1.0)))?;
                let denom = Complex64::new(alpha * alpha + alpha - v * v, (2.0 * alpha + 1.0) * v);
                Ok(scale * ((-i * v * k).exp() * phi / denom).re)
            };
            integrate_half_line(&integrand, settings)
        }
        TransformDomain::Level => {
            if !(strike >= 0.0) {
                return Err(Error::invalid("strike", "must be nonnegative"));
            }
            let integrand = |v: f64| -> Result<f64> {
                let w = Complex64::new(alpha, v);
                let phi = char_fn(Complex64::new(v, -alpha))?;
                Ok((phi * (-w * strike).exp() / (w * w)).re / std::f64::consts::PI)
            };
            integrate_half_line(&integrand, settings)
        }
    }
}

/// Call price from `char_fn` with default panel settings and the given damping.
pub fn fourier_call_price(
    char_fn: &(dyn Fn(Complex64) -> Result<Complex64> + Sync),
    strike: f64,
    damping: f64,
    domain: TransformDomain,
) -> Result<f64> {
    let settings = InversionSettings {
        damping,
        ..InversionSettings::default()
    };
    invert_call(char_fn, strike, &settings, domain).map(|r| r.value)
}

/// Black-Scholes characteristic function of `log S_T` with total variance `σ²T`.
pub fn black_scholes_char_fn(s0: f64, total_variance: f64) -> impl Fn(Complex64) -> Result<Complex64> + Sync {
    let i = Complex64::i();
    move |u: Complex64| Ok((i * u * (s0.ln() - 0.5 * total_variance) - 0.5 * u * u * total_variance).exp())
}

/// Undiscounted Black-Scholes call.
pub fn black_scholes_call(s0: f64, strike: f64, total_variance: f64) -> f64 {
    let sd = total_variance.sqrt();
    let d1 = ((s0 / strike).ln() + 0.5 * total_variance) / sd;
    let n = Normal::standard();
    s0 * n.cdf(d1) - strike * n.cdf(d1 - sd)
}
