//! Path functionals for the priced instruments.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::TimeGrid;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum Payoff {
    /// `(S_T - K)_+`
    EuropeanCall { strike: f64 },
    /// `(A - K)_+` with `A = (T/n) Σ_{k=1}^n S_k`.
    AsianCall { strike: f64 },
    /// `(max_{0<=k<=n} S_k - K)_+`
    LookbackCall { strike: f64 },
    /// `X_T`
    VarianceSwap,
    /// `(X_T - K)_+`; the strike is the initial variance `V0`.
    VarianceCall { strike: f64 },
}

impl Payoff {
    pub fn european_call(strike: f64) -> Result<Self> {
        check_strike(strike)?;
        Ok(Payoff::EuropeanCall { strike })
    }

    pub fn asian_call(strike: f64) -> Result<Self> {
        check_strike(strike)?;
        Ok(Payoff::AsianCall { strike })
    }

    pub fn lookback_call(strike: f64) -> Result<Self> {
        check_strike(strike)?;
        Ok(Payoff::LookbackCall { strike })
    }

    /// Call on the integrated variance struck at `v0`.
    pub fn variance_call(v0: f64) -> Result<Self> {
        check_strike(v0)?;
        Ok(Payoff::VarianceCall { strike: v0 })
    }

    pub fn name(&self) -> &'static str {
        match self {
            Payoff::EuropeanCall { .. } => "european_call",
            Payoff::AsianCall { .. } => "asian_call",
            Payoff::LookbackCall { .. } => "lookback_call",
            Payoff::VarianceSwap => "variance_swap",
            Payoff::VarianceCall { .. } => "variance_call",
        }
    }

    /// Evaluate on node values `s[0..=n]`, `x[0..=n]`.
    pub fn evaluate(&self, s: &[f64], x: &[f64], grid: &TimeGrid) -> f64 {
        let n = grid.steps();
        debug_assert_eq!(s.len(), n + 1);
        debug_assert_eq!(x.len(), n + 1);
        match *self {
            Payoff::EuropeanCall { strike } => (s[n] - strike).max(0.0),
            Payoff::AsianCall { strike } => {
                let average = grid.horizon() / n as f64 * s[1..].iter().sum::<f64>();
                (average - strike).max(0.0)
            }
            Payoff::LookbackCall { strike } => {
                (s.iter().copied().fold(f64::NEG_INFINITY, f64::max) - strike).max(0.0)
            }
            Payoff::VarianceSwap => x[n],
            Payoff::VarianceCall { strike } => (x[n] - strike).max(0.0),
        }
    }
}

fn check_strike(strike: f64) -> Result<()> {
    if strike >= 0.0 && strike.is_finite() {
        Ok(())
    } else {
        Err(Error::invalid("strike", format!("must be nonnegative, got {strike}")))
    }
}
