use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Rough Heston parameters: spot `S0`, initial variance `V0`, mean-reversion
/// level `θ`, speed `λ`, vol-of-vol `ν`, correlation `ρ` and horizon `T`.
///
/// `θ`, `λ`, `ν` and `V0` may be zero so that degenerate, deterministic
/// configurations can be simulated.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ModelParams {
    pub s0: f64,
    pub v0: f64,
    pub theta: f64,
    pub lambda: f64,
    pub nu: f64,
    pub rho: f64,
    pub horizon: f64,
}

impl ModelParams {
    pub fn new(
        s0: f64,
        v0: f64,
        theta: f64,
        lambda: f64,
        nu: f64,
        rho: f64,
        horizon: f64,
    ) -> Result<Self> {
        let p = Self {
            s0,
            v0,
            theta,
            lambda,
            nu,
            rho,
            horizon,
        };
        p.validate()?;
        Ok(p)
    }

    /// The benchmark set `λ = ν = 0.3`, `V0 = θ = 0.02`, `ρ = -0.7`, `S0 = 1`, `T = 1`.
    pub fn benchmark() -> Self {
        Self {
            s0: 1.0,
            v0: 0.02,
            theta: 0.02,
            lambda: 0.3,
            nu: 0.3,
            rho: -0.7,
            horizon: 1.0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let positive = |name: &'static str, v: f64| {
            if v > 0.0 && v.is_finite() {
                Ok(())
            } else {
                Err(Error::invalid(name, format!("must be positive, got {v}")))
            }
        };
        let nonnegative = |name: &'static str, v: f64| {
            if v >= 0.0 && v.is_finite() {
                Ok(())
            } else {
                Err(Error::invalid(name, format!("must be nonnegative, got {v}")))
            }
        };
        positive("s0", self.s0)?;
        positive("horizon", self.horizon)?;
        nonnegative("v0", self.v0)?;
        nonnegative("theta", self.theta)?;
        nonnegative("lambda", self.lambda)?;
        nonnegative("nu", self.nu)?;
        if !(-1.0..=1.0).contains(&self.rho) {
            return Err(Error::invalid("rho", format!("must lie in [-1, 1], got {}", self.rho)));
        }
        Ok(())
    }

    /// `√(1 - ρ²)`
    pub fn rho_perp(&self) -> f64 {
        (1.0 - self.rho * self.rho).max(0.0).sqrt()
    }
}
