//! Euler scheme for the integrated-variance formulation.
//!
//! ```text
//! X_k  = V0 t_k + ∫_0^{t_k} K(t_k - s) θ s ds
//!        + Σ_{i<k} K(t_k - t_i) (-λ X̄_i + ν M_i) Δt_{i+1}
//! X̄_k  = max(X̄_{k-1}, X_k)
//! M_k  = M_{k-1} + √(X̄_k - X̄_{k-1}) Z_k,   M⊥_k likewise with Z⊥_k
//! Y_k  = Y_0 - ½ X̄_k + ρ M_k + √(1-ρ²) M⊥_k
//! ```
//!
//! The running maximum makes `X̄` non-decreasing, so it is the quadratic
//! variation of the discrete martingales `M` and `M⊥`.

use crate::error::{Error, Result};
use crate::grid::TimeGrid;
use crate::increments::IncrementStream;
use crate::kernels::{Kernel, KernelWeights};
use crate::params::ModelParams;

#[derive(Debug, Clone, PartialEq)]
pub struct XPath {
    pub grid: TimeGrid,
    pub x: Vec<f64>,
    /// Running maximum of `x`.
    pub xbar: Vec<f64>,
    pub m: Vec<f64>,
    pub m_perp: Vec<f64>,
    /// `ΔM_k = √(X̄_k - X̄_{k-1}) Z_k` as added at step `k` (index 0 is unused).
    pub dm: Vec<f64>,
    pub dm_perp: Vec<f64>,
    pub y: Vec<f64>,
    pub s: Vec<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct IntegratedOptions {
    /// Use the closed-form `∫ K(t_k - s) θ s ds`; when false the term is
    /// replaced by `Σ_{i<k} K(t_k - t_i) θ t_i Δt_{i+1}`.
    pub exact_theta_drift: bool,
}

impl Default for IntegratedOptions {
    fn default() -> Self {
        Self {
            exact_theta_drift: true,
        }
    }
}

#[derive(Debug, Clone)]
pub struct IntegratedScheme<'a> {
    params: ModelParams,
    weights: &'a KernelWeights,
    /// Path-independent part of `X_k`.
    drift: Vec<f64>,
}

impl<'a> IntegratedScheme<'a> {
    pub fn new(
        params: ModelParams,
        kernel: &Kernel,
        weights: &'a KernelWeights,
        options: IntegratedOptions,
    ) -> Result<Self> {
        params.validate()?;
        let grid = weights.grid();
        let n = grid.steps();
        let mut drift = Vec::with_capacity(n + 1);
        if options.exact_theta_drift {
            for k in 0..=n {
                let t = grid.node(k);
                drift.push(params.v0 * t + kernel.linear_drift_convolution(params.theta, t)?);
            }
        } else {
            let ramp: Vec<f64> = (0..n)
                .map(|i| params.theta * grid.node(i) * grid.step(i + 1))
                .collect();
            for k in 0..=n {
                drift.push(params.v0 * grid.node(k) + weights.convolve(k, &ramp));
            }
        }
        Ok(Self {
            params,
            weights,
            drift,
        })
    }

    pub fn grid(&self) -> &TimeGrid {
        self.weights.grid()
    }

    /// The deterministic part `V0 t_k + θ`-convolution at every node.
    pub fn drift(&self) -> &[f64] {
        &self.drift
    }

    pub fn simulate(&self, stream: &IncrementStream) -> Result<XPath> {
        let grid = self.weights.grid();
        stream.check_grid(grid)?;
        let p = &self.params;
        let rho_perp = p.rho_perp();
        let n = grid.steps();
        let y0 = p.s0.ln();

        let mut x = vec![0.0; n + 1];
        let mut xbar = vec![0.0; n + 1];
        let mut m = vec![0.0; n + 1];
        let mut m_perp = vec![0.0; n + 1];
        let mut dm = vec![0.0; n + 1];
        let mut dm_perp = vec![0.0; n + 1];
        let mut y = vec![y0; n + 1];
        let mut incr = vec![0.0; n];

        for k in 1..=n {
            let i = k - 1;
            incr[i] = (-p.lambda * xbar[i] + p.nu * m[i]) * grid.step(k);
            x[k] = self.drift[k] + self.weights.convolve(k, &incr);
            if !x[k].is_finite() {
                return Err(Error::PathFault {
                    path: stream.path_index(),
                    step: k,
                    quantity: "integrated variance",
                });
            }
            xbar[k] = xbar[i].max(x[k]);
            let qv = xbar[k] - xbar[i];
            debug_assert!(qv >= 0.0);
            let root = qv.sqrt();
            dm[k] = root * stream.z(k);
            dm_perp[k] = root * stream.z_perp(k);
            m[k] = m[i] + dm[k];
            m_perp[k] = m_perp[i] + dm_perp[k];
            y[k] = y0 - 0.5 * xbar[k] + p.rho * m[k] + rho_perp * m_perp[k];
            if !m[k].is_finite() || !m_perp[k].is_finite() || !y[k].is_finite() {
                return Err(Error::PathFault {
                    path: stream.path_index(),
                    step: k,
                    quantity: "martingale",
                });
            }
        }

        let s: Vec<f64> = y.iter().map(|y| y.exp()).collect();
        if let Some(k) = s.iter().position(|s| !s.is_finite()) {
            return Err(Error::PathFault {
                path: stream.path_index(),
                step: k,
                quantity: "price",
            });
        }
        Ok(XPath {
            grid: grid.clone(),
            x,
            xbar,
            m,
            m_perp,
            dm,
            dm_perp,
            y,
            s,
        })
    }
}

/// Simulate one path with the exact θ-drift.
pub fn simulate_x_path(
    params: &ModelParams,
    weights: &KernelWeights,
    kernel: &Kernel,
    stream: &IncrementStream,
) -> Result<XPath> {
    IntegratedScheme::new(*params, kernel, weights, IntegratedOptions::default())?.simulate(stream)
}

/// Largest relative deviation from `(ΔM_i)² = ΔX̄_i Z_i²` (and the same for
/// `M⊥`) over all steps, using the stored increments.
pub fn quadratic_variation_error(path: &XPath, stream: &IncrementStream) -> f64 {
    let mut worst: f64 = 0.0;
    for k in 1..path.x.len() {
        let qv = path.xbar[k] - path.xbar[k - 1];
        for (dm, z) in [(path.dm[k], stream.z(k)), (path.dm_perp[k], stream.z_perp(k))] {
            let lhs = dm * dm;
            let rhs = qv * z * z;
            let scale = lhs.abs().max(rhs.abs());
            if scale > 0.0 {
                worst = worst.max((lhs - rhs).abs() / scale);
            }
        }
    }
    worst
}

/// Whether the per-step quadratic-variation identity holds to relative `1e-12`.
pub fn quadratic_variation_check(path: &XPath, stream: &IncrementStream) -> bool {
    quadratic_variation_error(path, stream) <= 1e-12
}
