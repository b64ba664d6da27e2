//! Euler scheme for the stochastic Volterra formulation.
//!
//! With `(x)_+ = max(x, 0)` and Brownian increments `ΔW_{i+1}`, `ΔW⊥_{i+1}`:
//!
//! ```text
//! V_k = V0 + Σ_{i<k} K(t_k - t_i) [ (θ - λ (V_i)_+) Δt_{i+1} + ν √(V_i)_+ ΔW_{i+1} ]
//! Y_k = Y_{k-1} - ½ (V_{k-1})_+ Δt_k + √(V_{k-1})_+ (ρ ΔW_k + √(1-ρ²) ΔW⊥_k)
//! S_k = exp(Y_k)
//! ```
//!
//! `V` may go negative; only its positive part enters the drift and the
//! square roots, and the raw values are kept in the path.

use crate::error::{Error, Result};
use crate::grid::TimeGrid;
use crate::increments::IncrementStream;
use crate::kernels::KernelWeights;
use crate::params::ModelParams;

#[derive(Debug, Clone, PartialEq)]
pub struct VPath {
    pub grid: TimeGrid,
    /// Log-price `Y_k`.
    pub y: Vec<f64>,
    /// Raw variance `V_k`, possibly negative.
    pub v: Vec<f64>,
    /// `S_k = exp(Y_k)`.
    pub s: Vec<f64>,
    /// Integrated variance by left-endpoint summation of `v`.
    pub x: Vec<f64>,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct VolterraOptions {
    /// Sum `(V)_+` instead of the raw `V` into the integrated variance.
    pub clip_variance_in_x: bool,
}

/// The scheme bound to one parameter set and weight table; reused across paths.
#[derive(Debug, Clone)]
pub struct VolterraScheme<'a> {
    params: ModelParams,
    weights: &'a KernelWeights,
    options: VolterraOptions,
}

impl<'a> VolterraScheme<'a> {
    pub fn new(params: ModelParams, weights: &'a KernelWeights, options: VolterraOptions) -> Result<Self> {
        params.validate()?;
        Ok(Self {
            params,
            weights,
            options,
        })
    }

    pub fn grid(&self) -> &TimeGrid {
        self.weights.grid()
    }

    pub fn simulate(&self, stream: &IncrementStream) -> Result<VPath> {
        let grid = self.weights.grid();
        stream.check_grid(grid)?;
        let p = &self.params;
        let rho_perp = p.rho_perp();
        let n = grid.steps();

        let mut y = vec![0.0; n + 1];
        let mut v = vec![0.0; n + 1];
        let mut incr = vec![0.0; n];
        y[0] = p.s0.ln();
        v[0] = p.v0;

        let fault = |step, quantity| Error::PathFault {
            path: stream.path_index(),
            step,
            quantity,
        };

        for k in 1..=n {
            let i = k - 1;
            let vp = v[i].max(0.0);
            debug_assert!(vp >= 0.0);
            let vol = vp.sqrt();
            let dt = grid.step(k);
            let dw = stream.dw(k);
            incr[i] = (p.theta - p.lambda * vp) * dt + p.nu * vol * dw;
            v[k] = p.v0 + self.weights.convolve(k, &incr);
            y[k] = y[i] - 0.5 * vp * dt + vol * (p.rho * dw + rho_perp * stream.dw_perp(k));
            if !v[k].is_finite() {
                return Err(fault(k, "variance"));
            }
            if !y[k].is_finite() {
                return Err(fault(k, "log-price"));
            }
        }

        let s: Vec<f64> = y.iter().map(|y| y.exp()).collect();
        if let Some(k) = s.iter().position(|s| !s.is_finite()) {
            return Err(fault(k, "price"));
        }
        let x = integrated_variance(&v, grid, self.options.clip_variance_in_x);
        Ok(VPath {
            grid: grid.clone(),
            y,
            v,
            s,
            x,
        })
    }
}

/// Simulate one path with default options.
pub fn simulate_v_path(
    params: &ModelParams,
    weights: &KernelWeights,
    stream: &IncrementStream,
) -> Result<VPath> {
    VolterraScheme::new(*params, weights, VolterraOptions::default())?.simulate(stream)
}

/// `X_k = Σ_{i<k} V_i Δt_{i+1}`.
pub fn integrated_variance(v: &[f64], grid: &TimeGrid, clip: bool) -> Vec<f64> {
    let mut x = Vec::with_capacity(v.len());
    x.push(0.0);
    let mut acc = 0.0;
    for k in 1..v.len() {
        let vi = if clip { v[k - 1].max(0.0) } else { v[k - 1] };
        acc += vi * grid.step(k);
        x.push(acc);
    }
    x
}

impl VPath {
    pub fn integrated_variance(&self) -> &[f64] {
        &self.x
    }
}
