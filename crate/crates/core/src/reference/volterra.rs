//! `E[X_t]` from the linear Volterra equation
//!
//! ```text
//! u(t) = V0 t + ∫_0^t K(t - s) (θ s - λ u(s)) ds
//! ```
//!
//! With `f = θ s - λ u` the product-trapezoid step is linear in `u_k`:
//!
//! ```text
//! u_k = (V0 t_k + H_k + B_0 θ t_k) / (1 + λ B_0)
//! ```
//!
//! where `H_k` collects the explicit history terms.

use crate::error::{Error, Result};
use crate::grid::TimeGrid;
use crate::kernels::Kernel;
use crate::params::ModelParams;

use super::ProductWeights;

pub const MIN_RESOLUTION: usize = 100;
/// Grid-doubling target for the terminal value.
pub const CONVERGENCE_TOL: f64 = 1e-6;
const MAX_DOUBLINGS: u32 = 8;

#[derive(Debug, Clone, PartialEq)]
pub struct VolterraOdeSolution {
    pub grid: TimeGrid,
    /// `E[X_{t_k}]` at the grid nodes.
    pub values: Vec<f64>,
}

impl VolterraOdeSolution {
    pub fn terminal(&self) -> f64 {
        *self.values.last().expect("a solution has at least two nodes")
    }
}

/// One solve on the uniform `m`-step grid of `[0, horizon]`.
pub fn solve_expected_integrated_variance(
    params: &ModelParams,
    kernel: &Kernel,
    horizon: f64,
    m: usize,
) -> Result<VolterraOdeSolution> {
    params.validate()?;
    let w = ProductWeights::new(kernel, horizon, m)?;
    let grid = TimeGrid::uniform(m, horizon)?;
    let (v0, theta, lambda) = (params.v0, params.theta, params.lambda);
    let mut u = vec![0.0; m + 1];
    let mut f = vec![0.0; m + 1];
    let denom = 1.0 + lambda * w.b[0];
    for k in 1..=m {
        let t = grid.node(k);
        let mut history = 0.0;
        for j in 0..k {
            history += w.a[k - 1 - j] * f[j];
        }
        for j in 1..k {
            history += w.b[k - j] * f[j];
        }
        u[k] = (v0 * t + history + w.b[0] * theta * t) / denom;
        f[k] = theta * t - lambda * u[k];
        if !u[k].is_finite() {
            return Err(Error::Solver(format!("non-finite E[X] at step {k}")));
        }
    }
    Ok(VolterraOdeSolution { grid, values: u })
}

/// The finest solution and its predecessor once the terminal values agree
/// to [`CONVERGENCE_TOL`].
pub(crate) fn converged_pair(
    params: &ModelParams,
    kernel: &Kernel,
    horizon: f64,
    m: usize,
) -> Result<(VolterraOdeSolution, VolterraOdeSolution)> {
    if m < MIN_RESOLUTION {
        return Err(Error::invalid(
            "resolution",
            format!("must be at least {MIN_RESOLUTION}, got {m}"),
        ));
    }
    let mut coarse = solve_expected_integrated_variance(params, kernel, horizon, m)?;
    let mut m = m;
    for _ in 0..MAX_DOUBLINGS {
        m *= 2;
        let fine = solve_expected_integrated_variance(params, kernel, horizon, m)?;
        if (fine.terminal() - coarse.terminal()).abs() <= CONVERGENCE_TOL {
            return Ok((fine, coarse));
        }
        coarse = fine;
    }
    Err(Error::Solver(format!(
        "E[X] did not settle to {CONVERGENCE_TOL:e} by m = {m}"
    )))
}

/// `E[X_t]`, refined by grid doubling from `m` steps until converged.
pub fn expected_integrated_variance(
    params: &ModelParams,
    kernel: &Kernel,
    t: f64,
    m: usize,
) -> Result<f64> {
    if t == 0.0 {
        return Ok(0.0);
    }
    converged_pair(params, kernel, t, m).map(|(fine, _)| fine.terminal())
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    fn kernel() -> Kernel {
        Kernel::gamma_normalized(0.1).unwrap()
    }

    #[test]
    fn without_reversion_the_solution_is_the_exact_drift() {
        let p = ModelParams {
            lambda: 0.0,
            ..ModelParams::benchmark()
        };
        let k = kernel();
        let sol = solve_expected_integrated_variance(&p, &k, 1.0, 100).unwrap();
        for (i, &t) in sol.grid.nodes().iter().enumerate() {
            let exact = p.v0 * t + k.linear_drift_convolution(p.theta, t).unwrap();
            assert_abs_diff_eq!(sol.values[i], exact, epsilon = 1e-12);
        }
    }

    #[test]
    fn constant_kernel_matches_the_ode_solution() {
        // K = c turns the equation into u' = V0 + c(θ t - λ u), u(0) = 0.
        let c = 1.7;
        let k = Kernel::power_law(c, 0.5).unwrap();
        let p = ModelParams {
            lambda: 2.0,
            ..ModelParams::benchmark()
        };
        let (cl, slope) = (c * p.lambda, p.theta / p.lambda);
        let offset = (p.v0 - slope) / cl;
        let exact = |t: f64| offset + slope * t - offset * (-cl * t).exp();
        let sol = solve_expected_integrated_variance(&p, &k, 2.0, 400).unwrap();
        for (i, &t) in sol.grid.nodes().iter().enumerate() {
            assert_abs_diff_eq!(sol.values[i], exact(t), epsilon = 1e-6);
        }
    }

    #[test]
    fn benchmark_value_and_convergence() {
        let p = ModelParams::benchmark();
        let (fine, coarse) = converged_pair(&p, &kernel(), 1.0, 100).unwrap();
        assert!((fine.terminal() - coarse.terminal()).abs() <= 1e-6);
        assert_abs_diff_eq!(fine.terminal(), 0.028295, epsilon = 5e-6);
        assert_eq!(fine.values[0], 0.0);
        assert!(fine.values.windows(2).all(|w| w[1] >= w[0]));
    }

    #[test]
    fn resolution_is_checked() {
        assert!(expected_integrated_variance(&ModelParams::benchmark(), &kernel(), 1.0, 99).is_err());
        assert_eq!(expected_integrated_variance(&ModelParams::benchmark(), &kernel(), 0.0, 100).unwrap(), 0.0);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(24))]

        #[test]
        fn monotone_in_time_and_inputs(v0 in 0.0f64..0.1, theta in 0.0f64..0.1, bump in 0.001f64..0.05) {
            let k = kernel();
            let base = ModelParams { v0, theta, ..ModelParams::benchmark() };
            let sol = solve_expected_integrated_variance(&base, &k, 1.0, 100).unwrap();
            prop_assert!(sol.values.windows(2).all(|w| w[1] >= w[0]));
            let hi_v0 = solve_expected_integrated_variance(&ModelParams { v0: v0 + bump, ..base }, &k, 1.0, 100).unwrap();
            let hi_theta = solve_expected_integrated_variance(&ModelParams { theta: theta + bump, ..base }, &k, 1.0, 100).unwrap();
            prop_assert!(hi_v0.terminal() > sol.terminal());
            prop_assert!(hi_theta.terminal() > sol.terminal());
        }
    }
}
