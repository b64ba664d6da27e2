//! Joint transform of `(log S_T, X_T)` through the Riccati-Volterra equation
//!
//! ```text
//! ψ = K * F(ψ)
//! F(ψ) = w + ½(z² - z) + (ρνz - λ) ψ + ½ν² ψ²
//! E[exp(z log S_T + w X_T)] = exp(z log S0 + V0 ∫_0^T F(ψ(s)) ds + θ ∫_0^T ψ(s) ds)
//! ```
//!
//! The characteristic function of `log S_T` takes `z = iu, w = 0` and that of
//! `X_T` takes `z = 0, w = iu`. Both accept complex `u`, which the Fourier
//! inversion uses to evaluate damped transforms.
//!
//! Each product-trapezoid step solves the scalar quadratic
//! `ψ_k = H_k + B_0 F(ψ_k)` by Newton's method started from the explicit
//! predictor `H_k + B_0 F(ψ_{k-1})`.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::kernels::Kernel;
use crate::params::ModelParams;

use super::ProductWeights;

pub const MIN_RESOLUTION: usize = 200;
const NEWTON_MAX_ITER: usize = 60;
/// Slack on `|φ(u)| <= 1` for real `u`, absorbing discretization error.
const MODULUS_SLACK: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq)]
pub struct CharFnSolution {
    pub u: Complex64,
    /// `ψ` on the uniform solver grid.
    pub psi: Vec<Complex64>,
    pub phi: Complex64,
}

/// Solver bound to a parameter set, a kernel and a resolution `m`.
#[derive(Debug, Clone)]
pub struct RiccatiSolver {
    params: ModelParams,
    weights: ProductWeights,
}

impl RiccatiSolver {
    pub fn new(params: &ModelParams, kernel: &Kernel, m: usize) -> Result<Self> {
        params.validate()?;
        Ok(Self {
            params: *params,
            weights: ProductWeights::new(kernel, params.horizon, m)?,
        })
    }

    pub fn resolution(&self) -> usize {
        self.weights.steps()
    }

    /// `ψ` and `E[exp(z log S_T + w X_T)]`.
    pub fn transform(&self, z: Complex64, w: Complex64) -> Result<(Vec<Complex64>, Complex64)> {
        let p = &self.params;
        let pw = &self.weights;
        let m = pw.steps();
        let c0 = w + 0.5 * (z * z - z);
        let c1 = p.rho * p.nu * z - p.lambda;
        let c2 = 0.5 * p.nu * p.nu;
        let big_f = |psi: Complex64| c0 + c1 * psi + c2 * psi * psi;
        let b0 = pw.b[0];

        let mut psi = vec![Complex64::new(0.0, 0.0); m + 1];
        let mut f = vec![c0; m + 1];
        for k in 1..=m {
            let mut history = Complex64::new(0.0, 0.0);
            for j in 0..k {
                history += pw.a[k - 1 - j] * f[j];
            }
            for j in 1..k {
                history += pw.b[k - j] * f[j];
            }
            let mut x = history + b0 * f[k - 1];
            let mut converged = false;
            for _ in 0..NEWTON_MAX_ITER {
                let g = x - history - b0 * big_f(x);
                let dg = 1.0 - b0 * (c1 + 2.0 * c2 * x);
                let dx = g / dg;
                x -= dx;
                if !x.is_finite() {
                    break;
                }
                if dx.norm() <= 1e-14 * (1.0 + x.norm()) {
                    converged = true;
                    break;
                }
            }
            if !converged {
                return Err(Error::Solver(format!(
                    "Riccati step {k} failed to converge for z = {z}, w = {w}"
                )));
            }
            psi[k] = x;
            f[k] = big_f(x);
        }

        let h = pw.h;
        let trapezoid = |v: &[Complex64]| {
            h * (v[1..m].iter().sum::<Complex64>() + 0.5 * (v[0] + v[m]))
        };
        let exponent = z * p.s0.ln() + p.v0 * trapezoid(&f) + p.theta * trapezoid(&psi);
        let phi = exponent.exp();
        if !phi.is_finite() {
            return Err(Error::Solver(format!("transform overflowed for z = {z}, w = {w}")));
        }
        Ok((psi, phi))
    }

    /// `E[exp(iu log S_T)]`.
    pub fn char_fn_log_s(&self, u: Complex64) -> Result<CharFnSolution> {
        let i = Complex64::i();
        let (psi, phi) = self.transform(i * u, Complex64::new(0.0, 0.0))?;
        check_modulus(u, phi)?;
        Ok(CharFnSolution { u, psi, phi })
    }

    /// `E[exp(iu X_T)]`.
    pub fn char_fn_x(&self, u: Complex64) -> Result<CharFnSolution> {
        let i = Complex64::i();
        let (psi, phi) = self.transform(Complex64::new(0.0, 0.0), i * u)?;
        check_modulus(u, phi)?;
        Ok(CharFnSolution { u, psi, phi })
    }
}

fn check_modulus(u: Complex64, phi: Complex64) -> Result<()> {
    if u.im == 0.0 && phi.norm() > 1.0 + MODULUS_SLACK {
        return Err(Error::Solver(format!(
            "|φ({})| = {} exceeds 1; refine the grid",
            u.re,
            phi.norm()
        )));
    }
    Ok(())
}

fn checked_solver(params: &ModelParams, kernel: &Kernel, m: usize) -> Result<RiccatiSolver> {
    if m < MIN_RESOLUTION {
        return Err(Error::invalid(
            "resolution",
            format!("must be at least {MIN_RESOLUTION}, got {m}"),
        ));
    }
    RiccatiSolver::new(params, kernel, m)
}

/// Characteristic function of `log S_T` at real `u` with `m` steps.
pub fn char_fn_log_s(params: &ModelParams, kernel: &Kernel, u: f64, m: usize) -> Result<Complex64> {
    Ok(checked_solver(params, kernel, m)?
        .char_fn_log_s(Complex64::new(u, 0.0))?
        .phi)
}

/// Characteristic function of `X_T` at real `u` with `m` steps.
pub fn char_fn_x(params: &ModelParams, kernel: &Kernel, u: f64, m: usize) -> Result<Complex64> {
    Ok(checked_solver(params, kernel, m)?
        .char_fn_x(Complex64::new(u, 0.0))?
        .phi)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::reference::volterra::solve_expected_integrated_variance;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    fn kernel() -> Kernel {
        Kernel::gamma_normalized(0.1).unwrap()
    }

    #[test]
    fn zero_frequency_is_one() {
        let p = ModelParams::benchmark();
        assert_eq!(char_fn_log_s(&p, &kernel(), 0.0, 200).unwrap(), Complex64::new(1.0, 0.0));
        assert_eq!(char_fn_x(&p, &kernel(), 0.0, 200).unwrap(), Complex64::new(1.0, 0.0));
    }

    #[test]
    fn deterministic_variance_reduces_to_black_scholes() {
        let p = ModelParams {
            nu: 0.0,
            s0: 1.3,
            ..ModelParams::benchmark()
        };
        let k = kernel();
        let x = solve_expected_integrated_variance(&p, &k, 1.0, 1600).unwrap().terminal();
        let i = Complex64::i();
        for u in [0.5, 1.0, 3.0, 10.0] {
            let phi = char_fn_log_s(&p, &k, u, 800).unwrap();
            let expected = (i * u * (p.s0.ln() - 0.5 * x) - 0.5 * u * u * x).exp();
            assert!((phi - expected).norm() < 1e-6, "u = {u}: {phi} vs {expected}");
            let phi_x = char_fn_x(&p, &k, u, 800).unwrap();
            assert!((phi_x - (i * u * x).exp()).norm() < 1e-6, "u = {u}");
        }
    }

    #[test]
    fn grid_doubling_settles() {
        let p = ModelParams::benchmark();
        let k = kernel();
        for u in [1.0, 5.0, 20.0] {
            let a = char_fn_log_s(&p, &k, u, 400).unwrap();
            let b = char_fn_log_s(&p, &k, u, 800).unwrap();
            assert!((a - b).norm() < 1e-5, "log S, u = {u}: {}", (a - b).norm());
            let a = char_fn_x(&p, &k, 10.0 * u, 400).unwrap();
            let b = char_fn_x(&p, &k, 10.0 * u, 800).unwrap();
            assert!((a - b).norm() < 1e-5, "X, u = {u}: {}", (a - b).norm());
        }
    }

    #[test]
    fn martingale_moment() {
        // E[S_T] = S0: z = 1 makes F linear with ψ ≡ 0.
        let p = ModelParams::benchmark();
        let s = RiccatiSolver::new(&p, &kernel(), 200).unwrap();
        let (_, m1) = s.transform(Complex64::new(1.0, 0.0), Complex64::new(0.0, 0.0)).unwrap();
        assert_abs_diff_eq!(m1.re, 1.0, epsilon = 1e-14);
        assert_abs_diff_eq!(m1.im, 0.0, epsilon = 1e-14);
    }

    #[test]
    fn low_resolution_is_rejected() {
        assert!(char_fn_log_s(&ModelParams::benchmark(), &kernel(), 1.0, 100).is_err());
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(16))]

        #[test]
        fn conjugate_symmetry_and_modulus(u in 0.01f64..30.0) {
            let p = ModelParams::benchmark();
            let k = kernel();
            for cf in [char_fn_log_s, char_fn_x] {
                let plus = cf(&p, &k, u, 200).unwrap();
                let minus = cf(&p, &k, -u, 200).unwrap();
                prop_assert!((plus - minus.conj()).norm() <= 1e-13);
                prop_assert!(plus.norm() <= 1.0 + 1e-9);
            }
        }
    }
}
