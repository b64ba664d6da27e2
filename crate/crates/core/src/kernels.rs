//! Volterra kernels `K(t)` and the quantities derived from them.
//!
//! The variants cover the completely monotone family used for rough
//! volatility: the fractional power law `c t^(H-1/2)`, its exponentially
//! damped version, the logarithmic kernel `log(1 + 1/(t+1))`, and finite sums
//! and products of those.
//!
//! Besides pointwise evaluation the module provides
//! * [`KernelWeights`], the table `K(t_k - t_i)` reused by both Euler schemes,
//! * [`Kernel::linear_drift_convolution`], `∫_0^t K(t-s) θ s ds` in closed form
//!   for the power law,
//! * [`Kernel::linear_moments`], exact kernel moments against the two linear
//!   hat functions of a subinterval (the product-integration weights),
//! * [`verify_regularity`], an empirical check of the two `δ^(2H)` bounds, and
//! * [`ResolventFirstKind`], the resolvent `L` with `(K * L)(t) = 1`.

use statrs::function::gamma::gamma;

use crate::error::{Error, Result};
use crate::grid::TimeGrid;
use crate::quad;

const QUAD_TOL: f64 = 1e-10;

#[derive(Debug, Clone, PartialEq)]
pub enum Kernel {
    /// `c t^(H - 1/2)`
    FractionalPowerLaw { c: f64, hurst: f64 },
    /// `c e^(-β t) t^(H - 1/2)`
    ExponentiallyDamped { c: f64, beta: f64, hurst: f64 },
    /// `log(1 + 1/(t + 1))`
    LogKernel,
    Sum(Vec<Kernel>),
    Product(Box<Kernel>, Box<Kernel>),
}

fn check_hurst(hurst: f64) -> Result<()> {
    if hurst > 0.0 && hurst <= 0.5 {
        Ok(())
    } else {
        Err(Error::invalid("H", format!("must lie in (0, 1/2], got {hurst}")))
    }
}

fn check_scale(c: f64) -> Result<()> {
    if c > 0.0 && c.is_finite() {
        Ok(())
    } else {
        Err(Error::invalid("c", format!("must be positive, got {c}")))
    }
}

impl Kernel {
    pub fn power_law(c: f64, hurst: f64) -> Result<Self> {
        check_scale(c)?;
        check_hurst(hurst)?;
        Ok(Kernel::FractionalPowerLaw { c, hurst })
    }

    /// `t^(H-1/2) / Γ(H+1/2)`, the normalisation under which the variance
    /// equation reads as a fractional ODE of order `H + 1/2`.
    pub fn gamma_normalized(hurst: f64) -> Result<Self> {
        check_hurst(hurst)?;
        Self::power_law(1.0 / gamma(hurst + 0.5), hurst)
    }

    pub fn exponentially_damped(c: f64, beta: f64, hurst: f64) -> Result<Self> {
        check_scale(c)?;
        check_hurst(hurst)?;
        if !(beta >= 0.0 && beta.is_finite()) {
            return Err(Error::invalid("beta", format!("must be nonnegative, got {beta}")));
        }
        Ok(Kernel::ExponentiallyDamped { c, beta, hurst })
    }

    pub fn log_kernel() -> Self {
        Kernel::LogKernel
    }

    pub fn sum(terms: Vec<Kernel>) -> Result<Self> {
        if terms.is_empty() {
            return Err(Error::invalid("terms", "a sum kernel needs at least one term"));
        }
        Ok(Kernel::Sum(terms))
    }

    pub fn product(a: Kernel, b: Kernel) -> Self {
        Kernel::Product(Box::new(a), Box::new(b))
    }

    /// Regularity exponent `H` of the bounds `C δ^(2H)`. Composite kernels
    /// inherit the smallest exponent of their parts.
    pub fn hurst_exponent(&self) -> f64 {
        match self {
            Kernel::FractionalPowerLaw { hurst, .. } | Kernel::ExponentiallyDamped { hurst, .. } => {
                *hurst
            }
            Kernel::LogKernel => 0.5,
            Kernel::Sum(terms) => terms
                .iter()
                .map(Kernel::hurst_exponent)
                .fold(f64::INFINITY, f64::min),
            Kernel::Product(a, b) => a.hurst_exponent().min(b.hurst_exponent()),
        }
    }

    /// Exponent `e <= 0` with `K(t) = O(t^e)` as `t -> 0`.
    pub(crate) fn singular_exponent(&self) -> f64 {
        match self {
            Kernel::FractionalPowerLaw { hurst, .. } | Kernel::ExponentiallyDamped { hurst, .. } => {
                hurst - 0.5
            }
            Kernel::LogKernel => 0.0,
            Kernel::Sum(terms) => terms
                .iter()
                .map(Kernel::singular_exponent)
                .fold(0.0, f64::min),
            Kernel::Product(a, b) => a.singular_exponent() + b.singular_exponent(),
        }
    }

    /// `K(t)` for `t > 0`.
    pub fn evaluate(&self, t: f64) -> Result<f64> {
        if !(t > 0.0) {
            return Err(Error::KernelDomain { t });
        }
        Ok(self.value(t))
    }

    /// Unchecked evaluation; callers guarantee `t > 0`.
    pub(crate) fn value(&self, t: f64) -> f64 {
        match self {
            Kernel::FractionalPowerLaw { c, hurst } => c * t.powf(hurst - 0.5),
            Kernel::ExponentiallyDamped { c, beta, hurst } => {
                c * (-beta * t).exp() * t.powf(hurst - 0.5)
            }
            Kernel::LogKernel => (1.0 / (t + 1.0)).ln_1p(),
            Kernel::Sum(terms) => terms.iter().map(|k| k.value(t)).sum(),
            Kernel::Product(a, b) => a.value(t) * b.value(t),
        }
    }

    /// `∫_a^b g(r) K(r) dr` by adaptive quadrature, removing the origin
    /// singularity when `a = 0`.
    fn quad_against<G: Fn(f64) -> f64>(&self, g: G, a: f64, b: f64, tol: f64) -> Result<f64> {
        let e = self.singular_exponent();
        if a == 0.0 && e < 0.0 {
            quad::integrate_left_singular(|r| g(r) * self.value(r), a, b, 1.0 + e, tol)
        } else {
            quad::integrate(|r| g(r) * self.value(r), a, b, tol)
        }
    }

    /// `∫_a^b K(r) dr`, `0 <= a <= b`.
    pub fn integral(&self, a: f64, b: f64) -> Result<f64> {
        match self {
            Kernel::FractionalPowerLaw { c, hurst } => {
                let alpha = hurst + 0.5;
                Ok(c * (b.powf(alpha) - a.powf(alpha)) / alpha)
            }
            Kernel::Sum(terms) => terms.iter().map(|k| k.integral(a, b)).sum(),
            _ => self.quad_against(|_| 1.0, a, b, QUAD_TOL * (b - a).max(1e-300)),
        }
    }

    /// Moments of `K` on `[a, b]` against the hat functions of the subinterval:
    /// `(∫ K(r) (r-a)/h dr, ∫ K(r) (b-r)/h dr)` with `h = b - a`.
    pub fn linear_moments(&self, a: f64, b: f64) -> Result<(f64, f64)> {
        let h = b - a;
        match self {
            Kernel::FractionalPowerLaw { c, hurst } => {
                let alpha = hurst + 0.5;
                let i0 = c * (b.powf(alpha) - a.powf(alpha)) / alpha;
                let i1 = c * (b.powf(alpha + 1.0) - a.powf(alpha + 1.0)) / (alpha + 1.0);
                Ok(((i1 - a * i0) / h, (b * i0 - i1) / h))
            }
            Kernel::Sum(terms) => terms.iter().try_fold((0.0, 0.0), |acc, k| {
                let (x, y) = k.linear_moments(a, b)?;
                Ok((acc.0 + x, acc.1 + y))
            }),
            _ => {
                let tol = 1e-13 * h;
                let left = self.quad_against(|r| (r - a) / h, a, b, tol)?;
                let right = self.quad_against(|r| (b - r) / h, a, b, tol)?;
                Ok((left, right))
            }
        }
    }

    /// `∫_0^t K(t - s) θ s ds`.
    ///
    /// For the power law this is `θ c t^(H+3/2) B(2, H+1/2)`; other variants
    /// use adaptive quadrature.
    pub fn linear_drift_convolution(&self, theta: f64, t: f64) -> Result<f64> {
        if theta == 0.0 || t == 0.0 {
            return Ok(0.0);
        }
        match self {
            Kernel::FractionalPowerLaw { c, hurst } => {
                let alpha = hurst + 0.5;
                let beta_2_alpha = 1.0 / (alpha * (alpha + 1.0));
                Ok(theta * c * t.powf(alpha + 1.0) * beta_2_alpha)
            }
            Kernel::Sum(terms) => terms
                .iter()
                .map(|k| k.linear_drift_convolution(theta, t))
                .sum(),
            _ => {
                let v = self.quad_against(|r| t - r, 0.0, t, 1e-13 * t * t)?;
                Ok(theta * v)
            }
        }
    }
}

/// `∫_0^t K(t - s) θ s ds`; see [`Kernel::linear_drift_convolution`].
pub fn exact_linear_drift_convolution(kernel: &Kernel, theta: f64, t: f64) -> Result<f64> {
    kernel.linear_drift_convolution(theta, t)
}

#[derive(Debug, Clone)]
enum Storage {
    /// Uniform grids: `by_lag[d - 1] = K(d Δt)`.
    ByLag(Vec<f64>),
    /// `rows[k][i] = K(t_k - t_i)` for `i < k`.
    Dense(Vec<Vec<f64>>),
}

/// The lower-triangular table `w[k][i] = K(t_k - t_i)`, `0 <= i < k <= n`.
///
/// Every entry is evaluated at a strictly positive lag, so the kernel
/// singularity at the origin is never touched.
#[derive(Debug, Clone)]
pub struct KernelWeights {
    grid: TimeGrid,
    storage: Storage,
}

impl KernelWeights {
    pub fn precompute(kernel: &Kernel, grid: &TimeGrid) -> Result<Self> {
        let n = grid.steps();
        let storage = if grid.is_uniform() {
            // Lag d has the same value for every row; evaluate at t_d - t_0.
            let by_lag = (1..=n)
                .map(|d| kernel.evaluate(grid.node(d)))
                .collect::<Result<Vec<_>>>()?;
            Storage::ByLag(by_lag)
        } else {
            let mut rows = Vec::with_capacity(n + 1);
            for k in 0..=n {
                let row = (0..k)
                    .map(|i| kernel.evaluate(grid.node(k) - grid.node(i)))
                    .collect::<Result<Vec<_>>>()?;
                rows.push(row);
            }
            Storage::Dense(rows)
        };
        Ok(Self {
            grid: grid.clone(),
            storage,
        })
    }

    pub fn grid(&self) -> &TimeGrid {
        &self.grid
    }

    /// `K(t_k - t_i)`, `i < k`.
    pub fn get(&self, k: usize, i: usize) -> f64 {
        assert!(i < k && k <= self.grid.steps(), "weight ({k}, {i}) out of range");
        match &self.storage {
            Storage::ByLag(lags) => lags[k - i - 1],
            Storage::Dense(rows) => rows[k][i],
        }
    }

    /// `Σ_{i<k} K(t_k - t_i) values[i]`.
    pub fn convolve(&self, k: usize, values: &[f64]) -> f64 {
        match &self.storage {
            Storage::ByLag(lags) => lags[..k]
                .iter()
                .rev()
                .zip(&values[..k])
                .map(|(w, v)| w * v)
                .sum(),
            Storage::Dense(rows) => rows[k].iter().zip(&values[..k]).map(|(w, v)| w * v).sum(),
        }
    }
}

/// Largest observed ratios `LHS / δ^(2H)` of the two regularity bounds.
#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct RegularityReport {
    pub steps: usize,
    pub hurst: f64,
    /// `sup ∫_t^{t+δ} K(t+δ-η(s))² ds / δ^(2H)`
    pub a2_ratio: f64,
    /// `sup ∫_0^t |K(t+δ-η(s)) - K(t-η(s))|² ds / δ^(2H)`
    pub a3_ratio: f64,
    pub lattice_size: usize,
}

/// Evaluate both regularity bounds on a lattice of `(t, δ)` pairs.
///
/// `δ` runs over `T 2^-j` down to the grid mesh and `t` over `{0, T/4, T/2,
/// 3T/4}`. The integrands are piecewise constant in `s` on the grid cells, so
/// both left-hand sides are summed exactly cell by cell.
pub fn verify_regularity(kernel: &Kernel, grid: &TimeGrid, hurst: f64) -> Result<RegularityReport> {
    if !(hurst > 0.0) {
        return Err(Error::invalid("H", "must be positive"));
    }
    let horizon = grid.horizon();
    let mesh = grid.mesh();
    let mut deltas = Vec::new();
    let mut delta = horizon / 2.0;
    while delta >= mesh * (1.0 - 1e-12) {
        deltas.push(delta);
        delta /= 2.0;
    }
    let starts = [0.0, 0.25 * horizon, 0.5 * horizon, 0.75 * horizon];
    let mut a2_ratio: f64 = 0.0;
    let mut a3_ratio: f64 = 0.0;
    let mut lattice_size = 0;
    for &d in &deltas {
        let scale = d.powf(2.0 * hurst);
        for &t in starts.iter().filter(|&&t| t + d <= horizon * (1.0 + 1e-12)) {
            lattice_size += 1;
            a2_ratio = a2_ratio.max(a2_integral(kernel, grid, t, d) / scale);
            a3_ratio = a3_ratio.max(a3_integral(kernel, grid, t, d) / scale);
        }
    }
    Ok(RegularityReport {
        steps: grid.steps(),
        hurst,
        a2_ratio,
        a3_ratio,
        lattice_size,
    })
}

fn a2_integral(kernel: &Kernel, grid: &TimeGrid, t: f64, delta: f64) -> f64 {
    let end = t + delta;
    let mut total = 0.0;
    let mut j = grid.eta_index(t);
    while j < grid.steps() && grid.node(j) < end {
        let lo = grid.node(j).max(t);
        let hi = grid.node(j + 1).min(end);
        if hi > lo {
            total += (hi - lo) * kernel.value(end - grid.node(j)).powi(2);
        }
        j += 1;
    }
    total
}

fn a3_integral(kernel: &Kernel, grid: &TimeGrid, t: f64, delta: f64) -> f64 {
    let mut total = 0.0;
    let mut j = 0;
    while j < grid.steps() && grid.node(j) < t {
        let hi = grid.node(j + 1).min(t);
        let tj = grid.node(j);
        let diff = kernel.value(t + delta - tj) - kernel.value(t - tj);
        total += (hi - tj) * diff * diff;
        j += 1;
    }
    total
}

/// Regularity reports over successively refined uniform grids.
#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct RegularitySweep {
    pub reports: Vec<RegularityReport>,
    /// Growth of each ratio across the last refinement.
    pub a2_growth: f64,
    pub a3_growth: f64,
    /// False when either ratio still grows by more than [`RegularitySweep::GROWTH_LIMIT`].
    pub bounded: bool,
}

impl RegularitySweep {
    pub const GROWTH_LIMIT: f64 = 1.15;
}

/// Run [`verify_regularity`] on uniform grids with the given step counts and
/// flag ratios that keep growing under refinement.
pub fn regularity_sweep(
    kernel: &Kernel,
    horizon: f64,
    hurst: f64,
    step_counts: &[usize],
) -> Result<RegularitySweep> {
    if step_counts.len() < 2 {
        return Err(Error::invalid("step_counts", "need at least two refinement levels"));
    }
    let reports = step_counts
        .iter()
        .map(|&n| verify_regularity(kernel, &TimeGrid::uniform(n, horizon)?, hurst))
        .collect::<Result<Vec<_>>>()?;
    let growth = |f: fn(&RegularityReport) -> f64| {
        let last = f(&reports[reports.len() - 1]);
        let prev = f(&reports[reports.len() - 2]);
        if prev == 0.0 {
            if last == 0.0 {
                1.0
            } else {
                f64::INFINITY
            }
        } else {
            last / prev
        }
    };
    let a2_growth = growth(|r| r.a2_ratio);
    let a3_growth = growth(|r| r.a3_ratio);
    let bounded = a2_growth.is_finite()
        && a3_growth.is_finite()
        && a2_growth < RegularitySweep::GROWTH_LIMIT
        && a3_growth < RegularitySweep::GROWTH_LIMIT;
    Ok(RegularitySweep {
        reports,
        a2_growth,
        a3_growth,
        bounded,
    })
}

/// Resolvent of the first kind of a power-law kernel:
/// `L(dt) = C_H t^-(H+1/2) dt` with `(K * L)(t) = 1`.
#[derive(Debug, Clone, PartialEq)]
pub struct ResolventFirstKind {
    normalizing_constant: f64,
    hurst: f64,
}

impl ResolventFirstKind {
    /// Only defined for `FractionalPowerLaw` with `H < 1/2`. The constant
    /// follows from `∫_0^t (t-s)^(α-1) s^(-α) ds = B(α, 1-α)`.
    pub fn for_kernel(kernel: &Kernel) -> Result<Self> {
        match *kernel {
            Kernel::FractionalPowerLaw { c, hurst } if hurst < 0.5 => {
                let alpha = hurst + 0.5;
                let beta = gamma(alpha) * gamma(1.0 - alpha);
                Ok(Self {
                    normalizing_constant: 1.0 / (c * beta),
                    hurst,
                })
            }
            _ => Err(Error::invalid(
                "kernel",
                "a closed-form resolvent exists only for power-law kernels with H < 1/2",
            )),
        }
    }

    pub fn normalizing_constant(&self) -> f64 {
        self.normalizing_constant
    }

    pub fn density(&self, t: f64) -> f64 {
        self.normalizing_constant * t.powf(-(self.hurst + 0.5))
    }

    /// `(K * L)(t)` by quadrature; splits at `t/2` to treat the singularity
    /// at each end separately.
    pub fn convolve_with(&self, kernel: &Kernel, t: f64) -> Result<f64> {
        let alpha = self.hurst + 0.5;
        let f = |s: f64| kernel.value(t - s) * self.density(s);
        let mid = 0.5 * t;
        let left = quad::integrate_left_singular(f, 0.0, mid, 1.0 - alpha, QUAD_TOL)?;
        let right = quad::integrate_right_singular(
            |s, d| kernel.value(d) * self.density(s),
            mid,
            t,
            1.0 + kernel.singular_exponent(),
            QUAD_TOL,
        )?;
        Ok(left + right)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::{assert_abs_diff_eq, assert_relative_eq};
    use proptest::prelude::*;

    // Γ(0.6) from an independent high-precision evaluation (mpmath, 30 digits).
    const GAMMA_0_6: f64 = 1.489_192_248_812_817_102_394_333_388_4;

    fn benchmark_kernel() -> Kernel {
        Kernel::power_law(1.0 / GAMMA_0_6, 0.1).unwrap()
    }

    fn variants() -> Vec<Kernel> {
        vec![
            benchmark_kernel(),
            Kernel::power_law(2.0, 0.3).unwrap(),
            Kernel::exponentially_damped(1.0, 1.0, 0.1).unwrap(),
            Kernel::log_kernel(),
            Kernel::sum(vec![benchmark_kernel(), Kernel::log_kernel()]).unwrap(),
            Kernel::product(
                Kernel::power_law(1.0, 0.2).unwrap(),
                Kernel::exponentially_damped(1.0, 0.5, 0.5).unwrap(),
            ),
        ]
    }

    #[test]
    fn evaluate_examples() {
        let flat = Kernel::power_law(1.0, 0.5).unwrap();
        assert_eq!(flat.evaluate(0.73).unwrap(), 1.0);
        let k = Kernel::gamma_normalized(0.1).unwrap();
        assert_relative_eq!(k.evaluate(1.0).unwrap(), 1.0 / GAMMA_0_6, max_relative = 1e-13);
        assert_abs_diff_eq!(k.evaluate(1.0).unwrap(), 0.671505, epsilon = 1e-6);
        assert_abs_diff_eq!(
            Kernel::log_kernel().evaluate(1.0).unwrap(),
            1.5f64.ln(),
            epsilon = 1e-15
        );
    }

    #[test]
    fn evaluate_rejects_non_positive_time() {
        for k in variants() {
            assert!(matches!(k.evaluate(0.0), Err(Error::KernelDomain { .. })));
            assert!(k.evaluate(-1.0).is_err());
        }
    }

    #[test]
    fn constructors_validate() {
        assert!(Kernel::power_law(0.0, 0.1).is_err());
        assert!(Kernel::power_law(1.0, 0.0).is_err());
        assert!(Kernel::power_law(1.0, 0.6).is_err());
        assert!(Kernel::exponentially_damped(1.0, -0.1, 0.1).is_err());
        assert!(Kernel::sum(vec![]).is_err());
    }

    #[test]
    fn composite_hurst_is_the_minimum() {
        let k = Kernel::sum(vec![
            Kernel::power_law(1.0, 0.3).unwrap(),
            Kernel::power_law(1.0, 0.1).unwrap(),
        ])
        .unwrap();
        assert_eq!(k.hurst_exponent(), 0.1);
        let p = Kernel::product(Kernel::log_kernel(), Kernel::power_law(1.0, 0.2).unwrap());
        assert_eq!(p.hurst_exponent(), 0.2);
    }

    #[test]
    fn weights_on_two_step_grid() {
        let g = TimeGrid::uniform(2, 1.0).unwrap();
        let w = KernelWeights::precompute(&Kernel::power_law(1.0, 0.5).unwrap(), &g).unwrap();
        for (k, i) in [(1, 0), (2, 0), (2, 1)] {
            assert_eq!(w.get(k, i), 1.0);
        }
        let w = KernelWeights::precompute(&benchmark_kernel(), &g).unwrap();
        let half = 0.5f64.powf(-0.4) / GAMMA_0_6;
        assert_relative_eq!(w.get(1, 0), half, max_relative = 1e-14);
        assert_relative_eq!(w.get(2, 1), half, max_relative = 1e-14);
        assert_relative_eq!(w.get(2, 0), 1.0 / GAMMA_0_6, max_relative = 1e-14);
    }

    #[test]
    fn sum_weights_add() {
        let g = TimeGrid::uniform(7, 2.0).unwrap();
        let a = benchmark_kernel();
        let b = Kernel::log_kernel();
        let wa = KernelWeights::precompute(&a, &g).unwrap();
        let wb = KernelWeights::precompute(&b, &g).unwrap();
        let ws = KernelWeights::precompute(&Kernel::sum(vec![a, b]).unwrap(), &g).unwrap();
        for k in 1..=7 {
            for i in 0..k {
                assert_relative_eq!(ws.get(k, i), wa.get(k, i) + wb.get(k, i), max_relative = 1e-15);
            }
        }
    }

    #[test]
    fn drift_convolution_examples() {
        for k in variants() {
            assert_eq!(k.linear_drift_convolution(0.0, 0.7).unwrap(), 0.0);
        }
        let flat = Kernel::power_law(1.0, 0.5).unwrap();
        assert_abs_diff_eq!(flat.linear_drift_convolution(1.0, 2.0).unwrap(), 2.0, epsilon = 1e-14);
        let expected = 0.02 * statrs::function::beta::beta(2.0, 0.6) / GAMMA_0_6;
        let got = benchmark_kernel().linear_drift_convolution(0.02, 1.0).unwrap();
        assert_relative_eq!(got, expected, max_relative = 1e-12);
        // Independent route: singularity-aware quadrature of the integrand.
        let q = quad::integrate_right_singular(
            |s, d| benchmark_kernel().value(d) * 0.02 * s,
            0.0,
            1.0,
            0.6,
            1e-15,
        )
        .unwrap();
        assert_relative_eq!(got, q, max_relative = 1e-10);
    }

    #[test]
    fn quadrature_fallbacks_agree_with_closed_forms() {
        // A damped kernel with β = 0 is the power law; force the quadrature path.
        let damped = Kernel::exponentially_damped(0.8, 0.0, 0.2).unwrap();
        let pl = Kernel::power_law(0.8, 0.2).unwrap();
        assert_relative_eq!(
            damped.linear_drift_convolution(0.3, 1.7).unwrap(),
            pl.linear_drift_convolution(0.3, 1.7).unwrap(),
            max_relative = 1e-10
        );
        assert_relative_eq!(
            damped.integral(0.0, 0.9).unwrap(),
            pl.integral(0.0, 0.9).unwrap(),
            max_relative = 1e-10
        );
        for (a, b) in [(0.0, 0.01), (0.01, 0.02), (0.5, 0.51)] {
            let (x, y) = damped.linear_moments(a, b).unwrap();
            let (u, v) = pl.linear_moments(a, b).unwrap();
            assert_relative_eq!(x, u, max_relative = 1e-9);
            assert_relative_eq!(y, v, max_relative = 1e-9);
        }
    }

    #[test]
    fn regularity_of_constant_kernel_is_exact() {
        let g = TimeGrid::uniform(64, 1.0).unwrap();
        let r = verify_regularity(&Kernel::power_law(1.0, 0.5).unwrap(), &g, 0.5).unwrap();
        assert_abs_diff_eq!(r.a2_ratio, 1.0, epsilon = 1e-12);
        assert_eq!(r.a3_ratio, 0.0);
    }

    #[test]
    fn regularity_sweeps() {
        let levels = [256, 512, 1024, 2048];
        let pl = Kernel::power_law(1.0, 0.1).unwrap();
        let ok = regularity_sweep(&pl, 1.0, 0.1, &levels).unwrap();
        assert!(ok.bounded, "{ok:?}");
        let damped = Kernel::exponentially_damped(1.0, 1.0, 0.1).unwrap();
        let ok = regularity_sweep(&damped, 1.0, 0.1, &levels).unwrap();
        assert!(ok.bounded, "{ok:?}");
        // Claiming more regularity than the kernel has must show up as growth.
        let bad = regularity_sweep(&pl, 1.0, 0.3, &levels).unwrap();
        assert!(!bad.bounded, "{bad:?}");
    }

    #[test]
    fn resolvent_identity_holds() {
        for k in [benchmark_kernel(), Kernel::power_law(2.5, 0.3).unwrap()] {
            let l = ResolventFirstKind::for_kernel(&k).unwrap();
            for t in [0.01, 0.1, 0.5, 1.0, 3.0] {
                let v = l.convolve_with(&k, t).unwrap();
                assert!((v - 1.0).abs() <= 1e-6, "t = {t}: {v}");
            }
        }
        assert!(ResolventFirstKind::for_kernel(&Kernel::log_kernel()).is_err());
        assert!(ResolventFirstKind::for_kernel(&Kernel::power_law(1.0, 0.5).unwrap()).is_err());
    }

    fn kernel_strategy() -> impl Strategy<Value = Kernel> {
        prop_oneof![
            (0.1f64..3.0, 0.05f64..0.5).prop_map(|(c, h)| Kernel::power_law(c, h).unwrap()),
            (0.1f64..3.0, 0.0f64..2.0, 0.05f64..0.5)
                .prop_map(|(c, b, h)| Kernel::exponentially_damped(c, b, h).unwrap()),
            Just(Kernel::log_kernel()),
            (0.1f64..3.0, 0.05f64..0.5).prop_map(|(c, h)| {
                Kernel::sum(vec![Kernel::power_law(c, h).unwrap(), Kernel::log_kernel()]).unwrap()
            }),
            (0.05f64..0.5, 0.0f64..2.0).prop_map(|(h, b)| Kernel::product(
                Kernel::power_law(1.0, h).unwrap(),
                Kernel::exponentially_damped(1.0, b, 0.5).unwrap()
            )),
        ]
    }

    proptest! {
        #[test]
        fn kernels_are_nonnegative_and_non_increasing(k in kernel_strategy(), s in 1e-6f64..5.0, dt in 0.0f64..5.0) {
            let t = s + dt;
            let ks = k.evaluate(s).unwrap();
            let kt = k.evaluate(t).unwrap();
            prop_assert!(ks.is_finite() && kt >= 0.0);
            prop_assert!(kt <= ks);
        }

        #[test]
        fn power_law_scaling(c in 0.1f64..3.0, h in 0.05f64..0.5, a in 0.01f64..10.0, t in 0.01f64..10.0) {
            let k = Kernel::power_law(c, h).unwrap();
            let lhs = k.evaluate(a * t).unwrap();
            let rhs = a.powf(h - 0.5) * k.evaluate(t).unwrap();
            prop_assert!((lhs - rhs).abs() <= 1e-12 * rhs.abs());
        }

        #[test]
        fn weights_match_direct_evaluation(k in kernel_strategy(), mut steps in proptest::collection::vec(0.01f64..0.5, 1..20), uniform in any::<bool>()) {
            let g = if uniform {
                TimeGrid::uniform(steps.len(), steps.iter().sum()).unwrap()
            } else {
                let mut t = 0.0;
                let mut nodes = vec![0.0];
                for s in steps.drain(..) { t += s; nodes.push(t); }
                TimeGrid::from_nodes(nodes).unwrap()
            };
            let w = KernelWeights::precompute(&k, &g).unwrap();
            for kk in 1..=g.steps() {
                let mut prev = 0.0;
                for i in 0..kk {
                    let direct = k.evaluate(g.node(kk) - g.node(i)).unwrap();
                    prop_assert!((w.get(kk, i) - direct).abs() <= 1e-13 * direct.max(1.0));
                    prop_assert!(w.get(kk, i) >= prev * (1.0 - 1e-12));
                    prev = w.get(kk, i);
                }
            }
        }

        #[test]
        fn drift_convolution_matches_quadrature(c in 0.1f64..3.0, h in 0.05f64..0.5, theta in 0.01f64..1.0, t in 0.01f64..5.0) {
            let k = Kernel::power_law(c, h).unwrap();
            let closed = k.linear_drift_convolution(theta, t).unwrap();
            let q = quad::integrate_right_singular(|s, d| k.value(d) * theta * s, 0.0, t, h + 0.5, 1e-12 * closed.abs()).unwrap();
            prop_assert!((closed - q).abs() <= 1e-8 * closed.abs());
        }
    }
}
