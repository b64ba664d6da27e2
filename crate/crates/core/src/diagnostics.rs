//! Property checks on simulated paths.
//!
//! * Hölder scaling: for anchor `s = T/2` and lags `δ = T/2, ..., T/64`,
//!   regress `log E|Z_{s+δ} - Z_s|^p` on `log δ`, where `Z` is `V` for the
//!   Volterra scheme and `X̄` for the integrated one. For `V` the slope should
//!   sit near `pH`.
//! * Structural invariants: `X̄` never decreases and no square root sees a
//!   negative argument. The fraction of negative `V` values is reported for
//!   the Volterra scheme; it should shrink as `n` grows.
//! * Martingale mean: `M_T` and `M⊥_T` of the integrated scheme are centred,
//!   so `z = mean / Σ_M` should satisfy `|z| <= 4`.
//! * Convergence trend: the error against a reference value should be smaller
//!   on the finest grid than on the coarsest.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::TimeGrid;
use crate::increments::IncrementStream;
use crate::kernels::{Kernel, KernelWeights};
use crate::monte_carlo::{
    keyed_streams, run_paths, McEstimate, SchemeKind, SchemePath, Simulator, StreamSource, TableRow,
    Workers,
};
use crate::params::ModelParams;
use crate::scheme_v::VolterraOptions;
use crate::scheme_x::IntegratedOptions;

/// Number of dyadic lags `T/2, ..., T/2^LAGS`.
const LAGS: u32 = 6;
/// Pass threshold of the martingale check.
pub const MARTINGALE_Z_LIMIT: f64 = 4.0;

/// Shared inputs of a diagnostic run.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RunSpec {
    pub scheme: SchemeKind,
    pub steps: usize,
    pub num_paths: usize,
    pub seed: u64,
    pub workers: Workers,
}

impl RunSpec {
    pub fn new(scheme: SchemeKind, steps: usize, num_paths: usize, seed: u64) -> Self {
        Self {
            scheme,
            steps,
            num_paths,
            seed,
            workers: Workers::Auto,
        }
    }
}

fn for_each_path<T, F>(
    params: &ModelParams,
    kernel: &Kernel,
    spec: &RunSpec,
    source: &StreamSource,
    f: F,
) -> Result<Vec<T>>
where
    T: Send,
    F: Fn(&SchemePath, &IncrementStream) -> T + Sync,
{
    let grid = TimeGrid::uniform(spec.steps, params.horizon)?;
    let weights = KernelWeights::precompute(kernel, &grid)?;
    let sim = Simulator::new(
        params,
        kernel,
        &weights,
        spec.scheme,
        VolterraOptions::default(),
        IntegratedOptions::default(),
    )?;
    run_paths(&grid, spec.num_paths, spec.seed, spec.workers, source, |stream| {
        let path = sim.simulate(stream)?;
        Ok(f(&path, stream))
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HolderReport {
    pub scheme: SchemeKind,
    pub steps: usize,
    pub num_paths: usize,
    pub p: f64,
    /// `(s, t)` pairs, longest lag first.
    pub lags: Vec<(f64, f64)>,
    /// `E|Z_t - Z_s|^p` for each pair.
    pub empirical_moments: Vec<f64>,
    pub fitted_slope: f64,
    /// `pH` with `H` the kernel's Hurst exponent.
    pub target: f64,
    pub deviation: f64,
}

/// Least-squares slope of `y` on `x`.
pub fn least_squares_slope(x: &[f64], y: &[f64]) -> f64 {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = x.iter().map(|a| (a - mx) * (a - mx)).sum();
    sxy / sxx
}

pub fn holder_scaling_report(
    params: &ModelParams,
    kernel: &Kernel,
    spec: &RunSpec,
    p: f64,
) -> Result<HolderReport> {
    let n = spec.steps;
    if !n.is_power_of_two() || n < 64 {
        return Err(Error::invalid("n", format!("must be a power of two >= 64, got {n}")));
    }
    if spec.num_paths < 1000 {
        return Err(Error::invalid("num_paths", "the Hölder regression needs at least 1000 paths"));
    }
    if !(p > 0.0) {
        return Err(Error::invalid("p", "must be positive"));
    }
    let anchor = n / 2;
    let ends: Vec<usize> = (1..=LAGS).map(|j| anchor + (n >> j)).collect();
    let per_path = for_each_path(params, kernel, spec, &keyed_streams, |path, _| {
        let z = match path {
            SchemePath::Volterra(v) => &v.v,
            SchemePath::Integrated(x) => &x.xbar,
        };
        ends.iter().map(|&k| (z[k] - z[anchor]).abs().powf(p)).collect::<Vec<f64>>()
    })?;
    let m = per_path.len() as f64;
    let empirical_moments: Vec<f64> = (0..ends.len())
        .map(|j| per_path.iter().map(|row| row[j]).sum::<f64>() / m)
        .collect();
    let grid = TimeGrid::uniform(n, params.horizon)?;
    let lags: Vec<(f64, f64)> = ends.iter().map(|&k| (grid.node(anchor), grid.node(k))).collect();
    let log_lag: Vec<f64> = lags.iter().map(|(s, t)| (t - s).ln()).collect();
    let log_moment: Vec<f64> = empirical_moments.iter().map(|v| v.ln()).collect();
    let fitted_slope = least_squares_slope(&log_lag, &log_moment);
    let target = p * kernel.hurst_exponent();
    Ok(HolderReport {
        scheme: spec.scheme,
        steps: n,
        num_paths: spec.num_paths,
        p,
        lags,
        empirical_moments,
        fitted_slope,
        target,
        deviation: fitted_slope - target,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InvariantReport {
    pub scheme: SchemeKind,
    pub steps: usize,
    pub num_paths: usize,
    /// Steps with `X̄_k < X̄_{k-1}`; only the integrated scheme carries `X̄`.
    pub xbar_violations: Option<usize>,
    /// Square roots taken of a negative number.
    pub negative_sqrt_arguments: usize,
    /// Values `V_k < 0`, `k >= 1`, over all paths (Volterra scheme only).
    pub negative_v_count: Option<usize>,
    pub negative_v_fraction: Option<f64>,
}

impl InvariantReport {
    /// The exact invariants hold.
    pub fn clean(&self) -> bool {
        self.xbar_violations.unwrap_or(0) == 0 && self.negative_sqrt_arguments == 0
    }
}

pub fn structural_invariant_sweep(
    params: &ModelParams,
    kernel: &Kernel,
    spec: &RunSpec,
) -> Result<InvariantReport> {
    let counts = for_each_path(params, kernel, spec, &keyed_streams, |path, _| match path {
        SchemePath::Volterra(v) => {
            // The scheme takes √((V)_+); recheck the argument it actually used.
            let bad_sqrt = v.v[..v.v.len() - 1].iter().filter(|x| x.max(0.0) < 0.0).count();
            let negative = v.v[1..].iter().filter(|&&x| x < 0.0).count();
            (0, bad_sqrt, negative)
        }
        SchemePath::Integrated(x) => {
            let mut decreases = 0;
            let mut bad_sqrt = 0;
            for k in 1..x.xbar.len() {
                let dq = x.xbar[k] - x.xbar[k - 1];
                if x.xbar[k] < x.xbar[k - 1] {
                    decreases += 1;
                }
                if dq < 0.0 {
                    bad_sqrt += 1;
                }
            }
            (decreases, bad_sqrt, 0)
        }
    })?;
    let (xbar, sqrt, negative) = counts
        .iter()
        .fold((0, 0, 0), |acc, c| (acc.0 + c.0, acc.1 + c.1, acc.2 + c.2));
    let samples = (spec.num_paths * spec.steps) as f64;
    let volterra = spec.scheme == SchemeKind::Volterra;
    Ok(InvariantReport {
        scheme: spec.scheme,
        steps: spec.steps,
        num_paths: spec.num_paths,
        xbar_violations: (!volterra).then_some(xbar),
        negative_sqrt_arguments: sqrt,
        negative_v_count: volterra.then_some(negative),
        negative_v_fraction: volterra.then_some(negative as f64 / samples),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MartingaleCheck {
    pub steps: usize,
    pub num_paths: usize,
    pub m: McEstimate,
    pub m_perp: McEstimate,
    pub z: f64,
    pub z_perp: f64,
    pub passed: bool,
}

fn z_score(e: &McEstimate) -> f64 {
    if e.stat_error > 0.0 {
        e.mean / e.stat_error
    } else if e.mean == 0.0 {
        0.0
    } else {
        f64::INFINITY.copysign(e.mean)
    }
}

/// z-scores of `M_T` and `M⊥_T` under the integrated scheme.
pub fn martingale_mean_check(
    params: &ModelParams,
    kernel: &Kernel,
    steps: usize,
    num_paths: usize,
    seed: u64,
    workers: Workers,
) -> Result<MartingaleCheck> {
    martingale_mean_check_with_source(params, kernel, steps, num_paths, seed, workers, &keyed_streams)
}

pub fn martingale_mean_check_with_source(
    params: &ModelParams,
    kernel: &Kernel,
    steps: usize,
    num_paths: usize,
    seed: u64,
    workers: Workers,
    source: &StreamSource,
) -> Result<MartingaleCheck> {
    let spec = RunSpec {
        scheme: SchemeKind::Integrated,
        steps,
        num_paths,
        seed,
        workers,
    };
    let ends = for_each_path(params, kernel, &spec, source, |path, _| match path {
        SchemePath::Integrated(x) => (x.m[steps], x.m_perp[steps]),
        SchemePath::Volterra(_) => unreachable!("the run is set to the integrated scheme"),
    })?;
    let (m, m_perp): (Vec<f64>, Vec<f64>) = ends.into_iter().unzip();
    let m = McEstimate::from_samples(&m, 0.0)?;
    let m_perp = McEstimate::from_samples(&m_perp, 0.0)?;
    let (z, z_perp) = (z_score(&m), z_score(&m_perp));
    Ok(MartingaleCheck {
        steps,
        num_paths,
        m,
        m_perp,
        z,
        z_perp,
        passed: z.abs() <= MARTINGALE_Z_LIMIT && z_perp.abs() <= MARTINGALE_Z_LIMIT,
    })
}

/// Keyed streams with every normal shifted by `shift`; a negative control
/// for [`martingale_mean_check_with_source`].
pub fn biased_streams(shift: f64) -> impl Fn(u64, u64, &TimeGrid) -> IncrementStream + Sync {
    move |seed, j, grid| {
        let base = IncrementStream::sample(seed, j, grid);
        let n = grid.steps();
        let z = (1..=n).map(|k| base.z(k) + shift).collect();
        let z_perp = (1..=n).map(|k| base.z_perp(k) + shift).collect();
        IncrementStream::from_normals(grid, z, z_perp).expect("lengths match the grid")
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MomentRow {
    pub steps: usize,
    /// `max_k E|Z_k|^p`
    pub sup_moment: f64,
}

/// `max_k E|Z_k|^p` (with `Z` as in [`holder_scaling_report`]) for each `n`.
///
/// A bounded sequence across `n` is the discrete face of the uniform moment
/// bounds of the schemes.
pub fn moment_stability(
    params: &ModelParams,
    kernel: &Kernel,
    scheme: SchemeKind,
    n_list: &[usize],
    num_paths: usize,
    seed: u64,
    p: f64,
) -> Result<Vec<MomentRow>> {
    let mut rows = Vec::with_capacity(n_list.len());
    for &n in n_list {
        let spec = RunSpec::new(scheme, n, num_paths, seed);
        let per_path = for_each_path(params, kernel, &spec, &keyed_streams, |path, _| {
            let z = match path {
                SchemePath::Volterra(v) => &v.v,
                SchemePath::Integrated(x) => &x.xbar,
            };
            z.iter().map(|v| v.abs().powf(p)).collect::<Vec<f64>>()
        })?;
        let m = per_path.len() as f64;
        let sup_moment = (0..=n)
            .map(|k| per_path.iter().map(|row| row[k]).sum::<f64>() / m)
            .fold(0.0, f64::max);
        rows.push(MomentRow { steps: n, sup_moment });
    }
    Ok(rows)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrendReport {
    pub scheme: SchemeKind,
    pub reference: f64,
    pub coarse_steps: usize,
    pub coarse_error: f64,
    pub fine_steps: usize,
    pub fine_error: f64,
    pub improved: bool,
}

/// Compare the coarsest and finest rows of each scheme against `reference`.
pub fn convergence_trend(rows: &[TableRow], reference: f64) -> Vec<TrendReport> {
    let mut out = Vec::new();
    for scheme in SchemeKind::ALL {
        let block: Vec<&TableRow> = rows.iter().filter(|r| r.scheme == scheme).collect();
        let (Some(coarse), Some(fine)) = (
            block.iter().min_by_key(|r| r.n),
            block.iter().max_by_key(|r| r.n),
        ) else {
            continue;
        };
        let coarse_error = (coarse.mean - reference).abs();
        let fine_error = (fine.mean - reference).abs();
        out.push(TrendReport {
            scheme,
            reference,
            coarse_steps: coarse.n,
            coarse_error,
            fine_steps: fine.n,
            fine_error,
            improved: fine_error < coarse_error,
        });
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn kernel() -> Kernel {
        Kernel::gamma_normalized(0.1).unwrap()
    }

    #[test]
    fn slope_of_a_line() {
        let x = [0.0, 1.0, 2.0, 3.0];
        let y: Vec<f64> = x.iter().map(|v| 0.7 * v - 2.0).collect();
        assert_abs_diff_eq!(least_squares_slope(&x, &y), 0.7, epsilon = 1e-14);
    }

    #[test]
    fn smooth_deterministic_path_has_slope_p() {
        // Constant kernel, ν = 0: V is an affine function of t.
        let k = Kernel::power_law(1.0, 0.5).unwrap();
        let params = ModelParams {
            nu: 0.0,
            lambda: 0.0,
            ..ModelParams::benchmark()
        };
        let r = holder_scaling_report(&params, &k, &RunSpec::new(SchemeKind::Volterra, 64, 1000, 0), 2.0).unwrap();
        assert_abs_diff_eq!(r.fitted_slope, 2.0, epsilon = 1e-9);
        assert_eq!(r.lags.len(), 6);
        assert!(r.lags.windows(2).all(|w| w[0].1 > w[1].1));
    }

    #[test]
    fn holder_preconditions() {
        let p = ModelParams::benchmark();
        assert!(holder_scaling_report(&p, &kernel(), &RunSpec::new(SchemeKind::Volterra, 100, 1000, 0), 2.0).is_err());
        assert!(holder_scaling_report(&p, &kernel(), &RunSpec::new(SchemeKind::Volterra, 64, 10, 0), 2.0).is_err());
    }

    #[test]
    fn deterministic_volterra_stays_nonnegative() {
        let params = ModelParams {
            nu: 0.0,
            ..ModelParams::benchmark()
        };
        let r = structural_invariant_sweep(&params, &kernel(), &RunSpec::new(SchemeKind::Volterra, 40, 20, 1)).unwrap();
        assert_eq!(r.negative_v_count, Some(0));
        assert!(r.clean());
        assert_eq!(r.xbar_violations, None);
    }

    #[test]
    fn integrated_sweep_is_clean_and_byte_stable() {
        let spec = RunSpec::new(SchemeKind::Integrated, 32, 200, 9);
        let a = structural_invariant_sweep(&ModelParams::benchmark(), &kernel(), &spec).unwrap();
        let b = structural_invariant_sweep(&ModelParams::benchmark(), &kernel(), &spec).unwrap();
        assert_eq!(a.xbar_violations, Some(0));
        assert!(a.clean());
        assert_eq!(serde_json::to_string(&a).unwrap(), serde_json::to_string(&b).unwrap());
    }

    #[test]
    fn zero_state_martingale_is_identically_zero() {
        let params = ModelParams {
            v0: 0.0,
            theta: 0.0,
            ..ModelParams::benchmark()
        };
        let c = martingale_mean_check(&params, &kernel(), 16, 100, 0, Workers::Auto).unwrap();
        assert_eq!(c.z, 0.0);
        assert_eq!(c.z_perp, 0.0);
        assert!(c.passed);
    }

    #[test]
    fn shifted_normals_are_flagged() {
        let source = biased_streams(0.5);
        let c = martingale_mean_check_with_source(&ModelParams::benchmark(), &kernel(), 16, 2000, 3, Workers::Auto, &source)
            .unwrap();
        assert!(!c.passed, "z = {}", c.z);
        let honest = martingale_mean_check(&ModelParams::benchmark(), &kernel(), 16, 2000, 3, Workers::Auto).unwrap();
        assert!(honest.passed, "z = {}", honest.z);
    }

    #[test]
    fn trend_compares_extreme_rows() {
        let row = |scheme, n, mean| TableRow {
            scheme,
            n,
            mean,
            stat_error: 0.0,
            ci_low: mean,
            ci_high: mean,
            wall_time_seconds: 0.0,
        };
        let rows = [
            row(SchemeKind::Volterra, 4, 0.03),
            row(SchemeKind::Volterra, 320, 0.0285),
            row(SchemeKind::Integrated, 4, 0.0282),
            row(SchemeKind::Integrated, 320, 0.0290),
        ];
        let t = convergence_trend(&rows, 0.028295);
        assert!(t[0].improved);
        assert!(!t[1].improved);
    }

    #[test]
    fn moments_are_reported_per_grid() {
        let rows = moment_stability(&ModelParams::benchmark(), &kernel(), SchemeKind::Integrated, &[8, 16], 50, 0, 2.0).unwrap();
        assert_eq!(rows.len(), 2);
        assert!(rows.iter().all(|r| r.sup_moment > 0.0 && r.sup_moment.is_finite()));
    }
}
