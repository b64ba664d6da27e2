//! Adaptive Gauss–Kronrod (7/15) quadrature.
//!
//! Kernel integrals near the origin behave like `r^(H - 1/2)`; those are
//! handled by [`integrate_left_singular`], which maps `s = a + (b - a) u^(1/γ)`
//! so that an integrand of order `(s - a)^(γ - 1)` becomes smooth in `u`.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use crate::error::{Error, Result};

const XGK: [f64; 8] = [
    0.991_455_371_120_812_639_206_854_697_526_329,
    0.949_107_912_342_758_524_526_189_684_047_851,
    0.864_864_423_359_769_072_789_712_788_640_926,
    0.741_531_185_599_394_439_863_864_773_280_788,
    0.586_087_235_467_691_130_294_144_845_693_013,
    0.405_845_151_377_397_166_906_606_412_076_961,
    0.207_784_955_007_898_467_600_689_403_773_245,
    0.0,
];

const WGK: [f64; 8] = [
    0.022_935_322_010_529_224_963_732_008_058_970,
    0.063_092_092_629_978_553_290_700_663_189_204,
    0.104_790_010_322_250_183_839_876_322_541_518,
    0.140_653_259_715_525_918_745_189_590_510_238,
    0.169_004_726_639_267_902_826_583_426_598_550,
    0.190_350_578_064_785_409_913_256_402_421_014,
    0.204_432_940_075_298_892_414_161_999_234_649,
    0.209_482_141_084_727_828_012_999_174_891_714,
];

// Gauss weights for the odd-indexed Kronrod nodes (1, 3, 5, 7).
const WG: [f64; 4] = [
    0.129_484_966_168_869_693_270_611_432_679_082,
    0.279_705_391_489_276_667_901_467_771_423_780,
    0.381_830_050_505_118_944_950_369_775_488_975,
    0.417_959_183_673_469_387_755_102_040_816_327,
];

const MAX_INTERVALS: usize = 4000;

/// The 15 abscissae of the Kronrod rule mapped onto `[a, b]`.
pub(crate) fn gk15_nodes(a: f64, b: f64) -> [f64; 15] {
    let center = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    let mut out = [0.0; 15];
    for j in 0..7 {
        out[2 * j] = center - half * XGK[j];
        out[2 * j + 1] = center + half * XGK[j];
    }
    out[14] = center;
    out
}

/// One panel of the Kronrod rule: integral, error estimate and the integral of |f|.
#[derive(Debug, Clone, Copy)]
pub(crate) struct Panel {
    pub a: f64,
    pub b: f64,
    pub value: f64,
    pub error: f64,
    pub abs_value: f64,
}

/// Combine function values at [`gk15_nodes`] into a panel estimate.
pub(crate) fn gk15_combine(a: f64, b: f64, f: &[f64; 15]) -> Panel {
    let half = 0.5 * (b - a);
    let mut kronrod = WGK[7] * f[14];
    let mut gauss = WG[3] * f[14];
    let mut abs_value = WGK[7] * f[14].abs();
    for j in 0..7 {
        let pair = f[2 * j] + f[2 * j + 1];
        kronrod += WGK[j] * pair;
        abs_value += WGK[j] * (f[2 * j].abs() + f[2 * j + 1].abs());
        if j % 2 == 1 {
            gauss += WG[j / 2] * pair;
        }
    }
    Panel {
        a,
        b,
        value: kronrod * half,
        error: ((kronrod - gauss) * half).abs(),
        abs_value: abs_value * half.abs(),
    }
}

fn gk15<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64) -> Panel {
    let nodes = gk15_nodes(a, b);
    let values = nodes.map(f);
    gk15_combine(a, b, &values)
}

struct Queued(Panel);

impl PartialEq for Queued {
    fn eq(&self, other: &Self) -> bool {
        self.0.error == other.0.error
    }
}
impl Eq for Queued {}
impl PartialOrd for Queued {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Queued {
    fn cmp(&self, other: &Self) -> Ordering {
        self.0.error.total_cmp(&other.0.error)
    }
}

/// Globally adaptive integration of `f` over `[a, b]`.
///
/// Bisects the panel with the largest error estimate until the summed
/// estimate drops below `abs_tol`.
pub fn integrate<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, abs_tol: f64) -> Result<f64> {
    if a == b {
        return Ok(0.0);
    }
    let first = gk15(&f, a, b);
    let mut total = first.value;
    let mut total_err = first.error;
    let mut heap = BinaryHeap::new();
    heap.push(Queued(first));
    while total_err > abs_tol {
        if heap.len() >= MAX_INTERVALS {
            return Err(Error::Quadrature {
                a,
                b,
                tolerance: abs_tol,
                estimate: total_err,
            });
        }
        let Queued(worst) = heap.pop().expect("heap is never empty");
        let mid = 0.5 * (worst.a + worst.b);
        let left = gk15(&f, worst.a, mid);
        let right = gk15(&f, mid, worst.b);
        total += left.value + right.value - worst.value;
        total_err += left.error + right.error - worst.error;
        if !total.is_finite() {
            return Err(Error::Quadrature {
                a,
                b,
                tolerance: abs_tol,
                estimate: f64::INFINITY,
            });
        }
        heap.push(Queued(left));
        heap.push(Queued(right));
    }
    // Re-sum to shed the drift of the running updates.
    Ok(heap.iter().map(|q| q.0.value).sum())
}

/// Integrate `f` over `[a, b]` when `f(s)` behaves like `(s - a)^(gamma - 1)`
/// near the left endpoint (`gamma > 0`).
pub fn integrate_left_singular<F: Fn(f64) -> f64>(
    f: F,
    a: f64,
    b: f64,
    gamma: f64,
    abs_tol: f64,
) -> Result<f64> {
    debug_assert!(gamma > 0.0);
    if a == b {
        return Ok(0.0);
    }
    let width = b - a;
    let inv = 1.0 / gamma;
    integrate(
        |u: f64| {
            if u <= 0.0 {
                return 0.0;
            }
            let s = a + width * u.powf(inv);
            f(s) * width * inv * u.powf(inv - 1.0)
        },
        0.0,
        1.0,
        abs_tol,
    )
}

/// Same as [`integrate_left_singular`] with the singularity at the right endpoint.
///
/// `f` receives `s` together with the distance `b - s`, computed without
/// cancellation, so the singular factor can be evaluated from the distance.
pub fn integrate_right_singular<F: Fn(f64, f64) -> f64>(
    f: F,
    a: f64,
    b: f64,
    gamma: f64,
    abs_tol: f64,
) -> Result<f64> {
    debug_assert!(gamma > 0.0);
    if a == b {
        return Ok(0.0);
    }
    let width = b - a;
    let inv = 1.0 / gamma;
    integrate(
        |u: f64| {
            if u <= 0.0 {
                return 0.0;
            }
            let d = width * u.powf(inv);
            f(b - d, d) * width * inv * u.powf(inv - 1.0)
        },
        0.0,
        1.0,
        abs_tol,
    )
}
