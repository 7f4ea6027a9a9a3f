//! Numerical integration and monotone root finding.
//!
//! * [`adaptive`]: globally adaptive Gauss–Kronrod (7/15) with bisection of the
//!   interval carrying the largest error estimate.
//! * [`GAUSS3`], [`GAUSS5`]: fixed Gauss–Legendre rules used cell by cell on
//!   piecewise-linear reconstructions.
//! * [`simpson_samples`]: composite Simpson over (possibly uneven) samples.
//! * [`bisect_increasing`]: inversion of a monotone function.

use alloc::vec::Vec;

use crate::{Error, Result};

/// Abscissae of the 15-point Kronrod rule on `[-1, 1]` (non-negative half).
const XGK: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_4,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_5,
    0.0,
];

const WGK: [f64; 8] = [
    0.022_935_322_010_529_225,
    0.063_092_092_629_978_55,
    0.104_790_010_322_250_18,
    0.140_653_259_715_525_92,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_727_83,
];

/// 7-point Gauss weights, attached to `XGK[1]`, `XGK[3]`, `XGK[5]`, `XGK[7]`.
const WG: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_7,
    0.381_830_050_505_118_9,
    0.417_959_183_673_469_4,
];

/// Gauss–Legendre rule as `(nodes, weights)` on `[-1, 1]`.
pub type GaussRule<const N: usize> = ([f64; N], [f64; N]);

pub const GAUSS3: GaussRule<3> = (
    [-0.774_596_669_241_483_4, 0.0, 0.774_596_669_241_483_4],
    [5.0 / 9.0, 8.0 / 9.0, 5.0 / 9.0],
);

pub const GAUSS5: GaussRule<5> = (
    [
        -0.906_179_845_938_664,
        -0.538_469_310_105_683_1,
        0.0,
        0.538_469_310_105_683_1,
        0.906_179_845_938_664,
    ],
    [
        0.236_926_885_056_189_1,
        0.478_628_670_499_366_5,
        0.568_888_888_888_888_9,
        0.478_628_670_499_366_5,
        0.236_926_885_056_189_1,
    ],
);

/// Applies a fixed Gauss rule to `f` on `[a, b]`.
pub fn gauss<const N: usize, F: FnMut(f64) -> f64>(rule: &GaussRule<N>, a: f64, b: f64, mut f: F) -> f64 {
    let half = 0.5 * (b - a);
    let mid = 0.5 * (a + b);
    let mut acc = 0.0;
    for k in 0..N {
        acc += rule.1[k] * f(mid + half * rule.0[k]);
    }
    acc * half
}

/// Tolerances for [`adaptive`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadTol {
    pub rel: f64,
    pub abs: f64,
    /// Upper bound on the number of subintervals kept in the work list.
    pub max_intervals: usize,
}

impl Default for QuadTol {
    fn default() -> Self {
        QuadTol { rel: 1e-10, abs: 1e-14, max_intervals: 4000 }
    }
}

/// Value and error estimate returned by [`adaptive`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Quad {
    pub value: f64,
    pub error: f64,
    pub evaluations: usize,
}

struct Segment {
    a: f64,
    b: f64,
    value: f64,
    error: f64,
}

fn kronrod<F: FnMut(f64) -> f64>(f: &mut F, a: f64, b: f64) -> (f64, f64) {
    let half = 0.5 * (b - a);
    let mid = 0.5 * (a + b);
    let fc = f(mid);
    let mut resk = WGK[7] * fc;
    let mut resg = WG[3] * fc;
    for j in 0..7 {
        let dx = half * XGK[j];
        let pair = f(mid - dx) + f(mid + dx);
        resk += WGK[j] * pair;
        if j % 2 == 1 {
            resg += WG[j / 2] * pair;
        }
    }
    (resk * half, ((resk - resg) * half).abs())
}

/// Integrates `f` over `[a, b]` (either orientation) to the requested
/// tolerance. A non-finite integrand value is reported as
/// [`Error::Divergent`].
pub fn adaptive<F: FnMut(f64) -> f64>(mut f: F, a: f64, b: f64, tol: QuadTol) -> Result<Quad> {
    if a == b {
        return Ok(Quad { value: 0.0, error: 0.0, evaluations: 0 });
    }
    let (value, error) = kronrod(&mut f, a, b);
    let mut evaluations = 15;
    let mut segments = Vec::with_capacity(64);
    segments.push(Segment { a, b, value, error });
    let mut total = value;
    let mut total_err = error;
    loop {
        if !total.is_finite() || !total_err.is_finite() {
            return Err(Error::Divergent { what: "integrand", at: b });
        }
        if total_err <= tol.abs.max(tol.rel * total.abs()) {
            break;
        }
        if segments.len() >= tol.max_intervals {
            return Err(Error::QuadratureNotConverged {
                achieved_error: total_err,
                requested: tol.abs.max(tol.rel * total.abs()),
            });
        }
        // split the worst segment
        let (worst, _) = segments
            .iter()
            .enumerate()
            .fold((0, f64::NEG_INFINITY), |best, (k, s)| if s.error > best.1 { (k, s.error) } else { best });
        let seg = segments.swap_remove(worst);
        let mid = 0.5 * (seg.a + seg.b);
        if mid == seg.a || mid == seg.b {
            return Err(Error::QuadratureNotConverged {
                achieved_error: total_err,
                requested: tol.abs.max(tol.rel * total.abs()),
            });
        }
        let (v1, e1) = kronrod(&mut f, seg.a, mid);
        let (v2, e2) = kronrod(&mut f, mid, seg.b);
        evaluations += 30;
        segments.push(Segment { a: seg.a, b: mid, value: v1, error: e1 });
        segments.push(Segment { a: mid, b: seg.b, value: v2, error: e2 });
        // re-sum to avoid drift from repeated subtraction
        total = segments.iter().map(|s| s.value).sum();
        total_err = segments.iter().map(|s| s.error).sum();
    }
    Ok(Quad { value: total, error: total_err, evaluations })
}

/// Composite Simpson rule over samples `(t_k, y_k)` with strictly increasing
/// but possibly uneven abscissae. Pairs of intervals use the three-point
/// quadratic rule; a trailing odd interval is closed with the quadratic
/// through the last three samples. Fewer than three samples fall back to
/// the trapezoid rule.
pub fn simpson_samples(t: &[f64], y: &[f64]) -> f64 {
    debug_assert_eq!(t.len(), y.len());
    let n = t.len();
    if n < 2 {
        return 0.0;
    }
    if n == 2 {
        return 0.5 * (t[1] - t[0]) * (y[0] + y[1]);
    }
    let intervals = n - 1;
    let paired = intervals - intervals % 2;
    let mut acc = 0.0;
    let mut k = 0;
    while k < paired {
        acc += simpson_pair(t[k], t[k + 1], t[k + 2], y[k], y[k + 1], y[k + 2]);
        k += 2;
    }
    if intervals % 2 == 1 {
        // last interval [t_{n-2}, t_{n-1}] from the parabola through the last three points
        let (t0, t1, t2) = (t[n - 3], t[n - 2], t[n - 1]);
        let (y0, y1, y2) = (y[n - 3], y[n - 2], y[n - 1]);
        let h1 = t1 - t0;
        let h2 = t2 - t1;
        // integral over [t1, t2] of the Lagrange quadratic
        let w0 = -h2 * h2 * h2 / (6.0 * h1 * (h1 + h2));
        let w1 = h2 * (h2 + 3.0 * h1) / (6.0 * h1);
        let w2 = h2 * (2.0 * h2 + 3.0 * h1) / (6.0 * (h1 + h2));
        acc += w0 * y0 + w1 * y1 + w2 * y2;
    }
    acc
}

fn simpson_pair(t0: f64, t1: f64, t2: f64, y0: f64, y1: f64, y2: f64) -> f64 {
    let h0 = t1 - t0;
    let h1 = t2 - t1;
    let hs = h0 + h1;
    let w0 = hs * (2.0 * h0 - h1) / (6.0 * h0);
    let w1 = hs * hs * hs / (6.0 * h0 * h1);
    let w2 = hs * (2.0 * h1 - h0) / (6.0 * h1);
    w0 * y0 + w1 * y1 + w2 * y2
}

/// Solves `f(x) = target` for nondecreasing `f` on `[lo, hi]` by bisection,
/// stopping once the bracket is narrower than `rel_tol · x`.
///
/// Works in the logarithm of `x` when both bounds are positive so that
/// brackets spanning many decades converge in a bounded number of steps.
pub fn bisect_increasing<F: FnMut(f64) -> Result<f64>>(
    mut f: F,
    mut lo: f64,
    mut hi: f64,
    target: f64,
    rel_tol: f64,
) -> Result<f64> {
    let flo = f(lo)?;
    let fhi = f(hi)?;
    if !(flo <= target && target <= fhi) {
        return Err(Error::NoBracket { what: "monotone inverse", target });
    }
    if flo == target {
        return Ok(lo);
    }
    if fhi == target {
        return Ok(hi);
    }
    let geometric = lo > 0.0;
    for _ in 0..400 {
        if hi - lo <= rel_tol * hi.abs().max(lo.abs()) {
            break;
        }
        let mid = if geometric && hi / lo > 4.0 { crate::fmath::sqrt(lo) * crate::fmath::sqrt(hi) } else { 0.5 * (lo + hi) };
        if mid <= lo || mid >= hi {
            break;
        }
        if f(mid)? < target {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}
