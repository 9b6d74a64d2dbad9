//! Small numerical toolkit: adaptive Gauss–Kronrod quadrature, bracketed
//! bisection and golden-section minimisation.
//!
//! Tolerances follow one convention throughout the crate: roots are refined
//! to `1e-10` on the argument, minimisers to `1e-8`, and integrals target an
//! absolute error of `1e-8` with at most `10^6` integrand evaluations.

use thiserror::Error;

/// Absolute error target for [`integrate`].
pub const QUAD_ABS_TOL: f64 = 1e-8;
/// Relative error target for [`integrate`].
pub const QUAD_REL_TOL: f64 = 1e-10;
/// Hard cap on integrand evaluations per integral.
pub const QUAD_MAX_EVALS: usize = 1_000_000;
/// Argument tolerance for bisection.
pub const ROOT_TOL: f64 = 1e-10;
/// Argument tolerance for golden-section search.
pub const MIN_TOL: f64 = 1e-8;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum NumericsError {
    #[error("quadrature did not converge on [{lo}, {hi}] (estimate {value}, error {error})")]
    QuadratureNotConverged {
        lo: f64,
        hi: f64,
        value: f64,
        error: f64,
    },
    #[error("integrand is not finite at x = {0}")]
    NonFiniteIntegrand(f64),
    #[error("no sign change found while bracketing a root")]
    NoBracket,
    #[error("function is not finite at x = {0}")]
    NonFinite(f64),
}

// Kronrod 15-point nodes (non-negative half) and weights, with the embedded
// Gauss 7-point weights.
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
    0.022_935_322_010_529_22,
    0.063_092_092_629_978_55,
    0.104_790_010_322_250_2,
    0.140_653_259_715_525_9,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_727_8,
];
const WG: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_7,
    0.381_830_050_505_118_9,
    0.417_959_183_673_469_4,
];

fn gk15<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64) -> Result<(f64, f64), NumericsError> {
    let center = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    let fc = f(center);
    if !fc.is_finite() {
        return Err(NumericsError::NonFiniteIntegrand(center));
    }
    let mut kronrod = fc * WGK[7];
    let mut gauss = fc * WG[3];
    for (j, (&x, &wk)) in XGK.iter().zip(WGK.iter()).take(7).enumerate() {
        let dx = half * x;
        let f1 = f(center - dx);
        let f2 = f(center + dx);
        if !f1.is_finite() {
            return Err(NumericsError::NonFiniteIntegrand(center - dx));
        }
        if !f2.is_finite() {
            return Err(NumericsError::NonFiniteIntegrand(center + dx));
        }
        kronrod += wk * (f1 + f2);
        // odd Kronrod indices coincide with the Gauss nodes
        if j % 2 == 1 {
            gauss += WG[j / 2] * (f1 + f2);
        }
    }
    let value = kronrod * half;
    let error = ((kronrod - gauss) * half).abs();
    Ok((value, error))
}

/// Adaptive Gauss–Kronrod (7/15) integration of `f` over the finite interval
/// `[a, b]`.
pub fn integrate<F: Fn(f64) -> f64>(f: F, a: f64, b: f64) -> Result<f64, NumericsError> {
    integrate_with(f, a, b, QUAD_ABS_TOL, QUAD_REL_TOL)
}

/// [`integrate`] with explicit tolerances.
pub fn integrate_with<F: Fn(f64) -> f64>(
    f: F,
    a: f64,
    b: f64,
    abs_tol: f64,
    rel_tol: f64,
) -> Result<f64, NumericsError> {
    if a == b {
        return Ok(0.0);
    }
    if b < a {
        return integrate_with(f, b, a, abs_tol, rel_tol).map(|v| -v);
    }
    let (v0, e0) = gk15(&f, a, b)?;
    let mut intervals = vec![(a, b, v0, e0)];
    let mut total = v0;
    let mut total_err = e0;
    let mut evals = 15usize;
    while total_err > abs_tol.max(rel_tol * total.abs()) {
        if evals + 30 > QUAD_MAX_EVALS {
            return Err(NumericsError::QuadratureNotConverged {
                lo: a,
                hi: b,
                value: total,
                error: total_err,
            });
        }
        // split the interval with the largest error estimate
        let (idx, _) = intervals
            .iter()
            .enumerate()
            .max_by(|x, y| x.1 .3.total_cmp(&y.1 .3))
            .expect("interval list is never empty");
        let (lo, hi, v, e) = intervals.swap_remove(idx);
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            // interval can no longer be split in floating point
            intervals.push((lo, hi, v, 0.0));
            total_err -= e;
            continue;
        }
        let (v1, e1) = gk15(&f, lo, mid)?;
        let (v2, e2) = gk15(&f, mid, hi)?;
        evals += 30;
        total += v1 + v2 - v;
        total_err += e1 + e2 - e;
        intervals.push((lo, mid, v1, e1));
        intervals.push((mid, hi, v2, e2));
        if total_err < 0.0 {
            total_err = intervals.iter().map(|i| i.3).sum();
        }
    }
    // resum to avoid drift from incremental updates
    Ok(intervals.iter().map(|i| i.2).sum())
}

/// Integral of `f` over `[a, ∞)` via the substitution `x = a + t/(1-t)`.
pub fn integrate_to_infinity<F: Fn(f64) -> f64>(f: F, a: f64) -> Result<f64, NumericsError> {
    integrate(
        |t| {
            if t >= 1.0 {
                return 0.0;
            }
            let s = 1.0 - t;
            let v = f(a + t / s) / (s * s);
            if v.is_finite() {
                v
            } else {
                0.0
            }
        },
        0.0,
        1.0,
    )
}

/// Finds a root of `f` in `[lo, hi]` by bisection. The endpoints must
/// bracket a sign change.
pub fn bisect<F: Fn(f64) -> f64>(f: F, mut lo: f64, mut hi: f64, tol: f64) -> Result<f64, NumericsError> {
    let mut flo = f(lo);
    let fhi = f(hi);
    if flo.is_nan() {
        return Err(NumericsError::NonFinite(lo));
    }
    if fhi.is_nan() {
        return Err(NumericsError::NonFinite(hi));
    }
    if flo == 0.0 {
        return Ok(lo);
    }
    if fhi == 0.0 {
        return Ok(hi);
    }
    if flo.signum() == fhi.signum() {
        return Err(NumericsError::NoBracket);
    }
    for _ in 0..400 {
        let mid = 0.5 * (lo + hi);
        if (hi - lo).abs() <= tol || mid == lo || mid == hi {
            return Ok(mid);
        }
        let fm = f(mid);
        if fm.is_nan() {
            return Err(NumericsError::NonFinite(mid));
        }
        if fm == 0.0 {
            return Ok(mid);
        }
        if fm.signum() == flo.signum() {
            lo = mid;
            flo = fm;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// Expands `[start, start + step]` geometrically to the right until `f`
/// changes sign, then bisects. `max_hi` bounds the search.
pub fn find_root_right<F: Fn(f64) -> f64>(
    f: F,
    start: f64,
    step: f64,
    max_hi: f64,
) -> Result<f64, NumericsError> {
    let f0 = f(start);
    if f0 == 0.0 {
        return Ok(start);
    }
    let mut lo = start;
    let mut width = step;
    loop {
        let hi = (start + width).min(max_hi);
        let fh = f(hi);
        if !fh.is_nan() && (fh == 0.0 || fh.signum() != f0.signum()) {
            return bisect(&f, lo, hi, ROOT_TOL);
        }
        if hi >= max_hi {
            return Err(NumericsError::NoBracket);
        }
        lo = hi;
        width *= 2.0;
    }
}

/// Golden-section search for the minimum of a unimodal `f` on `[a, b]`.
/// Returns `(argmin, min)`; non-finite values are treated as `+∞`.
pub fn golden_min<F: Fn(f64) -> f64>(f: F, mut a: f64, mut b: f64, tol: f64) -> (f64, f64) {
    let eval = |x: f64| {
        let v = f(x);
        if v.is_nan() {
            f64::INFINITY
        } else {
            v
        }
    };
    let inv_phi = (5f64.sqrt() - 1.0) / 2.0;
    let mut c = b - inv_phi * (b - a);
    let mut d = a + inv_phi * (b - a);
    let mut fc = eval(c);
    let mut fd = eval(d);
    while (b - a).abs() > tol {
        if fc <= fd {
            b = d;
            d = c;
            fd = fc;
            c = b - inv_phi * (b - a);
            fc = eval(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + inv_phi * (b - a);
            fd = eval(d);
        }
    }
    // the endpoints may beat the interior for monotone functions
    let mut best = (0.5 * (a + b), eval(0.5 * (a + b)));
    for x in [a, b] {
        let v = eval(x);
        if v < best.1 {
            best = (x, v);
        }
    }
    best
}

/// Standard normal CDF.
pub fn norm_cdf(z: f64) -> f64 {
    0.5 * statrs::function::erf::erfc(-z / std::f64::consts::SQRT_2)
}

/// Standard normal upper tail `1 - Φ(z)`, accurate for large `z`.
pub fn norm_sf(z: f64) -> f64 {
    0.5 * statrs::function::erf::erfc(z / std::f64::consts::SQRT_2)
}

/// Standard normal density.
pub fn norm_pdf(z: f64) -> f64 {
    (-0.5 * z * z).exp() / (2.0 * std::f64::consts::PI).sqrt()
}
