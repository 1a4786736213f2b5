//! Adaptive Simpson quadrature with Richardson correction.

use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum NumericError {
    #[error("integral over [{a}, {b}] did not converge within depth {depth}")]
    NonConvergent { a: f64, b: f64, depth: u32 },
    #[error("integrand is not finite at {0}")]
    NonFinite(f64),
}

const MAX_DEPTH: u32 = 50;

/// Integrate `f` over `[a, b]`, splitting panels until each meets an
/// absolute error estimate of `tol` (halved at each split).
pub fn adaptive_simpson(f: impl Fn(f64) -> f64, a: f64, b: f64, tol: f64) -> Result<f64, NumericError> {
    if a == b {
        return Ok(0.0);
    }
    let eval = |x: f64| {
        let v = f(x);
        if v.is_finite() {
            Ok(v)
        } else {
            Err(NumericError::NonFinite(x))
        }
    };
    let (fa, fb) = (eval(a)?, eval(b)?);
    let mid = 0.5 * (a + b);
    let fm = eval(mid)?;
    let whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
    refine(&eval, a, b, fa, fm, fb, whole, tol, MAX_DEPTH)
}

#[allow(clippy::too_many_arguments)]
fn refine(
    f: &impl Fn(f64) -> Result<f64, NumericError>,
    a: f64,
    b: f64,
    fa: f64,
    fm: f64,
    fb: f64,
    whole: f64,
    tol: f64,
    depth: u32,
) -> Result<f64, NumericError> {
    let m = 0.5 * (a + b);
    let (lm, rm) = (0.5 * (a + m), 0.5 * (m + b));
    let (flm, frm) = (f(lm)?, f(rm)?);
    let left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
    let right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
    let delta = left + right - whole;
    if delta.abs() <= 15.0 * tol {
        return Ok(left + right + delta / 15.0);
    }
    if depth == 0 || m <= a || m >= b {
        return Err(NumericError::NonConvergent { a, b, depth: MAX_DEPTH });
    }
    Ok(refine(f, a, m, fa, flm, fm, left, tol / 2.0, depth - 1)?
        + refine(f, m, b, fm, frm, fb, right, tol / 2.0, depth - 1)?)
}

/// Integrate piecewise over consecutive breakpoints so that kinks and jumps
/// sit on panel edges. `points` must be sorted. Each panel is sampled one
/// ulp inside its edges, so a jump exactly on a breakpoint is harmless.
pub fn integrate_piecewise(
    f: impl Fn(f64) -> f64,
    points: &[f64],
    tol: f64,
) -> Result<f64, NumericError> {
    let mut total = 0.0;
    for w in points.windows(2) {
        if w[1] > w[0] {
            let (lo, hi) = (w[0].next_up(), w[1].next_down());
            total += adaptive_simpson(|x| f(x.clamp(lo, hi)), w[0], w[1], tol)?;
        }
    }
    Ok(total)
}
