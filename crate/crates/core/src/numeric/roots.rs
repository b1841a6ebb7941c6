//! Bracketing root finder (Brent's method) plus bracket expansion.

use crate::error::{ImError, Result};

const MAX_ITER: usize = 200;

/// Finds a root of `f` in `[lo, hi]` by Brent's method.
///
/// Requires `f(lo) * f(hi) <= 0`. Terminates when the bracket is narrower
/// than `tol` (plus a few ulps of the iterate) or `|f| <= tol`.
pub fn find_root<F: Fn(f64) -> f64>(f: F, lo: f64, hi: f64, tol: f64) -> Result<f64> {
    let mut a = lo;
    let mut b = hi;
    let mut fa = f(a);
    let mut fb = f(b);
    if fa == 0.0 {
        return Ok(a);
    }
    if fb == 0.0 {
        return Ok(b);
    }
    if fa.is_nan() || fb.is_nan() || fa.signum() == fb.signum() {
        return Err(ImError::NoBracket {
            lo,
            hi,
            f_lo: fa,
            f_hi: fb,
        });
    }

    let mut c = a;
    let mut fc = fa;
    let mut d = b - a;
    let mut e = d;

    for _ in 0..MAX_ITER {
        if fb.signum() == fc.signum() {
            c = a;
            fc = fa;
            d = b - a;
            e = d;
        }
        if fc.abs() < fb.abs() {
            a = b;
            b = c;
            c = a;
            fa = fb;
            fb = fc;
            fc = fa;
        }
        let tol1 = 2.0 * f64::EPSILON * b.abs() + 0.5 * tol;
        let xm = 0.5 * (c - b);
        if xm.abs() <= tol1 || fb == 0.0 || fb.abs() <= tol * 1e-6 {
            return Ok(b);
        }
        if e.abs() >= tol1 && fa.abs() > fb.abs() {
            // Inverse quadratic interpolation, or secant when only two points differ.
            let s = fb / fa;
            let (mut p, mut q);
            if a == c {
                p = 2.0 * xm * s;
                q = 1.0 - s;
            } else {
                let qa = fa / fc;
                let r = fb / fc;
                p = s * (2.0 * xm * qa * (qa - r) - (b - a) * (r - 1.0));
                q = (qa - 1.0) * (r - 1.0) * (s - 1.0);
            }
            if p > 0.0 {
                q = -q;
            }
            p = p.abs();
            let min1 = 3.0 * xm * q - (tol1 * q).abs();
            let min2 = (e * q).abs();
            if 2.0 * p < min1.min(min2) {
                e = d;
                d = p / q;
            } else {
                d = xm;
                e = d;
            }
        } else {
            d = xm;
            e = d;
        }
        a = b;
        fa = fb;
        b += if d.abs() > tol1 { d } else { tol1.copysign(xm) };
        fb = f(b);
        if fb.is_nan() {
            return Err(ImError::Domain(format!("root function returned NaN at {b}")));
        }
    }
    Err(ImError::RootIterations(MAX_ITER))
}

/// Widens `[lo, hi]` geometrically until `f` changes sign, clamping at `floor`/`ceiling`.
pub fn expand_bracket<F: Fn(f64) -> f64>(
    f: F,
    mut lo: f64,
    mut hi: f64,
    floor: f64,
    ceiling: f64,
) -> Result<(f64, f64)> {
    let mut f_lo = f(lo);
    let mut f_hi = f(hi);
    for _ in 0..200 {
        if f_lo.signum() != f_hi.signum() || f_lo == 0.0 || f_hi == 0.0 {
            return Ok((lo, hi));
        }
        let width = (hi - lo).max(1.0);
        if f_lo.abs() < f_hi.abs() && lo > floor {
            lo = (lo - width).max(floor);
            f_lo = f(lo);
        } else if hi < ceiling {
            hi = (hi + width).min(ceiling);
            f_hi = f(hi);
        } else if lo > floor {
            lo = (lo - width).max(floor);
            f_lo = f(lo);
        } else {
            break;
        }
    }
    Err(ImError::NoBracket { lo, hi, f_lo, f_hi })
}
