//! Scalar root finding and convex line minimization.

use crate::error::{Error, Result};

/// Outcome of a bracketed root search.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Root {
    pub x: f64,
    pub residual: f64,
    pub iterations: usize,
}

/// Safeguarded Newton iteration inside a sign-change bracket.
///
/// Each step tries Newton from the current iterate and falls back to
/// bisection whenever the Newton step leaves the bracket or fails to halve
/// it. Stops once `|f(x)| <= f_tol` or the bracket collapses to adjacent
/// floats.
pub fn newton_bisect<F, D>(f: F, df: D, lo: f64, hi: f64, f_tol: f64) -> Result<Root>
where
    F: Fn(f64) -> f64,
    D: Fn(f64) -> f64,
{
    let (mut lo, mut hi) = (lo.min(hi), lo.max(hi));
    let (flo, fhi) = (f(lo), f(hi));
    if flo == 0.0 {
        return Ok(Root {
            x: lo,
            residual: 0.0,
            iterations: 0,
        });
    }
    if fhi == 0.0 {
        return Ok(Root {
            x: hi,
            residual: 0.0,
            iterations: 0,
        });
    }
    if flo.signum() == fhi.signum() || flo.is_nan() || fhi.is_nan() {
        return Err(Error::NoBracket { lo, hi });
    }
    // orient so that f(neg) < 0 < f(pos)
    let lo_negative = flo < 0.0;
    let mut x = 0.5 * (lo + hi);
    let mut best = (x, f64::INFINITY);
    let mut prev_fx = f64::INFINITY;
    for it in 1..=500 {
        let fx = f(x);
        if fx.abs() < best.1.abs() {
            best = (x, fx);
        }
        if fx.abs() <= f_tol {
            return Ok(Root {
                x,
                residual: fx,
                iterations: it,
            });
        }
        if (fx < 0.0) == lo_negative {
            lo = x;
        } else {
            hi = x;
        }
        let width = hi - lo;
        if width <= f64::EPSILON * x.abs().max(f64::MIN_POSITIVE) * 2.0 {
            break;
        }
        let dfx = df(x);
        let newton = x - fx / dfx;
        let contracting = fx.abs() <= 0.5 * prev_fx.abs();
        x = if dfx.is_finite() && dfx != 0.0 && newton > lo && newton < hi && contracting {
            newton
        } else {
            0.5 * (lo + hi)
        };
        prev_fx = fx;
    }
    Ok(Root {
        x: best.0,
        residual: best.1,
        iterations: 500,
    })
}

/// Golden-section minimization of a unimodal function on `[lo, hi]`.
pub fn golden_section<F: Fn(f64) -> f64>(f: F, lo: f64, hi: f64, x_tol: f64) -> (f64, f64) {
    const INV_PHI: f64 = 0.618_033_988_749_894_9;
    let (mut a, mut b) = (lo, hi);
    let mut c = b - INV_PHI * (b - a);
    let mut d = a + INV_PHI * (b - a);
    let (mut fc, mut fd) = (f(c), f(d));
    while (b - a).abs() > x_tol {
        if fc <= fd {
            b = d;
            d = c;
            fd = fc;
            c = b - INV_PHI * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + INV_PHI * (b - a);
            fd = f(d);
        }
    }
    let candidates = [(a, f(a)), (b, f(b)), (c, fc), (d, fd)];
    candidates
        .into_iter()
        .min_by(|x, y| x.1.total_cmp(&y.1))
        .expect("nonempty")
}
