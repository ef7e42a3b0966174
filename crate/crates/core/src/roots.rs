//! Safeguarded Newton iteration on bracketing intervals.

#[allow(unused_imports)]
use num_traits::Float;

use crate::{Error, Result};

/// Finds the root of an increasing function inside `[lo, hi]`.
///
/// `f` returns `(value, derivative)`. The bracket must satisfy
/// `f(lo) <= 0 <= f(hi)`. Newton steps that leave the bracket fall back to
/// bisection.
pub(crate) fn solve_increasing<F>(f: F, mut lo: f64, mut hi: f64, xtol: f64) -> Result<f64>
where
    F: Fn(f64) -> (f64, f64),
{
    let (flo, _) = f(lo);
    let (fhi, _) = f(hi);
    if flo == 0.0 {
        return Ok(lo);
    }
    if fhi == 0.0 {
        return Ok(hi);
    }
    if !(flo < 0.0 && fhi > 0.0) {
        return Err(Error::Convergence("root is not bracketed"));
    }
    let mut x = 0.5 * (lo + hi);
    for _ in 0..300 {
        let (fx, dfx) = f(x);
        if fx == 0.0 {
            return Ok(x);
        }
        if fx < 0.0 {
            lo = x;
        } else {
            hi = x;
        }
        let newton = x - fx / dfx;
        let next = if dfx > 0.0 && newton > lo && newton < hi {
            newton
        } else {
            0.5 * (lo + hi)
        };
        let step = (next - x).abs();
        x = next;
        if step <= xtol * (1.0 + x.abs()) || hi - lo <= xtol * (1.0 + x.abs()) {
            return Ok(x);
        }
    }
    Err(Error::Convergence("Newton-bisection iteration limit"))
}

/// Expands `[start - 1, start + 1]` geometrically until `g` changes sign,
/// never going below `floor`. `g` must be increasing.
pub(crate) fn bracket_increasing<G>(g: G, start: f64, floor: f64) -> Option<(f64, f64)>
where
    G: Fn(f64) -> f64,
{
    let mut step = 1.0f64.max(start.abs() * 0.5);
    let mut hi = start;
    let mut k = 0;
    while !(g(hi) > 0.0) {
        hi += step;
        step *= 2.0;
        k += 1;
        if k > 200 || !hi.is_finite() {
            return None;
        }
    }
    let mut lo = start.min(hi);
    let mut step = 1.0f64.max(start.abs() * 0.5);
    k = 0;
    while !(g(lo) < 0.0) {
        if lo <= floor {
            return None;
        }
        lo = (lo - step).max(floor);
        step *= 2.0;
        k += 1;
        if k > 200 {
            return None;
        }
    }
    Some((lo, hi))
}
