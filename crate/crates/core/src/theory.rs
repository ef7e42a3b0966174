//! Frontier, critical order and moment approximations.
//!
//! With `f(y) = q y - h(y) + ln h'(y)` the moment is `E X^q = ∫ e^{f(y)} dy`.
//! Its mode `y*(q)` solves `q = h' - h''/h'`, and the typical sample only
//! reaches `y†(n)` with `h(y†) = ln n`. The two meet at `q_c(n)`.

#[allow(unused_imports)]
use num_traits::Float;

use crate::quadrature::integrate;
use crate::roots::{bracket_increasing, solve_increasing};
use crate::special::LN_SQRT_2PI;
use crate::{Error, Result, Tail};

/// Relative margin subtracted from the exponent of the validity ceiling `q_M`.
pub const Q_M_EPSILON: f64 = 0.1;

// Cut the integrand once it falls this far (in log) below its maximum.
const LOG_CUTOFF: f64 = 60.0;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CriticalCurve {
    /// Sample size; real so that effective sizes can be used.
    pub n: f64,
    pub y_dagger: f64,
    pub theta: f64,
    pub rho_l_at_dagger: f64,
    /// `h'(y†) - h''(y†)/h'(y†)`.
    pub qc_exact: f64,
    /// `rho_l(y†) theta`, the estimator target.
    pub qc_approx: f64,
    /// `(ln n)^(2 - 1/rho - eps)`, beyond which the linearization argument
    /// is not claimed to hold.
    pub q_m: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum MomentMethod {
    Quadrature,
    SaddlePoint,
    Truncated,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MomentValue {
    pub q: f64,
    /// Natural log of the moment.
    pub log_value: f64,
    pub method: MomentMethod,
}

fn check_n(n: f64) -> Result<f64> {
    if !(n >= 2.0) || !n.is_finite() {
        return Err(Error::Domain { what: "n", value: n });
    }
    Ok(n.ln())
}

fn check_q(q: f64) -> Result<()> {
    if !(q > 0.0) || !q.is_finite() {
        return Err(Error::Domain { what: "q", value: q });
    }
    Ok(())
}

/// Solves `h(y) = ln n`.
pub fn y_dagger<T: Tail + ?Sized>(model: &T, n: f64) -> Result<f64> {
    y_dagger_ln(model, check_n(n)?)
}

/// [`y_dagger`] with `ln n` given directly, for sizes beyond `f64` range.
pub fn y_dagger_ln<T: Tail + ?Sized>(model: &T, ln_n: f64) -> Result<f64> {
    if !(ln_n > 0.0) || !ln_n.is_finite() {
        return Err(Error::Domain { what: "ln n", value: ln_n });
    }
    let mut y = model.inverse_h(ln_n)?;
    let resid = model.h(y)? - ln_n;
    if resid != 0.0 {
        let polished = y - resid / model.h_prime(y)?;
        if let Ok(r2) = model.h(polished) {
            if (r2 - ln_n).abs() < resid.abs() {
                y = polished;
            }
        }
    }
    if (model.h(y)? - ln_n).abs() > 1e-10 * ln_n {
        return Err(Error::Convergence("h(y) = ln n not met to tolerance"));
    }
    Ok(y)
}

/// `ln n / y†(n)`.
pub fn theta<T: Tail + ?Sized>(model: &T, n: f64) -> Result<f64> {
    let ln_n = check_n(n)?;
    Ok(ln_n / y_dagger_ln(model, ln_n)?)
}

/// `h'(y) - h''(y)/h'(y)`, the order whose moment is dominated by `y`.
pub fn stationary_order<T: Tail + ?Sized>(model: &T, y: f64) -> Result<f64> {
    let d = model.h_prime(y)?;
    Ok(d - model.h_second(y)? / d)
}

// Solves g(y) = target for increasing g, starting near `start`.
fn solve_level<G: Fn(f64) -> Result<f64>>(
    g: G,
    target: f64,
    start: f64,
    floor: f64,
) -> Result<f64> {
    let gv = |y: f64| match g(y) {
        Ok(v) if v.is_finite() => v - target,
        Ok(v) if v == f64::INFINITY => f64::INFINITY,
        _ => f64::NEG_INFINITY,
    };
    let (lo, hi) = bracket_increasing(gv, start, floor).ok_or(Error::NoRoot { q: target })?;
    solve_increasing(
        |y| {
            let v = gv(y);
            let step = 1e-7 * y.abs().max(1.0);
            let d = (gv(y + step) - gv(y - step)) / (2.0 * step);
            (v, if d.is_finite() { d } else { 0.0 })
        },
        lo,
        hi,
        1e-15,
    )
}

fn start_guess<T: Tail + ?Sized>(model: &T, q: f64) -> f64 {
    let rho = model.rho();
    let s = (q / rho).powf(1.0 / (rho - 1.0));
    if s.is_finite() { s.max(model.support_lo()) } else { 1.0 }
}

/// Mode `y*(q)` of the moment integrand: root of `q - h' + h''/h' = 0`.
///
/// With `simplified`, solves `h'(y) = q` instead.
pub fn y_star<T: Tail + ?Sized>(model: &T, q: f64, simplified: bool) -> Result<f64> {
    check_q(q)?;
    let start = start_guess(model, q);
    let floor = model.support_lo();
    let y = if simplified {
        solve_level(|y| model.h_prime(y), q, start, floor)?
    } else {
        solve_level(|y| stationary_order(model, y), q, start, floor)?
    };
    Ok(y)
}

pub fn critical_curve<T: Tail + ?Sized>(model: &T, n: f64) -> Result<CriticalCurve> {
    let ln_n = check_n(n)?;
    let mut c = critical_curve_ln(model, ln_n)?;
    c.n = n;
    Ok(c)
}

/// [`critical_curve`] from `ln n`; the returned `n` is `exp(ln n)`.
pub fn critical_curve_ln<T: Tail + ?Sized>(model: &T, ln_n: f64) -> Result<CriticalCurve> {
    let y = y_dagger_ln(model, ln_n)?;
    let theta = ln_n / y;
    let rho_l = model.rho_local(y)?;
    let d = model.h_prime(y)?;
    let qc_exact = d - model.h_second(y)? / d;
    Ok(CriticalCurve {
        n: ln_n.exp(),
        y_dagger: y,
        theta,
        rho_l_at_dagger: rho_l,
        qc_exact,
        qc_approx: rho_l * theta,
        q_m: ln_n.powf(2.0 - 1.0 / model.rho() - Q_M_EPSILON),
    })
}

/// Log of the moment integrand, `q y - h(y) + ln h'(y)`.
fn log_integrand<T: Tail + ?Sized>(model: &T, q: f64, y: f64) -> f64 {
    if y <= model.support_lo() {
        return f64::NEG_INFINITY;
    }
    match (model.h(y), model.ln_h_prime(y)) {
        (Ok(h), Ok(l)) => {
            let v = q * y - h + l;
            if v.is_nan() { f64::NEG_INFINITY } else { v }
        }
        _ => f64::NEG_INFINITY,
    }
}

// Width scale of the peak at `y`, from the curvature of the log integrand.
fn peak_width<T: Tail + ?Sized>(model: &T, q: f64, y: f64) -> f64 {
    let step = 1e-4 * y.abs().max(1.0);
    let c = -(log_integrand(model, q, y + step) - 2.0 * log_integrand(model, q, y)
        + log_integrand(model, q, y - step))
        / (step * step);
    if c.is_finite() && c > 0.0 { 1.0 / c.sqrt() } else { 1.0 }
}

// Walks from `from` in direction `dir` until the log integrand drops
// LOG_CUTOFF below `peak`, or the support edge is hit.
fn cutoff<T: Tail + ?Sized>(model: &T, q: f64, from: f64, dir: f64, width: f64, peak: f64) -> f64 {
    let lo = model.support_lo();
    let mut step = width;
    let mut y = from;
    for _ in 0..200 {
        let next = y + dir * step;
        if dir < 0.0 && next <= lo {
            return lo;
        }
        y = next;
        if log_integrand(model, q, y) < peak - LOG_CUTOFF {
            return y;
        }
        step *= 1.5;
    }
    y
}

/// `ln E X^q` by adaptive quadrature, split at the integrand mode.
pub fn moment_quadrature<T: Tail + ?Sized>(model: &T, q: f64) -> Result<MomentValue> {
    check_q(q)?;
    let mode = y_star(model, q, false)?;
    let peak = log_integrand(model, q, mode);
    let w = peak_width(model, q, mode);
    let a = cutoff(model, q, mode, -1.0, w, peak);
    let b = cutoff(model, q, mode, 1.0, w, peak);
    let total = integrate(|y| (log_integrand(model, q, y) - peak).exp(), a, mode, 1e-11)?
        + integrate(|y| (log_integrand(model, q, y) - peak).exp(), mode, b, 1e-11)?;
    Ok(MomentValue { q, log_value: peak + total.ln(), method: MomentMethod::Quadrature })
}

/// `(ln h')''` by central differences at relative step `1e-5`.
fn ln_h_prime_second<T: Tail + ?Sized>(model: &T, y: f64) -> Result<f64> {
    let step = 1e-5 * y.abs().max(1.0);
    let up = model.ln_h_prime(y + step)?;
    let mid = model.ln_h_prime(y)?;
    let down = model.ln_h_prime(y - step)?;
    Ok((up - 2.0 * mid + down) / (step * step))
}

/// Log-density `psi(y) = h(y) - ln h'(y)`, so that `p_Y = e^{-psi}`.
pub fn psi<T: Tail + ?Sized>(model: &T, y: f64) -> Result<f64> {
    Ok(model.h(y)? - model.ln_h_prime(y)?)
}

/// `q y* - psi(y*)`, the leading exponent of the saddle-point form.
pub fn saddle_exponent<T: Tail + ?Sized>(model: &T, q: f64) -> Result<f64> {
    let y = y_star(model, q, false)?;
    Ok(q * y - psi(model, y)?)
}

/// `ln E X^q ≈ q y* - psi(y*) + ½ ln(2π / psi''(y*))`.
pub fn moment_saddlepoint<T: Tail + ?Sized>(model: &T, q: f64) -> Result<MomentValue> {
    let y = y_star(model, q, false)?;
    let curvature = model.h_second(y)? - ln_h_prime_second(model, y)?;
    if !(curvature > 0.0) {
        return Err(Error::DegenerateSaddle { q, curvature });
    }
    let log_value = q * y - psi(model, y)? + LN_SQRT_2PI - 0.5 * curvature.ln();
    Ok(MomentValue { q, log_value, method: MomentMethod::SaddlePoint })
}

/// Log of the moment integral cut at `y†(n)`, the typical size of `S(n, q)`.
pub fn truncated_moment<T: Tail + ?Sized>(model: &T, n: f64, q: f64) -> Result<MomentValue> {
    check_q(q)?;
    let top = y_dagger(model, n)?;
    let mode = y_star(model, q, false).unwrap_or(top).min(top);
    let peak = log_integrand(model, q, mode);
    let w = peak_width(model, q, mode);
    let a = cutoff(model, q, mode, -1.0, w, peak);
    let mut total = integrate(|y| (log_integrand(model, q, y) - peak).exp(), a, mode, 1e-11)?;
    if mode < top {
        total += integrate(|y| (log_integrand(model, q, y) - peak).exp(), mode, top, 1e-11)?;
    }
    Ok(MomentValue { q, log_value: peak + total.ln(), method: MomentMethod::Truncated })
}

/// Boundary value `q y† - ln n + ln h'(y†)` of the truncated integrand.
pub fn boundary_lns<T: Tail + ?Sized>(model: &T, n: f64, q: f64) -> Result<f64> {
    let ln_n = check_n(n)?;
    let y = y_dagger_ln(model, ln_n)?;
    Ok(q * y - ln_n + model.ln_h_prime(y)?)
}

/// Piecewise prediction of `ln S(n, q)`: the log moment up to `qc_exact`,
/// the linear boundary branch above it.
pub fn predicted_lns<T: Tail + ?Sized>(model: &T, n: f64, q: f64) -> Result<f64> {
    check_q(q)?;
    let c = critical_curve(model, n)?;
    if q <= c.qc_exact {
        Ok(moment_quadrature(model, q)?.log_value)
    } else {
        boundary_lns(model, n, q)
    }
}
