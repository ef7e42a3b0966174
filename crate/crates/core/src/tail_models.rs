//! Log-exponential-power-law tail families.
//!
//! A family is described by its tail function `h(y) = -ln(1 - F_Y(y))`.
//! Everything downstream (frontier, moments, estimator targets) is written
//! against the [`Tail`] trait, so a custom `h` can be plugged in by
//! implementing it. No validation of the slowly varying part is attempted.

use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec::Vec;
use core::fmt;
use core::str::FromStr;

#[allow(unused_imports)]
use num_traits::Float;

use crate::rng::UniformStream;
use crate::roots::{bracket_increasing, solve_increasing};
use crate::special::{self, LN_2};
use crate::{Error, Result};

/// Tail description of `Y = ln X`.
pub trait Tail {
    /// `-ln(1 - F_Y(y))`.
    fn h(&self, y: f64) -> Result<f64>;
    fn h_prime(&self, y: f64) -> Result<f64>;
    fn h_second(&self, y: f64) -> Result<f64>;
    /// Lower edge of the support of `Y` (may be `-inf`).
    fn support_lo(&self) -> f64;
    /// Asymptotic tail exponent.
    fn rho(&self) -> f64;

    fn ln_h_prime(&self, y: f64) -> Result<f64> {
        Ok(self.h_prime(y)?.ln())
    }

    /// Solves `h(y) = t` for `t >= 0`.
    fn inverse_h(&self, t: f64) -> Result<f64> {
        numeric_inverse_h(self, t)
    }

    /// Local power-law exponent `y h'(y) / h(y)`.
    fn rho_local(&self, y: f64) -> Result<f64> {
        let h = self.h(y)?;
        if !(h > 0.0) {
            return Err(Error::Domain { what: "h(y)", value: h });
        }
        Ok(y * self.h_prime(y)? / h)
    }

    fn cdf(&self, y: f64) -> Result<f64> {
        if y <= self.support_lo() {
            return Ok(0.0);
        }
        Ok(-(-self.h(y)?).exp_m1())
    }

    /// `1 - F_Y(y)`.
    fn sf(&self, y: f64) -> Result<f64> {
        if y <= self.support_lo() {
            return Ok(1.0);
        }
        Ok((-self.h(y)?).exp())
    }

    fn quantile(&self, p: f64) -> Result<f64> {
        if !(p > 0.0 && p < 1.0) {
            return Err(Error::Domain { what: "p", value: p });
        }
        self.inverse_h(-(-p).ln_1p())
    }

    /// Maps a standard normal value `z` to `y` with `F_Y(y) = Phi(z)`.
    fn from_gaussian(&self, z: f64) -> Result<f64> {
        if !z.is_finite() {
            return Err(Error::Domain { what: "z", value: z });
        }
        self.inverse_h(-special::ln_norm_sf(z))
    }
}

fn numeric_inverse_h<T: Tail + ?Sized>(model: &T, t: f64) -> Result<f64> {
    if !(t >= 0.0) || !t.is_finite() {
        return Err(Error::Domain { what: "h target", value: t });
    }
    let lo_edge = model.support_lo();
    if t == 0.0 && lo_edge.is_finite() {
        return Ok(lo_edge);
    }
    let start = if t > 1.0 { t.powf(1.0 / model.rho()) } else { 0.0f64.max(lo_edge) };
    let g = |y: f64| model.h(y).map(|h| h - t).unwrap_or(f64::NEG_INFINITY);
    let (lo, hi) = bracket_increasing(g, start, lo_edge)
        .ok_or(Error::Convergence("cannot bracket h(y) = t"))?;
    solve_increasing(
        |y| match (model.h(y), model.h_prime(y)) {
            (Ok(h), Ok(d)) => (h - t, d),
            _ => (f64::NEG_INFINITY, 0.0),
        },
        lo,
        hi,
        1e-15,
    )
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Family {
    /// `F(y) = 1 - exp(-y^rho)` on `y >= 0`.
    LogWeibull,
    /// Density proportional to `exp(-|y|^rho)` on the real line.
    StrictLogExpPower,
    /// Standard normal `Y`; `rho` is 2.
    LogNormal,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TailModel {
    family: Family,
    rho: f64,
    // -ln(2 Gamma(1 + 1/rho)), the log normalizer of the strict density.
    ln_norm: f64,
}

impl TailModel {
    pub fn new(family: Family, rho: f64) -> Result<Self> {
        if family == Family::LogNormal {
            return Ok(Self::log_normal());
        }
        if !(rho > 1.0) || !rho.is_finite() {
            return Err(Error::Domain { what: "rho", value: rho });
        }
        let ln_norm = -LN_2 - special::ln_gamma(1.0 + 1.0 / rho);
        Ok(Self { family, rho, ln_norm })
    }

    pub fn log_weibull(rho: f64) -> Result<Self> {
        Self::new(Family::LogWeibull, rho)
    }

    pub fn strict(rho: f64) -> Result<Self> {
        Self::new(Family::StrictLogExpPower, rho)
    }

    pub fn log_normal() -> Self {
        Self { family: Family::LogNormal, rho: 2.0, ln_norm: -special::LN_SQRT_2PI }
    }

    pub fn family(&self) -> Family {
        self.family
    }

    fn check(&self, y: f64) -> Result<()> {
        if y.is_nan() || y.is_infinite() || (self.family == Family::LogWeibull && y < 0.0) {
            return Err(Error::Domain { what: "y", value: y });
        }
        Ok(())
    }

    // ln(1 - F) for the strict family.
    fn strict_ln_sf(&self, y: f64) -> f64 {
        let a = 1.0 / self.rho;
        let t = y.abs().powf(self.rho);
        if y >= 0.0 {
            special::ln_gamma_q(a, t) - LN_2
        } else {
            (-0.5 * special::gamma_q(a, t)).ln_1p()
        }
    }
}

impl Tail for TailModel {
    fn h(&self, y: f64) -> Result<f64> {
        self.check(y)?;
        Ok(match self.family {
            Family::LogWeibull => y.powf(self.rho),
            Family::StrictLogExpPower => -self.strict_ln_sf(y),
            Family::LogNormal => -special::ln_norm_sf(y),
        })
    }

    fn h_prime(&self, y: f64) -> Result<f64> {
        self.check(y)?;
        Ok(match self.family {
            Family::LogWeibull => self.rho * y.powf(self.rho - 1.0),
            Family::StrictLogExpPower => self.ln_h_prime(y)?.exp(),
            Family::LogNormal => special::norm_hazard(y),
        })
    }

    fn ln_h_prime(&self, y: f64) -> Result<f64> {
        self.check(y)?;
        Ok(match self.family {
            Family::LogWeibull => self.rho.ln() + (self.rho - 1.0) * y.ln(),
            // ln p_Y - ln(1 - F)
            Family::StrictLogExpPower => {
                self.ln_norm - y.abs().powf(self.rho) - self.strict_ln_sf(y)
            }
            Family::LogNormal => {
                if y > 0.0 {
                    special::norm_hazard(y).ln()
                } else {
                    self.ln_norm - 0.5 * y * y - special::ln_norm_sf(y)
                }
            }
        })
    }

    fn h_second(&self, y: f64) -> Result<f64> {
        self.check(y)?;
        Ok(match self.family {
            Family::LogWeibull => self.rho * (self.rho - 1.0) * y.powf(self.rho - 2.0),
            // h'' = h' (h' - d/dy |y|^rho)
            Family::StrictLogExpPower => {
                let d = self.h_prime(y)?;
                let dpow = self.rho * y.signum() * y.abs().powf(self.rho - 1.0);
                d * (d - dpow)
            }
            Family::LogNormal => {
                let d = special::norm_hazard(y);
                d * (d - y)
            }
        })
    }

    fn support_lo(&self) -> f64 {
        match self.family {
            Family::LogWeibull => 0.0,
            _ => f64::NEG_INFINITY,
        }
    }

    fn rho(&self) -> f64 {
        self.rho
    }

    fn inverse_h(&self, t: f64) -> Result<f64> {
        if !(t >= 0.0) || !t.is_finite() {
            return Err(Error::Domain { what: "h target", value: t });
        }
        match self.family {
            Family::LogWeibull => Ok(t.powf(1.0 / self.rho)),
            Family::LogNormal => {
                if t == 0.0 {
                    return Err(Error::Domain { what: "h target", value: t });
                }
                // 1 - F = exp(-t)
                if t < LN_2 {
                    Ok(special::inv_norm_cdf(-(-t).exp_m1()))
                } else if t < 700.0 {
                    Ok(special::inv_norm_sf((-t).exp()))
                } else {
                    numeric_inverse_h(self, t)
                }
            }
            Family::StrictLogExpPower => {
                if t == 0.0 {
                    return Err(Error::Domain { what: "h target", value: t });
                }
                numeric_inverse_h(self, t)
            }
        }
    }

    fn from_gaussian(&self, z: f64) -> Result<f64> {
        if !z.is_finite() {
            return Err(Error::Domain { what: "z", value: z });
        }
        match self.family {
            Family::LogNormal => Ok(z),
            _ => self.inverse_h(-special::ln_norm_sf(z)),
        }
    }
}

impl fmt::Display for TailModel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.family {
            Family::LogWeibull => write!(f, "logweibull:rho={}", self.rho),
            Family::StrictLogExpPower => write!(f, "slep:rho={}", self.rho),
            Family::LogNormal => f.write_str("lognormal"),
        }
    }
}

impl FromStr for TailModel {
    type Err = Error;

    /// Parses `logweibull:rho=2.0`, `slep:rho=1.5` or `lognormal`.
    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        let (name, params) = match s.split_once(':') {
            Some((n, p)) => (n.trim(), Some(p.trim())),
            None => (s, None),
        };
        let family = match name.to_ascii_lowercase().as_str() {
            "logweibull" | "lw" => Family::LogWeibull,
            "slep" | "strict" => Family::StrictLogExpPower,
            "lognormal" | "ln" => {
                return match params {
                    None | Some("") | Some("rho=2") | Some("rho=2.0") => Ok(Self::log_normal()),
                    Some(p) => Err(bad_spec(s, &format!("lognormal takes no parameters, got `{p}`"))),
                };
            }
            other => return Err(bad_spec(s, &format!("unknown family `{other}`"))),
        };
        let params = params.ok_or_else(|| bad_spec(s, "missing `rho=`"))?;
        let mut rho = None;
        for kv in params.split(',') {
            let (k, v) = kv.split_once('=').ok_or_else(|| bad_spec(s, "expected key=value"))?;
            match k.trim() {
                "rho" => {
                    rho = Some(v.trim().parse::<f64>().map_err(|_| bad_spec(s, "rho is not a number"))?)
                }
                other => return Err(bad_spec(s, &format!("unknown parameter `{other}`"))),
            }
        }
        Self::new(family, rho.ok_or_else(|| bad_spec(s, "missing `rho=`"))?)
    }
}

fn bad_spec(spec: &str, why: &str) -> Error {
    Error::Argument(format!("model spec `{spec}`: {why}"))
}

/// Realizations of `Y` together with the seed that produced them.
#[derive(Debug, Clone, PartialEq)]
pub struct Sample {
    pub values: Vec<f64>,
    pub seed: u64,
}

impl Sample {
    pub fn new(values: Vec<f64>, seed: u64) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::Argument("a sample needs at least one value".to_string()));
        }
        Ok(Self { values, seed })
    }

    pub fn n(&self) -> usize {
        self.values.len()
    }
}

/// Draws `n` i.i.d. values by inversion of the uniform stream `seed`.
pub fn sample_iid<T: Tail + ?Sized>(model: &T, n: usize, seed: u64) -> Result<Sample> {
    if n == 0 {
        return Err(Error::Argument("n must be positive".to_string()));
    }
    let mut stream = UniformStream::new(seed);
    let values = (0..n)
        .map(|_| model.quantile(stream.next_uniform()))
        .collect::<Result<Vec<_>>>()?;
    Ok(Sample { values, seed })
}

/// Returns a description of the model usable in file headers.
pub fn describe(model: &TailModel) -> String {
    model.to_string()
}
