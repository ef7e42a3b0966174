//! Hermite-coefficient matching of correlations through a Gaussian copula.
//!
//! If `Y = g(Z)` with `Z` standard normal and `g(z) = F_Y^{-1}(Phi(z))`, then
//! two copies driven by Gaussians of correlation `r` have correlation
//! `sum c_k^2 r^k / sum c_k^2` where `c_k = E[g(Z) He_k(Z)] / sqrt(k!)`.

use alloc::vec::Vec;

#[allow(unused_imports)]
use num_traits::Float;

use crate::{Error, Result, Tail};

/// Number of quadrature nodes.
pub const GH_NODES: usize = 64;
/// Number of Hermite terms kept in the correlation series.
pub const DEFAULT_TERMS: usize = 24;

/// Nodes and weights for `∫ e^{-x^2} f(x) dx`, by Newton iteration on the
/// orthonormal Hermite recurrence.
pub fn gauss_hermite(n: usize) -> (Vec<f64>, Vec<f64>) {
    const PIM4: f64 = 0.751_125_544_464_942_5; // pi^(-1/4)
    let mut x = alloc::vec![0.0; n];
    let mut w = alloc::vec![0.0; n];
    let nf = n as f64;
    let mut z = 0.0f64;
    for i in 0..(n + 1) / 2 {
        z = match i {
            0 => (2.0 * nf + 1.0).sqrt() - 1.855_75 * (2.0 * nf + 1.0).powf(-1.0 / 6.0),
            1 => z - 1.14 * nf.powf(0.426) / z,
            2 => 1.86 * z - 0.86 * x[0],
            3 => 1.91 * z - 0.91 * x[1],
            _ => 2.0 * z - x[i - 2],
        };
        let mut pp = 0.0;
        for _ in 0..100 {
            let (mut p1, mut p2) = (PIM4, 0.0);
            for j in 0..n {
                let p3 = p2;
                p2 = p1;
                let jf = j as f64;
                p1 = z * (2.0 / (jf + 1.0)).sqrt() * p2 - (jf / (jf + 1.0)).sqrt() * p3;
            }
            pp = (2.0 * nf).sqrt() * p2;
            let z1 = z;
            z = z1 - p1 / pp;
            if (z - z1).abs() <= 3e-14 {
                break;
            }
        }
        x[i] = z;
        x[n - 1 - i] = -z;
        w[i] = 2.0 / (pp * pp);
        w[n - 1 - i] = w[i];
    }
    (x, w)
}

/// Hermite coefficients of a marginal transform.
#[derive(Debug, Clone, PartialEq)]
pub struct HermiteMatch {
    // c_1 .. c_K
    coeffs: Vec<f64>,
}

impl HermiteMatch {
    pub fn new<T: Tail + ?Sized>(model: &T, terms: usize) -> Result<Self> {
        if terms == 0 {
            return Err(Error::Argument(alloc::string::String::from("need at least one Hermite term")));
        }
        let (x, w) = gauss_hermite(GH_NODES);
        let norm = core::f64::consts::PI.sqrt();
        let mut coeffs = alloc::vec![0.0; terms];
        let mut h = alloc::vec![0.0; terms + 1];
        for (&xi, &wi) in x.iter().zip(&w) {
            let z = core::f64::consts::SQRT_2 * xi;
            let g = model.from_gaussian(z)?;
            // Orthonormal He_k: h_{k+1} = (z h_k - sqrt(k) h_{k-1}) / sqrt(k+1).
            h[0] = 1.0;
            h[1] = z;
            for k in 1..terms {
                h[k + 1] = (z * h[k] - (k as f64).sqrt() * h[k - 1]) / ((k + 1) as f64).sqrt();
            }
            for k in 0..terms {
                coeffs[k] += wi / norm * g * h[k + 1];
            }
        }
        Ok(Self { coeffs })
    }

    /// `c_1, ..., c_K`.
    pub fn coefficients(&self) -> &[f64] {
        &self.coeffs
    }

    /// Correlation of the transformed pair when the Gaussians have
    /// correlation `r`.
    pub fn output_correlation(&self, r: f64) -> f64 {
        let mut num = 0.0;
        let mut den = 0.0;
        let mut rk = 1.0;
        for c in &self.coeffs {
            rk *= r;
            num += c * c * rk;
            den += c * c;
        }
        num / den
    }

    /// Gaussian correlation producing output correlation `target`, by
    /// bisection on `[0, 1]` (or `[-1, 0]` for negative targets, where the
    /// map is assumed monotone).
    pub fn gaussian_correlation(&self, target: f64) -> Result<f64> {
        if !(target.abs() <= 1.0) {
            return Err(Error::Domain { what: "correlation", value: target });
        }
        if target == 0.0 || target == 1.0 {
            return Ok(target);
        }
        let (mut lo, mut hi) = if target > 0.0 { (0.0, 1.0) } else { (-1.0, 0.0) };
        let increasing = self.output_correlation(hi) >= self.output_correlation(lo);
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            let above = self.output_correlation(mid) > target;
            if above == increasing {
                hi = mid;
            } else {
                lo = mid;
            }
            if hi - lo < 1e-15 {
                break;
            }
        }
        Ok(0.5 * (lo + hi))
    }
}
