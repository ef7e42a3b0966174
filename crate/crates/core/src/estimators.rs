//! Order-statistics estimators of `theta(n)`, `rho` and `q_c(n)`.

use alloc::string::ToString;
use alloc::vec::Vec;

#[allow(unused_imports)]
use num_traits::Float;

use crate::special::{harmonic, EULER_GAMMA};
use crate::{Error, Result};

/// The largest values of a sample in descending order, with the full size.
#[derive(Debug, Clone, PartialEq)]
pub struct OrderedSample {
    top: Vec<f64>,
    n: f64,
}

impl OrderedSample {
    /// `top` must be nonincreasing. `n` is the size of the sample it was
    /// drawn from; it may be an effective (non-integer) size.
    pub fn new(top: Vec<f64>, n: f64) -> Result<Self> {
        if top.is_empty() {
            return Err(Error::Argument("ordered sample is empty".to_string()));
        }
        if top.iter().any(|v| v.is_nan()) {
            return Err(Error::Argument("ordered sample contains NaN".to_string()));
        }
        if top.windows(2).any(|w| w[0] < w[1]) {
            return Err(Error::Argument("ordered sample is not descending".to_string()));
        }
        if !(n >= top.len() as f64) || !n.is_finite() {
            return Err(Error::Argument("sample size below number of order statistics".to_string()));
        }
        Ok(Self { top, n })
    }

    pub fn top(&self) -> &[f64] {
        &self.top
    }

    pub fn n(&self) -> f64 {
        self.n
    }

    pub fn k_available(&self) -> usize {
        self.top.len()
    }

    /// Same order statistics, attributed to a different sample size.
    pub fn with_n(&self, n: f64) -> Result<Self> {
        Self::new(self.top.clone(), n)
    }

    fn check_k(&self, k: usize) -> Result<()> {
        if k == 0 || k > self.top.len() {
            return Err(Error::Argument(alloc::format!(
                "k = {k} outside 1..={}",
                self.top.len()
            )));
        }
        Ok(())
    }
}

/// Selects the `k` largest values in descending order.
pub fn order_stats(values: &[f64], k: usize) -> Result<OrderedSample> {
    let n = values.len();
    if k == 0 || k > n {
        return Err(Error::Argument(alloc::format!("k = {k} outside 1..={n}")));
    }
    if values.iter().any(|v| v.is_nan()) {
        return Err(Error::Argument("sample contains NaN".to_string()));
    }
    let mut v = values.to_vec();
    let desc = |a: &f64, b: &f64| b.total_cmp(a);
    if k < n {
        v.select_nth_unstable_by(k - 1, desc);
        v.truncate(k);
    }
    v.sort_unstable_by(desc);
    OrderedSample::new(v, n as f64)
}

/// Coefficients of `Omega_k = sum alpha_i Y_{i,n}`.
#[derive(Debug, Clone, PartialEq)]
pub struct WeightScheme {
    alpha: Vec<f64>,
}

impl WeightScheme {
    /// Arbitrary weights; they must sum to one.
    pub fn custom(alpha: Vec<f64>) -> Result<Self> {
        let s: f64 = alpha.iter().sum();
        if alpha.is_empty() || (s - 1.0).abs() > 1e-12 {
            return Err(Error::Argument("weights must be non-empty and sum to 1".to_string()));
        }
        Ok(Self { alpha })
    }

    pub fn k(&self) -> usize {
        self.alpha.len()
    }

    pub fn alpha(&self) -> &[f64] {
        &self.alpha
    }
}

/// Minimum-variance weights, unbiased under the Gumbel limit law of the
/// top order statistics.
///
/// For `k >= 2`, `alpha_i = (H_{k-1} - gamma) / (k - 1)` for `i < k` and the
/// last weight closes the sum.
pub fn omega_weights(k: usize) -> Result<WeightScheme> {
    match k {
        0 => Err(Error::Argument("k must be at least 1".to_string())),
        1 => Ok(WeightScheme { alpha: alloc::vec![1.0] }),
        _ => {
            let m = (k - 1) as f64;
            let beta = (harmonic(k - 1) - EULER_GAMMA) / m;
            let mut alpha = alloc::vec![beta; k];
            // Close the sum with the same accumulation order callers use.
            let head: f64 = alpha[..k - 1].iter().sum();
            alpha[k - 1] = 1.0 - head;
            Ok(WeightScheme { alpha })
        }
    }
}

pub fn omega_with(ordered: &OrderedSample, weights: &WeightScheme) -> Result<f64> {
    ordered.check_k(weights.k())?;
    Ok(weights.alpha.iter().zip(&ordered.top).map(|(a, y)| a * y).sum())
}

pub fn omega(ordered: &OrderedSample, k: usize) -> Result<f64> {
    omega_with(ordered, &omega_weights(k)?)
}

/// `ln n / Omega_k`.
pub fn theta_hat(ordered: &OrderedSample, k_theta: usize) -> Result<f64> {
    let om = omega(ordered, k_theta)?;
    if !(om > 0.0) {
        return Err(Error::NonPositiveOmega { omega: om });
    }
    Ok(ordered.n.ln() / om)
}

/// Least-squares slope of `ln(ln n - ln i)` on `ln Y_{i,n}`, `i = 1..=k_rho`.
/// Order statistics that are not positive are skipped.
pub fn rho_hat(ordered: &OrderedSample, k_rho: usize) -> Result<f64> {
    ordered.check_k(k_rho)?;
    if k_rho < 2 {
        return Err(Error::Argument("k_rho must be at least 2".to_string()));
    }
    if k_rho as f64 >= ordered.n {
        return Err(Error::Argument("k_rho must be below n".to_string()));
    }
    let ln_n = ordered.n.ln();
    let pts: Vec<(f64, f64)> = ordered.top[..k_rho]
        .iter()
        .enumerate()
        .filter(|(_, &y)| y > 0.0)
        .map(|(i, &y)| (y.ln(), (ln_n - ((i + 1) as f64).ln()).ln()))
        .collect();
    if pts.len() < 2 {
        return Err(Error::InsufficientPositiveValues { found: pts.len() });
    }
    let m = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / m;
    let mz = pts.iter().map(|p| p.1).sum::<f64>() / m;
    let (mut sxx, mut sxz) = (0.0, 0.0);
    for &(x, z) in &pts {
        sxx += (x - mx) * (x - mx);
        sxz += (x - mx) * (z - mz);
    }
    if sxx == 0.0 {
        return Err(Error::DegenerateRegression);
    }
    Ok(sxz / sxx)
}

fn clamp_k(k: f64, n: f64) -> usize {
    let hi = (n / 10.0).floor().max(2.0);
    k.round().clamp(2.0, hi) as usize
}

/// `round(exp(sqrt(1.6 ln n)))`, clamped to `[2, n/10]`.
pub fn default_k_theta(n: f64) -> usize {
    clamp_k((1.6 * n.ln()).sqrt().exp(), n)
}

/// Opt-in alternative rule `10 ln n - 40`, floored at 2.
pub fn linear_k_theta(n: f64) -> usize {
    clamp_k(10.0 * n.ln() - 40.0, n)
}

/// `round(8 n^(1/3))`, clamped to `[2, n/10]`.
pub fn default_k_rho(n: f64) -> usize {
    k_rho_with_exponent(n, 1.0 / 3.0)
}

/// `round(8 n^exponent)`, clamped to `[2, n/10]`.
pub fn k_rho_with_exponent(n: f64, exponent: f64) -> usize {
    clamp_k(8.0 * n.powf(exponent), n)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QcEstimate {
    pub theta_hat: f64,
    pub rho_hat: f64,
    pub qc_hat: f64,
    pub k_theta: usize,
    pub k_rho: usize,
}

/// `theta_hat * rho_hat` on one shared ordered sample.
pub fn qc_hat_ordered(ordered: &OrderedSample, k_theta: usize, k_rho: usize) -> Result<QcEstimate> {
    let theta_hat = theta_hat(ordered, k_theta)?;
    let rho_hat = rho_hat(ordered, k_rho)?;
    Ok(QcEstimate { theta_hat, rho_hat, qc_hat: theta_hat * rho_hat, k_theta, k_rho })
}

pub fn qc_hat(values: &[f64], k_theta: usize, k_rho: usize) -> Result<QcEstimate> {
    let ordered = order_stats(values, k_theta.max(k_rho))?;
    qc_hat_ordered(&ordered, k_theta, k_rho)
}
