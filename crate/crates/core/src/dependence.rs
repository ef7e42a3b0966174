//! Correlated series: effective sample size, the `d_beta` sieve and the
//! corrected estimators.
//!
//! Synthesis of the series themselves needs an FFT and lives in the std
//! crate; the Hermite coefficient matching it relies on is in
//! [`crate::hermite`].

use alloc::collections::BTreeSet;
use alloc::string::ToString;
use alloc::vec::Vec;
use core::fmt;
use core::str::FromStr;

#[allow(unused_imports)]
use num_traits::Float;

use crate::estimators::{self, OrderedSample, QcEstimate};
use crate::theory::critical_curve;
use crate::{Error, Result, Tail};

/// Default `kappa` in `n* = n / (1 + kappa tau)`.
pub const DEFAULT_KAPPA: f64 = 0.08;
/// Default ratio `s / tau` of the sieve radius.
pub const DEFAULT_ALPHA: f64 = 0.01;
/// Default weight of the rank-gap count in `d_beta`.
pub const DEFAULT_BETA: f64 = 1.0;

/// Correlation function `C(t)` with `C(0) = 1`.
#[derive(Debug, Clone, PartialEq)]
pub enum CovarianceSpec {
    /// `exp(-|t| / tau)`; `tau = 0` is white noise.
    Exponential { tau: f64 },
    /// `C` at integer lags `0, 1, ...`; zero beyond the table.
    Tabulated(Vec<f64>),
}

impl CovarianceSpec {
    pub fn exponential(tau: f64) -> Result<Self> {
        if !(tau >= 0.0) || !tau.is_finite() {
            return Err(Error::Domain { what: "tau", value: tau });
        }
        Ok(Self::Exponential { tau })
    }

    pub fn tabulated(values: Vec<f64>) -> Result<Self> {
        if values.first() != Some(&1.0) {
            return Err(Error::Argument("tabulated covariance needs C(0) = 1".to_string()));
        }
        if values.iter().any(|c| !(c.abs() <= 1.0)) {
            return Err(Error::Argument("tabulated covariance needs |C(t)| <= 1".to_string()));
        }
        Ok(Self::Tabulated(values))
    }

    /// `C(t)` at an integer lag.
    pub fn at(&self, lag: usize) -> f64 {
        match self {
            Self::Exponential { tau } => {
                if *tau == 0.0 {
                    if lag == 0 { 1.0 } else { 0.0 }
                } else {
                    (-(lag as f64) / tau).exp()
                }
            }
            Self::Tabulated(v) => v.get(lag).copied().unwrap_or(0.0),
        }
    }

    /// The nominal `tau` for exponential covariances, otherwise the
    /// correlation length.
    pub fn tau(&self) -> Result<f64> {
        correlation_length(self)
    }
}

impl fmt::Display for CovarianceSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Exponential { tau } => write!(f, "exp:tau={tau}"),
            Self::Tabulated(v) => {
                f.write_str("table:")?;
                for (i, c) in v.iter().enumerate() {
                    if i > 0 {
                        f.write_str(",")?;
                    }
                    write!(f, "{c}")?;
                }
                Ok(())
            }
        }
    }
}

impl FromStr for CovarianceSpec {
    type Err = Error;

    /// Parses `exp:tau=100`, `white`, or `table:1,0.5,0.25`.
    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        let bad = |why: &str| Error::Argument(alloc::format!("covariance spec `{s}`: {why}"));
        if s == "white" || s == "iid" {
            return Self::exponential(0.0);
        }
        let (kind, rest) = s.split_once(':').ok_or_else(|| bad("expected kind:params"))?;
        match kind.trim() {
            "exp" | "exponential" => {
                let (k, v) = rest.split_once('=').ok_or_else(|| bad("expected tau=value"))?;
                if k.trim() != "tau" {
                    return Err(bad("unknown parameter"));
                }
                Self::exponential(v.trim().parse().map_err(|_| bad("tau is not a number"))?)
            }
            "table" => {
                let values = rest
                    .split(',')
                    .map(|c| c.trim().parse::<f64>())
                    .collect::<core::result::Result<Vec<_>, _>>()
                    .map_err(|_| bad("non-numeric entry"))?;
                Self::tabulated(values)
            }
            _ => Err(bad("unknown kind")),
        }
    }
}

/// `tau = ∫ t C(t) dt / ∫ C(t) dt` over `t >= 0`; trapezoidal sums for
/// tabulated covariances.
pub fn correlation_length(cov: &CovarianceSpec) -> Result<f64> {
    match cov {
        CovarianceSpec::Exponential { tau } => Ok(*tau),
        CovarianceSpec::Tabulated(v) => {
            if v.iter().skip(1).all(|&c| c == 0.0) {
                return Ok(0.0);
            }
            let (mut num, mut den) = (0.0, 0.0);
            for (t, w) in v.windows(2).enumerate() {
                let (t0, t1) = (t as f64, (t + 1) as f64);
                num += 0.5 * (t0 * w[0] + t1 * w[1]);
                den += 0.5 * (w[0] + w[1]);
            }
            if !(den > 0.0) {
                return Err(Error::Divergent);
            }
            Ok(num / den)
        }
    }
}

/// Effective number of independent points, `n / (1 + kappa tau)`.
pub fn n_star(n: f64, tau: f64, kappa: f64) -> f64 {
    n / (1.0 + kappa * tau)
}

/// Critical order at the effective size `n*`.
pub fn qc_theory_corr<T: Tail + ?Sized>(model: &T, n: f64, tau: f64, kappa: f64) -> Result<f64> {
    let ns = n_star(n, tau, kappa);
    if !(ns >= 2.0) {
        return Err(Error::Argument(alloc::format!("effective size n* = {ns} is below 2")));
    }
    Ok(critical_curve(model, ns)?.qc_approx)
}

/// Points retained by the sieve, in selection order.
#[derive(Debug, Clone, PartialEq)]
pub struct SievedSample {
    pub selected_indices: Vec<usize>,
    pub selected_values: Vec<f64>,
    pub n_original: usize,
    pub s: f64,
    pub beta: f64,
}

impl SievedSample {
    pub fn len(&self) -> usize {
        self.selected_indices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.selected_indices.is_empty()
    }
}

/// Repeatedly takes the largest remaining point and discards every remaining
/// point within `d_beta <= s` of it, where
/// `d_beta(i, j) = max(|i - j|, beta * #{k : min(x_i, x_j) < x_k < max(x_i, x_j)})`
/// and the count runs over the whole original series. Ties go to the lower
/// index.
pub fn sieve(series: &[f64], s: f64, beta: f64) -> Result<SievedSample> {
    sieve_limited(series, s, beta, usize::MAX)
}

/// [`sieve`] stopped after `max_points` selections. The selections made are
/// the same as the first `max_points` of the full sieve.
pub fn sieve_limited(series: &[f64], s: f64, beta: f64, max_points: usize) -> Result<SievedSample> {
    if !(s >= 0.0) || !(beta >= 0.0) {
        return Err(Error::Argument("sieve needs s >= 0 and beta >= 0".to_string()));
    }
    if series.iter().any(|v| v.is_nan()) {
        return Err(Error::Argument("series contains NaN".to_string()));
    }
    let n = series.len();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| series[b].total_cmp(&series[a]).then(a.cmp(&b)));
    let mut sorted: Vec<f64> = series.to_vec();
    sorted.sort_by(f64::total_cmp);
    // #{k : lo < x_k < hi}
    let between = |lo: f64, hi: f64| -> usize {
        let below_hi = sorted.partition_point(|&v| v < hi);
        let upto_lo = sorted.partition_point(|&v| v <= lo);
        below_hi.saturating_sub(upto_lo)
    };
    let window = if s >= n as f64 { n } else { s.floor() as usize };

    let mut alive: BTreeSet<usize> = (0..n).collect();
    let mut out = SievedSample {
        selected_indices: Vec::new(),
        selected_values: Vec::new(),
        n_original: n,
        s,
        beta,
    };
    let mut removable = Vec::new();
    for &i in &order {
        if out.len() >= max_points {
            break;
        }
        if !alive.remove(&i) {
            continue;
        }
        out.selected_indices.push(i);
        out.selected_values.push(series[i]);
        let lo = i.saturating_sub(window);
        let hi = i.saturating_add(window).min(n.saturating_sub(1));
        removable.clear();
        for &j in alive.range(lo..=hi) {
            let gap = i.abs_diff(j) as f64;
            let (a, b) = if series[i] <= series[j] { (series[i], series[j]) } else { (series[j], series[i]) };
            let d = gap.max(beta * between(a, b) as f64);
            if d <= s {
                removable.push(j);
            }
        }
        for j in &removable {
            alive.remove(j);
        }
    }
    Ok(out)
}

/// Settings of the corrected estimators.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CorrectionParams {
    pub tau: f64,
    pub kappa: f64,
    /// Sieve radius as a fraction of `tau`, used when `s` is not set.
    pub alpha: f64,
    pub beta: f64,
    /// Explicit sieve radius overriding `alpha * tau`.
    pub s: Option<f64>,
}

impl CorrectionParams {
    pub fn new(tau: f64) -> Self {
        Self { tau, kappa: DEFAULT_KAPPA, alpha: DEFAULT_ALPHA, beta: DEFAULT_BETA, s: None }
    }

    pub fn radius(&self) -> f64 {
        self.s.unwrap_or(self.alpha * self.tau)
    }

    pub fn n_star(&self, n: f64) -> f64 {
        n_star(n, self.tau, self.kappa)
    }

    fn validate(&self) -> Result<()> {
        for (what, v) in [("tau", self.tau), ("kappa", self.kappa), ("alpha", self.alpha), ("beta", self.beta)] {
            if !(v >= 0.0) || !v.is_finite() {
                return Err(Error::Domain { what, value: v });
            }
        }
        Ok(())
    }
}

/// The sieved top points as an ordered sample attributed to size `n*`.
pub fn sieved_ordered(series: &[f64], k: usize, params: &CorrectionParams) -> Result<OrderedSample> {
    params.validate()?;
    let needed = k + 1;
    let ns = params.n_star(series.len() as f64);
    if !(ns >= 2.0) {
        return Err(Error::Argument(alloc::format!("effective size n* = {ns} is below 2")));
    }
    let sv = sieve_limited(series, params.radius(), params.beta, needed)?;
    if sv.len() < needed {
        return Err(Error::InsufficientSievedPoints { found: sv.len(), needed });
    }
    OrderedSample::new(sv.selected_values, ns)
}

/// `ln n* / Omega_k` on the sieved set.
pub fn theta_hat_corr(series: &[f64], k_theta: usize, params: &CorrectionParams) -> Result<f64> {
    estimators::theta_hat(&sieved_ordered(series, k_theta, params)?, k_theta)
}

/// Tail regression on the sieved set with `n*` in `ln(ln n* - ln i)`.
pub fn rho_hat_corr(series: &[f64], k_rho: usize, params: &CorrectionParams) -> Result<f64> {
    estimators::rho_hat(&sieved_ordered(series, k_rho, params)?, k_rho)
}

pub fn qc_hat_corr(
    series: &[f64],
    k_theta: usize,
    k_rho: usize,
    params: &CorrectionParams,
) -> Result<QcEstimate> {
    let ordered = sieved_ordered(series, k_theta.max(k_rho), params)?;
    estimators::qc_hat_ordered(&ordered, k_theta, k_rho)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::estimators::qc_hat;
    use crate::TailModel;

    #[test]
    fn correlation_lengths() {
        assert_eq!(correlation_length(&CovarianceSpec::exponential(50.0).unwrap()).unwrap(), 50.0);
        let delta = CovarianceSpec::tabulated(alloc::vec![1.0, 0.0, 0.0]).unwrap();
        assert_eq!(correlation_length(&delta).unwrap(), 0.0);
        let table: Vec<f64> = (0..=400).map(|t| (-(t as f64) / 20.0).exp()).collect();
        let tau = correlation_length(&CovarianceSpec::tabulated(table).unwrap()).unwrap();
        assert!((tau - 20.0).abs() < 0.5, "{tau}");
        let neg = CovarianceSpec::Tabulated(alloc::vec![1.0, -1.0, -1.0]);
        assert!(matches!(correlation_length(&neg), Err(Error::Divergent)));
        assert!(CovarianceSpec::tabulated(alloc::vec![0.5]).is_err());
    }

    #[test]
    fn covariance_spec_strings() {
        let c: CovarianceSpec = "exp:tau=100".parse().unwrap();
        assert_eq!(c, CovarianceSpec::Exponential { tau: 100.0 });
        assert_eq!(c.to_string().parse::<CovarianceSpec>().unwrap(), c);
        assert_eq!("white".parse::<CovarianceSpec>().unwrap().at(1), 0.0);
        let t: CovarianceSpec = "table:1,0.5".parse().unwrap();
        assert_eq!(t.at(1), 0.5);
        assert_eq!(t.at(7), 0.0);
        assert!("exp:tau=-1".parse::<CovarianceSpec>().is_err());
        assert!("gauss:tau=1".parse::<CovarianceSpec>().is_err());
    }

    #[test]
    fn effective_size() {
        assert_eq!(n_star(1000.0, 0.0, 0.08), 1000.0);
        assert!((n_star(1000.0, 100.0, 0.08) - 1000.0 / 9.0).abs() < 1e-12);
        let mut prev = f64::INFINITY;
        for tau in [1.0, 10.0, 1e3, 1e6, 1e12] {
            let v = n_star(1000.0, tau, 0.08);
            assert!(v < prev && v > 0.0);
            prev = v;
        }
    }

    #[test]
    fn qc_under_dependence() {
        let lw = TailModel::log_weibull(2.0).unwrap();
        let iid = critical_curve(&lw, 1e4).unwrap().qc_approx;
        assert!((qc_theory_corr(&lw, 1e4, 0.0, 0.08).unwrap() - iid).abs() < 1e-14);
        let v = qc_theory_corr(&lw, 1e4, 100.0, 0.08).unwrap();
        let closed = 2.0 * (1e4f64.ln() - 9.0f64.ln()).sqrt();
        assert!((v - closed).abs() < 1e-12 * closed);
        assert!(v < iid);
        assert!(qc_theory_corr(&lw, 10.0, 100.0, 0.08).is_err());
    }

    #[test]
    fn sieve_hand_examples() {
        let x = [5.0, 4.0, 3.0, 2.0, 1.0];
        let all = sieve(&x, 0.0, 1.0).unwrap();
        assert_eq!(all.selected_values, [5.0, 4.0, 3.0, 2.0, 1.0]);
        let a = sieve(&x, 1.0, 0.0).unwrap();
        assert_eq!(a.selected_indices, [0, 2, 4]);
        // Adjacent points have no value strictly between them, so the rank
        // term is zero and index distance 1 <= s still removes them.
        let b = sieve(&x, 1.0, 10.0).unwrap();
        assert_eq!(b.selected_indices, [0, 2, 4]);
        assert_eq!(b.selected_indices, brute_force(&x, 1.0, 10.0));
        // A large rank gap protects a near neighbour.
        let y = [9.0, 1.0, 5.0, 4.0, 3.0];
        assert_eq!(sieve(&y, 1.0, 1.0).unwrap().selected_indices, [0, 2, 4, 1]);
        assert_eq!(sieve(&y, 2.0, 1.0).unwrap().selected_indices, [0, 3]);
    }

    #[test]
    fn sieve_size_is_not_monotone() {
        // Greedy selection: a wider radius can free up later picks.
        let x = [4.0, 0.0, 5.0, 2.0, 3.0, 1.0];
        assert_eq!(sieve(&x, 2.0, 1.5).unwrap().selected_indices, [2, 3]);
        assert_eq!(sieve(&x, 3.0, 1.5).unwrap().selected_indices, [2, 5, 1]);
        // Likewise a larger rank weight can shrink the retained set.
        let x = [1.0, 2.0, 3.0, 4.0, 5.0, 0.0];
        assert_eq!(sieve(&x, 4.0, 2.0).unwrap().selected_indices, [4, 0, 5]);
        assert_eq!(sieve(&x, 4.0, 3.0).unwrap().selected_indices, [4, 1]);
        for (x, s, b) in [(x, 4.0, 2.0), (x, 4.0, 3.0)] {
            assert_eq!(sieve(&x, s, b).unwrap().selected_indices, brute_force(&x, s, b));
        }
    }

    #[test]
    fn sieve_limited_is_prefix() {
        let x: Vec<f64> = (0..200).map(|i| ((i * 37 % 101) as f64).sin()).collect();
        let full = sieve(&x, 3.0, 1.0).unwrap();
        let part = sieve_limited(&x, 3.0, 1.0, 10).unwrap();
        assert_eq!(part.selected_indices[..], full.selected_indices[..10]);
    }

    // O(n^3) sieve straight from the definition.
    pub(crate) fn brute_force(x: &[f64], s: f64, beta: f64) -> Vec<usize> {
        let d = |i: usize, j: usize| {
            let (a, b) = (x[i].min(x[j]), x[i].max(x[j]));
            let c = x.iter().filter(|&&v| a < v && v < b).count();
            (i.abs_diff(j) as f64).max(beta * c as f64)
        };
        let mut left: Vec<usize> = (0..x.len()).collect();
        let mut out = Vec::new();
        while !left.is_empty() {
            let mut best = left[0];
            for &j in &left {
                if x[j] > x[best] {
                    best = j;
                }
            }
            out.push(best);
            left.retain(|&j| j != best && d(best, j) > s);
        }
        out
    }

    #[test]
    fn corrected_estimators_reduce_to_iid() {
        let m = TailModel::log_normal();
        let sample = crate::tail_models::sample_iid(&m, 5000, 3).unwrap();
        let p = CorrectionParams { s: Some(0.0), ..CorrectionParams::new(0.0) };
        let a = qc_hat_corr(&sample.values, 20, 60, &p).unwrap();
        let b = qc_hat(&sample.values, 20, 60).unwrap();
        assert_eq!(a, b);
        assert_eq!(theta_hat_corr(&sample.values, 20, &p).unwrap(), b.theta_hat);
        assert_eq!(rho_hat_corr(&sample.values, 60, &p).unwrap(), b.rho_hat);
    }

    #[test]
    fn too_few_sieved_points() {
        let x: Vec<f64> = (0..50).map(|i| i as f64).collect();
        let p = CorrectionParams { s: Some(100.0), beta: 0.0, ..CorrectionParams::new(1.0) };
        assert!(matches!(
            qc_hat_corr(&x, 2, 3, &p),
            Err(Error::InsufficientSievedPoints { found: 1, needed: 4 })
        ));
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        proptest! {
            #![proptest_config(ProptestConfig::with_cases(1000))]

            #[test]
            fn sieve_matches_brute_force(
                x in proptest::collection::vec(0u8..12, 0..50),
                s in 0.0f64..8.0,
                beta in 0.0f64..3.0,
            ) {
                let x: Vec<f64> = x.into_iter().map(f64::from).collect();
                let fast = sieve(&x, s, beta).unwrap();
                prop_assert_eq!(&fast.selected_indices, &brute_force(&x, s, beta));
                prop_assert!(fast.selected_values.windows(2).all(|w| w[0] >= w[1]));
            }

            #[test]
            fn sieve_output_is_separated_and_covering(
                x in proptest::collection::vec(-5.0f64..5.0, 1..60),
                s in 0.0f64..6.0,
                beta in 0.0f64..2.0,
            ) {
                let sv = sieve(&x, s, beta).unwrap();
                let d = |i: usize, j: usize| {
                    let (a, b) = (x[i].min(x[j]), x[i].max(x[j]));
                    let c = x.iter().filter(|&&v| a < v && v < b).count();
                    (i.abs_diff(j) as f64).max(beta * c as f64)
                };
                for (p, &i) in sv.selected_indices.iter().enumerate() {
                    for &j in &sv.selected_indices[p + 1..] {
                        prop_assert!(d(i, j) > s);
                    }
                }
                for j in 0..x.len() {
                    if !sv.selected_indices.contains(&j) {
                        prop_assert!(sv.selected_indices.iter().any(|&i| d(i, j) <= s && x[i] >= x[j]));
                    }
                }
            }
        }
    }
}
