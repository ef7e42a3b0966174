//! Stationary series with a prescribed marginal and correlation.
//!
//! A Gaussian series is drawn by circulant embedding and pushed through the
//! marginal quantile function, `Y_i = F^{-1}(Phi(z_i))`.

use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use momentgate_core::hermite::{HermiteMatch, DEFAULT_TERMS};
use momentgate_core::rng::UniformStream;
use momentgate_core::{CovarianceSpec, Error, Result, Sample, Tail, TailModel};
use rustfft::num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

/// Largest fraction of spectral mass that negative-eigenvalue clipping may
/// discard.
pub const MAX_CLIPPED_FRACTION: f64 = 0.01;

/// Which layer the prescribed correlation applies to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MatchMode {
    /// Correlation of the Gaussian layer.
    #[default]
    #[serde(alias = "gaussianlevel")]
    Gaussian,
    /// Correlation of `Y`, reached through Hermite coefficient inversion.
    Hermite,
}

impl fmt::Display for MatchMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            MatchMode::Gaussian => "gaussian",
            MatchMode::Hermite => "hermite",
        })
    }
}

impl FromStr for MatchMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "gaussian" | "gaussianlevel" => Ok(MatchMode::Gaussian),
            "hermite" => Ok(MatchMode::Hermite),
            other => Err(Error::Argument(format!("unknown match mode `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SeriesSpec {
    pub model: TailModel,
    pub cov: CovarianceSpec,
    pub n: usize,
}

/// Precomputed embedding for repeated draws of one series specification.
pub struct Synthesizer {
    spec: SeriesSpec,
    mode: MatchMode,
    m: usize,
    // sqrt(lambda_k / m)
    scale: Vec<f64>,
    fft: Arc<dyn Fft<f64>>,
    clipped_fraction: f64,
}

impl fmt::Debug for Synthesizer {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Synthesizer")
            .field("spec", &self.spec)
            .field("mode", &self.mode)
            .field("m", &self.m)
            .field("clipped_fraction", &self.clipped_fraction)
            .finish()
    }
}

/// Embedding size: smallest power of two at least `2 (n - 1)`.
pub fn embedding_size(n: usize) -> usize {
    (2 * (n.max(2) - 1)).next_power_of_two()
}

impl Synthesizer {
    pub fn new(spec: SeriesSpec, mode: MatchMode) -> Result<Self> {
        if spec.n < 2 {
            return Err(Error::Argument("series length must be at least 2".into()));
        }
        let n = spec.n;
        let gauss_cov: Vec<f64> = match mode {
            MatchMode::Gaussian => (0..n).map(|t| spec.cov.at(t)).collect(),
            MatchMode::Hermite => {
                let hm = HermiteMatch::new(&spec.model, DEFAULT_TERMS)?;
                // Near zero the map is linear with slope c_1^2 / sum c_k^2.
                let c = hm.coefficients();
                let slope = c[0] * c[0] / c.iter().map(|v| v * v).sum::<f64>();
                (0..n)
                    .map(|t| {
                        let target = spec.cov.at(t);
                        if target.abs() < 1e-12 {
                            Ok(target / slope)
                        } else {
                            hm.gaussian_correlation(target)
                        }
                    })
                    .collect::<Result<_>>()?
            }
        };
        let m = embedding_size(n);
        let mut row: Vec<Complex64> = (0..m)
            .map(|j| {
                let lag = if j <= m / 2 { j } else { m - j };
                Complex64::new(if lag < n { gauss_cov[lag] } else { 0.0 }, 0.0)
            })
            .collect();
        let mut planner = FftPlanner::new();
        let fft = planner.plan_fft_forward(m);
        fft.process(&mut row);
        let total: f64 = row.iter().map(|c| c.re.abs()).sum();
        let clipped: f64 = row.iter().filter(|c| c.re < 0.0).map(|c| -c.re).sum();
        let clipped_fraction = if total > 0.0 { clipped / total } else { 0.0 };
        if clipped_fraction > MAX_CLIPPED_FRACTION {
            return Err(Error::Embedding { clipped_fraction });
        }
        let scale = row.iter().map(|c| (c.re.max(0.0) / m as f64).sqrt()).collect();
        Ok(Self { spec, mode, m, scale, fft, clipped_fraction })
    }

    pub fn spec(&self) -> &SeriesSpec {
        &self.spec
    }

    pub fn mode(&self) -> MatchMode {
        self.mode
    }

    pub fn clipped_fraction(&self) -> f64 {
        self.clipped_fraction
    }

    /// Stationary standard Gaussian series of length `n`.
    pub fn gaussian(&self, seed: u64) -> Vec<f64> {
        let mut u = UniformStream::new(seed);
        let mut buf: Vec<Complex64> = self
            .scale
            .iter()
            .map(|&s| {
                let a = u.next_normal();
                let b = u.next_normal();
                Complex64::new(s * a, s * b)
            })
            .collect();
        self.fft.process(&mut buf);
        buf.truncate(self.spec.n);
        buf.into_iter().map(|c| c.re).collect()
    }

    /// Series of `Y` values with the prescribed marginal.
    pub fn series(&self, seed: u64) -> Result<Sample> {
        let z = self.gaussian(seed);
        let values = z.iter().map(|&v| self.spec.model.from_gaussian(v)).collect::<Result<Vec<_>>>()?;
        Sample::new(values, seed)
    }
}

/// One-shot synthesis.
pub fn synth_series(spec: &SeriesSpec, seed: u64, mode: MatchMode) -> Result<Sample> {
    Synthesizer::new(spec.clone(), mode)?.series(seed)
}
