//! Experiment configuration: a sectioned TOML document.
//!
//! ```toml
//! [experiment]
//! kind = "iid"                  # iid | corr | lns
//! models = ["logweibull:rho=2"]
//! n = [1000]
//! k_theta = [1, 2, "default"]   # integers, "default" or "linear"
//! k_rho = ["default"]
//! reps = 500
//! seed = 1
//!
//! [corr]                        # kind = "corr" only
//! tau = [10, 100]
//! kappa = 0.08
//! alpha = 0.01
//! beta = 1.0
//!
//! [lns]                         # kind = "lns" only
//! q_over_qc_min = 0.1
//! q_over_qc_max = 3.0
//! q_points = 30
//! ```

use std::fmt;
use std::str::FromStr;

use momentgate_core::dependence::{DEFAULT_ALPHA, DEFAULT_BETA, DEFAULT_KAPPA};
use momentgate_core::estimators::{default_k_theta, k_rho_with_exponent, linear_k_theta};
use momentgate_core::{CovarianceSpec, TailModel};
use serde::{Deserialize, Serialize};

use crate::synth::MatchMode;
use crate::AppError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ExperimentKind {
    Iid,
    Corr,
    Lns,
}

impl fmt::Display for ExperimentKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ExperimentKind::Iid => "iid",
            ExperimentKind::Corr => "corr",
            ExperimentKind::Lns => "lns",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum KRule {
    Default,
    Linear,
}

/// A fixed `k` or a rule evaluated at each `n`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum KChoice {
    Fixed(usize),
    Rule(KRule),
}

impl KChoice {
    pub fn k_theta(&self, n: f64) -> usize {
        match self {
            KChoice::Fixed(k) => *k,
            KChoice::Rule(KRule::Default) => default_k_theta(n),
            KChoice::Rule(KRule::Linear) => linear_k_theta(n),
        }
    }

    /// The linear rule is defined for `k_theta` only and is rejected by
    /// validation here.
    pub fn k_rho(&self, n: f64, exponent: f64) -> usize {
        match self {
            KChoice::Fixed(k) => *k,
            KChoice::Rule(_) => k_rho_with_exponent(n, exponent),
        }
    }
}

impl FromStr for KChoice {
    type Err = AppError;

    fn from_str(s: &str) -> Result<Self, AppError> {
        match s.trim() {
            "default" => Ok(KChoice::Rule(KRule::Default)),
            "linear" => Ok(KChoice::Rule(KRule::Linear)),
            t => t
                .parse()
                .map(KChoice::Fixed)
                .map_err(|_| AppError::Usage(format!("`{t}` is not a k value"))),
        }
    }
}

fn default_k() -> Vec<KChoice> {
    vec![KChoice::Rule(KRule::Default)]
}

fn default_reps() -> usize {
    500
}

fn default_exponent() -> f64 {
    1.0 / 3.0
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentSection {
    pub kind: ExperimentKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub name: Option<String>,
    pub models: Vec<String>,
    pub n: Vec<usize>,
    #[serde(default = "default_k")]
    pub k_theta: Vec<KChoice>,
    #[serde(default = "default_k")]
    pub k_rho: Vec<KChoice>,
    /// Exponent of the `8 n^e` rule for `k_rho`.
    #[serde(default = "default_exponent")]
    pub k_rho_exponent: f64,
    #[serde(default = "default_reps")]
    pub reps: usize,
    #[serde(default)]
    pub seed: u64,
}

fn default_kappa() -> f64 {
    DEFAULT_KAPPA
}

fn default_alpha() -> f64 {
    DEFAULT_ALPHA
}

fn default_beta() -> f64 {
    DEFAULT_BETA
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CorrSection {
    /// True correlation lengths of the exponential covariance.
    pub tau: Vec<f64>,
    /// Correlation lengths handed to the corrected estimators; the true one
    /// when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tau_assumed: Option<Vec<f64>>,
    #[serde(default = "default_kappa")]
    pub kappa: f64,
    #[serde(default = "default_alpha")]
    pub alpha: f64,
    #[serde(default = "default_beta")]
    pub beta: f64,
    /// Sieve radii as multiples of the assumed `tau`, replacing `alpha`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub s_over_tau: Option<Vec<f64>>,
    #[serde(default)]
    pub match_mode: MatchMode,
}

impl CorrSection {
    pub fn assumed_for(&self, tau: f64) -> Vec<f64> {
        self.tau_assumed.clone().unwrap_or_else(|| vec![tau])
    }

    /// Radius factors; `alpha` when no explicit list is given.
    pub fn radius_factors(&self) -> Vec<f64> {
        self.s_over_tau.clone().unwrap_or_else(|| vec![self.alpha])
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LnsSection {
    /// Grid of `q / qc_exact(n)`, evenly spaced.
    pub q_over_qc_min: f64,
    pub q_over_qc_max: f64,
    pub q_points: usize,
}

impl LnsSection {
    pub fn grid(&self) -> Vec<f64> {
        if self.q_points == 1 {
            return vec![self.q_over_qc_min];
        }
        let step = (self.q_over_qc_max - self.q_over_qc_min) / (self.q_points - 1) as f64;
        (0..self.q_points).map(|i| self.q_over_qc_min + step * i as f64).collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub experiment: ExperimentSection,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub corr: Option<CorrSection>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lns: Option<LnsSection>,
}

fn usage<T>(msg: impl Into<String>) -> Result<T, AppError> {
    Err(AppError::Usage(msg.into()))
}

impl ExperimentConfig {
    /// Parses and validates a TOML document.
    pub fn from_toml(text: &str) -> Result<Self, AppError> {
        let cfg: Self = toml::from_str(text).map_err(|e| AppError::Data(format!("config: {e}")))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    pub fn models(&self) -> Result<Vec<TailModel>, AppError> {
        self.experiment.models.iter().map(|m| m.parse().map_err(AppError::Core)).collect()
    }

    pub fn validate(&self) -> Result<(), AppError> {
        let e = &self.experiment;
        if e.reps < 2 {
            return usage("reps must be at least 2");
        }
        if e.models.is_empty() || e.n.is_empty() || e.k_theta.is_empty() || e.k_rho.is_empty() {
            return usage("model, n and k grids must be nonempty");
        }
        self.models()?;
        if let Some(&n) = e.n.iter().find(|&&n| n < 3) {
            return usage(format!("n = {n} is too small"));
        }
        if e.k_theta.contains(&KChoice::Fixed(0)) || e.k_rho.iter().any(|k| matches!(k, KChoice::Fixed(0 | 1))) {
            return usage("k_theta must be at least 1 and k_rho at least 2");
        }
        if e.k_rho.contains(&KChoice::Rule(KRule::Linear)) {
            return usage("the linear rule applies to k_theta only");
        }
        if !(e.k_rho_exponent > 0.0 && e.k_rho_exponent < 1.0) {
            return usage("k_rho_exponent must lie in (0, 1)");
        }
        match e.kind {
            ExperimentKind::Iid => {}
            ExperimentKind::Corr => {
                let Some(c) = &self.corr else {
                    return usage("kind = \"corr\" needs a [corr] section");
                };
                if c.tau.is_empty() || c.tau_assumed.as_ref().is_some_and(Vec::is_empty) {
                    return usage("tau grids must be nonempty");
                }
                for &t in c.tau.iter().chain(c.tau_assumed.iter().flatten()) {
                    CovarianceSpec::exponential(t)?;
                }
                for (what, v) in [("kappa", c.kappa), ("alpha", c.alpha), ("beta", c.beta)] {
                    if !(v >= 0.0 && v.is_finite()) {
                        return usage(format!("{what} = {v} must be finite and nonnegative"));
                    }
                }
                if c.s_over_tau.as_ref().is_some_and(|s| s.is_empty() || s.iter().any(|v| !(*v >= 0.0))) {
                    return usage("s_over_tau must be a nonempty list of nonnegative factors");
                }
            }
            ExperimentKind::Lns => {
                let Some(l) = &self.lns else {
                    return usage("kind = \"lns\" needs an [lns] section");
                };
                if l.q_points == 0 || !(l.q_over_qc_min > 0.0) || !(l.q_over_qc_max >= l.q_over_qc_min) {
                    return usage("q grid must be positive with min <= max");
                }
            }
        }
        if e.kind != ExperimentKind::Corr && self.corr.is_some() {
            return usage("[corr] is only valid with kind = \"corr\"");
        }
        if e.kind != ExperimentKind::Lns && self.lns.is_some() {
            return usage("[lns] is only valid with kind = \"lns\"");
        }
        Ok(())
    }
}

/// Figures with a bundled preset.
pub const PRESET_FIGURES: [u32; 11] = [2, 3, 5, 6, 8, 9, 10, 11, 12, 15, 16];

/// Bundled experiment for a figure number.
pub fn preset(figure: u32) -> Result<ExperimentConfig, AppError> {
    let text = match figure {
        2 => include_str!("../presets/fig2.toml"),
        3 => include_str!("../presets/fig3.toml"),
        5 => include_str!("../presets/fig5.toml"),
        6 => include_str!("../presets/fig6.toml"),
        8 => include_str!("../presets/fig8.toml"),
        9 => include_str!("../presets/fig9.toml"),
        10 => include_str!("../presets/fig10.toml"),
        11 => include_str!("../presets/fig11.toml"),
        12 => include_str!("../presets/fig12.toml"),
        15 => include_str!("../presets/fig15.toml"),
        16 => include_str!("../presets/fig16.toml"),
        other => return usage(format!("no preset for figure {other}; available: {PRESET_FIGURES:?}")),
    };
    ExperimentConfig::from_toml(text)
}
