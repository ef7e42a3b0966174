//! Replication harness.
//!
//! Every replication draws from its own seed `derive_seed(master, [cell,
//! rep])`, where `cell` indexes the data cell (model, n and, for correlated
//! runs, the true tau). All `k` and correction settings of a data cell are
//! evaluated on the same draws. Replications run in parallel and are
//! reduced in replication order, so reports are bitwise reproducible.

use momentgate_core::dependence::{n_star, sieved_ordered, CorrectionParams};
use momentgate_core::estimators::{order_stats, rho_hat, theta_hat, OrderedSample};
use momentgate_core::rng::derive_seed;
use momentgate_core::tail_models::sample_iid;
use momentgate_core::theory::{critical_curve, moment_quadrature, predicted_lns};
use momentgate_core::{CovarianceSpec, TailModel};
use rayon::prelude::*;

use crate::config::{ExperimentConfig, ExperimentKind};
use crate::format::{Cell, Table};
use crate::synth::{SeriesSpec, Synthesizer};
use crate::AppError;

/// Moments of one estimator over the replications of a cell.
///
/// Failed replications are NaN draws; they are counted in `failures` and the
/// moments use the `count` finite draws. `variance` divides by `count`, so
/// `mse = bias^2 + variance`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Summary {
    pub count: usize,
    pub failures: usize,
    pub mean: f64,
    pub bias: f64,
    pub relative_bias: f64,
    pub variance: f64,
    pub mse: f64,
    pub relative_mse: f64,
    /// Standard error of the mean (and of the bias).
    pub se_mean: f64,
    pub se_variance: f64,
    pub se_mse: f64,
}

fn pop_mean(x: &[f64]) -> f64 {
    x.iter().sum::<f64>() / x.len() as f64
}

/// Population standard error of a mean of `x`.
fn se_of_mean(x: &[f64]) -> f64 {
    let n = x.len() as f64;
    if x.len() < 2 {
        return f64::NAN;
    }
    let m = pop_mean(x);
    let ss: f64 = x.iter().map(|v| (v - m) * (v - m)).sum();
    (ss / (n - 1.0) / n).sqrt()
}

impl Summary {
    pub fn new(draws: &[f64], target: f64) -> Self {
        let ok: Vec<f64> = draws.iter().copied().filter(|v| v.is_finite()).collect();
        let count = ok.len();
        let failures = draws.len() - count;
        if count == 0 {
            let nan = f64::NAN;
            return Self {
                count,
                failures,
                mean: nan,
                bias: nan,
                relative_bias: nan,
                variance: nan,
                mse: nan,
                relative_mse: nan,
                se_mean: nan,
                se_variance: nan,
                se_mse: nan,
            };
        }
        let mean = pop_mean(&ok);
        let dev2: Vec<f64> = ok.iter().map(|v| (v - mean) * (v - mean)).collect();
        let err2: Vec<f64> = ok.iter().map(|v| (v - target) * (v - target)).collect();
        let variance = pop_mean(&dev2);
        let mse = pop_mean(&err2);
        let bias = mean - target;
        Self {
            count,
            failures,
            mean,
            bias,
            relative_bias: bias / target,
            variance,
            mse,
            relative_mse: mse / (target * target),
            se_mean: se_of_mean(&ok),
            se_variance: se_of_mean(&dev2),
            se_mse: se_of_mean(&err2),
        }
    }
}

/// Population covariance over replications where both draws are finite.
pub fn joint_covariance(a: &[f64], b: &[f64]) -> f64 {
    let (x, y) = finite_pairs(a, b);
    if x.is_empty() {
        return f64::NAN;
    }
    let (mx, my) = (pop_mean(&x), pop_mean(&y));
    x.iter().zip(&y).map(|(u, v)| (u - mx) * (v - my)).sum::<f64>() / x.len() as f64
}

fn finite_pairs(a: &[f64], b: &[f64]) -> (Vec<f64>, Vec<f64>) {
    a.iter().zip(b).filter(|(u, v)| u.is_finite() && v.is_finite()).map(|(u, v)| (*u, *v)).unzip()
}

/// Parameters identifying a cell.
#[derive(Debug, Clone, PartialEq)]
pub struct CellKey {
    pub model: String,
    pub n: usize,
    pub k_theta: usize,
    pub k_rho: usize,
    pub tau: Option<f64>,
    pub tau_assumed: Option<f64>,
    pub s: Option<f64>,
    pub beta: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct McRow {
    pub key: CellKey,
    /// `theta`, `rho`, `qc`, and for correlated runs also `theta_corr`,
    /// `rho_corr`, `qc_corr` and `theta_rescaled`.
    pub estimator: &'static str,
    pub target: f64,
    pub summary: Summary,
    pub cov_theta_rho: f64,
}

/// Joint per-replication draws of one `qc_hat = theta_hat * rho_hat` pair.
#[derive(Debug, Clone, PartialEq)]
pub struct JointDraws {
    pub key: CellKey,
    /// `qc` or `qc_corr`.
    pub estimator: &'static str,
    pub theta_target: f64,
    pub rho_target: f64,
    pub theta: Vec<f64>,
    pub rho: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LnsRow {
    pub model: String,
    pub n: usize,
    pub q: f64,
    /// `q / qc_exact(n)`, the grid coordinate.
    pub q_over_qc_exact: f64,
    /// `q / qc_approx(n)`, the collapsed coordinate.
    pub q_over_qc: f64,
    pub mean_lns: f64,
    pub se_lns: f64,
    pub predicted_lns: f64,
    pub log_moment: f64,
    pub count: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct McReport {
    pub config: ExperimentConfig,
    pub rows: Vec<McRow>,
    pub joint: Vec<JointDraws>,
    pub lns: Vec<LnsRow>,
}

pub const ROW_COLUMNS: [&str; 24] = [
    "kind",
    "model",
    "n",
    "k_theta",
    "k_rho",
    "tau",
    "tau_assumed",
    "s",
    "beta",
    "estimator",
    "target",
    "mean",
    "bias",
    "relative_bias",
    "variance",
    "mse",
    "relative_mse",
    "se_mean",
    "se_variance",
    "se_mse",
    "count",
    "failures",
    "cov_theta_rho",
    "reps",
];

pub const LNS_COLUMNS: [&str; 12] = [
    "model",
    "n",
    "q",
    "q_over_qc_exact",
    "q_over_qc",
    "mean_lns",
    "se_lns",
    "predicted_lns",
    "log_moment",
    "deviation",
    "count",
    "reps",
];

impl McReport {
    pub fn kind(&self) -> ExperimentKind {
        self.config.experiment.kind
    }

    /// Reproducibility header: version, kind, seed, reps and the resolved
    /// configuration.
    pub fn header(&self) -> Vec<(String, String)> {
        let e = &self.config.experiment;
        vec![
            ("momentgate".into(), env!("CARGO_PKG_VERSION").into()),
            ("kind".into(), e.kind.to_string()),
            ("seed".into(), e.seed.to_string()),
            ("reps".into(), e.reps.to_string()),
            ("config".into(), self.config.to_toml()),
        ]
    }

    pub fn table(&self) -> Table {
        let reps = self.config.experiment.reps;
        if self.kind() == ExperimentKind::Lns {
            let mut t = Table::new(LNS_COLUMNS);
            for r in &self.lns {
                t.push(vec![
                    r.model.clone().into(),
                    r.n.into(),
                    r.q.into(),
                    r.q_over_qc_exact.into(),
                    r.q_over_qc.into(),
                    r.mean_lns.into(),
                    r.se_lns.into(),
                    r.predicted_lns.into(),
                    r.log_moment.into(),
                    (r.mean_lns - r.log_moment).into(),
                    r.count.into(),
                    reps.into(),
                ]);
            }
            return t;
        }
        let kind = self.kind().to_string();
        let mut t = Table::new(ROW_COLUMNS);
        for r in &self.rows {
            let k = &r.key;
            let s = &r.summary;
            t.push(vec![
                kind.as_str().into(),
                k.model.clone().into(),
                k.n.into(),
                k.k_theta.into(),
                k.k_rho.into(),
                k.tau.into(),
                k.tau_assumed.into(),
                k.s.into(),
                k.beta.into(),
                r.estimator.into(),
                r.target.into(),
                s.mean.into(),
                s.bias.into(),
                s.relative_bias.into(),
                s.variance.into(),
                s.mse.into(),
                s.relative_mse.into(),
                s.se_mean.into(),
                s.se_variance.into(),
                s.se_mse.into(),
                s.count.into(),
                s.failures.into(),
                r.cov_theta_rho.into(),
                reps.into(),
            ]);
        }
        t
    }

    /// Rows for one estimator, in report order.
    pub fn rows_for<'a>(&'a self, estimator: &'a str) -> impl Iterator<Item = &'a McRow> + 'a {
        self.rows.iter().filter(move |r| r.estimator == estimator)
    }
}

/// Runs the experiment described by `config`.
pub fn run(config: &ExperimentConfig) -> Result<McReport, AppError> {
    config.validate()?;
    match config.experiment.kind {
        ExperimentKind::Iid => run_iid(config),
        ExperimentKind::Corr => run_corr(config),
        ExperimentKind::Lns => run_lns(config),
    }
}

fn nan_or<E>(r: Result<f64, E>) -> f64 {
    r.unwrap_or(f64::NAN)
}

/// `theta_hat` for every `k_theta` and `rho_hat` for every `k_rho` on one
/// ordered sample.
fn estimate_all(ordered: Option<&OrderedSample>, kt: &[usize], kr: &[usize]) -> (Vec<f64>, Vec<f64>) {
    let th = kt.iter().map(|&k| ordered.map_or(f64::NAN, |o| nan_or(theta_hat(o, k)))).collect();
    let rh = kr.iter().map(|&k| ordered.map_or(f64::NAN, |o| nan_or(rho_hat(o, k)))).collect();
    (th, rh)
}

fn top_needed(n: usize, kt: &[usize], kr: &[usize]) -> usize {
    kt.iter().chain(kr).copied().max().unwrap_or(1).min(n)
}

/// Runs `f(cell, rep)` for every pair in parallel; results come back in
/// `(cell, rep)` order.
fn replicate<T, F>(cells: usize, reps: usize, f: F) -> Result<Vec<Vec<T>>, AppError>
where
    T: Send,
    F: Fn(usize, usize) -> Result<T, AppError> + Sync,
{
    let flat: Vec<T> = (0..cells * reps)
        .into_par_iter()
        .map(|t| f(t / reps, t % reps))
        .collect::<Result<_, _>>()?;
    let mut out: Vec<Vec<T>> = Vec::with_capacity(cells);
    let mut it = flat.into_iter();
    for _ in 0..cells {
        out.push(it.by_ref().take(reps).collect());
    }
    Ok(out)
}

fn column<T, F: Fn(&T) -> f64>(draws: &[T], f: F) -> Vec<f64> {
    draws.iter().map(f).collect()
}

fn product(a: &[f64], b: &[f64]) -> Vec<f64> {
    a.iter().zip(b).map(|(x, y)| x * y).collect()
}

#[derive(Debug, Clone, Copy)]
struct Targets {
    theta: f64,
    rho: f64,
}

impl Targets {
    fn at(model: &TailModel, n: f64) -> Result<Self, AppError> {
        let c = critical_curve(model, n)?;
        Ok(Self { theta: c.theta, rho: c.rho_l_at_dagger })
    }

    fn qc(&self) -> f64 {
        self.theta * self.rho
    }
}

/// Appends the `theta`, `rho` and `qc` rows of one estimator pair and keeps
/// the joint draws.
#[allow(clippy::too_many_arguments)]
fn push_pair(
    rows: &mut Vec<McRow>,
    joint: &mut Vec<JointDraws>,
    key: CellKey,
    names: [&'static str; 3],
    targets: Targets,
    th: Vec<f64>,
    rh: Vec<f64>,
) {
    let cov = joint_covariance(&th, &rh);
    let qc = product(&th, &rh);
    for (name, target, draws) in [(names[0], targets.theta, &th), (names[1], targets.rho, &rh), (names[2], targets.qc(), &qc)] {
        rows.push(McRow { key: key.clone(), estimator: name, target, summary: Summary::new(draws, target), cov_theta_rho: cov });
    }
    joint.push(JointDraws {
        key,
        estimator: names[2],
        theta_target: targets.theta,
        rho_target: targets.rho,
        theta: th,
        rho: rh,
    });
}

struct DataCell {
    model: TailModel,
    model_name: String,
    n: usize,
    kt: Vec<usize>,
    kr: Vec<usize>,
}

fn data_cells(config: &ExperimentConfig) -> Result<Vec<DataCell>, AppError> {
    let e = &config.experiment;
    let models = config.models()?;
    let mut out = Vec::new();
    for (model, name) in models.iter().zip(&e.models) {
        for &n in &e.n {
            let nf = n as f64;
            out.push(DataCell {
                model: *model,
                model_name: name.clone(),
                n,
                kt: e.k_theta.iter().map(|k| k.k_theta(nf)).collect(),
                kr: e.k_rho.iter().map(|k| k.k_rho(nf, e.k_rho_exponent)).collect(),
            });
        }
    }
    Ok(out)
}

/// Independent samples: `theta_hat`, `rho_hat` and `qc_hat` against
/// `theta(n)`, `rho_l(y†(n))` and `qc_approx(n)`.
pub fn run_iid(config: &ExperimentConfig) -> Result<McReport, AppError> {
    let e = &config.experiment;
    let cells = data_cells(config)?;
    let draws = replicate(cells.len(), e.reps, |c, r| {
        let cell = &cells[c];
        let seed = derive_seed(e.seed, &[c as u64, r as u64]);
        let sample = sample_iid(&cell.model, cell.n, seed)?;
        let ordered = order_stats(&sample.values, top_needed(cell.n, &cell.kt, &cell.kr)).ok();
        Ok(estimate_all(ordered.as_ref(), &cell.kt, &cell.kr))
    })?;
    let mut rows = Vec::new();
    let mut joint = Vec::new();
    for (cell, d) in cells.iter().zip(&draws) {
        let targets = Targets::at(&cell.model, cell.n as f64)?;
        for (a, &kt) in cell.kt.iter().enumerate() {
            for (b, &kr) in cell.kr.iter().enumerate() {
                let key = CellKey {
                    model: cell.model_name.clone(),
                    n: cell.n,
                    k_theta: kt,
                    k_rho: kr,
                    tau: None,
                    tau_assumed: None,
                    s: None,
                    beta: None,
                };
                let th = column(d, |x| x.0[a]);
                let rh = column(d, |x| x.1[b]);
                push_pair(&mut rows, &mut joint, key, ["theta", "rho", "qc"], targets, th, rh);
            }
        }
    }
    Ok(McReport { config: config.clone(), rows, joint, lns: Vec::new() })
}

struct CorrDraw {
    theta: Vec<f64>,
    rho: Vec<f64>,
    // Per (tau_assumed, radius factor) setting.
    corrected: Vec<(Vec<f64>, Vec<f64>, Vec<f64>)>,
}

/// Correlated series: uncorrected and corrected estimators against the
/// theory at `n* = n / (1 + kappa tau)`, plus `ln n* / Omega_k` on the raw
/// top values. With several assumed `tau` the same series are reused, so
/// the sweep compares estimators on common draws.
pub fn run_corr(config: &ExperimentConfig) -> Result<McReport, AppError> {
    let e = &config.experiment;
    let corr = config.corr.as_ref().ok_or_else(|| AppError::Usage("missing [corr] section".into()))?;
    let base = data_cells(config)?;
    struct CorrCell<'a> {
        data: &'a DataCell,
        tau: f64,
        synth: Synthesizer,
        settings: Vec<(f64, f64, CorrectionParams)>,
    }
    let mut cells = Vec::new();
    for data in &base {
        for &tau in &corr.tau {
            let spec = SeriesSpec { model: data.model, cov: CovarianceSpec::exponential(tau)?, n: data.n };
            let synth = Synthesizer::new(spec, corr.match_mode)?;
            let mut settings = Vec::new();
            for assumed in corr.assumed_for(tau) {
                for factor in corr.radius_factors() {
                    let params = CorrectionParams {
                        tau: assumed,
                        kappa: corr.kappa,
                        alpha: corr.alpha,
                        beta: corr.beta,
                        s: Some(factor * assumed),
                    };
                    settings.push((assumed, factor * assumed, params));
                }
            }
            cells.push(CorrCell { data, tau, synth, settings });
        }
    }
    let draws = replicate(cells.len(), e.reps, |c, r| {
        let cell = &cells[c];
        let (kt, kr) = (&cell.data.kt, &cell.data.kr);
        let seed = derive_seed(e.seed, &[c as u64, r as u64]);
        let series = cell.synth.series(seed)?.values;
        let need = top_needed(series.len(), kt, kr);
        let ordered = order_stats(&series, need).ok();
        let (theta, rho) = estimate_all(ordered.as_ref(), kt, kr);
        let corrected = cell
            .settings
            .iter()
            .map(|(assumed, _, params)| {
                let sieved = sieved_ordered(&series, need, params).ok();
                let (t, r) = estimate_all(sieved.as_ref(), kt, kr);
                let ns = n_star(series.len() as f64, *assumed, params.kappa);
                let rescaled = ordered.as_ref().and_then(|o| o.with_n(ns).ok());
                let resc = kt.iter().map(|&k| rescaled.as_ref().map_or(f64::NAN, |o| nan_or(theta_hat(o, k)))).collect();
                (t, r, resc)
            })
            .collect();
        Ok(CorrDraw { theta, rho, corrected })
    })?;
    let mut rows = Vec::new();
    let mut joint = Vec::new();
    for (cell, d) in cells.iter().zip(&draws) {
        let data = cell.data;
        let targets = Targets::at(&data.model, n_star(data.n as f64, cell.tau, corr.kappa))?;
        for (a, &kt) in data.kt.iter().enumerate() {
            for (b, &kr) in data.kr.iter().enumerate() {
                let key = CellKey {
                    model: data.model_name.clone(),
                    n: data.n,
                    k_theta: kt,
                    k_rho: kr,
                    tau: Some(cell.tau),
                    tau_assumed: None,
                    s: None,
                    beta: None,
                };
                let th = column(d, |x| x.theta[a]);
                let rh = column(d, |x| x.rho[b]);
                push_pair(&mut rows, &mut joint, key.clone(), ["theta", "rho", "qc"], targets, th, rh);
                for (i, (assumed, s, _)) in cell.settings.iter().enumerate() {
                    let key = CellKey { tau_assumed: Some(*assumed), s: Some(*s), beta: Some(corr.beta), ..key.clone() };
                    let th = column(d, |x| x.corrected[i].0[a]);
                    let rh = column(d, |x| x.corrected[i].1[b]);
                    let resc = column(d, |x| x.corrected[i].2[a]);
                    push_pair(&mut rows, &mut joint, key.clone(), ["theta_corr", "rho_corr", "qc_corr"], targets, th, rh);
                    rows.push(McRow {
                        key,
                        estimator: "theta_rescaled",
                        target: targets.theta,
                        summary: Summary::new(&resc, targets.theta),
                        cov_theta_rho: f64::NAN,
                    });
                }
            }
        }
    }
    Ok(McReport { config: config.clone(), rows, joint, lns: Vec::new() })
}

/// `ln S(n, q)` with `S = (1/n) sum e^{q y_i}`, by log-sum-exp.
pub fn ln_s(values: &[f64], q: f64) -> f64 {
    let m = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let sum: f64 = values.iter().map(|y| (q * (y - m)).exp()).sum();
    q * m + sum.ln() - (values.len() as f64).ln()
}

/// Mean `ln S(n, q)` over independent samples, on a grid of `q / qc_exact(n)`,
/// next to the log moment and the piecewise prediction.
pub fn lns_curve(
    models: &[(String, TailModel)],
    ns: &[usize],
    grid: &[f64],
    reps: usize,
    seed: u64,
) -> Result<Vec<LnsRow>, AppError> {
    if grid.iter().any(|g| !(*g > 0.0)) {
        return Err(AppError::Usage("q grid must be positive".into()));
    }
    let mut cells = Vec::new();
    for (name, model) in models {
        for &n in ns {
            let c = critical_curve(model, n as f64)?;
            let qs: Vec<f64> = grid.iter().map(|g| g * c.qc_exact).collect();
            cells.push((name, model, n, c, qs));
        }
    }
    let draws = replicate(cells.len(), reps, |c, r| {
        let (_, model, n, _, qs) = &cells[c];
        let sample = sample_iid(*model, *n, derive_seed(seed, &[c as u64, r as u64]))?;
        Ok(qs.iter().map(|&q| ln_s(&sample.values, q)).collect::<Vec<f64>>())
    })?;
    let mut out = Vec::new();
    for ((name, model, n, curve, qs), d) in cells.iter().zip(&draws) {
        for (j, &q) in qs.iter().enumerate() {
            let x: Vec<f64> = d.iter().map(|v| v[j]).filter(|v| v.is_finite()).collect();
            out.push(LnsRow {
                model: (*name).clone(),
                n: *n,
                q,
                q_over_qc_exact: grid[j],
                q_over_qc: q / curve.qc_approx,
                mean_lns: if x.is_empty() { f64::NAN } else { pop_mean(&x) },
                se_lns: se_of_mean(&x),
                predicted_lns: nan_or(predicted_lns(*model, *n as f64, q)),
                log_moment: nan_or(moment_quadrature(*model, q).map(|m| m.log_value)),
                count: x.len(),
            });
        }
    }
    Ok(out)
}

fn run_lns(config: &ExperimentConfig) -> Result<McReport, AppError> {
    let e = &config.experiment;
    let lns = config.lns.as_ref().ok_or_else(|| AppError::Usage("missing [lns] section".into()))?;
    let models: Vec<(String, TailModel)> = e.models.iter().cloned().zip(config.models()?).collect();
    let rows = lns_curve(&models, &e.n, &lns.grid(), e.reps, e.seed)?;
    Ok(McReport { config: config.clone(), rows: Vec::new(), joint: Vec::new(), lns: rows })
}

/// First grid point `q / qc_exact` at which the mean `ln S` departs from the
/// log moment by more than `n_se` standard errors.
pub fn first_departure(rows: &[LnsRow], model: &str, n: usize, n_se: f64) -> Option<f64> {
    let mut sel: Vec<&LnsRow> = rows.iter().filter(|r| r.model == model && r.n == n).collect();
    sel.sort_by(|a, b| a.q.total_cmp(&b.q));
    sel.into_iter().find(|r| (r.mean_lns - r.log_moment).abs() > n_se * r.se_lns).map(|r| r.q_over_qc_exact)
}

/// Measured bias and variance of `qc_hat` next to the values implied by the
/// component moments.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Propagation {
    pub count: usize,
    pub bias_measured: f64,
    /// `C + b_theta (rho + b_rho) + b_rho theta`, exact for a product.
    pub bias_exact: f64,
    /// `C + b_theta (rho + b_rho) + b_rho (theta + b_theta)`, which counts
    /// `b_theta b_rho` twice.
    pub bias_double_counted: f64,
    pub variance_measured: f64,
    /// `V_A V_B + Cov(A^2, B^2) - C^2 + V_A b^2 + V_B a^2 - 2 C a b`.
    pub variance_formula: f64,
    pub cov_theta_rho: f64,
    pub corr_theta_rho: f64,
}

fn rel_gap(formula: f64, measured: f64) -> f64 {
    (formula - measured).abs() / measured.abs().max(f64::MIN_POSITIVE)
}

impl Propagation {
    pub fn from_draws(d: &JointDraws) -> Self {
        let (a, b) = finite_pairs(&d.theta, &d.rho);
        let count = a.len();
        let (t, r) = (d.theta_target, d.rho_target);
        let (ma, mb) = (pop_mean(&a), pop_mean(&b));
        let va = a.iter().map(|x| (x - ma) * (x - ma)).sum::<f64>() / count as f64;
        let vb = b.iter().map(|x| (x - mb) * (x - mb)).sum::<f64>() / count as f64;
        let c = a.iter().zip(&b).map(|(x, y)| (x - ma) * (y - mb)).sum::<f64>() / count as f64;
        let a2: Vec<f64> = a.iter().map(|x| x * x).collect();
        let b2: Vec<f64> = b.iter().map(|x| x * x).collect();
        let (ma2, mb2) = (pop_mean(&a2), pop_mean(&b2));
        let c22 = a2.iter().zip(&b2).map(|(x, y)| (x - ma2) * (y - mb2)).sum::<f64>() / count as f64;
        let q = product(&a, &b);
        let mq = pop_mean(&q);
        let vq = q.iter().map(|x| (x - mq) * (x - mq)).sum::<f64>() / count as f64;
        let (bt, br) = (ma - t, mb - r);
        Self {
            count,
            bias_measured: mq - t * r,
            bias_exact: c + bt * (r + br) + br * t,
            bias_double_counted: c + bt * (r + br) + br * (t + bt),
            variance_measured: vq,
            variance_formula: va * vb + c22 - c * c + va * mb * mb + vb * ma * ma - 2.0 * c * ma * mb,
            cov_theta_rho: c,
            corr_theta_rho: c / (va * vb).sqrt(),
        }
    }

    pub fn bias_exact_gap(&self) -> f64 {
        rel_gap(self.bias_exact, self.bias_measured)
    }

    pub fn bias_double_counted_gap(&self) -> f64 {
        rel_gap(self.bias_double_counted, self.bias_measured)
    }

    pub fn variance_gap(&self) -> f64 {
        rel_gap(self.variance_formula, self.variance_measured)
    }
}

pub const PROPAGATION_COLUMNS: [&str; 21] = [
    "model",
    "n",
    "k_theta",
    "k_rho",
    "tau",
    "tau_assumed",
    "s",
    "beta",
    "estimator",
    "count",
    "bias_measured",
    "bias_exact",
    "bias_exact_gap",
    "bias_double_counted",
    "bias_double_counted_gap",
    "variance_measured",
    "variance_formula",
    "variance_gap",
    "cov_theta_rho",
    "corr_theta_rho",
    "qc_target",
];

/// Propagation identities checked on every joint draw set of a report.
pub fn propagation_check(report: &McReport) -> Table {
    let mut t = Table::new(PROPAGATION_COLUMNS);
    for d in &report.joint {
        let p = Propagation::from_draws(d);
        let k = &d.key;
        let row: Vec<Cell> = vec![
            k.model.clone().into(),
            k.n.into(),
            k.k_theta.into(),
            k.k_rho.into(),
            k.tau.into(),
            k.tau_assumed.into(),
            k.s.into(),
            k.beta.into(),
            d.estimator.into(),
            p.count.into(),
            p.bias_measured.into(),
            p.bias_exact.into(),
            p.bias_exact_gap().into(),
            p.bias_double_counted.into(),
            p.bias_double_counted_gap().into(),
            p.variance_measured.into(),
            p.variance_formula.into(),
            p.variance_gap().into(),
            p.cov_theta_rho.into(),
            p.corr_theta_rho.into(),
            (d.theta_target * d.rho_target).into(),
        ];
        t.push(row);
    }
    t
}

#[cfg(test)]
mod tests {
    use super::*;

    fn iid_config(k_theta: &str, reps: usize) -> ExperimentConfig {
        ExperimentConfig::from_toml(&format!(
            "[experiment]\nkind = \"iid\"\nmodels = [\"logweibull:rho=2\"]\nn = [1000]\nk_theta = {k_theta}\nreps = {reps}\nseed = 4\n"
        ))
        .unwrap()
    }

    #[test]
    fn summary_identity() {
        let s = Summary::new(&[1.0, 2.0, 4.0, f64::NAN, 7.5], 3.0);
        assert_eq!((s.count, s.failures), (4, 1));
        assert!((s.mse - (s.bias * s.bias + s.variance)).abs() <= 1e-12 * s.mse);
        assert!((s.mean - 3.625).abs() < 1e-15);
        assert!((s.relative_bias - 0.625 / 3.0).abs() < 1e-15);
        let empty = Summary::new(&[f64::NAN, f64::NAN], 1.0);
        assert_eq!((empty.count, empty.failures), (0, 2));
        assert!(empty.mean.is_nan());
    }

    #[test]
    fn iid_rows_satisfy_mse_identity() {
        let rep = run(&iid_config("[1, 2, \"default\"]", 40)).unwrap();
        assert_eq!(rep.rows.len(), 9);
        assert_eq!(rep.joint.len(), 3);
        for r in &rep.rows {
            let s = r.summary;
            assert_eq!(s.count + s.failures, 40);
            assert!((s.mse - (s.bias * s.bias + s.variance)).abs() <= 1e-12 * s.mse, "{r:?}");
        }
        assert_eq!(rep.rows[6].key.k_theta, 28);
    }

    #[test]
    fn extending_reps_keeps_earlier_draws() {
        let a = run(&iid_config("[2]", 20)).unwrap();
        let b = run(&iid_config("[2]", 30)).unwrap();
        assert_eq!(a.joint[0].theta[..], b.joint[0].theta[..20]);
        assert_eq!(a.joint[0].rho[..], b.joint[0].rho[..20]);
        assert_eq!(run(&iid_config("[2]", 20)).unwrap(), a);
    }

    #[test]
    fn propagation_identities_are_exact() {
        let rep = run(&iid_config("[1, \"default\"]", 200)).unwrap();
        for d in &rep.joint {
            let p = Propagation::from_draws(d);
            assert!(p.bias_exact_gap() < 1e-10, "{p:?}");
            assert!(p.variance_gap() < 1e-8, "{p:?}");
        }
        let table = propagation_check(&rep);
        assert_eq!(table.rows.len(), 2);
    }

    #[test]
    fn double_counting_is_visible_with_large_biases() {
        let d = JointDraws {
            key: CellKey {
                model: "x".into(),
                n: 10,
                k_theta: 1,
                k_rho: 2,
                tau: None,
                tau_assumed: None,
                s: None,
                beta: None,
            },
            estimator: "qc",
            theta_target: 1.0,
            rho_target: 1.0,
            theta: vec![1.5, 1.7, 1.6],
            rho: vec![2.0, 2.2, 1.9],
        };
        let p = Propagation::from_draws(&d);
        assert!(p.bias_exact_gap() < 1e-12);
        assert!(p.bias_double_counted_gap() > 0.1);
    }

    #[test]
    fn lns_limits() {
        let y = [0.3, -1.0, 2.0, 1.5];
        let ln4 = 4f64.ln();
        assert!((ln_s(&y, 1e-9) - (1e-9 * 2.8 / 4.0)).abs() < 1e-15);
        // Large q: ln S -> q max(y) - ln n, slope max(y).
        let (a, b) = (ln_s(&y, 400.0), ln_s(&y, 401.0));
        assert!((a - (400.0 * 2.0 - ln4)).abs() < 1e-12);
        assert!((b - a - 2.0).abs() < 1e-12);
        assert!(ln_s(&y, 1e5).is_finite());
    }

    #[test]
    fn lns_curve_small_q_matches_moment() {
        let m = vec![("lognormal".to_string(), TailModel::log_normal())];
        let rows = lns_curve(&m, &[1000], &[0.2, 2.5], 100, 3).unwrap();
        assert_eq!(rows.len(), 2);
        let r = &rows[0];
        assert!((r.mean_lns - r.log_moment).abs() / r.log_moment.abs() < 0.05, "{r:?}");
        assert!((r.log_moment - r.q * r.q / 2.0).abs() < 1e-8);
        assert!(rows[1].mean_lns < rows[1].log_moment - 5.0 * rows[1].se_lns);
        assert_eq!(first_departure(&rows, "lognormal", 1000, 3.0), Some(2.5));
    }

    #[test]
    fn corr_run_reports_all_estimators() {
        let cfg = ExperimentConfig::from_toml(
            "[experiment]\nkind = \"corr\"\nmodels = [\"lognormal\"]\nn = [4096]\nk_theta = [5]\nk_rho = [40]\nreps = 8\nseed = 1\n\
             [corr]\ntau = [0, 20]\ntau_assumed = [20, 40]\n",
        )
        .unwrap();
        let rep = run(&cfg).unwrap();
        // Per tau: 3 uncorrected rows and 2 settings of 4 rows each.
        assert_eq!(rep.rows.len(), 2 * (3 + 2 * 4));
        assert_eq!(rep.joint.len(), 2 * 3);
        let names: Vec<&str> = rep.rows[..11].iter().map(|r| r.estimator).collect();
        assert_eq!(names[..7], ["theta", "rho", "qc", "theta_corr", "rho_corr", "qc_corr", "theta_rescaled"]);
        let tau20 = rep.rows.iter().find(|r| r.key.tau == Some(20.0) && r.estimator == "qc").unwrap();
        let expected = momentgate_core::dependence::qc_theory_corr(&TailModel::log_normal(), 4096.0, 20.0, 0.08).unwrap();
        assert!((tau20.target - expected).abs() < 1e-12);
        let t = rep.table();
        assert_eq!(t.columns.len(), ROW_COLUMNS.len());
        assert!(rep.rows.iter().all(|r| r.summary.count + r.summary.failures == 8));
    }
}
