//! Command line: theory queries, sampling, synthesis, estimation and
//! Monte-Carlo runs.
//!
//! Data goes to stdout or `--out`, diagnostics to stderr. Exit codes: 0 on
//! success, 2 on usage errors, 3 on numerical failures, 4 on data errors.

use std::fs::File;
use std::io::{self, BufReader, Read, Write};
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use momentgate_core::dependence::{
    n_star, sieved_ordered, CorrectionParams, DEFAULT_ALPHA, DEFAULT_BETA, DEFAULT_KAPPA,
};
use momentgate_core::estimators::{default_k_rho, default_k_theta, order_stats, qc_hat_ordered, OrderedSample};
use momentgate_core::tail_models::sample_iid;
use momentgate_core::theory::{
    critical_curve, moment_quadrature, moment_saddlepoint, predicted_lns, truncated_moment,
};
use momentgate_core::{CovarianceSpec, TailModel};

use crate::config::{preset, ExperimentConfig};
use crate::format::{read_sample, render, write_sample, Cell, OutputFormat, Table};
use crate::montecarlo::{propagation_check, run};
use crate::synth::{MatchMode, SeriesSpec, Synthesizer};
use crate::AppError;

/// Environment variable capping the worker pool.
pub const THREADS_ENV: &str = "MOMENTGATE_THREADS";

#[derive(Debug, Parser)]
#[command(name = "momentgate", version, about = "Critical moment order of exponential-power-law tails")]
pub struct Cli {
    /// Master seed (overrides the config seed for `mc`).
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Write data here instead of stdout.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    #[arg(long, global = true, value_enum, default_value_t = OutputFormat::Csv)]
    pub format: OutputFormat,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Frontier, critical orders and optional moment approximations.
    Theory(TheoryArgs),
    /// I.i.d. sample of `Y = ln X` in the sample file format.
    Sample(SampleArgs),
    /// Correlated series with a prescribed marginal.
    Synth(SynthArgs),
    /// Estimate theta, rho and q_c from a sample file.
    Estimate(EstimateArgs),
    /// Monte-Carlo experiment from a config file or a figure preset.
    Mc(McArgs),
}

#[derive(Debug, Args)]
pub struct TheoryArgs {
    /// `logweibull:rho=R`, `slep:rho=R` or `lognormal`.
    #[arg(long)]
    pub model: String,
    /// Sample sizes (real values allowed), comma separated.
    #[arg(long, value_delimiter = ',', required = true)]
    pub n: Vec<f64>,
    /// Moment orders at which to add moment approximations.
    #[arg(long, value_delimiter = ',')]
    pub q: Vec<f64>,
}

#[derive(Debug, Args)]
pub struct SampleArgs {
    #[arg(long)]
    pub model: String,
    #[arg(long)]
    pub n: usize,
}

#[derive(Debug, Args)]
pub struct SynthArgs {
    #[arg(long)]
    pub model: String,
    /// `exp:tau=T`, `white` or `table:c0,c1,...`.
    #[arg(long)]
    pub cov: String,
    #[arg(long)]
    pub n: usize,
    /// Layer the correlation applies to: `gaussian` or `hermite`.
    #[arg(long = "match", default_value = "gaussian")]
    pub match_mode: String,
}

#[derive(Debug, Args)]
pub struct EstimateArgs {
    /// Sample file, or `-` for stdin.
    #[arg(long)]
    pub input: PathBuf,
    /// Values are `X`; take logs first.
    #[arg(long)]
    pub log_input: bool,
    #[arg(long)]
    pub k_theta: Option<usize>,
    #[arg(long)]
    pub k_rho: Option<usize>,
    /// Sample size the values are the top order statistics of (defaults to
    /// the file's `n` header or the number of values).
    #[arg(long)]
    pub n_eff: Option<f64>,
    /// Apply the correlated-series correction (sieve plus `n*`).
    #[arg(long)]
    pub corr: bool,
    #[arg(long, requires = "corr")]
    pub tau: Option<f64>,
    #[arg(long, default_value_t = DEFAULT_KAPPA)]
    pub kappa: f64,
    #[arg(long, default_value_t = DEFAULT_ALPHA)]
    pub alpha: f64,
    #[arg(long, default_value_t = DEFAULT_BETA)]
    pub beta: f64,
    /// Sieve radius overriding `alpha * tau`.
    #[arg(long)]
    pub s: Option<f64>,
}

#[derive(Debug, Args)]
pub struct McArgs {
    #[arg(long, conflicts_with = "figure", required_unless_present = "figure")]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub figure: Option<u32>,
    /// Override the number of replications.
    #[arg(long)]
    pub reps: Option<usize>,
    /// Emit the bias and variance propagation table instead of cell rows.
    #[arg(long)]
    pub propagation: bool,
}

fn parse_model(s: &str) -> Result<TailModel, AppError> {
    Ok(s.parse()?)
}

fn version_header(command: &str) -> Vec<(String, String)> {
    vec![("momentgate".into(), env!("CARGO_PKG_VERSION").into()), ("command".into(), command.into())]
}

fn theory(args: &TheoryArgs) -> Result<(Table, Vec<(String, String)>), AppError> {
    let model = parse_model(&args.model)?;
    if args.q.iter().any(|q| !(*q > 0.0)) {
        return Err(AppError::Usage("moment orders must be positive".into()));
    }
    let mut t = Table::new([
        "model",
        "n",
        "ln_n",
        "y_dagger",
        "theta",
        "rho_l",
        "qc_exact",
        "qc_approx",
        "q_m",
        "q",
        "log_moment",
        "log_moment_saddle",
        "log_moment_truncated",
        "predicted_lns",
    ]);
    for &n in &args.n {
        let c = critical_curve(&model, n)?;
        let base: Vec<Cell> = vec![
            model.to_string().into(),
            n.into(),
            n.ln().into(),
            c.y_dagger.into(),
            c.theta.into(),
            c.rho_l_at_dagger.into(),
            c.qc_exact.into(),
            c.qc_approx.into(),
            c.q_m.into(),
        ];
        if args.q.is_empty() {
            let mut row = base.clone();
            row.extend(std::iter::repeat_n(Cell::Missing, 5));
            t.push(row);
        }
        for &q in &args.q {
            let mut row = base.clone();
            let opt = |r: momentgate_core::Result<f64>| r.ok().map_or(Cell::Missing, Cell::Num);
            row.push(q.into());
            row.push(moment_quadrature(&model, q)?.log_value.into());
            row.push(opt(moment_saddlepoint(&model, q).map(|m| m.log_value)));
            row.push(truncated_moment(&model, n, q)?.log_value.into());
            row.push(predicted_lns(&model, n, q)?.into());
            t.push(row);
        }
    }
    let mut h = version_header("theory");
    h.push(("model".into(), model.to_string()));
    Ok((t, h))
}

fn sample_header(seed: u64, model: &TailModel, n: usize) -> Vec<(String, String)> {
    vec![
        ("seed".into(), seed.to_string()),
        ("model".into(), model.to_string()),
        ("n".into(), n.to_string()),
        ("momentgate".into(), env!("CARGO_PKG_VERSION").into()),
    ]
}

fn sample(args: &SampleArgs, seed: u64) -> Result<Vec<u8>, AppError> {
    let model = parse_model(&args.model)?;
    let s = sample_iid(&model, args.n, seed)?;
    let mut buf = Vec::new();
    write_sample(&mut buf, &s.values, &sample_header(seed, &model, args.n))?;
    Ok(buf)
}

fn synth(args: &SynthArgs, seed: u64) -> Result<Vec<u8>, AppError> {
    let model = parse_model(&args.model)?;
    let cov: CovarianceSpec = args.cov.parse()?;
    let mode: MatchMode = args.match_mode.parse()?;
    let spec = SeriesSpec { model, cov: cov.clone(), n: args.n };
    let s = Synthesizer::new(spec, mode)?.series(seed)?;
    let mut header = sample_header(seed, &model, args.n);
    header.insert(2, ("cov".into(), cov.to_string()));
    header.insert(3, ("match".into(), mode.to_string()));
    let mut buf = Vec::new();
    write_sample(&mut buf, &s.values, &header)?;
    Ok(buf)
}

fn read_input(path: &Path) -> Result<crate::format::SampleFile, AppError> {
    if path.as_os_str() == "-" {
        let mut text = String::new();
        io::stdin().read_to_string(&mut text)?;
        read_sample(text.as_bytes())
    } else {
        let f = File::open(path).map_err(|e| AppError::Data(format!("{}: {e}", path.display())))?;
        read_sample(BufReader::new(f))
    }
}

fn estimate(args: &EstimateArgs) -> Result<(Table, Vec<(String, String)>), AppError> {
    let file = read_input(&args.input)?;
    let mut values = file.values.clone();
    if args.log_input {
        if let Some(v) = values.iter().find(|v| !(**v > 0.0)) {
            return Err(AppError::Data(format!("--log-input needs positive values, found {v}")));
        }
        values.iter_mut().for_each(|v| *v = v.ln());
    }
    let count = values.len();
    let mut t = Table::new([
        "n", "n_used", "k_theta", "k_rho", "theta_hat", "rho_hat", "qc_hat", "tau", "kappa", "s", "beta",
    ]);
    let mut h = version_header("estimate");
    h.push(("input".into(), args.input.display().to_string()));
    if args.corr {
        let tau = args.tau.ok_or_else(|| AppError::Usage("--corr needs --tau".into()))?;
        if args.n_eff.is_some() {
            return Err(AppError::Usage("--n-eff cannot be combined with --corr".into()));
        }
        let params = CorrectionParams { tau, kappa: args.kappa, alpha: args.alpha, beta: args.beta, s: args.s };
        let ns = n_star(count as f64, tau, args.kappa);
        let kt = args.k_theta.unwrap_or_else(|| default_k_theta(ns));
        let kr = args.k_rho.unwrap_or_else(|| default_k_rho(ns));
        let ordered = sieved_ordered(&values, kt.max(kr), &params)?;
        let e = qc_hat_ordered(&ordered, kt, kr)?;
        t.push(vec![
            count.into(),
            ns.into(),
            kt.into(),
            kr.into(),
            e.theta_hat.into(),
            e.rho_hat.into(),
            e.qc_hat.into(),
            tau.into(),
            args.kappa.into(),
            params.radius().into(),
            args.beta.into(),
        ]);
        return Ok((t, h));
    }
    let header_n = match file.header_value("n") {
        Some(v) => Some(v.parse::<f64>().map_err(|_| AppError::Data(format!("bad n header `{v}`")))?),
        None => None,
    };
    let n = args.n_eff.or(header_n).unwrap_or(count as f64);
    if !(n >= count as f64) {
        return Err(AppError::Usage(format!("n = {n} is below the number of values {count}")));
    }
    // Rules are evaluated at n and capped by the values at hand.
    let kt = args.k_theta.unwrap_or_else(|| default_k_theta(n).min(count));
    let kr = args.k_rho.unwrap_or_else(|| default_k_rho(n).min(count));
    let top = order_stats(&values, kt.max(kr).min(count))?;
    let ordered = OrderedSample::new(top.top().to_vec(), n)?;
    let e = qc_hat_ordered(&ordered, kt, kr)?;
    t.push(vec![
        n.into(),
        n.into(),
        kt.into(),
        kr.into(),
        e.theta_hat.into(),
        e.rho_hat.into(),
        e.qc_hat.into(),
        Cell::Missing,
        Cell::Missing,
        Cell::Missing,
        Cell::Missing,
    ]);
    Ok((t, h))
}

fn mc(args: &McArgs, seed: Option<u64>) -> Result<(Table, Vec<(String, String)>), AppError> {
    let mut cfg = match (&args.config, args.figure) {
        (Some(path), _) => {
            let text = std::fs::read_to_string(path)
                .map_err(|e| AppError::Data(format!("{}: {e}", path.display())))?;
            ExperimentConfig::from_toml(&text)?
        }
        (None, Some(fig)) => preset(fig)?,
        (None, None) => return Err(AppError::Usage("mc needs --config or --figure".into())),
    };
    if let Some(r) = args.reps {
        cfg.experiment.reps = r;
    }
    if let Some(s) = seed {
        cfg.experiment.seed = s;
    }
    cfg.validate()?;
    let report = run(&cfg)?;
    let mut h = version_header("mc");
    h.extend(report.header().into_iter().skip(1));
    let table = if args.propagation { propagation_check(&report) } else { report.table() };
    Ok((table, h))
}

fn init_threads() -> Result<(), AppError> {
    if let Ok(v) = std::env::var(THREADS_ENV) {
        let n: usize = v
            .trim()
            .parse()
            .ok()
            .filter(|n| *n > 0)
            .ok_or_else(|| AppError::Usage(format!("{THREADS_ENV} = `{v}` is not a positive integer")))?;
        // A pool may already exist when dispatch runs more than once in a
        // process; the first setting wins.
        let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    }
    Ok(())
}

fn execute(cli: &Cli) -> Result<Vec<u8>, AppError> {
    init_threads()?;
    let seed = cli.seed.unwrap_or(0);
    let tabular = |(t, h): (Table, Vec<(String, String)>)| render(&t, &h, cli.format).into_bytes();
    Ok(match &cli.command {
        Command::Theory(a) => tabular(theory(a)?),
        Command::Sample(a) => sample(a, seed)?,
        Command::Synth(a) => synth(a, seed)?,
        Command::Estimate(a) => tabular(estimate(a)?),
        Command::Mc(a) => tabular(mc(a, cli.seed)?),
    })
}

fn emit(bytes: &[u8], out: Option<&Path>) -> Result<(), AppError> {
    match out {
        Some(p) => std::fs::write(p, bytes).map_err(|e| AppError::Data(format!("{}: {e}", p.display()))),
        None => {
            let mut so = io::stdout().lock();
            so.write_all(bytes)?;
            so.flush()?;
            Ok(())
        }
    }
}

/// Parses `argv`, runs the command and returns the process exit code.
pub fn dispatch<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    match execute(&cli).and_then(|b| emit(&b, cli.out.as_deref())) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("momentgate: {e}");
            e.exit_code()
        }
    }
}
