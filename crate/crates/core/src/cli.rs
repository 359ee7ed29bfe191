//! The `etas-lab` command line: JSON run configs wired to the library.
//!
//! Every subcommand reads one [`RunConfig`], applies the `--seed`, `--jobs`
//! and `--out` overrides (flags win), and writes self-describing CSV/JSON
//! into the output directory. Relative paths in the config resolve against
//! the config file's directory.

use std::collections::BTreeMap;
use std::ffi::OsString;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::catalog::{parse_catalog, split_at_mainshock, Catalog, Event};
use crate::error::{Error, Result};
use crate::inference::{fit, posterior_summary, sample_posterior, FitConfig, ParameterSummary, PosteriorApproximation};
use crate::model::{estimate_beta, EtasParameters, MagnitudeLaw, Param};
use crate::priors::{FixMode, PriorKind, PriorSet, PriorSpec};
use crate::scoring::{
    ks_distance, normalized_iet_ecdf, period_boundaries, score_forecast, weekly_counts, ForecastEnsemble, ScoreReport,
};
use crate::simulator::{
    ensemble_to_csv, simulate_ensemble, simulate_ensemble_with, SimulationConfig, SimulationSummary, DEFAULT_MAX_EVENTS,
};

/// Exit status for usage, config and data errors.
pub const EXIT_ERROR: i32 = 1;
/// Exit status when a fit did not meet its convergence criterion.
pub const EXIT_NOT_CONVERGED: i32 = 2;

#[derive(Debug, Parser)]
#[command(name = "etas-lab", version, about = "Temporal ETAS fitting, simulation and forecast scoring")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Subcommand)]
pub enum CommandKind {
    Fit,
    Simulate,
    Forecast,
    Score,
    Diagnose,
    ExperimentFix,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Fit the model and write the posterior approximation and draws.
    Fit(CommonArgs),
    /// Simulate synthetic catalogues.
    Simulate(CommonArgs),
    /// Posterior-predictive weekly-count forecast after a mainshock.
    Forecast(CommonArgs),
    /// Score a forecast ensemble against observed counts.
    Score(CommonArgs),
    /// Inter-event-time eCDF against Exp(1).
    Diagnose(CommonArgs),
    /// Refit with one parameter fixed at a time and compare.
    ExperimentFix(CommonArgs),
}

impl Command {
    pub fn kind(&self) -> CommandKind {
        match self {
            Command::Fit(_) => CommandKind::Fit,
            Command::Simulate(_) => CommandKind::Simulate,
            Command::Forecast(_) => CommandKind::Forecast,
            Command::Score(_) => CommandKind::Score,
            Command::Diagnose(_) => CommandKind::Diagnose,
            Command::ExperimentFix(_) => CommandKind::ExperimentFix,
        }
    }

    pub fn args(&self) -> &CommonArgs {
        match self {
            Command::Fit(a)
            | Command::Simulate(a)
            | Command::Forecast(a)
            | Command::Score(a)
            | Command::Diagnose(a)
            | Command::ExperimentFix(a) => a,
        }
    }
}

#[derive(Debug, Clone, Args)]
pub struct CommonArgs {
    /// JSON run configuration.
    #[arg(long)]
    pub config: PathBuf,
    /// Overrides every seed in the config.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Worker threads (default: all cores).
    #[arg(long)]
    pub jobs: Option<usize>,
    /// Output directory (overrides the config's `output`).
    #[arg(long)]
    pub out: Option<PathBuf>,
}

/// How a command finished when it did not error.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Outcome {
    Success,
    NotConverged,
}

impl Outcome {
    pub fn exit_code(self) -> i32 {
        match self {
            Outcome::Success => 0,
            Outcome::NotConverged => EXIT_NOT_CONVERGED,
        }
    }
}

/// Catalogue input.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CatalogSection {
    /// `time,magnitude` CSV.
    pub path: PathBuf,
    pub m0: f64,
    /// Observation window `[start, end]` in days.
    pub window: [f64; 2],
    /// Optional `time,magnitude` CSV of extra parents (e.g. an earlier
    /// mainshock) used only as triggering history.
    #[serde(default)]
    pub history: Option<PathBuf>,
}

/// One fixed parameter.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FixSection {
    pub value: f64,
    /// Concentration; defaults to 1e6 for gamma priors and 1e-4 for uniform.
    #[serde(default)]
    pub epsilon: Option<f64>,
    #[serde(default)]
    pub mode: FixMode,
}

/// The five parameters without `m0`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ParamsSection {
    pub mu: f64,
    #[serde(rename = "K")]
    pub k: f64,
    pub alpha: f64,
    pub c: f64,
    pub p: f64,
}

impl ParamsSection {
    pub fn with_m0(self, m0: f64) -> EtasParameters {
        EtasParameters::new(self.mu, self.k, self.alpha, self.c, self.p, m0)
    }
}

impl From<EtasParameters> for ParamsSection {
    fn from(p: EtasParameters) -> Self {
        Self {
            mu: p.mu,
            k: p.k,
            alpha: p.alpha,
            c: p.c,
            p: p.p,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimulateSection {
    /// Parameters given directly; alternatively `fit_result`.
    #[serde(default)]
    pub params: Option<ParamsSection>,
    /// A `fit.json` written by `fit`; its posterior mode is used.
    #[serde(default)]
    pub fit_result: Option<PathBuf>,
    #[serde(default)]
    pub m0: Option<f64>,
    /// Magnitude rate β; alternatively `b_value` (β = b·ln 10).
    #[serde(default)]
    pub beta: Option<f64>,
    #[serde(default)]
    pub b_value: Option<f64>,
    pub window: [f64; 2],
    #[serde(default = "one")]
    pub replicates: usize,
    #[serde(default)]
    pub history: Vec<Event>,
    #[serde(default = "default_max_events")]
    pub max_events: usize,
    #[serde(default)]
    pub allow_supercritical: bool,
    #[serde(default)]
    pub seed: u64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ForecastSection {
    /// A `fit.json`; without it the model is fitted to the pre-mainshock
    /// events first.
    #[serde(default)]
    pub fit_result: Option<PathBuf>,
    pub mainshock_threshold: f64,
    /// 1-based index among events at or above the threshold.
    #[serde(default = "one")]
    pub mainshock_index: usize,
    /// Forecast start; defaults to the mainshock time and may not precede it.
    #[serde(default)]
    pub start: Option<f64>,
    #[serde(default = "default_weeks")]
    pub n_weeks: usize,
    #[serde(default = "default_period")]
    pub period_days: f64,
    #[serde(default = "default_replicates")]
    pub n_replicates: usize,
    /// Magnitude rate; estimated from the training events when absent.
    #[serde(default)]
    pub beta: Option<f64>,
    /// Per-replicate event cap; posterior draws can be supercritical.
    #[serde(default = "default_forecast_cap")]
    pub max_events: usize,
    #[serde(default = "yes")]
    pub allow_supercritical: bool,
    #[serde(default)]
    pub seed: u64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScoreSection {
    /// `forecast.json` written by `forecast`.
    pub ensemble: PathBuf,
    /// Expected first period start; must match the ensemble.
    #[serde(default)]
    pub start: Option<f64>,
    #[serde(default)]
    pub n_periods: Option<usize>,
    #[serde(default)]
    pub period_days: Option<f64>,
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridEntry {
    pub param: Param,
    pub value: f64,
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentSection {
    #[serde(default)]
    pub grid: Vec<GridEntry>,
    #[serde(default)]
    pub epsilon: Option<f64>,
    #[serde(default)]
    pub mode: FixMode,
    /// Known truth, echoed into the table for comparison.
    #[serde(default)]
    pub truth: Option<ParamsSection>,
}

/// A full run configuration. Sections not used by a subcommand may be absent.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(default)]
    pub catalog: Option<CatalogSection>,
    /// Per-parameter prior overrides, e.g. `{"mu": {"gamma": [0.3, 0.6]}}`.
    #[serde(default)]
    pub priors: BTreeMap<String, PriorKind>,
    #[serde(default)]
    pub fix: BTreeMap<String, FixSection>,
    #[serde(default)]
    pub fit: FitConfig,
    /// Posterior draws written by `fit` and used for summaries.
    #[serde(default = "default_draws")]
    pub posterior_draws: usize,
    #[serde(default)]
    pub simulate: Option<SimulateSection>,
    #[serde(default)]
    pub forecast: Option<ForecastSection>,
    #[serde(default)]
    pub score: Option<ScoreSection>,
    #[serde(default)]
    pub experiment: Option<ExperimentSection>,
    #[serde(default)]
    pub output: Option<PathBuf>,
}

fn one() -> usize {
    1
}
fn yes() -> bool {
    true
}
fn default_max_events() -> usize {
    DEFAULT_MAX_EVENTS
}
fn default_weeks() -> usize {
    10
}
fn default_period() -> f64 {
    7.0
}
fn default_replicates() -> usize {
    1000
}
fn default_forecast_cap() -> usize {
    100_000
}
fn default_draws() -> usize {
    10_000
}

impl RunConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }

    /// Applies `--seed` to every seeded section.
    pub fn override_seed(&mut self, seed: u64) {
        self.fit.seed = seed;
        if let Some(s) = &mut self.simulate {
            s.seed = seed;
        }
        if let Some(f) = &mut self.forecast {
            f.seed = seed;
        }
    }

    /// SHA-256 of the effective config, as lowercase hex.
    pub fn digest(&self) -> String {
        let text = serde_json::to_string(self).expect("config serializes");
        format!("{:x}", Sha256::digest(text.as_bytes()))
    }

    /// Priors after applying `priors` overrides and `fix`.
    pub fn prior_set(&self) -> Result<PriorSet> {
        let mut set = PriorSet::default();
        for (name, kind) in &self.priors {
            set.set_prior(PriorSpec::new(param_named(name)?, *kind)?);
        }
        for (name, fix) in &self.fix {
            let param = param_named(name)?;
            let eps = fix.epsilon.unwrap_or_else(|| default_epsilon(&set, param));
            set.fix(param, fix.value, eps, fix.mode)?;
        }
        Ok(set)
    }
}

fn param_named(name: &str) -> Result<Param> {
    Param::from_name(name).ok_or_else(|| Error::Config(format!("unknown parameter '{name}'")))
}

/// Default concentration for fixing `param` under its current prior family.
pub fn default_epsilon(set: &PriorSet, param: Param) -> f64 {
    match set.link(param).spec.kind {
        PriorKind::Gamma(..) => 1e6,
        PriorKind::Uniform(..) => 1e-4,
    }
}

/// `fit.json` contents.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FitReport {
    pub config_digest: String,
    pub n_events: usize,
    pub wall_time: f64,
    pub summary: Vec<ParameterSummary>,
    pub posterior: PosteriorApproximation,
}

/// `forecast.json` contents.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ForecastReport {
    pub config_digest: String,
    pub mainshock: Event,
    pub beta: f64,
    pub overflowed_replicates: usize,
    pub ensemble: ForecastEnsemble,
}

/// Parses `args` (including the program name), runs the command and returns
/// the process exit code. Errors are reported on stderr.
pub fn run_from_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_ERROR } else { 0 };
        }
    };
    match run(&cli.command) {
        Ok(outcome) => {
            if outcome == Outcome::NotConverged {
                eprintln!("etas-lab: fit did not converge; results were still written");
            }
            outcome.exit_code()
        }
        Err(e) => {
            eprintln!("etas-lab: {e}");
            EXIT_ERROR
        }
    }
}

/// Runs one parsed command.
pub fn run(command: &Command) -> Result<Outcome> {
    let args = command.args();
    let text = fs::read_to_string(&args.config)
        .map_err(|e| Error::Config(format!("cannot read {}: {e}", args.config.display())))?;
    let mut config = RunConfig::from_json(&text)
        .map_err(|e| Error::Config(format!("{}: {e}", args.config.display())))?;
    if let Some(seed) = args.seed {
        config.override_seed(seed);
    }
    let base = args
        .config
        .parent()
        .map(Path::to_path_buf)
        .unwrap_or_default();
    let out = match (&args.out, &config.output) {
        (Some(o), _) => o.clone(),
        (None, Some(o)) => resolve(&base, o),
        (None, None) => base.join("out"),
    };
    let ctx = Context { config, base, out };

    let jobs = args.jobs.unwrap_or(0);
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(jobs)
        .build()
        .map_err(|e| Error::Config(format!("thread pool: {e}")))?;
    pool.install(|| match command.kind() {
        CommandKind::Fit => cmd_fit(&ctx),
        CommandKind::Simulate => cmd_simulate(&ctx),
        CommandKind::Forecast => cmd_forecast(&ctx),
        CommandKind::Score => cmd_score(&ctx),
        CommandKind::Diagnose => cmd_diagnose(&ctx),
        CommandKind::ExperimentFix => cmd_experiment_fix(&ctx),
    })
}

/// A loaded config with resolved directories.
#[derive(Debug, Clone)]
pub struct Context {
    pub config: RunConfig,
    /// Directory relative config paths resolve against.
    pub base: PathBuf,
    pub out: PathBuf,
}

impl Context {
    pub fn new(config: RunConfig, base: impl Into<PathBuf>, out: impl Into<PathBuf>) -> Self {
        Self {
            config,
            base: base.into(),
            out: out.into(),
        }
    }

    fn path(&self, p: &Path) -> PathBuf {
        resolve(&self.base, p)
    }

    fn write(&self, name: &str, contents: &str) -> Result<()> {
        fs::create_dir_all(&self.out)?;
        fs::write(self.out.join(name), contents)?;
        Ok(())
    }

    fn write_json<T: Serialize>(&self, name: &str, value: &T) -> Result<()> {
        self.write(name, &serde_json::to_string_pretty(value)?)
    }

    fn catalog_section(&self) -> Result<&CatalogSection> {
        self.config
            .catalog
            .as_ref()
            .ok_or_else(|| Error::Config("missing 'catalog' section".into()))
    }

    /// The observed catalogue and its history (empty when not configured).
    pub fn load_catalog(&self) -> Result<(Catalog, Catalog)> {
        let sec = self.catalog_section()?;
        let [t1, t2] = sec.window;
        let cat = parse_catalog(&read(&self.path(&sec.path))?, sec.m0, t1, t2)?;
        let history = match &sec.history {
            Some(p) => {
                let text = read(&self.path(p))?;
                let h = parse_catalog(&text, sec.m0, f64::MIN, t2)?;
                let start = h.events().first().map_or(t1, |e| e.time.min(t1));
                Catalog::new(h.events().to_vec(), start, t2, sec.m0)?
            }
            None => Catalog::empty(t1, t2, sec.m0)?,
        };
        Ok((cat, history))
    }
}

fn resolve(base: &Path, p: &Path) -> PathBuf {
    if p.is_absolute() {
        p.to_path_buf()
    } else {
        base.join(p)
    }
}

fn read(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))
}

fn load_fit_report(path: &Path) -> Result<FitReport> {
    Ok(serde_json::from_str(&read(path)?)?)
}

/// Fits the configured catalogue; writes `fit.json`, `posterior_samples.csv`
/// and `trace.csv`.
pub fn cmd_fit(ctx: &Context) -> Result<Outcome> {
    let (cat, history) = ctx.load_catalog()?;
    let priors = ctx.config.prior_set()?;
    let post = fit(&cat, &history, &priors, &ctx.config.fit)?;
    let report = write_fit_outputs(ctx, &post, cat.len(), "")?;
    Ok(if report.posterior.converged {
        Outcome::Success
    } else {
        Outcome::NotConverged
    })
}

fn write_fit_outputs(ctx: &Context, post: &PosteriorApproximation, n_events: usize, prefix: &str) -> Result<FitReport> {
    let n = ctx.config.posterior_draws.max(1000);
    let summary = posterior_summary(post, n, ctx.config.fit.seed)?;
    let draws = sample_posterior(post, n, ctx.config.fit.seed)?;
    let mut csv = String::from("draw,mu,K,alpha,c,p\n");
    for (i, d) in draws.iter().enumerate() {
        let _ = writeln!(csv, "{i},{},{},{},{},{}", d.mu, d.k, d.alpha, d.c, d.p);
    }
    ctx.write(&format!("{prefix}posterior_samples.csv"), &csv)?;
    ctx.write(&format!("{prefix}trace.csv"), &trace_csv(post))?;
    let report = FitReport {
        config_digest: ctx.config.digest(),
        n_events,
        wall_time: post.wall_time,
        summary,
        posterior: post.clone(),
    };
    ctx.write_json(&format!("{prefix}fit.json"), &report)?;
    Ok(report)
}

fn trace_csv(post: &PosteriorApproximation) -> String {
    let mut out = String::from("iteration,objective,weight,relative_change,center_gap,inner_iterations");
    for p in &post.free {
        let _ = write!(out, ",theta_{p}");
    }
    out.push('\n');
    for r in &post.trace {
        let _ = write!(
            out,
            "{},{},{},{},{},{}",
            r.iteration, r.objective, r.weight, r.relative_change, r.center_gap, r.inner_iterations
        );
        for v in &r.theta {
            let _ = write!(out, ",{v}");
        }
        out.push('\n');
    }
    out
}

fn magnitude_law(beta: Option<f64>, b_value: Option<f64>, m0: f64) -> Result<MagnitudeLaw> {
    match (beta, b_value) {
        (Some(b), None) => MagnitudeLaw::new(b, m0),
        (None, Some(b)) => MagnitudeLaw::new(b * std::f64::consts::LN_10, m0),
        (None, None) => MagnitudeLaw::new(std::f64::consts::LN_10, m0),
        (Some(_), Some(_)) => Err(Error::Config("give either 'beta' or 'b_value', not both".into())),
    }
}

/// Simulates `replicates` catalogues; writes `catalogue.csv` (long format)
/// and `simulate.json`.
pub fn cmd_simulate(ctx: &Context) -> Result<Outcome> {
    let sec = ctx
        .config
        .simulate
        .as_ref()
        .ok_or_else(|| Error::Config("missing 'simulate' section".into()))?;
    let params = match (&sec.params, &sec.fit_result) {
        (Some(p), None) => p.with_m0(sec.m0.ok_or_else(|| Error::Config("simulate.m0 is required with params".into()))?),
        (None, Some(path)) => {
            let report = load_fit_report(&ctx.path(path))?;
            let mut p = report.posterior.mode_params();
            if let Some(m0) = sec.m0 {
                p.m0 = m0;
            }
            p
        }
        _ => return Err(Error::Config("simulate needs exactly one of 'params' or 'fit_result'".into())),
    };
    let law = magnitude_law(sec.beta, sec.b_value, params.m0)?;
    let [t1, t2] = sec.window;
    let start = sec.history.iter().map(|e| e.time).fold(t1, f64::min);
    let history = Catalog::new(sec.history.clone(), start, t2, params.m0)?;
    let mut cfg = SimulationConfig::new(params, law, (t1, t2), sec.seed)?.with_history(history);
    cfg.max_events = sec.max_events;
    cfg.allow_supercritical = sec.allow_supercritical;
    cfg.validate()?;
    let ensemble = simulate_ensemble(&cfg, sec.replicates, None)?;
    ctx.write("catalogue.csv", &ensemble_to_csv(&ensemble))?;
    #[derive(Serialize)]
    struct Out {
        config_digest: String,
        params: EtasParameters,
        beta: f64,
        summary: SimulationSummary,
    }
    ctx.write_json(
        "simulate.json",
        &Out {
            config_digest: ctx.config.digest(),
            params,
            beta: law.beta,
            summary: SimulationSummary {
                replicates: ensemble.len(),
                events: ensemble.iter().map(|s| s.catalog.len()).collect(),
                overflowed: ensemble.iter().map(|s| s.overflowed).collect(),
                branching_ratio: cfg.branching_ratio(),
            },
        },
    )?;
    Ok(Outcome::Success)
}

/// Result of [`forecast_after_mainshock`].
#[derive(Debug, Clone)]
pub struct MainshockForecast {
    pub mainshock: Event,
    pub posterior: PosteriorApproximation,
    pub beta: f64,
    pub ensemble: ForecastEnsemble,
    pub overflowed_replicates: usize,
    /// Events after the mainshock, for scoring.
    pub observed: Catalog,
}

/// Splits `cat` at the configured mainshock, fits the pre-mainshock events
/// unless `posterior` is given, and simulates posterior-predictive weekly
/// counts conditioned on every pre-mainshock event plus the mainshock.
pub fn forecast_after_mainshock(
    cat: &Catalog,
    sec: &ForecastSection,
    priors: &PriorSet,
    fit_config: &FitConfig,
    posterior: Option<PosteriorApproximation>,
) -> Result<MainshockForecast> {
    let split = split_at_mainshock(cat, sec.mainshock_threshold, sec.mainshock_index)?;
    let t_main = split.mainshock.time;
    let start = sec.start.unwrap_or(t_main);
    if start < t_main {
        return Err(Error::Config(format!(
            "forecast start {start} overlaps the training window ending at {t_main}"
        )));
    }
    if sec.n_weeks == 0 || !(sec.period_days > 0.0) {
        return Err(Error::Config("forecast needs n_weeks >= 1 and period_days > 0".into()));
    }
    let end = start + sec.n_weeks as f64 * sec.period_days;
    let posterior = match posterior {
        Some(p) => p,
        None => {
            let empty = Catalog::empty(split.training.start(), t_main, cat.m0())?;
            fit(&split.training, &empty, priors, fit_config)?
        }
    };
    let beta = match sec.beta {
        Some(b) => b,
        None => estimate_beta(&split.training)?.beta,
    };
    let law = MagnitudeLaw::new(beta, cat.m0())?;
    let draws = sample_posterior(&posterior, sec.n_replicates, sec.seed)?;
    let mut sim = SimulationConfig::new(posterior.mode_params(), law, (start, end), sec.seed)?
        .with_history(split.history.clone());
    sim.max_events = sec.max_events;
    sim.allow_supercritical = sec.allow_supercritical;
    let reduced = simulate_ensemble_with(&sim, sec.n_replicates, Some(&draws), |s| {
        (weekly_counts(&s.catalog, start, sec.n_weeks, sec.period_days), s.overflowed)
    })?;
    let overflowed_replicates = reduced.iter().filter(|(_, o)| *o).count();
    let ensemble = ForecastEnsemble::new(
        period_boundaries(start, sec.n_weeks, sec.period_days),
        reduced.into_iter().map(|(c, _)| c).collect(),
    )?;

    let after: Vec<Event> = cat.events().iter().copied().filter(|e| e.time > t_main).collect();
    let observed = Catalog::new(after, t_main, cat.end().max(t_main + f64::EPSILON), cat.m0())?;
    Ok(MainshockForecast {
        mainshock: split.mainshock,
        posterior,
        beta,
        ensemble,
        overflowed_replicates,
        observed,
    })
}

/// Writes `forecast_counts.csv` (replicate × week) and `forecast.json`.
pub fn cmd_forecast(ctx: &Context) -> Result<Outcome> {
    let sec = ctx
        .config
        .forecast
        .as_ref()
        .ok_or_else(|| Error::Config("missing 'forecast' section".into()))?;
    let (cat, _) = ctx.load_catalog()?;
    let priors = ctx.config.prior_set()?;
    let given = match &sec.fit_result {
        Some(p) => Some(load_fit_report(&ctx.path(p))?.posterior),
        None => None,
    };
    let fitted_here = given.is_none();
    let fc = forecast_after_mainshock(&cat, sec, &priors, &ctx.config.fit, given)?;
    if fitted_here {
        write_fit_outputs(ctx, &fc.posterior, cat.len(), "forecast_")?;
    }
    ctx.write("forecast_counts.csv", &fc.ensemble.to_csv())?;
    ctx.write_json(
        "forecast.json",
        &ForecastReport {
            config_digest: ctx.config.digest(),
            mainshock: fc.mainshock,
            beta: fc.beta,
            overflowed_replicates: fc.overflowed_replicates,
            ensemble: fc.ensemble,
        },
    )?;
    Ok(if fc.posterior.converged {
        Outcome::Success
    } else {
        Outcome::NotConverged
    })
}

/// Scores a `forecast.json` against the configured catalogue; writes
/// `score.csv` and `score.json`.
pub fn cmd_score(ctx: &Context) -> Result<Outcome> {
    let sec = ctx
        .config
        .score
        .as_ref()
        .ok_or_else(|| Error::Config("missing 'score' section".into()))?;
    let report: ForecastReport = serde_json::from_str(&read(&ctx.path(&sec.ensemble))?)?;
    let ens = &report.ensemble;
    if let Some(n) = sec.n_periods {
        if n != ens.n_periods() {
            return Err(Error::Config(format!(
                "score expects {n} periods, ensemble has {}",
                ens.n_periods()
            )));
        }
    }
    if sec.start.is_some() || sec.period_days.is_some() {
        let start = sec.start.unwrap_or(ens.boundaries[0]);
        let len = sec.period_days.unwrap_or(ens.boundaries[1] - ens.boundaries[0]);
        let expected = period_boundaries(start, ens.n_periods(), len);
        let tol = 1e-9 * (1.0 + start.abs());
        if expected.iter().zip(&ens.boundaries).any(|(a, b)| (a - b).abs() > tol) {
            return Err(Error::Config(format!(
                "period boundaries {:?} do not match the ensemble's {:?}",
                expected, ens.boundaries
            )));
        }
    }
    let (cat, _) = ctx.load_catalog()?;
    // The mainshock itself sits on the first boundary and is not a forecast target.
    let events: Vec<Event> = cat
        .events()
        .iter()
        .copied()
        .filter(|e| *e != report.mainshock)
        .collect();
    let observed = Catalog::new(events, cat.start(), cat.end(), cat.m0())?;
    let scores = score_forecast(ens, &observed)?;
    ctx.write("score.csv", &scores.to_csv())?;
    #[derive(Serialize)]
    struct Out<'a> {
        config_digest: String,
        coverage: usize,
        report: &'a ScoreReport,
    }
    ctx.write_json(
        "score.json",
        &Out {
            config_digest: ctx.config.digest(),
            coverage: scores.coverage(),
            report: &scores,
        },
    )?;
    Ok(Outcome::Success)
}

/// Normalized inter-event-time eCDF of the configured catalogue; writes
/// `ecdf.csv` and `diagnose.json` with the KS distance to Exp(1).
pub fn cmd_diagnose(ctx: &Context) -> Result<Outcome> {
    let (cat, _) = ctx.load_catalog()?;
    let curve = normalized_iet_ecdf(&cat)?;
    ctx.write("ecdf.csv", &curve.to_csv())?;
    #[derive(Serialize)]
    struct Out {
        config_digest: String,
        n_events: usize,
        n_intervals: usize,
        ks_distance: f64,
    }
    ctx.write_json(
        "diagnose.json",
        &Out {
            config_digest: ctx.config.digest(),
            n_events: cat.len(),
            n_intervals: curve.len(),
            ks_distance: ks_distance(&curve),
        },
    )?;
    Ok(Outcome::Success)
}

/// One row group of the fix-experiment table.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ExperimentRow {
    /// `None` for the full model.
    pub fixed: Option<GridEntry>,
    pub converged: bool,
    pub wall_time: f64,
    pub summary: Vec<ParameterSummary>,
}

/// Fits the full model and then one model per grid entry with that
/// parameter fixed. Fits run in parallel; rows keep grid order.
pub fn run_fix_experiment(
    cat: &Catalog,
    history: &Catalog,
    base: &PriorSet,
    experiment: &ExperimentSection,
    fit_config: &FitConfig,
    draws: usize,
) -> Result<Vec<ExperimentRow>> {
    let mut cases: Vec<Option<GridEntry>> = vec![None];
    cases.extend(experiment.grid.iter().copied().map(Some));
    cases
        .par_iter()
        .map(|case| {
            let mut priors = base.clone();
            if let Some(g) = case {
                let eps = experiment
                    .epsilon
                    .unwrap_or_else(|| default_epsilon(&priors, g.param));
                priors.fix(g.param, g.value, eps, experiment.mode)?;
            }
            let post = fit(cat, history, &priors, fit_config)?;
            Ok(ExperimentRow {
                fixed: *case,
                converged: post.converged,
                wall_time: post.wall_time,
                summary: posterior_summary(&post, draws, fit_config.seed)?,
            })
        })
        .collect()
}

/// Writes `experiment.csv` (one line per case and parameter) and
/// `experiment.json`.
pub fn cmd_experiment_fix(ctx: &Context) -> Result<Outcome> {
    let sec = ctx.config.experiment.clone().unwrap_or_default();
    let (cat, history) = ctx.load_catalog()?;
    let priors = ctx.config.prior_set()?;
    let rows = run_fix_experiment(
        &cat,
        &history,
        &priors,
        &sec,
        &ctx.config.fit,
        ctx.config.posterior_draws.max(1000),
    )?;
    let mut csv = String::from("fixed_param,fixed_value,param,truth,mean,sd,q025,q50,q975,wall_time,converged\n");
    for row in &rows {
        let (name, value) = match row.fixed {
            Some(g) => (g.param.name().to_string(), g.value.to_string()),
            None => ("none".to_string(), String::new()),
        };
        for s in &row.summary {
            let truth = sec
                .truth
                .map(|t| t.with_m0(cat.m0()).get(s.param).to_string())
                .unwrap_or_default();
            let _ = writeln!(
                csv,
                "{name},{value},{},{truth},{},{},{},{},{},{},{}",
                s.param, s.mean, s.sd, s.q025, s.q50, s.q975, row.wall_time, row.converged
            );
        }
    }
    ctx.write("experiment.csv", &csv)?;
    #[derive(Serialize)]
    struct Out<'a> {
        config_digest: String,
        truth: Option<ParamsSection>,
        rows: &'a [ExperimentRow],
    }
    ctx.write_json(
        "experiment.json",
        &Out {
            config_digest: ctx.config.digest(),
            truth: sec.truth,
            rows: &rows,
        },
    )?;
    Ok(if rows.iter().all(|r| r.converged) {
        Outcome::Success
    } else {
        Outcome::NotConverged
    })
}
