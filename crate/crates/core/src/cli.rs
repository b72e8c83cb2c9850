//! Command-line front end: `sample`, `density`, `verify`, `cauchy`, `limits`.
//!
//! Settings come from flags, an optional TOML file (`--config`) and the
//! `CORNERS_LAB_SEED` environment variable, in that order of precedence.

use std::ffi::OsString;
use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::densities::{
    logdens_ho_joint, logdens_ho_marginal, logdens_jacobi, logdens_jacobi_as_printed,
    logdens_mvb_joint, logdens_mvb_marginal, HoParams, LogValue,
};
use crate::ensembles::{
    decimal17, sample_batch, sample_jacobi_multilevel, sample_wishart_multilevel, write_csv,
    write_json_lines, JacobiParams, MultilevelSample, WishartParams,
};
use crate::error::{Error, Result};
use crate::hyperfun::QuadSpec;
use crate::linalg::Spectrum;
use crate::verify::limits::{check_limit, LimitId};
use crate::verify::suite::{run_tests, summary_table, write_report_rows, Suite, SuiteTest};
use crate::verify::{identities, TestReport};

/// Version of the text output formats; bumped on any header or column change.
pub const SCHEMA_VERSION: u32 = 1;
pub const SEED_ENV: &str = "CORNERS_LAB_SEED";

pub const EXIT_PASS: i32 = 0;
pub const EXIT_FAIL: i32 = 1;
pub const EXIT_USAGE: i32 = 2;

#[derive(Debug, Parser)]
#[command(
    name = "corners-lab",
    version,
    about = "Multilevel Wishart/Jacobi corner processes and their checks"
)]
pub struct Cli {
    /// TOML run configuration; flags override its values.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Draw multilevel samples.
    Sample(SampleArgs),
    /// Evaluate log densities at points read from a file.
    Density(DensityArgs),
    /// Run a verification suite or selected tests.
    Verify(VerifyArgs),
    /// Run the Cauchy identity checks.
    Cauchy(OutputArgs),
    /// Print limit-lemma error trajectories.
    Limits(LimitsArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ModelKind {
    Wishart,
    Jacobi,
    Ho,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Format {
    Csv,
    Json,
}

#[derive(Debug, Clone, Default, Args)]
pub struct ModelArgs {
    #[arg(long, value_enum)]
    pub model: Option<ModelKind>,
    #[arg(long)]
    pub beta: Option<u32>,
    /// Heckman-Opdam models only.
    #[arg(long)]
    pub theta: Option<f64>,
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    pub pi: Option<Vec<f64>>,
    #[arg(long = "pihat", value_delimiter = ',', allow_hyphen_values = true)]
    pub pi_hat: Option<Vec<f64>>,
    /// Number of Wishart levels, or the level of a marginal density.
    #[arg(long)]
    pub levels: Option<usize>,
    #[arg(long)]
    pub a: Option<usize>,
    #[arg(long)]
    pub n: Option<usize>,
    #[arg(long)]
    pub m: Option<usize>,
}

#[derive(Debug, Clone, Default, Args)]
pub struct QuadArgs {
    /// Double-exponential quadrature level.
    #[arg(long = "quad-level")]
    pub quad_level: Option<u32>,
    #[arg(long = "quad-tol")]
    pub quad_tol: Option<f64>,
}

#[derive(Debug, Clone, Default, Args)]
pub struct OutputArgs {
    /// Output file; stdout when absent.
    #[arg(long, short)]
    pub output: Option<PathBuf>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub workers: Option<usize>,
}

#[derive(Debug, Clone, Args)]
pub struct SampleArgs {
    #[command(flatten)]
    pub model: ModelArgs,
    #[arg(long)]
    pub count: Option<usize>,
    #[arg(long, value_enum)]
    pub format: Option<Format>,
    #[command(flatten)]
    pub out: OutputArgs,
}

#[derive(Debug, Clone, Args)]
pub struct DensityArgs {
    #[command(flatten)]
    pub model: ModelArgs,
    /// One point per line: levels separated by `;`, entries by `,`.
    #[arg(long)]
    pub points: PathBuf,
    /// mvb-joint, mvb-marginal, jacobi, jacobi-as-printed, ho-joint, ho-marginal.
    #[arg(long = "density")]
    pub density_id: Option<String>,
    #[command(flatten)]
    pub quad: QuadArgs,
    #[command(flatten)]
    pub out: OutputArgs,
}

#[derive(Debug, Clone, Args)]
pub struct VerifyArgs {
    #[arg(long)]
    pub suite: Option<String>,
    /// Run only these test ids from the suite (repeatable).
    #[arg(long = "test")]
    pub tests: Vec<String>,
    #[command(flatten)]
    pub out: OutputArgs,
}

#[derive(Debug, Clone, Args)]
pub struct LimitsArgs {
    /// One limit id; all sixteen when absent.
    #[arg(long)]
    pub id: Option<String>,
    #[arg(long, value_delimiter = ',')]
    pub eps: Option<Vec<f64>>,
    #[command(flatten)]
    pub out: OutputArgs,
}

/// Structured run configuration read from TOML.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(default)]
    pub model: ModelConfig,
    #[serde(default)]
    pub run: RunSection,
    #[serde(default)]
    pub quad: QuadConfig,
    #[serde(default)]
    pub output: OutputConfig,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelConfig {
    pub kind: Option<ModelKind>,
    pub beta: Option<u32>,
    pub theta: Option<f64>,
    pub pi: Option<Vec<f64>>,
    pub pi_hat: Option<Vec<f64>>,
    pub levels: Option<usize>,
    pub a: Option<usize>,
    pub n: Option<usize>,
    pub m: Option<usize>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunSection {
    pub count: Option<usize>,
    pub seed: Option<u64>,
    pub workers: Option<usize>,
    pub suite: Option<String>,
    pub density: Option<String>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct QuadConfig {
    pub level: Option<u32>,
    pub tol: Option<f64>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputConfig {
    pub path: Option<PathBuf>,
    pub format: Option<Format>,
}

impl RunConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
        Self::from_toml(&text)
    }

    /// Flag values replace file values.
    fn apply_model(&mut self, m: &ModelArgs) {
        let c = &mut self.model;
        c.kind = m.model.or(c.kind);
        c.beta = m.beta.or(c.beta);
        c.theta = m.theta.or(c.theta);
        c.pi = m.pi.clone().or(c.pi.take());
        c.pi_hat = m.pi_hat.clone().or(c.pi_hat.take());
        c.levels = m.levels.or(c.levels);
        c.a = m.a.or(c.a);
        c.n = m.n.or(c.n);
        c.m = m.m.or(c.m);
    }

    fn apply_output(&mut self, o: &OutputArgs) {
        self.run.seed = o.seed.or(self.run.seed);
        self.run.workers = o.workers.or(self.run.workers);
        self.output.path = o.output.clone().or(self.output.path.take());
    }

    /// Seed from the configuration, else `CORNERS_LAB_SEED`, else 0.
    pub fn seed(&self) -> Result<u64> {
        if let Some(s) = self.run.seed {
            return Ok(s);
        }
        match std::env::var(SEED_ENV) {
            Ok(v) => v
                .trim()
                .parse()
                .map_err(|_| Error::Config(format!("{SEED_ENV}={v} is not an unsigned integer"))),
            Err(_) => Ok(0),
        }
    }

    pub fn quad_spec(&self) -> Result<QuadSpec> {
        let d = QuadSpec::default();
        let level = self.quad.level.unwrap_or(4);
        let tol = self.quad.tol.unwrap_or(d.tolerance);
        if !(1..=8).contains(&level) || !(tol > 0.0) {
            return Err(Error::Config(format!(
                "quadrature level {level} or tolerance {tol} out of range"
            )));
        }
        Ok(QuadSpec::double_exponential(level, tol))
    }

    fn need<T: Clone>(v: &Option<T>, name: &str) -> Result<T> {
        v.clone()
            .ok_or_else(|| Error::Config(format!("missing {name}")))
    }

    pub fn model_kind(&self) -> Result<ModelKind> {
        Self::need(&self.model.kind, "model")
    }

    pub fn wishart(&self) -> Result<WishartParams> {
        let m = &self.model;
        WishartParams::new(
            Self::need(&m.beta, "beta")?,
            Self::need(&m.pi, "pi")?,
            m.pi_hat.clone().unwrap_or_default(),
        )
    }

    pub fn jacobi(&self) -> Result<JacobiParams> {
        let m = &self.model;
        JacobiParams::new(
            Self::need(&m.beta, "beta")?,
            Self::need(&m.a, "a")?,
            Self::need(&m.n, "n")?,
            Self::need(&m.m, "m")?,
        )
    }

    pub fn ho(&self) -> Result<HoParams> {
        let m = &self.model;
        let theta = match (m.theta, m.beta) {
            (Some(t), _) => t,
            (None, Some(b)) => b as f64 / 2.0,
            (None, None) => return Err(Error::Config("missing theta or beta".into())),
        };
        HoParams::new(
            theta,
            Self::need(&m.pi, "pi")?,
            m.pi_hat.clone().unwrap_or_default(),
        )
    }

    /// Model parameters as one header line.
    fn describe_model(&self) -> String {
        let m = &self.model;
        let list = |v: &Option<Vec<f64>>| v.as_ref().map(|v| join(v)).unwrap_or_default();
        match m.kind {
            Some(ModelKind::Wishart) => format!(
                "model=wishart beta={} pi={} pihat={} levels={}",
                opt(m.beta),
                list(&m.pi),
                list(&m.pi_hat),
                opt(m.levels)
            ),
            Some(ModelKind::Jacobi) => {
                format!(
                    "model=jacobi beta={} a={} n={} m={}",
                    opt(m.beta),
                    opt(m.a),
                    opt(m.n),
                    opt(m.m)
                )
            }
            Some(ModelKind::Ho) => format!(
                "model=ho theta={} pi={} pihat={}",
                m.theta
                    .map(|t| t.to_string())
                    .unwrap_or_else(|| opt(m.beta.map(|b| b as f64 / 2.0))),
                list(&m.pi),
                list(&m.pi_hat)
            ),
            None => "model=none".into(),
        }
    }
}

fn opt<T: ToString>(v: Option<T>) -> String {
    v.map(|x| x.to_string()).unwrap_or_else(|| "-".into())
}

fn join(v: &[f64]) -> String {
    v.iter()
        .map(|x| x.to_string())
        .collect::<Vec<_>>()
        .join(",")
}

/// Outcome of a command: its exit code.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Outcome {
    Pass,
    Fail,
}

impl Outcome {
    pub fn code(self) -> i32 {
        match self {
            Outcome::Pass => EXIT_PASS,
            Outcome::Fail => EXIT_FAIL,
        }
    }
}

fn io(e: io::Error) -> Error {
    Error::Io(e.to_string())
}

fn open_output(path: &Option<PathBuf>) -> Result<Box<dyn Write>> {
    Ok(match path {
        Some(p) => Box::new(BufWriter::new(
            File::create(p).map_err(|e| Error::Io(format!("{}: {e}", p.display())))?,
        )),
        None => Box::new(BufWriter::new(io::stdout().lock())),
    })
}

fn with_workers<T: Send>(workers: Option<usize>, f: impl FnOnce() -> T + Send) -> Result<T> {
    match workers {
        None => Ok(f()),
        Some(0) => Err(Error::Config("workers must be at least 1".into())),
        Some(w) => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(w)
                .build()
                .map_err(|e| Error::Config(e.to_string()))?;
            Ok(pool.install(f))
        }
    }
}

/// Header lines of every text output: schema name and version, seed, model.
pub fn header_lines(kind: &str, seed: Option<u64>, params: &str) -> Vec<String> {
    let mut h = vec![format!("# corners-lab {kind} v{SCHEMA_VERSION}")];
    if let Some(s) = seed {
        h.push(format!("# seed={s}"));
    }
    h.push(format!("# {params}"));
    h
}

pub fn cmd_sample(cfg: &RunConfig) -> Result<Outcome> {
    let seed = cfg.seed()?;
    let count = RunConfig::need(&cfg.run.count, "count")?;
    let kind = cfg.model_kind()?;
    let samples = match kind {
        ModelKind::Wishart => {
            let p = cfg.wishart()?;
            let levels = RunConfig::need(&cfg.model.levels, "levels")?;
            if levels == 0 {
                return Err(Error::Config("levels must be at least 1".into()));
            }
            with_workers(cfg.run.workers, || {
                sample_batch(count, seed, |r| sample_wishart_multilevel(&p, levels, r))
            })??
        }
        ModelKind::Jacobi => {
            let p = cfg.jacobi()?;
            with_workers(cfg.run.workers, || {
                sample_batch(count, seed, |r| sample_jacobi_multilevel(&p, r))
            })??
        }
        ModelKind::Ho => {
            return Err(Error::Config(
                "sampling supports the wishart and jacobi models".into(),
            ))
        }
    };
    let params = format!("{} count={count}", cfg.describe_model());
    let mut out = open_output(&cfg.output.path)?;
    match cfg.output.format.unwrap_or(Format::Csv) {
        Format::Csv => {
            for line in header_lines("sample", Some(seed), &params) {
                writeln!(out, "{line}").map_err(io)?;
            }
            write_csv(&samples, &mut out)?;
        }
        Format::Json => {
            let header = serde_json::json!({
                "schema": format!("corners-lab sample v{SCHEMA_VERSION}"),
                "seed": seed,
                "params": params,
            });
            writeln!(out, "{header}").map_err(io)?;
            write_json_lines(&samples, &mut out)?;
        }
    }
    out.flush().map_err(io)?;
    log::info!("wrote {count} draws");
    Ok(Outcome::Pass)
}

/// Parses a points file: one configuration per line, levels separated by
/// `;` and entries by `,`. Blank lines and `#` comments are skipped. Returns
/// `(line number, levels)`.
pub fn parse_points(text: &str) -> Result<Vec<(usize, Vec<Vec<f64>>)>> {
    let mut out = Vec::new();
    for (k, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let mut levels = Vec::new();
        for part in line.split(';') {
            let vals = part
                .split(',')
                .map(|t| t.trim())
                .filter(|t| !t.is_empty())
                .map(|t| {
                    t.parse::<f64>().map_err(|_| {
                        Error::Config(format!("points line {}: cannot parse '{t}'", k + 1))
                    })
                })
                .collect::<Result<Vec<f64>>>()?;
            if vals.iter().any(|v| v.is_nan()) {
                return Err(Error::Config(format!("points line {}: NaN entry", k + 1)));
            }
            levels.push(vals);
        }
        out.push((k + 1, levels));
    }
    Ok(out)
}

fn multilevel(levels: &[Vec<f64>]) -> Result<MultilevelSample> {
    Ok(MultilevelSample::new(
        levels
            .iter()
            .map(|l| Spectrum::new(l.clone()))
            .collect::<Result<_>>()?,
    ))
}

/// Evaluates one density id at one parsed point. Shape mismatches fall back
/// to an error naming the line; off-support points give `LogValue::ZERO`.
fn eval_density(
    cfg: &RunConfig,
    id: &str,
    levels: &[Vec<f64>],
    quad: &QuadSpec,
) -> Result<LogValue> {
    let s = multilevel(levels)?;
    let last = || -> Result<&Spectrum> {
        s.levels
            .last()
            .ok_or_else(|| Error::Config("empty point".into()))
    };
    let level = || RunConfig::need(&cfg.model.levels, "levels");
    match id {
        "mvb-joint" => logdens_mvb_joint(&s, &cfg.wishart()?, quad),
        "mvb-marginal" => logdens_mvb_marginal(last()?, level()?, &cfg.wishart()?, quad),
        "jacobi" => logdens_jacobi(&s, &cfg.jacobi()?),
        "jacobi-as-printed" => logdens_jacobi_as_printed(&s, &cfg.jacobi()?),
        "ho-joint" => logdens_ho_joint(&s, &cfg.ho()?, quad),
        "ho-marginal" => logdens_ho_marginal(last()?, level()?, &cfg.ho()?, quad),
        other => Err(Error::Config(format!("unknown density id '{other}'"))),
    }
}

fn default_density(kind: ModelKind) -> &'static str {
    match kind {
        ModelKind::Wishart => "mvb-joint",
        ModelKind::Jacobi => "jacobi",
        ModelKind::Ho => "ho-joint",
    }
}

pub fn cmd_density(cfg: &RunConfig, points: &Path) -> Result<Outcome> {
    let text = std::fs::read_to_string(points)
        .map_err(|e| Error::Io(format!("{}: {e}", points.display())))?;
    let pts = parse_points(&text)?;
    let kind = cfg.model_kind()?;
    let id = cfg
        .run
        .density
        .clone()
        .unwrap_or_else(|| default_density(kind).into());
    let quad = cfg.quad_spec()?;
    let values = with_workers(cfg.run.workers, || {
        pts.par_iter()
            .map(|(line, lv)| {
                eval_density(cfg, &id, lv, &quad).map_err(|e| match e {
                    Error::Parameter(m) | Error::Validation(m) | Error::Config(m) => {
                        Error::Config(format!("points line {line}: {m}"))
                    }
                    other => other,
                })
            })
            .collect::<Result<Vec<LogValue>>>()
    })??;
    let mut out = open_output(&cfg.output.path)?;
    for line in header_lines(
        "density",
        None,
        &format!("density={id} {}", cfg.describe_model()),
    ) {
        writeln!(out, "{line}").map_err(io)?;
    }
    writeln!(out, "line,log_density").map_err(io)?;
    for ((line, _), v) in pts.iter().zip(&values) {
        writeln!(out, "{line},{}", decimal17(v.ln())).map_err(io)?;
    }
    out.flush().map_err(io)?;
    Ok(Outcome::Pass)
}

/// Writes JSON report rows to the output, the summary table to stderr, and
/// each failing report to stderr.
fn emit_reports(cfg: &RunConfig, kind: &str, reports: &[TestReport]) -> Result<Outcome> {
    let mut out = open_output(&cfg.output.path)?;
    let header = serde_json::json!({
        "schema": format!("corners-lab {kind} v{SCHEMA_VERSION}"),
        "seed": cfg.run.seed,
        "tests": reports.len(),
    });
    writeln!(out, "{header}").map_err(io)?;
    write_report_rows(reports, &mut out)?;
    out.flush().map_err(io)?;
    eprint!("{}", summary_table(reports));
    let failed: Vec<&TestReport> = reports.iter().filter(|r| !r.passed).collect();
    for r in &failed {
        eprintln!(
            "{}",
            serde_json::to_string(r).map_err(|e| Error::Io(e.to_string()))?
        );
    }
    Ok(if failed.is_empty() {
        Outcome::Pass
    } else {
        Outcome::Fail
    })
}

pub fn cmd_verify(cfg: &RunConfig, only: &[String]) -> Result<Outcome> {
    let seed = cfg.seed()?;
    let suite: Suite = cfg
        .run
        .suite
        .as_deref()
        .unwrap_or("acceptance")
        .parse()
        .map_err(|e: Error| Error::Config(e.to_string()))?;
    let mut tests = suite.tests();
    if !only.is_empty() {
        if let Some(missing) = only.iter().find(|id| !tests.iter().any(|t| &t.id == *id)) {
            return Err(Error::Config(format!(
                "suite {suite} has no test '{missing}'"
            )));
        }
        tests.retain(|t| only.contains(&t.id));
    }
    let mut cfg = cfg.clone();
    cfg.run.seed = Some(seed);
    let reports = with_workers(cfg.run.workers, || run_tests(&tests, seed))?;
    emit_reports(&cfg, "verify", &reports)
}

pub fn cmd_cauchy(cfg: &RunConfig) -> Result<Outcome> {
    let tests = vec![
        SuiteTest::new("identity/cauchy-ho", |_| identities::check_cauchy_ho()),
        SuiteTest::new("identity/cauchy-mvb", |_| identities::check_cauchy_mvb()),
        SuiteTest::new("identity/mac-cauchy", |_| identities::check_mac_cauchy()),
    ];
    let seed = cfg.seed()?;
    let reports = with_workers(cfg.run.workers, || run_tests(&tests, seed))?;
    emit_reports(cfg, "cauchy", &reports)
}

pub fn cmd_limits(cfg: &RunConfig, id: Option<&str>, eps: Option<&[f64]>) -> Result<Outcome> {
    let ids: Vec<LimitId> = match id {
        Some(s) => vec![s.parse().map_err(|e: Error| Error::Config(e.to_string()))?],
        None => LimitId::ALL.to_vec(),
    };
    let mut reports = Vec::new();
    for id in ids {
        let eps = eps.map(|e| e.to_vec()).unwrap_or_else(|| id.default_eps());
        reports.push(check_limit(id, &eps)?);
    }
    emit_reports(cfg, "limits", &reports)
}

fn build_config(cli: &Cli) -> Result<RunConfig> {
    let mut cfg = match &cli.config {
        Some(p) => RunConfig::load(p)?,
        None => RunConfig::default(),
    };
    match &cli.command {
        Command::Sample(a) => {
            cfg.apply_model(&a.model);
            cfg.apply_output(&a.out);
            cfg.run.count = a.count.or(cfg.run.count);
            cfg.output.format = a.format.or(cfg.output.format);
        }
        Command::Density(a) => {
            cfg.apply_model(&a.model);
            cfg.apply_output(&a.out);
            cfg.run.density = a.density_id.clone().or(cfg.run.density.take());
            cfg.quad.level = a.quad.quad_level.or(cfg.quad.level);
            cfg.quad.tol = a.quad.quad_tol.or(cfg.quad.tol);
        }
        Command::Verify(a) => {
            cfg.apply_output(&a.out);
            cfg.run.suite = a.suite.clone().or(cfg.run.suite.take());
        }
        Command::Cauchy(o) => cfg.apply_output(o),
        Command::Limits(a) => cfg.apply_output(&a.out),
    }
    Ok(cfg)
}

fn dispatch(cli: &Cli) -> Result<Outcome> {
    let cfg = build_config(cli)?;
    match &cli.command {
        Command::Sample(_) => cmd_sample(&cfg),
        Command::Density(a) => cmd_density(&cfg, &a.points),
        Command::Verify(a) => cmd_verify(&cfg, &a.tests),
        Command::Cauchy(_) => cmd_cauchy(&cfg),
        Command::Limits(a) => cmd_limits(&cfg, a.id.as_deref(), a.eps.as_deref()),
    }
}

/// Parses arguments, runs the command and returns the process exit code:
/// 0 all checks passed, 1 a check failed, 2 usage, configuration or I/O error.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() {
                EXIT_USAGE
            } else {
                EXIT_PASS
            };
            let _ = e.print();
            return code;
        }
    };
    match dispatch(&cli) {
        Ok(o) => o.code(),
        Err(e) => {
            eprintln!("corners-lab: {e}");
            EXIT_USAGE
        }
    }
}
