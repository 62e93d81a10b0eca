//! `qbandit` — command-line harness for quantum bandit experiments.
//!
//! Subcommands:
//!
//! * `run` — execute one experiment config and write traces;
//! * `sweep` — run a config over a grid of values of one parameter;
//! * `fit` — fit scaling laws to a column of a CSV file;
//! * `report` — run the acceptance suite and print one line per criterion.
//!
//! Exit codes: `0` success, `1` runtime failure, `2` configuration or usage
//! error, `3` acceptance failure in `report`.

use std::fmt;
use std::fs::File;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{anyhow, bail, Context};
use clap::{Args, Parser, Subcommand};
use qbandit::harness::{aggregate, fit_scaling, run_experiment, write_outputs, TaskConfig};
use qbandit::qcb::classifier_regret;
use qbandit::{EpisodeTrace, ExperimentConfig, FitModel};

/// Exit code for configuration and usage errors.
const EXIT_CONFIG: u8 = 2;
/// Exit code when `report` finds a failing criterion.
const EXIT_ACCEPTANCE: u8 = 3;

#[derive(Debug, Parser)]
#[command(
    name = "qbandit",
    version,
    about = "Quantum multi-armed bandit experiments"
)]
struct Cli {
    /// Worker threads for seed-parallel execution (default: one per core).
    #[arg(long, global = true, value_name = "N")]
    threads: Option<usize>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Run one experiment config.
    Run(RunArgs),
    /// Run a config over a grid of values of one parameter.
    Sweep(SweepArgs),
    /// Fit scaling laws to a CSV column.
    Fit(FitArgs),
    /// Run the acceptance suite.
    Report(ReportArgs),
}

/// Overrides shared by `run` and `sweep`.
#[derive(Debug, Args)]
struct Overrides {
    /// Seeds to run, replacing the config's seed list (comma-separated or repeated).
    #[arg(long = "seed", value_name = "SEED", value_delimiter = ',')]
    seeds: Vec<u64>,

    /// Output directory, replacing the config's `output`.
    #[arg(long, value_name = "DIR")]
    out: Option<PathBuf>,

    /// Horizon, replacing the config's `rounds`.
    #[arg(long, value_name = "T")]
    rounds: Option<u64>,
}

#[derive(Debug, Args)]
struct RunArgs {
    /// Experiment config (TOML).
    config: PathBuf,

    #[command(flatten)]
    overrides: Overrides,
}

#[derive(Debug, Args)]
struct SweepArgs {
    /// Experiment config (TOML).
    config: PathBuf,

    /// Dotted path of the parameter to vary, e.g. `task.policy.lambda0`.
    #[arg(long, value_name = "KEY")]
    param: String,

    /// Values to assign, as TOML literals (comma-separated).
    #[arg(long, value_name = "V", value_delimiter = ',', required = true)]
    values: Vec<String>,

    #[command(flatten)]
    overrides: Overrides,
}

#[derive(Debug, Args)]
struct FitArgs {
    /// CSV file with a header row (e.g. a trace or a run summary).
    input: PathBuf,

    /// Abscissa column.
    #[arg(long, default_value = "round")]
    x: String,

    /// Ordinate column.
    #[arg(long, default_value = "cum_regret")]
    y: String,

    /// Models to fit (comma-separated; default: all).
    #[arg(long = "model", value_delimiter = ',')]
    models: Vec<FitModel>,

    /// Ignore rows with abscissa below this value.
    #[arg(long, default_value_t = 1.0)]
    from: f64,

    /// Use every n-th row.
    #[arg(long, default_value_t = 1)]
    every: usize,

    /// Also write the fits as CSV.
    #[arg(long, value_name = "FILE")]
    out: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct ReportArgs {
    /// Criteria to run (comma-separated; default: all).
    #[arg(long, value_delimiter = ',')]
    criteria: Vec<u8>,

    /// Also write the report lines to this file.
    #[arg(long, value_name = "FILE")]
    out: Option<PathBuf>,
}

/// A configuration or usage problem detected by the CLI itself.
#[derive(Debug)]
struct ConfigError(String);

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for ConfigError {}

fn config_error(msg: impl Into<String>) -> anyhow::Error {
    ConfigError(msg.into()).into()
}

fn is_config_error(e: &anyhow::Error) -> bool {
    e.chain().any(|c| {
        c.is::<ConfigError>()
            || matches!(
                c.downcast_ref::<qbandit::Error>(),
                Some(qbandit::Error::Config(_) | qbandit::Error::Toml(_))
            )
    })
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match dispatch(cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            if is_config_error(&e) {
                ExitCode::from(EXIT_CONFIG)
            } else {
                ExitCode::FAILURE
            }
        }
    }
}

fn dispatch(cli: Cli) -> anyhow::Result<ExitCode> {
    if let Some(n) = cli.threads {
        if n == 0 {
            return Err(config_error("--threads must be at least 1"));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .context("configuring the worker pool")?;
    }
    match cli.command {
        Command::Run(a) => run(a),
        Command::Sweep(a) => sweep(a),
        Command::Fit(a) => fit(a),
        Command::Report(a) => report(a),
    }
}

fn load_config(path: &Path) -> anyhow::Result<String> {
    std::fs::read_to_string(path)
        .map_err(|e| config_error(format!("cannot read config {}: {e}", path.display())))
}

fn apply_overrides(cfg: &mut ExperimentConfig, o: &Overrides) -> anyhow::Result<()> {
    if !o.seeds.is_empty() {
        cfg.seeds = o.seeds.clone();
        cfg.seed_count = None;
    }
    if let Some(t) = o.rounds {
        cfg.rounds = t;
    }
    if let Some(dir) = &o.out {
        cfg.output = Some(dir.clone());
    }
    cfg.validate()?;
    Ok(())
}

fn burn_in(cfg: &ExperimentConfig) -> usize {
    match &cfg.task {
        TaskConfig::Qcb { config } => config.burn_in,
        _ => 0,
    }
}

/// Final cumulative regret (dissipation for extraction runs) of every seed.
fn final_regrets(traces: &[EpisodeTrace]) -> Vec<f64> {
    traces
        .iter()
        .map(|t| t.records.last().map_or(0.0, |r| r.cum_regret))
        .collect()
}

fn mean_std(x: &[f64]) -> (f64, f64) {
    let n = x.len() as f64;
    let mean = x.iter().sum::<f64>() / n;
    let var = if x.len() > 1 {
        x.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0)
    } else {
        0.0
    };
    (mean, var.sqrt())
}

/// Writes `summary.csv` with the seed-averaged cumulative-regret curve.
fn write_summary(traces: &[EpisodeTrace], dir: &Path) -> anyhow::Result<PathBuf> {
    let series: Vec<Vec<f64>> = traces.iter().map(|t| t.cumulative_regret()).collect();
    let agg = aggregate(&series)?;
    let path = dir.join("summary.csv");
    let mut w = csv::Writer::from_path(&path)?;
    w.write_record(["round", "mean_cum_regret", "std_cum_regret"])?;
    for (i, (m, s)) in agg.mean.iter().zip(&agg.std).enumerate() {
        w.write_record([(i + 1).to_string(), format!("{m:?}"), format!("{s:?}")])?;
    }
    w.flush()?;
    Ok(path)
}

fn execute(cfg: &ExperimentConfig) -> anyhow::Result<Vec<EpisodeTrace>> {
    let traces = run_experiment(cfg)?;
    if let Some(dir) = &cfg.output {
        let files = write_outputs(&traces, dir, burn_in(cfg))
            .with_context(|| format!("writing traces to {}", dir.display()))?;
        let summary = write_summary(&traces, dir)?;
        println!(
            "wrote {} files to {} (plus {})",
            files.len(),
            dir.display(),
            summary.display()
        );
    }
    Ok(traces)
}

fn run(a: RunArgs) -> anyhow::Result<ExitCode> {
    let mut cfg = ExperimentConfig::from_toml(&load_config(&a.config)?)
        .with_context(|| format!("in {}", a.config.display()))?;
    apply_overrides(&mut cfg, &a.overrides)?;
    let traces = execute(&cfg)?;
    let (mean, std) = mean_std(&final_regrets(&traces));
    println!(
        "seeds: {}  rounds: {}  final cumulative regret: {mean:.4} ± {std:.4}",
        traces.len(),
        cfg.rounds
    );
    let misclassified: Vec<f64> = traces
        .iter()
        .filter_map(|t| t.qcb.as_ref())
        .map(|q| classifier_regret(q) as f64)
        .collect();
    if !misclassified.is_empty() {
        let (m, s) = mean_std(&misclassified);
        println!("classifier regret: {m:.2} ± {s:.2}");
    }
    Ok(ExitCode::SUCCESS)
}

/// Parses a command-line value as a TOML literal, falling back to a string.
fn parse_literal(raw: &str) -> toml::Value {
    toml::from_str::<toml::Table>(&format!("v = {raw}"))
        .ok()
        .and_then(|mut t| t.remove("v"))
        .unwrap_or_else(|| toml::Value::String(raw.to_string()))
}

/// Sets the dotted `key` of `table` to `value`; every parent must be a table.
fn set_path(table: &mut toml::Table, key: &str, value: toml::Value) -> anyhow::Result<()> {
    let parts: Vec<&str> = key.split('.').collect();
    let (last, parents) = parts
        .split_last()
        .filter(|(l, _)| !l.is_empty())
        .ok_or_else(|| config_error(format!("empty parameter path `{key}`")))?;
    let mut cur = table;
    for p in parents {
        cur = cur
            .get_mut(*p)
            .and_then(toml::Value::as_table_mut)
            .ok_or_else(|| config_error(format!("`{key}`: no table `{p}` in the config")))?;
    }
    cur.insert((*last).to_string(), value);
    Ok(())
}

fn sweep(a: SweepArgs) -> anyhow::Result<ExitCode> {
    let text = load_config(&a.config)?;
    let base: toml::Table = toml::from_str(&text)
        .map_err(|e| config_error(format!("in {}: {e}", a.config.display())))?;
    let root = a.overrides.out.clone();
    let mut rows = Vec::new();
    for raw in &a.values {
        let mut table = base.clone();
        set_path(&mut table, &a.param, parse_literal(raw))?;
        let mut cfg = ExperimentConfig::from_toml(&toml::to_string(&table)?)
            .with_context(|| format!("with {} = {raw}", a.param))?;
        apply_overrides(&mut cfg, &a.overrides)?;
        cfg.output = root
            .as_ref()
            .or(cfg.output.as_ref())
            .map(|d| d.join(format!("{}={raw}", a.param)));
        let traces = execute(&cfg)?;
        let (mean, std) = mean_std(&final_regrets(&traces));
        println!(
            "{} = {raw}: seeds {}  final cumulative regret {mean:.4} ± {std:.4}",
            a.param,
            traces.len()
        );
        rows.push((raw.clone(), traces.len(), mean, std));
    }
    if let Some(dir) = root {
        std::fs::create_dir_all(&dir)?;
        let mut w = csv::Writer::from_path(dir.join("sweep.csv"))?;
        w.write_record([
            "param",
            "value",
            "seeds",
            "mean_final_regret",
            "std_final_regret",
        ])?;
        for (v, n, m, s) in rows {
            w.write_record([
                a.param.clone(),
                v,
                n.to_string(),
                format!("{m:?}"),
                format!("{s:?}"),
            ])?;
        }
        w.flush()?;
    }
    Ok(ExitCode::SUCCESS)
}

fn read_columns(path: &Path, x: &str, y: &str) -> anyhow::Result<(Vec<f64>, Vec<f64>)> {
    let mut rd = csv::Reader::from_path(path)
        .map_err(|e| config_error(format!("cannot read {}: {e}", path.display())))?;
    let header = rd.headers()?.clone();
    let col = |name: &str| {
        header.iter().position(|h| h == name).ok_or_else(|| {
            config_error(format!(
                "no column `{name}` in {} (columns: {})",
                path.display(),
                header.iter().collect::<Vec<_>>().join(", ")
            ))
        })
    };
    let (ix, iy) = (col(x)?, col(y)?);
    let (mut xs, mut ys) = (Vec::new(), Vec::new());
    for (line, row) in rd.records().enumerate() {
        let row = row?;
        let (sx, sy) = (&row[ix], &row[iy]);
        if sx.is_empty() || sy.is_empty() {
            continue;
        }
        let parse = |s: &str| {
            s.parse::<f64>()
                .map_err(|_| anyhow!("row {}: malformed number `{s}`", line + 2))
        };
        xs.push(parse(sx)?);
        ys.push(parse(sy)?);
    }
    Ok((xs, ys))
}

fn fit(a: FitArgs) -> anyhow::Result<ExitCode> {
    if a.every == 0 {
        return Err(config_error("--every must be at least 1"));
    }
    let (xs, ys) = read_columns(&a.input, &a.x, &a.y)?;
    let (t, y): (Vec<f64>, Vec<f64>) = xs
        .into_iter()
        .zip(ys)
        .filter(|(x, _)| *x >= a.from)
        .step_by(a.every)
        .unzip();
    let models = if a.models.is_empty() {
        FitModel::ALL.to_vec()
    } else {
        a.models.clone()
    };
    println!(
        "{} points from {} ({} vs {})",
        t.len(),
        a.input.display(),
        a.y,
        a.x
    );
    let mut fits = Vec::new();
    for m in models {
        match fit_scaling(&t, &y, m) {
            Ok(f) => {
                let rss = f.rss(&t, &y);
                println!(
                    "{:<17} {:<22} coefficients [{:.6}, {:.6}]  residual {:.6e}  rss {:.6e}",
                    m.name(),
                    m.formula(),
                    f.coefficients[0],
                    f.coefficients[1],
                    f.residual,
                    rss
                );
                fits.push((f, rss));
            }
            Err(e) => println!("{:<17} skipped: {e}", m.name()),
        }
    }
    let Some((best, _)) = fits.iter().min_by(|a, b| a.1.total_cmp(&b.1)) else {
        bail!("no model could be fitted");
    };
    println!("best by rss: {}", best.model.name());
    if let Some(out) = &a.out {
        let mut w = csv::Writer::from_path(out)?;
        w.write_record(["model", "formula", "c", "b_or_m", "residual", "rss"])?;
        for (f, rss) in &fits {
            w.write_record([
                f.model.name().to_string(),
                f.model.formula().to_string(),
                format!("{:?}", f.coefficients[0]),
                format!("{:?}", f.coefficients[1]),
                format!("{:?}", f.residual),
                format!("{rss:?}"),
            ])?;
        }
        w.flush()?;
    }
    Ok(ExitCode::SUCCESS)
}

fn report(a: ReportArgs) -> anyhow::Result<ExitCode> {
    let ids: Vec<u8> = if a.criteria.is_empty() {
        qbandit::acceptance::CRITERIA
            .iter()
            .map(|(id, _)| *id)
            .collect()
    } else {
        a.criteria.clone()
    };
    let mut sink = match &a.out {
        Some(p) => Some(File::create(p).with_context(|| format!("creating {}", p.display()))?),
        None => None,
    };
    let mut failed = Vec::new();
    for id in ids {
        let r = qbandit::acceptance::run_criterion(id)?;
        println!("{r}");
        if let Some(f) = sink.as_mut() {
            writeln!(f, "{r}")?;
        }
        if !r.passed() {
            failed.push(id);
        }
    }
    if failed.is_empty() {
        println!("all criteria passed");
        Ok(ExitCode::SUCCESS)
    } else {
        let list: Vec<String> = failed.iter().map(u8::to_string).collect();
        println!("failing criteria: {}", list.join(", "));
        Ok(ExitCode::from(EXIT_ACCEPTANCE))
    }
}
