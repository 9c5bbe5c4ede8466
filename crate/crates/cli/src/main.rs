//! `sdde`: simulate paths, probe coefficient hypotheses and run convergence
//! experiments from the command line or a JSON config.

mod config;

use anyhow::{anyhow, Context};
use clap::{Args, Parser, Subcommand, ValueEnum};
use config::{ExperimentConfig, ProbeSection, SimulateSection};
use sdde_core::brownian::sample_path;
use sdde_core::euler::{integrate, EulerError};
use sdde_core::harness::{as_rate_diagnostic, exceedance_table, run_convergence, HarnessError, RateExperimentConfig};
use sdde_core::io::{rate_plot_svg, write_path_csv, write_rate_csv};
use sdde_core::model::ModelRegistry;
use sdde_core::probe::probe_conditions;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

const EXIT_FAILURE: u8 = 1;
const EXIT_INVALID: u8 = 2;
const EXIT_NUMERICAL: u8 = 3;

#[derive(Debug, Parser)]
#[command(name = "sdde", version, about = "Euler approximation of stochastic delay differential equations")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Integrate one path and write it as CSV or JSON.
    Simulate(Common),
    /// Run a coupled-level convergence experiment.
    Converge(Common),
    /// Estimate the constants of the coefficient hypotheses on a sample.
    Probe(ProbeArgs),
    /// List the registered models.
    ListModels,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Csv,
    Json,
    Svg,
}

#[derive(Debug, Args)]
struct Common {
    /// Experiment config (JSON); flags override its keys.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    model: Option<String>,
    /// Steps per unit time (simulate) or coarsest level (converge).
    #[arg(long)]
    n: Option<u64>,
    #[arg(long)]
    seed: Option<u64>,
    /// Output file (simulate) or directory (converge).
    #[arg(long)]
    out: Option<PathBuf>,
    /// Parallel path workers; SDDE_THREADS caps this.
    #[arg(long)]
    threads: Option<usize>,
    #[arg(long, value_enum, value_delimiter = ',')]
    format: Vec<Format>,
}

#[derive(Debug, Args)]
struct ProbeArgs {
    #[command(flatten)]
    common: Common,
    /// Radius R of the probed box.
    #[arg(long)]
    radius: Option<f64>,
    /// Number of probe points N.
    #[arg(long)]
    samples: Option<usize>,
}

/// An error tagged with the exit code it maps to.
struct Failure {
    code: u8,
    error: anyhow::Error,
}

impl Failure {
    fn invalid(error: impl Into<anyhow::Error>) -> Self {
        Self { code: EXIT_INVALID, error: error.into() }
    }

    fn other(error: impl Into<anyhow::Error>) -> Self {
        Self { code: EXIT_FAILURE, error: error.into() }
    }
}

impl From<EulerError> for Failure {
    fn from(e: EulerError) -> Self {
        let code = match e {
            EulerError::NumericalBlowup { .. } => EXIT_NUMERICAL,
            _ => EXIT_INVALID,
        };
        Self { code, error: e.into() }
    }
}

impl From<HarnessError> for Failure {
    fn from(e: HarnessError) -> Self {
        match e {
            HarnessError::ThreadPool(_) => Self::other(e),
            HarnessError::Euler(EulerError::NumericalBlowup { .. }) => {
                Self { code: EXIT_NUMERICAL, error: e.into() }
            }
            _ => Self::invalid(e),
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Simulate(args) => simulate(args),
        Command::Converge(args) => converge(args),
        Command::Probe(args) => probe(args),
        Command::ListModels => list_models(),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {:#}", f.error);
            ExitCode::from(f.code)
        }
    }
}

fn load_config(path: Option<&Path>) -> Result<ExperimentConfig, Failure> {
    match path {
        None => Ok(ExperimentConfig::default()),
        Some(p) => ExperimentConfig::from_file(p).map_err(Failure::invalid),
    }
}

/// Worker count: flag, then config, then all cores; never above SDDE_THREADS.
fn thread_count(flag: Option<usize>, config: Option<usize>) -> Result<usize, Failure> {
    let wanted = flag
        .or(config)
        .unwrap_or_else(|| std::thread::available_parallelism().map_or(1, |n| n.get()));
    if wanted == 0 {
        return Err(Failure::invalid(anyhow!("--threads must be positive")));
    }
    match std::env::var("SDDE_THREADS") {
        Ok(v) => {
            let cap: usize = v
                .trim()
                .parse()
                .ok()
                .filter(|&c| c > 0)
                .ok_or_else(|| Failure::invalid(anyhow!("SDDE_THREADS must be a positive integer, got '{v}'")))?;
            Ok(wanted.min(cap))
        }
        Err(_) => Ok(wanted),
    }
}

fn formats(flag: &[Format], config: Option<&Vec<Format>>, default: &[Format]) -> Vec<Format> {
    if !flag.is_empty() {
        flag.to_vec()
    } else if let Some(c) = config {
        c.clone()
    } else {
        default.to_vec()
    }
}

fn emit(out: Option<&Path>, bytes: &[u8]) -> Result<(), Failure> {
    match out {
        Some(p) => {
            if let Some(dir) = p.parent().filter(|d| !d.as_os_str().is_empty()) {
                fs::create_dir_all(dir)
                    .with_context(|| format!("creating {}", dir.display()))
                    .map_err(Failure::other)?;
            }
            fs::write(p, bytes)
                .with_context(|| format!("writing {}", p.display()))
                .map_err(Failure::other)
        }
        None => std::io::stdout().write_all(bytes).map_err(Failure::other),
    }
}

fn simulate(args: Common) -> Result<(), Failure> {
    let cfg = load_config(args.config.as_deref())?;
    let section = cfg.simulate.clone().unwrap_or_default();
    let SimulateSection { model, n, horizon } = section;
    let label = args
        .model
        .or(model)
        .ok_or_else(|| Failure::invalid(anyhow!("simulate needs --model")))?;
    let n = args
        .n
        .or(n)
        .ok_or_else(|| Failure::invalid(anyhow!("simulate needs --n")))?;
    let seed = args.seed.or(cfg.seed).unwrap_or(0);
    let mut model = ModelRegistry::with_builtins().get(&label).map_err(Failure::invalid)?;
    if let Some(t) = horizon {
        model = model.with_horizon(t).map_err(Failure::invalid)?;
    }
    let noise = match sample_path(model.m(), model.horizon(), n, seed) {
        Ok(g) => g,
        Err(e) => return Err(EulerError::from(e).into()),
    };
    let path = integrate(&model, &noise, n)?;
    let out = args.out.or(cfg.out);
    let fmt = formats(&args.format, cfg.format.as_ref(), &[Format::Csv]);
    let mut buf = Vec::new();
    match fmt.as_slice() {
        [Format::Csv] => write_path_csv(&mut buf, &path).map_err(Failure::other)?,
        [Format::Json] => {
            let times: Vec<f64> = (0..=path.steps()).map(|j| j as f64 / n as f64).collect();
            let doc = serde_json::json!({
                "model": model.label(),
                "n": n,
                "seed": seed,
                "horizon": model.horizon(),
                "requested_horizon": model.requested_horizon(),
                "d": path.d(),
                "t": times,
                "values": path.values(),
            });
            buf = serde_json::to_vec_pretty(&doc).map_err(Failure::other)?;
            buf.push(b'\n');
        }
        other => {
            return Err(Failure::invalid(anyhow!(
                "simulate writes exactly one of csv or json, got {other:?}"
            )))
        }
    }
    emit(out.as_deref(), &buf)
}

fn converge(args: Common) -> Result<(), Failure> {
    let cfg = load_config(args.config.as_deref())?;
    let mut exp: RateExperimentConfig = match (&cfg.converge, &args.model, args.n) {
        (Some(c), _, _) => c.clone(),
        (None, Some(m), Some(n)) => RateExperimentConfig::new(m, n, 7, 200, 0),
        (None, _, _) => {
            return Err(Failure::invalid(anyhow!(
                "converge needs a config with a 'converge' section, or --model and --n"
            )))
        }
    };
    if let Some(m) = args.model {
        exp.model = m;
    }
    if let Some(n) = args.n {
        exp.n0 = n;
    }
    if let Some(s) = args.seed.or(cfg.seed) {
        exp.seed = s;
    }
    exp.threads = Some(thread_count(args.threads, cfg.threads.or(exp.threads))?);
    let model = ModelRegistry::with_builtins().get(&exp.model).map_err(Failure::invalid)?;
    let report = run_convergence(&model, &exp)?;

    let out_dir = args.out.or(cfg.out).unwrap_or_else(|| PathBuf::from("."));
    let fmt = formats(&args.format, cfg.format.as_ref(), &[Format::Json, Format::Csv]);
    let stem = report.model.clone();
    let diagnostic = as_rate_diagnostic(&report, report.kappa);
    let tables: Vec<_> = exp.eps.iter().map(|&e| exceedance_table(&report, e)).collect();
    for f in &fmt {
        match f {
            Format::Json => {
                let doc = serde_json::json!({
                    "config": &exp,
                    "report": &report,
                    "blowup_flag": report.blowups > 0,
                    "exceedance": &tables,
                    "rate_diagnostic": &diagnostic,
                });
                let mut bytes = serde_json::to_vec_pretty(&doc).map_err(Failure::other)?;
                bytes.push(b'\n');
                emit(Some(&out_dir.join(format!("{stem}.rate.json"))), &bytes)?;
            }
            Format::Csv => {
                let mut bytes = Vec::new();
                write_rate_csv(&mut bytes, &report).map_err(Failure::other)?;
                emit(Some(&out_dir.join(format!("{stem}.quantiles.csv"))), &bytes)?;
            }
            Format::Svg => {
                emit(Some(&out_dir.join(format!("{stem}.rate.svg"))), rate_plot_svg(&report).as_bytes())?;
            }
        }
    }

    match report.gamma_hat {
        Some(g) => println!("gamma_hat = {g:.4} ({})", report.fit_note),
        None => println!("gamma_hat undefined: {}", report.fit_note),
    }
    if let Some(g) = report.gamma_hat_without_finest {
        println!("gamma_hat without finest retained level = {g:.4}");
    }
    for t in &tables {
        let row: Vec<String> = t.rows.iter().map(|r| format!("n={}:{}", r.n, r.fraction)).collect();
        println!(
            "exceedance eps={}: {} (nonincreasing: {})",
            t.eps,
            row.join(" "),
            t.nonincreasing
        );
    }
    println!(
        "rate diagnostic kappa={}: stability ratio {:.3}, growth flag {}",
        diagnostic.kappa, diagnostic.stability_ratio, diagnostic.growth_flag
    );
    if report.blowups > 0 {
        eprintln!("warning: {} path-levels blew up; see blowup_flag in the report", report.blowups);
    }
    Ok(())
}

fn probe(args: ProbeArgs) -> Result<(), Failure> {
    let cfg = load_config(args.common.config.as_deref())?;
    let ProbeSection { model, radius, samples } = cfg.probe.clone().unwrap_or_default();
    let label = args
        .common
        .model
        .or(model)
        .ok_or_else(|| Failure::invalid(anyhow!("probe needs --model")))?;
    let radius = args.radius.or(radius).unwrap_or(2.0);
    let samples = args.samples.or(samples).unwrap_or(100_000);
    if samples == 0 {
        return Err(Failure::invalid(anyhow!("--samples must be positive")));
    }
    if !(radius.is_finite() && radius > 0.0) {
        return Err(Failure::invalid(anyhow!("--radius must be positive, got {radius}")));
    }
    let seed = args.common.seed.or(cfg.seed).unwrap_or(0);
    let model = ModelRegistry::with_builtins().get(&label).map_err(Failure::invalid)?;
    let report = probe_conditions(&model, radius, samples, seed);
    let mut bytes = serde_json::to_vec_pretty(&report).map_err(Failure::other)?;
    bytes.push(b'\n');
    emit(args.common.out.or(cfg.out).as_deref(), &bytes)
}

fn list_models() -> Result<(), Failure> {
    for (label, description) in ModelRegistry::with_builtins().list() {
        println!("{label:<20} {description}");
    }
    Ok(())
}
