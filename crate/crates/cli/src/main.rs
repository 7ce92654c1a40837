//! `resdeploy`: validate inputs, run method comparisons, export deployment
//! scenarios and sample synthetic errors.

mod commands;
mod config;
mod fail;
mod inputs;

use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::Result;
use clap::{Args, Parser, Subcommand};
use serde::de::DeserializeOwned;

use resdeploy::evalsim::{InitSet, Method};
use resdeploy::forecast::QuantileMethod;

use config::RunConfig;
use fail::{exit_code, Fail, EXIT_CONFIG};

#[derive(Parser)]
#[command(name = "resdeploy", version, about = "Reserve scheduling with deployment scenarios")]
struct Cli {
    /// Worker threads for real-time and adversary solves [default: all cores].
    #[arg(long, global = true)]
    workers: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Parse and check grid, forecast and scenario inputs.
    Validate(InputArgs),
    /// Evaluate methods over every alpha and write reports plus a manifest.
    Run(RunArgs),
    /// Write one hour's deployment scenarios as a scenario CSV.
    ExportScenarios(ExportArgs),
    /// Draw synthetic forecast errors from the sampler or a profile.
    Sample(SampleArgs),
}

/// Inputs; each flag overrides the config file.
#[derive(Args)]
struct InputArgs {
    /// TOML or JSON run config (a run manifest also works).
    #[arg(short, long)]
    config: Option<PathBuf>,
    #[arg(long)]
    grid: Option<PathBuf>,
    #[arg(long)]
    forecast: Option<PathBuf>,
    #[arg(long)]
    scenarios: Option<PathBuf>,
    #[arg(long)]
    test_scenarios: Option<PathBuf>,
    #[arg(long)]
    profile: Option<PathBuf>,
    /// Profile hours to evaluate.
    #[arg(long)]
    hours: Option<usize>,
    /// Sampled training scenarios per hour.
    #[arg(long)]
    train: Option<usize>,
    /// Sampled test realisations per hour.
    #[arg(long)]
    test: Option<usize>,
    #[arg(long)]
    train_seed: Option<u64>,
    #[arg(long)]
    test_seed: Option<u64>,
}

#[derive(Args)]
struct SolveArgs {
    /// Comma-separated confidence levels.
    #[arg(long, value_delimiter = ',')]
    alpha: Option<Vec<f64>>,
    /// Penalty on slack, $/MWh.
    #[arg(long)]
    c_viol: Option<f64>,
    /// Deployment scenario cap.
    #[arg(long)]
    m_max: Option<usize>,
    /// Alternating-direction iteration cap.
    #[arg(long)]
    adm_iters: Option<usize>,
    #[arg(long)]
    eps_adm: Option<f64>,
    #[arg(long)]
    gap_tol: Option<f64>,
    /// Congested lines given targeted adversary starts.
    #[arg(long)]
    flagged_lines: Option<usize>,
    /// extremes-and-lines or extremes-only.
    #[arg(long, value_parser = parse_name::<InitSet>)]
    init_set: Option<InitSet>,
    /// linear or nearest-rank.
    #[arg(long, value_parser = parse_name::<QuantileMethod>)]
    quantile: Option<QuantileMethod>,
    /// Keep VRE uncurtailed day-ahead.
    #[arg(long)]
    no_curtail: bool,
}

#[derive(Args)]
struct RunArgs {
    #[command(flatten)]
    input: InputArgs,
    #[command(flatten)]
    solve: SolveArgs,
    /// Comma-separated subset of dsw, ext, ccg, venum.
    #[arg(long, value_delimiter = ',')]
    methods: Option<Vec<Method>>,
    #[arg(short, long)]
    output: Option<PathBuf>,
}

#[derive(Args)]
struct ExportArgs {
    #[command(flatten)]
    input: InputArgs,
    #[command(flatten)]
    solve: SolveArgs,
    /// ext, ccg or venum.
    #[arg(long)]
    method: Method,
    #[arg(long, default_value_t = 0)]
    hour: usize,
    #[arg(short, long)]
    output: PathBuf,
}

#[derive(Args)]
struct SampleArgs {
    #[command(flatten)]
    input: InputArgs,
    /// Scenarios to draw [default: profile's training count, else --train].
    #[arg(long)]
    count: Option<usize>,
    #[arg(long, default_value_t = 0)]
    hour: usize,
    #[arg(short, long)]
    output: PathBuf,
    /// Also write the profile hour's forecast here.
    #[arg(long)]
    forecast_out: Option<PathBuf>,
}

/// Parses a kebab-case name the way config files spell it.
fn parse_name<T: DeserializeOwned>(s: &str) -> Result<T, String> {
    serde_json::from_value(serde_json::Value::String(s.to_string())).map_err(|e| e.to_string())
}

impl InputArgs {
    fn resolve(&self) -> Result<RunConfig> {
        let mut c = match &self.config {
            Some(p) => RunConfig::load(p)?,
            None => RunConfig::default(),
        };
        let set = |dst: &mut Option<PathBuf>, src: &Option<PathBuf>| {
            if src.is_some() {
                dst.clone_from(src);
            }
        };
        set(&mut c.grid, &self.grid);
        set(&mut c.forecast, &self.forecast);
        set(&mut c.scenarios, &self.scenarios);
        set(&mut c.test_scenarios, &self.test_scenarios);
        set(&mut c.profile, &self.profile);
        c.hours = self.hours.unwrap_or(c.hours);
        c.train = self.train.unwrap_or(c.train);
        c.test = self.test.unwrap_or(c.test);
        c.seeds.train = self.train_seed.or(c.seeds.train);
        c.seeds.test = self.test_seed.or(c.seeds.test);
        Ok(c)
    }
}

impl SolveArgs {
    fn apply(&self, c: &mut RunConfig) {
        if let Some(a) = &self.alpha {
            c.alphas.clone_from(a);
        }
        c.c_viol = self.c_viol.unwrap_or(c.c_viol);
        c.m_max = self.m_max.unwrap_or(c.m_max);
        c.adm_iters = self.adm_iters.unwrap_or(c.adm_iters);
        c.eps_adm = self.eps_adm.unwrap_or(c.eps_adm);
        c.gap_tol = self.gap_tol.unwrap_or(c.gap_tol);
        c.flagged_lines = self.flagged_lines.unwrap_or(c.flagged_lines);
        c.init_set = self.init_set.unwrap_or(c.init_set);
        c.quantile = self.quantile.unwrap_or(c.quantile);
        if self.no_curtail {
            c.curtail = false;
        }
    }
}

fn dispatch(cli: Cli) -> Result<()> {
    if let Some(n) = cli.workers {
        if n == 0 {
            return Err(Fail::Config("--workers must be at least 1".into()).into());
        }
        rayon::ThreadPoolBuilder::new().num_threads(n).build_global()?;
    }
    match cli.command {
        Command::Validate(a) => commands::validate(&a.resolve()?),
        Command::Run(a) => {
            let mut c = a.input.resolve()?;
            a.solve.apply(&mut c);
            if let Some(m) = a.methods {
                c.methods = m;
            }
            if let Some(o) = a.output {
                c.output = o;
            }
            commands::run(c)
        }
        Command::ExportScenarios(a) => {
            let mut c = a.input.resolve()?;
            a.solve.apply(&mut c);
            commands::export_scenarios(&c, a.method, a.hour, &a.output)
        }
        Command::Sample(a) => {
            let c = a.input.resolve()?;
            commands::sample(&c, a.count, a.hour, &a.output, a.forecast_out.as_deref())
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let usage = e.use_stderr();
            let _ = e.print();
            return if usage { ExitCode::from(EXIT_CONFIG) } else { ExitCode::SUCCESS };
        }
    };
    match dispatch(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(exit_code(&e))
        }
    }
}
