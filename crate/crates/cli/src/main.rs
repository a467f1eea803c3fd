use std::path::PathBuf;
use std::process::ExitCode;

use clap::{CommandFactory, FromArgMatches, Parser, Subcommand};
use offload_core::harness::{self, ExperimentConfig, Format, RawConfig, RunSummary, KEYS};
use offload_core::Error;

const DEFAULT_CFG: &str = include_str!("../../../default.cfg");

const EXIT_CONFIG: u8 = 3;
const EXIT_RUNTIME: u8 = 4;

/// Simulate IoT task offloading, train Q-learning policies and compare them
/// with the local-only and edge-only baselines.
#[derive(Debug, Parser)]
#[command(name = "offload", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Train one Q-table per seed and write convergence series.
    Train(Common),
    /// Evaluate the trained greedy policy.
    Eval(Common),
    /// Evaluate the trained policy against both baselines.
    Compare(Common),
    /// Train and evaluate for every value in `beta_sweep`.
    Sweep(Common),
}

#[derive(Debug, clap::Args)]
struct Common {
    /// Config file of `key = value` lines; defaults to the built-in reference config.
    #[arg(long, value_name = "PATH")]
    config: Option<PathBuf>,
    /// Seed to run; repeat for several. Replaces `seeds` from the config.
    #[arg(long = "seed", value_name = "N")]
    seeds: Vec<u64>,
    /// Output directory. Replaces `output_dir` from the config.
    #[arg(long, value_name = "DIR")]
    out: Option<PathBuf>,
    /// Override one config key; repeatable.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    overrides: Vec<String>,
    /// Format of the series files.
    #[arg(long, value_name = "csv|json", default_value = "csv")]
    format: Format,
}

impl Common {
    fn load(&self) -> Result<ExperimentConfig, Error> {
        let mut raw = match &self.config {
            Some(path) => RawConfig::load(path)?,
            None => RawConfig::parse(DEFAULT_CFG)?,
        };
        for o in &self.overrides {
            raw.apply_override(o)?;
        }
        let mut cfg = raw.build()?;
        if !self.seeds.is_empty() {
            cfg.seeds = self.seeds.clone();
        }
        if let Some(out) = &self.out {
            cfg.output_dir = out.clone();
        }
        cfg.validate()?;
        Ok(cfg)
    }
}

fn keys_help() -> String {
    let width = KEYS.iter().map(|(k, _, _)| k.len()).max().unwrap_or(0);
    let unit_width = KEYS.iter().map(|(_, u, _)| u.len()).max().unwrap_or(0);
    let mut out = String::from("Config keys (for --config files and --set):\n");
    for (key, unit, desc) in KEYS {
        out.push_str(&format!("  {key:width$}  {unit:unit_width$}  {desc}\n"));
    }
    out.push_str("\nExit codes: 0 ok, 2 usage, 3 config or missing artifact, 4 runtime failure.");
    out
}

fn describe(s: &RunSummary) -> String {
    format!(
        "{} cost {:.4} (se {:.4}) power {:.4} latency {:.4} epochs {:.2}",
        s.mode.as_str(),
        s.total_cost.mean,
        s.total_cost.std_error(),
        s.total_power.mean,
        s.total_latency.mean,
        s.epochs_executed.mean
    )
}

fn run(command: &Command, cfg: &ExperimentConfig, format: Format) -> Result<String, Error> {
    let dir = cfg.output_dir.display();
    Ok(match command {
        Command::Train(_) => {
            let runs = harness::run_training(cfg, format)?;
            let tail: Vec<f64> = runs
                .iter()
                .flat_map(|r| r.episodes[r.episodes.len().saturating_sub(100)..].iter())
                .map(|e| e.average_cost())
                .collect();
            let mean = tail.iter().sum::<f64>() / tail.len().max(1) as f64;
            format!(
                "train: {} seeds x {} episodes, final-100 mean epoch cost {mean:.4}, wrote {dir}",
                runs.len(),
                cfg.learn.episodes
            )
        }
        Command::Eval(_) => {
            let s = harness::run_evaluation(cfg, format)?;
            format!("eval: {}, {} episodes, wrote {dir}", describe(&s), s.total_cost.n)
        }
        Command::Compare(_) => {
            let out = harness::run_comparison(cfg, format)?;
            let parts: Vec<String> = out.iter().map(describe).collect();
            format!("compare: {}; wrote {dir}", parts.join(" | "))
        }
        Command::Sweep(_) => {
            let out = harness::run_sweep(cfg, format)?;
            let parts: Vec<String> = out
                .iter()
                .map(|s| format!("beta {} cost {:.4}", s.beta, s.total_cost.mean))
                .collect();
            format!("sweep: {}; wrote {dir}", parts.join(", "))
        }
    })
}

fn is_config_error(e: &Error) -> bool {
    matches!(
        e,
        Error::Config { .. } | Error::Artifact { .. } | Error::DimensionMismatch { .. }
    )
}

fn main() -> ExitCode {
    let help = keys_help();
    let mut cmd = Cli::command().after_help(help.clone());
    for name in ["train", "eval", "compare", "sweep"] {
        cmd = cmd.mut_subcommand(name, |sub| sub.after_help(help.clone()));
    }
    let matches = cmd.get_matches();
    let cli = match Cli::from_arg_matches(&matches) {
        Ok(cli) => cli,
        Err(e) => e.exit(),
    };
    let common = match &cli.command {
        Command::Train(c) | Command::Eval(c) | Command::Compare(c) | Command::Sweep(c) => c,
    };
    let cfg = match common.load() {
        Ok(cfg) => cfg,
        Err(e) => {
            eprintln!("offload: config error: {e}");
            return ExitCode::from(EXIT_CONFIG);
        }
    };
    match run(&cli.command, &cfg, common.format) {
        Ok(line) => {
            println!("{line}");
            ExitCode::SUCCESS
        }
        Err(e) if is_config_error(&e) => {
            eprintln!("offload: {e}");
            ExitCode::from(EXIT_CONFIG)
        }
        Err(e) => {
            eprintln!("offload: {e}");
            ExitCode::from(EXIT_RUNTIME)
        }
    }
}
