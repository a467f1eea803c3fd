//! Seeded experiment orchestration and persistence.

mod config;
mod emit;
mod experiment;

use std::fs;
use std::path::PathBuf;

pub use config::{ExperimentConfig, RawConfig, KEYS};
pub use emit::{
    comparison_rows, convergence_rows, emit, emit_json, sig9, sweep_rows, ComparisonRow, ConvergenceRow, Format, Row,
    SweepRow,
};
pub use experiment::{
    compare_modes, evaluate, evaluate_modes, sweep_beta, train_seeds, Mode, ModeEpisodes, RunSummary, SeedRun, Stat,
};

use crate::error::{Error, Result};
use crate::learning::{config_fingerprint, QTable};

pub fn qtable_path(cfg: &ExperimentConfig, seed: u64) -> PathBuf {
    cfg.output_dir.join(format!("qtable_seed{seed}.txt"))
}

pub fn convergence_path(cfg: &ExperimentConfig, seed: u64, format: Format) -> PathBuf {
    cfg.output_dir
        .join(format!("convergence_seed{seed}.{}", format.extension()))
}

pub(crate) fn ensure_output_dir(cfg: &ExperimentConfig) -> Result<()> {
    fs::create_dir_all(&cfg.output_dir).map_err(|e| Error::io(&cfg.output_dir, e))
}

/// Trains every seed and writes its Q-table artifact and per-episode
/// convergence series into `output_dir`.
pub fn run_training(cfg: &ExperimentConfig, format: Format) -> Result<Vec<SeedRun>> {
    ensure_output_dir(cfg)?;
    let fingerprint = config_fingerprint(&cfg.env);
    let runs = train_seeds(cfg)?;
    for run in &runs {
        run.q.save(&qtable_path(cfg, run.seed), fingerprint)?;
        emit(
            &convergence_rows(&run.episodes),
            format,
            &convergence_path(cfg, run.seed, format),
        )?;
    }
    Ok(runs)
}

/// Loads the per-seed artifacts written by [`run_training`], checking that
/// each was trained under the same environment configuration.
pub fn load_tables(cfg: &ExperimentConfig) -> Result<Vec<QTable>> {
    let expected = config_fingerprint(&cfg.env);
    cfg.seeds
        .iter()
        .map(|&seed| {
            let path = qtable_path(cfg, seed);
            if !path.exists() {
                return Err(Error::Artifact {
                    path,
                    reason: "not found; run `train` with the same config first".into(),
                });
            }
            let (q, fingerprint) = QTable::load(&path)?;
            if fingerprint != expected {
                return Err(Error::Artifact {
                    path,
                    reason: format!("trained under config {fingerprint:016x}, current config is {expected:016x}"),
                });
            }
            q.check_dims(&cfg.env)?;
            Ok(q)
        })
        .collect()
}

/// Evaluates all three modes on the stored tables and writes the comparison
/// curves plus a JSON summary.
pub fn run_comparison(cfg: &ExperimentConfig, format: Format) -> Result<Vec<RunSummary>> {
    let tables = load_tables(cfg)?;
    ensure_output_dir(cfg)?;
    let summaries = compare_modes(cfg, &tables)?;
    emit(
        &comparison_rows(&summaries),
        format,
        &cfg.output_dir.join(format!("comparison.{}", format.extension())),
    )?;
    emit_json(&summaries, &cfg.output_dir.join("comparison_summary.json"))?;
    Ok(summaries)
}

/// Evaluates only the learned greedy policy on the stored tables.
pub fn run_evaluation(cfg: &ExperimentConfig, format: Format) -> Result<RunSummary> {
    let tables = load_tables(cfg)?;
    ensure_output_dir(cfg)?;
    let summary = evaluate_modes(cfg, &tables, &[Mode::Proposed])?
        .summaries(cfg)
        .remove(0);
    emit(
        &comparison_rows(std::slice::from_ref(&summary)),
        format,
        &cfg.output_dir.join(format!("eval.{}", format.extension())),
    )?;
    emit_json(&summary, &cfg.output_dir.join("eval_summary.json"))?;
    Ok(summary)
}

pub fn run_sweep(cfg: &ExperimentConfig, format: Format) -> Result<Vec<RunSummary>> {
    ensure_output_dir(cfg)?;
    let summaries = sweep_beta(cfg)?;
    emit(
        &sweep_rows(&summaries),
        format,
        &cfg.output_dir.join(format!("sweep.{}", format.extension())),
    )?;
    emit_json(&summaries, &cfg.output_dir.join("sweep_summary.json"))?;
    Ok(summaries)
}
