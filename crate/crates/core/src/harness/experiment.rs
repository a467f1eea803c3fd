use std::collections::BTreeMap;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::config::ExperimentConfig;
use crate::env::{derive_seed, EnvConfig, Environment};
use crate::error::{Error, Result};
use crate::learning::{self, run_episode, Policy, QTable};
use crate::metrics::EpisodeMetrics;

const EVAL_ENV_STREAM: u64 = 2;
const EVAL_POLICY_STREAM: u64 = 3;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    Proposed,
    Local,
    Edge,
}

impl Mode {
    pub const ALL: [Mode; 3] = [Mode::Proposed, Mode::Local, Mode::Edge];

    pub fn as_str(self) -> &'static str {
        match self {
            Mode::Proposed => "proposed",
            Mode::Local => "local",
            Mode::Edge => "edge",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Stat {
    pub mean: f64,
    pub std: f64,
    pub n: usize,
}

impl Stat {
    /// Mean and sample standard deviation (zero for a single sample).
    pub fn of(xs: impl IntoIterator<Item = f64>) -> Stat {
        let xs: Vec<f64> = xs.into_iter().collect();
        let n = xs.len();
        if n == 0 {
            return Stat { mean: 0.0, std: 0.0, n };
        }
        let mean = xs.iter().sum::<f64>() / n as f64;
        let var = if n > 1 {
            xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1) as f64
        } else {
            0.0
        };
        Stat {
            mean,
            std: var.sqrt(),
            n,
        }
    }

    pub fn std_error(&self) -> f64 {
        if self.n == 0 {
            0.0
        } else {
            self.std / (self.n as f64).sqrt()
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunSummary {
    pub mode: Mode,
    pub beta: f64,
    pub total_cost: Stat,
    pub total_power: Stat,
    pub total_latency: Stat,
    pub epochs_executed: Stat,
    pub failures: Stat,
    /// Failed transmissions per offload attempt, pooled over all episodes.
    pub failure_rate: f64,
    pub terminations: BTreeMap<String, usize>,
    pub mean_cum_power: Vec<f64>,
    pub mean_cum_latency: Vec<f64>,
    pub mean_cum_cost: Vec<f64>,
}

impl RunSummary {
    /// Aggregates episodes; curves have `horizon` points and shorter episodes
    /// hold their final cumulative value.
    pub fn from_episodes(mode: Mode, beta: f64, horizon: usize, episodes: &[EpisodeMetrics]) -> Self {
        let mean_curve = |field: fn(&crate::metrics::EpochRecord) -> f64| -> Vec<f64> {
            let mut acc = vec![0.0; horizon];
            for ep in episodes {
                for (a, v) in acc.iter_mut().zip(ep.cumulative(horizon, field)) {
                    *a += v;
                }
            }
            let n = episodes.len().max(1) as f64;
            acc.into_iter().map(|v| v / n).collect()
        };
        let attempts: usize = episodes.iter().map(EpisodeMetrics::offload_attempts).sum();
        let failures: usize = episodes.iter().map(|e| e.failures).sum();
        let mut terminations = BTreeMap::new();
        for ep in episodes {
            *terminations.entry(ep.termination.as_str().to_owned()).or_insert(0) += 1;
        }
        RunSummary {
            mode,
            beta,
            total_cost: Stat::of(episodes.iter().map(|e| e.total_cost)),
            total_power: Stat::of(episodes.iter().map(|e| e.total_power)),
            total_latency: Stat::of(episodes.iter().map(|e| e.total_latency)),
            epochs_executed: Stat::of(episodes.iter().map(|e| e.epochs_executed() as f64)),
            failures: Stat::of(episodes.iter().map(|e| e.failures as f64)),
            failure_rate: if attempts == 0 {
                0.0
            } else {
                failures as f64 / attempts as f64
            },
            terminations,
            mean_cum_power: mean_curve(|e| e.power),
            mean_cum_latency: mean_curve(|e| e.latency),
            mean_cum_cost: mean_curve(|e| e.cost),
        }
    }
}

/// Training result for one seed.
#[derive(Debug, Clone)]
pub struct SeedRun {
    pub seed: u64,
    pub q: QTable,
    pub episodes: Vec<EpisodeMetrics>,
}

/// Trains one table per configured seed.
pub fn train_seeds(cfg: &ExperimentConfig) -> Result<Vec<SeedRun>> {
    cfg.validate()?;
    cfg.seeds
        .iter()
        .map(|&seed| {
            let out = learning::train(&cfg.env, &cfg.learn, seed)?;
            Ok(SeedRun {
                seed,
                q: out.q,
                episodes: out.episodes,
            })
        })
        .collect()
}

/// Evaluates `policy` for `episodes` episodes. Environment seeds depend only
/// on `seed` and the episode index, so every policy sees the same channel and
/// arrival draws.
pub fn evaluate(env_cfg: &EnvConfig, policy: &Policy<'_>, seed: u64, episodes: usize) -> Result<Vec<EpisodeMetrics>> {
    let mut env = Environment::new(env_cfg.clone())?;
    let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(seed, EVAL_POLICY_STREAM, 0));
    (0..episodes)
        .map(|i| run_episode(&mut env, derive_seed(seed, EVAL_ENV_STREAM, i as u64), policy, &mut rng))
        .collect()
}

fn policy_for<'q>(cfg: &ExperimentConfig, mode: Mode, q: &'q QTable) -> Policy<'q> {
    match mode {
        Mode::Proposed => learning::greedy_policy(q),
        Mode::Local => Policy::LocalOnly,
        Mode::Edge => Policy::EdgeOnly {
            power_index: cfg.edge_power_index,
            stop_on_failure: cfg.edge_stop_on_failure,
        },
    }
}

/// Raw evaluation episodes of each mode, pooled over seeds in seed order.
#[derive(Debug, Clone)]
pub struct ModeEpisodes {
    pub by_mode: BTreeMap<Mode, Vec<EpisodeMetrics>>,
}

impl ModeEpisodes {
    pub fn summaries(&self, cfg: &ExperimentConfig) -> Vec<RunSummary> {
        self.by_mode
            .iter()
            .map(|(&mode, eps)| RunSummary::from_episodes(mode, cfg.env.weights.beta, cfg.env.horizon, eps))
            .collect()
    }
}

/// Evaluates `modes` over `eval_episodes` x seeds. `tables` holds either one
/// table shared by every seed or one table per seed, in seed order.
pub fn evaluate_modes(cfg: &ExperimentConfig, tables: &[QTable], modes: &[Mode]) -> Result<ModeEpisodes> {
    cfg.validate()?;
    if tables.len() != 1 && tables.len() != cfg.seeds.len() {
        return Err(Error::config(
            "seeds",
            format!("{} q-tables for {} seeds", tables.len(), cfg.seeds.len()),
        ));
    }
    for q in tables {
        q.check_dims(&cfg.env)?;
    }
    let mut by_mode: BTreeMap<Mode, Vec<EpisodeMetrics>> = BTreeMap::new();
    for (i, &seed) in cfg.seeds.iter().enumerate() {
        let q = &tables[if tables.len() == 1 { 0 } else { i }];
        for &mode in modes {
            let eps = evaluate(&cfg.env, &policy_for(cfg, mode, q), seed, cfg.eval_episodes)?;
            by_mode.entry(mode).or_default().extend(eps);
        }
    }
    Ok(ModeEpisodes { by_mode })
}

/// Proposed, local-only and edge-only summaries, in that order.
pub fn compare_modes(cfg: &ExperimentConfig, tables: &[QTable]) -> Result<Vec<RunSummary>> {
    let mut out = evaluate_modes(cfg, tables, &Mode::ALL)?.summaries(cfg);
    out.sort_by_key(|s| Mode::ALL.iter().position(|m| *m == s.mode));
    Ok(out)
}

/// Trains and evaluates the learned policy for every beta in the sweep.
pub fn sweep_beta(cfg: &ExperimentConfig) -> Result<Vec<RunSummary>> {
    if cfg.beta_sweep.is_empty() {
        return Err(Error::config("beta_sweep", "must not be empty for a sweep"));
    }
    cfg.beta_sweep
        .iter()
        .map(|&beta| {
            let mut c = cfg.clone();
            c.env.weights.beta = beta;
            let tables: Vec<QTable> = train_seeds(&c)?.into_iter().map(|r| r.q).collect();
            let eps = evaluate_modes(&c, &tables, &[Mode::Proposed])?;
            Ok(eps.summaries(&c).remove(0))
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small() -> ExperimentConfig {
        ExperimentConfig {
            seeds: vec![1, 2],
            eval_episodes: 20,
            learn: crate::LearningParams {
                episodes: 100,
                ..Default::default()
            },
            ..Default::default()
        }
    }

    #[test]
    fn stats() {
        let s = Stat::of([1.0, 2.0, 3.0, 4.0]);
        assert_eq!(s.mean, 2.5);
        assert!((s.std - (5.0f64 / 3.0).sqrt()).abs() < 1e-15);
        assert_eq!(Stat::of([7.0]).std, 0.0);
    }

    #[test]
    fn comparison_is_reproducible_and_ordered() {
        let cfg = small();
        let tables: Vec<QTable> = train_seeds(&cfg).unwrap().into_iter().map(|r| r.q).collect();
        let a = compare_modes(&cfg, &tables).unwrap();
        let b = compare_modes(&cfg, &tables).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.iter().map(|s| s.mode).collect::<Vec<_>>(), Mode::ALL.to_vec());
        for s in &a {
            assert_eq!(s.total_cost.n, 40);
            assert_eq!(s.mean_cum_cost.len(), cfg.env.horizon);
            assert!((s.mean_cum_cost.last().unwrap() - s.total_cost.mean).abs() < 1e-12);
        }
    }

    #[test]
    fn mismatched_table_is_rejected() {
        let cfg = small();
        let q = QTable::zeros(3, 3);
        assert!(matches!(
            compare_modes(&cfg, &[q]),
            Err(Error::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn sweep_tags_each_beta() {
        let mut cfg = small();
        cfg.seeds = vec![5];
        cfg.learn.episodes = 30;
        let out = sweep_beta(&cfg).unwrap();
        assert_eq!(out.iter().map(|s| s.beta).collect::<Vec<_>>(), vec![0.1, 0.5, 0.9]);
        assert_ne!(out[0].mean_cum_cost, out[2].mean_cum_cost);
        cfg.beta_sweep.clear();
        assert!(sweep_beta(&cfg).is_err());
    }

    #[test]
    fn zero_beta_cost_is_power() {
        let mut cfg = small();
        cfg.env.radio.outage_probs = vec![0.0; 3];
        cfg.beta_sweep = vec![0.0];
        cfg.learn.episodes = 30;
        let s = &sweep_beta(&cfg).unwrap()[0];
        for (c, p) in s.mean_cum_cost.iter().zip(&s.mean_cum_power) {
            assert!((c - p).abs() <= 1e-12 * p.max(1.0));
        }
    }
}
