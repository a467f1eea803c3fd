//! Flat `key = value` experiment configuration.
//!
//! One key per line, `#` starts a comment, lists are comma-separated and the
//! rows of `transition_matrix` are separated by `;`. Keys that are absent take
//! the reference defaults.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use crate::cost;
use crate::env::{ChannelChain, EnvConfig};
use crate::error::{Error, Result};
use crate::learning::LearningParams;

/// Every accepted key with its unit and meaning, in canonical order.
pub const KEYS: &[(&str, &str, &str)] = &[
    ("horizon", "epochs", "epochs per episode (K)"),
    ("t_max", "tasks", "queue capacity; episodes start with a full queue"),
    ("arrival_prob", "probability", "chance that one task arrives per epoch"),
    (
        "size_set",
        "bits, list",
        "task sizes, drawn uniformly when a task is popped",
    ),
    (
        "gain_values",
        "dimensionless, list",
        "channel gain of each Markov state, increasing",
    ),
    (
        "channel_stay",
        "probability",
        "builds a transition matrix with this stay probability",
    ),
    (
        "transition_matrix",
        "probabilities, rows split by ';'",
        "explicit channel transition matrix",
    ),
    (
        "outage_probs",
        "probabilities, list",
        "offload failure probability per gain state",
    ),
    ("device_cycles_per_bit", "cycles/bit", "local CPU cycles per input bit"),
    ("device_power_per_cycle", "watts/cycle", "local power per CPU cycle"),
    ("device_capacity", "cycles/second", "local compute speed"),
    ("device_cycle_budget", "cycles", "local cycles available per episode"),
    ("edge_cycles_per_bit", "cycles/bit", "edge CPU cycles per input bit"),
    ("edge_power_per_cycle", "watts/cycle", "edge power per CPU cycle"),
    (
        "edge_capacity",
        "cycles/second",
        "edge compute speed allocated to the device",
    ),
    ("bandwidth", "hertz", "uplink bandwidth"),
    (
        "noise_density_dbm_hz",
        "dBm/Hz",
        "noise density; noise power = density + 10 log10(bandwidth)",
    ),
    ("power_levels", "watts, list", "transmit power levels, increasing"),
    ("penalty", "cost units", "cost of a failed transmission"),
    (
        "beta",
        "dimensionless in [0,1]",
        "latency weight: cost = power + beta * latency (seconds)",
    ),
    ("resource_bins", "bins", "resolution of the remaining-budget state"),
    ("rng_seed", "integer", "default environment seed"),
    ("gamma", "dimensionless in [0,1]", "discount factor"),
    ("alpha", "dimensionless in (0,1]", "learning rate"),
    ("epsilon", "probability", "exploration rate during training"),
    ("episodes", "episodes", "training episodes per seed"),
    ("eval_episodes", "episodes", "evaluation episodes per seed and mode"),
    ("seeds", "integers, list", "one independent run per seed"),
    ("beta_sweep", "dimensionless, list", "beta values visited by `sweep`"),
    ("output_dir", "path", "directory for artifacts and CSV/JSON files"),
    (
        "edge_power_index",
        "index",
        "power level used by the edge-only baseline",
    ),
    (
        "edge_stop_on_failure",
        "bool",
        "edge-only episodes end at the first failed transmission",
    ),
];

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub env: EnvConfig,
    pub learn: LearningParams,
    pub eval_episodes: usize,
    pub seeds: Vec<u64>,
    pub beta_sweep: Vec<f64>,
    pub output_dir: PathBuf,
    pub edge_power_index: usize,
    pub edge_stop_on_failure: bool,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        let env = EnvConfig::reference();
        let edge_power_index = env.radio.power_levels.len() - 1;
        ExperimentConfig {
            env,
            learn: LearningParams::default(),
            eval_episodes: 200,
            seeds: (1..=10).collect(),
            beta_sweep: vec![0.1, 0.5, 0.9],
            output_dir: PathBuf::from("out"),
            edge_power_index,
            edge_stop_on_failure: false,
        }
    }
}

/// Raw key/value pairs, checked against [`KEYS`].
#[derive(Debug, Clone, Default, PartialEq)]
pub struct RawConfig {
    entries: BTreeMap<String, String>,
}

impl RawConfig {
    pub fn parse(text: &str) -> Result<Self> {
        let mut raw = RawConfig::default();
        for (n, line) in text.lines().enumerate() {
            let line = line.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (k, v) = line.split_once('=').ok_or_else(|| {
                Error::config(
                    format!("line {}", n + 1),
                    format!("expected `key = value`, got `{line}`"),
                )
            })?;
            raw.set(k.trim(), v.trim())?;
        }
        Ok(raw)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse(&text)
    }

    /// Sets one key; unknown keys are rejected.
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        if !KEYS.iter().any(|(k, _, _)| *k == key) {
            return Err(Error::config(key, "unknown key"));
        }
        self.entries.insert(key.to_owned(), value.to_owned());
        Ok(())
    }

    /// Applies a `KEY=VALUE` override.
    pub fn apply_override(&mut self, assignment: &str) -> Result<()> {
        let (k, v) = assignment
            .split_once('=')
            .ok_or_else(|| Error::config(assignment, "override must look like KEY=VALUE"))?;
        self.set(k.trim(), v.trim())
    }

    fn get<T: std::str::FromStr>(&self, key: &str) -> Result<Option<T>> {
        self.entries
            .get(key)
            .map(|v| {
                v.parse::<T>()
                    .map_err(|_| Error::config(key, format!("cannot parse `{v}`")))
            })
            .transpose()
    }

    fn list<T: std::str::FromStr>(&self, key: &str) -> Result<Option<Vec<T>>> {
        self.entries.get(key).map(|v| parse_list(key, v)).transpose()
    }

    pub fn build(&self) -> Result<ExperimentConfig> {
        let mut cfg = ExperimentConfig::default();
        let env = &mut cfg.env;

        macro_rules! scalar {
            ($key:literal => $field:expr) => {
                if let Some(v) = self.get($key)? {
                    $field = v;
                }
            };
        }
        scalar!("horizon" => env.horizon);
        scalar!("t_max" => env.t_max);
        scalar!("arrival_prob" => env.arrival_prob);
        if let Some(v) = self.list("size_set")? {
            env.size_set = v;
        }
        scalar!("device_cycles_per_bit" => env.device.cycles_per_bit);
        scalar!("device_power_per_cycle" => env.device.power_per_cycle);
        scalar!("device_capacity" => env.device.compute_capacity);
        scalar!("device_cycle_budget" => env.device.total_cycle_budget);
        scalar!("edge_cycles_per_bit" => env.edge.cycles_per_bit);
        scalar!("edge_power_per_cycle" => env.edge.power_per_cycle);
        scalar!("edge_capacity" => env.edge.allocated_capacity);
        scalar!("bandwidth" => env.radio.bandwidth);
        let density: f64 = self.get("noise_density_dbm_hz")?.unwrap_or(-174.0);
        env.radio.noise_power = cost::dbm_to_watts(cost::noise_dbm(density, env.radio.bandwidth));
        if let Some(v) = self.list("power_levels")? {
            env.radio.power_levels = v;
        }
        scalar!("penalty" => env.radio.penalty);
        scalar!("beta" => env.weights.beta);
        scalar!("resource_bins" => env.resource_bins);
        scalar!("rng_seed" => env.rng_seed);

        let gains: Option<Vec<f64>> = self.list("gain_values")?;
        let stay: Option<f64> = self.get("channel_stay")?;
        let matrix = self
            .entries
            .get("transition_matrix")
            .map(|v| parse_matrix(v))
            .transpose()?;
        if gains.is_some() || stay.is_some() || matrix.is_some() {
            if stay.is_some() && matrix.is_some() {
                return Err(Error::config(
                    "channel_stay",
                    "conflicts with transition_matrix; set only one",
                ));
            }
            let gain_values = gains.unwrap_or_else(|| env.channel.gain_values.clone());
            env.channel = match matrix {
                Some(transition) => ChannelChain {
                    gain_values,
                    transition,
                },
                None => ChannelChain::with_stay(gain_values, stay.unwrap_or(0.5)),
            };
        }
        if let Some(v) = self.list("outage_probs")? {
            env.radio.outage_probs = v;
        }

        scalar!("gamma" => cfg.learn.gamma);
        scalar!("alpha" => cfg.learn.alpha);
        scalar!("epsilon" => cfg.learn.epsilon);
        scalar!("episodes" => cfg.learn.episodes);
        scalar!("eval_episodes" => cfg.eval_episodes);
        if let Some(v) = self.list("seeds")? {
            cfg.seeds = v;
        }
        if let Some(v) = self.entries.get("beta_sweep") {
            cfg.beta_sweep = if v.is_empty() {
                Vec::new()
            } else {
                parse_list("beta_sweep", v)?
            };
        }
        scalar!("output_dir" => cfg.output_dir);
        cfg.edge_power_index = match self.get("edge_power_index")? {
            Some(i) => i,
            None => cfg.env.radio.power_levels.len().saturating_sub(1),
        };
        scalar!("edge_stop_on_failure" => cfg.edge_stop_on_failure);

        cfg.validate()?;
        Ok(cfg)
    }
}

impl ExperimentConfig {
    pub fn from_text(text: &str) -> Result<Self> {
        RawConfig::parse(text)?.build()
    }

    pub fn validate(&self) -> Result<()> {
        self.env.validate()?;
        self.learn.validate()?;
        if self.seeds.is_empty() {
            return Err(Error::config("seeds", "must not be empty"));
        }
        if self.eval_episodes == 0 {
            return Err(Error::config("eval_episodes", "must be >= 1"));
        }
        if let Some(b) = self.beta_sweep.iter().find(|b| !(0.0..=1.0).contains(*b)) {
            return Err(Error::config("beta_sweep", format!("{b} is outside [0, 1]")));
        }
        if self.edge_power_index >= self.env.radio.power_levels.len() {
            return Err(Error::config(
                "edge_power_index",
                format!("{} power levels configured", self.env.radio.power_levels.len()),
            ));
        }
        Ok(())
    }

    /// Canonical text form; parses back to an equal config.
    pub fn to_text(&self) -> String {
        let e = &self.env;
        let density = 10.0 * (e.radio.noise_power * 1e3).log10() - 10.0 * e.radio.bandwidth.log10();
        let mut out = String::new();
        let mut put = |k: &str, v: String| {
            let _ = writeln!(out, "{k} = {v}");
        };
        put("horizon", e.horizon.to_string());
        put("t_max", e.t_max.to_string());
        put("arrival_prob", e.arrival_prob.to_string());
        put("size_set", join(&e.size_set));
        put("gain_values", join(&e.channel.gain_values));
        put(
            "transition_matrix",
            e.channel
                .transition
                .iter()
                .map(|r| join(r))
                .collect::<Vec<_>>()
                .join("; "),
        );
        put("outage_probs", join(&e.radio.outage_probs));
        put("device_cycles_per_bit", e.device.cycles_per_bit.to_string());
        put("device_power_per_cycle", e.device.power_per_cycle.to_string());
        put("device_capacity", e.device.compute_capacity.to_string());
        put("device_cycle_budget", e.device.total_cycle_budget.to_string());
        put("edge_cycles_per_bit", e.edge.cycles_per_bit.to_string());
        put("edge_power_per_cycle", e.edge.power_per_cycle.to_string());
        put("edge_capacity", e.edge.allocated_capacity.to_string());
        put("bandwidth", e.radio.bandwidth.to_string());
        put("noise_density_dbm_hz", format!("{}", (density * 1e9).round() / 1e9));
        put("power_levels", join(&e.radio.power_levels));
        put("penalty", e.radio.penalty.to_string());
        put("beta", e.weights.beta.to_string());
        put("resource_bins", e.resource_bins.to_string());
        put("rng_seed", e.rng_seed.to_string());
        put("gamma", self.learn.gamma.to_string());
        put("alpha", self.learn.alpha.to_string());
        put("epsilon", self.learn.epsilon.to_string());
        put("episodes", self.learn.episodes.to_string());
        put("eval_episodes", self.eval_episodes.to_string());
        put("seeds", join(&self.seeds));
        put("beta_sweep", join(&self.beta_sweep));
        put("output_dir", self.output_dir.display().to_string());
        put("edge_power_index", self.edge_power_index.to_string());
        put("edge_stop_on_failure", self.edge_stop_on_failure.to_string());
        out
    }
}

fn join<T: ToString>(xs: &[T]) -> String {
    xs.iter().map(ToString::to_string).collect::<Vec<_>>().join(", ")
}

fn parse_list<T: std::str::FromStr>(key: &str, v: &str) -> Result<Vec<T>> {
    v.split(',')
        .map(|t| {
            let t = t.trim();
            t.parse::<T>()
                .map_err(|_| Error::config(key, format!("cannot parse list item `{t}`")))
        })
        .collect()
}

fn parse_matrix(v: &str) -> Result<Vec<Vec<f64>>> {
    v.split(';').map(|row| parse_list("transition_matrix", row)).collect()
}
