//! Single-device offloading environment.
//!
//! The device observes `(gain state, queue length, resource bin)` at the start
//! of each epoch and handles at most one queued task, either locally or by
//! offloading it at one of the configured transmit powers. The channel follows
//! a finite Markov chain, tasks arrive as Bernoulli draws and an offload fails
//! with a gain-dependent outage probability.
//!
//! Every `step` draws exactly four uniforms in a fixed order (task size,
//! outage, arrival, channel), whatever the action. Two policies replayed from
//! the same seed therefore see the same channel and arrival sequence.

use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::cost::{self, CostBreakdown, CostWeights, DeviceProfile, EdgeProfile, OutcomeKind, RadioProfile, TaskSpec};
use crate::error::{Error, Result};

const ROW_SUM_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChannelChain {
    /// Dimensionless channel gains, strictly increasing.
    pub gain_values: Vec<f64>,
    /// Row-stochastic transition matrix.
    pub transition: Vec<Vec<f64>>,
}

impl ChannelChain {
    /// Each state keeps its gain with probability `stay` and moves to any
    /// other state with equal probability.
    pub fn with_stay(gain_values: Vec<f64>, stay: f64) -> Self {
        let g = gain_values.len();
        let transition = (0..g)
            .map(|i| {
                (0..g)
                    .map(|j| match (g, i == j) {
                        (1, _) => 1.0,
                        (_, true) => stay,
                        (_, false) => (1.0 - stay) / (g - 1) as f64,
                    })
                    .collect()
            })
            .collect();
        ChannelChain {
            gain_values,
            transition,
        }
    }

    pub fn len(&self) -> usize {
        self.gain_values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.gain_values.is_empty()
    }

    pub fn validate(&self) -> Result<()> {
        let g = self.gain_values.len();
        if g == 0 {
            return Err(Error::config("gain_values", "must not be empty"));
        }
        if self.gain_values.iter().any(|&v| !(v > 0.0 && v.is_finite())) {
            return Err(Error::config("gain_values", "every gain must be finite and > 0"));
        }
        if self.gain_values.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::config("gain_values", "must be strictly increasing"));
        }
        if self.transition.len() != g || self.transition.iter().any(|row| row.len() != g) {
            return Err(Error::config(
                "transition_matrix",
                format!("must be {g}x{g} to match gain_values"),
            ));
        }
        for (i, row) in self.transition.iter().enumerate() {
            if row.iter().any(|&p| p.is_nan() || p < 0.0) {
                return Err(Error::config(
                    "transition_matrix",
                    format!("row {i} has a negative entry"),
                ));
            }
            let sum: f64 = row.iter().sum();
            if (sum - 1.0).abs() > ROW_SUM_TOLERANCE {
                return Err(Error::config("transition_matrix", format!("row {i} sums to {sum}")));
            }
        }
        Ok(())
    }

    fn next_from_uniform(&self, from: usize, u: f64) -> usize {
        let row = &self.transition[from];
        let mut acc = 0.0;
        for (j, &p) in row.iter().enumerate() {
            acc += p;
            if u < acc {
                return j;
            }
        }
        // u landed in the rounding slack above the accumulated sum
        row.iter().rposition(|&p| p > 0.0).unwrap_or(from)
    }
}

/// Draws the next gain index from row `gain_index` of the chain.
pub fn sample_channel_transition<R: Rng + ?Sized>(gain_index: usize, chain: &ChannelChain, rng: &mut R) -> usize {
    chain.next_from_uniform(gain_index, rng.gen::<f64>())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct NetworkState {
    pub gain_index: usize,
    pub queue_len: usize,
    pub resource_bin: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum ActionChoice {
    Local,
    Offload { power_index: usize },
}

impl ActionChoice {
    /// Column of this action in a Q-table: local is 0, offload levels follow.
    pub fn index(self) -> usize {
        match self {
            ActionChoice::Local => 0,
            ActionChoice::Offload { power_index } => power_index + 1,
        }
    }

    pub fn from_index(index: usize) -> Self {
        match index {
            0 => ActionChoice::Local,
            i => ActionChoice::Offload { power_index: i - 1 },
        }
    }
}

impl std::fmt::Display for ActionChoice {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            ActionChoice::Local => f.write_str("local"),
            ActionChoice::Offload { power_index } => write!(f, "offload@{power_index}"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StepOutcome {
    pub kind: OutcomeKind,
    pub task: Option<TaskSpec>,
    /// Watts-cost; zero for failures and idle epochs.
    pub power: f64,
    /// Seconds; zero for failures and idle epochs.
    pub latency: f64,
    pub cost: f64,
    pub next_state: NetworkState,
    pub terminal: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnvConfig {
    /// Epochs per episode (K).
    pub horizon: usize,
    /// Queue capacity in tasks.
    pub t_max: usize,
    pub arrival_prob: f64,
    /// Task sizes in bits, drawn uniformly.
    pub size_set: Vec<f64>,
    pub channel: ChannelChain,
    pub device: DeviceProfile,
    pub edge: EdgeProfile,
    pub radio: RadioProfile,
    pub weights: CostWeights,
    pub resource_bins: usize,
    pub rng_seed: u64,
}

impl EnvConfig {
    /// The reference configuration: three gain states, a 9-task queue, 10 to 25
    /// kbit tasks, 500 cycles/bit at 1e-8 W/cycle, 500 MHz device and 4 GHz
    /// edge share, 100 kHz bandwidth and K = 15.
    pub fn reference() -> Self {
        let bandwidth = 1e5;
        EnvConfig {
            horizon: 15,
            t_max: 9,
            arrival_prob: 0.5,
            size_set: (10..=25).map(|k| k as f64 * 1e3).collect(),
            channel: ChannelChain::with_stay(vec![0.5e-5, 1e-5, 1.5e-5], 0.5),
            device: DeviceProfile {
                cycles_per_bit: 500.0,
                power_per_cycle: 1e-8,
                compute_capacity: 5e8,
                total_cycle_budget: 5e7,
            },
            edge: EdgeProfile {
                cycles_per_bit: 500.0,
                power_per_cycle: 1e-8,
                allocated_capacity: 4e9,
            },
            radio: RadioProfile {
                bandwidth,
                noise_power: cost::dbm_to_watts(cost::noise_dbm(-174.0, bandwidth)),
                power_levels: vec![0.025, 0.1],
                penalty: 1.0,
                outage_probs: vec![0.2, 0.1, 0.05],
            },
            weights: CostWeights { beta: 0.5 },
            resource_bins: 10,
            rng_seed: 0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.horizon == 0 {
            return Err(Error::config("horizon", "must be >= 1"));
        }
        if self.t_max == 0 {
            return Err(Error::config("t_max", "must be >= 1"));
        }
        if !(0.0..=1.0).contains(&self.arrival_prob) {
            return Err(Error::config("arrival_prob", "must lie in [0, 1]"));
        }
        if self.size_set.is_empty() {
            return Err(Error::config("size_set", "must not be empty"));
        }
        if self.size_set.iter().any(|&m| !(m > 0.0 && m.is_finite())) {
            return Err(Error::config("size_set", "every size must be finite and > 0"));
        }
        if self.resource_bins == 0 {
            return Err(Error::config("resource_bins", "must be >= 1"));
        }
        self.channel.validate()?;
        self.device.validate(self.max_task_bits())?;
        self.edge.validate()?;
        self.radio.validate(self.channel.len())?;
        self.weights.validate()
    }

    pub fn max_task_bits(&self) -> f64 {
        self.size_set.iter().copied().fold(0.0, f64::max)
    }

    pub fn gain_states(&self) -> usize {
        self.channel.len()
    }

    pub fn state_count(&self) -> usize {
        self.gain_states() * (self.t_max + 1) * (self.resource_bins + 1)
    }

    pub fn action_count(&self) -> usize {
        1 + self.radio.power_levels.len()
    }

    /// Row index of `s` in a Q-table.
    pub fn state_index(&self, s: NetworkState) -> usize {
        (s.gain_index * (self.t_max + 1) + s.queue_len) * (self.resource_bins + 1) + s.resource_bin
    }

    pub fn state_from_index(&self, index: usize) -> NetworkState {
        let bins = self.resource_bins + 1;
        let queues = self.t_max + 1;
        NetworkState {
            gain_index: index / (bins * queues),
            queue_len: (index / bins) % queues,
            resource_bin: index % bins,
        }
    }

    pub fn states(&self) -> impl Iterator<Item = NetworkState> + '_ {
        (0..self.state_count()).map(|i| self.state_from_index(i))
    }

    /// Discretizes a remaining cycle budget: `floor(remaining * bins / budget)`.
    pub fn resource_bin(&self, remaining: f64) -> usize {
        let bins = self.resource_bins as f64;
        let bin = (remaining * bins / self.device.total_cycle_budget).floor();
        (bin.max(0.0) as usize).min(self.resource_bins)
    }

    /// Cycles a local execution of the largest task needs.
    pub fn max_local_cycles(&self) -> f64 {
        self.device.cycles_per_bit * self.max_task_bits()
    }

    /// Local execution is offered only when the lowest budget the bin can
    /// stand for still covers the largest task.
    pub fn local_allowed(&self, resource_bin: usize) -> bool {
        resource_bin as f64 * self.device.total_cycle_budget >= self.max_local_cycles() * self.resource_bins as f64
    }
}

pub fn legal_actions(state: NetworkState, cfg: &EnvConfig) -> Vec<ActionChoice> {
    if state.queue_len == 0 {
        return Vec::new();
    }
    let mut out = Vec::with_capacity(cfg.action_count());
    if cfg.local_allowed(state.resource_bin) {
        out.push(ActionChoice::Local);
    }
    out.extend((0..cfg.radio.power_levels.len()).map(|power_index| ActionChoice::Offload { power_index }));
    out
}

/// A running episode. Owns its random stream; `reset` reseeds it.
#[derive(Debug, Clone)]
pub struct Environment {
    cfg: EnvConfig,
    rng: ChaCha8Rng,
    state: NetworkState,
    remaining_cycles: f64,
    epoch: usize,
    finished: bool,
}

impl Environment {
    pub fn new(cfg: EnvConfig) -> Result<Self> {
        cfg.validate()?;
        let seed = cfg.rng_seed;
        let mut env = Environment {
            rng: ChaCha8Rng::seed_from_u64(seed),
            state: NetworkState {
                gain_index: 0,
                queue_len: cfg.t_max,
                resource_bin: cfg.resource_bins,
            },
            remaining_cycles: cfg.device.total_cycle_budget,
            epoch: 1,
            finished: false,
            cfg,
        };
        env.reset(seed);
        Ok(env)
    }

    pub fn config(&self) -> &EnvConfig {
        &self.cfg
    }

    pub fn reset(&mut self, seed: u64) -> NetworkState {
        self.rng = ChaCha8Rng::seed_from_u64(seed);
        self.state = NetworkState {
            gain_index: self.rng.gen_range(0..self.cfg.gain_states()),
            queue_len: self.cfg.t_max,
            resource_bin: self.cfg.resource_bins,
        };
        self.remaining_cycles = self.cfg.device.total_cycle_budget;
        self.epoch = 1;
        self.finished = false;
        self.state
    }

    pub fn state(&self) -> NetworkState {
        self.state
    }

    /// 1-based index of the next epoch to be played.
    pub fn epoch(&self) -> usize {
        self.epoch
    }

    pub fn remaining_cycles(&self) -> f64 {
        self.remaining_cycles
    }

    pub fn is_finished(&self) -> bool {
        self.finished
    }

    pub fn legal_actions(&self) -> Vec<ActionChoice> {
        legal_actions(self.state, &self.cfg)
    }

    /// Plays one epoch. `None` (or an empty queue) leaves the queue untouched
    /// and yields an idle outcome.
    pub fn step(&mut self, action: Option<ActionChoice>) -> Result<StepOutcome> {
        if self.finished {
            return Err(Error::IllegalAction {
                action: action.map_or_else(|| "idle".into(), |a| a.to_string()),
                reason: "episode already terminated; call reset".into(),
            });
        }
        if let Some(a) = action {
            self.check_action(a)?;
        }

        let size_index = self.rng.gen_range(0..self.cfg.size_set.len());
        let outage_u: f64 = self.rng.gen();
        let arrival_u: f64 = self.rng.gen();
        let channel_u: f64 = self.rng.gen();

        let gain_index = self.state.gain_index;
        let handled = action.filter(|_| self.state.queue_len > 0);
        let (kind, task, breakdown) = match handled {
            None => (OutcomeKind::Idle, None, CostBreakdown::default()),
            Some(a) => {
                let task = TaskSpec::new(self.cfg.size_set[size_index]);
                match a {
                    ActionChoice::Local => {
                        let c = cost::local_cost(task, &self.cfg.device, self.cfg.weights);
                        self.remaining_cycles = (self.remaining_cycles - self.cfg.device.cycles_for(task)).max(0.0);
                        (OutcomeKind::LocalSuccess, Some(task), c)
                    }
                    ActionChoice::Offload { power_index } => {
                        if outage_u < self.cfg.radio.outage_probs[gain_index] {
                            (OutcomeKind::OffloadFailure, Some(task), CostBreakdown::default())
                        } else {
                            let c = cost::offload_cost(
                                task,
                                self.cfg.radio.power_levels[power_index],
                                self.cfg.channel.gain_values[gain_index],
                                &self.cfg.edge,
                                &self.cfg.radio,
                                self.cfg.weights,
                            )?;
                            (OutcomeKind::OffloadSuccess, Some(task), c)
                        }
                    }
                }
            }
        };
        let cost = cost::step_cost(kind, breakdown, &self.cfg.radio);

        let mut queue = self.state.queue_len;
        if task.is_some() {
            queue -= 1;
        }
        if arrival_u < self.cfg.arrival_prob {
            queue = (queue + 1).min(self.cfg.t_max);
        }
        let next = NetworkState {
            gain_index: self.cfg.channel.next_from_uniform(gain_index, channel_u),
            queue_len: queue,
            resource_bin: self.cfg.resource_bin(self.remaining_cycles),
        };

        let terminal = self.epoch >= self.cfg.horizon || queue == 0 || self.remaining_cycles <= 0.0;
        self.state = next;
        self.epoch += 1;
        self.finished = terminal;

        Ok(StepOutcome {
            kind,
            task,
            power: breakdown.power,
            latency: breakdown.latency,
            cost,
            next_state: next,
            terminal,
        })
    }

    fn check_action(&self, a: ActionChoice) -> Result<()> {
        match a {
            ActionChoice::Local if self.remaining_cycles < self.cfg.max_local_cycles() => Err(Error::IllegalAction {
                action: a.to_string(),
                reason: format!(
                    "{} cycles left, the largest task needs {}",
                    self.remaining_cycles,
                    self.cfg.max_local_cycles()
                ),
            }),
            ActionChoice::Offload { power_index } if power_index >= self.cfg.radio.power_levels.len() => {
                Err(Error::IllegalAction {
                    action: a.to_string(),
                    reason: format!("only {} power levels configured", self.cfg.radio.power_levels.len()),
                })
            }
            _ => Ok(()),
        }
    }
}

/// Derives a well-mixed child seed; used for per-episode environment seeds.
pub fn derive_seed(base: u64, stream: u64, index: u64) -> u64 {
    let mut rng = ChaCha8Rng::seed_from_u64(base);
    rng.set_stream(stream);
    rng.set_word_pos(u128::from(index) * 2);
    rng.next_u64()
}
