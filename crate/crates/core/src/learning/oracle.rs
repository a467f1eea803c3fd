//! Exact finite-horizon backward induction over the environment's model.
//!
//! Uses the known transition structure (channel matrix, arrival probability,
//! outage probabilities, uniform task sizes) instead of sampling, so small
//! instances have a ground-truth Q* to compare learned tables against.

use crate::cost::{self, TaskSpec};
use crate::env::{legal_actions, ActionChoice, EnvConfig, NetworkState};
use crate::error::{Error, Result};

/// Largest state x action count the oracle will enumerate.
pub const ENUMERATION_LIMIT: usize = 100_000;

/// Exact Q-values; illegal state-action pairs have no value.
#[derive(Debug, Clone, PartialEq)]
pub struct ExactQ {
    states: usize,
    actions: usize,
    values: Vec<Option<f64>>,
}

impl ExactQ {
    pub fn get(&self, state: usize, action: ActionChoice) -> Option<f64> {
        self.values[state * self.actions + action.index()]
    }

    pub fn state_count(&self) -> usize {
        self.states
    }

    pub fn action_count(&self) -> usize {
        self.actions
    }

    pub fn values(&self) -> &[Option<f64>] {
        &self.values
    }
}

struct Transition {
    prob: f64,
    /// `None` for terminal successors.
    next: Option<usize>,
}

struct Entry {
    expected_cost: f64,
    transitions: Vec<Transition>,
}

/// `horizon` steps of `Q_h(s,a) = E[C + gamma * min_a' Q_{h-1}(s',a')]` from
/// `Q_0 = 0`. Successors with an empty queue or an exhausted budget bootstrap
/// from zero, matching episode termination.
pub fn value_iteration_oracle(cfg: &EnvConfig, gamma: f64, horizon: usize) -> Result<ExactQ> {
    cfg.validate()?;
    let (states, actions) = (cfg.state_count(), cfg.action_count());
    if states * actions > ENUMERATION_LIMIT {
        return Err(Error::TooLarge {
            entries: states * actions,
            limit: ENUMERATION_LIMIT,
        });
    }
    let bins_used = bins_per_task(cfg)?;
    let model = build_model(cfg, &bins_used)?;

    Ok(ExactQ {
        states,
        actions,
        values: backward_induction(&model, actions, gamma, horizon),
    })
}

fn backward_induction(model: &[Option<Entry>], actions: usize, gamma: f64, horizon: usize) -> Vec<Option<f64>> {
    let states = model.len() / actions;
    let mut current: Vec<Option<f64>> = model.iter().map(|e| e.as_ref().map(|_| 0.0)).collect();
    let mut best = vec![0.0; states];
    for _ in 0..horizon {
        for (s, b) in best.iter_mut().enumerate() {
            *b = current[s * actions..(s + 1) * actions]
                .iter()
                .flatten()
                .copied()
                .reduce(f64::min)
                .unwrap_or(0.0);
        }
        current = model
            .iter()
            .map(|e| {
                e.as_ref().map(|e| {
                    let future: f64 = e
                        .transitions
                        .iter()
                        .map(|t| t.prob * t.next.map_or(0.0, |n| best[n]))
                        .sum();
                    e.expected_cost + gamma * future
                })
            })
            .collect();
    }
    current
}

/// Whole resource bins each task size consumes when executed locally.
fn bins_per_task(cfg: &EnvConfig) -> Result<Vec<usize>> {
    let budget = cfg.device.total_cycle_budget;
    let bins = cfg.resource_bins as f64;
    cfg.size_set
        .iter()
        .map(|&m| {
            let used = cfg.device.cycles_per_bit * m * bins / budget;
            let whole = used.round();
            if (used - whole).abs() > 1e-9 * used.max(1.0) || whole < 1.0 {
                Err(Error::NotBinAligned(format!(
                    "a {m}-bit task uses {used} bins of {} cycles",
                    budget / bins
                )))
            } else {
                Ok(whole as usize)
            }
        })
        .collect()
}

fn build_model(cfg: &EnvConfig, bins_used: &[usize]) -> Result<Vec<Option<Entry>>> {
    let actions = cfg.action_count();
    let size_prob = 1.0 / cfg.size_set.len() as f64;
    let mut model = Vec::with_capacity(cfg.state_count() * actions);
    for s in cfg.states() {
        let legal = legal_actions(s, cfg);
        for a in (0..actions).map(ActionChoice::from_index) {
            if !legal.contains(&a) {
                model.push(None);
                continue;
            }
            let mut expected_cost = 0.0;
            let mut transitions = Vec::new();
            match a {
                ActionChoice::Local => {
                    for (&m, &used) in cfg.size_set.iter().zip(bins_used) {
                        expected_cost += size_prob * cost::local_cost(TaskSpec::new(m), &cfg.device, cfg.weights).cost;
                        let bin = s.resource_bin.saturating_sub(used);
                        successors(cfg, s, bin, size_prob, &mut transitions);
                    }
                }
                ActionChoice::Offload { power_index } => {
                    let outage = cfg.radio.outage_probs[s.gain_index];
                    let power = cfg.radio.power_levels[power_index];
                    let gain = cfg.channel.gain_values[s.gain_index];
                    for &m in &cfg.size_set {
                        let ok = cost::offload_cost(TaskSpec::new(m), power, gain, &cfg.edge, &cfg.radio, cfg.weights)?;
                        expected_cost += size_prob * ((1.0 - outage) * ok.cost + outage * cfg.radio.penalty);
                    }
                    successors(cfg, s, s.resource_bin, 1.0, &mut transitions);
                }
            }
            model.push(Some(Entry {
                expected_cost,
                transitions,
            }));
        }
    }
    Ok(model)
}

fn successors(cfg: &EnvConfig, s: NetworkState, bin: usize, weight: f64, out: &mut Vec<Transition>) {
    let queue = s.queue_len - 1;
    for (arrived, p_arrival) in [(false, 1.0 - cfg.arrival_prob), (true, cfg.arrival_prob)] {
        if p_arrival == 0.0 {
            continue;
        }
        let q = if arrived { (queue + 1).min(cfg.t_max) } else { queue };
        for (g, &p_gain) in cfg.channel.transition[s.gain_index].iter().enumerate() {
            if p_gain == 0.0 {
                continue;
            }
            let next = NetworkState {
                gain_index: g,
                queue_len: q,
                resource_bin: bin,
            };
            let terminal = q == 0 || bin == 0;
            out.push(Transition {
                prob: weight * p_arrival * p_gain,
                next: (!terminal).then(|| cfg.state_index(next)),
            });
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::env::ChannelChain;

    /// One gain, one task size, no arrivals and a queue of one: every episode
    /// is a single epoch, so Q* is the immediate cost.
    fn one_shot() -> EnvConfig {
        let mut cfg = EnvConfig::reference();
        cfg.t_max = 1;
        cfg.arrival_prob = 0.0;
        cfg.size_set = vec![10e3];
        cfg.channel = ChannelChain::with_stay(vec![1e-5], 1.0);
        cfg.radio.outage_probs = vec![0.1];
        cfg.radio.power_levels = vec![0.1];
        cfg.device.total_cycle_budget = 5e6 * 4.0;
        cfg.resource_bins = 4;
        cfg
    }

    #[test]
    fn one_epoch_episode_matches_immediate_cost() {
        let cfg = one_shot();
        let q = value_iteration_oracle(&cfg, 0.5, 5).unwrap();
        let s = cfg.state_index(NetworkState {
            gain_index: 0,
            queue_len: 1,
            resource_bin: 4,
        });
        let local = cost::local_cost(TaskSpec::new(10e3), &cfg.device, cfg.weights).cost;
        let off = cost::offload_cost(TaskSpec::new(10e3), 0.1, 1e-5, &cfg.edge, &cfg.radio, cfg.weights)
            .unwrap()
            .cost;
        assert!((q.get(s, ActionChoice::Local).unwrap() - local).abs() < 1e-15);
        let expected = 0.9 * off + 0.1 * 1.0;
        assert!((q.get(s, ActionChoice::Offload { power_index: 0 }).unwrap() - expected).abs() < 1e-15);
    }

    #[test]
    fn geometric_series_for_persistent_cost() {
        let model = vec![Some(Entry {
            expected_cost: 1.0,
            transitions: vec![Transition {
                prob: 1.0,
                next: Some(0),
            }],
        })];
        let q = backward_induction(&model, 1, 0.5, 10);
        assert_eq!(q[0], Some(1.998046875));
        let q = backward_induction(&model, 1, 0.5, 200);
        assert!((q[0].unwrap() - 2.0).abs() < 1e-15);
    }

    #[test]
    fn failed_offload_then_best_continuation() {
        // one local run fits the budget; offloading always fails and keeps the queue full
        let mut cfg = one_shot();
        cfg.arrival_prob = 1.0;
        cfg.radio.outage_probs = vec![1.0];
        cfg.device.total_cycle_budget = 5e6;
        cfg.resource_bins = 1;
        let q = value_iteration_oracle(&cfg, 0.5, 10).unwrap();
        let s = cfg.state_index(NetworkState {
            gain_index: 0,
            queue_len: 1,
            resource_bin: 1,
        });
        let local = q.get(s, ActionChoice::Local).unwrap();
        let off = q.get(s, ActionChoice::Offload { power_index: 0 }).unwrap();
        assert_eq!(
            local,
            cost::local_cost(TaskSpec::new(10e3), &cfg.device, cfg.weights).cost
        );
        assert!((off - (1.0 + 0.5 * local)).abs() < 1e-15);
    }

    #[test]
    fn horizon_one_is_expected_immediate_cost() {
        let mut cfg = one_shot();
        cfg.t_max = 3;
        cfg.arrival_prob = 0.5;
        cfg.channel = ChannelChain::with_stay(vec![0.5e-5, 1e-5], 0.5);
        cfg.radio.outage_probs = vec![0.3, 0.1];
        let q1 = value_iteration_oracle(&cfg, 0.5, 1).unwrap();
        for s in cfg.states() {
            let i = cfg.state_index(s);
            for a in legal_actions(s, &cfg) {
                let expected = match a {
                    ActionChoice::Local => cost::local_cost(TaskSpec::new(10e3), &cfg.device, cfg.weights).cost,
                    ActionChoice::Offload { .. } => {
                        let o = cfg.radio.outage_probs[s.gain_index];
                        let c = cost::offload_cost(
                            TaskSpec::new(10e3),
                            0.1,
                            cfg.channel.gain_values[s.gain_index],
                            &cfg.edge,
                            &cfg.radio,
                            cfg.weights,
                        )
                        .unwrap()
                        .cost;
                        (1.0 - o) * c + o
                    }
                };
                assert!((q1.get(i, a).unwrap() - expected).abs() < 1e-15);
            }
        }
    }

    #[test]
    fn monotone_in_horizon() {
        let mut cfg = one_shot();
        cfg.t_max = 3;
        cfg.arrival_prob = 0.7;
        cfg.channel = ChannelChain::with_stay(vec![0.5e-5, 1e-5], 0.6);
        cfg.radio.outage_probs = vec![0.3, 0.1];
        let mut prev = value_iteration_oracle(&cfg, 0.9, 0).unwrap();
        for h in 1..12 {
            let q = value_iteration_oracle(&cfg, 0.9, h).unwrap();
            for (a, b) in prev.values().iter().zip(q.values()) {
                if let (Some(a), Some(b)) = (a, b) {
                    assert!(b >= a, "horizon {h}");
                }
            }
            prev = q;
        }
    }

    #[test]
    fn rejects_unaligned_and_oversized_models() {
        assert!(matches!(
            value_iteration_oracle(&EnvConfig::reference(), 0.5, 3),
            Err(Error::NotBinAligned(_))
        ));
        let mut big = EnvConfig::reference();
        big.t_max = 5000;
        assert!(matches!(
            value_iteration_oracle(&big, 0.5, 3),
            Err(Error::TooLarge { .. })
        ));
    }
}
