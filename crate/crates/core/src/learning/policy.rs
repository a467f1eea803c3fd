use rand::Rng;
use rand_chacha::ChaCha8Rng;

use super::agent::select_action;
use super::qtable::QTable;
use crate::cost::OutcomeKind;
use crate::env::{legal_actions, ActionChoice, EnvConfig, Environment, NetworkState, StepOutcome};
use crate::error::{Error, Result};
use crate::metrics::{EpisodeMetrics, TerminationReason};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BaselineKind {
    LocalOnly,
    EdgeOnly,
}

#[derive(Debug, Clone, Copy)]
pub enum Policy<'a> {
    Greedy(&'a QTable),
    EpsilonGreedy(&'a QTable, f64),
    /// Executes locally while the budget allows; cannot act afterwards.
    LocalOnly,
    /// Offloads every task at a fixed power level. With `stop_on_failure`
    /// the episode ends at the first failed transmission.
    EdgeOnly {
        power_index: usize,
        stop_on_failure: bool,
    },
}

impl Policy<'_> {
    pub fn label(&self) -> &'static str {
        match self {
            Policy::Greedy(_) | Policy::EpsilonGreedy(..) => "proposed",
            Policy::LocalOnly => "local",
            Policy::EdgeOnly { .. } => "edge",
        }
    }

    fn stops_on_failure(&self) -> bool {
        matches!(
            self,
            Policy::EdgeOnly {
                stop_on_failure: true,
                ..
            }
        )
    }
}

pub fn greedy_policy(q: &QTable) -> Policy<'_> {
    Policy::Greedy(q)
}

pub fn baseline_policy(kind: BaselineKind, power_index: usize) -> Policy<'static> {
    match kind {
        BaselineKind::LocalOnly => Policy::LocalOnly,
        BaselineKind::EdgeOnly => Policy::EdgeOnly {
            power_index,
            stop_on_failure: false,
        },
    }
}

/// Greedy action for every state of `cfg`, `None` where nothing is legal.
pub fn greedy_actions(q: &QTable, cfg: &EnvConfig) -> Vec<Option<ActionChoice>> {
    cfg.states()
        .map(|s| q.argmin_over(cfg.state_index(s), &legal_actions(s, cfg)))
        .collect()
}

/// Something that picks actions during an episode and may learn from the
/// outcomes.
pub(crate) trait Actor {
    /// `Ok(None)` means the actor cannot act on a non-empty queue; the episode
    /// then ends as resource-exhausted.
    fn choose(
        &mut self,
        cfg: &EnvConfig,
        state: NetworkState,
        legal: &[ActionChoice],
        rng: &mut ChaCha8Rng,
    ) -> Result<Option<ActionChoice>>;

    fn observe(&mut self, _cfg: &EnvConfig, _state: NetworkState, _action: ActionChoice, _out: &StepOutcome) {}
}

impl Actor for Policy<'_> {
    fn choose(
        &mut self,
        cfg: &EnvConfig,
        state: NetworkState,
        legal: &[ActionChoice],
        rng: &mut ChaCha8Rng,
    ) -> Result<Option<ActionChoice>> {
        match *self {
            Policy::Greedy(q) => Ok(q.argmin_over(cfg.state_index(state), legal)),
            Policy::EpsilonGreedy(q, eps) => select_action(q, cfg.state_index(state), legal, eps, rng).map(Some),
            Policy::LocalOnly => Ok(legal.contains(&ActionChoice::Local).then_some(ActionChoice::Local)),
            Policy::EdgeOnly { power_index, .. } => {
                let a = ActionChoice::Offload { power_index };
                if legal.contains(&a) {
                    Ok(Some(a))
                } else {
                    Err(Error::IllegalAction {
                        action: a.to_string(),
                        reason: format!("only {} power levels configured", cfg.radio.power_levels.len()),
                    })
                }
            }
        }
    }
}

/// Plays one episode from `env.reset(seed)` under `policy`.
pub fn run_episode<R: Rng>(
    env: &mut Environment,
    seed: u64,
    policy: &Policy<'_>,
    rng: &mut R,
) -> Result<EpisodeMetrics> {
    // exploration draws come from a dedicated stream derived from the caller's rng
    let mut local = <ChaCha8Rng as rand::SeedableRng>::seed_from_u64(rng.gen());
    let mut actor = *policy;
    play(env, seed, &mut local, policy.stops_on_failure(), &mut actor)
}

pub(crate) fn play<A: Actor>(
    env: &mut Environment,
    seed: u64,
    rng: &mut ChaCha8Rng,
    stop_on_failure: bool,
    actor: &mut A,
) -> Result<EpisodeMetrics> {
    let cfg = env.config().clone();
    env.reset(seed);
    let mut metrics = EpisodeMetrics::default();
    loop {
        let state = env.state();
        let legal = legal_actions(state, &cfg);
        if legal.is_empty() {
            metrics.termination = TerminationReason::QueueEmpty;
            break;
        }
        let Some(action) = actor.choose(&cfg, state, &legal, rng)? else {
            metrics.termination = TerminationReason::ResourceExhausted;
            break;
        };
        let out = env.step(Some(action))?;
        actor.observe(&cfg, state, action, &out);
        metrics.record(&out);
        if out.terminal {
            metrics.termination = if env.remaining_cycles() <= 0.0 {
                TerminationReason::ResourceExhausted
            } else if out.next_state.queue_len == 0 {
                TerminationReason::QueueEmpty
            } else {
                TerminationReason::Horizon
            };
            break;
        }
        if stop_on_failure && out.kind == OutcomeKind::OffloadFailure {
            metrics.termination = TerminationReason::TransmissionFailureStop;
            break;
        }
    }
    Ok(metrics)
}

#[cfg(test)]
mod tests {
    use rand::SeedableRng;

    use super::*;

    #[test]
    fn zero_table_prefers_lowest_legal_index() {
        let cfg = EnvConfig::reference();
        let q = QTable::for_config(&cfg);
        for (i, a) in greedy_actions(&q, &cfg).into_iter().enumerate() {
            let s = cfg.state_from_index(i);
            match a {
                None => assert_eq!(s.queue_len, 0),
                Some(a) => assert_eq!(a, legal_actions(s, &cfg)[0]),
            }
            if s.queue_len > 0 && s.resource_bin == cfg.resource_bins {
                assert_eq!(a.map(ActionChoice::index), Some(0));
            }
        }
    }

    #[test]
    fn unique_minimum_is_selected() {
        let cfg = EnvConfig::reference();
        let n = cfg.state_count();
        // state i prefers offload@1 when i is even, local otherwise
        let values = (0..n)
            .flat_map(|i| if i % 2 == 0 { [0.5, 0.4, 0.1] } else { [0.1, 0.4, 0.5] })
            .collect();
        let q = QTable::from_values(n, 3, values).unwrap();
        for (i, a) in greedy_actions(&q, &cfg).into_iter().enumerate() {
            let s = cfg.state_from_index(i);
            if s.queue_len == 0 {
                continue;
            }
            let expected = if i % 2 == 0 || !cfg.local_allowed(s.resource_bin) {
                ActionChoice::Offload {
                    power_index: if i % 2 == 0 { 1 } else { 0 },
                }
            } else {
                ActionChoice::Local
            };
            assert_eq!(a, Some(expected), "state {s:?}");
        }
    }

    #[test]
    fn local_only_ends_when_budget_runs_out() {
        let mut cfg = EnvConfig::reference();
        cfg.arrival_prob = 1.0;
        let mut env = Environment::new(cfg.clone()).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        for seed in 0..50 {
            let m = run_episode(&mut env, seed, &Policy::LocalOnly, &mut rng).unwrap();
            assert_eq!(m.termination, TerminationReason::ResourceExhausted);
            assert!(m.epochs_executed() < cfg.horizon);
            assert!(m.epochs.iter().all(|e| e.kind == OutcomeKind::LocalSuccess));
        }
    }

    #[test]
    fn edge_only_never_spends_local_budget() {
        let cfg = EnvConfig::reference();
        let mut env = Environment::new(cfg.clone()).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let p = baseline_policy(BaselineKind::EdgeOnly, 1);
        for seed in 0..50 {
            run_episode(&mut env, seed, &p, &mut rng).unwrap();
            assert_eq!(env.remaining_cycles(), cfg.device.total_cycle_budget);
        }
    }

    #[test]
    fn edge_only_with_certain_outage_pays_penalty_every_epoch() {
        let mut cfg = EnvConfig::reference();
        cfg.radio.outage_probs = vec![1.0; 3];
        let mut env = Environment::new(cfg).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        for stop_on_failure in [false, true] {
            let p = Policy::EdgeOnly {
                power_index: 0,
                stop_on_failure,
            };
            let m = run_episode(&mut env, 4, &p, &mut rng).unwrap();
            assert!(m.epochs.iter().all(|e| e.cost == 1.0));
            if stop_on_failure {
                assert_eq!(m.epochs_executed(), 1);
                assert_eq!(m.termination, TerminationReason::TransmissionFailureStop);
            }
        }
    }

    #[test]
    fn edge_only_rejects_unknown_power_level() {
        let mut env = Environment::new(EnvConfig::reference()).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let p = baseline_policy(BaselineKind::EdgeOnly, 5);
        assert!(run_episode(&mut env, 0, &p, &mut rng).is_err());
    }
}
