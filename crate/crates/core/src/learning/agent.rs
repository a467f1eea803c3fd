use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::policy::{play, Actor};
use super::qtable::QTable;
use crate::env::{derive_seed, legal_actions, ActionChoice, EnvConfig, Environment, NetworkState, StepOutcome};
use crate::error::{Error, Result};
use crate::metrics::EpisodeMetrics;

/// Seed stream reserved for per-episode environment seeds during training.
pub(crate) const TRAIN_ENV_STREAM: u64 = 0;
const AGENT_STREAM: u64 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LearningParams {
    pub gamma: f64,
    pub alpha: f64,
    pub epsilon: f64,
    pub episodes: usize,
}

impl Default for LearningParams {
    fn default() -> Self {
        LearningParams {
            gamma: 0.5,
            alpha: 0.5,
            epsilon: 0.1,
            episodes: 2000,
        }
    }
}

impl LearningParams {
    pub fn validate(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.gamma) {
            return Err(Error::config("gamma", "must lie in [0, 1]"));
        }
        if !(self.alpha > 0.0 && self.alpha <= 1.0) {
            return Err(Error::config("alpha", "must lie in (0, 1]"));
        }
        if !(0.0..=1.0).contains(&self.epsilon) {
            return Err(Error::config("epsilon", "must lie in [0, 1]"));
        }
        Ok(())
    }
}

/// Epsilon-greedy choice: a uniform legal action with probability `epsilon`,
/// otherwise the lowest-valued legal action (lowest index on ties).
pub fn select_action<R: Rng + ?Sized>(
    q: &QTable,
    state: usize,
    legal: &[ActionChoice],
    epsilon: f64,
    rng: &mut R,
) -> Result<ActionChoice> {
    if legal.is_empty() {
        return Err(Error::NoLegalAction);
    }
    let explore = rng.gen::<f64>() < epsilon;
    if explore {
        Ok(legal[rng.gen_range(0..legal.len())])
    } else {
        Ok(q.argmin_over(state, legal).expect("legal is non-empty"))
    }
}

/// One-step update of `Q(state, action)`; returns the new value. An empty
/// `legal_next` (terminal or idle successor) bootstraps from zero.
pub fn update_q(
    q: &mut QTable,
    state: usize,
    action: ActionChoice,
    cost: f64,
    next_state: usize,
    legal_next: &[ActionChoice],
    params: &LearningParams,
) -> f64 {
    let future = q.min_over(next_state, legal_next).unwrap_or(0.0);
    let old = q.get(state, action);
    let new = (1.0 - params.alpha) * old + params.alpha * (cost + params.gamma * future);
    q.set(state, action, new);
    new
}

#[derive(Debug, Clone)]
pub struct TrainOutcome {
    pub q: QTable,
    pub episodes: Vec<EpisodeMetrics>,
    /// Update count per Q-table entry, same layout as the table.
    pub visits: Vec<u64>,
}

/// Runs `params.episodes` episodes of epsilon-greedy Q-learning from a zero
/// table. Deterministic in `seed`.
pub fn train(cfg: &EnvConfig, params: &LearningParams, seed: u64) -> Result<TrainOutcome> {
    params.validate()?;
    let mut env = Environment::new(cfg.clone())?;
    let mut q = QTable::for_config(cfg);
    let mut visits = vec![0u64; q.values().len()];
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(AGENT_STREAM);

    let mut episodes = Vec::with_capacity(params.episodes);
    let mut learner = Learner {
        q: &mut q,
        visits: &mut visits,
        params,
    };
    for ep in 0..params.episodes {
        let env_seed = derive_seed(seed, TRAIN_ENV_STREAM, ep as u64);
        episodes.push(play(&mut env, env_seed, &mut rng, false, &mut learner)?);
    }
    Ok(TrainOutcome { q, episodes, visits })
}

struct Learner<'a> {
    q: &'a mut QTable,
    visits: &'a mut [u64],
    params: &'a LearningParams,
}

impl Actor for Learner<'_> {
    fn choose(
        &mut self,
        cfg: &EnvConfig,
        state: NetworkState,
        legal: &[ActionChoice],
        rng: &mut ChaCha8Rng,
    ) -> Result<Option<ActionChoice>> {
        select_action(self.q, cfg.state_index(state), legal, self.params.epsilon, rng).map(Some)
    }

    fn observe(&mut self, cfg: &EnvConfig, state: NetworkState, action: ActionChoice, out: &StepOutcome) {
        // idle successors (empty queue) have no legal action, so they bootstrap from zero as well
        let legal_next = if out.terminal {
            Vec::new()
        } else {
            legal_actions(out.next_state, cfg)
        };
        let s = cfg.state_index(state);
        update_q(
            self.q,
            s,
            action,
            out.cost,
            cfg.state_index(out.next_state),
            &legal_next,
            self.params,
        );
        self.visits[s * cfg.action_count() + action.index()] += 1;
    }
}
