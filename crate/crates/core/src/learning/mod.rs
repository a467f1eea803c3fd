//! Tabular Q-learning, the fixed baseline policies and the exact oracle.

mod agent;
mod oracle;
mod policy;
mod qtable;

pub use agent::{select_action, train, update_q, LearningParams, TrainOutcome};
pub use oracle::{value_iteration_oracle, ExactQ, ENUMERATION_LIMIT};
pub use policy::{baseline_policy, greedy_actions, greedy_policy, run_episode, BaselineKind, Policy};
pub use qtable::{config_fingerprint, QTable};
