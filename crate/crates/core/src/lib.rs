//! Discrete-time simulator and tabular Q-learning agent for offloading
//! computation tasks from an IoT end device to an edge gateway.

pub mod cost;
pub mod env;
pub mod error;
pub mod harness;
pub mod learning;
pub mod metrics;

pub use cost::{CostBreakdown, CostWeights, DeviceProfile, EdgeProfile, OutcomeKind, RadioProfile, TaskSpec};
pub use env::{ActionChoice, ChannelChain, EnvConfig, Environment, NetworkState, StepOutcome};
pub use error::{Error, Result};
pub use learning::{LearningParams, Policy, QTable};
pub use metrics::{EpisodeMetrics, TerminationReason};
