use serde::{Deserialize, Serialize};

use crate::cost::OutcomeKind;
use crate::env::StepOutcome;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum TerminationReason {
    Horizon,
    QueueEmpty,
    ResourceExhausted,
    TransmissionFailureStop,
}

impl TerminationReason {
    pub fn as_str(self) -> &'static str {
        match self {
            TerminationReason::Horizon => "horizon",
            TerminationReason::QueueEmpty => "queue-empty",
            TerminationReason::ResourceExhausted => "resource-exhausted",
            TerminationReason::TransmissionFailureStop => "transmission-failure-stop",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EpochRecord {
    pub cost: f64,
    pub power: f64,
    pub latency: f64,
    pub kind: OutcomeKind,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpisodeMetrics {
    pub epochs: Vec<EpochRecord>,
    pub total_cost: f64,
    pub total_power: f64,
    pub total_latency: f64,
    pub failures: usize,
    pub termination: TerminationReason,
}

impl Default for EpisodeMetrics {
    fn default() -> Self {
        EpisodeMetrics {
            epochs: Vec::new(),
            total_cost: 0.0,
            total_power: 0.0,
            total_latency: 0.0,
            failures: 0,
            termination: TerminationReason::Horizon,
        }
    }
}

impl EpisodeMetrics {
    pub fn record(&mut self, out: &StepOutcome) {
        self.epochs.push(EpochRecord {
            cost: out.cost,
            power: out.power,
            latency: out.latency,
            kind: out.kind,
        });
        self.total_cost += out.cost;
        self.total_power += out.power;
        self.total_latency += out.latency;
        if out.kind == OutcomeKind::OffloadFailure {
            self.failures += 1;
        }
    }

    pub fn epochs_executed(&self) -> usize {
        self.epochs.len()
    }

    /// Total cost divided by epochs played; zero for an empty episode.
    pub fn average_cost(&self) -> f64 {
        if self.epochs.is_empty() {
            0.0
        } else {
            self.total_cost / self.epochs.len() as f64
        }
    }

    /// Number of offload attempts (successful or not).
    pub fn offload_attempts(&self) -> usize {
        self.epochs
            .iter()
            .filter(|e| matches!(e.kind, OutcomeKind::OffloadSuccess | OutcomeKind::OffloadFailure))
            .count()
    }

    /// Running totals padded to `len` epochs; epochs past the end repeat the
    /// final value.
    pub fn cumulative(&self, len: usize, field: impl Fn(&EpochRecord) -> f64) -> Vec<f64> {
        let mut out = Vec::with_capacity(len);
        let mut acc = 0.0;
        for k in 0..len {
            if let Some(e) = self.epochs.get(k) {
                acc += field(e);
            }
            out.push(acc);
        }
        out
    }
}
