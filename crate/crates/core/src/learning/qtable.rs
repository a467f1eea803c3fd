use std::fmt::Write as _;
use std::fs;
use std::hash::Hasher;
use std::path::Path;

use fnv::FnvHasher;

use crate::env::{ActionChoice, EnvConfig};
use crate::error::{Error, Result};

const MAGIC: &str = "# offload q-table";
const VERSION: u32 = 1;

/// Dense state x action table of expected discounted cost, row-major by state.
#[derive(Debug, Clone, PartialEq)]
pub struct QTable {
    states: usize,
    actions: usize,
    values: Vec<f64>,
}

impl QTable {
    pub fn zeros(states: usize, actions: usize) -> Self {
        QTable {
            states,
            actions,
            values: vec![0.0; states * actions],
        }
    }

    pub fn for_config(cfg: &EnvConfig) -> Self {
        Self::zeros(cfg.state_count(), cfg.action_count())
    }

    pub fn from_values(states: usize, actions: usize, values: Vec<f64>) -> Result<Self> {
        if values.len() != states * actions {
            return Err(Error::DimensionMismatch {
                expected_states: states,
                expected_actions: actions,
                states: values.len() / actions.max(1),
                actions,
            });
        }
        Ok(QTable {
            states,
            actions,
            values,
        })
    }

    pub fn state_count(&self) -> usize {
        self.states
    }

    pub fn action_count(&self) -> usize {
        self.actions
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn get(&self, state: usize, action: ActionChoice) -> f64 {
        self.values[state * self.actions + action.index()]
    }

    pub fn set(&mut self, state: usize, action: ActionChoice, value: f64) {
        self.values[state * self.actions + action.index()] = value;
    }

    pub fn row(&self, state: usize) -> &[f64] {
        &self.values[state * self.actions..(state + 1) * self.actions]
    }

    /// Smallest value among `legal`; `None` when `legal` is empty.
    pub fn min_over(&self, state: usize, legal: &[ActionChoice]) -> Option<f64> {
        legal.iter().map(|&a| self.get(state, a)).reduce(f64::min)
    }

    /// Lowest-valued action among `legal`, first one on ties.
    pub fn argmin_over(&self, state: usize, legal: &[ActionChoice]) -> Option<ActionChoice> {
        let mut best: Option<(ActionChoice, f64)> = None;
        for &a in legal {
            let v = self.get(state, a);
            if best.is_none_or(|(_, b)| v < b) {
                best = Some((a, v));
            }
        }
        best.map(|(a, _)| a)
    }

    /// Adds `c` to every entry.
    pub fn shifted(&self, c: f64) -> Self {
        QTable {
            values: self.values.iter().map(|v| v + c).collect(),
            ..self.clone()
        }
    }

    pub fn check_dims(&self, cfg: &EnvConfig) -> Result<()> {
        if self.states != cfg.state_count() || self.actions != cfg.action_count() {
            return Err(Error::DimensionMismatch {
                expected_states: cfg.state_count(),
                expected_actions: cfg.action_count(),
                states: self.states,
                actions: self.actions,
            });
        }
        Ok(())
    }

    /// Text artifact: a short header (dimensions and the config fingerprint)
    /// followed by one whitespace-separated row per state.
    pub fn to_artifact(&self, fingerprint: u64) -> String {
        let mut out = String::with_capacity(self.values.len() * 24 + 64);
        let _ = writeln!(out, "{MAGIC}");
        let _ = writeln!(out, "version {VERSION}");
        let _ = writeln!(out, "states {}", self.states);
        let _ = writeln!(out, "actions {}", self.actions);
        let _ = writeln!(out, "config {fingerprint:016x}");
        for s in 0..self.states {
            let row: Vec<String> = self.row(s).iter().map(|v| format!("{v:e}")).collect();
            let _ = writeln!(out, "{}", row.join(" "));
        }
        out
    }

    /// Parses an artifact, returning the table and its config fingerprint.
    pub fn from_artifact(text: &str, path: &Path) -> Result<(Self, u64)> {
        let bad = |reason: String| Error::Artifact {
            path: path.to_path_buf(),
            reason,
        };
        let mut lines = text.lines();
        if lines.next() != Some(MAGIC) {
            return Err(bad("missing q-table header".into()));
        }
        let mut field = |name: &str| -> Result<String> {
            let line = lines.next().ok_or_else(|| bad(format!("missing `{name}` line")))?;
            line.strip_prefix(name)
                .and_then(|rest| rest.strip_prefix(' '))
                .map(str::to_owned)
                .ok_or_else(|| bad(format!("expected `{name} ...`, got `{line}`")))
        };
        let version: u32 = field("version")?.parse().map_err(|_| bad("bad version".into()))?;
        if version != VERSION {
            return Err(bad(format!("unsupported version {version}")));
        }
        let states: usize = field("states")?.parse().map_err(|_| bad("bad state count".into()))?;
        let actions: usize = field("actions")?.parse().map_err(|_| bad("bad action count".into()))?;
        let fingerprint =
            u64::from_str_radix(&field("config")?, 16).map_err(|_| bad("bad config fingerprint".into()))?;

        let mut values = Vec::with_capacity(states * actions);
        for (i, line) in lines.enumerate() {
            let row: Vec<f64> = line
                .split_whitespace()
                .map(|t| t.parse::<f64>())
                .collect::<std::result::Result<_, _>>()
                .map_err(|e| bad(format!("row {i}: {e}")))?;
            if row.len() != actions {
                return Err(bad(format!("row {i} has {} values, expected {actions}", row.len())));
            }
            if row.iter().any(|v| !v.is_finite()) {
                return Err(bad(format!("row {i} has a non-finite value")));
            }
            values.extend(row);
        }
        if values.len() != states * actions {
            return Err(bad(format!(
                "expected {states} rows, got {}",
                values.len() / actions.max(1)
            )));
        }
        Ok((
            QTable {
                states,
                actions,
                values,
            },
            fingerprint,
        ))
    }

    pub fn save(&self, path: &Path, fingerprint: u64) -> Result<()> {
        fs::write(path, self.to_artifact(fingerprint)).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: &Path) -> Result<(Self, u64)> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_artifact(&text, path)
    }
}

/// Stable 64-bit fingerprint of an environment configuration.
pub fn config_fingerprint(cfg: &EnvConfig) -> u64 {
    let canonical = serde_json::to_vec(cfg).expect("EnvConfig serializes");
    let mut h = FnvHasher::default();
    h.write(&canonical);
    h.finish()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn argmin_breaks_ties_low() {
        let q = QTable::from_values(1, 3, vec![0.3, 0.1, 0.1]).unwrap();
        let all = [0, 1, 2].map(ActionChoice::from_index);
        assert_eq!(q.argmin_over(0, &all), Some(ActionChoice::from_index(1)));
        assert_eq!(q.argmin_over(0, &[]), None);
        assert_eq!(q.min_over(0, &all), Some(0.1));
    }

    #[test]
    fn artifact_rejects_garbage() {
        let p = Path::new("x");
        assert!(QTable::from_artifact("nope", p).is_err());
        let good = QTable::zeros(2, 2).to_artifact(7);
        assert!(QTable::from_artifact(&good.replace("states 2", "states 3"), p).is_err());
        assert!(QTable::from_artifact(&good.replacen("0e0 0e0", "0e0", 1), p).is_err());
    }

    #[test]
    fn fingerprint_tracks_config() {
        let a = EnvConfig::reference();
        let mut b = a.clone();
        assert_eq!(config_fingerprint(&a), config_fingerprint(&b));
        b.weights.beta = 0.1;
        assert_ne!(config_fingerprint(&a), config_fingerprint(&b));
    }

    proptest! {
        #[test]
        fn artifact_round_trips_exactly(vals in proptest::collection::vec(-1e6f64..1e6, 12), fp in any::<u64>()) {
            let q = QTable::from_values(4, 3, vals).unwrap();
            let (back, fp2) = QTable::from_artifact(&q.to_artifact(fp), Path::new("t")).unwrap();
            prop_assert_eq!(fp, fp2);
            prop_assert_eq!(back, q);
        }
    }
}
